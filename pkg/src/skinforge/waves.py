"""Shared wave/geometry primitives: frequencies, directions, incident plane waves.

Conventions (used consistently across the package):

* time factor exp(+j w t); a plane wave running along k_hat is exp(-j k . r);
* theta is measured from +z (the outdoor-side normal of the panel at z = 0),
  phi from +x.  The transmitted half-space is theta in (90, 180]; straight
  through the panel is theta = 180;
* direction cosines u = sin(theta) cos(phi), v = sin(theta) sin(phi);
* at the poles (theta = 0 or 180) phi is canonicalized to 0, making the
  phi-polarized field point along +y in the normal-incidence limit.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

C0 = 299_792_458.0           # speed of light (m/s)
ETA0 = 376.730313668         # free-space impedance (ohm)

_POLE_TOL = 1e-12


def _deg(x):
    return float(np.degrees(x))


def _rad(x):
    return np.radians(x)


@dataclass(frozen=True)
class Frequency:
    """A positive operating frequency with derived free-space quantities."""

    hertz: float

    def __post_init__(self):
        if not np.isfinite(self.hertz) or self.hertz <= 0.0:
            raise ValueError(f"frequency must be finite and > 0, got {self.hertz}")

    @classmethod
    def from_ghz(cls, ghz: float) -> "Frequency":
        return cls(hertz=float(ghz) * 1e9)

    @property
    def wavelength_m(self) -> float:
        return C0 / self.hertz

    @property
    def wavenumber(self) -> float:
        """Free-space k0 = 2 pi / lambda (rad/m)."""
        return 2.0 * np.pi * self.hertz / C0


def wavelength(f: Frequency) -> float:
    """Free-space wavelength c/f in meters."""
    return f.wavelength_m


def unit_vectors(theta_deg, phi_deg):
    """r_hat for arrays of angles; accepts theta beyond [0, 180] for cut frames.

    The trig expressions extend smoothly past theta = 180: (theta, phi) and
    (360 - theta, phi + 180) describe the same point, which is what a
    fixed-phi pattern cut sweeping 90..270 deg relies on.
    """
    th, ph = _rad(np.asarray(theta_deg, float)), _rad(np.asarray(phi_deg, float))
    st, ct = np.sin(th), np.cos(th)
    return np.stack([st * np.cos(ph), st * np.sin(ph), ct], axis=-1)


def theta_hats(theta_deg, phi_deg):
    th, ph = _rad(np.asarray(theta_deg, float)), _rad(np.asarray(phi_deg, float))
    ct = np.cos(th)
    return np.stack([ct * np.cos(ph), ct * np.sin(ph), -np.sin(th)], axis=-1)


def phi_hats(theta_deg, phi_deg):
    ph = _rad(np.asarray(phi_deg, float))
    z = np.zeros_like(ph)
    return np.stack([-np.sin(ph), np.cos(ph), z], axis=-1)


def direction_cosines(theta_deg, phi_deg):
    """(u, v) = (sin t cos p, sin t sin p) for scalar or array angles."""
    th, ph = _rad(np.asarray(theta_deg, float)), _rad(np.asarray(phi_deg, float))
    st = np.sin(th)
    return st * np.cos(ph), st * np.sin(ph)


@dataclass(frozen=True)
class Direction:
    """A direction on the unit sphere, theta in [0, 180], phi in [0, 360)."""

    theta_deg: float
    phi_deg: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.theta_deg) or not np.isfinite(self.phi_deg):
            raise ValueError("direction angles must be finite")
        if not 0.0 <= self.theta_deg <= 180.0:
            raise ValueError(f"theta must lie in [0, 180] deg, got {self.theta_deg}")
        phi = float(self.phi_deg) % 360.0
        if self.theta_deg < _POLE_TOL or 180.0 - self.theta_deg < _POLE_TOL:
            phi = 0.0  # phi is degenerate at the poles
        object.__setattr__(self, "theta_deg", float(self.theta_deg))
        object.__setattr__(self, "phi_deg", phi)

    @classmethod
    def from_unit_vector(cls, r) -> "Direction":
        r = np.asarray(r, float)
        n = np.linalg.norm(r)
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"not a unit vector (norm {n})")
        theta = _deg(np.arccos(np.clip(r[2] / n, -1.0, 1.0)))
        phi = _deg(np.arctan2(r[1], r[0])) % 360.0
        return cls(theta, phi)

    @property
    def unit_vector(self) -> np.ndarray:
        return unit_vectors(self.theta_deg, self.phi_deg)

    @property
    def theta_hat(self) -> np.ndarray:
        return theta_hats(self.theta_deg, self.phi_deg)

    @property
    def phi_hat(self) -> np.ndarray:
        return phi_hats(self.theta_deg, self.phi_deg)

    @property
    def u(self) -> float:
        return float(direction_cosines(self.theta_deg, self.phi_deg)[0])

    @property
    def v(self) -> float:
        return float(direction_cosines(self.theta_deg, self.phi_deg)[1])

    @property
    def is_transmitted_side(self) -> bool:
        return self.theta_deg > 90.0


def direction_to_unit_vector(d: Direction) -> np.ndarray:
    """(sin t cos p, sin t sin p, cos t) of a validated direction."""
    return d.unit_vector


POLARIZATIONS = ("phi", "theta")


@dataclass(frozen=True)
class PlaneWave:
    """Incident plane wave, described by the direction it arrives *from*.

    ``direction`` is the source direction (outdoor side, theta < 90), so the
    propagation vector is k = -k0 * r_hat(direction).  The electric field is
    E = magnitude * p_hat * exp(-j k . r) with p_hat the phi_hat / theta_hat
    unit vector of the source direction; both are orthogonal to k.

    In the TE/TM basis tied to the incidence plane, phi polarization is pure
    TE and theta polarization is pure TM (the basis vectors coincide with
    phi_hat and theta_hat of the source direction, including the canonical
    normal-incidence limit: TE along +y, TM along +x).
    """

    direction: Direction
    polarization: str
    frequency: Frequency
    magnitude: float = 1.0

    def __post_init__(self):
        if self.polarization not in POLARIZATIONS:
            raise ValueError(f"polarization must be one of {POLARIZATIONS}")
        if not np.isfinite(self.magnitude) or self.magnitude < 0.0:
            raise ValueError("magnitude must be finite and >= 0")
        if self.direction.theta_deg >= 90.0:
            raise ValueError("incident wave must arrive from the outdoor side "
                             f"(theta < 90 deg), got {self.direction.theta_deg}")

    @property
    def k_hat(self) -> np.ndarray:
        """Unit propagation vector (points into the transmitted half-space)."""
        return -self.direction.unit_vector

    @property
    def wavevector(self) -> np.ndarray:
        return self.frequency.wavenumber * self.k_hat

    @property
    def e_te_hat(self) -> np.ndarray:
        return self.direction.phi_hat

    @property
    def e_tm_hat(self) -> np.ndarray:
        return self.direction.theta_hat

    @property
    def polarization_vector(self) -> np.ndarray:
        return self.e_te_hat if self.polarization == "phi" else self.e_tm_hat

    @property
    def te_tm_amplitudes(self) -> tuple[complex, complex]:
        """(a_TE, a_TM) of the incident field at the phase reference."""
        if self.polarization == "phi":
            return complex(self.magnitude), 0.0 + 0.0j
        return 0.0 + 0.0j, complex(self.magnitude)

    def phase_at(self, x, y):
        """exp(-j k . r) sampled on the aperture plane z = 0.

        Zero phase everywhere at normal incidence; a linear tangential phase
        exp(+j k0 (u_src x + v_src y)) otherwise.
        """
        k0 = self.frequency.wavenumber
        u, v = self.direction.u, self.direction.v
        return np.exp(1j * k0 * (u * np.asarray(x) + v * np.asarray(y)))


@dataclass(frozen=True)
class ComplexFieldSample:
    """Far-zone field components at one direction."""

    e_theta: complex
    e_phi: complex
    at: Direction = field(default_factory=lambda: Direction(180.0, 0.0))

    def __post_init__(self):
        if not (np.isfinite(self.e_theta) and np.isfinite(self.e_phi)):
            raise ValueError("field components must be finite")

    @property
    def power(self) -> float:
        return abs(self.e_theta) ** 2 + abs(self.e_phi) ** 2

    @property
    def power_db(self) -> float:
        return 10.0 * np.log10(max(self.power, 1e-300))
