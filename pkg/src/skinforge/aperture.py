"""Equivalent surface currents of a patterned panel and its transmitted far field.

The panel occupies z = 0, cells on a square lattice of pitch Delta centered on
the origin.  Each cell transmits the incident plane wave through its local
tensor; the transmitted field everywhere behind the panel follows from the
equivalent electric/magnetic current pair of each cell,

    J_e = z_hat x H+,    J_m = E+ x z_hat,

summed with the closed-form radiation integral of a uniform square pixel.
The currents only model the transmitted half-space; directions on the
incident side are evaluated on request but are physically meaningless
back-lobes of the equivalent model and trigger a warning.
"""
from __future__ import annotations

import io
import warnings
from dataclasses import dataclass

import numpy as np

from .atom import ResponseTable, TransmissionTensor
from .errors import NumericalError
from .waves import (ComplexFieldSample, Direction, ETA0, Frequency, PlaneWave,
                    direction_cosines, phi_hats, theta_hats, unit_vectors)

PATTERN_CSV_HEADER = ("theta_deg,phi_deg,u,v,e_phi_re,e_phi_im,"
                      "e_theta_re,e_theta_im,power_db")
Z_HAT = np.array([0.0, 0.0, 1.0])
RADIAL_LEAK_TOL = 1e-9


@dataclass(frozen=True)
class EmsLayout:
    """P x Q grid of ring-radius assignments on a fixed lattice."""

    p_count: int
    q_count: int
    pitch_m: float
    d1_m: np.ndarray          # shape (P, Q)
    table_id: str = "table"

    def __post_init__(self):
        if self.p_count < 1 or self.q_count < 1:
            raise ValueError("layout needs at least one cell per axis")
        if self.pitch_m <= 0.0:
            raise ValueError("pitch must be > 0")
        d1 = np.asarray(self.d1_m, float)
        if d1.shape != (self.p_count, self.q_count):
            raise ValueError(f"assignment grid shape {d1.shape} does not match "
                             f"({self.p_count}, {self.q_count})")
        if not np.all(np.isfinite(d1)):
            raise ValueError("assignments must be finite")
        object.__setattr__(self, "d1_m", d1)

    @classmethod
    def uniform(cls, p: int, q: int, pitch_m: float, d1_m: float,
                table_id: str = "table") -> "EmsLayout":
        return cls(p, q, pitch_m, np.full((p, q), float(d1_m)), table_id)

    @property
    def cell_x(self) -> np.ndarray:
        return (np.arange(self.p_count) - (self.p_count - 1) / 2.0) * self.pitch_m

    @property
    def cell_y(self) -> np.ndarray:
        return (np.arange(self.q_count) - (self.q_count - 1) / 2.0) * self.pitch_m

    @property
    def aperture_m(self) -> tuple[float, float]:
        return self.p_count * self.pitch_m, self.q_count * self.pitch_m


@dataclass(frozen=True)
class CurrentSheet:
    """Per-cell equivalent current coefficients, tangential to the panel."""

    electric: np.ndarray      # (P, Q, 3), A/m
    magnetic: np.ndarray      # (P, Q, 3), V/m

    def __post_init__(self):
        e = np.asarray(self.electric, complex)
        m = np.asarray(self.magnetic, complex)
        if e.shape != m.shape or e.ndim != 3 or e.shape[2] != 3:
            raise ValueError(f"current grids must share shape (P, Q, 3), got "
                             f"{e.shape} and {m.shape}")
        scale = max(np.abs(e).max(), np.abs(m).max() / ETA0, 1e-300)
        if max(np.abs(e[..., 2]).max(), np.abs(m[..., 2]).max() / ETA0) > 1e-12 * scale:
            raise ValueError("equivalent currents must be tangential (z = 0)")
        object.__setattr__(self, "electric", e)
        object.__setattr__(self, "magnetic", m)

    @property
    def shape(self) -> tuple[int, int]:
        return self.electric.shape[:2]

    def scaled(self, factor: complex) -> "CurrentSheet":
        return CurrentSheet(self.electric * factor, self.magnetic * factor)

    def stacked(self) -> np.ndarray:
        """Flat view with the electric part scaled by eta0 (commensurate units)."""
        return np.concatenate([ETA0 * self.electric.reshape(-1),
                               self.magnetic.reshape(-1)])


def local_transmitted_fields(tensor: TransmissionTensor, incident: PlaneWave,
                             at_xy=(0.0, 0.0)):
    """Locally transmitted (E+, H+) behind one cell at barycenter ``at_xy``."""
    a_te, a_tm = incident.te_tm_amplitudes
    phase = incident.phase_at(at_xy[0], at_xy[1])
    b_te, b_tm = tensor.apply(a_te * phase, a_tm * phase)
    e_plus = b_te * incident.e_te_hat + b_tm * incident.e_tm_hat
    h_plus = np.cross(incident.k_hat, e_plus) / ETA0
    return e_plus, h_plus


def currents_from_fields(e_plus, h_plus):
    """Love-equivalence pair (J_e, J_m) of locally transmitted fields."""
    j_e = np.cross(Z_HAT, h_plus)
    j_m = np.cross(e_plus, Z_HAT)
    return j_e, j_m


def cell_currents_for_entries(t_te, t_tm, incident: PlaneWave):
    """(J_e, J_m) per entry of diagonal-tensor arrays, unit incident phase.

    Shapes: t_te, t_tm of shape S give currents of shape S + (3,).  The
    per-cell incident phase is applied by the callers.
    """
    t_te = np.asarray(t_te, complex)
    a_te, a_tm = incident.te_tm_amplitudes
    e_plus = (np.multiply.outer(t_te * a_te, incident.e_te_hat)
              + np.multiply.outer(np.asarray(t_tm, complex) * a_tm,
                                  incident.e_tm_hat))
    h_plus = np.cross(incident.k_hat, e_plus) / ETA0
    return np.cross(Z_HAT, h_plus), np.cross(e_plus, Z_HAT)


def equivalent_currents(layout: EmsLayout, table: ResponseTable,
                        incident: PlaneWave) -> CurrentSheet:
    """Per-cell equivalent currents of a layout under the incident wave."""
    if abs(layout.pitch_m - table.pitch_m) > 1e-12:
        raise ValueError(f"layout pitch {layout.pitch_m} does not match table "
                         f"pitch {table.pitch_m}")
    lo, hi = table.d1_range
    bad = (layout.d1_m < lo) | (layout.d1_m > hi)
    if np.any(bad):
        p, q = np.argwhere(bad)[0]
        raise ValueError(f"cell (p={p}, q={q}) has d1 = {layout.d1_m[p, q]} "
                         f"outside table range [{lo}, {hi}]")
    t_te, t_tm = table.entries_at(layout.d1_m)
    j_e, j_m = cell_currents_for_entries(t_te, t_tm, incident)
    phase = incident.phase_at(layout.cell_x[:, None], layout.cell_y[None, :])
    return CurrentSheet(j_e * phase[..., None], j_m * phase[..., None])


def uniform_currents(tensor: TransmissionTensor, p: int, q: int, pitch_m: float,
                     incident: PlaneWave) -> CurrentSheet:
    """Currents of an unpatterned aperture carrying one tensor everywhere.

    With the identity tensor this is the hollow-window reference; with the
    bare-stack transmission on the diagonal it is the glass-only reference.
    """
    layout = EmsLayout.uniform(p, q, pitch_m, 0.0, table_id="uniform")
    a_te, a_tm = incident.te_tm_amplitudes
    b_te, b_tm = tensor.apply(a_te, a_tm)
    e_plus = b_te * incident.e_te_hat + b_tm * incident.e_tm_hat
    h_plus = np.cross(incident.k_hat, e_plus) / ETA0
    j_e, j_m = currents_from_fields(e_plus, h_plus)
    phase = incident.phase_at(layout.cell_x[:, None], layout.cell_y[None, :])
    ones = phase[..., None]
    return CurrentSheet(j_e * ones, j_m * ones)


def _sinc(x):
    return np.sinc(np.asarray(x) / np.pi)


def pixel_integral(direction: Direction, pitch_m: float, barycenter,
                   frequency: Frequency) -> complex:
    """Closed-form radiation integral of one square pixel.

    Delta^2 sinc(k0 u Delta / 2) sinc(k0 v Delta / 2)
    exp(j k0 (u x_c + v y_c)), with sinc(x) = sin(x)/x.
    """
    k0 = frequency.wavenumber
    u, v = direction.u, direction.v
    x_c, y_c = float(barycenter[0]), float(barycenter[1])
    return (pitch_m**2 * _sinc(k0 * u * pitch_m / 2.0)
            * _sinc(k0 * v * pitch_m / 2.0)
            * np.exp(1j * k0 * (u * x_c + v * y_c)))


def fields_at_angles(layout: EmsLayout, currents: CurrentSheet,
                     frequency: Frequency, theta_deg, phi_deg, radius_m: float):
    """Far-zone (E_theta, E_phi) at many directions; the vectorized core.

    ``theta_deg`` may run past 180 for fixed-phi cut frames (see waves.py);
    the returned components are then expressed in the cut-frame basis vectors,
    whose signs flip relative to the canonical basis past the pole while all
    magnitudes are unchanged.
    """
    if currents.shape != (layout.p_count, layout.q_count):
        raise ValueError("current sheet shape does not match the layout")
    if radius_m <= 0.0:
        raise ValueError("field radius must be > 0")
    k0 = frequency.wavenumber
    lx, ly = layout.aperture_m
    r_ff = 2.0 * max(lx, ly) ** 2 / frequency.wavelength_m
    if radius_m < r_ff:
        warnings.warn(f"radius {radius_m} m is inside the far-field distance "
                      f"{r_ff:.1f} m of this aperture", stacklevel=2)
    theta_deg = np.atleast_1d(np.asarray(theta_deg, float))
    phi_deg = np.broadcast_to(np.asarray(phi_deg, float), theta_deg.shape)
    canon = np.where(theta_deg > 180.0, 360.0 - theta_deg, theta_deg)
    if np.any(canon < 90.0):
        warnings.warn("incident-side directions evaluated: the equivalent "
                      "currents only model the transmitted half-space",
                      stacklevel=2)

    u, v = direction_cosines(theta_deg, phi_deg)
    a = np.exp(1j * k0 * np.outer(u, layout.cell_x))      # (N, P)
    b = np.exp(1j * k0 * np.outer(v, layout.cell_y))      # (N, Q)
    pix = (layout.pitch_m**2 * _sinc(k0 * u * layout.pitch_m / 2.0)
           * _sinc(k0 * v * layout.pitch_m / 2.0))        # (N,)

    def current_sum(grid):   # sum_pq J_pq * pixel integral, per component
        comps = [((a @ grid[..., c]) * b).sum(axis=1) for c in range(3)]
        return np.stack(comps, axis=-1) * pix[:, None]

    s_e = current_sum(currents.electric)
    s_m = current_sum(currents.magnetic)

    r_hat = unit_vectors(theta_deg, phi_deg)
    vec = ETA0 * np.cross(r_hat, s_e) + s_m
    pref = 1j * k0 / (4.0 * np.pi) * np.exp(-1j * k0 * radius_m) / radius_m
    e_vec = pref * np.cross(r_hat, vec)

    e_theta = np.einsum("ni,ni->n", e_vec, theta_hats(theta_deg, phi_deg))
    e_phi = np.einsum("ni,ni->n", e_vec, phi_hats(theta_deg, phi_deg))
    radial = np.abs(np.einsum("ni,ni->n", e_vec, r_hat))
    total = np.sqrt(np.abs(e_theta) ** 2 + np.abs(e_phi) ** 2)
    if np.any(radial > RADIAL_LEAK_TOL * total + 1e-30):
        raise NumericalError("far field has a non-transverse component")
    return e_theta, e_phi


def transmitted_field(layout: EmsLayout, currents: CurrentSheet, at: Direction,
                      radius_m: float, frequency: Frequency) -> ComplexFieldSample:
    """Transmitted far field at one direction and radius."""
    e_theta, e_phi = fields_at_angles(layout, currents, frequency,
                                      at.theta_deg, at.phi_deg, radius_m)
    return ComplexFieldSample(complex(e_theta[0]), complex(e_phi[0]), at)


@dataclass(frozen=True)
class PatternTable:
    """Sampled pattern: either a fixed-phi theta cut or a u-v hemisphere grid.

    For theta cuts ``theta_deg`` is the cut coordinate and may run past 180
    (the paper-style extended axis); u and v always hold the true direction
    cosines of each sample.
    """

    kind: str                 # "theta" or "uv"
    theta_deg: np.ndarray
    phi_deg: np.ndarray
    u: np.ndarray
    v: np.ndarray
    e_theta: np.ndarray
    e_phi: np.ndarray
    radius_m: float

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.e_phi) ** 2 + np.abs(self.e_theta) ** 2

    @property
    def power_phi(self) -> np.ndarray:
        """|E_phi|^2, the quantity the steering experiments score."""
        return np.abs(self.e_phi) ** 2

    @property
    def power_db(self) -> np.ndarray:
        return 10.0 * np.log10(np.maximum(self.power, 1e-300))

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv_text())

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write(PATTERN_CSV_HEADER + "\n")
        pdb = self.power_db
        for i in range(self.theta_deg.size):
            row = (self.theta_deg[i], self.phi_deg[i], self.u[i], self.v[i],
                   self.e_phi[i].real, self.e_phi[i].imag,
                   self.e_theta[i].real, self.e_theta[i].imag, pdb[i])
            buf.write(",".join(repr(float(x)) for x in row) + "\n")
        return buf.getvalue()


def pattern_cut(layout: EmsLayout, currents: CurrentSheet, frequency: Frequency,
                cut: str = "theta", samples: int = 721, phi_deg: float = 0.0,
                theta_span=(90.0, 270.0), radius_m: float = 100.0) -> PatternTable:
    """Dense pattern evaluation on a theta cut or a u-v grid.

    theta cut: ``samples`` points over ``theta_span`` at fixed ``phi_deg``.
    uv grid: ``samples`` points per axis over [-1, 1]^2, keeping u^2 + v^2 <= 1
    (transmitted hemisphere).
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    if cut == "theta":
        thetas = np.linspace(theta_span[0], theta_span[1], samples)
        phis = np.full_like(thetas, float(phi_deg) % 360.0)
        e_theta, e_phi = fields_at_angles(layout, currents, frequency, thetas,
                                          phis, radius_m)
        u, v = direction_cosines(thetas, phis)
        return PatternTable("theta", thetas, phis, u, v, e_theta, e_phi, radius_m)
    if cut == "uv":
        axis = np.linspace(-1.0, 1.0, samples)
        uu, vv = np.meshgrid(axis, axis, indexing="ij")
        mask = uu**2 + vv**2 <= 1.0
        u, v = uu[mask], vv[mask]
        w = np.sqrt(np.clip(1.0 - u**2 - v**2, 0.0, 1.0))
        thetas = np.degrees(np.arccos(-w))        # transmitted side: cos <= 0
        phis = np.degrees(np.arctan2(v, u)) % 360.0
        e_theta, e_phi = fields_at_angles(layout, currents, frequency, thetas,
                                          phis, radius_m)
        return PatternTable("uv", thetas, phis, u, v, e_theta, e_phi, radius_m)
    raise ValueError(f"unknown cut kind {cut!r}")
