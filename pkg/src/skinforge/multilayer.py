"""Transfer-matrix transmission/reflection of the bare layered window stack.

Provides the un-patterned "glass only" reference: a characteristic-matrix
cascade over plane dielectric layers bounded by free space on both sides.
Sign conventions follow waves.py (exp(+jwt)); a slab of air of thickness d
is the pure delay exp(-j k0 d).
"""
from __future__ import annotations

from cmath import cos as ccos, sin as csin
from dataclasses import dataclass
from numpy.lib.scimath import sqrt as csqrt

import numpy as np

from .waves import Direction, Frequency


@dataclass(frozen=True)
class Layer:
    thickness_m: float
    eps_r: float
    tan_delta: float = 0.0

    def __post_init__(self):
        if self.thickness_m <= 0.0:
            raise ValueError(f"layer thickness must be > 0, got {self.thickness_m}")
        if self.eps_r < 1.0:
            raise ValueError(f"relative permittivity must be >= 1, got {self.eps_r}")
        if self.tan_delta < 0.0:
            raise ValueError("loss tangent must be >= 0")

    @property
    def refractive_index(self) -> complex:
        # exp(+jwt): lossy index has negative imaginary part
        return complex(csqrt(self.eps_r * (1.0 - 1j * self.tan_delta)))


@dataclass(frozen=True)
class LayerStack:
    """Ordered dielectric layers, semi-infinite free space on both sides."""

    layers: tuple[Layer, ...]

    @classmethod
    def from_sequence(cls, entries) -> "LayerStack":
        return cls(tuple(e if isinstance(e, Layer) else Layer(*e) for e in entries))

    @classmethod
    def insulating_glass_4_10_4(cls, eps_r: float = 5.5) -> "LayerStack":
        """Benchmark window: glass(4 mm) / air(10 mm) / glass(4 mm)."""
        return cls.from_sequence([(4e-3, eps_r), (10e-3, 1.0), (4e-3, eps_r)])

    @property
    def total_thickness_m(self) -> float:
        return sum(l.thickness_m for l in self.layers)

    def reversed(self) -> "LayerStack":
        return LayerStack(tuple(reversed(self.layers)))


def stack_coefficients(stack: LayerStack, f: Frequency, incidence: Direction,
                       pol: str) -> tuple[complex, complex]:
    """Complex field transmission and reflection (t, r) of the stack.

    ``pol`` is "TE" or "TM"; ``incidence`` must be on the outdoor side,
    theta in [0, 90).  Phase reference: the two outer boundaries of the
    stack, so an eps_r = 1 layer gives t = exp(-j k0 d cos(theta)).
    """
    if pol not in ("TE", "TM"):
        raise ValueError(f"polarization must be 'TE' or 'TM', got {pol!r}")
    if incidence.theta_deg >= 90.0:
        raise ValueError(f"grazing/backside incidence rejected "
                         f"(theta = {incidence.theta_deg} deg)")
    k0 = f.wavenumber
    s0 = np.sin(np.radians(incidence.theta_deg))
    c0 = np.cos(np.radians(incidence.theta_deg))
    y_in = y_out = c0 if pol == "TE" else 1.0 / c0

    m00, m01, m10, m11 = 1.0 + 0j, 0.0 + 0j, 0.0 + 0j, 1.0 + 0j
    for layer in stack.layers:
        n = layer.refractive_index
        ci = complex(csqrt(1.0 - (s0 / n) ** 2))
        delta = k0 * n * layer.thickness_m * ci
        y = n * ci if pol == "TE" else n / ci
        a, b = ccos(delta), csin(delta)
        l00, l01, l10, l11 = a, 1j * b / y, 1j * y * b, a
        m00, m01, m10, m11 = (m00 * l00 + m01 * l10, m00 * l01 + m01 * l11,
                              m10 * l00 + m11 * l10, m10 * l01 + m11 * l11)

    den = y_in * m00 + y_in * y_out * m01 + m10 + y_out * m11
    t = 2.0 * y_in / den
    r = (y_in * m00 + y_in * y_out * m01 - m10 - y_out * m11) / den
    return t, r


def stack_transmission(stack: LayerStack, f: Frequency, incidence: Direction,
                       pol: str) -> complex:
    """Complex transmission coefficient of the layered stack."""
    return stack_coefficients(stack, f, incidence, pol)[0]
