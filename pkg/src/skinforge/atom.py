"""Meta-atom geometry, optical transparency, and the sampled cell response.

A cell is a dual-layer ring of meshed conductor on the window, described by
five geometric parameters; its complex TE/TM transmission is not computed
here but read from a ResponseTable (a measured/full-wave-simulated lookup, or
the built-in analytic surrogate).  The synthesis layer only ever consumes the
table, so the two sources are interchangeable.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from .waves import Frequency

RESPONSE_CSV_HEADER = "d1_m,mag_te,phase_te_deg,mag_tm,phase_tm_deg"
MAGNITUDE_TOL = 1e-6


@dataclass(frozen=True)
class AtomDescriptors:
    """The five cell descriptors: ring radius/width, mesh wire/gap geometry.

    d2..d4 may be zero to express the degenerate no-ring / no-wire / solid
    limits; the ring must fit its cell, which callers check against the
    lattice pitch via atom_fill_factor.
    """

    d1_m: float      # outer ring radius
    d2_m: float      # overall ring width
    d3_m: float      # mesh wire radius
    d4_m: float      # mesh radial gap
    d5_deg: float    # mesh angular gap

    def __post_init__(self):
        vals = (self.d1_m, self.d2_m, self.d3_m, self.d4_m, self.d5_deg)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("descriptors must be finite")
        if self.d1_m <= 0.0:
            raise ValueError("outer ring radius must be > 0")
        if min(self.d2_m, self.d3_m, self.d4_m, self.d5_deg) < 0.0:
            raise ValueError("descriptors must be >= 0")
        if self.d2_m >= self.d1_m:
            raise ValueError(f"ring width must be smaller than the outer radius "
                             f"({self.d2_m} >= {self.d1_m})")


@dataclass(frozen=True)
class FeasibilitySet:
    """Per-descriptor lower/upper bounds (d1..d4 in meters, d5 in degrees)."""

    lower: tuple[float, float, float, float, float]
    upper: tuple[float, float, float, float, float]

    def __post_init__(self):
        if len(self.lower) != 5 or len(self.upper) != 5:
            raise ValueError("bounds must have exactly 5 entries")
        for lo, hi in zip(self.lower, self.upper):
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
                raise ValueError(f"invalid bound pair ({lo}, {hi})")

    @classmethod
    def benchmark(cls) -> "FeasibilitySet":
        """d1 free in [0.9, 1.6] mm, mesh/ring geometry fixed."""
        fixed = (795e-6, 30e-6, 225e-6, 20.0)
        return cls(lower=(0.9e-3, *fixed), upper=(1.6e-3, *fixed))

    @property
    def d1_bounds(self) -> tuple[float, float]:
        return self.lower[0], self.upper[0]

    def descriptors(self, d1_m: float) -> AtomDescriptors:
        """Descriptors at a given ring radius, remaining entries at midrange."""
        lo, hi = self.d1_bounds
        if not lo <= d1_m <= hi:
            raise ValueError(f"d1 = {d1_m} outside feasibility range [{lo}, {hi}]")
        mid = [(l + u) / 2.0 for l, u in zip(self.lower[1:], self.upper[1:])]
        return AtomDescriptors(d1_m, *mid)


def mesh_fill_factor(d: AtomDescriptors) -> float:
    """Conductor fraction of the wire mesh, d3 / (d3 + d4)."""
    if d.d3_m + d.d4_m == 0.0:
        raise ValueError("mesh wire radius and gap cannot both be zero")
    return d.d3_m / (d.d3_m + d.d4_m)


def atom_fill_factor(d: AtomDescriptors, pitch_m: float) -> float:
    """Conductor fraction of the whole cell: ring annulus area times mesh fill."""
    if 2.0 * d.d1_m > pitch_m:
        raise ValueError(f"ring diameter {2 * d.d1_m} exceeds cell pitch {pitch_m}")
    annulus = np.pi * d.d2_m * (2.0 * d.d1_m - d.d2_m) / pitch_m**2
    return annulus * mesh_fill_factor(d)


def atom_optical_transmittance(d: AtomDescriptors, pitch_m: float) -> float:
    """Optical transmittance of the two-layer patterned cell, (1 - F)^4."""
    return (1.0 - atom_fill_factor(d, pitch_m)) ** 4


def patch_fill_factor(patch_side_m: float, pitch_m: float) -> float:
    """Fill factor of a solid square patch of the same pitch, for comparison."""
    if patch_side_m > pitch_m:
        raise ValueError("patch does not fit the cell")
    return (patch_side_m / pitch_m) ** 2


@dataclass(frozen=True)
class TransmissionTensor:
    """Local 2x2 complex transmission tensor in the TE/TM basis."""

    t_te: complex
    t_tm: complex
    t_te_tm: complex = 0.0 + 0.0j
    t_tm_te: complex = 0.0 + 0.0j

    def __post_init__(self):
        entries = (self.t_te, self.t_tm, self.t_te_tm, self.t_tm_te)
        if not all(np.isfinite(e) for e in entries):
            raise ValueError("tensor entries must be finite")
        worst = max(abs(e) for e in entries)
        if worst > 1.0 + MAGNITUDE_TOL:
            raise ValueError(f"passive cell cannot have |T| = {worst} > 1")

    @classmethod
    def identity(cls) -> "TransmissionTensor":
        return cls(1.0 + 0.0j, 1.0 + 0.0j)

    @classmethod
    def diagonal(cls, t: complex) -> "TransmissionTensor":
        return cls(complex(t), complex(t))

    def apply(self, a_te: complex, a_tm: complex) -> tuple[complex, complex]:
        return (self.t_te * a_te + self.t_te_tm * a_tm,
                self.t_tm_te * a_te + self.t_tm * a_tm)


class ResponseTable:
    """Sampled map ring-radius -> TransmissionTensor at one frequency/pitch.

    Phases are stored unwrapped (degrees) and interpolation acts separately on
    magnitude and unwrapped phase, which keeps the phase-coverage metric and
    interpolated responses meaningful on sparse tables.  Cross-polar entries
    are fixed at zero (measured below -30 dB for the symmetric cell).
    Queries outside the sampled d1 range raise; no extrapolation.
    """

    def __init__(self, pitch_m: float, frequency: Frequency, d1_m, mag_te,
                 phase_te_deg, mag_tm, phase_tm_deg, table_id: str = "table"):
        d1 = np.asarray(d1_m, float)
        if d1.ndim != 1 or d1.size < 2:
            raise ValueError("table needs at least 2 rows")
        if not np.all(np.diff(d1) > 0.0):
            raise ValueError("table d1 values must be strictly increasing")
        if pitch_m <= 0.0:
            raise ValueError("pitch must be > 0")
        if 2.0 * d1[-1] > pitch_m:
            raise ValueError("largest ring does not fit the cell pitch")
        cols = [np.asarray(c, float) for c in
                (mag_te, phase_te_deg, mag_tm, phase_tm_deg)]
        if any(c.shape != d1.shape for c in cols):
            raise ValueError("table columns must share the d1 shape")
        if not all(np.all(np.isfinite(c)) for c in [d1] + cols):
            raise ValueError("table entries must be finite")
        if max(cols[0].max(), cols[2].max()) > 1.0 + MAGNITUDE_TOL:
            raise ValueError("table magnitudes must be <= 1")
        if min(cols[0].min(), cols[2].min()) < 0.0:
            raise ValueError("table magnitudes must be >= 0")
        self.pitch_m = float(pitch_m)
        self.frequency = frequency
        self.d1_m = d1
        self.mag_te, self.phase_te_deg, self.mag_tm, self.phase_tm_deg = cols
        self.table_id = table_id

    def __len__(self):
        return self.d1_m.size

    @property
    def d1_range(self) -> tuple[float, float]:
        return float(self.d1_m[0]), float(self.d1_m[-1])

    def _check_range(self, d1):
        lo, hi = self.d1_range
        d1 = np.asarray(d1, float)
        if np.any(d1 < lo) or np.any(d1 > hi):
            bad = d1[(d1 < lo) | (d1 > hi)].flat[0]
            raise ValueError(f"d1 = {bad} outside table range [{lo}, {hi}]; "
                             "no extrapolation")
        return d1

    def entries_at(self, d1):
        """Interpolated (t_te, t_tm) complex arrays for an array of radii."""
        d1 = self._check_range(d1)
        out = []
        for mag, ph in ((self.mag_te, self.phase_te_deg),
                        (self.mag_tm, self.phase_tm_deg)):
            m = np.interp(d1, self.d1_m, mag)
            p = np.radians(np.interp(d1, self.d1_m, ph))
            out.append(m * np.exp(1j * p))
        return out[0], out[1]

    def tensor_at(self, d1_m: float) -> TransmissionTensor:
        t_te, t_tm = self.entries_at(d1_m)
        return TransmissionTensor(complex(t_te), complex(t_tm))

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv_text())

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write(RESPONSE_CSV_HEADER + "\n")
        for row in zip(self.d1_m, self.mag_te, self.phase_te_deg,
                       self.mag_tm, self.phase_tm_deg):
            buf.write(",".join(repr(float(x)) for x in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, path, pitch_m: float, frequency: Frequency) -> "ResponseTable":
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        if not lines or lines[0].strip() != RESPONSE_CSV_HEADER:
            raise ValueError(f"{path}: line 1: expected header "
                             f"'{RESPONSE_CSV_HEADER}'")
        rows = []
        for ln, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise ValueError(f"{path}: line {ln}: expected 5 fields, "
                                 f"got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as err:
                raise ValueError(f"{path}: line {ln}: {err}") from None
        if len(rows) < 2:
            raise ValueError(f"{path}: needs at least 2 data rows")
        arr = np.array(rows)
        return cls(pitch_m, frequency, arr[:, 0], arr[:, 1], arr[:, 2],
                   arr[:, 3], arr[:, 4], table_id=str(path))


def lookup_tensor(table: ResponseTable, d1_m: float) -> TransmissionTensor:
    """Piecewise-linear (magnitude, unwrapped-phase) interpolation of the table."""
    return table.tensor_at(d1_m)


@dataclass(frozen=True)
class CostWeights:
    """Weights of the cell figure of merit; all default to 1."""

    pc_te: float = 1.0
    pc_tm: float = 1.0
    mag_te: float = 1.0
    mag_tm: float = 1.0
    ot: float = 1.0

    def __post_init__(self):
        vals = (self.pc_te, self.pc_tm, self.mag_te, self.mag_tm, self.ot)
        if any(v < 0 for v in vals):
            raise ValueError("weights must be >= 0")
        if all(v == 0 for v in vals):
            raise ValueError("at least one weight must be positive")


@dataclass(frozen=True)
class AtomCostMetrics:
    """Figure of merit of a cell family over its feasibility range.

    phase_coverage_*: spread (max - min) of the unwrapped transmission phase
    in degrees; min_magnitude_*: worst-case |T|; optical_floor: worst-case
    optical transmittance over the feasible descriptors.  ``cost`` is the
    inverse of the weighted sum, so better cells score lower.
    """

    phase_coverage_te_deg: float
    phase_coverage_tm_deg: float
    min_magnitude_te: float
    min_magnitude_tm: float
    optical_floor: float
    cost: float

    @property
    def min_magnitude_te_db(self) -> float:
        return 20.0 * np.log10(max(self.min_magnitude_te, 1e-300))

    @property
    def min_magnitude_tm_db(self) -> float:
        return 20.0 * np.log10(max(self.min_magnitude_tm, 1e-300))


def feasibility_optical_floor(feasibility: FeasibilitySet, pitch_m: float) -> float:
    """Minimum optical transmittance over the feasibility set.

    The fill factor grows with d1, d2, d3 and shrinks with d4 (d5 does not
    enter), so the minimum transmittance sits at that corner of the box.
    """
    lo, up = feasibility.lower, feasibility.upper
    # guard the d2 < d1 descriptor invariant at the worst corner
    d1, d2 = up[0], min(up[1], np.nextafter(up[0], 0.0))
    worst = AtomDescriptors(d1, d2, up[2], lo[3], lo[4])
    return atom_optical_transmittance(worst, pitch_m)


def atom_cost(table: ResponseTable, feasibility: FeasibilitySet,
              weights: CostWeights = CostWeights()) -> AtomCostMetrics:
    """Score a cell family from its response table and feasibility box."""
    pc_te = float(np.ptp(table.phase_te_deg))
    pc_tm = float(np.ptp(table.phase_tm_deg))
    mag_te = float(table.mag_te.min())
    mag_tm = float(table.mag_tm.min())
    floor = feasibility_optical_floor(feasibility, table.pitch_m)
    total = (weights.pc_te * pc_te + weights.pc_tm * pc_tm
             + weights.mag_te * mag_te + weights.mag_tm * mag_tm
             + weights.ot * floor)
    if total <= 0.0:
        raise ValueError("degenerate table: weighted merit sum is not positive")
    return AtomCostMetrics(pc_te, pc_tm, mag_te, mag_tm, floor, 1.0 / total)


# Calibrated surrogate endpoints: the band-edge cells transmit almost freely
# (the ring anti-reflection-matches the bare panel) while the resonance dip
# bottoms out at the worst-case magnitude.
SURROGATE_EDGE_MAGNITUDE = 0.98
SURROGATE_DIP_MAGNITUDE_DB = -7.7
SURROGATE_PHASE_SPAN_DEG = 220.0
_SURROGATE_PHASE_WIDTH = 0.12
_SURROGATE_MAG_WIDTH = 0.18


def default_surrogate_table(feasibility: FeasibilitySet, n_rows: int = 41,
                            pitch_m: float = 3.7e-3,
                            frequency: Frequency = Frequency(26e9)) -> ResponseTable:
    """Analytic single-resonance response standing in for a full-wave table.

    Both transmission entries share one smooth resonance over the feasible
    ring radii: the unwrapped phase falls monotonically through exactly 220
    degrees between the range endpoints (steepest at the resonance), and the
    magnitude dips to exactly -7.7 dB at the sampled point nearest the range
    center, recovering to 0.98 at both edges.  TM mirrors TE (cell symmetry);
    cross-polar terms are zero.
    """
    if n_rows < 8:
        raise ValueError(f"surrogate table needs n_rows >= 8, got {n_rows}")
    lo, hi = feasibility.d1_bounds
    if not hi > lo:
        raise ValueError("feasibility range for d1 is degenerate")
    x = np.linspace(0.0, 1.0, n_rows)
    xc = x[np.argmin(np.abs(x - 0.5))]  # dip lands exactly on a sample

    ramp = np.arctan((x - xc) / _SURROGATE_PHASE_WIDTH)
    phase = 110.0 - SURROGATE_PHASE_SPAN_DEG * (ramp - ramp[0]) / (ramp[-1] - ramp[0])

    dip = 10.0 ** (SURROGATE_DIP_MAGNITUDE_DB / 20.0)
    bump = _SURROGATE_MAG_WIDTH**2 / ((x - xc) ** 2 + _SURROGATE_MAG_WIDTH**2)
    # per-side baseline removal pins the magnitude at both edges exactly
    left = (bump - bump[0]) / (1.0 - bump[0])
    right = (bump - bump[-1]) / (1.0 - bump[-1])
    depth = np.where(x <= xc, left, right)
    mag = SURROGATE_EDGE_MAGNITUDE - (SURROGATE_EDGE_MAGNITUDE - dip) * depth

    d1 = lo + x * (hi - lo)
    return ResponseTable(pitch_m, frequency, d1, mag, phase, mag.copy(),
                         phase.copy(), table_id="surrogate")
