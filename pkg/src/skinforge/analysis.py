"""Pattern metrics and the benchmark experiment drivers (sweeps, baselines).

Scoring follows the steering experiments: the figure of merit of a cut is the
peak of |E_phi|^2 at the shared reference radius, scan loss is that peak
relative to the broadside reference, and sidelobes are local maxima separated
from the main beam by at least one beamwidth.
"""
from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .aperture import (CurrentSheet, EmsLayout, PatternTable,
                       equivalent_currents, pattern_cut, uniform_currents)
from .atom import FeasibilitySet, ResponseTable, TransmissionTensor
from .multilayer import LayerStack, stack_transmission
from .synthesis import SynthesisSpec, synthesize_per_cell
from .waves import Direction, Frequency, PlaneWave

APERTURE_SWEEP_HEADER = "p,xi_db,xi_glass_db,xi_empty_db"
ANGLE_SWEEP_HEADER = ("theta_rx_deg,xi_db,scan_loss_db,peak_theta_deg,"
                      "max_sidelobe_db,max_sidelobe_theta_deg")


@dataclass(frozen=True)
class PatternMetrics:
    """Peak/beamwidth/sidelobe summary of one theta cut."""

    peak_power: float
    peak_power_db: float
    peak_theta_deg: float
    peak_phi_deg: float
    beamwidth_deg: float
    sidelobes: tuple[tuple[float, float], ...]   # (theta_deg, dB rel. peak)
    scan_loss_db: float | None = None

    @property
    def max_sidelobe(self) -> tuple[float, float] | None:
        return self.sidelobes[0] if self.sidelobes else None


def _quadratic_peak(x: np.ndarray, y_db: np.ndarray, i: int):
    """Parabolic refinement of a sampled maximum (x must be uniform)."""
    if i == 0 or i == x.size - 1:
        return float(x[i]), float(y_db[i])
    denom = y_db[i - 1] - 2.0 * y_db[i] + y_db[i + 1]
    if denom >= 0.0:
        return float(x[i]), float(y_db[i])
    off = 0.5 * (y_db[i - 1] - y_db[i + 1]) / denom
    h = x[1] - x[0]
    return float(x[i] + off * h), float(y_db[i] - 0.25 * (y_db[i - 1] - y_db[i + 1]) * off)


def _beamwidth(x: np.ndarray, y_db: np.ndarray, i_peak: int, level_db: float):
    """-3 dB width around the peak via linear crossing interpolation."""
    target = level_db - 3.0
    left = right = None
    for j in range(i_peak, 0, -1):
        if y_db[j - 1] < target <= y_db[j]:
            frac = (y_db[j] - target) / (y_db[j] - y_db[j - 1])
            left = x[j] - frac * (x[j] - x[j - 1])
            break
    for j in range(i_peak, x.size - 1):
        if y_db[j + 1] < target <= y_db[j]:
            frac = (y_db[j] - target) / (y_db[j] - y_db[j + 1])
            right = x[j] + frac * (x[j + 1] - x[j])
            break
    if left is None or right is None:
        return float(x[-1] - x[0])   # beam wider than the sampled cut
    return float(right - left)


def compute_metrics(cut: PatternTable, reference: PatternTable | None = None,
                    sidelobe_floor_db: float = -20.0) -> PatternMetrics:
    """Score a theta cut; scan loss is measured against ``reference`` if given."""
    if cut.kind != "theta":
        raise ValueError("metrics are defined on theta cuts")
    if cut.theta_deg.size < 5:
        raise ValueError("cut too coarse for peak interpolation")
    x = cut.theta_deg
    y = 10.0 * np.log10(np.maximum(cut.power_phi, 1e-300))
    i = int(np.argmax(y))
    peak_theta, peak_db = _quadratic_peak(x, y, i)
    width = _beamwidth(x, y, i, y[i])

    interior = (y[1:-1] >= y[:-2]) & (y[1:-1] > y[2:])
    lobes = []
    for j in np.nonzero(interior)[0] + 1:
        if abs(x[j] - peak_theta) < width:
            continue   # part of the main lobe
        th_j, db_j = _quadratic_peak(x, y, j)
        rel = db_j - peak_db
        if rel >= sidelobe_floor_db and rel < 0.0:
            lobes.append((th_j, rel))
    lobes.sort(key=lambda t: -t[1])

    scan_loss = None
    if reference is not None:
        ref = compute_metrics(reference, None, sidelobe_floor_db)
        scan_loss = peak_db - ref.peak_power_db
    return PatternMetrics(10.0 ** (peak_db / 10.0), peak_db, peak_theta,
                          float(cut.phi_deg[0]), width, tuple(lobes), scan_loss)


def uv_peak(table: PatternTable) -> tuple[float, float, float]:
    """(u, v, |E_phi|^2) of the strongest sample of a u-v grid."""
    if table.kind != "uv":
        raise ValueError("expected a uv grid table")
    i = int(np.argmax(table.power_phi))
    return float(table.u[i]), float(table.v[i]), float(table.power_phi[i])


def uv_peak_near(table: PatternTable, u0: float, v0: float,
                 radius: float) -> tuple[float, float, float]:
    """Strongest sample within a disc around (u0, v0); for lobe localization."""
    sel = np.hypot(table.u - u0, table.v - v0) <= radius
    if not np.any(sel):
        raise ValueError("no samples inside the requested disc")
    p = np.where(sel, table.power_phi, -np.inf)
    i = int(np.argmax(p))
    return float(table.u[i]), float(table.v[i]), float(table.power_phi[i])


@dataclass(frozen=True)
class TransparencyMap:
    """Per-cell optical transmittance of a layout."""

    values: np.ndarray

    @property
    def min(self) -> float:
        return float(self.values.min())

    @property
    def mean(self) -> float:
        return float(self.values.mean())


def transparency_map(layout: EmsLayout, feasibility: FeasibilitySet) -> TransparencyMap:
    """Optical transmittance of each cell's descriptors (ring radius from the
    layout, remaining geometry from the feasibility set)."""
    mid = [(l + u) / 2.0 for l, u in zip(feasibility.lower[1:],
                                         feasibility.upper[1:])]
    d2, d3, d4, _ = mid
    mesh = d3 / (d3 + d4)
    annulus = np.pi * d2 * (2.0 * layout.d1_m - d2) / layout.pitch_m**2
    if np.any(2.0 * layout.d1_m > layout.pitch_m):
        raise ValueError("a ring exceeds its cell")
    return TransparencyMap((1.0 - annulus * mesh) ** 4)


def glass_tensor(stack: LayerStack, f: Frequency,
                 incidence: Direction) -> TransmissionTensor:
    """Uniform tensor of the un-patterned window (baseline)."""
    return TransmissionTensor(stack_transmission(stack, f, incidence, "TE"),
                              stack_transmission(stack, f, incidence, "TM"))


def baseline_currents(kind: str, p: int, q: int, pitch_m: float,
                      incident: PlaneWave,
                      stack: LayerStack | None = None) -> CurrentSheet:
    """Current sheet of the 'glass' or 'empty' same-size reference aperture."""
    if kind == "empty":
        tensor = TransmissionTensor.identity()
    elif kind == "glass":
        if stack is None:
            raise ValueError("glass baseline needs a layer stack")
        tensor = glass_tensor(stack, incident.frequency, incident.direction)
    else:
        raise ValueError(f"unknown baseline {kind!r}")
    return uniform_currents(tensor, p, q, pitch_m, incident)


@dataclass(frozen=True)
class ApertureSweepRow:
    p: int
    xi_db: float
    xi_glass_db: float
    xi_empty_db: float


@dataclass(frozen=True)
class AngleSweepRow:
    theta_rx_deg: float
    xi_db: float
    scan_loss_db: float
    peak_theta_deg: float
    max_sidelobe_db: float
    max_sidelobe_theta_deg: float


def _cut_for(layout: EmsLayout, sheet: CurrentSheet, f: Frequency,
             phi_deg: float, samples: int, radius_m: float) -> PatternTable:
    return pattern_cut(layout, sheet, f, cut="theta", samples=samples,
                       phi_deg=phi_deg, radius_m=radius_m)


def aperture_sweep(receiver: Direction, incident: PlaneWave, pitch_m: float,
                   sizes, table: ResponseTable, stack: LayerStack,
                   radius_m: float = 100.0, samples: int = 721,
                   grid_points: int = 2001, workers: int = 1) -> list[ApertureSweepRow]:
    """Peak power versus square aperture size, with same-size baselines.

    Baselines are scored at broadside (their beams point straight through);
    all entries share the one reference radius so the powers compare directly.
    """
    sizes = [int(p) for p in sizes]
    if not sizes:
        raise ValueError("no sizes requested")

    def one(p: int) -> ApertureSweepRow:
        spec = SynthesisSpec(receiver, incident, p, p, pitch_m)
        res = synthesize_per_cell(spec, table, grid_points)
        sheet = equivalent_currents(res.layout, table, incident)
        cut = _cut_for(res.layout, sheet, incident.frequency,
                       receiver.phi_deg, samples, radius_m)
        xi = compute_metrics(cut).peak_power_db
        base = EmsLayout.uniform(p, p, pitch_m, table.d1_range[0], "baseline")
        cut_g = _cut_for(base, baseline_currents("glass", p, p, pitch_m,
                                                 incident, stack),
                         incident.frequency, 0.0, samples, radius_m)
        cut_e = _cut_for(base, baseline_currents("empty", p, p, pitch_m,
                                                 incident),
                         incident.frequency, 0.0, samples, radius_m)
        return ApertureSweepRow(p, xi, compute_metrics(cut_g).peak_power_db,
                                compute_metrics(cut_e).peak_power_db)

    return _run_ordered(one, sizes, workers)


def angle_sweep(receivers, incident: PlaneWave, p: int, q: int, pitch_m: float,
                table: ResponseTable, radius_m: float = 100.0,
                samples: int = 721, grid_points: int = 2001,
                workers: int = 1) -> list[AngleSweepRow]:
    """Steering-angle sweep at fixed aperture, scan loss against broadside."""
    angles = [float(t) for t in receivers]
    if not angles:
        raise ValueError("no receiver angles requested")
    ref_spec = SynthesisSpec(Direction(180.0, 0.0), incident, p, q, pitch_m)
    ref_res = synthesize_per_cell(ref_spec, table, grid_points)
    ref_cut = _cut_for(ref_res.layout,
                       equivalent_currents(ref_res.layout, table, incident),
                       incident.frequency, 0.0, samples, radius_m)

    def one(theta_rx: float) -> AngleSweepRow:
        spec = SynthesisSpec(Direction(theta_rx, 0.0), incident, p, q, pitch_m)
        res = synthesize_per_cell(spec, table, grid_points)
        cut = _cut_for(res.layout,
                       equivalent_currents(res.layout, table, incident),
                       incident.frequency, 0.0, samples, radius_m)
        m = compute_metrics(cut, reference=ref_cut)
        lobe = m.max_sidelobe
        return AngleSweepRow(theta_rx, m.peak_power_db, m.scan_loss_db,
                             m.peak_theta_deg,
                             lobe[1] if lobe else float("nan"),
                             lobe[0] if lobe else float("nan"))

    return _run_ordered(one, angles, workers)


def _run_ordered(fn, items, workers: int):
    """Run independent sweep entries, results in input order."""
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def aperture_sweep_csv(rows) -> str:
    buf = io.StringIO()
    buf.write(APERTURE_SWEEP_HEADER + "\n")
    for r in rows:
        buf.write(f"{r.p},{float(r.xi_db)!r},{float(r.xi_glass_db)!r},"
                  f"{float(r.xi_empty_db)!r}\n")
    return buf.getvalue()


def angle_sweep_csv(rows) -> str:
    buf = io.StringIO()
    buf.write(ANGLE_SWEEP_HEADER + "\n")
    for r in rows:
        buf.write(",".join(repr(float(x)) for x in
                           (r.theta_rx_deg, r.xi_db, r.scan_loss_db,
                            r.peak_theta_deg, r.max_sidelobe_db,
                            r.max_sidelobe_theta_deg)) + "\n")
    return buf.getvalue()
