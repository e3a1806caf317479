"""Two-step layout synthesis: conjugate-phase current targets, then matching.

Step one builds the ideal current sheet whose per-cell phases cancel the path
phase toward the receiver, so every cell adds in phase there.  Step two picks
each cell's ring radius so the realizable currents (through the response
table) match that sheet in the least-squares sense.  Two matchers are
provided: an exact per-cell search (the mismatch separates per cell, so the
gridded argmin is the global optimum and the production default) and a
global-best particle swarm over the continuous radius vector.

The conjugate-phase target constrains phases only; its overall complex scale
is free.  The scale is fixed before matching: anchored at the strongest
realizable cell response, one matching pass, then the closed-form
least-squares rescale of the target onto the realized currents, and a final
matching pass.  Anchoring breaks the broadside degeneracy (any uniform layout
matches a suitably scaled uniform target exactly) in favor of the
highest-transmission cell, which is also what the power objective wants.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .aperture import (CurrentSheet, EmsLayout, cell_currents_for_entries,
                       equivalent_currents)
from .atom import ResponseTable
from .errors import InputFileError, NumericalError
from .waves import Direction, ETA0, Frequency, PlaneWave, direction_cosines

_GRID_CHUNK = 128


@dataclass(frozen=True)
class OptimizerConfig:
    """Swarm settings; defaults are the standard constriction values."""

    swarm_size: int = 30
    max_iterations: int = 200
    inertia: float = 0.729
    cognitive: float = 1.494
    social: float = 1.494
    stall_iterations: int = 40
    seed: int = 0

    def __post_init__(self):
        if self.swarm_size < 2:
            raise ValueError("swarm needs at least 2 particles")
        if self.max_iterations < 1:
            raise ValueError("need at least 1 iteration")
        if not 0.0 < self.inertia < 1.0:
            raise ValueError("inertia must lie in (0, 1)")
        if self.cognitive <= 0.0 or self.social <= 0.0:
            raise ValueError("acceleration coefficients must be > 0")
        if self.stall_iterations < 1:
            raise ValueError("stagnation window must be >= 1")


@dataclass(frozen=True)
class SynthesisSpec:
    """What to synthesize: receiver direction, illumination, and grid shape."""

    receiver: Direction
    incident: PlaneWave
    p_count: int
    q_count: int
    pitch_m: float
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self):
        if not 90.0 < self.receiver.theta_deg <= 180.0:
            raise ValueError("receiver must lie in the transmitted half-space "
                             f"(90 < theta <= 180), got {self.receiver.theta_deg}")
        if self.p_count < 1 or self.q_count < 1 or self.pitch_m <= 0.0:
            raise ValueError("invalid layout shape")

    @property
    def frequency(self) -> Frequency:
        return self.incident.frequency

    def cell_xy(self):
        xs = (np.arange(self.p_count) - (self.p_count - 1) / 2.0) * self.pitch_m
        ys = (np.arange(self.q_count) - (self.q_count - 1) / 2.0) * self.pitch_m
        return xs, ys


def ideal_current_phases(spec: SynthesisSpec) -> np.ndarray:
    """Conjugated per-cell phases (rad), -arg of each pixel radiation integral.

    Linear profile -k0 (u_rx x_p + v_rx y_q); the pixel sinc factor is a
    direction constant shared by all cells and real-positive whenever the
    pitch resolves the steering (k0 |u| Delta / 2 < pi), else its sign
    contributes a global pi.
    """
    k0 = spec.frequency.wavenumber
    u, v = spec.receiver.u, spec.receiver.v
    xs, ys = spec.cell_xy()
    phases = -k0 * (u * xs[:, None] + v * ys[None, :])
    sinc_sign = (np.sinc(k0 * u * spec.pitch_m / 2.0 / np.pi)
                 * np.sinc(k0 * v * spec.pitch_m / 2.0 / np.pi))
    if sinc_sign < 0.0:
        phases = phases + np.pi
    return phases


def _unit_orientation(spec: SynthesisSpec):
    """Identity-tensor current pair, normalized to unit magnetic amplitude."""
    j_e, j_m = cell_currents_for_entries(np.array(1.0 + 0j), np.array(1.0 + 0j),
                                         spec.incident)
    norm = float(np.linalg.norm(j_m))
    if norm == 0.0:
        raise NumericalError("degenerate incident wave: zero magnetic current")
    return j_e / norm, j_m / norm


def ideal_currents(spec: SynthesisSpec) -> CurrentSheet:
    """Unit-amplitude conjugate-phase current sheet (the matching target).

    Orientation copies the incident polarization passed through an identity
    cell, keeping the electric/magnetic pair in the free-space Huygens ratio
    so the sheet radiates into the transmitted half-space only.
    """
    e_dir, m_dir = _unit_orientation(spec)
    rot = np.exp(1j * ideal_current_phases(spec))[..., None]
    p, q = spec.p_count, spec.q_count
    return CurrentSheet(np.broadcast_to(e_dir, (p, q, 3)) * rot,
                        np.broadcast_to(m_dir, (p, q, 3)) * rot)


def mismatch_between(realized: CurrentSheet, ideal: CurrentSheet) -> float:
    """Squared current-matching distance, electric part scaled by eta0."""
    if realized.shape != ideal.shape:
        raise ValueError(f"current sheets have different shapes "
                         f"{realized.shape} vs {ideal.shape}")
    diff = realized.stacked() - ideal.stacked()
    return float(np.real(np.vdot(diff, diff)))


def current_mismatch(layout: EmsLayout, table: ResponseTable,
                     incident: PlaneWave, ideal: CurrentSheet) -> float:
    """Mismatch of the layout's realized currents against a target sheet."""
    return mismatch_between(equivalent_currents(layout, table, incident), ideal)


def least_squares_scale(ideal: CurrentSheet, realized: CurrentSheet) -> complex:
    """Complex c minimizing || realized - c * ideal ||^2."""
    a = ideal.stacked()
    return complex(np.vdot(a, realized.stacked()) / np.real(np.vdot(a, a)))


def _percell_argmin(spec: SynthesisSpec, target: CurrentSheet, grid: np.ndarray,
                    j0_e: np.ndarray, j0_m: np.ndarray) -> np.ndarray:
    """Exact per-cell minimizer of the separable mismatch on a radius grid.

    cost(cell, k) = G(k) + H(cell) - 2 Re(phase_cell * M(cell, k)) where
    M = conj(target-stack) . realizable-stack; evaluated in grid chunks.
    Ties resolve to the smallest radius (argmin takes the first grid point).
    """
    xs, ys = spec.cell_xy()
    phase = spec.incident.phase_at(xs[:, None], ys[None, :]).reshape(-1)
    t_stack = np.concatenate([ETA0 * target.electric.reshape(-1, 3),
                              target.magnetic.reshape(-1, 3)], axis=1)
    j_stack = np.concatenate([ETA0 * j0_e, j0_m], axis=1)      # (K, 6)
    g = np.sum(np.abs(j_stack) ** 2, axis=1)                   # (K,)

    n_cells = t_stack.shape[0]
    best_cost = np.full(n_cells, np.inf)
    best_k = np.zeros(n_cells, dtype=int)
    conj_t = np.conj(t_stack)
    for k0 in range(0, grid.size, _GRID_CHUNK):
        sl = slice(k0, min(k0 + _GRID_CHUNK, grid.size))
        m = conj_t @ j_stack[sl].T                             # (cells, chunk)
        cost = g[sl][None, :] - 2.0 * np.real(phase[:, None] * m)
        k_loc = np.argmin(cost, axis=1)
        c_loc = np.take_along_axis(cost, k_loc[:, None], axis=1)[:, 0]
        better = c_loc < best_cost
        best_cost[better] = c_loc[better]
        best_k[better] = k_loc[better] + k0
    return grid[best_k].reshape(spec.p_count, spec.q_count)


@dataclass(frozen=True)
class PreparedTarget:
    sheet: CurrentSheet
    scale: complex
    anchor_d1_m: float
    grid: np.ndarray
    j0_e: np.ndarray
    j0_m: np.ndarray


def prepare_target(spec: SynthesisSpec, table: ResponseTable,
                   grid_points: int = 2001) -> PreparedTarget:
    """Fix the complex scale of the conjugate-phase target (see module doc)."""
    if grid_points < 2:
        raise ValueError("need at least 2 grid points")
    lo, hi = table.d1_range
    grid = np.linspace(lo, hi, grid_points)
    t_te, t_tm = table.entries_at(grid)
    j0_e, j0_m = cell_currents_for_entries(t_te, t_tm, spec.incident)

    raw = ideal_currents(spec)
    e_dir, m_dir = _unit_orientation(spec)
    tau = np.concatenate([ETA0 * e_dir, m_dir])
    j_stack = np.concatenate([ETA0 * j0_e, j0_m], axis=1)
    proj = (j_stack @ np.conj(tau)) / np.real(np.vdot(tau, tau))
    k_star = int(np.argmax(np.abs(proj)))
    anchor = complex(proj[k_star])

    d1_first = _percell_argmin(spec, raw.scaled(anchor), grid, j0_e, j0_m)
    layout = EmsLayout(spec.p_count, spec.q_count, spec.pitch_m, d1_first,
                       table.table_id)
    scale = least_squares_scale(raw, equivalent_currents(layout, table,
                                                         spec.incident))
    if not np.isfinite(scale) or abs(scale) < 1e-12 * abs(anchor):
        scale = anchor
    return PreparedTarget(raw.scaled(scale), scale, float(grid[k_star]),
                          grid, j0_e, j0_m)


@dataclass(frozen=True)
class SynthesisResult:
    layout: EmsLayout
    upsilon: float
    target: CurrentSheet
    scale: complex
    method: str
    seed: int | None = None
    trace: np.ndarray | None = None
    elapsed_s: float = 0.0


def synthesize_per_cell(spec: SynthesisSpec, table: ResponseTable,
                        grid_points: int = 2001) -> SynthesisResult:
    """Exact gridded matcher; global optimum of the separable mismatch."""
    t0 = time.perf_counter()
    prep = prepare_target(spec, table, grid_points)
    d1 = _percell_argmin(spec, prep.sheet, prep.grid, prep.j0_e, prep.j0_m)
    layout = EmsLayout(spec.p_count, spec.q_count, spec.pitch_m, d1,
                       table.table_id)
    ups = current_mismatch(layout, table, spec.incident, prep.sheet)
    return SynthesisResult(layout, ups, prep.sheet, prep.scale, "percell",
                           elapsed_s=time.perf_counter() - t0)


def synthesize_pso(spec: SynthesisSpec, table: ResponseTable,
                   config: OptimizerConfig | None = None,
                   grid_points: int = 2001) -> SynthesisResult:
    """Global-best PSO over the continuous per-cell radius vector.

    Deterministic for a fixed seed: the per-iteration random draws are taken
    in one block, so results do not depend on particle evaluation order.
    Velocities are clamped to half the search range and particles reflect off
    the bounds, keeping the whole swarm feasible at every iteration.
    """
    cfg = config if config is not None else spec.optimizer
    t0 = time.perf_counter()
    prep = prepare_target(spec, table, grid_points)
    target = prep.sheet
    lo, hi = table.d1_range
    dim = spec.p_count * spec.q_count
    xs, ys = spec.cell_xy()
    phase = spec.incident.phase_at(xs[:, None], ys[None, :])[..., None]

    def fitness(flat: np.ndarray) -> float:
        t_te, t_tm = table.entries_at(flat.reshape(spec.p_count, spec.q_count))
        j_e, j_m = cell_currents_for_entries(t_te, t_tm, spec.incident)
        sheet = CurrentSheet(j_e * phase, j_m * phase)
        ups = mismatch_between(sheet, target)
        if not np.isfinite(ups):
            raise NumericalError("non-finite mismatch; response table corrupt?")
        return ups

    rng = np.random.default_rng(cfg.seed)
    span = hi - lo
    pos = lo + rng.random((cfg.swarm_size, dim)) * span
    vel = (rng.random((cfg.swarm_size, dim)) - 0.5) * span
    v_max = 0.5 * span

    fit = np.array([fitness(x) for x in pos])
    pbest, pfit = pos.copy(), fit.copy()
    g = int(np.argmin(pfit))
    gbest, gfit = pbest[g].copy(), float(pfit[g])
    trace = [gfit]
    stall = 0
    for _ in range(cfg.max_iterations):
        r_cog, r_soc = rng.random((2, cfg.swarm_size, dim))
        vel = (cfg.inertia * vel + cfg.cognitive * r_cog * (pbest - pos)
               + cfg.social * r_soc * (gbest[None, :] - pos))
        np.clip(vel, -v_max, v_max, out=vel)
        pos = pos + vel
        low, high = pos < lo, pos > hi
        pos[low] = 2.0 * lo - pos[low]
        pos[high] = 2.0 * hi - pos[high]
        vel[low | high] *= -1.0
        np.clip(pos, lo, hi, out=pos)

        fit = np.array([fitness(x) for x in pos])
        better = fit < pfit
        pbest[better] = pos[better]
        pfit[better] = fit[better]
        g = int(np.argmin(pfit))
        if pfit[g] < gfit:
            gbest, gfit = pbest[g].copy(), float(pfit[g])
            stall = 0
        else:
            stall += 1
        trace.append(gfit)
        if stall >= cfg.stall_iterations:
            break

    layout = EmsLayout(spec.p_count, spec.q_count, spec.pitch_m,
                       gbest.reshape(spec.p_count, spec.q_count), table.table_id)
    return SynthesisResult(layout, gfit, target, prep.scale, "pso",
                           seed=cfg.seed, trace=np.array(trace),
                           elapsed_s=time.perf_counter() - t0)


def layout_to_json(result: SynthesisResult, spec: SynthesisSpec) -> str:
    """Serialize a synthesized layout (row-major: P rows of Q radii)."""
    doc = {
        "p": spec.p_count,
        "q": spec.q_count,
        "pitch_m": spec.pitch_m,
        "table_id": result.layout.table_id,
        "d1_m": [[float(v) for v in row] for row in result.layout.d1_m],
        "spec": {
            "frequency_hz": spec.frequency.hertz,
            "incidence": {
                "theta_deg": spec.incident.direction.theta_deg,
                "phi_deg": spec.incident.direction.phi_deg,
                "polarization": spec.incident.polarization,
                "magnitude_v_per_m": spec.incident.magnitude,
            },
            "receiver": {
                "theta_deg": spec.receiver.theta_deg,
                "phi_deg": spec.receiver.phi_deg,
            },
            "method": result.method,
        },
        "upsilon": result.upsilon,
        "seed": result.seed,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def save_layout(result: SynthesisResult, spec: SynthesisSpec, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(layout_to_json(result, spec))


def load_layout(path) -> tuple[EmsLayout, dict]:
    """Read a layout file back; returns the layout and the full document."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as err:
        raise InputFileError(f"cannot read layout file {path}: {err}") from None
    except json.JSONDecodeError as err:
        raise InputFileError(f"{path} is not valid JSON: {err}") from None
    try:
        layout = EmsLayout(int(doc["p"]), int(doc["q"]), float(doc["pitch_m"]),
                           np.array(doc["d1_m"], float),
                           str(doc.get("table_id", "table")))
    except (KeyError, ValueError, TypeError) as err:
        raise InputFileError(f"{path} is not a layout file: {err}") from None
    return layout, doc
