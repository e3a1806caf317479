"""Run configuration: JSON file + CLI overrides, strictly validated.

Lengths in the file use millimeters and frequencies gigahertz for
convenience; everything is converted to SI on load.  Unknown keys anywhere in
the document are rejected so typos cannot silently fall back to defaults.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .atom import (CostWeights, FeasibilitySet, ResponseTable, atom_cost,
                   default_surrogate_table)
from .errors import ConfigError, InputFileError
from .multilayer import LayerStack
from .synthesis import OptimizerConfig, SynthesisSpec
from .waves import Direction, Frequency, PlaneWave

_TOP_KEYS = {"frequency_ghz", "pitch_mm", "stack", "table", "surrogate_rows",
             "feasibility", "incidence", "receiver", "p", "q", "method",
             "optimizer", "seed", "radius_m", "output_dir",
             "atom_cost_threshold", "figures"}
_STACK_KEYS = {"thickness_mm", "eps_r", "tan_delta"}
_FEAS_KEYS = {"d1_min_mm", "d1_max_mm", "d2_mm", "d3_mm", "d4_mm", "d5_deg"}
_INC_KEYS = {"theta_deg", "phi_deg", "polarization", "magnitude_v_per_m"}
_RX_KEYS = {"theta_deg", "phi_deg"}
_OPT_KEYS = {"swarm_size", "max_iterations", "inertia", "cognitive", "social",
             "stall_iterations"}
METHODS = ("percell", "pso")


def _reject_unknown(d: dict, allowed: set, where: str):
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(sorted(unknown))}")


@dataclass(frozen=True)
class RunConfig:
    frequency: Frequency
    pitch_m: float
    stack: LayerStack
    table_source: str                      # "surrogate" or a CSV path
    surrogate_rows: int
    feasibility: FeasibilitySet
    incidence: Direction
    polarization: str
    magnitude: float
    receiver: Direction
    p: int
    q: int
    method: str
    optimizer: OptimizerConfig
    seed: int
    radius_m: float
    output_dir: str
    atom_cost_threshold: float | None
    figures: bool
    base_dir: Path = field(default_factory=Path)

    def incident_wave(self) -> PlaneWave:
        return PlaneWave(self.incidence, self.polarization, self.frequency,
                         self.magnitude)

    def synthesis_spec(self) -> SynthesisSpec:
        return SynthesisSpec(self.receiver, self.incident_wave(), self.p,
                             self.q, self.pitch_m, self.optimizer)

    def load_table(self) -> ResponseTable:
        if self.table_source == "surrogate":
            table = default_surrogate_table(self.feasibility,
                                            self.surrogate_rows,
                                            self.pitch_m, self.frequency)
        else:
            path = Path(self.table_source)
            if not path.is_absolute():
                path = self.base_dir / path
            if not path.exists():
                raise InputFileError(f"response table not found: {path}")
            try:
                table = ResponseTable.from_csv(path, self.pitch_m, self.frequency)
            except ValueError as err:
                raise InputFileError(str(err)) from None
        if self.atom_cost_threshold is not None:
            score = atom_cost(table, self.feasibility, CostWeights()).cost
            if score > self.atom_cost_threshold:
                raise ConfigError(f"response table fails the cell quality gate: "
                                  f"cost {score} > {self.atom_cost_threshold}")
        return table


def _get(doc: dict, key: str, default):
    return doc[key] if key in doc else default


def _positive(value, name: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}") from None
    if not v > 0.0:
        raise ConfigError(f"{name} must be > 0, got {v}")
    return v


def parse_config(doc: dict, base_dir: Path) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "config")

    freq = Frequency.from_ghz(_positive(_get(doc, "frequency_ghz", 26.0),
                                        "frequency_ghz"))
    pitch = _positive(_get(doc, "pitch_mm", 3.7), "pitch_mm") * 1e-3

    stack_doc = _get(doc, "stack", [{"thickness_mm": 4.0, "eps_r": 5.5},
                                    {"thickness_mm": 10.0, "eps_r": 1.0},
                                    {"thickness_mm": 4.0, "eps_r": 5.5}])
    layers = []
    for i, entry in enumerate(stack_doc):
        if not isinstance(entry, dict):
            raise ConfigError(f"stack[{i}] must be an object")
        _reject_unknown(entry, _STACK_KEYS, f"stack[{i}]")
        layers.append((_positive(entry.get("thickness_mm"), f"stack[{i}].thickness_mm") * 1e-3,
                       float(entry.get("eps_r", 1.0)),
                       float(entry.get("tan_delta", 0.0))))
    try:
        stack = LayerStack.from_sequence(layers)
    except ValueError as err:
        raise ConfigError(str(err)) from None

    table_source = _get(doc, "table", "surrogate")
    if not isinstance(table_source, str) or not table_source:
        raise ConfigError("table must be 'surrogate' or a CSV path")
    surrogate_rows = int(_get(doc, "surrogate_rows", 41))

    feas_doc = _get(doc, "feasibility", {})
    _reject_unknown(feas_doc, _FEAS_KEYS, "feasibility")
    d1_min = _positive(_get(feas_doc, "d1_min_mm", 0.9), "d1_min_mm") * 1e-3
    d1_max = _positive(_get(feas_doc, "d1_max_mm", 1.6), "d1_max_mm") * 1e-3
    d2 = _positive(_get(feas_doc, "d2_mm", 0.795), "d2_mm") * 1e-3
    d3 = _positive(_get(feas_doc, "d3_mm", 0.030), "d3_mm") * 1e-3
    d4 = _positive(_get(feas_doc, "d4_mm", 0.225), "d4_mm") * 1e-3
    d5 = _positive(_get(feas_doc, "d5_deg", 20.0), "d5_deg")
    if d1_min > d1_max:
        raise ConfigError("d1_min_mm exceeds d1_max_mm")
    if 2.0 * d1_max > pitch:
        raise ConfigError(f"ring diameter 2*d1_max = {2 * d1_max * 1e3} mm "
                          f"exceeds the pitch {pitch * 1e3} mm")
    feas = FeasibilitySet(lower=(d1_min, d2, d3, d4, d5),
                          upper=(d1_max, d2, d3, d4, d5))

    inc_doc = _get(doc, "incidence", {})
    _reject_unknown(inc_doc, _INC_KEYS, "incidence")
    try:
        incidence = Direction(float(_get(inc_doc, "theta_deg", 0.0)),
                              float(_get(inc_doc, "phi_deg", 0.0)))
    except ValueError as err:
        raise ConfigError(str(err)) from None
    if incidence.theta_deg >= 90.0:
        raise ConfigError("incidence must come from the outdoor side (theta < 90)")
    polarization = _get(inc_doc, "polarization", "phi")
    magnitude = _positive(_get(inc_doc, "magnitude_v_per_m", 1.0),
                          "magnitude_v_per_m")

    rx_doc = _get(doc, "receiver", {})
    _reject_unknown(rx_doc, _RX_KEYS, "receiver")
    try:
        receiver = Direction(float(_get(rx_doc, "theta_deg", 180.0)),
                             float(_get(rx_doc, "phi_deg", 0.0)))
    except ValueError as err:
        raise ConfigError(str(err)) from None
    if receiver.theta_deg <= 90.0:
        raise ConfigError(f"receiver direction theta = {receiver.theta_deg} "
                          "is not in the transmitted half-space (needs > 90)")

    p = int(_get(doc, "p", 30))
    q = int(_get(doc, "q", 30))
    if p < 1 or q < 1:
        raise ConfigError("p and q must be >= 1")

    method = _get(doc, "method", "percell")
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {method!r}")

    seed = int(_get(doc, "seed", 0))
    opt_doc = _get(doc, "optimizer", {})
    _reject_unknown(opt_doc, _OPT_KEYS, "optimizer")
    try:
        optimizer = OptimizerConfig(
            swarm_size=int(_get(opt_doc, "swarm_size", 30)),
            max_iterations=int(_get(opt_doc, "max_iterations", 200)),
            inertia=float(_get(opt_doc, "inertia", 0.729)),
            cognitive=float(_get(opt_doc, "cognitive", 1.494)),
            social=float(_get(opt_doc, "social", 1.494)),
            stall_iterations=int(_get(opt_doc, "stall_iterations", 40)),
            seed=seed)
    except ValueError as err:
        raise ConfigError(str(err)) from None

    radius = _positive(_get(doc, "radius_m", 100.0), "radius_m")
    threshold = _get(doc, "atom_cost_threshold", None)
    if threshold is not None:
        threshold = _positive(threshold, "atom_cost_threshold")

    try:
        return RunConfig(freq, pitch, stack, table_source, surrogate_rows,
                         feas, incidence, polarization, magnitude, receiver,
                         p, q, method, optimizer, seed, radius,
                         str(_get(doc, "output_dir", "out")), threshold,
                         bool(_get(doc, "figures", True)), base_dir)
    except ValueError as err:
        raise ConfigError(str(err)) from None


def _bundled_config_text(name: str) -> str | None:
    try:
        ref = resources.files("skinforge").joinpath("data", name)
        if ref.is_file():
            return ref.read_text(encoding="utf-8")
    except (FileNotFoundError, ModuleNotFoundError):
        pass
    return None


def load_config(path: str, overrides: dict | None = None) -> RunConfig:
    """Read a config file (falling back to the bundled one of the same name)
    and apply flag overrides."""
    p = Path(path)
    base_dir = Path.cwd()
    if p.exists():
        text = p.read_text(encoding="utf-8")
        base_dir = p.parent.resolve()
    else:
        text = _bundled_config_text(p.name)
        if text is None:
            raise InputFileError(f"config file not found: {path}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise InputFileError(f"{path} is not valid JSON: {err}") from None

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key in ("frequency_ghz", "pitch_mm", "p", "q", "method", "seed",
                   "table", "radius_m", "output_dir", "figures"):
            doc["table" if key == "table" else key] = value
        elif key == "rx_theta_deg":
            doc.setdefault("receiver", {})["theta_deg"] = value
        elif key == "rx_phi_deg":
            doc.setdefault("receiver", {})["phi_deg"] = value
        else:
            raise ConfigError(f"unknown override {key!r}")
    return parse_config(doc, base_dir)
