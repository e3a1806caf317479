"""Command-line front end.

Subcommands: ``atom`` (cell response + transparency reports), ``synthesize``
(layout design), ``pattern`` (transmitted patterns of layouts or baselines),
``sweep`` (aperture/angle experiment drivers).  Every command reads one JSON
config (bundled ``benchmark.json`` by default) plus flag overrides, writes
deterministic CSV/JSON files into the output directory, and renders matching
PNG figures unless figures are disabled.

Exit codes: 0 success, 2 configuration error, 3 input-file error,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, figures
from .aperture import equivalent_currents, pattern_cut
from .atom import (CostWeights, FeasibilitySet, atom_cost, atom_fill_factor,
                   atom_optical_transmittance, mesh_fill_factor)
from .config import RunConfig, load_config
from .errors import ConfigError, InputFileError, NumericalError
from .synthesis import (load_layout, save_layout, synthesize_per_cell,
                        synthesize_pso)


def _common_flags(sub):
    sub.add_argument("--config", default="benchmark.json",
                     help="JSON config file (bundled benchmark.json by default)")
    sub.add_argument("--freq-ghz", type=float, dest="frequency_ghz")
    sub.add_argument("--pitch-mm", type=float, dest="pitch_mm")
    sub.add_argument("--rx-theta-deg", type=float, dest="rx_theta_deg")
    sub.add_argument("--rx-phi-deg", type=float, dest="rx_phi_deg")
    sub.add_argument("--p", type=int)
    sub.add_argument("--q", type=int)
    sub.add_argument("--table", help="response table CSV path or 'surrogate'")
    sub.add_argument("--method", choices=("percell", "pso"))
    sub.add_argument("--seed", type=int)
    sub.add_argument("--radius-m", type=float, dest="radius_m")
    sub.add_argument("--out", dest="output_dir", help="output directory")
    sub.add_argument("--no-figures", action="store_true",
                     help="skip PNG rendering")
    sub.add_argument("--threads", type=int, default=1,
                     help="worker cap for sweep entries")


def _load(args) -> RunConfig:
    overrides = {k: getattr(args, k, None) for k in
                 ("frequency_ghz", "pitch_mm", "rx_theta_deg", "rx_phi_deg",
                  "p", "q", "table", "method", "seed", "radius_m",
                  "output_dir")}
    if getattr(args, "no_figures", False):
        overrides["figures"] = False
    return load_config(args.config, overrides)


def _outdir(config: RunConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def cmd_atom(args) -> int:
    config = _load(args)
    table = config.load_table()
    out = _outdir(config)

    dense = np.linspace(*table.d1_range, 501)
    t_te, t_tm = table.entries_at(dense)
    lines = [  # same layout as the table CSV, on the dense grid
        "d1_m,mag_te,phase_te_deg,mag_tm,phase_tm_deg"]
    ph_te = np.interp(dense, table.d1_m, table.phase_te_deg)
    ph_tm = np.interp(dense, table.d1_m, table.phase_tm_deg)
    for i, d1 in enumerate(dense):
        lines.append(",".join(repr(float(x)) for x in
                              (d1, abs(t_te[i]), ph_te[i], abs(t_tm[i]), ph_tm[i])))
    (out / "atom_response.csv").write_text("\n".join(lines) + "\n",
                                           encoding="utf-8")

    metrics = atom_cost(table, config.feasibility, CostWeights())
    sample = config.feasibility.descriptors(config.feasibility.d1_bounds[0])
    f_mesh = mesh_fill_factor(sample)
    doc = {
        "phase_coverage_te_deg": metrics.phase_coverage_te_deg,
        "phase_coverage_tm_deg": metrics.phase_coverage_tm_deg,
        "min_magnitude_te": metrics.min_magnitude_te,
        "min_magnitude_te_db": metrics.min_magnitude_te_db,
        "min_magnitude_tm": metrics.min_magnitude_tm,
        "min_magnitude_tm_db": metrics.min_magnitude_tm_db,
        "optical_floor": metrics.optical_floor,
        "cost": metrics.cost,
        "mesh_fill_factor": f_mesh,
        "mesh_transmittance": (1.0 - f_mesh) ** 2,
        "table_id": table.table_id,
        "rows": len(table),
    }
    _write_json(out / "atom_metrics.json", doc)

    trans = [atom_optical_transmittance(config.feasibility.descriptors(d),
                                        config.pitch_m) for d in dense]
    tlines = ["d1_m,transmittance"]
    tlines += [f"{float(d1)!r},{float(t)!r}" for d1, t in zip(dense, trans)]
    (out / "transparency_vs_d1.csv").write_text("\n".join(tlines) + "\n",
                                                encoding="utf-8")

    if config.figures:
        figures.save_atom_response_figure(table, out / "atom_response.png")
        figures.save_transparency_curve_figure(dense, trans,
                                               out / "transparency_vs_d1.png")
    print(f"phase coverage TE: {metrics.phase_coverage_te_deg:.2f} deg, "
          f"worst |T|: {metrics.min_magnitude_te_db:.2f} dB, "
          f"optical floor: {metrics.optical_floor:.3f}")
    return 0


def cmd_synthesize(args) -> int:
    config = _load(args)
    table = config.load_table()
    spec = config.synthesis_spec()
    out = _outdir(config)

    t0 = time.perf_counter()
    if config.method == "pso":
        result = synthesize_pso(spec, table, config.optimizer)
    else:
        result = synthesize_per_cell(spec, table)
    elapsed = time.perf_counter() - t0

    save_layout(result, spec, out / "layout.json")
    if result.trace is not None:
        rows = ["iteration,best_upsilon"]
        rows += [f"{i},{float(u)!r}" for i, u in enumerate(result.trace)]
        (out / "convergence.csv").write_text("\n".join(rows) + "\n",
                                             encoding="utf-8")
        if config.figures:
            figures.save_convergence_figure(result.trace,
                                            out / "convergence.png")
    if config.figures:
        tmap = analysis.transparency_map(result.layout, config.feasibility)
        figures.save_layout_figure(result.layout, tmap, out / "layout.png")
    print(f"upsilon = {result.upsilon:.6g} ({config.method}, "
          f"{elapsed:.2f} s wall)")
    return 0


def _pattern_inputs(args, config: RunConfig, table):
    incident = config.incident_wave()
    if args.baseline:
        from .aperture import EmsLayout
        layout = EmsLayout.uniform(config.p, config.q, config.pitch_m,
                                   table.d1_range[0], f"baseline:{args.baseline}")
        sheet = analysis.baseline_currents(args.baseline, config.p, config.q,
                                           config.pitch_m, incident,
                                           config.stack)
        return layout, sheet
    layout, _doc = load_layout(args.layout)
    if abs(layout.pitch_m - table.pitch_m) > 1e-12:
        raise InputFileError(f"layout pitch {layout.pitch_m} does not match "
                             f"the configured table pitch {table.pitch_m}")
    lo, hi = table.d1_range
    if layout.d1_m.min() < lo or layout.d1_m.max() > hi:
        raise InputFileError("layout radii fall outside the table range "
                             f"[{lo}, {hi}]")
    return layout, equivalent_currents(layout, table, incident)


def cmd_pattern(args) -> int:
    config = _load(args)
    table = config.load_table()
    out = _outdir(config)
    layout, sheet = _pattern_inputs(args, config, table)

    cut = pattern_cut(layout, sheet, config.frequency, cut=args.cut,
                      samples=args.samples, phi_deg=args.phi_deg,
                      radius_m=config.radius_m)
    cut.to_csv(out / "pattern.csv")

    doc = {"kind": cut.kind, "radius_m": config.radius_m,
           "samples": args.samples}
    if cut.kind == "theta":
        m = analysis.compute_metrics(cut)
        doc.update(peak_power_db=m.peak_power_db,
                   peak_theta_deg=m.peak_theta_deg,
                   beamwidth_deg=m.beamwidth_deg,
                   sidelobes=[list(s) for s in m.sidelobes])
        if config.figures:
            figures.save_pattern_figure(cut, out / "pattern.png")
        print(f"peak {m.peak_power_db:.2f} dB at theta = "
              f"{m.peak_theta_deg:.2f} deg")
    else:
        u, v, power = analysis.uv_peak(cut)
        doc.update(peak_u=u, peak_v=v,
                   peak_power_db=10.0 * np.log10(max(power, 1e-300)))
        if config.figures:
            figures.save_uv_figure(cut, out / "uv_map.png")
        print(f"peak at (u, v) = ({u:.3f}, {v:.3f})")
    _write_json(out / "metrics.json", doc)
    return 0


def cmd_sweep(args) -> int:
    config = _load(args)
    table = config.load_table()
    incident = config.incident_wave()
    out = _outdir(config)

    if args.kind == "aperture":
        sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else \
            [20, 30, 40, 60, 80, 120, 160, 200]
        rows = analysis.aperture_sweep(config.receiver, incident,
                                       config.pitch_m, sizes, table,
                                       config.stack, config.radius_m,
                                       workers=args.threads)
        (out / "aperture_sweep.csv").write_text(
            analysis.aperture_sweep_csv(rows), encoding="utf-8")
        if config.figures:
            figures.save_aperture_sweep_figure(rows, out / "aperture_sweep.png")
        print(f"swept {len(rows)} aperture sizes")
    else:
        angles = [float(a) for a in args.angles.split(",")] if args.angles \
            else [180.0, 170.0, 160.0, 150.0, 140.0, 130.0, 120.0, 110.0, 100.0]
        rows = analysis.angle_sweep(angles, incident, config.p, config.q,
                                    config.pitch_m, table, config.radius_m,
                                    workers=args.threads)
        (out / "angle_sweep.csv").write_text(analysis.angle_sweep_csv(rows),
                                             encoding="utf-8")
        if config.figures:
            figures.save_angle_sweep_figure(rows, out / "angle_sweep.png")
        print(f"swept {len(rows)} receiver angles")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skinforge",
        description="Design and evaluate transparent beam-steering window skins")
    subs = parser.add_subparsers(dest="command", required=True)

    p_atom = subs.add_parser("atom", help="cell response and transparency reports")
    _common_flags(p_atom)
    p_atom.set_defaults(func=cmd_atom)

    p_syn = subs.add_parser("synthesize", help="design a layout for a receiver")
    _common_flags(p_syn)
    p_syn.set_defaults(func=cmd_synthesize)

    p_pat = subs.add_parser("pattern", help="transmitted pattern of a layout "
                                            "or baseline")
    _common_flags(p_pat)
    group = p_pat.add_mutually_exclusive_group(required=True)
    group.add_argument("--layout", help="layout JSON produced by 'synthesize'")
    group.add_argument("--baseline", choices=("glass", "empty"))
    p_pat.add_argument("--cut", choices=("theta", "uv"), default="theta")
    p_pat.add_argument("--phi-deg", type=float, default=0.0,
                       help="cut plane azimuth for theta cuts")
    p_pat.add_argument("--samples", type=int, default=721)
    p_pat.set_defaults(func=cmd_pattern)

    p_swp = subs.add_parser("sweep", help="aperture or angle experiment sweep")
    _common_flags(p_swp)
    p_swp.add_argument("--kind", choices=("aperture", "angle"), required=True)
    p_swp.add_argument("--sizes", help="comma list of P values (aperture sweep)")
    p_swp.add_argument("--angles", help="comma list of receiver thetas "
                                        "(angle sweep)")
    p_swp.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except InputFileError as err:
        print(f"input error: {err}", file=sys.stderr)
        return 3
    except (NumericalError, FloatingPointError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
