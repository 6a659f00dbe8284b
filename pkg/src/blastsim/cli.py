"""Command-line harness: ``blastsim <subcommand> --config scenario.json``.

Exit codes: 0 success, 1 other failure (e.g. bracket search), 2 config
validation, 3 infeasible scaling, 4 integration failure.
"""

from __future__ import annotations

import argparse
import contextlib
import copy
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .blastload import (
    BlastScenario,
    friedlander_decay,
    reflected_pressure_peak,
    scaled_arrival_time,
    scaled_distance,
    scaled_positive_duration,
    scaled_reflected_impulse,
    waveform_from_scenario,
)
from .config import ScenarioConfig, load_config
from .errors import (
    BlastSimError,
    BracketError,
    ConfigError,
    DomainError,
    InfeasibleScalingError,
    IntegrationError,
    NoDecaySolutionError,
    ZRangeError,
)
from .io import read_series_csv, write_csv, write_history, write_json
from .rockdyn import EventKind, _overturns, critical_charge, simulate_rocking, simulate_sliding
from .similitude import compare_histories, design_model, impulsiveness_report, scale_set_general
from .similitude import scale_set_hopkinson, solve_lambda_z, upscale_response

log = logging.getLogger("blastsim")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SCALING, EXIT_INTEGRATION = 0, 1, 2, 3, 4

BLAST_HEADER = ("W [kg]", "R [m]", "Z [m/kg^(1/3)]", "P_ro [MPa]", "i_rw [MPa*ms/kg^(1/3)]",
                "t_ow [ms/kg^(1/3)]", "t_Aw [ms/kg^(1/3)]", "d [-]", "error")


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

@contextlib.contextmanager
def _mapper(jobs: int):
    if jobs <= 1:
        yield map
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            yield pool.map


def _emit(out: Path, stem: str, formats, header, rows, payload):
    written = []
    if "csv" in formats:
        written.append(write_csv(out / f"{stem}.csv", header, rows))
    if "json" in formats:
        written.append(write_json(out / f"{stem}.json", payload))
    return written


def _sim_kwargs(cfg: ScenarioConfig) -> dict:
    return {"rtol": cfg.run.rtol, "atol": cfg.run.atol}


def _simulate(block, wave, cfg: ScenarioConfig, t_end=None, t_eval=None, restitution=None):
    kw = _sim_kwargs(cfg)
    if cfg.run.mechanism == "sliding":
        return simulate_sliding(block, wave, t_end, t_eval=t_eval, **kw)
    return simulate_rocking(block, wave, t_end, t_eval=t_eval, restitution=restitution, **kw)


def _run_case(args):
    block, wave, cfg, t_end, t_eval = args
    return _simulate(block, wave, cfg, t_end, t_eval, cfg.block.restitution)


def _design(cfg: ScenarioConfig, scenario=None):
    if cfg.scaling is None:
        raise ConfigError("this command needs a scaling section (or --scale-length)")
    s = cfg.scaling
    return design_model(cfg.block.build(), scenario or cfg.blast.scenario(), s.length, s.density,
                        s.gravity, hopkinson=s.hopkinson)


def _waveform_summary(wave) -> dict:
    return {"kind": wave.kind, "peak_pressure_MPa": wave.peak_pressure,
            "positive_duration_ms": wave.positive_duration, "impulse_MPa_ms": wave.impulse,
            "arrival_time_ms": wave.arrival_time, "decay": wave.decay,
            "linear_duration_ms": wave.linear_duration, "scaled_distance": wave.scaled_distance}


def _history_summary(hist) -> dict:
    return {"mechanism": hist.mechanism, "outcome": hist.outcome, "peak_theta_rad": hist.peak_theta,
            "peak_x_m": hist.peak_x, "first_impact_s": hist.first_time(EventKind.IMPACT),
            "overturn_s": hist.first_time(EventKind.OVERTURN), "n_events": len(hist.events),
            "t_final_s": float(hist.t[-1]) if hist.t.size else 0.0}


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _blast_row(item):
    w, r, z = item
    row = {"W": w, "R": r, "Z": z, "P_ro": math.nan, "i_rw": math.nan, "t_ow": math.nan,
           "t_Aw": math.nan, "d": math.nan, "error": ""}
    try:
        if z is None:
            z = row["Z"] = scaled_distance(w, r)
        row["P_ro"] = reflected_pressure_peak(z)
        row["i_rw"] = scaled_reflected_impulse(z)
        row["t_ow"] = scaled_positive_duration(z)
        row["t_Aw"] = scaled_arrival_time(z)
        row["d"] = friedlander_decay(row["P_ro"], row["t_ow"], row["i_rw"])
    except BlastSimError as exc:
        row["error"] = str(exc)
    return row


def cmd_blast_params(cfg: ScenarioConfig, out: Path) -> int:
    b = cfg.blast
    items = [(w, r, None) for w, r in b.scenarios]
    if b.z_grid is not None:
        lo, hi, n = b.z_grid
        items += [(None, None, float(z)) for z in np.geomspace(lo, hi, n)]
    if not items and b.charge_mass is not None and b.standoff is not None:
        items.append((b.charge_mass, b.standoff, None))
    if not items:
        items = [(None, None, float(z)) for z in np.geomspace(0.1, 40.0, 50)]
    with _mapper(cfg.run.jobs) as pmap:
        rows = list(pmap(_blast_row, items))
    bad = sum(1 for r in rows if r["error"])
    keys = ("W", "R", "Z", "P_ro", "i_rw", "t_ow", "t_Aw", "d", "error")
    _emit(out, "blast_params", cfg.run.formats, BLAST_HEADER, [[r[k] for k in keys] for r in rows],
          {"units": dict(zip(keys, BLAST_HEADER)), "rows": rows})
    print(f"blast-params: {len(rows)} rows ({bad} with errors) -> {out}")
    return EXIT_OK


def cmd_scale_table(cfg: ScenarioConfig, out: Path) -> int:
    if cfg.scaling is None:
        raise ConfigError("scale-table needs a scaling section (or --scale-length)")
    s = cfg.scaling
    if s.hopkinson:
        scale = scale_set_hopkinson(s.length)
    else:
        scale = scale_set_general(s.length, s.density, s.gravity)
        if cfg.blast.charge_mass is not None and cfg.blast.standoff is not None:
            z = cfg.blast.scenario().scaled_distance
            scale = scale.with_lambda_z(solve_lambda_z(z, s.length, s.density, s.gravity))
    table = scale.as_dict()
    _emit(out, "scale_table", cfg.run.formats, ("factor", "model/prototype"), table.items(), table)
    for k, v in table.items():
        print(f"{k:>22s}  {'' if v is None else format(v, '.6g')}")
    return EXIT_OK


def cmd_design_model(cfg: ScenarioConfig, out: Path) -> int:
    design = _design(cfg)
    payload = design.as_dict()
    write_json(out / "design.json", payload)
    rows = []
    for role in ("prototype", "model"):
        blk, bl = payload[role]["block"], payload[role]["blast"]
        rows.append([role, blk["height"], blk["width"], blk["depth"], blk["slenderness_deg"],
                     blk["density"], bl["charge_mass"], bl["standoff"], bl["scaled_distance"]])
    if "csv" in cfg.run.formats:
        write_csv(out / "design.csv", ("system", "height [m]", "width [m]", "depth [m]",
                                       "slenderness [deg]", "density [kg/m3]", "W [kg]", "R [m]",
                                       "Z [m/kg^(1/3)]"), rows)
    r = design.load_ratios
    print(f"lambda_Z = {design.scale.lambda_z:.6g}; model Z = {design.scenario.scaled_distance:.4g} "
          f"m/kg^(1/3); model W = {design.scenario.charge_mass:.6g} kg; "
          f"pressure ratio {r['pressure']:.4g}, impulse ratio {r['impulse']:.4g}")
    return EXIT_OK


def cmd_simulate(cfg: ScenarioConfig, out: Path, model: bool = False) -> int:
    block = cfg.block.build()
    scenario = cfg.blast.scenario()
    summary = {}
    if model:
        design = _design(cfg)
        block, scenario = design.block, design.scenario
        summary["design"] = design.as_dict()
    wave = waveform_from_scenario(scenario, cfg.blast.waveform)
    summary.update({"system": "model" if model else "prototype",
                    "blast": {"charge_mass": scenario.charge_mass, "standoff": scenario.standoff},
                    "waveform": _waveform_summary(wave),
                    "impulsiveness": impulsiveness_report(block, wave).as_dict()})
    try:
        hist = _simulate(block, wave, cfg, cfg.run.t_end, None, cfg.block.restitution)
    except IntegrationError as exc:
        if exc.history is not None:
            write_history(out, exc.history)
        summary.update({"status": "failed", "error": str(exc), "state": exc.state})
        write_json(out / "summary.json", summary)
        raise
    write_history(out, hist)
    if cfg.run.phase_portrait:
        write_csv(out / "phase.csv", ("theta [rad]", "theta_dot [rad/s]"), zip(hist.theta, hist.theta_dot))
    summary.update({"status": "ok", "response": _history_summary(hist)})
    write_json(out / "summary.json", summary)
    print(f"simulate: outcome {hist.outcome.value}, peak theta {hist.peak_theta:.6g} rad, "
          f"peak x {hist.peak_x:.6g} m -> {out}")
    return EXIT_OK


def cmd_compare(cfg: ScenarioConfig, out: Path, prototype_series=None, model_series=None) -> int:
    design = _design(cfg)
    scale = design.scale
    wp = waveform_from_scenario(design.prototype_scenario, cfg.blast.waveform)
    wm = waveform_from_scenario(design.scenario, cfg.blast.waveform)
    if prototype_series:
        proto = read_series_csv(prototype_series)
    if model_series:
        model = read_series_csv(model_series)
    if not (prototype_series and model_series):
        t_end = cfg.run.t_end
        if t_end is None:
            ref = proto if prototype_series else _simulate(design.prototype_block, wp, cfg,
                                                           restitution=cfg.block.restitution)
            # margin so the rerun settles too
            t_end = 1.1 * float(ref.t[-1])
        grid = np.linspace(0.0, t_end, cfg.run.samples)
        cases = []
        if not prototype_series:
            cases.append((design.prototype_block, wp, cfg, t_end, grid))
        if not model_series:
            cases.append((design.block, wm, cfg, t_end * scale.time, grid * scale.time))
        with _mapper(min(cfg.run.jobs, len(cases))) as pmap:
            results = list(pmap(_run_case, cases))
        if not prototype_series:
            proto = results.pop(0)
        if not model_series:
            model = results.pop(0)
    upscaled = upscale_response(model, scale)
    metrics = compare_histories(proto, upscaled)
    write_history(out, proto, "prototype_series", "prototype_events")
    write_history(out, upscaled, "model_series", "model_events")
    write_json(out / "design.json", design.as_dict())
    write_json(out / "summary.json", {
        "prototype": _history_summary(proto),
        "model_upscaled": _history_summary(upscaled),
        "metrics": metrics,
        "impulsiveness": {"prototype": impulsiveness_report(design.prototype_block, wp).as_dict(),
                          "model": impulsiveness_report(design.block, wm).as_dict()},
    })
    print(f"compare: prototype {proto.outcome.value}, model {upscaled.outcome.value}; "
          f"pre-impact sup error {metrics['pre_impact_sup_error']:.3g} of peak theta")
    return EXIT_OK


def _auto_bracket(block, standoff, start, cfg, max_steps=40):
    kw = dict(_sim_kwargs(cfg), restitution=cfg.block.restitution)
    kind = cfg.blast.waveform
    lo = hi = start
    history = []
    for _ in range(max_steps):
        flag = _overturns(block, standoff, lo, kind, None, kw)
        history.append((lo, flag))
        if not flag:
            break
        lo *= 0.5
    else:
        raise BracketError("could not find a charge that leaves the block standing")
    hi = max(hi, 2 * lo)
    for _ in range(max_steps):
        flag = _overturns(block, standoff, hi, kind, None, kw)
        history.append((hi, flag))
        if flag:
            break
        lo = hi
        hi *= 2.0
    else:
        raise BracketError("could not find a charge that overturns the block")
    return (lo, hi), history


def _critical(block, standoff, cfg, bracket, pmap):
    expanded = []
    if bracket is None:
        start = cfg.blast.charge_mass or 1.0
        bracket, expanded = _auto_bracket(block, standoff, start, cfg)
    res = critical_charge(block, standoff, bracket, cfg.critical.rtol, kind=cfg.blast.waveform,
                          map_fn=pmap, restitution=cfg.block.restitution, **_sim_kwargs(cfg))
    return {"critical_charge_kg": res.charge, "final_bracket": res.bracket,
            "initial_bracket": bracket, "bracket_expansion": expanded,
            "evaluations": [{"charge_kg": w, "overturned": f} for w, f in res.evaluations],
            "sandwich": res.sandwich}


def cmd_critical_charge(cfg: ScenarioConfig, out: Path) -> int:
    block = cfg.block.build()
    if cfg.blast.standoff is None:
        raise ConfigError("critical-charge needs blast.standoff")
    summary = {}
    with _mapper(cfg.run.jobs) as pmap:
        summary["prototype"] = _critical(block, cfg.blast.standoff, cfg, cfg.critical.bracket, pmap)
        wc = summary["prototype"]["critical_charge_kg"]
        if cfg.scaling is not None:
            design = _design(cfg, BlastScenario(wc, cfg.blast.standoff))
            mapped = design.scenario.charge_mass
            br = (0.5 * mapped, 2.0 * mapped)
            model = _critical(design.block, design.scenario.standoff, cfg, br, pmap)
            summary["model"] = model
            summary["model"]["design_mapping_kg"] = mapped
            summary["model"]["relative_difference"] = model["critical_charge_kg"] / mapped - 1.0
            summary["design"] = design.as_dict()
    write_json(out / "summary.json", summary)
    print(f"critical-charge: W_c = {wc:.6g} kg at R = {cfg.blast.standoff:g} m -> {out}")
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="scenario JSON file")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--format", choices=("csv", "json", "both"), help="table output format")
    common.add_argument("--jobs", type=int, help="parallel worker processes")
    common.add_argument("--tol-rel", type=float, help="integrator relative tolerance")
    common.add_argument("--tol-abs", type=float, help="integrator absolute tolerance")
    common.add_argument("--waveform", choices=("friedlander", "triangular"))
    common.add_argument("--charge", type=float, help="TNT-equivalent charge [kg]")
    common.add_argument("--standoff", type=float, help="stand-off distance [m]")
    common.add_argument("--scale-length", type=float, help="geometric scale factor")
    common.add_argument("--scale-density", type=float, help="density scale factor")
    common.add_argument("--hopkinson", action="store_true", help="Hopkinson-Cranz scaling")
    common.add_argument("--t-end", type=float, help="simulation end time [s]")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="blastsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("blast-params", parents=[common], help="tabulate empirical blast parameters")
    sub.add_parser("scale-table", parents=[common], help="list all scale factors")
    sub.add_parser("design-model", parents=[common], help="design the reduced-scale model")
    p = sub.add_parser("simulate", parents=[common], help="simulate a block response")
    p.add_argument("--model", action="store_true", help="simulate the designed model instead")
    p.add_argument("--phase-portrait", action="store_true", help="also write phase.csv")
    p = sub.add_parser("compare", parents=[common], help="prototype vs upscaled model")
    p.add_argument("--prototype-series", type=Path, help="re-use a prototype series.csv")
    p.add_argument("--model-series", type=Path, help="re-use a model-scale series.csv")
    sub.add_parser("critical-charge", parents=[common], help="bisect the overturning charge")
    return parser


def _merge_overrides(raw: dict, args) -> dict:
    d = copy.deepcopy(raw)
    run = d.setdefault("run", {})
    blast = d.setdefault("blast", {})
    if args.out is not None:
        run["out"] = str(args.out)
    if args.format is not None:
        run["format"] = args.format
    if args.jobs is not None:
        run["jobs"] = args.jobs
    if args.tol_rel is not None:
        run["rtol"] = args.tol_rel
    if args.tol_abs is not None:
        run["atol"] = args.tol_abs
    if args.t_end is not None:
        run["t_end"] = args.t_end
    if getattr(args, "phase_portrait", False):
        run["phase_portrait"] = True
    if args.waveform is not None:
        blast["waveform"] = args.waveform
    if args.charge is not None:
        blast["charge_mass"] = args.charge
    if args.standoff is not None:
        blast["standoff"] = args.standoff
    if args.scale_length is not None or args.scale_density is not None or args.hopkinson:
        scaling = dict(d.get("scaling") or {})
        if args.scale_length is not None:
            scaling["length"] = args.scale_length
        if args.scale_density is not None:
            scaling["density"] = args.scale_density
            scaling.pop("hopkinson", None)
        if args.hopkinson:
            scaling["hopkinson"] = True
            scaling.pop("density", None)
        d["scaling"] = scaling
    return d


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        raw = load_config(args.config) if args.config else {}
        cfg = ScenarioConfig.from_dict(_merge_overrides(raw, args))
        out = Path(cfg.run.out)
        if args.command == "blast-params":
            return cmd_blast_params(cfg, out)
        if args.command == "scale-table":
            return cmd_scale_table(cfg, out)
        if args.command == "design-model":
            return cmd_design_model(cfg, out)
        if args.command == "simulate":
            return cmd_simulate(cfg, out, model=args.model)
        if args.command == "compare":
            return cmd_compare(cfg, out, args.prototype_series, args.model_series)
        if args.command == "critical-charge":
            return cmd_critical_charge(cfg, out)
    except InfeasibleScalingError as exc:
        print(f"error: infeasible scaling: {exc}", file=sys.stderr)
        return EXIT_SCALING
    except IntegrationError as exc:
        print(f"error: integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except (ConfigError, ZRangeError, DomainError, NoDecaySolutionError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlastSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
