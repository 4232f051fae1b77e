"""Scenario-driven command line front end.

Subcommands:

* ``run``          evolve a scenario, emit timeseries.csv, optional frame
                   dumps, and report.json for the requested checks.
* ``convergence``  rerun a scenario at (N, dt), (2N, dt/2), ... with the
                   step count doubled per level (fixed time horizon) and
                   emit convergence.csv with fitted orders.
* ``frenet``       frame/curvature dump of the scenario's curve, no
                   evolution.
* ``list-catalog`` bundled curves, flows and example scenarios.

Exit codes: 0 all requested checks pass, 1 a check failed, 2 usage or
configuration error, 3 numerical breakdown during evolution.

Outputs are written atomically (temp file + rename) and are byte-identical
across reruns of the same scenario: nothing here depends on wall clock,
thread count, or iteration order of hash maps.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema

from . import catalog
from .curvekit import CurveSpec, sample
from .errors import ConfigError, CurveFlowError, EvolutionError, ParseError
from .exprjet import eval_scalar, parse, variables
from .flowsim import FlowSpec, Trajectory, default_dt, evolve, initial_state
from .frenet import frenet_apparatus, frenet_residuals, stencil_curvatures
from .verify import CHECKS, VerificationReport, merge_reports

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

TIMESERIES_HEADER = "step,t,total_arclength,arclength_drift,min_v,max_v,max_k1"


# --------------------------------------------------------------------------
# Scenario loading


def _schema(name: str) -> dict:
    text = resources.files("curveflow").joinpath("schemas", name).read_text(encoding="utf-8")
    return json.loads(text)


def load_scenario(path: str | Path) -> dict:
    """Read and schema-validate a scenario file."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"scenario file not found: {p}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not valid JSON: {exc}", field=str(p)) from exc
    try:
        jsonschema.validate(doc, _schema("scenario.schema.json"))
    except jsonschema.ValidationError as exc:
        where = ".".join(str(k) for k in exc.absolute_path) or "(document)"
        raise ConfigError(exc.message, field=where) from exc
    _cross_validate(doc)
    return doc


def _const_value(raw, field: str) -> float:
    if isinstance(raw, (int, float)):
        return float(raw)
    try:
        expr = parse(raw)
    except ParseError as exc:
        raise ConfigError(f"bad expression: {exc}", field=field) from exc
    if variables(expr):
        raise ConfigError("must be a constant expression", field=field)
    return float(eval_scalar(expr))


def _cross_validate(doc: dict) -> None:
    n = doc["dimension"]
    comps = doc["curve"]["components"]
    if len(comps) != n:
        raise ConfigError(
            f"{len(comps)} components for dimension {n}", field="curve.components"
        )
    speeds = doc["flow"]["speeds"]
    mode = doc["flow"]["mode"]
    want = n if mode == "explicit" else n - 1
    if len(speeds) != want:
        raise ConfigError(
            f"{mode} flow needs {want} speeds for dimension {n}, got {len(speeds)}",
            field="flow.speeds",
        )
    for name in doc.get("checks", []):
        if name not in CHECKS:
            raise ConfigError(
                f"unknown identity {name!r}; known: {sorted(CHECKS)}", field="checks"
            )
    for name in doc.get("tolerances", {}):
        if name not in CHECKS:
            raise ConfigError(
                f"tolerance for unknown identity {name!r}", field="tolerances"
            )
    fv = doc["integrator"].get("frame_vectors")
    if fv is not None and fv > n:
        raise ConfigError(
            f"frame_vectors {fv} exceeds dimension {n}", field="integrator.frame_vectors"
        )


def build_curve_spec(doc: dict, samples_override: int | None = None) -> CurveSpec:
    cur = doc["curve"]
    domain = tuple(
        _const_value(v, f"curve.domain[{i}]") for i, v in enumerate(cur["domain"])
    )
    try:
        spec = CurveSpec.from_strings(
            cur["components"],
            domain,
            cur.get("topology", "open"),
            samples_override or cur.get("samples", 256),
        )
        spec.validate()
    except ParseError as exc:
        raise ConfigError(f"bad expression: {exc}", field="curve.components") from exc
    except (ValueError, CurveFlowError) as exc:
        raise ConfigError(str(exc), field="curve") from exc
    return spec


def build_flow(doc: dict) -> FlowSpec:
    fl = doc["flow"]
    try:
        if fl["mode"] == "explicit":
            flow = FlowSpec.explicit(fl["speeds"], name=fl.get("name", doc["name"]))
        else:
            flow = FlowSpec.inextensible(
                fl["speeds"], f1_at_0=fl.get("f1_at_0", 0.0), name=fl.get("name", doc["name"])
            )
        flow.validate(doc["dimension"])
    except ParseError as exc:
        raise ConfigError(f"bad expression: {exc}", field="flow.speeds") from exc
    except ValueError as exc:
        raise ConfigError(str(exc), field="flow") from exc
    return flow


def execute(
    doc: dict,
    samples: int | None = None,
    dt: float | None = None,
    steps: int | None = None,
) -> tuple[Trajectory, list[VerificationReport]]:
    """Evolve a scenario (optionally at overridden resolution) and run its checks."""
    spec = build_curve_spec(doc, samples)
    flow = build_flow(doc)
    integ = doc["integrator"]
    steps = steps or integ["steps"]
    curve = sample(spec)
    state0 = initial_state(curve, flow, integ.get("frame_vectors"))
    if dt is None:
        dt = integ.get("dt")
    if dt is None:
        horizon = integ.get("t_horizon")
        dt = horizon / steps if horizon else default_dt(state0)
    traj = evolve(state0, flow, dt, steps, integ.get("t_horizon"))
    tolerances = doc.get("tolerances", {})
    reports = [
        CHECKS[name](traj, tolerances.get(name)) for name in doc.get("checks", [])
    ]
    return traj, reports


# --------------------------------------------------------------------------
# Output files


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.15g}"


def write_timeseries(traj: Trajectory, out_dir: Path) -> Path:
    lines = [TIMESERIES_HEADER]
    baseline = traj.diagnostics[0].total_arclength
    drift = 0.0
    for d in traj.diagnostics:
        drift = max(drift, abs(d.total_arclength - baseline))
        lines.append(
            ",".join(
                [
                    str(d.step),
                    _fmt(d.t),
                    _fmt(d.total_arclength),
                    _fmt(drift),
                    _fmt(d.min_v),
                    _fmt(d.max_v),
                    _fmt(d.max_k1),
                ]
            )
        )
    path = out_dir / "timeseries.csv"
    _write_text(path, "\n".join(lines) + "\n")
    return path


def write_frames(traj: Trajectory, steps: list[int], out_dir: Path) -> list[Path]:
    paths = []
    for step in steps:
        if not 0 <= step < len(traj.states):
            raise ConfigError(
                f"frame step {step} outside [0, {len(traj.states) - 1}]", field="output.frames_at"
            )
        st = traj.states[step]
        payload = {
            "step": step,
            "t": st.t,
            "points": st.curve.points.tolist(),
            "arclength": st.curve.s.tolist(),
            "speeds": st.curve.speeds.tolist(),
            "total_arclength": st.curve.total_length,
            "frame": st.frenet.frame.tolist(),
            "signs": st.frenet.signs.tolist(),
            "curvatures": st.frenet.curvatures.tolist(),
            "speed_values": st.f_values.tolist(),
        }
        path = out_dir / f"frames_{step}.json"
        _write_text(path, _json_text(payload))
        paths.append(path)
    return paths


def write_report(name: str, reports: list[VerificationReport], out_dir: Path) -> bool:
    all_pass = all(r.passed for r in reports)
    payload = {
        "scenario": name,
        "checks": [r.to_json_dict() for r in reports],
        "pass": all_pass,
    }
    _write_text(out_dir / "report.json", _json_text(payload))
    return all_pass


# --------------------------------------------------------------------------
# Subcommands


def cmd_run(args) -> int:
    try:
        doc = load_scenario(args.scenario)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out or doc.get("output", {}).get("directory", "."))
    try:
        traj, reports = execute(doc)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EvolutionError as exc:
        print(f"numerical breakdown: {exc}", file=sys.stderr)
        if exc.trajectory is not None and exc.trajectory.diagnostics:
            write_timeseries(exc.trajectory, out_dir)
        return EXIT_NUMERICAL
    except CurveFlowError as exc:
        print(f"numerical breakdown: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    output = doc.get("output", {})
    formats = output.get("formats", ["csv", "json"])
    if "csv" in formats:
        write_timeseries(traj, out_dir)
    frames_at = output.get("frames_at", [])
    if frames_at and "json" in formats:
        try:
            write_frames(traj, frames_at, out_dir)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    if reports:
        all_pass = True
        if "json" in formats:
            all_pass = write_report(doc["name"], reports, out_dir)
        else:
            all_pass = all(r.passed for r in reports)
        for r in reports:
            worst = max(r.residuals[-1].values()) if r.residuals[-1] else 0.0
            print(f"{'PASS' if r.passed else 'FAIL'} {r.identity} (max residual {worst:.3e})")
        return EXIT_OK if all_pass else EXIT_CHECK_FAILED
    return EXIT_OK


def _thread_count(levels: int) -> int:
    raw = os.environ.get("CURVEFLOW_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = min(os.cpu_count() or 1, levels)
    return max(1, min(n, levels))


def cmd_convergence(args) -> int:
    if args.levels < 2:
        print("config error: --levels must be >= 2", file=sys.stderr)
        return EXIT_CONFIG
    try:
        doc = load_scenario(args.scenario)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not doc.get("checks"):
        print("config error: scenario requests no checks", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out or doc.get("output", {}).get("directory", "."))
    base_n = doc["curve"].get("samples", 256)
    base_steps = doc["integrator"]["steps"]
    base_dt = doc["integrator"].get("dt")
    if base_dt is None:
        horizon = doc["integrator"].get("t_horizon")
        if horizon is None:
            print("config error: convergence needs integrator.dt or t_horizon", file=sys.stderr)
            return EXIT_CONFIG
        base_dt = horizon / base_steps

    def level(l: int) -> list[VerificationReport]:
        _, reports = execute(
            doc, samples=base_n * 2**l, dt=base_dt / 2**l, steps=base_steps * 2**l
        )
        return reports

    try:
        workers = _thread_count(args.levels)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                per_level = list(pool.map(level, range(args.levels)))
        else:
            per_level = [level(l) for l in range(args.levels)]
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CurveFlowError as exc:
        print(f"numerical breakdown: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    merged = [
        merge_reports([per_level[l][i] for l in range(args.levels)])
        for i in range(len(per_level[0]))
    ]
    lines = ["identity,residual,level,samples,dt,value,fitted_order"]
    for rep in merged:
        for name in sorted(rep.residuals[-1]):
            order = rep.orders.get(name)
            order_text = "n/a" if order is None else _fmt(order)
            for l, ((n_s, dt_l), row) in enumerate(zip(rep.resolutions, rep.residuals)):
                lines.append(
                    ",".join(
                        [rep.identity, name, str(l), str(n_s), _fmt(dt_l), _fmt(row[name]), order_text]
                    )
                )
    _write_text(out_dir / "convergence.csv", "\n".join(lines) + "\n")
    write_report(doc["name"], merged, out_dir)
    for rep in merged:
        shown = {k: v for k, v in rep.orders.items() if k in rep.gated}
        print(f"{'PASS' if rep.passed else 'FAIL'} {rep.identity} orders="
              f"{ {k: ('n/a' if v is None else round(v, 2)) for k, v in shown.items()} }")
    return EXIT_OK if all(r.passed for r in merged) else EXIT_CHECK_FAILED


def cmd_frenet(args) -> int:
    try:
        doc = load_scenario(args.scenario)
        spec = build_curve_spec(doc)
        curve = sample(spec)
        fd = frenet_apparatus(curve, doc["integrator"].get("frame_vectors"))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CurveFlowError as exc:
        print(f"numerical breakdown: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    out_dir = Path(args.out or doc.get("output", {}).get("directory", "."))
    residuals = frenet_residuals(curve, fd)
    payload = {
        "scenario": doc["name"],
        "dimension": curve.n,
        "samples": curve.samples,
        "topology": "closed" if curve.closed else "open",
        "causal_character": curve.char.value,
        "total_arclength": curve.total_length,
        "quadrature": curve.quadrature,
        "signs": fd.signs.tolist(),
        "completed_last": fd.completed_last,
        "points": curve.points.tolist(),
        "arclength": curve.s.tolist(),
        "speeds": curve.speeds.tolist(),
        "frame": fd.frame.tolist(),
        "curvatures": fd.curvatures.tolist(),
        "stencil_curvatures": stencil_curvatures(curve, fd).tolist(),
        "frenet_residual_max": float(residuals.max()),
    }
    _write_text(out_dir / "frenet.json", _json_text(payload))
    print(f"frenet apparatus written for {doc['name']} "
          f"(signs {fd.signs.tolist()}, max residual {residuals.max():.3e})")
    return EXIT_OK


def cmd_list_catalog(_args) -> int:
    print("curves:")
    for name in catalog.curve_names():
        info = catalog.curve_info(name)
        comps = ", ".join(info["components"])
        print(f"  {name:16s} E_1^{len(info['components'])} {info['topology']:6s} "
              f"({comps}) on [{info['domain'][0]:.6g}, {info['domain'][1]:.6g}]  - {info['summary']}")
    print("flows:")
    for name in catalog.flow_names():
        info = catalog.flow_info(name)
        print(f"  {name:20s} {info['mode']:12s} - {info['summary']}")
    print("bundled scenarios:")
    base = resources.files("curveflow").joinpath("scenarios")
    for entry in sorted(p.name for p in base.iterdir() if p.name.endswith(".json")):
        print(f"  {entry}")
    print("identities:")
    for name in sorted(CHECKS):
        print(f"  {name}")
    return EXIT_OK


def bundled_scenario_path(name: str) -> Path:
    """Filesystem path of a bundled scenario (for tests and docs)."""
    return Path(str(resources.files("curveflow").joinpath("scenarios", name)))


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="curveflow",
        description="Simulate and verify frame-decomposed flows of non-null curves "
        "under an index-1 metric.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="evolve a scenario and run its checks")
    p_run.add_argument("scenario", help="scenario JSON file")
    p_run.add_argument("--out", help="output directory (default: scenario's or cwd)")
    p_run.set_defaults(func=cmd_run)

    p_conv = sub.add_parser("convergence", help="rerun at refined resolutions and fit orders")
    p_conv.add_argument("scenario")
    p_conv.add_argument("--levels", type=int, required=True, help="number of refinement levels (>= 2)")
    p_conv.add_argument("--out")
    p_conv.set_defaults(func=cmd_convergence)

    p_fre = sub.add_parser("frenet", help="dump the frame apparatus of the scenario's curve")
    p_fre.add_argument("scenario")
    p_fre.add_argument("--out")
    p_fre.set_defaults(func=cmd_frenet)

    p_list = sub.add_parser("list-catalog", help="list bundled curves, flows and scenarios")
    p_list.set_defaults(func=cmd_list_catalog)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
