"""Command-line front end.

Subcommands ``variational``, ``quantum``, ``scan`` and ``phase-diagram`` read
a JSON config and write a JSON report or a CSV table. Every output written
with ``--out`` gets a ``<out>.manifest`` sidecar; ``rerun`` replays one.

All energies and observables are per particle.

Exit codes: 0 success, 2 config error, 3 convergence failure.
"""
from __future__ import annotations

import argparse
import datetime as dt
import io
import json
import math
import os
import sys

from . import __version__
from .model import ConfigError, validate
from .phasediag import ScanSpec, grid_2d, scan_1d
from .quantum import NoConvergence, converge, ground_state, quantum_observables
from .variational import EqualDetuningRequired, classify, observables, point_observables

EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
CONFIG_KEYS = {"kind", "Omega", "omega", "mu", "Na"}
CSV_HEADER = "param,region,energy,nu1,nu2,A11,A22,A33,A44"


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.9g}"


def _num(x):
    """JSON-safe number at the output precision (inf/nan become null)."""
    if x is None or not math.isfinite(x):
        return None
    return float(f"{x:.9g}")


def parse_config(data: dict):
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object", field="<root>")
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}", field=unknown[0])
    missing = sorted(CONFIG_KEYS - {"Na"} - set(data))
    if missing:
        raise ConfigError(f"missing config key(s): {', '.join(missing)}", field=missing[0])
    if not isinstance(data["mu"], dict):
        raise ConfigError("mu must be an object keyed by level pairs, e.g. '13'", field="mu")
    try:
        return validate(data["kind"], data["Omega"], data["omega"], data["mu"], data.get("Na", 1))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed config value: {exc}", field="<value>") from exc


def load_config(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}", field="--config") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}", field="--config") from exc
    return parse_config(data)


def _obs_dict(obs) -> dict:
    return {k: _num(v) for k, v in obs.as_dict().items()}


# ---------------------------------------------------------------------------
# commands; each returns (text, exit_code, convergence metadata)


def run_variational(config, params):
    report = classify(config)
    if report.method == "analytic":
        obs = observables(config, report.label)
    else:
        obs = point_observables(config, report.point)
    pt = report.point
    doc = {
        "kind": config.kind.value,
        "region": report.label.value,
        "energy": _num(report.energy),
        "method": report.method,
        "tie": report.tie,
        "tied_regions": [r.value for r in report.tied_labels] if report.tie else [],
        "critical_point": {
            "chart": pt.chart.name,
            "r": [_num(v) for v in pt.r],
            "rho": [_num(v) for v in pt.rho],
            "theta": [_num(v) for v in pt.theta],
            "phi": [_num(v) for v in pt.phi],
        },
        "observables": _obs_dict(obs),
        "regions": {
            r.value: {"energy": _num(e.energy), "valid": e.valid} for r, e in report.energies.items()
        },
    }
    return json.dumps(doc, indent=2) + "\n", 0, None


def run_quantum(config, params):
    if params.get("mmax") is not None:
        result = ground_state(config, params["mmax"])
    else:
        result = converge(config, params["tol"], params["mstart"], params["mstep"], params["mcap"])
    obs = quantum_observables(config, result)
    doc = {
        "kind": config.kind.value,
        "Na": config.Na,
        "energy": _num(result.energy_per_particle),
        "sector": result.sector.label,
        "sector_energies": {k: _num(v / config.Na) for k, v in result.sector_energies.items()},
        "tie": result.tie,
        "M_max": result.M_max,
        "converged": result.converged,
        "observables": _obs_dict(obs),
    }
    meta = {"M_max": result.M_max, "converged": result.converged}
    if params.get("mmax") is None:
        meta["tol"] = params["tol"]
    code = 0 if result.converged else EXIT_CONVERGENCE
    return json.dumps(doc, indent=2) + "\n", code, meta


def _quantum_opts(params):
    return dict(tol=params["tol"], M_cap=params["mcap"], M_start=params["mstart"], M_step=params["mstep"])


def run_scan(config, params):
    spec = ScanSpec(
        config,
        (params["vary"],),
        ((params["from"], params["to"]),),
        (params["steps"],),
        params["method"],
        **_quantum_opts(params),
    )
    rows = scan_1d(spec, workers=params.get("workers", 1))
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    code = 0
    m_used = []
    for row in rows:
        if row.error is not None:
            region = "ERROR"
            values = [math.nan] * 7
            code = EXIT_CONVERGENCE if "Converg" in row.error else code
        else:
            region = row.region.value if row.region is not None else ""
            values = list(row.obs.as_dict().values())
        if not row.converged:
            code = EXIT_CONVERGENCE
        if row.M_max is not None:
            m_used.append(row.M_max)
        out.write(",".join([fmt(row.param), region, *(fmt(v) for v in values)]) + "\n")
    meta = None
    if params["method"] == "quantum":
        meta = {
            "tol": params["tol"],
            "M_max": max(m_used) if m_used else None,
            "converged": all(r.converged and r.error is None for r in rows),
        }
    return out.getvalue(), code, meta


def _pair(text: str, name: str, cast=float):
    parts = str(text).split(",")
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise ConfigError(f"{name} takes one value or two comma-separated values", field=name)
    try:
        return tuple(cast(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}", field=name) from exc


def run_phase_diagram(config, params):
    paths = tuple(p.strip() for p in params["vary"].split(","))
    if len(paths) != 2:
        raise ConfigError("--vary needs two comma-separated parameter paths", field="--vary")
    grid = str(params["grid"]).lower().split("x")
    try:
        shape = tuple(int(g) for g in grid)
    except ValueError:
        shape = ()
    if len(shape) != 2:
        raise ConfigError("--grid must look like RxC, e.g. 101x101", field="--grid")
    lo = _pair(params["from"], "--from")
    hi = _pair(params["to"], "--to")
    spec = ScanSpec(config, paths, tuple(zip(lo, hi)), shape, params["method"], **_quantum_opts(params))
    rows = grid_2d(spec, workers=params.get("workers", 1))
    out = io.StringIO()
    out.write("p,q,region,energy\n")
    for row in rows:
        if row.error is not None:
            region = "ERROR"
        elif row.tied:
            region = "|".join(r.value for r in row.tied)
        else:
            region = row.region.value if row.region is not None else ""
        out.write(f"{fmt(row.p)},{fmt(row.q)},{region},{fmt(row.energy)}\n")
    return out.getvalue(), 0, None


COMMANDS = {
    "variational": run_variational,
    "quantum": run_quantum,
    "scan": run_scan,
    "phase-diagram": run_phase_diagram,
}


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = dt.datetime.fromtimestamp(int(epoch), dt.timezone.utc) if epoch else dt.datetime.now(dt.timezone.utc)
    return when.strftime("%Y-%m-%dT%H:%M:%SZ")


def build_manifest(command, config, params, meta) -> dict:
    manifest = {
        "tool": "fourlevel",
        "version": __version__,
        "command": command,
        "config": config.to_dict(),
        "parameters": params,
        "timestamp": _timestamp(),
    }
    if meta is not None:
        manifest["convergence"] = meta
    return manifest


def execute(command: str, config, params: dict, out_path: str | None) -> int:
    text, code, meta = COMMANDS[command](config, params)
    manifest = json.dumps(build_manifest(command, config, params, meta), indent=2) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        with open(out_path + ".manifest", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(manifest)
    else:
        sys.stdout.write(text)
        sys.stderr.write(manifest)
    return code


def _add_quantum_flags(p, with_mmax=False):
    if with_mmax:
        p.add_argument("--mmax", type=int, help="fixed truncation M_max (skips the convergence loop)")
    p.add_argument("--tol", type=float, default=1e-10, help="convergence tolerance on E_g")
    p.add_argument("--mcap", type=int, default=120, help="largest M_max tried")
    p.add_argument("--mstart", type=int, default=10)
    p.add_argument("--mstep", type=int, default=10)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fourlevel", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON model config")
        p.add_argument("--out", help="output path (default: stdout)")

    p = sub.add_parser("variational", help="variational region, energy, critical point and observables")
    common(p)
    p = sub.add_parser("quantum", help="exact ground state by sector diagonalization")
    common(p)
    _add_quantum_flags(p, with_mmax=True)
    p = sub.add_parser("scan", help="1-D parameter scan to CSV")
    common(p)
    p.add_argument("--vary", required=True, help="parameter path, e.g. mu.24")
    p.add_argument("--from", dest="from_", type=float, required=True)
    p.add_argument("--to", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--method", choices=("variational", "quantum"), default="variational")
    p.add_argument("--workers", type=int, default=1)
    _add_quantum_flags(p)
    p = sub.add_parser("phase-diagram", help="2-D region grid to CSV")
    common(p)
    p.add_argument("--vary", required=True, help="two parameter paths, e.g. mu.13,mu.23")
    p.add_argument("--grid", required=True, help="RxC grid size, e.g. 101x101")
    p.add_argument("--from", dest="from_", default="0", help="lower bound(s), 'a' or 'a,b'")
    p.add_argument("--to", default="1", help="upper bound(s), 'a' or 'a,b'")
    p.add_argument("--method", choices=("variational", "quantum"), default="variational")
    p.add_argument("--workers", type=int, default=1)
    _add_quantum_flags(p)
    p = sub.add_parser("rerun", help="replay a run from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="output path (default: stdout)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "rerun":
            try:
                with open(args.manifest, encoding="utf-8") as fh:
                    manifest = json.load(fh)
                command, params = manifest["command"], manifest["parameters"]
                config = parse_config(manifest["config"])
            except (OSError, json.JSONDecodeError, KeyError) as exc:
                raise ConfigError(f"unusable manifest {args.manifest}: {exc}", field="manifest") from exc
            if command not in COMMANDS:
                raise ConfigError(f"unknown command {command!r} in manifest", field="command")
            return execute(command, config, params, args.out)
        config = load_config(args.config)
        params = {k: v for k, v in vars(args).items() if k not in ("command", "config", "out")}
        if "from_" in params:
            params["from"] = params.pop("from_")
        return execute(args.command, config, params, args.out)
    except ConfigError as exc:
        print(f"config error [{exc.field}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EqualDetuningRequired as exc:
        print(f"config error [omega]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoConvergence as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
