"""Command-line front end.

Commands
--------
region       rate-region constraints (JSON or CSV)
vertices     extreme points of the region
boundary     two-receiver upper boundary polyline (plot-ready)
convergence  finite-energy bounds against their unconstrained limits
verify       number-basis oracle suite against the Gaussian computation

Numeric output is printed with 9 significant digits by default; set
``BBC_CAPACITY_PRECISION`` to override.  Exit status: 0 on success, 1 on a
domain or usage error, 2 when a verification is inconclusive (truncation
budget not met).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

from . import fock, region
from .channel import BroadcastChannelSpec
from .fock import InconclusiveVerificationError

__all__ = ["RunConfig", "main", "run", "convergence_table"]

DEFAULT_PRECISION = 9


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse would sys.exit(2); route usage problems through exit code 1
    # so that 2 stays reserved for inconclusive verification
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    """Parsed invocation; one instance fully determines the output bytes."""

    command: str
    etas: tuple
    ns: object = "inf"            # "inf" or a float
    ordering: tuple = None
    cutoff: int = None
    points: int = 200
    ns_grid: tuple = ()
    output: str = None
    fmt: str = "json"


def _parse_floats(text: str, flag: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip() != "")
    except ValueError:
        raise UsageError(f"argument {flag}: expected comma-separated reals, got {text!r}")


def _parse_ns(text: str):
    if text.strip().lower() == "inf":
        return "inf"
    try:
        value = float(text)
    except ValueError:
        raise UsageError(f"argument --ns: expected a real or 'inf', got {text!r}")
    if value < 0 or math.isinf(value) or math.isnan(value):
        raise UsageError(f"argument --ns: expected a nonnegative real or 'inf', got {text!r}")
    return value


def _precision() -> int:
    raw = os.environ.get("BBC_CAPACITY_PRECISION")
    if raw is None:
        return DEFAULT_PRECISION
    try:
        p = int(raw)
    except ValueError:
        raise UsageError(f"BBC_CAPACITY_PRECISION must be an integer, got {raw!r}")
    if not 1 <= p <= 17:
        raise UsageError(f"BBC_CAPACITY_PRECISION must be in 1..17, got {p}")
    return p


def _fmt(x: float, prec: int) -> str:
    return f"{x:.{prec}g}"


def _round(x: float, prec: int) -> float:
    return float(f"{x:.{prec}g}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bbcap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, ns_default="inf"):
        p.add_argument("--etas", required=True,
                       help="receiver transmittances, comma-separated")
        p.add_argument("--ns", default=ns_default,
                       help="input photon number, or 'inf' for the unconstrained region")
        p.add_argument("--output", default=None, help="write to this file instead of stdout")
        p.add_argument("--format", dest="fmt", choices=("json", "csv"), default=None)

    common(sub.add_parser("region", help="rate-region constraints"))
    common(sub.add_parser("vertices", help="extreme points of the region"))
    p = sub.add_parser("boundary", help="two-receiver boundary polyline")
    common(p)
    p.add_argument("--points", type=int, default=200, help="minimum number of points")
    p = sub.add_parser("convergence", help="finite-energy bounds vs their limits")
    p.add_argument("--etas", required=True)
    p.add_argument("--ns-grid", dest="ns_grid", required=True,
                   help="input photon numbers, comma-separated")
    p.add_argument("--output", default=None)
    p.add_argument("--format", dest="fmt", choices=("json", "csv"), default=None)
    p = sub.add_parser("verify", help="number-basis oracle suite")
    p.add_argument("--etas", required=True)
    p.add_argument("--ns", required=True)
    p.add_argument("--cutoff", type=int, default=None,
                   help="photon-number cutoff (default: smallest meeting the tail budget)")
    p.add_argument("--ordering", default=None,
                   help="split ordering, e.g. E,B1,B2 (default: zero-weight labels first)")
    p.add_argument("--output", default=None)
    p.add_argument("--format", dest="fmt", choices=("json", "csv"), default=None)
    return parser


def parse_args(argv) -> RunConfig:
    ns_args = build_parser().parse_args(argv)
    etas = _parse_floats(ns_args.etas, "--etas")
    config = RunConfig(command=ns_args.command, etas=etas)
    if hasattr(ns_args, "ns"):
        config.ns = _parse_ns(str(ns_args.ns))
    if ns_args.command == "verify":
        if config.ns == "inf":
            raise UsageError("argument --ns: verification needs finite energy")
        config.cutoff = ns_args.cutoff
        if ns_args.ordering is not None:
            config.ordering = tuple(s.strip() for s in ns_args.ordering.split(","))
    if ns_args.command == "boundary":
        config.points = ns_args.points
    if ns_args.command == "convergence":
        config.ns_grid = _parse_floats(ns_args.ns_grid, "--ns-grid")
        if not config.ns_grid:
            raise UsageError("argument --ns-grid: needs at least one value")
    config.output = ns_args.output
    config.fmt = ns_args.fmt or ("csv" if ns_args.command == "boundary" else "json")
    return config


def convergence_table(etas, ns_grid) -> list:
    """Rows (ns, subset, inner bound, unconstrained bound, gap) for every T."""
    spec = BroadcastChannelSpec(tuple(etas))
    if spec.eta_total >= 1.0 - 1e-12:
        raise ValueError("unconstrained bounds are unbounded when the receivers take everything")
    for n_s in ns_grid:
        if n_s < 0 or not math.isfinite(n_s):
            raise ValueError(f"grid photon numbers must be finite and nonnegative, got {n_s!r}")
    rows = []
    for n_s in ns_grid:
        for t in region.nonempty_subsets(spec.m):
            inner = region.inner_bound_finite(spec, n_s, t)
            limit = region.asymptotic_bound(spec, t)
            rows.append(
                {
                    "ns": float(n_s),
                    "subset": sorted(t),
                    "inner_bound_bits": inner,
                    "asymptotic_bound_bits": limit,
                    "gap_bits": limit - inner,
                }
            )
    return rows


def _region_for(config: RunConfig):
    spec = BroadcastChannelSpec(config.etas)
    energy = region.UNCONSTRAINED if config.ns == "inf" else config.ns
    return region.capacity_region(spec, energy)


def _emit(text: str, output) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _run_region(config: RunConfig, prec: int) -> str:
    reg = _region_for(config)
    data = region.region_to_dict(reg, round_to=prec)
    if config.fmt == "json":
        return _json_text(data)
    lines = ["subset,bound_bits"]
    for entry in data["constraints"]:
        subset = "+".join(str(i) for i in entry["subset"])
        bound = "unbounded" if entry.get("unbounded") else _fmt(entry["bound_bits"], prec)
        lines.append(f"{subset},{bound}")
    return "\n".join(lines) + "\n"


def _run_vertices(config: RunConfig, prec: int) -> str:
    reg = _region_for(config)
    pts = region.vertices(reg)
    if config.fmt == "json":
        data = {
            "m": reg.m,
            "energy": reg.energy,
            "vertices": [[_round(x, prec) for x in p] for p in pts],
        }
        return _json_text(data)
    header = ",".join(f"r{i}_bits" for i in range(1, reg.m + 1))
    lines = [header] + [",".join(_fmt(x, prec) for x in p) for p in pts]
    return "\n".join(lines) + "\n"


def _run_boundary(config: RunConfig, prec: int) -> str:
    reg = _region_for(config)
    pts = region.boundary_2d(reg, config.points)
    if config.fmt == "json":
        return _json_text(
            {"points": [[_round(x, prec), _round(y, prec)] for x, y in pts]}
        )
    lines = ["r1_bits,r2_bits"] + [f"{_fmt(x, prec)},{_fmt(y, prec)}" for x, y in pts]
    return "\n".join(lines) + "\n"


def _run_convergence(config: RunConfig, prec: int) -> str:
    rows = convergence_table(config.etas, config.ns_grid)
    if config.fmt == "json":
        data = [
            {
                "ns": _round(r["ns"], prec),
                "subset": r["subset"],
                "inner_bound_bits": _round(r["inner_bound_bits"], prec),
                "asymptotic_bound_bits": _round(r["asymptotic_bound_bits"], prec),
                "gap_bits": _round(r["gap_bits"], prec),
            }
            for r in rows
        ]
        return _json_text(data)
    lines = ["ns,subset,inner_bound_bits,asymptotic_bound_bits,gap_bits"]
    for r in rows:
        subset = "+".join(str(i) for i in r["subset"])
        lines.append(
            ",".join(
                (
                    _fmt(r["ns"], prec),
                    subset,
                    _fmt(r["inner_bound_bits"], prec),
                    _fmt(r["asymptotic_bound_bits"], prec),
                    _fmt(r["gap_bits"], prec),
                )
            )
        )
    return "\n".join(lines) + "\n"


def _run_verify(config: RunConfig, prec: int) -> str:
    spec = BroadcastChannelSpec(config.etas)
    report = fock.verify_conditional_entropies(
        spec, config.ns, cutoff=config.cutoff, ordering=config.ordering
    )
    schmidt = [
        fock.schmidt_spectrum_check(eta, config.ns, cutoff=report.cutoff)
        for eta in spec.etas
    ]
    passed = report.passed and all(s.passed for s in schmidt)
    data = report.to_dict()
    data["schmidt"] = [s.to_dict() for s in schmidt]
    data["pass"] = passed

    def round_floats(obj):
        if isinstance(obj, float):
            return _round(obj, prec)
        if isinstance(obj, list):
            return [round_floats(x) for x in obj]
        if isinstance(obj, dict):
            return {k: round_floats(v) for k, v in obj.items()}
        return obj

    data = round_floats(data)
    if config.fmt == "json":
        return _json_text(data)
    lines = ["case,gaussian_bits,fock_bits,closed_form_bits,abs_dev,tail_mass,pass"]
    for c in data["cases"]:
        lines.append(
            ",".join(
                (
                    c["case"].replace(",", ";"),
                    _fmt(c["gaussian_bits"], prec),
                    _fmt(c["fock_bits"], prec),
                    _fmt(c["closed_form_bits"], prec),
                    _fmt(c["abs_dev"], prec),
                    _fmt(c["tail_mass"], prec),
                    str(c["pass"]).lower(),
                )
            )
        )
    return "\n".join(lines) + "\n"


_RUNNERS = {
    "region": _run_region,
    "vertices": _run_vertices,
    "boundary": _run_boundary,
    "convergence": _run_convergence,
    "verify": _run_verify,
}


def run(config: RunConfig) -> int:
    """Execute one parsed invocation; returns the process exit status."""
    try:
        text = _RUNNERS[config.command](config, _precision())
    except InconclusiveVerificationError as exc:
        sys.stderr.write(f"bbcap: inconclusive: {exc}\n")
        return 2
    except (ValueError, RuntimeError) as exc:
        sys.stderr.write(f"bbcap: error: {exc}\n")
        return 1
    _emit(text, config.output)
    return 0


def main(argv=None) -> int:
    try:
        config = parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"bbcap: usage error: {exc}\n")
        return 1
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
