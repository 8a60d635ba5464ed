"""Command-line entry point: ``rtwalk {spectrum,verify,bounds,simulate,sweep}``.

Exit codes: 0 success, 1 failed check, 2 usage error, 3 resource cap.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

import mpmath

from . import __version__
from .errors import CapExceededError, EmptyWalkError
from .mixing import (
    DEFAULT_STATE_CAP,
    MEANINGS,
    CurveRequest,
    chi_lower_term,
    chi_upper_bound,
    cutoff_times,
    fast_mix_no_cutoff_lower,
    format_real,
    stationary_small_fixed_point_prob,
    steps,
    sweep,
    tv_lower_bound_value,
)
from .montecarlo import BLOCK_SIZE, SimulationConfig, default_workers, run_statistics
from .restricted import RestrictionVector, TwoStepParams
from .spectrum import DEFAULT_CHAIN_CAP, full_spectrum, kbig_certified, spectrum_rows

CAP_ENV = "RTWALK_CAP"

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3

# config keys named after SimulationConfig fields map onto the flags
CONFIG_ALIASES = {"step_rule": "rule", "record": "t_grid", "restriction": "b"}


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    parameters: Dict[str, Any]
    seed: Optional[int] = None
    version: str = __version__
    outputs: List[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"command": self.command, "parameters": self.parameters, "seed": self.seed,
                "version": self.version, "outputs": self.outputs}


def _jsonable(x: Any) -> Any:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, mpmath.mpf):
        return format_real(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


# ---- argument parsing ----

def parse_ints(text: str) -> List[int]:
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def parse_floats(text: str) -> List[float]:
    try:
        return [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def parse_grid(text: str) -> List[int]:
    """``"a:b"`` or ``"a:b:step"`` (inclusive) or a comma list; empty string gives no points."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        pieces = text.split(":")
        if len(pieces) not in (2, 3):
            raise UsageError(f"bad grid {text!r}")
        try:
            lo, hi = int(pieces[0]), int(pieces[1])
            stride = int(pieces[2]) if len(pieces) == 3 else 1
        except ValueError:
            raise UsageError(f"bad grid {text!r}") from None
        if stride <= 0:
            raise UsageError("grid step must be positive")
        return list(range(lo, hi + 1, stride))
    grid = parse_ints(text)
    if any(t < 0 for t in grid):
        raise UsageError("grid times must be nonnegative")
    return grid


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file whose keys mirror the flag names")
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--cap", type=int, default=None)


def _target(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int)
    p.add_argument("--f", type=int)
    p.add_argument("--g", type=int)
    p.add_argument("--b", type=str, help="restriction vector, e.g. 1,1,1,3,3")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rtwalk", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="full spectrum of one restriction vector")
    _target(sp)
    _common(sp)

    vp = sub.add_parser("verify", help="run the self-check suites")
    vp.add_argument("--level", choices=("quick", "full"), default="quick")
    _common(vp)

    bp = sub.add_parser("bounds", help="cutoff times and bound curves for two-step parameters")
    _target(bp)
    bp.add_argument("--c", type=str, help="comma-separated window offsets")
    bp.add_argument("--t-grid", dest="t_grid", type=str)
    _common(bp)

    mp = sub.add_parser("simulate", help="Monte-Carlo statistic series")
    _target(mp)
    mp.add_argument("--t", type=int)
    mp.add_argument("--t-grid", dest="t_grid", type=str, help="recorded times (default all)")
    mp.add_argument("--reps", type=int)
    mp.add_argument("--seed", type=int)
    mp.add_argument("--rule", choices=("direct", "rejection"), default=None)
    mp.add_argument("--stats", type=str, help="comma-separated statistic names")
    mp.add_argument("--block-size", dest="block_size", type=int)
    _common(mp)

    wp = sub.add_parser("sweep", help="distance or bound curves over a time grid")
    _target(wp)
    wp.add_argument("--meaning", type=str, help="comma-separated curve kinds: " + ", ".join(MEANINGS))
    wp.add_argument("--t-grid", dest="t_grid", type=str)
    wp.add_argument("--kind", choices=("lazy", "uniform"), default=None)
    wp.add_argument("--exact", action="store_true", default=None)
    _common(wp)
    return parser


def merge_config(args: argparse.Namespace) -> argparse.Namespace:
    """Flags given on the command line win over keys in the config file."""
    if not getattr(args, "config", None):
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    cfg = dict(cfg)
    nested = cfg.pop("params", None)
    if isinstance(nested, dict):
        for k in ("n", "f", "g"):
            if k in nested:
                cfg.setdefault(k, nested[k])
    elif nested is not None:
        raise UsageError("config key 'params' must be an object with n, f, g")
    for key, value in cfg.items():
        attr = CONFIG_ALIASES.get(key, key).replace("-", "_")
        if not hasattr(args, attr) or attr in ("command", "config"):
            raise UsageError(f"unknown config key {key!r}")
        if getattr(args, attr) is None:
            if attr in ("b", "c", "t_grid", "meaning", "stats") and isinstance(value, list):
                value = ",".join(str(v) for v in value)
            setattr(args, attr, value)
    return args


def resolve_cap(args: argparse.Namespace, default: int) -> int:
    if args.cap is not None:
        return args.cap
    env = os.environ.get(CAP_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{CAP_ENV} must be an integer") from None
    return default


def resolve_target(args: argparse.Namespace, need_two_step: bool = False):
    """Returns ``(restriction, params)``; ``params`` is None for a general vector."""
    if args.b is not None:
        if any(getattr(args, k) is not None for k in ("n", "f", "g")):
            raise UsageError("give either --b or --n/--f/--g, not both")
        if need_two_step:
            raise UsageError("this command needs --n --f --g")
        values = parse_ints(args.b) if isinstance(args.b, str) else list(args.b)
        try:
            b = RestrictionVector(values, strict=False)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if not b.is_nonempty:
            raise UsageError(f"invalid vector: {b.emptiness_reason()}")
        return b, None
    if None in (args.n, args.f, args.g):
        raise UsageError("give --b or all of --n --f --g")
    try:
        params = TwoStepParams(args.n, args.f, args.g)
    except ValueError as exc:
        raise UsageError(f"invalid parameters: {exc}") from None
    return params.vector(), params


# ---- output ----

def emit(args: argparse.Namespace, manifest: RunManifest, result: dict,
         csv_rows: Optional[Sequence[Sequence[Any]]], csv_header: Sequence[str]) -> None:
    fmt = args.format or "json"
    if args.out:
        manifest.outputs = [args.out]
    if fmt == "json":
        text = json.dumps({"manifest": manifest.to_json(), "result": _jsonable(result)},
                          indent=2, sort_keys=False) + "\n"
    else:
        buf = io.StringIO()
        buf.write("# manifest: " + json.dumps(manifest.to_json(), sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(csv_header)
        for row in csv_rows or []:
            w.writerow([_jsonable(x) for x in row])
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _params_dict(args: argparse.Namespace, keys: Sequence[str]) -> Dict[str, Any]:
    # worker count is left out: it never changes results
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


# ---- commands ----

def cmd_spectrum(args: argparse.Namespace) -> int:
    b, params = resolve_target(args)
    cap = resolve_cap(args, DEFAULT_CHAIN_CAP)
    spec = full_spectrum(b, cap=cap)
    summary = spec.summary()
    manifest = RunManifest("spectrum", {"b": b.to_json(), "cap": cap,
                                        **({"params": params.to_json()} if params else {})})
    result = {
        "b": b.to_json(),
        "summary": summary,
        "lines": [{"eig_u": e, "eig_p": _jsonable(Fraction(num, den)), "dim": d,
                   "chain": line.chain.to_json() if line.chain else None}
                  for (e, num, den, d), line in zip(spectrum_rows(spec), spec.lines)],
    }
    emit(args, manifest, result, spectrum_rows(spec), ["eig_u", "eig_p_num", "eig_p_den", "dim"])
    print(f"|S|={summary['size']} delta={summary['delta']} max={summary['max_eig_u']} "
          f"second={summary['second_eig_u']}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    from .verify import run_suite

    results = run_suite(args.level)
    passed = all(r.passed for r in results)
    manifest = RunManifest("verify", {"level": args.level})
    # timings are left out of the written report so reruns are byte-identical
    checks = [{k: v for k, v in r.to_json().items() if k != "seconds"} for r in results]
    emit(args, manifest, {"level": args.level, "passed": passed, "checks": checks},
         [(r.name, r.passed, r.detail) for r in results], ["check", "passed", "detail"])
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} ({r.seconds:.2f}s): {r.detail}",
              file=sys.stderr)
    return EXIT_OK if passed else EXIT_CHECK


def cmd_bounds(args: argparse.Namespace) -> int:
    _, params = resolve_target(args, need_two_step=True)
    if params.f < 2:
        raise UsageError("bounds need f >= 2")
    cs = parse_floats(args.c) if args.c is not None else [0.0]
    evaluations = []
    rows: List[List[Any]] = []
    for c in cs:
        times = cutoff_times(params, c)
        t_up, t_low = steps(times.t_chi_upper), steps(times.t_chi_lower)
        entry: Dict[str, Any] = {"times": times.to_json()}
        if c == 0:
            # upper and lower times coincide: report the window midpoint only
            entry["midpoint"] = times.t_chi_upper
            rows.append([times.t_chi_upper, repr(times.t_chi_upper), "midpoint"])
        else:
            entry["chi_upper_bound"] = {"t": t_up, "value": chi_upper_bound(params, t_up)}
            entry["chi_lower_term_sqrt"] = {"t": t_low,
                                            "value": mpmath.sqrt(chi_lower_term(params, t_low))}
            entry["tv_lower_bound_limit"] = tv_lower_bound_value(params.g / params.f, c)
            rows.append([t_up, entry["chi_upper_bound"]["value"], f"chi-upper-bound(c={c:g})"])
            rows.append([t_low, entry["chi_lower_term_sqrt"]["value"], f"chi-lower-term(c={c:g})"])
        evaluations.append(entry)
    exact_a, approx_a = stationary_small_fixed_point_prob(params)
    certified, ceiling = kbig_certified(params)
    result: Dict[str, Any] = {
        "params": params.to_json(),
        "denominator": params.denominator,
        "evaluations": evaluations,
        "stationary_small_fixed_point_prob": {"exact": exact_a, "approx": approx_a},
        "kbig_constant_certified": {"certified": certified, "ceiling": ceiling},
        "curves": [],
    }
    grid = parse_grid(args.t_grid) if args.t_grid is not None else None
    requests = []
    if grid is not None:
        requests += [CurveRequest("chi-upper-bound", tuple(grid), params=params),
                     CurveRequest("chi-lower-term", tuple(grid), params=params)]
    if params.g == 1:
        fast = cutoff_times(params, 0).t_fast_mix
        result["t_fast_mix"] = fast
        fast_grid = grid if grid is not None else [steps(fast * k / 4) for k in range(13)]
        requests.append(CurveRequest("tv-lower-bound", tuple(fast_grid), params=params))
    for res in sweep(requests):
        if res.error:
            result["curves"].append({"meaning": res.request.meaning, "error": res.error})
            continue
        result["curves"].append({"meaning": res.curve.meaning,
                                 "points": [[t, v] for t, v in res.curve.points]})
        rows.extend([t, v, res.curve.meaning] for t, v in res.curve.points)
    manifest = RunManifest("bounds", {"params": params.to_json(), "c": cs, "t_grid": grid})
    emit(args, manifest, result, rows, ["t", "value", "kind"])
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    b, params = resolve_target(args)
    if args.t is None or args.reps is None:
        raise UsageError("simulate needs --t and --reps")
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    if args.t < 0:
        raise UsageError("--t must be nonnegative")
    seed = args.seed if args.seed is not None else 0
    rule = args.rule or "direct"
    record = parse_grid(args.t_grid) if args.t_grid is not None else None
    stats = [x for x in args.stats.split(",") if x] if args.stats else None
    block = args.block_size if args.block_size is not None else BLOCK_SIZE
    try:
        cfg = SimulationConfig.make(params if params else b, args.t, args.reps, seed, rule, record,
                                    stats, block)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    workers = args.workers if args.workers is not None else default_workers()
    series = run_statistics(cfg, workers=workers)
    manifest = RunManifest("simulate", cfg.to_json(), seed=seed)
    rows = []
    for name in series.mean:
        for k, t in enumerate(series.times):
            rows.append([int(t), name, repr(float(series.mean[name][k])),
                         repr(float(series.ci99[name][k]))])
    emit(args, manifest, {"config": cfg.to_json(), **series.to_json()}, rows,
         ["t", "statistic", "mean", "ci99"])
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    b, params = resolve_target(args)
    if not args.meaning:
        raise UsageError("sweep needs --meaning")
    meanings = [m for m in args.meaning.split(",") if m]
    unknown = [m for m in meanings if m not in MEANINGS]
    if unknown:
        raise UsageError(f"unknown meaning(s) {unknown}; choose from {list(MEANINGS)}")
    grid = parse_grid(args.t_grid) if args.t_grid is not None else list(range(11))
    kind = args.kind or "lazy"
    cap = resolve_cap(args, DEFAULT_STATE_CAP)
    requests = [CurveRequest(m, tuple(grid), restriction=b, params=params, kind=kind,
                             exact=bool(args.exact), cap=cap) for m in meanings]
    results = sweep(requests)
    curves, rows, errors = [], [], []
    for res in results:
        if res.error:
            errors.append(res.error)
            curves.append({"meaning": res.request.meaning, "error": res.error})
            continue
        curves.append({"meaning": res.curve.meaning, "label": res.curve.label,
                       "points": [[t, v] for t, v in res.curve.points]})
        rows.extend(res.curve.to_rows())
    manifest = RunManifest("sweep", {"b": b.to_json(), "meanings": meanings, "t_grid": grid,
                                     "kind": kind, "exact": bool(args.exact), "cap": cap})
    emit(args, manifest, {"curves": curves}, rows, ["t", "value", "kind"])
    if errors and any("CapExceeded" in e for e in errors):
        return EXIT_CAP
    return EXIT_CHECK if errors else EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "verify": cmd_verify,
    "bounds": cmd_bounds,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        args = merge_config(args)
        if args.format is not None and args.format not in ("csv", "json"):
            raise UsageError("--format must be csv or json")
        if args.workers is not None and args.workers < 1:
            raise UsageError("--workers must be positive")
        if args.command == "verify" and args.level not in ("quick", "full"):
            raise UsageError(f"unknown level {args.level!r}")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"rtwalk: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EmptyWalkError as exc:
        print(f"rtwalk: error: invalid vector: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapExceededError as exc:
        print(f"rtwalk: resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
