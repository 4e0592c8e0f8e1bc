"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
import warnings
from typing import Any, Sequence

from .errors import DrawdownError
from .params import PARAM_KEYS, MarketParams, default_params, load_params
from .policy import (
    PolicyDiscontinuityWarning,
    PortfolioState,
    parse_strategy,
    policy_dispatch,
    policy_drawdown_prob,
    policy_occupation,
    policy_optimal,
    policy_ruin,
    strategy_label,
    value,
)
from .solver import DualFunction, solve

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2

SWEEP_HEADER = ("z", "psi", "pi_opt", "pi_ruin", "pi_ddprob", "pi_occupation")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        raise UsageError(message)


# -- argument helpers -------------------------------------------------------------
def _add_params(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("parameters (a file or inline flags, not both)")
    g.add_argument("--params", metavar="FILE", help="JSON file with keys r, mu, sigma, kappa, lam, alpha")
    for k in PARAM_KEYS:
        g.add_argument(f"--{k}", type=float, default=None)
    # Test hook: scale y_alpha after solving, leaving everything else intact.
    p.add_argument("--corrupt-yalpha", type=float, default=None, help=argparse.SUPPRESS)


def _add_output(p: argparse.ArgumentParser, default: str) -> None:
    p.add_argument("--out", metavar="FILE", help="write to FILE instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default=default)


def _add_state(p: argparse.ArgumentParser, w: float | None = None) -> None:
    p.add_argument("--w", type=float, default=w, required=w is None, help="wealth")
    p.add_argument("--m", type=float, default=1.0, help="running maximum wealth")
    p.add_argument("--x", type=float, default=0.0, help="drawdown time already accumulated")


def _add_sim(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--paths", type=int, default=200_000)
    p.add_argument("--horizon", type=float, default=None, help="years; default max(20/lam, 50)")
    p.add_argument("--estimator", choices=("discounted", "killed"), default="discounted")
    p.add_argument(
        "--scheme", choices=("interface", "euler"), default="interface",
        help="exact step across a volatility switch (default) or plain Euler",
    )


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lifetime-drawdown", description="Minimum expected lifetime spent in drawdown.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("solve", help="roots, free boundaries and residual diagnostics")
    _add_params(sp)
    _add_output(sp, "json")

    sp = sub.add_parser("value", help="minimum expected lifetime in drawdown at a state")
    _add_params(sp)
    _add_state(sp)
    _add_output(sp, "json")

    sp = sub.add_parser("policy", help="dollar amount held in the risky asset")
    _add_params(sp)
    _add_state(sp)
    sp.add_argument("--strategy", default="optimal", help="optimal|ruin|ddprob|occupation[:m]|const:<theta>")
    _add_output(sp, "json")

    sp = sub.add_parser("sweep", help="value and strategies per unit maximum over z in (0, 1]")
    _add_params(sp)
    sp.add_argument("--grid", type=int, default=100, help="number of z points")
    _add_output(sp, "csv")

    sp = sub.add_parser("simulate", help="Monte Carlo estimate under one strategy")
    _add_params(sp)
    _add_state(sp, w=1.0)
    _add_sim(sp)
    sp.add_argument("--strategy", default="optimal")
    _add_output(sp, "csv")

    sp = sub.add_parser("compare", help="several strategies on common random numbers")
    _add_params(sp)
    _add_state(sp, w=1.0)
    _add_sim(sp)
    sp.add_argument("--strategy", action="append", default=None, help="repeat for each strategy (default: optimal, ruin)")
    _add_output(sp, "csv")

    sp = sub.add_parser("verify", help="numerical certificates; exit 1 if any fails")
    _add_params(sp)
    sp.add_argument("--grid", type=int, default=500, help="points per residual grid")
    sp.add_argument("--paths", type=int, default=2_000, help="paths for the simulation cross-check (0 skips it)")
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--seed", type=int, default=0)
    _add_output(sp, "json")
    return ap


def _params(ns: argparse.Namespace) -> MarketParams:
    inline = {k: getattr(ns, k) for k in PARAM_KEYS if getattr(ns, k) is not None}
    if ns.params and inline:
        raise UsageError("give either --params or inline parameter flags, not both")
    if ns.params:
        return load_params(ns.params)
    if inline:
        return default_params().replace(**inline)
    return default_params()


def _dual(ns: argparse.Namespace) -> DualFunction:
    d = solve(_params(ns))
    if ns.corrupt_yalpha is not None:
        b = d.boundaries
        bad = dataclasses.replace(b, yalpha=b.yalpha * ns.corrupt_yalpha)
        d = DualFunction(d.params, d.roots, bad)
    return d


def _state(ns: argparse.Namespace) -> PortfolioState:
    return PortfolioState(ns.w, ns.m, ns.x)


# -- output ----------------------------------------------------------------------
def _fmt(v: Any) -> Any:
    return repr(v) if isinstance(v, float) else v


def _records_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _flatten(d: dict[str, Any], prefix: str = "") -> list[tuple[str, Any]]:
    out: list[tuple[str, Any]] = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out += _flatten(v, key + ".")
        else:
            out.append((key, v))
    return out


def _json(obj: Any) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def _emit(text: str, ns: argparse.Namespace) -> None:
    if getattr(ns, "out", None):
        with open(ns.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_mapping(obj: dict[str, Any], ns: argparse.Namespace) -> None:
    if ns.format == "json":
        _emit(_json(obj), ns)
    else:
        _emit(_records_csv(("key", "value"), _flatten(obj)), ns)


# -- commands ----------------------------------------------------------------------
def cmd_solve(ns: argparse.Namespace) -> int:
    _emit_mapping(_dual(ns).to_dict(), ns)
    return EXIT_OK


def cmd_value(ns: argparse.Namespace) -> int:
    s = _state(ns)
    _emit_mapping({"w": s.w, "m": s.m, "x": s.x, "psi": value(_dual(ns), s)}, ns)
    return EXIT_OK


def cmd_policy(ns: argparse.Namespace) -> int:
    d = _dual(ns)
    kind = parse_strategy(ns.strategy, ns.m)
    _state(ns)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PolicyDiscontinuityWarning)
        amount = policy_dispatch(kind, d, ns.w, ns.m)
    _emit_mapping({"strategy": strategy_label(kind), "w": ns.w, "m": ns.m, "pi": amount}, ns)
    return EXIT_OK


def sweep_rows(d: DualFunction, n: int) -> list[tuple[float, ...]]:
    """Rows ``(z, psi, pi*/m, pi_r/m, pi_d/m, pi_o/m)`` at ``z = k/n``, ``k = 1..n``.

    Undefined entries are NaN: the drawdown-probability strategy for ``z <= alpha``
    and the occupation strategy exactly at ``z = alpha``.  The optimal strategy
    uses its right limit at ``z = alpha``.
    """
    if n < 1:
        raise UsageError(f"--grid must be >= 1, got {n}")
    p, roots = d.params, d.roots
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PolicyDiscontinuityWarning)
        for k in range(1, n + 1):
            z = k / n
            pd = policy_drawdown_prob(d, z, 1.0) if z > p.alpha else math.nan
            po = policy_occupation(p, roots, z, 1.0) if z != p.alpha else math.nan
            rows.append((z, d.zeta(z), policy_optimal(d, z, 1.0), policy_ruin(p, roots, z), pd, po))
    return rows


def cmd_sweep(ns: argparse.Namespace) -> int:
    rows = sweep_rows(_dual(ns), ns.grid)
    if ns.format == "json":
        _emit(_json([dict(zip(SWEEP_HEADER, r)) for r in rows]), ns)
    else:
        _emit(_records_csv(SWEEP_HEADER, rows), ns)
    return EXIT_OK


def _sim_config(ns: argparse.Namespace):
    from .simulator import Estimator, Scheme, SimConfig

    return SimConfig(
        initial=_state(ns),
        dt=ns.dt,
        n_paths=ns.paths,
        seed=ns.seed,
        estimator=Estimator(ns.estimator),
        horizon=ns.horizon,
        scheme=Scheme(ns.scheme),
    )


def _emit_estimates(estimates, ns: argparse.Namespace, extra: dict[str, Any] | None = None) -> None:
    from .simulator import write_csv

    if ns.format == "json":
        obj: dict[str, Any] = {"estimates": [e.to_dict() for e in estimates]}
        if extra:
            obj.update(extra)
        _emit(_json(obj), ns)
    else:
        _emit(write_csv(estimates), ns)


def cmd_simulate(ns: argparse.Namespace) -> int:
    from .simulator import run

    d = _dual(ns)
    est = run(_sim_config(ns), parse_strategy(ns.strategy, ns.m), d)
    _emit_estimates([est], ns)
    return EXIT_OK


def cmd_compare(ns: argparse.Namespace) -> int:
    from .simulator import compare

    d = _dual(ns)
    kinds = [parse_strategy(s, ns.m) for s in (ns.strategy or ["optimal", "ruin"])]
    res = compare(_sim_config(ns), kinds, d)
    diffs = [{"a": a, "b": b, "mean_diff": m, "std_err": se} for a, b, m, se in res.differences]
    _emit_estimates(res.estimates, ns, {"differences": diffs})
    return EXIT_OK


def cmd_verify(ns: argparse.Namespace) -> int:
    from .verify import full_report

    report = full_report(_dual(ns), n_grid=ns.grid, sim_paths=ns.paths, sim_dt=ns.dt, seed=ns.seed)
    if ns.format == "json":
        _emit(report.to_json() + "\n", ns)
    else:
        rows = [(c.name, c.kind, c.value, c.tolerance, c.passed) for c in report.checks]
        _emit(_records_csv(("check", "kind", "value", "tolerance", "passed"), rows), ns)
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


COMMANDS = {
    "solve": cmd_solve,
    "value": cmd_value,
    "policy": cmd_policy,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "verify": cmd_verify,
}


def main(argv: Sequence[str] | None = None) -> int:
    # numba probes TBB before falling back to another threading layer
    warnings.filterwarnings("ignore", message="The TBB threading layer")
    try:
        ns = build_parser().parse_args(argv)
        return COMMANDS[ns.command](ns)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DrawdownError, ValueError, OSError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
