"""Command-line front end.

Exit codes: 0 success, 1 a checked identity or bound failed, 2 bad usage.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from fractions import Fraction

from . import norms, operators
from .core import FiniteSeq, load_sequence, random_sequence
from .operators import H, I, K, parse_operator

EXACT, CERTIFIED, NUMERIC = "EXACT", "CERTIFIED", "NUMERIC"

SUITES = (
    "product-rule",
    "decomposition",
    "fourier",
    "factorization",
    "interleaving",
    "sign-identity",
    "partial-fraction",
    "fixed-point",
    "cot-identity",
    "building-bound",
)


@dataclass
class Check:
    suite: str
    case: int
    kind: str
    passed: bool
    residual: str
    detail: str = ""


class UsageError(Exception):
    pass


# -- individual checks (top level so a process pool can pickle them) -------


def _seq_residual(r: FiniteSeq) -> str:
    return "0" if r.is_zero() else f"{len(r)} nonzero entries, e.g. {r.items()[0]}"


def _case_product_rule(case, seed, window):
    rng = random.Random(f"{seed}:{case}")
    a, b = random_sequence(rng), random_sequence(rng)
    r = operators.check_product_rule(a, b, window)
    return Check("product-rule", case, EXACT, r.is_zero(), _seq_residual(r), f"|supp a|={len(a)} |supp b|={len(b)}")


def _case_decomposition(case, seed, window, k):
    from .skeletal import check_decomposition

    rng = random.Random(f"{seed}:{k}:{case}")
    a = random_sequence(rng, max_support=5, reach=6)
    r = check_decomposition(a, k, window)
    return Check("decomposition", case, EXACT, r.is_zero(), _seq_residual(r), f"k={k} |supp a|={len(a)}")


def _case_interleaving(case, seed, window):
    rng = random.Random(f"{seed}:{case}")
    a = random_sequence(rng, max_support=6)
    r1, r2 = operators.check_interleaving(a, window)
    h1, h2 = operators.check_interleaving_h0(a, window)
    ok = all(r.is_zero() for r in (r1, r2, h1, h2))
    bad = next((r for r in (r1, r2, h1, h2) if not r.is_zero()), FiniteSeq.zero())
    return Check("interleaving", case, EXACT, ok, _seq_residual(bad), "R/K and H0/H")


def _random_angle(rng) -> Fraction:
    while True:
        u = Fraction(rng.randint(-240, 240), rng.randint(1, 60))
        if u.denominator != 1:
            return u


def _case_sign_identity(case, seed):
    rng = random.Random(f"{seed}:{case}")
    while True:
        t, s = _random_angle(rng), _random_angle(rng)
        try:
            r = operators.check_sign_identity(t, s)
        except ValueError:
            continue
        return Check("sign-identity", case, EXACT, r == 0, str(r), f"t={t}pi s={s}pi")


def _case_building_bound(case, seed):
    from .skeletal import enumerate_skeletons

    rng = random.Random(f"{seed}:{case}")
    k = rng.randint(1, 3)
    s = rng.choice(enumerate_skeletons(k))
    p = rng.choice([2 * k + 1, 3 * k, 9, 12.5])
    a = random_sequence(rng, max_support=6)
    lhs, rhs = norms.check_building_norm_bound(p, s, a)
    ok = lhs <= rhs * (1 + 1e-10)
    return Check("building-bound", case, NUMERIC, ok, f"{lhs - rhs:.3e}", f"S={s} p={p} lhs={lhs:.6g} rhs={rhs:.6g}")


def _run_cases(fn, args_list, jobs):
    if jobs > 1 and len(args_list) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(fn, *zip(*args_list)))
    else:
        out = [fn(*args) for args in args_list]
    return sorted(out, key=lambda c: c.case)


# -- suites -----------------------------------------------------------------


def suite_product_rule(opts):
    window = tuple(opts.window or (-64, 64))
    return _run_cases(_case_product_rule, [(i, opts.seed, window) for i in range(opts.cases)], opts.jobs)


def suite_decomposition(opts):
    window = tuple(opts.window or (-32, 32))
    args = [(k * 10_000 + i, opts.seed, window, k) for k in range(1, opts.k_max + 1) for i in range(opts.cases)]
    return _run_cases(_case_decomposition, args, opts.jobs)


def suite_interleaving(opts):
    window = tuple(opts.window or (-8, 8))
    return _run_cases(_case_interleaving, [(i, opts.seed, window) for i in range(opts.cases)], opts.jobs)


def suite_sign_identity(opts):
    n = max(opts.cases, 1000) if opts.cases_default else opts.cases
    return _run_cases(_case_sign_identity, [(i, opts.seed) for i in range(n)], opts.jobs)


def suite_building_bound(opts):
    return _run_cases(_case_building_bound, [(i, opts.seed) for i in range(opts.cases)], opts.jobs)


def suite_fourier(opts):
    out = []
    tol = opts.tol if opts.tol is not None else 1e-10
    case = 0
    for op in (K, H, I):
        for m in range(-20, 21):
            got, want = operators.check_fourier_coefficient(op, m, opts.quad_points)
            err = abs(got.value - want.value)
            out.append(Check("fourier", case, NUMERIC, err <= tol, f"{err:.3e}", f"op={op} m={m}"))
            case += 1
    return out


def suite_factorization(opts):
    a = opts.sequence or FiniteSeq.delta(0)
    out = []
    for i, n in enumerate(range(-6, 7)):
        lhs, ik, ki = operators.check_factorization(a, n, opts.M or 100_000)
        x = float(lhs)
        for j, (name, cv) in enumerate((("IK", ik), ("KI", ki))):
            ok = cv.contains(x) and cv.bound <= 1e-3
            out.append(
                Check("factorization", 2 * i + j, CERTIFIED, ok, f"{abs(cv.value - x):.3e}", f"{name} n={n} bound={cv.bound:.3e}")
            )
    return out


def suite_partial_fraction(opts):
    out = []
    for i, j in enumerate((-8, -4, -2, 2, 4, 8)):
        s, closed = operators.check_partial_fraction(j, opts.M or 10**6)
        diff = abs(s.value - closed.value)
        ok = diff <= s.bound + closed.bound
        out.append(Check("partial-fraction", i, CERTIFIED, ok, f"{diff:.3e}", f"j={j} bound={s.bound:.3e}"))
    return out


def suite_fixed_point(opts):
    tol = opts.tol if opts.tol is not None else 1e-15
    out = []
    case = 0
    for k in range(1, opts.k_max_fp + 1):
        start = k if opts.p_from == "k" else 2 * k
        for p in range(start, opts.p_max + 1):
            try:
                r, ok = norms.check_fixed_point(p, k, tol, opts.precision)
                res = f"{float(r):.3e}"
            except ValueError as exc:
                ok, res = False, f"undefined ({exc})"
            out.append(Check("fixed-point", case, NUMERIC, ok, res, f"k={k} p={p}"))
            case += 1
    for k, p in ((2, 4), (3, 6), (4, 8), (5, 10)):
        if k > opts.k_max_fp or p > opts.p_max:
            continue
        x = norms.solve_bound(p, k, opts.precision)
        err = abs(x - float(norms.sharp_constant(p, opts.precision)))
        out.append(Check("fixed-point", case, NUMERIC, err <= 1e-9, f"{err:.3e}", f"solve_bound k={k} p={p}"))
        case += 1
    return out


def suite_cot_identity(opts):
    import mpmath

    tol = opts.tol if opts.tol is not None else 1e-18
    rng = random.Random(opts.seed)
    out = []
    n = max(opts.cases, 1000) if opts.cases_default else opts.cases
    for i in range(n):
        while True:
            a, b = rng.uniform(1e-3, 3.1), rng.uniform(1e-3, 3.1)
            if a + b < 3.14:
                break
        r, ok = norms.check_cot_sum_identity(a, b, tol, opts.precision)
        out.append(Check("cot-identity", i, NUMERIC, ok, mpmath.nstr(r, 3), f"alpha={a:.6f} beta={b:.6f}"))
    for j, p in enumerate(range(4, 129, 2)):
        r, ok = norms.check_k2_identity(p, tol, opts.precision)
        out.append(Check("cot-identity", n + j, NUMERIC, ok, mpmath.nstr(r, 3), f"k2 p={p}"))
    return out


SUITE_FUNCS = {
    "product-rule": suite_product_rule,
    "decomposition": suite_decomposition,
    "fourier": suite_fourier,
    "factorization": suite_factorization,
    "interleaving": suite_interleaving,
    "sign-identity": suite_sign_identity,
    "partial-fraction": suite_partial_fraction,
    "fixed-point": suite_fixed_point,
    "cot-identity": suite_cot_identity,
    "building-bound": suite_building_bound,
}


# -- output -----------------------------------------------------------------


def _stamp(payload: dict, opts) -> dict:
    if not opts.no_timestamp:
        payload["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return payload


def _emit_rows(rows: list[dict], opts, payload: dict, text_lines: list[str], out) -> None:
    if opts.format == "json":
        out.write(json.dumps(_stamp(payload, opts), indent=2, default=_json_default) + "\n")
    elif opts.format == "csv":
        if rows:
            buf = io.StringIO()
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
            out.write(buf.getvalue())
    else:
        for line in text_lines:
            out.write(line + "\n")


def _json_default(x):
    try:
        return float(x)
    except (TypeError, ValueError):
        return str(x)


# -- commands -----------------------------------------------------------------


def cmd_verify(opts, out) -> int:
    names = SUITES if opts.suite == "all" else (opts.suite,)
    checks: list[Check] = []
    for name in names:
        checks.extend(SUITE_FUNCS[name](opts))
    passed = all(c.passed for c in checks)
    rows = [asdict(c) for c in checks]
    text = [
        f"{c.kind:<9} {c.suite} case={c.case} residual={c.residual} {'PASS' if c.passed else 'FAIL'}"
        + (f"  ({c.detail})" if c.detail else "")
        for c in checks
    ]
    nfail = sum(not c.passed for c in checks)
    text.append(f"{len(checks) - nfail}/{len(checks)} checks passed")
    payload = {"command": "verify", "suite": opts.suite, "passed": passed, "checks": rows}
    _emit_rows(rows, opts, payload, text, out)
    return 0 if passed else 1


def cmd_skeletons(opts, out) -> int:
    from .skeletal import enumerate_skeletons

    skels = enumerate_skeletons(opts.k)
    if opts.count_only:
        payload = {"command": "skeletons", "k": opts.k, "count": len(skels)}
        _emit_rows([{"k": opts.k, "count": len(skels)}], opts, payload, [str(len(skels))], out)
        return 0
    rows = []
    for s in skels:
        row = {"skeleton": str(s), "size": s.size, "depth": s.depth}
        if opts.p is not None:
            row["building_norm"] = float(norms.building_norm(opts.p, s, opts.precision))
        rows.append(row)
    text = [
        f"{r['skeleton']}  size={r['size']} depth={r['depth']}"
        + (f" norm={r['building_norm']:.12g}" if "building_norm" in r else "")
        for r in rows
    ]
    payload = {"command": "skeletons", "k": opts.k, "p": opts.p, "skeletons": rows}
    _emit_rows(rows, opts, payload, text, out)
    return 0


def _latex(text: str) -> str:
    out = re.sub(r"\ba\b", "a_n", text)
    for tag in "KHI":
        out = out.replace(f"{tag}[", f"\\mathcal{{{tag}}}[")
    return out.replace("*", " \\cdot ")


def cmd_decompose(opts, out) -> int:
    from .skeletal import expand_power, skeleton_normal_form

    e = expand_power(opts.k)
    s = skeleton_normal_form(opts.k)
    same = e == s
    if opts.format == "json":
        terms = [{"coefficient": c, "term": str(t)} for c, t in e.ordered()]
        payload = {
            "command": "decompose", "k": opts.k, "expansion": str(e),
            "skeletal": str(s), "equal": same, "terms": terms,
        }
        out.write(json.dumps(_stamp(payload, opts), indent=2) + "\n")
    else:
        show = _latex if opts.format == "latex" else str
        out.write(show(str(e)) + "\n")
        if not same:
            out.write(show(str(s)) + "\n")
            out.write("MISMATCH: rewriting and skeleton sum disagree\n")
    return 0 if same else 1


def _norm_rows(p, methods, precision) -> list[norms.NormRecord]:
    rows = []
    sharp = float(norms.sharp_constant(p, precision))
    covered = norms.is_covered(p)
    if "sharp" in methods:
        rows.append(norms.NormRecord("sharp", p, None, sharp, sharp, 0.0, "PROVED" if covered else "CONJECTURED"))
    ip = int(p) if float(p).is_integer() else None
    even = ip is not None and ip % 2 == 0 and ip >= 2
    pow2 = even and ip & (ip - 1) == 0
    if "theorem" in methods and even:
        chain = norms.theorem_chain(ip, "single", precision)
        b = float(chain.value)
        rows.append(norms.NormRecord("theorem", p, ip // 2 if ip > 2 else None, b, sharp, b - sharp, "PROVED"))
    for m in ("gohberg_krupnik", "titchmarsh"):
        if m in methods and pow2:
            b = float(norms.historical_chain(m, ip, precision).value)
            rows.append(norms.NormRecord(m, p, None, b, sharp, b - sharp, "BOUND"))
    if "riesz" in methods and even:
        b = float(norms.historical_chain("riesz", ip, precision).value)
        rows.append(norms.NormRecord("riesz", p, None, b, sharp, b - sharp, "BOUND"))
    return rows


def cmd_norms(opts, out) -> int:
    records = []
    for p in opts.p:
        records.extend(_norm_rows(p, opts.methods, opts.precision))
    bad = [r for r in records if r.method == "theorem" and abs(r.residual) > 1e-9]
    rows = [r.to_dict() for r in records]
    text = []
    for r in records:
        b = "-" if r.bound is None else f"{r.bound:.10g}"
        text.append(f"p={r.p:<6g} {r.method:<16} bound={b:<14} sharp={r.sharp:.10g} {r.status}")
    payload = {"command": "norms", "records": rows}
    _emit_rows(rows, opts, payload, text, out)
    return 1 if bad else 0


def cmd_estimate(opts, out) -> int:
    from .estimate import WindowedOperator, doubling_study, power_iterate

    kind = parse_operator(opts.op)
    starts = tuple(opts.starts)
    if opts.doubling > 1:
        reports = doubling_study(kind, opts.p, opts.N, opts.doubling, opts.iters, opts.seed, starts=starts)
    else:
        w = WindowedOperator.from_kind(kind, opts.N)
        reports = [power_iterate(w, opts.p, opts.iters, opts.seed, starts=starts, kind=kind)]
    rows = []
    for r in reports:
        d = r.to_dict()
        if opts.no_timestamp:
            d.pop("seconds")
        rows.append(d)
    if opts.curve:
        with open(opts.curve, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["N", "iteration", "ratio"])
            for r in reports:
                for it, v in r.curve:
                    w.writerow([r.N, it, repr(v)])
    text = []
    for d in rows:
        gap = "-" if d["gap"] is None else f"{d['gap']:.3e}"
        sharp = "-" if d["sharp"] is None else f"{d['sharp']:.10g}"
        text.append(f"op={d['op']} p={d['p']:g} N={d['N']} best_ratio={d['best_ratio']:.10g} sharp={sharp} gap={gap} start={d['start']}")
    payload = rows[0] if len(rows) == 1 else {"command": "estimate", "runs": rows}
    _emit_rows(rows, opts, dict(payload), text, out)
    return 0


# -- argument parsing ------------------------------------------------------


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _p_value(s: str) -> float:
    v = float(Fraction(s))
    if not v > 1:
        raise argparse.ArgumentTypeError(f"p must exceed 1, got {s}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--no-timestamp", action="store_true", help="omit timestamps and timings from output")
    common.add_argument("--precision", type=int, default=None, help="binary precision for constants (default 256)")
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=_positive_int, default=1)

    parser = argparse.ArgumentParser(prog="dhtlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    tabular = argparse.ArgumentParser(add_help=False)
    tabular.add_argument("--format", choices=("text", "json", "csv"), default="text")

    v = sub.add_parser("verify", parents=[common, tabular], help="run identity checks")
    v.add_argument("suite", choices=SUITES + ("all",))
    v.add_argument("--cases", type=_positive_int, default=None)
    v.add_argument("--window", type=int, nargs=2, metavar=("LO", "HI"))
    v.add_argument("--k-max", type=_positive_int, default=None)
    v.add_argument("--p-max", type=_positive_int, default=64)
    v.add_argument("--p-from", choices=("k", "2k"), default="2k", help="fixed-point grid starts at p = k or p = 2k")
    v.add_argument("--M", type=_positive_int, default=None, help="truncation radius (factorization 1e5, partial-fraction 1e6)")
    v.add_argument("--quad-points", type=int, default=64)
    v.add_argument("--sequence", help="JSON sequence file used by the factorization suite")

    s = sub.add_parser("skeletons", parents=[common, tabular], help="list skeletons of size k")
    s.add_argument("k", type=int)
    s.add_argument("--p", type=_p_value)
    s.add_argument("--count-only", action="store_true")

    d = sub.add_parser("decompose", parents=[common], help="expand (K a)^k")
    d.add_argument("k", type=int)
    d.add_argument("--format", choices=("text", "latex", "json"), default="text")

    n = sub.add_parser("norms", parents=[common, tabular], help="sharp constants and bound chains")
    n.add_argument("--p", type=_p_value, nargs="+", default=[2.0, 4.0])
    n.add_argument(
        "--methods", nargs="+", default=["sharp", "theorem", "gohberg_krupnik", "titchmarsh", "riesz"],
        choices=["sharp", "theorem", "gohberg_krupnik", "titchmarsh", "riesz"],
    )

    e = sub.add_parser("estimate", parents=[common, tabular], help="power-iteration lower bound for an operator norm")
    e.add_argument("--op", default="K")
    e.add_argument("--p", type=_p_value, default=2.0)
    e.add_argument("--N", type=_positive_int, default=2048)
    e.add_argument("--iters", type=_positive_int, default=200)
    e.add_argument("--starts", nargs="+", default=["profile", "random", "powerlaw", "indicator"])
    e.add_argument("--doubling", type=_positive_int, default=1, help="number of N-doubling levels")
    e.add_argument("--curve", help="write the convergence curve as CSV to this path")
    return parser


def _validate(parser, opts) -> None:
    if opts.precision is not None and opts.precision < 53:
        parser.error("--precision must be at least 53")
    if opts.command == "verify":
        opts.cases_default = opts.cases is None
        if opts.cases is None:
            opts.cases = 100 if opts.suite != "decomposition" else 50
        if opts.suite == "all" and opts.cases_default:
            opts.cases_default = True
        opts.k_max_fp = opts.k_max or 20
        opts.k_max = min(opts.k_max or 6, 8)
        if opts.window and opts.window[0] > opts.window[1]:
            parser.error("--window LO must not exceed HI")
        if opts.quad_points < 64:
            parser.error("--quad-points must be at least 64")
        if opts.sequence:
            try:
                opts.sequence = load_sequence(opts.sequence)
            except (OSError, ValueError) as exc:
                parser.error(f"cannot read sequence file: {exc}")
        if opts.M is not None and opts.M < 16:
            parser.error("--M must be at least 16")
    elif opts.command == "skeletons":
        if not 1 <= opts.k <= 16:
            parser.error("k must be in 1..16")
        if opts.p is not None and opts.p <= opts.k:
            parser.error("building norms need p > k")
    elif opts.command == "decompose":
        if not 1 <= opts.k <= 10:
            parser.error("k must be in 1..10")
    elif opts.command == "estimate":
        try:
            parse_operator(opts.op)
        except ValueError as exc:
            parser.error(str(exc))
        bad = set(opts.starts) - {"profile", "random", "powerlaw", "indicator"}
        if bad:
            parser.error(f"unknown starts: {sorted(bad)}")


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    opts = parser.parse_args(argv)
    _validate(parser, opts)
    handler = {
        "verify": cmd_verify,
        "skeletons": cmd_skeletons,
        "decompose": cmd_decompose,
        "norms": cmd_norms,
        "estimate": cmd_estimate,
    }[opts.command]
    return handler(opts, out)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
