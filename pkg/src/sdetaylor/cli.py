"""Command-line interface.

Subcommands: coeffs, mse, ranks, converge, validate.  Every flag can also be
supplied through an environment variable SDETAYLOR_<FLAG> or a flat
key=value config file (--config); precedence is CLI > environment > config
file > default.  Outputs are CSV ('.' decimal separator, comma delimiter,
header row) or JSON; seeded runs are byte-reproducible.

Exit codes: 0 success / validation pass, 1 validation failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__, mse, problemsval, ranks
from .coeffs import (
    CoefficientTensor,
    coefficient_tensor,
    export_cache,
    import_cache,
    weight_vector,
)
from .schemes import SchemeConfig, builtin_problems, integrate_path
from .stochint import IntegralLabel

ENV_PREFIX = "SDETAYLOR_"


def _load_config_file(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"config line without '=': {line!r}")
            key, val = line.split("=", 1)
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def _setting(args, name: str, default=None, cast=str):
    """CLI > env > config-file > default."""
    val = getattr(args, name, None)
    if val is not None:
        return val
    env = os.environ.get(ENV_PREFIX + name.upper())
    if env is not None:
        return cast(env)
    if getattr(args, "_config_file", None) and name in args._config_file:
        return cast(args._config_file[name])
    return default


def _parse_int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", " ").split()]


def _write_rows(path, header, rows, fmt: str):
    if fmt == "json":
        doc = {"header": header, "rows": rows}
        text = json.dumps(doc, sort_keys=True, indent=None)
        _emit(path, text)
    else:
        import csv
        import io

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)
        _emit(path, buf.getvalue())


def _emit(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(path, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def cmd_coeffs(args) -> int:
    l = tuple(_parse_int_list(args.l))
    w = weight_vector(l)
    if args.k is not None and args.k != w.k:
        raise ValueError(f"--k {args.k} inconsistent with --l of length {w.k}")
    tensor = coefficient_tensor(w, args.p)
    if args.format == "json":
        if args.out in (None, "-"):
            import io

            buf = io.StringIO()
            import tempfile

            with tempfile.NamedTemporaryFile("r", suffix=".json") as tmp:
                export_cache(tmp.name, [tensor])
                tmp.seek(0)
                sys.stdout.write(tmp.read() + "\n")
        else:
            export_cache(args.out, [tensor])
        return 0
    header = [f"j{g+1}" for g in range(w.k)] + ["value"]
    rows = []
    for j in np.ndindex(*tensor.unit_values.shape):
        v: Fraction = tensor.unit_values[j]
        rows.append(
            list(j)
            + [f"{v.numerator}/{v.denominator}" if v.denominator != 1 else str(v.numerator)]
        )
    _write_rows(args.out, header, rows, "csv")
    return 0


def cmd_mse(args) -> int:
    i = tuple(_parse_int_list(args.i))
    l = tuple(_parse_int_list(args.l)) if args.l else (0,) * len(i)
    lab = IntegralLabel(i, l, args.family)
    delta = args.delta
    p_lo, p_hi = (int(x) for x in args.p_range.split(":"))
    header = ["p", "exact_mse", "bound"]
    rows = []
    distinct = len(set(i)) == len(i)
    for p in range(p_lo, p_hi + 1):
        q = mse.ErrorQuery(lab, p, delta)
        bound = mse.mse_bound(q)
        if lab.kind == "ito":
            exact = mse.exact_mse_ito(q)
        elif distinct:
            exact = mse.exact_mse_strat_distinct(q)
        else:
            exact = None
        rows.append([p, "" if exact is None else repr(exact), repr(bound)])
    _write_rows(args.out, header, rows, args.format)
    return 0


def cmd_ranks(args) -> int:
    table = ranks.rank_table(args.r_max)
    header = ["r", "rank_A", "n_M", "f", "rank_D", "n_E", "g"]
    rows = [
        [
            table["r"][idx],
            table["rank_A"][idx],
            table["n_M"][idx],
            f"{table['f'][idx]:.4f}",
            table["rank_D"][idx],
            table["n_E"][idx],
            f"{table['g'][idx]:.4f}",
        ]
        for idx in range(len(table["r"]))
    ]
    _write_rows(args.out, header, rows, args.format)
    return 0


def run_convergence_study(
    problem_name: str,
    family: str,
    r: int,
    grid: list[int],
    trials: int,
    seed: int,
    t_end: float = 1.0,
    truncation: object = "target",
    block: int = 2048,
) -> dict:
    """Per-N RMS terminal error against the coupled exact reference, plus
    the least-squares slope of log error against log step size."""
    if sorted(grid) != grid or len(set(grid)) != len(grid):
        raise ValueError("grid must be strictly increasing")
    if trials < 100:
        raise ValueError("need at least 100 trials for a slope estimate")
    problem = builtin_problems()[problem_name]()
    if problem.exact_step is None:
        return _self_reference_study(
            problem, family, r, grid, trials, seed, t_end, truncation, block
        )
    errors = []
    for n_idx, n_steps in enumerate(grid):
        config = SchemeConfig(
            family=family, r=r, n_steps=n_steps, t_end=t_end, seed=seed,
            truncation=truncation,
        )
        sq_sum = 0.0
        done = 0
        block_i = 0
        while done < trials:
            b = min(block, trials - done)
            res = integrate_path(
                problem, config, np.ones(problem.n), batch=b,
                with_reference=True, stream_key=(n_idx, block_i),
            )
            diff = res.states[:, -1] - res.reference[:, -1]
            sq_sum += float(np.sum(diff ** 2))
            done += b
            block_i += 1
        errors.append((sq_sum / trials) ** 0.5)
    slope = _fit_slope([t_end / n for n in grid], errors)
    return {
        "problem": problem_name,
        "family": family,
        "order": r / 2,
        "grid": grid,
        "trials": trials,
        "seed": seed,
        "t_end": t_end,
        "rms_errors": [repr(e) for e in errors],
        "slope": repr(slope),
    }


def _fit_slope(deltas, errors) -> float:
    x = np.log(np.asarray(deltas))
    y = np.log(np.asarray(errors))
    a = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    return float(coef[0])


def _self_reference_study(
    problem, family, r, grid, trials, seed, t_end, truncation, block
) -> dict:
    """Fine-grid self reference: the reference path runs the same scheme on
    a 16x finer grid; coarse bases are exact aggregations of the fine ones,
    so every run sees the same Brownian path."""
    from .refine import fine_reference_errors

    errors = fine_reference_errors(
        problem, family, r, grid, trials, seed, t_end, truncation, block
    )
    slope = _fit_slope([t_end / n for n in grid], errors)
    return {
        "problem": problem.name,
        "family": family,
        "order": r / 2,
        "grid": grid,
        "trials": trials,
        "seed": seed,
        "t_end": t_end,
        "reference": "fine-grid x16 (approximate)",
        "rms_errors": [repr(e) for e in errors],
        "slope": repr(slope),
    }


def cmd_converge(args) -> int:
    grid = _parse_int_list(_setting(args, "grid", "8 16 32 64 128"))
    trials = _setting(args, "trials", 1000, int)
    seed = _setting(args, "seed", 0, int)
    family = _setting(args, "family", "ito")
    order = float(_setting(args, "order", 1.0, float))
    r = int(round(order * 2))
    report = run_convergence_study(
        _setting(args, "problem", "gbm"), family, r, grid, trials, seed
    )
    _emit(args.out, json.dumps(report, sort_keys=True))
    return 0


def cmd_validate(args) -> int:
    """Golden-table and identity suite; prints one line per check.

    Checks against reference values that are documented to disagree with
    the reference's own coefficient tables (see README errata) report as
    DIVERGES with both numbers and do not affect the exit code; everything
    else is a hard PASS/FAIL.
    """
    failures = 0

    def check(name: str, ok: bool, detail: str = "", known_divergent: bool = False):
        nonlocal failures
        if ok:
            line = f"PASS      {name}"
        elif known_divergent:
            line = f"DIVERGES  {name}  ({detail})"
        else:
            line = f"FAIL      {name}" + (f"  ({detail})" if detail else "")
            failures += 1
        print(line)

    from .golden import (
        EXACT_ERROR_VALUES,
        KNOWN_DIVERGENT_CONSTANTS,
        PRINTED_ERROR_CONSTANTS,
        RANKS_PRINTED,
        TABLE3,
        TABLE4,
        TABLE5,
        check_error_constant,
        check_table,
        exact_error_value,
    )

    for name, table in (("table-3", TABLE3), ("table-4", TABLE4), ("table-5", TABLE5)):
        bad = check_table(table)
        check(f"golden {name} ({len(table['entries'])} entries)", not bad, f"mismatches: {bad}")

    for name in sorted(PRINTED_ERROR_CONSTANTS):
        ok, got, want = check_error_constant(name)
        check(
            f"error constant {name}",
            ok,
            f"computed {got:.9f} vs printed {want:.8f}",
            known_divergent=name in KNOWN_DIVERGENT_CONSTANTS,
        )
        # the computed value itself is pinned exactly either way
        frozen = float(EXACT_ERROR_VALUES[name])
        check(
            f"error constant {name} (exact regression)",
            abs(exact_error_value(name) - frozen) <= 1e-15,
        )

    table = ranks.rank_table(10)
    for row in ("rank_A", "n_M", "rank_D", "n_E"):
        ok = table[row] == RANKS_PRINTED[row]
        check(
            f"rank table row {row}",
            ok,
            f"computed {table[row]} vs printed {RANKS_PRINTED[row]}",
            known_divergent=(row == "n_E"),
        )
    check(
        "rank closed forms == enumeration (r<=10)",
        all(
            ranks.rank_A(r) == ranks.count_A_wiener(r)
            and ranks.rank_D(r) == ranks.count_D_wiener(r)
            and ranks.n_M(r) == ranks.count_classical_M(r)
            and ranks.n_E(r) == ranks.count_classical_E(r)
            for r in range(1, 11)
        ),
    )

    for case_name, case in sorted(problemsval.identity_catalog().items()):
        rep = problemsval.check_identity(case, (2, 4, 8), trials=5000, seed=7)
        scale = max(rep["ms_scale"][8], 1e-30)
        ok = rep["exact_coefficients_equal"] and rep["ms_difference"][8] <= 1e-20 * scale + 1e-24
        check(f"identity {case_name}", ok, f"ms diff {rep['ms_difference'][8]:.3e}")

    for l in [(0,), (1,), (2,), (0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2)]:
        check(
            f"binomial relation l={l}",
            problemsval.binomial_relation_holds(l, p=6),
        )

    print(("FAIL" if failures else "PASS") + f"  validate suite ({failures} failing checks)")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sdetaylor",
        description="Strong Taylor schemes for Ito SDEs with exact "
        "Fourier-Legendre coefficient machinery",
    )
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--config", help="flat key=value config file")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coeffs", help="export an exact coefficient tensor")
    p.add_argument("--k", type=int, required=False, help="multiplicity (implied by --l)")
    p.add_argument("--l", required=True, help="weight exponents, e.g. '0,0,0'")
    p.add_argument("--p", type=int, required=True, help="truncation level")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(fn=cmd_coeffs)

    p = sub.add_parser("mse", help="exact truncation errors and bounds")
    p.add_argument("--i", required=True, help="component indices, e.g. '1,2,3'")
    p.add_argument("--l", default=None, help="weight exponents (default zeros)")
    p.add_argument("--family", choices=("ito", "strat"), default="ito")
    p.add_argument("--p-range", default="0:6", help="inclusive p range lo:hi")
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(fn=cmd_mse)

    p = sub.add_parser("ranks", help="term-count tables")
    p.add_argument("--r-max", type=int, default=10)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(fn=cmd_ranks)

    p = sub.add_parser("converge", help="strong convergence study")
    p.add_argument("--problem", default=None, help="gbm | ou | linear2d")
    p.add_argument("--family", default=None, choices=("ito", "strat"))
    p.add_argument("--order", default=None, help="1.0 | 1.5 | 2.0 | 2.5 | 3.0")
    p.add_argument("--grid", default=None, help="increasing step counts, e.g. '8,16,32'")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--cache-dir", default=None)
    p.set_defaults(fn=cmd_converge)

    p = sub.add_parser("validate", help="golden tables and identity suite")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_validate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    args._config_file = _load_config_file(args.config) if args.config else {}
    try:
        return args.fn(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
