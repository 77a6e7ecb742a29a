"""Command-line front end: ``gausstest {run,bench,generate,bh}``."""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from .bench import TESTS, run_bench
from .bootstrap import DEFAULT_DRAWS
from .ci_fnn import ci_fnn_test
from .ci_lasso import ci_lasso_test
from .exceptions import ConfigurationError, DataError, DomainError, GausstestError
from .independence import independence_test
from .multitest import bh_adjust
from .simulate import ScenarioSpec, generate, signal_value, write_csv

SEED_ENV = "GAUSSTEST_SEED"
EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3


# ---------------------------------------------------------------- CSV input

def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_csv(path) -> tuple[np.ndarray, list[str] | None]:
    """Read a numeric CSV; a first row with any non-numeric cell is a header.

    Blank lines are skipped.  Raises :class:`DataError` naming the offending
    row and column (1-based, counting the header line) for ragged rows and
    non-numeric cells, and when no data rows remain.
    """
    try:
        with open(path, newline="", encoding="utf-8-sig") as fh:
            rows = [(i + 1, [c.strip() for c in r]) for i, r in enumerate(csv.reader(fh))]
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [(i, r) for i, r in rows if any(r)]
    header = None
    if rows and not all(_is_number(c) for c in rows[0][1]):
        header = rows.pop(0)[1]
    if not rows:
        raise DataError(f"{path}: no data rows (n=0)")
    width = len(header) if header is not None else len(rows[0][1])
    values = np.empty((len(rows), width))
    for r, (line, cells) in enumerate(rows):
        if len(cells) != width:
            raise DataError(f"{path}: row {line} has {len(cells)} fields, expected {width}")
        for c, cell in enumerate(cells):
            try:
                values[r, c] = float(cell)
            except ValueError:
                raise DataError(f"{path}: row {line}, column {c + 1}: "
                                f"non-numeric value {cell!r}") from None
            if not math.isfinite(values[r, c]):
                raise DataError(f"{path}: row {line}, column {c + 1}: non-finite value {cell!r}")
    return values, header


def parse_columns(spec: str | None, flag: str) -> list[int]:
    """``"1-3,7"`` -> ``[0, 1, 2, 6]`` (1-based inclusive ranges in, 0-based out)."""
    if spec is None or str(spec).strip() == "":
        return []
    out: list[int] = []
    for part in str(spec).split(","):
        part = part.strip()
        lo, sep, hi = part.partition("-")
        try:
            a = int(lo)
            b = int(hi) if sep else a
        except ValueError:
            raise ConfigurationError(f"{flag}: cannot parse column range {part!r}") from None
        if a < 1 or b < a:
            raise ConfigurationError(f"{flag}: invalid column range {part!r}")
        out.extend(range(a - 1, b))
    if len(set(out)) != len(out):
        raise ConfigurationError(f"{flag}: column listed twice")
    return out


def assign_blocks(width: int, x: str, y: str, z: str | None):
    cols = {"--x": parse_columns(x, "--x"), "--y": parse_columns(y, "--y"),
            "--z": parse_columns(z, "--z")}
    for flag in ("--x", "--y"):
        if not cols[flag]:
            raise ConfigurationError(f"{flag} must name at least one column")
    seen: dict[int, str] = {}
    for flag, idx in cols.items():
        for c in idx:
            if c >= width:
                raise ConfigurationError(f"{flag}: column {c + 1} exceeds CSV width {width}")
            if c in seen:
                raise ConfigurationError(f"column {c + 1} assigned to both {seen[c]} and {flag}")
            seen[c] = flag
    return cols["--x"], cols["--y"], cols["--z"]


# ---------------------------------------------------------------- reports

def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _parse_n3(value):
    if value is None:
        return "auto"
    s = str(value).strip().lower()
    if s in ("auto", "remainder", "algorithm1"):
        return s
    try:
        k = int(s)
    except ValueError:
        raise ConfigurationError(f"--n3 must be auto, remainder or an integer, got {value!r}") from None
    if k < 1:
        raise ConfigurationError("--n3 must be positive")
    return k


def resolve_seed(seed) -> int:
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigurationError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def run_one(values: np.ndarray, x: str, y: str, z: str | None, test="ind",
            multiplier="rademacher", boot=DEFAULT_DRAWS, alpha=0.05, top_t=1, seed=0,
            n3=None, no_split=False, workers=1, curve=None) -> dict:
    """Run one test on CSV columns and return the JSON-ready report."""
    if test not in TESTS:
        raise ConfigurationError(f"--test must be one of {TESTS}, got {test!r}")
    xi, yi, zi = assign_blocks(values.shape[1], x, y, z)
    if zi and test == "ind":
        raise ConfigurationError("--z is only used by ci-lasso and ci-fnn")
    common = dict(multiplier=multiplier, n_bootstrap=boot, alpha=alpha, top_t=top_t,
                  seed=seed, n_jobs=workers)
    xb, yb, zb = values[:, xi], values[:, yi], values[:, zi]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if test == "ind":
            rep = independence_test(xb, yb, **common)
        elif test == "ci-lasso":
            rep = ci_lasso_test(xb, yb, zb, **common)
        else:
            rep = ci_fnn_test(xb, yb, zb, n3_mode=_parse_n3(n3), no_split=no_split,
                              curve_path=curve, **common)
    messages = list(dict.fromkeys(str(w.message) for w in caught))
    j, k = rep.argmax
    return {"test": rep.test, "statistic": float(rep.statistic),
            "critical_value": float(rep.critical_value), "p_value": float(rep.p_value),
            "alpha": float(rep.alpha), "reject": bool(rep.reject),
            "multiplier": rep.multiplier, "N": int(rep.n_bootstrap), "seed": int(rep.seed),
            "argmax": {"x_col": xi[j] + 1, "y_col": yi[k] + 1},
            "n": int(rep.n), "p": int(rep.p), "q": int(rep.q), "m": int(rep.m),
            "warnings": messages}


_RUN_KEYS = ("test", "multiplier", "boot", "alpha", "top_t", "n3", "no_split")


def _run_manifest(args, seed: int) -> dict:
    """Run every entry of a manifest and apply BH across the p-values."""
    path = Path(args.manifest)
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read manifest {path}: {exc}") from exc
    if isinstance(manifest, list):
        manifest = {"runs": manifest}
    runs = manifest.get("runs")
    if not isinstance(runs, list) or not runs:
        raise ConfigurationError("manifest must list at least one run")
    cache: dict[Path, np.ndarray] = {}
    reports = []
    for i, entry in enumerate(runs):
        listed = entry.get("input", manifest.get("input"))
        if listed is not None:
            src = path.parent / listed  # relative to the manifest; absolute paths pass through
        elif args.input is not None:
            src = Path(args.input)
        else:
            raise ConfigurationError(f"manifest run {i + 1} has no input file")
        if src not in cache:
            cache[src] = read_csv(src)[0]
        opts = {k: entry.get(k, getattr(args, k)) for k in _RUN_KEYS}
        report = run_one(cache[src], entry.get("x"), entry.get("y"), entry.get("z"),
                         seed=seed, workers=args.workers, **opts)
        reports.append({"name": entry.get("name", f"run{i + 1}"), "x": entry.get("x"),
                        "y": entry.get("y"), "report": report})
    reject, adjusted = bh_adjust([r["report"]["p_value"] for r in reports], args.bh)
    for r, rej, adj in zip(reports, reject, adjusted):
        r["bh_reject"] = bool(rej)
        r["bh_adjusted_p"] = float(adj)
    if args.edges:
        with open(args.edges, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["name", "x", "y", "p_value", "bh_adjusted_p"])
            for r in reports:
                if r["bh_reject"]:
                    w.writerow([r["name"], r["x"], r["y"], repr(r["report"]["p_value"]),
                                repr(r["bh_adjusted_p"])])
    return {"q": args.bh, "n_rejected": int(reject.sum()), "runs": reports}


def cmd_run(args) -> int:
    seed = resolve_seed(args.seed)
    if args.manifest or args.bh is not None:
        if not (args.manifest and args.bh is not None):
            raise ConfigurationError("--bh and --manifest must be given together")
        _emit(_dumps(_run_manifest(args, seed)), args.out)
        return EXIT_OK
    if args.input is None:
        raise ConfigurationError("--input is required")
    values, _ = read_csv(args.input)
    report = run_one(values, args.x, args.y, args.z, seed=seed, workers=args.workers,
                     curve=args.curve, **{k: getattr(args, k) for k in _RUN_KEYS})
    _emit(_dumps(report), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- bench, generate, bh

def _scenario(args, seed: int) -> ScenarioSpec:
    try:
        signal = signal_value(args.signal, args.p)
    except ValueError:
        raise ConfigurationError(f"cannot parse --signal {args.signal!r}") from None
    spec = ScenarioSpec(example=args.example, n=args.n, p=args.p, m=args.m,
                        signal=signal, seed=seed, rep=getattr(args, "rep", 0))
    spec.validate()
    return spec


BENCH_FIELDS = ("example", "n", "p", "m", "signal", "test", "multiplier", "replications",
                "rate_pct", "se_pct", "wall_time")


def cmd_bench(args) -> int:
    spec = _scenario(args, resolve_seed(args.seed))
    multipliers = tuple(k.strip() for k in args.multiplier.split(",") if k.strip())
    options = {}
    if args.test == "ci-fnn":
        options = {"n3_mode": _parse_n3(args.n3), "no_split": args.no_split}
    results = run_bench(spec, args.reps, test=args.test, multipliers=multipliers,
                        n_bootstrap=args.boot, alpha=args.alpha, workers=args.workers,
                        **options)
    rows = [r.row() for r in results]
    widths = {f: max(len(f), *(len(str(r[f])) for r in rows)) for f in BENCH_FIELDS}
    print("  ".join(f.rjust(widths[f]) for f in BENCH_FIELDS))
    for r in rows:
        print("  ".join(str(r[f]).rjust(widths[f]) for f in BENCH_FIELDS))
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=BENCH_FIELDS)
            w.writeheader()
            w.writerows(rows)
    return EXIT_OK


def cmd_generate(args) -> int:
    write_csv(args.out, generate(_scenario(args, resolve_seed(args.seed))))
    return EXIT_OK


def cmd_bh(args) -> int:
    pvalues = list(args.pvalues)
    if args.input:
        try:
            text = Path(args.input).read_text(encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot read {args.input}: {exc}") from exc
        for line_no, line in enumerate(text.splitlines(), 1):
            for cell in line.replace(",", " ").split():
                try:
                    pvalues.append(float(cell))
                except ValueError:
                    raise DataError(f"{args.input}: line {line_no}: "
                                    f"non-numeric p-value {cell!r}") from None
    reject, adjusted = bh_adjust(pvalues, args.q)
    _emit(_dumps({"q": args.q, "p_values": [float(p) for p in pvalues],
                  "reject": reject.tolist(), "adjusted": adjusted.tolist(),
                  "n_rejected": int(reject.sum())}), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gausstest", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def testing_flags(p, multi_help="multiplier distribution"):
        p.add_argument("--test", choices=TESTS, default="ind")
        p.add_argument("--multiplier", default="rademacher", help=multi_help)
        p.add_argument("--boot", type=int, default=DEFAULT_DRAWS, help="bootstrap draws N")
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--seed", type=int, default=None,
                       help=f"random seed (falls back to ${SEED_ENV}, then 0)")
        p.add_argument("--n3", default="auto", help="auto, remainder or a row count (ci-fnn)")
        p.add_argument("--no-split", action="store_true", help="ci-fnn on the full sample")
        p.add_argument("--workers", type=int, default=1)

    run = sub.add_parser("run", help="test one CSV")
    run.add_argument("--config", help="JSON file of default flag values")
    run.add_argument("--input", help="CSV file")
    run.add_argument("--x", help="1-based column ranges, e.g. 1-3,5")
    run.add_argument("--y")
    run.add_argument("--z")
    testing_flags(run)
    run.add_argument("--top-t", type=int, default=1, help="sum of the T largest entries")
    run.add_argument("--bh", type=float, default=None, metavar="Q",
                     help="Benjamini-Hochberg level across the runs of --manifest")
    run.add_argument("--manifest", help="JSON list of runs for --bh")
    run.add_argument("--edges", help="CSV of BH-rejected runs")
    run.add_argument("--curve", help="CSV of the n3 selection curve (ci-fnn)")
    run.add_argument("--out", help="JSON report path (default stdout)")
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="Monte-Carlo rejection rate of one simulation cell")
    bench.add_argument("--example", type=int, required=True)
    bench.add_argument("--n", type=int, required=True)
    bench.add_argument("--p", type=int, required=True)
    bench.add_argument("--m", type=int, default=0)
    bench.add_argument("--signal", default="0", help="K, p/20, rho, null or alt")
    bench.add_argument("--reps", type=int, default=100)
    testing_flags(bench, "comma-separated multipliers")
    bench.add_argument("--out", help="CSV of result rows")
    bench.set_defaults(func=cmd_bench)

    gen = sub.add_parser("generate", help="write one simulated dataset as CSV")
    gen.add_argument("--example", type=int, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--p", type=int, required=True)
    gen.add_argument("--m", type=int, default=0)
    gen.add_argument("--signal", default="0")
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--rep", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_generate)

    bh = sub.add_parser("bh", help="Benjamini-Hochberg adjustment of p-values")
    bh.add_argument("--q", type=float, default=0.05)
    bh.add_argument("--input", help="file of p-values (whitespace or comma separated)")
    bh.add_argument("--out")
    bh.add_argument("pvalues", nargs="*", type=float)
    bh.set_defaults(func=cmd_bh)
    return parser


def _apply_config(parser, argv):
    """Re-parse ``argv`` with the ``--config`` file's values as defaults."""
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is None:
        return args
    try:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigurationError("config file must hold a JSON object")
    run = parser._subparsers._group_actions[0].choices["run"]
    known = {a.dest for a in run._actions}
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise ConfigurationError(f"unknown config keys {unknown}")
    run.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        try:
            args = _apply_config(parser, argv)
        except SystemExit as exc:  # argparse usage errors and --help
            return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
        return args.func(args)
    except (ConfigurationError, DomainError) as exc:
        print(f"gausstest: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"gausstest: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except GausstestError as exc:
        print(f"gausstest: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
