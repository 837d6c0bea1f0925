"""Command-line entry point: ``hitsndiffs {gen,rank,eval,bench}``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

import numpy as np

from . import irt
from .errors import ConfigInvalid, DimensionMismatch, Disconnected, HndError, MissingKey, Timeout
from .evaluation import EvalReport, ability_order, bench_run, rank_displacement, spearman
from .matrix import read_responses_csv
from .rankers import METHODS, SPECTRAL_METHODS, largest_component, run_method
from .spectral import PowerConfig

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DISCONNECTED = 4
EXIT_MISSING_KEY = 5
EXIT_DIMENSION = 6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _write_manifest(path: Path, subcommand: str, args, resolved: dict, inputs, outputs) -> None:
    manifest = {
        "subcommand": subcommand,
        "config": resolved,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "seed": args.seed,
        "version": _version(),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest_for_file(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def _require_out(args) -> Path:
    if not args.out:
        raise UsageError("--out is required")
    return Path(args.out)


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}") from None
    return lo, hi


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    out = _require_out(args)
    defaults = irt.GenConfig()
    config = irt.GenConfig(
        model=args.model,
        m=args.users,
        n=args.items,
        k=args.options,
        ability_range=args.ability_range or defaults.ability_range,
        difficulty_range=args.difficulty_range or defaults.difficulty_range,
        discrimination_range=args.discrimination_range or defaults.discrimination_range,
        guessing_range=args.guessing_range or defaults.guessing_range,
        p_answer=args.p_answer,
        seed=args.seed,
        grm_comparable=args.grm_comparable,
    )
    params = irt.read_binary_params_csv(args.item_params) if args.item_params else None
    ds = irt.sample_dataset(config, binary_params=params)
    irt.save_dataset(ds, out)
    files = [out / f for f in ("responses.csv", "abilities.csv", "key.csv", "config.json")]
    inputs = [args.item_params] if args.item_params else []
    _write_manifest(out / "manifest.json", "gen", args, config.to_json(), inputs, files)
    return EXIT_OK


def cmd_rank(args) -> int:
    out = _require_out(args)
    if args.method == "true-answer" and not args.key:
        raise UsageError("--key is required for true-answer")
    R = read_responses_csv(args.input)
    key = irt.read_key_csv(args.key) if args.key else None
    if args.largest_component:
        R = largest_component(R)
    orient = None if args.orient is None else args.orient == "entropy"
    config = PowerConfig(tol=args.tol, max_iter=args.max_iter, seed=args.seed)
    sv = run_method(args.method, R, config, key=key, orient=orient)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user", "score", "rank"])
        for pos, i in enumerate(sv.ranking, start=1):
            w.writerow([int(sv.user_ids[i]), repr(float(sv.scores[i])), pos])
    resolved = {
        "method": args.method,
        "orient": args.orient or ("entropy" if args.method in SPECTRAL_METHODS else "none"),
        "largest_component": args.largest_component,
        "tol": args.tol,
        "max_iter": args.max_iter,
        "iterations": sv.iterations,
        "users": sv.m,
    }
    inputs = [args.input] + ([args.key] if args.key else [])
    _write_manifest(_manifest_for_file(out), "rank", args, resolved, inputs, [out])
    return EXIT_OK


def _read_ranking(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or not {"user", "score"} <= set(rows[0]):
        raise ValueError(f"{path}: expected columns user,score,rank")
    users = np.array([int(r["user"]) for r in rows], dtype=np.int64)
    scores = np.array([float(r["score"]) for r in rows])
    return users, scores


def cmd_eval(args) -> int:
    out = _require_out(args)
    abilities = irt.read_abilities_csv(args.abilities)
    methods = args.method or []
    if methods and len(methods) != len(args.ranking):
        raise UsageError("give one --method per --ranking, or none")
    reports = []
    for i, path in enumerate(args.ranking):
        users, scores = _read_ranking(path)
        unknown = [int(u) for u in users if int(u) not in abilities]
        if unknown or len(users) < 2:
            raise DimensionMismatch(
                f"{path}: {len(users)} ranked users, {len(unknown)} without an ability"
            )
        theta = np.array([abilities[int(u)] for u in users])
        order = np.lexsort((np.arange(len(scores)), -scores))
        rho = spearman(scores, theta)
        disp = rank_displacement(order, ability_order(theta))
        method = methods[i] if methods else Path(path).stem
        reports.append(EvalReport(method, args.seed, rho, disp))
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=["method", "seed", "spearman", "displacement"],
                           lineterminator="\n")
        w.writeheader()
        for rep in reports:
            w.writerow(rep.row())
    resolved = {"methods": [r.method for r in reports]}
    _write_manifest(_manifest_for_file(out), "eval", args, resolved,
                    list(args.ranking) + [args.abilities], [out])
    return EXIT_OK


def cmd_bench(args) -> int:
    for meth in args.methods:
        if meth not in METHODS or meth == "true-answer":
            raise UsageError(f"cannot bench method {meth!r}")
    config = PowerConfig(tol=args.tol, max_iter=args.max_iter, seed=args.seed)
    cells = [(meth, m, n) for n in args.items for m in args.users for meth in args.methods]

    def run_cell(cell):
        meth, m, n = cell
        gen = irt.GenConfig(model=args.model, m=m, n=n, k=args.options, seed=args.seed)
        ds = irt.sample_dataset(gen)
        try:
            return bench_run(meth, ds, config, repeats=args.repeats, timeout_s=args.timeout_s).to_json()
        except Timeout:
            return {"method": meth, "m": m, "n": n, "k": args.options, "seed": args.seed,
                    "iterations": None, "wall_ms": None, "timeout": True}

    # each cell already times its call in a dedicated worker process
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        records = list(pool.map(run_cell, cells))
    lines = [json.dumps(r, sort_keys=False) for r in records]
    if args.out:
        out = Path(args.out)
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        resolved = {
            "model": args.model, "methods": args.methods, "users": args.users,
            "items": args.items, "options": args.options, "repeats": args.repeats,
            "timeout_s": args.timeout_s, "tol": args.tol, "max_iter": args.max_iter,
        }
        _write_manifest(_manifest_for_file(out), "bench", args, resolved, [], [out])
    else:
        sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_global(p: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS if suppress else 0,
                   help="random seed (default 0)")
    p.add_argument("--jobs", type=int, default=argparse.SUPPRESS if suppress else 1,
                   help="worker threads for bench sweeps")
    p.add_argument("--out", default=default, help="output directory or file")


def _add_power(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=PowerConfig.tol)
    p.add_argument("--max-iter", type=int, default=PowerConfig.max_iter)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hitsndiffs", description="Rank users by ability from multiple-choice answers.")
    parser.add_argument("--version", action="version", version=_version())
    _add_global(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a synthetic dataset directory")
    _add_global(g, suppress=True)
    g.add_argument("--model", choices=irt.MODELS, default="samejima")
    g.add_argument("--users", type=int, default=100)
    g.add_argument("--items", type=int, default=100)
    g.add_argument("--options", type=int, default=3)
    g.add_argument("--p-answer", type=float, default=1.0)
    g.add_argument("--ability-range", type=_range, metavar="LO,HI")
    g.add_argument("--difficulty-range", type=_range, metavar="LO,HI")
    g.add_argument("--discrimination-range", type=_range, metavar="LO,HI")
    g.add_argument("--guessing-range", type=_range, metavar="LO,HI")
    g.add_argument("--grm-comparable", action="store_true",
                   help="draw GRM discrimination from [0, 2*a_max/(k+1)]")
    g.add_argument("--item-params", help="CSV with a,b,c per item for binary models")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("rank", help="rank users of a responses.csv")
    _add_global(r, suppress=True)
    r.add_argument("--method", choices=METHODS, required=True)
    r.add_argument("--input", required=True)
    r.add_argument("--key", help="key.csv, required for true-answer")
    r.add_argument("--orient", choices=("entropy", "none"),
                   help="default: entropy for spectral methods, none otherwise")
    r.add_argument("--largest-component", action="store_true")
    _add_power(r)
    r.set_defaults(func=cmd_rank)

    e = sub.add_parser("eval", help="score rankings against true abilities")
    _add_global(e, suppress=True)
    e.add_argument("--ranking", nargs="+", required=True)
    e.add_argument("--abilities", required=True)
    e.add_argument("--method", nargs="+", help="labels for the rankings (default: file stem)")
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", help="time rankers over a grid of sizes")
    _add_global(b, suppress=True)
    b.add_argument("--methods", type=_str_list, default=["hnd-power", "abh-power"])
    b.add_argument("--users", type=_int_list, default=[1000, 2000, 4000, 8000, 16000])
    b.add_argument("--items", type=_int_list, default=[100])
    b.add_argument("--options", type=int, default=3)
    b.add_argument("--model", choices=irt.MODELS, default="samejima")
    b.add_argument("--repeats", type=int, default=5)
    b.add_argument("--timeout-s", type=float, default=1000.0)
    _add_power(b)
    b.set_defaults(func=cmd_bench)
    return parser


def _fail(code: int, kind: str, message: str) -> int:
    message = " ".join(str(message).split())
    print(f"error: {kind}: {message}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "Usage", exc)
    except (ConfigInvalid, ValueError) as exc:
        if isinstance(exc, Disconnected):
            sizes = ",".join(str(len(c)) for c in exc.components)
            return _fail(EXIT_DISCONNECTED, "Disconnected", f"component sizes {sizes}")
        if isinstance(exc, DimensionMismatch):
            return _fail(EXIT_DIMENSION, exc.code, exc)
        if isinstance(exc, ConfigInvalid):
            return _fail(EXIT_USAGE, exc.code, exc)
        if isinstance(exc, HndError):
            return _fail(EXIT_ERROR, exc.code, exc)
        # malformed input files
        return _fail(EXIT_IO, "InvalidInput", exc)
    except MissingKey as exc:
        return _fail(EXIT_MISSING_KEY, exc.code, exc)
    except OSError as exc:
        return _fail(EXIT_IO, "IOError", exc)
    except HndError as exc:
        return _fail(EXIT_ERROR, exc.code, exc)


if __name__ == "__main__":
    sys.exit(main())
