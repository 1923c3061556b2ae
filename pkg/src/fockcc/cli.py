"""Command-line entry point.

Every subcommand renders one result object as JSON, CSV or plain text.  JSON
is written with sorted keys so that equal flags and seeds give identical
bytes apart from the ``timestamp`` field.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .combinatorics import format_mask
from .errors import CapacityError, FockCCError, LevelSetParseError
from .expparam import forward_map, master_polynomial
from .fd_algebra import normal_order
from .homotopy import TrackerConfig, cc_degree, variety_degree
from .truncation import FLAG, SPINOR, LevelSet, analyze, census, chart_ideal_generators, dimension

OUTPUT_DIR_ENV = "FOCKCC_OUTPUT_DIR"
SEED_MAX = 2**64 - 1


@dataclasses.dataclass
class RunConfig:
    command: str
    d: int | None = None
    n: int | None = None
    sigma: LevelSet | None = None
    seed: int = 0
    tracker: TrackerConfig = dataclasses.field(default_factory=TrackerConfig)
    output: Path | None = None
    format: str = "json"
    threads: int = 1


# --------------------------------------------------------------------------
# argument parsing

def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value <= SEED_MAX:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _tracker_override(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    names = {f.name for f in dataclasses.fields(TrackerConfig)}
    if not sep or key not in names:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE with KEY in {sorted(names)}, got {text!r}")
    return key, value


def _tracker(overrides) -> TrackerConfig:
    kwargs = {}
    types = {f.name: f.type for f in dataclasses.fields(TrackerConfig)}
    for key, value in overrides or []:
        kind = types[key]
        kwargs[key] = value if kind == "str" else int(value) if kind == "int" else float(value)
    return TrackerConfig(**kwargs)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")
    common.add_argument("--output", type=Path, help=f"output file (default: ${OUTPUT_DIR_ENV}/<command>.<ext> or stdout)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    dn = argparse.ArgumentParser(add_help=False)
    dn.add_argument("--d", type=int, required=True, help="number of electrons")
    dn.add_argument("--n", type=int, required=True, help="number of orbitals")

    sig = argparse.ArgumentParser(add_help=False)
    sig.add_argument("--sigma", required=True, help='level set such as "1,0;1,1;0,1"')

    def solve(seeds: int) -> argparse.ArgumentParser:
        # argparse shares parent actions between subparsers; one parent per command keeps defaults apart
        p = argparse.ArgumentParser(add_help=False)
        p.add_argument("--seed", type=_seed, default=0)
        p.add_argument("--seeds", type=int, default=seeds, help="number of consecutive seeds starting at --seed")
        p.add_argument("--tracker", type=_tracker_override, action="append", metavar="KEY=VALUE")
        return p

    parser = argparse.ArgumentParser(prog="fockcc", description="Truncation varieties and coupled cluster degrees.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("normal-order", parents=[common], help="standard form of an operator word")
    p.add_argument("word", help="letters such as \"a1 a2' a3\"; a prime marks a creation operator")

    p = sub.add_parser("master", parents=[common], help="master polynomial for d electrons")
    p.add_argument("--d", type=int, required=True)

    p = sub.add_parser("param", parents=[common, dn], help="coordinates of the exponential parameterization")
    p.add_argument("--sigma", help="level set (default: the full grid)")

    sub.add_parser("analyze", parents=[common, dn, sig], help="dimension, linearity, hypothesis and family")
    sub.add_parser("census", parents=[common, dn], help="counts over every level set")
    sub.add_parser("ideal", parents=[common, dn, sig], help="chart generators of the truncation variety")

    p = sub.add_parser("cc-solve", parents=[common, dn, sig, solve(3)], help="CC degree by homotopy continuation")
    p.add_argument("--method", choices=("auto", "eigen", "total-degree", "monodromy"), default="auto")

    p = sub.add_parser("vdegree", parents=[common, dn, sig, solve(2)], help="numeric degree of the truncation variety")
    p.add_argument("--method", choices=("auto", "total-degree", "monodromy"), default="auto")

    p = sub.add_parser("verify-tables", parents=[common], help="re-derive the desk-scale table cells")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--full", action="store_true", help="also run flag (2,5) and spinor n=6")
    p.add_argument("--tracker", type=_tracker_override, action="append", metavar="KEY=VALUE")
    return parser


def _config(args) -> RunConfig:
    sigma = getattr(args, "sigma", None)
    cfg = RunConfig(
        command=args.command,
        d=getattr(args, "d", None),
        n=getattr(args, "n", None),
        seed=getattr(args, "seed", 0),
        tracker=_tracker(getattr(args, "tracker", None)),
        output=args.output,
        format=args.format,
        threads=max(1, args.threads),
    )
    if sigma is not None:
        levels = LevelSet.parse(sigma)
        cfg.sigma = levels.check(cfg.d, cfg.n) if cfg.d is not None and cfg.n is not None else levels
    return cfg


# --------------------------------------------------------------------------
# commands; each returns (json data, csv rows, text)

def _nf_terms(nf) -> list[dict]:
    return [{"creators": format_mask(B), "annihilators": format_mask(I), "coef": str(c)}
            for (B, I), c in sorted(nf.items())]


def cmd_normal_order(cfg: RunConfig, args):
    nf = normal_order(args.word)
    terms = _nf_terms(nf)
    rows = [["creators", "annihilators", "coef"]] + [[t["creators"], t["annihilators"], t["coef"]] for t in terms]
    return {"word": args.word, "normal_form": str(nf), "terms": terms}, rows, str(nf)


def cmd_master(cfg: RunConfig, args):
    poly = master_polynomial(cfg.d)
    data = {"d": cfg.d, "terms": len(poly), "polynomial": str(poly), "json": poly.to_json()}
    rows = [["d", "terms", "polynomial"], [cfg.d, len(poly), str(poly)]]
    return data, rows, f"{len(poly)} terms\n{poly}"


def cmd_param(cfg: RunConfig, args):
    pm = forward_map(cfg.d, cfg.n, cfg.sigma)
    coords = {format_mask(J): str(p) for J, p in enumerate(pm)}
    data = {"d": cfg.d, "n": cfg.n, "sigma": str(cfg.sigma) if cfg.sigma else None,
            "coordinates": coords, "json": pm.to_json()}
    rows = [["J", "polynomial"]] + [[k, v] for k, v in coords.items()]
    text = "\n".join(f"psi[{k}] = {v}" for k, v in coords.items())
    return data, rows, text


def cmd_analyze(cfg: RunConfig, args):
    rep = analyze(cfg.sigma, cfg.d, cfg.n)
    data = json.loads(rep.to_json())
    rows = [list(data.keys()), [json.dumps(v) if isinstance(v, dict) else v for v in data.values()]]
    text = "\n".join(f"{k}: {v}" for k, v in data.items())
    return data, rows, text


def cmd_census(cfg: RunConfig, args):
    data = census(cfg.d, cfg.n)
    rows = [["d", "n", "level_sets", "linear", "hypothesis"],
            [data["d"], data["n"], data["level_sets"], data["linear"], data["hypothesis"]]]
    text = "\n".join(f"{k}: {v}" for k, v in data.items())
    return data, rows, text


def cmd_ideal(cfg: RunConfig, args):
    gens = chart_ideal_generators(cfg.sigma, cfg.d, cfg.n)
    items = [{"J": format_mask(J), "degree": p.degree(), "generator": str(p)} for J, p in sorted(gens.items())]
    data = {"d": cfg.d, "n": cfg.n, "sigma": str(cfg.sigma), "generators": items}
    rows = [["J", "degree", "generator"]] + [[g["J"], g["degree"], g["generator"]] for g in items]
    text = "\n".join(f"[{g['J']}] {g['generator']}" for g in items)
    return data, rows, text


def _seeds(cfg: RunConfig, count: int) -> list[int]:
    return [(cfg.seed + k) % (SEED_MAX + 1) for k in range(max(1, count))]


def _report_rows(data: dict, keys: list[str]) -> list[list]:
    return [keys, [json.dumps(data[k]) if isinstance(data[k], (list, dict)) else data[k] for k in keys]]


def cmd_cc_solve(cfg: RunConfig, args):
    rep = cc_degree(cfg.d, cfg.n, cfg.sigma, cfg.tracker, seeds=_seeds(cfg, args.seeds),
                    method=args.method, threads=cfg.threads)
    data = json.loads(rep.to_json())
    rows = _report_rows(data, ["d", "n", "sigma", "dimension", "ccdeg", "counts", "n_real", "method", "seeds"])
    text = (f"ccdeg {rep.ccdeg}\ndimension {rep.dimension}\ncounts {rep.counts}\n"
            f"real {rep.n_real}\nmethod {rep.method}\nseeds {rep.seeds}")
    return data, rows, text


def cmd_vdegree(cfg: RunConfig, args):
    rep = variety_degree(cfg.d, cfg.n, cfg.sigma, cfg.tracker, seeds=_seeds(cfg, args.seeds),
                         method=args.method, threads=cfg.threads)
    data = json.loads(rep.to_json())
    rows = _report_rows(data, ["d", "n", "sigma", "dimension", "degree", "counts", "method", "seeds"])
    text = f"degree {rep.degree}\ndimension {rep.dimension}\ncounts {rep.counts}\nmethod {rep.method}"
    return data, rows, text


# table cells: (table, column, row, expected)
FLAG_TABLE = {(2, 4): (8, 12, 74), (2, 5): (11, 110, 713), (2, 6): (14, 1274, 8499),
              (3, 6): (15, 4550, 30070), (2, 7): (17, 17136, 116602), (3, 7): (19, 271320, 1821528)}
SPINOR_TABLE = {4: (6, 2, 13), 5: (10, 12, 98), 6: (15, 286, 2572), 7: (21, 33592, 318118)}
CENSUS_TABLE = {(2, 4): (254, 119, 74), (3, 6): (32766, 4790, 2186)}
DESK = {("flag", (2, 4)), ("spinor", 4), ("spinor", 5)}
DESK_FULL = DESK | {("flag", (2, 5)), ("spinor", 6)}


def table_cells(full: bool = False, seed: int = 0, tracker: TrackerConfig = TrackerConfig(), threads: int = 1):
    """Yield one dict per table cell with status PASS, FAIL or skipped."""
    desk = DESK_FULL if full else DESK

    def cell(table, column, row, expected, got):
        status = "PASS" if got == expected else "FAIL"
        return {"table": table, "column": column, "row": row, "expected": expected, "got": got, "status": status}

    def skipped(table, column, row, expected, why):
        return {"table": table, "column": column, "row": row, "expected": expected, "got": None,
                "status": f"skipped ({why})"}

    for (d, n), (lsets, lin, hyp) in CENSUS_TABLE.items():
        c = census(d, n)
        yield cell("census", f"({d},{n})", "level_sets", lsets, c["level_sets"])
        yield cell("census", f"({d},{n})", "linear", lin, c["linear"])
        yield cell("census", f"({d},{n})", "hypothesis", hyp, c["hypothesis"])

    tables = [("flag", key, FLAG, key, vals) for key, vals in FLAG_TABLE.items()]
    tables += [("spinor", n, SPINOR, (2, n), vals) for n, vals in SPINOR_TABLE.items()]
    for name, key, sigma, (d, n), (dim, deg, ccdeg) in tables:
        column = f"({d},{n})" if name == "flag" else f"n={n}"
        yield cell(name, column, "dim", dim, dimension(sigma, d, n))
        if (name, key) not in desk:
            yield skipped(name, column, "degree", deg, "scale")
            yield skipped(name, column, "CCdeg", ccdeg, "scale")
            continue
        vd = variety_degree(d, n, sigma, tracker, seeds=(seed,), threads=threads)
        yield cell(name, column, "degree", deg, vd.degree)
        cc = cc_degree(d, n, sigma, tracker, seeds=(seed,), threads=threads)
        yield cell(name, column, "CCdeg", ccdeg, cc.ccdeg)
    for row in ("mingens", "# real", "certify (sec)"):
        yield skipped("flag/spinor", "all", row, None, "not reproduced")


def cmd_verify_tables(cfg: RunConfig, args):
    cells = []
    lines = []
    for c in table_cells(args.full, cfg.seed, cfg.tracker, cfg.threads):
        cells.append(c)
        line = f"{c['status']:<18} {c['table']:<8} {c['column']:<7} {c['row']:<12} expected={c['expected']} got={c['got']}"
        lines.append(line)
        if cfg.format == "text" and cfg.output is None:
            print(line, flush=True)
    failed = sum(c["status"] == "FAIL" for c in cells)
    data = {"cells": cells, "failed": failed, "full": bool(args.full), "seed": cfg.seed}
    rows = [["status", "table", "column", "row", "expected", "got"]]
    rows += [[c["status"], c["table"], c["column"], c["row"], c["expected"], c["got"]] for c in cells]
    text = None if cfg.format == "text" and cfg.output is None else "\n".join(lines)
    return data, rows, text


COMMANDS = {
    "normal-order": cmd_normal_order,
    "master": cmd_master,
    "param": cmd_param,
    "analyze": cmd_analyze,
    "census": cmd_census,
    "ideal": cmd_ideal,
    "cc-solve": cmd_cc_solve,
    "vdegree": cmd_vdegree,
    "verify-tables": cmd_verify_tables,
}


# --------------------------------------------------------------------------
# output

def render(data: dict, rows: list, text: str | None, fmt: str, command: str) -> str:
    if fmt == "json":
        envelope = {"command": command, "result": data, "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())}
        return json.dumps(envelope, sort_keys=True, indent=2, default=str) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(rows)
        return buf.getvalue()
    return "" if text is None else text + "\n"


def _destination(cfg: RunConfig) -> Path | None:
    if cfg.output is not None:
        return cfg.output
    root = os.environ.get(OUTPUT_DIR_ENV)
    if root:
        ext = {"json": "json", "csv": "csv", "text": "txt"}[cfg.format]
        return Path(root) / f"{cfg.command}.{ext}"
    return None


def dispatch(cfg: RunConfig, args) -> int:
    data, rows, text = COMMANDS[cfg.command](cfg, args)
    out = render(data, rows, text, cfg.format, cfg.command)
    dest = _destination(cfg)
    if dest is None:
        sys.stdout.write(out)
    else:
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(out)
    return 1 if cfg.command == "verify-tables" and data["failed"] else 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        return dispatch(cfg, args)
    except LevelSetParseError as exc:
        print(f"error: malformed level set: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"error: capacity limit exceeded: {exc}", file=sys.stderr)
        return 3
    except (FockCCError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
