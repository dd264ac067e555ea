"""Command-line front end: construct, encode, repair, reconstruct, bench."""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import formats
from .bench import emit_csv, sweep_alpha, write_csv
from .codec import GeneralizedCode, Verification, assign_coefficients, default_verification, encode, reconstruct
from .errors import (
    GsrcError,
    InvalidField,
    InvalidParams,
    MdsSearchExhausted,
    NoValidPartition,
    UnsolvableSchedule,
    WrongNodeCount,
)
from .galois import FieldDesc
from .layout import CodeParams, build_index_arrays
from .repair import bandwidth, bounds, execute_repair, plan_repair

log = logging.getLogger("gsrc")

EXIT_OK, EXIT_USAGE, EXIT_BUILD, EXIT_VERIFY, EXIT_IO = 0, 1, 2, 3, 4
META_NAME = "metadata.json"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise CliError(f"{self.prog}: {message}", EXIT_USAGE)


def parse_node(text: str, k: int, n: int) -> int:
    """``d3`` / ``p1`` / plain 1-based index."""
    t = text.strip().lower()
    try:
        if t[:1] == "d":
            idx = int(t[1:])
            ok = 1 <= idx <= k
        elif t[:1] == "p":
            idx = k + int(t[1:])
            ok = k < idx <= n
        else:
            idx = int(t)
            ok = 1 <= idx <= n
    except ValueError:
        ok = False
    if not ok:
        raise CliError(f"bad node {text!r} (expected d1..d{k}, p1..p{n - k} or 1..{n})", EXIT_USAGE)
    return idx


def _params(args) -> CodeParams:
    try:
        return CodeParams(args.n, args.k, args.alpha, w=args.w, seed=args.seed)
    except (InvalidParams, ValueError) as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc


def _level(text: str | None, params: CodeParams) -> Verification:
    if text is None or text == "auto":
        return default_verification(params)
    try:
        return Verification.parse(text)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc


def _load(path: Path) -> tuple[GeneralizedCode, int | None]:
    try:
        return formats.load_metadata(path)
    except OSError as exc:
        raise CliError(f"cannot read metadata {path}: {exc.strerror or exc}", EXIT_IO) from exc
    except (formats.FormatError, KeyError, TypeError) as exc:
        raise CliError(f"{path}: malformed metadata ({exc})", EXIT_IO) from exc


def _write(path: Path, writer) -> None:
    try:
        writer(path)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}", EXIT_IO) from exc


def _meta_path(args) -> Path:
    if args.meta:
        return Path(args.meta)
    return Path(args.shards) / META_NAME


def _read_shards(code: GeneralizedCode, folder: Path, nodes) -> dict[int, np.ndarray]:
    p = code.params
    out = {}
    stripes = None
    for v in nodes:
        path = folder / formats.shard_name(v, p.k)
        try:
            head, data = formats.read_shard(path)
        except OSError as exc:
            raise CliError(f"cannot read shard {path}: {exc.strerror or exc}", EXIT_IO) from exc
        except formats.FormatError as exc:
            raise CliError(f"{path}: {exc}", EXIT_IO) from exc
        if not head.matches(p) or head.node != v:
            raise CliError(f"{path}: header (w={head.w} n={head.n} k={head.k} alpha={head.alpha} node={head.node}) "
                           f"does not match the metadata", EXIT_IO)
        if stripes is not None and head.stripes != stripes:
            raise CliError(f"{path}: {head.stripes} stripes, other shards have {stripes}", EXIT_IO)
        stripes = head.stripes
        out[v] = data
    return out


def _present(code: GeneralizedCode, folder: Path) -> list[int]:
    return [v for v in range(1, code.params.n + 1) if (folder / formats.shard_name(v, code.params.k)).is_file()]


# -- verbs ------------------------------------------------------------------


def cmd_construct(args) -> int:
    params = _params(args)
    try:
        desc = FieldDesc(args.w, args.poly)
    except InvalidField as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc
    if args.w not in formats.SHARD_W:
        raise CliError(f"w must be one of {formats.SHARD_W}", EXIT_USAGE)
    level = _level(args.verify, params)
    try:
        layout = build_index_arrays(params)
    except (NoValidPartition, UnsolvableSchedule) as exc:
        raise CliError(f"partitioning/scheduling failed: {exc}", EXIT_BUILD) from exc
    try:
        coeffs, report = assign_coefficients(layout, desc, params.seed, level)
    except MdsSearchExhausted as exc:
        raise CliError(f"MDS search failed: {exc}", EXIT_VERIFY) from exc
    code = GeneralizedCode(layout, desc, coeffs, report)
    out = Path(args.out)
    _write(out, lambda p: formats.save_metadata(p, code))
    print(f"wrote {out}: n={params.n} k={params.k} alpha={params.alpha} w={params.w} "
          f"verified {report.level} over {report.checked} subsets")
    return EXIT_OK


def cmd_encode(args) -> int:
    code, _ = _load(Path(args.meta))
    p = code.params
    src = Path(args.input)
    try:
        data = src.read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read input {src}: {exc.strerror or exc}", EXIT_IO) from exc
    outdir = Path(args.out)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {outdir}: {exc.strerror or exc}", EXIT_IO) from exc
    message = formats.file_to_stripes(data, p.k, p.alpha, p.w)
    stripe = encode(code, message)
    for v in range(1, p.n + 1):
        _write(outdir / formats.shard_name(v, p.k), lambda path, v=v: formats.write_shard(path, p, v, stripe.node(v)))
    _write(outdir / META_NAME, lambda path: formats.save_metadata(path, code, len(data)))
    print(f"encoded {len(data)} bytes into {message.shape[2]} stripes x {p.n} shards in {outdir}")
    return EXIT_OK


def cmd_repair(args) -> int:
    folder = Path(args.shards)
    code, _ = _load(_meta_path(args))
    p = code.params
    failed = parse_node(args.node, p.k, p.n)
    if failed > p.k:
        raise CliError(f"unsupported operation: p{failed - p.k} is a parity node; only d1..d{p.k} can be repaired",
                       EXIT_USAGE)
    others = [v for v in range(1, p.n + 1) if v != failed]
    missing = [formats.shard_name(v, p.k) for v in others if v not in _present(code, folder)]
    if missing:
        raise CliError(f"missing shards: {', '.join(missing)}", EXIT_IO)
    plan = plan_repair(code, failed)
    trace = bandwidth(plan)
    needed = sorted({node for node, _ in plan.reads})
    shards = _read_shards(code, folder, needed)
    data = execute_repair(code, plan, shards)
    out = Path(args.out) if args.out else folder / formats.shard_name(failed, p.k)
    _write(out, lambda path: formats.write_shard(path, p, failed, data))
    lo, hi = bounds(p)
    where = "= lower bound" if trace.gamma == lo else f"within [{lo}, {hi}]"
    print(f"repaired d{failed} -> {out}")
    print(f"accessed {trace.accessed} symbols/stripe, transferred {trace.transferred} symbols/stripe")
    print(f"gamma {trace.gamma} ({float(trace.gamma):.6g}) {where}; bounds lower={lo} upper={hi}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    folder = Path(args.shards)
    code, length = _load(_meta_path(args))
    p = code.params
    if length is None:
        raise CliError("metadata carries no file_length; use the copy written by encode", EXIT_IO)
    if args.nodes:
        nodes = sorted({parse_node(t, p.k, p.n) for t in args.nodes.split(",")})
    else:
        nodes = _present(code, folder)[: p.k]
    if len(nodes) < p.k:
        raise CliError(f"need {p.k} shards, found {len(nodes)} ({p.k - len(nodes)} short)", EXIT_IO)
    if len(nodes) > p.k:
        raise CliError(f"need exactly {p.k} shards, got {len(nodes)}", EXIT_USAGE)
    shards = _read_shards(code, folder, nodes)
    try:
        message = reconstruct(code, shards)
    except WrongNodeCount as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc
    out = Path(args.out)
    _write(out, lambda path: path.write_bytes(formats.stripes_to_file(message, length, p.w)))
    print(f"reconstructed {length} bytes from {', '.join(formats.shard_name(v, p.k)[:-5] for v in nodes)} -> {out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        alphas = [int(a) for a in args.alphas.split(",") if a]
    except ValueError as exc:
        raise CliError(f"bad --alphas {args.alphas!r}", EXIT_USAGE) from exc
    rows = sweep_alpha(args.n, args.k, alphas, w=args.w, seed=args.seed, level=args.verify if args.verify != "auto" else None)
    if args.csv:
        try:
            emit_csv(rows, args.csv)
        except OSError as exc:
            raise CliError(str(exc), EXIT_IO) from exc
    else:
        write_csv(rows, sys.stdout)
    for row in rows:
        if row.error:
            log.error("alpha=%d: %s", row.alpha, row.error)
    return EXIT_BUILD if any(row.error for row in rows) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="gsrc", description="Access-optimal regenerating codes at any sub-packetization level.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    c = sub.add_parser("construct", help="build and verify a code, write its metadata")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--alpha", type=int, required=True)
    c.add_argument("--w", type=int, default=16, choices=formats.SHARD_W)
    c.add_argument("--poly", type=lambda s: int(s, 0), default=None, help="reduction polynomial, e.g. 0x19")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--verify", default="auto", help="auto | exhaustive | sampled[:N]")
    c.add_argument("--out", default=META_NAME)
    c.set_defaults(func=cmd_construct)

    e = sub.add_parser("encode", help="split a file into n shards")
    e.add_argument("--meta", required=True)
    e.add_argument("--input", required=True)
    e.add_argument("--out", required=True, help="shard directory")
    e.set_defaults(func=cmd_encode)

    r = sub.add_parser("repair", help="regenerate one systematic shard")
    r.add_argument("--shards", required=True)
    r.add_argument("--node", required=True, help="d1..dk or 1-based index")
    r.add_argument("--meta", help=f"defaults to SHARDS/{META_NAME}")
    r.add_argument("--out", help="defaults to the shard's own path")
    r.set_defaults(func=cmd_repair)

    x = sub.add_parser("reconstruct", help="rebuild the file from k shards")
    x.add_argument("--shards", required=True)
    x.add_argument("--out", required=True)
    x.add_argument("--meta", help=f"defaults to SHARDS/{META_NAME}")
    x.add_argument("--nodes", help="comma list of k nodes; default: first k present")
    x.set_defaults(func=cmd_reconstruct)

    b = sub.add_parser("bench", help="average repair bandwidth over alpha, as CSV")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--alphas", required=True, help="comma list, e.g. 1,2,4,8")
    b.add_argument("--w", type=int, default=16, choices=formats.SHARD_W)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--verify", default="auto")
    b.add_argument("--csv", help="output path; stdout if omitted")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except CliError as exc:
        print(exc, file=sys.stderr)
        return exc.code
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    warnings.formatwarning = lambda msg, cat, *_a, **_k: f"warning: {msg}\n"
    try:
        return args.func(args)
    except CliError as exc:
        print(f"gsrc {args.verb}: {exc}", file=sys.stderr)
        return exc.code
    except GsrcError as exc:
        print(f"gsrc {args.verb}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BUILD


if __name__ == "__main__":
    sys.exit(main())
