"""On-disk formats: shard files, symbol packing and the metadata document.

Bytes map to symbols most-significant bits first: a w=4 byte holds two
symbols (high nibble first), a w=16 symbol is a big-endian byte pair. With
this order a systematic shard is a plain byte slice of the input whenever
``alpha * w`` is a multiple of 8.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from math import ceil
from pathlib import Path

import numpy as np

from .codec import CoefficientTable, GeneralizedCode, MdsReport, Verification
from .errors import GsrcError
from .galois import FieldDesc
from .layout import CodeParams, Layout, ParityPattern, Partitioning

MAGIC = b"GSRC"
VERSION = 1
HEADER = struct.Struct("<4sHHHHIHQQ")
SHARD_W = (4, 8, 16)
BYTE_ORDER = "msb-first"


class FormatError(GsrcError, ValueError):
    pass


# -- symbol packing ---------------------------------------------------------


def _check_w(w: int) -> None:
    if w not in SHARD_W:
        raise FormatError(f"shards support w in {SHARD_W}, got {w}")


def bytes_to_symbols(data: bytes, w: int) -> np.ndarray:
    """Symbol stream for ``data``; a trailing odd byte is zero-extended for w=16."""
    _check_w(w)
    raw = np.frombuffer(data, dtype=np.uint8).astype(np.int64)
    if w == 8:
        return raw
    if w == 4:
        out = np.empty(raw.size * 2, dtype=np.int64)
        out[0::2] = raw >> 4
        out[1::2] = raw & 0xF
        return out
    if raw.size % 2:
        raw = np.append(raw, 0)
    return (raw[0::2] << 8) | raw[1::2]


def symbols_to_bytes(symbols: np.ndarray, w: int) -> bytes:
    """Inverse of :func:`bytes_to_symbols`; an odd w=4 count is padded with a zero nibble."""
    _check_w(w)
    s = np.asarray(symbols, dtype=np.int64).ravel()
    if w == 8:
        return s.astype(np.uint8).tobytes()
    if w == 4:
        if s.size % 2:
            s = np.append(s, 0)
        return ((s[0::2] << 4) | s[1::2]).astype(np.uint8).tobytes()
    return s.astype(">u2").tobytes()


def row_bytes(alpha: int, w: int) -> int:
    """Bytes one node occupies per stripe."""
    return ceil(alpha * w / 8)


def pack_node(data: np.ndarray, w: int) -> bytes:
    """``data`` is (alpha, stripes); output is stripe-major, each stripe row packed separately."""
    return b"".join(symbols_to_bytes(col, w) for col in np.asarray(data).T)


def unpack_node(payload: bytes, alpha: int, stripes: int, w: int) -> np.ndarray:
    rb = row_bytes(alpha, w)
    if len(payload) != rb * stripes:
        raise FormatError(f"payload is {len(payload)} bytes, expected {rb * stripes}")
    out = np.zeros((alpha, stripes), dtype=np.int64)
    for s in range(stripes):
        out[:, s] = bytes_to_symbols(payload[s * rb : (s + 1) * rb], w)[:alpha]
    return out


def file_to_stripes(data: bytes, k: int, alpha: int, w: int) -> np.ndarray:
    """Split ``data`` into zero-padded stripes; returns (k, alpha, stripes)."""
    sym = bytes_to_symbols(data, w)
    per = k * alpha
    stripes = ceil(sym.size / per)
    buf = np.zeros(stripes * per, dtype=np.int64)
    buf[: sym.size] = sym
    return buf.reshape(stripes, k, alpha).transpose(1, 2, 0)


def stripes_to_file(message: np.ndarray, length: int, w: int) -> bytes:
    k, alpha, stripes = message.shape
    sym = message.transpose(2, 0, 1).reshape(-1)
    return symbols_to_bytes(sym, w)[:length]


# -- shard files ------------------------------------------------------------


@dataclass(frozen=True)
class ShardHeader:
    w: int
    n: int
    k: int
    alpha: int
    node: int
    stripes: int
    payload_len: int

    def pack(self) -> bytes:
        return HEADER.pack(MAGIC, VERSION, self.w, self.n, self.k, self.alpha, self.node, self.stripes, self.payload_len)

    @classmethod
    def unpack(cls, raw: bytes) -> "ShardHeader":
        if len(raw) < HEADER.size:
            raise FormatError("truncated shard header")
        magic, version, *fields = HEADER.unpack(raw[: HEADER.size])
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"unsupported shard version {version}")
        return cls(*fields)

    def matches(self, params: CodeParams) -> bool:
        return (self.w, self.n, self.k, self.alpha) == (params.w, params.n, params.k, params.alpha)


def write_shard(path: Path, params: CodeParams, node: int, data: np.ndarray) -> None:
    """``data`` is the node's (alpha, stripes) symbols."""
    payload = pack_node(data, params.w)
    head = ShardHeader(params.w, params.n, params.k, params.alpha, node, data.shape[1], len(payload))
    path.write_bytes(head.pack() + payload)


def read_shard(path: Path) -> tuple[ShardHeader, np.ndarray]:
    raw = Path(path).read_bytes()
    head = ShardHeader.unpack(raw)
    payload = raw[HEADER.size :]
    if len(payload) != head.payload_len:
        raise FormatError(f"{path}: payload has {len(payload)} bytes, header says {head.payload_len}")
    return head, unpack_node(payload, head.alpha, head.stripes, head.w)


def shard_name(node: int, k: int) -> str:
    return f"d{node}.gsrc" if node <= k else f"p{node - k}.gsrc"


# -- metadata ---------------------------------------------------------------


def code_to_dict(code: GeneralizedCode, file_length: int | None = None) -> dict:
    p = code.params
    doc = {
        "format": "gsrc-metadata",
        "version": VERSION,
        "params": {"n": p.n, "k": p.k, "alpha": p.alpha, "w": p.w, "seed": p.seed},
        "field": {"w": code.field.w, "poly": code.field.full_poly},
        "ingest_byte_order": BYTE_ORDER,
        "groups": [list(g) for g in code.layout.groups],
        "partitions": [
            {
                "node": part.node,
                "subsets": [list(s) for s in part.subsets],
                "rho": part.rho,
                "cells": [list(c) for c in part.cells],
            }
            for part in code.layout.parts
        ],
        "index_arrays": code.pattern.to_lists(),
        "coefficients": code.coeffs.to_lists(),
    }
    if code.report is not None:
        doc["verification"] = {
            "level": str(code.report.level),
            "checked": code.report.checked,
            "passed": code.report.passed,
            "failures": [list(f) for f in code.report.failures],
        }
    if file_length is not None:
        doc["file_length"] = file_length
    return doc


def code_from_dict(doc: dict) -> tuple[GeneralizedCode, int | None]:
    if doc.get("format") != "gsrc-metadata":
        raise FormatError("not a gsrc metadata document")
    if doc.get("ingest_byte_order", BYTE_ORDER) != BYTE_ORDER:
        raise FormatError(f"unsupported byte order {doc['ingest_byte_order']!r}")
    pr = doc["params"]
    params = CodeParams(pr["n"], pr["k"], pr["alpha"], w=pr["w"], seed=pr["seed"])
    desc = FieldDesc(doc["field"]["w"], doc["field"]["poly"])
    pattern = ParityPattern.from_lists(params.k, params.alpha, params.r, doc["index_arrays"])
    pattern.validate()
    parts = [
        Partitioning(
            d["node"],
            tuple(tuple(s) for s in d["subsets"]),
            d["rho"],
            tuple(tuple(c) for c in d["cells"]),
        )
        for d in doc["partitions"]
    ]
    layout = Layout(params, [tuple(g) for g in doc["groups"]], parts, pattern)
    coeffs = CoefficientTable.from_lists(doc["coefficients"])
    report = None
    if "verification" in doc:
        v = doc["verification"]
        report = MdsReport(Verification.parse(v["level"]), v["checked"], [tuple(f) for f in v["failures"]])
    return GeneralizedCode(layout, desc, coeffs, report), doc.get("file_length")


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def save_metadata(path: Path, code: GeneralizedCode, file_length: int | None = None) -> None:
    Path(path).write_text(dumps(code_to_dict(code, file_length)))


def load_metadata(path: Path) -> tuple[GeneralizedCode, int | None]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    return code_from_dict(doc)
