from __future__ import annotations

import numpy as np
import pytest

from gsrc import formats
from gsrc.formats import FormatError, ShardHeader

from conftest import cached_code


@pytest.mark.parametrize("w", [4, 8, 16])
def test_symbol_round_trip(w, rng):
    data = rng.integers(0, 256, 37, dtype=np.uint8).tobytes()
    sym = formats.bytes_to_symbols(data, w)
    back = formats.symbols_to_bytes(sym, w)
    assert back[: len(data)] == data


def test_bit_order():
    assert formats.bytes_to_symbols(b"\xab", 4).tolist() == [0xA, 0xB]
    assert formats.bytes_to_symbols(b"\x12\x34", 16).tolist() == [0x1234]
    assert formats.symbols_to_bytes(np.array([0x1234]), 16) == b"\x12\x34"


def test_unsupported_width():
    with pytest.raises(FormatError):
        formats.bytes_to_symbols(b"x", 5)


@pytest.mark.parametrize("w", [4, 8, 16])
def test_stripes_are_byte_slices(w):
    k, alpha = 3, 4
    nbytes = k * alpha * w // 8
    data = bytes(range(1, nbytes + 1))
    msg = formats.file_to_stripes(data, k, alpha, w)
    assert msg.shape == (k, alpha, 1)
    per = nbytes // k
    for j in range(k):
        assert formats.pack_node(msg[j], w) == data[j * per : (j + 1) * per]
    assert formats.stripes_to_file(msg, len(data), w) == data


def test_padding_and_unpad(rng):
    data = rng.integers(0, 256, 101, dtype=np.uint8).tobytes()
    msg = formats.file_to_stripes(data, 3, 4, 16)
    assert msg.shape[2] == 5  # 51 symbols over 12-symbol stripes
    assert formats.stripes_to_file(msg, len(data), 16) == data


def test_odd_alpha_nibbles(rng):
    data = rng.integers(0, 16, (3, 5)).astype(np.int64)
    packed = formats.pack_node(data, 4)
    assert len(packed) == 5 * formats.row_bytes(3, 4)
    assert np.array_equal(formats.unpack_node(packed, 3, 5, 4), data)


def test_empty_file():
    msg = formats.file_to_stripes(b"", 3, 4, 8)
    assert msg.shape == (3, 4, 0)
    assert formats.stripes_to_file(msg, 0, 8) == b""


def test_header_round_trip():
    h = ShardHeader(16, 14, 10, 64, 11, 820, 104960)
    raw = h.pack()
    assert raw[:4] == b"GSRC" and len(raw) == formats.HEADER.size
    assert ShardHeader.unpack(raw) == h
    with pytest.raises(FormatError):
        ShardHeader.unpack(b"XXXX" + raw[4:])
    with pytest.raises(FormatError):
        ShardHeader.unpack(raw[:10])


def test_shard_file(tmp_path, code534, rng):
    data = rng.integers(0, 16, (4, 6))
    path = tmp_path / "d1.gsrc"
    formats.write_shard(path, code534.params, 1, data)
    head, back = formats.read_shard(path)
    assert head.node == 1 and head.stripes == 6 and head.payload_len == 12
    assert np.array_equal(back, data)
    path.write_bytes(path.read_bytes()[:-1])
    with pytest.raises(FormatError):
        formats.read_shard(path)


def test_metadata_canonical(tmp_path, code534):
    first = formats.dumps(formats.code_to_dict(code534, 99))
    code, length = formats.code_from_dict(__import__("json").loads(first))
    assert length == 99
    assert formats.dumps(formats.code_to_dict(code, length)) == first
    assert code.coeffs == code534.coeffs
    assert code.pattern.arrays == code534.pattern.arrays
    assert code.layout.parts == code534.layout.parts


def test_metadata_self_contained(tmp_path, rng):
    code = cached_code(9, 6, 5)
    formats.save_metadata(tmp_path / "m.json", code)
    loaded, _ = formats.load_metadata(tmp_path / "m.json")
    msg = code.gf.random(rng, (6, 5))
    from gsrc.codec import encode

    assert np.array_equal(encode(loaded, msg).parity, encode(code, msg).parity)


def test_metadata_rejects_garbage(tmp_path):
    p = tmp_path / "m.json"
    p.write_text("{not json")
    with pytest.raises(FormatError):
        formats.load_metadata(p)
    with pytest.raises(FormatError):
        formats.code_from_dict({"format": "other"})
