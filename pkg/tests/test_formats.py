import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pbit_grng.coupling import GrngSpec, Mode
from pbit_grng.errors import FormatError
from pbit_grng.formats import (
    HEADER_SIZE,
    decode_binary,
    encode_binary,
    format_csv,
    parse_csv,
)


def _le(value, size):
    return value.to_bytes(size, "little")


def _golden(values, n_bits=8, mode=1, flags=0, mu=0.5, sigma=0.25, seed=7):
    return (b"PGRN" + _le(1, 2) + _le(n_bits, 2) + bytes([mode, flags]) + _le(0, 2)
            + struct.pack("<d", mu) + struct.pack("<d", sigma) + _le(seed, 8)
            + _le(len(values), 8) + b"".join(_le(v, 8) for v in values))


def test_header_layout_is_44_bytes():
    assert HEADER_SIZE == 44


def test_encode_matches_golden_bytes():
    vals = [0, 1, 255, 128]
    got = encode_binary(np.array(vals, dtype=np.uint64), 8, Mode.RANDOM_SCAN, 0.5, 0.25, 7)
    assert got == _golden(vals)
    assert got[:4] == b"PGRN" and got[44:52] == b"\x00" * 8
    # mu=0.5 as little-endian f64
    assert got[12:20].hex() == "000000000000e03f"


def test_decode_golden_bytes():
    sf = decode_binary(_golden([3, 200], mode=2, seed=2**64 - 1))
    assert sf.n_bits == 8 and sf.mode is Mode.AUTONOMOUS
    assert sf.seed == 2**64 - 1 and sf.mu == 0.5 and sf.sigma == 0.25
    np.testing.assert_array_equal(sf.values, [3, 200])
    assert sf.config_text is None


@given(
    n_bits=st.integers(1, 64),
    data=st.data(),
    mode=st.sampled_from(list(Mode)),
    seed=st.integers(0, 2**64 - 1),
    config=st.one_of(st.none(), st.text(max_size=200)),
)
def test_binary_round_trip(n_bits, data, mode, seed, config):
    vals = data.draw(st.lists(st.integers(0, 2**n_bits - 1), max_size=50))
    blob = encode_binary(np.array(vals, dtype=np.uint64), n_bits, mode, 0.3, 0.07, seed, config)
    sf = decode_binary(blob)
    assert sf.values.tolist() == vals
    assert (sf.n_bits, sf.mode, sf.seed, sf.config_text) == (n_bits, mode, seed, config)


@pytest.mark.parametrize(
    "blob, offset, text",
    [
        (b"", 0, "empty"),
        (b"PGR", 0, "magic"),
        (b"XXXX" + b"\x00" * 60, 0, "magic"),
        (_golden([1])[:30], 30, "header truncated"),
        (_golden([1])[:4] + _le(2, 2) + _golden([1])[6:], 4, "version"),
        (_golden([1], n_bits=0), 6, "n_bits"),
        (_golden([1], mode=9), 8, "mode"),
        (_golden([1], flags=0x80), 9, "flags"),
        (_golden([1, 2, 3])[:-12], 44 + 8, "payload truncated"),
        (_golden([1, 2, 3])[:-8], 44 + 16, "payload truncated"),
        (_golden([1, 999, 3]), 44 + 8, "exceeds G0"),
        (_golden([1]) + b"junk", 52, "unexpected bytes"),
        (_golden([1], flags=1), 52, "trailer"),
        (_golden([1], flags=1) + b"PCFG" + _le(10, 4) + b"abc", 56, "trailer declares"),
    ],
)
def test_decode_errors_name_offset(blob, offset, text):
    with pytest.raises(FormatError) as info:
        decode_binary(blob)
    assert info.value.offset == offset
    assert text in str(info.value)
    assert f"byte offset {offset}" in str(info.value)


def test_csv_layout_and_round_trip():
    spec = GrngSpec(8, 0.5, 0.25)
    vals = np.array([0, 128, 255], dtype=np.uint64)
    text = format_csv(vals, spec, "seed = 3\nmu = 0.5")
    lines = text.splitlines()
    assert lines[:3] == ["# seed = 3", "# mu = 0.5", "index,G,X"]
    assert lines[3] == "0,0,-2"
    assert lines[4].startswith("1,128,0.00784313725490")
    g, x, cfg = parse_csv(text)
    np.testing.assert_array_equal(g, vals)
    np.testing.assert_array_equal(x, (vals / 255.0 - 0.5) / 0.25)
    assert cfg == "seed = 3\nmu = 0.5\n"


@given(st.lists(st.integers(0, 2**64 - 1), min_size=1, max_size=40))
def test_csv_and_binary_decode_to_same_g(vals):
    spec = GrngSpec(64, 0.5, 0.1)
    arr = np.array(vals, dtype=np.uint64)
    g_csv, _, _ = parse_csv(format_csv(arr, spec))
    g_bin = decode_binary(encode_binary(arr, 64, spec.mode, 0.5, 0.1, 0)).values
    np.testing.assert_array_equal(g_csv, g_bin)


@pytest.mark.parametrize(
    "text, offset",
    [
        ("", 0),
        ("G,X\n0,1\n", 0),
        ("index,G,X\n0,1\n", 10),
        ("index,G,X\n0,1,0.5\n2,1,0.5\n", 18),
        ("# c\nindex,G,X\n0,abc,1\n", 14),
    ],
)
def test_csv_errors(text, offset):
    with pytest.raises(FormatError) as info:
        parse_csv(text)
    assert info.value.offset == offset
