import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from syntaxattn.errors import MaskFormatError
from syntaxattn.localrange import LocalRangeMask, induce_from_distances
from syntaxattn.maskfile import decode_mask, encode_mask, read_mask, write_mask
from syntaxattn.softmask import SoftMask, build_soft_mask

from conftest import FIG1_DISTANCES


def test_fig1_hard_layout():
    data = encode_mask(induce_from_distances(FIG1_DISTANCES))
    assert data[:4] == b"SGAM"
    assert struct.unpack("<IIB", data[4:13]) == (1, 6, 0)
    rows = data[13:]
    assert len(rows) == 6  # one byte per row
    assert format(rows[2], "08b") == "01111000"  # row 3: swim..river, then padding
    assert [format(b, "08b")[:6] for b in rows] == [
        "111111", "111110", "011110", "001110", "000111", "111111",
    ]


def test_single_token_file():
    data = encode_mask(induce_from_distances([]))
    assert data == b"SGAM" + struct.pack("<IIB", 1, 1, 0) + b"\x80"


def test_soft_layout():
    soft = build_soft_mask(FIG1_DISTANCES, 10.0)
    data = encode_mask(soft)
    assert struct.unpack("<IIB", data[4:13]) == (1, 6, 1)
    payload = np.frombuffer(data[13:], dtype="<f4").reshape(6, 6)
    np.testing.assert_array_equal(payload, soft.weights.astype(np.float32))
    assert np.abs(decode_mask(data).weights - soft.weights).max() <= 1e-7


@given(st.lists(st.integers(1, 9), max_size=20))
def test_hard_round_trip(d):
    mask = induce_from_distances(d)
    data = encode_mask(mask)
    back = decode_mask(data)
    assert isinstance(back, LocalRangeMask)
    assert np.array_equal(back.bits, mask.bits)
    assert encode_mask(back) == data


@given(st.lists(st.integers(1, 9), max_size=20), st.floats(0.1, 30))
def test_soft_round_trip(d, tau):
    data = encode_mask(build_soft_mask(d, tau))
    back = decode_mask(data)
    assert isinstance(back, SoftMask)
    assert encode_mask(back) == data


def test_file_round_trip(tmp_path):
    mask = induce_from_distances([3, 1, 2, 5, 1, 1, 4, 2, 2])
    write_mask(tmp_path / "a.sgam", mask)
    write_mask(tmp_path / "b.sgam", read_mask(tmp_path / "a.sgam"))
    assert (tmp_path / "a.sgam").read_bytes() == (tmp_path / "b.sgam").read_bytes()


@pytest.mark.parametrize(
    "data",
    [
        b"SGA",
        b"XXXX" + struct.pack("<IIB", 1, 1, 0) + b"\x80",
        b"SGAM" + struct.pack("<IIB", 2, 1, 0) + b"\x80",
        b"SGAM" + struct.pack("<IIB", 1, 1, 7) + b"\x80",
        b"SGAM" + struct.pack("<IIB", 1, 2, 0) + b"\xc0",
        b"SGAM" + struct.pack("<IIB", 1, 1, 0) + b"\xc0",  # padding bit set
        b"SGAM" + struct.pack("<IIB", 1, 2, 1) + b"\x00" * 12,
    ],
)
def test_decode_rejects(data):
    with pytest.raises(MaskFormatError):
        decode_mask(data)


def test_encode_rejects_other_types():
    with pytest.raises(TypeError):
        encode_mask(np.ones((2, 2)))
