import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tpm_reconcile.codec import (
    bits_from_str,
    bits_to_str,
    block_bits_for,
    decode,
    derive_halfwidth,
    encode,
    sequence_length,
)


def reference_block_value(block: str) -> int:
    """Independent decoder: Python's base-2 int parsing."""
    return int(block, 2) - 2 ** (len(block) - 1)


@pytest.mark.parametrize("b, L", [(4, 8), (1, 1), (9, 256), (10, 512), (21, 2**20)])
def test_derive_halfwidth(b, L):
    assert derive_halfwidth(b) == L
    assert block_bits_for(L) == b


@pytest.mark.parametrize("b", [0, 22, -1])
def test_derive_halfwidth_range(b):
    with pytest.raises(ValueError):
        derive_halfwidth(b)


@pytest.mark.parametrize("L", [0, 3, 12, 100])
def test_block_bits_needs_power_of_two(L):
    with pytest.raises(ValueError):
        block_bits_for(L)


@pytest.mark.parametrize("args, n", [((4, 10, 15), 600), ((1, 1, 1), 1), ((10, 10, 15), 1500)])
def test_sequence_length(args, n):
    assert sequence_length(*args) == n


def test_encode_extreme_blocks():
    assert encode("0000", 4, 1, 1).tolist() == [[-8]]
    assert encode("1111", 4, 1, 1).tolist() == [[7]]


def test_encode_two_blocks():
    assert [reference_block_value(b) for b in ("0110", "0001")] == [-2, -7]
    assert encode("01100001", 4, 1, 2).tolist() == [[-2, -7]]


def test_encode_is_row_major():
    bits = "00" + "01" + "10" + "11"
    assert encode(bits, 2, 2, 2).tolist() == [[-2, -1], [0, 1]]


def test_decode_examples():
    assert bits_to_str(decode(np.array([[-8]]), 4)) == "0000"
    assert bits_to_str(decode(np.array([[-2, -7]]), 4)) == "01100001"


def test_encode_rejects_bad_input():
    with pytest.raises(ValueError):
        encode("0101", 4, 1, 2)
    with pytest.raises(ValueError):
        encode("01x0", 4, 1, 1)
    with pytest.raises(ValueError):
        encode([0, 1, 2, 0], 4, 1, 1)


def test_decode_rejects_out_of_range():
    with pytest.raises(ValueError):
        decode(np.array([[8]]), 4)
    with pytest.raises(ValueError):
        decode(np.array([[-9]]), 4)


@pytest.mark.parametrize("b", range(1, 11))
def test_block_map_is_bijective(b):
    L = derive_halfwidth(b)
    images = set()
    for block in itertools.product("01", repeat=b):
        s = "".join(block)
        w = int(encode(s, b, 1, 1)[0, 0])
        assert w == reference_block_value(s)
        assert -L <= w <= L - 1
        images.add(w)
    assert images == set(range(-L, L))


@settings(max_examples=300, deadline=None)
@given(b=st.integers(1, 12), K=st.integers(1, 5), N=st.integers(1, 6), data=st.data())
def test_roundtrip(b, K, N, data):
    n = b * K * N
    text = data.draw(st.text(alphabet="01", min_size=n, max_size=n))
    w = encode(text, b, K, N)
    assert w.shape == (K, N)
    assert bits_to_str(decode(w, b)) == text


def test_str_conversion_roundtrip():
    assert bits_to_str(bits_from_str("0110")) == "0110"
    assert bits_from_str("101").tolist() == [1, 0, 1]
