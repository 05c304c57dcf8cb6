import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from srumcc.trellis import (CodeSpec, GeneratorPolynomials, TAILBITING, TRUNCATED, build_trellis,
                            build_rm_product_trellis, conv_encode, rm_product_encode)

P75 = GeneratorPolynomials.from_octal(["7", "5"])
P2731 = GeneratorPolynomials.from_octal(["27", "31"])


def test_octal_is_msb_first():
    # [27]_8 = D^4 + D^2 + D + 1
    assert P2731.coefficients(0) == [1, 1, 1, 0, 1]
    assert P2731.coefficients(1) == [1, 0, 0, 1, 1]
    assert P2731.memory == 4 and P2731.n_out == 2


def test_polynomial_validation():
    with pytest.raises(ValueError):
        GeneratorPolynomials(())
    with pytest.raises(ValueError):
        GeneratorPolynomials((7, 0))
    with pytest.raises(ValueError):
        build_trellis(P75, 0)


def test_75_hand_convolution():
    out = conv_encode(P75, [1, 0, 0, 0])
    assert "".join(map(str, out)) == "11101100"
    tr = build_trellis(P75, 4)
    assert tr.num_states == 4 and tr.num_sections == 4
    assert np.array_equal(tr.encode(np.array([1, 0, 0, 0], dtype=np.uint8)), out)


def test_tbcc_shape():
    tr = build_trellis(P2731, 32, TAILBITING)
    assert tr.num_states == 16 and tr.k == 32 and tr.n == 64 and tr.tail_biting


def test_tbcc_weight_one_inputs_are_cyclic_shifts():
    k = 32
    base = conv_encode(P2731, np.eye(k, dtype=np.uint8)[0], TAILBITING)
    for i in range(k):
        c = conv_encode(P2731, np.eye(k, dtype=np.uint8)[i], TAILBITING)
        assert np.array_equal(c, np.roll(base, 2 * i))


@pytest.mark.parametrize("mode", [TRUNCATED, TAILBITING])
@pytest.mark.parametrize("polys", [P75, P2731])
def test_path_codeword_bijection(polys, mode):
    k = 8
    tr = build_trellis(polys, k, mode)
    words = set()
    for u in itertools.product((0, 1), repeat=k):
        u = np.array(u, dtype=np.uint8)
        path = tr.encode_path(u)
        c = tr.path_codeword(path)
        assert np.array_equal(c, conv_encode(polys, u, mode))
        assert np.array_equal(tr.path_info(path), u)
        if mode == TAILBITING:
            assert tr.path_start_state(path) == tr.path_end_state(path)
        words.add(c.tobytes())
    assert len(words) == 2 ** k


@given(st.lists(st.integers(0, 1), min_size=10, max_size=10),
       st.lists(st.integers(0, 1), min_size=10, max_size=10),
       st.sampled_from([TRUNCATED, TAILBITING]))
def test_linearity(a, b, mode):
    a, b = np.array(a, dtype=np.uint8), np.array(b, dtype=np.uint8)
    lhs = conv_encode(P2731, a ^ b, mode)
    assert np.array_equal(lhs, conv_encode(P2731, a, mode) ^ conv_encode(P2731, b, mode))


def test_all_zero_path_gives_zero_word():
    for spec in ["conv:[27,31]o:k=12", "conv:[25,33,37]o:k=12:tb", "rm84x2"]:
        b = CodeSpec.parse(spec)
        assert not b.encode(np.zeros(b.k, dtype=np.uint8)).any()


def test_rm84_codebook():
    U = np.array(list(itertools.product((0, 1), repeat=4)), dtype=np.uint8)
    C = {rm_product_encode(u, 1).tobytes() for u in U}
    assert len(C) == 16
    weights = sorted(np.frombuffer(c, dtype=np.uint8).sum() for c in C)
    assert weights == [0] + [4] * 14 + [8]
    tr = build_rm_product_trellis(1)
    assert tr.meta["state_profile"] == [1, 2, 4, 8, 4, 8, 4, 2, 1]
    for u in U:
        assert np.array_equal(tr.encode(u), rm_product_encode(u, 1))


def test_rm_product_dimensions():
    tr = build_rm_product_trellis(8)
    assert tr.k == 32 and tr.n == 64


@pytest.mark.parametrize("text", ["conv:[27,31]o:k=32:tb", "conv:[25,33,37]o:k=48:tb",
                                  "conv:[25,27,33,37]o:k=32:tb", "conv:[27,31]o:k=32", "rm84x8"])
def test_codespec_round_trip(text):
    b = CodeSpec.parse(text)
    assert CodeSpec.parse(str(b)) == b
    assert b.trellis.n == b.n and b.trellis.k == b.k


def test_codespec_rejects_garbage():
    with pytest.raises(ValueError):
        CodeSpec.parse("conv:[27,31]:k=x")
    with pytest.raises(ValueError):
        CodeSpec.parse("rm84x0")


def test_generator_matrix_reproduces_encoder(rng):
    b = CodeSpec.parse("conv:[27,31]o:k=16:tb")
    G = b.generator_matrix()
    for _ in range(20):
        u = rng.integers(0, 2, b.k, dtype=np.uint8)
        assert np.array_equal(u @ G % 2, b.encode(u))
