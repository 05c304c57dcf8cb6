import numpy as np
import pytest
from hypothesis import given, strategies as st

from srumcc.codec import (RandomTransform, apply_transform, encode_frame, identity_transform,
                          pack_bits, sample_transform, unpack_bits)
from srumcc.trellis import CodeSpec


def test_transform_is_reproducible():
    a, b = sample_transform(7, 64), sample_transform(7, 64)
    assert np.array_equal(a.matrix, b.matrix)
    assert not np.array_equal(a.matrix, sample_transform(8, 64).matrix)


def test_transform_density_concentrates():
    dens = [sample_transform(s, 64).matrix.mean() for s in range(200)]
    assert all(0.45 <= d <= 0.55 for d in dens)


@given(st.integers(1, 130), st.integers(0, 2**63 - 1))
def test_packed_product_matches_dense(n, seed):
    R = sample_transform(seed, n)
    v = np.random.default_rng(seed).integers(0, 2, n, dtype=np.uint8)
    assert np.array_equal(apply_transform(v, R), v @ R.matrix.astype(np.int64) % 2)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=200))
def test_pack_round_trip(bits):
    bits = np.array(bits, dtype=np.uint8)
    assert np.array_equal(unpack_bits(pack_bits(bits), len(bits)), bits)


def test_apply_signs_is_bpsk_of_product(rng):
    R = sample_transform(3, 64)
    v = rng.integers(0, 2, 64, dtype=np.uint8)
    assert np.array_equal(R.apply_signs(v), 1.0 - 2.0 * R.apply(v))


def test_save_load_round_trip(tmp_path):
    R = sample_transform(99, 70)
    R.save(tmp_path / "r.bin")
    Q = RandomTransform.load(tmp_path / "r.bin")
    assert Q.n == 70 and Q.seed == 99 and np.array_equal(Q.matrix, R.matrix)
    (tmp_path / "bad.bin").write_bytes(b"nope")
    with pytest.raises(ValueError):
        RandomTransform.load(tmp_path / "bad.bin")


def test_dimension_checks():
    R = sample_transform(1, 16)
    with pytest.raises(ValueError):
        apply_transform(np.zeros(8, dtype=np.uint8), R)
    b = CodeSpec.parse("conv:[27,31]o:k=32:tb")
    with pytest.raises(ValueError):
        encode_frame(np.zeros((3, 32), dtype=np.uint8), b, R)
    with pytest.raises(ValueError):
        encode_frame(np.zeros((3, 31), dtype=np.uint8), b, sample_transform(1, 64))


def test_frame_structure(rng):
    b = CodeSpec.parse("conv:[27,31]o:k=32:tb")
    R = sample_transform(5, 64)
    u = rng.integers(0, 2, (4, 32), dtype=np.uint8)
    fs = encode_frame(u, b, R)
    assert fs.c_blocks.shape == (5, 64) and fs.L == 4
    assert np.array_equal(fs.c_blocks[0], fs.v_blocks[0])
    for t in range(1, 4):
        assert np.array_equal(fs.c_blocks[t], fs.v_blocks[t] ^ R.apply(fs.v_blocks[t - 1]))
    assert np.array_equal(fs.c_blocks[4], R.apply(fs.v_blocks[3]))
    assert fs.rate == pytest.approx(0.5 * 4 / 5)


def test_unit_memory_generator_form(rng):
    # c = u G with G0 = S on the diagonal and G1 = S R one block to the right
    b = CodeSpec.parse("conv:[7,5]o:k=6:tb")
    R = sample_transform(11, b.n)
    S = b.generator_matrix().astype(np.int64)
    SR = S @ R.matrix.astype(np.int64) % 2
    L = 3
    G = np.zeros((L * b.k, (L + 1) * b.n), dtype=np.int64)
    for t in range(L):
        G[t * b.k:(t + 1) * b.k, t * b.n:(t + 1) * b.n] = S
        G[t * b.k:(t + 1) * b.k, (t + 1) * b.n:(t + 2) * b.n] = SR
    for _ in range(20):
        u = rng.integers(0, 2, (L, b.k), dtype=np.uint8)
        c = encode_frame(u, b, R).c_blocks.reshape(-1)
        assert np.array_equal(c, u.reshape(-1) @ G % 2)


@given(st.integers(0, 1000))
def test_frame_linearity(seed):
    b = CodeSpec.parse("conv:[27,31]o:k=8:tb")
    R = sample_transform(2, b.n)
    g = np.random.default_rng(seed)
    a, c = (g.integers(0, 2, (3, 8), dtype=np.uint8) for _ in range(2))
    lhs = encode_frame(a ^ c, b, R).c_blocks
    assert np.array_equal(lhs, encode_frame(a, b, R).c_blocks ^ encode_frame(c, b, R).c_blocks)


def test_identity_transform():
    I = identity_transform(10)
    v = np.arange(10) % 2
    assert np.array_equal(I.apply(v.astype(np.uint8)), v)
