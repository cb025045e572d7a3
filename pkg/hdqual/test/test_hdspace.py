from hdqual import hdspace
from hdqual.errors import (
    DimensionMismatchError,
    InvalidArgumentError,
    InvalidInputError,
    ZeroNormError,
)
import numpy as np
import pytest


def test_generate_basis_shape():
    enc = hdspace.generate_basis(2816, 10000, seed=42, mode="nonlinear")
    assert enc.basis.shape == (10000, 2816)
    assert enc.phases.shape == (10000,)
    assert enc.dim_d == 10000
    assert enc.dim_m == 2816
    assert enc.dtype == np.float32
    assert np.all((enc.phases >= 0) & (enc.phases < 2 * np.pi + 1e-6))


def test_basis_is_read_only():
    enc = hdspace.generate_basis(4, 16, seed=1)
    with pytest.raises(ValueError):
        enc.basis[0, 0] = 1.0


def test_basis_determinism():
    enc1 = hdspace.generate_basis(8, 4096, seed=7)
    enc2 = hdspace.generate_basis(8, 4096, seed=7)
    enc3 = hdspace.generate_basis(8, 4096, seed=8)

    assert np.array_equal(enc1.basis, enc2.basis)
    assert np.array_equal(enc1.phases, enc2.phases)
    assert enc1.fingerprint == enc2.fingerprint
    assert enc1.fingerprint != enc3.fingerprint


def test_fingerprint_depends_on_mode():
    lin = hdspace.generate_basis(8, 64, seed=7, mode="linear")
    nonlin = hdspace.generate_basis(8, 64, seed=7, mode="nonlinear")
    assert np.array_equal(lin.basis, nonlin.basis)
    assert lin.fingerprint != nonlin.fingerprint


def test_degenerate_basis():
    enc = hdspace.generate_basis(1, 1, seed=0, mode="linear", dtype="float64")
    assert enc.basis.shape == (1, 1)
    h = hdspace.encode(enc, [3.0])
    assert np.allclose(h, 3.0 * enc.basis[0, 0])


@pytest.mark.parametrize("m,dim", [(0, 10), (10, 0)])
def test_generate_basis_invalid(m, dim):
    with pytest.raises(InvalidArgumentError):
        hdspace.generate_basis(m, dim, seed=0)


def test_unknown_mode():
    with pytest.raises(InvalidArgumentError):
        hdspace.generate_basis(4, 4, seed=0, mode="binary")


def test_near_orthogonality():
    dim = 10000
    for seed in range(10):
        enc = hdspace.generate_basis(16, dim, seed=seed, mode="linear")
        columns = enc.basis.T
        mean_abs = hdspace.mean_abs_similarity(columns, npairs=100, seed=seed)
        assert mean_abs < 3.0 / np.sqrt(dim)
        assert mean_abs < 0.03


def test_encode_identity_basis():
    enc = hdspace.Encoder(np.eye(2), mode="linear", dtype="float64")
    assert np.allclose(hdspace.encode(enc, [3.0, 4.0]), [3.0, 4.0])
    assert np.allclose(hdspace.encode(enc, [0.0, 0.0]), [0.0, 0.0])


def test_encode_nonlinear_against_loop():
    basis = np.array([[0.5, -1.0], [2.0, 0.25], [-0.3, 0.7]])
    phases = np.array([0.1, 1.2, 4.0])
    enc = hdspace.Encoder(basis, phases, mode="nonlinear", dtype="float64")
    x = np.array([0.8, -1.7])

    expected = np.zeros(3)
    for d in range(3):
        acc = 0.0
        for i in range(2):
            acc += basis[d, i] * x[i]
        expected[d] = np.cos(acc + phases[d])

    assert np.allclose(hdspace.encode(enc, x), expected, atol=1e-12)


def test_encode_linear_additive():
    enc = hdspace.generate_basis(20, 500, seed=3, mode="linear", dtype="float64")
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=(2, 20))
    lhs = hdspace.encode(enc, x + y)
    rhs = hdspace.encode(enc, x) + hdspace.encode(enc, y)
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-9)


def test_encode_batch_matches_single():
    enc = hdspace.generate_basis(12, 300, seed=5)
    X = np.random.default_rng(1).normal(size=(10, 12))
    batch = hdspace.encode_batch(enc, X, chunk_rows=3)
    assert batch.shape == (10, 300)
    for x, h in zip(X, batch):
        assert np.allclose(hdspace.encode(enc, x), h, atol=1e-5)


def test_encode_errors():
    enc = hdspace.generate_basis(3, 10, seed=0)
    with pytest.raises(DimensionMismatchError):
        hdspace.encode(enc, [1.0, 2.0])
    with pytest.raises(InvalidInputError):
        hdspace.encode(enc, [1.0, np.nan, 2.0])
    with pytest.raises(InvalidInputError):
        hdspace.encode_batch(enc, [[1.0, np.inf, 2.0]])


def test_similarity_examples():
    v = np.array([0.3, -2.0, 5.0])
    assert abs(hdspace.similarity(v, v) - 1.0) < 1e-12
    assert hdspace.similarity([1, 0], [0, 1]) == 0.0
    assert abs(hdspace.similarity([1, 0], [1, 1]) - 1 / np.sqrt(2)) < 1e-8


def test_similarity_scale_invariant():
    rng = np.random.default_rng(2)
    for _ in range(20):
        h1, h2 = rng.normal(size=(2, 50))
        a, b = rng.uniform(0.01, 100, size=2)
        assert abs(
            hdspace.similarity(a * h1, b * h2) - hdspace.similarity(h1, h2)
        ) < 1e-12


def test_similarity_errors():
    with pytest.raises(ZeroNormError):
        hdspace.similarity([0, 0], [1, 1])
    with pytest.raises(DimensionMismatchError):
        hdspace.similarity([1, 0], [1, 1, 1])


def test_encode_nonlinear_bounded():
    enc = hdspace.generate_basis(16, 2000, seed=4, mode="nonlinear")
    X = 100.0 * np.random.default_rng(4).normal(size=(50, 16))
    H = hdspace.encode_batch(enc, X)
    assert np.all(np.abs(H) <= 1.0)
