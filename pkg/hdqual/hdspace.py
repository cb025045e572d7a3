"""
Hyperdimensional space: seeded random basis, encoding of feature
vectors into hypervectors, and cosine similarity.

A feature vector of length ``m`` is mapped into a space of dimension
``D`` (typically 10000) with a random matrix ``B`` of shape ``D x m``
whose entries are drawn from the standard normal distribution. Two
encoders are provided:

- **linear**: ``F = B x`` (random projection)
- **nonlinear**: ``F_d = cos(B_d . x + b_d)`` with phases ``b_d`` drawn
  uniformly from ``[0, 2 pi)`` (random Fourier features)

The columns of ``B`` are the D-dimensional basis vectors. For large
``D`` they are nearly orthogonal without any explicit
orthogonalization.

Random streams
--------------
All randomness comes from ``numpy.random.PCG64``. The encoder seed is fed
to a ``numpy.random.SeedSequence`` which is split with ``spawn(2)``: the
first child drives the basis, the second one the phases. Both streams
are portable across platforms, so the same seed always yields a
bit-identical encoder.
"""

import hashlib
import logging

import numpy as np

from . import config
from .errors import (
    DimensionMismatchError,
    InvalidArgumentError,
    InvalidInputError,
    ZeroNormError,
)

__all__ = [
    "Encoder",
    "generate_basis",
    "encode",
    "encode_batch",
    "similarity",
    "mean_abs_similarity",
    "MODES",
]

log = logging.getLogger(__name__)

MODES = ("linear", "nonlinear")
DTYPES = ("float32", "float64")


def _check_mode(mode):
    if mode not in MODES:
        raise InvalidArgumentError(
            "unknown encoder mode '{}', use one of {}".format(mode, MODES)
        )


def _check_dtype(dtype):
    name = np.dtype(dtype).name
    if name not in DTYPES:
        raise InvalidArgumentError(
            "unsupported hypervector type '{}', use one of {}".format(name, DTYPES)
        )
    return np.dtype(name)


class Encoder(object):

    """An immutable mapping from feature vectors of length ``dim_m`` to
    hypervectors of dimension ``dim_d``.

    Normally created with :func:`generate_basis`. Passing an explicit
    basis (and phases) is allowed, e.g. to inject a known matrix in
    tests; the seed is then ``None``.

    Parameters
    ----------
    basis: array, shape (D, m)
        projection matrix (columns are the basis vectors)
    phases: array, shape (D,)
        phase offsets in [0, 2 pi), only used in nonlinear mode
    mode: str
        "linear" or "nonlinear"
    seed: int or None
        seed the basis was generated from
    dtype: str
        hypervector element type ("float32" or "float64")
    """

    def __init__(self, basis, phases=None, mode=config.DEFAULT_ENCODER_MODE,
                 seed=None, dtype=config.DEFAULT_DTYPE):
        _check_mode(mode)
        dtype = _check_dtype(dtype)

        basis = np.array(basis, dtype=dtype, ndmin=2)
        if basis.ndim != 2 or basis.size == 0:
            raise InvalidArgumentError("basis must be a non-empty D x m matrix")
        if phases is None:
            phases = np.zeros(basis.shape[0])
        phases = np.array(phases, dtype=dtype).ravel()
        if phases.shape[0] != basis.shape[0]:
            raise DimensionMismatchError(
                "{} phases for a basis with {} rows".format(
                    phases.shape[0], basis.shape[0]
                )
            )

        basis.setflags(write=False)
        phases.setflags(write=False)

        self._basis = basis
        self._phases = phases
        self._mode = mode
        self._seed = None if seed is None else int(seed)
        self._fingerprint = None

    @property
    def basis(self):
        """ read-only D x m projection matrix """
        return self._basis

    @property
    def phases(self):
        return self._phases

    @property
    def mode(self):
        return self._mode

    @property
    def seed(self):
        return self._seed

    @property
    def dtype(self):
        return self._basis.dtype

    @property
    def dim_d(self):
        return self._basis.shape[0]

    @property
    def dim_m(self):
        return self._basis.shape[1]

    def basis_vector(self, i):
        """ the i-th D-dimensional basis vector (column i of the basis) """
        return self._basis[:, i]

    @property
    def fingerprint(self):
        """hex SHA-256 digest identifying this encoder. A model remembers
        the fingerprint of the encoder that produced its training data."""
        if self._fingerprint is None:
            digest = hashlib.sha256()
            header = "{}|{}|{}|{}|{}".format(
                self.mode, self.dim_d, self.dim_m, self.dtype.name, self.seed
            )
            digest.update(header.encode("ascii"))
            digest.update(np.ascontiguousarray(self._basis).tobytes())
            digest.update(np.ascontiguousarray(self._phases).tobytes())
            self._fingerprint = digest.hexdigest()
        return self._fingerprint

    def __repr__(self):
        return "Encoder(mode={}, D={}, m={}, seed={}, dtype={})".format(
            self.mode, self.dim_d, self.dim_m, self.seed, self.dtype.name
        )


def generate_basis(m, dim, seed, mode=config.DEFAULT_ENCODER_MODE,
                   dtype=config.DEFAULT_DTYPE):
    """
    Create an :class:`Encoder` with a seeded standard-normal basis.

    Parameters
    ----------
    m: int
        length of the input feature vectors
    dim: int
        hypervector dimension D
    seed: int
        64-bit unsigned seed, fully determines basis and phases
    mode: str
        "linear" or "nonlinear"
    dtype: str
        hypervector element type

    Returns
    -------
    Encoder
    """
    if int(m) < 1 or int(dim) < 1:
        raise InvalidArgumentError(
            "feature length m and dimension D must be >= 1 (got m={}, D={})".format(
                m, dim
            )
        )
    if int(seed) < 0 or int(seed) >= 2 ** 64:
        raise InvalidArgumentError("seed must be a 64-bit unsigned integer")
    _check_mode(mode)
    dtype = _check_dtype(dtype)

    basis_seq, phase_seq = np.random.SeedSequence(int(seed)).spawn(2)
    basis_rng = np.random.Generator(np.random.PCG64(basis_seq))
    phase_rng = np.random.Generator(np.random.PCG64(phase_seq))

    basis = basis_rng.standard_normal((int(dim), int(m)), dtype=np.float64)
    phases = phase_rng.uniform(0.0, 2.0 * np.pi, size=int(dim))

    log.debug("generated %s basis D=%d m=%d seed=%d", mode, dim, m, seed)

    return Encoder(basis.astype(dtype), phases.astype(dtype), mode=mode,
                   seed=seed, dtype=dtype)


def _check_features(enc, x):
    if x.shape[-1] != enc.dim_m:
        raise DimensionMismatchError(
            "feature vector has length {}, encoder expects {}".format(
                x.shape[-1], enc.dim_m
            )
        )
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("feature vector contains NaN or Inf entries")


def _project(enc, x):
    # x: (N, m)
    proj = x @ enc.basis.T
    if enc.mode == "nonlinear":
        proj = np.cos(proj + enc.phases)
    return proj


def encode(enc, x):
    """
    Map one feature vector of length ``enc.dim_m`` to a hypervector of
    length ``enc.dim_d``.
    """
    x = np.asarray(x, dtype=enc.dtype)
    if x.ndim != 1:
        raise DimensionMismatchError("encode() takes a single feature vector")
    _check_features(enc, x)
    return _project(enc, x[np.newaxis, :])[0]


def encode_batch(enc, X, chunk_rows=config.ENCODE_CHUNK_ROWS):
    """
    Encode every row of the N x m matrix ``X``; the result is N x D.
    Rows are processed in chunks to bound the temporary memory, each row
    is independent of the others.
    """
    X = np.asarray(X, dtype=enc.dtype)
    if X.ndim != 2:
        raise DimensionMismatchError("encode_batch() takes an N x m matrix")
    _check_features(enc, X)

    out = np.empty((X.shape[0], enc.dim_d), dtype=enc.dtype)
    for start in range(0, X.shape[0], chunk_rows):
        stop = start + chunk_rows
        out[start:stop] = _project(enc, X[start:stop])
    return out


def similarity(h1, h2):
    """
    Cosine similarity of two hypervectors, accumulated in 64-bit.

    Raises :class:`~hdqual.errors.ZeroNormError` if either vector has a zero
    norm; the caller decides what that means.
    """
    a = np.asarray(h1, dtype=np.float64).ravel()
    b = np.asarray(h2, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DimensionMismatchError(
            "hypervector lengths differ ({} vs {})".format(a.shape[0], b.shape[0])
        )
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroNormError("cosine similarity of a zero-norm hypervector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def mean_abs_similarity(vectors, npairs=100, seed=0):
    """
    Mean absolute cosine similarity over ``npairs`` distinct random pairs
    of the given vectors (rows). This is the near-orthogonality statistic
    of a basis, expected around ``1/sqrt(D)``.
    """
    vectors = np.asarray(vectors)
    nvec = vectors.shape[0]
    maxpairs = nvec * (nvec - 1) // 2
    if npairs > maxpairs:
        raise InvalidArgumentError(
            "{} vectors only give {} distinct pairs".format(nvec, maxpairs)
        )

    rng = np.random.Generator(np.random.PCG64(seed))
    pairs = set()
    while len(pairs) < npairs:
        i, j = rng.choice(nvec, size=2, replace=False)
        pairs.add((min(i, j), max(i, j)))

    return float(
        np.mean([abs(similarity(vectors[i], vectors[j])) for i, j in sorted(pairs)])
    )
