"""Random direction matrices for finite-difference gradient surrogates.

A direction matrix P is d x ell with columns used as probe directions.
Two families are provided:

* unstructured: ``gaussian`` (i.i.d. N(0,1) entries), ``spherical``
  (i.i.d. unit-sphere columns), ``rademacher`` (i.i.d. +-1 entries);
* structured, with exactly orthonormal columns: ``coordinate`` (truncated
  random permutation), ``qr_haar`` (orthogonal factor of a Gaussian matrix,
  Haar-distributed after sign correction), ``butterfly`` (recursive rotation
  blocks, generated in O(d) scalar multiplications), ``householder`` (first
  ell columns of a random reflector), ``perm_householder`` (random ell
  columns of a random reflector) and ``stiefel`` (Gaussian matrix mapped to
  its polar factor).

Generators are pure given (d, ell, stream): they share no state and can run
concurrently. They accept either an :class:`~zofd.rng.RngStream` or an
already-instantiated ``numpy.random.Generator`` (for consumers that draw
many matrices from one stream, like the optimizer loop).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateSampleError, DimensionError
from .rng import RngStream

KINDS = (
    "gaussian",
    "spherical",
    "rademacher",
    "coordinate",
    "qr_haar",
    "butterfly",
    "householder",
    "perm_householder",
    "stiefel",
)

#: kinds whose output has exactly orthonormal columns
ORTHONORMAL_KINDS = (
    "coordinate",
    "qr_haar",
    "butterfly",
    "householder",
    "perm_householder",
    "stiefel",
)

UNSTRUCTURED_KINDS = ("gaussian", "spherical", "rademacher")


@dataclass
class DirectionMatrix:
    """A d x ell matrix of probe directions with generator provenance.

    ``columns[:, i]`` is the i-th probe direction. ``seed`` records the
    originating stream's master seed when the matrix came from an
    :class:`RngStream`; it is None for matrices drawn mid-run from a shared
    generator.
    """

    d: int
    ell: int
    columns: np.ndarray
    kind: str
    seed: int | None = None

    def __post_init__(self):
        self.columns = np.asarray(self.columns, dtype=np.float64)
        if self.columns.shape != (self.d, self.ell):
            raise DimensionError(
                f"columns shape {self.columns.shape} != ({self.d}, {self.ell})"
            )
        if self.kind not in KINDS:
            raise ConfigError(f"unknown direction kind {self.kind!r}")


@dataclass
class OpCounter:
    """Tally of scalar multiplications performed by an instrumented build."""

    mults: int = 0


def _check_dims(d, ell):
    if d < 1 or ell < 1 or ell > d:
        raise DimensionError(f"need 1 <= ell <= d, got d={d}, ell={ell}")


def _as_generator(rng):
    if isinstance(rng, RngStream):
        return rng.generator(), rng.seed
    if isinstance(rng, np.random.Generator):
        return rng, None
    raise TypeError("rng must be an RngStream or numpy Generator")


def _unit_vector(gen, d):
    for _ in range(2):
        v = gen.standard_normal(d)
        n = np.linalg.norm(v)
        if n > 0:
            return v / n
    raise DegenerateSampleError("zero Gaussian vector survived a resample")


def gen_gaussian(d, ell, rng) -> DirectionMatrix:
    """Entries i.i.d. standard normal."""
    _check_dims(d, ell)
    gen, seed = _as_generator(rng)
    return DirectionMatrix(d, ell, gen.standard_normal((d, ell)), "gaussian", seed)


def gen_spherical(d, ell, rng) -> DirectionMatrix:
    """Columns i.i.d. uniform on the unit sphere (normalized Gaussians)."""
    _check_dims(d, ell)
    gen, seed = _as_generator(rng)
    cols = np.empty((d, ell))
    for i in range(ell):
        cols[:, i] = _unit_vector(gen, d)
    return DirectionMatrix(d, ell, cols, "spherical", seed)


def gen_rademacher(d, ell, rng) -> DirectionMatrix:
    """Entries i.i.d. uniform on {-1, +1}."""
    _check_dims(d, ell)
    gen, seed = _as_generator(rng)
    cols = 2.0 * gen.integers(0, 2, size=(d, ell)).astype(np.float64) - 1.0
    return DirectionMatrix(d, ell, cols, "rademacher", seed)


_identity_cache: dict[int, np.ndarray] = {}


def gen_coordinate(d, ell, rng, cache_identity=True) -> DirectionMatrix:
    """Distinct standard basis vectors, uniform over subsets and orders.

    With ``cache_identity`` (the default) the full ell = d case returns a
    cached identity matrix without consuming the stream: the estimator is
    invariant to column order, so the identity stands in for any full
    permutation at zero sampling cost.
    """
    _check_dims(d, ell)
    gen, seed = _as_generator(rng)
    if ell == d and cache_identity:
        eye = _identity_cache.get(d)
        if eye is None:
            eye = np.eye(d)
            eye.setflags(write=False)
            _identity_cache[d] = eye
        return DirectionMatrix(d, ell, eye, "coordinate", seed)
    idx = gen.permutation(d)[:ell]
    cols = np.zeros((d, ell))
    cols[idx, np.arange(ell)] = 1.0
    return DirectionMatrix(d, ell, cols, "coordinate", seed)


def gen_qr_haar(d, ell, rng) -> DirectionMatrix:
    """Haar-distributed orthonormal columns via QR of a Gaussian matrix.

    The thin QR factor of a Gaussian matrix is Haar on the Stiefel manifold
    only after fixing the sign ambiguity: column j is multiplied by the sign
    of R_jj, with sign(0) taken as +1. An exactly zero R_jj has probability
    zero; it triggers one resample, then a hard error.
    """
    _check_dims(d, ell)
    gen, seed = _as_generator(rng)
    for _ in range(2):
        a = gen.standard_normal((d, ell))
        q, r = np.linalg.qr(a)
        diag = np.diagonal(r)
        if np.all(diag != 0.0):
            return DirectionMatrix(
                d, ell, q * np.where(diag >= 0.0, 1.0, -1.0), "qr_haar", seed
            )
    raise DegenerateSampleError("rank-deficient Gaussian sample survived a resample")


def _butterfly_table(gen, n, counter=None):
    # M[r] accumulates one cos/sin factor per level, chosen by the bits of r.
    m = np.ones(1)
    for theta in gen.uniform(0.0, 2.0 * np.pi, n):
        if counter is not None:
            counter.mults += 2 * m.size
        m = np.concatenate([np.cos(theta) * m, np.sin(theta) * m])
    return m


def gen_butterfly(d, ell, rng, op_counter=None) -> DirectionMatrix:
    """Columns of a random butterfly rotation, orthonormal by construction.

    For d a power of two the block is the n-level recursion of 2x2 rotations
    with one fresh angle per level. Entry (i, j) equals sgn * M[i ^ j] where
    M is the level-product magnitude table and sgn flips with the parity of
    popcount(i & ~j); building M costs O(d) scalar multiplications. For
    other d, the largest power-of-two block is padded with an identity block
    on the trailing indices. In every case ell columns are sampled without
    replacement from the padded matrix.

    ``op_counter`` tallies the scalar multiplications of the build.
    """
    _check_dims(d, ell)
    gen, seed = _as_generator(rng)
    n = int(d).bit_length() - 1  # largest n with 2**n <= d
    dp = 1 << n
    table = _butterfly_table(gen, n, op_counter)
    cols = gen.permutation(d)[:ell]
    out = np.zeros((d, ell))
    in_block = cols < dp
    if np.any(in_block):
        j = cols[in_block][None, :]
        i = np.arange(dp)[:, None]
        sign_flip = (np.bitwise_count(i & ~j & (dp - 1)) & 1).astype(bool)
        out[:dp, in_block] = np.where(sign_flip, -table[i ^ j], table[i ^ j])
    tail = np.flatnonzero(~in_block)
    out[cols[tail], tail] = 1.0
    return DirectionMatrix(d, ell, out, "butterfly", seed)


def reflector_columns(v, idx, op_counter=None):
    """Columns ``idx`` of the reflector I - 2vv^T, built as e_i - 2 v_i v.

    O(d * len(idx)) work; the full d x d reflector is never materialized.
    """
    v = np.asarray(v, dtype=np.float64)
    idx = np.asarray(idx)
    cols = np.outer(v, -2.0 * v[idx])
    cols[idx, np.arange(idx.size)] += 1.0
    if op_counter is not None:
        op_counter.mults += idx.size + v.size * idx.size
    return cols


def gen_householder(d, ell, rng, op_counter=None) -> DirectionMatrix:
    """First ell columns of the reflector I - 2vv^T for v uniform on the sphere."""
    _check_dims(d, ell)
    gen, seed = _as_generator(rng)
    v = _unit_vector(gen, d)
    cols = reflector_columns(v, np.arange(ell), op_counter)
    return DirectionMatrix(d, ell, cols, "householder", seed)


def gen_perm_householder(d, ell, rng, op_counter=None) -> DirectionMatrix:
    """Random ell columns (without replacement) of a random reflector."""
    _check_dims(d, ell)
    gen, seed = _as_generator(rng)
    v = _unit_vector(gen, d)
    idx = gen.permutation(d)[:ell]
    cols = reflector_columns(v, idx, op_counter)
    return DirectionMatrix(d, ell, cols, "perm_householder", seed)


def gen_stiefel(d, ell, rng) -> DirectionMatrix:
    """Polar factor A (A^T A)^{-1/2} of a Gaussian matrix.

    The inverse square root is taken through the eigendecomposition of the
    ell x ell Gram matrix. A Gram matrix with smallest eigenvalue below
    1e-12 of the largest is treated as degenerate: one resample, then error.
    """
    _check_dims(d, ell)
    gen, seed = _as_generator(rng)
    for _ in range(2):
        a = gen.standard_normal((d, ell))
        w, v = np.linalg.eigh(a.T @ a)
        if w[0] >= 1e-12 * w[-1] and w[0] > 0:
            inv_sqrt = (v / np.sqrt(w)) @ v.T
            q = a @ inv_sqrt
            # The Gram route loses ~kappa(A)^2 * eps; one Newton-Schulz step
            # squares that residual, keeping d=1024 inside 1e-8.
            q = q @ (1.5 * np.eye(ell) - 0.5 * (q.T @ q))
            return DirectionMatrix(d, ell, q, "stiefel", seed)
    raise DegenerateSampleError("singular Gram matrix survived a resample")


_GENERATORS = {
    "gaussian": gen_gaussian,
    "spherical": gen_spherical,
    "rademacher": gen_rademacher,
    "coordinate": gen_coordinate,
    "qr_haar": gen_qr_haar,
    "butterfly": gen_butterfly,
    "householder": gen_householder,
    "perm_householder": gen_perm_householder,
    "stiefel": gen_stiefel,
}


def generate(kind, d, ell, rng, **kwargs) -> DirectionMatrix:
    """Dispatch to the generator named by ``kind``."""
    try:
        gen_fn = _GENERATORS[kind]
    except KeyError:
        raise ConfigError(
            f"unknown direction kind {kind!r}; choose from {', '.join(KINDS)}"
        ) from None
    return gen_fn(d, ell, rng, **kwargs)


def save_matrix(path, dm: DirectionMatrix):
    """Dump a matrix to CSV: metadata header, then one line per column.

    Layout is column major: line k after the two header lines holds column k
    as d comma-separated values. Floats use round-trip precision. A missing
    seed is written as -1.
    """
    seed = -1 if dm.seed is None else int(dm.seed)
    lines = ["d,ell,kind,seed", f"{dm.d},{dm.ell},{dm.kind},{seed}"]
    for i in range(dm.ell):
        lines.append(",".join(f"{v:.17g}" for v in dm.columns[:, i]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_matrix(path) -> DirectionMatrix:
    """Inverse of :func:`save_matrix`; values round-trip exactly."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if len(lines) < 2 or lines[0] != "d,ell,kind,seed":
        raise ConfigError(f"{path}: not a direction matrix dump")
    d_s, ell_s, kind, seed_s = lines[1].split(",")
    d, ell, seed = int(d_s), int(ell_s), int(seed_s)
    if len(lines) != 2 + ell:
        raise ConfigError(f"{path}: expected {ell} column lines, got {len(lines) - 2}")
    cols = np.empty((d, ell))
    for i, line in enumerate(lines[2:]):
        vals = np.array([float(tok) for tok in line.split(",")])
        if vals.size != d:
            raise ConfigError(f"{path}: column {i} has {vals.size} entries, want {d}")
        cols[:, i] = vals
    return DirectionMatrix(d, ell, cols, kind, None if seed < 0 else seed)
