import numpy as np
import pytest

from zofd import directions as dirs
from zofd.errors import ConfigError, DimensionError
from zofd.rng import RngStream


def ortho_defect(p):
    ell = p.shape[1]
    return np.abs(p.T @ p - np.eye(ell)).max()


# ---------------------------------------------------------------- basics


@pytest.mark.parametrize("kind", dirs.KINDS)
def test_shape_contract(kind):
    dm = dirs.generate(kind, 3, 2, RngStream(0, 1))
    assert dm.columns.shape == (3, 2)
    assert dm.d == 3 and dm.ell == 2 and dm.kind == kind
    assert dm.seed == 0


@pytest.mark.parametrize("kind", dirs.KINDS)
@pytest.mark.parametrize("d,ell", [(3, 0), (3, 4), (0, 1), (-2, 1)])
def test_dimension_errors(kind, d, ell):
    with pytest.raises(DimensionError):
        dirs.generate(kind, d, ell, RngStream(0))


@pytest.mark.parametrize("kind", dirs.KINDS)
def test_determinism_per_stream(kind):
    a = dirs.generate(kind, 17, 5, RngStream(42, 3)).columns
    b = dirs.generate(kind, 17, 5, RngStream(42, 3)).columns
    c = dirs.generate(kind, 17, 5, RngStream(42, 4)).columns
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_generate_rejects_unknown_kind():
    with pytest.raises(ConfigError):
        dirs.generate("hadamard", 4, 2, RngStream(0))


def test_generate_accepts_shared_generator():
    gen = RngStream(7, 0).generator()
    a = dirs.generate("qr_haar", 6, 3, gen)
    b = dirs.generate("qr_haar", 6, 3, gen)
    assert a.seed is None
    assert not np.array_equal(a.columns, b.columns)


# ---------------------------------------------------------- orthonormality


@pytest.mark.parametrize("kind", dirs.ORTHONORMAL_KINDS)
@pytest.mark.parametrize("d", [2, 8, 17])
def test_orthonormal_columns(kind, d):
    tol = 1e-8 if kind == "stiefel" else 1e-10
    for ell in sorted({1, 2, -(-d // 3), -(-d // 2), d}):
        for seed in range(3):
            p = dirs.generate(kind, d, ell, RngStream(seed, 11)).columns
            assert ortho_defect(p) <= tol, (kind, d, ell, seed)


def test_butterfly_power_of_two_tight_tolerance():
    p = dirs.gen_butterfly(8, 8, RngStream(3)).columns
    assert ortho_defect(p) <= 1e-12


def test_householder_tight_tolerance_and_det():
    p = dirs.gen_householder(2, 2, RngStream(5)).columns
    assert ortho_defect(p) <= 1e-12
    assert abs(np.linalg.det(p) + 1.0) <= 1e-12


# ------------------------------------------------------------ unstructured


def test_spherical_unit_norms():
    p = dirs.gen_spherical(9, 4, RngStream(1)).columns
    assert np.abs(np.linalg.norm(p, axis=0) - 1.0).max() <= 1e-12


def test_spherical_d1_is_sign():
    vals = {dirs.gen_spherical(1, 1, RngStream(s)).columns[0, 0] for s in range(20)}
    assert vals <= {1.0, -1.0} and len(vals) == 2


def test_rademacher_entries_and_norms():
    p = dirs.gen_rademacher(25, 6, RngStream(2)).columns
    assert np.all(np.abs(p) == 1.0)
    assert np.all(np.linalg.norm(p, axis=0) == np.sqrt(25.0))


def test_rademacher_pooled_mean_clt():
    # 4/sqrt(N) bound with N = 1e6 pooled entries
    gen = RngStream(10, 0).generator()
    total, n = 0.0, 0
    for _ in range(100):
        p = dirs.gen_rademacher(100, 100, gen).columns
        total += p.sum()
        n += p.size
    assert abs(total / n) <= 4.0 / np.sqrt(n)


def test_gaussian_pooled_mean_clt():
    gen = RngStream(11, 0).generator()
    total, n = 0.0, 0
    for _ in range(100):
        p = dirs.gen_gaussian(100, 100, gen).columns
        total += p.sum()
        n += p.size
    assert abs(total / n) <= 4.0 / np.sqrt(n)


def test_gaussian_mean_squared_column_norm():
    # E||col||^2 = d for standard Gaussian entries
    gen = RngStream(12, 0).generator()
    sq = [
        (dirs.gen_gaussian(100, 1, gen).columns ** 2).sum() for _ in range(10_000)
    ]
    assert abs(np.mean(sq) - 100.0) <= 0.02 * 100.0


# ------------------------------------------------------------- coordinate


def test_coordinate_columns_are_distinct_basis_vectors():
    p = dirs.gen_coordinate(6, 4, RngStream(3), cache_identity=False).columns
    assert np.all((p == 0.0) | (p == 1.0))
    assert np.all(p.sum(axis=0) == 1.0)
    assert np.all(p.sum(axis=1) <= 1.0)
    assert ortho_defect(p) == 0.0


def test_coordinate_d2_full_is_permutation():
    seen = set()
    for s in range(20):
        p = dirs.gen_coordinate(2, 2, RngStream(s), cache_identity=False).columns
        seen.add(tuple(p.ravel()))
    assert seen <= {(1.0, 0.0, 0.0, 1.0), (0.0, 1.0, 1.0, 0.0)}
    assert len(seen) == 2


def test_coordinate_identity_cache():
    a = dirs.gen_coordinate(5, 5, RngStream(1))
    b = dirs.gen_coordinate(5, 5, RngStream(99))
    assert a.columns is b.columns  # cache hit, stream not consumed
    assert np.array_equal(a.columns, np.eye(5))
    with pytest.raises(ValueError):
        a.columns[0, 0] = 2.0


def test_coordinate_selection_frequencies():
    # each basis vector appears with prob ell/d = 1/2
    gen = RngStream(4, 0).generator()
    counts = np.zeros(4)
    n = 100_000
    for _ in range(n):
        p = dirs.gen_coordinate(4, 2, gen, cache_identity=False).columns
        counts += p.sum(axis=1)
    assert np.abs(counts / n - 0.5).max() <= 0.01


# ---------------------------------------------------------------- qr_haar


def test_qr_haar_d1_sign_frequencies():
    gen = RngStream(5, 0).generator()
    vals = np.array(
        [dirs.gen_qr_haar(1, 1, gen).columns[0, 0] for _ in range(10_000)]
    )
    assert set(np.unique(vals)) <= {-1.0, 1.0}
    assert abs(np.mean(vals)) <= 0.03


def test_qr_haar_first_column_moments():
    # Haar column is uniform on the sphere: mean 0, second moment I/d
    gen = RngStream(6, 0).generator()
    n, d = 100_000, 4
    cols = np.empty((n, d))
    for k in range(n):
        cols[k] = dirs.gen_qr_haar(d, 1, gen).columns[:, 0]
    assert np.abs(cols.mean(axis=0)).max() <= 0.02
    second = cols.T @ cols / n
    assert np.abs(second - np.eye(d) / d).max() <= 0.01


# -------------------------------------------------------------- butterfly


def naive_butterfly(thetas):
    g = np.array([[1.0]])
    for th in thetas:
        c, s = np.cos(th), np.sin(th)
        g = np.block([[c * g, s * g], [-s * g, c * g]])
    return g


def replay_draws(stream, d):
    # mirror of gen_butterfly's draw order: angles, then column permutation
    gen = stream.generator()
    n = d.bit_length() - 1
    thetas = gen.uniform(0.0, 2.0 * np.pi, n)
    cols = gen.permutation(d)
    return thetas, cols


@pytest.mark.parametrize("d", [2, 4, 8, 16, 32])
def test_butterfly_matches_naive_recursion(d):
    stream = RngStream(77, d)
    thetas, cols = replay_draws(stream, d)
    expected = naive_butterfly(thetas)[:, cols]
    got = dirs.gen_butterfly(d, d, stream).columns
    assert np.array_equal(got, expected)


def test_butterfly_d2_is_rotation():
    stream = RngStream(8, 1)
    (theta,), cols = replay_draws(stream, 2)
    c, s = np.cos(theta), np.sin(theta)
    expected = np.array([[c, s], [-s, c]])[:, cols[:2]]
    got = dirs.gen_butterfly(2, 2, stream).columns
    assert np.array_equal(got, expected)


def test_butterfly_padding_identity_tail():
    # d=5 pads diag(block(4), I_1); index 4 must come out as e_5
    hits = 0
    for s in range(30):
        dm = dirs.gen_butterfly(5, 3, RngStream(s, 2))
        assert ortho_defect(dm.columns) <= 1e-12
        for i in range(3):
            col = dm.columns[:, i]
            if col[4] != 0.0:
                assert np.array_equal(col, np.eye(5)[:, 4])
                hits += 1
    assert hits > 0


def test_butterfly_mult_count_scaling():
    counts = []
    ns = range(4, 11)
    for n in ns:
        d = 2**n
        counter = dirs.OpCounter()
        dirs.gen_butterfly(d, d, RngStream(1, n), op_counter=counter)
        counts.append(counter.mults)
        assert 0 < counter.mults <= 4 * d * np.log2(d)
    slope = np.polyfit([n for n in ns], np.log2(counts), 1)[0]
    assert slope <= 1.25


# ------------------------------------------------------------ householder


def test_reflector_columns_about_e1():
    v = np.array([1.0, 0.0, 0.0])
    cols = dirs.reflector_columns(v, np.arange(2))
    assert np.array_equal(cols, np.array([[-1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))


def test_reflector_fixes_orthogonal_basis_vector():
    v = np.zeros(4)
    v[0] = 1.0
    col = dirs.reflector_columns(v, np.array([2]))
    assert np.array_equal(col[:, 0], np.eye(4)[:, 2])


def test_householder_mult_count_is_linear():
    for d, ell in [(64, 8), (128, 64), (256, 256)]:
        counter = dirs.OpCounter()
        dirs.gen_householder(d, ell, RngStream(1), op_counter=counter)
        assert d * ell <= counter.mults <= 2 * d * ell
        counter = dirs.OpCounter()
        dirs.gen_perm_householder(d, ell, RngStream(1), op_counter=counter)
        assert d * ell <= counter.mults <= 2 * d * ell


def test_perm_householder_full_is_orthogonal_both_sides():
    p = dirs.gen_perm_householder(3, 3, RngStream(9)).columns
    assert ortho_defect(p) <= 1e-12
    assert np.abs(p @ p.T - np.eye(3)).max() <= 1e-12


def test_perm_householder_selection_frequencies():
    # reflectors are involutions: (I - 2vv^T) col = e_j recovers the index
    counts = np.zeros(6)
    n = 100_000
    for s in range(n):
        stream = RngStream(13, s)
        v = stream.generator().standard_normal(6)  # replay the generator's v draw
        v /= np.linalg.norm(v)
        p = dirs.gen_perm_householder(6, 2, stream).columns
        idx = np.argmax(p - 2.0 * np.outer(v, v @ p), axis=0)
        counts[idx] += 1
    assert np.abs(counts / n - 2.0 / 6.0).max() <= 0.01


# ----------------------------------------------------------------- stiefel


def test_stiefel_d1_is_sign():
    vals = {dirs.gen_stiefel(1, 1, RngStream(s)).columns[0, 0] for s in range(20)}
    assert all(abs(abs(v) - 1.0) <= 1e-12 for v in vals)


def test_stiefel_preserves_column_space():
    stream = RngStream(21, 4)
    a = stream.generator().standard_normal((3, 2))  # same first draw as the generator
    p = dirs.gen_stiefel(3, 2, stream).columns
    residual = a - p @ (p.T @ a)
    assert np.abs(residual).max() <= 1e-8


# ---------------------------------------------------------------- isotropy


def pooled_second_moment(draw_col, n):
    cols = np.array([draw_col() for _ in range(n)])
    second = cols.T @ cols / len(cols)
    # per-entry Monte-Carlo standard error from the sample itself
    prods = cols[:, :, None] * cols[:, None, :]
    se = prods.std(axis=0, ddof=1) / np.sqrt(len(cols))
    return second, se


@pytest.mark.parametrize(
    "kind", ["spherical", "qr_haar", "perm_householder", "butterfly", "stiefel"]
)
def test_isotropy_single_column(kind):
    d, n = 8, 100_000
    gen = RngStream(30, dirs.KINDS.index(kind)).generator()
    second, se = pooled_second_moment(
        lambda: dirs.generate(kind, d, 1, gen).columns[:, 0], n
    )
    dev = np.abs(second - np.eye(d) / d)
    assert np.all(dev <= 3.0 * se + 1e-12)


def test_isotropy_householder_pooled_full():
    d = 8
    gen = RngStream(31, 0).generator()
    reps = 12_500  # 1e5 pooled columns
    cols = np.vstack([dirs.gen_householder(d, d, gen).columns.T for _ in range(reps)])
    second = cols.T @ cols / len(cols)
    prods = cols[:, :, None] * cols[:, None, :]
    se = prods.std(axis=0, ddof=1) / np.sqrt(len(cols))
    assert np.all(np.abs(second - np.eye(d) / d) <= 3.0 * se + 1e-12)


# ------------------------------------------------------------- dump format


def test_matrix_dump_roundtrip(tmp_path):
    dm = dirs.gen_qr_haar(7, 3, RngStream(123, 9))
    path = tmp_path / "m.csv"
    dirs.save_matrix(path, dm)
    back = dirs.load_matrix(path)
    assert back.d == 7 and back.ell == 3 and back.kind == "qr_haar"
    assert back.seed == 123
    assert np.array_equal(back.columns, dm.columns)
    first = path.read_text().splitlines()[0]
    assert first == "d,ell,kind,seed"


def test_matrix_dump_seedless(tmp_path):
    gen = RngStream(0).generator()
    dm = dirs.gen_butterfly(4, 2, gen)
    path = tmp_path / "m.csv"
    dirs.save_matrix(path, dm)
    assert dirs.load_matrix(path).seed is None


def test_matrix_load_rejects_garbage(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("not,a,dump\n1,2,3\n")
    with pytest.raises(ConfigError):
        dirs.load_matrix(path)
    path.write_text("d,ell,kind,seed\n3,2,qr_haar,0\n1.0,2.0,3.0\n")
    with pytest.raises(ConfigError):
        dirs.load_matrix(path)
