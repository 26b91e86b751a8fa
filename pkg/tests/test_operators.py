import cmath
import random

import numpy as np
import pytest

from torus_resonances.blaschke import alpha, contraction_factor
from torus_resonances.lattice import SpaceConfig, block_indices, deg1, log_weight, window_indices
from torus_resonances.operators import (
    MapKind,
    MapSpec,
    apply_B,
    apply_BK,
    apply_map,
    apply_T,
    apply_TK,
    block_matrix,
    windowed_matrix,
)

LAM = 0.6 * cmath.exp(0.7j)
MU = -0.3 + 0.4j


def point_map(spec):
    """The torus map itself, for the Fourier oracle."""
    if spec.kind is MapKind.COMPOSE:
        fs = [point_map(f) for f in spec.factors]

        def composed(z, w):
            for f in reversed(fs):
                z, w = f(z, w)
            return z, w

        return composed
    lam, K = spec.lam.value, spec.K

    def b(z):
        return (z + lam) / (1 + np.conj(lam) * z)

    if spec.kind is MapKind.B:
        return lambda z, w: (b(z) * z * w, b(z) * w)
    if spec.kind is MapKind.T:
        return lambda z, w: (b(z) * w, z)
    if spec.kind is MapKind.BK:
        return lambda z, w: (b(z) ** (K * K) * z * w**K, b(z) ** K * w)
    return lambda z, w: (b(z) ** K * w, z)


def fourier_column(spec, idx, n=256):
    t = np.exp(2j * np.pi * np.arange(n) / n)
    z, w = np.meshgrid(t, t, indexing="ij")
    Z, W = point_map(spec)(z, w)
    F = np.fft.fft2(Z ** idx[0] * W ** idx[1]) / n**2
    return F


def as_dense(col, n=256):
    F = np.zeros((n, n), dtype=complex)
    for (p, q), v in col.entries:
        F[p % n, q % n] += v
    return F


SPECS = [
    MapSpec.B(LAM),
    MapSpec.T(LAM),
    MapSpec.BK(LAM, 1),
    MapSpec.BK(0.5, 2),
    MapSpec.TK(LAM, 2),
    MapSpec.TT(LAM, MU),
    MapSpec.compose(MapSpec.T(0.0), MapSpec.T(LAM)),
]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind.value + str(s.K))
@pytest.mark.parametrize("idx", [(0, 1), (1, 0), (2, -1), (-1, 2), (1, 1), (-2, -1)])
def test_columns_match_fourier_transform(spec, idx):
    col = apply_map(spec, idx, order=200)
    np.testing.assert_allclose(as_dense(col), fourier_column(spec, idx), atol=1e-12)


def test_apply_B_examples():
    assert apply_B(LAM, (0, 0), 10).entries == (((0, 0), 1.0),)
    assert apply_B(LAM, (3, -3), 10).entries == (((3, 0), 1.0),)
    col = apply_B(LAM, (0, 1), 10).as_dict()
    assert col[(0, 1)] == pytest.approx(LAM)
    for k, v in enumerate(alpha(LAM, 1, 10)):
        assert col[(k, 1)] == v


def test_apply_B_negative_direction_uses_conjugates():
    col = apply_B(LAM, (1, -3), 6).as_dict()
    a = np.conj(alpha(LAM, 2, 6))
    for k in range(7):
        assert col[(1 - k, -2)] == a[k]


def test_apply_T_examples():
    assert apply_T(LAM, (0, 5), 10).entries == (((5, 0), 1.0),)
    col = apply_T(LAM, (3, -2), 10).as_dict()
    assert col[(-2, 3)] == pytest.approx(LAM**3)
    assert set(col) == {(-2 + k, 3) for k in range(11)}


def test_T_zero_is_linear():
    # T_0(z, w) = (z w, z): e_{m,n} -> z^(m+n) w^m
    for m in range(-3, 4):
        for n in range(-3, 4):
            assert apply_T(0.0, (m, n), 10).entries == (((m + n, m), 1.0),)
            assert apply_TK(0.0, 2, (m, n), 10).entries == (((n + 2 * m, m), 1.0),)


def test_TK_reduces_and_leads():
    for idx in [(2, 1), (-1, 3), (0, 2)]:
        assert apply_TK(LAM, 1, idx, 12) == apply_T(LAM, idx, 12)
    col = apply_TK(LAM, 3, (2, 1), 5).as_dict()
    assert col[(1, 2)] == pytest.approx(LAM**6)


def test_BK_examples():
    a = alpha(LAM, 1, 15)
    col = apply_BK(LAM, 1, (0, 1), 15).as_dict()
    for k in range(16):
        assert col[(k, 1)] == a[k]
    assert apply_BK(LAM, 3, (0, 0), 5).entries == (((0, 0), 1.0),)
    for K in (1, 2, 3):
        for m in range(-2, 3):
            for n in range(-2, 3):
                col = apply_BK(0.0, K, (m, n), 40)
                assert col.entries == (((((K * K + 1) * m + K * n), K * m + n), 1.0),)


def test_BK_is_T0_after_TK():
    # B_{lam,K} = T_{0,K} o T_{lam,K} as maps
    comp = MapSpec.compose(MapSpec.TK(0.0, 2), MapSpec.TK(LAM, 2))
    for idx in [(1, 1), (2, -3), (-1, 0)]:
        a = apply_map(MapSpec.BK(LAM, 2), idx, order=40)
        b = apply_map(comp, idx, order=40)
        assert a.targets() == b.targets()
        np.testing.assert_allclose([v for _, v in a.entries], [v for _, v in b.entries], atol=1e-15)


def test_compose_examples():
    for idx in [(0, 0), (2, 3), (-1, 4)]:
        assert apply_map(MapSpec.compose(), idx).entries == ((idx, 1.0),)
    col = apply_map(MapSpec.TT(LAM, MU), (0, 3), order=20).as_dict()
    # C_{T_lam} gives e_{3,0}; C_{T_mu} then expands at power 3
    a = alpha(MU, 3, 20)
    for k in range(21):
        assert col[(k, 3)] == pytest.approx(a[k], abs=1e-15)


def test_remark_composition_equals_B():
    comp = MapSpec.compose(MapSpec.T(0.0), MapSpec.T(LAM))
    for m in range(-4, 5):
        for n in range(-4, 5):
            a = apply_map(MapSpec.B(LAM), (m, n), order=30)
            b = apply_map(comp, (m, n), order=30)
            assert a.targets() == b.targets()
            np.testing.assert_allclose([v for _, v in a.entries], [v for _, v in b.entries], atol=1e-15)


def test_degree_increase_random_columns():
    rnd = random.Random(5)
    specs = SPECS + [MapSpec.TK(MU, 3), MapSpec.BK(MU, 3)]
    for _ in range(2000):
        spec = rnd.choice(specs)
        idx = (rnd.randint(-50, 50), rnd.randint(-50, 50))
        col = apply_map(spec, idx, order=20)
        d = deg1(idx)
        assert all(deg1(t) >= d for t in col.targets())


def test_mean_preservation():
    for spec in SPECS:
        for m in range(-6, 7):
            for n in range(-6, 7):
                targets = apply_map(spec, (m, n), order=60).targets()
                if (m, n) == (0, 0):
                    assert targets == [(0, 0)]
                else:
                    assert (0, 0) not in targets


def test_targets_distinct_and_sorted():
    col = apply_map(MapSpec.TT(LAM, MU), (2, -1), order=30)
    assert col.targets() == sorted(set(col.targets()))


def test_drop_and_radius_accounting():
    spec = MapSpec.B(LAM)
    full = apply_map(spec, (1, 2), order=60)
    cut = apply_map(spec, (1, 2), order=60, max_radius=10, drop_tol=1e-8)
    kept = cut.as_dict()
    assert all(abs(m) + abs(n) <= 10 and abs(v) >= 1e-8 for (m, n), v in kept.items())
    lost = sum(abs(v) for t, v in full.entries if t not in kept)
    assert cut.tail_weight == pytest.approx(lost + full.tail_weight, rel=1e-12)


def test_unweighted_tail_is_parseval_remainder():
    col = apply_B(0.9, (0, 3), 10)
    energy = sum(abs(v) ** 2 for _, v in col.entries)
    assert col.tail_weight == pytest.approx(np.sqrt(1 - energy))
    assert apply_B(0.0, (0, 5), 2).entries == ()
    assert apply_B(0.0, (0, 5), 2).tail_weight == pytest.approx(1.0)


def test_tail_weight_bounds_weighted_remainder():
    cfg = SpaceConfig(a=0.4)
    for idx in [(1, 1), (3, -1), (-2, -2)]:
        short = apply_B(LAM, idx, 10, cfg)
        long = apply_B(LAM, idx, 400, cfg).as_dict()
        rest = [v * np.exp(log_weight(t, cfg)) for t, v in long.items() if t not in short.as_dict()]
        assert np.sqrt(np.sum(np.abs(rest) ** 2)) <= short.tail_weight * (1 + 1e-12)


def test_tail_weight_infinite_when_weights_grow():
    cfg = SpaceConfig(a=0.4)
    # the ray (m - k, -2) runs into deg1 < 0 territory where weights grow without bound
    col = apply_B(LAM, (1, -3), 5, cfg)
    assert col.tail_weight == np.inf or col.tail_weight > 0


def test_block_examples():
    assert block_matrix(MapSpec.B(LAM), 0).data.tolist() == [[1]]
    for k in (-2, -3, -7):
        assert not block_matrix(MapSpec.B(LAM), k).data.any()
    bm = block_matrix(MapSpec.T(LAM), 1)
    assert bm.indices == ((-1, 0), (0, -1), (0, 1), (1, 0))
    sub = bm.data[np.ix_([2, 3], [2, 3])]
    np.testing.assert_allclose(sub, [[0, LAM], [1, 0]])
    with pytest.raises(ValueError):
        block_matrix(MapSpec.B(LAM), -1)


def test_block_matrix_read_only():
    with pytest.raises(ValueError):
        block_matrix(MapSpec.B(LAM), 2).data[0, 0] = 5


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind.value + str(s.K))
def test_blocks_agree_with_window_diagonal(spec):
    A, idx = windowed_matrix(spec, -5, 5)
    start = 0
    for k in range(-5, 6):
        size = len(block_indices(k))
        if size:
            np.testing.assert_allclose(
                A[start : start + size, start : start + size], block_matrix(spec, k).data, atol=1e-13
            )
        start += size


def test_compose_block_identity():
    A, B = MapSpec.T(LAM), MapSpec.T(MU)
    for k in range(-6, 7):
        if k == -1:
            continue
        C = block_matrix(MapSpec.compose(A, B), k).data
        np.testing.assert_allclose(C, block_matrix(B, k).data @ block_matrix(A, k).data, atol=1e-13)


def test_window_is_block_lower_triangular():
    A, idx = windowed_matrix(MapSpec.T(LAM), -2, 2)
    degs = np.array([deg1(ix) for ix in idx])
    assert idx == window_indices(-2, 2)
    assert not A[degs[:, None] < degs[None, :]].any()


def test_window_examples():
    A, _ = windowed_matrix(MapSpec.B(LAM), 0, 0)
    assert A.tolist() == [[1]]
    A, _ = windowed_matrix(MapSpec.B(0.0), 0, 2)
    assert set(np.unique(A)) <= {0, 1}
    assert (A.sum(axis=0) <= 1).all()
    with pytest.raises(ValueError):
        windowed_matrix(MapSpec.B(LAM), -1, -1)


def test_weighted_window_is_similar():
    cfg = SpaceConfig(a=0.3)
    A, idx = windowed_matrix(MapSpec.B(LAM), 0, 4)
    Aw, _ = windowed_matrix(MapSpec.B(LAM), 0, 4, cfg=cfg)
    d = np.exp([log_weight(ix, cfg) for ix in idx])
    np.testing.assert_allclose(Aw, np.diag(d) @ A @ np.diag(1 / d), atol=1e-14)


def test_weighted_column_bound_for_B():
    a = 0.5
    cfg = SpaceConfig(a=a)
    M = contraction_factor(LAM, a)
    delta = min(-0.5 * np.log(M), a)
    for m in range(-12, 13):
        for n in range(-12, 13):
            col = apply_B(LAM, (m, n), 120, cfg)
            s = sum(abs(v) ** 2 * np.exp(2 * (log_weight(t, cfg) - log_weight((m, n), cfg))) for t, v in col.entries)
            assert s <= np.exp(-delta * (abs(m) + abs(n))) * (1 + 1e-9)


def test_mapspec_validation():
    with pytest.raises(ValueError):
        MapSpec.B(1.2)
    with pytest.raises(ValueError):
        MapSpec.BK(0.5, 0)
    with pytest.raises(ValueError):
        MapSpec(MapKind.B, (0.5,), K=2)
    with pytest.raises(TypeError):
        MapSpec.compose(0.5)
    with pytest.raises(ValueError):
        MapSpec(MapKind.T, (0.5, 0.2))
    assert MapSpec.TT(LAM, MU).describe()["factors"][1]["kind"] == "t"
