import cmath
import math

import numpy as np
import pytest

from torus_resonances.eigensolver import dense_eigenvalues
from torus_resonances.lattice import SpaceConfig
from torus_resonances.operators import MapSpec, block_matrix, windowed_matrix
from torus_resonances.spectral import (
    SpectrumMultiset,
    block_eigenvalues,
    block_spectrum,
    match,
    merge_radius,
    omitted_modulus_bound,
    semisimple_defects,
    spectrum,
    theoretical_spectrum,
    theoretical_terms,
)

LAM = 0.7 * cmath.exp(1j * math.pi * (math.sqrt(2) - 1))
MU = 0.55 * cmath.exp(1j * math.pi * (math.sqrt(3) - 1))


def ms(values):
    return SpectrumMultiset.from_values([(v, 1, None) for v in values])


def test_block_spectrum_B():
    s = block_spectrum(MapSpec.B(LAM), 4)
    assert s.total == 10
    assert s.multiplicity_of(LAM**4) == 1
    assert s.multiplicity_of(LAM.conjugate() ** 4) == 1
    assert s.multiplicity_of(0) == 8
    assert [e.value for e in block_spectrum(MapSpec.B(LAM), 0)] == [1]


def test_block_spectrum_T_negative_pair():
    s = block_spectrum(MapSpec.T(LAM), -2)
    assert s.multiplicity_of(abs(LAM)) == 1
    assert s.multiplicity_of(-abs(LAM)) == 1
    assert s.total == 2


def test_block_spectrum_TT_is_diagonal():
    for k in (-4, 3, 5):
        M = block_matrix(MapSpec.TT(LAM, MU), k).data
        assert not (M - np.diag(np.diag(M))).any()


def test_structured_paths():
    M = np.array([[0, 0, 2], [3, 0, 0], [0, 5, 0]], dtype=complex)
    ev = block_eigenvalues(M)
    roots = [30 ** (1 / 3) * cmath.exp(2j * math.pi * j / 3) for j in range(3)]
    assert match(ms(ev), ms(roots), 1e-12).ok
    M = np.array([[0, 4, 0], [1, 0, 0], [0, 0, 0]], dtype=complex)
    assert sorted(block_eigenvalues(M), key=lambda v: v.real) == [-2, 0, 2]


def test_spectrum_examples():
    s = spectrum(MapSpec.B(0.0), (-10, 10))
    assert [e.value for e in s.nonzero()] == [1]
    lam = 0.99 * cmath.exp(37j * math.pi / 50)
    s = spectrum(MapSpec.B(lam), (0, 12)).nonzero()
    expected = [1] + [lam**k for k in range(1, 13)] + [lam.conjugate() ** k for k in range(1, 13)]
    rep = match(s, ms(expected), 1e-12)
    assert rep.ok and rep.max_distance < 1e-13


def test_remark_composition_spectrum():
    comp = MapSpec.compose(MapSpec.T(0.0), MapSpec.T(LAM))
    a = spectrum(comp, (-8, 8)).nonzero()
    b = spectrum(MapSpec.B(LAM), (-8, 8)).nonzero()
    assert match(a, b, 1e-10).ok


@pytest.mark.parametrize(
    "spec",
    [MapSpec.B(LAM), MapSpec.T(LAM), MapSpec.TT(LAM, MU), MapSpec.BK(LAM, 2), MapSpec.TK(LAM, 3)],
    ids=["B", "T", "TT", "BK", "TK"],
)
def test_block_union_equals_dense_window(spec):
    A, _ = windowed_matrix(spec, -5, 5)
    dense = ms(dense_eigenvalues(A)).nonzero(1e-7)
    blocks = spectrum(spec, (-5, 5)).nonzero(1e-7)
    assert match(dense, blocks, 1e-9).ok


def test_weight_independence():
    spec = MapSpec.T(LAM)
    ref = spectrum(spec, (-4, 4)).nonzero(1e-7)
    for cfg in (SpaceConfig(a=0.2), SpaceConfig(a=0.5, phi=1.3, weight_family="degphi"), SpaceConfig(a=1.0)):
        A, _ = windowed_matrix(spec, -4, 4, cfg=cfg)
        assert match(ms(dense_eigenvalues(A)).nonzero(1e-7), ref, 1e-9).ok


@pytest.mark.parametrize("spec", [MapSpec.B(LAM), MapSpec.T(LAM), MapSpec.TT(LAM, MU), MapSpec.TK(MU, 2)])
def test_conjugation_closed(spec):
    s = spectrum(spec, (-8, 8)).nonzero()
    conj = ms([v.conjugate() for v in s.values()])
    assert match(s, conj, 1e-12).ok


def test_T_multiplicity_law():
    s = spectrum(MapSpec.T(LAM), (-12, 12))
    l1 = cmath.sqrt(LAM)
    for k in range(1, 13):
        for base in (l1, l1.conjugate()):
            assert s.multiplicity_of(base**k) == k // 2 + 1
            assert s.multiplicity_of(-(base**k)) == (k + 1) // 2


def test_theoretical_examples():
    th = theoretical_spectrum(MapSpec.T(LAM), k_max=4)
    assert th.multiplicity_of(LAM) == 2
    assert th.multiplicity_of(-LAM) == 1
    tt = theoretical_spectrum(MapSpec.TT(LAM, 0.0), modulus_floor=abs(LAM) ** 10)
    b = theoretical_spectrum(MapSpec.B(LAM), modulus_floor=abs(LAM) ** 10)
    assert match(tt, b, 1e-14).ok
    bk = theoretical_spectrum(MapSpec.BK(LAM, 2), k_max=6)
    assert match(bk, theoretical_spectrum(MapSpec.B(LAM**2), k_max=6), 1e-14).ok
    with pytest.raises(ValueError):
        theoretical_spectrum(MapSpec.B(LAM))
    with pytest.raises(ValueError):
        theoretical_spectrum(MapSpec.compose(MapSpec.B(LAM), MapSpec.T(MU)), k_max=3)


def test_theoretical_counts_fill_blocks():
    # the closed-form terms account for every nonzero eigenvalue, block by block
    for spec in (MapSpec.T(LAM), MapSpec.TT(LAM, MU)):
        terms = theoretical_terms(spec, 6)
        for k in range(-6, 7):
            if k == -1:
                continue
            count = sum(mult for _, mult, d in terms if d == k)
            assert count == block_spectrum(spec, k).nonzero().total


def test_spectrum_floor_and_completeness():
    spec = MapSpec.B(0.5)
    s = spectrum(spec, (-4, 10), modulus_floor=0.5**8)
    assert all(abs(v) >= 0.5**8 * (1 - 1e-9) for v in s.values())
    assert s.omitted_bound == pytest.approx(0.5**11)
    assert s.complete
    assert not spectrum(spec, (2, 10), modulus_floor=0.1).complete
    assert omitted_modulus_bound(MapSpec.T(0.64), range(-3, 4)) == pytest.approx(0.8**4)


def test_threads_give_identical_results(monkeypatch):
    spec = MapSpec.TT(LAM, MU)
    one = spectrum(spec, (-6, 6), workers=1)
    monkeypatch.setenv("RESONANCE_THREADS", "4")
    assert spectrum(spec, (-6, 6)) == one


def test_multiset_order_and_coalescing():
    s = ms([0.5, 1e-11 + 0.5, -0.5j, 0.9, 0.3])
    assert [round(abs(e.value), 6) for e in s] == [0.9, 0.5, 0.5, 0.3]
    assert s.multiplicity_of(0.5) == 2
    assert merge_radius(0.0) == 1e-10
    assert merge_radius(100.0) == pytest.approx(1e-6)


def test_match_examples():
    vals = [1, 0.5 + 0.2j, 0.5 - 0.2j, 0.1]
    rep = match(ms(vals), ms(vals), 1e-10)
    assert rep.ok and rep.max_distance == 0
    shifted = list(vals)
    shifted[1] += 10 * 1e-10
    rep = match(ms(shifted), ms(vals), 1e-10)
    assert len(rep.missing_theoretical) == 1 and len(rep.spurious_computed) == 1
    with pytest.raises(ValueError):
        match(ms(vals), ms(vals), 0)


def test_match_is_multiplicity_aware():
    a = SpectrumMultiset.from_values([(0.5, 2, 1)])
    b = SpectrumMultiset.from_values([(0.5, 1, None)])
    rep = match(a, b, 1e-10)
    assert len(rep.spurious_computed) == 1 and not rep.missing_theoretical


@pytest.mark.parametrize("spec", [MapSpec.B(LAM), MapSpec.T(LAM), MapSpec.TT(LAM, MU)])
def test_semisimple_blocks(spec):
    for k in range(-6, 9):
        if k == -1:
            continue
        assert semisimple_defects(block_matrix(spec, k).data) == []


def test_semisimple_detects_jordan_block():
    J = np.array([[0.5, 1], [0, 0.5]], dtype=complex)
    assert semisimple_defects(J) == [(0.5, 2, 1)]


def test_real_power_coincidence_is_semisimple():
    lam = 0.8 * cmath.exp(1j * math.pi / 4)
    s = spectrum(MapSpec.B(lam), (4, 4)).nonzero()
    assert s.multiplicity_of(lam**4) == 2
    assert semisimple_defects(block_matrix(MapSpec.B(lam), 4).data) == []
