"""Block spectra, closed-form spectra and multiset matching."""

from __future__ import annotations

import cmath
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .eigensolver import dense_eigenvalues
from .lattice import block_size
from .operators import MapKind, MapSpec, block_matrix

FLOOR_SLACK = 1e-9


def merge_radius(value: complex) -> float:
    """Two eigenvalues coalesce iff they differ by at most this much."""
    return max(1e-10, 1e-8 * abs(value))


def above_floor(value: complex, floor: float) -> bool:
    return floor <= 0 or abs(value) >= floor * (1.0 - FLOOR_SLACK)


@dataclass(frozen=True)
class SpectrumEntry:
    value: complex
    multiplicity: int
    blocks: tuple = ()

    @property
    def provenance(self) -> str:
        if not self.blocks:
            return "theory"
        return ",".join(str(b) for b in self.blocks)


def _order_key(v: complex):
    # descending modulus, then argument; rounding keeps near-ties stable
    return (-round(abs(v), 12), round(cmath.phase(v), 12) if v != 0 else 0.0, v.real, v.imag)


@dataclass(frozen=True)
class SpectrumMultiset:
    entries: tuple
    modulus_floor: float = 0.0
    omitted_bound: float | None = None

    @classmethod
    def from_values(cls, items, modulus_floor: float = 0.0, omitted_bound=None):
        """Coalesce ``(value, multiplicity, block)`` triples into a multiset.

        ``block`` is ``None`` for closed-form values.
        """
        items = [
            (complex(v), int(mult), blk)
            for v, mult, blk in items
            if mult > 0 and above_floor(complex(v), modulus_floor)
        ]
        items.sort(key=lambda t: _order_key(t[0]))
        reps = []  # [value, multiplicity, blocks]
        for v, mult, blk in items:
            for rep in reps:
                if abs(v - rep[0]) <= merge_radius(rep[0]):
                    rep[1] += mult
                    if blk is not None and blk not in rep[2]:
                        rep[2].append(blk)
                    break
            else:
                reps.append([v, mult, [] if blk is None else [blk]])
        reps.sort(key=lambda r: _order_key(r[0]))
        entries = tuple(SpectrumEntry(v, m, tuple(sorted(b))) for v, m, b in reps)
        return cls(entries, modulus_floor, omitted_bound)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def total(self) -> int:
        return sum(e.multiplicity for e in self.entries)

    def values(self) -> list:
        """Expanded list with each value repeated by multiplicity."""
        out = []
        for e in self.entries:
            out.extend([e.value] * e.multiplicity)
        return out

    def nonzero(self, tol: float = 1e-12) -> "SpectrumMultiset":
        return SpectrumMultiset(
            tuple(e for e in self.entries if abs(e.value) > tol), self.modulus_floor, self.omitted_bound
        )

    def multiplicity_of(self, value: complex, tol: float | None = None) -> int:
        value = complex(value)
        tol = merge_radius(value) if tol is None else tol
        return sum(e.multiplicity for e in self.entries if abs(e.value - value) <= tol)

    @property
    def complete(self) -> bool:
        """Whether no omitted block can hold an eigenvalue above the floor."""
        if self.omitted_bound is None:
            return False
        return self.omitted_bound < self.modulus_floor or self.omitted_bound == 0.0


@dataclass
class MatchReport:
    matched: list = field(default_factory=list)
    missing_theoretical: list = field(default_factory=list)
    spurious_computed: list = field(default_factory=list)
    max_distance: float = 0.0
    tol: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.missing_theoretical and not self.spurious_computed


# -- block spectra -----------------------------------------------------------


def _weighted_permutation_eigs(M: np.ndarray):
    """Eigenvalues of a matrix with at most one nonzero per row and column.

    Such a matrix is a weighted partial permutation: cycles of length ``L``
    with weight product ``P`` contribute the ``L`` roots of ``P``, everything
    else is nilpotent and contributes zeros.  Returns ``None`` when the
    pattern does not apply.
    """
    nz = M != 0
    if (nz.sum(axis=0) > 1).any() or (nz.sum(axis=1) > 1).any():
        return None
    n = M.shape[0]
    succ = {}
    for j in range(n):
        rows = np.flatnonzero(nz[:, j])
        if rows.size:
            succ[j] = int(rows[0])
    eigs = []
    seen = set()
    for start in range(n):
        if start in seen:
            continue
        path = []
        j = start
        while j in succ and j not in seen and j not in path:
            path.append(j)
            j = succ[j]
        if j in path:
            cyc = path[path.index(j) :]
            prod = 1.0 + 0.0j
            for c in cyc:
                prod *= M[succ[c], c]
            L = len(cyc)
            if L == 1:
                eigs.append(complex(prod))
            elif L == 2:
                r = cmath.sqrt(prod)
                eigs.extend([r, -r])
            else:
                r = abs(prod) ** (1.0 / L)
                t = cmath.phase(prod)
                eigs.extend(r * cmath.exp(1j * (t + 2 * math.pi * q) / L) for q in range(L))
            seen.update(path)
        else:
            seen.update(path)
            if start not in succ:
                seen.add(start)
    # every index outside a cycle is nilpotent
    return eigs + [0j] * (n - len(eigs))


def block_eigenvalues(M: np.ndarray) -> list:
    """Eigenvalues of one block, by exact structure when it is recognised."""
    if not M.size:
        return []
    off = M - np.diag(np.diag(M))
    if not off.any():
        return [complex(v) for v in np.diag(M)]
    eigs = _weighted_permutation_eigs(M)
    if eigs is not None:
        return eigs
    return [complex(v) for v in dense_eigenvalues(M)]


def block_spectrum(spec: MapSpec, k: int) -> SpectrumMultiset:
    """Eigenvalues of the exact block at degree ``k``, zeros included."""
    M = block_matrix(spec, k).data
    return SpectrumMultiset.from_values([(v, 1, k) for v in block_eigenvalues(M)])


def _degree_rates(spec: MapSpec):
    """Per-degree moduli ``(r_pos, r_neg)``: block ``k`` eigenvalues are at most ``r**|k|``."""
    kind = spec.kind
    if kind in (MapKind.B, MapKind.BK):
        return spec.lam.modulus**spec.K, 0.0
    if kind in (MapKind.T, MapKind.TK):
        r = spec.lam.modulus ** (spec.K / 2.0)
        return r, r
    if kind is MapKind.COMPOSE and len(spec.factors) == 2 and all(
        f.kind in (MapKind.T, MapKind.TK) for f in spec.factors
    ):
        r = max(f.lam.modulus**f.K for f in spec.factors)
        return r, r
    return None


def omitted_modulus_bound(spec: MapSpec, ks) -> float | None:
    """Largest eigenvalue modulus any block outside ``ks`` could contribute."""
    rates = _degree_rates(spec)
    if rates is None:
        return None
    r_pos, r_neg = rates

    def rate(k):
        return r_pos**k if k >= 0 else r_neg ** (-k)

    ks = set(ks)
    lo, hi = min(ks), max(ks)
    gaps = [rate(k) for k in range(lo, hi + 1) if k not in ks and block_size(k) > 0]
    above = 1.0 if hi < 0 else rate(hi + 1)
    below = 1.0 if lo > 0 else rate(lo - 2 if lo - 1 == -1 else lo - 1)
    return max([above, below] + gaps)


def _normalize_range(k_range):
    if isinstance(k_range, tuple) and len(k_range) == 2:
        ks = range(k_range[0], k_range[1] + 1)
    else:
        ks = k_range
    return [k for k in ks if block_size(k) > 0]


def spectrum(spec: MapSpec, k_range, modulus_floor: float = 0.0, workers: int | None = None) -> SpectrumMultiset:
    """Union of block spectra over ``k_range`` (an iterable or ``(k_min, k_max)``).

    Blocks are solved independently (optionally on ``workers`` threads,
    defaulting to ``RESONANCE_THREADS``) and merged in ascending ``k``.
    """
    ks = _normalize_range(k_range)
    if not ks:
        return SpectrumMultiset((), modulus_floor, None)
    if workers is None:
        workers = int(os.environ.get("RESONANCE_THREADS", "1") or 1)

    def one(k):
        return [(v, 1, k) for v in block_eigenvalues(block_matrix(spec, k).data)]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, ks))
    else:
        parts = [one(k) for k in ks]
    items = [it for part in parts for it in part]
    return SpectrumMultiset.from_values(items, modulus_floor, omitted_modulus_bound(spec, ks))


# -- closed forms --------------------------------------------------------------


def _terms_B(lam, K, deg_ok):
    base = lam**K
    yield 1.0 + 0j, 1, 0
    k = 1
    while deg_ok(k, abs(base) ** k):
        yield base**k, 1, k
        yield base.conjugate() ** k, 1, k
        k += 1


def _terms_T(lam, K, deg_ok):
    l1 = cmath.sqrt(lam**K)
    c1 = l1.conjugate()
    r = abs(l1)
    yield 1.0 + 0j, 1, 0
    k = 1
    while deg_ok(k, r**k):
        plus, minus = k // 2 + 1, (k + 1) // 2
        for base in (l1, c1):
            yield base**k, plus, k
            yield -(base**k), minus, k
        # mixed products sit in block -k, with m, n >= 1 and m + n = k
        for m in range(1, k):
            v = l1**m * c1 ** (k - m)
            yield v, 1, -k
            yield -v, 1, -k
        k += 1


def _terms_TT(lam, mu, deg_ok):
    r = max(abs(lam), abs(mu))
    yield 1.0 + 0j, 1, 0
    k = 1
    while deg_ok(k, r**k):
        for a in range(0, k + 1):
            b = k - a
            yield lam**a * mu**b, 1, k
            yield lam.conjugate() ** a * mu.conjugate() ** b, 1, k
            if a >= 1 and b >= 1:
                yield lam**a * mu.conjugate() ** b, 1, -k
                yield lam.conjugate() ** a * mu**b, 1, -k
        k += 1


def theoretical_spectrum(spec: MapSpec, modulus_floor: float = 0.0, k_max: int | None = None) -> SpectrumMultiset:
    """Closed-form nonzero eigenvalues with multiplicities.

    Terms are enumerated by the degree block they arise in; enumeration stops
    at ``|degree| > k_max`` and values below ``modulus_floor`` are dropped.
    At least one of the two bounds must be active.
    """
    if k_max is None and not modulus_floor > 0:
        raise ValueError("theoretical_spectrum needs modulus_floor > 0 or k_max")

    def deg_ok(k, largest):
        if k_max is not None and k > k_max:
            return False
        if modulus_floor > 0 and not above_floor(largest, modulus_floor):
            return False
        return True

    kind = spec.kind
    if kind in (MapKind.B, MapKind.BK):
        terms = _terms_B(spec.lam.value, spec.K, deg_ok)
    elif kind in (MapKind.T, MapKind.TK):
        terms = _terms_T(spec.lam.value, spec.K, deg_ok)
    elif kind is MapKind.COMPOSE and len(spec.factors) == 2 and all(
        f.kind in (MapKind.T, MapKind.TK) for f in spec.factors
    ):
        f, g = spec.factors
        terms = _terms_TT(f.lam.value**f.K, g.lam.value**g.K, deg_ok)
    else:
        raise ValueError(f"no closed-form spectrum for {spec.describe()}")
    items = [(v, mult, None) for v, mult, _ in terms if v != 0]
    return SpectrumMultiset.from_values(items, modulus_floor)


def theoretical_terms(spec: MapSpec, k_max: int) -> list:
    """Formal closed-form terms ``(value, multiplicity, degree)`` up to ``|degree| <= k_max``."""

    def deg_ok(k, largest):
        return k <= k_max

    kind = spec.kind
    if kind in (MapKind.B, MapKind.BK):
        return list(_terms_B(spec.lam.value, spec.K, deg_ok))
    if kind in (MapKind.T, MapKind.TK):
        return list(_terms_T(spec.lam.value, spec.K, deg_ok))
    f, g = spec.factors
    return list(_terms_TT(f.lam.value**f.K, g.lam.value**g.K, deg_ok))


# -- matching --------------------------------------------------------------------


def match(computed: SpectrumMultiset, theoretical: SpectrumMultiset, tol: float) -> MatchReport:
    """Pair computed with theoretical values, multiplicity-aware.

    Uses an optimal assignment that first maximises the number of pairs
    within ``tol`` and then minimises their total distance.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    cv = computed.values()
    tv = theoretical.values()
    report = MatchReport(tol=tol)
    if not cv or not tv:
        report.missing_theoretical = list(tv)
        report.spurious_computed = list(cv)
        return report
    C = np.abs(np.subtract.outer(np.array(cv), np.array(tv)))
    big = 1e6 * (1.0 + tol * len(cv))
    cost = np.where(C <= tol, C, big)
    rows, cols = linear_sum_assignment(cost)
    used_c, used_t = set(), set()
    for i, j in zip(rows, cols):
        if C[i, j] <= tol:
            report.matched.append((cv[i], tv[j], float(C[i, j])))
            used_c.add(i)
            used_t.add(j)
    report.missing_theoretical = [v for j, v in enumerate(tv) if j not in used_t]
    report.spurious_computed = [v for i, v in enumerate(cv) if i not in used_c]
    report.max_distance = max((d for _, _, d in report.matched), default=0.0)
    return report


# -- semi-simplicity -----------------------------------------------------------


def semisimple_defects(M: np.ndarray, eigenvalues=None, tol: float = 1e-8) -> list:
    """Nonzero eigenvalues whose eigenspace is smaller than their multiplicity.

    Checks ``rank(M - rho I) == dim - mult(rho)`` with numerical rank at
    relative tolerance ``tol``; returns ``(rho, mult, rank)`` for failures.
    """
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    if eigenvalues is None:
        eigenvalues = block_eigenvalues(M)
    ms = SpectrumMultiset.from_values([(v, 1, 0) for v in eigenvalues])
    scale = max(1.0, np.linalg.norm(M, 2))
    defects = []
    for e in ms.nonzero():
        s = np.linalg.svd(M - e.value * np.eye(n), compute_uv=False)
        rank = int(np.sum(s > tol * scale))
        if rank != n - e.multiplicity:
            defects.append((e.value, e.multiplicity, rank))
    return defects
