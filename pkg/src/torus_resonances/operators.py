"""Composition operators of the torus maps on the monomial basis.

Every primitive map sends a monomial either to a single monomial or to a
"ray" of monomials ``(x0 + s*j, c)``, ``j = 0, 1, 2, ...`` with coefficients
``alpha[p, j]`` of a Blaschke power:

=====  ==========================================  ===============================
kind   map ``(z, w) ->``                           image of ``e_{m,n}``
=====  ==========================================  ===============================
B      ``(b(z) z w, b(z) w)``                      ``b^q z^m w^q``, ``q = m + n``
T      ``(b(z) w, z)``                             ``b^m z^n w^m``
BK     ``(b(z)^{K^2} z w^K, b(z)^K w)``            ``b^{Kq} z^m w^q``, ``q = Km + n``
TK     ``(b(z)^K w, z)``                           ``b^{Km} z^n w^m``
=====  ==========================================  ===============================

``COMPOSE(A, B)`` is the map ``A o B`` (``B`` acts on points first), so its
composition operator is ``C_B o C_A``: the factors' operators are applied to
functions left to right.
"""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .blaschke import BlaschkeParam, alpha, as_param
from .lattice import (
    GOLDEN,
    GOLDEN_CONJ,
    MonomialIndex,
    SpaceConfig,
    WeightFamily,
    block_indices,
    deg1,
    log_weight,
    sign,
    window_indices,
)


class MapKind(enum.Enum):
    B = "b"
    T = "t"
    BK = "bk"
    TK = "tk"
    COMPOSE = "compose"


@dataclass(frozen=True)
class MapSpec:
    kind: MapKind
    params: tuple = ()
    K: int = 1
    factors: tuple = ()

    def __post_init__(self):
        kind = self.kind if isinstance(self.kind, MapKind) else MapKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", tuple(as_param(p) for p in self.params))
        object.__setattr__(self, "factors", tuple(self.factors))
        if kind is MapKind.COMPOSE:
            if self.params:
                raise ValueError("COMPOSE takes factors, not parameters")
            for f in self.factors:
                if not isinstance(f, MapSpec):
                    raise TypeError(f"COMPOSE factor must be a MapSpec, got {f!r}")
        else:
            if len(self.params) != 1:
                raise ValueError(f"{kind.name} takes exactly one Blaschke parameter")
            if self.factors:
                raise ValueError(f"{kind.name} takes no factors")
        if not isinstance(self.K, int) or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K!r}")
        if kind in (MapKind.B, MapKind.T) and self.K != 1:
            raise ValueError(f"{kind.name} has no K index; use {kind.name}K")

    @classmethod
    def B(cls, lam):
        return cls(MapKind.B, (lam,))

    @classmethod
    def T(cls, lam):
        return cls(MapKind.T, (lam,))

    @classmethod
    def BK(cls, lam, K):
        return cls(MapKind.BK, (lam,), K=K)

    @classmethod
    def TK(cls, lam, K):
        return cls(MapKind.TK, (lam,), K=K)

    @classmethod
    def compose(cls, *factors):
        return cls(MapKind.COMPOSE, factors=factors)

    @classmethod
    def TT(cls, lam, mu):
        """The map ``T_lam o T_mu``."""
        return cls.compose(cls.T(lam), cls.T(mu))

    @property
    def lam(self) -> BlaschkeParam:
        return self.params[0]

    def describe(self) -> dict:
        d = {"kind": self.kind.value}
        if self.kind is MapKind.COMPOSE:
            d["factors"] = [f.describe() for f in self.factors]
        else:
            d["lambda"] = {"re": self.lam.value.real, "im": self.lam.value.imag}
            if self.kind in (MapKind.BK, MapKind.TK):
                d["K"] = self.K
        return d


@dataclass(frozen=True)
class SparseColumn:
    source: MonomialIndex
    entries: tuple
    tail_weight: float = 0.0

    def as_dict(self) -> dict:
        return dict(self.entries)

    def targets(self):
        return [t for t, _ in self.entries]


@dataclass(frozen=True)
class BlockMatrix:
    k: int
    indices: tuple
    data: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.indices)


def _ray(spec: MapSpec, idx):
    """Describe the image of ``e_idx`` under a primitive map.

    Returns ``(target, None)`` for a single unit entry, otherwise
    ``((x0, c), (step, power))`` for the ray ``(x0 + step*j, c) -> alpha[power, j]``.
    """
    m, n = idx
    kind = spec.kind
    if kind is MapKind.B or kind is MapKind.BK:
        K = spec.K
        q = K * m + n
        if q == 0:
            return MonomialIndex(m, 0), None
        p = K * q
        return (m, q), (sign(p), p)
    if kind is MapKind.T or kind is MapKind.TK:
        if m == 0:
            return MonomialIndex(n, 0), None
        p = spec.K * m
        return (n, m), (sign(p), p)
    raise ValueError(f"{kind} is not a primitive map")


def _check(spec):
    if not isinstance(spec, MapSpec):
        raise TypeError(f"expected a MapSpec, got {spec!r}")


def _ray_breakpoints(c: int, cfg: SpaceConfig):
    # log-weight along x -> (x, c) is piecewise linear between these abscissae
    pts = [0.0]
    if cfg.weight_family is WeightFamily.SYMMETRIC_FR:
        pts += [-c / GOLDEN, -c / GOLDEN_CONJ]
    return pts


def ray_sup_log_weight(x0: int, c: int, step: int, cfg: SpaceConfig) -> float:
    """Supremum of ``log ||e_{x0 + step*t, c}||`` over integers ``t >= 0``."""
    cands = {0}
    for b in _ray_breakpoints(c, cfg):
        t = (b - x0) * step
        for u in (math.floor(t) - 1, math.floor(t), math.ceil(t), math.ceil(t) + 1):
            if u >= 0:
                cands.add(u)
    far = max(cands) + 1
    lw = lambda t: log_weight((x0 + step * t, c), cfg)  # noqa: E731
    if lw(far + 1) > lw(far):
        return math.inf
    return max(lw(t) for t in cands | {far})


def _ray_column(spec, idx, order, cfg):
    target, ray = _ray(spec, idx)
    if ray is None:
        return [(target, 1.0 + 0.0j)], 0.0
    (x0, c), (step, p) = target, ray
    coeffs = alpha(spec.lam, p, order)
    entries = [(MonomialIndex(x0 + step * j, c), complex(coeffs[j])) for j in range(order + 1)]
    tail = 0.0
    rest = 1.0 - float(np.sum(coeffs.real**2 + coeffs.imag**2))
    if rest > 0:
        # Parseval bounds the l2 mass of the remainder; weights scale it by their sup
        tail = math.sqrt(rest)
        if cfg is not None:
            sup = ray_sup_log_weight(x0 + step * (order + 1), c, step, cfg)
            tail = tail * math.exp(sup) if math.isfinite(sup) else math.inf
    return entries, tail


def _primitive(kind):
    def apply(lam, idx, order, cfg=None, K=1):
        spec = MapSpec(kind, (lam,), K=K)
        entries, tail = _ray_column(spec, MonomialIndex(*idx), int(order), cfg)
        entries = [(t, v) for t, v in entries if v != 0]
        return SparseColumn(MonomialIndex(*idx), tuple(sorted(entries)), tail)

    return apply


def apply_B(lam, idx, order: int, cfg: SpaceConfig | None = None) -> SparseColumn:
    """Image of ``e_idx`` under ``C_{B_lam}``, truncated after ``order + 1`` terms.

    ``tail_weight`` (only with ``cfg``) bounds the weighted norm of the dropped
    remainder by Parseval and the supremum of the weights along the ray.
    """
    return _primitive(MapKind.B)(lam, idx, order, cfg)


def apply_T(lam, idx, order: int, cfg: SpaceConfig | None = None) -> SparseColumn:
    return _primitive(MapKind.T)(lam, idx, order, cfg)


def apply_BK(lam, K: int, idx, order: int, cfg: SpaceConfig | None = None) -> SparseColumn:
    return _primitive(MapKind.BK)(lam, idx, order, cfg, K=K)


def apply_TK(lam, K: int, idx, order: int, cfg: SpaceConfig | None = None) -> SparseColumn:
    return _primitive(MapKind.TK)(lam, idx, order, cfg, K=K)


def _merge(terms: dict) -> dict:
    out = {}
    for t, vals in terms.items():
        if len(vals) == 1:
            out[t] = vals[0]
        else:
            out[t] = complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))
    return out


def apply_map(
    spec: MapSpec,
    idx,
    order: int = 60,
    drop_tol: float = 0.0,
    max_radius: int | None = None,
    cfg: SpaceConfig | None = None,
) -> SparseColumn:
    """Image of ``e_idx`` under the composition operator of ``spec``.

    Entries whose (``cfg``-weighted, when given) magnitude is below
    ``drop_tol`` or whose index leaves ``|m| + |n| <= max_radius`` are dropped
    and their magnitude is added to ``tail_weight``.
    """
    _check(spec)
    idx = MonomialIndex(*idx)
    current = {idx: 1.0 + 0.0j}
    tail = 0.0
    factors = spec.factors if spec.kind is MapKind.COMPOSE else (spec,)
    for factor in factors:
        terms = defaultdict(list)
        for src in sorted(current):
            c = current[src]
            if factor.kind is MapKind.COMPOSE:
                col = apply_map(factor, src, order, drop_tol, max_radius, cfg)
                entries, t = col.entries, col.tail_weight
            else:
                entries, t = _ray_column(factor, src, order, cfg)
            tail += abs(c) * t
            for tgt, v in entries:
                terms[tgt].append(c * v)
        current = {}
        for tgt, v in sorted(_merge(terms).items()):
            mag = abs(v) * (math.exp(log_weight(tgt, cfg)) if cfg is not None else 1.0)
            if max_radius is not None and abs(tgt[0]) + abs(tgt[1]) > max_radius:
                tail += mag
            elif mag < drop_tol:
                tail += mag
            elif v != 0:
                current[tgt] = v
    return SparseColumn(idx, tuple(sorted(current.items())), tail)


def _primitive_block(spec: MapSpec, k: int) -> np.ndarray:
    block = block_indices(k)
    pos = {ix: i for i, ix in enumerate(block.indices)}
    M = np.zeros((len(block), len(block)), dtype=complex)
    for j, src in enumerate(block.indices):
        target, ray = _ray(spec, src)
        if ray is None:
            if deg1(target) == k:
                M[pos[target], j] = 1.0
            continue
        (x0, c), (step, p) = target, ray
        d0 = deg1((x0, c))
        if d0 > k:
            continue
        # deg1 rises by at least one per step along the ray, so only
        # finitely many terms can land back in D_k
        coeffs = alpha(spec.lam, p, k - d0)
        prev = d0 - 1
        for t in range(k - d0 + 1):
            tgt = (x0 + step * t, c)
            d = deg1(tgt)
            if d <= prev:
                raise RuntimeError(f"{spec.kind.name} does not increase deg1 along the image of {src}")
            prev = d
            if d == k:
                M[pos[tgt], j] += coeffs[t]
            elif d > k:
                break
    return M


def block_matrix(spec: MapSpec, k: int) -> BlockMatrix:
    """Exact matrix of ``P_k C P_k`` on the degree block ``D_k``."""
    _check(spec)
    k = int(k)
    block = block_indices(k)
    if not block.indices:
        raise ValueError(f"degree block D_{k} is empty")
    if spec.kind is MapKind.COMPOSE:
        M = np.eye(len(block), dtype=complex)
        for f in spec.factors:
            M = block_matrix(f, k).data @ M
    else:
        M = _primitive_block(spec, k)
    M.flags.writeable = False
    return BlockMatrix(k=k, indices=block.indices, data=M)


def _window_order(k_min, k_max):
    return max(1, k_max - k_min)


def windowed_matrix(
    spec: MapSpec,
    k_min: int,
    k_max: int,
    cfg: SpaceConfig | None = None,
    order: int | None = None,
    drop_tol: float = 0.0,
):
    """Dense matrix of ``P_W C P_W`` on ``W = D_{k_min} + ... + D_{k_max}``.

    Columns come from :func:`apply_map`, independently of
    :func:`block_matrix`.  The default ``order`` keeps every expansion term
    that can reach the window.  With ``cfg`` the matrix is expressed in the
    orthonormal basis ``e_{m,n} / ||e_{m,n}||`` (a diagonal similarity).
    Returns ``(matrix, indices)``.
    """
    _check(spec)
    indices = window_indices(k_min, k_max)
    if not indices:
        raise ValueError(f"degree window [{k_min}, {k_max}] contains no monomials")
    if order is None:
        order = _window_order(k_min, k_max)
    pos = {ix: i for i, ix in enumerate(indices)}
    A = np.zeros((len(indices), len(indices)), dtype=complex)
    for j, src in enumerate(indices):
        col = apply_map(spec, src, order=order, drop_tol=drop_tol, cfg=cfg)
        for tgt, v in col.entries:
            i = pos.get(tgt)
            if i is not None:
                A[i, j] = v
    if cfg is not None:
        lw = np.array([log_weight(ix, cfg) for ix in indices])
        A = A * np.exp(lw[:, None] - lw[None, :])
    return A, indices
