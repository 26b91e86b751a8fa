"""Hilbert-Schmidt estimates, compactness diagnostics and correlation decay."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .blaschke import alpha, as_param, contraction_factor
from .lattice import (
    GOLDEN,
    GOLDEN_CONJ,
    MonomialIndex,
    SpaceConfig,
    WeightFamily,
    deg1,
    log_weight,
    log_weights,
    radius_indices,
)
from .operators import MapKind, MapSpec, _ray, apply_map, ray_sup_log_weight


class LaurentPolynomial:
    """Finitely supported series ``f(z, w) = sum b[m, n] z**m w**n``."""

    def __init__(self, terms=None):
        self.terms = {}
        for idx, c in (terms or {}).items():
            c = complex(c)
            if c != 0:
                self.terms[MonomialIndex(*idx)] = c

    def __getitem__(self, idx):
        return self.terms.get(MonomialIndex(*idx), 0j)

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return f"LaurentPolynomial({len(self.terms)} terms)"

    @property
    def radius(self) -> int:
        return max((abs(m) + abs(n) for m, n in self.terms), default=0)

    def __call__(self, z, w):
        return sum(c * z**m * w**n for (m, n), c in self.terms.items())

    @classmethod
    def monomial(cls, m, n, coeff=1.0):
        return cls({(m, n): coeff})


def generic_observable(rng: np.random.Generator, size: int = 3, decay: float = 0.5) -> LaurentPolynomial:
    """Coefficients ``decay**(|m|+|n|) * u`` on ``|m|, |n| <= size``, ``u`` uniform in the unit disk."""
    terms = {}
    for m in range(-size, size + 1):
        for n in range(-size, size + 1):
            r = math.sqrt(rng.random())
            t = 2 * math.pi * rng.random()
            terms[(m, n)] = decay ** (abs(m) + abs(n)) * r * complex(math.cos(t), math.sin(t))
    return LaurentPolynomial(terms)


def space_norm(f: LaurentPolynomial, cfg: SpaceConfig) -> float:
    """``(sum |b|^2 ||e_{m,n}||^2)^(1/2)``; finite for every finitely supported ``f``."""
    if not f.terms:
        return 0.0
    idx = list(f.terms)
    lw = log_weights([i[0] for i in idx], [i[1] for i in idx], cfg)
    c = np.array([f.terms[i] for i in idx])
    return float(np.sqrt(np.sum(np.abs(c) ** 2 * np.exp(2 * lw))))


def weight_growth(cfg: SpaceConfig) -> float:
    """Smallest ``g`` with ``log ||e_{m,n}|| <= a * g * (|m| + |n|)``."""
    if cfg.weight_family is WeightFamily.DEG1:
        return 1.0
    if cfg.weight_family is WeightFamily.DEGPHI:
        return cfg.phi
    # piecewise linear and homogeneous: the max over the l1 sphere sits at a
    # vertex or where one of the absolute values changes sign
    dirs = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -GOLDEN), (-1, GOLDEN), (1, -GOLDEN_CONJ), (-1, GOLDEN_CONJ)]
    return max(log_weight(d, cfg) / (cfg.a * (abs(d[0]) + abs(d[1]))) for d in dirs)


def geometric_series_converges(rho: float, cfg: SpaceConfig) -> bool:
    """Whether ``b[m, n] = rho**(|m|+|n|)`` has finite norm under ``cfg``."""
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    return cfg.a * weight_growth(cfg) < -math.log(rho)


# -- Hilbert-Schmidt -----------------------------------------------------------


def hs_delta(spec: MapSpec, cfg: SpaceConfig) -> float | None:
    """Exponent ``delta`` with per-column ratio^2 <= exp(-delta (|m|+|n|)), when known."""
    if spec.kind is MapKind.B and cfg.weight_family is WeightFamily.DEG1:
        M = contraction_factor(spec.lam, cfg.a)
        return min(-0.5 * math.log(M), cfg.a)
    if spec.kind is MapKind.T and cfg.weight_family is WeightFamily.DEGPHI:
        M = contraction_factor(spec.lam, cfg.a)
        a, phi = cfg.a, cfg.phi
        return min(2 * a * (phi - 1) / phi, 2 * a * (1 - phi) - math.log(M))
    return None


def hs_admissible(lam, cfg: SpaceConfig) -> bool:
    """``2a(phi - 1) < -log M_{a,lam}``."""
    return 2 * cfg.a * (cfg.phi - 1) < -math.log(contraction_factor(lam, cfg.a))


def hs_bound_sum(delta: float, radius: int | None = None) -> float:
    """``sum exp(-delta (|m|+|n|))`` over ``|m|, |n| <= radius`` (all of Z^2 if None)."""
    if radius is None:
        return 1.0 / math.tanh(delta / 2) ** 2
    q = math.exp(-delta)
    line = 1.0 + 2.0 * sum(q**j for j in range(1, radius + 1))
    return line * line


@dataclass
class HSResult:
    value: float
    per_column: dict
    delta: float | None = None
    bound: float | None = None
    warnings: list = field(default_factory=list)


def column_ratio_sq(spec: MapSpec, idx, cfg: SpaceConfig, order: int = 60) -> float:
    """``(||C e_idx|| / ||e_idx||)^2`` with the truncated remainder bounded above."""
    idx = MonomialIndex(*idx)
    ls = log_weight(idx, cfg)
    if spec.kind is MapKind.COMPOSE:
        col = apply_map(spec, idx, order=order, cfg=cfg)
        tot = sum(abs(v) ** 2 * math.exp(2 * (log_weight(t, cfg) - ls)) for t, v in col.entries)
        return tot + (col.tail_weight * math.exp(-ls)) ** 2 + 2 * col.tail_weight * math.exp(-ls) * math.sqrt(tot)
    target, ray = _ray(spec, idx)
    if ray is None:
        return math.exp(2 * (log_weight(target, cfg) - ls))
    (x0, c), (step, p) = target, ray
    coeffs = alpha(spec.lam, p, order)
    j = np.arange(order + 1)
    lt = log_weights(x0 + step * j, np.full(order + 1, c), cfg)
    e = coeffs.real**2 + coeffs.imag**2
    tot = float(np.sum(e * np.exp(2 * (lt - ls))))
    rest = 1.0 - float(np.sum(e))
    if rest > 0:
        sup = ray_sup_log_weight(x0 + step * (order + 1), c, step, cfg)
        tot += rest * math.exp(2 * (sup - ls))
    return tot


def hs_norm(spec: MapSpec, cfg: SpaceConfig, radius: int, order: int = 60) -> HSResult:
    """Squared Hilbert-Schmidt sum over ``|m|, |n| <= radius``.

    Each column's truncated remainder is bounded by Parseval times the largest
    weight along its ray, so every ``per_column`` value is an upper estimate.
    """
    if not isinstance(cfg, SpaceConfig):
        raise TypeError("cfg must be a SpaceConfig")
    notes = []
    if spec.kind in (MapKind.T, MapKind.TK) and not hs_admissible(spec.lam, cfg):
        msg = (
            f"2a(phi-1) = {2 * cfg.a * (cfg.phi - 1):.6g} is not below "
            f"-log M = {-math.log(contraction_factor(spec.lam, cfg.a)):.6g}; C_T need not be Hilbert-Schmidt"
        )
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    per = {}
    for m in range(-radius, radius + 1):
        for n in range(-radius, radius + 1):
            per[MonomialIndex(m, n)] = column_ratio_sq(spec, (m, n), cfg, order)
    value = math.fsum(per.values())
    delta = hs_delta(spec, cfg)
    bound = hs_bound_sum(delta, radius) if delta and delta > 0 else None
    return HSResult(value=value, per_column=per, delta=delta, bound=bound, warnings=notes)


# -- non-compactness and unboundedness ------------------------------------------


def compactness_violation(lam, m: int, n_list, cfg: SpaceConfig | None = None, order: int = 60, require_symmetric: bool = True):
    """Column ratios ``||C_T e_{m,n}|| / ||e_{m,n}||`` of ``T_lam`` along ``n``.

    Under weights with ``||e_{m,n}|| == ||e_{n,m}||`` every ratio is at least
    ``|lam|**m``: the images of a weakly null sequence stay bounded away from
    zero, so ``C_T`` cannot be compact there.  The ratios are truncated sums,
    hence lower bounds.
    """
    lam = as_param(lam)
    if lam.value == 0:
        raise ValueError("lambda = 0 gives no witness: C_{T_0} kills the leading term")
    if int(m) < 1:
        raise ValueError("m must be a positive integer")
    if cfg is None:
        cfg = SpaceConfig(a=0.5)
    if require_symmetric and not cfg.swap_symmetric:
        raise ValueError(
            f"{cfg.weight_family.value} weights are not swap-symmetric; pass require_symmetric=False for a contrast run"
        )
    spec = MapSpec.T(lam)
    out = []
    for n in n_list:
        target, ray = _ray(spec, (m, n))
        (x0, c), (step, p) = target, ray
        coeffs = alpha(lam, p, order)
        ls = log_weight((m, n), cfg)
        j = np.arange(order + 1)
        lt = log_weights(x0 + step * j, np.full(order + 1, c), cfg)
        e = coeffs.real**2 + coeffs.imag**2
        out.append(math.sqrt(float(np.sum(e * np.exp(2 * (lt - ls))))))
    return out


def unboundedness_witness(lam, a: float, phi: float, threshold: float = 1e3):
    """Index ``(m, -1)`` whose column-ratio lower bound exceeds ``threshold``.

    For ``m > 0 > n`` the leading term alone gives the ratio lower bound
    ``|lam|**m * exp(a (phi - 1) (m + n))``; when ``-log|lam| < a (phi - 1)``
    it grows without bound in ``m``.  Returns ``(m, n, ratio)`` with the
    smallest such ``m``.
    """
    lam = as_param(lam)
    s = lam.modulus
    gap = a * (phi - 1)
    if s == 0 or not -math.log(s) < gap:
        raise ValueError(f"premise -log|lambda| < a(phi-1) fails ({-math.log(s) if s else math.inf:.6g} >= {gap:.6g})")
    n = -1

    def lower(m):
        return s**m * math.exp(gap * (m + n))

    growth = math.log(s) + gap
    m = max(1, math.ceil((math.log(threshold) + gap) / growth))
    while m > 1 and lower(m - 1) >= threshold:
        m -= 1
    while lower(m) < threshold:
        m += 1
    return m, n, lower(m)


# -- correlations ---------------------------------------------------------------


@dataclass
class DecayFit:
    rates: list
    fitted_rate: float
    fitted_log_slope: float
    window: tuple
    residual: float
    tail_weights: list = field(default_factory=list)
    starved: list = field(default_factory=list)


def fit_decay(samples, window=None) -> DecayFit:
    """Least-squares fit of ``log|value|`` against ``m`` over ``window``.

    ``window`` is an inclusive ``(lo, hi)`` range of ``m``; the default skips
    the first quarter of the samples.
    """
    samples = [(int(m), complex(v)) for m, v in samples]
    if not samples:
        raise ValueError("no samples to fit")
    if window is None:
        m_max = max(m for m, _ in samples)
        window = (m_max // 4, m_max)
    lo, hi = window
    pts = [(m, abs(v)) for m, v in samples if lo <= m <= hi and abs(v) > 0]
    if len(pts) < 4:
        raise ValueError(f"need at least 4 nonzero samples in window {window}, got {len(pts)}")
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.log([p[1] for p in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return DecayFit(
        rates=samples,
        fitted_rate=float(math.exp(slope)),
        fitted_log_slope=float(slope),
        window=(lo, hi),
        residual=float(np.sqrt(np.mean(resid**2))),
    )


def _factor_matrix(spec, index, pos, order, drop_tol, cfg, max_degree=None):
    rows, cols, vals = [], [], []
    dropped = np.zeros(len(index))
    for jcol, src in enumerate(index):
        target, ray = _ray(spec, src)
        if ray is None:
            i = pos.get(target)
            if i is None:
                if _counts(target, max_degree):
                    dropped[jcol] = math.exp(log_weight(target, cfg)) if cfg else 1.0
            else:
                rows.append(i)
                cols.append(jcol)
                vals.append(1.0)
            continue
        (x0, c), (step, p) = target, ray
        coeffs = alpha(spec.lam, p, order)
        j = np.arange(order + 1)
        xs = x0 + step * j
        w = np.exp(log_weights(xs, np.full(order + 1, c), cfg)) if cfg else np.ones(order + 1)
        mags = np.abs(coeffs) * w
        lost = 0.0
        for t in range(order + 1):
            i = pos.get((int(xs[t]), c))
            if i is None or mags[t] < drop_tol:
                if _counts((int(xs[t]), c), max_degree):
                    lost += mags[t]
            elif coeffs[t] != 0:
                rows.append(i)
                cols.append(jcol)
                vals.append(coeffs[t])
        rest = 1.0 - float(np.sum(np.abs(coeffs) ** 2))
        # deg1 increases along the ray, so the first omitted target has the
        # smallest degree of the remainder
        if rest > 0 and _counts((x0 + step * (order + 1), c), max_degree):
            sup = ray_sup_log_weight(x0 + step * (order + 1), c, step, cfg) if cfg else 0.0
            lost += math.sqrt(rest) * math.exp(sup)
        dropped[jcol] = lost
    n = len(index)
    A = sp.csc_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=(n, n))
    return A, dropped


def _counts(target, max_degree):
    return max_degree is None or deg1(target) <= max_degree


def truncated_operator(
    spec: MapSpec, max_radius: int, order: int = 60, drop_tol: float = 1e-16, cfg=None, max_degree=None
):
    """Sparse matrix of the composition operator on ``|m| + |n| <= max_radius``.

    Returns ``(A, index, dropped)``; ``dropped[j]`` bounds the (weighted)
    mass of column ``j`` lost to the radius cut, ``drop_tol`` and the series
    truncation.  With ``max_degree`` only mass landing at ``deg1 <= max_degree``
    is counted: every map raises deg1, so anything above can never come back
    to an observable supported at lower degree.
    """
    index = radius_indices(max_radius)
    pos = {ix: i for i, ix in enumerate(index)}
    factors = spec.factors if spec.kind is MapKind.COMPOSE else (spec,)
    A = sp.identity(len(index), dtype=complex, format="csc")
    dropped = np.zeros(len(index))
    for f in factors:
        if f.kind is MapKind.COMPOSE:
            Af, _, df = truncated_operator(f, max_radius, order, drop_tol, cfg, max_degree)
        else:
            Af, df = _factor_matrix(f, index, pos, order, drop_tol, cfg, max_degree)
        # mass lost by this factor, fed by the current images of each source
        dropped = dropped + np.asarray(abs(A).T @ df).ravel()
        A = (Af @ A).tocsc()
    return A, index, dropped


def correlate(
    spec: MapSpec,
    f: LaurentPolynomial,
    g: LaurentPolynomial,
    m_max: int,
    max_radius: int = 40,
    order: int = 60,
    drop_tol: float = 1e-16,
    cfg: SpaceConfig | None = None,
    window=None,
    operator=None,
) -> DecayFit:
    """Correlation ``int f o T^m g - int f int g`` for ``m = 0..m_max`` and its decay fit.

    The area measure pairs ``e_{p,q}`` with ``e_{-p,-q}``.  ``operator`` may
    pass a precomputed :func:`truncated_operator` result; its ``max_degree``
    must be at least the largest deg1 in the support of ``g``.
    """
    if operator is None:
        top = max((deg1(ix) for ix in g.terms), default=0)
        operator = truncated_operator(spec, max_radius, order, drop_tol, cfg, max_degree=top)
    A, index, dropped = operator
    pos = {ix: i for i, ix in enumerate(index)}
    c = np.zeros(len(index), dtype=complex)
    for idx, v in f.terms.items():
        if idx not in pos:
            raise ValueError(f"observable f has a term {idx} outside the truncation radius")
        c[pos[idx]] = v
    gvec = np.zeros(len(index), dtype=complex)
    for (p, q), v in g.terms.items():
        i = pos.get(MonomialIndex(-p, -q))
        if i is not None:
            gvec[i] = v
    mean = f[(0, 0)] * g[(0, 0)]
    samples, tails, starved = [], [], []
    tail = 0.0
    for m in range(m_max + 1):
        corr = complex(gvec @ c - mean)
        samples.append((m, corr))
        tails.append(tail)
        starved.append(tail > abs(corr))
        tail += float(np.abs(c) @ dropped)
        c = A @ c
    try:
        fit = fit_decay(samples, window)
    except ValueError:
        if window is None:
            window = (m_max // 4, m_max)
        fit = DecayFit(samples, math.nan, math.nan, tuple(window), math.nan)
    fit.tail_weights = tails
    fit.starved = starved
    return fit

