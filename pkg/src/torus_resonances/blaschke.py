"""Taylor coefficients of powers of the Blaschke factor.

For ``|lam| < 1`` the Moebius factor ``b(z) = (z + lam) / (1 + conj(lam) z)``
has the expansion ``b(z)**p = sum_k alpha[p, k] z**k`` for ``p >= 0``.
Negative powers expand about infinity with ``alpha[-p, k] = conj(alpha[p, k])``
multiplying ``z**-k``; they are never stored, callers use :func:`alpha`.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class BlaschkeParam:
    """Complex parameter of a Blaschke factor, ``|value| < 1``."""

    value: complex

    def __post_init__(self):
        v = complex(self.value)
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise ValueError(f"Blaschke parameter must be finite, got {v!r}")
        if abs(v) >= 1.0:
            raise ValueError(f"Blaschke parameter needs |lambda| < 1, got |{v!r}| = {abs(v)!r}")
        object.__setattr__(self, "value", v)

    @property
    def modulus(self) -> float:
        return abs(self.value)

    def __complex__(self):
        return self.value


def as_param(lam) -> BlaschkeParam:
    if isinstance(lam, BlaschkeParam):
        return lam
    return BlaschkeParam(complex(lam))


@dataclass(frozen=True)
class BlaschkeCoefficients:
    """Prefix ``(alpha[p, 0], ..., alpha[p, K])`` for one parameter and power."""

    param: BlaschkeParam
    power: int
    coeffs: np.ndarray
    order: int

    def __len__(self):
        return self.order + 1

    def __getitem__(self, k):
        return self.coeffs[k]


def _single_factor(lam: complex, order: int) -> np.ndarray:
    # b(z) = lam + (1 - |lam|^2) * sum_{k>=1} (-conj(lam))^(k-1) z^k
    out = np.zeros(order + 1, dtype=complex)
    out[0] = lam
    if order >= 1:
        r = -lam.conjugate()
        out[1:] = (1.0 - abs(lam) ** 2) * r ** np.arange(order)
    return out


def _truncated_product(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    return np.convolve(a, b)[: order + 1]


def _key(lam: complex) -> bytes:
    # exact bit pattern, so 0.0 and -0.0 are distinct cache entries
    return struct.pack("<dd", lam.real, lam.imag)


@lru_cache(maxsize=4096)
def _power_series(key: bytes, power: int, order: int) -> np.ndarray:
    re, im = struct.unpack("<dd", key)
    lam = complex(re, im)
    result = np.zeros(order + 1, dtype=complex)
    result[0] = 1.0
    if power == 0:
        result.flags.writeable = False
        return result
    base = _single_factor(lam, order)
    p = power
    first = True
    while p:
        if p & 1:
            result = base.copy() if first else _truncated_product(result, base, order)
            first = False
        p >>= 1
        if p:
            base = _truncated_product(base, base, order)
    # lam**p exactly as the constant term, avoiding accumulated product rounding
    result[0] = lam**power
    result.flags.writeable = False
    return result


def blaschke_coefficients(param, power: int, order: int) -> BlaschkeCoefficients:
    """Return the first ``order + 1`` Taylor coefficients of ``b(z)**power``.

    The single factor has the closed form ``alpha[1, 0] = lam`` and
    ``alpha[1, k] = (-conj(lam))**(k-1) * (1 - |lam|**2)``; higher powers come
    from binary exponentiation with products truncated at ``order``.
    """
    param = as_param(param)
    power = int(power)
    order = int(order)
    if power < 0:
        raise ValueError("blaschke_coefficients takes power >= 0; use alpha() for negative powers")
    if order < 0:
        raise ValueError(f"truncation order must be >= 0, got {order}")
    coeffs = _power_series(_key(param.value), power, order)
    return BlaschkeCoefficients(param=param, power=power, coeffs=coeffs, order=order)


def alpha(param, power: int, order: int) -> np.ndarray:
    """Coefficients ``alpha[power, 0..order]`` for any integer power.

    Negative powers use the conjugation convention.  The returned array is
    read-only and shared through the cache.
    """
    param = as_param(param)
    if order < 0:
        raise ValueError(f"truncation order must be >= 0, got {order}")
    c = _power_series(_key(param.value), abs(int(power)), int(order))
    if power < 0:
        c = c.conj()
        c.flags.writeable = False
    return c


def contraction_factor(param, a: float) -> float:
    """Max of ``|b(z)|`` over the circle ``|z| = exp(-2a)``.

    Closed form ``(|lam| + e^{-2a}) / (1 + e^{-2a} |lam|)``, strictly inside (0, 1).
    """
    param = as_param(param)
    a = float(a)
    if not a > 0:
        raise ValueError(f"weight exponent a must be > 0, got {a}")
    r = math.exp(-2.0 * a)
    s = param.modulus
    return (s + r) / (1.0 + r * s)


def tail_energy(param, power: int, a: float, order: int) -> float:
    """Partial weighted energy ``sum_{k<=order} |alpha[|power|, k]|^2 e^{-2ak}``.

    Nondecreasing in ``order`` and bounded by ``contraction_factor(param, a)**|power|``.
    """
    if not a > 0:
        raise ValueError(f"weight exponent a must be > 0, got {a}")
    c = alpha(param, abs(int(power)), order)
    w = np.exp(-2.0 * a * np.arange(order + 1))
    return float(np.sum((c.real**2 + c.imag**2) * w))


def suggest_order(param, a: float, tol: float = 1e-16) -> int:
    """Truncation order whose geometric weighted tail falls below ``tol``."""
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    m = contraction_factor(param, a)
    return max(1, math.ceil(math.log(tol) / math.log(m)))
