"""Degree functions, anisotropic weights and degree blocks on the lattice Z^2."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0
GOLDEN_CONJ = (1.0 - math.sqrt(5.0)) / 2.0


class MonomialIndex(NamedTuple):
    """Exponent pair ``(m, n)`` of the monomial ``z**m * w**n``."""

    m: int
    n: int


class WeightFamily(enum.Enum):
    DEG1 = "deg1"
    DEGPHI = "degphi"
    SYMMETRIC_FR = "symmetric_fr"


@dataclass(frozen=True)
class SpaceConfig:
    """Parameters of the weighted space: ``||e_{m,n}|| = exp(-a * deg(m, n))``."""

    a: float
    phi: float = 1.0
    weight_family: WeightFamily = WeightFamily.DEG1

    def __post_init__(self):
        errors = []
        if not (isinstance(self.a, (int, float)) and math.isfinite(self.a) and self.a > 0):
            errors.append(f"a must be a finite positive real, got {self.a!r}")
        if not (isinstance(self.phi, (int, float)) and math.isfinite(self.phi) and self.phi >= 1):
            errors.append(f"phi must be >= 1, got {self.phi!r}")
        family = self.weight_family
        if not isinstance(family, WeightFamily):
            try:
                family = WeightFamily(family)
            except ValueError:
                errors.append(f"unknown weight family {self.weight_family!r}")
            else:
                object.__setattr__(self, "weight_family", family)
        if family is WeightFamily.DEG1 and self.phi != 1:
            errors.append(f"phi must equal 1 for the deg1 weights, got {self.phi!r}")
        if errors:
            raise ValueError("; ".join(errors))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "phi", float(self.phi))

    @property
    def swap_symmetric(self) -> bool:
        """True when ``||e_{m,n}|| == ||e_{n,m}||`` for every index."""
        return self.weight_family is WeightFamily.DEG1 or (
            self.weight_family is WeightFamily.DEGPHI and self.phi == 1.0
        )


def sign(k) -> int:
    """Sign with ``sign(0) = +1``."""
    return 1 if k >= 0 else -1


def deg1(idx) -> int:
    m, n = idx
    return sign(m * n) * (abs(m) + abs(n))


def degphi(idx, phi: float) -> float:
    if phi < 1:
        raise ValueError(f"phi must be >= 1, got {phi}")
    m, n = idx
    if m * n >= 0:
        return abs(m) + abs(n) / phi
    return -abs(m) - phi * abs(n)


def log_weight(idx, cfg: SpaceConfig) -> float:
    """Natural log of the basis weight ``||e_{m,n}||``."""
    m, n = idx
    family = cfg.weight_family
    if family is WeightFamily.DEG1:
        return -cfg.a * deg1(idx)
    if family is WeightFamily.DEGPHI:
        return -cfg.a * degphi(idx, cfg.phi)
    return -cfg.a * abs(GOLDEN * m + n) + cfg.a * abs(GOLDEN_CONJ * m + n)


def log_weights(ms, ns, cfg: SpaceConfig) -> np.ndarray:
    """Vectorised :func:`log_weight` over integer arrays ``ms`` and ``ns``."""
    ms = np.asarray(ms, dtype=float)
    ns = np.asarray(ns, dtype=float)
    family = cfg.weight_family
    if family is WeightFamily.SYMMETRIC_FR:
        return -cfg.a * np.abs(GOLDEN * ms + ns) + cfg.a * np.abs(GOLDEN_CONJ * ms + ns)
    phi = cfg.phi if family is WeightFamily.DEGPHI else 1.0
    same = ms * ns >= 0
    deg = np.where(same, np.abs(ms) + np.abs(ns) / phi, -np.abs(ms) - phi * np.abs(ns))
    return -cfg.a * deg


def weight(idx, cfg: SpaceConfig) -> float:
    return math.exp(log_weight(idx, cfg))


@dataclass(frozen=True)
class Block:
    """Indices of the degree level ``deg1 == k`` in canonical lexicographic order."""

    k: int
    indices: tuple

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


def block_size(k: int) -> int:
    if k == 0:
        return 1
    if k > 0:
        return 2 * k + 2
    if k == -1:
        return 0
    return -2 * k - 2


@lru_cache(maxsize=1024)
def block_indices(k: int) -> Block:
    k = int(k)
    if k == 0:
        pts = [MonomialIndex(0, 0)]
    elif k > 0:
        # mn >= 0 and |m| + |n| = k: closed first and third quadrants
        pts = [MonomialIndex(m, k - m) for m in range(0, k + 1)]
        pts += [MonomialIndex(-m, -(k - m)) for m in range(0, k + 1)]
    else:
        s = -k
        # mn < 0 and |m| + |n| = s
        pts = [MonomialIndex(m, -(s - m)) for m in range(1, s)]
        pts += [MonomialIndex(-m, s - m) for m in range(1, s)]
    return Block(k=k, indices=tuple(sorted(pts)))


def window_indices(k_min: int, k_max: int) -> list:
    if k_min > k_max:
        raise ValueError(f"empty degree window [{k_min}, {k_max}]")
    out = []
    for k in range(k_min, k_max + 1):
        out.extend(block_indices(k).indices)
    return out


def radius_indices(radius: int) -> list:
    """All indices with ``|m| + |n| <= radius`` in lexicographic order."""
    return [
        MonomialIndex(m, n)
        for m in range(-radius, radius + 1)
        for n in range(-(radius - abs(m)), radius - abs(m) + 1)
    ]
