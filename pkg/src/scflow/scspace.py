"""Truncated fractal scale-Hilbert spaces.

The level-``k`` space is the weighted sequence space with norm

    ||x||_k = sqrt( sum_n f(n)**k * x_n**2 )

for a positive, nondecreasing weight ``f``.  Vectors are stored densely over
the truncated index range of their weight family: ``1..N`` for
``NATURAL_FROM_ONE`` and ``-N..N`` for ``ALL_INTEGERS``.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import DomainError

__all__ = [
    "IndexMode",
    "WeightKind",
    "WeightFamily",
    "ScVector",
    "weight_eval",
    "level_norm",
    "level_norms",
    "batch_level_norms",
    "inner_e0",
    "shift_map",
    "interpolation_rhs",
    "interpolation_gap",
    "interpolation_triples",
    "random_vector",
    "kahan_sum",
    "vector_seeds",
    "InterpolationSuite",
    "interpolation_suite",
    "random_suite",
    "basis_suite",
    "BUNDLED_FAMILIES",
]

DEFAULT_TRUNCATION = 64


class IndexMode(enum.Enum):
    NATURAL_FROM_ONE = "NaturalFromOne"
    ALL_INTEGERS = "AllIntegers"


class WeightKind(enum.Enum):
    POLY_SHIFTED = "PolyShifted"   # n**2 + 1
    POLY_SQUARE = "PolySquare"     # n**2, n >= 1
    SOBOLEV_LIKE = "SobolevLike"   # n**(2/d), n >= 1
    CUSTOM = "Custom"              # tabulated by |n|


@dataclass(frozen=True)
class WeightFamily:
    """The weight ``f`` defining a fractal scale structure.

    ``dim`` is only used by ``SOBOLEV_LIKE``.  For ``CUSTOM`` families
    ``table[m]`` is ``f`` at ``|n| = m + 1`` (natural indices) or ``|n| = m``
    (all integers), so the table also bounds the admissible truncation.
    """

    kind: WeightKind
    index_mode: IndexMode = IndexMode.NATURAL_FROM_ONE
    dim: float | None = None
    table: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind in (WeightKind.POLY_SQUARE, WeightKind.SOBOLEV_LIKE):
            if self.index_mode is not IndexMode.NATURAL_FROM_ONE:
                raise DomainError(f"{self.kind.value} vanishes at n=0; use NaturalFromOne indices")
        if self.kind is WeightKind.SOBOLEV_LIKE and not (self.dim and self.dim > 0):
            raise DomainError("SobolevLike needs a positive dimension")
        if self.kind is WeightKind.CUSTOM:
            t = np.asarray(self.table, dtype=float)
            if t.size == 0 or not np.all(np.isfinite(t)) or np.any(t <= 0):
                raise DomainError("custom weight table must hold finite positive reals")
            if np.any(np.diff(t) < 0):
                raise DomainError("custom weight table must be nondecreasing in |n|")

    @classmethod
    def poly_shifted(cls, index_mode: IndexMode = IndexMode.ALL_INTEGERS) -> "WeightFamily":
        return cls(WeightKind.POLY_SHIFTED, index_mode)

    @classmethod
    def poly_square(cls) -> "WeightFamily":
        return cls(WeightKind.POLY_SQUARE)

    @classmethod
    def sobolev_like(cls, dim: float) -> "WeightFamily":
        return cls(WeightKind.SOBOLEV_LIKE, dim=float(dim))

    @classmethod
    def custom(cls, table: Iterable[float], index_mode: IndexMode = IndexMode.NATURAL_FROM_ONE) -> "WeightFamily":
        return cls(WeightKind.CUSTOM, index_mode, table=tuple(float(v) for v in table))

    @classmethod
    def parse(cls, text: str) -> "WeightFamily":
        """Parse names such as ``PolySquare``, ``SobolevLike(2)`` or ``PolyShifted(NaturalFromOne)``."""
        m = re.fullmatch(r"\s*(\w+)\s*(?:\(\s*([^)]*)\s*\))?\s*", text)
        if not m:
            raise DomainError(f"cannot parse weight family {text!r}")
        name, arg = m.group(1), m.group(2)
        if name == "PolySquare" and arg is None:
            return cls.poly_square()
        if name == "PolyShifted":
            return cls.poly_shifted(IndexMode(arg) if arg else IndexMode.ALL_INTEGERS)
        if name == "SobolevLike" and arg:
            return cls.sobolev_like(float(arg))
        raise DomainError(f"unknown weight family {text!r}")

    @property
    def name(self) -> str:
        if self.kind is WeightKind.SOBOLEV_LIKE:
            return f"SobolevLike({self.dim:g})"
        if self.kind is WeightKind.POLY_SHIFTED and self.index_mode is IndexMode.NATURAL_FROM_ONE:
            return "PolyShifted(NaturalFromOne)"
        return self.kind.value

    def max_truncation(self) -> int | None:
        if self.kind is not WeightKind.CUSTOM:
            return None
        if self.index_mode is IndexMode.NATURAL_FROM_ONE:
            return len(self.table)
        return len(self.table) - 1

    def indices(self, N: int) -> np.ndarray:
        if N < 1:
            raise DomainError("truncation must be at least 1")
        cap = self.max_truncation()
        if cap is not None and N > cap:
            raise DomainError(f"custom table covers |n| <= {cap}, truncation {N} requested")
        if self.index_mode is IndexMode.NATURAL_FROM_ONE:
            return np.arange(1, N + 1)
        return np.arange(-N, N + 1)

    def in_range(self, n: int) -> bool:
        if self.index_mode is IndexMode.NATURAL_FROM_ONE and n < 1:
            return False
        cap = self.max_truncation()
        return cap is None or abs(n) <= cap

    def _formula(self, a: np.ndarray) -> np.ndarray:
        # a = |n| as float array
        if self.kind is WeightKind.POLY_SHIFTED:
            return a * a + 1.0
        if self.kind is WeightKind.POLY_SQUARE:
            return a * a
        if self.kind is WeightKind.SOBOLEV_LIKE:
            return a ** (2.0 / self.dim)
        offset = 1 if self.index_mode is IndexMode.NATURAL_FROM_ONE else 0
        return np.asarray(self.table)[a.astype(int) - offset]

    def weights(self, N: int) -> np.ndarray:
        """``f`` evaluated over ``indices(N)``."""
        return self._formula(np.abs(self.indices(N)).astype(float))

    def __call__(self, n: int) -> float:
        return weight_eval(self, n)


def weight_eval(w: WeightFamily, n: int) -> float:
    if int(n) != n or not w.in_range(int(n)):
        raise DomainError(f"index {n} outside the range of {w.name}")
    return float(w._formula(np.array([abs(float(n))]))[0])


def _sum_order(indices: np.ndarray) -> np.ndarray:
    return np.argsort(np.abs(indices), kind="stable")


def kahan_sum(terms: np.ndarray, axis: int = -1) -> np.ndarray:
    """Compensated summation along ``axis`` in storage order."""
    terms = np.moveaxis(np.asarray(terms, dtype=float), axis, 0)
    s = np.zeros(terms.shape[1:])
    c = np.zeros_like(s)
    for t in terms:
        y = t - c
        tot = s + y
        c = (tot - s) - y
        s = tot
    return s


@dataclass(frozen=True, eq=False)
class ScVector:
    """A finitely supported sequence attached to a weight family.

    ``values[p]`` is the coefficient at index ``indices[p]``; the array is a
    read-only copy so instances behave as values.
    """

    weight: WeightFamily
    N: int
    values: np.ndarray
    indices: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        idx = self.weight.indices(self.N)
        vals = np.array(self.values, dtype=float)
        if vals.shape != idx.shape:
            raise DomainError(f"expected {idx.size} coefficients for truncation {self.N}, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("ScVector coefficients must be finite")
        vals.setflags(write=False)
        idx.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "indices", idx)

    @classmethod
    def zeros(cls, weight: WeightFamily, N: int) -> "ScVector":
        return cls(weight, N, np.zeros(weight.indices(N).size))

    @classmethod
    def from_coeffs(cls, weight: WeightFamily, N: int, coeffs: Mapping[int, float]) -> "ScVector":
        idx = weight.indices(N)
        vals = np.zeros(idx.size)
        for n, v in coeffs.items():
            pos = _position(idx, n)
            if pos is None:
                raise DomainError(f"index {n} outside truncation {N} of {weight.name}")
            vals[pos] = v
        return cls(weight, N, vals)

    @classmethod
    def basis(cls, weight: WeightFamily, N: int, n: int) -> "ScVector":
        return cls.from_coeffs(weight, N, {n: 1.0})

    def like(self, values) -> "ScVector":
        """A vector in the same space with new coefficients."""
        return ScVector(self.weight, self.N, values)

    def coeffs(self) -> list[tuple[int, float]]:
        """Nonzero ``(index, value)`` pairs in index order."""
        nz = np.flatnonzero(self.values)
        return [(int(self.indices[p]), float(self.values[p])) for p in nz]

    def __getitem__(self, n: int) -> float:
        pos = _position(self.indices, n)
        if pos is None:
            raise DomainError(f"index {n} outside truncation")
        return float(self.values[pos])

    @property
    def dim(self) -> int:
        return self.values.size

    def check_compatible(self, other: "ScVector") -> None:
        if self.weight != other.weight or self.N != other.N:
            raise DomainError(
                f"incompatible spaces: {self.weight.name}/N={self.N} vs {other.weight.name}/N={other.N}"
            )

    def __add__(self, other: "ScVector") -> "ScVector":
        self.check_compatible(other)
        return self.like(self.values + other.values)

    def __sub__(self, other: "ScVector") -> "ScVector":
        self.check_compatible(other)
        return self.like(self.values - other.values)

    def __mul__(self, c: float) -> "ScVector":
        return self.like(float(c) * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "ScVector":
        return self.like(-self.values)

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def __repr__(self) -> str:
        return f"ScVector({self.weight.name}, N={self.N}, coeffs={self.coeffs()})"


def _position(indices: np.ndarray, n: int) -> int | None:
    if int(n) != n:
        return None
    p = int(n) - int(indices[0])
    if 0 <= p < indices.size:
        return p
    return None


def batch_level_norms(values: np.ndarray, weight: WeightFamily, N: int, levels: Iterable[int]) -> np.ndarray:
    """Level norms of many vectors at once.

    ``values`` has shape ``(..., dim)``; the result has shape ``(..., len(levels))``.
    Terms are summed in increasing ``|n|`` with compensated summation.
    """
    levels = list(levels)
    idx = weight.indices(N)
    order = _sum_order(idx)
    w = weight.weights(N)[order]
    sq = np.square(np.asarray(values, dtype=float)[..., order])
    out = np.empty(sq.shape[:-1] + (len(levels),))
    for p, k in enumerate(levels):
        if k < 0:
            raise DomainError("levels are nonnegative")
        out[..., p] = np.sqrt(kahan_sum(sq * w ** k, axis=-1))
    return out


def level_norm(x: ScVector, k: int) -> float:
    return float(batch_level_norms(x.values, x.weight, x.N, [k])[0])


def level_norms(x: ScVector, levels: Iterable[int]) -> np.ndarray:
    return batch_level_norms(x.values, x.weight, x.N, levels)


def inner_e0(x: ScVector, y: ScVector) -> float:
    x.check_compatible(y)
    order = _sum_order(x.indices)
    return float(kahan_sum(x.values[order] * y.values[order]))


def shift_map(x: ScVector, m: int) -> ScVector:
    """Multiply coefficient ``n`` by ``f(n)**(m/2)``; an isometry from level ``k+m`` to level ``k``."""
    if m < 0:
        raise DomainError("shift order must be nonnegative")
    if m == 0:
        return x
    return x.like(x.values * x.weight.weights(x.N) ** (m / 2.0))


def _check_triple(i: int, j: int, k: int) -> None:
    if not (0 <= i < j < k):
        raise DomainError(f"need 0 <= i < j < k, got ({i}, {j}, {k})")


def interpolation_rhs(norm_i, norm_k, i: int, j: int, k: int):
    """``||x||_k**((j-i)/(k-i)) * ||x||_i**((k-j)/(k-i))``; works elementwise on arrays."""
    return np.power(norm_k, (j - i) / (k - i)) * np.power(norm_i, (k - j) / (k - i))


def interpolation_gap(x: ScVector, i: int, j: int, k: int) -> float:
    """RHS minus LHS of the constant-one interpolation inequality at levels ``i < j < k``."""
    _check_triple(i, j, k)
    if x.is_zero():
        raise DomainError("interpolation gap needs a nonzero vector")
    ni, nj, nk = level_norms(x, [i, j, k])
    return float(interpolation_rhs(ni, nk, i, j, k) - nj)


def interpolation_triples(max_level: int) -> list[tuple[int, int, int]]:
    """All ``(i, j, k)`` with ``0 <= i < j < k <= max_level`` in lexicographic order."""
    return [
        (i, j, k)
        for i in range(max_level + 1)
        for j in range(i + 1, max_level + 1)
        for k in range(j + 1, max_level + 1)
    ]


def random_vector(weight: WeightFamily, N: int, seed: int) -> ScVector:
    """Draw one test vector from a seeded PCG64 stream.

    The draw mixes four shapes so that both generic and near-equality
    configurations are exercised: dense Gaussian, sparse (1-3 modes),
    power-law decaying, and a single dominant mode plus small noise.
    """
    rng = np.random.default_rng(seed)
    idx = weight.indices(N)
    kind = rng.integers(4)
    if kind == 0:
        vals = rng.standard_normal(idx.size)
    elif kind == 1:
        vals = np.zeros(idx.size)
        active = rng.choice(idx.size, size=rng.integers(1, 4), replace=False)
        vals[active] = rng.standard_normal(active.size)
    elif kind == 2:
        p = rng.uniform(0.0, 3.0)
        vals = rng.standard_normal(idx.size) * (1.0 + np.abs(idx)) ** (-p)
    else:
        vals = 1e-6 * rng.standard_normal(idx.size)
        vals[rng.integers(idx.size)] += 1.0
    if not np.any(vals):
        vals[0] = 1.0
    return ScVector(weight, N, vals)


def vector_seeds(seed: int, n: int) -> np.ndarray:
    """Per-vector 64-bit seeds derived from one run seed via ``SeedSequence``."""
    return np.random.SeedSequence(int(seed)).generate_state(n, dtype=np.uint64)


@dataclass(frozen=True, eq=False)
class InterpolationSuite:
    """Both sides of the interpolation inequality for a batch of vectors.

    ``lhs[v, t]`` and ``rhs[v, t]`` belong to vector ``v`` (identified by
    ``labels[v]``, its seed or basis index) and triple ``triples[t]``.
    """

    weight: WeightFamily
    labels: np.ndarray
    triples: list
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def gap(self) -> np.ndarray:
        return self.rhs - self.lhs

    def relative_gap(self) -> np.ndarray:
        return self.gap / self.rhs

    def violations(self, rtol: float = 1e-12) -> int:
        return int(np.count_nonzero(self.gap < -rtol * self.rhs))


def interpolation_suite(
    weight: WeightFamily,
    N: int,
    vectors: np.ndarray,
    labels: Iterable[int],
    max_level: int = 10,
    level_shift: int = 0,
) -> InterpolationSuite:
    """Evaluate every triple ``0 <= i < j < k <= max_level`` on each row of ``vectors``.

    ``level_shift`` evaluates the left side at level ``j + level_shift``; it
    exists only as a negative control and must be 0 for real checks.
    """
    triples = interpolation_triples(max_level)
    top = max_level + max(level_shift, 0)
    norms = np.empty((vectors.shape[0], top + 1))
    chunk = 2048
    for start in range(0, vectors.shape[0], chunk):
        norms[start : start + chunk] = batch_level_norms(vectors[start : start + chunk], weight, N, range(top + 1))
    ii = np.array([t[0] for t in triples])
    jj = np.array([t[1] for t in triples])
    kk = np.array([t[2] for t in triples])
    rhs = np.power(norms[:, kk], (jj - ii) / (kk - ii)) * np.power(norms[:, ii], (kk - jj) / (kk - ii))
    lhs = norms[:, jj + level_shift]
    return InterpolationSuite(weight, np.asarray(list(labels)), triples, lhs, rhs)


def random_suite(weight: WeightFamily, N: int, n_vectors: int, seed: int, max_level: int = 10, level_shift: int = 0):
    seeds = vector_seeds(seed, n_vectors)
    vecs = np.array([random_vector(weight, N, int(s)).values for s in seeds])
    return interpolation_suite(weight, N, vecs, seeds, max_level, level_shift)


def basis_suite(weight: WeightFamily, N: int, max_level: int = 10, level_shift: int = 0):
    idx = weight.indices(N)
    return interpolation_suite(weight, N, np.eye(idx.size), idx, max_level, level_shift)


BUNDLED_FAMILIES = (
    "PolySquare",
    "PolyShifted",
    "SobolevLike(1)",
    "SobolevLike(2)",
    "SobolevLike(4)",
)
