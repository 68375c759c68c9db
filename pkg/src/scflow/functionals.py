"""Action functionals on truncated scale spaces.

A functional provides its value, its level-0 (Riesz) gradient, the Hessian
action ``D grad A(x) u`` and optionally the second derivative of the gradient
``D^2 grad A(x)(u, v)``.  Array-level hooks (``_value``, ``_grad``, ...) work
on raw coefficient arrays; the public methods wrap them in ``ScVector``.
"""

from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import CapabilityError, DomainError
from .scspace import DEFAULT_TRUNCATION, IndexMode, ScVector, WeightFamily

__all__ = [
    "ActionFunctional",
    "DiagonalFunctional",
    "QuadraticArea",
    "CubicExample",
    "CoupledQuartic",
    "CriticalPoint",
    "energy",
    "gradient_fd_check",
    "hessian_fd_check",
    "gradient_fd_errors",
    "hessian_fd_errors",
    "cubic_critical_sets",
    "critical_point",
    "cubic_critical_point",
    "cubic_critical_value",
    "morse_check",
    "FUNCTIONALS",
    "make_functional",
]


class ActionFunctional(ABC):
    """Interface for a functional with an E0-gradient on a truncated space."""

    name = "abstract"
    provides_hessian = True
    provides_third = False
    is_diagonal = False

    def __init__(self, weight: WeightFamily, N: int):
        self.weight = weight
        self.N = N
        self.indices = weight.indices(N)

    # array-level hooks
    @abstractmethod
    def _value(self, a: np.ndarray) -> float: ...

    @abstractmethod
    def _grad(self, a: np.ndarray) -> np.ndarray: ...

    def _hess(self, a: np.ndarray, u: np.ndarray) -> np.ndarray:
        raise CapabilityError(f"{self.name} does not provide a Hessian")

    def _third(self, a: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        # central difference of the Hessian action along u
        scale = max(1.0, float(np.max(np.abs(a))))
        unorm = float(np.max(np.abs(u)))
        if unorm == 0.0:
            return np.zeros_like(a)
        h = 1e-4 * scale / unorm
        return (self._hess(a + h * u, v) - self._hess(a - h * u, v)) / (2.0 * h)

    def value_scale(self, a: np.ndarray) -> float:
        """Magnitude that bounds the rounding error of ``_value`` (in units of machine epsilon)."""
        return abs(self._value(a))

    def gradient_scale(self, a: np.ndarray) -> np.ndarray:
        return np.abs(self._grad(a))

    # public surface
    def zero(self) -> ScVector:
        return ScVector.zeros(self.weight, self.N)

    def vector(self, values) -> ScVector:
        return ScVector(self.weight, self.N, values)

    def _check(self, x: ScVector) -> None:
        if x.weight != self.weight or x.N != self.N:
            raise DomainError(
                f"{self.name} lives on {self.weight.name}/N={self.N}, got {x.weight.name}/N={x.N}"
            )

    def value(self, x: ScVector) -> float:
        self._check(x)
        return self._value(x.values)

    def gradient(self, x: ScVector) -> ScVector:
        self._check(x)
        return x.like(self._grad(x.values))

    def hessian_apply(self, x: ScVector, u: ScVector) -> ScVector:
        self._check(x)
        self._check(u)
        return x.like(self._hess(x.values, u.values))

    def third_apply(self, x: ScVector, u: ScVector, v: ScVector) -> ScVector:
        self._check(x)
        self._check(u)
        self._check(v)
        return x.like(self._third(x.values, u.values, v.values))

    def hessian_matrix(self, x: ScVector) -> np.ndarray:
        self._check(x)
        eye = np.eye(x.dim)
        cols = [self._hess(x.values, e) for e in eye]
        return np.column_stack(cols)

    def hessian_spectrum(self, x: ScVector) -> np.ndarray:
        """Hessian eigenvalues (ascending for generic functionals)."""
        m = self.hessian_matrix(x)
        return np.linalg.eigvalsh(0.5 * (m + m.T))

    def spectral_bound(self, x: ScVector) -> float:
        return float(np.max(np.abs(self.hessian_spectrum(x))))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(N={self.N})"


class DiagonalFunctional(ActionFunctional):
    """A functional that acts mode by mode: ``A(a) = sum_n phi_n(a_n)``.

    Subclasses give per-mode arrays.  The gradient splits as
    ``linear_rates * a + nonlinear(a)``, which the flow integrator uses for
    its exact linear propagator.
    """

    is_diagonal = True
    provides_third = True

    @abstractmethod
    def value_terms(self, a: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def gradient_terms(self, a: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def hessian_terms(self, a: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def third_terms(self, a: np.ndarray) -> np.ndarray: ...

    @property
    @abstractmethod
    def linear_rates(self) -> np.ndarray: ...

    def nonlinear(self, a: np.ndarray) -> np.ndarray:
        return self.gradient_terms(a) - self.linear_rates * a

    def _value(self, a):
        return math.fsum(self.value_terms(a))

    def value_scale(self, a):
        return math.fsum(np.abs(self.value_terms(a)))

    def _grad(self, a):
        return self.gradient_terms(a)

    def _hess(self, a, u):
        return self.hessian_terms(a) * u

    def _third(self, a, u, v):
        return self.third_terms(a) * u * v

    def hessian_diagonal(self, x: ScVector) -> np.ndarray:
        self._check(x)
        return self.hessian_terms(x.values)

    def hessian_spectrum(self, x: ScVector) -> np.ndarray:
        """Diagonal entries in index order."""
        return self.hessian_diagonal(x)


class QuadraticArea(DiagonalFunctional):
    """``A(a) = sum_n n a_n**2`` on the ``n**2 + 1`` weighted space.

    With ``positive_only`` the index set is ``1..N`` instead of ``-N..N``;
    this removes the unstable negative modes and the degenerate ``n = 0``
    direction, so ``0`` becomes a Morse critical point.
    """

    name = "quadratic"

    def __init__(self, N: int = DEFAULT_TRUNCATION, positive_only: bool = False):
        mode = IndexMode.NATURAL_FROM_ONE if positive_only else IndexMode.ALL_INTEGERS
        super().__init__(WeightFamily.poly_shifted(mode), N)
        self.positive_only = positive_only
        self._n = self.indices.astype(float)
        self._rates = 2.0 * self._n

    @property
    def linear_rates(self):
        return self._rates

    def nonlinear(self, a):
        return np.zeros_like(a)

    def value_terms(self, a):
        return self._n * a * a

    def gradient_terms(self, a):
        return self._rates * a

    def hessian_terms(self, a):
        return self._rates.copy()

    def third_terms(self, a):
        return np.zeros_like(self._n)

    def __repr__(self):
        return f"QuadraticArea(N={self.N}, positive_only={self.positive_only})"


class CubicExample(DiagonalFunctional):
    """``A(a) = sum_{n>=1} (n a_n**2 + n**3 a_n**3)`` on the ``n**2`` weighted space.

    Per-mode derivatives are written in factored form,
    ``n a (2 + 3 n**2 a)`` and ``2 n (1 + 3 n**2 a)``, so that they vanish and
    flip sign exactly at ``a = -2/(3 n**2)`` in floating point (for n <= 62).
    """

    name = "cubic"

    def __init__(self, N: int = DEFAULT_TRUNCATION):
        super().__init__(WeightFamily.poly_square(), N)
        self._n = self.indices.astype(float)
        self._n2 = self._n ** 2
        self._n3 = self._n ** 3
        self._rates = 2.0 * self._n

    @property
    def linear_rates(self):
        return self._rates

    def nonlinear(self, a):
        return 3.0 * self._n3 * a * a

    def value_terms(self, a):
        return self._n * a * a + self._n3 * a ** 3

    def gradient_terms(self, a):
        return self._n * a * (2.0 + 3.0 * self._n2 * a)

    def hessian_terms(self, a):
        return 2.0 * self._n * (1.0 + 3.0 * self._n2 * a)

    def third_terms(self, a):
        return 6.0 * self._n3

    def gradient_scale(self, a):
        return self._n * np.abs(a) * (2.0 + 3.0 * self._n2 * np.abs(a))


class CoupledQuartic(ActionFunctional):
    """``A(a) = sum_n n a_n**2 + (c/4) (sum_n a_n**2)**2`` on the ``n**2`` weighted space.

    A non-diagonal functional used to exercise the generic code paths:
    adaptive Runge-Kutta integration and the finite-difference fallback for
    the second derivative of the gradient.
    """

    name = "quartic"
    provides_third = False

    def __init__(self, N: int = DEFAULT_TRUNCATION, coupling: float = 1.0):
        super().__init__(WeightFamily.poly_square(), N)
        self.coupling = float(coupling)
        self._n = self.indices.astype(float)

    def _value(self, a):
        r2 = math.fsum(a * a)
        return math.fsum(self._n * a * a) + 0.25 * self.coupling * r2 * r2

    def _grad(self, a):
        return 2.0 * self._n * a + self.coupling * float(np.dot(a, a)) * a

    def _hess(self, a, u):
        c = self.coupling
        return 2.0 * self._n * u + c * (float(np.dot(a, a)) * u + 2.0 * float(np.dot(a, u)) * a)

    def third_exact(self, a, u, v):
        """Closed form of ``D^2 grad A(a)(u, v)``, kept for cross-checking the fallback."""
        c = self.coupling
        return 2.0 * c * (float(np.dot(a, u)) * v + float(np.dot(a, v)) * u + float(np.dot(u, v)) * a)


FUNCTIONALS = {
    "quadratic": lambda N, **kw: QuadraticArea(N, **kw),
    "cubic": lambda N, **kw: CubicExample(N),
    "quartic": lambda N, **kw: CoupledQuartic(N, **kw),
}


def make_functional(name: str, N: int = DEFAULT_TRUNCATION, **params) -> ActionFunctional:
    try:
        factory = FUNCTIONALS[name]
    except KeyError:
        raise DomainError(f"unknown functional {name!r}; choose from {sorted(FUNCTIONALS)}") from None
    return factory(N, **params)


def energy(F: ActionFunctional, x: ScVector) -> float:
    """Squared level-0 norm of the gradient."""
    g = F.gradient(x).values
    return math.fsum(g * g)


def _fd_step_check(h: float) -> None:
    if not (h > 0):
        raise DomainError("finite-difference step must be positive")


_EPS = np.finfo(float).eps


def gradient_fd_errors(F: ActionFunctional, x: ScVector, h: float) -> tuple[float, float]:
    """``(error, rounding_floor)`` of the central-difference gradient check at step ``h``.

    ``error`` is the largest ``|<grad A(x), e_n> - (A(x + h e_n) - A(x - h e_n)) / 2h|``;
    ``rounding_floor`` bounds the part of it that floating-point evaluation alone can produce.
    """
    _fd_step_check(h)
    F._check(x)
    a = x.values
    g = F._grad(a)
    worst = 0.0
    scale = 0.0
    for p in range(a.size):
        ap = a.copy()
        am = a.copy()
        ap[p] += h
        am[p] -= h
        fd = (F._value(ap) - F._value(am)) / (2.0 * h)
        worst = max(worst, abs(g[p] - fd))
        scale = max(scale, F.value_scale(ap), F.value_scale(am))
    floor = 16.0 * _EPS * (scale / h + float(np.max(np.abs(g), initial=0.0)))
    return worst, floor


def hessian_fd_errors(F: ActionFunctional, x: ScVector, h: float) -> tuple[float, float]:
    """``(error, rounding_floor)`` for ``H(x) e_n`` against the central difference of the gradient."""
    _fd_step_check(h)
    F._check(x)
    a = x.values
    worst = 0.0
    scale = 0.0
    hmax = 0.0
    for p in range(a.size):
        e = np.zeros_like(a)
        e[p] = 1.0
        ap = a + h * e
        am = a - h * e
        fd = (F._grad(ap) - F._grad(am)) / (2.0 * h)
        he = F._hess(a, e)
        worst = max(worst, float(np.max(np.abs(he - fd))))
        scale = max(scale, float(np.max(F.gradient_scale(ap))), float(np.max(F.gradient_scale(am))))
        hmax = max(hmax, float(np.max(np.abs(he))))
    floor = 16.0 * _EPS * (scale / h + hmax)
    return worst, floor


def gradient_fd_check(F: ActionFunctional, x: ScVector, h: float) -> float:
    """Largest mismatch ``|<grad A(x), e_n> - central difference of A along e_n|`` over basis directions."""
    return gradient_fd_errors(F, x, h)[0]


def hessian_fd_check(F: ActionFunctional, x: ScVector, h: float) -> float:
    """Largest entrywise mismatch between ``H(x) e_n`` and the central difference of the gradient."""
    return hessian_fd_errors(F, x, h)[0]


@dataclass(frozen=True, eq=False)
class CriticalPoint:
    point: ScVector
    action_value: float
    morse_index: int
    hessian_diagonal: np.ndarray

    @property
    def is_degenerate(self) -> bool:
        return bool(np.any(self.hessian_diagonal == 0.0))


def critical_point(F: ActionFunctional, x: ScVector, gtol: float = 0.0) -> CriticalPoint:
    """Package ``x`` as a critical point of ``F`` after checking ``|grad A(x)|_inf <= gtol``."""
    g = F.gradient(x).values
    gmax = float(np.max(np.abs(g))) if g.size else 0.0
    if gmax > gtol:
        raise DomainError(f"not a critical point: max |grad| = {gmax:.3e} > {gtol:.3e}")
    eig = np.array(F.hessian_spectrum(x), dtype=float)
    eig.setflags(write=False)
    return CriticalPoint(x, F.value(x), int(np.count_nonzero(eig < 0)), eig)


def cubic_critical_point(I: Iterable[int], N: int = DEFAULT_TRUNCATION) -> CriticalPoint:
    """The critical point of ``CubicExample(N)`` with ``a_n = -2/(3 n**2)`` exactly for ``n`` in ``I``."""
    I = sorted(set(int(n) for n in I))
    if any(n < 1 or n > N for n in I):
        raise DomainError(f"critical set {I} must lie in 1..{N}")
    F = CubicExample(N)
    x = ScVector.from_coeffs(F.weight, N, {n: -2.0 / (3.0 * n * n) for n in I})
    # gtol: exact for n <= 62, rounding-level beyond
    return critical_point(F, x, gtol=1e-12)


def cubic_critical_value(I: Iterable[int]) -> float:
    """Closed form ``sum_{n in I} 4/(27 n**3)`` of the action at a cubic critical point."""
    return math.fsum(4.0 / (27.0 * n ** 3) for n in set(I))


def morse_check(F: ActionFunctional | None, c: CriticalPoint, floor: float) -> bool:
    """True iff every Hessian eigenvalue at ``c`` has modulus at least ``floor``."""
    if F is not None:
        F._check(c.point)
    eig = c.hessian_diagonal
    return bool(eig.size) and float(np.min(np.abs(eig))) >= floor


def cubic_critical_sets(max_index: int) -> list[tuple[int, ...]]:
    """Every subset of ``1..max_index``, smallest first."""
    base = range(1, max_index + 1)
    return [s for r in range(max_index + 1) for s in itertools.combinations(base, r)]
