"""Negative gradient flow ``x' = -grad A(x)`` and its closed-form cubic oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BlowUpError, CapabilityError, DivergenceError, DomainError, IntegrationError
from .functionals import ActionFunctional, CubicExample, cubic_critical_point
from .scspace import ScVector, WeightKind, batch_level_norms

__all__ = [
    "SolverConfig",
    "Trajectory",
    "integrate_flow",
    "BernoulliSolution",
    "bernoulli_solution",
    "bernoulli_oracle",
    "flow_derivatives",
    "derivatives_along_flow",
    "heteroclinic_start",
]


@dataclass(frozen=True)
class SolverConfig:
    """Integrator settings.

    ``method`` is ``"auto"`` (integrating factor for diagonal functionals,
    RK45 otherwise), ``"integrating-factor"`` or ``"rk45"``.
    """

    method: str = "auto"
    dt_out: float = 0.01
    rtol: float = 1e-10
    atol: float = 1e-15
    max_norm: float = 1e8
    max_steps: int = 2_000_000

    def __post_init__(self):
        if self.method not in ("auto", "integrating-factor", "rk45"):
            raise DomainError(f"unknown integration method {self.method!r}")
        for name in ("dt_out", "rtol", "max_norm"):
            if not getattr(self, name) > 0:
                raise DomainError(f"solver {name} must be positive")
        if self.atol < 0:
            raise DomainError("solver atol must be nonnegative")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A gradient flow line sampled on an increasing time grid.

    ``states[p]`` holds the coefficients of ``x(s[p])``; ``action`` and
    ``energy`` cache ``A`` and ``e`` at the samples.
    """

    functional: ActionFunctional
    s: np.ndarray
    states: np.ndarray
    action: np.ndarray
    energy: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.s.size

    def state(self, p: int) -> ScVector:
        return self.functional.vector(self.states[p])

    def samples(self) -> Iterator[tuple[float, ScVector]]:
        for p in range(len(self)):
            yield float(self.s[p]), self.state(p)

    def level_norms(self, levels: Iterable[int], center: ScVector | None = None) -> np.ndarray:
        """``||x(s) - center||_j`` for every sample (rows) and level (columns)."""
        vals = self.states if center is None else self.states - center.values
        F = self.functional
        return batch_level_norms(vals, F.weight, F.N, levels)

    def at_or_after(self, s0: float) -> np.ndarray:
        return self.s >= s0 - 1e-12 * max(1.0, abs(s0))


def _output_grid(s_a: float, s_b: float, dt: float) -> np.ndarray:
    n = int(math.floor((s_b - s_a) / dt + 1e-9))
    grid = s_a + dt * np.arange(n + 1)
    if s_b - grid[-1] > 1e-9 * dt:
        grid = np.append(grid, s_b)
    else:
        grid[-1] = s_b
    return grid


def _lawson_midpoint(rates: np.ndarray, nonlinear, a: np.ndarray, h: float) -> np.ndarray:
    # exact linear propagator, explicit midpoint on the nonlinear remainder
    half = np.exp(-0.5 * h * rates)
    a_mid = half * (a - 0.5 * h * nonlinear(a))
    return half * (half * a - h * nonlinear(a_mid))


def _integrate_diagonal(F, a0: np.ndarray, grid: np.ndarray, cfg: SolverConfig):
    rates = F.linear_rates
    nonlinear = F.nonlinear
    out = np.empty((grid.size, a0.size))
    out[0] = a0
    a = a0.copy()
    s = float(grid[0])
    sign = 1.0 if grid[-1] >= grid[0] else -1.0
    spread = float(np.max(np.abs(rates))) if rates.size else 0.0
    h = sign * min(cfg.dt_out, 0.1 / spread if spread else cfg.dt_out)
    accepted = rejected = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for p in range(1, grid.size):
            target = float(grid[p])
            while s != target:
                if accepted + rejected >= cfg.max_steps:
                    raise IntegrationError(f"step budget {cfg.max_steps} exhausted at s={s:.6g}", time=s)
                landing = abs(target - s) <= abs(h) * 1.000001
                hh = target - s if landing else h
                full = _lawson_midpoint(rates, nonlinear, a, hh)
                halfway = _lawson_midpoint(rates, nonlinear, a, 0.5 * hh)
                fine = _lawson_midpoint(rates, nonlinear, halfway, 0.5 * hh)
                scale = cfg.atol + cfg.rtol * np.maximum(np.abs(a), np.abs(fine))
                with np.errstate(divide="ignore"):
                    err = float(np.max(np.abs(fine - full) / scale)) / 3.0 if a.size else 0.0
                if not math.isfinite(err):
                    err = math.inf
                h_floor = 16.0 * np.finfo(float).eps * max(1.0, abs(s))
                if err <= 1.0:
                    # step doubling: err bounds the midpoint error, the kept value is Richardson-extrapolated
                    a = fine + (fine - full) / 3.0
                    s = target if landing else s + hh
                    accepted += 1
                    norm0 = float(np.sqrt(np.dot(a, a)))
                    if not math.isfinite(norm0) or norm0 > cfg.max_norm:
                        raise DivergenceError(
                            f"level-0 norm {norm0:.3e} exceeded ceiling {cfg.max_norm:.3e} at s={s:.9g}", time=s
                        )
                else:
                    rejected += 1
                    if abs(hh) <= h_floor:
                        raise IntegrationError(f"step size underflow at s={s:.9g}", time=s)
                factor = 4.0 if err == 0.0 else min(4.0, max(0.2, 0.9 * err ** (-1.0 / 3.0)))
                if not (landing and err <= 1.0 and factor > 1.0):
                    h = hh * factor
                if abs(h) < h_floor:
                    h = sign * h_floor
            out[p] = a
    return out, {"method": "integrating-factor", "accepted": accepted, "rejected": rejected}


def _integrate_rk45(F, a0: np.ndarray, grid: np.ndarray, cfg: SolverConfig):
    x0 = F.vector(a0)
    bound = F.spectral_bound(x0) if F.provides_hessian else 0.0
    max_step = 1.0 / (2.0 * bound) if bound > 0 else np.inf

    def rhs(t, y):
        return -F._grad(y)

    def ceiling(t, y):
        return cfg.max_norm - float(np.sqrt(np.dot(y, y)))

    ceiling.terminal = True
    sol = solve_ivp(
        rhs,
        (float(grid[0]), float(grid[-1])),
        a0,
        method="RK45",
        t_eval=grid,
        rtol=cfg.rtol,
        atol=max(cfg.atol, 1e-300),
        max_step=max_step,
        events=ceiling,
    )
    if sol.status == 1:
        t = float(sol.t_events[0][0])
        raise DivergenceError(f"level-0 norm exceeded ceiling {cfg.max_norm:.3e} at s={t:.9g}", time=t)
    if sol.status != 0:
        t = float(sol.t[-1]) if sol.t.size else float(grid[0])
        raise IntegrationError(f"RK45 failed: {sol.message}", time=t)
    return sol.y.T.copy(), {"method": "rk45", "nfev": int(sol.nfev), "max_step": max_step}


def integrate_flow(
    F: ActionFunctional,
    x0: ScVector,
    span: tuple[float, float],
    cfg: SolverConfig | None = None,
    direction: str = "forward",
) -> Trajectory:
    """Integrate the negative gradient flow over ``span = (s_a, s_b)``.

    ``direction="forward"`` treats ``x0`` as the state at ``s_a``;
    ``"backward"`` treats it as the state at ``s_b`` and integrates down to
    ``s_a``.  Samples are always returned in increasing time.
    """
    cfg = cfg or SolverConfig()
    F._check(x0)
    s_a, s_b = float(span[0]), float(span[1])
    if not s_a < s_b:
        raise DomainError(f"span must satisfy s_a < s_b, got {span}")
    if direction not in ("forward", "backward"):
        raise DomainError(f"direction must be 'forward' or 'backward', got {direction!r}")
    grid = _output_grid(s_a, s_b, cfg.dt_out)
    if direction == "backward":
        grid = grid[::-1].copy()

    method = cfg.method
    if method == "auto":
        method = "integrating-factor" if F.is_diagonal else "rk45"
    if method == "integrating-factor":
        if not F.is_diagonal:
            raise CapabilityError(f"{F.name} is not diagonal; the integrating-factor scheme does not apply")
        states, meta = _integrate_diagonal(F, x0.values.copy(), grid, cfg)
    else:
        states, meta = _integrate_rk45(F, x0.values.copy(), grid, cfg)

    if direction == "backward":
        grid = grid[::-1].copy()
        states = states[::-1].copy()
    action = np.array([F._value(row) for row in states])
    grads = np.array([F._grad(row) for row in states])
    energy = np.array([math.fsum(g * g) for g in grads])
    meta.update(rtol=cfg.rtol, atol=cfg.atol, dt_out=cfg.dt_out, direction=direction)
    for arr in (grid, states, action, energy):
        arr.setflags(write=False)
    return Trajectory(F, grid, states, action, energy, meta)


@dataclass(frozen=True)
class BernoulliSolution:
    """Closed-form flow of ``CubicExample``: ``x_n(s) = 1/(c_n e^{2ns} - 1.5 n**2)``.

    ``modes`` lists ``(n, x0_n, c_n)`` for the nonzero initial modes; all
    other modes stay identically zero.
    """

    N: int
    modes: tuple[tuple[int, float, float], ...]

    def _poles(self) -> list[tuple[int, float]]:
        poles = []
        for n, x0, _ in self.modes:
            k = 1.5 * n * n
            q = 1.0 / (k * x0)
            if q > -1.0:
                poles.append((n, -math.log1p(q) / (2.0 * n)))
        return poles

    def blowup_time(self, s: float) -> float | None:
        """The pole nearest to 0 between 0 and ``s``, if one exists."""
        lo, hi = min(0.0, s), max(0.0, s)
        hits = [t for _, t in self._poles() if lo <= t <= hi]
        if not hits:
            return None
        return min(hits, key=abs)

    def at(self, s: float) -> ScVector:
        t = self.blowup_time(s)
        if t is not None:
            raise BlowUpError(f"Bernoulli solution blows up at s={t:.9g}", time=t)
        F = CubicExample(self.N)
        vals = np.zeros(self.N)
        for n, x0, _ in self.modes:
            k = 1.5 * n * n
            if s >= 0:
                decay = math.exp(-2.0 * n * s)
                vals[n - 1] = x0 * decay / (1.0 - k * x0 * math.expm1(-2.0 * n * s))
            else:
                grow = math.exp(2.0 * n * s)
                vals[n - 1] = x0 / (grow + k * x0 * math.expm1(2.0 * n * s))
        return F.vector(vals)

    def states(self, times: Iterable[float]) -> np.ndarray:
        return np.array([self.at(float(t)).values for t in times])


def bernoulli_solution(x0: ScVector) -> BernoulliSolution:
    if x0.weight.kind is not WeightKind.POLY_SQUARE:
        raise DomainError("the Bernoulli oracle applies to CubicExample initial data")
    modes = []
    for n, v in x0.coeffs():
        modes.append((n, v, 1.0 / v + 1.5 * n * n))
    return BernoulliSolution(x0.N, tuple(modes))


def bernoulli_oracle(x0: ScVector, s: float) -> ScVector:
    return bernoulli_solution(x0).at(s)


def flow_derivatives(F: ActionFunctional, x: ScVector, m: int) -> list[ScVector]:
    """``[x', ..., x^(m)]`` at the point ``x`` of a flow line, from the chain-rule recursion."""
    return [x.like(d) for d in _derivative_arrays(F, x.values, m)]


def _derivative_arrays(F, a: np.ndarray, m: int) -> list[np.ndarray]:
    if not 1 <= m <= 3:
        raise DomainError(f"derivative order must be in 1..3, got {m}")
    if m >= 2 and not F.provides_hessian:
        raise CapabilityError(f"{F.name} provides no Hessian; order {m} needs one")
    d1 = -F._grad(a)
    out = [d1]
    if m >= 2:
        d2 = -F._hess(a, d1)
        out.append(d2)
    if m >= 3:
        out.append(-F._third(a, d1, d1) - F._hess(a, d2))
    return out


def derivatives_along_flow(F: ActionFunctional, traj: Trajectory, m: int) -> list[np.ndarray]:
    """Derivatives ``x^(1..m)`` at every sample; entry ``r`` has shape ``(samples, dim)``."""
    F._check(traj.state(0))
    if not 1 <= m <= 3:
        raise DomainError(f"derivative order must be in 1..3, got {m}")
    if F.is_diagonal:
        # mode-wise recursion, vectorised over samples
        a = traj.states
        d1 = -F.gradient_terms(a)
        out = [d1]
        if m >= 2:
            hd = F.hessian_terms(a)
            d2 = -hd * d1
            out.append(d2)
        if m >= 3:
            out.append(-F.third_terms(a) * d1 * d1 - hd * d2)
        return out
    rows = [_derivative_arrays(F, row, m) for row in traj.states]
    return [np.array([r[q] for r in rows]) for q in range(m)]


def heteroclinic_start(I: Iterable[int], N: int, delta: float = 1e-4) -> ScVector:
    """Launch point ``x_I + delta * sum_{n in I} e_n`` next to the cubic critical point ``x_I``."""
    crit = cubic_critical_point(I, N)
    bump = np.zeros(N)
    for n in set(I):
        bump[n - 1] = delta
    return crit.point.like(crit.point.values + bump)
