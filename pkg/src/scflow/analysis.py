"""Numerical checks of the action-energy inequality and exponential decay.

Every check works on an already integrated ``Trajectory`` and returns a
value object.  Constants are measured from samples, never derived.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .errors import DomainError, EstimationError, FitError, PreconditionError
from .flow import Trajectory, derivatives_along_flow
from .functionals import ActionFunctional, CriticalPoint, morse_check
from .scspace import ScVector, batch_level_norms

__all__ = [
    "KappaEstimate",
    "DecayFit",
    "CheckReport",
    "estimate_kappa",
    "tail_start",
    "verify_action_energy",
    "verify_distance_action",
    "verify_pointwise_lemma",
    "measure_lemma_constants",
    "fit_log_linear",
    "fit_decay",
    "fit_action_decay",
    "interpolation_decay_bridge",
    "energy_identity_residual",
    "strict_action_decrease",
    "DEFAULT_WINDOW",
]

DEFAULT_WINDOW = (1e-10, 1e-2)
MIN_FIT_SAMPLES = 10
INDETERMINATE_ACTION_GAP = 1e-14


@dataclass(frozen=True, eq=False)
class KappaEstimate:
    crit: CriticalPoint
    epsilon: float
    level: int
    kappa: float
    raw_infimum: float
    n_samples: int
    witness: ScVector
    safety: float = 0.99


@dataclass(frozen=True)
class DecayFit:
    level: int
    order: int
    rate: float
    prefactor: float
    window: tuple[float, float]
    residual: float
    n_samples: int


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    n_checked: int
    violations: tuple = ()
    worst_ratio: float = 0.0
    detail: dict = field(default_factory=dict)


def _gap(F: ActionFunctional, a: np.ndarray, a_plus: float) -> float:
    return F._value(a) - a_plus


def estimate_kappa(
    F: ActionFunctional,
    crit: CriticalPoint,
    epsilon: float = 1e-3,
    level: int = 10,
    n_samples: int = 256,
    seed: int = 0,
    safety: float = 0.99,
    require_morse: bool = True,
) -> KappaEstimate:
    """Sampled infimum of ``e(x) / |A(x) - a+|`` over the level-``level`` ball of radius ``epsilon``.

    Coordinate probes ``+-delta e_n / ||e_n||_L`` with ``delta`` in
    ``{epsilon/2, epsilon/10}`` are always included; ``n_samples`` random
    points are added.  The returned ``kappa`` is the infimum times ``safety``.
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    if require_morse and not morse_check(F, crit, floor=np.finfo(float).tiny):
        raise EstimationError("critical point is degenerate; the action-energy inequality needs a Morse point")
    base = crit.point.values
    a_plus = crit.action_value
    dim = base.size
    weights = F.weight.weights(F.N)
    unit_scale = weights ** (-level / 2.0)   # 1 / ||e_n||_L

    probes = []
    for p in range(dim):
        for delta in (epsilon / 2.0, epsilon / 10.0):
            for sign in (1.0, -1.0):
                d = np.zeros(dim)
                d[p] = sign * delta * unit_scale[p]
                probes.append(d)
    rng = np.random.default_rng(seed)
    for _ in range(n_samples):
        d = rng.standard_normal(dim) * unit_scale
        norm = float(batch_level_norms(d, F.weight, F.N, [level])[0])
        probes.append(d * (epsilon * rng.uniform(0.01, 0.99) / norm))

    best = math.inf
    witness = None
    accepted = 0
    for d in probes:
        a = base + d
        gap = abs(_gap(F, a, a_plus))
        if gap < INDETERMINATE_ACTION_GAP:
            continue
        g = F._grad(a)
        ratio = math.fsum(g * g) / gap
        accepted += 1
        if ratio < best:
            best, witness = ratio, a
    if witness is None:
        raise EstimationError("no sample had an action gap above the indeterminacy threshold")
    if not best > 0:
        raise EstimationError(f"sampled infimum is {best}; no positive kappa")
    return KappaEstimate(crit, epsilon, level, safety * best, best, accepted, F.vector(witness), safety)


def tail_start(traj: Trajectory, crit: CriticalPoint, epsilon: float, level: int = 10) -> float:
    """Earliest sample time after which ``||x(s) - x+||_level < epsilon`` holds for all later samples."""
    dist = traj.level_norms([level], center=crit.point)[:, 0]
    inside = dist < epsilon
    if not inside[-1]:
        raise PreconditionError(
            f"trajectory ends at level-{level} distance {dist[-1]:.3e} >= epsilon={epsilon:g}"
        )
    outside = np.flatnonzero(~inside)
    p = 0 if outside.size == 0 else int(outside[-1]) + 1
    return float(traj.s[p])


def _report(name, lhs, rhs, s, rtol, atol, detail=None):
    bad = lhs > rhs * (1.0 + rtol) + atol
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(rhs > 0, lhs / rhs, np.where(lhs > atol, np.inf, 0.0))
    viol = tuple((float(s[p]), float(lhs[p]), float(rhs[p])) for p in np.flatnonzero(bad))
    worst = float(np.max(ratios)) if ratios.size else 0.0
    return CheckReport(name, not viol, int(lhs.size), viol, worst, detail or {})


def verify_action_energy(
    F: ActionFunctional,
    traj: Trajectory,
    crit: CriticalPoint,
    kappa: float,
    tail_start: float,
    rtol: float = 1e-9,
) -> CheckReport:
    """Check ``|A(x(s)) - a+| <= e(x(s)) / kappa`` on every sample with ``s >= tail_start``."""
    if traj.functional is not F:
        F._check(traj.state(0))
    mask = traj.at_or_after(tail_start)
    lhs = np.abs(traj.action[mask] - crit.action_value)
    rhs = traj.energy[mask] / kappa
    atol = 64.0 * np.finfo(float).eps * abs(crit.action_value)
    return _report("action_energy", lhs, rhs, traj.s[mask], rtol, atol, {"kappa": kappa})


def verify_distance_action(
    traj: Trajectory,
    crit: CriticalPoint,
    kappa: float,
    tail_start: float,
    rtol: float = 1e-9,
) -> CheckReport:
    """Check ``||x+ - x(s)||_0 <= (2/sqrt(kappa)) sqrt(A(x(s)) - a+)`` on the tail.

    ``worst_ratio`` is the largest ``lhs/rhs``; it equals 1 in the equality case.
    """
    mask = traj.at_or_after(tail_start)
    lhs = traj.level_norms([0], center=crit.point)[mask, 0]
    atol = 64.0 * np.finfo(float).eps * abs(crit.action_value)
    gap = np.maximum(traj.action[mask] - crit.action_value, 0.0)
    rhs = 2.0 / math.sqrt(kappa) * np.sqrt(gap)
    return _report("distance_action", lhs, rhs, traj.s[mask], rtol, math.sqrt(atol), {"kappa": kappa})


def _tail_integral(traj: Trajectory, p0: int, a_plus: float | None) -> float:
    s = traj.s[p0:]
    e = traj.energy[p0:]
    total = float(simpson(e, x=s)) if s.size >= 2 else 0.0
    if a_plus is not None:
        # the flow dissipates exactly A(x(end)) - a+ after the last sample
        total += max(float(traj.action[-1]) - a_plus, 0.0)
    return total


def _sample_index(traj: Trajectory, T: float) -> int:
    p = int(np.argmin(np.abs(traj.s - T)))
    if abs(traj.s[p] - T) > 1e-9 * max(1.0, abs(T)):
        raise PreconditionError(f"T={T} is not a sample time of the trajectory")
    return p


def measure_lemma_constants(
    traj: Trajectory, T: float, kappa: float, a_plus: float | None = None, margin: float = 1e-6
) -> tuple[float, float]:
    """Smallest admissible ``(C, eps)`` at ``T`` (inflated by ``margin``)."""
    p = _sample_index(traj, T)
    integral = _tail_integral(traj, p, a_plus)
    d2 = derivatives_along_flow(traj.functional, traj, 2)[1][p:]
    sup2 = float(np.max(np.sqrt(np.sum(d2 * d2, axis=1))))
    tiny = np.finfo(float).tiny
    C = max(integral * math.exp(kappa * T) * (1.0 + margin), tiny)
    eps = max(sup2 * (1.0 + margin), tiny)
    return C, eps


def verify_pointwise_lemma(
    traj: Trajectory,
    T: float,
    kappa: float,
    C: float,
    eps_second: float,
    a_plus: float | None = None,
    tol: float = 1e-9,
) -> bool:
    """Turn an exponential tail bound on ``int ||x'||^2`` into a pointwise bound on ``x'(T)``.

    Preconditions (tail quadrature and the ``||x''|| < eps`` bound) are
    certified from the samples; failure raises ``PreconditionError``.
    Returns whether ``||x'(T)||_0**3 <= 8 eps C exp(-kappa T)``.
    """
    p = _sample_index(traj, T)
    bound = C * math.exp(-kappa * T)
    integral = _tail_integral(traj, p, a_plus)
    if integral > bound * (1.0 + tol):
        raise PreconditionError(f"tail integral {integral:.6e} exceeds C exp(-kappa T) = {bound:.6e}")
    d2 = derivatives_along_flow(traj.functional, traj, 2)[1][p:]
    sup2 = float(np.max(np.sqrt(np.sum(d2 * d2, axis=1))))
    if not sup2 < eps_second:
        raise PreconditionError(f"sup ||x''||_0 = {sup2:.6e} is not below eps = {eps_second:.6e}")
    mu = math.sqrt(float(traj.energy[p]))
    return mu ** 3 <= 8.0 * eps_second * bound * (1.0 + tol)


def fit_log_linear(
    s: np.ndarray, values: np.ndarray, window: tuple[float, float] = DEFAULT_WINDOW
) -> tuple[float, float, float, tuple[float, float], int]:
    """Least-squares fit ``log v = log C - rate * s`` on the longest run of samples inside ``window``.

    Returns ``(rate, prefactor, rms_log_residual, (s0, s1), n)``.
    """
    lo, hi = window
    inside = (values >= lo) & (values <= hi)
    best_start, best_len, run_start = 0, 0, None
    for p, ok in enumerate(np.append(inside, False)):
        if ok and run_start is None:
            run_start = p
        elif not ok and run_start is not None:
            if p - run_start > best_len:
                best_start, best_len = run_start, p - run_start
            run_start = None
    if best_len < MIN_FIT_SAMPLES:
        raise FitError(f"only {best_len} samples inside window [{lo:g}, {hi:g}]; need {MIN_FIT_SAMPLES}")
    ss = s[best_start : best_start + best_len]
    lv = np.log(values[best_start : best_start + best_len])
    slope, intercept = np.polyfit(ss, lv, 1)
    resid = lv - (slope * ss + intercept)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return -float(slope), float(np.exp(intercept)), rms, (float(ss[0]), float(ss[-1])), best_len


def fit_decay(
    traj: Trajectory,
    target: CriticalPoint,
    level: int = 0,
    order: int = 0,
    window: tuple[float, float] = DEFAULT_WINDOW,
    derivatives: list[np.ndarray] | None = None,
) -> DecayFit:
    """Fit ``||x(s) - x+||_j`` (order 0) or ``||x^(m)(s)||_j`` (order m >= 1) to ``C exp(-rate s)``.

    Derivatives come from the analytic recursion; pass ``derivatives`` to
    reuse a precomputed ``derivatives_along_flow`` result.
    """
    if order == 0:
        norms = traj.level_norms([level], center=target.point)[:, 0]
    else:
        if derivatives is None or len(derivatives) < order:
            derivatives = derivatives_along_flow(traj.functional, traj, order)
        F = traj.functional
        norms = batch_level_norms(derivatives[order - 1], F.weight, F.N, [level])[:, 0]
    rate, pref, rms, win, n = fit_log_linear(traj.s, norms, window)
    return DecayFit(level, order, rate, pref, win, rms, n)


def fit_action_decay(
    traj: Trajectory, target: CriticalPoint, window: tuple[float, float] = DEFAULT_WINDOW
) -> tuple[float, float, float, tuple[float, float], int]:
    """Log-linear fit of ``A(x(s)) - a+``; the window is applied to its square root."""
    gap = traj.action - target.action_value
    lo, hi = window
    return fit_log_linear(traj.s, gap, (lo * lo, hi * hi))


def interpolation_decay_bridge(
    traj: Trajectory,
    target: CriticalPoint,
    j: int,
    L: int,
    window: tuple[float, float] = DEFAULT_WINDOW,
    rtol: float = 1e-12,
) -> CheckReport:
    """Check ``||d||_j <= ||d||_L**(j/L) ||d||_0**((L-j)/L)`` along the tail, ``d = x(s) - x+``,
    and that the bound decays at least at ``(L-j)/L`` times the fitted level-0 rate."""
    if not 0 < j < L:
        raise DomainError(f"need 0 < j < L, got j={j}, L={L}")
    norms = traj.level_norms([0, j, L], center=target.point)
    n0, nj, nL = norms[:, 0], norms[:, 1], norms[:, 2]
    tail = (n0 >= window[0]) & (n0 <= window[1])
    if np.count_nonzero(tail) < MIN_FIT_SAMPLES:
        raise FitError(f"tail has only {np.count_nonzero(tail)} samples in window {window}")
    bound = np.power(nL, j / L) * np.power(n0, (L - j) / L)
    s = traj.s
    rep = _report("interpolation_bridge", nj[tail], bound[tail], s[tail], rtol, 0.0)
    rate0 = fit_log_linear(s, n0, window)[0]
    bound_rate = fit_log_linear(s[tail], bound[tail], (0.0, np.inf))[0]
    required = (L - j) / L * rate0
    passed = rep.passed and bound_rate >= required * (1.0 - 1e-6)
    detail = {"rate0": rate0, "bound_rate": bound_rate, "required_rate": required, "j": j, "L": L}
    return CheckReport(rep.name, passed, rep.n_checked, rep.violations, rep.worst_ratio, detail)


def energy_identity_residual(traj: Trajectory) -> float:
    """``|A(x(s_b)) - A(x(s_a)) + int e ds|`` with Simpson quadrature on the sample grid."""
    if len(traj) < 2:
        return 0.0
    integral = float(simpson(traj.energy, x=traj.s))
    return abs(float(traj.action[-1] - traj.action[0]) + integral)


def strict_action_decrease(traj: Trajectory) -> CheckReport:
    """Action must drop strictly between consecutive samples unless one of them is critical."""
    a, e = traj.action, traj.energy
    live = (e[:-1] > 0) & (e[1:] > 0)
    bad = live & ~(a[1:] < a[:-1])
    viol = tuple((float(traj.s[p + 1]), float(a[p]), float(a[p + 1])) for p in np.flatnonzero(bad))
    return CheckReport("strict_action_decrease", not viol, int(np.count_nonzero(live)), viol)
