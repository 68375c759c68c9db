"""Bundled flow scenarios used by the CLI, scripts and acceptance suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flow import SolverConfig, Trajectory, heteroclinic_start, integrate_flow
from .functionals import (
    ActionFunctional,
    CriticalPoint,
    CubicExample,
    QuadraticArea,
    critical_point,
    cubic_critical_point,
)
from .scspace import ScVector

__all__ = ["Scenario", "bundled_scenarios", "SCENARIO_NAMES"]


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    functional: ActionFunctional
    x0: ScVector
    span: tuple[float, float]
    target: CriticalPoint
    has_oracle: bool
    single_mode: bool = False

    def run(self, cfg: SolverConfig | None = None) -> Trajectory:
        return integrate_flow(self.functional, self.x0, self.span, cfg)


SCENARIO_NAMES = (
    "zero",
    "quadratic_single",
    "cubic_single",
    "cubic_multi",
    "cubic_basin8",
    "cubic_heteroclinic",
)


def bundled_scenarios(N: int = 32, delta: float = 1e-4) -> dict[str, Scenario]:
    cubic = CubicExample(N)
    quad = QuadraticArea(N, positive_only=True)
    zero_c = cubic_critical_point([], N)
    zero_q = critical_point(quad, quad.zero())

    def cubic_x0(coeffs):
        return ScVector.from_coeffs(cubic.weight, N, coeffs)

    basin = {n: -1.0 / (3.0 * n * n) for n in range(1, min(8, N) + 1)}
    out = [
        Scenario("zero", cubic, cubic.zero(), (0.0, 5.0), zero_c, True),
        Scenario(
            "quadratic_single",
            quad,
            ScVector.from_coeffs(quad.weight, N, {1: 1.0}),
            (0.0, 15.0),
            zero_q,
            False,
            single_mode=True,
        ),
        Scenario("cubic_single", cubic, cubic_x0({1: -1.0 / 3.0}), (0.0, 15.0), zero_c, True, single_mode=True),
        Scenario("cubic_multi", cubic, cubic_x0({1: -1.0 / 3.0, 2: -1.0 / 20.0}), (0.0, 15.0), zero_c, True),
        Scenario("cubic_basin8", cubic, cubic_x0(basin), (0.0, 10.0), zero_c, True),
        Scenario(
            "cubic_heteroclinic",
            cubic,
            heteroclinic_start([1], N, delta),
            (0.0, 20.0),
            zero_c,
            True,
            single_mode=True,
        ),
    ]
    return {sc.name: sc for sc in out}


def oracle_deviation(sc: Scenario, traj: Trajectory) -> np.ndarray:
    """Per-sample level-0 distance between the integrated and closed-form states."""
    from .flow import bernoulli_solution

    exact = bernoulli_solution(sc.x0).states(traj.s)
    return np.sqrt(np.sum((traj.states - exact) ** 2, axis=1))
