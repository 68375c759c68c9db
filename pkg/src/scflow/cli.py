"""Command-line experiment runner.

    scflow interp|flow|decay|report --config PATH [--seed U64] [--out DIR]

Exit status: 0 when every check passes, 1 when a mathematical check is
violated, 2 on configuration or runtime errors.  The output directory is
taken from ``--out``, then ``$SCFLOW_OUT``, then ``[run] out`` in the config.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis as an
from .acceptance import CRITERIA, run_criteria
from .config import ConfigError, ScenarioConfig, load_config
from .errors import ScflowError
from .flow import bernoulli_solution, derivatives_along_flow, heteroclinic_start, integrate_flow
from .functionals import (
    CriticalPoint,
    CubicExample,
    critical_point,
    cubic_critical_point,
    make_functional,
)
from .scspace import ScVector, WeightFamily, basis_suite, batch_level_norms, random_suite

EXIT_OK, EXIT_VIOLATION, EXIT_ERROR = 0, 1, 2


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def build_scenario(cfg: ScenarioConfig):
    """Functional, initial state and target critical point described by ``cfg``."""
    try:
        F = make_functional(cfg.functional, cfg.truncation, **cfg.functional_params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if cfg.weight is not None and WeightFamily.parse(cfg.weight) != F.weight:
        raise ConfigError(f"functional {cfg.functional!r} lives on {F.weight.name}, config asks for {cfg.weight}")
    if cfg.initial == "critical":
        if not isinstance(F, CubicExample):
            raise ConfigError("critical-point launches are only defined for the cubic functional")
        x0 = heteroclinic_start(cfg.critical_set, cfg.truncation, cfg.delta)
    else:
        x0 = ScVector.from_coeffs(F.weight, cfg.truncation, cfg.coeffs)
    if isinstance(F, CubicExample):
        target = cubic_critical_point(cfg.target_set, cfg.truncation)
    else:
        if cfg.target_set:
            raise ConfigError("target_set is only meaningful for the cubic functional")
        target = critical_point(F, F.zero())
    return F, x0, target


def _out_dir(args, cfg: ScenarioConfig) -> Path:
    out = Path(args.out or os.environ.get("SCFLOW_OUT") or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_interp(cfg: ScenarioConfig, out: Path) -> int:
    ic = cfg.interp
    total_viol = 0
    path = out / "interp.csv"
    with open(path, "w", newline="") as fh:
        fh.write("weight_family,seed,i,j,k,lhs,rhs,gap\n")
        for name in ic.families:
            w = WeightFamily.parse(name)
            if ic.basis_debug:
                suite = basis_suite(w, ic.truncation, ic.max_level, ic.corrupt_level_shift)
            else:
                suite = random_suite(w, ic.truncation, ic.n_vectors, cfg.seed, ic.max_level, ic.corrupt_level_shift)
            viol = suite.violations(1e-12)
            total_viol += viol
            prefixes = [f"{name},{lab}," for lab in suite.labels.tolist()]
            trip = [f"{i},{j},{k}," for i, j, k in suite.triples]
            lhs, rhs, gap = suite.lhs.tolist(), suite.rhs.tolist(), suite.gap.tolist()
            for v, pre in enumerate(prefixes):
                lv, rv, gv = lhs[v], rhs[v], gap[v]
                fh.write(
                    "".join(f"{pre}{t}{lv[q]!r},{rv[q]!r},{gv[q]!r}\n" for q, t in enumerate(trip))
                )
            worst = float(suite.relative_gap().min())
            print(f"{name}: {suite.lhs.size} checks, {viol} violations, min gap/rhs = {worst!r}")
    print(f"wrote {path}")
    return EXIT_OK if total_viol == 0 else EXIT_VIOLATION


def _oracle_start(cfg: ScenarioConfig) -> float:
    return cfg.span[0] if cfg.direction == "forward" else cfg.span[1]


def cmd_flow(cfg: ScenarioConfig, out: Path) -> int:
    F, x0, _ = build_scenario(cfg)
    traj = integrate_flow(F, x0, cfg.span, cfg.solver, cfg.direction)
    J = cfg.analysis.max_level
    norms = traj.level_norms(range(J + 1))
    ders = derivatives_along_flow(F, traj, 3)
    dnorm = np.column_stack([np.sqrt(np.sum(d * d, axis=1)) for d in ders])
    header = ["s", "action", "energy"] + [f"norm_{j}" for j in range(J + 1)] + [f"deriv_{m}_norm0" for m in (1, 2, 3)]
    cols = [traj.s, traj.action, traj.energy, *norms.T, *dnorm.T]
    ok = True
    if isinstance(F, CubicExample):
        sol = bernoulli_solution(x0)
        exact = sol.states(traj.s - _oracle_start(cfg))
        err = np.sqrt(np.sum((traj.states - exact) ** 2, axis=1))
        scale = 1.0 + np.sqrt(np.sum(exact * exact, axis=1))
        oracle_ok = bool(np.all(err <= 1e-6 * scale))
        header.append("oracle_err")
        cols.append(err)
        ok &= oracle_ok
        print(f"oracle: max level-0 deviation {float(np.max(err))!r} ({'ok' if oracle_ok else 'VIOLATED'})")
    resid = an.energy_identity_residual(traj) / (1.0 + abs(float(traj.action[0])))
    mono = an.strict_action_decrease(traj)
    print(f"energy identity: relative residual {resid!r} ({'ok' if resid <= 1e-6 else 'VIOLATED'})")
    print(f"strict action decrease: {'ok' if mono.passed else f'{len(mono.violations)} violations'}")
    ok &= resid <= 1e-6 and mono.passed
    path = out / "flow.csv"
    write_csv(path, header, zip(*cols))
    print(f"wrote {path} ({len(traj)} samples, {traj.meta['method']})")
    return EXIT_OK if ok else EXIT_VIOLATION


def _active_modes(F, x0: ScVector, target: CriticalPoint) -> np.ndarray:
    return (x0.values - target.point.values) != 0


def decay_checks(cfg: ScenarioConfig, F, x0: ScVector, target: CriticalPoint, traj):
    """Run every decay-related verifier; returns ``(checks, fits, kappa_estimate)``.

    ``checks`` rows are ``(name, value, threshold, passed)``.
    """
    ac = cfg.analysis
    kest = an.estimate_kappa(F, target, ac.epsilon, ac.level, ac.n_samples, seed=cfg.seed)
    k = kest.kappa
    ts = an.tail_start(traj, target, ac.epsilon, ac.level)
    ders = derivatives_along_flow(F, traj, 3)
    fits = [
        an.fit_decay(traj, target, j, m, ac.fit_window, derivatives=ders)
        for j in range(ac.max_level + 1)
        for m in range(4)
    ]
    rate0 = fits[0].rate
    slope = -an.fit_action_decay(traj, target, ac.fit_window)[0]
    checks = [
        ("kappa_est", k, 0.0, k > 0),
        ("kappa_half", k / 2.0, 0.0, True),
        ("kappa_third", k / 3.0, 0.0, True),
        ("rate_above_kappa_third", rate0, k / 3.0, rate0 > k / 3.0),
        ("rate_above_kappa_half", rate0, 0.95 * k / 2.0, rate0 > 0.95 * k / 2.0),
        ("action_slope", slope, -0.95 * k, slope <= -0.95 * k),
    ]
    if F.is_diagonal:
        active = _active_modes(F, x0, target)
        lam = float(np.min(target.hessian_diagonal[active])) if np.any(active) else math.nan
        dev = abs(rate0 - lam) / lam if lam > 0 else math.inf
        checks.append(("rate_vs_slowest_eigenvalue", dev, 0.05, dev <= 0.05))
        if np.count_nonzero(active) == 1:
            sel = [f.rate for f in fits if f.order <= 2]
            spread = (max(sel) - min(sel)) / rate0
            checks.append(("single_mode_rate_spread", spread, 0.01, spread <= 0.01))
    ae = an.verify_action_energy(F, traj, target, k, ts)
    da = an.verify_distance_action(traj, target, k, ts)
    checks.append(("action_energy_violations", len(ae.violations), 0, ae.passed))
    checks.append(("distance_action_violations", len(da.violations), 0, da.passed))
    for T in ac.lemma_times:
        C, eps = an.measure_lemma_constants(traj, T, k, target.action_value)
        held = an.verify_pointwise_lemma(traj, T, k, C, eps, target.action_value)
        checks.append((f"pointwise_lemma_T{T:g}", int(held), 1, held))
    j, L = ac.bridge
    br = an.interpolation_decay_bridge(traj, target, j, L, ac.fit_window)
    checks.append((f"interpolation_bridge_j{j}_L{L}", br.detail["bound_rate"], br.detail["required_rate"], br.passed))
    return checks, fits, kest


def cmd_decay(cfg: ScenarioConfig, out: Path) -> int:
    F, x0, target = build_scenario(cfg)
    traj = integrate_flow(F, x0, cfg.span, cfg.solver, cfg.direction)
    checks, fits, _ = decay_checks(cfg, F, x0, target, traj)
    write_csv(
        out / "decay_fits.csv",
        ["level", "order", "rate", "prefactor", "s0", "s1", "residual", "n_samples"],
        [(f.level, f.order, f.rate, f.prefactor, f.window[0], f.window[1], f.residual, f.n_samples) for f in fits],
    )
    write_csv(out / "decay_summary.csv", ["check", "value", "threshold", "passed"], checks)
    for name, value, thr, passed in checks:
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {_fmt(value)} (threshold {_fmt(thr)})")
    print(f"wrote {out / 'decay_fits.csv'} and {out / 'decay_summary.csv'}")
    return EXIT_OK if all(c[3] for c in checks) else EXIT_VIOLATION


def cmd_report(cfg: ScenarioConfig, out: Path, only=None) -> int:
    ids = only or cfg.criteria
    results = run_criteria(ids, seed=cfg.seed, n_vectors=cfg.interp.n_vectors, n_points=cfg.fd_points)
    write_csv(
        out / "report.csv",
        ["id", "name", "value", "threshold", "passed", "runtime_s"],
        [(r.id, r.name, float(r.value), float(r.threshold), r.passed, round(r.runtime, 3)) for r in results],
    )
    for r in results:
        print(r.line())
    print(f"wrote {out / 'report.csv'}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VIOLATION


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _ids(text: str) -> list[int]:
    try:
        ids = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("criteria must be comma-separated integers") from None
    bad = [i for i in ids if i not in CRITERIA]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown criteria {bad}")
    return ids


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scflow", description="sc-gradient flow experiments")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("interp", "randomized interpolation-inequality suite"),
        ("flow", "integrate one flow line and check it against oracles"),
        ("decay", "kappa estimate, decay fits and estimate-chain verifiers"),
        ("report", "run the acceptance suite"),
    ):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="path to an INI-style config file")
        sp.add_argument("--seed", type=_u64, default=None, help="override [run] seed")
        sp.add_argument("--out", default=None, help="output directory")
        if name == "report":
            sp.add_argument("--only", type=_ids, default=None, help="comma-separated criterion ids")
    return p


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        sub_usage = parser.format_usage()
        print(sub_usage.rstrip(), file=sys.stderr)
        print(f"scflow: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    try:
        out = _out_dir(args, cfg)
        if args.command == "interp":
            return cmd_interp(cfg, out)
        if args.command == "flow":
            return cmd_flow(cfg, out)
        if args.command == "decay":
            return cmd_decay(cfg, out)
        return cmd_report(cfg, out, args.only)
    except ScflowError as exc:
        print(f"scflow: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
