"""Scenario configuration files.

Configs are INI-style ``key = value`` text with sections ``[run]``,
``[scenario]``, ``[solver]``, ``[analysis]``, ``[interp]`` and ``[report]``.
Every key is optional; missing keys take the defaults below.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ScflowError
from .flow import SolverConfig
from .functionals import FUNCTIONALS
from .scspace import BUNDLED_FAMILIES, WeightFamily

__all__ = ["ConfigError", "ScenarioConfig", "InterpConfig", "AnalysisConfig", "load_config", "parse_config"]


class ConfigError(ScflowError):
    pass


@dataclass(frozen=True)
class AnalysisConfig:
    epsilon: float = 1e-3
    level: int = 10
    n_samples: int = 256
    fit_window: tuple[float, float] = (1e-10, 1e-2)
    max_level: int = 5
    lemma_times: tuple[float, ...] = (1.0, 2.0, 3.0)
    bridge: tuple[int, int] = (4, 10)


@dataclass(frozen=True)
class InterpConfig:
    families: tuple[str, ...] = BUNDLED_FAMILIES
    n_vectors: int = 10_000
    truncation: int = 64
    max_level: int = 10
    basis_debug: bool = False
    corrupt_level_shift: int = 0


@dataclass(frozen=True)
class ScenarioConfig:
    functional: str = "cubic"
    functional_params: dict = field(default_factory=dict)
    weight: str | None = None
    truncation: int = 32
    initial: str = "coeffs"
    coeffs: dict = field(default_factory=lambda: {1: -1.0 / 3.0})
    critical_set: tuple[int, ...] = ()
    delta: float = 1e-4
    target_set: tuple[int, ...] = ()
    span: tuple[float, float] = (0.0, 15.0)
    direction: str = "forward"
    solver: SolverConfig = field(default_factory=SolverConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    interp: InterpConfig = field(default_factory=InterpConfig)
    criteria: tuple[int, ...] | None = None
    seed: int = 0
    out_dir: str = "scflow_out"
    fd_points: int = 100


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.replace(";", ",").split(",") if t.strip())


def _coeffs(text: str) -> dict[int, float]:
    out = {}
    for item in text.split(","):
        if not item.strip():
            continue
        n, _, v = item.partition(":")
        if not _:
            raise ConfigError(f"coefficient entry {item!r} must look like 'index: value'")
        out[int(n)] = float(v)
    return out


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _positive(name, value):
    if not value > 0:
        raise ConfigError(f"{name} must be positive, got {value}")
    return value


def parse_config(text: str) -> ScenarioConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    known = {"run", "scenario", "solver", "analysis", "interp", "report"}
    extra = set(cp.sections()) - known
    if extra:
        raise ConfigError(f"unknown config sections {sorted(extra)}")
    try:
        return _build(cp)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad config value: {exc}") from None


def _build(cp: configparser.ConfigParser) -> ScenarioConfig:
    def sec(name):
        return cp[name] if cp.has_section(name) else {}

    run, sc, so, an, ip, rp = (sec(n) for n in ("run", "scenario", "solver", "analysis", "interp", "report"))
    d = ScenarioConfig()

    functional = sc.get("functional", d.functional).strip()
    if functional not in FUNCTIONALS:
        raise ConfigError(f"unknown functional {functional!r}; choose from {sorted(FUNCTIONALS)}")
    params = {}
    if "positive_only" in sc:
        params["positive_only"] = _bool(sc["positive_only"])
    if "coupling" in sc:
        params["coupling"] = float(sc["coupling"])

    initial = sc.get("initial", d.initial).strip()
    if initial not in ("coeffs", "critical"):
        raise ConfigError("initial must be 'coeffs' or 'critical'")
    span = _floats(sc["span"]) if "span" in sc else d.span
    if len(span) != 2 or not span[0] < span[1]:
        raise ConfigError(f"span must be two increasing times, got {span}")
    direction = sc.get("direction", d.direction).strip()
    if direction not in ("forward", "backward"):
        raise ConfigError("direction must be 'forward' or 'backward'")

    solver = SolverConfig(
        method=so.get("method", "auto").strip(),
        dt_out=_positive("dt_out", float(so.get("dt_out", 0.01))),
        rtol=_positive("rtol", float(so.get("rtol", SolverConfig.rtol))),
        atol=float(so.get("atol", SolverConfig.atol)),
        max_norm=_positive("max_norm", float(so.get("max_norm", 1e8))),
    )
    ad = AnalysisConfig()
    window = _floats(an["fit_window"]) if "fit_window" in an else ad.fit_window
    if len(window) != 2 or not 0 <= window[0] < window[1]:
        raise ConfigError(f"fit_window must be two increasing nonnegative bounds, got {window}")
    bridge = _ints(an["bridge"]) if "bridge" in an else ad.bridge
    analysis = AnalysisConfig(
        epsilon=_positive("epsilon", float(an.get("epsilon", ad.epsilon))),
        level=int(an.get("level", ad.level)),
        n_samples=int(an.get("n_samples", ad.n_samples)),
        fit_window=window,
        max_level=int(an.get("max_level", ad.max_level)),
        lemma_times=_floats(an["lemma_times"]) if "lemma_times" in an else ad.lemma_times,
        bridge=bridge,
    )

    idf = InterpConfig()
    families = tuple(f.strip() for f in ip["families"].split(",")) if "families" in ip else idf.families
    for f in families:
        WeightFamily.parse(f)
    interp = InterpConfig(
        families=families,
        n_vectors=int(_positive("n_vectors", int(ip.get("n_vectors", idf.n_vectors)))),
        truncation=int(_positive("truncation", int(ip.get("truncation", idf.truncation)))),
        max_level=int(ip.get("max_level", idf.max_level)),
        basis_debug=_bool(ip.get("basis_debug", "false")),
        corrupt_level_shift=int(ip.get("corrupt_level_shift", 0)),
    )
    if interp.max_level < 2:
        raise ConfigError("interp max_level must be at least 2")

    criteria = _ints(rp["criteria"]) if "criteria" in rp else None
    seed = int(run.get("seed", str(d.seed)), 0)
    if not 0 <= seed < 2**64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return ScenarioConfig(
        functional=functional,
        functional_params=params,
        weight=sc.get("weight"),
        truncation=int(_positive("truncation", int(sc.get("truncation", d.truncation)))),
        initial=initial,
        coeffs=_coeffs(sc["coeffs"]) if "coeffs" in sc else d.coeffs,
        critical_set=_ints(sc.get("critical_set", "")),
        delta=float(sc.get("delta", d.delta)),
        target_set=_ints(sc.get("target_set", "")),
        span=(span[0], span[1]),
        direction=direction,
        solver=solver,
        analysis=analysis,
        interp=interp,
        criteria=criteria,
        seed=seed,
        out_dir=run.get("out", d.out_dir).strip(),
        fd_points=int(rp.get("fd_points", d.fd_points)),
    )


def load_config(path: str | Path) -> ScenarioConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text())
