"""Experiment harness: declarative configs, seeded trial batches, CSV output.

A config is flat key/value text (diff-friendly, no nesting) with one
`policy` line per mediator row.  Trial i of every (algorithm, delta) cell
draws from stream id i of the base seed, so results are identical for any
worker count and stopping times are pathwise comparable across deltas.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .bandits import BanditModel, DistributionFamily, MediatorSet, RngStream, dirac_mediators
from .characteristic_time import (
    OracleSolution,
    compare_with_classical,
    lower_bound,
    solve_characteristic_time,
)
from .engine import EngineConfig, Mode, RunRecord, StoppingConfig, run_trial

log = logging.getLogger("mediator_bai")

BASE_SEED_ENV_VAR = "MEDIATOR_BAI_BASE_SEED"

ALGORITHMS = ("tas", "tas-mf-k", "tas-mf-u", "uniform")

CSV_HEADER = "algorithm,delta,mean_tau,ci95,err_rate,completed,aborted"


class ConfigError(ValueError):
    """Config file rejected; `line` is the offending 1-based line when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class ExperimentConfig:
    family: DistributionFamily
    means: np.ndarray
    policies: np.ndarray
    algorithms: tuple[str, ...]
    deltas: tuple[float, ...]
    runs: int
    base_seed: int
    beta_alpha: float = 1.2
    beta_c: float | None = None
    solver_budget: int = 5000
    solver_tol: float = 1e-6
    warm_budget: int = 50
    prune_duplicates: bool = False
    trial_cap: int = 10_000_000

    def model(self) -> BanditModel:
        return BanditModel(self.family, self.means)

    def mediators(self) -> MediatorSet:
        return MediatorSet(self.policies)

    def stopping(self, delta: float) -> StoppingConfig:
        return StoppingConfig(delta=delta, beta_alpha=self.beta_alpha, beta_c=self.beta_c)


@dataclass(frozen=True)
class AggregateRow:
    algorithm: str
    delta: float
    mean_tau: float
    ci95: float
    err_rate: float
    completed: int
    aborted: int


_REQUIRED_KEYS = ("family", "means", "algorithms", "deltas", "runs", "base_seed")

_OPTIONAL_DEFAULTS = {
    "beta_alpha": 1.2,
    "beta_c": None,
    "solver_budget": 5000,
    "solver_tol": 1e-6,
    "warm_budget": 50,
    "prune_duplicates": False,
    "trial_cap": 10_000_000,
}


def _parse_scalar(key: str, raw: str, line: int):
    try:
        if key in ("runs", "base_seed", "solver_budget", "warm_budget", "trial_cap"):
            return int(raw)
        if key in ("beta_alpha", "beta_c", "solver_tol"):
            return float(raw)
        if key == "prune_duplicates":
            low = raw.strip().lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}", line) from None
    raise ConfigError(f"unknown key {key!r}", line)


def _parse_floats(key: str, raw: str, line: int) -> list[float]:
    try:
        return [float(tok) for tok in raw.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"bad numeric list for {key}: {raw!r}", line) from None


def parse_config(path) -> ExperimentConfig:
    """Parse and validate a config file; environment base-seed override applies."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc

    values: dict = {}
    policy_rows: list[tuple[list[float], int]] = []
    seen: dict[str, int] = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        stripped = rawline.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", lineno)
        key, _, raw = stripped.partition("=")
        key = key.strip().lower()
        raw = raw.strip()
        if key == "policy":
            policy_rows.append((_parse_floats(key, raw, lineno), lineno))
            continue
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first on line {seen[key]})", lineno)
        seen[key] = lineno
        if key == "family":
            try:
                values[key] = DistributionFamily(raw.lower())
            except ValueError:
                raise ConfigError(
                    f"unknown family {raw!r} (expected 'gaussian' or 'bernoulli')", lineno
                ) from None
        elif key in ("means", "deltas"):
            values[key] = _parse_floats(key, raw, lineno)
        elif key == "algorithms":
            algs = tuple(tok.strip().lower() for tok in raw.split(",") if tok.strip())
            for alg in algs:
                if alg not in ALGORITHMS:
                    raise ConfigError(
                        f"unknown algorithm {alg!r} (expected one of {', '.join(ALGORITHMS)})",
                        lineno,
                    )
            values[key] = algs
        elif key in _OPTIONAL_DEFAULTS or key in ("runs", "base_seed"):
            values[key] = _parse_scalar(key, raw, lineno)
        else:
            raise ConfigError(f"unknown key {key!r}", lineno)

    for key in _REQUIRED_KEYS:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")
    if not policy_rows:
        raise ConfigError("at least one 'policy' row is required")

    env_seed = os.environ.get(BASE_SEED_ENV_VAR)
    if env_seed is not None:
        try:
            override = int(env_seed)
        except ValueError:
            raise ConfigError(f"{BASE_SEED_ENV_VAR} must be an integer, got {env_seed!r}")
        log.info(
            "base_seed %d overridden by %s=%d", values["base_seed"], BASE_SEED_ENV_VAR, override
        )
        values["base_seed"] = override

    means = np.asarray(values["means"], dtype=np.float64)
    width = means.size
    for row, lineno in policy_rows:
        if len(row) != width:
            raise ConfigError(
                f"policy row has {len(row)} entries but the model has {width} arms", lineno
            )
    policies = np.asarray([row for row, _ in policy_rows], dtype=np.float64)

    cfg = ExperimentConfig(
        family=values["family"],
        means=means,
        policies=policies,
        algorithms=values["algorithms"],
        deltas=tuple(float(d) for d in values["deltas"]),
        runs=int(values["runs"]),
        base_seed=int(values["base_seed"]),
        **{k: values.get(k, v) for k, v in _OPTIONAL_DEFAULTS.items()},
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> None:
    try:
        model = cfg.model()
        mediators = cfg.mediators()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if model.n_arms != mediators.n_arms:
        raise ConfigError("means and policy rows disagree on the number of arms")
    if cfg.runs < 1:
        raise ConfigError(f"runs must be >= 1, got {cfg.runs}")
    for d in cfg.deltas:
        if not 0.0 < d < 1.0:
            raise ConfigError(f"delta must be in (0, 1), got {d}")
    if not cfg.algorithms:
        raise ConfigError("algorithms list is empty")
    if cfg.trial_cap < 1:
        raise ConfigError(f"trial_cap must be >= 1, got {cfg.trial_cap}")
    if cfg.beta_alpha <= 1.0:
        raise ConfigError(f"beta_alpha must be > 1, got {cfg.beta_alpha}")
    if cfg.beta_c is not None and cfg.beta_c <= 0.0:
        raise ConfigError(f"beta_c must be positive, got {cfg.beta_c}")


def bundled_config_path(name: str) -> Path:
    """Filesystem path of a config shipped with the package (e.g. 'table1.cfg')."""
    candidate = resources.files("mediator_bai").joinpath("configs", name)
    with resources.as_file(candidate) as p:
        return Path(p)


def _engine_setup(cfg: ExperimentConfig, algorithm: str) -> tuple[MediatorSet, EngineConfig]:
    mediators = cfg.mediators()
    common = dict(
        solver_budget=cfg.solver_budget,
        solver_tol=cfg.solver_tol,
        warm_budget=cfg.warm_budget,
        trial_cap=cfg.trial_cap,
    )
    if algorithm == "tas":
        return dirac_mediators(cfg.means.size), EngineConfig(mode=Mode.KNOWN_POLICIES, **common)
    if algorithm == "tas-mf-k":
        return mediators, EngineConfig(
            mode=Mode.KNOWN_POLICIES, prune_duplicates=cfg.prune_duplicates, **common
        )
    if algorithm == "tas-mf-u":
        return mediators, EngineConfig(mode=Mode.UNKNOWN_POLICIES, **common)
    if algorithm == "uniform":
        return mediators, EngineConfig(mode=Mode.UNIFORM_BASELINE, **common)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> list[AggregateRow]:
    """Monte-Carlo batch over every (algorithm, delta) cell of the config.

    Trial i always uses stream id i, so the output is byte-identical for any
    `workers` value; aborted trials (step cap) are excluded from the mean and
    error rate but reported.
    """
    validate_config(cfg)
    model = cfg.model()
    rows: list[AggregateRow] = []
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for algorithm in cfg.algorithms:
            mediators, engine_cfg = _engine_setup(cfg, algorithm)
            for delta in cfg.deltas:
                stopping = cfg.stopping(delta)

                def one_trial(i: int) -> RunRecord:
                    return run_trial(
                        model,
                        mediators,
                        engine_cfg,
                        stopping,
                        RngStream(cfg.base_seed, i),
                    )

                records = list(pool.map(one_trial, range(cfg.runs)))
                rows.append(_aggregate(algorithm, delta, records))
    rows.sort(key=lambda r: (r.algorithm, -r.delta))
    return rows


def _aggregate(algorithm: str, delta: float, records: list[RunRecord]) -> AggregateRow:
    completed = [r for r in records if not r.aborted]
    aborted = len(records) - len(completed)
    if completed:
        taus = np.array([r.tau for r in completed], dtype=np.float64)
        mean = float(taus.mean())
        ci = 0.0 if taus.size < 2 else float(1.96 * taus.std(ddof=1) / np.sqrt(taus.size))
        err = float(np.mean([not r.correct for r in completed]))
    else:
        mean, ci, err = float("nan"), float("nan"), float("nan")
    return AggregateRow(
        algorithm=algorithm,
        delta=delta,
        mean_tau=mean,
        ci95=ci,
        err_rate=err,
        completed=len(completed),
        aborted=aborted,
    )


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".6g")


def write_csv(rows: list[AggregateRow], path) -> None:
    """Write aggregate rows sorted by (algorithm, descending delta); 6
    significant digits, trailing newline, UTF-8."""
    ordered = sorted(rows, key=lambda r: (r.algorithm, -r.delta))
    lines = [CSV_HEADER]
    for r in ordered:
        lines.append(
            ",".join(
                [
                    r.algorithm,
                    _fmt(r.delta),
                    _fmt(r.mean_tau),
                    _fmt(r.ci95),
                    _fmt(r.err_rate),
                    _fmt(r.completed),
                    _fmt(r.aborted),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


CTIME_CSV_HEADER = (
    "delta,lower_bound,t_star_mediators,t_star_classical,strictly_harder,"
    "solver_gap,omega,arm_proportions"
)


@dataclass(frozen=True)
class CTimeRow:
    delta: float
    lower_bound: float
    t_star_mediators: float
    t_star_classical: float
    strictly_harder: bool
    solution: OracleSolution = field(repr=False)


def characteristic_time_report(cfg: ExperimentConfig) -> list[CTimeRow]:
    """Characteristic times, oracle weights, and per-delta lower bounds."""
    validate_config(cfg)
    model = cfg.model()
    mediators = cfg.mediators()
    sol = solve_characteristic_time(model, mediators, cfg.solver_budget, cfg.solver_tol)
    comp = compare_with_classical(model, mediators, cfg.solver_budget, cfg.solver_tol)
    rows = []
    for delta in cfg.deltas:
        rows.append(
            CTimeRow(
                delta=delta,
                lower_bound=lower_bound(model, mediators, delta, cfg.solver_budget, cfg.solver_tol),
                t_star_mediators=1.0 / comp.t_star_inv_mediators,
                t_star_classical=1.0 / comp.t_star_inv_classical,
                strictly_harder=comp.strictly_harder,
                solution=sol,
            )
        )
    return rows


def write_ctime_csv(rows: list[CTimeRow], path) -> None:
    lines = [CTIME_CSV_HEADER]
    for r in sorted(rows, key=lambda r: -r.delta):
        omega = ";".join(_fmt(v) for v in r.solution.weights)
        props = ";".join(_fmt(v) for v in r.solution.induced_arm_proportions)
        lines.append(
            ",".join(
                [
                    _fmt(r.delta),
                    _fmt(r.lower_bound),
                    _fmt(r.t_star_mediators),
                    _fmt(r.t_star_classical),
                    _fmt(r.strictly_harder),
                    _fmt(r.solution.solver_gap),
                    omega,
                    props,
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
