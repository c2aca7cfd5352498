"""Experiment configuration: one JSON document describing an instance and a run.

Every field except ``seed`` has a default.  Relative file paths are resolved
against the directory of the config file.  See the README for the schema.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .activation import ActivationFamily, assemble_matrix, load_tabulated
from .errors import RKBSLabError
from .losses import LOSS_KINDS
from .solvers import SolverOptions
from .spaces import ParameterGrid, ProbabilityWeights, SingularPartition
from .suites import CORE_SUITES, DEFAULT_TOLERANCES, SUITES

FAMILY_KINDS = ("relu", "tanh", "gaussian", "tabulated")
SCHEMES = ("uniform", "explicit")
RULES = ("round_robin", "contiguous", "explicit")
LABEL_SOURCES = ("teacher", "file", "inline")
STRATEGIES = ("full_grid", "exchange")
SOLVER_FIELDS = ("feas_tol", "opt_tol", "max_iters", "svd_cutoff_ratio")
TOP_LEVEL = ("seed", "activation", "samples", "grid", "partition", "labels", "lambdas",
             "lambda_factors", "loss", "strategy", "suites", "suite_sizes", "tolerances",
             "solver", "workers")


class ConfigError(RKBSLabError):
    """The config document is malformed or inconsistent."""


def _require(cond, message):
    if not cond:
        raise ConfigError(message)


def _int(value, name, low=None):
    _require(isinstance(value, int) and not isinstance(value, bool), f"{name} must be an integer")
    if low is not None:
        _require(value >= low, f"{name} must be >= {low}")
    return value


def _real(value, name, positive=False):
    _require(isinstance(value, (int, float)) and not isinstance(value, bool)
             and np.isfinite(value), f"{name} must be a finite number")
    if positive:
        _require(value > 0, f"{name} must be positive")
    return float(value)


def _section(data, name):
    sec = data.get(name, {})
    _require(isinstance(sec, dict), f"{name} must be an object")
    return sec


def _choice(value, name, options):
    _require(value in options, f"{name} must be one of {list(options)}, got {value!r}")
    return value


@dataclass
class ExperimentConfig:
    seed: int
    family: ActivationFamily
    samples: np.ndarray
    grid: ParameterGrid
    partition: SingularPartition
    labels: np.ndarray
    teacher: Optional[dict]
    lambdas: tuple
    lambda_factors: tuple
    loss: str
    strategy: str
    suites: tuple
    suite_sizes: dict
    tolerances: dict
    opts: SolverOptions
    workers: int
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def m(self) -> int:
        return self.grid.size

    def matrix(self) -> np.ndarray:
        return assemble_matrix(self.family, self.samples, self.grid).entries


def _resolve(path, base):
    _require(isinstance(path, str) and path, "file paths must be nonempty strings")
    return path if os.path.isabs(path) else os.path.join(base, path)


def _points(sec, name, rng, count_key, dim, low, high):
    scheme = _choice(sec.get("scheme", "uniform"), f"{name}.scheme", SCHEMES)
    if scheme == "explicit":
        pts = sec.get("points")
        _require(isinstance(pts, list) and pts, f"{name}.points must be a nonempty list")
        try:
            arr = np.array(pts, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError(f"{name}.points must be a rectangular numeric array") from None
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        _require(arr.ndim == 2 and np.all(np.isfinite(arr)), f"{name}.points must be finite rows")
        return arr
    count = _int(sec.get(count_key, 8), f"{name}.{count_key}", 1)
    return rng.uniform(low, high, size=(count, dim))


def _family(sec, base):
    kind = _choice(sec.get("kind", "relu"), "activation.kind", FAMILY_KINDS)
    if kind == "gaussian":
        return ActivationFamily.gaussian(_real(sec.get("bandwidth", 1.0), "activation.bandwidth", True))
    if kind == "tabulated":
        path = _resolve(sec.get("table"), base)
        try:
            return load_tabulated(path)
        except OSError as exc:
            raise ConfigError(f"cannot read activation table: {exc}") from None
    return ActivationFamily(kind)


def _grid(sec, rng, d):
    scheme = _choice(sec.get("scheme", "uniform"), "grid.scheme", SCHEMES)
    if scheme == "explicit":
        atoms = sec.get("atoms")
        _require(isinstance(atoms, list) and atoms, "grid.atoms must be a nonempty list")
        try:
            thetas = np.array([a["theta"] for a in atoms], dtype=float).reshape(len(atoms), -1)
            biases = np.array([a["bias"] for a in atoms], dtype=float)
        except (KeyError, TypeError, ValueError):
            raise ConfigError("every grid atom needs a numeric theta list and bias") from None
        return ParameterGrid(thetas, biases)
    m = _int(sec.get("m", 16), "grid.m", 1)
    low, high = _real(sec.get("low", -1.0), "grid.low"), _real(sec.get("high", 1.0), "grid.high")
    return ParameterGrid(rng.uniform(low, high, size=(m, d)), rng.uniform(low, high, size=m))


def _partition(sec, m):
    rule = _choice(sec.get("rule", "round_robin"), "partition.rule", RULES)
    if rule == "explicit":
        blocks = sec.get("blocks")
        _require(isinstance(blocks, list) and blocks, "partition.blocks must be a nonempty list")
        try:
            blocks = [[int(j) for j in b] for b in blocks]
        except (TypeError, ValueError):
            raise ConfigError("partition.blocks must be lists of atom indices") from None
        _require(all(blocks), "partition blocks must be nonempty")
        weights = [ProbabilityWeights.uniform(len(b)) for b in blocks]
        return SingularPartition(tuple(blocks), tuple(weights), m)
    k = _int(sec.get("count", min(2, m)), "partition.count", 1)
    _require(k <= m, f"partition.count {k} exceeds the grid size {m}")
    if rule == "round_robin":
        blocks = [np.arange(i, m, k) for i in range(k)]
    else:
        blocks = np.array_split(np.arange(m), k)
    return SingularPartition(tuple(blocks), tuple(ProbabilityWeights.uniform(b.size) for b in blocks), m)


def _labels(sec, A, rng, base, loss):
    source = _choice(sec.get("source", "teacher"), "labels.source", LABEL_SOURCES)
    n, m = A.shape
    if source == "teacher":
        k = _int(sec.get("atoms", min(3, m)), "labels.atoms", 1)
        _require(k <= m, f"labels.atoms {k} exceeds the grid size {m}")
        noise = _real(sec.get("noise", 0.0), "labels.noise")
        _require(noise >= 0, "labels.noise must be nonnegative")
        support = np.sort(rng.choice(m, size=k, replace=False))
        weights = rng.normal(size=k)
        y = A[:, support] @ weights + noise * rng.normal(size=n)
        if loss != "squared":
            y = np.where(y >= 0, 1.0, -1.0)
        return y, {"support": support.tolist(), "weights": weights.tolist(), "noise": noise}
    if source == "file":
        path = _resolve(sec.get("path"), base)
        try:
            y = np.loadtxt(path, delimiter=",", ndmin=1, dtype=float)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read labels: {exc}") from None
    else:
        try:
            y = np.array(sec.get("values"), dtype=float)
        except (TypeError, ValueError):
            raise ConfigError("labels.values must be a list of numbers") from None
    y = y.reshape(-1)
    _require(y.size == n, f"{y.size} labels for {n} samples")
    _require(np.all(np.isfinite(y)), "labels must be finite")
    return y, None


def parse_config(data: dict, base: str = ".") -> ExperimentConfig:
    """Validate a decoded config document and build the instance it describes."""
    _require(isinstance(data, dict), "config must be a JSON object")
    unknown = sorted(set(data) - set(TOP_LEVEL))
    _require(not unknown, f"unknown config fields: {unknown}")
    _require("seed" in data, "seed is required")
    seed = _int(data["seed"], "seed", 0)
    rng = np.random.default_rng(seed)

    try:
        family = _family(_section(data, "activation"), base)
        smp = _section(data, "samples")
        d = _int(smp.get("d", 1), "samples.d", 1)
        low, high = _real(smp.get("low", -1.0), "samples.low"), _real(smp.get("high", 1.0), "samples.high")
        samples = _points(smp, "samples", rng, "n", d, low, high)
        grid = _grid(_section(data, "grid"), rng, samples.shape[1])
        _require(grid.dim == samples.shape[1], "grid theta dimension must match the sample dimension")
        if family.kind == "tabulated":
            _require(family.table.shape == (samples.shape[0], grid.size),
                     f"table shape {family.table.shape} does not match n={samples.shape[0]}, m={grid.size}")
        partition = _partition(_section(data, "partition"), grid.size)
        loss = _choice(data.get("loss", "squared"), "loss", LOSS_KINDS)
        A = assemble_matrix(family, samples, grid).entries
        labels, teacher = _labels(_section(data, "labels"), A, rng, base, loss)
    except ConfigError:
        raise
    except RKBSLabError as exc:
        raise ConfigError(str(exc)) from None

    lambdas = data.get("lambdas", [])
    factors = data.get("lambda_factors", [] if lambdas else [0.1])
    _require(isinstance(lambdas, list) and isinstance(factors, list), "lambda grids must be lists")
    lambdas = tuple(_real(v, "lambdas[]", True) for v in lambdas)
    factors = tuple(_real(v, "lambda_factors[]", True) for v in factors)
    strategy = _choice(data.get("strategy", "full_grid"), "strategy", STRATEGIES)

    suites = data.get("suites", list(CORE_SUITES))
    _require(isinstance(suites, list) and suites, "suites must be a nonempty list")
    for s in suites:
        _choice(s, "suites[]", SUITES)
    sizes = _section(data, "suite_sizes")
    for k, v in sizes.items():
        _choice(k, "suite_sizes key", SUITES)
        _int(v, f"suite_sizes.{k}", 1)
    tolerances = _section(data, "tolerances")
    for k, v in tolerances.items():
        _choice(k, "tolerances key", tuple(DEFAULT_TOLERANCES))
        _require(_real(v, f"tolerances.{k}") >= 0, f"tolerances.{k} must be nonnegative")
    solver = _section(data, "solver")
    for k in solver:
        _choice(k, "solver key", SOLVER_FIELDS)
    opts = SolverOptions(
        feas_tol=_real(solver.get("feas_tol", 1e-9), "solver.feas_tol", True),
        opt_tol=_real(solver.get("opt_tol", 1e-8), "solver.opt_tol", True),
        max_iters=_int(solver.get("max_iters", 200000), "solver.max_iters", 1),
        svd_cutoff_ratio=_real(solver.get("svd_cutoff_ratio", 1e-10), "solver.svd_cutoff_ratio", True),
        seed=seed,
    )
    workers = _int(data.get("workers", 1), "workers", 1)
    return ExperimentConfig(seed, family, samples, grid, partition, labels, teacher, lambdas, factors,
                            loss, strategy, tuple(suites), dict(sizes), dict(tolerances), opts,
                            workers, data)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(data, os.path.dirname(os.path.abspath(path)))
