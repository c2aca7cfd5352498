"""Discretized feature spaces: grids, atomic measures, densities and partitions.

A signed measure on a finite parameter grid is a weight vector aligned with
the grid atoms.  A singular family of probability measures becomes a set of
disjoint index blocks, each carrying strictly positive probability weights,
and the map between block densities and global measures is the usual
``weight = pi * density`` rule, which is an isometry for the L1/TV pairing.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AlignmentError,
    DimensionError,
    EmptyInputError,
    NotAbsolutelyContinuous,
    RKBSLabError,
    UnsupportedExponent,
)

SUPPORTED_P = (1, 2)
PROBABILITY_TOL = 1e-12


def _vector(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise RKBSLabError(f"{name} must have finite entries")
    return arr


def check_exponent(p) -> int:
    if p not in SUPPORTED_P:
        raise UnsupportedExponent(f"p must be one of {SUPPORTED_P}, got {p!r}")
    return int(p)


@dataclass(frozen=True)
class SamplePoint:
    coordinates: np.ndarray

    def __post_init__(self):
        x = _vector(self.coordinates, "sample coordinates")
        if x.size < 1:
            raise DimensionError("sample points need dimension >= 1")
        object.__setattr__(self, "coordinates", x)

    @property
    def dim(self) -> int:
        return self.coordinates.size


@dataclass(frozen=True)
class ParameterPoint:
    theta: np.ndarray
    bias: float
    tag: Optional[float] = None

    def __post_init__(self):
        theta = _vector(self.theta, "theta")
        if theta.size < 1:
            raise DimensionError("theta needs dimension >= 1")
        if not np.isfinite(self.bias):
            raise RKBSLabError("bias must be finite")
        if self.tag is not None and not (0.0 <= self.tag <= 1.0):
            raise RKBSLabError("tag must lie in [0, 1]")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "bias", float(self.bias))

    def __eq__(self, other):
        if not isinstance(other, ParameterPoint):
            return NotImplemented
        return (np.array_equal(self.theta, other.theta) and self.bias == other.bias
                and self.tag == other.tag)

    def __hash__(self):
        return hash((self.theta.tobytes(), self.bias, self.tag))


@dataclass(frozen=True)
class ParameterGrid:
    """Finite stand-in for the parameter set: ``m`` atoms ``(theta, bias[, tag])``.

    Stored column-wise: ``thetas`` is ``(m, d)``, ``biases`` and ``tags`` are
    length ``m``.  Atoms must be pairwise distinct.
    """

    thetas: np.ndarray
    biases: np.ndarray
    tags: Optional[np.ndarray] = None

    def __post_init__(self):
        thetas = np.array(self.thetas, dtype=float)
        if thetas.ndim == 1:
            thetas = thetas.reshape(-1, 1)
        biases = np.array(self.biases, dtype=float).reshape(-1)
        if thetas.shape[0] == 0:
            raise EmptyInputError("a parameter grid needs at least one atom")
        if thetas.shape[0] != biases.size:
            raise AlignmentError("thetas and biases disagree on the atom count")
        if not (np.all(np.isfinite(thetas)) and np.all(np.isfinite(biases))):
            raise RKBSLabError("grid atoms must be finite")
        tags = None
        if self.tags is not None:
            tags = np.array(self.tags, dtype=float).reshape(-1)
            if tags.size != biases.size:
                raise AlignmentError("tags must align with the atoms")
            if np.any(tags < 0) or np.any(tags > 1):
                raise RKBSLabError("tags must lie in [0, 1]")
        stacked = np.column_stack([thetas, biases] + ([tags] if tags is not None else []))
        if np.unique(stacked, axis=0).shape[0] != stacked.shape[0]:
            raise RKBSLabError("grid atoms must be pairwise distinct")
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "biases", biases)
        object.__setattr__(self, "tags", tags)

    @classmethod
    def from_points(cls, points: Sequence[ParameterPoint]) -> "ParameterGrid":
        if len(points) == 0:
            raise EmptyInputError("a parameter grid needs at least one atom")
        tagged = [p.tag is not None for p in points]
        if any(tagged) and not all(tagged):
            raise RKBSLabError("either every atom carries a tag or none does")
        dims = {p.theta.size for p in points}
        if len(dims) != 1:
            raise DimensionError("all atoms must share the same theta dimension")
        tags = np.array([p.tag for p in points]) if all(tagged) else None
        return cls(np.vstack([p.theta for p in points]), np.array([p.bias for p in points]), tags)

    @property
    def size(self) -> int:
        return self.biases.size

    @property
    def dim(self) -> int:
        return self.thetas.shape[1]

    @property
    def tagged(self) -> bool:
        return self.tags is not None

    def atom(self, j: int) -> ParameterPoint:
        tag = None if self.tags is None else float(self.tags[j])
        return ParameterPoint(self.thetas[j], float(self.biases[j]), tag)

    @property
    def atoms(self) -> list:
        return [self.atom(j) for j in range(self.size)]

    def subset(self, indices) -> "ParameterGrid":
        idx = np.asarray(indices, dtype=int)
        tags = None if self.tags is None else self.tags[idx]
        return ParameterGrid(self.thetas[idx], self.biases[idx], tags)

    def to_json(self) -> dict:
        out = {"thetas": self.thetas.tolist(), "biases": self.biases.tolist()}
        if self.tags is not None:
            out["tags"] = self.tags.tolist()
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ParameterGrid":
        return cls(data["thetas"], data["biases"], data.get("tags"))


@dataclass(frozen=True)
class DiscreteMeasure:
    """Signed atomic measure; ``weights[j]`` is the mass at grid atom ``j``."""

    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _vector(self.weights, "measure weights"))

    @classmethod
    def dirac(cls, j: int, m: int, mass: float = 1.0) -> "DiscreteMeasure":
        w = np.zeros(m)
        w[j] = mass
        return cls(w)

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights)

    def to_json(self) -> list:
        return self.weights.tolist()

    @classmethod
    def from_json(cls, data) -> "DiscreteMeasure":
        return cls(data)


@dataclass(frozen=True)
class ProbabilityWeights:
    weights: np.ndarray

    def __post_init__(self):
        w = _vector(self.weights, "probability weights")
        if w.size == 0:
            raise EmptyInputError("probability weights cannot be empty")
        if np.any(w < 0):
            raise RKBSLabError("probability weights must be nonnegative")
        if abs(w.sum() - 1.0) > PROBABILITY_TOL:
            raise RKBSLabError(f"probability weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, k: int) -> "ProbabilityWeights":
        return cls(np.full(k, 1.0 / k))

    @classmethod
    def normalized(cls, values) -> "ProbabilityWeights":
        """Normalize a positive vector; the sum is corrected to within rounding."""
        v = np.array(values, dtype=float).reshape(-1)
        v = v / v.sum()
        return cls(v)

    @property
    def size(self) -> int:
        return self.weights.size


@dataclass(frozen=True)
class DensityVector:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _vector(self.values, "density values"))

    @property
    def size(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class SampleFunction:
    """A hypothesis-space element identified with its values on the sample set."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _vector(self.values, "function values"))

    @property
    def size(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class SingularPartition:
    """Disjoint atom blocks with strictly positive per-block probability weights.

    ``size`` is the number of atoms of the grid the partition refers to.  The
    blocks need not cover the grid; :meth:`covers` tests the finite analogue
    of maximality.
    """

    blocks: tuple
    weights: tuple
    size: int

    def __post_init__(self):
        blocks = tuple(np.array(b, dtype=int).reshape(-1) for b in self.blocks)
        weights = tuple(
            w if isinstance(w, ProbabilityWeights) else ProbabilityWeights(w) for w in self.weights
        )
        if len(blocks) == 0:
            raise EmptyInputError("a partition needs at least one block")
        if len(blocks) != len(weights):
            raise AlignmentError("one probability vector per block is required")
        seen = set()
        for b, w in zip(blocks, weights):
            if b.size == 0:
                raise EmptyInputError("partition blocks must be nonempty")
            if b.size != w.size:
                raise AlignmentError("block weights must align with block atoms")
            if np.any(w.weights <= 0):
                raise RKBSLabError("block weights must be strictly positive")
            if np.any(b < 0) or np.any(b >= self.size):
                raise AlignmentError("block index out of grid range")
            ids = set(b.tolist())
            if len(ids) != b.size or ids & seen:
                raise RKBSLabError("partition blocks must be pairwise disjoint")
            seen |= ids
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "size", int(self.size))

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def covers(self) -> bool:
        return sum(b.size for b in self.blocks) == self.size

    def owner(self) -> np.ndarray:
        """Block index of every atom, ``-1`` for atoms outside all blocks."""
        out = np.full(self.size, -1, dtype=int)
        for i, b in enumerate(self.blocks):
            out[b] = i
        return out

    def to_json(self) -> dict:
        return {
            "blocks": [b.tolist() for b in self.blocks],
            "weights": [w.weights.tolist() for w in self.weights],
            "size": self.size,
        }

    @classmethod
    def from_json(cls, data: dict, size: Optional[int] = None) -> "SingularPartition":
        blocks = data["blocks"]
        if size is None:
            size = data.get("size")
        if size is None:
            size = 1 + max(max(b) for b in blocks)
        weights = [ProbabilityWeights.normalized(w) for w in data["weights"]]
        return cls(tuple(blocks), tuple(weights), size)


@dataclass(frozen=True)
class BlockMeasure:
    """Element of a finite ``p``-direct sum of block feature spaces.

    ``kind="tv"`` stores per-block measure weights normed by total variation;
    ``kind="lp"`` stores per-block densities normed in ``L^p(pi_i)``, with the
    ``pi_i`` in ``weights``.  ``q`` is the conjugate exponent.
    """

    blocks: tuple
    p: int
    kind: str = "tv"
    weights: Optional[tuple] = None
    q: float = field(init=False)

    def __post_init__(self):
        p = check_exponent(self.p)
        blocks = tuple(_vector(b, "block values") for b in self.blocks)
        if self.kind not in ("tv", "lp"):
            raise RKBSLabError(f"unknown block kind {self.kind!r}")
        weights = self.weights
        if self.kind == "lp":
            if weights is None or len(weights) != len(blocks):
                raise AlignmentError("lp blocks need one probability vector per block")
            weights = tuple(
                w if isinstance(w, ProbabilityWeights) else ProbabilityWeights(w) for w in weights
            )
            for b, w in zip(blocks, weights):
                if b.size != w.size:
                    raise AlignmentError("block density and weights disagree in length")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "q", float("inf") if p == 1 else p / (p - 1))

    def block_norms(self) -> np.ndarray:
        if self.kind == "tv":
            return np.array([tv_norm(b) for b in self.blocks])
        return np.array([lp_norm(b, w, self.p) for b, w in zip(self.blocks, self.weights)])


def _weights_of(mu) -> np.ndarray:
    if isinstance(mu, DiscreteMeasure):
        return mu.weights
    return _vector(mu, "measure weights")


def _density_of(h) -> np.ndarray:
    if isinstance(h, DensityVector):
        return h.values
    return _vector(h, "density values")


def _prob_of(pi) -> np.ndarray:
    if isinstance(pi, ProbabilityWeights):
        return pi.weights
    return ProbabilityWeights(pi).weights


def tv_norm(mu) -> float:
    """Total variation of an atomic measure: the sum of absolute weights."""
    return float(np.sum(np.abs(_weights_of(mu))))


def lp_norm(h, pi, p) -> float:
    """``(sum_j pi_j |h_j|^p)^(1/p)`` for ``p`` in {1, 2}."""
    p = check_exponent(p)
    hv, w = _density_of(h), _prob_of(pi)
    if hv.size != w.size:
        raise AlignmentError("density and probability weights disagree in length")
    if p == 1:
        return float(np.sum(w * np.abs(hv)))
    return float(np.sqrt(np.sum(w * hv * hv)))


def block_norm(v: BlockMeasure) -> float:
    norms = v.block_norms()
    if v.p == 1:
        return float(np.sum(norms))
    return float(np.sqrt(np.sum(norms**2)))


def measure_from_blocks(partition: SingularPartition, densities) -> DiscreteMeasure:
    """Glue block densities into one measure: mass ``pi_i[j] * h_i[j]`` at atom ``j``."""
    if len(densities) != partition.n_blocks:
        raise AlignmentError(
            f"{len(densities)} densities for a partition with {partition.n_blocks} blocks"
        )
    out = np.zeros(partition.size)
    for block, pi, h in zip(partition.blocks, partition.weights, densities):
        hv = _density_of(h)
        if hv.size != block.size:
            raise AlignmentError("density does not align with its block")
        out[block] = pi.weights * hv
    return DiscreteMeasure(out)


def split_to_blocks(mu, partition: SingularPartition) -> list:
    """Inverse of :func:`measure_from_blocks` on measures supported in the blocks."""
    w = _weights_of(mu)
    if w.size != partition.size:
        raise AlignmentError("measure length does not match the partition's grid")
    outside = partition.owner() < 0
    if np.any(w[outside] != 0):
        bad = np.flatnonzero(outside & (w != 0))
        raise NotAbsolutelyContinuous(f"nonzero mass outside every block at atoms {bad.tolist()}")
    return [DensityVector(w[block] / pi.weights) for block, pi in zip(partition.blocks, partition.weights)]
