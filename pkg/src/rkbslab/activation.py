"""Activation families sigma(x, w) = g(x . theta - b) and their sample/grid matrices."""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, EmptyInputError, RKBSLabError, UnsupportedFamily
from .spaces import ParameterGrid, ParameterPoint, SamplePoint

KINDS = ("relu", "tanh", "gaussian", "tabulated", "product")
TAG_TOL = 1e-12


@dataclass(frozen=True)
class ActivationFamily:
    """A scalar nonlinearity ``g`` applied to ``x . theta - b``.

    ``tabulated`` families carry a dense ``(n, m)`` table instead of a
    formula.  ``product`` families are built by :func:`extend_product` and
    dispatch on the atom tag ``i / n`` to their ``i``-th component.
    """

    kind: str
    bandwidth: float = 1.0
    table: Optional[np.ndarray] = None
    components: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnsupportedFamily(f"unknown activation kind {self.kind!r}")
        if self.kind == "gaussian" and not (self.bandwidth > 0 and np.isfinite(self.bandwidth)):
            raise RKBSLabError("gaussian bandwidth must be a positive real")
        if self.kind == "tabulated":
            if self.table is None:
                raise RKBSLabError("tabulated families need a value table")
            table = np.array(self.table, dtype=float)
            if table.ndim != 2 or 0 in table.shape:
                raise RKBSLabError("activation table must be a nonempty 2-d array")
            if not np.all(np.isfinite(table)):
                raise RKBSLabError("activation table entries must be finite")
            table.setflags(write=False)
            object.__setattr__(self, "table", table)
        if self.kind == "product":
            if len(self.components) == 0:
                raise EmptyInputError("product family needs at least one component")
            object.__setattr__(self, "components", tuple(self.components))

    @classmethod
    def relu(cls) -> "ActivationFamily":
        return cls("relu")

    @classmethod
    def tanh(cls) -> "ActivationFamily":
        return cls("tanh")

    @classmethod
    def gaussian(cls, bandwidth: float = 1.0) -> "ActivationFamily":
        return cls("gaussian", bandwidth=bandwidth)

    @classmethod
    def tabulated(cls, table) -> "ActivationFamily":
        return cls("tabulated", table=table)

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "gaussian":
            out["bandwidth"] = self.bandwidth
        if self.kind == "product":
            out["components"] = [c.to_json() for c in self.components]
        if self.kind == "tabulated":
            out["shape"] = list(self.table.shape)
        return out


@dataclass(frozen=True)
class ActivationMatrix:
    """``entries[k, j] = sigma(x_k, w_j)``: the discretized synthesis operator."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise EmptyInputError("an activation matrix needs n >= 1 rows and m >= 1 columns")
        if not np.all(np.isfinite(a)):
            raise RKBSLabError("activation matrix entries must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self):
        return self.entries.shape

    def apply(self, mu) -> np.ndarray:
        """Sample values of ``f = A mu``."""
        w = getattr(mu, "weights", mu)
        return self.entries @ np.asarray(w, dtype=float)

    def columns(self, indices) -> "ActivationMatrix":
        return ActivationMatrix(self.entries[:, np.asarray(indices, dtype=int)])

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def as_matrix(A) -> np.ndarray:
    if isinstance(A, ActivationMatrix):
        return A.entries
    return ActivationMatrix(A).entries


def _sample_array(samples) -> np.ndarray:
    if isinstance(samples, np.ndarray):
        X = np.array(samples, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
    else:
        samples = list(samples)
        if len(samples) == 0:
            raise EmptyInputError("sample set is empty")
        pts = [s if isinstance(s, SamplePoint) else SamplePoint(s) for s in samples]
        if len({p.dim for p in pts}) != 1:
            raise DimensionError("sample points must share one dimension")
        X = np.vstack([p.coordinates for p in pts])
    if X.shape[0] == 0:
        raise EmptyInputError("sample set is empty")
    if not np.all(np.isfinite(X)):
        raise RKBSLabError("sample coordinates must be finite")
    return X


def _preactivation(X: np.ndarray, thetas: np.ndarray, biases: np.ndarray) -> np.ndarray:
    # coordinate-by-coordinate accumulation: the scalar and matrix paths must round identically
    z = X[:, 0:1] * thetas[None, :, 0]
    for c in range(1, X.shape[1]):
        z = z + X[:, c : c + 1] * thetas[None, :, c]
    return z - biases[None, :]


def _nonlinearity(family: ActivationFamily, z: np.ndarray) -> np.ndarray:
    if family.kind == "relu":
        return np.maximum(z, 0.0)
    if family.kind == "tanh":
        return np.tanh(z)
    if family.kind == "gaussian":
        return np.exp(-(z * z) / (family.bandwidth * family.bandwidth))
    raise UnsupportedFamily(f"{family.kind} has no closed-form nonlinearity")


def _component_index(family: ActivationFamily, tag: Optional[float]) -> int:
    if tag is None:
        raise RKBSLabError("product families are evaluated on tagged atoms only")
    n = len(family.components)
    i = int(round(tag * n))
    if i < 1 or i > n or abs(tag - i / n) > TAG_TOL:
        raise RKBSLabError(f"tag {tag!r} is not on the grid {{1/{n}, ..., 1}}")
    return i - 1


def eval_activation(family: ActivationFamily, x, w: ParameterPoint) -> float:
    """sigma(x, w) for one sample and one atom."""
    x = x if isinstance(x, SamplePoint) else SamplePoint(x)
    if x.dim != w.theta.size:
        raise DimensionError(f"sample dimension {x.dim} != theta dimension {w.theta.size}")
    if family.kind == "tabulated":
        raise UnsupportedFamily("tabulated families are defined by their table; use assemble_matrix")
    if family.kind == "product":
        component = family.components[_component_index(family, w.tag)]
        return eval_activation(component, x, ParameterPoint(w.theta, w.bias))
    z = _preactivation(x.coordinates.reshape(1, -1), w.theta.reshape(1, -1), np.array([w.bias]))
    return float(_nonlinearity(family, z)[0, 0])


def assemble_matrix(family: ActivationFamily, samples, grid: ParameterGrid) -> ActivationMatrix:
    """The ``n x m`` matrix of ``sigma(x_k, w_j)`` over samples and grid atoms."""
    X = _sample_array(samples)
    if grid.size == 0:
        raise EmptyInputError("parameter grid is empty")
    if family.kind == "tabulated":
        if family.table.shape != (X.shape[0], grid.size):
            raise DimensionError(
                f"table shape {family.table.shape} does not match ({X.shape[0]}, {grid.size})"
            )
        return ActivationMatrix(family.table)
    if X.shape[1] != grid.dim:
        raise DimensionError(f"sample dimension {X.shape[1]} != grid dimension {grid.dim}")
    if family.kind == "product":
        if not grid.tagged:
            raise RKBSLabError("product families need a tagged grid")
        owner = np.array([_component_index(family, t) for t in grid.tags])
        out = np.empty((X.shape[0], grid.size))
        for i, component in enumerate(family.components):
            cols = np.flatnonzero(owner == i)
            if cols.size:
                base = ParameterGrid(grid.thetas[cols], grid.biases[cols])
                out[:, cols] = assemble_matrix(component, X, base).entries
        return ActivationMatrix(out)
    z = _preactivation(X, grid.thetas, grid.biases)
    return ActivationMatrix(_nonlinearity(family, z))


def extend_product(families: Sequence[ActivationFamily], grid: ParameterGrid, n: int):
    """Stack ``n`` families over the grid crossed with tags ``{1/n, ..., 1}``.

    The extended family evaluates to ``families[i-1]`` on atoms tagged ``i/n``;
    the tagged grid lists all atoms of tag ``1/n`` first, then ``2/n``, and so
    on, so its matrix is the column concatenation of the per-family matrices.
    """
    if n == 0 or len(families) == 0:
        raise EmptyInputError("extend_product needs at least one family")
    if len(families) != n:
        raise RKBSLabError(f"expected {n} families, got {len(families)}")
    if grid.tagged:
        raise RKBSLabError("extend_product expects an untagged grid")
    m = grid.size
    thetas = np.tile(grid.thetas, (n, 1))
    biases = np.tile(grid.biases, n)
    tags = np.repeat(np.arange(1, n + 1) / n, m)
    return ActivationFamily("product", components=tuple(families)), ParameterGrid(thetas, biases, tags)


def spectrum(A) -> np.ndarray:
    """Singular values of ``A``, nonincreasing and clamped at zero."""
    s = np.linalg.svd(as_matrix(A), compute_uv=False)
    s = np.where(s < 0, 0.0, s)
    return np.sort(s)[::-1]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def matrix_to_csv(A) -> str:
    a = as_matrix(A)
    lines = [f"{a.shape[0]},{a.shape[1]}"]
    lines += [",".join(_fmt(v) for v in row) for row in a]
    return "\n".join(lines) + "\n"


def matrix_from_csv(text: str) -> np.ndarray:
    """Parse the ``n,m`` header format used for tables and assembled matrices."""
    rows = [ln for ln in io.StringIO(text).read().splitlines() if ln.strip()]
    if not rows:
        raise RKBSLabError("empty matrix CSV")
    try:
        n, m = (int(v) for v in rows[0].split(","))
        data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise RKBSLabError(f"malformed matrix CSV: {exc}") from None
    if data.shape != (n, m):
        raise DimensionError(f"CSV header says ({n}, {m}) but body is {data.shape}")
    return data


def load_tabulated(path) -> ActivationFamily:
    with open(path) as fh:
        return ActivationFamily.tabulated(matrix_from_csv(fh.read()))
