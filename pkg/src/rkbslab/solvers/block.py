"""Minimum-norm programs over finite p-direct sums of block feature spaces."""
from __future__ import annotations

import numpy as np

from ..activation import as_matrix
from ..errors import AlignmentError, EmptyInputError
from ..spaces import BlockMeasure, ProbabilityWeights, check_exponent
from .interpolate import weighted_l1_interpolate, weighted_l2_interpolate
from .options import SolveReport, SolverOptions


def _block_weights(mats, weights):
    out = []
    for i, A in enumerate(mats):
        if weights is None or weights[i] is None:
            out.append(ProbabilityWeights.uniform(A.shape[1]))
        else:
            w = weights[i] if isinstance(weights[i], ProbabilityWeights) else ProbabilityWeights(weights[i])
            if w.size != A.shape[1]:
                raise AlignmentError(f"block {i}: {w.size} weights for {A.shape[1]} atoms")
            out.append(w)
    return out


def _split(x, mats):
    sizes = np.cumsum([0] + [A.shape[1] for A in mats])
    return [x[a:b].copy() for a, b in zip(sizes[:-1], sizes[1:])]


def block_min_norm(blocks, f, p, opts: SolverOptions = SolverOptions(), weights=None):
    """Minimize ``(sum_i ||v_i||^p)^(1/p)`` subject to ``sum_i A_i v_i = f``.

    With ``p=1`` and no ``weights`` the block norms are total variations of
    measures, so this is basis pursuit on the concatenated matrix.  Given
    per-block probability weights ``pi_i`` (and always for ``p=2``, where
    they default to uniform), ``v_i`` is an ``L^p(pi_i)`` density acting
    through ``A_i diag(pi_i)``.
    """
    p = check_exponent(p)
    mats = [as_matrix(A) for A in blocks]
    if not mats:
        raise EmptyInputError("block list is empty")
    if len({A.shape[0] for A in mats}) != 1:
        raise AlignmentError("all blocks must share the sample set")
    if weights is not None and len(weights) != len(mats):
        raise AlignmentError(f"{len(weights)} weight vectors for {len(mats)} blocks")
    A = np.hstack(mats)
    if p == 1 and weights is None:
        x, report = weighted_l1_interpolate(A, f, np.ones(A.shape[1]), opts)
        return BlockMeasure(_split(x, mats), 1, "tv"), report
    pis = _block_weights(mats, weights)
    w = np.concatenate([pi.weights for pi in pis])
    M = A * w[None, :]
    if p == 1:
        h, report = weighted_l1_interpolate(M, f, w, opts)
        return BlockMeasure(_split(h, mats), 1, "lp", tuple(pis)), report
    h, residual = weighted_l2_interpolate(A, f, w, opts)
    out = BlockMeasure(_split(h, mats), 2, "lp", tuple(pis))
    return out, SolveReport(float(np.sqrt(np.sum(out.block_norms() ** 2))), 1, residual, "optimal")
