"""Losses, TV-regularized training, certificates and reformulation checks."""
from ..losses import LossSpec, as_loss, empirical_risk, risk_gradient
from .reformulation import (block_feature_optimum, block_hypothesis_optimum, hypothesis_optimum,
                            project_ellipsoid, project_polytope, verify_block_reformulation,
                            verify_reformulation)
from .train import (Atom, RepresenterSolution, SampleMeasure, TrainConfig, certificate,
                    dual_certificate, extract_representer, kkt_surplus, lambda_max, train_tv,
                    training_objective)

__all__ = [
    "Atom", "LossSpec", "RepresenterSolution", "SampleMeasure", "TrainConfig", "as_loss",
    "block_feature_optimum", "block_hypothesis_optimum", "certificate", "dual_certificate",
    "empirical_risk", "extract_representer", "hypothesis_optimum", "kkt_surplus", "lambda_max",
    "project_ellipsoid", "project_polytope", "risk_gradient", "train_tv", "training_objective",
    "verify_block_reformulation", "verify_reformulation",
]
