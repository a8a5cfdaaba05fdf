from src.services.sure.ak_estimator import estimate_ak
from src.services.sure.divergence import draw_probes, mc_divergence, probe_divergence
from src.services.sure.objectives import (
    correlated_unsure_objective,
    filter_images,
    filter_matrix,
    sure_loss,
    unsure_objective,
)

__all__ = [
    "mc_divergence",
    "draw_probes",
    "probe_divergence",
    "sure_loss",
    "unsure_objective",
    "correlated_unsure_objective",
    "filter_images",
    "filter_matrix",
    "estimate_ak",
]
