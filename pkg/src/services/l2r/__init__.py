from src.services.l2r.checks import (
    diagnostics,
    filter_matrix_circular,
    gr2r_rewrite_check,
    learned_transport,
    oracle_scalar_map,
    transport_agreement,
    unsure_reduction_check,
)
from src.services.l2r.objective import NonFiniteLossError, l2r_losses, minmax_step
from src.services.l2r.recorruptor import (
    MonotoneMLP,
    Recorruptor,
    identity_pretrain,
    recorruptor_forward,
)
from src.services.l2r.suite import run_identity_suite, stop_gradient_gap

__all__ = [
    "MonotoneMLP",
    "Recorruptor",
    "recorruptor_forward",
    "identity_pretrain",
    "l2r_losses",
    "minmax_step",
    "NonFiniteLossError",
    "diagnostics",
    "gr2r_rewrite_check",
    "unsure_reduction_check",
    "filter_matrix_circular",
    "learned_transport",
    "oracle_scalar_map",
    "transport_agreement",
    "run_identity_suite",
    "stop_gradient_gap",
]
