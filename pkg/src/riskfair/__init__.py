"""Risk/fairness trade-offs for regression under demographic parity."""

__version__ = "0.1.0"

from .dist1d import (  # noqa: E402
    Empirical,
    Gaussian,
    barycenter_q,
    ks_distance,
    transport_map_to_barycenter,
    wasserstein_q,
    wasserstein_q_power,
)
from .fairness_metrics import (  # noqa: E402
    ks_unfairness,
    ks_unfairness_bound,
    unfairness,
    unfairness_estimator,
    weight_scheme,
    weighted_mse,
)
from .oracle import (  # noqa: E402
    OracleModel,
    TradeoffPoint,
    alpha_from_lambda,
    check_geometric_lemma,
    oracle_alpha_ri,
    pareto_dominates,
    tradeoff_curve,
)
from .postprocess import PostProcessor, calibrate, predict_alpha, transform  # noqa: E402

__all__ = [
    "Empirical", "Gaussian", "barycenter_q", "ks_distance", "transport_map_to_barycenter",
    "wasserstein_q", "wasserstein_q_power", "ks_unfairness", "ks_unfairness_bound",
    "unfairness", "unfairness_estimator", "weight_scheme", "weighted_mse", "OracleModel",
    "TradeoffPoint", "alpha_from_lambda", "check_geometric_lemma", "oracle_alpha_ri",
    "pareto_dominates", "tradeoff_curve", "PostProcessor", "calibrate", "predict_alpha",
    "transform",
]
