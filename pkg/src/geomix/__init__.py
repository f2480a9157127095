"""Graph embeddings that mix a spherical homophily space with a
hyperbolic social-influence space, trained by Riemannian SGD over an
in-house reverse-mode tape, with optional graph-convolutional encoders."""

from .decoder import MixtureParams, grad_p_link, p_hom, p_link, p_rank
from .graphio import (
    Graph,
    Split,
    load_edge_list,
    load_labels,
    make_node_split,
    make_split,
    save_edge_list,
    save_labels,
)
from .losses import LossConfig
from .manifold import poincare_dist, sphere_dist
from .metrics import auc, multilabel_metrics, node_classification, tangent_features
from .optimizer import OptimConfig, rsgd_ball_step, rsgd_sphere_step, sgd_step
from .priors import (
    HyperbolicPrior,
    SamplingError,
    SphericalPrior,
    ball_density,
    sample_ball,
    sample_sphere,
    sphere_density,
)
from .synth import gen_from_model, gen_homophily, gen_influence, gen_mixed
from .tape import Tape, TapeError, Var
from .training import (
    ModelState,
    compute_losses,
    init_model,
    load_model,
    save_model,
    score_pairs,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "HyperbolicPrior",
    "LossConfig",
    "MixtureParams",
    "ModelState",
    "OptimConfig",
    "SamplingError",
    "SphericalPrior",
    "Split",
    "Tape",
    "TapeError",
    "Var",
    "auc",
    "ball_density",
    "compute_losses",
    "gen_from_model",
    "gen_homophily",
    "gen_influence",
    "gen_mixed",
    "grad_p_link",
    "init_model",
    "load_edge_list",
    "load_labels",
    "load_model",
    "make_node_split",
    "make_split",
    "multilabel_metrics",
    "node_classification",
    "p_hom",
    "p_link",
    "p_rank",
    "poincare_dist",
    "rsgd_ball_step",
    "rsgd_sphere_step",
    "sample_ball",
    "sample_sphere",
    "save_edge_list",
    "save_labels",
    "save_model",
    "score_pairs",
    "sgd_step",
    "sphere_density",
    "sphere_dist",
    "tangent_features",
    "train",
    "__version__",
]
