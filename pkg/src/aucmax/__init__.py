"""AUC maximization with min-max surrogate losses.

Scores come from a small differentiable model (linear or one-hidden-layer
ELU network), training optimizes either a pointwise baseline (cross-entropy,
focal) by SGD or an AUC surrogate (pairwise square, margin with squared
hinge) by a primal-dual proximal method, and everything is verifiable at desk
scale: exact decompositions, closed-form saddle points, finite-difference
gradient checks, and published 1-D walkthrough values.
"""

from .data import Dataset, GaussianToySpec, gen_gaussian_toy, inject_easy, inject_noise, load_csv, make_imbalanced, save_csv
from .errors import AucmaxError, NumericalError, ValidationError
from .losses import (
    AuxVars,
    SurrogateSpec,
    batch_score_normalize,
    cross_entropy_loss_and_coeffs,
    focal_loss_and_coeffs,
    margin_loss_value,
    minmax_grads,
    minmax_value,
    optimal_aux,
    pairwise_square_loss,
    square_loss_decomposition,
)
from .metrics import accuracy, auc_score, auc_sensitivity_demo
from .models import ModelSpec, backward_vjp, forward, forward_batch, init_params, load_model, save_model
from .optimizer import PesgConfig, RunRecord, SgdConfig, pesg_train, sgd_train, two_stage_train

__version__ = "0.1.0"
