"""Surrogate objectives for AUC maximization and their gradients.

Pairwise square loss (the exact O(N+ N-) oracle), its decomposition into
variance terms plus a mean-gap term, the margin variant with a squared hinge
on the gap, the per-sample min-max form used for stochastic training, and the
two pointwise baselines (logistic cross-entropy and focal loss).

Conventions: labels are +1/-1; scores are raw model outputs; ``p`` is the
positive-class prior of the full training set, fixed once per run. Gradients
with respect to scores are returned as per-sample coefficients sized so that
feeding them to ``models.backward_vjp`` yields the gradient of the *batch
mean* objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ValidationError

__all__ = [
    "AuxVars",
    "SurrogateSpec",
    "MinMaxGrads",
    "pairwise_square_loss",
    "square_loss_decomposition",
    "margin_loss_value",
    "optimal_aux",
    "minmax_value",
    "minmax_grads",
    "batch_score_normalize",
    "bsn_vjp",
    "cross_entropy_loss_and_coeffs",
    "focal_loss_and_coeffs",
]

BSN_EPS = 1e-12

AUC_KINDS = ("auc_square", "auc_margin")
ALL_KINDS = AUC_KINDS + ("cross_entropy", "focal", "pairwise_square_oracle")


@dataclass
class AuxVars:
    """Auxiliary min-max variables: class-mean surrogates a, b and dual alpha."""

    a: float = 0.0
    b: float = 0.0
    alpha: float = 0.0


@dataclass(frozen=True)
class SurrogateSpec:
    """Which objective governs training and its hyperparameters.

    ``bsn`` L2-normalizes the scores of each mini-batch before the loss;
    ``bsn_exact`` controls whether the normalization is differentiated through
    (full Jacobian) or treated as a constant rescaling.
    """

    kind: str
    p: float
    m: float = 1.0
    focal_alpha: float = 0.25
    focal_gamma: float = 2.0
    bsn: bool = False
    bsn_exact: bool = True

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise ValidationError(f"unknown surrogate kind {self.kind!r}")
        if not 0.0 < self.p < 1.0:
            raise ValidationError(f"class prior p must be in (0,1), got {self.p}")
        if self.kind == "auc_margin" and not self.m > 0:
            raise ValidationError(f"margin m must be > 0, got {self.m}")
        if self.kind == "focal":
            if not 0.0 < self.focal_alpha < 1.0:
                raise ValidationError(f"focal_alpha must be in (0,1), got {self.focal_alpha}")
            if self.focal_gamma < 0:
                raise ValidationError(f"focal_gamma must be >= 0, got {self.focal_gamma}")

    @property
    def effective_margin(self) -> float:
        # the square min-max objective is the margin form with m pinned to 1
        return 1.0 if self.kind == "auc_square" else self.m


@dataclass
class MinMaxGrads:
    """Gradient bundle of the batch-mean min-max objective.

    ``g_coeffs[i]`` is d(value)/d(score_i); feed it to backward_vjp.
    """

    g_coeffs: np.ndarray = field(repr=False)
    g_a: float = 0.0
    g_b: float = 0.0
    g_alpha: float = 0.0
    value: float = 0.0


def _split_by_class(scores_pos, scores_neg):
    sp = np.asarray(scores_pos, dtype=np.float64).ravel()
    sn = np.asarray(scores_neg, dtype=np.float64).ravel()
    if sp.size == 0 or sn.size == 0:
        raise ValidationError("AUC losses need at least one sample of each class")
    return sp, sn


def _check_batch(scores, labels):
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise ValidationError(f"scores {s.shape} and labels {y.shape} differ in length")
    if s.size == 0:
        raise ValidationError("empty batch")
    if not np.all(np.isin(y, (-1, 1))):
        raise ValidationError("labels must be +1 or -1")
    return s, y.astype(np.float64)


def pairwise_square_loss(scores_pos, scores_neg) -> float:
    """Mean over all positive-negative pairs of (1 - s+ + s-)^2, computed exactly."""
    sp, sn = _split_by_class(scores_pos, scores_neg)
    diffs = 1.0 - sp[:, None] + sn[None, :]
    return float(np.mean(diffs * diffs))


def square_loss_decomposition(scores_pos, scores_neg) -> tuple[float, float, float]:
    """Split the pairwise square loss into (A1, A2, A3).

    A1/A2 are the within-class score variances, A3 = (1 - mean+ + mean-)^2.
    A1 + A2 + A3 equals pairwise_square_loss exactly.
    """
    sp, sn = _split_by_class(scores_pos, scores_neg)
    a_bar = sp.mean()
    b_bar = sn.mean()
    a1 = float(np.mean((sp - a_bar) ** 2))
    a2 = float(np.mean((sn - b_bar) ** 2))
    a3 = float((1.0 - a_bar + b_bar) ** 2)
    return a1, a2, a3


def margin_loss_value(scores_pos, scores_neg, m: float) -> float:
    """A1 + A2 + (m - mean+ + mean-)_+^2 : squared hinge on the class-mean gap."""
    if not m > 0:
        raise ValidationError(f"margin m must be > 0, got {m}")
    sp, sn = _split_by_class(scores_pos, scores_neg)
    a1, a2, _ = square_loss_decomposition(sp, sn)
    hinge = max(0.0, m - sp.mean() + sn.mean())
    return a1 + a2 + hinge * hinge


def optimal_aux(scores_pos, scores_neg, loss: str = "square", m: float = 1.0) -> AuxVars:
    """Closed-form (a, b, alpha) given the scores.

    a and b are the class means; alpha is 1 + b - a for the square loss and
    max(0, m + b - a) for the margin loss.
    """
    sp, sn = _split_by_class(scores_pos, scores_neg)
    a = float(sp.mean())
    b = float(sn.mean())
    if loss == "square":
        alpha = 1.0 + b - a
    elif loss == "margin":
        alpha = max(0.0, m + b - a)
    else:
        raise ValidationError(f"loss must be 'square' or 'margin', got {loss!r}")
    return AuxVars(a=a, b=b, alpha=alpha)


def _minmax_terms(y, spec: SurrogateSpec):
    pos = y > 0
    neg = ~pos
    return spec.p, spec.effective_margin, pos, neg


def minmax_value(scores, labels, aux: AuxVars, spec: SurrogateSpec) -> float:
    """Batch mean of the decomposable per-sample min-max objective."""
    if spec.kind not in AUC_KINDS:
        raise ValidationError(f"minmax_value needs an AUC surrogate, got {spec.kind!r}")
    s, y = _check_batch(scores, labels)
    p, m, pos, neg = _minmax_terms(y, spec)
    # numpy scalars so a diverging run overflows to inf instead of raising
    a, b, alpha = np.float64(aux.a), np.float64(aux.b), np.float64(aux.alpha)
    per = (
        (1 - p) * (s - a) ** 2 * pos
        + p * (s - b) ** 2 * neg
        - p * (1 - p) * alpha**2
        + 2 * alpha * (p * (1 - p) * m + p * s * neg - (1 - p) * s * pos)
    )
    return float(per.mean())


def minmax_grads(scores, labels, aux: AuxVars, spec: SurrogateSpec) -> MinMaxGrads:
    """Exact gradients of minmax_value w.r.t. scores, a, b and alpha."""
    if spec.kind not in AUC_KINDS:
        raise ValidationError(f"minmax_grads needs an AUC surrogate, got {spec.kind!r}")
    s, y = _check_batch(scores, labels)
    p, m, pos, neg = _minmax_terms(y, spec)
    a, b, alpha = np.float64(aux.a), np.float64(aux.b), np.float64(aux.alpha)
    n = s.size
    g_coeffs = (
        2 * (1 - p) * (s - a - alpha) * pos + 2 * p * (s - b + alpha) * neg
    ) / n
    g_a = float(np.sum(-2 * (1 - p) * (s - a) * pos) / n)
    g_b = float(np.sum(-2 * p * (s - b) * neg) / n)
    g_alpha = float(
        np.mean(2 * (p * (1 - p) * m + p * s * neg - (1 - p) * s * pos))
        - 2 * p * (1 - p) * alpha
    )
    return MinMaxGrads(
        g_coeffs=g_coeffs,
        g_a=g_a,
        g_b=g_b,
        g_alpha=g_alpha,
        value=minmax_value(s, y, aux, spec),
    )


def batch_score_normalize(scores) -> np.ndarray:
    """L2-normalize a mini-batch of scores; batches with norm < 1e-12 pass through."""
    s = np.asarray(scores, dtype=np.float64).ravel()
    if s.size == 0:
        raise ValidationError("cannot normalize an empty batch")
    norm = float(np.linalg.norm(s))
    if norm < BSN_EPS:
        return s.copy()
    return s / norm


def bsn_vjp(scores, upstream) -> np.ndarray:
    """Apply the Jacobian of batch_score_normalize (transposed) to upstream.

    J = I/||s|| - s s^T / ||s||^3, symmetric, so the VJP equals the JVP.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    u = np.asarray(upstream, dtype=np.float64).ravel()
    if s.shape != u.shape:
        raise ValidationError(f"scores {s.shape} and upstream {u.shape} differ in length")
    norm = float(np.linalg.norm(s))
    if norm < BSN_EPS:
        return u.copy()
    return (u - s * (s @ u) / norm**2) / norm


def cross_entropy_loss_and_coeffs(scores, labels) -> tuple[float, np.ndarray]:
    """Mean logistic loss log(1 + exp(-y h)) and its per-score gradient."""
    s, y = _check_batch(scores, labels)
    n = s.size
    value = float(np.mean(np.logaddexp(0.0, -y * s)))
    coeffs = -y * expit(-y * s) / n
    return value, coeffs


def focal_loss_and_coeffs(scores, labels, alpha_hat: float, gamma_hat: float) -> tuple[float, np.ndarray]:
    """Mean alpha-balanced focal loss -a (1 - p_t)^g log(p_t) with p_t = sigmoid(y h)."""
    if not 0.0 < alpha_hat < 1.0:
        raise ValidationError(f"alpha_hat must be in (0,1), got {alpha_hat}")
    if gamma_hat < 0:
        raise ValidationError(f"gamma_hat must be >= 0, got {gamma_hat}")
    s, y = _check_batch(scores, labels)
    n = s.size
    t = y * s
    one_minus_pt = expit(-t)
    pt = expit(t)
    log_pt = -np.logaddexp(0.0, -t)
    value = float(np.mean(alpha_hat * one_minus_pt**gamma_hat * (-log_pt)))
    # d/dh of the per-sample loss; the gamma term vanishes identically at gamma=0
    per = alpha_hat * y * (
        gamma_hat * pt * one_minus_pt**gamma_hat * log_pt - one_minus_pt ** (gamma_hat + 1.0)
    )
    return value, per / n
