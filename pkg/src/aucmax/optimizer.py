"""Primal-dual training for the min-max AUC objectives, plus momentum SGD
for the pointwise baselines and the two-stage pretrain/retrain scheme.

PESG step, per iteration on the primal block v = (w, a, b) and dual alpha:

    v      <- v - eta * (grad_v + gamma * (v - v_ref)) - weight_decay * eta * v
    alpha  <- [alpha + eta * grad_alpha]_+        (projection optional)

v_ref is refreshed at every learning-rate decay point with the running
average of the primal iterates of the stage that just ended.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import NumericalError, ValidationError
from .losses import (
    AuxVars,
    MinMaxGrads,
    SurrogateSpec,
    batch_score_normalize,
    bsn_vjp,
    cross_entropy_loss_and_coeffs,
    focal_loss_and_coeffs,
    minmax_grads,
)
from .metrics import auc_score
from .models import ModelSpec, backward_vjp, forward_batch, init_params, output_layer_slice

__all__ = [
    "PesgConfig",
    "SgdConfig",
    "MinMaxState",
    "RunRecord",
    "pesg_step",
    "on_epoch_end",
    "pesg_train",
    "sgd_train",
    "two_stage_train",
    "from_scratch_pesg",
]


@dataclass(frozen=True)
class PesgConfig:
    eta0: float = 0.1
    gamma: float = 0.0            # proximal pull toward v_ref
    weight_decay: float = 1e-4
    decay_epochs: tuple[int, ...] = ()
    decay_factor: float = 10.0
    project_alpha: bool = True
    regularize_aux: bool = True   # apply gamma/weight_decay to (a, b) as well as w

    def __post_init__(self):
        if not self.eta0 > 0:
            raise ValidationError(f"eta0 must be > 0, got {self.eta0}")
        if self.gamma < 0 or self.weight_decay < 0:
            raise ValidationError("gamma and weight_decay must be >= 0")
        if not self.decay_factor > 1:
            raise ValidationError(f"decay_factor must be > 1, got {self.decay_factor}")
        if list(self.decay_epochs) != sorted(set(self.decay_epochs)):
            raise ValidationError("decay_epochs must be strictly increasing")


@dataclass(frozen=True)
class SgdConfig:
    lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 1e-4
    epochs: int = 10
    batch_size: int = 64


@dataclass
class MinMaxState:
    params: np.ndarray
    aux: AuxVars
    eta: float
    ref_params: np.ndarray = None
    ref_a: float = 0.0
    ref_b: float = 0.0
    sum_params: np.ndarray = None
    sum_a: float = 0.0
    sum_b: float = 0.0
    stage_count: int = 0
    n_decays: int = 0
    t: int = 0  # global iteration counter

    def __post_init__(self):
        if self.ref_params is None:
            self.ref_params = self.params.copy()
            self.ref_a = self.aux.a
            self.ref_b = self.aux.b
        if self.sum_params is None:
            self.sum_params = np.zeros_like(self.params)


@dataclass(frozen=True)
class RunRecord:
    epoch: int
    iter: int
    loss: float
    train_auc: float
    test_auc: float
    a: float
    b: float
    alpha: float
    eta: float


def _require_finite(name: str, value) -> None:
    if not np.all(np.isfinite(value)):
        raise NumericalError(f"non-finite {name} encountered; aborting run")


def pesg_step(state: MinMaxState, model_grad: np.ndarray, grads: MinMaxGrads,
              cfg: PesgConfig) -> MinMaxState:
    """One primal-descent / dual-ascent update, in place."""
    _require_finite("model gradient", model_grad)
    _require_finite("aux gradients", [grads.g_a, grads.g_b, grads.g_alpha])
    eta = state.eta

    with np.errstate(over="ignore", invalid="ignore"):
        w = state.params
        w -= eta * (model_grad + cfg.gamma * (w - state.ref_params)) + cfg.weight_decay * eta * w
        _require_finite("updated model parameters", w)

        a, b = np.float64(state.aux.a), np.float64(state.aux.b)
        if cfg.regularize_aux:
            a -= eta * (grads.g_a + cfg.gamma * (a - state.ref_a)) + cfg.weight_decay * eta * a
            b -= eta * (grads.g_b + cfg.gamma * (b - state.ref_b)) + cfg.weight_decay * eta * b
        else:
            a -= eta * grads.g_a
            b -= eta * grads.g_b
        alpha = np.float64(state.aux.alpha) + eta * grads.g_alpha
    if cfg.project_alpha:
        alpha = max(0.0, alpha)
    _require_finite("updated aux variables", [a, b, alpha])
    state.aux = AuxVars(a=float(a), b=float(b), alpha=float(alpha))

    state.sum_params += w
    state.sum_a += a
    state.sum_b += b
    state.stage_count += 1
    state.t += 1
    return state


def on_epoch_end(state: MinMaxState, epoch: int, cfg: PesgConfig) -> MinMaxState:
    """Decay the step size and roll v_ref over to the finished stage's average."""
    if epoch < 1:
        raise ValidationError(f"epoch must be >= 1, got {epoch}")
    if epoch not in cfg.decay_epochs:
        return state
    state.n_decays += 1
    state.eta = cfg.eta0 / cfg.decay_factor**state.n_decays
    if state.stage_count > 0:
        state.ref_params = state.sum_params / state.stage_count
        state.ref_a = state.sum_a / state.stage_count
        state.ref_b = state.sum_b / state.stage_count
    state.sum_params = np.zeros_like(state.params)
    state.sum_a = 0.0
    state.sum_b = 0.0
    state.stage_count = 0
    return state


def _check_train_inputs(data: Dataset, batch_size: int) -> None:
    if data.n_pos == 0 or data.n_neg == 0:
        raise ValidationError("training set must contain both classes")
    if batch_size < 2:
        raise ValidationError(f"batch_size must be >= 2, got {batch_size}")


def _epoch_record(epoch, t, loss, model_spec, params, train, test, aux, eta) -> RunRecord:
    train_auc = auc_score(forward_batch(model_spec, params, train.X), train.y).auc
    if test is not None:
        test_auc = auc_score(forward_batch(model_spec, params, test.X), test.y).auc
    else:
        test_auc = train_auc
    return RunRecord(
        epoch=epoch, iter=t, loss=float(loss), train_auc=train_auc, test_auc=test_auc,
        a=float(aux.a), b=float(aux.b), alpha=float(aux.alpha), eta=float(eta),
    )


def pesg_train(
    model_spec: ModelSpec,
    params: np.ndarray,
    data: Dataset,
    surrogate: SurrogateSpec,
    cfg: PesgConfig,
    epochs: int,
    batch_size: int,
    seed: int,
    test_data: Dataset | None = None,
) -> tuple[np.ndarray, AuxVars, list[RunRecord]]:
    """Shuffled mini-batch PESG; fully deterministic per seed.

    Mini-batches that happen to contain a single class are still processed:
    the missing class's loss terms vanish but the dual still moves.
    """
    if surrogate.kind not in ("auc_square", "auc_margin"):
        raise ValidationError(f"pesg_train needs an AUC surrogate, got {surrogate.kind!r}")
    _check_train_inputs(data, batch_size)
    params = np.array(params, dtype=np.float64, copy=True)
    state = MinMaxState(params=params, aux=AuxVars(), eta=cfg.eta0)
    records: list[RunRecord] = []
    rng = np.random.default_rng(seed)
    n = len(data)

    for epoch in range(1, epochs + 1):
        order = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            Xb, yb = data.X[idx], data.y[idx]
            try:
                raw = forward_batch(model_spec, state.params, Xb)
                _require_finite("batch scores", raw)
                scores = batch_score_normalize(raw) if surrogate.bsn else raw
                with np.errstate(over="ignore", invalid="ignore"):
                    g = minmax_grads(scores, yb, state.aux, surrogate)
                coeffs = g.g_coeffs
                if surrogate.bsn:
                    if surrogate.bsn_exact:
                        coeffs = bsn_vjp(raw, coeffs)
                    else:
                        norm = max(float(np.linalg.norm(raw)), 1e-12)
                        coeffs = coeffs / norm
                model_grad = backward_vjp(model_spec, state.params, Xb, coeffs)
                pesg_step(state, model_grad, g, cfg)
            except NumericalError as exc:
                raise NumericalError(f"epoch {epoch}, iteration {state.t}: {exc}") from exc
            loss_sum += g.value * idx.size
        records.append(
            _epoch_record(epoch, state.t, loss_sum / n, model_spec, state.params,
                          data, test_data, state.aux, state.eta)
        )
        on_epoch_end(state, epoch, cfg)
    return state.params, state.aux, records


def sgd_train(
    model_spec: ModelSpec,
    params: np.ndarray,
    data: Dataset,
    surrogate: SurrogateSpec,
    cfg: SgdConfig,
    seed: int,
    test_data: Dataset | None = None,
) -> tuple[np.ndarray, list[RunRecord]]:
    """Momentum SGD on cross-entropy or focal loss; deterministic per seed."""
    if surrogate.kind not in ("cross_entropy", "focal"):
        raise ValidationError(f"sgd_train needs cross_entropy or focal, got {surrogate.kind!r}")
    _check_train_inputs(data, cfg.batch_size)
    params = np.array(params, dtype=np.float64, copy=True)
    velocity = np.zeros_like(params)
    records: list[RunRecord] = []
    rng = np.random.default_rng(seed)
    n = len(data)
    t = 0

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            Xb, yb = data.X[idx], data.y[idx]
            scores = forward_batch(model_spec, params, Xb)
            _require_finite("batch scores", scores)
            if surrogate.kind == "cross_entropy":
                value, coeffs = cross_entropy_loss_and_coeffs(scores, yb)
            else:
                value, coeffs = focal_loss_and_coeffs(
                    scores, yb, surrogate.focal_alpha, surrogate.focal_gamma
                )
            grad = backward_vjp(model_spec, params, Xb, coeffs) + cfg.weight_decay * params
            velocity = cfg.momentum * velocity + grad
            params -= cfg.lr * velocity
            if not np.all(np.isfinite(params)):
                raise NumericalError(
                    f"epoch {epoch}, iteration {t}: non-finite model parameters"
                )
            loss_sum += value * idx.size
            t += 1
        records.append(
            _epoch_record(epoch, t, loss_sum / n, model_spec, params,
                          data, test_data, AuxVars(), cfg.lr)
        )
    return params, records


def two_stage_train(
    model_spec: ModelSpec,
    data: Dataset,
    stage1: SgdConfig,
    surrogate: SurrogateSpec,
    stage2: PesgConfig,
    stage2_epochs: int,
    stage2_batch_size: int,
    seed: int,
    init_scale: float = 0.1,
    test_data: Dataset | None = None,
) -> tuple[np.ndarray, AuxVars, list[RunRecord]]:
    """Cross-entropy pretraining, then AUC maximization over all parameters
    with the output layer freshly re-drawn. Requires a layered (mlp) model."""
    if model_spec.kind != "mlp":
        raise ValidationError("two-stage training needs an mlp (no layer split in linear)")
    seeds = np.random.SeedSequence(seed).generate_state(4)
    params0 = init_params(model_spec, int(seeds[0]), init_scale)
    ce_spec = SurrogateSpec("cross_entropy", p=surrogate.p)
    pre_params, pre_records = sgd_train(
        model_spec, params0, data, ce_spec, stage1, int(seeds[1]), test_data
    )

    params1 = pre_params.copy()
    sl = output_layer_slice(model_spec)
    params1[sl] = init_params(model_spec, int(seeds[2]), init_scale)[sl]

    final, aux, records = pesg_train(
        model_spec, params1, data, surrogate, stage2,
        stage2_epochs, stage2_batch_size, int(seeds[3]), test_data,
    )
    return final, aux, pre_records + records


def from_scratch_pesg(
    model_spec: ModelSpec,
    data: Dataset,
    surrogate: SurrogateSpec,
    cfg: PesgConfig,
    epochs: int,
    batch_size: int,
    seed: int,
    init_scale: float = 0.1,
    test_data: Dataset | None = None,
) -> tuple[np.ndarray, AuxVars, list[RunRecord]]:
    """PESG from a fresh random initialization (the single-stage baseline)."""
    seeds = np.random.SeedSequence(seed).generate_state(4)
    params0 = init_params(model_spec, int(seeds[0]), init_scale)
    return pesg_train(
        model_spec, params0, data, surrogate, cfg, epochs, batch_size,
        int(seeds[3]), test_data,
    )
