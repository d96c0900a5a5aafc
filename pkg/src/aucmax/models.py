"""Minimal differentiable scoring models with a flat parameter vector.

Two model families:

* ``linear``: score(x) = w . x, no bias term.
* ``mlp``: one hidden layer with ELU activation,
  score(x) = v . ELU(W x + b_h) + b_out.

Parameters live in a single 1-D float64 array with a fixed layout so model
files round-trip bit-exactly:

    linear: [w_0 .. w_{d_in-1}]
    mlp:    [W (row-major, d_hidden x d_in), b_h (d_hidden),
             v (d_hidden), b_out]

All functions are pure; gradients are hand-written vector-Jacobian products
(`backward_vjp`), checked against central finite differences in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "ModelSpec",
    "init_params",
    "forward",
    "forward_batch",
    "backward_vjp",
    "output_layer_slice",
    "save_model",
    "load_model",
]


@dataclass(frozen=True)
class ModelSpec:
    """Architecture description. ``d_hidden``/``elu_alpha`` only apply to mlp."""

    kind: str  # "linear" | "mlp"
    d_in: int
    d_hidden: int = 0
    elu_alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "mlp"):
            raise ValidationError(f"unknown model kind {self.kind!r}")
        if self.d_in < 1:
            raise ValidationError(f"d_in must be >= 1, got {self.d_in}")
        if self.kind == "mlp":
            if self.d_hidden < 1:
                raise ValidationError(f"mlp needs d_hidden >= 1, got {self.d_hidden}")
            if not self.elu_alpha > 0:
                raise ValidationError(f"elu_alpha must be > 0, got {self.elu_alpha}")

    @property
    def n_params(self) -> int:
        if self.kind == "linear":
            return self.d_in
        # hidden weights + hidden biases + output weights + output bias
        return self.d_in * self.d_hidden + self.d_hidden + self.d_hidden + 1


def init_params(spec: ModelSpec, seed: int, scale: float) -> np.ndarray:
    """Draw parameters i.i.d. uniform on [-scale, scale], deterministic per seed."""
    if scale < 0:
        raise ValidationError(f"scale must be >= 0, got {scale}")
    rng = np.random.default_rng(seed)
    return rng.uniform(-scale, scale, size=spec.n_params)


def _check_params(spec: ModelSpec, params: np.ndarray) -> np.ndarray:
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (spec.n_params,):
        raise ValidationError(
            f"expected {spec.n_params} parameters for {spec.kind}, got shape {params.shape}"
        )
    return params


def _unpack_mlp(spec: ModelSpec, params: np.ndarray):
    h, d = spec.d_hidden, spec.d_in
    W = params[: h * d].reshape(h, d)
    b_h = params[h * d : h * d + h]
    v = params[h * d + h : h * d + 2 * h]
    b_out = params[-1]
    return W, b_h, v, b_out


def _elu(z: np.ndarray, alpha: float) -> np.ndarray:
    return np.where(z > 0, z, alpha * np.expm1(np.minimum(z, 0.0)))


def _elu_grad(z: np.ndarray, alpha: float) -> np.ndarray:
    return np.where(z > 0, 1.0, alpha * np.exp(np.minimum(z, 0.0)))


def forward_batch(spec: ModelSpec, params: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Score every row of X; order-preserving."""
    params = _check_params(spec, params)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or (X.shape[0] > 0 and X.shape[1] != spec.d_in):
        raise ValidationError(
            f"expected batch of shape (n, {spec.d_in}), got {X.shape}"
        )
    if X.shape[0] == 0:
        return np.zeros(0)
    if spec.kind == "linear":
        return X @ params
    W, b_h, v, b_out = _unpack_mlp(spec, params)
    Z = X @ W.T + b_h
    return _elu(Z, spec.elu_alpha) @ v + b_out


def forward(spec: ModelSpec, params: np.ndarray, x: np.ndarray) -> float:
    """Score a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.d_in,):
        raise ValidationError(f"expected input of length {spec.d_in}, got shape {x.shape}")
    return float(forward_batch(spec, params, x[None, :])[0])


def backward_vjp(
    spec: ModelSpec, params: np.ndarray, X: np.ndarray, coeffs: np.ndarray
) -> np.ndarray:
    """Gradient of sum_i coeffs[i] * score(X[i]) with respect to the flat params."""
    params = _check_params(spec, params)
    X = np.asarray(X, dtype=np.float64)
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if X.ndim != 2 or coeffs.shape != (X.shape[0],):
        raise ValidationError(
            f"coeffs length {coeffs.shape} does not match batch shape {X.shape}"
        )
    if X.shape[0] == 0:
        return np.zeros(spec.n_params)
    if X.shape[1] != spec.d_in:
        raise ValidationError(f"expected batch of shape (n, {spec.d_in}), got {X.shape}")

    if spec.kind == "linear":
        return X.T @ coeffs

    W, b_h, v, b_out = _unpack_mlp(spec, params)
    Z = X @ W.T + b_h                     # (n, h)
    U = _elu(Z, spec.elu_alpha)           # (n, h)
    G = coeffs[:, None] * _elu_grad(Z, spec.elu_alpha) * v[None, :]  # d(sum)/dZ
    grad = np.empty(spec.n_params)
    h, d = spec.d_hidden, spec.d_in
    grad[: h * d] = (G.T @ X).reshape(-1)
    grad[h * d : h * d + h] = G.sum(axis=0)
    grad[h * d + h : h * d + 2 * h] = U.T @ coeffs
    grad[-1] = coeffs.sum()
    return grad


def output_layer_slice(spec: ModelSpec) -> slice:
    """Slice of the flat parameter vector holding the output weights and bias."""
    if spec.kind != "mlp":
        raise ValidationError("only the mlp model has a separate output layer")
    h, d = spec.d_hidden, spec.d_in
    return slice(h * d + h, spec.n_params)


# --- model file round-trip ------------------------------------------------
#
# Text format:
#   line 1: "linear <d_in>"  or  "mlp <d_in> <d_hidden> <elu_alpha>"
#   line 2: parameter count
#   then one parameter per line, >= 17 significant digits.


def save_model(path, spec: ModelSpec, params: np.ndarray) -> None:
    params = _check_params(spec, params)
    if spec.kind == "linear":
        header = f"linear {spec.d_in}"
    else:
        header = f"mlp {spec.d_in} {spec.d_hidden} {spec.elu_alpha!r}"
    lines = [header, str(spec.n_params)]
    lines.extend(f"{p:.17e}" for p in params)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> tuple[ModelSpec, np.ndarray]:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh.read().splitlines()]
    if len(lines) < 2:
        raise ValidationError(f"{path}: truncated model file")
    head = lines[0].split()
    try:
        if head[0] == "linear" and len(head) == 2:
            spec = ModelSpec("linear", int(head[1]))
        elif head[0] == "mlp" and len(head) == 4:
            spec = ModelSpec("mlp", int(head[1]), int(head[2]), float(head[3]))
        else:
            raise ValidationError(f"{path}: bad header {lines[0]!r}")
    except (ValueError, IndexError) as exc:
        raise ValidationError(f"{path}: bad header {lines[0]!r}") from exc
    try:
        count = int(lines[1])
    except ValueError as exc:
        raise ValidationError(f"{path}: bad parameter count {lines[1]!r}") from exc
    if count != spec.n_params:
        raise ValidationError(
            f"{path}: header implies {spec.n_params} parameters, file says {count}"
        )
    body = [ln for ln in lines[2:] if ln]
    if len(body) != count:
        raise ValidationError(f"{path}: expected {count} parameter lines, found {len(body)}")
    try:
        params = np.array([float(ln) for ln in body], dtype=np.float64)
    except ValueError as exc:
        raise ValidationError(f"{path}: unparseable parameter line") from exc
    if not np.all(np.isfinite(params)):
        raise ValidationError(f"{path}: non-finite parameter in file")
    return spec, params
