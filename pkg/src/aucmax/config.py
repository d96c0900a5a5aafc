"""Flat ``key = value`` run configuration.

One assignment per line, ``#`` starts a comment, keys are namespaced
(``data.imratio``, ``optim.eta0``, ...). Unknown keys are errors so typos
cannot silently fall back to defaults. The full key table lives in KEYS and
is reproduced in the README.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset, GaussianToySpec, gen_gaussian_toy, load_csv
from .errors import ValidationError
from .losses import SurrogateSpec
from .models import ModelSpec
from .optimizer import PesgConfig, SgdConfig

__all__ = ["parse_config", "load_config", "RunConfig", "KEYS"]


def _parse_bool(s: str) -> bool:
    low = s.lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_int_list(s: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in s.split(",") if tok.strip())


def _parse_float_list(s: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in s.split(",") if tok.strip())


def _parse_pair(s: str) -> tuple[float, float]:
    vals = _parse_float_list(s)
    if len(vals) != 2:
        raise ValueError(f"expected two comma-separated floats, got {s!r}")
    return vals


# key -> (parser, default). None defaults mean "derived elsewhere".
KEYS = {
    "data.kind": (str, "gaussian_toy"),           # gaussian_toy | csv
    "data.path": (str, None),                     # csv source (data.kind = csv)
    "data.test_path": (str, None),                # csv test set (optional)
    "data.n_pos": (int, 500),
    "data.n_neg": (int, 500),
    "data.mean_pos": (_parse_pair, (1.5, 1.5)),
    "data.mean_neg": (_parse_pair, (-1.5, -1.5)),
    "data.cov_scale": (float, 1.0),
    "data.imratio": (float, None),                # omit for no rebalancing
    "data.noise_rate": (float, 0.0),
    "data.easy_frac": (float, 0.0),
    "data.test_n_pos": (int, 1000),
    "data.test_n_neg": (int, 9000),
    "model.kind": (str, "linear"),                # linear | mlp
    "model.d_hidden": (int, 16),
    "model.elu_alpha": (float, 1.0),
    "model.init_scale": (float, 0.1),
    "loss.kind": (str, "auc_margin"),             # cross_entropy | focal | auc_square | auc_margin
    "loss.m": (float, 0.5),
    "loss.focal_alpha": (float, 0.25),
    "loss.focal_gamma": (float, 2.0),
    "loss.bsn": (_parse_bool, False),
    "loss.bsn_exact": (_parse_bool, True),
    "optim.eta0": (float, 0.1),
    "optim.gamma": (float, 0.0),
    "optim.weight_decay": (float, 1e-4),
    "optim.decay_epochs": (_parse_int_list, ()),
    "optim.decay_factor": (float, 10.0),
    "optim.project_alpha": (_parse_bool, None),   # default: margin yes, square no
    "optim.regularize_aux": (_parse_bool, True),
    "optim.lr": (float, 0.1),                     # SGD path (cross_entropy/focal)
    "optim.momentum": (float, 0.9),
    "train.epochs": (int, 30),
    "train.batch_size": (int, 64),
    "ablate.kind": (str, "margin"),               # margin | noise_easy | alpha_constraint | bsn
    "ablate.margins": (_parse_float_list, (0.1, 0.3, 0.5, 0.7, 1.0)),
    "ablate.noise_rates": (_parse_float_list, (0.01, 0.05)),
    "ablate.easy_fracs": (_parse_float_list, (0.1, 0.2)),
    "run.name": (str, "run"),
    "run.seeds": (_parse_int_list, (0,)),
    "plot.kind": (str, "auc_vs_epoch"),           # auc_vs_epoch | alpha_vs_epoch
}


def parse_config(text: str, source: str = "<config>") -> dict:
    values = {key: default for key, (_, default) in KEYS.items()}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in KEYS:
            raise ValidationError(f"{source}:{lineno}: unknown key {key!r}")
        parser, _ = KEYS[key]
        try:
            values[key] = parser(value)
        except (ValueError, TypeError) as exc:
            raise ValidationError(f"{source}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), source=str(path))


class RunConfig:
    """Typed view over a parsed config dict."""

    def __init__(self, values: dict):
        self.values = values

    def __getitem__(self, key):
        return self.values[key]

    def model_spec(self, d_in: int) -> ModelSpec:
        kind = self.values["model.kind"]
        if kind == "linear":
            return ModelSpec("linear", d_in)
        if kind == "mlp":
            return ModelSpec("mlp", d_in, self.values["model.d_hidden"],
                             self.values["model.elu_alpha"])
        raise ValidationError(f"model.kind must be linear or mlp, got {kind!r}")

    def surrogate(self, p: float) -> SurrogateSpec:
        return SurrogateSpec(
            kind=self.values["loss.kind"],
            p=p,
            m=self.values["loss.m"],
            focal_alpha=self.values["loss.focal_alpha"],
            focal_gamma=self.values["loss.focal_gamma"],
            bsn=self.values["loss.bsn"],
            bsn_exact=self.values["loss.bsn_exact"],
        )

    def pesg(self) -> PesgConfig:
        project = self.values["optim.project_alpha"]
        if project is None:
            project = self.values["loss.kind"] == "auc_margin"
        return PesgConfig(
            eta0=self.values["optim.eta0"],
            gamma=self.values["optim.gamma"],
            weight_decay=self.values["optim.weight_decay"],
            decay_epochs=self.values["optim.decay_epochs"],
            decay_factor=self.values["optim.decay_factor"],
            project_alpha=project,
            regularize_aux=self.values["optim.regularize_aux"],
        )

    def sgd(self) -> SgdConfig:
        return SgdConfig(
            lr=self.values["optim.lr"],
            momentum=self.values["optim.momentum"],
            weight_decay=self.values["optim.weight_decay"],
            epochs=self.values["train.epochs"],
            batch_size=self.values["train.batch_size"],
        )

    def train_dataset(self, seed: int) -> Dataset:
        """Base training draw before any imbalance/injection steps."""
        if self.values["data.kind"] == "csv":
            path = self.values["data.path"]
            if not path:
                raise ValidationError("data.kind = csv requires data.path")
            return load_csv(path)
        if self.values["data.kind"] != "gaussian_toy":
            raise ValidationError(f"unknown data.kind {self.values['data.kind']!r}")
        return gen_gaussian_toy(self.toy_spec(seed))

    def toy_spec(self, seed: int, test: bool = False) -> GaussianToySpec:
        return GaussianToySpec(
            mean_pos=tuple(self.values["data.mean_pos"]),
            mean_neg=tuple(self.values["data.mean_neg"]),
            cov_scale=self.values["data.cov_scale"],
            n_pos=self.values["data.test_n_pos" if test else "data.n_pos"],
            n_neg=self.values["data.test_n_neg" if test else "data.n_neg"],
            seed=seed,
        )

    def test_dataset(self, seed: int) -> Dataset | None:
        if self.values["data.kind"] == "csv":
            path = self.values["data.test_path"]
            return load_csv(path) if path else None
        # test draws use an offset seed stream so they never overlap training
        return gen_gaussian_toy(self.toy_spec(int(np.uint32(seed) + 990001), test=True))
