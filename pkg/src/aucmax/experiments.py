"""Scenario runner and ablations on the synthetic toy benchmarks.

A scenario fixes a data recipe (toy draw, imbalance, easy/noisy injection),
a model, and a list of losses, then trains every loss on every seed with an
identical dataset, initialization and batch order, so comparisons are paired.
Outputs are one metrics CSV per (loss, seed), a summary CSV, and SVG curves.
All cells are computed first and files are written by a single collector at
the end, so a failed run leaves no torn outputs.
"""

from __future__ import annotations

import os
import statistics
from dataclasses import dataclass, field, replace

import numpy as np

from .data import (
    Dataset,
    GaussianToySpec,
    dataset_hash,
    gen_gaussian_toy,
    inject_easy,
    inject_noise,
    make_imbalanced,
)
from .errors import ValidationError
from .losses import SurrogateSpec
from .metrics import auc_score
from .models import ModelSpec, forward_batch, init_params
from .optimizer import (
    PesgConfig,
    RunRecord,
    SgdConfig,
    pesg_train,
    sgd_train,
)
from .plots import line_plot, scatter_boundary_panels

__all__ = [
    "DataSetting",
    "LossSetting",
    "ScenarioConfig",
    "ScenarioSummary",
    "prepare_data",
    "run_scenario",
    "ablate_noise_easy",
    "ablate_alpha_constraint",
    "ablate_bsn",
    "ablate_margin",
    "toy_figure",
    "emit_plot",
    "records_to_csv",
    "read_metrics_csv",
    "METRICS_HEADER",
]

METRICS_HEADER = "epoch,iter,loss,train_auc,test_auc,a,b,alpha,eta"
_SEED_SALT = 0x5EED_A0C


def derive_seed(seed: int, purpose: int) -> int:
    """Deterministic, process-independent sub-seed for one purpose."""
    ss = np.random.SeedSequence(entropy=(_SEED_SALT, int(seed), int(purpose)))
    return int(ss.generate_state(1)[0])


@dataclass(frozen=True)
class DataSetting:
    mean_pos: tuple[float, float] = (1.5, 1.5)
    mean_neg: tuple[float, float] = (-1.5, -1.5)
    cov_scale: float = 1.0
    n_pos: int = 500
    n_neg: int = 500
    test_n_pos: int = 1000
    test_n_neg: int = 9000
    imratio: float | None = None
    noise_rate: float = 0.0
    easy_frac: float = 0.0
    # CE pretrain used only to score removed positives for easy injection
    scorer_sgd: SgdConfig = field(default_factory=lambda: SgdConfig(lr=0.05, epochs=5))


@dataclass(frozen=True)
class LossSetting:
    label: str
    kind: str
    m: float = 0.5
    focal_alpha: float = 0.25
    focal_gamma: float = 2.0
    bsn: bool = False
    bsn_exact: bool = True
    pesg: PesgConfig = field(default_factory=PesgConfig)
    sgd: SgdConfig = field(default_factory=SgdConfig)

    def surrogate(self, p: float) -> SurrogateSpec:
        return SurrogateSpec(
            kind=self.kind, p=p, m=self.m,
            focal_alpha=self.focal_alpha, focal_gamma=self.focal_gamma,
            bsn=self.bsn, bsn_exact=self.bsn_exact,
        )


def auc_square(label="auc_square", **kw) -> LossSetting:
    kw.setdefault("pesg", PesgConfig(project_alpha=False))
    return LossSetting(label=label, kind="auc_square", **kw)


def auc_margin(label="auc_margin", m=0.5, **kw) -> LossSetting:
    return LossSetting(label=label, kind="auc_margin", m=m, **kw)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    data: DataSetting
    model_kind: str = "linear"       # linear | mlp
    d_hidden: int = 16
    elu_alpha: float = 1.0
    init_scale: float = 0.1
    losses: tuple[LossSetting, ...] = ()
    epochs: int = 30
    batch_size: int = 64
    seeds: tuple[int, ...] = (0,)
    outputs: str | None = None
    # when set, every loss in a seed cell starts from the same CE model
    # trained with this config on the cell's (post-injection) training set
    warm_start: SgdConfig | None = None

    def __post_init__(self):
        if not self.seeds:
            raise ValidationError("scenario needs at least one seed")
        labels = [ls.label for ls in self.losses]
        if len(set(labels)) != len(labels):
            raise ValidationError(f"duplicate loss labels in scenario: {labels}")

    def model_spec(self) -> ModelSpec:
        if self.model_kind == "linear":
            return ModelSpec("linear", 2)
        return ModelSpec("mlp", 2, self.d_hidden, self.elu_alpha)


@dataclass
class CellResult:
    loss_label: str
    seed: int
    final_test_auc: float
    data_hash: str
    records: list[RunRecord]


@dataclass
class ScenarioSummary:
    name: str
    cells: list[CellResult]

    def by_loss(self) -> dict[str, list[CellResult]]:
        out: dict[str, list[CellResult]] = {}
        for cell in self.cells:
            out.setdefault(cell.loss_label, []).append(cell)
        return out

    def stats(self) -> dict[str, tuple[float, float]]:
        """label -> (mean, std) of final test AUC over seeds (std 0 for one seed)."""
        result = {}
        for label, cells in self.by_loss().items():
            finals = [c.final_test_auc for c in cells]
            std = statistics.pstdev(finals) if len(finals) > 1 else 0.0
            result[label] = (statistics.mean(finals), std)
        return result

    def as_text(self) -> str:
        lines = [f"scenario {self.name}: final test AUC over {self._n_seeds()} seed(s)"]
        for label, (mean, std) in sorted(self.stats().items()):
            lines.append(f"  {label:<16} {mean:.4f} +/- {std:.4f}")
        return "\n".join(lines)

    def _n_seeds(self) -> int:
        return len({c.seed for c in self.cells})


def prepare_data(setting: DataSetting, seed: int, model_for_scoring: ModelSpec | None = None
                 ) -> tuple[Dataset, Dataset]:
    """Build the (train, test) pair for one seed.

    Pipeline: toy draw -> imbalance -> easy injection (scored by a small CE
    pretrain on the imbalanced set) -> noise injection. The noise pool is the
    removed positives not re-added as easy samples.
    """
    train = gen_gaussian_toy(GaussianToySpec(
        mean_pos=setting.mean_pos, mean_neg=setting.mean_neg,
        cov_scale=setting.cov_scale, n_pos=setting.n_pos, n_neg=setting.n_neg,
        seed=derive_seed(seed, 1),
    ))
    test = gen_gaussian_toy(GaussianToySpec(
        mean_pos=setting.mean_pos, mean_neg=setting.mean_neg,
        cov_scale=setting.cov_scale, n_pos=setting.test_n_pos, n_neg=setting.test_n_neg,
        seed=derive_seed(seed, 2),
    ))

    removed = None
    if setting.imratio is not None:
        train, removed = make_imbalanced(train, setting.imratio, derive_seed(seed, 3))

    if setting.easy_frac > 0:
        if removed is None or len(removed) == 0:
            raise ValidationError("easy injection needs removed positives (set imratio)")
        scorer = model_for_scoring or ModelSpec("mlp", 2, 8, 1.0)
        params0 = init_params(scorer, derive_seed(seed, 4), 0.1)
        ce = SurrogateSpec("cross_entropy", p=train.p)
        pre_params, _ = sgd_train(scorer, params0, train, ce, setting.scorer_sgd,
                                  derive_seed(seed, 5))
        scores = forward_batch(scorer, pre_params, removed.X)
        k = int(setting.easy_frac * len(removed))
        top = np.argsort(-scores, kind="stable")[:k]
        train = inject_easy(train, removed, scores, setting.easy_frac)
        rest = np.setdiff1d(np.arange(len(removed)), top)
        removed = removed.subset(rest)

    if setting.noise_rate > 0:
        if removed is None or len(removed) == 0:
            raise ValidationError("noise injection needs removed positives (set imratio)")
        train = inject_noise(train, removed, setting.noise_rate, derive_seed(seed, 6))
    return train, test


def _train_one(model_spec: ModelSpec, params0: np.ndarray, train: Dataset, test: Dataset,
               setting: LossSetting, epochs: int, batch_size: int, seed: int
               ) -> list[RunRecord]:
    """Train one loss from the given start; batch order depends only on ``seed``."""
    batch_seed = derive_seed(seed, 11)
    spec = setting.surrogate(train.p)
    if setting.kind in ("auc_square", "auc_margin"):
        _, _, records = pesg_train(model_spec, params0.copy(), train, spec, setting.pesg,
                                   epochs, batch_size, batch_seed, test)
    else:
        sgd_cfg = replace(setting.sgd, epochs=epochs, batch_size=batch_size)
        _, records = sgd_train(model_spec, params0.copy(), train, spec, sgd_cfg,
                               batch_seed, test)
    return records


def _cell_start(cfg: ScenarioConfig, model_spec: ModelSpec, train: Dataset, seed: int
                ) -> np.ndarray:
    params0 = init_params(model_spec, derive_seed(seed, 10), cfg.init_scale)
    if cfg.warm_start is None:
        return params0
    ce = SurrogateSpec("cross_entropy", p=train.p)
    warm, _ = sgd_train(model_spec, params0, train, ce, cfg.warm_start,
                        derive_seed(seed, 12))
    return warm


def run_scenario(cfg: ScenarioConfig) -> ScenarioSummary:
    if not cfg.losses:
        raise ValidationError("scenario has no losses to run")
    model_spec = cfg.model_spec()
    cells: list[CellResult] = []
    for seed in cfg.seeds:
        train, test = prepare_data(cfg.data, seed)
        dhash = dataset_hash(train)
        params0 = _cell_start(cfg, model_spec, train, seed)
        for setting in cfg.losses:
            records = _train_one(model_spec, params0, train, test, setting,
                                 cfg.epochs, cfg.batch_size, seed)
            final = records[-1].test_auc if records else float("nan")
            cells.append(CellResult(setting.label, seed, final, dhash, records))
    summary = ScenarioSummary(cfg.name, cells)
    if cfg.outputs:
        write_outputs(cfg, summary)
    return summary


# --- output files -------------------------------------------------------------


def records_to_csv(records: list[RunRecord]) -> str:
    lines = [METRICS_HEADER]
    for r in records:
        lines.append(
            f"{r.epoch},{r.iter},{r.loss!r},{r.train_auc!r},{r.test_auc!r},"
            f"{r.a!r},{r.b!r},{r.alpha!r},{r.eta!r}"
        )
    return "\n".join(lines) + "\n"


def read_metrics_csv(path) -> list[RunRecord]:
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != METRICS_HEADER:
        raise ValidationError(f"{path}: missing metrics header")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != 9:
            raise ValidationError(f"{path}:{lineno}: expected 9 columns")
        records.append(RunRecord(
            epoch=int(cells[0]), iter=int(cells[1]), loss=float(cells[2]),
            train_auc=float(cells[3]), test_auc=float(cells[4]),
            a=float(cells[5]), b=float(cells[6]), alpha=float(cells[7]),
            eta=float(cells[8]),
        ))
    return records


def write_outputs(cfg: ScenarioConfig, summary: ScenarioSummary) -> list[str]:
    os.makedirs(cfg.outputs, exist_ok=True)
    written = []
    for cell in summary.cells:
        path = os.path.join(cfg.outputs, f"{cfg.name}_{cell.loss_label}_s{cell.seed}.csv")
        with open(path, "w", encoding="ascii") as fh:
            fh.write(records_to_csv(cell.records))
        written.append(path)
    spath = os.path.join(cfg.outputs, f"{cfg.name}_summary.csv")
    with open(spath, "w", encoding="ascii") as fh:
        fh.write("scenario,loss,seed,final_test_auc,dataset_hash\n")
        for cell in summary.cells:
            fh.write(f"{cfg.name},{cell.loss_label},{cell.seed},"
                     f"{cell.final_test_auc!r},{cell.data_hash}\n")
    written.append(spath)
    # the full scenario config, so any run can be regenerated bit-identically
    cpath = os.path.join(cfg.outputs, f"{cfg.name}_config.txt")
    with open(cpath, "w", encoding="ascii") as fh:
        fh.write(repr(cfg) + "\n")
    written.append(cpath)
    return written


def emit_plot(records_by_label: dict[str, list[RunRecord]], kind: str = "auc_vs_epoch") -> str:
    """SVG curve of test AUC or alpha against training epoch."""
    if not records_by_label or any(not recs for recs in records_by_label.values()):
        raise ValidationError("emit_plot needs non-empty record lists")
    if kind == "auc_vs_epoch":
        attr, ylabel = "test_auc", "test AUC"
    elif kind == "alpha_vs_epoch":
        attr, ylabel = "alpha", "alpha"
    else:
        raise ValidationError(f"unknown plot kind {kind!r}")
    series = [
        (label, [r.epoch for r in recs], [getattr(r, attr) for r in recs])
        for label, recs in sorted(records_by_label.items())
    ]
    return line_plot(series, xlabel="epoch", ylabel=ylabel, title=kind)


# --- ablations ----------------------------------------------------------------


def ablate_noise_easy(base: ScenarioConfig, noise_rates, easy_fracs
                      ) -> dict[tuple[float, float], ScenarioSummary]:
    """Full (noise rate x easy fraction) grid for the losses in ``base``."""
    if base.data.imratio is None:
        raise ValidationError("noise/easy ablation needs an imbalanced base (set imratio)")
    out = {}
    for rate in noise_rates:
        for frac in easy_fracs:
            name = f"{base.name}_n{rate:g}_e{frac:g}"
            cfg = replace(base, name=name,
                          data=replace(base.data, noise_rate=rate, easy_frac=frac))
            out[(rate, frac)] = run_scenario(cfg)
    if base.outputs:
        _write_grid_curves(base, out)
    return out


def _write_grid_curves(base: ScenarioConfig, grid) -> None:
    os.makedirs(base.outputs, exist_ok=True)
    for (rate, frac), summary in grid.items():
        per_label: dict[str, list[RunRecord]] = {}
        for cell in summary.cells:
            # plot the first seed's curve per loss; summaries carry the rest
            per_label.setdefault(cell.loss_label, cell.records)
        svg = emit_plot(per_label, "auc_vs_epoch")
        path = os.path.join(base.outputs, f"{summary.name}_curves.svg")
        with open(path, "w", encoding="ascii") as fh:
            fh.write(svg)


def ablate_alpha_constraint(cfg: ScenarioConfig) -> ScenarioSummary:
    """Same margin run with and without the alpha >= 0 projection."""
    margin = [ls for ls in cfg.losses if ls.kind == "auc_margin"]
    if not margin:
        raise ValidationError("alpha-constraint ablation needs an auc_margin loss")
    ls = margin[0]
    pair = (
        replace(ls, label=f"{ls.label}_proj", pesg=replace(ls.pesg, project_alpha=True)),
        replace(ls, label=f"{ls.label}_noproj", pesg=replace(ls.pesg, project_alpha=False)),
    )
    summary = run_scenario(replace(cfg, name=f"{cfg.name}_alpha", losses=pair))
    if cfg.outputs:
        per_label = {}
        for cell in summary.cells:
            per_label.setdefault(cell.loss_label, cell.records)
        for kind in ("alpha_vs_epoch", "auc_vs_epoch"):
            path = os.path.join(cfg.outputs, f"{cfg.name}_alpha_{kind}.svg")
            with open(path, "w", encoding="ascii") as fh:
                fh.write(emit_plot(per_label, kind))
    return summary


def ablate_bsn(cfg: ScenarioConfig) -> ScenarioSummary:
    """Every AUC loss in the scenario, with and without batch score normalization."""
    auc_losses = [ls for ls in cfg.losses if ls.kind in ("auc_square", "auc_margin")]
    if not auc_losses:
        raise ValidationError("BSN ablation needs at least one AUC loss")
    variants = []
    for ls in auc_losses:
        variants.append(replace(ls, label=f"{ls.label}_bsn", bsn=True))
        variants.append(replace(ls, label=f"{ls.label}_raw", bsn=False))
    return run_scenario(replace(cfg, name=f"{cfg.name}_bsn", losses=tuple(variants)))


def ablate_margin(cfg: ScenarioConfig, margins=(0.1, 0.3, 0.5, 0.7, 1.0)) -> ScenarioSummary:
    """Sweep the margin hyperparameter of the auc_margin loss."""
    margin = [ls for ls in cfg.losses if ls.kind == "auc_margin"]
    if not margin:
        raise ValidationError("margin sweep needs an auc_margin loss")
    ls = margin[0]
    variants = tuple(replace(ls, label=f"{ls.label}_m{m:g}", m=m) for m in margins)
    return run_scenario(replace(cfg, name=f"{cfg.name}_margin", losses=variants))


# --- canonical desk-scale studies ---------------------------------------------
#
# Fixed protocols for the three robustness phenomena, shared by the scripts
# and the acceptance suite. Hyperparameters were picked once on these toys
# (step sizes keep the aux dynamics stable: eta * 2 p (1-p) well below 2).


def noise_robustness_scenario(seeds=tuple(range(10)), outputs=None) -> ScenarioConfig:
    """Noisy imbalanced toy: margin vs square, warm-started, BSN on.

    Blobs are close enough (2.8 sigma apart) that ranking is sensitive to
    corruption; both losses resume the same CE model so neither pays an
    inversion-recovery penalty, and the square loss's unreachable unit gap
    on normalized scores keeps it churning against the 5% label noise.
    """
    pesg_kw = dict(eta0=5.0, weight_decay=1e-4, decay_epochs=(30, 45), decay_factor=3.0)
    return ScenarioConfig(
        name="noise_robustness",
        data=DataSetting(mean_pos=(1.0, 1.0), mean_neg=(-1.0, -1.0),
                         n_pos=500, n_neg=500, imratio=0.01, noise_rate=0.05),
        model_kind="mlp", d_hidden=8,
        losses=(
            auc_square(bsn=True, pesg=PesgConfig(project_alpha=False, **pesg_kw)),
            auc_margin(m=0.3, bsn=True, pesg=PesgConfig(**pesg_kw)),
        ),
        epochs=60, batch_size=32, seeds=tuple(seeds), outputs=outputs,
        warm_start=SgdConfig(lr=0.1, momentum=0.9, weight_decay=1e-4,
                             epochs=40, batch_size=32),
    )


def alpha_constraint_scenario(seeds=tuple(range(10)), outputs=None) -> ScenarioConfig:
    """Easy-heavy toy (40% easy + 1% noisy, m = 0.1) for the projection ablation.

    The warm-started model separates the classes past the margin immediately,
    so the unconstrained dual dives negative and re-penalizes easy data.
    """
    return ScenarioConfig(
        name="alpha_constraint",
        data=DataSetting(n_pos=500, n_neg=500, imratio=0.01,
                         noise_rate=0.01, easy_frac=0.4),
        model_kind="mlp", d_hidden=8,
        losses=(auc_margin(
            m=0.1, bsn=True,
            pesg=PesgConfig(eta0=0.5, weight_decay=1e-4,
                            decay_epochs=(30, 45), decay_factor=3.0)),),
        epochs=60, batch_size=32, seeds=tuple(seeds), outputs=outputs,
        warm_start=SgdConfig(lr=0.1, momentum=0.9, weight_decay=1e-4,
                             epochs=40, batch_size=32),
    )


def two_stage_protocol() -> dict:
    """Shared settings for the two-stage vs from-scratch comparison."""
    return dict(
        data=DataSetting(n_pos=500, n_neg=500, imratio=0.01, noise_rate=0.05),
        model=ModelSpec("mlp", 2, 8, 1.0),
        margin=0.5,
        pesg=PesgConfig(eta0=0.1, weight_decay=1e-4,
                        decay_epochs=(15, 23), decay_factor=3.0),
        stage1=SgdConfig(lr=0.1, momentum=0.9, weight_decay=1e-4,
                         epochs=40, batch_size=64),
        epochs=30, batch_size=64,
    )


# --- the six-panel toy figure ---------------------------------------------------


def toy_figure(cfg: ScenarioConfig, easy_frac: float = 0.2, noise_rate: float = 0.05,
               boundary_tol: float = 1e-4) -> str:
    """Decision boundaries before/after easy and noisy injection, per AUC loss.

    Row per loss (square on top, margin below); columns: pretrained CE model,
    retrained on easy-augmented data, retrained on noise-injected data.
    Returns the SVG text; deterministic for a fixed config.
    """
    model_spec = cfg.model_spec()
    if model_spec.kind != "mlp" or model_spec.d_in != 2:
        raise ValidationError("toy figure needs a 2-D mlp model")
    if cfg.data.imratio is None:
        raise ValidationError("toy figure needs an imbalanced base (set imratio)")
    seed = cfg.seeds[0]
    base_setting = replace(cfg.data, noise_rate=0.0, easy_frac=0.0)
    train, _ = prepare_data(base_setting, seed)
    easy_train, _ = prepare_data(replace(cfg.data, noise_rate=0.0, easy_frac=easy_frac),
                                 seed, model_for_scoring=model_spec)
    noisy_train, _ = prepare_data(replace(cfg.data, noise_rate=noise_rate, easy_frac=0.0),
                                  seed)

    params0 = init_params(model_spec, derive_seed(seed, 20), cfg.init_scale)
    ce = SurrogateSpec("cross_entropy", p=train.p)
    pre_cfg = SgdConfig(lr=0.05, epochs=max(cfg.epochs, 20), batch_size=cfg.batch_size)
    pre_params, _ = sgd_train(model_spec, params0, train, ce, pre_cfg, derive_seed(seed, 21))
    pre_auc = auc_score(forward_batch(model_spec, pre_params, train.X), train.y).auc

    losses = [ls for ls in cfg.losses if ls.kind in ("auc_square", "auc_margin")]
    if len(losses) < 2:
        losses = [auc_square(), auc_margin(m=0.5)]

    def retrain(setting: LossSetting, dataset: Dataset) -> np.ndarray:
        spec = setting.surrogate(dataset.p)
        params, _, _ = pesg_train(model_spec, pre_params.copy(), dataset, spec,
                                  setting.pesg, cfg.epochs, cfg.batch_size,
                                  derive_seed(seed, 22))
        return params

    def panel(title, dataset: Dataset, params, annotation=""):
        return {
            "title": title,
            "X": dataset.X,
            "y": dataset.y,
            "noisy_mask": dataset.y_true != 0,
            "score_fn": lambda pts, p=params: forward_batch(model_spec, p, pts),
            "annotation": annotation,
        }

    rows = []
    for setting in losses[:2]:
        rows.append([
            panel("pretrained (CE)", train, pre_params, f"train AUC {pre_auc:.3f}"),
            panel(f"{setting.label} + easy", easy_train, retrain(setting, easy_train)),
            panel(f"{setting.label} + noisy", noisy_train, retrain(setting, noisy_train)),
        ])
    lim = max(abs(v) for v in (*cfg.data.mean_pos, *cfg.data.mean_neg)) + 3 * cfg.data.cov_scale
    return scatter_boundary_panels(rows, (-lim, lim), (-lim, lim), tol=boundary_tol)
