"""Independent oracles and desk-checkable walkthroughs.

Everything here deliberately avoids the production code paths it checks:
finite differences instead of hand-written gradients, O(n^2) pair counting
instead of rank sums, grid search around the closed-form saddle instead of
the training-time update rules, and the published 1-D walkthrough arithmetic
reproduced with its merged step constant.

``run_oracle_suite`` executes every check and backs the ``verify`` CLI
subcommand.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .losses import (
    AuxVars,
    SurrogateSpec,
    batch_score_normalize,
    bsn_vjp,
    cross_entropy_loss_and_coeffs,
    focal_loss_and_coeffs,
    margin_loss_value,
    minmax_grads,
    minmax_value,
    optimal_aux,
    pairwise_square_loss,
    square_loss_decomposition,
)
from .metrics import accuracy, auc_score

__all__ = [
    "finite_diff",
    "WalkthroughCase",
    "WalkthroughResult",
    "run_walkthrough",
    "brute_force_minmax",
    "auc_pair_count",
    "CheckResult",
    "run_oracle_suite",
    "format_check_table",
]


def finite_diff(fn, point, step: float = 1e-5) -> np.ndarray:
    """Central differences with per-coordinate step = step * (1 + |theta_i|)."""
    theta = np.asarray(point, dtype=np.float64).copy()
    grad = np.empty(theta.size)
    for i in range(theta.size):
        h = step * (1.0 + abs(theta[i]))
        orig = theta[i]
        theta[i] = orig + h
        f_plus = fn(theta)
        theta[i] = orig - h
        f_minus = fn(theta)
        theta[i] = orig
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise ValidationError(f"non-finite evaluation at coordinate {i}")
        grad[i] = (f_plus - f_minus) / (2.0 * h)
    return grad


# --- published 1-D walkthroughs ---------------------------------------------


@dataclass(frozen=True)
class WalkthroughCase:
    """One step of the 1-D linear-model analysis.

    The update folds all positive constants and the step size into
    ``merged_step``, so only the sign of the score-side factor matters.
    ``assume_margin_violated`` evaluates the margin dual on its
    gap-within-margin branch (alpha = m + b - a) without clipping, the regime
    the noisy-data analysis argues in.
    """

    loss: str  # "square" | "margin"
    w: float
    x: float
    y_observed: int
    a: float
    b: float
    merged_step: float = 0.1
    m: float = 1.0
    y_true: int | None = None
    assume_margin_violated: bool = False

    def __post_init__(self):
        if self.loss not in ("square", "margin"):
            raise ValidationError(f"loss must be 'square' or 'margin', got {self.loss!r}")
        if not self.merged_step > 0:
            raise ValidationError("merged_step must be > 0")
        if self.y_observed not in (-1, 1):
            raise ValidationError("y_observed must be +1 or -1")


@dataclass(frozen=True)
class WalkthroughResult:
    factor: float       # B = h - a - alpha (y=+1) or C = h - b + alpha (y=-1)
    alpha: float
    w_next: float
    score_next: float
    direction: str      # toward_correct | toward_wrong | neutral


def run_walkthrough(case: WalkthroughCase) -> WalkthroughResult:
    h = case.w * case.x
    if case.loss == "square":
        alpha = 1.0 + case.b - case.a
    elif case.assume_margin_violated:
        alpha = case.m + case.b - case.a
    else:
        alpha = max(0.0, case.m + case.b - case.a)

    if case.y_observed == 1:
        factor = h - case.a - alpha
    else:
        factor = h - case.b + alpha

    w_next = case.w - case.merged_step * np.sign(factor) * case.x
    score_next = w_next * case.x

    ref = case.y_true if case.y_true is not None else case.y_observed
    moved = score_next - h
    if moved == 0.0:
        direction = "neutral"
    elif (moved > 0) == (ref == 1):
        direction = "toward_correct"
    else:
        direction = "toward_wrong"
    return WalkthroughResult(
        factor=float(factor),
        alpha=float(alpha),
        w_next=float(w_next),
        score_next=float(score_next),
        direction=direction,
    )


# --- brute-force saddle value ------------------------------------------------


def _alpha_max(s, y, a, b, spec: SurrogateSpec) -> float:
    """Maximize the batch-mean objective over alpha for fixed (a, b)."""
    p, m = spec.p, spec.effective_margin
    k = float(np.mean(p * (1 - p) * m + p * s * (y < 0) - (1 - p) * s * (y > 0)))
    alpha = k / (p * (1 - p))
    if spec.kind == "auc_margin":
        alpha = max(0.0, alpha)
    return alpha


def brute_force_minmax(scores, labels, spec: SurrogateSpec, grid_radius: float = 0.5,
                       grid_points: int = 7) -> float:
    """Saddle value of the batch-mean min-max objective.

    Evaluates at the closed-form optimum and certifies it by scanning an
    (a, b) grid around it: no perturbed point, alpha-maximized, may fall
    below the closed-form value.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ValidationError("need both classes present")
    aux0 = optimal_aux(s[y > 0], s[y < 0],
                       loss="margin" if spec.kind == "auc_margin" else "square",
                       m=spec.effective_margin)
    alpha0 = _alpha_max(s, y, aux0.a, aux0.b, spec)
    value0 = minmax_value(s, y, AuxVars(aux0.a, aux0.b, alpha0), spec)

    offsets = np.linspace(-grid_radius, grid_radius, grid_points)
    for da in offsets:
        for db in offsets:
            a, b = aux0.a + da, aux0.b + db
            alpha = _alpha_max(s, y, a, b, spec)
            v = minmax_value(s, y, AuxVars(a, b, alpha), spec)
            if v < value0 - 1e-9 * (1.0 + abs(value0)):
                raise ValidationError(
                    f"closed-form point is not the (a,b) minimizer: {v} < {value0} at ({a},{b})"
                )
    return value0


def auc_pair_count(scores, labels, tie_policy: str = "half") -> float:
    """O(n^2) AUC by explicit pair enumeration; the oracle for auc_score."""
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    sp = s[y > 0]
    sn = s[y < 0]
    if sp.size == 0 or sn.size == 0:
        raise ValidationError("AUC needs at least one sample of each class")
    diff = sp[:, None] - sn[None, :]
    wins = float(np.sum(diff > 0))
    ties = float(np.sum(diff == 0))
    tie_credit = 0.5 if tie_policy == "half" else 1.0
    return (wins + tie_credit * ties) / (sp.size * sn.size)


# --- oracle suite -------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _rel_err(got, want) -> float:
    return abs(got - want) / (1.0 + abs(want))


def _random_scored_batch(rng, min_per_class=2, max_per_class=50, scale=2.0):
    n_pos = int(rng.integers(min_per_class, max_per_class + 1))
    n_neg = int(rng.integers(min_per_class, max_per_class + 1))
    sp = scale * rng.standard_normal(n_pos)
    sn = scale * rng.standard_normal(n_neg)
    scores = np.concatenate([sp, sn])
    labels = np.concatenate([np.ones(n_pos, dtype=int), -np.ones(n_neg, dtype=int)])
    return scores, labels


def check_decomposition(n_trials: int = 200, seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_trials):
        scores, labels = _random_scored_batch(rng)
        sp, sn = scores[labels > 0], scores[labels < 0]
        total = pairwise_square_loss(sp, sn)
        a1, a2, a3 = square_loss_decomposition(sp, sn)
        worst = max(worst, abs(total - (a1 + a2 + a3)) / (1.0 + abs(total)))
    return CheckResult(
        "decomposition_identity", worst <= 1e-12,
        f"max rel deviation {worst:.2e} over {n_trials} trials (tol 1e-12)",
        time.perf_counter() - t0,
    )


def check_minmax_equivalence(n_trials: int = 200, seed: int = 1) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_trials):
        scores, labels = _random_scored_batch(rng)
        p_emp = float(np.mean(labels > 0))
        m = float(rng.uniform(0.05, 1.5))
        sp, sn = scores[labels > 0], scores[labels < 0]

        mspec = SurrogateSpec("auc_margin", p=p_emp, m=m)
        aux = optimal_aux(sp, sn, loss="margin", m=m)
        got = minmax_value(scores, labels, aux, mspec)
        want = p_emp * (1 - p_emp) * margin_loss_value(sp, sn, m)
        worst = max(worst, _rel_err(got, want))

        sspec = SurrogateSpec("auc_square", p=p_emp)
        aux_s = optimal_aux(sp, sn, loss="square")
        got_s = minmax_value(scores, labels, aux_s, sspec)
        want_s = p_emp * (1 - p_emp) * pairwise_square_loss(sp, sn)
        worst = max(worst, _rel_err(got_s, want_s))
    return CheckResult(
        "minmax_equivalence", worst <= 1e-10,
        f"max rel deviation {worst:.2e} over {n_trials} trials (tol 1e-10)",
        time.perf_counter() - t0,
    )


def _minmax_fd_err(rng, spec: SurrogateSpec) -> float:
    """One random point: finite differences of the batch objective in
    (scores, a, b, alpha), optionally through BSN, vs the analytic bundle."""
    scores, labels = _random_scored_batch(rng, max_per_class=12)
    aux = AuxVars(*rng.standard_normal(3))
    n = scores.size

    def value_at(theta):
        s, rest = theta[:n], theta[n:]
        s_used = batch_score_normalize(s) if spec.bsn else s
        return minmax_value(s_used, labels, AuxVars(*rest), spec)

    theta0 = np.concatenate([scores, [aux.a, aux.b, aux.alpha]])
    fd = finite_diff(value_at, theta0)

    s_used = batch_score_normalize(scores) if spec.bsn else scores
    g = minmax_grads(s_used, labels, aux, spec)
    coeffs = bsn_vjp(scores, g.g_coeffs) if spec.bsn else g.g_coeffs
    analytic = np.concatenate([coeffs, [g.g_a, g.g_b, g.g_alpha]])
    denom = 1.0 + np.abs(fd)
    return float(np.max(np.abs(analytic - fd) / denom))


def check_gradients(points_per_case: int = 50, seed: int = 2, tol: float = 1e-5) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for kind, bsn in (("auc_margin", False), ("auc_margin", True),
                      ("auc_square", False), ("auc_square", True)):
        spec = SurrogateSpec(kind, p=0.3, m=0.7, bsn=bsn)
        for _ in range(points_per_case):
            worst = max(worst, _minmax_fd_err(rng, spec))
    for _ in range(points_per_case):
        scores, labels = _random_scored_batch(rng, max_per_class=12)
        _, coeffs = cross_entropy_loss_and_coeffs(scores, labels)
        fd = finite_diff(lambda s: cross_entropy_loss_and_coeffs(s, labels)[0], scores)
        worst = max(worst, float(np.max(np.abs(coeffs - fd) / (1.0 + np.abs(fd)))))
    for _ in range(points_per_case):
        scores, labels = _random_scored_batch(rng, max_per_class=12)
        _, coeffs = focal_loss_and_coeffs(scores, labels, 0.25, 2.0)
        fd = finite_diff(lambda s: focal_loss_and_coeffs(s, labels, 0.25, 2.0)[0], scores)
        worst = max(worst, float(np.max(np.abs(coeffs - fd) / (1.0 + np.abs(fd)))))
    return CheckResult(
        "gradient_fidelity", worst <= tol,
        f"max rel error {worst:.2e} across min-max/BSN/CE/focal (tol {tol:g})",
        time.perf_counter() - t0,
    )


def check_walkthroughs() -> CheckResult:
    t0 = time.perf_counter()
    failures = []

    def expect(tag, got, want, tol=1e-12):
        if abs(got - want) > tol:
            failures.append(f"{tag}: got {got!r}, want {want!r}")

    # easy positive, square loss: factor 0.5, w 1 -> 0.9, score decays
    r = run_walkthrough(WalkthroughCase("square", w=1.0, x=1.0, y_observed=1, a=0.5, b=-0.5))
    expect("sq_pos.factor", r.factor, 0.5)
    expect("sq_pos.w_next", r.w_next, 0.9)
    expect("sq_pos.score", r.score_next, 0.9)
    if r.direction != "toward_wrong":
        failures.append(f"sq_pos.direction: {r.direction}")

    # easy negative, square loss: factor -0.5, score rises
    r = run_walkthrough(WalkthroughCase("square", w=1.0, x=-1.0, y_observed=-1, a=0.5, b=-0.5))
    expect("sq_neg.factor", r.factor, -0.5)
    expect("sq_neg.w_next", r.w_next, 0.9)
    expect("sq_neg.score", r.score_next, -0.9)
    if r.direction != "toward_wrong":
        failures.append(f"sq_neg.direction: {r.direction}")

    # margin, wide gap (alpha clips to 0): both factors pull toward the class mean
    for x, want in ((0.75, -0.25), (1.25, 0.25)):
        r = run_walkthrough(WalkthroughCase("margin", w=1.0, x=x, y_observed=1,
                                            a=1.0, b=-0.5, m=1.0))
        expect(f"m_easy[{x}].factor", r.factor, want)
        expect(f"m_easy[{x}].alpha", r.alpha, 0.0)

    # margin, gap within m: misranked positive gets pushed up
    r = run_walkthrough(WalkthroughCase("margin", w=1.0, x=0.25, y_observed=1,
                                        a=0.0, b=-0.5, m=1.0))
    expect("m_tight.factor", r.factor, -0.25)
    expect("m_tight.w_next", r.w_next, 1.025)
    expect("m_tight.score", r.score_next, 0.25625)
    if r.direction != "toward_correct":
        failures.append(f"m_tight.direction: {r.direction}")

    # noisy true-positive observed as negative: square factor is exactly 1
    r = run_walkthrough(WalkthroughCase("square", w=1.0, x=0.25, y_observed=-1,
                                        a=0.25, b=-0.5, y_true=1))
    expect("noisy_sq.factor", r.factor, 1.0)
    if r.direction != "toward_wrong":
        failures.append(f"noisy_sq.direction: {r.direction}")

    # same sample under the margin loss: the wrong-direction factor equals m
    for m in (0.1, 0.5, 1.0):
        r = run_walkthrough(WalkthroughCase("margin", w=1.0, x=0.25, y_observed=-1,
                                            a=0.25, b=-0.5, m=m, y_true=1,
                                            assume_margin_violated=True))
        expect(f"noisy_m[{m}].factor", r.factor, m)
        if r.direction != "toward_wrong":
            failures.append(f"noisy_m[{m}].direction: {r.direction}")

    detail = "all published step values reproduced" if not failures else "; ".join(failures)
    return CheckResult("walkthroughs", not failures, detail, time.perf_counter() - t0)


def check_auc_ranksum(n_trials: int = 200, seed: int = 3) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    failures = []
    for trial in range(n_trials):
        scores, labels = _random_scored_batch(rng, max_per_class=30)
        if trial % 3 == 0:  # force ties
            scores = np.round(scores, 1)
        for policy in ("half", "geq"):
            fast = auc_score(scores, labels, tie_policy=policy).auc
            slow = auc_pair_count(scores, labels, tie_policy=policy)
            if abs(fast - slow) > 1e-12:
                failures.append(f"trial {trial} ({policy}): {fast} vs {slow}")

    # the 25-sample illustration: perfect ranking, two negatives over threshold
    pos = [0.9, 0.8, 0.7]
    neg = [0.6, 0.6] + [0.1 + 0.02 * i for i in range(20)]
    scores = np.array(pos + neg)
    labels = np.array([1] * 3 + [-1] * 22)
    if auc_score(scores, labels).auc != 1.0:
        failures.append("illustration AUC != 1.0")
    if abs(accuracy(scores, labels, 0.5) - 0.92) > 1e-12:
        failures.append("illustration accuracy != 0.92")
    detail = "rank-sum equals pair count" if not failures else "; ".join(failures[:3])
    return CheckResult("auc_ranksum_vs_pairs", not failures, detail, time.perf_counter() - t0)


def check_saddle_certificate(n_trials: int = 25, seed: int = 4) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    try:
        for _ in range(n_trials):
            scores, labels = _random_scored_batch(rng, max_per_class=20)
            p_emp = float(np.mean(labels > 0))
            sp, sn = scores[labels > 0], scores[labels < 0]
            m = float(rng.uniform(0.05, 1.2))

            v = brute_force_minmax(scores, labels, SurrogateSpec("auc_margin", p=p_emp, m=m))
            worst = max(worst, _rel_err(v, p_emp * (1 - p_emp) * margin_loss_value(sp, sn, m)))
            v = brute_force_minmax(scores, labels, SurrogateSpec("auc_square", p=p_emp))
            worst = max(worst, _rel_err(v, p_emp * (1 - p_emp) * pairwise_square_loss(sp, sn)))
    except ValidationError as exc:
        return CheckResult("saddle_certificate", False, str(exc), time.perf_counter() - t0)
    return CheckResult(
        "saddle_certificate", worst <= 1e-10,
        f"max rel deviation {worst:.2e} over {n_trials} trials (tol 1e-10)",
        time.perf_counter() - t0,
    )


def check_bsn() -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    failures = []
    for _ in range(50):
        s = rng.standard_normal(int(rng.integers(1, 40))) * 10 ** rng.uniform(-3, 3)
        out = batch_score_normalize(s)
        if abs(np.linalg.norm(out) - 1.0) > 1e-9:
            failures.append(f"norm {np.linalg.norm(out)}")
    if not np.array_equal(batch_score_normalize(np.zeros(4)), np.zeros(4)):
        failures.append("zero batch not passed through")
    detail = "unit norm everywhere" if not failures else "; ".join(failures[:3])
    return CheckResult("bsn_normalization", not failures, detail, time.perf_counter() - t0)


def run_oracle_suite() -> list[CheckResult]:
    return [
        check_decomposition(),
        check_minmax_equivalence(),
        check_gradients(),
        check_walkthroughs(),
        check_auc_ranksum(),
        check_saddle_certificate(),
        check_bsn(),
    ]


def format_check_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.name:<{width}}  {status}  [{r.seconds:6.2f}s]  {r.detail}")
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_fail}/{len(results)} checks passed")
    return "\n".join(lines)
