import numpy as np
import pytest

from aucmax.data import GaussianToySpec, gen_gaussian_toy, make_imbalanced
from aucmax.errors import NumericalError, ValidationError
from aucmax.losses import (
    AuxVars,
    MinMaxGrads,
    SurrogateSpec,
    minmax_grads,
    pairwise_square_loss,
)
from aucmax.models import ModelSpec, backward_vjp, forward_batch, init_params, output_layer_slice
from aucmax.optimizer import (
    MinMaxState,
    PesgConfig,
    SgdConfig,
    on_epoch_end,
    pesg_step,
    pesg_train,
    sgd_train,
    two_stage_train,
)


def _grads(g_coeffs=(0.0,), g_a=0.0, g_b=0.0, g_alpha=0.0, value=0.0):
    return MinMaxGrads(np.asarray(g_coeffs, dtype=float), g_a, g_b, g_alpha, value)


class TestPesgStep:
    def test_zero_step_changes_only_counters(self):
        state = MinMaxState(params=np.array([1.0, 2.0]), aux=AuxVars(0.3, -0.2, 0.1), eta=0.0)
        pesg_step(state, np.array([5.0, -5.0]), _grads(g_a=3.0, g_b=3.0, g_alpha=3.0),
                  PesgConfig(eta0=1.0))
        assert np.array_equal(state.params, [1.0, 2.0])
        assert (state.aux.a, state.aux.b, state.aux.alpha) == (0.3, -0.2, 0.1)
        assert state.t == 1 and state.stage_count == 1

    def test_reduces_to_plain_sgda(self):
        eta = 0.05
        w0 = np.array([1.0, -1.0])
        aux0 = AuxVars(0.2, -0.3, 0.4)
        state = MinMaxState(params=w0.copy(), aux=aux0, eta=eta)
        cfg = PesgConfig(eta0=eta, gamma=0.0, weight_decay=0.0, project_alpha=False)
        gw = np.array([0.5, 0.25])
        pesg_step(state, gw, _grads(g_a=1.0, g_b=-2.0, g_alpha=3.0), cfg)
        assert np.allclose(state.params, w0 - eta * gw)
        assert state.aux.a == pytest.approx(0.2 - eta * 1.0)
        assert state.aux.b == pytest.approx(-0.3 + eta * 2.0)
        assert state.aux.alpha == pytest.approx(0.4 + eta * 3.0)

    def test_projection_holds_alpha_at_zero(self):
        state = MinMaxState(params=np.zeros(1), aux=AuxVars(alpha=0.0), eta=0.1)
        cfg = PesgConfig(eta0=0.1, project_alpha=True)
        pesg_step(state, np.zeros(1), _grads(g_alpha=-5.0), cfg)
        assert state.aux.alpha == 0.0

    def test_without_projection_alpha_goes_negative(self):
        state = MinMaxState(params=np.zeros(1), aux=AuxVars(alpha=0.0), eta=0.1)
        cfg = PesgConfig(eta0=0.1, project_alpha=False)
        pesg_step(state, np.zeros(1), _grads(g_alpha=-5.0), cfg)
        assert state.aux.alpha == pytest.approx(-0.5)

    def test_proximal_and_decay_terms(self):
        eta, gamma, lam = 0.1, 2.0, 0.5
        w0 = np.array([1.0])
        state = MinMaxState(params=w0.copy(), aux=AuxVars(), eta=eta)
        state.ref_params = np.array([0.5])
        cfg = PesgConfig(eta0=eta, gamma=gamma, weight_decay=lam)
        pesg_step(state, np.array([0.2]), _grads(), cfg)
        want = 1.0 - eta * (0.2 + gamma * (1.0 - 0.5)) - lam * eta * 1.0
        assert state.params[0] == pytest.approx(want)

    def test_regularize_aux_flag(self):
        eta, gamma, lam = 0.1, 1.0, 0.3
        cfg_on = PesgConfig(eta0=eta, gamma=gamma, weight_decay=lam, regularize_aux=True)
        cfg_off = PesgConfig(eta0=eta, gamma=gamma, weight_decay=lam, regularize_aux=False)
        for cfg, expect_a in (
            (cfg_on, 1.0 - eta * (0.5 + gamma * (1.0 - 0.0)) - lam * eta * 1.0),
            (cfg_off, 1.0 - eta * 0.5),
        ):
            state = MinMaxState(params=np.zeros(1), aux=AuxVars(a=1.0), eta=eta)
            state.ref_a = 0.0
            pesg_step(state, np.zeros(1), _grads(g_a=0.5), cfg)
            assert state.aux.a == pytest.approx(expect_a)

    def test_nonfinite_gradient_aborts(self):
        state = MinMaxState(params=np.zeros(1), aux=AuxVars(), eta=0.1)
        with pytest.raises(NumericalError):
            pesg_step(state, np.array([np.nan]), _grads(), PesgConfig())


class TestEpochEnd:
    def test_no_decay_points_is_noop(self):
        state = MinMaxState(params=np.ones(2), aux=AuxVars(), eta=0.1)
        before = state.eta
        on_epoch_end(state, 5, PesgConfig(eta0=0.1, decay_epochs=()))
        assert state.eta == before

    def test_decay_factor_ten(self):
        cfg = PesgConfig(eta0=0.1, decay_epochs=(50, 75), decay_factor=10.0)
        state = MinMaxState(params=np.ones(1), aux=AuxVars(), eta=0.1)
        state.sum_params = np.ones(1)
        state.stage_count = 1
        on_epoch_end(state, 50, cfg)
        assert state.eta == 0.1 / 10.0
        on_epoch_end(state, 75, cfg)
        assert state.eta == 0.1 / 10.0**2

    def test_vref_is_stage_average_of_constant(self):
        cfg = PesgConfig(eta0=0.1, decay_epochs=(3,))
        state = MinMaxState(params=np.array([2.0]), aux=AuxVars(a=1.0, b=-1.0), eta=0.1)
        for _ in range(7):
            state.sum_params += np.array([2.0])
            state.sum_a += 1.0
            state.sum_b += -1.0
            state.stage_count += 1
        on_epoch_end(state, 3, cfg)
        assert state.ref_params[0] == pytest.approx(2.0)
        assert state.ref_a == pytest.approx(1.0)
        assert state.ref_b == pytest.approx(-1.0)
        assert state.stage_count == 0

    def test_empty_stage_keeps_old_reference(self):
        cfg = PesgConfig(eta0=0.1, decay_epochs=(1,))
        state = MinMaxState(params=np.array([3.0]), aux=AuxVars(), eta=0.1)
        old_ref = state.ref_params.copy()
        on_epoch_end(state, 1, cfg)
        assert np.array_equal(state.ref_params, old_ref)

    def test_decay_epochs_must_increase(self):
        with pytest.raises(ValidationError):
            PesgConfig(decay_epochs=(10, 10))
        with pytest.raises(ValidationError):
            PesgConfig(decay_epochs=(20, 10))


def _toy_sets(seed=1):
    base = gen_gaussian_toy(GaussianToySpec(n_pos=500, n_neg=900, seed=seed))
    train, _ = make_imbalanced(base, 0.10, seed=seed + 1)
    test = gen_gaussian_toy(GaussianToySpec(n_pos=1000, n_neg=9000, seed=seed + 2))
    return train, test


class TestPesgTrain:
    def test_zero_epochs(self):
        train, _ = _toy_sets()
        mspec = ModelSpec("linear", 2)
        params0 = init_params(mspec, 7, 0.1)
        spec = SurrogateSpec("auc_margin", p=train.p, m=0.5)
        params, aux, records = pesg_train(mspec, params0, train, spec, PesgConfig(),
                                          epochs=0, batch_size=64, seed=0)
        assert np.array_equal(params, params0)
        assert records == []

    def test_separable_toy_reaches_high_auc(self):
        train, test = _toy_sets()
        mspec = ModelSpec("linear", 2)
        params0 = init_params(mspec, 7, 0.1)
        spec = SurrogateSpec("auc_margin", p=train.p, m=0.5)
        cfg = PesgConfig(eta0=0.1, weight_decay=1e-4)
        _, _, records = pesg_train(mspec, params0, train, spec, cfg,
                                   epochs=30, batch_size=64, seed=11, test_data=test)
        assert records[-1].test_auc >= 0.99
        assert len(records) == 30

    def test_deterministic_bit_for_bit(self):
        train, test = _toy_sets(seed=5)
        mspec = ModelSpec("linear", 2)
        params0 = init_params(mspec, 3, 0.1)
        spec = SurrogateSpec("auc_margin", p=train.p, m=0.5, bsn=True)
        cfg = PesgConfig(eta0=0.1, decay_epochs=(4,), decay_factor=3.0)
        runs = [
            pesg_train(mspec, params0, train, spec, cfg, 6, 32, seed=9, test_data=test)
            for _ in range(2)
        ]
        assert np.array_equal(runs[0][0], runs[1][0])
        assert runs[0][2] == runs[1][2]

    def test_alpha_nonnegative_every_iteration_when_projected(self):
        train, _ = _toy_sets(seed=9)
        mspec = ModelSpec("linear", 2)
        spec = SurrogateSpec("auc_margin", p=train.p, m=0.5)
        cfg = PesgConfig(eta0=0.2, project_alpha=True)
        state = MinMaxState(params=init_params(mspec, 1, 0.1), aux=AuxVars(), eta=0.2)
        rng = np.random.default_rng(0)
        for _ in range(300):
            idx = rng.permutation(len(train))[:32]
            scores = forward_batch(mspec, state.params, train.X[idx])
            g = minmax_grads(scores, train.y[idx], state.aux, spec)
            mg = backward_vjp(mspec, state.params, train.X[idx], g.g_coeffs)
            pesg_step(state, mg, g, cfg)
            assert state.aux.alpha >= 0.0

    def test_full_batch_square_monotonically_decreases_pairwise_loss(self):
        rng = np.random.default_rng(0)
        X = np.concatenate([rng.normal(0.5, 1, (4, 2)), rng.normal(-0.5, 1, (4, 2))])
        y = np.array([1] * 4 + [-1] * 4)
        mspec = ModelSpec("linear", 2)
        spec = SurrogateSpec("auc_square", p=0.5)
        cfg = PesgConfig(eta0=1e-3, gamma=0.0, weight_decay=0.0, project_alpha=False)
        state = MinMaxState(params=rng.normal(scale=0.01, size=2), aux=AuxVars(), eta=1e-3)
        prev = np.inf
        for _ in range(200):
            s = forward_batch(mspec, state.params, X)
            g = minmax_grads(s, y, state.aux, spec)
            mg = backward_vjp(mspec, state.params, X, g.g_coeffs)
            pesg_step(state, mg, g, cfg)
            s2 = forward_batch(mspec, state.params, X)
            cur = pairwise_square_loss(s2[y > 0], s2[y < 0])
            assert cur <= prev + 1e-12
            prev = cur

    def test_vref_matches_independent_accumulator(self):
        train, _ = _toy_sets(seed=3)
        mspec = ModelSpec("linear", 2)
        spec = SurrogateSpec("auc_margin", p=train.p, m=0.5)
        cfg = PesgConfig(eta0=0.1, decay_epochs=(2,), decay_factor=2.0)
        state = MinMaxState(params=init_params(mspec, 2, 0.1), aux=AuxVars(), eta=0.1)
        rng = np.random.default_rng(4)
        mirror = []
        for epoch in (1, 2):
            for _ in range(5):
                idx = rng.permutation(len(train))[:16]
                scores = forward_batch(mspec, state.params, train.X[idx])
                g = minmax_grads(scores, train.y[idx], state.aux, spec)
                mg = backward_vjp(mspec, state.params, train.X[idx], g.g_coeffs)
                pesg_step(state, mg, g, cfg)
                mirror.append(state.params.copy())
            on_epoch_end(state, epoch, cfg)
        assert state.eta == 0.1 / 2.0
        assert np.allclose(state.ref_params, np.mean(mirror, axis=0), rtol=0, atol=1e-15)

    def test_single_class_dataset_rejected(self):
        from aucmax.data import Dataset
        bad = Dataset(np.zeros((4, 2)), np.ones(4, dtype=int))
        with pytest.raises(ValidationError):
            pesg_train(ModelSpec("linear", 2), np.zeros(2), bad,
                       SurrogateSpec("auc_margin", p=0.5, m=1.0), PesgConfig(), 1, 2, 0)

    def test_single_class_batches_are_processed(self):
        # batch size larger than the positive count guarantees all-negative
        # batches; training must proceed without error
        train, _ = _toy_sets(seed=7)
        mspec = ModelSpec("linear", 2)
        spec = SurrogateSpec("auc_margin", p=train.p, m=0.5)
        _, _, records = pesg_train(mspec, init_params(mspec, 0, 0.1), train, spec,
                                   PesgConfig(), epochs=2, batch_size=5, seed=0)
        assert len(records) == 2

    def test_divergence_aborts_with_context(self):
        train, _ = _toy_sets(seed=8)
        mspec = ModelSpec("linear", 2)
        spec = SurrogateSpec("auc_margin", p=train.p, m=0.5)
        cfg = PesgConfig(eta0=1e12, weight_decay=0.0)
        with pytest.raises(NumericalError, match="epoch"):
            pesg_train(mspec, init_params(mspec, 0, 0.1), train, spec, cfg,
                       epochs=50, batch_size=64, seed=0)


class TestSgdTrain:
    def test_zero_lr_keeps_params(self):
        train, _ = _toy_sets()
        mspec = ModelSpec("linear", 2)
        params0 = init_params(mspec, 1, 0.1)
        spec = SurrogateSpec("cross_entropy", p=train.p)
        cfg = SgdConfig(lr=0.0, momentum=0.9, weight_decay=0.0, epochs=2, batch_size=64)
        params, records = sgd_train(mspec, params0, train, spec, cfg, seed=0)
        assert np.array_equal(params, params0)
        assert len(records) == 2

    def test_single_plain_gradient_step(self):
        from aucmax.data import Dataset
        from aucmax.losses import cross_entropy_loss_and_coeffs

        data = Dataset(np.array([[2.0, -1.0], [-2.0, 1.0]]), np.array([1, -1]))
        mspec = ModelSpec("linear", 2)
        params0 = np.array([0.5, 0.5])
        cfg = SgdConfig(lr=0.1, momentum=0.0, weight_decay=0.0, epochs=1, batch_size=2)
        params, _ = sgd_train(mspec, params0, data,
                              SurrogateSpec("cross_entropy", p=0.5), cfg, seed=0)
        scores = forward_batch(mspec, params0, data.X)
        _, coeffs = cross_entropy_loss_and_coeffs(scores, data.y)
        want = params0 - 0.1 * backward_vjp(mspec, params0, data.X, coeffs)
        assert np.allclose(params, want, rtol=0, atol=1e-15)

    def test_cross_entropy_reaches_high_auc(self):
        train, test = _toy_sets(seed=2)
        mspec = ModelSpec("linear", 2)
        cfg = SgdConfig(lr=0.1, momentum=0.9, weight_decay=1e-4, epochs=30, batch_size=64)
        _, records = sgd_train(mspec, init_params(mspec, 1, 0.1), train,
                               SurrogateSpec("cross_entropy", p=train.p), cfg,
                               seed=3, test_data=test)
        assert records[-1].test_auc >= 0.99

    def test_wrong_surrogate_rejected(self):
        train, _ = _toy_sets()
        with pytest.raises(ValidationError):
            sgd_train(ModelSpec("linear", 2), np.zeros(2), train,
                      SurrogateSpec("auc_margin", p=0.5, m=1.0), SgdConfig(), 0)


class TestTwoStage:
    def _mlp_setup(self, seed=0):
        train, test = _toy_sets(seed=seed)
        mspec = ModelSpec("mlp", 2, 6, 1.0)
        spec = SurrogateSpec("auc_margin", p=train.p, m=0.5)
        stage1 = SgdConfig(lr=0.1, momentum=0.9, weight_decay=1e-4, epochs=5, batch_size=64)
        return train, test, mspec, spec, stage1

    def test_zero_stage2_epochs_is_pretrain_plus_redraw(self):
        train, _, mspec, spec, stage1 = self._mlp_setup()
        params, aux, records = two_stage_train(mspec, train, stage1, spec, PesgConfig(),
                                               stage2_epochs=0, stage2_batch_size=64, seed=4)
        seeds = np.random.SeedSequence(4).generate_state(4)
        pre, _ = sgd_train(mspec, init_params(mspec, int(seeds[0]), 0.1), train,
                           SurrogateSpec("cross_entropy", p=train.p), stage1, int(seeds[1]))
        sl = output_layer_slice(mspec)
        want = pre.copy()
        want[sl] = init_params(mspec, int(seeds[2]), 0.1)[sl]
        assert np.array_equal(params, want)

    def test_hidden_layer_preserved_across_reinit(self):
        train, _, mspec, spec, stage1 = self._mlp_setup(seed=1)
        params, _, _ = two_stage_train(mspec, train, stage1, spec, PesgConfig(),
                                       stage2_epochs=0, stage2_batch_size=64, seed=5)
        seeds = np.random.SeedSequence(5).generate_state(4)
        pre, _ = sgd_train(mspec, init_params(mspec, int(seeds[0]), 0.1), train,
                           SurrogateSpec("cross_entropy", p=train.p), stage1, int(seeds[1]))
        sl = output_layer_slice(mspec)
        hidden = slice(0, sl.start)
        assert np.array_equal(params[hidden], pre[hidden])
        assert not np.array_equal(params[sl], pre[sl])

    def test_linear_model_rejected(self):
        train, _, _, spec, stage1 = self._mlp_setup()
        with pytest.raises(ValidationError):
            two_stage_train(ModelSpec("linear", 2), train, stage1, spec, PesgConfig(),
                            stage2_epochs=1, stage2_batch_size=64, seed=0)
