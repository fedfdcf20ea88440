import numpy as np
import pytest

from mimo_mcmc import detectors, model


def _explicit_instance(channel, x_true, noise, snr=None):
    channel = np.asarray(channel, dtype=np.float64)
    n = channel.shape[0]
    snr = float(n) if snr is None else snr
    scaled = np.sqrt(snr / n) * channel
    x_true = np.asarray(x_true, dtype=np.int8)
    noise = np.asarray(noise, dtype=np.float64)
    return model.MimoInstance(
        n=n, snr=snr, seed=0, kind="explicit",
        channel=channel, scaled_channel=scaled, x_true=x_true,
        noise=noise, received=scaled @ x_true.astype(float) + noise,
    )


def _fresh_state(inst, x):
    rng = np.random.default_rng(0)
    return detectors.init_chain(inst, np.asarray(x, dtype=np.int8), rng)


def test_flip_probability_is_half_for_equal_energies():
    # y = 0, so both symbol choices give the same residual norm
    inst = _explicit_instance([[1.0]], [-1], [1.0])
    assert inst.received[0] == 0.0
    state = _fresh_state(inst, [-1])
    for variant in ("squared-norm", "norm-2"):
        p = detectors.conditional_flip_probability(state, inst, 0, 1.3, variant)
        assert p == pytest.approx(0.5, abs=1e-15)


def test_flip_probability_approaches_half_monotonically_in_alpha():
    inst = model.generate_instance(3, 4, 10.0)
    state = _fresh_state(inst, [1, -1, 1, -1])
    gaps = []
    for alpha in (2.0, 3.0, 5.0, 10.0, 25.0, 5e3):
        p = detectors.conditional_flip_probability(state, inst, 2, alpha)
        gaps.append(abs(p - 0.5))
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-6


def test_flip_probability_index_error():
    inst = model.generate_instance(3, 4, 10.0)
    state = _fresh_state(inst, inst.x_true)
    with pytest.raises(IndexError):
        detectors.conditional_flip_probability(state, inst, 4, 1.0)


def test_orthogonal_flip_probability_is_state_independent_closed_form():
    inst = model.generate_instance(9, 5, 10.0, model.ChannelKind.orthogonal_columns())
    alpha = 1.7
    rng = np.random.default_rng(1)
    for j in range(5):
        h_j = inst.scaled_channel[:, j]
        closed_minus = 1.0 / (1.0 + np.exp(2.0 * (inst.received @ h_j) / alpha**2))
        for _ in range(8):
            x = (2 * rng.integers(0, 2, 5) - 1).astype(np.int8)
            st = _fresh_state(inst, x)
            p_plus = detectors.conditional_flip_probability(st, inst, j, alpha)
            assert 1.0 - p_plus == pytest.approx(closed_minus, abs=1e-10)


def test_flip_probability_never_overflows_at_high_snr():
    inst = model.generate_instance(2, 6, 1e8)
    state = _fresh_state(inst, -inst.x_true)
    for variant in ("squared-norm", "norm-2"):
        p = detectors.conditional_flip_probability(state, inst, 0, 0.1, variant)
        assert 0.0 <= p <= 1.0 and np.isfinite(p)


def test_update_residual_noop_when_symbol_unchanged():
    inst = model.generate_instance(4, 5, 8.0)
    state = _fresh_state(inst, inst.x_true)
    before = state.residual.copy()
    detectors.update_residual(state, inst, 2, -1)
    assert np.array_equal(state.residual, before)
    assert state.x[2] == -1


def test_update_residual_flip_is_involution():
    inst = model.generate_instance(4, 5, 8.0)
    state = _fresh_state(inst, inst.x_true)
    before = state.residual.copy()
    detectors.update_residual(state, inst, 3, 1)
    detectors.update_residual(state, inst, 3, -1)
    assert np.max(np.abs(state.residual - before)) <= 1e-10


def test_update_residual_rejects_bad_symbol():
    inst = model.generate_instance(4, 3, 8.0)
    state = _fresh_state(inst, inst.x_true)
    with pytest.raises(ValueError):
        detectors.update_residual(state, inst, 0, 0)


def test_incremental_residual_tracks_fresh_recompute():
    inst = model.generate_instance(3, 8, 10.0)
    state = _fresh_state(inst, inst.x_true)
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        j = int(rng.integers(8))
        detectors.update_residual(state, inst, j, int(rng.choice([-1, 1])))
    assert detectors.residual_drift(state, inst) <= 1e-8
    fresh_energy = model.residual_energy(inst, state.x)
    assert state.energy == pytest.approx(fresh_energy, abs=1e-8)


def test_run_reversible_keeps_zero_best_energy_from_truth():
    inst = model.zero_noise(model.generate_instance(6, 5, 9.0))
    cfg = detectors.McmcConfig(alpha=1.0, iterations=300, seed=2, initial=inst.x_true)
    trace = detectors.run_reversible(inst, cfg)
    assert trace.best_energy == 0.0
    assert all(c.best_energy == 0.0 for c in trace.checkpoints)


def test_best_energy_is_monotone_non_increasing():
    inst = model.generate_instance(10, 10, 10.0)
    cfg = detectors.McmcConfig(alpha=2.74, iterations=1000, seed=3, checkpoint_every=7)
    trace = detectors.run_reversible(inst, cfg)
    bests = [c.best_energy for c in trace.checkpoints]
    assert all(a >= b for a, b in zip(bests, bests[1:]))
    assert trace.best_energy <= trace.checkpoints[0].energy
    steps = [c.step for c in trace.checkpoints]
    assert steps == sorted(set(steps))


def test_single_site_chain_matches_two_point_gibbs():
    inst = model.generate_instance(12, 1, 5.0)
    alpha = 1.2
    cfg = detectors.McmcConfig(
        alpha=alpha, iterations=100_000, seed=4, checkpoint_every=1
    )
    trace = detectors.run_reversible(inst, cfg)
    e_minus = model.residual_energy(inst, [-1])
    e_plus = model.residual_energy(inst, [1])
    p_plus = 1.0 / (1.0 + np.exp((e_plus - e_minus) / (2 * alpha**2)))
    freq_plus = np.mean([c.energy == pytest.approx(e_plus) for c in trace.checkpoints])
    tv = abs(freq_plus - p_plus)
    assert tv <= 0.01


def test_sequential_block_is_one_resample_on_scalar_instance():
    inst = model.generate_instance(5, 1, 5.0)
    alpha = 1.0
    e_minus = model.residual_energy(inst, [-1])
    e_plus = model.residual_energy(inst, [1])
    p_plus = 1.0 / (1.0 + np.exp((e_plus - e_minus) / (2 * alpha**2)))
    hits = 0
    trials = 4000
    for seed in range(trials):
        cfg = detectors.McmcConfig(
            alpha=alpha, schedule="sequential", iterations=1, seed=seed,
            initial=np.array([-1], dtype=np.int8),
        )
        trace = detectors.run_sequential(inst, cfg)
        assert len(trace.checkpoints) == 1
        hits += trace.checkpoints[0].energy == pytest.approx(e_plus)
    assert hits / trials == pytest.approx(p_plus, abs=4 * np.sqrt(0.25 / trials))


def test_sequential_cold_chain_finds_truth_quickly_without_noise():
    hits = 0
    for seed in range(200):
        inst = model.zero_noise(model.generate_instance(5, 8, 100.0))
        cfg = detectors.McmcConfig(
            alpha=0.1, schedule="sequential", iterations=5, seed=seed
        )
        trace = detectors.run_sequential(inst, cfg)
        ml_x, _ = model.exhaustive_ml(inst)
        assert np.array_equal(ml_x, inst.x_true)
        hits += np.array_equal(trace.best_x, inst.x_true)
    assert hits / 200 >= 0.95


def test_sequential_trace_has_exactly_iterations_checkpoints():
    inst = model.generate_instance(1, 6, 10.0)
    cfg = detectors.McmcConfig(alpha=2.0, schedule="sequential", iterations=13, seed=0)
    trace = detectors.run_sequential(inst, cfg)
    assert [c.step for c in trace.checkpoints] == list(range(1, 14))


def test_runs_are_reproducible_and_serializable():
    inst = model.generate_instance(8, 6, 10.0)
    cfg = detectors.McmcConfig(alpha=1.5, iterations=500, seed=11)
    a = detectors.run_reversible(inst, cfg)
    b = detectors.run_reversible(inst, cfg)
    assert detectors.trace_to_json(a) == detectors.trace_to_json(b)
    back = detectors.trace_from_json(detectors.trace_to_json(a))
    assert np.array_equal(back.best_x, a.best_x)
    assert back.best_energy == a.best_energy
    assert back.checkpoints[-1].step == a.checkpoints[-1].step


def test_schedule_dispatch_and_validation():
    inst = model.generate_instance(8, 3, 10.0)
    cfg = detectors.McmcConfig(alpha=1.0, iterations=5, seed=0)
    with pytest.raises(ValueError):
        detectors.run_sequential(inst, cfg)
    seq = detectors.McmcConfig(alpha=1.0, schedule="sequential", iterations=5, seed=0)
    with pytest.raises(ValueError):
        detectors.run_reversible(inst, seq)
    assert detectors.run_detector(inst, cfg).schedule == "random-scan"
    assert detectors.run_detector(inst, seq).schedule == "sequential"


def test_config_validation():
    with pytest.raises(ValueError):
        detectors.McmcConfig(alpha=0.0)
    with pytest.raises(ValueError):
        detectors.McmcConfig(alpha=1.0, iterations=0)
    with pytest.raises(ValueError):
        detectors.McmcConfig(alpha=1.0, variant="norm-3")
    with pytest.raises(ValueError):
        detectors.McmcConfig(alpha=1.0, schedule="zigzag")


def test_variants_coincide_on_degenerate_energies_and_differ_generically():
    flat = _explicit_instance([[1.0]], [-1], [1.0])
    st = _fresh_state(flat, [-1])
    p_sq = detectors.conditional_flip_probability(st, flat, 0, 0.7, "squared-norm")
    p_n2 = detectors.conditional_flip_probability(st, flat, 0, 0.7, "norm-2")
    assert p_sq == pytest.approx(p_n2, abs=1e-15)
    inst = model.generate_instance(3, 4, 10.0)
    st = _fresh_state(inst, inst.x_true)
    p_sq = detectors.conditional_flip_probability(st, inst, 1, 1.0, "squared-norm")
    p_n2 = detectors.conditional_flip_probability(st, inst, 1, 1.0, "norm-2")
    assert abs(p_sq - p_n2) > 1e-6


def test_ql_transform_preserves_energies_and_argmin():
    inst = model.generate_instance(9, 6, 10.0)
    ql = detectors.ql_transform(inst)
    assert np.max(np.abs(np.triu(ql.scaled_channel, 1))) <= 1e-10
    rng = np.random.default_rng(0)
    for _ in range(100):
        x = (2 * rng.integers(0, 2, 6) - 1).astype(np.int8)
        e0 = model.residual_energy(inst, x)
        e1 = model.residual_energy(ql, x)
        assert abs(e0 - e1) <= 1e-8 * max(e0, 1e-30)
    x0, _ = model.exhaustive_ml(inst)
    x1, _ = model.exhaustive_ml(ql)
    assert np.array_equal(x0, x1)
    recon = ql.scaled_channel @ ql.x_true.astype(float) + ql.noise
    assert np.allclose(recon, ql.received, rtol=1e-10, atol=1e-12)


def test_ql_transform_rejects_rank_deficient_channel():
    bad = _explicit_instance(np.zeros((3, 3)), [-1, -1, -1], np.zeros(3))
    with pytest.raises(np.linalg.LinAlgError):
        detectors.ql_transform(bad)


def test_linear_detectors_recover_truth_without_noise():
    inst = model.zero_noise(model.generate_instance(14, 6, 10.0))
    assert np.array_equal(detectors.zf_detect(inst), inst.x_true)
    assert np.array_equal(detectors.lmmse_detect(inst), inst.x_true)


def test_zf_matches_matched_filter_on_orthogonal_equal_norm_channel():
    inst = model.generate_instance(15, 6, 10.0, model.ChannelKind.orthogonal_columns())
    mf = np.where(inst.scaled_channel.T @ inst.received > 0, 1, -1)
    assert np.array_equal(detectors.zf_detect(inst), mf)


def test_zf_rejects_singular_channel():
    m = np.eye(3)
    m[2, 2] = 0.0
    bad = _explicit_instance(m, [-1, -1, -1], np.zeros(3))
    with pytest.raises(np.linalg.LinAlgError):
        detectors.zf_detect(bad)


def test_sign_zero_resolves_to_minus_one():
    inst = _explicit_instance(np.eye(2), [-1, -1], [1.0, 2.0])
    # received = (-1+1, -1+2) = (0, 1): ZF estimate is (0, 1) -> (-1, +1)
    assert np.array_equal(detectors.zf_detect(inst), [-1, 1])


def test_linear_detectors_never_beat_ml_on_average():
    trials = 10_000
    n = 10
    snr = 10 ** (10 / 10)
    errs = {"zf": 0, "lmmse": 0, "ml": 0}
    for t in range(trials):
        inst = model.generate_instance(13 + t, n, snr)
        ml_x, _ = model.exhaustive_ml(inst)
        errs["ml"] += detectors.bit_errors(ml_x, inst.x_true)
        errs["zf"] += detectors.bit_errors(detectors.zf_detect(inst), inst.x_true)
        errs["lmmse"] += detectors.bit_errors(detectors.lmmse_detect(inst), inst.x_true)
    assert errs["zf"] >= errs["ml"]
    assert errs["lmmse"] >= errs["ml"]


from hypothesis import given, settings
from hypothesis import strategies as st


@given(
    seed=st.integers(min_value=0, max_value=10_000),
    n=st.integers(min_value=1, max_value=8),
    data=st.data(),
)
@settings(max_examples=60, deadline=None)
def test_flip_probability_matches_from_scratch_energies(seed, n, data):
    inst = model.generate_instance(seed, n, 10.0)
    j = data.draw(st.integers(min_value=0, max_value=n - 1))
    bits = data.draw(st.integers(min_value=0, max_value=2**n - 1))
    x = model.index_to_spins(bits, n)
    state = _fresh_state(inst, x)
    alpha = data.draw(st.sampled_from([0.7, 1.0, 2.5]))

    x_plus, x_minus = x.copy(), x.copy()
    x_plus[j], x_minus[j] = 1, -1
    e_plus = model.residual_energy(inst, x_plus)
    e_minus = model.residual_energy(inst, x_minus)
    from scipy.special import expit

    for variant, gap in (
        ("squared-norm", e_plus - e_minus),
        ("norm-2", np.sqrt(e_plus) - np.sqrt(e_minus)),
    ):
        want = float(expit(-gap / (2 * alpha**2)))
        got = detectors.conditional_flip_probability(state, inst, j, alpha, variant)
        assert got == pytest.approx(want, abs=1e-12)
