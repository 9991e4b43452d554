import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from itkrmm.maskgen import ErasureSpec
from itkrmm.metrics import coherence, spikiness
from itkrmm.synthgen import (RepresentationPair, SignalSource, SignalSpec, draw_signal, draw_signals,
                             make_dct_pair, make_random_pair, make_support_pair, stream_rng)


def assert_pair_invariants(pair):
    G, D = pair.lowrank, pair.dictionary
    np.testing.assert_allclose(G.T @ G, np.eye(pair.L), atol=1e-10)
    np.testing.assert_allclose(np.linalg.norm(D, axis=0), 1.0, atol=1e-12)
    if pair.L:
        assert np.max(np.abs(G.T @ D)) < 1e-10


def test_dct_pair_flatness():
    pair = make_dct_pair(256, 2)
    assert_pair_invariants(pair)
    sup = np.abs(pair.dictionary).max(axis=0)
    bound = np.sqrt(2 / 256)
    assert bound == pytest.approx(0.088, abs=5e-4)
    assert np.all(sup <= bound + 1e-15)
    assert np.abs(pair.lowrank[:, 1]).max() == pytest.approx(bound, rel=1e-4)


def test_dct_pair_small():
    pair = make_dct_pair(4, 1)
    np.testing.assert_allclose(pair.lowrank[:, 0], [0.5] * 4, atol=1e-15)
    assert np.max(np.abs(pair.lowrank.T @ pair.dictionary)) < 1e-12
    with pytest.raises(ValueError):
        make_dct_pair(3, 3)


def test_random_pair():
    pair = make_random_pair(256, 384, 2, seed=0)
    assert_pair_invariants(pair)
    assert 0.2 <= coherence(pair.dictionary) <= 0.4
    again = make_random_pair(256, 384, 2, seed=0)
    np.testing.assert_array_equal(pair.dictionary, again.dictionary)
    np.testing.assert_array_equal(pair.lowrank, again.lowrank)


def test_support_pair_spikiness_grows_as_support_shrinks():
    means = [np.mean([spikiness(np.column_stack(
        [p.lowrank, p.dictionary])) for p in (make_support_pair(256, m, 2, s) for s in range(10))])
        for m in (256, 64, 16, 4)]
    assert all(a < b for a, b in zip(means, means[1:]))


def test_support_pair_small_support():
    pair = make_support_pair(256, 4, 2, seed=0)
    assert_pair_invariants(pair)
    assert np.abs(pair.lowrank).max() > 0.5
    with pytest.raises(ValueError):
        make_support_pair(8, 0, 1, seed=0)


def test_full_support_pair_is_flat():
    pair = make_support_pair(64, 64, 1, seed=3)
    assert_pair_invariants(pair)
    assert spikiness(pair.dictionary) < 0.6


def test_degenerate_signal():
    pair = make_dct_pair(8, 1)
    spec = SignalSpec(e_lr=0.25, b_lr=0.0, S=1, b_S=0.0, scale_max=1.0, scale_min=1.0)
    sig = draw_signal(pair, spec, np.random.default_rng(0))
    i = int(sig.support[0])
    expected = sig.v[0] * pair.lowrank[:, 0] + sig.x[0] * pair.dictionary[:, i]
    np.testing.assert_allclose(sig.y, expected, atol=1e-15)
    assert abs(sig.v[0]) == pytest.approx(0.25) and abs(sig.x[0]) == pytest.approx(0.75)
    assert np.linalg.norm(sig.y) == pytest.approx(np.sqrt(0.25 ** 2 + 0.75 ** 2))


def test_lowrank_energy_is_one_third():
    pair = make_random_pair(32, 48, 2, seed=1)
    spec = SignalSpec(S=4)
    r = np.random.default_rng(5)
    for _ in range(20):
        sig = draw_signal(pair, spec, r)
        assert np.linalg.norm(pair.lowrank.T @ sig.y) / sig.scale == pytest.approx(1 / 3, rel=1e-12)
        assert np.linalg.norm(sig.x) == pytest.approx(2 / 3, rel=1e-12)


def test_support_frequencies_uniform():
    pair = make_random_pair(16, 20, 0, seed=2)
    _, supports = draw_signals(pair, SignalSpec(S=3), 100_000, np.random.default_rng(9),
                               return_supports=True)
    counts = np.bincount(supports.ravel(), minlength=20)
    n_draws, p = 100_000, 3 / 20
    sd = np.sqrt(n_draws * p * (1 - p))
    assert np.all(np.abs(counts - n_draws * p) < 3 * sd + 1)
    assert stats.chisquare(counts).pvalue > 0.001
    assert all(len(set(row)) == 3 for row in supports[:1000])


def test_spec_validation():
    pair = make_random_pair(8, 10, 1, seed=0)
    with pytest.raises(ValueError):
        SignalSpec(S=11).validate(pair)
    with pytest.raises(ValueError):
        SignalSpec(b_S=1.0).validate()
    with pytest.raises(ValueError):
        SignalSpec(noise_sigma=-1).validate()
    with pytest.raises(ValueError):
        RepresentationPair(np.zeros((3, 1)), np.zeros((4, 2)))


def test_noise_normalisation():
    pair = make_random_pair(16, 24, 1, seed=0)
    spec = SignalSpec(S=2, noise_sigma=0.5, scale_min=2.0, scale_max=2.0)
    sig = draw_signal(pair, spec, np.random.default_rng(1))
    clean = pair.lowrank @ sig.v + pair.dictionary[:, sig.support] @ sig.x
    np.testing.assert_allclose(sig.y, 2.0 * (clean + sig.noise) / np.sqrt(1 + sig.noise @ sig.noise))


def test_source_determinism():
    pair = make_random_pair(16, 24, 1, seed=0)
    src = SignalSource(pair, SignalSpec(S=3), ErasureSpec(0.7, 0.9), 50, seed=4)
    Y1, M1 = src.batch(3)
    Y2, M2 = SignalSource(pair, SignalSpec(S=3), ErasureSpec(0.7, 0.9), 50, seed=4).batch(3)
    np.testing.assert_array_equal(Y1, Y2)
    np.testing.assert_array_equal(M1, M2)
    assert not np.array_equal(src.batch(4)[0], Y1)
    other = SignalSource(pair, SignalSpec(S=3), ErasureSpec(0.7, 0.9), 50, seed=4, phase=1)
    assert not np.array_equal(other.batch(3)[0], Y1)
    np.testing.assert_array_equal(Y1, Y1 * M1)
    fixed = SignalSource(pair, SignalSpec(S=3), None, 50, seed=4, refresh=False)
    assert fixed.batch(0)[0] is fixed.batch(7)[0]


def test_stream_independence():
    a = stream_rng(1, 1).random(5)
    b = stream_rng(1, 2).random(5)
    assert not np.allclose(a, b)
    np.testing.assert_array_equal(a, stream_rng(1, 1).random(5))


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.integers(0, 3), st.integers(1, 5))
def test_noiseless_signals_lie_in_span(seed, L, S):
    pair = make_random_pair(12, 15, L, seed=seed)
    Y, supports = draw_signals(pair, SignalSpec(S=S), 20, np.random.default_rng(seed),
                               return_supports=True)
    for y, I in zip(Y.T, supports):
        A = np.column_stack([pair.lowrank, pair.dictionary[:, I]])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        assert np.linalg.norm(y - A @ coef) < 1e-10
