import numpy as np
import pytest

from matconc.errors import ConfigError, DomainError
from matconc.randomizers import (
    MatrixRandomizer,
    ScalarRandomizer,
    verify_trace_superuniform,
)
from matconc.rng import substream
from matconc.symmat import loewner_leq


def test_scalar_kinds():
    assert ScalarRandomizer(kind="constant_one").sample() == 1.0
    u = ScalarRandomizer(kind="uniform01", seed=3).sample()
    assert 0.0 < u <= 1.0
    r = ScalarRandomizer(kind="custom", sampler=lambda g: 0.5)
    assert r.sample() == 0.5
    with pytest.raises(ConfigError):
        ScalarRandomizer(kind="beta")
    with pytest.raises(ConfigError):
        ScalarRandomizer(kind="custom")
    bad = ScalarRandomizer(kind="custom", sampler=lambda g: 1.5)
    with pytest.raises(DomainError):
        bad.sample()
    bad0 = ScalarRandomizer(kind="custom", sampler=lambda g: 0.0)
    with pytest.raises(DomainError):
        bad0.sample()


def test_scalar_uniform_never_zero_and_seeded():
    r = ScalarRandomizer(kind="uniform01", seed=99)
    draws = [r.sample() for _ in range(1000)]
    assert min(draws) > 0.0
    r2 = ScalarRandomizer(kind="uniform01", seed=99)
    assert draws[:10] == [r2.sample() for _ in range(10)]


def test_matrix_sample_given():
    r = MatrixRandomizer(kind="scaled_identity", dim=3)
    assert np.array_equal(r.sample_given(0.25), 0.25 * np.eye(3))
    ident = MatrixRandomizer(kind="identity", dim=2)
    assert np.array_equal(ident.sample_given(0.1), np.eye(2))
    y = np.array([[0.3, 0.1], [0.1, 0.2]])
    sh = MatrixRandomizer(kind="shifted", dim=2, y=y)
    assert np.allclose(sh.sample_given(0.5), 0.5 * np.eye(2) + y)


def test_matrix_randomizer_validation():
    with pytest.raises(ConfigError):
        MatrixRandomizer(kind="wishart", dim=2)
    with pytest.raises(ConfigError):
        MatrixRandomizer(kind="scaled_identity", dim=0)
    with pytest.raises(ConfigError):
        MatrixRandomizer(kind="shifted", dim=2)
    with pytest.raises(ConfigError):
        MatrixRandomizer(kind="shifted", dim=2, y=np.eye(3))
    with pytest.raises(DomainError):
        MatrixRandomizer(kind="shifted", dim=2, y=-np.eye(2))
    with pytest.raises(ConfigError):
        MatrixRandomizer(kind="scaled_identity", dim=2, y=np.eye(2))


def test_matrix_sample_dominates_scaled_identity():
    # a shifted randomizer is >= the bare scaled identity for the same u
    y = np.array([[0.4, 0.2], [0.2, 0.3]])
    sh = MatrixRandomizer(kind="shifted", dim=2, y=y)
    for u in (0.01, 0.5, 1.0):
        assert loewner_leq(u * np.eye(2), sh.sample_given(u))


def test_trace_superuniform_equality_on_unit_trace_rank_one():
    # For U = u I and Y = c * v v^T with ||v|| = 1, the event {U not >= Y}
    # is exactly {u < c}, so the frequency should match tr Y = c closely.
    r = MatrixRandomizer(kind="scaled_identity", dim=3)
    v = np.array([2.0, -1.0, 2.0]) / 3.0
    probes = [0.25 * np.outer(v, v), 0.64 * np.outer(v, v)]
    reps = verify_trace_superuniform(r, probes, trials=200_000, seed=4)
    for rep, c in zip(reps, (0.25, 0.64)):
        assert rep.verdict
        assert abs(rep.event_freq - c) <= 4.0 * rep.stderr


def test_trace_superuniform_one_dimensional_exact():
    r = MatrixRandomizer(kind="scaled_identity", dim=1)
    reps = verify_trace_superuniform(r, [np.array([[0.25]])], trials=400_000, seed=8)
    assert reps[0].verdict
    assert abs(reps[0].event_freq - 0.25) < 0.004


def test_trace_superuniform_strict_for_spread_spectrum():
    # full-rank probe with the same trace: the event needs u below the top
    # eigenvalue only, which is smaller than the trace, so slack appears
    r = MatrixRandomizer(kind="scaled_identity", dim=2)
    probe = np.diag([0.3, 0.3])
    reps = verify_trace_superuniform(r, [probe], trials=100_000, seed=5)
    assert reps[0].verdict
    assert reps[0].event_freq < 0.35  # ~0.3, well under tr Y = 0.6


def test_trace_superuniform_identity_randomizer():
    # U = I never fails against Y <= I, always fails against lam_max > 1
    r = MatrixRandomizer(kind="identity", dim=2)
    reps = verify_trace_superuniform(
        r, [0.5 * np.eye(2), np.diag([1.5, 0.0])], trials=100, seed=6
    )
    assert reps[0].event_freq == 0.0
    assert reps[1].event_freq == 1.0
    assert reps[1].vacuous  # tr Y = 1.5 > 1


def test_trace_superuniform_shifted_keeps_bound():
    y = np.array([[0.2, 0.05], [0.05, 0.1]])
    r = MatrixRandomizer(kind="shifted", dim=2, y=y)
    probes = [np.diag([0.4, 0.1]), y, 0.3 * np.eye(2)]
    reps = verify_trace_superuniform(r, probes, trials=100_000, seed=7)
    assert all(rep.verdict for rep in reps)
    # probe == shift: u I + Y >= Y always, frequency exactly zero
    assert reps[1].event_freq == 0.0


def test_trace_superuniform_rejects_bad_probes():
    r = MatrixRandomizer(kind="scaled_identity", dim=2)
    with pytest.raises(DomainError):
        verify_trace_superuniform(r, [np.eye(3)], trials=10)
    with pytest.raises(DomainError):
        verify_trace_superuniform(r, [-np.eye(2)], trials=10)


def test_trace_superuniform_matches_dense_loewner_check():
    # the vectorized scalar comparison must agree with a per-draw
    # loewner_leq call on the sampled matrices
    y = np.array([[0.35, 0.1], [0.1, 0.15]])
    r = MatrixRandomizer(kind="shifted", dim=2, y=0.05 * np.eye(2))
    trials = 2000
    rep = verify_trace_superuniform(r, [y], trials=trials, seed=11)[0]
    gen = substream(11, 0xFA13, 0)
    hits = 0
    for _ in range(trials):
        mat = r.sample_given(1.0 - float(gen.random()))
        if not loewner_leq(y, mat):
            hits += 1
    assert rep.event_freq == hits / trials
