import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opbridge.analysis import (
    classify,
    convergence_diagnostic,
    decay_exponent,
    refinement_levels,
    rescaled_limit_probe,
)
from opbridge.bridgecore import BridgeModel
from opbridge.errors import InsufficientResolutionError, PreconditionError
from opbridge.grids import default_grid, geometric_levels
from opbridge.sampler import sample_exact

from conftest import random_model, random_spectrum_matrix


@pytest.mark.parametrize(
    "A,Sigma,verdict",
    [
        (np.diag([0.25, 0.75]), np.eye(2), "bridge"),
        ([[0.0, 1.0], [-1.0, 0.0]], np.eye(2), "counterexample-class"),
        (np.diag([-0.1, 0.5]), np.eye(2), "not-guaranteed"),
        ([[1.0, 1.0], [-1.0, 1.0]], np.eye(2), "bridge"),
        (np.diag([0.3, 0.4]), [[1.0], [0.0]], "not-guaranteed"),
        (np.zeros((2, 2)), np.eye(2), "counterexample-class"),
        ([[0.0, 1.0], [0.0, 0.0]], np.eye(2), "not-guaranteed"),
        (np.eye(2), np.zeros((2, 2)), "not-guaranteed"),
    ],
)
def test_classify_examples(A, Sigma, verdict):
    rep = classify(BridgeModel(A, Sigma))
    assert rep.verdict == verdict
    assert rep.rule
    json.dumps(rep.to_json())


def test_classify_notes():
    low = classify(BridgeModel(np.diag([0.1, 0.3]), np.eye(2)))
    assert any("1/2" in n for n in low.notes)
    skew = classify(BridgeModel([[0.0, 1.0], [-1.0, 0.0]], np.eye(2)))
    assert any("law of B_t" in n for n in skew.notes)
    mixed = classify(BridgeModel(np.diag([-0.5, 0.5]), np.eye(2)))
    assert any("both signs" in n for n in mixed.notes)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1), st.sampled_from(["pos", "mixed", "imag"]))
def test_classify_similarity_invariant(d, seed, kind):
    rng = np.random.default_rng(seed)
    if kind == "pos":
        m = random_model(rng, d)
    elif kind == "mixed":
        m = BridgeModel(random_spectrum_matrix(rng, d, rng.uniform(-1, 1, d)), rng.normal(size=(d, d)))
    else:
        M = rng.normal(size=(d, d))
        m = BridgeModel(M - M.T, rng.normal(size=(d, d)))
    while True:
        P = np.eye(d) + 0.4 * rng.normal(size=(d, d))
        if np.linalg.cond(P) < 20:
            break
    Pinv = np.linalg.inv(P)
    m2 = BridgeModel(Pinv @ m.A @ P, Pinv @ m.Sigma)
    r1, r2 = classify(m), classify(m2)
    assert r1.verdict == r2.verdict
    assert r1.sigma_rank == r2.sigma_rank
    np.testing.assert_allclose(r1.respec, r2.respec, atol=1e-7)


def test_refinement_levels():
    g = default_grid(2.0, k_max=6)
    idx, ks = refinement_levels(g, 2.0)
    np.testing.assert_array_equal(ks, np.arange(1, 7))
    np.testing.assert_allclose(g[idx], geometric_levels(2.0, 1, 6))


def test_convergence_wiener_bridge(wiener_bridge):
    ens = sample_exact(wiener_bridge, default_grid(1.0, k_max=20), 20000, 4)
    rep = convergence_diagnostic(ens, wiener_bridge)
    assert rep.verdict == "bridge" and rep.converged and rep.passed
    t = rep.times
    np.testing.assert_allclose(rep.analytic_second_moments, t * (1 - t), rtol=1e-12)
    # E X_t^2 roughly halves per level near T
    ratios = rep.second_moments[-6:][1:] / rep.second_moments[-6:][:-1]
    assert np.all(np.abs(ratios - 0.5) < 0.05)
    assert np.all(np.abs(rep.second_moments - rep.analytic_second_moments) <= 5 * rep.stderr)


def test_convergence_skew_never_converges(skew_model):
    for n in (10, 1000, 20000):
        ens = sample_exact(skew_model, default_grid(1.0, k_max=20), n, 8)
        rep = convergence_diagnostic(ens, skew_model)
        assert not rep.converged
        assert rep.passed is None
    np.testing.assert_allclose(rep.analytic_second_moments, 2 * rep.times, rtol=1e-9)


def test_convergence_zero_noise():
    m = BridgeModel(np.eye(2), np.zeros((2, 2)))
    rep = convergence_diagnostic(sample_exact(m, default_grid(1.0), 5, 1), m)
    assert rep.converged


def test_convergence_martingale_stabilizing():
    m = BridgeModel(np.diag([0.1, 0.3]), np.eye(2))
    rep = convergence_diagnostic(sample_exact(m, default_grid(1.0, k_max=20), 5000, 2), m)
    assert rep.martingale_stabilizing
    assert rep.martingale_cov_diffs[-1] < 0.1 * rep.martingale_cov_diffs[0]


def test_convergence_insufficient_resolution(wiener_bridge):
    ens = sample_exact(wiener_bridge, [0.1, 0.5, 0.75], 5, 1)
    with pytest.raises(InsufficientResolutionError):
        convergence_diagnostic(ens, wiener_bridge)


@pytest.mark.parametrize("a,pred", [(0.25, 0.5), (0.75, 1.0), (1.0, 1.0), (0.1, 0.2), (2.0, 1.0)])
def test_decay_scalar(a, pred):
    rep = decay_exponent(BridgeModel([[a]], [[1.0]]), 0)
    assert rep.predicted_moment_exponent == pred
    assert rep.predicted_state_exponent == min(a, 0.5)
    assert abs(rep.estimated_exponent - pred) <= 0.1 and rep.within_band
    assert np.all(rep.grid_window >= 0.9) and np.all(rep.grid_window < 1)
    assert len(rep.grid_window) == 15


def test_decay_wiener_bridge_exact_slope(wiener_bridge):
    rep = decay_exponent(wiener_bridge, 0)
    # log t(1 - t) against log(1 - t): slope 1 + O(1 - t)
    assert rep.estimated_exponent == pytest.approx(1.0, abs=2e-3)


def test_decay_block_diagonal_matches_isolated():
    blocks = [np.array([[0.2, 1.0], [-1.0, 0.2]]), np.array([[0.8]])]
    import scipy.linalg

    A = scipy.linalg.block_diag(*blocks)
    m = BridgeModel(A, np.eye(3))
    for j, B in enumerate(blocks):
        full = decay_exponent(m, j).estimated_exponent
        iso = decay_exponent(BridgeModel(B, np.eye(len(B))), 0).estimated_exponent
        assert abs(full - iso) <= 1e-3


def test_decay_preconditions(skew_model, diag_model):
    with pytest.raises(PreconditionError):
        decay_exponent(skew_model, 0)
    with pytest.raises(PreconditionError):
        decay_exponent(diag_model, 2)


def test_decay_mc_vs_analytic_scalar():
    m = BridgeModel([[0.25]], [[1.0]])
    ens = sample_exact(m, default_grid(1.0, k_max=20), 20000, 17)
    mc = decay_exponent(m, 0, ens)
    an = decay_exponent(m, 0)
    assert mc.route == "monte-carlo"
    assert abs(mc.estimated_exponent - an.estimated_exponent) <= 0.15


def _probe_ensemble(a, n=4000):
    m = BridgeModel([[a]], [[1.0]])
    return m, sample_exact(m, default_grid(1.0, k_max=40), n, 5)


@pytest.mark.parametrize("shift,expected", [(0.0, "stable"), (-0.05, "to_zero"), (0.05, "to_infinity")])
def test_probe_dichotomy(shift, expected):
    m, ens = _probe_ensemble(0.25)
    rep = rescaled_limit_probe(m, [[0.25 + shift]], ens)
    assert rep.expected == expected
    assert rep.observed == expected and rep.matches


def test_probe_preconditions(diag_model):
    m, ens = _probe_ensemble(0.25, 10)
    with pytest.raises(PreconditionError):
        rescaled_limit_probe(diag_model, np.eye(2), sample_exact(diag_model, default_grid(1.0), 2, 1))
    mm = BridgeModel(np.diag([0.1, 0.2]), np.eye(2))
    with pytest.raises(PreconditionError, match="commute"):
        rescaled_limit_probe(mm, [[0.0, 1.0], [0.0, 0.0]], sample_exact(mm, default_grid(1.0), 2, 1))
