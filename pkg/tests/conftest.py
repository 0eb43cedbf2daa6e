import math

import numpy as np
import pytest
import scipy.linalg

from opbridge.bridgecore import BridgeModel

_ACCEPTANCE = []


@pytest.fixture
def acceptance_log():
    """Record one pass/fail line per acceptance criterion for the summary."""

    def record(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}" + (f" ({detail})" if detail else "")
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)


def series_expm(M, terms=50):
    """Truncated power series for exp(M), independent of any Pade code."""
    M = np.asarray(M, dtype=float)
    out = np.eye(M.shape[0])
    term = np.eye(M.shape[0])
    for k in range(1, terms):
        term = term @ M / k
        out = out + term
    return out


def lyapunov_covariance(A, Sigma, T, t):
    """U(t) from a Lyapunov equation, independent of any quadrature.

    In v = log((T - s)/(T - t)) the integrand is G(v) = exp(vF) Q exp(vF^T)
    with F = I/2 - A.  Since G' = F G + G F^T, the integral X over [0, L]
    solves F X + X F^T = G(L) - Q.  Requires a_i + a_j != 1 for the
    eigenvalue real parts of A.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Sigma = np.atleast_2d(np.asarray(Sigma, dtype=float))
    d = A.shape[0]
    if t == 0:
        return np.zeros((d, d))
    L = math.log(T / (T - t))
    F = 0.5 * np.eye(d) - A
    Q = Sigma @ Sigma.T
    E = scipy.linalg.expm(L * F)
    X = scipy.linalg.solve_continuous_lyapunov(F, E @ Q @ E.T - Q)
    U = (T - t) * X
    return 0.5 * (U + U.T)


def scalar_bridge_variance(alpha, T, t):
    """Closed form of U(t) for d = 1, Sigma = 1."""
    x = T - t
    if abs(2 * alpha - 1) < 1e-14:
        return x * math.log(T / x)
    return (x - x ** (2 * alpha) * T ** (1 - 2 * alpha)) / (2 * alpha - 1)


def random_spectrum_matrix(rng, d, real_parts, max_imag=1.5, cond_max=30.0):
    """Real matrix P D P^-1 with the requested real parts (complex pairs allowed)."""
    blocks = []
    k = 0
    parts = list(real_parts)
    while k < d:
        a = parts[k]
        if k + 1 < d and parts[k + 1] == a:
            b = rng.uniform(0.2, max_imag)
            blocks.append(np.array([[a, b], [-b, a]]))
            k += 2
        else:
            blocks.append(np.array([[a]]))
            k += 1
    D = scipy.linalg.block_diag(*blocks)
    while True:
        P = np.eye(d) + 0.5 * rng.normal(size=(d, d))
        if np.linalg.cond(P) < cond_max:
            return P @ D @ np.linalg.inv(P)


def random_model(rng, d, lo=0.05, hi=2.0, T=1.0, cond_max=30.0):
    """Model with ReSpec(A) inside (lo, hi) and a random full-rank Sigma.

    ``cond_max`` bounds the condition number of the eigenbasis, i.e. how far
    ``A`` is from normal.
    """
    n_pairs = rng.integers(0, d // 2 + 1)
    parts = []
    for _ in range(n_pairs):
        a = rng.uniform(lo, hi)
        parts += [a, a]
    while len(parts) < d:
        parts.append(rng.uniform(lo, hi))
    # Keep pairs adjacent so that random_spectrum_matrix builds rotation blocks.
    A = random_spectrum_matrix(rng, d, parts, cond_max=cond_max)
    Sigma = np.eye(d) + 0.3 * rng.normal(size=(d, d))
    return BridgeModel(A, Sigma, T)


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


@pytest.fixture
def wiener_bridge():
    return BridgeModel([[1.0]], [[1.0]], 1.0)


@pytest.fixture
def skew_model():
    return BridgeModel([[0.0, 1.0], [-1.0, 0.0]], np.eye(2), 1.0)


@pytest.fixture
def diag_model():
    return BridgeModel(np.diag([0.25, 0.75]), np.eye(2), 1.0)
