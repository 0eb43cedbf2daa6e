"""Do two parameterisations ``(A, Sigma)`` and ``(A~, Sigma~)`` give the same bridge law?

Both processes are centred Gaussian, so their laws agree iff their
covariance functions agree.  Matching covariances force
``Sigma Sigma^T = Sigma~ Sigma~^T`` (compare ``U'(0)``) and

    (A - A~) U(t) = -U(t) (A - A~)^T   for all t,

which does not force ``A = A~``: for normal ``A`` the pair ``(A, A^T)``
gives identical laws because ``r**A r**(A^T) = r**(A + A^T)``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .bridgecore import covariance
from .errors import InvalidComparisonError
from .grids import check_grid, geometric_levels
from .matfun import eigen_summary, op_power

__all__ = [
    "DefectReport",
    "LawComparison",
    "ConsistencyReport",
    "commutator_defect",
    "compare_laws",
    "default_law_grid",
    "normal_kernel_defect",
    "random_normal_matrix",
    "respec_consistency",
]

NOISE_RTOL = 1e-10
COV_RTOL = 1e-8
A_DIFF_TOL = 1e-8
QUAD_NOISE_FACTOR = 1e3


def default_law_grid(T):
    """8 uniform times ``k T / 9`` plus 32 geometric times ``T (1 - 2**-k)``.

    The spacing ``T / 9`` keeps the uniform part disjoint from the dyadic levels.
    """
    times = np.concatenate([np.arange(8) * T / 9, geometric_levels(T, 1, 32)])
    return np.unique(times)


def _check_pair(m1, m2):
    if m1.d != m2.d:
        raise InvalidComparisonError(f"dimension mismatch: {m1.d} vs {m2.d}")
    if m1.T != m2.T:
        raise InvalidComparisonError(f"terminal time mismatch: {m1.T} vs {m2.T}")


def _respec_equal(m1, m2):
    s1, s2 = eigen_summary(m1.A), eigen_summary(m2.A)
    tol = max(s1.grouping_tol, s2.grouping_tol)
    return (
        len(s1.respec) == len(s2.respec)
        and s1.multiplicities == s2.multiplicities
        and np.allclose(s1.respec, s2.respec, rtol=0, atol=tol)
    ), s1, s2


@dataclass(frozen=True)
class LawComparison:
    verdict: str
    noise_match: bool
    covariance_match: bool
    respec_match: bool
    max_deviation: float
    scale: float
    grid: np.ndarray
    deviations: np.ndarray
    quad_errors: np.ndarray

    def to_json(self):
        return {
            "verdict": self.verdict,
            "max_deviation": self.max_deviation,
            "grid": self.grid.tolist(),
            "noise_match": self.noise_match,
            "covariance_match": self.covariance_match,
            "respec_match": self.respec_match,
            "deviations": self.deviations.tolist(),
        }


def compare_laws(m1, m2, grid=None):
    """Compare the laws of two bridge models on a time grid.

    Verdicts: ``same-law`` (covariances and parameters agree),
    ``same-law-despite-different-A`` (covariances agree, ``||A - A~|| > 1e-8``),
    ``different-law`` (noise mismatch, or a covariance deviation that is at
    least 1000 times the quadrature error there), ``inconclusive`` when the
    deviation exceeds the match threshold but not the quadrature noise bound.
    """
    _check_pair(m1, m2)
    grid = default_law_grid(m1.T) if grid is None else check_grid(grid, m1.T)
    Q1, Q2 = m1.noise, m2.noise
    noise_match = bool(np.linalg.norm(Q1 - Q2, 2) <= NOISE_RTOL * (1 + np.linalg.norm(Q1, 2)))
    r1, r2 = covariance(m1, grid), covariance(m2, grid)
    dev = np.linalg.norm(r1.matrices - r2.matrices, ord=2, axis=(1, 2))
    qerr = r1.quad_error + r2.quad_error
    size = max(np.linalg.norm(r1.matrices, ord=2, axis=(1, 2)).max(), np.linalg.norm(r2.matrices, ord=2, axis=(1, 2)).max())
    scale = 1.0 + float(size)
    max_dev = float(dev.max())
    cov_match = max_dev <= COV_RTOL * scale
    respec_match, _, _ = _respec_equal(m1, m2)

    if noise_match and cov_match:
        if np.linalg.norm(m1.A - m2.A) > A_DIFF_TOL:
            verdict = "same-law-despite-different-A"
        else:
            verdict = "same-law"
    elif not noise_match or np.any(dev >= QUAD_NOISE_FACTOR * np.maximum(qerr, np.finfo(float).tiny)):
        verdict = "different-law"
    else:
        verdict = "inconclusive"
    return LawComparison(verdict, noise_match, bool(cov_match), bool(respec_match), max_dev, scale, grid, dev, qerr)


@dataclass(frozen=True)
class ConsistencyReport:
    applicable: bool
    consistent: object
    respec1: tuple
    respec2: tuple
    message: str

    def to_json(self):
        return {
            "applicable": self.applicable,
            "consistent": self.consistent,
            "respec1": list(self.respec1),
            "respec2": list(self.respec2),
            "message": self.message,
        }


def respec_consistency(m1, m2, comparison):
    """Check that equal laws imply equal ``ReSpec`` where that implication is known to hold.

    The implication is only proven when both spectra lie in (0, 1/2) and both
    diffusions have full rank; outside that case the report says it does not
    apply.  A failure inside it signals an internal inconsistency.
    """
    same, s1, s2 = _respec_equal(m1, m2)

    def in_range(s, model):
        re = s.eigenvalues.real
        return re.min() > s.grouping_tol and re.max() < 0.5 - s.grouping_tol and model.sigma_rank == model.d

    if comparison.verdict not in ("same-law", "same-law-despite-different-A"):
        return ConsistencyReport(False, None, s1.respec, s2.respec, "laws differ; uniqueness result not applicable")
    if not (in_range(s1, m1) and in_range(s2, m2)):
        return ConsistencyReport(
            False,
            None,
            s1.respec,
            s2.respec,
            "hypothesis ReSpec in (0, 1/2) with full-rank Sigma not met; equality of ReSpec is only conjectured here",
        )
    msg = "ReSpec(A) = ReSpec(A~) as required" if same else "INCONSISTENT: same law but ReSpec(A) != ReSpec(A~)"
    return ConsistencyReport(True, bool(same), s1.respec, s2.respec, msg)


@dataclass(frozen=True)
class DefectReport:
    grid: np.ndarray
    defects: np.ndarray
    max_defect: float
    scale: float
    vanishes: bool

    def to_json(self):
        return {
            "grid": self.grid.tolist(),
            "defects": self.defects.tolist(),
            "max_defect": self.max_defect,
            "vanishes": self.vanishes,
        }


def commutator_defect(m1, m2, grid=None):
    """``||(A - A~) U(t) + U(t) (A - A~)^T||`` on a grid, with ``U`` from ``m1``.

    A cheap necessary condition for equal laws: it must vanish wherever the
    covariances coincide.
    """
    _check_pair(m1, m2)
    grid = default_law_grid(m1.T) if grid is None else check_grid(grid, m1.T)
    U = covariance(m1, grid).matrices
    D = m1.A - m2.A
    E = D @ U + U @ D.T
    defects = np.linalg.norm(E, ord=2, axis=(1, 2))
    scale = (1.0 + np.linalg.norm(D, 2)) * (1.0 + float(np.linalg.norm(U, ord=2, axis=(1, 2)).max()))
    mx = float(defects.max())
    return DefectReport(grid, defects, mx, scale, bool(mx <= COV_RTOL * scale))


def normal_kernel_defect(A, r):
    """``||r**A r**(A^T) - r**(A + A^T)||`` (zero for normal ``A``)."""
    A = np.asarray(A, dtype=float)
    lhs = op_power(A, r) @ op_power(A.T, r)
    rhs = op_power(A + A.T, r)
    return np.linalg.norm(lhs - rhs, ord=2, axis=(-2, -1))


def random_normal_matrix(rng, d, real_range=(0.05, 2.0), max_imag=2.0):
    """Random real normal matrix ``Q D Q^T`` with ``D`` built from 2x2 rotation-scaling blocks.

    The result is checked to satisfy ``||A A^T - A^T A|| <= 1e-10``.
    """
    blocks = []
    k = 0
    while k < d:
        a = rng.uniform(*real_range)
        if k + 1 < d and rng.random() < 0.7:
            b = rng.uniform(0.1, max_imag)
            blocks.append(np.array([[a, b], [-b, a]]))
            k += 2
        else:
            blocks.append(np.array([[a]]))
            k += 1
    D = scipy.linalg.block_diag(*blocks)
    Q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    A = Q @ D @ Q.T
    if np.linalg.norm(A @ A.T - A.T @ A) > 1e-10:
        raise ArithmeticError("generated matrix is not normal to 1e-10")
    return A
