"""Bridge classification, Monte Carlo convergence checks and decay exponents.

Almost-sure statements about ``X_t`` as ``t -> T`` cannot be falsified from
finitely many discretised paths, so everything here works with moment or
distributional proxies: decay of ``E||X_t||^2``, scaling of covariances,
medians of rescaled norms.  Each report says so in its ``notes``.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .bridgecore import covariance
from .errors import InsufficientResolutionError, NumericalFailureError, PreconditionError
from .matfun import as_square_matrix, eigen_summary, op_power
from .spectral import decompose

__all__ = [
    "ClassificationReport",
    "ConvergenceReport",
    "DecayReport",
    "ProbeReport",
    "classify",
    "convergence_diagnostic",
    "decay_exponent",
    "refinement_levels",
    "rescaled_limit_probe",
]

PROXY_NOTE = "almost-sure limit tested in moment/distribution proxy form on a finite grid"
SEMISIMPLE_COND = 1e8
DECAY_WINDOW = (0.99, 1.0 - 2.0**-20)
DECAY_POINTS = 15


class _Report:
    def to_json(self):
        out = {}
        for k, v in asdict(self).items():
            if isinstance(v, np.ndarray):
                v = v.tolist()
            elif isinstance(v, tuple):
                v = [x.tolist() if isinstance(x, np.ndarray) else x for x in v]
            elif isinstance(v, (np.floating, np.integer, np.bool_)):
                v = v.item()
            out[k] = v
        return out

    def to_text(self):
        lines = [type(self).__name__]
        for k, v in self.to_json().items():
            lines.append(f"  {k}: {v}")
        return "\n".join(lines)


@dataclass(frozen=True)
class ClassificationReport(_Report):
    respec: tuple
    sigma_rank: int
    verdict: str
    rule: str
    notes: tuple = ()


def _is_semisimple(A):
    _, V = np.linalg.eig(A)
    return np.linalg.cond(V) <= SEMISIMPLE_COND


def classify(model, grouping_tol=None):
    """Decide whether ``X_t -> 0`` as ``t -> T`` is guaranteed.

    ``bridge``
        every eigenvalue of ``A`` has positive real part and ``rank(Sigma) = d``
        (sufficient condition).
    ``counterexample-class``
        ``A`` is diagonalisable with purely imaginary (or zero) spectrum and
        ``Sigma != 0``; then ``r**A`` stays bounded with bounded inverse,
        ``Cov(X_t)`` does not vanish and ``X_t`` has a nondegenerate Gaussian
        limit in law.  Skew-symmetric ``A`` is the prototypical member.
    ``not-guaranteed``
        anything else.
    """
    summary = eigen_summary(model.A, grouping_tol)
    tol = summary.grouping_tol
    re = summary.eigenvalues.real
    respec = summary.respec
    d, rank = model.d, model.sigma_rank
    notes = []

    if re.min() > tol and rank == d:
        if re.max() < 0.5 - tol:
            notes.append("all real parts below 1/2: bounded quadratic variation, full rank of Sigma not needed")
        return ClassificationReport(
            respec, rank, "bridge", "ReSpec(A) in (0, inf) and rank(Sigma) = d imply X_t -> 0 a.s.", tuple(notes)
        )

    if np.all(np.abs(re) <= tol) and rank > 0 and _is_semisimple(model.A):
        A = model.A
        if np.allclose(A.T, -A, atol=tol):
            notes.append("A is skew-symmetric: r**A is orthogonal for every r > 0")
            if np.allclose(model.noise, np.eye(d), atol=1e-10):
                notes.append("Sigma Sigma^T = I: X_t has the law of B_t for every t < T")
        return ClassificationReport(
            respec,
            rank,
            "counterexample-class",
            "purely imaginary spectrum, diagonalisable A: X_t converges in law to a nondegenerate Gaussian, "
            "not a.s. to a constant",
            tuple(notes),
        )

    if re.min() <= tol:
        rule = "some eigenvalue has nonpositive real part: no deterministic a.s. limit in general (already for d = 1)"
        if re.min() < -tol and re.max() > tol:
            notes.append("ReSpec(A) has both signs; empirics only, no verdict")
    else:
        rule = "rank(Sigma) < d: sufficient condition for the bridge property not met"
        if re.max() < 0.5 - tol:
            notes.append("all real parts below 1/2: convergence still holds without full rank")
    if rank == 0:
        notes.append("Sigma = 0: X is identically zero")
    return ClassificationReport(respec, rank, "not-guaranteed", rule, tuple(notes))


def refinement_levels(times, T, rtol=1e-12):
    """Indices and levels ``k`` of grid times equal to ``T (1 - 2**-k)``."""
    times = np.asarray(times, dtype=float)
    idx, ks = [], []
    with np.errstate(divide="ignore", invalid="ignore"):
        k_est = -np.log2(1.0 - times / T)
    for i, k in enumerate(k_est):
        if not np.isfinite(k) or k < 0.5:
            continue
        kr = int(round(k))
        if abs(times[i] - T * (1.0 - 2.0**-kr)) <= rtol * T:
            idx.append(i)
            ks.append(kr)
    return np.array(idx, dtype=int), np.array(ks, dtype=int)


@dataclass(frozen=True)
class ConvergenceReport(_Report):
    verdict: str
    levels: np.ndarray
    times: np.ndarray
    second_moments: np.ndarray
    stderr: np.ndarray
    analytic_second_moments: np.ndarray
    monotone_tail: bool
    decay_ratio: float
    converged: bool
    passed: object
    martingale_cov_diffs: object = None
    martingale_stabilizing: object = None
    notes: tuple = ()


def convergence_diagnostic(ensemble, model, tail=5):
    """Track ``E||X_t||^2`` along the refinement levels ``t_k = T (1 - 2**-k)``.

    ``converged`` means the second moment decreases strictly over the last
    ``tail`` levels and ends below a tenth of its value at the first level.
    For a model classified as a bridge ``passed`` is ``converged``; for other
    verdicts nothing is asserted and ``passed`` is None.

    When all real parts lie in (0, 1/2) the empirical covariance of
    ``M_t = (T - t)**-A X_t`` is also reported; shrinking successive
    differences are evidence for the normal limit ``M_T``.
    """
    idx, ks = refinement_levels(ensemble.times, model.T)
    if len(idx) < tail:
        raise InsufficientResolutionError(
            f"need at least {tail} refinement levels T(1 - 2^-k) on the ensemble grid, found {len(idx)}"
        )
    times = ensemble.times[idx]
    X = ensemble.paths[:, idx, :]
    sq = np.sum(X * X, axis=-1)
    m2 = sq.mean(axis=0)
    se = sq.std(axis=0, ddof=1) / np.sqrt(max(ensemble.n_paths, 1)) if ensemble.n_paths > 1 else np.zeros_like(m2)
    analytic = np.trace(covariance(model, times).matrices, axis1=1, axis2=2)
    report = classify(model)
    notes = [PROXY_NOTE]

    if not np.any(m2):
        monotone, ratio, converged = True, 0.0, True
        notes.append("all paths identically zero")
    else:
        monotone = bool(np.all(np.diff(m2[-tail:]) < 0))
        ratio = float(m2[-1] / m2[0]) if m2[0] > 0 else np.inf
        converged = monotone and ratio < 0.1
    passed = converged if report.verdict == "bridge" else None

    diffs = stab = None
    summary = eigen_summary(model.A)
    re = summary.eigenvalues.real
    if re.min() > summary.grouping_tol and re.max() < 0.5 - summary.grouping_tol:
        covs = []
        for k, t in enumerate(times):
            Mt = X[:, k, :] @ op_power(-model.A, model.T - t).T
            covs.append(Mt.T @ Mt / ensemble.n_paths)
        diffs = np.array([np.linalg.norm(covs[k + 1] - covs[k]) for k in range(len(covs) - 1)])
        stab = bool(diffs[-1] < diffs[0]) if len(diffs) > 1 else None
    return ConvergenceReport(
        report.verdict,
        ks,
        times,
        m2,
        se,
        analytic,
        monotone,
        ratio,
        bool(converged),
        passed,
        diffs,
        stab,
        tuple(notes),
    )


@dataclass(frozen=True)
class DecayReport(_Report):
    block_index: int
    real_part: float
    predicted_state_exponent: float
    predicted_moment_exponent: float
    estimated_exponent: float
    stderr: float
    grid_window: np.ndarray
    route: str
    band: float
    within_band: bool
    notes: tuple = ()


def _fit_slope(x, y):
    if len(x) < 3 or np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise NumericalFailureError("decay regression ill-posed: need >= 3 positive finite moments", moments=y.tolist())
    lx, ly = np.log(x), np.log(y)
    coef, _, rank, _, _ = np.polyfit(lx, ly, 1, full=True)
    if rank < 2:
        raise NumericalFailureError("decay regression design is rank deficient")
    resid = ly - np.polyval(coef, lx)
    sxx = np.sum((lx - lx.mean()) ** 2)
    stderr = float(np.sqrt(np.sum(resid**2) / max(len(x) - 2, 1) / sxx))
    return float(coef[0]), stderr


def decay_exponent(model, j, ensemble=None, band=None):
    """Exponent of ``E||X^[j]_t||^2 ~ (T - t)**e`` near ``T`` for spectral block ``j``.

    ``j`` is a 0-based index into the blocks of ``decompose(A, Sigma)``.
    Without ``ensemble`` the second moment is the trace of the block of
    ``P^-1 U(t) P^-T`` at 15 geometric points of ``[0.99 T, T (1 - 2**-20)]``;
    with an ensemble it is the empirical mean of ``||pi_j(X_t)||^2`` on the
    ensemble grid times inside that window.  The prediction is
    ``min(2 a_j, 1)`` and ``within_band`` uses +-0.1 (analytic) or +-0.15
    (Monte Carlo) unless ``band`` is given.
    """
    report = classify(model)
    if report.verdict != "bridge":
        raise PreconditionError(f"decay analysis needs a bridge model, verdict is {report.verdict}")
    dec = decompose(model.A, model.Sigma)
    if not 0 <= j < dec.p:
        raise PreconditionError(f"block index {j} out of range 0..{dec.p - 1}")
    a = float(dec.real_parts[j])
    T = model.T
    sl = dec.block_slice(j)
    lo, hi = DECAY_WINDOW
    notes = [PROXY_NOTE, "norms are Euclidean in the adapted spectral basis"]

    if ensemble is None:
        tau = T * np.geomspace(1 - lo, 1 - hi, DECAY_POINTS)
        times = T - tau
        U = covariance(model, times).matrices
        Pinv = np.linalg.inv(dec.basis)
        Ub = Pinv @ U @ Pinv.T
        y = np.trace(Ub[:, sl, sl], axis1=1, axis2=2)
        route = "analytic"
        band = 0.1 if band is None else band
    else:
        slack = 1e-12 * T
        sel = (ensemble.times >= lo * T - slack) & (ensemble.times <= hi * T + slack)
        times = ensemble.times[sel]
        if len(times) < 3:
            raise InsufficientResolutionError(f"ensemble has {len(times)} grid times in [{lo}T, {hi}T]; need >= 3")
        coords = dec.to_coordinates(ensemble.paths[:, sel, :])[..., sl]
        y = np.mean(np.sum(coords**2, axis=-1), axis=0)
        tau = T - times
        route = "monte-carlo"
        band = 0.15 if band is None else band

    slope, stderr = _fit_slope(tau, y)
    predicted = min(2 * a, 1.0)
    return DecayReport(
        j,
        a,
        min(a, 0.5),
        predicted,
        slope,
        stderr,
        times,
        route,
        float(band),
        bool(abs(slope - predicted) <= band),
        tuple(notes),
    )


@dataclass(frozen=True)
class ProbeReport(_Report):
    expected: str
    observed: str
    matches: bool
    slope: float
    times: np.ndarray
    medians: np.ndarray
    divergence_confirmed: bool
    notes: tuple = ()


def rescaled_limit_probe(model, Atilde, ensemble, window_start=0.99, margin=0.02, divergence_factor=1e3):
    """Behaviour of ``(T - t)**-Atilde X_t`` along the refinement levels.

    For ``Atilde`` commuting with ``A`` and all real parts of ``A`` in
    (0, 1/2), ``(T - t)**-Atilde X_t = (T - t)**(A - Atilde) M_t`` with
    ``M_t`` converging to a normal vector.  The norm therefore tends to 0
    when ``A - Atilde`` has positive spectrum, to infinity when it has
    negative spectrum, and to ``||M_T||`` when ``Atilde = A``.

    The observed trend is the sign of the slope of the log median norm
    against ``log(T - t)`` over refinement levels inside
    ``[window_start T, T)``; ``|slope| <= margin`` counts as stable.
    ``divergence_confirmed`` records whether the median grew by
    ``divergence_factor`` over the window, which for small real-part gaps
    needs grids far finer than double precision resolves near ``T``.
    """
    A = model.A
    At = as_square_matrix(Atilde, "Atilde")
    if At.shape != A.shape:
        raise PreconditionError("Atilde must have the shape of A")
    if np.linalg.norm(A @ At - At @ A) > 1e-10 * (1 + np.linalg.norm(A) * np.linalg.norm(At)):
        raise PreconditionError("Atilde does not commute with A")
    summary = eigen_summary(A)
    re = summary.eigenvalues.real
    if not (re.min() > summary.grouping_tol and re.max() < 0.5 - summary.grouping_tol):
        raise PreconditionError("probe requires every real part of A in (0, 1/2)")

    D = eigen_summary(A - At)
    dre = D.eigenvalues.real
    if dre.min() > D.grouping_tol:
        expected = "to_zero"
    elif dre.max() < -D.grouping_tol:
        expected = "to_infinity"
    elif np.all(np.abs(dre) <= D.grouping_tol):
        expected = "stable"
    else:
        expected = "indeterminate"

    idx, _ = refinement_levels(ensemble.times, model.T)
    idx = idx[ensemble.times[idx] >= window_start * model.T - 1e-12 * model.T]
    if len(idx) < 3:
        raise InsufficientResolutionError("need >= 3 refinement levels inside the probe window")
    times = ensemble.times[idx]
    medians = np.empty(len(idx))
    for k, (i, t) in enumerate(zip(idx, times)):
        Y = ensemble.paths[:, i, :] @ op_power(-At, model.T - t).T
        medians[k] = np.median(np.linalg.norm(Y, axis=1))
    slope, _ = _fit_slope(model.T - times, medians)
    if slope > margin:
        observed = "to_zero"
    elif slope < -margin:
        observed = "to_infinity"
    else:
        observed = "stable"
    confirmed = bool(medians[-1] > divergence_factor * medians[0])
    return ProbeReport(expected, observed, observed == expected, slope, times, medians, confirmed, (PROXY_NOTE,))
