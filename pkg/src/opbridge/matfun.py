"""Matrix functions: exponential, operator powers ``r**A`` and eigenvalue summaries.

All functions accept stacks of matrices with shape ``(..., d, d)`` where that
makes sense, so quadrature routines can evaluate many nodes in one call.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidInputError, LimitUndefinedError, NumericalFailureError

__all__ = [
    "EigenSummary",
    "as_square_matrix",
    "default_grouping_tol",
    "eigen_summary",
    "expm",
    "op_power",
    "op_power_at_zero",
]

# Higham (2005), degree 13 diagonal Pade approximant to exp.
_PADE13 = np.array(
    [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ]
)
_THETA13 = 5.371920351148152


def as_square_matrix(M, name="matrix"):
    """Return ``M`` as a finite float array of shape ``(d, d)``, ``d >= 1``."""
    M = np.array(M, dtype=float)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise InvalidInputError(f"{name} must be a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return M


def _matmul_chain(*ms):
    out = ms[0]
    for m in ms[1:]:
        out = out @ m
    return out


def expm(M):
    """Matrix exponential by scaling and squaring with a degree 13 Pade approximant.

    Parameters
    ----------
    M : array_like, shape (..., d, d)
        Real square matrix or stack of matrices.

    Returns
    -------
    ndarray, shape (..., d, d)

    Notes
    -----
    The scaling power ``s`` is chosen per matrix from its 1-norm so that
    ``||M / 2**s||_1 <= theta_13``; this keeps the backward error of the
    approximant at unit-roundoff level.  No eigendecomposition is used, so
    defective matrices are handled like any other.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise InvalidInputError(f"expm needs square matrices, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError("expm: non-finite entries")
    d = M.shape[-1]
    norms = np.abs(M).sum(axis=-2).max(axis=-1)
    with np.errstate(divide="ignore"):
        s = np.ceil(np.log2(norms / _THETA13))
    s = np.where(np.isfinite(s) & (s > 0), s, 0).astype(int)
    X = M * np.exp2(-s)[..., None, None]

    b = _PADE13
    eye = np.broadcast_to(np.eye(d), X.shape)
    X2 = X @ X
    X4 = X2 @ X2
    X6 = X4 @ X2
    U = X @ (X6 @ (b[13] * X6 + b[11] * X4 + b[9] * X2) + b[7] * X6 + b[5] * X4 + b[3] * X2 + b[1] * eye)
    V = X6 @ (b[12] * X6 + b[10] * X4 + b[8] * X2) + b[6] * X6 + b[4] * X4 + b[2] * X2 + b[0] * eye
    R = np.linalg.solve(V - U, V + U)
    # LU round-off would otherwise leave exp(0) at 1 - eps.
    R[norms == 0] = np.eye(d)

    smax = int(s.max()) if s.size else 0
    if smax:
        if R.ndim == 2:
            for _ in range(smax):
                R = R @ R
        else:
            for k in range(smax):
                mask = s > k
                R[mask] = R[mask] @ R[mask]
    return R


def op_power(M, r):
    """Operator power ``r**M = exp(M log r)``.

    ``r`` may be a scalar or a 1-D array; for an array the result is stacked
    along a leading axis.  ``op_power(M, 1)`` is the identity exactly.
    """
    M = as_square_matrix(M)
    r = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(r)) or np.any(r <= 0):
        raise DomainError("op_power requires r > 0; use op_power_at_zero for the limit r -> 0")
    logr = np.log(r)
    return expm(logr[..., None, None] * M)


def default_grouping_tol(M):
    return 1e-8 * (1.0 + np.linalg.norm(M, 2))


@dataclass(frozen=True)
class EigenSummary:
    """Eigenvalues of a real matrix grouped by distinct real part.

    Attributes
    ----------
    eigenvalues : ndarray of complex
        All eigenvalues, repeated according to algebraic multiplicity and
        sorted by real part (then imaginary part).
    respec : tuple of float
        Distinct real parts ``a_1 < ... < a_p`` after merging.
    multiplicities : tuple of int
        Number of eigenvalues in each group, summing to ``d``.
    grouping_tol : float
        Real parts differing by at most this much are merged.
    """

    eigenvalues: np.ndarray
    respec: tuple
    multiplicities: tuple
    grouping_tol: float

    @property
    def dim(self):
        return len(self.eigenvalues)

    def group_bounds(self):
        """(min, max) real part of the eigenvalues in each group."""
        out, start = [], 0
        re = self.eigenvalues.real
        for n in self.multiplicities:
            out.append((float(re[start]), float(re[start + n - 1])))
            start += n
        return out


def eigen_summary(M, grouping_tol=None):
    """Eigenvalues of ``M`` and the distinct real parts ``ReSpec(M)``.

    Real parts are sorted and chained into groups: consecutive values closer
    than ``grouping_tol`` belong to one group, represented by its mean.  The
    default tolerance is ``1e-8 * (1 + ||M||_2)``.
    """
    M = as_square_matrix(M)
    if grouping_tol is None:
        grouping_tol = default_grouping_tol(M)
    if grouping_tol < 0:
        raise InvalidInputError("grouping_tol must be >= 0")
    try:
        ev = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"eigensolver did not converge: {exc}", shape=M.shape) from exc
    ev = np.asarray(ev, dtype=complex)
    ev = ev[np.lexsort((ev.imag, ev.real))]

    groups = [[ev[0]]]
    for lam in ev[1:]:
        if lam.real - groups[-1][-1].real <= grouping_tol:
            groups[-1].append(lam)
        else:
            groups.append([lam])
    respec = tuple(float(np.mean([z.real for z in g])) for g in groups)
    return EigenSummary(ev, respec, tuple(len(g) for g in groups), float(grouping_tol))


def op_power_at_zero(M, grouping_tol=None):
    """Limit of ``t**M`` as ``t -> 0+``.

    The limit is the zero matrix exactly when every eigenvalue of ``M`` has
    positive real part; otherwise ``t**M`` does not tend to zero and a
    :class:`LimitUndefinedError` is raised.
    """
    M = as_square_matrix(M)
    summary = eigen_summary(M, grouping_tol)
    if summary.respec[0] <= summary.grouping_tol:
        raise LimitUndefinedError(
            f"t**M does not vanish as t -> 0: smallest real part {summary.respec[0]:.3g} is not positive"
        )
    return np.zeros_like(M)
