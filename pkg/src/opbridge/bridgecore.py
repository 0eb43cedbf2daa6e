"""The bridge model ``dX = -(T - t)^-1 A X dt + Sigma dB`` and its second moments.

Every quantity here is a deterministic integral of operator powers:

* ``U(t) = int_0^t R(s) Sigma Sigma^T R(s)^T ds`` with ``R(s) = ((T-t)/(T-s))**A``;
* ``<M^(i)>_t = int_0^t ||e_i^T (T-s)**-A Sigma||^2 ds`` for the martingale
  ``M_t = (T - t)**-A X_t``.

Integrals over ``[lo, hi]`` with ``hi`` close to ``T`` are taken in the
variable ``v = log((T - s)/(T - hi))``, which turns the algebraic
singularity at ``s = T`` into exponential behaviour on a bounded interval.
"""

import hashlib
import io
import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import _quadrature
from .errors import DomainError, InvalidInputError, PreconditionError
from .grids import check_grid
from .matfun import as_square_matrix, eigen_summary, op_power

__all__ = [
    "BridgeModel",
    "CovarianceReport",
    "QuadVarCurve",
    "covariance",
    "covariance_ode_residual",
    "cross_covariance",
    "kernel_integral",
    "martingale_factor",
    "quadratic_variation",
]

LOG_SUBSTITUTION_FRAC = 0.9
QUAD_RTOL = 1e-12


def _fmt(x):
    return repr(float(x))


@dataclass(frozen=True, eq=False)
class BridgeModel:
    """Parameters ``(A, Sigma, T)`` of an operator scaled bridge SDE.

    ``Sigma`` may be rectangular (``d x m``).  ``sigma_rank`` is computed at
    construction from the singular values with relative cutoff ``1e-10``.
    """

    A: np.ndarray
    Sigma: np.ndarray
    T: float = 1.0
    labels: tuple = ()
    sigma_rank: int = field(init=False)

    def __post_init__(self):
        A = as_square_matrix(self.A, "A")
        Sigma = np.array(self.Sigma, dtype=float)
        if Sigma.ndim == 0:
            Sigma = Sigma.reshape(1, 1)
        elif Sigma.ndim == 1:
            Sigma = Sigma.reshape(A.shape[0], -1)
        if Sigma.ndim != 2 or Sigma.shape[0] != A.shape[0] or Sigma.shape[1] < 1:
            raise InvalidInputError(f"Sigma must have shape ({A.shape[0]}, m), got {Sigma.shape}")
        if not np.all(np.isfinite(Sigma)):
            raise InvalidInputError("Sigma has non-finite entries")
        T = float(self.T)
        if not np.isfinite(T) or T <= 0:
            raise InvalidInputError(f"terminal time T must be positive, got {self.T!r}")
        A.setflags(write=False)
        Sigma.setflags(write=False)
        sv = np.linalg.svd(Sigma, compute_uv=False)
        rank = int(np.sum(sv > 1e-10 * sv[0])) if sv[0] > 0 else 0
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Sigma", Sigma)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "sigma_rank", rank)

    @property
    def d(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.Sigma.shape[1]

    @property
    def noise(self):
        """``Sigma Sigma^T``."""
        return self.Sigma @ self.Sigma.T

    def respec(self, grouping_tol=None):
        return eigen_summary(self.A, grouping_tol).respec

    def to_json(self):
        out = {"T": self.T, "A": self.A.tolist(), "Sigma": self.Sigma.tolist()}
        if self.labels:
            out["labels"] = list(self.labels)
        return out

    @property
    def model_hash(self):
        payload = json.dumps(
            {"T": _fmt(self.T), "A": [[_fmt(x) for x in r] for r in self.A], "Sigma": [[_fmt(x) for x in r] for r in self.Sigma]},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()

    def __repr__(self):
        return f"BridgeModel(d={self.d}, m={self.m}, T={self.T})"


def _time(model, t, name="t"):
    t = float(t)
    if not 0 <= t < model.T:
        raise DomainError(f"{name}={t!r} must lie in [0, T) with T={model.T!r}")
    return t


def kernel_integral(model, lo, hi):
    """``int_lo^hi R(s) Sigma Sigma^T R(s)^T ds`` with ``R(s) = ((T-hi)/(T-s))**A``.

    With ``lo = 0`` this is ``U(hi)``; on a grid step it is the covariance of
    the fresh noise added to ``X`` between ``lo`` and ``hi``.

    Returns
    -------
    value : ndarray (d, d)
        Symmetrised integral.
    error : float
        Quadrature error estimate (max over entries).
    """
    T, A, Sig = model.T, model.A, model.Sigma
    lo, hi = float(lo), float(hi)
    if hi <= lo:
        return np.zeros((model.d, model.d)), 0.0
    if not np.any(Sig):
        return np.zeros((model.d, model.d)), 0.0
    tau = T - hi

    if hi > LOG_SUBSTITUTION_FRAC * T:
        L = np.log((T - lo) / tau)

        def f(v):
            W = op_power(A, np.exp(-v)) @ Sig
            return (tau * np.exp(v))[:, None, None] * (W @ np.swapaxes(W, -1, -2))

        val, err = _quadrature.integrate(f, 0.0, L, rtol=QUAD_RTOL)
    else:

        def f(s):
            W = op_power(A, tau / (T - s)) @ Sig
            return W @ np.swapaxes(W, -1, -2)

        val, err = _quadrature.integrate(f, lo, hi, rtol=QUAD_RTOL)
    return 0.5 * (val + val.T), float(np.max(err))


@dataclass(frozen=True)
class CovarianceReport:
    """``U(t) = E[X_t X_t^T]`` on a time grid."""

    times: np.ndarray
    matrices: np.ndarray
    quad_error: np.ndarray

    def to_csv(self):
        d = self.matrices.shape[-1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"U{i + 1}{j + 1}" for i in range(d) for j in range(d)] + ["quad_error"])
        for t, U, e in zip(self.times, self.matrices, self.quad_error):
            w.writerow([_fmt(t)] + [_fmt(x) for x in U.ravel()] + [_fmt(e)])
        return buf.getvalue()

    def to_json(self):
        return {
            "times": self.times.tolist(),
            "matrices": self.matrices.tolist(),
            "quad_error": self.quad_error.tolist(),
        }


def covariance(model, times):
    """Covariance matrices ``U(t)`` of ``X_t`` for each ``t`` in ``times``.

    Examples
    --------
    >>> m = BridgeModel([[1.0]], [[1.0]], 1.0)
    >>> float(covariance(m, [0.25]).matrices[0, 0, 0])  # t (T - t) / T
    0.1875
    """
    times = check_grid(times, model.T)
    mats = np.empty((len(times), model.d, model.d))
    errs = np.empty(len(times))
    for k, t in enumerate(times):
        mats[k], errs[k] = kernel_integral(model, 0.0, t)
    return CovarianceReport(times, mats, errs)


def cross_covariance(model, s, t):
    """``E[X_s X_t^T]``.

    Uses ``X_t = ((T-t)/(T-s))**A X_s + (noise independent of X_s)`` for
    ``s <= t``, so only ``U(min(s, t))`` needs quadrature.
    """
    s = _time(model, s, "s")
    t = _time(model, t, "t")
    T = model.T
    if s <= t:
        U, _ = kernel_integral(model, 0.0, s)
        return U @ op_power(model.A, (T - t) / (T - s)).T
    U, _ = kernel_integral(model, 0.0, t)
    return op_power(model.A, (T - s) / (T - t)) @ U


@dataclass(frozen=True)
class QuadVarCurve:
    """Quadratic variation ``<M^(i)>_t`` of one martingale coordinate.

    ``divergence_flag`` is ``"bounded"``, ``"divergent"`` or ``"undetermined"``
    and reflects the limit as ``t -> T``, decided from ``ReSpec(A)`` and the
    rank of ``Sigma`` rather than from the computed values.
    """

    coordinate: int
    times: np.ndarray
    values: np.ndarray
    divergence_flag: str
    quad_error: np.ndarray

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", f"qv{self.coordinate}"])
        for t, v in zip(self.times, self.values):
            w.writerow([_fmt(t), _fmt(v)])
        return buf.getvalue()

    def to_json(self):
        return {
            "coordinate": self.coordinate,
            "times": self.times.tolist(),
            "values": self.values.tolist(),
            "divergence_flag": self.divergence_flag,
        }


def divergence_flag(model, grouping_tol=None):
    """Limit behaviour of ``<M^(i)>_t`` as ``t -> T`` for all coordinates.

    Bounded when every real part lies in (0, 1/2); divergent when every real
    part exceeds 1/2 and ``Sigma`` has rank ``d``; undetermined otherwise
    (including real part exactly 1/2).
    """
    summary = eigen_summary(model.A, grouping_tol)
    tol = summary.grouping_tol
    lo, hi = summary.eigenvalues.real.min(), summary.eigenvalues.real.max()
    if lo > tol and hi < 0.5 - tol:
        return "bounded"
    if lo > 0.5 + tol and model.sigma_rank == model.d:
        return "divergent"
    return "undetermined"


def _quadvar_all(model, times):
    """``<M^(i)>`` for all coordinates on ``times``; shape (n, d)."""
    T, A, Sig = model.T, model.A, model.Sigma
    times = check_grid(times, T)

    # u = -log(T - s): ds = exp(-u) du and (T - s)**-A = (exp(u))**A.
    def f(u):
        W = op_power(A, np.exp(u)) @ Sig
        return np.exp(-u)[:, None] * np.sum(W * W, axis=-1)

    knots = -np.log(T - np.concatenate([[0.0], times]))
    vals = np.zeros((len(times), model.d))
    errs = np.zeros(len(times))
    acc = np.zeros(model.d)
    acc_err = 0.0
    for k in range(len(times)):
        if knots[k + 1] > knots[k]:
            v, e = _quadrature.integrate(f, knots[k], knots[k + 1], rtol=QUAD_RTOL)
            acc = acc + v
            acc_err += float(np.max(e))
        vals[k] = acc
        errs[k] = acc_err
    return times, vals, errs


def quadratic_variation(model, i, times):
    """Quadratic variation of the ``i``-th coordinate (``1 <= i <= d``) of ``M``.

    Values are accumulated panel by panel between grid times, so the curve is
    nondecreasing by construction.
    """
    if not 1 <= int(i) <= model.d:
        raise InvalidInputError(f"coordinate i must be in 1..{model.d}, got {i}")
    times, vals, errs = _quadvar_all(model, times)
    return QuadVarCurve(int(i), times, vals[:, int(i) - 1].copy(), divergence_flag(model), errs)


def covariance_ode_residual(model, t, h):
    """Central difference of ``U`` minus ``-(AU + UA^T)/(T-t) + Sigma Sigma^T``."""
    t = _time(model, t)
    h = float(h)
    if not 0 < h < min(t, model.T - t) / 4:
        raise PreconditionError(f"step h={h!r} must satisfy 0 < h < min(t, T - t)/4")
    rep = covariance(model, [t - h, t, t + h])
    Um, U, Up = rep.matrices
    A = model.A
    rhs = -(A @ U + U @ A.T) / (model.T - t) + model.noise
    return (Up - Um) / (2 * h) - rhs


def martingale_factor(model, t):
    """``((T - t)**A, (T - t)**-A)`` so that ``X_t = (T-t)**A M_t``."""
    t = _time(model, t)
    r = model.T - t
    return op_power(model.A, r), op_power(-model.A, r)
