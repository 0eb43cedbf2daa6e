"""Time grids on ``[0, T)`` used throughout the package."""

import numpy as np

from .errors import DomainError, InvalidInputError

__all__ = ["check_grid", "default_grid", "geometric_levels", "parse_grid", "uniform_grid"]


def geometric_levels(T, k_min=1, k_max=20):
    """Times ``T (1 - 2**-k)`` for ``k = k_min .. k_max``."""
    k = np.arange(k_min, k_max + 1)
    return T * (1.0 - np.exp2(-k.astype(float)))


def uniform_grid(T, n_steps, end_frac=1.0):
    """``n_steps + 1`` equally spaced times from 0 to ``end_frac * T``."""
    if n_steps < 1:
        raise InvalidInputError("uniform grid needs at least one step")
    if not 0 < end_frac < 1:
        raise DomainError("uniform grid must end strictly before T (0 < end_frac < 1)")
    return np.linspace(0.0, end_frac * T, n_steps + 1)


def default_grid(T, k_max=20, n_uniform=4, extra=()):
    """Uniform coarse section on ``[0, T/2)`` followed by geometric refinement.

    The geometric part is ``T (1 - 2**-k)``, ``k = 1..k_max``; ``extra``
    times are merged in.
    """
    coarse = np.linspace(0.0, 0.5 * T, n_uniform + 1)[:-1]
    times = np.concatenate([coarse, geometric_levels(T, 1, k_max), np.asarray(extra, dtype=float)])
    return check_grid(np.unique(times), T)


def check_grid(times, T, allow_zero=True):
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.ndim != 1 or times.size == 0:
        raise InvalidInputError("time grid must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(times)):
        raise InvalidInputError("time grid has non-finite entries")
    if np.any(np.diff(times) <= 0):
        raise InvalidInputError("time grid must be strictly increasing")
    if times[0] < 0 or (not allow_zero and times[0] == 0):
        raise DomainError("time grid must lie in [0, T)")
    if times[-1] >= T:
        raise DomainError(f"time {times[-1]!r} is not below the terminal time T={T!r}")
    return times


def parse_grid(spec, T):
    """Parse ``uniform:N:endfrac`` or ``geometric:K`` into a time grid."""
    parts = spec.split(":")
    try:
        if parts[0] == "uniform" and len(parts) == 3:
            return uniform_grid(T, int(parts[1]), float(parts[2]))
        if parts[0] == "geometric" and len(parts) == 2:
            return default_grid(T, k_max=int(parts[1]))
    except ValueError as exc:
        if isinstance(exc, (DomainError, InvalidInputError)):
            raise
        raise InvalidInputError(f"bad grid spec {spec!r}: {exc}") from exc
    raise InvalidInputError(f"bad grid spec {spec!r}; expected uniform:N:endfrac or geometric:K")
