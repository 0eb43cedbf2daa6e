"""Path simulation: exact Gaussian transitions and Euler-Maruyama.

Every path ``i`` draws from its own counter-based stream
``Philox(SeedSequence(master_seed, spawn_key=(i,)))``, so the output depends
only on ``(model, grid, n_paths, master_seed)`` and never on how paths are
distributed over worker threads.
"""

import csv
import io
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bridgecore import kernel_integral
from .errors import DomainError, InvalidInputError, NumericalFailureError, RefusedError
from .grids import check_grid
from .matfun import op_power

__all__ = [
    "PathEnsemble",
    "append_terminal_zero",
    "path_generator",
    "resolve_workers",
    "sample_euler",
    "sample_exact",
]

CHUNK = 512
CLIP_TOL = 1e-12


@dataclass(frozen=True)
class PathEnsemble:
    """Simulated paths, shape ``(n_paths, n_times, d)``, with seed lineage."""

    model_hash: str
    scheme: str
    times: np.ndarray
    paths: np.ndarray
    master_seed: int
    per_path_seeds: np.ndarray
    notes: tuple = field(default=())

    @property
    def n_paths(self):
        return self.paths.shape[0]

    @property
    def d(self):
        return self.paths.shape[2]

    def at(self, t):
        """Samples at grid time ``t`` (exact match), shape ``(n_paths, d)``."""
        idx = np.flatnonzero(self.times == t)
        if idx.size == 0:
            raise InvalidInputError(f"time {t!r} is not on the ensemble grid")
        return self.paths[:, idx[0], :]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["path", "t"] + [f"x{k + 1}" for k in range(self.d)])
        tt = [repr(float(t)) for t in self.times]
        for i in range(self.n_paths):
            for k, t in enumerate(tt):
                w.writerow([i, t] + [repr(float(x)) for x in self.paths[i, k]])
        return buf.getvalue()

    def manifest(self):
        return {
            "model_hash": self.model_hash,
            "scheme": self.scheme,
            "master_seed": int(self.master_seed),
            "stream": "philox/seedsequence spawn_key=(path_index,)",
            "n_paths": int(self.n_paths),
            "n_times": int(len(self.times)),
            "notes": list(self.notes),
        }

    @classmethod
    def from_csv(cls, text, model_hash="", scheme="", master_seed=0):
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        if header[:2] != ["path", "t"]:
            raise InvalidInputError("ensemble CSV must start with columns path,t")
        data = np.array(body, dtype=float)
        n_paths = int(data[:, 0].max()) + 1
        times = np.unique(data[:, 1])
        paths = data[:, 2:].reshape(n_paths, len(times), len(header) - 2)
        return cls(model_hash, scheme, times, paths, int(master_seed), np.arange(n_paths))


def path_generator(master_seed, path_index):
    """Independent generator for one path; stream id is the path index."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(path_index),))
    return np.random.Generator(np.random.Philox(ss))


def resolve_workers(workers=None):
    if workers is None:
        workers = os.environ.get("OPBRIDGE_THREADS", "")
        workers = int(workers) if workers.strip() else 1
    return max(1, int(workers))


def _prepare_grid(model, times):
    times = check_grid(times, model.T)
    if times[0] != 0.0:
        times = np.concatenate([[0.0], times])
    return times


def _check_counts(n_paths, master_seed):
    if int(n_paths) < 1:
        raise InvalidInputError("n_paths must be >= 1")
    if not 0 <= int(master_seed) < 2**64:
        raise InvalidInputError("master_seed must be a 64-bit unsigned integer")


def _psd_factor(C, scale):
    w, V = np.linalg.eigh(C)
    if w.min() < -CLIP_TOL * scale:
        raise NumericalFailureError(
            f"increment covariance is not PSD (min eigenvalue {w.min():.3g})", min_eigenvalue=float(w.min())
        )
    return V * np.sqrt(np.clip(w, 0.0, None))


def _run_chunks(n_paths, workers, job):
    starts = list(range(0, n_paths, CHUNK))
    if workers == 1 or len(starts) == 1:
        for s in starts:
            job(s, min(s + CHUNK, n_paths))
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(lambda s: job(s, min(s + CHUNK, n_paths)), starts))


def _draw(master_seed, lo, hi, shape):
    return np.stack([path_generator(master_seed, i).standard_normal(shape) for i in range(lo, hi)])


def sample_exact(model, times, n_paths, master_seed, workers=None):
    """Sample ``X`` on ``times`` from its exact Gaussian transition law.

    Between grid times ``t_k < t_{k+1}``,

        X_{k+1} = ((T - t_{k+1}) / (T - t_k))**A X_k + xi_k,

    with ``xi_k ~ N(0, C_k)`` and ``C_k`` the kernel integral over the step.
    This is ``X = (T - t)**A M`` with ``M`` receiving independent Gaussian
    increments; propagating ``X`` directly avoids forming the large values
    of ``M`` near ``T``.  A time 0 is prepended if missing.
    """
    _check_counts(n_paths, master_seed)
    times = _prepare_grid(model, times)
    T, d = model.T, model.d
    n_steps = len(times) - 1
    scale = 1.0 + np.linalg.norm(model.noise, 2)
    trans = np.empty((n_steps, d, d))
    factors = np.empty((n_steps, d, d))
    for k in range(n_steps):
        trans[k] = op_power(model.A, (T - times[k + 1]) / (T - times[k]))
        C, _ = kernel_integral(model, times[k], times[k + 1])
        factors[k] = _psd_factor(C, scale)

    paths = np.zeros((int(n_paths), len(times), d))

    def job(lo, hi):
        Z = _draw(master_seed, lo, hi, (n_steps, d))
        X = np.zeros((hi - lo, d))
        for k in range(n_steps):
            X = X @ trans[k].T + Z[:, k] @ factors[k].T
            paths[lo:hi, k + 1] = X

    _run_chunks(int(n_paths), resolve_workers(workers), job)
    return PathEnsemble(model.model_hash, "exact", times, paths, int(master_seed), np.arange(int(n_paths)))


def sample_euler(model, times, n_paths, master_seed, workers=None, record_times=None):
    """Explicit Euler-Maruyama on the given grid.

    Drift is evaluated at the left end of each step.  The bias is of order
    ``h / (T - t)`` and grows near ``T``; a warning is issued when the largest
    step exceeds a tenth of the distance from the last grid time to ``T``.

    ``record_times`` (a subset of ``times``) limits what is stored, which
    keeps memory bounded on fine grids.
    """
    _check_counts(n_paths, master_seed)
    times = _prepare_grid(model, times)
    T, d, m = model.T, model.d, model.m
    h = np.diff(times)
    if h.max() > (T - times[-1]) / 10:
        warnings.warn(
            f"Euler step {h.max():.3g} exceeds (T - t_last)/10 = {(T - times[-1]) / 10:.3g}; "
            "expect visible discretisation bias",
            RuntimeWarning,
            stacklevel=2,
        )
    if record_times is None:
        keep = np.ones(len(times), dtype=bool)
    else:
        record_times = np.asarray(record_times, dtype=float)
        if not np.all(np.isin(record_times, times)):
            raise InvalidInputError("record_times must be a subset of the grid")
        keep = np.isin(times, record_times)
        keep[0] = True
    slot = np.cumsum(keep) - 1
    n_steps = len(h)
    drift = np.array([np.eye(d) - (h[k] / (T - times[k])) * model.A for k in range(n_steps)])
    sqh = np.sqrt(h)
    Sig = model.Sigma
    paths = np.zeros((int(n_paths), int(keep.sum()), d))

    def job(lo, hi):
        Z = _draw(master_seed, lo, hi, (n_steps, m))
        X = np.zeros((hi - lo, d))
        for k in range(n_steps):
            X = X @ drift[k].T + sqh[k] * (Z[:, k] @ Sig.T)
            if keep[k + 1]:
                paths[lo:hi, slot[k + 1]] = X

    _run_chunks(int(n_paths), resolve_workers(workers), job)
    note = f"Euler-Maruyama, left-point drift; local bias O(h/(T-t)), max h/(T-t) = {float(np.max(h / (T - times[:-1]))):.3g}"
    return PathEnsemble(
        model.model_hash, "euler", times[keep], paths, int(master_seed), np.arange(int(n_paths)), (note,)
    )


def append_terminal_zero(ensemble, model):
    """Extend every path with the value 0 at ``t = T``.

    Only allowed when the model is classified as a bridge (all real parts of
    the eigenvalues of ``A`` positive and ``Sigma`` of rank ``d``); then
    ``X_t -> 0`` almost surely and the extension is continuous.
    """
    from .analysis import classify

    report = classify(model)
    if report.verdict != "bridge":
        raise RefusedError(
            "cannot pin X_T = 0: X_t -> 0 is only guaranteed for ReSpec(A) in (0, inf) and rank(Sigma) = d; "
            f"got ReSpec={list(report.respec)}, rank={report.sigma_rank} (verdict {report.verdict})"
        )
    if ensemble.model_hash and ensemble.model_hash != model.model_hash:
        raise InvalidInputError("ensemble was generated from a different model")
    if ensemble.times[-1] >= model.T:
        raise DomainError("ensemble already reaches T")
    times = np.concatenate([ensemble.times, [model.T]])
    paths = np.concatenate([ensemble.paths, np.zeros((ensemble.n_paths, 1, ensemble.d))], axis=1)
    return PathEnsemble(
        ensemble.model_hash,
        ensemble.scheme,
        times,
        paths,
        ensemble.master_seed,
        ensemble.per_path_seeds,
        ensemble.notes + ("terminal value X_T = 0 appended",),
    )
