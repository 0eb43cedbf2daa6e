"""Primary decomposition of ``A`` by eigenvalue real part.

The state space splits into ``A``-invariant subspaces ``V_1 + ... + V_p``,
one per distinct real part ``a_1 < ... < a_p``.  In the adapted basis ``P``
the drift matrix is block diagonal, ``P^-1 A P = A_1 + ... + A_p``, and each
diffusion block is ``Sigma_j`` (rows of ``P^-1 Sigma``).

The basis is found from an ordered real Schur form followed by Sylvester
solves that annihilate the coupling between clusters.  All norms reported
for components are Euclidean norms of coordinates in this basis.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DecompositionUnstableError, InvalidInputError
from .matfun import as_square_matrix, eigen_summary, op_power

__all__ = ["ComponentView", "SpectralDecomposition", "decompose", "project_path", "project_power"]

MAX_BASIS_COND = 1e12


@dataclass(frozen=True)
class SpectralDecomposition:
    real_parts: tuple
    block_dims: tuple
    basis: np.ndarray
    blocks: tuple
    projected_diffusions: tuple
    grouping_tol: float

    @property
    def p(self):
        return len(self.block_dims)

    @property
    def dim(self):
        return self.basis.shape[0]

    def offsets(self):
        return np.concatenate([[0], np.cumsum(self.block_dims)]).astype(int)

    def block_slice(self, j):
        off = self.offsets()
        return slice(int(off[j]), int(off[j + 1]))

    def block_diagonal(self):
        return scipy.linalg.block_diag(*self.blocks)

    def to_coordinates(self, x):
        """Coordinates of ``x`` (last axis of length d) in the adapted basis."""
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, self.dim).T
        return np.linalg.solve(self.basis, flat).T.reshape(x.shape)

    def to_json(self):
        return {
            "real_parts": list(self.real_parts),
            "block_dims": list(self.block_dims),
            "basis": self.basis.tolist(),
            "blocks": [b.tolist() for b in self.blocks],
            "projected_diffusions": [s.tolist() for s in self.projected_diffusions],
        }


@dataclass(frozen=True)
class ComponentView:
    """Coordinates ``pi_j(X_t)`` of one spectral component along a path."""

    block_index: int
    times: np.ndarray
    values: np.ndarray


def _ordered_schur(A, cuts, counts):
    """Real Schur form with eigenvalue clusters ordered by real part.

    Each pass moves the eigenvalues with real part below ``cuts[k]`` to the
    top-left corner of the trailing unreduced part.
    """
    d = A.shape[0]
    T, Q = scipy.linalg.schur(A, output="real")
    start = 0
    for cut, n in zip(cuts, counts[:-1]):
        sub = T[start:, start:]
        Ts, Z, sdim = scipy.linalg.schur(sub, output="real", sort=lambda re, im, c=cut: re < c)
        if sdim != n:
            raise DecompositionUnstableError(
                "eigenvalue cluster moved across a real-part cut during reordering; "
                "increase grouping_tol",
                expected=n,
                found=sdim,
            )
        T[start:, start:] = Ts
        T[:start, start:] = T[:start, start:] @ Z
        Q[:, start:] = Q[:, start:] @ Z
        start += n
    T[np.tril_indices(d, -2)] = 0.0
    return T, Q


def decompose(A, Sigma=None, grouping_tol=None):
    """Split ``A`` into real-spectrally-simple blocks.

    Parameters
    ----------
    A : array_like, shape (d, d)
    Sigma : array_like, shape (d, m), optional
        Diffusion matrix; defaults to the identity.
    grouping_tol : float, optional
        Real parts closer than this are one block (see ``eigen_summary``).

    Returns
    -------
    SpectralDecomposition
        Blocks ordered by increasing real part.

    Raises
    ------
    DecompositionUnstableError
        If the adapted basis has condition number above ``1e12``.
    """
    A = as_square_matrix(A, "A")
    d = A.shape[0]
    Sigma = np.eye(d) if Sigma is None else np.atleast_2d(np.asarray(Sigma, dtype=float))
    if Sigma.shape[0] != d or not np.all(np.isfinite(Sigma)):
        raise InvalidInputError(f"Sigma must be a finite matrix with {d} rows, got shape {Sigma.shape}")

    summary = eigen_summary(A, grouping_tol)
    if len(summary.respec) == 1:
        return SpectralDecomposition(
            summary.respec, (d,), np.eye(d), (A.copy(),), (Sigma.copy(),), summary.grouping_tol
        )

    bounds = summary.group_bounds()
    cuts = [0.5 * (bounds[k][1] + bounds[k + 1][0]) for k in range(len(bounds) - 1)]
    counts = summary.multiplicities
    T, Q = _ordered_schur(A, cuts, counts)

    # Block back-substitution: S^-1 T S block diagonal with S unit upper block triangular.
    off = np.concatenate([[0], np.cumsum(counts)]).astype(int)
    S = np.eye(d)
    for k in range(len(counts) - 1):
        head = slice(off[k], off[k + 1])
        tail = slice(off[k + 1], d)
        T11, T12, T22 = T[head, head], T[head, tail], T[tail, tail]
        # T11 Y - Y T22 = -T12 removes the coupling of cluster k to the rest.
        Y = scipy.linalg.solve_sylvester(T11, -T22, -T12)
        Sk = np.eye(d)
        Sk[head, tail] = Y
        S = S @ Sk
        T[head, tail] = 0.0
    P = Q @ S
    cond = np.linalg.cond(P)
    if not np.isfinite(cond) or cond > MAX_BASIS_COND:
        raise DecompositionUnstableError(
            f"adapted basis condition number {cond:.3g} exceeds {MAX_BASIS_COND:.0e}; "
            "increase grouping_tol to merge nearby real parts",
            cond=cond,
        )
    blocks = tuple(T[off[k]:off[k + 1], off[k]:off[k + 1]].copy() for k in range(len(counts)))
    proj = np.linalg.solve(P, Sigma)
    diffusions = tuple(proj[off[k]:off[k + 1]].copy() for k in range(len(counts)))
    return SpectralDecomposition(summary.respec, tuple(counts), P, blocks, diffusions, summary.grouping_tol)


def project_power(dec, r):
    """Blockwise operator powers ``(r**A_1, ..., r**A_p)``."""
    return tuple(op_power(B, r) for B in dec.blocks)


def project_path(dec, path, times=None):
    """Split a path (array of d-vectors) into its spectral component views."""
    path = np.asarray(path, dtype=float)
    if path.ndim == 1:
        path = path[None, :]
    if path.ndim != 2 or path.shape[1] != dec.dim:
        raise InvalidInputError(f"path must have shape (n, {dec.dim}), got {path.shape}")
    if times is None:
        times = np.arange(path.shape[0], dtype=float)
    times = np.asarray(times, dtype=float)
    if times.shape != (path.shape[0],):
        raise InvalidInputError("times and path lengths differ")
    coords = dec.to_coordinates(path)
    return [ComponentView(j, times, coords[:, dec.block_slice(j)]) for j in range(dec.p)]
