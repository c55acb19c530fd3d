"""Dense linear algebra used throughout the package.

Vectors and matrices are plain numpy arrays (float64 / complex128).  The
SVD is a one-sided Jacobi iteration run by :mod:`qrproj.kernels`; the
Walsh-Hadamard transform is the iterative butterfly, normalized.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels

EPS = np.finfo(float).eps
MAX_SWEEPS = 60


class ConvergenceError(RuntimeError):
    """Jacobi iteration hit its sweep cap."""

    def __init__(self, sweeps):
        super().__init__(f"one-sided Jacobi SVD did not converge after {sweeps} sweeps")
        self.sweeps = sweeps


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``m = U @ diag(singular_values) @ V.conj().T``."""

    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray
    sweeps: int = 0
    rank: int = 0

    def reconstruct(self):
        return (self.U * self.singular_values) @ self.V.conj().T


def is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


def _complete_basis(Q, rank):
    """Replace columns ``rank:`` of ``Q`` with an orthonormal completion."""
    m, p = Q.shape
    if rank >= p:
        return Q
    out = Q.copy()
    basis = np.eye(m, dtype=Q.dtype)
    filled = rank
    for e in basis:
        if filled == p:
            break
        w = e.copy()
        for _ in range(2):  # re-orthogonalize once for stability
            w -= out[:, :filled] @ (out[:, :filled].conj().T @ w)
        nrm = np.linalg.norm(w)
        if nrm > 1e-8:
            out[:, filled] = w / nrm
            filled += 1
    return out


def _jacobi(a, want_v, tol=None, max_sweeps=MAX_SWEEPS):
    """Orthogonalize the columns of ``a`` (m x n, m >= n)."""
    m, n = a.shape
    dtype = complex if np.iscomplexobj(a) else float
    cols = np.array(a.T, dtype=dtype, order="C", copy=True)
    v = np.eye(n, dtype=dtype) if want_v else np.zeros((0, 0), dtype=dtype)
    if tol is None:
        tol = max(m, 1) * EPS
    # columns that have collapsed to rounding noise never satisfy the
    # relative test against each other, so they are frozen instead
    floor = tol * tol * float(np.vdot(cols, cols).real)
    sweeps = kernels.jacobi_sweeps(cols, v, tol, floor, max_sweeps)
    if sweeps < 0:
        raise ConvergenceError(max_sweeps)
    return cols, v, sweeps, floor


def svd(m, *, compute_uv=True, tol=None, max_sweeps=MAX_SWEEPS):
    """Thin singular value decomposition by one-sided Jacobi rotations.

    Args:
        m: 2-D real or complex array with finite entries.
        compute_uv: when False only the singular values are returned (as a
            1-D array) and the rotation accumulation is skipped.
        tol: relative orthogonality threshold for a column pair; defaults
            to ``rows * machine epsilon``.
        max_sweeps: cap on full sweeps before :class:`ConvergenceError`.

    Returns:
        :class:`SvdResult` with singular values in non-increasing order, or
        the 1-D singular values when ``compute_uv`` is False.
    """
    a, work, v, sweeps, sigma, order, rank = _spectrum(m, compute_uv, tol, max_sweeps)
    if not compute_uv:
        return sigma
    work = work[order]
    V = v.T[:, order]
    U = np.zeros((a.shape[0], a.shape[1]), dtype=work.dtype)
    U[:, :rank] = (work[:rank] / sigma[:rank, None]).T
    U = _complete_basis(U, rank)
    if a.shape != np.shape(m):
        U, V = V, U
    return SvdResult(U=U, singular_values=sigma, V=V, sweeps=sweeps, rank=rank)


def _spectrum(m, compute_uv, tol, max_sweeps):
    m = np.asarray(m)
    if m.ndim != 2 or m.size == 0:
        raise ValueError(f"svd expects a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("svd input has non-finite entries")
    a = m.conj().T if m.shape[0] < m.shape[1] else m
    work, v, sweeps, floor = _jacobi(a, compute_uv, tol=tol, max_sweeps=max_sweeps)
    sigma = np.sqrt(np.einsum("ij,ij->i", work, work.conj()).real)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    scale = sigma[0] if sigma.size else 0.0
    # frozen (sub-floor) columns were never orthogonalized: they count as null space
    cutoff = max(max(a.shape) * EPS * scale, np.sqrt(floor))
    rank = int(np.sum(sigma >= cutoff)) if scale > 0 else 0
    return a, work, v, sweeps, sigma, order, rank


def numerical_rank(m, *, tol=None, max_sweeps=MAX_SWEEPS):
    """Number of singular values above the resolution of :func:`svd`."""
    return _spectrum(m, False, tol, max_sweeps)[-1]


def singular_values(m, **kw):
    return svd(m, compute_uv=False, **kw)


def fwht(v):
    """Normalized fast Walsh-Hadamard transform along the last axis.

    Accepts a 1-D vector or a 2-D stack of row vectors; the length must be
    a power of two.  Complex input is transformed part by part.
    """
    v = np.asarray(v)
    N = v.shape[-1]
    if not is_power_of_two(N):
        raise ValueError(f"fwht length must be a power of two, got {N}")
    if np.iscomplexobj(v):
        return fwht(v.real) + 1j * fwht(v.imag)
    out = np.array(v, dtype=float, order="C", ndmin=2, copy=True)
    kernels.fwht_rows(out.reshape(-1, N))
    return out.reshape(v.shape)


def hadamard(N):
    """Dense normalized Walsh-Hadamard matrix (Sylvester order)."""
    if not is_power_of_two(N):
        raise ValueError(f"Hadamard order must be a power of two, got {N}")
    H = np.ones((1, 1))
    while H.shape[0] < N:
        H = np.block([[H, H], [H, -H]])
    return H / np.sqrt(N)


def haar_unitary(N, seed=None):
    """Haar-random N x N unitary: QR of a Ginibre matrix with R's diagonal phases divided out."""
    if N < 1:
        raise ValueError("N must be >= 1")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def haar_isometry(N, cols, seed=None):
    """First ``cols`` columns of a Haar unitary, sampled without forming it."""
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((N, cols)) + 1j * rng.standard_normal((N, cols))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_orthonormal(N, cols, seed=None):
    """Real N x cols matrix with orthonormal columns (Haar on the real Stiefel manifold)."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((N, cols)))
    return q * np.sign(np.diagonal(r))


def gaussian_vector(N, seed=None, *, unit=True):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(N)
    return v / np.linalg.norm(v) if unit else v


def pairwise_sum(x):
    """Pairwise (tree) summation; result independent of chunking order."""
    x = np.asarray(x, dtype=float).ravel()
    while x.size > 1:
        if x.size % 2:
            x = np.append(x, 0.0)
        x = x[0::2] + x[1::2]
    return float(x[0]) if x.size else 0.0
