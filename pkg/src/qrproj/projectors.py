"""QRP, SRHT and PCA projectors behind one interface.

All projectors map R^N -> R^k (or C^k) acting from the left.  QRP and SRHT
carry the sqrt(N/k) factor that makes |Pi v|^2 unbiased; PCA is a plain
orthogonal projection onto the dominant right singular vectors of a data
matrix.  SRHT and QRP are applied through their fast paths (Walsh-Hadamard
butterflies and statevector simulation); the dense matrix is only built on
request.
"""

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg, rqc
from .simulator import Statevector, project_qubit

KINDS = ("QRP", "SRHT", "PCA")
_MAGIC = "QRPROJ"


@dataclass(frozen=True, eq=False)
class Projector:
    kind: str
    N: int
    k: int
    seed: int | None = None
    rows: np.ndarray | None = None
    signs: np.ndarray | None = None
    spec: rqc.AnsatzSpec | None = None
    components: np.ndarray | None = None
    fingerprint: str | None = None
    _dense: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown projector kind {self.kind!r}")
        if not 1 <= self.k <= self.N:
            raise ValueError(f"k must lie in 1..{self.N}, got {self.k}")

    @property
    def scale(self):
        return 1.0 if self.kind == "PCA" else math.sqrt(self.N / self.k)

    @property
    def matrix(self):
        """Explicit k x N matrix (built once, then cached)."""
        if not self._dense:
            if self.components is not None:
                self._dense.append(self.components)
            else:
                self._dense.append(self.apply_rows(np.eye(self.N)).T.copy())
        return self._dense[0]

    def apply_rows(self, X):
        """Project each row of ``X`` (shape (B, N)); returns (B, k)."""
        X = np.atleast_2d(np.asarray(X))
        if X.shape[1] != self.N:
            raise ValueError(f"vectors have length {X.shape[1]}, projector expects {self.N}")
        if self.components is not None:
            return X @ self.components.T
        if self.kind == "SRHT":
            return self.scale * linalg.fwht(X * self.signs)[:, self.rows]
        psi = np.array(X, dtype=complex, order="C")
        rqc.run_ansatz(psi, self.spec)
        return self.scale * psi[:, self.rows]

    def reconstruct_rows(self, Y):
        """Map reduced rows (B, k) back to R^N / C^N."""
        Y = np.atleast_2d(np.asarray(Y))
        if Y.shape[1] != self.k:
            raise ValueError(f"reduced vectors have length {Y.shape[1]}, projector has k={self.k}")
        if self.components is not None:
            return Y @ self.components.conj()
        if self.kind == "SRHT":
            padded = np.zeros((Y.shape[0], self.N), dtype=Y.dtype)
            padded[:, self.rows] = Y
            return self.scale * linalg.fwht(padded) * self.signs
        # quantum path: undo the classical scale, zero-pad the projected
        # subspace, run the inverse circuit
        psi = np.zeros((Y.shape[0], self.N), dtype=complex)
        psi[:, self.rows] = Y / self.scale
        rqc.run_ansatz(psi, self.spec, inverse=True)
        return psi


def build_srht(N, k, seed=None, *, signs=None, rows=None):
    if not linalg.is_power_of_two(N):
        raise ValueError(f"N must be a power of two, got {N}")
    if not 1 <= k <= N:
        raise ValueError(f"k must lie in 1..{N}, got {k}")
    rng = np.random.default_rng(seed)
    if signs is None:
        signs = rng.choice(np.array([-1.0, 1.0]), size=N)
    if rows is None:
        rows = np.sort(rng.permutation(N)[:k])
    signs = np.asarray(signs, dtype=float)
    rows = rqc.select_rows(N, k, rows)
    if signs.shape != (N,) or not np.all(np.abs(signs) == 1):
        raise ValueError("signs must be N entries of +-1")
    return Projector("SRHT", N, k, seed=seed, rows=rows, signs=signs)


def build_qrp(spec, k, row_selection=None, row_seed=None):
    N = spec.dim
    if N > 1 << 14:
        raise ValueError("QRP dimension exceeds the dense-unitary guard")
    rows = rqc.select_rows(N, k, row_selection, row_seed)
    return Projector("QRP", N, k, seed=spec.seed, rows=rows, spec=spec)


def dataset_fingerprint(X):
    return hashlib.sha256(np.ascontiguousarray(X).tobytes()).hexdigest()[:16]


def build_pca(dataset, k):
    """Top-k right singular vectors of the data matrix (one vector per row)."""
    X = np.atleast_2d(np.asarray(dataset))
    if X.size == 0:
        raise ValueError("empty dataset")
    N = X.shape[1]
    available = min(X.shape)
    if not 1 <= k <= available:
        raise ValueError(f"k={k} exceeds the {available} available singular vectors")
    res = linalg.svd(X)
    comps = np.ascontiguousarray(res.V[:, :k].conj().T)
    return Projector("PCA", N, k, components=comps, fingerprint=dataset_fingerprint(X))


def apply(p, v):
    v = np.asarray(v)
    if v.ndim != 1:
        raise ValueError("apply expects a single vector; use Projector.apply_rows for batches")
    return p.apply_rows(v[None, :])[0]


def reconstruct(p, reduced):
    reduced = np.asarray(reduced)
    if reduced.ndim != 1:
        raise ValueError("reconstruct expects a single vector")
    return p.reconstruct_rows(reduced[None, :])[0]


def measurement_rows(n, m_qubits, outcome=0):
    """Amplitude indices where every qubit in ``m_qubits`` reads ``outcome``."""
    idx = np.arange(1 << n)
    keep = np.ones(idx.shape, dtype=bool)
    for q in m_qubits:
        keep &= ((idx >> (n - 1 - q)) & 1) == outcome
    return idx[keep]


def project_by_measurement(spec, state, m_qubits, outcome=0):
    """Run the ansatz on ``state`` then post-select each listed qubit on ``outcome``.

    Qubit indices refer to the original register.  Returns the reduced,
    renormalized state and the overall branch probability.
    """
    m_qubits = [int(q) for q in m_qubits]
    if len(set(m_qubits)) != len(m_qubits):
        raise ValueError("measured qubits must be distinct")
    if state.n_qubits != spec.n_qubits:
        raise ValueError("state and ansatz qubit counts differ")
    psi = np.array(state.amplitudes, dtype=complex).reshape(1, -1)
    rqc.run_ansatz(psi, spec)
    current = Statevector(spec.n_qubits, psi[0])
    prob = 1.0
    removed = []
    for q in m_qubits:
        pos = q - sum(1 for r in removed if r < q)
        current, p = project_qubit(current, pos, outcome)
        prob *= p
        removed.append(q)
    return current, prob


def write_projector(p, fh):
    """Text header line then little-endian float64 payload (re/im pairs when complex)."""
    M = p.matrix
    cplx = np.iscomplexobj(M)
    seed = -1 if p.seed is None else p.seed
    fh.write(f"{_MAGIC} {p.kind} {p.N} {p.k} {seed} {'complex' if cplx else 'real'}\n".encode())
    data = np.ascontiguousarray(M, dtype="<c16" if cplx else "<f8")
    fh.write(data.view("<f8").tobytes())


def read_projector(fh):
    """Load a file written by :func:`write_projector` as an explicit-matrix Projector."""
    header = fh.readline().decode().split()
    if len(header) != 6 or header[0] != _MAGIC:
        raise ValueError("not a projector file")
    _, kind, N, k, seed, dtype = header
    N, k, seed = int(N), int(k), int(seed)
    count = N * k * (2 if dtype == "complex" else 1)
    raw = fh.read(8 * count)
    if len(raw) != 8 * count:
        raise ValueError(f"truncated projector payload: {len(raw)} of {8 * count} bytes")
    vals = np.frombuffer(raw, dtype="<f8")
    M = vals.view("<c16") if dtype == "complex" else vals
    return Projector(kind, N, k, seed=None if seed < 0 else seed,
                     components=M.reshape(k, N).astype(complex if dtype == "complex" else float))
