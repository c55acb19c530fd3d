"""Local random circuits and their 2-design diagnostics.

The ansatz is an optional layer of RY(pi/4) on every qubit followed by
``depth`` blocks, each a random single-qubit rotation per qubit (axis
uniform over X/Y/Z, angle uniform in [0, 2pi)) and a CZ ladder on
neighbouring pairs.  Angles come from ``numpy.random.default_rng(seed)``,
so a spec maps to exactly one circuit.

Projected-norm and anticoncentration estimators run either on freshly
seeded circuits or on Haar unitaries; the latter is the ground truth the
circuits are compared against.
"""

import io
import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels, linalg
from .seeding import trial_seed
from .simulator import Circuit, Gate, circuit_unitary

AXES = ("RX", "RY", "RZ")
SYMMETRIZING_ANGLE = math.pi / 4


@dataclass(frozen=True)
class AnsatzSpec:
    n_qubits: int
    depth: int
    seed: int = 0
    include_symmetrizing_layer: bool = True

    def __post_init__(self):
        if self.n_qubits < 2:
            raise ValueError("the ansatz needs at least two qubits")
        if self.depth < 0:
            raise ValueError("depth must be non-negative")

    @property
    def dim(self):
        return 1 << self.n_qubits

    def reseeded(self, seed):
        return replace(self, seed=int(seed))


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    standard_error: float
    sample_count: int

    def __post_init__(self):
        if self.standard_error < 0 or self.sample_count < 1:
            raise ValueError("invalid moment estimate")

    def agrees_with(self, other, n_sigma=3.0):
        combined = math.hypot(self.standard_error, other.standard_error)
        return abs(self.value - other.value) <= n_sigma * combined


def layer_parameters(spec):
    """Rotation axes (0=X, 1=Y, 2=Z) and angles, each of shape (depth, n)."""
    rng = np.random.default_rng(spec.seed)
    shape = (spec.depth, spec.n_qubits)
    axes = rng.integers(0, 3, size=shape).astype(np.int8)
    angles = rng.uniform(0.0, 2.0 * math.pi, size=shape)
    return axes, angles


def cz_ladder_signs(n):
    """Diagonal of the CZ ladder on pairs (0,1), ..., (n-2, n-1)."""
    idx = np.arange(1 << n)
    bits = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
    parity = np.zeros(1 << n, dtype=np.int64)
    for q in range(n - 1):
        parity += bits[q] & bits[q + 1]
    return np.where(parity % 2, -1.0, 1.0)


def build_rqc(spec):
    n = spec.n_qubits
    gates = []
    if spec.include_symmetrizing_layer:
        gates.extend(Gate("RY", SYMMETRIZING_ANGLE, q) for q in range(n))
    axes, angles = layer_parameters(spec)
    for d in range(spec.depth):
        gates.extend(Gate(AXES[axes[d, q]], float(angles[d, q]), q) for q in range(n))
        gates.extend(Gate("CPHASE", math.pi, q + 1, q) for q in range(n - 1))
    return Circuit(n, gates)


def gate_count(spec):
    n = spec.n_qubits
    return (n if spec.include_symmetrizing_layer else 0) + spec.depth * (2 * n - 1)


def _symmetrizing(psi, n, sign):
    c, s = math.cos(SYMMETRIZING_ANGLE / 2), sign * math.sin(SYMMETRIZING_ANGLE / 2)
    m = np.array([[c, -s], [s, c]], dtype=complex)
    for q in range(n):
        kernels.apply_1q(psi, 1 << (n - 1 - q), m)


def run_ansatz(psi, specs, row_circuit=None, inverse=False):
    """Apply ansatz circuits in place to the rows of ``psi``.

    ``specs`` is one :class:`AnsatzSpec` (applied to every row) or a list
    sharing qubit count, depth and layer flag; ``row_circuit[r]`` picks the
    spec used on row ``r`` (default: row r uses spec r).
    """
    if isinstance(specs, AnsatzSpec):
        specs = [specs]
        row_circuit = np.zeros(psi.shape[0], dtype=np.intp)
    first = specs[0]
    n, depth = first.n_qubits, first.depth
    for s in specs:
        if (s.n_qubits, s.depth, s.include_symmetrizing_layer) != (n, depth, first.include_symmetrizing_layer):
            raise ValueError("batched specs must share qubit count, depth and layer flag")
    if psi.shape[1] != 1 << n:
        raise ValueError(f"rows have length {psi.shape[1]}, ansatz acts on {1 << n}")
    if row_circuit is None:
        if len(specs) != psi.shape[0]:
            raise ValueError("need one spec per row when row_circuit is omitted")
        row_circuit = np.arange(psi.shape[0], dtype=np.intp)
    row_circuit = np.ascontiguousarray(row_circuit, dtype=np.intp)
    params = [layer_parameters(s) for s in specs]
    axes = np.ascontiguousarray(np.stack([p[0] for p in params]).reshape(len(specs), depth, n))
    angles = np.ascontiguousarray(np.stack([p[1] for p in params]).reshape(len(specs), depth, n))
    signs = cz_ladder_signs(n)
    if not inverse and first.include_symmetrizing_layer:
        _symmetrizing(psi, n, +1)
    if depth:
        kernels.apply_layers(psi, axes, angles, row_circuit, signs, bool(inverse))
    if inverse and first.include_symmetrizing_layer:
        _symmetrizing(psi, n, -1)
    return psi


def select_rows(N, k, selection=None, seed=None):
    """Resolve a row selection: None/'first', 'random', or explicit indices."""
    if not 1 <= k <= N:
        raise ValueError(f"k must lie in 1..{N}, got {k}")
    if selection is None or (isinstance(selection, str) and selection == "first"):
        return np.arange(k)
    if isinstance(selection, str):
        if selection != "random":
            raise ValueError(f"unknown row selection {selection!r}")
        return np.sort(np.random.default_rng(seed).permutation(N)[:k])
    rows = np.asarray(selection, dtype=np.int64)
    if rows.shape != (k,):
        raise ValueError(f"expected {k} row indices, got {rows.shape}")
    if rows.min() < 0 or rows.max() >= N:
        raise ValueError("row index out of range")
    if np.unique(rows).size != k:
        raise ValueError("duplicate row indices")
    return rows


def qrp_rows(circuit, k, row_selection=None, seed=None):
    """Selected rows of the circuit unitary scaled by sqrt(N/k)."""
    N = 1 << circuit.n_qubits
    rows = select_rows(N, k, row_selection, seed)
    U = circuit_unitary(circuit)
    return math.sqrt(N / k) * U[rows]


def jl_failure_bound(N, k, eps, alpha=0.0):
    """Chebyshev bound on P(| |Pi v| - 1 | > eps); alpha > 0 adds the approximate-design term."""
    return (N - k) / (4.0 * k * N * eps**2) + alpha / (4.0 * eps**2 * k)


def haar_projected_variance(N, k):
    """Exact variance of |Pi v|^2 for Haar U."""
    return (N - k) / (k * (N + 1))


def haar_fourth_moment(N):
    """Exact Haar value of E[sum_i |(Uv)_i|^4] for unit v."""
    return 2.0 / (N + 1)


def rotated_vectors(spec, v, samples, sampler="circuit", chunk=512):
    """Rows ``U_s v`` for ``samples`` independent draws of U.

    ``sampler='circuit'`` reseeds ``spec`` per sample from
    ``(spec.seed, s)``; ``sampler='haar'`` draws Haar unitaries of the same
    dimension with the same seed stream.
    """
    N = spec.dim
    v = np.asarray(v, dtype=complex)
    if v.shape != (N,):
        raise ValueError(f"vector must have length {N}")
    out = np.empty((samples, N), dtype=complex)
    if sampler == "haar":
        for s in range(samples):
            out[s] = linalg.haar_unitary(N, trial_seed(spec.seed, s)) @ v
        return out
    if sampler != "circuit":
        raise ValueError(f"unknown sampler {sampler!r}")
    for lo in range(0, samples, chunk):
        hi = min(samples, lo + chunk)
        block = np.ascontiguousarray(np.broadcast_to(v, (hi - lo, N)))
        run_ansatz(block, [spec.reseeded(trial_seed(spec.seed, s)) for s in range(lo, hi)])
        out[lo:hi] = block
    return out


def projected_norms_sq(spec, k, v, samples, sampler="circuit"):
    """Samples of |Pi v|^2 with Pi the first k rows scaled by sqrt(N/k)."""
    y = rotated_vectors(spec, v, samples, sampler)
    return (spec.dim / k) * np.einsum("ij,ij->i", y[:, :k], y[:, :k].conj()).real


def mean_estimate(x):
    x = np.asarray(x, dtype=float)
    n = x.size
    return MomentEstimate(linalg.pairwise_sum(x) / n, float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0, n)


def variance_estimate(x):
    """Unbiased sample variance with its large-sample standard error."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4:
        raise ValueError("need at least 4 samples for a variance estimate")
    d = x - linalg.pairwise_sum(x) / n
    s2 = linalg.pairwise_sum(d * d) / (n - 1)
    m4 = linalg.pairwise_sum(d**4) / n
    var_s2 = max(m4 - s2 * s2 * (n - 3) / (n - 1), 0.0) / n
    return MomentEstimate(s2, math.sqrt(var_s2), n)


def estimate_projected_norm_variance(spec, k, v, samples, sampler="circuit"):
    if samples < 100:
        raise ValueError("use at least 100 samples")
    return variance_estimate(projected_norms_sq(spec, k, v, samples, sampler))


def estimate_fourth_moment(spec, v, samples, sampler="circuit"):
    if samples < 100:
        raise ValueError("use at least 100 samples")
    y = rotated_vectors(spec, v, samples, sampler)
    return mean_estimate(np.sum(np.abs(y) ** 4, axis=1))


def write_circuit(circuit, fh, depth=0, seed=0):
    """Line format: header ``n_qubits depth seed`` then ``KIND angle target [control]``."""
    fh.write(f"{circuit.n_qubits} {depth} {seed}\n")
    for g in circuit.gates:
        line = f"{g.kind} {g.angle!r} {g.target}"
        if g.control is not None:
            line += f" {g.control}"
        fh.write(line + "\n")


def read_circuit(fh):
    """Inverse of :func:`write_circuit`; returns (circuit, depth, seed)."""
    header = fh.readline().split()
    if len(header) != 3:
        raise ValueError("circuit header must be 'n_qubits depth seed'")
    n, depth, seed = (int(x) for x in header)
    gates = []
    for lineno, line in enumerate(fh, start=2):
        parts = line.split()
        if not parts:
            continue
        if len(parts) not in (3, 4):
            raise ValueError(f"line {lineno}: expected 'KIND angle target [control]'")
        control = int(parts[3]) if len(parts) == 4 else None
        gates.append(Gate(parts[0], float(parts[1]), int(parts[2]), control))
    return Circuit(n, gates), depth, seed


def circuit_to_text(circuit, depth=0, seed=0):
    buf = io.StringIO()
    write_circuit(circuit, buf, depth, seed)
    return buf.getvalue()


def circuit_from_text(text):
    return read_circuit(io.StringIO(text))
