"""Variational SVD of a (projected) matrix with hardware-efficient ansatz circuits.

The loss ``L = -sum_j q_j Re <e_j| U^H M V |e_j>`` is minimized over the
parameters of two ansatz circuits, U on the row register and V on the
column register.  At the optimum ``U e_j`` and ``V e_j`` are the j-th
left and right singular vectors and the readouts ``Re <e_j|U^H M V|e_j>``
are the singular values.

Each loss term is linear in the state produced by any single rotation
R(t) = exp(-i t P / 2), so as a function of one angle it is
``a cos(t/2) + b sin(t/2)``.  The general shift rule for that frequency
gives ``dL/dt = [L(t + s) - L(t - s)] / (4 sin(s/2))``; with s = pi/2 the
prefactor is 1/(2 sqrt 2).  All shifted losses of one circuit are
evaluated in a single backward sweep with cached forward states.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels, linalg, projectors, rqc
from .seeding import trial_seed
from .simulator import Circuit, Gate

SCHEMES = ("parameter-shift", "central-difference")
SHIFT = math.pi / 2
FD_STEP = 1e-5
TRACE_CSV_HEADER = "iter,loss"
SUMMARY_CSV_HEADER = "j,true_sigma,estimated,pct_error"

_LEFT, _RIGHT, _DATA, _PROJ = 21, 22, 23, 24


class TrainingError(FloatingPointError):
    """Non-finite loss or gradient; ``index`` is the offending parameter."""

    def __init__(self, msg, index=None):
        super().__init__(msg)
        self.index = index


@dataclass(frozen=True)
class Hea:
    """Hardware-efficient ansatz: ``blocks`` pairs of (forward half, mirror half).

    A forward half is ``depth`` layers of RY then RZ on every qubit followed
    by a CZ ladder.  The mirror half has the reversed gate order with its
    own parameters; setting them to the negated forward angles makes the
    pair the identity.  Parameter layout: (blocks, 2, depth, n, 2).
    """

    n: int
    depth: int
    blocks: int = 2

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("the ansatz needs at least two qubits")
        if self.depth < 1 or self.blocks < 1:
            raise ValueError("depth and block count must be positive")

    @property
    def shape(self):
        return (self.blocks, 2, self.depth, self.n, 2)

    @property
    def n_params(self):
        return self.blocks * 2 * self.depth * 2 * self.n

    def ops(self):
        """Gate sequence as tuples ('rot', qubit, axis, flat param index) or ('cz', q, q + 1)."""
        idx = np.arange(self.n_params).reshape(self.shape)
        ladder = [("cz", q, q + 1) for q in range(self.n - 1)]
        seq = []
        for b in range(self.blocks):
            for layer in range(self.depth):
                for q in range(self.n):
                    seq.append(("rot", q, "RY", int(idx[b, 0, layer, q, 0])))
                    seq.append(("rot", q, "RZ", int(idx[b, 0, layer, q, 1])))
                seq.extend(ladder)
            for layer in reversed(range(self.depth)):
                seq.extend(reversed(ladder))
                for q in reversed(range(self.n)):
                    seq.append(("rot", q, "RZ", int(idx[b, 1, layer, q, 1])))
                    seq.append(("rot", q, "RY", int(idx[b, 1, layer, q, 0])))
        return seq

    def circuit(self, params):
        params = np.asarray(params, dtype=float).ravel()
        gates = [Gate(op[2], float(params[op[3]]), op[1]) if op[0] == "rot" else Gate("CPHASE", math.pi, op[2], op[1])
                 for op in self.ops()]
        return Circuit(self.n, gates)


def build_hea(n, depth, seed=None, identity_init=True, blocks=2):
    """Ansatz plus initial parameters (uniform in [0, 2pi); mirrors negated when ``identity_init``)."""
    hea = Hea(n, depth, blocks)
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * math.pi, size=hea.shape)
    if identity_init:
        theta[:, 1] = -theta[:, 0]
    return hea, theta.ravel()


class _Runner:
    """Applies an ansatz to the rows of a batch, forward and backward."""

    def __init__(self, hea):
        self.hea = hea
        self.n = hea.n
        self.ops = hea.ops()

    def _stride(self, q):
        return 1 << (self.n - 1 - q)

    def _apply(self, psi, op, angle, inverse=False):
        if op[0] == "cz":
            kernels.apply_cphase(psi, self._stride(op[1]), self._stride(op[2]), -1.0 + 0j)
            return
        m = Gate(op[2], -angle if inverse else angle, op[1]).matrix()
        kernels.apply_1q(psi, self._stride(op[1]), np.ascontiguousarray(m))

    def columns(self, params, count):
        """First ``count`` columns of the ansatz unitary, as rows."""
        psi = np.zeros((count, 1 << self.n), dtype=complex)
        psi[np.arange(count), np.arange(count)] = 1.0
        for op in self.ops:
            self._apply(psi, op, params[op[3]] if op[0] == "rot" else 0.0)
        return psi

    def shifted_losses(self, params, out_rows, targets, weights, shift):
        """For every parameter: the loss with that angle moved by +shift and -shift.

        ``out_rows`` are the circuit outputs (rows), ``targets`` the fixed
        vectors they are paired with: loss = -sum_j w_j Re <target_j, out_j>.
        """
        psi = out_rows.copy()
        lam = np.ascontiguousarray(targets, dtype=complex)
        plus = np.empty(self.hea.n_params)
        minus = np.empty(self.hea.n_params)
        for op in reversed(self.ops):
            if op[0] == "rot":
                for s, dest in ((shift, plus), (-shift, minus)):
                    tmp = psi.copy()
                    self._apply(tmp, op, s)
                    dest[op[3]] = _weighted(lam, tmp, weights)
                angle = params[op[3]]
            else:
                angle = 0.0
            self._apply(psi, op, angle, inverse=True)
            self._apply(lam, op, angle, inverse=True)
        return plus, minus


def _weighted(targets, rows, weights):
    return -float(np.sum(weights * np.einsum("ij,ij->i", targets.conj(), rows).real))


def default_weights(T):
    return np.arange(T, 0, -1, dtype=float)


@dataclass
class VqsvdConfig:
    rank: int
    n_qubits: int | None = None  # left (row) register; checked against the matrix when given
    weights: tuple | None = None
    depth: int = 12
    blocks: int = 2
    learning_rate: float = 0.05
    momentum: float = 0.0
    max_iter: int = 2000
    scheme: str = "parameter-shift"
    seed: int = 0
    identity_init: bool = True
    tol: float = 1e-9
    patience: int = 50
    grad_tol: float = 1e-10
    normalize: bool = True

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"gradient scheme must be one of {SCHEMES}")
        w = np.asarray(self.weights if self.weights is not None else default_weights(self.rank), dtype=float)
        if w.shape != (self.rank,) or np.any(w <= 0) or np.any(np.diff(w) >= 0):
            raise ValueError("weights must be T strictly decreasing positive numbers")
        if not self.learning_rate > 0 or not 0 <= self.momentum < 1:
            raise ValueError("learning rate must be positive and momentum in [0, 1)")
        self.weights = tuple(float(x) for x in w)


@dataclass
class TrainTrace:
    losses: list
    estimates: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    iterations: int
    converged: bool
    readouts: np.ndarray = field(default=None, repr=False)
    left_vectors: np.ndarray = field(default=None, repr=False)
    right_vectors: np.ndarray = field(default=None, repr=False)

    def trace_rows(self):
        return [f"{i},{v:.17g}" for i, v in enumerate(self.losses)]


class VqsvdProblem:
    """Loss and gradients for one matrix and config."""

    def __init__(self, matrix, config):
        M = np.asarray(matrix, dtype=complex)
        if M.ndim != 2:
            raise ValueError("matrix must be 2-D")
        k, N = M.shape
        if not (linalg.is_power_of_two(k) and linalg.is_power_of_two(N)) or min(k, N) < 4:
            raise ValueError(f"matrix shape {M.shape} must be powers of two, each >= 4")
        n_left, n_right = k.bit_length() - 1, N.bit_length() - 1
        if config.n_qubits is not None and config.n_qubits != n_left:
            raise ValueError(f"config expects {config.n_qubits} row qubits, matrix has {n_left}")
        if config.rank > min(k, N):
            raise ValueError(f"rank {config.rank} exceeds matrix dimensions {M.shape}")
        self.M, self.config = M, config
        self.T = config.rank
        self.weights = np.asarray(config.weights)
        self.left, self.theta0 = build_hea(n_left, config.depth, trial_seed(config.seed, 0, _LEFT),
                                           config.identity_init, config.blocks)
        self.right, self.phi0 = build_hea(n_right, config.depth, trial_seed(config.seed, 0, _RIGHT),
                                          config.identity_init, config.blocks)
        self._lr = _Runner(self.left)
        self._rr = _Runner(self.right)

    def vectors(self, theta, phi):
        return self._lr.columns(theta, self.T), self._rr.columns(phi, self.T)

    def readouts(self, theta, phi):
        A, B = self.vectors(theta, phi)
        return np.einsum("ji,ji->j", A.conj(), B @ self.M.T).real

    def loss(self, theta, phi):
        return -float(np.sum(self.weights * self.readouts(theta, phi)))

    def loss_and_grad(self, theta, phi, scheme=None):
        scheme = scheme or self.config.scheme
        A, B = self.vectors(theta, phi)
        # row j of A is U e_j, row j of B is V e_j
        MB = B @ self.M.T          # rows: M V e_j
        MhA = A @ self.M.conj()    # rows: M^H U e_j
        loss = _weighted(A, MB, self.weights)
        if scheme == "parameter-shift":
            s, denom = SHIFT, 4.0 * math.sin(SHIFT / 2)
        else:
            s, denom = FD_STEP, 2.0 * FD_STEP
        lp, lm = self._lr.shifted_losses(theta, A, MB, self.weights, s)
        rp, rm = self._rr.shifted_losses(phi, B, MhA, self.weights, s)
        return loss, (lp - lm) / denom, (rp - rm) / denom


def _check_finite(loss, params, grads, n_theta):
    if math.isfinite(loss) and np.all(np.isfinite(params)) and np.all(np.isfinite(grads)):
        return
    bad = np.flatnonzero(~np.isfinite(params))
    if bad.size == 0:
        bad = np.flatnonzero(~np.isfinite(grads))
    idx = int(bad[0]) if bad.size else None
    where = "" if idx is None else (f" (left parameter {idx})" if idx < n_theta else f" (right parameter {idx - n_theta})")
    raise TrainingError(f"non-finite loss or gradient{where}", idx)


def train(matrix, config, callback=None):
    """Gradient descent on the VQSVD loss; returns the full :class:`TrainTrace`.

    With ``config.normalize`` the optimizer works on M / ||M||_F (the form
    an amplitude-loaded matrix takes) so step sizes do not depend on the
    matrix scale; losses and readouts are reported in the original units.
    Stops after ``max_iter`` steps, when |dL| < tol for ``patience``
    consecutive steps, or when the gradient norm drops below ``grad_tol``.
    """
    matrix = np.asarray(matrix)
    if not np.all(np.isfinite(matrix)):
        raise ValueError("matrix has non-finite entries")
    scale = float(np.linalg.norm(matrix)) if config.normalize else 1.0
    if not scale > 0:
        raise ValueError("matrix is zero")
    prob = VqsvdProblem(matrix / scale, config)
    n_theta = prob.theta0.size
    x = np.concatenate([prob.theta0, prob.phi0])
    vel = np.zeros_like(x)
    losses = []
    quiet = 0
    converged = False
    it = 0
    for it in range(config.max_iter):
        _check_finite(0.0, x, np.zeros(1), n_theta)
        loss, gl, gr = prob.loss_and_grad(x[:n_theta], x[n_theta:])
        g = np.concatenate([gl, gr])
        _check_finite(loss, x, g, n_theta)
        loss *= scale
        if losses and abs(loss - losses[-1]) < config.tol:
            quiet += 1
        else:
            quiet = 0
        losses.append(loss)
        if callback is not None:
            callback(it, loss)
        if quiet >= config.patience or float(np.linalg.norm(g)) < config.grad_tol:
            converged = True
            break
        vel = config.momentum * vel - config.learning_rate * g
        x = x + vel
    else:
        losses.append(scale * prob.loss(x[:n_theta], x[n_theta:]))
        it = config.max_iter
    theta, phi = x[:n_theta], x[n_theta:]
    m = scale * prob.readouts(theta, phi)
    A, B = prob.vectors(theta, phi)
    return TrainTrace(losses, np.sort(np.abs(m))[::-1], theta, phi, it, converged, m, A, B)


@dataclass(frozen=True)
class DataMatrixSpec:
    """Square N x N real matrix of given rank with a linearly decaying spectrum."""

    N: int
    rank: int = 5
    seed: int = 0

    def build(self):
        r = self.rank
        i = np.arange(1, r + 1, dtype=float)
        sigma = 2.0 * (r + 1 - i) / (r * (r + 1))
        L = linalg.random_orthonormal(self.N, r, trial_seed(self.seed, 0, _DATA))
        R = linalg.random_orthonormal(self.N, r, trial_seed(self.seed, 1, _DATA))
        return (L * sigma) @ R.T, sigma


def project_matrix(M, m_qubits, spec=None, outcome=0):
    """Row register of M sent through the ansatz, then ``m_qubits`` post-selected.

    Treating M (normalized) as one amplitude-encoded state, measurement
    renormalizes the whole kept block; the result is rescaled back to
    ||M||_F so singular values remain comparable.
    """
    M = np.asarray(M, dtype=float)
    N = M.shape[0]
    n = N.bit_length() - 1
    if not m_qubits:
        return M.astype(complex)
    psi = np.array(M.T, dtype=complex, order="C")
    rqc.run_ansatz(psi, spec)
    kept = psi[:, projectors.measurement_rows(n, m_qubits, outcome)].T
    norm = np.linalg.norm(kept)
    if norm == 0.0:
        raise ValueError("post-selected branch has zero probability")
    return kept * (np.linalg.norm(M) / norm)


@dataclass
class PipelineResult:
    trace: TrainTrace
    true_sigma: np.ndarray
    projected_sigma: np.ndarray
    estimated: np.ndarray
    pct_error: np.ndarray
    header: str

    def summary_rows(self):
        return [f"{j + 1},{s:.10g},{e:.10g},{p:.10g}"
                for j, (s, e, p) in enumerate(zip(self.true_sigma, self.estimated, self.pct_error))]


def pipeline_demo(data, m_qubits, config, *, proj_depth=150, proj_seed=None):
    """Project a data matrix by measurement, train VQSVD on it, compare with the true spectrum."""
    M, sigma = data.build()
    n = data.N.bit_length() - 1
    spec = rqc.AnsatzSpec(n, proj_depth, trial_seed(data.seed if proj_seed is None else proj_seed, 0, _PROJ))
    Mt = project_matrix(M, list(m_qubits), spec)
    trace = train(Mt, config)
    T = config.rank
    est = trace.estimates[:T]
    true = sigma[:T] if sigma.size >= T else np.pad(sigma, (0, T - sigma.size))
    with np.errstate(divide="ignore", invalid="ignore"):
        pct = np.where(true > 0, 100.0 * np.abs(est - true) / true, np.nan)
    header = (f"# rows: {Mt.shape[0]} (post-measurement register, U side); "
              f"cols: {Mt.shape[1]} (V side); measured qubits: {list(m_qubits)}")
    return PipelineResult(trace, true, linalg.singular_values(Mt)[:T], est, pct, header)


def write_trace_csv(trace, fh):
    fh.write(TRACE_CSV_HEADER + "\n")
    for line in trace.trace_rows():
        fh.write(line + "\n")


def write_summary_csv(result, fh):
    fh.write(result.header + "\n")
    fh.write(SUMMARY_CSV_HEADER + "\n")
    for line in result.summary_rows():
        fh.write(line + "\n")
