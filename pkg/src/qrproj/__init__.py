"""Random projection of high-dimensional data with simulated local random circuits.

Modules:
    linalg: Jacobi SVD, fast Walsh-Hadamard transform, Haar sampling.
    simulator: statevector gates, circuits, measurement.
    rqc: the random-circuit ansatz and its moment diagnostics.
    projectors: QRP, SRHT and PCA projectors.
    datasets: MNIST / CIFAR-100 loaders and synthetic data.
    jl_bench, entropy_bench, vqsvd: the experiment drivers.
    cli: the ``qrproj`` command.
"""

__version__ = "0.1.0"

from .kernels import BACKEND
from .linalg import ConvergenceError, SvdResult, fwht, haar_unitary, svd
from .projectors import (Projector, apply, build_pca, build_qrp, build_srht, project_by_measurement,
                         read_projector, reconstruct, write_projector)
from .rqc import AnsatzSpec, MomentEstimate, build_rqc
from .simulator import (Circuit, Gate, MeasurementError, ResourceLimitError, Statevector, amplitude_encode,
                        apply_circuit, apply_gate, circuit_unitary, project_qubit)

__all__ = [
    "BACKEND", "AnsatzSpec", "Circuit", "ConvergenceError", "Gate", "MeasurementError", "MomentEstimate",
    "Projector", "ResourceLimitError", "Statevector", "SvdResult", "amplitude_encode", "apply", "apply_circuit",
    "apply_gate", "build_pca", "build_qrp", "build_rqc", "build_srht", "circuit_unitary", "fwht", "haar_unitary",
    "project_by_measurement", "project_qubit", "read_projector", "reconstruct", "svd", "write_projector",
]
