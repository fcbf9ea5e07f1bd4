"""J-matrix scattering for the one-dimensional Dirac equation in a Hermite basis."""
from .basis import BasisParams, MiddleBasisIndex, MiddleSystem, build_middle_system
from .greens import GreenEigen, PoleError, diagonalize
from .oracle import OracleResult, integrate_dirac, nonrelativistic_oracle
from .potential import PotentialSpec, classify_parity
from .refsol import Kinematics, ReferenceCoeffs, kinematics_from_energy, reference_coefficients
from .scattering import JMatrixSolver, ScatteringResult, energy_sweep, plateau_scan

__all__ = [
    "BasisParams",
    "GreenEigen",
    "JMatrixSolver",
    "Kinematics",
    "MiddleBasisIndex",
    "MiddleSystem",
    "OracleResult",
    "PoleError",
    "PotentialSpec",
    "ReferenceCoeffs",
    "ScatteringResult",
    "build_middle_system",
    "classify_parity",
    "diagonalize",
    "energy_sweep",
    "integrate_dirac",
    "kinematics_from_energy",
    "nonrelativistic_oracle",
    "plateau_scan",
    "reference_coefficients",
]

__version__ = "0.1.0"
