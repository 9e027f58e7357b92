"""Linearized fluctuation dynamics around a steady state.

State order is ``[dX_M, dP_M, dX, dP]`` (mirror then cavity quadratures).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .effmodel import EffectiveModel
from .errors import NumericalError
from .steady import SteadyStateBranch

__all__ = [
    "DriftMatrix",
    "StabilityVerdict",
    "drift",
    "drift_matrix",
    "eigenvalues",
    "charpoly_residual",
    "classify",
    "TOL_MARGIN",
]

TOL_MARGIN = 1e-9  # in units of kappa


@dataclass(frozen=True)
class DriftMatrix:
    matrix: np.ndarray
    c_s: float
    delta_tilde: float
    omega_m: float
    g: float
    kappa: float

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))


def drift(c_s, delta_tilde, omega_m, g, kappa) -> np.ndarray:
    # the coupling entries differ by a factor 2 (-4 g c_s vs -2 g c_s); both are correct
    return np.array(
        [
            [0.0, omega_m, 0.0, 0.0],
            [-omega_m, 0.0, -4.0 * g * c_s, 0.0],
            [0.0, 0.0, -kappa, delta_tilde],
            [-2.0 * g * c_s, 0.0, -delta_tilde, -kappa],
        ]
    )


def drift_matrix(m: EffectiveModel, s: SteadyStateBranch) -> DriftMatrix:
    J = drift(s.c_s, s.delta_tilde, m.omega_m, m.g, m.kappa)
    return DriftMatrix(J, s.c_s, s.delta_tilde, m.omega_m, m.g, m.kappa)


def _sorted(ev: np.ndarray) -> np.ndarray:
    return ev[np.lexsort((-ev.imag, -ev.real))]


def eigenvalues(J: DriftMatrix | np.ndarray, kappa: float | None = None) -> np.ndarray:
    """Eigenvalues of the drift matrix, sorted by real part (descending).

    The matrix is diagonalized in units of kappa and rescaled.
    """
    if isinstance(J, DriftMatrix):
        kappa, J = J.kappa, J.matrix
    J = np.asarray(J, dtype=float)
    if not np.all(np.isfinite(J)):
        raise NumericalError("drift matrix has non-finite entries")
    scale = kappa if kappa else 1.0
    return _sorted(np.linalg.eigvals(J / scale) * scale)


def _det(M: np.ndarray) -> complex:
    # LU keeps exact zero pivots finite where numpy's slogdet route gives nan
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(M, check_finite=False)
    swaps = np.count_nonzero(piv != np.arange(len(piv)))
    return (-1) ** swaps * np.prod(np.diag(lu))


def charpoly_residual(J: np.ndarray, lam: np.ndarray, kappa: float) -> np.ndarray:
    """|det(J - lam I)| with everything expressed in units of kappa."""
    Jn = np.asarray(J, dtype=float) / kappa
    eye = np.eye(Jn.shape[0])
    return np.array([abs(_det(Jn - (l / kappa) * eye)) for l in np.atleast_1d(lam)])


@dataclass(frozen=True)
class StabilityVerdict:
    eigenvalues: np.ndarray
    kind: str  # stable | unstable | marginal
    margin: float

    @property
    def frequencies(self) -> np.ndarray:
        return self.eigenvalues.imag

    @property
    def code(self) -> str:
        return {"stable": "S", "unstable": "U", "marginal": "M"}[self.kind]


def classify(m: EffectiveModel, s: SteadyStateBranch, tol: float = TOL_MARGIN) -> StabilityVerdict:
    """Stable if every eigenvalue has real part below ``-tol*kappa``.

    Marginal if the largest real part is within ``tol*kappa`` of zero, which
    is exact for the undamped mirror pair when ``g c_s = 0``.
    """
    ev = eigenvalues(drift_matrix(m, s))
    margin = float(ev.real.max())
    if margin < -tol * m.kappa:
        kind = "stable"
    elif abs(margin) <= tol * m.kappa:
        kind = "marginal"
    else:
        kind = "unstable"
    return StabilityVerdict(ev, kind, margin)
