"""Noise spectra of the mirror and cavity quadratures.

Fourier convention ``f(t) = \\int d\\omega e^{-i\\omega t} f[\\omega]``, so the
linearized equations give ``f[w] = G(w) xi[w]`` with
``G(w) = (-i w I - J)^{-1}``. Input noise enters the cavity block only,
with ``<xi_i[w] xi_j[w']> = 2 kappa N_ij delta(w + w')``. The spectral matrix
is ``S(w) = G(w) Xi G(-w)^T``; two-sided, normalized so that a stationary
variance is ``\\int S(w) dw / 2 pi``.

Three input conventions ``N`` are shipped:

``printed-vacuum``
    ``[[1, i], [-i, 1]]``. The only zero-mean Gaussian choice that makes the
    transfer-matrix mirror spectrum coincide with the closed form
    ``2 kappa (4 g c omega_m)^2 [kappa^2 + (Dt + w)^2] / |d(w)|^2``.
``paper-stated``
    ``[[1, -i], [i, 1]]``, normally ordered input (``<c_in^dag c_in>`` only).
``symmetric-classical``
    identity; real white noise of equal strength in both quadratures.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .effmodel import EffectiveModel
from .errors import ConfigError, NumericalError, UnstableStateError
from .stability import classify, drift
from .steady import SteadyStateBranch

__all__ = [
    "NoiseConvention",
    "CONVENTIONS",
    "get_convention",
    "SpectrumPoint",
    "Spectrum",
    "denominator",
    "spectral_matrix",
    "transfer_spectrum",
    "printed_spectrum",
]


@dataclass(frozen=True)
class NoiseConvention:
    name: str
    matrix: np.ndarray

    def __post_init__(self):
        N = np.asarray(self.matrix, dtype=complex)
        if N.shape != (2, 2):
            raise ConfigError("noise matrix must be 2x2")
        if not np.allclose(N, N.conj().T, atol=1e-14):
            raise ConfigError(f"noise convention {self.name!r} is not Hermitian")
        if np.linalg.eigvalsh(N).min() < -1e-12:
            raise ConfigError(f"noise convention {self.name!r} is not positive semidefinite")
        object.__setattr__(self, "matrix", N)

    @property
    def symmetrized(self) -> np.ndarray:
        """Real symmetric part, the only piece a classical SDE can realize."""
        return self.matrix.real.copy()


CONVENTIONS = {
    "printed-vacuum": NoiseConvention("printed-vacuum", np.array([[1, 1j], [-1j, 1]])),
    "paper-stated": NoiseConvention("paper-stated", np.array([[1, -1j], [1j, 1]])),
    "symmetric-classical": NoiseConvention("symmetric-classical", np.eye(2)),
}


def get_convention(conv) -> NoiseConvention:
    if isinstance(conv, NoiseConvention):
        return conv
    try:
        return CONVENTIONS[conv]
    except KeyError:
        raise ConfigError(
            f"unknown noise convention {conv!r}; choose from {sorted(CONVENTIONS)}"
        ) from None


class SpectrumPoint(NamedTuple):
    omega: float
    s_xm: float
    s_xc: float
    s_pc: float
    d: complex


@dataclass
class Spectrum:
    omega: np.ndarray
    s_xm: np.ndarray
    s_xc: np.ndarray
    s_pc: np.ndarray
    d: np.ndarray
    source: str
    convention: str | None = None

    def __len__(self):
        return len(self.omega)

    def __iter__(self):
        for row in zip(self.omega, self.s_xm, self.s_xc, self.s_pc, self.d):
            yield SpectrumPoint(*row)


def denominator(omega, c_s, delta_tilde, omega_m, g, kappa):
    """``d(w) = (w^2 - omega_m^2)[(kappa - i w)^2 + Dt^2] + 2 omega_m Dt (2 g c_s)^2``.

    Equals ``-det(-i w I - J)``.
    """
    w = np.asarray(omega, dtype=float)
    # factored differences avoid cancellation next to the resonances
    return (w - omega_m) * (w + omega_m) * (
        (kappa - 1j * w) ** 2 + delta_tilde**2
    ) + (
        2.0 * omega_m * delta_tilde * (2.0 * g * c_s) ** 2
    )


def spectral_matrix(J: np.ndarray, kappa: float, omegas, convention="printed-vacuum"):
    """Full 4x4 spectral matrix at every frequency, shape ``(n, 4, 4)``."""
    conv = get_convention(convention)
    w = np.atleast_1d(np.asarray(omegas, dtype=float))
    if not np.all(np.isfinite(w)):
        raise ConfigError("frequency grid has non-finite entries")
    A = -1j * w[:, None, None] * np.eye(4) - np.asarray(J, dtype=float)[None]
    scale = np.abs(A).max(axis=(1, 2))
    bad = np.flatnonzero(np.abs(np.linalg.det(A)) <= 1e-13 * scale**4)
    if bad.size:
        raise NumericalError(f"transfer matrix singular at omega={w[bad[0]]!r}")
    E = np.zeros((4, 2), dtype=complex)
    E[2, 0] = E[3, 1] = 1.0
    rhs = np.broadcast_to(E, (len(w), 4, 2))
    try:
        Gc = np.linalg.solve(A, rhs)
        # one refinement step with the residual in extended precision
        r = rhs.astype(np.clongdouble) - np.einsum(
            "nij,njk->nik", A.astype(np.clongdouble), Gc.astype(np.clongdouble)
        )
        Gc = Gc + np.linalg.solve(A, r.astype(complex))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"transfer matrix singular on the grid: {exc}") from None
    S = 2.0 * kappa * np.einsum("nik,kl,njl->nij", Gc, conv.matrix, Gc.conj())
    if not np.all(np.isfinite(S)):
        raise NumericalError("non-finite spectral density")
    return S


def _check_branch(m: EffectiveModel, s: SteadyStateBranch):
    verdict = classify(m, s)
    if verdict.kind == "unstable":
        raise UnstableStateError(
            f"spectrum undefined for unstable state (n={s.n:.6g}, margin={verdict.margin:.3e})"
        )
    return verdict


def transfer_spectrum(
    m: EffectiveModel, s: SteadyStateBranch, omegas, convention="printed-vacuum"
) -> Spectrum:
    """Quadrature spectra from the transfer matrix (the authoritative route)."""
    _check_branch(m, s)
    conv = get_convention(convention)
    J = drift(s.c_s, s.delta_tilde, m.omega_m, m.g, m.kappa)
    w = np.atleast_1d(np.asarray(omegas, dtype=float))
    S = spectral_matrix(J, m.kappa, w, conv)
    d = denominator(w, s.c_s, s.delta_tilde, m.omega_m, m.g, m.kappa)
    return Spectrum(w, S[:, 0, 0].real, S[:, 2, 2].real, S[:, 3, 3].real, d, "transfer", conv.name)


def printed_spectrum(
    m: EffectiveModel, s: SteadyStateBranch, omegas, corrected: bool = False
) -> Spectrum:
    """Closed-form spectra as printed.

    The optical densities carry ``|d(w)|^2`` in the denominator, which does
    not reduce to the empty-cavity Lorentzian at ``g = 0``. ``corrected``
    swaps it for ``|(kappa - i w)^2 + Dt^2|^2``, which does.
    """
    _check_branch(m, s)
    w = np.atleast_1d(np.asarray(omegas, dtype=float))
    k, Dt, c, g, wm = m.kappa, s.delta_tilde, s.c_s, m.g, m.omega_m
    d = denominator(w, c, Dt, wm, g, k)
    d2 = np.abs(d) ** 2
    white = 2.0 * k * (k**2 + (w + Dt) ** 2)
    s_xm = 2.0 * k * (4.0 * g * c * wm) ** 2 * (k**2 + (Dt + w) ** 2) / d2
    denom = np.abs((k - 1j * w) ** 2 + Dt**2) ** 2 if corrected else d2
    s_xc = ((2.0 * g * c) ** 2 * Dt**2 * s_xm + white) / denom
    s_pc = ((2.0 * g * c) ** 2 * (k**2 + w**2) * s_xm + white) / denom
    return Spectrum(w, s_xm, s_xc, s_pc, d, "corrected" if corrected else "printed")
