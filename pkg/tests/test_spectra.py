import numpy as np
import pytest
from scipy import integrate, linalg

from fermimirror.effmodel import EffectiveModel
from fermimirror.errors import ConfigError, NumericalError, UnstableStateError
from fermimirror.spectra import (
    CONVENTIONS, NoiseConvention, denominator, get_convention, printed_spectrum,
    spectral_matrix, transfer_spectrum,
)
from fermimirror.stability import classify, drift
from fermimirror.steady import fold_values, steady_states


def stable_case():
    m = EffectiveModel.synthetic(1.0, 0.1, 1.0, delta=1.25, eta=3.0)
    b = steady_states(m)[0]
    assert classify(m, b).kind == "stable"
    return m, b


def test_conventions_valid():
    for c in CONVENTIONS.values():
        assert np.allclose(c.matrix, c.matrix.conj().T)
        assert np.linalg.eigvalsh(c.matrix).min() >= -1e-15
    assert np.allclose(get_convention("printed-vacuum").matrix, [[1, 1j], [-1j, 1]])
    assert np.allclose(get_convention("paper-stated").matrix, [[1, -1j], [1j, 1]])


def test_convention_validation():
    with pytest.raises(ConfigError):
        get_convention("thermal")
    with pytest.raises(ConfigError):
        NoiseConvention("bad", np.array([[1, 2], [0, 1]], dtype=complex))
    with pytest.raises(ConfigError):
        NoiseConvention("neg", np.array([[1, 0], [0, -1]], dtype=complex))


def test_denominator_is_minus_det():
    w = np.linspace(-3, 3, 31)
    J = drift(0.8, 1.1, 0.9, 0.3, 1.0)
    dets = np.array([np.linalg.det(-1j * x * np.eye(4) - J) for x in w])
    np.testing.assert_allclose(denominator(w, 0.8, 1.1, 0.9, 0.3, 1.0), -dets, rtol=1e-12)


def test_printed_mirror_spectrum_matches_transfer():
    m, b = stable_case()
    w = np.linspace(-4, 4, 801)
    np.testing.assert_allclose(transfer_spectrum(m, b, w).s_xm, printed_spectrum(m, b, w).s_xm,
                               rtol=1e-12)


def test_printed_optical_fails_uncoupled_limit():
    m = EffectiveModel.synthetic(1.37, 1e-9, 1.0, delta=1.5, eta=2.0)
    b = steady_states(m)[0]
    w = np.linspace(-4, 4, 201)
    lor = 2.0 / (1.0 + (w - b.delta_tilde) ** 2)
    assert np.max(np.abs(printed_spectrum(m, b, w).s_xc / lor - 1)) > 0.5
    # the corrected denominator does reduce to the Lorentzian ...
    pc = printed_spectrum(m, b, w, corrected=True)
    assert np.all(np.isfinite(pc.s_xc))
    # ... and so does the transfer-matrix route
    np.testing.assert_allclose(transfer_spectrum(m, b, w).s_xc, lor, rtol=1e-12)


@pytest.mark.parametrize("conv", sorted(CONVENTIONS))
def test_mirror_symmetry(conv):
    w = np.linspace(-3, 3, 41)
    a = spectral_matrix(drift(0.7, 1.3, 0.9, 0.2, 1.0), 1.0, w, conv)
    b = spectral_matrix(drift(0.7, -1.3, -0.9, 0.2, 1.0), 1.0, -w, conv)
    for i in (0, 2, 3):
        np.testing.assert_allclose(a[:, i, i].real, b[:, i, i].real, rtol=1e-13)


def test_detuning_flip_alone_is_not_a_symmetry():
    w = np.linspace(-3, 3, 41)
    a = spectral_matrix(drift(0.7, 1.3, 0.9, 0.2, 1.0), 1.0, w, "printed-vacuum")
    b = spectral_matrix(drift(0.7, -1.3, 0.9, 0.2, 1.0), 1.0, -w, "printed-vacuum")
    assert not np.allclose(a[:, 0, 0], b[:, 0, 0], rtol=1e-3)


def test_variance_matches_lyapunov():
    m, b = stable_case()
    J = drift(b.c_s, b.delta_tilde, m.omega_m, m.g, m.kappa)
    D = np.zeros((4, 4))
    D[2:, 2:] = 2 * m.kappa * np.eye(2)
    C = linalg.solve_continuous_lyapunov(J, -D)
    for i, lab in ((0, "s_xm"), (2, "s_xc"), (3, "s_pc")):
        f = lambda x: getattr(transfer_spectrum(m, b, [x], "symmetric-classical"), lab)[0]
        val, err = integrate.quad(f, -np.inf, np.inf, limit=400, epsabs=0, epsrel=1e-10)
        assert val / (2 * np.pi) == pytest.approx(C[i, i], rel=1e-7)


def test_spectra_nonnegative_and_real():
    m, b = stable_case()
    w = np.linspace(-5, 5, 501)
    for conv in CONVENTIONS:
        S = spectral_matrix(drift(b.c_s, b.delta_tilde, m.omega_m, m.g, m.kappa), 1.0, w, conv)
        diag = np.einsum("nii->ni", S)
        assert np.all(np.abs(diag.imag) <= 1e-12 * np.abs(diag.real).max())
        assert np.all(diag.real >= -1e-14)


def test_unstable_branch_rejected():
    m = EffectiveModel.synthetic(1.0, 0.2, 1.0, delta=3.0)
    lo, hi = fold_values(m, "eta", 3.0)
    mid = steady_states(m, eta=0.5 * (lo + hi))[1]
    with pytest.raises(UnstableStateError):
        transfer_spectrum(m, mid, [0.0])
    with pytest.raises(UnstableStateError):
        printed_spectrum(m, mid, [0.0])


def test_singular_grid_point():
    m = EffectiveModel.synthetic(1.0, 0.2, 1.0, delta=3.0)
    b = steady_states(m)[0]  # eta = 0: undamped mirror, pole on the real axis
    with pytest.raises(NumericalError, match="singular"):
        transfer_spectrum(m, b, [0.5, 1.0])
    s = transfer_spectrum(m, b, [0.5])
    assert s.s_xm[0] == 0.0


def test_nonfinite_grid():
    with pytest.raises(ConfigError):
        spectral_matrix(drift(1, 1, 1, 0.1, 1), 1.0, [np.nan])


def test_spectrum_iteration():
    m, b = stable_case()
    s = transfer_spectrum(m, b, [0.0, 1.0])
    pts = list(s)
    assert len(s) == 2 and pts[1].omega == 1.0 and pts[1].s_xm == s.s_xm[1]
