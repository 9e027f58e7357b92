"""Exact diagonalization of the truncated fermion + cavity-photon Hamiltonian.

Momentum modes ``k_j = 2 pi j / L`` for ``j`` in ``[j_min, j_max]``; bit
``i`` of a fermion bitmask is mode ``j_min + i`` (modes ordered by
increasing ``j``). Fermionic signs count occupied modes below the target
bit. The basis is photon-major: index ``n_c * F + f`` with ``F`` fermion
configurations. ``H`` is stored as ``H / hbar`` in rad/s.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .effmodel import HBAR
from .errors import ConfigError, HeadroomError, NumericalError

__all__ = [
    "EDConfig",
    "EDSystem",
    "build_system",
    "hop",
    "commutator_check",
    "coupling_element_check",
    "ph_energy_spread",
    "lowest_excitations",
    "bosonized_shift",
    "pt_shift",
    "DENSE_LIMIT",
]

DENSE_LIMIT = 2000


@dataclass(frozen=True)
class EDConfig:
    j_min: int
    j_max: int
    n_fermions: int
    n_photon_max: int
    kick: int
    U0: float = 0.0
    delta: float = 0.0
    eta: float = 0.0
    mass: float = 1.5e-25
    length: float = 1e-4
    dim_cap: int = 100_000

    def __post_init__(self):
        if self.j_max < self.j_min:
            raise ConfigError("j_max must be >= j_min")
        if self.modes > 62:
            raise ConfigError("at most 62 momentum modes are supported")
        if not 0 < self.n_fermions <= self.modes:
            raise ConfigError(f"n_fermions must lie in 1..{self.modes}")
        if self.n_photon_max < 0:
            raise ConfigError("n_photon_max must be >= 0")
        if self.kick < 1:
            raise ConfigError("kick must be a positive integer")
        if not (self.mass > 0 and self.length > 0):
            raise ConfigError("mass and length must be positive")
        if self.eta < 0:
            raise ConfigError("eta must be >= 0")
        sea = _sea_modes(self)
        if sea.min() < self.j_min or sea.max() > self.j_max:
            raise ConfigError("the Fermi sea does not fit in the momentum window")

    @property
    def modes(self) -> int:
        return self.j_max - self.j_min + 1

    @property
    def dimension(self) -> int:
        return math.comb(self.modes, self.n_fermions) * (self.n_photon_max + 1)


def _sea_modes(cfg: EDConfig) -> np.ndarray:
    """Indices j of the filled sea: smallest |j| first, +j before -j on ties."""
    order = sorted(range(-cfg.n_fermions, cfg.n_fermions + 1), key=lambda j: (abs(j), -j))
    return np.array(sorted(order[: cfg.n_fermions]))


def hop(states: np.ndarray, a: int, b: int):
    """Apply ``f_a^dag f_b`` (a != b) to an array of bitmasks.

    Returns ``(valid, new_states, signs)``.
    """
    states = np.asarray(states, dtype=np.uint64)
    ba, bb = np.uint64(1) << np.uint64(a), np.uint64(1) << np.uint64(b)
    valid = ((states & bb) != 0) & ((states & ba) == 0)
    s1 = states ^ bb
    par = np.bitwise_count(states & (bb - np.uint64(1))) + np.bitwise_count(
        s1 & (ba - np.uint64(1))
    )
    signs = np.where(par % 2 == 0, 1.0, -1.0)
    return valid, s1 ^ ba, signs


@dataclass
class EDSystem:
    config: EDConfig
    j: np.ndarray
    k: np.ndarray
    energies: np.ndarray  # single-particle kinetic energies / hbar (rad/s)
    fermion_states: np.ndarray
    H: sp.csr_matrix
    fs_state: int
    fs_index: int
    j_F: int
    j_F_left: int
    K: float
    k_F: float
    k_F_left: float
    v_F: float
    beta: float
    omega_m: float
    g: float

    @property
    def n_fermion_states(self) -> int:
        return len(self.fermion_states)

    @property
    def dimension(self) -> int:
        return self.H.shape[0]

    def bit(self, j: int) -> int:
        return j - self.config.j_min

    def index(self, fermion_state: int, n_photon: int = 0) -> int:
        f = int(np.searchsorted(self.fermion_states, np.uint64(fermion_state)))
        if f >= self.n_fermion_states or self.fermion_states[f] != fermion_state:
            raise KeyError(fermion_state)
        return n_photon * self.n_fermion_states + f

    def sector(self, n_photon: int) -> sp.csr_matrix:
        F = self.n_fermion_states
        sl = slice(n_photon * F, (n_photon + 1) * F)
        return self.H[sl, sl]

    def fs_vector(self) -> np.ndarray:
        v = np.zeros(self.n_fermion_states)
        v[self.fs_index] = 1.0
        return v

    def total_momentum(self) -> np.ndarray:
        """Total momentum quantum number ``sum_j j n_j`` per fermion configuration."""
        bits = ((self.fermion_states[:, None] >> np.arange(len(self.j), dtype=np.uint64)) & 1)
        return bits.astype(np.int64) @ self.j

    def fermion_operator(self, pairs) -> sp.csr_matrix:
        """Sparse ``sum (coef, a, b) coef f_a^dag f_b`` on the fermion space (mode indices j)."""
        F = self.n_fermion_states
        rows, cols, vals = [], [], []
        for coef, ja, jb in pairs:
            valid, new, signs = hop(self.fermion_states, self.bit(ja), self.bit(jb))
            src = np.flatnonzero(valid)
            dst = np.searchsorted(self.fermion_states, new[src])
            rows.append(dst)
            cols.append(src)
            vals.append(coef * signs[src])
        if not rows:
            return sp.csr_matrix((F, F))
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(F, F)
        )

    def kick_pairs(self, sign: int = +1, movers: str = "all"):
        """(1, a, b) pairs for ``f_{k+sign*p}^dag f_k`` inside the window."""
        m = self.config.kick
        out = []
        for jb in self.j:
            ja = jb + sign * m
            if not (self.config.j_min <= ja <= self.config.j_max):
                continue
            if movers == "right" and not (min(ja, jb) > 0):
                continue
            if movers == "left" and not (max(ja, jb) < 0):
                continue
            out.append((1.0, int(ja), int(jb)))
        return out


def build_system(cfg: EDConfig) -> EDSystem:
    """Assemble the sparse Hamiltonian (divided by hbar).

    Kinetic ``sum eps(k) n_k``, photon ``Delta n_c``, scattering
    ``(U0/4) n_c sum_k (f_{k+2K}^dag f_k + h.c.)`` and, for ``eta > 0``,
    the drive ``i eta (c^dag - c)``.
    """
    if cfg.dimension > cfg.dim_cap:
        raise ConfigError(f"Hilbert space dimension {cfg.dimension} exceeds cap {cfg.dim_cap}")
    j = np.arange(cfg.j_min, cfg.j_max + 1, dtype=np.int64)
    k = 2.0 * math.pi * j / cfg.length
    eps = HBAR * k**2 / (2.0 * cfg.mass)

    states = np.array(
        sorted(sum(1 << b for b in c) for c in itertools.combinations(range(cfg.modes), cfg.n_fermions)),
        dtype=np.uint64,
    )
    sea = _sea_modes(cfg)
    fs_state = sum(1 << int(jj - cfg.j_min) for jj in sea)
    fs_index = int(np.searchsorted(states, np.uint64(fs_state)))

    j_F = int(sea.max())
    j_F_left = int(-sea.min())
    K = math.pi * cfg.kick / cfg.length
    k_F = 2.0 * math.pi * j_F / cfg.length
    v_F = HBAR * k_F / cfg.mass
    beta = math.sqrt(2.0 * math.pi / (2.0 * K * cfg.length))

    sysm = EDSystem(
        cfg, j, k, eps, states, None, fs_state, fs_index, j_F, j_F_left, K, k_F,
        2.0 * math.pi * j_F_left / cfg.length, v_F, beta, 2.0 * K * v_F,
        cfg.U0 / (4.0 * beta),
    )

    bits = ((states[:, None] >> np.arange(cfg.modes, dtype=np.uint64)) & 1).astype(float)
    kin = sp.diags(bits @ eps)
    F = len(states)
    nph = np.arange(cfg.n_photon_max + 1, dtype=float)
    I_f = sp.identity(F, format="csr")
    H = sp.kron(sp.identity(len(nph)), kin) + sp.kron(sp.diags(cfg.delta * nph), I_f)
    if cfg.U0 != 0.0:
        up = sysm.fermion_operator(sysm.kick_pairs(+1))
        T = up + up.T  # exactly symmetric by construction
        H = H + sp.kron(sp.diags(0.25 * cfg.U0 * nph), T)
    if cfg.eta != 0.0:
        cdag = sp.diags(np.sqrt(nph[1:]), -1)
        drive = 1j * cfg.eta * (cdag - cdag.T)
        H = sp.kron(drive, I_f) + H.astype(complex)
    sysm.H = sp.csr_matrix(H)
    return sysm


def _require_headroom(sysm: EDSystem) -> None:
    cfg, m = sysm.config, sysm.config.kick
    problems = []
    if sysm.j_F + m > cfg.j_max:
        problems.append(f"need j_max >= {sysm.j_F + m} for right-mover headroom")
    if -sysm.j_F_left - m < cfg.j_min:
        problems.append(f"need j_min <= {-sysm.j_F_left - m} for left-mover headroom")
    if min(sysm.j_F, sysm.j_F_left) < m:
        problems.append("the particle-hole window crosses k = 0 (Fermi point below the kick)")
    if problems:
        raise HeadroomError("; ".join(problems))


def commutator_check(sysm: EDSystem) -> dict:
    """Fermi-sea expectation values of the mode commutators.

    ``b_p = beta sum_{k>0} f_k^dag f_{k+p}`` (right movers) and
    ``b_{-p} = beta sum_{k<0} f_k^dag f_{k-p}`` (left movers); daggers are
    the exact sparse transposes. Returns ``[b_p, b_p^dag]``,
    ``[b_-p, b_-p^dag]``, ``[b_p, b_-p^dag]`` and ``[b_p, b_p]``.
    """
    _require_headroom(sysm)
    # kick_pairs(+1) yields f_{k+p}^dag f_k; right movers need the reverse hop
    right = [(1.0, b, a) for _, a, b in sysm.kick_pairs(+1, "right")]
    left = [(1.0, a, b) for _, a, b in sysm.kick_pairs(+1, "left")]
    bp = sysm.beta * sysm.fermion_operator(right)
    bm = sysm.beta * sysm.fermion_operator(left)
    fs = sysm.fs_vector()

    def expect_comm(A, B):
        # <FS|[A, B]|FS> = <A^dag FS | B FS> - <B^dag FS | A FS>
        return float((A.T @ fs) @ (B @ fs) - (B.T @ fs) @ (A @ fs))

    return {
        "b_p,b_p^dag": expect_comm(bp, bp.T),
        "b_-p,b_-p^dag": expect_comm(bm, bm.T),
        "b_p,b_-p^dag": expect_comm(bp, bm.T),
        "b_p,b_p": expect_comm(bp, bp),
    }


def coupling_element_check(sysm: EDSystem) -> dict:
    """Norm of the scattering term applied to the Fermi sea (one photon).

    Expected ``sqrt(2) g`` with ``g = U0 / (4 beta)``.
    """
    _require_headroom(sysm)
    up = sysm.fermion_operator(sysm.kick_pairs(+1))
    v = 0.25 * sysm.config.U0 * ((up + up.T) @ sysm.fs_vector())
    norm = float(np.linalg.norm(v))
    expected = math.sqrt(2.0) * abs(sysm.g)
    return {"norm": norm, "expected": expected,
            "ratio": norm / expected if expected else math.nan}


def ph_energy_spread(sysm: EDSystem) -> dict:
    """Exact particle-hole energies across the diffraction window.

    For right movers the window is ``k in [k_F - 2K, k_F]`` and
    ``E(k) = eps(k + 2K) - eps(k) = 2 hbar K (k + K) / M`` (per hbar);
    left movers mirror it around their own Fermi point. Deviations are
    relative to ``omega_m = 2 K v_F`` of the same Fermi point and lie in
    ``[-K/k_F, K/k_F]`` with equality at the edges. The lower edge itself
    is Pauli-blocked; ``allowed`` marks the excitations that exist.
    """
    _require_headroom(sysm)
    cfg, m = sysm.config, sysm.config.kick
    eps = dict(zip(sysm.j.tolist(), sysm.energies))
    out = {}
    devs, bounds = [], []
    for name, jf, sign in (("right", sysm.j_F, 1), ("left", sysm.j_F_left, -1)):
        ks = [sign * jj for jj in range(jf - m, jf + 1)]
        E = np.array([eps[jj + sign * m] - eps[jj] for jj in ks])
        kF = 2.0 * math.pi * jf / cfg.length
        wm = 2.0 * sysm.K * HBAR * kF / cfg.mass
        dev = E / wm - 1.0
        formula = 2.0 * HBAR * sysm.K * (np.abs(2.0 * math.pi * np.array(ks) / cfg.length)
                                         + sysm.K) / cfg.mass
        out[name] = {
            "k_index": ks,
            "energies": E,
            "formula": formula,
            "deviation": dev,
            "bound": sysm.K / kF,
            "allowed": [abs(jj) > jf - m for jj in ks],
        }
        devs.append(dev)
        bounds.append(sysm.K / kF)
    alld = np.concatenate(devs)
    out.update(mean=float(alld.mean()), min=float(alld.min()), max=float(alld.max()),
               bound=float(max(bounds)))
    return out


def lowest_excitations(sysm: EDSystem, photon_sector: int, count: int = 6) -> np.ndarray:
    """Lowest eigenvalues (rad/s) of a fixed-photon-number block (needs eta = 0)."""
    if sysm.config.eta != 0.0:
        raise ConfigError("photon sectors are only conserved at eta = 0")
    if not 0 <= photon_sector <= sysm.config.n_photon_max:
        raise ConfigError(f"photon sector must lie in 0..{sysm.config.n_photon_max}")
    block = sysm.sector(photon_sector)
    n = block.shape[0]
    count = min(count, n)
    if n <= DENSE_LIMIT or count >= n - 1:
        return np.linalg.eigvalsh(block.toarray())[:count]
    try:
        vals = spla.eigsh(block, k=count, which="SA", tol=1e-12, return_eigenvectors=False)
    except spla.ArpackNoConvergence as exc:
        vals = exc.eigenvalues
        raise NumericalError(
            f"sparse eigensolver did not converge ({len(vals)}/{count} values)"
        ) from None
    return np.sort(vals)


def pt_shift(sysm: EDSystem, n_photon: int = 1) -> float:
    """Second-order shift of the photon-dressed Fermi sea from the exact p-h energies."""
    up = sysm.fermion_operator(sysm.kick_pairs(+1))
    v = 0.25 * sysm.config.U0 * n_photon * ((up + up.T) @ sysm.fs_vector())
    diag = np.asarray(sysm.sector(0).diagonal()).real
    E0 = diag[sysm.fs_index]
    nz = np.flatnonzero(v)
    return float(-np.sum(v[nz] ** 2 / (diag[nz] - E0)))


def bosonized_shift(sysm: EDSystem, n_photon: int = 1) -> float:
    """Displaced-oscillator shift ``-2 g^2 n^2 / omega_m`` of the effective model."""
    return -2.0 * sysm.g**2 * n_photon**2 / sysm.omega_m
