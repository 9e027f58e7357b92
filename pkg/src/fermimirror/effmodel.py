"""Physical inputs and the effective optomechanical model they define.

The fermionic particle-hole mode near the Fermi points acts as a pair of
oscillators of frequency ``omega_m = 2 K v_F`` coupled to the cavity photon
number with strength ``g = U0 / (4 beta)``, ``beta = sqrt(pi / (K L))``.
All frequencies are angular (rad/s).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

from scipy.constants import hbar

from .errors import ConfigError

__all__ = [
    "PhysicalParams",
    "EffectiveModel",
    "RegimeCheck",
    "RegimeReport",
    "build_effective_model",
    "validate_regime",
    "HBAR",
]

HBAR = hbar


def _positive(name: str, value: float) -> None:
    if value is None or not math.isfinite(value) or value <= 0:
        raise ConfigError(f"{name} must be a finite positive number, got {value!r}")


@dataclass(frozen=True)
class PhysicalParams:
    """Experimental inputs, SI units with angular frequencies.

    Exactly one of ``wavenumber`` / ``wavelength`` and exactly one of
    ``U0`` / (``g0``, ``pump_atom_detuning``) must be given.
    ``kF_over_K`` overrides the Fermi momentum ``pi N / L`` when set.
    """

    cavity_length: float
    atom_number: int
    atom_mass: float
    kappa: float
    wavenumber: float | None = None
    wavelength: float | None = None
    U0: float | None = None
    g0: float | None = None
    pump_atom_detuning: float | None = None
    eta: float = 0.0
    pump_cavity_detuning: float = 0.0
    kF_over_K: float | None = None

    def __post_init__(self):
        if (self.wavenumber is None) == (self.wavelength is None):
            raise ConfigError("give exactly one of wavenumber or wavelength")
        if self.wavenumber is not None:
            _positive("wavenumber", self.wavenumber)
        else:
            _positive("wavelength", self.wavelength)
        _positive("cavity_length", self.cavity_length)
        _positive("atom_mass", self.atom_mass)
        _positive("kappa", self.kappa)
        if isinstance(self.atom_number, bool) or int(self.atom_number) != self.atom_number:
            raise ConfigError(f"atom_number must be an integer, got {self.atom_number!r}")
        if self.atom_number <= 0:
            raise ConfigError(f"atom_number must be positive, got {self.atom_number!r}")

        pair = (self.g0, self.pump_atom_detuning)
        if self.U0 is not None:
            if any(v is not None for v in pair):
                raise ConfigError("give either U0 or (g0, pump_atom_detuning), not both")
            if not math.isfinite(self.U0):
                raise ConfigError("U0 must be finite")
        else:
            if any(v is None for v in pair):
                raise ConfigError("U0 missing: need both g0 and pump_atom_detuning")
            _positive("g0", self.g0)
            if self.pump_atom_detuning == 0 or not math.isfinite(self.pump_atom_detuning):
                raise ConfigError("pump_atom_detuning must be finite and nonzero")

        if not math.isfinite(self.eta) or self.eta < 0:
            raise ConfigError(f"eta must be >= 0, got {self.eta!r}")
        if not math.isfinite(self.pump_cavity_detuning):
            raise ConfigError("pump_cavity_detuning must be finite")
        if self.kF_over_K is not None:
            _positive("kF_over_K", self.kF_over_K)

    @property
    def K(self) -> float:
        if self.wavenumber is not None:
            return float(self.wavenumber)
        return 2.0 * math.pi / self.wavelength

    @property
    def coupling(self) -> float:
        if self.U0 is not None:
            return float(self.U0)
        return self.g0**2 / self.pump_atom_detuning


@dataclass(frozen=True)
class EffectiveModel:
    """Derived optomechanical parameters.

    Models built with :meth:`synthetic` carry NaN in the fields that only
    make sense for a physical parameter set (K, k_F, v_F, ...).
    """

    omega_m: float
    g: float
    kappa: float
    delta: float
    eta: float = 0.0
    K: float = math.nan
    k_F: float = math.nan
    v_F: float = math.nan
    omega_F: float = math.nan
    beta: float = math.nan
    U0: float = math.nan
    atom_mass: float = math.nan
    cavity_length: float = math.nan

    @classmethod
    def synthetic(cls, omega_m, g, kappa, delta=0.0, eta=0.0) -> "EffectiveModel":
        """Model given directly by its effective parameters (rad/s)."""
        for name, v in (("omega_m", omega_m), ("kappa", kappa)):
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive, got {v!r}")
        if eta < 0:
            raise ConfigError("eta must be >= 0")
        return cls(float(omega_m), float(g), float(kappa), float(delta), float(eta))

    @property
    def chi(self) -> float:
        """Kerr-like shift per photon, ``4 g^2 / omega_m``."""
        return 4.0 * self.g**2 / self.omega_m

    def with_drive(self, eta=None, delta=None) -> "EffectiveModel":
        from dataclasses import replace

        kw = {}
        if eta is not None:
            kw["eta"] = float(eta)
        if delta is not None:
            kw["delta"] = float(delta)
        return replace(self, **kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["chi"] = self.chi
        return d

    def digest(self) -> str:
        payload = json.dumps(
            {k: repr(v) for k, v in asdict(self).items()}, sort_keys=True
        ).encode()
        return hashlib.sha256(payload).hexdigest()


def build_effective_model(p: PhysicalParams) -> EffectiveModel:
    K = p.K
    L = p.cavity_length
    N = p.atom_number
    U0 = p.coupling
    if p.kF_over_K is not None:
        k_F = p.kF_over_K * K
    else:
        k_F = math.pi * N / L
    v_F = HBAR * k_F / p.atom_mass
    omega_F = HBAR * k_F**2 / (2.0 * p.atom_mass)
    beta = math.sqrt(math.pi / (K * L))
    # detuning convention: Delta = omega_c - omega_L + U0 N / 2
    delta = -p.pump_cavity_detuning + U0 * N / 2.0
    return EffectiveModel(
        omega_m=2.0 * K * v_F,
        g=U0 / (4.0 * beta),
        kappa=float(p.kappa),
        delta=delta,
        eta=float(p.eta),
        K=K,
        k_F=k_F,
        v_F=v_F,
        omega_F=omega_F,
        beta=beta,
        U0=U0,
        atom_mass=float(p.atom_mass),
        cavity_length=float(L),
    )


@dataclass(frozen=True)
class RegimeCheck:
    name: str
    value: float
    threshold: float
    status: str  # ok | warn | fail


@dataclass(frozen=True)
class RegimeReport:
    K_over_kF: float
    recoil: float
    recoil_over_omega_m: float
    capacity: float
    fermi_frequency: float
    checks: tuple[RegimeCheck, ...] = field(default_factory=tuple)

    @property
    def status(self) -> str:
        order = {"ok": 0, "warn": 1, "fail": 2}
        return max((c.status for c in self.checks), key=order.__getitem__, default="ok")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["status"] = self.status
        return d


def validate_regime(
    m: EffectiveModel, warn_K_over_kF: float = 0.2, warn_recoil: float = 0.2
) -> RegimeReport:
    """Audit the approximations behind the effective model.

    ``K/k_F`` fails at 1 (the linearized dispersion needs ``K < k_F``) and
    warns above ``warn_K_over_kF``; the side-mode recoil
    ``hbar (2K)^2 / (2M)`` warns above ``warn_recoil`` times ``omega_m``.
    """
    if not math.isfinite(m.K):
        raise ConfigError("regime audit needs a physically built model")
    ratio = m.K / m.k_F
    recoil = HBAR * (2.0 * m.K) ** 2 / (2.0 * m.atom_mass)
    r_ratio = recoil / m.omega_m
    capacity = m.K * m.cavity_length / math.pi

    if ratio >= 1.0:
        s1 = "fail"
    elif ratio > warn_K_over_kF:
        s1 = "warn"
    else:
        s1 = "ok"
    s2 = "warn" if r_ratio > warn_recoil else "ok"
    checks = (
        RegimeCheck("K_over_kF", ratio, warn_K_over_kF, s1),
        RegimeCheck("recoil_over_omega_m", r_ratio, warn_recoil, s2),
    )
    return RegimeReport(ratio, recoil, r_ratio, capacity, m.omega_F, checks)
