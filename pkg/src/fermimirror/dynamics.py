"""Time-domain oracle: mean-field ODE and linearized Langevin ensembles.

Random streams: every ensemble member owns a ``numpy.random.Generator``
(PCG64) seeded from ``SeedSequence(seed).spawn(ensemble)[member]``, so a
member's trajectory does not depend on batching or ensemble size.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import signal

from . import kernels
from .effmodel import EffectiveModel
from .errors import ConfigError, NumericalError, UnstableStateError
from .spectra import get_convention
from .stability import classify, drift
from .steady import SteadyStateBranch

__all__ = [
    "SimConfig",
    "Trajectory",
    "EmpiricalSpectrum",
    "RNG_NAME",
    "MEANFIELD_LABELS",
    "LINEAR_LABELS",
    "simulate_meanfield",
    "simulate_linear",
    "iter_linear_batches",
    "periodogram",
    "ensemble_periodogram",
    "branch_state",
]

RNG_NAME = "numpy PCG64 via SeedSequence.spawn"
MEANFIELD_LABELS = ("X_M", "P_M", "re_c", "im_c")
LINEAR_LABELS = ("X_M", "P_M", "X", "P")
MAX_STEP = 0.1
_CHUNK = 1 << 15


@dataclass(frozen=True)
class SimConfig:
    dt: float
    steps: int
    ensemble: int = 1
    seed: int = 0
    burn_in: float = 0.0
    noise: str = "symmetric-classical"
    initial: tuple = (0.0, 0.0, 0.0, 0.0)
    record_every: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"dt must be positive, got {self.dt!r}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ConfigError(f"steps must be a positive integer, got {self.steps!r}")
        if int(self.ensemble) != self.ensemble or self.ensemble < 1:
            raise ConfigError(f"ensemble must be >= 1, got {self.ensemble!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        if not 0.0 <= self.burn_in < 1.0:
            raise ConfigError(f"burn_in must lie in [0, 1), got {self.burn_in!r}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ConfigError("record_every must be a positive integer")
        if len(self.initial) != 4:
            raise ConfigError("initial state must have 4 components")
        get_convention(self.noise)

    @property
    def burn_steps(self) -> int:
        return int(round(self.burn_in * self.steps))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["initial"] = list(self.initial)
        d["rng"] = RNG_NAME
        return d


@dataclass
class Trajectory:
    """Recorded states after burn-in.

    ``states`` is ``(n, 4)`` for mean-field runs and ``(ensemble, n, 4)``
    for linearized runs. ``final`` holds the state after the last step.
    """

    kind: str
    t: np.ndarray
    states: np.ndarray
    labels: tuple
    seed: int | None
    final: np.ndarray

    def channel(self, name) -> np.ndarray:
        idx = name if isinstance(name, int) else self.labels.index(name)
        return self.states[..., idx]


def _check_step(dt: float, rates) -> None:
    fastest = max(abs(r) for r in rates)
    if dt * fastest > MAX_STEP:
        raise ConfigError(
            f"time step too large: dt*max rate = {dt * fastest:.3g} > {MAX_STEP} "
            f"(dt <= {MAX_STEP / fastest:.3e} s required)"
        )


def _time_grid(cfg: SimConfig) -> tuple[int, np.ndarray]:
    stride = cfg.record_every
    first = -(-cfg.burn_steps // stride)  # first record index kept
    nrec = -(-cfg.steps // stride)
    return first, np.arange(first, nrec) * stride * cfg.dt


def branch_state(m: EffectiveModel, s: SteadyStateBranch) -> np.ndarray:
    """Mean-field state ``(X_M, P_M, Re c, Im c)`` of a steady branch.

    Uses the unrotated field ``c = eta / (kappa + i Dt)``.
    """
    c = s.eta / complex(m.kappa, s.delta_tilde)
    return np.array([s.x_m, s.p_m, c.real, c.imag])


def simulate_meanfield(
    m: EffectiveModel, eta: float, delta: float, init, cfg: SimConfig
) -> Trajectory:
    """Noise-free mean-field dynamics by fixed-step RK4."""
    y0 = np.asarray(cfg.initial if init is None else init, dtype=float)
    if y0.shape != (4,) or not np.all(np.isfinite(y0)):
        raise ConfigError("initial state must be 4 finite numbers")
    dt0 = delta + math.sqrt(2.0) * m.g * y0[0]
    _check_step(cfg.dt, (m.omega_m, m.kappa, delta, dt0))

    stride = cfg.record_every
    first, t = _time_grid(cfg)
    out = np.empty((-(-cfg.steps // stride), 4))
    final, done = kernels.rk4_meanfield(
        y0, m.omega_m, m.g, delta, m.kappa, eta, cfg.dt, cfg.steps, stride, out
    )
    if done < cfg.steps:
        raise NumericalError(
            f"mean-field run diverged at t={done * cfg.dt:.6e} s (step {done}): "
            f"state={np.asarray(final).tolist()}"
        )
    return Trajectory("meanfield", t, out[first:].copy(), MEANFIELD_LABELS, None,
                      np.asarray(final))


def _noise_matrix(m: EffectiveModel, convention) -> np.ndarray:
    Q = 2.0 * m.kappa * get_convention(convention).symmetrized
    w, V = np.linalg.eigh(Q)
    B = np.zeros((4, 2))
    B[2:, :] = V @ np.diag(np.sqrt(np.clip(w, 0.0, None))) @ V.T
    return B


def _prepare_linear(m: EffectiveModel, s: SteadyStateBranch, cfg: SimConfig):
    verdict = classify(m, s)
    if verdict.kind == "unstable":
        raise UnstableStateError(
            f"linearized dynamics undefined around an unstable state (margin={verdict.margin:.3e})"
        )
    _check_step(cfg.dt, (m.omega_m, m.kappa, s.delta_tilde))
    J = drift(s.c_s, s.delta_tilde, m.omega_m, m.g, m.kappa)
    return J, _noise_matrix(m, cfg.noise)


def iter_linear_batches(
    m: EffectiveModel, s: SteadyStateBranch, cfg: SimConfig, batch: int = 32, backend=None
):
    """Yield ``(member_indices, states, final)`` for consecutive member batches."""
    J, B = _prepare_linear(m, s, cfg)
    kern = kernels.get(backend)
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.ensemble)
    stride = cfg.record_every
    first, t = _time_grid(cfg)
    nrec = -(-cfg.steps // stride)
    chunk = stride * max(1, _CHUNK // stride)
    x0 = np.asarray(cfg.initial, dtype=float)

    for b0 in range(0, cfg.ensemble, batch):
        members = list(range(b0, min(b0 + batch, cfg.ensemble)))
        gens = [np.random.Generator(np.random.PCG64(children[i])) for i in members]
        X = np.tile(x0, (len(members), 1))
        out = np.empty((len(members), nrec, 4))
        for start in range(0, cfg.steps, chunk):
            n = min(chunk, cfg.steps - start)
            normals = np.stack([gen.standard_normal((n, 2)) for gen in gens])
            r0 = start // stride
            r1 = r0 + -(-n // stride)
            buf = np.empty((len(members), r1 - r0, 4))
            ok = kern.em_linear(J, B, X, cfg.dt, normals, stride, buf)
            out[:, r0:r1, :] = buf
            if not ok:
                raise NumericalError(
                    f"linearized run produced non-finite state near t={(start + n) * cfg.dt:.6e} s"
                )
        yield members, out[:, first:, :], X.copy()


def simulate_linear(
    m: EffectiveModel, s: SteadyStateBranch, cfg: SimConfig, backend=None
) -> Trajectory:
    """Euler-Maruyama integration of the linearized Langevin equations.

    Optical-block increments have covariance ``dt * 2 kappa Re(N)`` for the
    configured noise convention ``N``.
    """
    states, finals = [], []
    for _, st, fin in iter_linear_batches(m, s, cfg, backend=backend):
        states.append(st)
        finals.append(fin)
    _, t = _time_grid(cfg)
    return Trajectory("linear", t, np.concatenate(states), LINEAR_LABELS, cfg.seed,
                      np.concatenate(finals))


@dataclass
class EmpiricalSpectrum:
    omega: np.ndarray
    density: np.ndarray
    segments: int
    members: int

    @property
    def bin_width(self) -> float:
        return float(self.omega[1] - self.omega[0])


def _welch(data: np.ndarray, dt: float, segments: int, window: str):
    n = data.shape[-1]
    if segments < 4:
        raise ConfigError("periodogram needs at least 4 segments")
    nperseg = n // segments
    if nperseg < 8:
        raise ConfigError(f"trajectory too short: {n} samples for {segments} segments")
    f, P = signal.welch(
        data, fs=1.0 / dt, window=window, nperseg=nperseg, noverlap=nperseg // 2,
        detrend=False, return_onesided=False, scaling="density", axis=-1,
    )
    f = np.fft.fftshift(f)
    P = np.fft.fftshift(P, axes=-1)
    return 2.0 * np.pi * f, P


def periodogram(traj: Trajectory, channel, segments: int = 8, window: str = "hann",
                dt: float | None = None) -> EmpiricalSpectrum:
    """Welch-averaged two-sided spectral density (per rad/s measure ``dw/2pi``).

    White noise of density ``sigma^2`` (per-sample variance ``sigma^2/dt``)
    comes out flat at ``sigma^2``. Ensemble trajectories are averaged over
    members.
    """
    data = traj.channel(channel) if isinstance(traj, Trajectory) else np.asarray(traj)
    if dt is None:
        if not isinstance(traj, Trajectory) or len(traj.t) < 2:
            raise ConfigError("periodogram needs a sample spacing")
        dt = float(traj.t[1] - traj.t[0])
    omega, P = _welch(np.atleast_2d(data), dt, segments, window)
    return EmpiricalSpectrum(omega, P.mean(axis=0), segments, P.shape[0])


def ensemble_periodogram(
    m: EffectiveModel, s: SteadyStateBranch, cfg: SimConfig, channel="X_M",
    segments: int = 8, window: str = "hann", batch: int = 25, backend=None,
) -> EmpiricalSpectrum:
    """Streamed version of ``periodogram(simulate_linear(...))``.

    Members are simulated in batches and their periodograms summed in
    member order, so memory stays bounded for long ensembles.
    """
    idx = channel if isinstance(channel, int) else LINEAR_LABELS.index(channel)
    dt = cfg.dt * cfg.record_every
    total, omega = None, None
    for _, st, _ in iter_linear_batches(m, s, cfg, batch=batch, backend=backend):
        omega, P = _welch(st[..., idx], dt, segments, window)
        part = P.sum(axis=0)
        total = part if total is None else total + part
    return EmpiricalSpectrum(omega, total / cfg.ensemble, segments, cfg.ensemble)
