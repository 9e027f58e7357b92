"""Mean-field steady states and optical bistability.

Setting the time derivatives of the mean-field equations to zero gives the
photon-number cubic

    n [kappa^2 + (Delta - chi n)^2] = eta^2,   chi = 4 g^2 / omega_m.

Internally everything is expressed in units of kappa and in the scaled
variable ``y = chi n / kappa``, which turns the cubic into the monic
``y^3 - 2 d y^2 + (1 + d^2) y - q = 0`` with ``d = Delta/kappa`` and
``q = chi eta^2 / kappa^3``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy import optimize

from .effmodel import EffectiveModel
from .errors import ConfigError, NeverBistableError, NumericalError

__all__ = [
    "SteadyStateBranch",
    "BistabilityCurve",
    "Threshold",
    "Jump",
    "HysteresisTrace",
    "photon_numbers",
    "cubic_discriminant",
    "steady_states",
    "fold_values",
    "sweep",
    "bistability_threshold",
    "scan_threshold",
    "hysteresis_trace",
]

FOLD_RTOL = 1e-6
RESIDUAL_TOL = 1e-10
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class SteadyStateBranch:
    """One real root of the steady-state cubic.

    ``c_s`` is the field amplitude after rotating the global phase so that
    it is real and nonnegative; ``x_m`` and ``p_m`` are mirror quadratures.
    """

    n: float
    c_s: float
    x_m: float
    p_m: float
    delta_tilde: float
    residual: float
    eta: float
    delta: float
    fold: bool = False


def _depressed_real_roots(a: float, b: float, c: float) -> list[float]:
    """Real roots of y^3 + a y^2 + b y + c by the trigonometric/Cardano form."""
    shift = a / 3.0
    p = b - a * a / 3.0
    qq = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    disc = -(4.0 * p**3 + 27.0 * qq * qq)
    scale = 4.0 * abs(p) ** 3 + 27.0 * qq * qq
    if p < 0.0 and disc >= -1e-12 * scale:
        r = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * qq / (p * r)
        arg = min(1.0, max(-1.0, arg))
        phi = math.acos(arg) / 3.0
        return [r * math.cos(phi - 2.0 * math.pi * k / 3.0) - shift for k in range(3)]
    # one real root; avoid cancellation between the two cube roots
    s = math.sqrt(max(qq * qq / 4.0 + p**3 / 27.0, 0.0))
    u = -math.copysign(1.0, qq) * np.cbrt(abs(qq) / 2.0 + s)
    v = -p / (3.0 * u) if u != 0.0 else 0.0
    return [u + v - shift]


def _polish(y: float, d: float, q: float) -> float:
    def f(x):
        return x * ((x - d) ** 2 + 1.0) - q

    fy = f(y)
    for _ in range(60):
        fp = 3.0 * y * y - 4.0 * d * y + 1.0 + d * d
        if fp == 0.0 or fy == 0.0:
            break
        y_new = y - fy / fp
        f_new = f(y_new)
        if abs(f_new) >= abs(fy):
            break
        y, fy = y_new, f_new
    return y


def photon_numbers(chi: float, kappa: float, eta: float, delta: float):
    """All nonnegative real photon numbers of the steady-state cubic.

    Returns a list of ``(n, fold, residual)`` sorted by ``n``; ``residual``
    is relative to ``eta^2`` (or to the kappa scale when ``eta == 0``).
    Works for either sign of ``chi``.
    """
    e = eta / kappa
    d = delta / kappa
    ch = chi / kappa
    if e * e == 0.0:
        return [(0.0, False, 0.0)]
    if ch == 0.0 or ch * e * e == 0.0:
        n = e * e / (1.0 + d * d)
        res = (n * (1.0 + d * d) - e * e) / (e * e)
        return [(n, False, abs(res))]

    q = ch * e * e
    ys = [_polish(y, d, q) for y in _depressed_real_roots(-2.0 * d, 1.0 + d * d, -q)]
    ys.sort()
    merged: list[list] = []
    for y in ys:
        if merged and abs(y - merged[-1][0]) <= FOLD_RTOL * max(abs(y), abs(merged[-1][0])):
            merged[-1] = [0.5 * (y + merged[-1][0]), True]
        else:
            merged.append([y, False])

    out = []
    for y, fold in merged:
        n = y / ch
        if n < 0.0:
            continue
        res = abs((y * ((y - d) ** 2 + 1.0) - q) / q)
        out.append((n, fold, res))
    out.sort(key=lambda t: t[0])
    return out


def cubic_discriminant(chi: float, kappa: float, eta: float, delta: float) -> float:
    """Discriminant of the scaled cubic; positive means three distinct real roots."""
    d = delta / kappa
    q = (chi / kappa) * (eta / kappa) ** 2
    a, b, c = -2.0 * d, 1.0 + d * d, -q
    return 18 * a * b * c - 4 * a**3 * c + a * a * b * b - 4 * b**3 - 27 * c * c


def _branch(m: EffectiveModel, eta: float, delta: float, n: float, fold: bool, res: float):
    return SteadyStateBranch(
        n=n,
        c_s=math.sqrt(n),
        x_m=-2.0 * SQRT2 * m.g * n / m.omega_m,
        p_m=0.0,
        delta_tilde=delta - m.chi * n,
        residual=res,
        eta=float(eta),
        delta=float(delta),
        fold=fold,
    )


def steady_states(m: EffectiveModel, eta: float | None = None, delta: float | None = None):
    """Steady-state branches at drive ``eta`` and detuning ``delta`` (rad/s).

    Defaults to the model's own ``eta`` / ``delta``. Branches are sorted by
    photon number; merged double roots carry ``fold=True``.
    """
    eta = m.eta if eta is None else float(eta)
    delta = m.delta if delta is None else float(delta)
    if eta < 0 or not math.isfinite(eta) or not math.isfinite(delta):
        raise ConfigError(f"invalid drive/detuning: eta={eta!r}, delta={delta!r}")
    roots = photon_numbers(m.chi, m.kappa, eta, delta)
    for n, _, res in roots:
        if not res <= RESIDUAL_TOL:
            raise NumericalError(f"cubic root n={n!r} has relative residual {res:.3e}")
    return [_branch(m, eta, delta, n, fold, res) for n, fold, res in roots]


def fold_values(m: EffectiveModel, variable: str, fixed: float) -> np.ndarray:
    """Sweep-variable values where two branches merge (sorted, rad/s).

    Found from the zeros of the discriminant, independently of the root
    solver: for a drive sweep the discriminant is quadratic in
    ``q ~ eta^2``; for a detuning sweep it is a sextic in ``Delta/kappa``.
    """
    variable = _normalize_variable(variable)
    ch = m.chi / m.kappa
    if ch == 0.0:
        return np.empty(0)
    if variable == "eta":
        d = fixed / m.kappa
        if d * d <= 3.0:
            return np.empty(0)
        ys = np.array([2 * d - math.sqrt(d * d - 3), 2 * d + math.sqrt(d * d - 3)]) / 3.0
        qs = ys * ((ys - d) ** 2 + 1.0)
        etas = [m.kappa * math.sqrt(qv / ch) for qv in qs if qv / ch > 0]
        return np.sort(np.array(etas))
    q = ch * (fixed / m.kappa) ** 2
    a = Polynomial([0.0, -2.0])
    b = Polynomial([1.0, 0.0, 1.0])
    c = -q
    disc = 18 * a * b * c - 4 * a**3 * c + a * a * b * b - 4 * b**3 - 27 * c * c
    r = disc.roots()
    real = r[np.abs(r.imag) <= 1e-9 * np.maximum(1.0, np.abs(r))].real
    return np.sort(real) * m.kappa


def _normalize_variable(variable: str) -> str:
    v = variable.lower()
    if v in ("eta", "drive"):
        return "eta"
    if v in ("delta", "detuning"):
        return "detuning"
    raise ConfigError(f"unknown sweep variable {variable!r}")


@dataclass
class BistabilityCurve:
    variable: str
    values: np.ndarray
    fixed: float
    branches: list
    verdicts: list | None = None
    folds: np.ndarray = field(default_factory=lambda: np.empty(0))

    def counts(self) -> np.ndarray:
        return np.array([len(b) for b in self.branches])

    def rows(self):
        """Flat rows (value, branch_index, branch, verdict)."""
        for i, (v, bs) in enumerate(zip(self.values, self.branches)):
            for j, b in enumerate(bs):
                yield v, j, b, (self.verdicts[i][j] if self.verdicts else None)


def sweep(
    m: EffectiveModel,
    variable: str,
    start: float,
    stop: float,
    steps: int,
    fixed: float | None = None,
    classify: bool = True,
) -> BistabilityCurve:
    """Sample every steady branch along a drive or detuning sweep (rad/s)."""
    variable = _normalize_variable(variable)
    if steps < 2:
        raise ConfigError("a sweep needs at least 2 steps")
    if not start != stop:
        raise ConfigError("empty sweep range")
    if fixed is None:
        fixed = m.delta if variable == "eta" else m.eta
    values = np.linspace(start, stop, int(steps))
    if variable == "eta" and values.min() < 0:
        raise ConfigError("drive sweep must stay at eta >= 0")

    branches = []
    for v in values:
        if variable == "eta":
            branches.append(steady_states(m, eta=v, delta=fixed))
        else:
            branches.append(steady_states(m, eta=fixed, delta=v))
    verdicts = None
    if classify:
        from .stability import classify as _classify

        verdicts = [[_classify(m, b) for b in bs] for bs in branches]
    return BistabilityCurve(
        variable, values, float(fixed), branches, verdicts, fold_values(m, variable, fixed)
    )


@dataclass(frozen=True)
class Threshold:
    eta_c: float
    delta_c: float
    n_c: float
    eta_scan: float | None = None

    @property
    def rel_mismatch(self) -> float | None:
        if self.eta_scan is None:
            return None
        return abs(self.eta_c - self.eta_scan) / self.eta_c


def scan_threshold(m: EffectiveModel, grid: int = 2001) -> tuple[float, float]:
    """Brute-force threshold: smallest drive at which some detuning is bistable.

    For each trial drive the discriminant is maximized over a detuning grid
    (refined by a bounded scalar search); the drive where that maximum
    changes sign is located by Brent's method. Returns ``(eta, delta)``.
    """
    ch = m.chi / m.kappa
    sign = math.copysign(1.0, ch)

    def best(q):
        dmax = 3.0 + 3.0 * abs(q) ** (1.0 / 3.0)
        ds = sign * np.linspace(0.0, dmax, grid)
        a, b, c = -2.0 * ds, 1.0 + ds * ds, -q
        vals = 18 * a * b * c - 4 * a**3 * c + a * a * b * b - 4 * b**3 - 27 * c * c
        i = int(np.argmax(vals))
        lo, hi = ds[max(i - 1, 0)], ds[min(i + 1, grid - 1)]
        lo, hi = min(lo, hi), max(lo, hi)

        def neg(d):
            a, b = -2.0 * d, 1.0 + d * d
            return -(18 * a * b * c - 4 * a**3 * c + a * a * b * b - 4 * b**3 - 27 * c * c)

        if hi > lo:
            r = optimize.minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                                         options={"xatol": 1e-12})
            if -r.fun > vals[i]:
                return -r.fun, r.x
        return vals[i], ds[i]

    q_lo, q_hi = 1e-6 * sign, 1.0 * sign
    while best(q_hi)[0] <= 0:
        q_lo, q_hi = q_hi, 2.0 * q_hi
        if abs(q_hi) > 1e12:
            raise NumericalError("threshold scan found no bistable region")
    q_c = optimize.brentq(lambda q: best(q)[0], q_lo, q_hi, xtol=1e-14, rtol=1e-13)
    eta = m.kappa * math.sqrt(q_c / ch)
    return eta, best(q_c)[1] * m.kappa


def bistability_threshold(m: EffectiveModel, verify: bool = True, rtol: float = 1e-4) -> Threshold:
    """Cusp of the bistable region: the weakest drive that admits three roots.

    Closed form ``Delta_c = sqrt(3) kappa sign(chi)``,
    ``n_c = 2 kappa / (sqrt(3) |chi|)``, ``eta_c^2 = 8 kappa^3 / (3 sqrt(3) |chi|)``.
    With ``verify`` the drive is checked against :func:`scan_threshold`.
    """
    chi = m.chi
    if chi == 0.0:
        raise NeverBistableError("chi = 0: the system is never bistable")
    k = m.kappa
    eta_c = math.sqrt(8.0 * k**3 / (3.0 * math.sqrt(3.0) * abs(chi)))
    th = Threshold(eta_c, math.sqrt(3.0) * k * math.copysign(1.0, chi),
                   2.0 * k / (math.sqrt(3.0) * abs(chi)))
    if verify:
        eta_scan, _ = scan_threshold(m)
        th = Threshold(th.eta_c, th.delta_c, th.n_c, eta_scan)
        if th.rel_mismatch > rtol:
            raise NumericalError(
                f"threshold verification failed: formula {eta_c:.6e}, scan {eta_scan:.6e}"
            )
    return th


@dataclass(frozen=True)
class Jump:
    index: int
    value: float
    n_from: float
    n_to: float


@dataclass
class HysteresisTrace:
    direction: str
    values: np.ndarray
    n: np.ndarray
    branch_index: np.ndarray
    jumps: list
    gaps: list


def _match(prev: list[float], nxt: list[float]) -> dict[int, int]:
    """Order-preserving assignment of previous branches to next branches."""
    if len(prev) == len(nxt):
        return {i: i for i in range(len(prev))}
    small, large = (prev, nxt) if len(prev) < len(nxt) else (nxt, prev)
    best, best_cost = None, math.inf
    for combo in itertools.combinations(range(len(large)), len(small)):
        cost = sum(abs(small[i] - large[j]) for i, j in enumerate(combo))
        if cost < best_cost:
            best, best_cost = combo, cost
    if len(prev) < len(nxt):
        return {i: j for i, j in enumerate(best)}
    return {j: i for i, j in enumerate(best)}


def hysteresis_trace(curve: BistabilityCurve, direction: str = "up") -> HysteresisTrace:
    """Follow one stable branch along the sweep, jumping where it vanishes.

    ``up`` walks the sweep in increasing value starting on the lowest
    stable branch, ``down`` walks backwards starting on the highest.
    Marginal branches count as stable here.
    """
    if curve.verdicts is None:
        raise ConfigError("hysteresis trace needs a curve with stability verdicts")
    if direction not in ("up", "down"):
        raise ConfigError(f"direction must be 'up' or 'down', got {direction!r}")
    order = np.argsort(curve.values, kind="stable")
    if direction == "down":
        order = order[::-1]

    def stable_idx(i):
        return [j for j, v in enumerate(curve.verdicts[i]) if v.kind != "unstable"]

    def start(i):
        cands = stable_idx(i)
        if not cands:
            return None
        return cands[0] if direction == "up" else cands[-1]

    N = len(order)
    n_out = np.full(N, np.nan)
    b_out = np.full(N, -1, dtype=int)
    jumps, gaps = [], []
    cur = None
    prev_i = None
    for pos, i in enumerate(order):
        ns = [b.n for b in curve.branches[i]]
        if cur is None:
            cur = start(i)
        else:
            prev_ns = [b.n for b in curve.branches[prev_i]]
            mapping = _match(prev_ns, ns)
            nxt = mapping.get(cur)
            if nxt is not None and curve.verdicts[i][nxt].kind != "unstable":
                cur = nxt
            else:
                cands = stable_idx(i)
                n_prev = prev_ns[cur]
                if cands:
                    new = min(cands, key=lambda j: abs(ns[j] - n_prev))
                    jumps.append(Jump(int(i), float(curve.values[i]), n_prev, ns[new]))
                    cur = new
                else:
                    cur = None
        if cur is None:
            gaps.append(int(i))
        else:
            n_out[pos] = ns[cur]
            b_out[pos] = cur
        prev_i = i
    return HysteresisTrace(direction, curve.values[order], n_out, b_out, jumps, gaps)
