"""Shared fixtures-by-function for the test modules."""

import math
from pathlib import Path

import numpy as np

from fermimirror.config import load_config
from fermimirror.effmodel import EffectiveModel
from fermimirror.stability import classify
from fermimirror.steady import fold_values, steady_states

ROOT = Path(__file__).resolve().parents[1]
P1_CONFIG = ROOT / "configs" / "p1.json"
KAPPA = 2.0 * math.pi * 1e6


def p1_model():
    return load_config(P1_CONFIG).model


def random_model(rng, kappa=KAPPA):
    """Effective model with parameters drawn over a few decades (rad/s)."""
    return EffectiveModel.synthetic(
        omega_m=kappa * 10 ** rng.uniform(-1, 0.7),
        g=kappa * 10 ** rng.uniform(-2, -0.3) * rng.choice([-1, 1]),
        kappa=kappa,
        delta=kappa * rng.uniform(-6, 6),
        eta=kappa * rng.uniform(0, 6),
    )


def random_stable_branches(rng, count, kappa=KAPPA):
    """``count`` (model, branch) pairs whose branch is stable."""
    out = []
    while len(out) < count:
        m = random_model(rng, kappa)
        for b in steady_states(m):
            if classify(m, b).kind == "stable":
                out.append((m, b))
                break
    return out


def random_bistable(rng, count, min_rate=0.01, kappa=KAPPA):
    """Models at a drive inside the bistable window.

    Only models whose stable branches all decay at least at ``min_rate *
    kappa`` are kept, so a convergence run stays a few thousand 1/kappa.
    """
    out = []
    while len(out) < count:
        wm = kappa * rng.uniform(0.3, 2.0)
        g = kappa * rng.uniform(0.05, 0.3)
        chi = 4 * g * g / wm
        d = rng.uniform(2.0, 6.0)
        m = EffectiveModel.synthetic(wm, g, kappa, d * kappa)
        lo, hi = fold_values(m, "eta", m.delta)
        eta = lo + rng.uniform(0.1, 0.9) * (hi - lo)
        m = m.with_drive(eta=eta)
        bs = steady_states(m)
        if len(bs) != 3 or chi <= 0:
            continue
        vs = [classify(m, b) for b in bs]
        outer = [vs[0], vs[2]]
        if vs[1].kind != "unstable":
            continue
        if any(v.kind != "stable" or -v.margin < min_rate * kappa for v in outer):
            continue
        out.append((m, bs, vs))
    return out
