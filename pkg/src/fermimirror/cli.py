"""Command-line entry point: ``fermimirror <command> --config run.json``.

Exit codes: 0 ok, 2 config error, 3 numerical failure (including a failed
ED check), 4 validity-regime failure under ``--strict``.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import kernels
from .config import RunConfig, load_config
from .dynamics import (
    RNG_NAME, SimConfig, branch_state, ensemble_periodogram, simulate_linear,
    simulate_meanfield,
)
from .edlab import (
    EDConfig, bosonized_shift, build_system, commutator_check, coupling_element_check,
    lowest_excitations, ph_energy_spread, pt_shift,
)
from .effmodel import validate_regime
from .errors import ConfigError, FermiMirrorError, RegimeError
from .records import RunRecord, write_csv, write_json
from .spectra import printed_spectrum, transfer_spectrum
from .stability import classify
from .steady import bistability_threshold, hysteresis_trace, steady_states, sweep

COMMANDS = ("model", "steady", "sweep", "threshold", "spectrum", "simulate", "edcheck")
ED_TOL = 1e-12


def _say(args, text=""):
    if not args.quiet:
        print(text)


def _regime(args, cfg: RunConfig, model):
    rep = validate_regime(model, **cfg.regime)
    for c in rep.checks:
        if c.status != "ok":
            print(f"regime {c.status}: {c.name} = {c.value:.4g} (threshold {c.threshold:g})",
                  file=sys.stderr)
    if args.strict and rep.status == "fail":
        raise RegimeError(f"validity regime violated: {[c.name for c in rep.checks if c.status == 'fail']}")
    return rep


def _eta(args, cfg, model, block):
    if args.eta_over_kappa is not None:
        return args.eta_over_kappa * model.kappa
    if block.get("eta_over_kappa") is not None:
        return block["eta_over_kappa"] * model.kappa
    return model.eta


def _pick_branch(model, eta, which):
    branches = steady_states(model, eta=eta)
    stable = [b for b in branches if classify(model, b).kind != "unstable"]
    if not stable:
        raise FermiMirrorError("no stable steady state at this drive")
    return stable[0] if which == "lowest" else stable[-1]


def cmd_model(args, cfg, model, out, rec):
    rep = _regime(args, cfg, model)
    d = model.to_dict()
    rows = [(k, v) for k, v in d.items()]
    rows += [(f"regime_{k}", v) for k, v in
             (("K_over_kF", rep.K_over_kF), ("recoil", rep.recoil),
              ("recoil_over_omega_m", rep.recoil_over_omega_m), ("capacity", rep.capacity),
              ("fermi_frequency", rep.fermi_frequency))]
    rec.add(write_csv(out / "model.csv", "model", rows))
    rec.add(write_json(out / "model.json", {"model": d, "regime": rep.to_dict()}))
    _say(args, f"omega_m = {model.omega_m:.6e} rad/s   g = {model.g:.6e} rad/s")
    _say(args, f"chi = {model.chi:.6e} rad/s   Delta = {model.delta:.6e} rad/s")
    _say(args, f"omega_F = {model.omega_F:.6e} rad/s   recoil = {rep.recoil:.6e} rad/s")
    _say(args, f"K/k_F = {rep.K_over_kF:.4g}   regime: {rep.status}")


def cmd_steady(args, cfg, model, out, rec):
    _regime(args, cfg, model)
    eta = _eta(args, cfg, model, {})
    rows = []
    for i, b in enumerate(steady_states(model, eta=eta)):
        v = classify(model, b)
        rows.append((i, b.n, b.c_s, b.x_m, b.delta_tilde, b.residual, v.kind,
                     float(v.eigenvalues.real.max()), int(b.fold)))
        _say(args, f"[{i}] n = {b.n:.10g}  Dt/kappa = {b.delta_tilde / model.kappa:.6g}  {v.kind}")
    rec.add(write_csv(out / "steady.csv", "steady", rows))


def cmd_sweep(args, cfg, model, out, rec):
    _regime(args, cfg, model)
    sc = dict(cfg.sweep)
    var = args.var or sc["variable"]
    lo = sc["from_over_kappa"] if args.from_ is None else args.from_
    hi = sc["to_over_kappa"] if args.to is None else args.to
    steps = sc["steps"] if args.steps is None else args.steps
    fixed = None
    if var in ("detuning", "delta"):
        fixed = _eta(args, cfg, model, sc)
    curve = sweep(model, var, lo * model.kappa, hi * model.kappa, steps, fixed=fixed)
    rows = [(val, j, b.n, b.x_m, b.delta_tilde, v.kind, int(b.fold))
            for val, j, b, v in curve.rows()]
    rec.add(write_csv(out / "sweep.csv", "sweep", rows))
    up, down = hysteresis_trace(curve, "up"), hysteresis_trace(curve, "down")
    summary = {
        "variable": curve.variable,
        "fixed": curve.fixed,
        "folds": curve.folds,
        "three_branch_points": int((curve.counts() == 3).sum()),
        "jumps_up": [vars(j) for j in up.jumps],
        "jumps_down": [vars(j) for j in down.jumps],
    }
    rec.add(write_json(out / "sweep.json", summary))
    _say(args, f"{len(rows)} rows, {summary['three_branch_points']} three-branch points")
    if len(curve.folds):
        _say(args, "folds/kappa: " + ", ".join(f"{f / model.kappa:.6g}" for f in curve.folds))


def cmd_threshold(args, cfg, model, out, rec):
    _regime(args, cfg, model)
    th = bistability_threshold(model)
    k = model.kappa
    res = {"eta_c": th.eta_c, "eta_c_over_kappa": th.eta_c / k, "delta_c": th.delta_c,
           "delta_c_over_kappa": th.delta_c / k, "n_c": th.n_c, "eta_scan": th.eta_scan,
           "rel_mismatch": th.rel_mismatch}
    rec.add(write_json(out / "threshold.json", res))
    _say(args, f"eta_c/kappa = {th.eta_c / k:.6f}")
    _say(args, f"cusp: Delta_c/kappa = {th.delta_c / k:.6f}, n_c = {th.n_c:.6g}")


def cmd_spectrum(args, cfg, model, out, rec):
    _regime(args, cfg, model)
    sc = cfg.spectrum
    eta = _eta(args, cfg, model, sc)
    lo = sc["omega_from_over_kappa"] if args.omega_from is None else args.omega_from
    hi = sc["omega_to_over_kappa"] if args.omega_to is None else args.omega_to
    pts = sc["points"] if args.steps is None else args.steps
    if not hi > lo:
        raise ConfigError("omega range must be increasing")
    s = _pick_branch(model, eta, sc["branch"])
    w = np.linspace(lo, hi, pts) * model.kappa
    tr = transfer_spectrum(model, s, w, sc["convention"])
    pr = printed_spectrum(model, s, w)
    rows = zip(w, tr.s_xm, tr.s_xc, tr.s_pc, pr.s_xc, pr.s_pc)
    rec.add(write_csv(out / "spectrum.csv", "spectrum", rows))
    i = int(np.argmax(tr.s_xm))
    _say(args, f"branch n = {s.n:.6g}; S_XM peak at omega/kappa = {w[i] / model.kappa:.4f}")


def cmd_simulate(args, cfg, model, out, rec):
    _regime(args, cfg, model)
    sc = dict(cfg.simulate)
    eta = _eta(args, cfg, model, sc)
    seed = cfg.seed if args.seed is None else args.seed
    rec.seeds = [seed]
    s = _pick_branch(model, eta, sc["branch"])
    dt = sc["dt_over_kappa_inv"] / model.kappa
    period = 2.0 * math.pi / model.omega_m
    steps = int(math.ceil(sc["periods"] * period / dt))
    if sc["mode"] == "meanfield":
        y0 = branch_state(model, s) * (1.0 + sc["perturbation"])
        simc = SimConfig(dt, steps, seed=seed, burn_in=sc["burn_in"],
                         record_every=sc["record_every"], initial=tuple(y0))
        tr = simulate_meanfield(model, eta, model.delta, None, simc)
        n = tr.states[:, 2] ** 2 + tr.states[:, 3] ** 2
        rows = (tuple(r) + (nn,) for r, nn in zip(np.column_stack([tr.t, tr.states]), n))
        rec.add(write_csv(out / "trajectory.csv", "trajectory_meanfield", rows))
        fin = tr.final
        _say(args, f"final n = {fin[2] ** 2 + fin[3] ** 2:.10g} (branch n = {s.n:.10g})")
        return
    simc = SimConfig(dt, steps, ensemble=sc["ensemble"], seed=seed, burn_in=sc["burn_in"],
                     noise=sc["noise"], record_every=sc["record_every"])
    emp = ensemble_periodogram(model, s, simc, "X_M", segments=sc["segments"])
    ref = transfer_spectrum(model, s, emp.omega, sc["noise"])
    rec.add(write_csv(out / "periodogram.csv", "periodogram",
                      zip(emp.omega, emp.density, ref.s_xm)))
    one = simulate_linear(model, s, SimConfig(dt, steps, ensemble=1, seed=seed,
                                              burn_in=sc["burn_in"], noise=sc["noise"],
                                              record_every=sc["record_every"]))
    rows = (tuple(r) for r in np.column_stack([one.t, one.states[0]]))
    rec.add(write_csv(out / "trajectory.csv", "trajectory_linear", rows))
    pos = emp.omega > 0
    i = np.flatnonzero(pos)[np.argmax(emp.density[pos])]
    j = np.flatnonzero(pos)[np.argmax(ref.s_xm[pos])]
    _say(args, f"{simc.ensemble} members x {steps} steps, backend {kernels.BACKEND}")
    _say(args, f"peak: empirical {emp.omega[i] / model.kappa:.4f} kappa "
               f"({emp.density[i]:.4g}), transfer {emp.omega[j] / model.kappa:.4f} kappa "
               f"({ref.s_xm[j]:.4g})")


def ed_report(ec: EDConfig) -> dict:
    """Run every ED identity check and the perturbative spectrum comparison."""
    sysm = build_system(ec)
    herm = float(abs(sysm.H - sysm.H.conj().T).max()) if sysm.H.nnz else 0.0
    comm = commutator_check(sysm)
    coup = coupling_element_check(sysm)
    spread = ph_energy_spread(sysm)
    checks = []

    def add(name, value, expected, tol, ok=None):
        err = abs(value - expected)
        checks.append({"check": name, "value": value, "expected": expected,
                       "error": err, "tol": tol, "pass": bool(err <= tol if ok is None else ok)})

    add("hermiticity", herm, 0.0, 0.0)
    add("[b_p, b_p^dag]", comm["b_p,b_p^dag"], 1.0, ED_TOL)
    add("[b_-p, b_-p^dag]", comm["b_-p,b_-p^dag"], 1.0, ED_TOL)
    add("[b_p, b_-p^dag]", comm["b_p,b_-p^dag"], 0.0, ED_TOL)
    add("[b_p, b_p]", comm["b_p,b_p"], 0.0, ED_TOL)
    if coup["expected"] > 0:
        add("coupling norm / sqrt2 g", coup["ratio"], 1.0, ED_TOL)
    for side in ("right", "left"):
        dev, b = spread[side]["deviation"], spread[side]["bound"]
        inside = bool(np.all(np.abs(dev) <= b * (1 + ED_TOL)))
        add(f"spread edge ({side}, top)", float(dev[-1]), b, ED_TOL, inside and abs(dev[-1] - b) <= ED_TOL)
        add(f"spread edge ({side}, bottom)", float(dev[0]), -b, ED_TOL, inside and abs(dev[0] + b) <= ED_TOL)
    if ec.eta == 0.0 and ec.n_photon_max >= 1 and ec.U0 != 0.0:
        e0 = lowest_excitations(sysm, 0, 1)[0]
        e1 = lowest_excitations(sysm, 1, 1)[0]
        exact = e1 - e0 - ec.delta
        pt = pt_shift(sysm)
        bos = bosonized_shift(sysm)
        ratio = (sysm.g / sysm.omega_m) ** 2
        add("sector-1 shift vs 2nd order", exact, pt, max(10 * ratio, 1e-9) * abs(pt))
        add("2nd order vs bosonized", pt, bos, spread["bound"] * abs(bos))
    return {
        "config": asdict(ec),
        "dimension": sysm.dimension,
        "derived": {"k_F": sysm.k_F, "v_F": sysm.v_F, "beta": sysm.beta,
                    "omega_m": sysm.omega_m, "g": sysm.g, "K": sysm.K},
        "checks": checks,
        "pass": all(c["pass"] for c in checks),
    }


def cmd_edcheck(args, cfg, model, out, rec):
    e = dict(cfg.edcheck)
    ec = EDConfig(
        e["j_min"], e["j_max"], e["n_fermions"], e["n_photon_max"], e["kick"], U0=e["U0"],
        delta=e["delta"], mass=e["mass_kg"], length=e["length_m"], dim_cap=e["dim_cap"],
    )
    rep = ed_report(ec)
    rec.add(write_json(out / "edcheck.json", rep))
    _say(args, f"dimension {rep['dimension']}")
    _say(args, f"{'check':32s} {'value':>14s} {'expected':>14s}  result")
    for c in rep["checks"]:
        _say(args, f"{c['check']:32s} {c['value']:14.6g} {c['expected']:14.6g}  "
                   f"{'PASS' if c['pass'] else 'FAIL'}")
    if not rep["pass"]:
        raise FermiMirrorError("ED checks failed")


HANDLERS = {
    "model": cmd_model, "steady": cmd_steady, "sweep": cmd_sweep,
    "threshold": cmd_threshold, "spectrum": cmd_spectrum, "simulate": cmd_simulate,
    "edcheck": cmd_edcheck,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fermimirror", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, type=Path, help="JSON run configuration")
        s.add_argument("--out", type=Path, help="output directory (default from config)")
        s.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
        s.add_argument("--strict", action="store_true", help="exit 4 on a regime failure")
        s.add_argument("--quiet", action="store_true")
        if name in ("steady", "sweep", "spectrum", "simulate"):
            s.add_argument("--eta-over-kappa", type=float, help="drive eta in units of kappa")
        if name == "sweep":
            s.add_argument("--var", choices=("eta", "detuning"))
            s.add_argument("--from", dest="from_", type=float, help="start, units of kappa")
            s.add_argument("--to", type=float, help="stop, units of kappa")
            s.add_argument("--steps", type=int)
        if name == "spectrum":
            s.add_argument("--omega-from", type=float, help="units of kappa")
            s.add_argument("--omega-to", type=float, help="units of kappa")
            s.add_argument("--steps", type=int, help="number of frequency points")
    return p


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error [config]: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    rec = None
    out = None
    try:
        cfg = load_config(args.config)
        model = cfg.model
        out = Path(args.out or cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        rec = RunRecord(
            command=args.command, config=cfg.raw, model_hash=model.digest(),
            seeds=[cfg.seed if args.seed is None else args.seed],
            backend=kernels.BACKEND, rng=RNG_NAME, argv=list(sys.argv[1:] if argv is None else argv),
        )
        HANDLERS[args.command](args, cfg, model, out, rec)
    except FermiMirrorError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        if rec is not None:
            rec.status, rec.exit_code = exc.code, exc.exit_code
            rec.write(out)
        return exc.exit_code
    rec.write(out)
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
