"""``dlab <command> --config <path> [--out <dir>] [--threads N] [--seed S]``."""
from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext

import numpy as np

from . import config as cfgmod
from .counterexamples import VARIANTS, counterexample_sweep, threshold_table
from .errors import ConfigInvalid, DlabError
from .exponents import (
    ExtremizerOptions,
    SweepConfig,
    bilinear_sweep,
    extremizer_search,
    linear_strichartz_sweep,
    predicted_bilinear_exponents,
    predicted_linear_exponent,
)
from .fitting import loglog_fit
from .nls import wellposedness_probe
from .phase import PhaseFunction, check_transversality, fit_curvature_scale
from .reports import Report, emit_report, verdict, worst
from .spectral import FrequencyBand

DEFAULT_BANDS = {"analyze-phase": 0.05, "strichartz": 0.1, "bilinear": 0.15,
                 "counterexample": 0.1}
SWEEP_COLUMNS = ("config_id", "family", "variable", "N", "K", "p", "norm", "data_l2", "log_N",
                 "log_normalized", "est_rel_error", "time_nodes", "spatial_M")


def _interval(cfg):
    return tuple(cfg.get("interval", (0.0, 1.0)))


def _sweep_rows(cid, result, variable="N"):
    out = []
    for r in result.rows:
        d = dict(vars(r))
        d.update(config_id=cid, variable=variable, time_nodes=r.time_nodes)
        out.append(d)
    return out


def run_analyze_phase(cfg, cid, pool):
    phi = PhaseFunction.from_config(cfg["phase"])
    band = cfg.get("band", DEFAULT_BANDS["analyze-phase"])
    prof = fit_curvature_scale(phi, cfg["N_list"], cfg.get("samples_per_shell", 64),
                               seed=cfg.get("seed", 0))
    beta_pred = phi.curvature_exponent()
    psi = {"beta": prof.beta, "ratio_bound": prof.ratio_bound, "prediction": beta_pred,
           "verdict": verdict(prof.beta, beta_pred, band)}
    summary = {"config_id": cid, "command": "analyze-phase", "phase": phi.to_config(),
               "psi": psi, "sigma": prof.sigma, "uniform_constant": prof.uniform_constant,
               "condition": prof.status, "violations": list(prof.violations)}
    verdicts = [psi["verdict"]]
    tv = cfg.get("transversality")
    if tv is not None:
        rep = check_transversality(phi, tv["K_list"], tv["N_list"], tv.get("sign", "-"))
        a_pred = phi.a - 1.0 if phi.kind == "fractional" else (1.0 if phi.kind == "quadratic" else None)
        summary["transversality"] = {"alpha": rep.alpha, "prediction": a_pred, "sign": rep.sign,
                                     "verdict": verdict(rep.alpha, a_pred, band)}
        verdicts.append(summary["transversality"]["verdict"])
    summary["verdict"] = worst(verdicts)
    rows = [dict(vars(s), config_id=cid) for s in prof.per_shell]
    cols = ("config_id", "N", "min_abs_eig", "max_abs_eig", "geo_mean_abs_eig", "sigma",
            "sigma_uniform", "samples")
    pts = [(math.log(s.N), math.log(s.geo_mean_abs_eig)) for s in prof.per_shell
           if s.geo_mean_abs_eig > 0]
    return Report(summary, cols, rows, pts)


def run_strichartz(cfg, cid, pool):
    phi = PhaseFunction.from_config(cfg["phase"])
    band = cfg.get("band", DEFAULT_BANDS["strichartz"])
    p = cfg["p"]
    pred = predicted_linear_exponent(phi, p)
    per_family, rows, pts = {}, [], []
    for fam in cfg.get("families", ["flat_annulus"]):
        sc = SweepConfig(phi, p, _interval(cfg), cfg["N_list"], fam, seed=cfg.get("seed", 0),
                         density=cfg.get("density", 0.5), rel_tol=cfg.get("rel_tol", 1e-6),
                         extremizer_restarts=cfg.get("extremizer_restarts", 2))
        res = linear_strichartz_sweep(sc, pool)
        per_family[fam] = {"slope": res.slope, "stderr": res.fit.stderr,
                           "r_squared": res.fit.r_squared,
                           "verdict": verdict(res.slope, pred.total, band)}
        rows += _sweep_rows(cid, res)
        pts += [(r.log_N, r.log_normalized) for r in res.rows]
    measured = max(v["slope"] for v in per_family.values())
    summary = {"config_id": cid, "command": "strichartz", "phase": phi.to_config(), "p": p,
               "interval": list(_interval(cfg)), "slope": measured,
               "stderr": max(v["stderr"] for v in per_family.values()),
               "prediction": pred.total, "budget": pred.to_dict(), "band": band,
               "families": per_family, "within_upper_bound": measured <= pred.total + 0.15,
               "verdict": verdict(measured, pred.total, band)}
    return Report(summary, SWEEP_COLUMNS, rows, pts)


def run_bilinear(cfg, cid, pool):
    phi = PhaseFunction.from_config(cfg["phase"])
    band = cfg.get("band", DEFAULT_BANDS["bilinear"])
    sc = SweepConfig(phi, 2, _interval(cfg), cfg["N_list"], cfg.get("family", "flat_annulus"),
                     seed=cfg.get("seed", 0), K=cfg.get("K"), K_list=cfg.get("K_list"),
                     signs=tuple(cfg.get("signs", ("+", "+"))), rel_tol=cfg.get("rel_tol", 1e-6))
    fit_N, fit_K = bilinear_sweep(sc, pool)
    pred_N, pred_K = predicted_bilinear_exponents(phi)
    summary = {"config_id": cid, "command": "bilinear", "phase": phi.to_config(),
               "interval": list(_interval(cfg)), "band": band}
    rows, pts, verdicts = [], [], []
    for name, fit, pred in (("N", fit_N, pred_N), ("K", fit_K, pred_K)):
        if fit is None:
            continue
        v = verdict(fit.slope, pred, band)
        summary[f"fit_in_{name}"] = {"slope": fit.slope, "stderr": fit.fit.stderr,
                                     "prediction": pred, "verdict": v}
        verdicts.append(v)
        rows += _sweep_rows(cid, fit, name)
        pts += [(r.log_N, r.log_normalized) for r in fit.rows]
    summary["verdict"] = worst(verdicts)
    return Report(summary, SWEEP_COLUMNS, rows, pts)


def run_extremize(cfg, cid, pool):
    phi = PhaseFunction.from_config(cfg["phase"])
    opts = ExtremizerOptions(restarts=cfg.get("restarts", 5), max_iter=cfg.get("max_iter", 500),
                             tol=cfg.get("tol", 1e-6), seed=cfg.get("seed", 0))
    res = extremizer_search(phi, cfg["p"], FrequencyBand.dyadic(cfg["N"]), _interval(cfg), opts)
    if res.flagged:
        v = "FAIL"
    else:
        v = "PASS" if res.converged else "INCONCLUSIVE"
    summary = {"config_id": cid, "command": "extremize", "phase": phi.to_config(),
               "p": cfg["p"], "N": cfg["N"], "interval": list(_interval(cfg)),
               "quotient": res.quotient, "flat_quotient": res.flat_quotient,
               "iterations": res.iterations, "converged": res.converged,
               "restarts_used": res.restarts_used, "flagged": res.flagged, "verdict": v}
    st = res.data
    mask = st.support()
    xi = st.freqs()[mask]
    cols = ("config_id",) + tuple(f"xi_{i + 1}" for i in range(st.n)) + ("re", "im", "abs")
    rows = []
    for x, c in zip(xi, st.coefficients[mask]):
        row = {f"xi_{i + 1}": int(v) for i, v in enumerate(x)}
        row.update(config_id=cid, re=c.real, im=c.imag, abs=abs(c))
        rows.append(row)
    pts = [(float(i), float(F)) for i, F in enumerate(res.history)]
    return Report(summary, cols, rows, pts, {"extremizer_state.json": st.to_json() + "\n"})


def run_counterexample(cfg, cid, pool):
    band = cfg.get("band", DEFAULT_BANDS["counterexample"])
    variant, s = cfg["variant"], cfg["s"]
    rows, fit = counterexample_sweep(variant, s, cfg["N_list"], cfg.get("T", 1.0))
    pred = VARIANTS[variant] + s
    ratios = [r.ratio for r in rows]
    summary = {"config_id": cid, "command": "counterexample", "variant": variant, "s": s,
               "fitted_exponent": fit.slope, "stderr": fit.stderr, "prediction": pred,
               "band": band, "ratio_spread": max(ratios) / min(ratios),
               "threshold_s": threshold_table(variant),
               "verdict": verdict(fit.slope, pred, band)}
    cols = ("variant", "N", "s", "hs_norm", "cubic_hs_norm", "ratio", "fitted_exponent")
    out = [dict(vars(r), fitted_exponent=fit.slope) for r in rows]
    pts = [(math.log(r.N), math.log(r.cubic_hs_norm)) for r in rows]
    return Report(summary, cols, out, pts)


def probe_threshold(phi: PhaseFunction):
    """Regularity threshold the probe is judged against, if one is known."""
    if phi.kind == "fractional" and phi.n == 1 and phi.a < 2:
        return (2.0 - phi.a) / 4.0
    if phi.kind == "quadratic":
        k = phi.signature_defect()
        if k in (1, 2) and phi.n == 2 * k:
            return threshold_table(k)
    return None


def run_nls_probe(cfg, cid, pool):
    phi = PhaseFunction.from_config(cfg["phase"])
    s, sign = cfg["s"], cfg.get("sign", 1)
    N_list = cfg["N_list"]
    kw = dict(family=cfg.get("family", "wang"), sign=sign, dt=cfg.get("dt"),
              dealias=cfg.get("dealias", "alias_free_cubic"))

    def one(N):
        return wellposedness_probe(phi, s, [N], cfg["epsilon"], cfg["T"], **kw)[0]

    rows = list(pool.map(one, N_list)) if pool is not None else [one(N) for N in N_list]
    mods = [r.modulus for r in rows]
    thr = probe_threshold(phi)
    fit = loglog_fit([(math.log(r.N), math.log(r.modulus)) for r in rows])
    if any(r.overflow_flag for r in rows):
        v, expect = "INCONCLUSIVE", "no overflow"
    elif sign == 0:
        expect = "modulus equal to 1"
        v = "PASS" if max(abs(m - 1.0) for m in mods) <= 1e-10 else "FAIL"
    elif thr is None:
        v, expect = "INCONCLUSIVE", "no known threshold"
    elif s < thr:
        expect = "modulus increasing in N"
        v = "PASS" if all(b > a for a, b in zip(mods, mods[1:])) else "FAIL"
    elif s > thr:
        expect = "max/min modulus at most 4"
        v = "PASS" if max(mods) / min(mods) <= 4.0 else "FAIL"
    else:
        v, expect = "INCONCLUSIVE", "s at threshold"
    summary = {"config_id": cid, "command": "nls-probe", "phase": phi.to_config(), "s": s,
               "threshold_s": thr, "expectation": expect, "modulus_slope": fit.slope,
               "modulus_spread": max(mods) / min(mods), "verdict": v}
    cols = ("N", "s", "family", "epsilon", "modulus", "overflow_flag")
    return Report(summary, cols, [dict(vars(r)) for r in rows],
                  [(math.log(r.N), math.log(r.modulus)) for r in rows])


RUNNERS = {
    "analyze-phase": run_analyze_phase,
    "strichartz": run_strichartz,
    "bilinear": run_bilinear,
    "extremize": run_extremize,
    "counterexample": run_counterexample,
    "nls-probe": run_nls_probe,
}


def resolve_threads(threads=None):
    if threads is None:
        env = os.environ.get("DLAB_THREADS")
        if env:
            try:
                threads = int(env)
            except ValueError as exc:
                raise ConfigInvalid(f"DLAB_THREADS must be an integer, got {env!r}") from exc
    threads = threads or os.cpu_count() or 1
    if threads < 1:
        raise ConfigInvalid("thread count must be positive")
    return threads


def run_config(path, out=None, threads=None, seed=None, command=None):
    """Run one experiment; returns ``(exit_status, report)``."""
    cfg = cfgmod.load(path)
    if command is not None and command != cfg["command"]:
        raise ConfigInvalid(f"invalid value for key 'command': config says {cfg['command']!r},"
                            f" command line says {command!r}")
    if seed is not None:
        cfg["seed"] = int(seed)
    cid = cfgmod.config_id(cfg)
    threads = resolve_threads(threads)
    pool_cm = ThreadPoolExecutor(threads) if threads > 1 else nullcontext(None)
    with np.errstate(all="ignore"), pool_cm as pool:
        report = RUNNERS[cfg["command"]](cfg, cid, pool)
    emit_report(report, out if out is not None else os.path.join("dlab-out", cid),
                plotdata=cfg.get("plotdata", True))
    return (1 if report.verdict == "FAIL" else 0), report


def build_parser():
    ap = argparse.ArgumentParser(prog="dlab", description=__doc__)
    ap.add_argument("command", choices=cfgmod.COMMANDS)
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", default=None, help="report directory (default dlab-out/<config_id>)")
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        status, report = run_config(args.config, args.out, args.threads, args.seed, args.command)
    except DlabError as exc:
        print(f"dlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError) as exc:
        print(f"dlab: error: {exc}", file=sys.stderr)
        return 2
    print(f"{report.summary['command']} {report.summary['config_id']}: {report.verdict}")
    return status


if __name__ == "__main__":
    sys.exit(main())
