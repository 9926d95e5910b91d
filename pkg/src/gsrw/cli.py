"""Command-line harness: exact, Monte Carlo and predictor routes as tables.

Every output starts with ``#`` metadata lines (command, parameters, version)
followed by a CSV header and rows, or is a JSON document with a ``meta`` key.
Thread count is not echoed, so seeded outputs are byte-identical for any
``--threads``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .asymptotics import (
    classify_regime,
    fit_power_law,
    limit_diagnostics,
    predict_msd,
    predict_position,
)
from .errors import DomainError, ResourceCapError
from .gsd import (
    GsdParams,
    gsd_moments,
    gsd_pmf_array,
    gsd_pmf_via_gf,
    gsd_sample_many,
    gsd_survival_array,
    gsd_tail_asymptote,
    tail_corrected_moment,
)
from .renewal import (
    aged_state_probs_exact,
    geometric_pmf_series,
    hazard_from_pmf,
    state_probs_exact,
)
from .series import SeriesU
from .srw import (
    WalkConfig,
    expected_position_exact,
    mean_step_exact,
    msd_exact,
    propagator_cf,
    propagator_dp,
    simulate_walk,
)
from .streams import map_blocks

EXIT_OK, EXIT_USAGE, EXIT_CAP, EXIT_SELFTEST = 0, 1, 2, 3
EXACT_VECTOR_CAP = 16384
FIG1_LAMBDAS = (0.3, 1.3, 4.3, 9.3)   # mu = 0.3, m = 1, 2, 5, 10
FIG2_LAMBDAS = (1.2, 1.5, 1.8)
HORIZON_DEFAULTS = {"fig1": 1000, "fig2": 10000, "predict": 10000, "renewal-aged": 64}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _num(x):
    if isinstance(x, (bool, str)) or x is None:
        return "" if x is None else str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _meta(args):
    skip = {"threads", "out", "format", "func", "command"}
    params = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return {"command": args.command, "version": __version__, "params": params}


def _emit(args, header, rows, json_payload=None):
    meta = _meta(args)
    buf = io.StringIO()
    if args.format == "json":
        doc = {"meta": meta}
        if json_payload is not None:
            doc.update(json_payload)
        else:
            doc["columns"] = list(header)
            doc["rows"] = [[_jsonable(v) for v in r] for r in rows]
        json.dump(doc, buf, indent=1, sort_keys=True)
        buf.write("\n")
    else:
        buf.write(f"# artifact {__version__} command={args.command}\n")
        buf.write("# " + " ".join(f"{k}={v}" for k, v in meta["params"].items()) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_num(v) for v in r])
    text = buf.getvalue()
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()] if v.ndim else _jsonable(v.item())
    if isinstance(v, list):
        return [_jsonable(x) for x in v]
    return v


def _sigma0(text):
    if text in ("+1", "1"):
        return 1
    if text == "-1":
        return -1
    if text == "random":
        return "random"
    raise argparse.ArgumentTypeError("sigma0 must be +1, -1 or random")


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _lambda_list(text):
    return [_positive_float(s) for s in text.split(",") if s.strip()]


# ---------------------------------------------------------------------------
# commands


def cmd_gsd_pmf(args):
    p = GsdParams(args.lam)
    tmax = args.tmax
    pmf = gsd_pmf_array(p, tmax)
    surv = gsd_survival_array(p, tmax)
    rows = []
    for t in range(1, tmax + 1):
        haz = pmf[t] / surv[t - 1] if surv[t - 1] > 0 else 1.0
        rows.append((t, pmf[t], surv[t], haz))
    _emit(args, ("t", "pmf", "survival", "hazard"), rows)


def cmd_gsd_sample(args):
    p = GsdParams(args.lam)
    draws = map_blocks(lambda n, rng: gsd_sample_many(p, n, rng), args.seed, args.walkers,
                       threads=args.threads)
    values = np.concatenate(draws)
    uniq, counts = np.unique(values, return_counts=True)
    _emit(args, ("t", "count"), list(zip(uniq, counts)))


def cmd_gsd_moments(args):
    rows = []
    for lam in args.lambda_list or [args.lam]:
        p = GsdParams(lam)
        mo = gsd_moments(p)
        tail = p.tail_constant if not p.is_integer else 0.0
        rows.append((lam, p.m, p.mu, mo.mean, mo.second_moment, mo.variance, mo.b2, tail))
    _emit(args, ("lambda", "m", "mu", "mean", "second_moment", "variance", "b2", "tail_constant"),
          rows)


def cmd_renewal_states(args):
    T = args.horizon
    psi = gsd_pmf_via_gf(args.lam, T)
    n_max = T if args.n_max is None else args.n_max
    tab = state_probs_exact(psi, n_max, T)
    header = ["t"] + [f"P{n}" for n in range(n_max + 1)] + ["remainder"]
    rows = [[t] + list(tab.probs[:, t]) + [tab.remainder[t]] for t in range(T + 1)]
    _emit(args, header, rows)


def cmd_renewal_aged(args):
    T, tau = args.horizon, args.tau_max
    m_max = T if args.n_max is None else args.n_max
    psi = gsd_pmf_via_gf(args.lam, tau + T)
    tab = aged_state_probs_exact(psi, m_max, tau, T)
    if args.format == "json":
        _emit(args, None, None, {"axes": ["m", "tau", "t"], "probs": _jsonable(tab.probs),
                                 "remainder": _jsonable(tab.remainder)})
        return
    rows = [(m, a, t, tab.probs[m, a, t])
            for m in range(m_max + 1) for a in range(tau + 1) for t in range(T + 1)]
    _emit(args, ("m", "tau", "t", "prob"), rows)


def _walk_config(args):
    return WalkConfig(args.horizon, args.sigma0, args.walkers, args.seed)


def cmd_srw_sim(args):
    cfg = _walk_config(args)
    hist = args.format == "json"
    st = simulate_walk(args.lam, cfg, histogram=hist, threads=args.threads)
    cols = ("t", "count", "mean", "meansq", "se_mean", "se_meansq", "sum_x", "sum_x2")
    rows = [(t, st.count, st.mean[t], st.meansq[t], st.se_mean[t], st.se_meansq[t],
             st.sum_x[t], st.sum_x2[t]) for t in range(cfg.horizon + 1)]
    if hist:
        _emit(args, None, None, {"columns": list(cols), "rows": _jsonable([list(r) for r in rows]),
                                 "histogram_axes": ["X+T", "t"],
                                 "histogram": _jsonable(st.histogram)})
        return
    _emit(args, cols, rows)


def cmd_srw_exact(args):
    T = args.horizon
    if T > EXACT_VECTOR_CAP:
        raise ResourceCapError(f"horizon {T} exceeds the exact-vector cap {EXACT_VECTOR_CAP}")
    s0 = args.sigma0
    pos = expected_position_exact(args.lam, T, s0)
    msd = msd_exact(args.lam, T)
    step = mean_step_exact(args.lam, T, s0)
    _emit(args, ("t", "mean_position", "msd", "mean_step"),
          [(t, pos[t], msd[t], step[t]) for t in range(T + 1)])


def cmd_srw_propagator(args):
    cfg = WalkConfig(args.horizon, args.sigma0)
    route = propagator_cf if args.method == "cf" else propagator_dp
    tab = route(args.lam, cfg)
    T = cfg.horizon
    if args.format == "json":
        _emit(args, None, None, {"axes": ["X", "t"], "X_min": -T, "probs": _jsonable(tab.probs)})
        return
    rows = [(x, t, tab.probs[x + T, t]) for t in range(T + 1) for x in range(-t, t + 1)]
    _emit(args, ("X", "t", "prob"), rows)


def cmd_predict(args):
    rows = []
    t = args.horizon
    for lam in args.lambda_list or [args.lam]:
        rep = classify_regime(lam, _sign(args.sigma0))
        rows.append((lam, rep.regime, rep.msd_exponent, rep.msd_prefactor, rep.position_plateau,
                     rep.position_relaxation_exponent,
                     predict_position(lam, _sign(args.sigma0), t), float(predict_msd(lam, t))))
    _emit(args, ("lambda", "regime", "msd_exponent", "msd_prefactor", "position_plateau",
                 "relaxation_exponent", "position_at_horizon", "msd_at_horizon"), rows)


def _sign(s0):
    if s0 == "random":
        raise DomainError("predictors need a fixed sigma0")
    return s0


def cmd_diagnose_limits(args):
    rep = limit_diagnostics(args.n, args.eps)
    cols = ("n", "eps", "variance_plus_ratio", "variance_minus", "moment_minus",
            "moment_minus_ratio", "moment_plus_ratio")
    _emit(args, cols, [tuple(getattr(rep, c) for c in cols)])


def cmd_fig1(args):
    lams = args.lambda_list or list(FIG1_LAMBDAS)
    tmax = args.horizon
    pmfs = [gsd_pmf_array(lam, tmax) for lam in lams]
    ends = [lams[0], lams[-1]] if len(lams) > 1 else [lams[0]]
    ends = [lam for lam in ends if not GsdParams(lam).is_integer]
    header = ["t"] + [f"psi_{lam:g}" for lam in lams] + [f"tail_{lam:g}" for lam in ends]
    t = np.arange(1, tmax + 1)
    tails = [gsd_tail_asymptote(lam, t) for lam in ends]
    rows = [[int(t[i])] + [pm[t[i]] for pm in pmfs] + [tl[i] for tl in tails]
            for i in range(tmax)]
    _emit(args, header, rows)


def cmd_fig2(args):
    lams = args.lambda_list or list(FIG2_LAMBDAS)
    T = args.horizon
    if T > EXACT_VECTOR_CAP:
        raise ResourceCapError(f"horizon {T} exceeds the exact-vector cap {EXACT_VECTOR_CAP}")
    s0 = _sign(args.sigma0)
    curves = [expected_position_exact(lam, T, s0) for lam in lams]
    plateaus = [classify_regime(lam, s0).position_plateau for lam in lams]
    header = (["t"] + [f"X_{lam:g}" for lam in lams] + [f"plateau_{lam:g}" for lam in lams])
    rows = [[t] + [c[t] for c in curves] + plateaus for t in range(T + 1)]
    _emit(args, header, rows)


# ---------------------------------------------------------------------------
# selftest


def _selftest_checks():
    """(name, passed, detail) for a fast pass over the invariant suite."""
    out = []

    def check(name, ok, detail):
        out.append((name, bool(ok), detail))

    # distribution
    err = max(np.abs(gsd_pmf_array(lam, 200)[1:] - gsd_pmf_via_gf(lam, 200).coeffs[1:]).max()
              for lam in (0.3, 1.5, 2.7, 3.4))
    check("gsd_route_equivalence", err <= 1e-12, f"max_diff={err:.3e}")
    mo = gsd_moments(1.5)
    check("gsd_mean_1.5", mo.mean == 2.0, f"mean={mo.mean!r}")
    v = tail_corrected_moment(2.5, 2, cutoff=10**6) - tail_corrected_moment(2.5, 1, cutoff=10**6) ** 2
    check("gsd_variance_2.5", abs(v - 20 / 9) <= 1e-4, f"numeric={v:.10f}")

    # series
    rng = np.random.default_rng(1)
    a = SeriesU(np.concatenate(([1.0], rng.uniform(-0.1, 0.1, 63))))
    err = np.abs((a * a.recip()).coeffs - np.eye(1, 64)[0]).max()
    check("series_reciprocal", err <= 1e-12, f"max_diff={err:.3e}")

    # renewal
    psi = gsd_pmf_via_gf(1.5, 64)
    st = state_probs_exact(psi, 64, 64)
    check("renewal_normalisation", np.abs(st.remainder).max() <= 1e-12,
          f"max_remainder={np.abs(st.remainder).max():.3e}")
    psi = gsd_pmf_via_gf(1.5, 64)
    aged = aged_state_probs_exact(psi, 32, 32, 32)
    err = np.abs(aged.probs[:, 0, :] - state_probs_exact(psi, 32, 32).probs).max()
    check("aged_tau0_equals_states", err <= 1e-10, f"max_diff={err:.3e}")
    geo = aged_state_probs_exact(geometric_pmf_series(0.3, 64), 32, 32, 32)
    err = np.abs(geo.probs - geo.probs[:, :1, :]).max()
    check("aged_geometric_invariance", err <= 1e-10, f"max_diff={err:.3e}")
    haz = hazard_from_pmf(gsd_pmf_via_gf(1.5, 16))
    err = np.abs(haz[1:] - 1.5 / (2 + np.arange(16))).max()
    check("hazard_closed_form", err <= 1e-12, f"max_diff={err:.3e}")

    # walk, exact routes
    T = 64
    for lam in (0.5, 1.5, 2.5):
        dp = propagator_dp(lam, WalkConfig(T))
        cf = propagator_cf(lam, WalkConfig(T))
        err = np.abs(dp.probs - cf.probs).max()
        check(f"propagator_routes_{lam:g}", err <= 1e-8 and cf.imag_max <= 1e-10,
              f"max_diff={err:.3e} imag={cf.imag_max:.3e}")
        norm = np.abs(dp.probs.sum(axis=0) - 1).max()
        x = dp.positions[:, None]
        t = np.arange(T + 1)[None, :]
        bad = ((np.abs(x) > t) | ((x + t) % 2 == 1)) & (t >= 1)
        check(f"propagator_support_{lam:g}", norm <= 1e-10 and not dp.probs[bad].any(),
              f"norm_err={norm:.3e}")
        e1 = np.abs(dp.moment(1) - expected_position_exact(lam, T)).max()
        e2 = np.abs(dp.moment(2) - msd_exact(lam, T)).max()
        check(f"moments_vs_propagator_{lam:g}", e1 <= 1e-8 and e2 <= 1e-8,
              f"mean_diff={e1:.3e} msd_diff={e2:.3e}")
    plus = propagator_dp(1.5, WalkConfig(T, 1)).probs
    minus = propagator_dp(1.5, WalkConfig(T, -1)).probs
    check("direction_flip_symmetry", np.array_equal(minus, plus[::-1]), "exact mirror")

    # walk, Monte Carlo
    lam, T, n = 1.5, 64, 40000
    ms = simulate_walk(lam, WalkConfig(T, 1, n, 12345))
    ex = expected_position_exact(lam, T)
    ex2 = msd_exact(lam, T)
    z1 = np.abs(ms.mean[2:] - ex[2:]) / ms.se_mean[2:]
    z2 = np.abs(ms.meansq[2:] - ex2[2:]) / ms.se_meansq[2:]
    frac = max(np.mean(z1 > 3), np.mean(z2 > 3))
    check("mc_vs_exact", frac <= 0.01, f"fraction_beyond_3se={frac:.4f}")

    # large-time behaviour
    e = expected_position_exact(0.5, 10000)
    expo = fit_power_law(e, 1000, 10000)[0]
    check("position_growth_exponent_0.5", abs(expo - 0.5) <= 0.03, f"exponent={expo:.4f}")
    for lam in FIG2_LAMBDAS:
        x = expected_position_exact(lam, 10000)[-1]
        pred = predict_position(lam, 1, 10000)
        check(f"position_predictor_{lam:g}", abs(x - pred) <= 0.02,
              f"exact={x:.5f} predicted={pred:.5f}")
    for lam, target in ((0.5, 2.0), (1.5, 1.5), (2.5, 1.0)):
        expo = fit_power_law(msd_exact(lam, 4000), 1000, 4000)[0]
        check(f"msd_exponent_{lam:g}", abs(expo - target) <= 0.05, f"exponent={expo:.4f}")
    rep = limit_diagnostics(3, 1e-3, cutoff=10**6)
    check("limit_variance_plus", abs(rep.variance_plus_ratio - 1) <= 0.01,
          f"ratio={rep.variance_plus_ratio:.5f}")
    check("limit_variance_minus", abs(rep.variance_minus - 2) <= 0.04,
          f"value={rep.variance_minus:.5f}")
    check("limit_moment_minus", abs(rep.moment_minus_ratio - 1) <= 0.05,
          f"ratio={rep.moment_minus_ratio:.5f}")
    return out


def cmd_selftest(args):
    checks = _selftest_checks()
    lines = [f"{'PASS' if ok else 'FAIL'} {name} {detail}" for name, ok, detail in checks]
    failed = sum(not ok for _, ok, _ in checks)
    lines.append(f"{len(checks) - failed}/{len(checks)} checks passed")
    text = "\n".join(lines) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return EXIT_SELFTEST if failed else EXIT_OK


# ---------------------------------------------------------------------------
# parser


COMMANDS = {
    "gsd-pmf": (cmd_gsd_pmf, "waiting-time pmf, survival and hazard"),
    "gsd-sample": (cmd_gsd_sample, "histogram of seeded waiting-time draws"),
    "gsd-moments": (cmd_gsd_moments, "closed-form moments for one or more lambdas"),
    "renewal-states": (cmd_renewal_states, "exact state probabilities"),
    "renewal-aged": (cmd_renewal_aged, "exact aged increment probabilities"),
    "srw-sim": (cmd_srw_sim, "Monte Carlo walk ensemble statistics"),
    "srw-exact": (cmd_srw_exact, "exact mean position, MSD and mean step"),
    "srw-propagator": (cmd_srw_propagator, "exact space-time propagator"),
    "predict": (cmd_predict, "large-time regime and predictors"),
    "diagnose-limits": (cmd_diagnose_limits, "moment behaviour near integer lambda"),
    "fig1": (cmd_fig1, "waiting-time pmfs with tail asymptotes"),
    "fig2": (cmd_fig2, "exact mean position curves with plateaus"),
    "selftest": (cmd_selftest, "run the invariant suite"),
}


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--lambda", dest="lam", type=_positive_float, default=1.5)
    common.add_argument("--lambda-list", type=_lambda_list, default=None)
    common.add_argument("--horizon", type=_positive_int, default=None)
    common.add_argument("--walkers", type=_positive_int, default=10000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--sigma0", type=_sigma0, default=1)
    common.add_argument("--order", type=_positive_int, default=4096)
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--threads", type=_positive_int, default=1)

    parser = _Parser(prog="gsrw", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (fn, help_) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
        if name == "gsd-pmf":
            sp.add_argument("--tmax", type=_positive_int, default=100)
        if name in ("renewal-states", "renewal-aged"):
            sp.add_argument("--n-max", type=_positive_int, default=None)
        if name == "renewal-aged":
            sp.add_argument("--tau-max", type=int, default=64)
        if name == "srw-propagator":
            sp.add_argument("--method", choices=("dp", "cf"), default="dp")
        if name == "diagnose-limits":
            sp.add_argument("--n", type=int, default=2)
            sp.add_argument("--eps", type=float, default=1e-3)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if args.horizon is None:
            args.horizon = HORIZON_DEFAULTS.get(args.command, 256)
        if getattr(args, "tau_max", 0) < 0:
            raise UsageError("--tau-max must be >= 0")
        rc = args.func(args)
        return EXIT_OK if rc is None else rc
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except DomainError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
