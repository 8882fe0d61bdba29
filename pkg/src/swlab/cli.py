"""``swlab`` command-line front end.

Exit codes: 0 success, 1 failed checks or numerical failure, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import io
from .config import (BOUNDARIES, RunConfig, beta_offset, load_config, parse_a_rule, resolve_a,
                     resolve_beta, validate)
from .errors import ConfigurationError, DomainError, SwlabError
from .excursion_kernels import closed_form_fn, ladder_constant, transfer_kernel
from .limit_stats import ks_against, oscillation_stat, zero_set_summary
from .operator_spectrum import build_resolvent, free_energy, leading_eigen
from .partition import partition_sandwich, renewal_tables, strip_partition
from .pinning import constant_pinning, smooth_bump, zero_pinning
from .rw_core import Grid, RngStream, critical_beta, make_gaussian_model
from .sampler import (ContactBatch, sample_contacts_markov_renewal, sample_contacts_renewal,
                      sample_paths)

GAMMA_DELTAS = (0.1, 0.05, 0.025)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _common(p, *keys):
    opts = {
        "a": dict(help="strip width: a number or a rule such as auto:N^-0.75"),
        "grid": dict(type=int, help="strip grid size M (default 32)"),
        "nmax": dict(type=int, help="largest excursion length tabulated"),
        "N": dict(type=int, help="polymer length"),
        "pinning": dict(choices=("constant", "smooth", "zero"), help="pinning function"),
        "beta": dict(help="pinning level: number, critical, critical+x or critical+x/sqrtN"),
        "boundary": dict(choices=sorted(BOUNDARIES), help="free (f) or constrained (c)"),
        "samples": dict(type=int, help="number of samples"),
        "seed": dict(type=int, help="root seed"),
        "eps": dict(type=float, help="smooth-bump transition width (default a^2)"),
        "ladder_samples": dict(type=int, help="Monte Carlo samples for the ladder constant"),
        "out": dict(help="output file or directory"),
        "input": dict(help="input directory"),
        "suite": dict(help="named group of checks"),
        "measure": dict(choices=("strip", "renewal"), help="strip model or standard wetting"),
    }
    for k in keys:
        flag = "--" + k.replace("_", "-")
        kw = dict(opts[k])
        if k == "input":
            p.add_argument("--in", dest="input", **kw)
        else:
            p.add_argument(flag, dest=k, default=None, **kw)
    p.add_argument("--config", help="flat key = value file; command-line flags override it")


def build_parser():
    ap = _Parser(prog="swlab", description="Strip wetting-model numerical lab.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    _common(sub.add_parser("kernel", help="tabulate f_n^a on the strip grid"), "a", "grid", "nmax", "out")
    _common(sub.add_parser("betac", help="strip critical point beta_c(a)"), "a", "grid", "nmax", "out")
    _common(sub.add_parser("partition", help="strip partition functions and sandwiches"),
            "pinning", "a", "beta", "N", "grid", "eps", "ladder_samples", "seed", "out")
    _common(sub.add_parser("sample-contacts", help="exact contact-set samples"),
            "measure", "pinning", "a", "beta", "N", "grid", "nmax", "boundary", "samples", "seed", "eps", "out")
    _common(sub.add_parser("sample-paths", help="contact sets plus full paths"),
            "pinning", "a", "beta", "N", "grid", "nmax", "boundary", "samples", "seed", "eps", "out")
    _common(sub.add_parser("stats", help="limit-law statistics of a sample directory"), "input", "suite", "out")
    _common(sub.add_parser("verify", help="run the acceptance suite"), "suite", "seed", "grid", "a", "beta", "out")
    return ap


def _config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        cfg = load_config(args.config, cfg)
    skip = {"command", "config"}
    cfg = cfg.merged(**{k: v for k, v in vars(args).items() if k not in skip})
    validate(cfg)
    return cfg


def _threads():
    v = os.environ.get("SWLAB_THREADS")
    if v is None:
        return 1
    try:
        n = int(v)
    except ValueError:
        raise ConfigurationError(f"SWLAB_THREADS must be a positive integer, got {v!r}") from None
    if n < 1:
        raise ConfigurationError("SWLAB_THREADS must be >= 1")
    return n


def _need(cfg, *keys):
    miss = [k for k in keys if getattr(cfg, k) is None]
    if miss:
        raise ConfigurationError("missing required setting(s): " + ", ".join(miss))


def _alphas(cfg):
    return BOUNDARIES[cfg.boundary]


# commands

def cmd_kernel(cfg):
    _need(cfg, "a")
    nmax = cfg.nmax or 256
    a = resolve_a(cfg.a, nmax)
    T = transfer_kernel(make_gaussian_model(), a, Grid(a, cfg.grid), nmax)
    _, keep = np.unique(T.points, return_index=True)
    keep = np.sort(keep)
    pts = T.points[keep]
    n = np.arange(1, nmax + 1)
    fn = closed_form_fn(n)
    sub = T.full[1:][:, keep][:, :, keep]
    P = len(pts)
    out = cfg.out or "kernels.csv"
    io.write_columns(out, {
        "n": np.repeat(n, P * P), "x": np.tile(np.repeat(pts, P), nmax), "y": np.tile(pts, nmax * P),
        "f_n_a": sub.ravel(), "f_n_closed_form": np.repeat(fn, P * P),
        "ratio": (sub / fn[:, None, None]).ravel()})
    io.write_manifest(out, "kernel", cfg, {"a_resolved": a})
    return 0


def _a_list(spec, N):
    return [resolve_a(s.strip(), N) for s in str(spec).split(",") if s.strip()]


def cmd_betac(cfg):
    _need(cfg, "a")
    nmax = cfg.nmax or 4096
    bc = critical_beta()
    rows = []
    for a in _a_list(cfg.a, nmax):
        if a <= 0:
            raise ConfigurationError("beta_c(a) needs a > 0")
        T = transfer_kernel(make_gaussian_model(), a, Grid(a, cfg.grid), nmax)
        bca = -np.log(leading_eigen(build_resolvent(T, 0.0)).delta)
        rows.append((a, bca, np.log(a) + bca - bc, a * np.exp(bca) / np.exp(bc)))
    out = cfg.out or "betac.csv"
    io.write_csv(out, ["a", "beta_c_a", "log_a_plus_gap", "ratio_a_exp"], rows)
    io.write_manifest(out, "betac", cfg, {"beta_c": bc})
    return 0


def _strip_setup(cfg, need_tilt=True):
    _need(cfg, "a", "N")
    N = cfg.N
    a = resolve_a(cfg.a, N)
    if a <= 0:
        raise ConfigurationError("the strip model needs a > 0")
    nmax = min(cfg.nmax or N, N)
    T = transfer_kernel(make_gaussian_model(), a, Grid(a, cfg.grid), nmax)
    sp0 = leading_eigen(build_resolvent(T, 0.0))
    bca = -np.log(sp0.delta)
    info = {"a_resolved": a, "beta_c": critical_beta(), "beta_c_a": bca}
    sp = None
    F = 0.0
    if cfg.pinning == "constant":
        beta = resolve_beta(cfg.beta, bca, N)
        pin = constant_pinning(a, beta)
        if need_tilt:
            F = free_energy(T, beta)
            sp = leading_eigen(build_resolvent(T, F))
        info.update(beta_resolved=beta, free_energy=F)
    elif cfg.pinning == "smooth":
        pin = smooth_bump(a, cfg.eps)
    else:
        pin = zero_pinning(a)
    S = strip_partition(pin, T, N, tilt=F)
    if not np.all(np.isfinite(S.log_Zf)) or not np.all(np.isfinite(S.log_Zc[1:])):
        raise SwlabError("partition functions left floating-point range; use constant pinning "
                         "(tilted by the free energy) or a smaller N")
    return a, T, sp, pin, S, info


def cmd_partition(cfg):
    _need(cfg, "a", "N")
    a, T, _, pin, S, info = _strip_setup(cfg, need_tilt=False)
    N = cfg.N
    lad = ladder_constant(make_gaussian_model(), a, 0.0, RngStream(cfg.seed, 1).generator(), cfg.ladder_samples)
    B = partition_sandwich(pin, T, N, lad)
    n = np.arange(1, N + 1)
    out = cfg.out or "partition.csv"
    io.write_columns(out, {
        "N": n, "Zc": np.exp(S.log_Zc[n]), "Zf": np.exp(S.log_Zf[n]),
        "lower_sandwich": B.lower_c[n], "upper_sandwich": B.upper_c[n],
        "lower_sandwich_f": B.lower_f[n], "upper_sandwich_f": B.upper_f[n],
        "log_Zc": S.log_Zc[n], "log_Zf": S.log_Zf[n]})
    info.update(C_prime=B.C_prime, ladder_constant=lad.value, ladder_stderr=lad.uncertainty)
    io.write_manifest(out, "partition", cfg, info)
    return 0


def _contacts(cfg, measure="strip"):
    _need(cfg, "N", "samples")
    N = cfg.N
    rng = RngStream(cfg.seed, 0)
    alpha = _alphas(cfg)
    if measure == "renewal":
        bc = critical_beta()
        beta = resolve_beta(cfg.beta, bc, N)
        R = renewal_tables(beta, N)
        B = sample_contacts_renewal(beta, N, alpha, R, rng, size=cfg.samples)
        return B, {"beta_c": bc, "beta_resolved": beta}
    a, T, sp, pin, S, info = _strip_setup(cfg)
    B = sample_contacts_markov_renewal(pin, S, T, sp, N, alpha, rng, size=cfg.samples)
    return B, info


def _write_contacts(path, B: ContactBatch):
    sizes = B.sizes
    ids = np.repeat(np.arange(len(B)), sizes)
    idx = np.empty(int(sizes.sum()), dtype=np.int64)
    pos = np.empty(len(idx))
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    mask = np.ones(len(idx), bool)
    mask[starts] = False
    idx[starts] = 0
    pos[starts] = 0.0
    idx[mask] = B.idx
    pos[mask] = B.pos
    io.write_columns(path, {"N": np.full(len(idx), B.N), "sample_id": ids, "index": idx, "position": pos})


def read_contacts(path, alpha="f", a=0.0) -> ContactBatch:
    c = io.read_columns(path)
    ids = c["sample_id"].astype(np.int64)
    idx = c["index"].astype(np.int64)
    N = int(c["N"][0]) if len(ids) else 0
    later = idx > 0
    counts = np.bincount(ids[later], minlength=int(ids.max()) + 1 if len(ids) else 0)
    return ContactBatch(N, alpha, a, np.concatenate(([0], np.cumsum(counts))), idx[later],
                        c["position"][later])


def cmd_sample_contacts(cfg):
    B, info = _contacts(cfg, cfg.measure)
    out = cfg.out or "contacts.csv"
    _write_contacts(out, B)
    info["threads"] = _threads()
    io.write_manifest(out, "sample-contacts", cfg, info)
    return 0


def _functionals(p, a):
    N = p.N
    row = [p.values[-1] / np.sqrt(N), p.values[N // 2] / np.sqrt(N)]
    for d in GAMMA_DELTAS:
        g, _ = oscillation_stat([p], d, a)
        row.append(g[0])
    return row


def cmd_sample_paths(cfg):
    B, info = _contacts(cfg, "strip")
    out = cfg.out or "paths"
    os.makedirs(out, exist_ok=True)
    a = B.a
    rows = sample_paths(B, make_gaussian_model(), RngStream(cfg.seed, 1), lambda p: _functionals(p, a))
    rows = np.array(rows)
    _write_contacts(os.path.join(out, "contacts.csv"), B)
    cols = {"sample_id": np.arange(len(B)), "last_zero": B.last / B.N, "n_contacts": B.sizes,
            "endpoint": rows[:, 0], "midpoint": rows[:, 1]}
    for k, d in enumerate(GAMMA_DELTAS):
        cols[f"gamma_{d:g}"] = rows[:, 2 + k]
    io.write_columns(os.path.join(out, "functionals.csv"), cols)
    info["threads"] = _threads()
    io.write_manifest(out + os.sep, "sample-paths", cfg, info)
    return 0


def read_manifest(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if "=" in line:
                k, v = line.split("=", 1)
                out[k.strip()] = v.strip()
    return out


def stats_rows(indir, suite="all"):
    man = read_manifest(os.path.join(indir, "manifest.txt"))
    alpha = BOUNDARIES.get(man.get("boundary", "f"), "f")
    a = float(man.get("a_resolved", 0.0))
    B = read_contacts(os.path.join(indir, "contacts.csv"), alpha, a)
    N, M = B.N, len(B)
    rows = []
    if suite in ("scaling", "all"):
        zs = zero_set_summary(B)
        if alpha == "f":
            r = ks_against(zs.last_zero, "arcsine", threshold=0.03, name="last_zero_arcsine", N=N)
            rows.append(r.row())
        r = ks_against(zs.scaled_count, "half_normal", 1.0, threshold=0.05, name="scaled_count_half_normal", N=N)
        rows.append(r.row())
        r = ks_against(zs.scaled_count, "half_normal", np.sqrt(2.0), threshold=0.05,
                       name="scaled_count_half_normal_sqrt2", N=N)
        rows.append(r.row())
    fpath = os.path.join(indir, "functionals.csv")
    if suite in ("paths", "all") and os.path.exists(fpath):
        f = io.read_columns(fpath)
        if alpha == "f":
            r = ks_against(np.abs(f["endpoint"]), "half_normal", 1.0, threshold=0.05, name="marginal_free_t1", N=N)
        else:
            r = ks_against(np.abs(f["midpoint"]), "folded_normal", 0.5, threshold=0.05,
                           name="marginal_bridge_t0.5", N=N)
        rows.append(r.row())
        probs = [float(np.mean(f[f"gamma_{d:g}"] > 0.5)) for d in GAMMA_DELTAS]
        d = float(np.max(np.diff(probs)))
        rows.append({"test": "gamma_tightness_trend", "N": N, "M": M, "statistic": d, "threshold": 0.0,
                     "pass": d < 0})
    if suite not in ("scaling", "paths", "all"):
        raise ConfigurationError(f"unknown stats suite '{suite}' (scaling, paths, all)")
    return rows


REPORT_COLUMNS = ["test", "N", "M", "statistic", "threshold", "pass"]


def _write_report(out, rows):
    io.write_csv(out, REPORT_COLUMNS, ([r[k] for k in REPORT_COLUMNS] for r in rows))


def cmd_stats(cfg):
    _need(cfg, "input")
    rows = stats_rows(cfg.input, cfg.suite)
    out = cfg.out or "report.csv"
    _write_report(out, rows)
    io.write_manifest(out, "stats", cfg)
    for r in rows:
        print(f"{r['test']:36s} {r['statistic']:.6g} {'pass' if r['pass'] else 'FAIL'}")
    return 0


def cmd_verify(cfg):
    from .verification import SUITES, SuiteConfig, run_suite
    if cfg.suite not in SUITES:
        raise ConfigurationError(f"unknown suite '{cfg.suite}' (have {', '.join(sorted(SUITES))})")
    sc = SuiteConfig(seed=cfg.seed, grid=cfg.grid, nmax_spectral=cfg.nmax_spectral,
                     scaling_N=cfg.scaling_N, scaling_M=cfg.scaling_M, path_N=cfg.path_N,
                     path_M=cfg.path_M, mgf_N=cfg.mgf_N, mgf_M=cfg.mgf_M,
                     beta_offset=beta_offset(cfg.beta, cfg.scaling_N),
                     ladder_samples=cfg.ladder_samples, chi_samples=cfg.chi_samples)
    if cfg.a is not None:
        kind, v = parse_a_rule(cfg.a)
        if kind != "rule" or v[0] != 1.0:
            raise ConfigurationError("verify takes a as a rule auto:N^-gamma")
        sc.a_exponent = -v[1]
    names = SUITES[cfg.suite]

    def progress(r):
        print(f"{r.test:26s} {'pass' if r.passed else 'FAIL'}  stat={r.statistic:.6g}  "
              f"thr={r.threshold:.6g}  {r.seconds:6.1f}s  {'' if r.passed else r.detail}", flush=True)

    results = run_suite(names, sc, progress=progress)
    out = cfg.out or "report.csv"
    _write_report(out, [r.row() for r in results])
    chk = os.path.splitext(out)[0] + ".checks.csv"
    io.write_csv(chk, ["test", "check", "value", "bound", "pass"],
                 ([r.test, c["check"], c["value"], c["bound"], c["pass"]] for r in results for c in r.checks))
    io.write_manifest(out, "verify", cfg, {"threads": _threads()})
    failed = [r.test for r in results if not r.passed]
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


COMMANDS = {"kernel": cmd_kernel, "betac": cmd_betac, "partition": cmd_partition,
            "sample-contacts": cmd_sample_contacts, "sample-paths": cmd_sample_paths,
            "stats": cmd_stats, "verify": cmd_verify}


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        _threads()
        cfg = _config(args)
        return COMMANDS[args.command](cfg)
    except UsageError as e:
        print(f"swlab: error: {e}", file=sys.stderr)
        return 2
    except (ConfigurationError, DomainError) as e:
        print(f"swlab: configuration error: {e}", file=sys.stderr)
        return 2
    except SwlabError as e:
        print(f"swlab: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
