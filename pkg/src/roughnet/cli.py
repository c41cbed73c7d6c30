"""Command-line runner.

Usage::

    roughnet run experiment.cfg --out results/
    roughnet stage holonomy experiment.cfg
    roughnet replay experiment.cfg --seed 42 --out results/

Exit codes: 0 pass, 1 failed gate / audit violation / replay mismatch,
2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import report as rep
from .config import load_config
from .errors import ConfigError, HypothesisFailed, Mismatch, RoughNetError
from .lifts import horizontal_lift, loop_holonomy
from .nets import build_adjacency, build_max_separated, check_fullness
from .roughiso import check_lemma32, estimate_hlc, estimate_rif
from .theorem import (
    ConstantLedger,
    admissible_epsilons,
    holonomy_loop,
    lemma51_verify,
    rif_base_points,
    verify_main_theorem,
)

log = logging.getLogger("roughnet")

STAGES = ("nets", "lifts", "holonomy", "hlc", "rif", "theorem")
REPORT_NAME = "report.json"


def _out_dir(args, cfg):
    out = args.out or cfg.out
    os.makedirs(out, exist_ok=True)
    return out


def _header(cfg, stage):
    return {"example": cfg.example, "seed": cfg.seed, "stage": stage, "config": cfg.to_dict()}


# ---------------------------------------------------------------------------
# stages; each returns (report dict, exit code) and writes its own artifacts


def stage_theorem(cfg, out):
    S = cfg.submersion()
    try:
        r = verify_main_theorem(S, cfg.base_point(S), cfg.theorem)
        code = 0 if r.passed else 1
        failure = None
    except HypothesisFailed as exc:
        r, code, failure = exc.report, 1, {"gate": exc.which, "message": str(exc)}
    body = {**_header(cfg, "theorem"), **r.to_dict(), "failure": failure}
    _theorem_artifacts(r, out)
    return body, code


def _theorem_artifacts(r, out):
    if r.holonomy is not None:
        rep.write_csv(os.path.join(out, "holonomy_defects.csv"), ["index", "defect"],
                      enumerate(r.holonomy.defects))
        rep.write_text(os.path.join(out, "holonomy_hist.svg"),
                       rep.svg_histogram(r.holonomy.defects, title="holonomy defects", xlabel="d(phi x, x)"))
    if "hlc" in r.artifacts:
        rep.write_csv(os.path.join(out, "hlc_samples.csv"), ["base_norm", "lift_norm"], r.artifacts["hlc"].samples)
    if "rif" in r.artifacts:
        rep.write_csv(os.path.join(out, "rif_pairs.csv"), ["d_src", "d_dst"], r.artifacts["rif"].pairs)
    if r.tnet is not None:
        PB = r.tnet.PB
        rep.write_text(os.path.join(out, "net_scatter.svg"),
                       rep.svg_scatter(PB.points, "base net P_B", "b1", "b2", highlight=PB.points[r.tnet.b0_index]))
        rep.write_text(os.path.join(out, "P.csv"), r.tnet.P.to_csv())
    if r.audit_pairs is not None:
        rep.write_csv(os.path.join(out, "audit_pairs.csv"), ["delta_P", "delta_x", "count"],
                      rep.pair_histogram(r.audit_pairs))
        rep.write_text(os.path.join(out, "audit_band.svg"),
                       rep.svg_band(r.audit_pairs, r.ledger.a, r.ledger.c, "delta_x against delta_P"))


def _radii(cfg, S, b0, body):
    if cfg.eps0 is not None:
        return cfg.eps0, cfg.epsB
    t = cfg.theorem
    hlc = estimate_hlc(S, t.hlc_samples, cfg.seed)
    rif = estimate_rif(S, b0, rif_base_points(S, b0, t.rif_grid), t.rif_pairs_per_fiber, cfg.seed, t.step)
    A, C = max(rif.A, t.rif_min_A), max(rif.C, t.rif_min_C)
    eps0, epsB = admissible_epsilons(A, C, hlc.alpha, hlc.beta, t.margin)
    L = ConstantLedger(A=A, C=C, alpha=hlc.alpha, beta=hlc.beta, eps0=eps0, epsB=epsB)
    body["lemma"] = [x.__dict__ for x in lemma51_verify(L)]
    return eps0, epsB


def stage_nets(cfg, out):
    S = cfg.submersion()
    b0 = cfg.base_point(S)
    t = cfg.theorem
    body = _header(cfg, "nets")
    eps0, epsB = _radii(cfg, S, b0, body)
    P0 = build_adjacency(build_max_separated(S.sample_fiber(b0, t.fiber_samples, cfg.seed), eps0, S.total,
                                             space="F_b0"), S.total)
    PB = build_adjacency(build_max_separated(S.base.sample(t.base_samples, cfg.seed), epsB, S.base,
                                             seeds=b0[None], space="B"), S.base)
    probes = S.base.sample(t.probes, cfg.seed + 1)
    _, gap = check_fullness(PB, probes, epsB, S.base)
    body["nets"] = {
        "P0": {"size": len(P0), "epsilon": eps0, "min_separation": P0.min_separation(), "connected": P0.is_connected()},
        "P_B": {"size": len(PB), "epsilon": epsB, "min_separation": PB.min_separation(),
                "connected": PB.is_connected(), "probe_gap": gap},
    }
    P0.to_json(os.path.join(out, "P0.json"))
    PB.to_json(os.path.join(out, "P_B.json"))
    rep.write_text(os.path.join(out, "P_B.csv"), PB.to_csv())
    rep.write_text(os.path.join(out, "net_scatter.svg"), rep.svg_scatter(PB.points, "base net P_B", "b1", "b2", b0))
    ok = P0.min_separation() >= eps0 and PB.min_separation() >= epsB and P0.is_connected() and PB.is_connected()
    return body, 0 if ok else 1


def stage_lifts(cfg, out):
    S = cfg.submersion()
    b0 = cfg.base_point(S)
    loop = holonomy_loop(S, b0, cfg.theorem.holonomy_loop_size)
    x0 = S.sample_fiber(b0, 1, cfg.seed)[0]
    lift = horizontal_lift(S, loop, x0, cfg.theorem.step)
    lift.to_csv(os.path.join(out, "lift.csv"))
    body = {**_header(cfg, "lifts"), "start": x0, "end": lift.end, "length": lift.length,
            "base_length": loop.length(S.base), "projection_residual": lift.projection_residual,
            "step": lift.step_size}
    return body, 0


def stage_holonomy(cfg, out):
    S = cfg.submersion()
    t = cfg.theorem
    b0 = cfg.base_point(S)
    hol = loop_holonomy(S, holonomy_loop(S, b0, t.holonomy_loop_size), t.holonomy_samples, cfg.seed, t.step)
    tol = t.holonomy_tol_factor * t.rif_min_C * (1 + t.rif_min_A ** 2) * (1 + t.margin)
    ok = hol.max_defect <= tol
    rep.write_csv(os.path.join(out, "holonomy_defects.csv"), ["index", "defect"], enumerate(hol.defects))
    rep.write_text(os.path.join(out, "holonomy_hist.svg"),
                   rep.svg_histogram(hol.defects, title="holonomy defects", xlabel="d(phi x, x)"))
    body = {**_header(cfg, "holonomy"), "holonomy": hol.to_dict(), "tolerance": tol, "passed": ok}
    return body, 0 if ok else 1


def stage_hlc(cfg, out):
    S = cfg.submersion()
    t = cfg.theorem
    hlc = estimate_hlc(S, t.hlc_samples, cfg.seed)
    rep.write_csv(os.path.join(out, "hlc_samples.csv"), ["base_norm", "lift_norm"], hlc.samples)
    body = {**_header(cfg, "hlc"), "hlc": hlc.to_dict()}
    code = 0 if hlc.violations == 0 else 1
    if t.lemma32_pairs:
        audit = check_lemma32(S, hlc, t.lemma32_pairs, cfg.seed)
        body["lemma32"] = audit.__dict__
        code = max(code, int(audit.violations > 0))
    return body, code


def stage_rif(cfg, out):
    S = cfg.submersion()
    t = cfg.theorem
    b0 = cfg.base_point(S)
    rif = estimate_rif(S, b0, rif_base_points(S, b0, t.rif_grid), t.rif_pairs_per_fiber, cfg.seed, t.step)
    rep.write_csv(os.path.join(out, "rif_pairs.csv"), ["d_src", "d_dst"], rif.pairs)
    body = {**_header(cfg, "rif"), "rif": rif.to_dict(), "per_fiber": rif.per_fiber}
    return body, 0 if rif.violations == 0 else 1


STAGE_FUNCS = {
    "nets": stage_nets, "lifts": stage_lifts, "holonomy": stage_holonomy,
    "hlc": stage_hlc, "rif": stage_rif, "theorem": stage_theorem,
}


def report_name(stage):
    return REPORT_NAME if stage == "theorem" else f"report-{stage}.json"


def execute(cfg, stage, out):
    """Run one stage, write its report; returns ``(report text, exit code)``."""
    body, code = STAGE_FUNCS[stage](cfg, out)
    text = rep.write_json(os.path.join(out, report_name(stage)), body)
    return text, code


# ---------------------------------------------------------------------------
# commands


def cmd_run(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = cfg.theorem.seed = args.seed
    _, code = execute(cfg, "theorem", _out_dir(args, cfg))
    return code


def cmd_stage(args):
    if args.name not in STAGES:
        raise ConfigError(f"unknown stage {args.name!r}; choose from {', '.join(STAGES)}")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = cfg.theorem.seed = args.seed
    _, code = execute(cfg, args.name, _out_dir(args, cfg))
    return code


def cmd_replay(args):
    cfg = load_config(args.config)
    cfg.seed = cfg.theorem.seed = args.seed
    out = args.out or cfg.out
    prior = os.path.join(out, REPORT_NAME)
    if not os.path.exists(prior):
        raise ConfigError(f"no prior report at {prior}; run first")
    with open(prior) as fh:
        old = fh.read()
    scratch = os.path.join(out, "replay")
    os.makedirs(scratch, exist_ok=True)
    new, _ = execute(cfg, "theorem", scratch)
    rep.compare_reports(old, new)
    print(f"replay identical: {prior}")
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output directory (default: the config's 'out' key)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    p = argparse.ArgumentParser(prog="roughnet", description="Certify M ~ F_b0 x B with explicit constants.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="full pipeline")
    r.add_argument("config")
    r.add_argument("--seed", type=int, default=None, help="override the config seed")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("stage", parents=[common], help="one stage: " + ", ".join(STAGES))
    s.add_argument("name")
    s.add_argument("config")
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_stage)
    rp = sub.add_parser("replay", parents=[common], help="rerun and byte-compare against the prior report")
    rp.add_argument("config")
    rp.add_argument("--seed", type=int, required=True)
    rp.set_defaults(func=cmd_replay)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Mismatch as exc:
        print(f"replay mismatch at {exc.path}", file=sys.stderr)
        return 1
    except RoughNetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
