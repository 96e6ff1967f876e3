"""``normlab <command> --config FILE [--seed U64] [--threads K] [--out DIR]``.

Exit codes: 0 all checks pass, 1 a check failed, 2 config error, 3 resource bound.
"""

from __future__ import annotations

import argparse
import math
import sys
from fractions import Fraction

from . import scalar as sc
from .config import COMMANDS, ExperimentConfig, backend_from_env, load_config, parse_config
from .constructions import (infinite_truncation, khintchine_empirical_constants, l1_basis, l1_perturbation_bound,
                            rademacher_subspace, rademacher_system)
from .discretize import (SamplingSet, disc_constants, l1_adversarial_witness, l1_valid_sampling,
                         rademacher_nikolskii_bound, rademacher_sampling_bound, random_sampling, uniform_sampling)
from .errors import ConfigError, InvalidArgument, InvalidSamplingSet, NormlabError, ResourceBoundError
from .frames import (FiniteFrame, complement_property, frame_bounds, mercedes_frame, mercedes_partition_frame,
                     pr_stability_bounds, random_parseval_partition_frame, sample_partition_frame,
                     verify_pr_discretization_theorem)
from .nikolskii import nikolskii_constant
from .report import ReportBundle
from . import reproduce as rp

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3


def _require(cfg: ExperimentConfig, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise ConfigError(f"{cfg.command} needs {', '.join(missing)}")


def _subspace(cfg: ExperimentConfig):
    """The family named in the config, as ``(X, info)``."""
    fam = cfg.get("family")
    if fam == "l1":
        _require(cfg, "n", "inv_eps")
        X, meta = l1_basis(cfg.get_one("n"), cfg.get_one("inv_eps"))
        info = {"family": "l1", "n": meta.n, "inv_eps": meta.inv_eps, "N": meta.N, "eps": meta.eps,
                "cells": meta.grid_size, "meta": meta}
    elif fam == "rademacher":
        _require(cfg, "N", "p")
        X, amplitude, width = rademacher_subspace(cfg.get_one("N"), cfg.get_one("p"))
        info = {"family": "rademacher", "N": X.dim, "p": cfg.get_one("p"), "amplitude": amplitude,
                "width": width, "cells": X.space.n_cells}
    elif fam == "rademacher_system":
        _require(cfg, "N")
        X = rademacher_system(cfg.get_one("N"))
        info = {"family": "rademacher_system", "N": X.dim, "cells": X.space.n_cells}
    else:
        raise ConfigError(f"{cfg.command} needs family l1, rademacher or rademacher_system")
    if cfg.backend == "float64":
        X = X.to_float()
    return X, info


def _sampling(cfg: ExperimentConfig, info: dict) -> SamplingSet:
    if cfg.get("sampling"):
        try:
            return SamplingSet.load(cfg.get("sampling"))
        except OSError as exc:
            raise ConfigError(f"cannot read sampling file: {exc}") from None
    strategy = cfg.get("strategy", "uniform")
    M = cfg.get("M")
    if strategy == "valid":
        if info["family"] != "l1":
            raise ConfigError("strategy=valid applies to family=l1")
        return l1_valid_sampling(info["meta"], M or 0, cfg.seed)
    if M is None:
        raise ConfigError("sampling needs M (or a sampling file)")
    if strategy == "uniform":
        return uniform_sampling(M)
    if strategy == "random":
        return random_sampling(M, seed=cfg.seed)
    raise ConfigError(f"strategy {strategy!r} does not apply to {cfg.command}")


def _public(info: dict) -> dict:
    return {k: v for k, v in info.items() if k != "meta"}


def cmd_construct(cfg: ExperimentConfig) -> ReportBundle:
    b = ReportBundle("construct", cfg)
    if cfg.get("family") == "infinite":
        T = infinite_truncation(cfg.get_one("p", 1), cfg.get("K", 5), cfg.get("A_p_param"))
        t = b.table("blocks", ["N", "offset", "length", "support_length", "amplitude"])
        for blk in T.blocks:
            t.add(blk.N, blk.offset, blk.length, float(blk.support_length), float(blk.amplitude))
        b.results["truncation"] = {"p": T.p, "K": T.K, "A_p_param": T.A_p_param,
                                   "blocks": [blk.to_json() for blk in T.blocks]}
        b.check("disjoint supports", "block supports are pairwise disjoint", T.supports_disjoint())
        b.series("block_offsets", [blk.N for blk in T.blocks], [float(blk.offset) for blk in T.blocks],
                 "N", "offset")
        return b
    X, info = _subspace(cfg)
    b.results["family"] = _public(info)
    t = b.table("family", ["family", "N", "cells", "backend"])
    t.add(info["family"], info["N"], info["cells"], cfg.backend)
    if info["family"] == "l1" and X.exact:
        pert = l1_perturbation_bound(info["meta"], X)
        b.results["perturbation"] = pert
        b.check("perturbation", "max_j ||x_j - N 1_block(j)||_1 equals eps", pert == info["eps"], value=pert)
    return b


def cmd_discretize(cfg: ExperimentConfig) -> ReportBundle:
    b = ReportBundle("discretize", cfg)
    X, info = _subspace(cfg)
    S = _sampling(cfg, info)
    p = cfg.get_one("p", 2)
    rep = disc_constants(X, S, p, budget=cfg.get("budget", 200), seed=cfg.seed, family=info["family"])
    b.results["discretization"] = rep
    b.results["family"] = _public(info)
    b.table("discretization", ["family", "N", "M", "p", "A", "A_kind", "B", "B_kind", "valid"]) \
        .add(info["family"], X.dim, S.M, p, rep.A_value, rep.A_kind, rep.B_value, rep.B_kind, rep.valid)
    return b


def cmd_nikolskii(cfg: ExperimentConfig) -> ReportBundle:
    b = ReportBundle("nikolskii", cfg)
    _require(cfg, "p")
    p = cfg.get_one("p")
    budget = cfg.get("budget", 200)
    if cfg.get("family") == "rademacher":
        N = cfg.get_one("N")
        kh = khintchine_empirical_constants(N, p, budget=budget, seed=cfg.seed)
        rep = rademacher_nikolskii_bound(N, p, kh.A_hat, budget=budget, seed=cfg.seed)
        b.results["nikolskii"] = rep
        b.table("nikolskii", ["family", "N", "p", "value", "kind", "bound"]) \
            .add("rademacher", N, p, rep.linf_over_lp, rep.kind, rep.bound)
        b.check("sup-norm bound", "||x||_inf <= A_hat^-1 N^(1/p) ||x||_p", rep.holds)
        return b
    X, info = _subspace(cfg)
    res = nikolskii_constant(X, p, budget=budget, seed=cfg.seed)
    bound = None
    if info["family"] == "l1" and p == 1:
        eps = info["eps"]
        bound = math.inf if eps == 1 else sc.simplify(info["N"] / (1 - eps))
        holds = bound == math.inf or float(res.value) <= float(bound) * (1 + 1e-12)
        b.check("nikolskii bound", "sup ||x||_inf/||x||_1 <= N/(1-eps)", holds, value=res.value, bound=bound)
    b.results["nikolskii"] = res
    b.table("nikolskii", ["family", "N", "p", "value", "kind", "bound"]) \
        .add(info["family"], X.dim, p, res.value, res.kind, bound)
    return b


def cmd_witness(cfg: ExperimentConfig) -> ReportBundle:
    b = ReportBundle("witness", cfg)
    trials = cfg.get("trials", 10)
    fam = cfg.get("family")
    if fam == "l1":
        X, info = _subspace(cfg)
        meta = info["meta"]
        t = b.table("witness", ["trial", "M", "j", "ratio", "bound", "holds"])
        for i in range(trials):
            S = l1_valid_sampling(meta, cfg.get("M", meta.N), cfg.seed + i)
            w = l1_adversarial_witness(meta, X, S)
            t.add(i, S.M, w.j, w.ratio, w.bound, w.holds)
            b.check(f"trial {i}", "ratio >= nN/((1+eps)M)", w.holds)
            b.results[f"trial {i}"] = w
        return b
    if fam == "rademacher":
        _require(cfg, "N", "p")
        N, p = cfg.get_one("N"), Fraction(cfg.get_one("p"))
        t = b.table("witness", ["trial", "M", "in_support", "p_sum", "bound", "holds"])
        for i in range(trials):
            S = rp._support_sampling(N, p, cfg.seed + i, inside=cfg.get("M", 2 * N + 2), outside=N // 2 + 1)
            try:
                rep = rademacher_sampling_bound(N, p, S)
            except InvalidSamplingSet as exc:
                b.results[f"trial {i}"] = {"valid": False, "witness": exc.witness}
                continue
            t.add(i, S.M, rep.in_support, rep.p_sum.value(), rep.bound.value(), rep.holds)
            b.check(f"trial {i}", "sum_j |y_1(t_j)|^p >= N^(2-p/2)", rep.holds)
            b.results[f"trial {i}"] = rep
        return b
    raise ConfigError("witness needs family l1 or rademacher")


def _finite_frame(cfg: ExperimentConfig) -> FiniteFrame:
    fam = cfg.get("family", "mercedes")
    if fam == "mercedes":
        return mercedes_frame()
    if fam == "random_frame":
        import numpy as np

        N, M = cfg.get_one("N", 3), cfg.get("M", 7)
        return FiniteFrame(np.random.default_rng(cfg.seed).standard_normal((M, N)))
    raise ConfigError("frames needs family mercedes or random_frame")


def cmd_frames(cfg: ExperimentConfig) -> ReportBundle:
    b = ReportBundle("frames", cfg)
    F = _finite_frame(cfg)
    fb = frame_bounds(F)
    cp, fail = complement_property(F)
    st = pr_stability_bounds(F, budget=cfg.get("budget", 200), seed=cfg.seed)
    b.results.update({"frame": F, "bounds": fb, "complement_property": cp, "failing_subset": fail, "stability": st})
    b.table("frames", ["N", "M", "A", "B", "does_pr", "C_lower", "C_upper"]) \
        .add(F.dim, F.M, fb.A, fb.B, cp, st.C_lower, st.C_upper)
    if st.does_pr:
        b.check("stability bracket", "C_lower <= C_upper", st.C_lower <= st.C_upper * (1 + 1e-9))
    return b


def cmd_phase(cfg: ExperimentConfig) -> ReportBundle:
    probes = cfg.get("probes", 1000)
    if cfg.get("target") == "t47":
        return rp.reproduce_t47(probes=probes, seed=cfg.seed, cells=cfg.get("cells", 16), N=cfg.get_one("N", 3),
                                M=cfg.get("M", 10), strategy=cfg.get("strategy", "greedy"), config=cfg)
    if cfg.get("target") is not None:
        raise ConfigError("phase accepts only target=t47")
    b = ReportBundle("phase", cfg)
    if cfg.get("family", "mercedes") == "mercedes":
        F = mercedes_partition_frame()
        S = SamplingSet(F.space.midpoints()) if cfg.get("M") is None else None
    else:
        F = random_parseval_partition_frame(cfg.get_one("N", 3), cfg.get("cells", 16), seed=cfg.seed)
        S = None
    if S is None:
        strategy = cfg.get("strategy", "greedy")
        if strategy == "valid":
            raise ConfigError("strategy=valid applies to family=l1")
        sample = sample_partition_frame(F, strategy, cfg.get("M", 10), seed=cfg.seed)
        S = sample.sampling
        b.results["sample"] = sample
    rp.check_theorem_instance(b, cfg.get("family", "mercedes"), F, S, probes, cfg.seed)
    b.results["theorem"] = verify_pr_discretization_theorem(F, S, probes=probes, seed=cfg.seed)
    return b


def cmd_reproduce(cfg: ExperimentConfig) -> ReportBundle:
    target = cfg.get("target")
    seed = cfg.seed
    if target == "t21":
        return rp.reproduce_t21(cfg.get_list("n", [1, 2]), cfg.get_list("inv_eps", [1, 2]),
                                probes=cfg.get("probes", 1000), trials=cfg.get("trials", 20), seed=seed, config=cfg)
    if target == "p32":
        return rp.reproduce_p32(cfg.get_list("N", [2, 4, 8]), [Fraction(p) for p in cfg.get_list("p", [1, "3/2"])],
                                probes=cfg.get("probes", 200), trials=cfg.get("trials", 10), seed=seed, config=cfg)
    if target == "p33":
        return rp.reproduce_p33(cfg.get_list("N", [2, 4, 8, 16]), cfg.get_one("p", 4),
                                budget=cfg.get("budget", 200), seed=seed, config=cfg)
    if target == "l46":
        return rp.reproduce_l46(probes=cfg.get("probes", 1000), seed=seed, config=cfg)
    if target == "t47":
        return rp.reproduce_t47(probes=cfg.get("probes", 1000), seed=seed, cells=cfg.get("cells", 16),
                                N=cfg.get_one("N", 3), M=cfg.get("M", 10), strategy=cfg.get("strategy", "greedy"),
                                config=cfg)
    if target == "s5":
        return rp.reproduce_s5(cfg.get("K", 5), cfg.get_one("p", 1), cfg.get("A_p_param"), config=cfg)
    raise ConfigError(f"unknown target {target!r}")


HANDLERS = {
    "construct": cmd_construct,
    "discretize": cmd_discretize,
    "nikolskii": cmd_nikolskii,
    "witness": cmd_witness,
    "frames": cmd_frames,
    "phase": cmd_phase,
    "reproduce": cmd_reproduce,
}


def run(cfg: ExperimentConfig) -> ReportBundle:
    """Execute the configured pipeline and return its bundle (not yet written)."""
    try:
        return HANDLERS[cfg.command](cfg)
    except InvalidArgument as exc:
        raise ConfigError(str(exc)) from exc


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="normlab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="key = value config file")
    ap.add_argument("--seed", type=int, help="overrides the config seed")
    ap.add_argument("--threads", type=int, default=None, help="accepted for compatibility; runs are single-threaded")
    ap.add_argument("--out", help="output directory (default: config 'out' or ./normlab-out)")
    ap.add_argument("--no-plots", action="store_true", help="skip PNG rendering")
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else parse_config(f"command = {args.command}\n")
        if cfg.command != args.command:
            raise ConfigError(f"config command {cfg.command!r} does not match {args.command!r}")
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg = cfg.with_overrides(seed=args.seed)
        cfg = backend_from_env(cfg)
        bundle = run(cfg)
        out = args.out or cfg.get("out") or "normlab-out"
        bundle.write(out, plots=not args.no_plots and cfg.get("plots", "true") == "true")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceBoundError as exc:
        print(f"resource bound: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except NormlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    sys.stdout.write(bundle.summary_text())
    return EXIT_PASS if bundle.passed else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
