"""Reproduction suites, one per result, each returning a :class:`ReportBundle`.

Every check records the claim it stands for; a suite passes when all of
its checks pass. Suites are deterministic functions of their parameters
and seed.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import scalar as sc
from .constructions import (infinite_truncation, khintchine_empirical_constants, l1_basis,
                            l1_perturbation_bound, rademacher_scales, rademacher_subspace,
                            rademacher_system)
from .discretize import (SamplingSet, empirical_p_sum, l1_adversarial_witness, l1_valid_sampling,
                         p_gt_2_beta_check, rademacher_nikolskii_bound, rademacher_sampling_bound,
                         uniform_sampling)
from .errors import InvalidSamplingSet, InvalidSubspace
from .frames import (mercedes_partition_frame, pr_stability_bounds, random_parseval_partition_frame,
                     sample_partition_frame, subspace_frame_correspondence, verify_pr_discretization_theorem,
                     verify_stabpr_lemma)
from .nikolskii import nikolskii_constant
from .report import ReportBundle
from .scalar import ScaledRational
from .stepfn import StepFunction, Subspace, lp_norm, lp_norm_pth_power, make_uniform_partition

TOL = 1e-9


def _probe_vectors(N: int, count: int, seed: int, span: int = 5) -> list[list[int]]:
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        a = [int(v) for v in rng.integers(-span, span + 1, size=N)]
        if any(a):
            out.append(a)
    return out


def _pair_vectors(N: int):
    for j in range(N):
        for k in range(j + 1, N):
            for sj in (1, -1):
                for sk in (1, -1):
                    a = [0] * N
                    a[j], a[k] = sj, sk
                    yield a


# -- l1 family ---------------------------------------------------------------------

def check_t21_instance(bundle: ReportBundle, n: int, inv_eps: int, probes: int = 1000, trials: int = 20,
                       seed: int = 0) -> dict:
    """All claims for one ``(n, inv_eps)`` instance of the perturbed L1 basis."""
    X, meta = l1_basis(n, inv_eps)
    N, eps = meta.N, meta.eps
    tag = f"n={n},inv_eps={inv_eps}"

    pert = l1_perturbation_bound(meta, X)
    bundle.check(f"{tag}: perturbation", "max_j ||x_j - N 1_block(j)||_1 equals eps", pert == eps,
                 value=pert, eps=eps)

    lo, hi = 1 - eps, 1 + eps
    fails = 0
    vecs = _probe_vectors(N, probes, seed)
    for a in vecs + list(_pair_vectors(N)):
        norm = Fraction(X.combination_pth_power(a, 1))
        a1 = sum(abs(v) for v in a)
        if not lo * a1 <= norm <= hi * a1:
            fails += 1
    bundle.check(f"{tag}: l1 frame", "(1-eps)||a||_1 <= ||sum a_j x_j||_1 <= (1+eps)||a||_1 exactly",
                 fails == 0, failures=fails, probes=len(vecs), pairs=2 * N * (N - 1))

    nik = nikolskii_constant(X, 1)
    bound = math.inf if eps == 1 else sc.simplify(N / (1 - eps))
    ok = bound == math.inf or Fraction(nik.value) <= bound
    bundle.check(f"{tag}: nikolskii", "sup ||x||_inf/||x||_1 <= N/(1-eps) (exact LP)", ok and nik.kind == "exact",
                 value=nik.value, bound=bound, kind=nik.kind)

    rng = np.random.default_rng(seed + 1)
    worst = None
    bad = 0
    for i in range(trials):
        S = l1_valid_sampling(meta, int(rng.integers(0, N + 1)), seed + 100 + i)
        w = l1_adversarial_witness(meta, X, S)
        bad += not w.holds
        margin = Fraction(w.ratio) / Fraction(w.bound)
        worst = margin if worst is None else min(worst, margin)
    bundle.check(f"{tag}: adversarial", "valid sampling sets admit x_j with ratio >= nN/((1+eps)M)", bad == 0,
                 trials=trials, failures=bad, worst_margin=worst)

    S = uniform_sampling(inv_eps * n * N)
    mism = 0
    for a in vecs:
        f = X.combine(a)
        if empirical_p_sum(f, S, 1) != lp_norm(f, 1):
            mism += 1
    bundle.check(f"{tag}: perfect discretization", "eps^-1 nN equispaced points reproduce ||x||_1 exactly",
                 mism == 0, M=S.M, mismatches=mism)

    bundle.table("t21", ["n", "inv_eps", "N", "eps", "perturbation", "nikolskii", "bound", "worst_margin", "M_perfect"]) \
        .add(n, inv_eps, N, eps, pert, nik.value, bound, worst, S.M)
    return {"N": N, "nikolskii": nik, "perturbation": pert}


def reproduce_t21(n_values=(1, 2), inv_eps_values=(1, 2), probes: int = 1000, trials: int = 20, seed: int = 0,
                  instances=None, config=None) -> ReportBundle:
    b = ReportBundle("t21", config)
    pairs = instances or [(n, e) for n in n_values for e in inv_eps_values]
    xs, ys = [], []
    for n, e in pairs:
        r = check_t21_instance(b, n, e, probes, trials, seed)
        xs.append(r["N"])
        ys.append(float(r["nikolskii"].value))
        b.results[f"n={n},inv_eps={e}"] = r
    b.series("t21_nikolskii", xs, ys, "N", "sup ||x||_inf/||x||_1", "L1 Nikolskii constant")
    return b


# -- Rademacher, p < 2 -----------------------------------------------------------

def _realized_norm_pth_power(N: int, p, a):
    """``||sum a_j y_j||_p**p`` summed over the cells of ``[0, width)`` directly.

    Each of the ``2**N`` cells has length ``width / 2**N`` and value
    ``amplitude * (sum a_j R_j)(cell)``. Exact (as a scaled rational) at ``p = 1``.
    """
    amplitude, width = rademacher_scales(N, p)
    R = rademacher_system(N)
    vals = R.combine(a).values
    if p == 1:
        acc = sum(abs(v) for v in vals)
        return (width / 2**N * amplitude * acc).value()
    cell = float(width) / 2**N
    amp = float(amplitude)
    return sum(cell * abs(amp * float(v)) ** float(p) for v in vals)


def _support_sampling(N: int, p, seed: int, inside: int, outside: int) -> SamplingSet:
    """Rational points: ``inside`` of them within the support ``[0, N**(p/2-1))``, the rest beyond it."""
    rng = np.random.default_rng(seed)
    _, width = rademacher_scales(N, p)
    den = 2 ** (N + 8)
    top = ScaledRational.of(den, N) * width
    kmax = top.floor()
    if ScaledRational.of(kmax, N) == top:
        kmax -= 1
    pts = [Fraction(int(k), den) for k in rng.integers(0, kmax + 1, size=inside)]
    pts += [Fraction(int(k), den) for k in rng.integers(kmax + 1, den, size=outside)]
    return SamplingSet(pts)


def check_p32_instance(bundle: ReportBundle, N: int, p, probes: int = 200, trials: int = 10, seed: int = 0):
    p = Fraction(p)
    tag = f"N={N},p={p}"
    X, amplitude, width = rademacher_subspace(N, p)
    worst = 0.0
    bad = 0
    for a in _probe_vectors(N, probes, seed):
        lhs = _realized_norm_pth_power(N, p, a)
        rhs = lp_norm_pth_power(X.combine(a), p)
        if p == 1:
            bad += lhs != rhs
        else:
            rel = abs(float(lhs) ** (1 / float(p)) - float(rhs) ** (1 / float(p))) / float(rhs) ** (1 / float(p))
            worst = max(worst, rel)
            bad += rel > TOL
    bundle.check(f"{tag}: substitution", "||sum a_j y_j||_p = ||sum a_j R_j||_p" + (" exactly" if p == 1 else ""),
                 bad == 0, probes=probes, failures=bad, worst_rel=worst)

    kh = khintchine_empirical_constants(N, p, seed=seed)
    nik = rademacher_nikolskii_bound(N, p, kh.A_hat)
    bundle.check(f"{tag}: sup-norm bound", "||x||_inf <= A_hat^-1 N^(1/p) ||x||_p", nik.holds,
                 linf_over_lp=nik.linf_over_lp, bound=nik.bound, A_hat=kh.A_hat)

    valid = bad_s = 0
    bound_value = None
    for i in range(trials):
        S = _support_sampling(N, p, seed + 7 * i + 1, inside=2 * N + 2, outside=N // 2 + 1)
        try:
            rep = rademacher_sampling_bound(N, p, S)
        except InvalidSamplingSet:
            continue
        valid += 1
        bad_s += not rep.holds
        bound_value = rep.bound.value()
    bundle.check(f"{tag}: sampling lower bound", "valid sets give sum_j |y_1(t_j)|^p >= N^(2-p/2)",
                 bad_s == 0 and valid > 0, valid=valid, trials=trials, bound=bound_value)
    if N == 4 and p == 1:
        bundle.check(f"{tag}: bound value", "N^(2-p/2) = 8 at N=4, p=1", bound_value == 8, bound=bound_value)
    bundle.table("p32", ["N", "p", "A_hat", "linf_over_lp", "bound", "sampling_bound", "valid_sets"]) \
        .add(N, p, kh.A_hat, nik.linf_over_lp, nik.bound, bound_value, valid)
    return nik


def reproduce_p32(N_values=(2, 4, 8), p_values=(1, Fraction(3, 2)), probes: int = 200, trials: int = 10,
                  seed: int = 0, config=None) -> ReportBundle:
    b = ReportBundle("p32", config)
    for p in p_values:
        xs, ys = [], []
        for N in N_values:
            nik = check_p32_instance(b, N, p, probes, trials, seed)
            xs.append(N)
            ys.append(float(nik.linf_over_lp))
        b.series(f"p32_linf_p{sc.to_text(Fraction(p)).replace('/', '_')}", xs, ys, "N", "sup ||x||_inf/||x||_p")
    return b


# -- Rademacher, p > 2 -----------------------------------------------------------

def reproduce_p33(N_values=(2, 4, 8, 16), p=4, budget: int = 200, seed: int = 0, config=None) -> ReportBundle:
    b = ReportBundle("p33", config)
    p = sc.parse_scalar(p)
    betas, bounds = [], []
    for N in N_values:
        kh = khintchine_empirical_constants(N, p, seed=seed)
        rep = p_gt_2_beta_check(rademacher_system(N), p, kh.A_hat, kh.B_hat, kh.B_hat, budget=budget, seed=seed)
        b.check(f"N={N},p={p}: beta lower bound", "beta >= (A/(B B_p)) N^(1/2-1/p)", rep.holds,
                beta=rep.beta, bound=rep.bound)
        b.table("p33", ["N", "p", "A_hat", "B_hat", "beta", "bound"]).add(N, p, kh.A_hat, kh.B_hat, rep.beta, rep.bound)
        betas.append(rep.beta)
        bounds.append(rep.bound)
    mono = all(x < y for x, y in zip(betas, betas[1:]))
    b.check("beta growth", "beta increases along N", mono, betas=betas)
    b.series("p33_beta", N_values, betas, "N", "beta")
    b.series("p33_bound", N_values, bounds, "N", "lower bound")
    return b


# -- lemma -----------------------------------------------------------------------

def random_subspace(cells: int, dim: int, seed: int, span: int = 3) -> Subspace:
    """Seeded integer-valued ``dim``-dimensional subspace of a uniform ``cells``-cell probability space."""
    rng = np.random.default_rng(seed)
    space = make_uniform_partition(cells)
    while True:
        B = rng.integers(-span, span + 1, size=(dim, cells))
        try:
            return Subspace([StepFunction(space, [int(v) for v in row]) for row in B])
        except InvalidSubspace:
            continue


def lemma_instances(seed: int = 0, count: int = 5):
    sp = make_uniform_partition(2)
    yield "span{1,R1}", Subspace([StepFunction(sp, [1, 1]), StepFunction(sp, [1, -1])])
    for i in range(count):
        yield f"random#{i}", random_subspace(8, 3, seed + i)


def check_lemma_instance(bundle: ReportBundle, name: str, Y: Subspace, probes: int = 1000, seed: int = 0):
    F = subspace_frame_correspondence(Y)
    kappa = pr_stability_bounds(F.finite, seed=seed).C_upper
    nik = nikolskii_constant(Y, 2)
    beta = float(nik.value) / math.sqrt(Y.dim)
    rep = verify_stabpr_lemma(Y, kappa, beta, probes=probes, seed=seed)
    concl = sum(not t.conclusion_ok for t in rep.traces)
    bundle.check(f"{name}: conclusion", "||x||_1 <= ||x||_2 <= kappa^3 (1+beta^2)^(3/2) ||x||_1", concl == 0,
                 violations=concl, kappa=kappa, beta=beta)
    bundle.check(f"{name}: Markov step", "Prob(|x| > ||x||_1^(1/3)) <= ||x||_1^(2/3)", rep.markov_violations == 0,
                 violations=rep.markov_violations)
    bundle.check(f"{name}: proof trace", "companion and sign-gap steps hold on every probe", rep.violations == 0,
                 violations=rep.violations, preconditions=rep.preconditions)
    bundle.table("l46", ["instance", "N", "kappa", "beta", "probes", "violations", "worst_slack"]) \
        .add(name, Y.dim, kappa, beta, len(rep.traces), rep.violations, rep.worst_slack)
    return rep


def reproduce_l46(probes: int = 1000, seed: int = 0, count: int = 5, config=None) -> ReportBundle:
    b = ReportBundle("l46", config)
    for name, Y in lemma_instances(seed, count):
        rep = check_lemma_instance(b, name, Y, probes, seed)
        b.results[name] = rep.to_json()
    return b


# -- phase retrieval discretization ------------------------------------------------

def theorem_instances(seed: int = 0, cells: int = 16, N: int = 3, M: int = 10, strategy: str = "greedy"):
    P = mercedes_partition_frame()
    yield "mercedes", P, SamplingSet(P.space.midpoints())
    R = random_parseval_partition_frame(N, cells, seed=seed)
    yield f"random(N={N},cells={cells},seed={seed})", R, sample_partition_frame(R, strategy, M, seed).sampling


def check_theorem_instance(bundle: ReportBundle, name: str, F, S, probes: int = 1000, seed: int = 0):
    rep = verify_pr_discretization_theorem(F, S, probes=probes, seed=seed)
    bundle.check(f"{name}: L2 sampling", "A||y||_2^2 <= (1/M) sum |y(t_j)|^2 <= B||y||_2^2",
                 rep.violations_l2 == 0 and rep.probes == probes, worst_slack=rep.worst_slack_l2)
    bundle.check(f"{name}: L1 sampling", "two-sided L1 bound with A, B, C, kappa, beta",
                 rep.violations_l1 == 0 and rep.probes == probes, worst_slack=rep.worst_slack_l1)
    needed = {"A", "B", "C", "kappa", "beta"}
    bundle.check(f"{name}: constants", "A, B, C, kappa, beta recorded with provenance",
                 needed <= set(rep.constants) and needed <= set(rep.provenance) and not rep.preconditions,
                 preconditions=rep.preconditions)
    c = rep.constants
    bundle.table("t47", ["instance", "M", "A", "B", "C", "kappa", "beta", "worst_l2", "worst_l1"]) \
        .add(name, c["M"], c["A"], c["B"], c["C"], c["kappa"], c["beta"], rep.worst_slack_l2, rep.worst_slack_l1)
    return rep


def reproduce_t47(probes: int = 1000, seed: int = 0, cells: int = 16, N: int = 3, M: int = 10,
                  strategy: str = "greedy", config=None) -> ReportBundle:
    b = ReportBundle("t47", config)
    for name, F, S in theorem_instances(seed, cells, N, M, strategy):
        rep = check_theorem_instance(b, name, F, S, probes, seed)
        b.results[name] = rep.to_json()
    return b


# -- infinite construction ----------------------------------------------------------

def reproduce_s5(K: int = 5, p=1, A_p_param=None, config=None) -> ReportBundle:
    b = ReportBundle("s5", config)
    p = Fraction(sc.parse_scalar(p))
    T = infinite_truncation(p, K, A_p_param)
    b.check("disjoint supports", "block supports are pairwise disjoint", T.supports_disjoint())
    xs, ys = [], []
    bad = 0
    for N in range(1, K + 1):
        got = T.witness_norm_pth_power(N)
        want = ScaledRational(1, p / 2 - 2, N).value()
        if sc.is_exact(got) and sc.is_exact(want):
            ok = got == want
        else:
            ok = abs(float(got) - float(want)) <= TOL * float(want)
        bad += not ok
        b.table("s5", ["N", "norm_pth_power", "expected", "exact"]).add(N, got, want, sc.is_exact(got))
        xs.append(N)
        ys.append(float(got))
    b.check("block norms", "||y_N||_p^p = N^(p/2-2)", bad == 0, failures=bad)
    total = T.divergence_partial_sum()
    A = T.A_p_param
    if sc.is_exact(A) and p.denominator == 1:
        want = sc.simplify(sum(Fraction(A) ** int(p) / N for N in range(1, K + 1)))
        ok = total == want
    else:
        want = sum(float(A) ** float(p) / N for N in range(1, K + 1))
        ok = abs(float(total) - want) <= TOL * want
    b.check("divergence partial sum", "sum_{N<=K} A^p / N", ok, value=total, expected=want, A_p_param=A)
    b.results["truncation"] = {"p": p, "K": K, "A_p_param": A, "blocks": [blk.to_json() for blk in T.blocks]}
    b.series("s5_block_norms", xs, ys, "N", "||y_N||_p^p")
    return b


TARGETS = {
    "t21": reproduce_t21,
    "p32": reproduce_p32,
    "p33": reproduce_p33,
    "l46": reproduce_l46,
    "t47": reproduce_t47,
    "s5": reproduce_s5,
}
