import math
from fractions import Fraction

import numpy as np
import pytest
from oracles import nikolskii_p1_linprog, random_instance, sampled_matrix, cell_matrix

from normlab import (StepFunction, Subspace, disc_constants, disc_constants_p1_exact, disc_constants_p2,
                     disc_constants_search, empirical_p_sum, l1_adversarial_witness, l1_basis, l1_valid_sampling,
                     make_uniform_partition, nikolskii_constant, nikolskii_ratio, p_gt_2_beta_check,
                     rademacher_nikolskii_bound, rademacher_sampling_bound, rademacher_system,
                     random_sampling, uniform_sampling, validity_check)
from normlab.discretize import SamplingSet, annihilated_vector
from normlab.errors import DomainError, InternalInconsistency, InvalidArgument, InvalidSamplingSet, ResourceBoundError


def span_1_r1():
    sp = make_uniform_partition(2)
    return Subspace([StepFunction(sp, [1, 1]), StepFunction(sp, [-1, 1])])


def q(*xs):
    return SamplingSet([Fraction(x) for x in xs])


# -- Nikolskii -----------------------------------------------------------------------

def test_nikolskii_constant_examples():
    one = Subspace([StepFunction.constant(make_uniform_partition(3), 1)])
    for p in (1, 2, 3):
        assert nikolskii_constant(one, p).value == 1
    X, _ = l1_basis(2, 2)
    nik = nikolskii_constant(X, 1)
    assert nik.kind == "exact" and Fraction(nik.value) <= 36
    # the witness attains the value
    assert nikolskii_ratio(X, nik.witness, 1) == nik.value


@pytest.mark.parametrize("seed", range(12))
def test_nikolskii_p1_matches_linprog(seed):
    X, _ = random_instance(seed)
    nik = nikolskii_constant(X, 1)
    assert nik.kind == "exact"
    assert math.isclose(float(nik.value), nikolskii_p1_linprog(X), rel_tol=1e-7)


@pytest.mark.parametrize("seed", range(8))
def test_nikolskii_p2_closed_form(seed):
    X, _ = random_instance(seed)
    nik = nikolskii_constant(X, 2)
    U, w = cell_matrix(X), X.space.float_weights
    Ginv = np.linalg.inv(U.T @ (w[:, None] * U))
    want = math.sqrt(max(float(r @ Ginv @ r) for r in U))
    assert math.isclose(float(nik.value), want, rel_tol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_nikolskii_search_is_witnessed(seed):
    X, _ = random_instance(seed)
    nik = nikolskii_constant(X, 3, seed=seed)
    assert math.isclose(float(nikolskii_ratio(X, nik.witness, 3)), float(nik.value), rel_tol=1e-9)
    # never above the p=1 value, which dominates by ||x||_1 <= ||x||_3 on a probability space
    assert float(nik.value) <= float(nikolskii_constant(X, 1).value) * (1 + 1e-12)


@pytest.mark.parametrize("N", [1, 2, 4, 8])
@pytest.mark.parametrize("p", [1, Fraction(3, 2)])
def test_rademacher_symmetric_matches_lp(N, p):
    a = rademacher_nikolskii_bound(N, p, 1, method="symmetric")
    b = rademacher_nikolskii_bound(N, p, 1, method="lp")
    assert math.isclose(float(a.sup_ratio), float(b.sup_ratio), rel_tol=1e-9)
    if p == 1:
        assert a.sup_ratio == {1: 1, 2: 2, 4: Fraction(8, 3), 8: Fraction(128, 35)}[N]


def test_rademacher_symmetric_n16():
    assert rademacher_nikolskii_bound(16, 1, 1).sup_ratio == Fraction(32768, 6435)
    with pytest.raises(InvalidArgument):
        rademacher_nikolskii_bound(4, 1, 1, method="other")


# -- sampling sets -----------------------------------------------------------------

def test_uniform_and_random_sampling():
    assert list(uniform_sampling(1).points) == [0]
    assert list(uniform_sampling(4).points) == [0, Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)]
    a, b = random_sampling(10, seed=3), random_sampling(10, seed=3)
    assert a.points == b.points and all(0 <= t < 1 for t in a.points)


def test_sampling_set_text_round_trip(tmp_path):
    S = q(Fraction(1, 3), Fraction(2, 7), 0)
    assert SamplingSet.from_text(S.to_text()).points == S.points
    path = tmp_path / "s.txt"
    S.save(path)
    assert SamplingSet.load(path).points == S.points


def test_empirical_p_sum_examples():
    one = StepFunction.constant(make_uniform_partition(2), 1)
    assert empirical_p_sum(one, random_sampling(5, seed=1), 3) == 1
    X, _ = l1_basis(2, 2)
    assert empirical_p_sum(X.basis[0], uniform_sampling(72), 1) == 1
    # y_1 = 2 R_1(2t) on [0, 1/2): four valid points there give 4 * 2 = 8
    rep = rademacher_sampling_bound(4, 1, q(Fraction(1, 32), Fraction(5, 32), Fraction(9, 32), Fraction(15, 32)))
    assert rep.p_sum.value() == 8 and rep.holds
    with pytest.raises(DomainError):
        empirical_p_sum(one, q(2), 1)


def test_validity_examples():
    one = Subspace([StepFunction.constant(make_uniform_partition(1), 1)])
    assert validity_check(one, q(Fraction(1, 2)))
    X, _ = l1_basis(2, 2)
    assert not validity_check(X, q(0, Fraction(1, 2)))
    mids = SamplingSet([Fraction(2 * k - 1, 36) for k in range(1, 19)])
    assert validity_check(X, mids)
    v = annihilated_vector(span_1_r1(), q(Fraction(1, 4)))
    assert v is not None and all(x == 0 for x in sampled_matrix(span_1_r1(), q(Fraction(1, 4))) @ np.array(v, float))


# -- discretization constants ---------------------------------------------------------

def test_disc_p2_examples():
    X = span_1_r1()
    r = disc_constants_p2(X, q(Fraction(1, 4), Fraction(3, 4)))
    assert r.A_value == 1 and r.B_value == 1
    r = disc_constants_p2(X, q(Fraction(1, 4), Fraction(1, 4), Fraction(3, 4)))
    assert r.A_value == Fraction(2, 3) and r.B_value == Fraction(4, 3)
    one = Subspace([StepFunction(make_uniform_partition(2), [1, 3])])
    r = disc_constants_p2(one, q(Fraction(3, 4)))
    assert r.A_value == r.B_value == Fraction(9, 5)
    r = disc_constants_p2(X, q(Fraction(1, 4)))
    assert r.A_value == 0 and not r.valid


def test_disc_p1_examples():
    X = span_1_r1()
    r = disc_constants_p1_exact(X, q(Fraction(1, 4), Fraction(3, 4)))
    assert r.A_value == 1 and r.B_value == 1
    r = disc_constants_p1_exact(X, q(Fraction(1, 4)))
    assert not r.valid and r.A_value == 0
    w = [Fraction(v) for v in r.A_witness]
    assert w[0] - w[1] == 0 and any(w)
    one = Subspace([StepFunction(make_uniform_partition(2), [1, 3])])
    r = disc_constants_p1_exact(one, q(0, Fraction(1, 2)))
    assert r.A_value == r.B_value == 1


def test_disc_p1_dimension_bound():
    R = rademacher_system(7)
    with pytest.raises(ResourceBoundError):
        disc_constants_p1_exact(R, uniform_sampling(128))
    # the dispatcher falls back to search
    r = disc_constants(R, uniform_sampling(128), 1, budget=20)
    assert r.method.startswith("search")


@pytest.mark.parametrize("seed", range(10))
def test_search_brackets_exact(seed):
    X, S = random_instance(seed)
    for p, exact in ((1, disc_constants_p1_exact(X, S)), (2, disc_constants_p2(X, S))):
        s = disc_constants_search(X, S, p, seed=seed)
        assert float(s.A_value) >= float(exact.A_value) * (1 - 1e-9)
        assert float(s.B_value) <= float(exact.B_value) * (1 + 1e-9)


def test_search_one_dimensional_exact():
    one = Subspace([StepFunction(make_uniform_partition(2), [1, 3])])
    r = disc_constants_search(one, q(Fraction(3, 4)), 3, budget=0)
    assert r.A_value == r.B_value == Fraction(27, 14)


# -- adversarial witness --------------------------------------------------------------

def test_adversarial_witness_on_midpoints():
    X, meta = l1_basis(2, 2)
    mids = SamplingSet([Fraction(2 * k - 1, 36) for k in range(1, 19)])
    w = l1_adversarial_witness(meta, X, mids)
    assert w.tuple == (3, 3)
    assert w.empirical == 3 and w.norm == Fraction(3, 2)
    assert w.ratio >= w.bound and w.bound == Fraction(36, 27)


def test_adversarial_witness_on_grid():
    X, meta = l1_basis(2, 2)
    w = l1_adversarial_witness(meta, X, uniform_sampling(72))
    assert w.bound == Fraction(1, 3) and w.ratio == 1 and w.empirical == w.norm == Fraction(3, 2)


def test_adversarial_witness_needs_block_points():
    X, meta = l1_basis(2, 2)
    with pytest.raises(InternalInconsistency):
        l1_adversarial_witness(meta, X, q(Fraction(1, 2)))


@pytest.mark.parametrize("n,inv_eps", [(1, 1), (1, 3), (2, 2)])
def test_valid_sampling_generator(n, inv_eps):
    X, meta = l1_basis(n, inv_eps)
    for seed in range(5):
        S = l1_valid_sampling(meta, 3, seed)
        assert S.M == meta.N + 3 and validity_check(X, S)
        assert l1_adversarial_witness(meta, X, S).holds


# -- Rademacher sampling and p > 2 ---------------------------------------------------

def test_rademacher_sampling_examples():
    S = q(Fraction(1, 64), Fraction(11, 64), Fraction(19, 64), Fraction(29, 64), Fraction(3, 4))
    rep = rademacher_sampling_bound(4, 1, S)
    assert rep.in_support == 4 and rep.bound.value() == 8 and rep.p_sum.value() == 8 and rep.holds
    one = rademacher_sampling_bound(1, 1, q(Fraction(1, 2)))
    assert one.bound.value() == 1 and one.p_sum.value() == 1
    with pytest.raises(InvalidSamplingSet) as exc:
        rademacher_sampling_bound(4, 1, q(0, Fraction(1, 8)))
    assert exc.value.witness is not None and any(exc.value.witness)


def test_beta_check_examples():
    rep = p_gt_2_beta_check(rademacher_system(1), 4, 1, 1, 1)
    assert rep.bound == 1 and math.isclose(rep.beta, 1) and rep.holds
    with pytest.raises(InvalidArgument):
        p_gt_2_beta_check(rademacher_system(2), 2, 1, 1, 1)
