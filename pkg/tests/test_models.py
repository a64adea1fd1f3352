import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from cplab.coupling import (PLUS, SYMMETRIC, CouplingBoundSpec, coupling_cost,
                            optimal_coupling, quantile_coupling)
from cplab.dist import (DiscreteDistribution, compound_poisson, point_mass, power,
                        rademacher, total_variation)
from cplab.errors import InvalidInputError, ResourceLimitError
from cplab.metric import kolmogorov_rho
from cplab.models import (IntegerPmf, RareEventModel, bernoulli_loss, dkw_bound, exact_D,
                          exact_G, random_sum, simulate_S, simulate_T)


def vertex_oracle(u, v, C):
    """Minimum of a linear cost over the transportation polytope by
    enumerating basic solutions (all supports of size r + c - 1)."""
    r, c = C.shape
    A = np.zeros((r + c, r * c))
    for i in range(r):
        for j in range(c):
            A[i, i * c + j] = 1.0
            A[r + j, i * c + j] = 1.0
    b = np.concatenate([u, v])
    best = math.inf
    for cells in itertools.combinations(range(r * c), r + c - 1):
        sub = A[:, cells]
        if np.linalg.matrix_rank(sub) < r + c - 1:
            continue
        x, *_ = np.linalg.lstsq(sub, b, rcond=None)
        if np.abs(sub @ x - b).max() > 1e-12 or x.min() < -1e-12:
            continue
        best = min(best, float(C.reshape(-1)[list(cells)] @ x))
    return best


def random_pmf(rng, support_size, k_max=8):
    ks = rng.choice(k_max + 1, size=support_size, replace=False)
    w = rng.dirichlet(np.ones(support_size))
    return IntegerPmf.from_dict(dict(zip(ks.tolist(), w)))


class TestExactLaws:
    def test_p_zero(self):
        m = bernoulli_loss(10, 0.0)
        assert exact_G(m).as_dict() == {(0.0,): 1.0}
        assert exact_D(m).as_dict() == {(0.0,): 1.0}

    def test_single_observation(self):
        p = 0.3
        m = bernoulli_loss(1, p)
        assert exact_G(m).mass_at([1.0]) == pytest.approx(p, abs=1e-15)
        assert exact_D(m).mass_at([0.0]) == pytest.approx(math.exp(-p), abs=1e-12)

    def test_binomial_and_poisson_oracle(self):
        n, p = 40, 0.07
        m = bernoulli_loss(n, p)
        G, D = exact_G(m), exact_D(m, 1e-13)
        for k in range(n + 1):
            assert G.mass_at([k]) == pytest.approx(stats.binom.pmf(k, n, p), abs=1e-13)
        for k in range(20):
            assert D.mass_at([k]) == pytest.approx(stats.poisson.pmf(k, n * p), abs=1e-12)

    def test_mean_identity(self, rng):
        V = DiscreteDistribution([[1.0, 0.0], [0.0, 2.0], [-1.0, 1.0]], [0.2, 0.5, 0.3])
        W = point_mass([2.0, -1.0])
        m = RareEventModel((0.1, 0.2, 0.05), (V, W, V))
        np.testing.assert_allclose(exact_G(m).mean(), m.expected_loss(), atol=1e-12)
        np.testing.assert_allclose(exact_D(m).mean(), m.expected_loss(), atol=1e-9)

    def test_D_is_compound_poisson_of_the_sum(self):
        m = bernoulli_loss(5, 0.2)
        one = compound_poisson(1.0, m.summand_laws()[0], 1e-14)
        assert total_variation(exact_D(m, 1e-12), power(one, 5)) <= 1e-11

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            RareEventModel((1.5,), (point_mass(1),))
        with pytest.raises(InvalidInputError):
            RareEventModel((0.1, 0.1), (point_mass(1),))
        with pytest.raises(InvalidInputError):
            RareEventModel((0.1, 0.1), (point_mass(1), point_mass([1, 1])))


class TestSimulation:
    def test_p_zero_gives_zeros(self):
        m = bernoulli_loss(20, 0.0)
        assert not simulate_S(m, 1000, seed=1).values.any()
        assert not simulate_T(m, 1000, seed=1).values.any()

    def test_means(self):
        m = bernoulli_loss(50, 0.04)
        N = 50_000
        for sample, var in ((simulate_S(m, N, 3), 50 * 0.04 * 0.96),
                            (simulate_T(m, N, 3), 50 * 0.04)):
            assert abs(sample.mean()[0] - 2.0) <= 4 * math.sqrt(var / N)

    def test_seeded(self):
        m = bernoulli_loss(10, 0.1)
        np.testing.assert_array_equal(simulate_T(m, 500, 9).values,
                                      simulate_T(m, 500, 9).values)

    def test_dkw(self):
        m = RareEventModel.homogeneous(30, 0.1, rademacher())
        G, D = exact_G(m), exact_D(m)
        N = 20_000
        eps = dkw_bound(N)
        assert kolmogorov_rho(simulate_S(m, N, 5).to_distribution(), G).value <= eps
        assert kolmogorov_rho(simulate_T(m, N, 5).to_distribution(), D).value <= eps

    def test_poisson_counts(self):
        m = bernoulli_loss(4, 0.01)
        s = simulate_T(m, 40_000, seed=2, return_counts=True)
        K = s.counts.reshape(-1)
        ks = np.arange(6)
        observed = np.array([(K == k).sum() for k in ks[:-1]] + [(K >= 5).sum()])
        probs = np.append(stats.poisson.pmf(ks[:-1], 1.0), stats.poisson.sf(4, 1.0))
        assert stats.chisquare(observed, probs * K.size).pvalue > 0.001

    def test_dkw_bound_value(self):
        assert dkw_bound(100_000) == pytest.approx(math.sqrt(math.log(2000) / 200_000))


class TestRandomSum:
    def test_point_count_is_power(self):
        F = rademacher()
        assert total_variation(random_sum(IntegerPmf.point(5), F), power(F, 5)) <= 1e-15

    def test_zero_count(self):
        assert random_sum(IntegerPmf.point(0), rademacher()).as_dict() == {(0.0,): 1.0}

    def test_poisson_bridge(self):
        tol = 1e-12
        F = DiscreteDistribution([-1.0, 0.0, 2.0], [0.3, 0.3, 0.4])
        out = random_sum(IntegerPmf.poisson(7.0, tol), F)
        assert total_variation(out, compound_poisson(7.0, F, tol)) <= 10 * tol

    def test_truncation_is_recorded(self):
        U = IntegerPmf.from_dict({0: 0.5, 1: 0.5 - 1e-8, 9: 1e-8})
        out = random_sum(U, rademacher(), tol=1e-7)
        assert out.error_bound == pytest.approx(1e-8)
        assert out.points.max() <= 1.0

    def test_pmf_validation(self):
        with pytest.raises(InvalidInputError):
            IntegerPmf([0.5, 0.4])
        with pytest.raises(InvalidInputError):
            IntegerPmf.from_dict({-1: 1.0})

    def test_mix(self):
        U = IntegerPmf.point(0).mix(IntegerPmf.point(2), 0.25)
        assert U.masses.tolist() == [0.25, 0.0, 0.75]


class TestCoupling:
    def test_cost_examples(self):
        plus = CouplingBoundSpec(PLUS)
        sym = CouplingBoundSpec(SYMMETRIC)
        assert coupling_cost(3, 1, plus) == 1.0
        assert coupling_cost(3, 3, plus) == 0.0
        assert coupling_cost(3, 3, sym) == 0.5
        assert coupling_cost(2, 3, plus) == 0.25
        assert coupling_cost(0, 0, sym) == 1.0

    def test_spec_validation(self):
        with pytest.raises(InvalidInputError):
            CouplingBoundSpec("other")
        with pytest.raises(InvalidInputError):
            CouplingBoundSpec(PLUS, const_c_m=0.0)
        with pytest.raises(InvalidInputError):
            coupling_cost(-1, 0, CouplingBoundSpec())

    def test_identical_marginals(self, rng):
        spec = CouplingBoundSpec(PLUS)
        for _ in range(10):
            U = random_pmf(rng, 4)
            coup, value = optimal_coupling(U, U, spec)
            assert value == 0.0
            assert coup.marginal_error(U, U) <= 1e-9

    def test_point_masses(self):
        spec = CouplingBoundSpec(PLUS, const_c_m=0.1)
        _, value = optimal_coupling(IntegerPmf.point(7), IntegerPmf.point(3), spec)
        assert value == pytest.approx(0.1 * 4 / 4)

    def test_vertex_oracle(self, rng):
        for i in range(25):
            U, V = random_pmf(rng, 3), random_pmf(rng, 3)
            spec = CouplingBoundSpec(SYMMETRIC if i % 2 else PLUS,
                                     float(rng.uniform(0.1, 2)), float(rng.uniform(0.1, 2)))
            coup, value = optimal_coupling(U, V, spec)
            C = coupling_cost(coup.rows[:, None], coup.cols[None, :], spec)
            oracle = vertex_oracle(U.masses[coup.rows], V.masses[coup.cols], C)
            assert value == pytest.approx(oracle, abs=1e-9)
            assert coup.marginal_error(U, V) <= 1e-9

    def test_lp_below_feasible_couplings(self, rng):
        spec = CouplingBoundSpec(SYMMETRIC)
        U, V = random_pmf(rng, 5), random_pmf(rng, 4)
        _, value = optimal_coupling(U, V, spec)
        q = quantile_coupling(U, V)
        assert q.marginal_error(U, V) <= 1e-12
        assert q.cost(spec) >= value - 1e-12
        u, v = U.masses[U.support], V.masses[V.support]
        C = coupling_cost(U.support[:, None], V.support[None, :], spec)
        for _ in range(100):
            # random vertex of the polytope via the north-west corner rule on shuffled orders
            pi, pj = rng.permutation(len(u)), rng.permutation(len(v))
            a, b = u[pi].copy(), v[pj].copy()
            J = np.zeros((len(u), len(v)))
            i = j = 0
            while i < len(a) and j < len(b):
                t = min(a[i], b[j])
                J[pi[i], pj[j]] += t
                a[i] -= t
                b[j] -= t
                if a[i] <= 1e-15:
                    i += 1
                else:
                    j += 1
            assert (C * J).sum() >= value - 1e-12

    @given(st.integers(0, 2**31))
    def test_quantile_dominates(self, seed):
        rng = np.random.default_rng(seed)
        U, V = random_pmf(rng, 4, 12), random_pmf(rng, 3, 12)
        spec = CouplingBoundSpec(PLUS)
        assert quantile_coupling(U, V).cost(spec) >= optimal_coupling(U, V, spec)[1] - 1e-12

    def test_cap(self):
        U = IntegerPmf(np.full(10, 0.1))
        with pytest.raises(ResourceLimitError):
            optimal_coupling(U, U, CouplingBoundSpec(), cap=(5, 5))

    def test_mass_mismatch(self):
        with pytest.raises(InvalidInputError):
            optimal_coupling([0.5, 0.5], [0.5, 0.4], CouplingBoundSpec())
