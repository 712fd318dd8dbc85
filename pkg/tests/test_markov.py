import numpy as np
import pytest

from stochbisect import theory
from stochbisect.distributions import Bates, Beta, Empirical, PointMass, Uniform
from stochbisect.markov import (
    BandHypothesisError,
    EndpointAtomError,
    GridCdf,
    apply_operator,
    apply_operator_to_function,
    band_epsilon,
    ell_cdf_general,
    hn_mean_var,
    iterate_operator,
    mean_rate_bound,
    rate_bound,
)

N = 2049


def cubic_grid(n=N):
    return GridCdf.from_callable(lambda t: t * (4 * t * t - 6 * t + 3), n)


def closed_form_cubic_iterate(k, t):
    return t * ((2 * t * t - 3 * t + 1) / 2 ** (k - 1) + 1)


class TestGridCdf:
    def test_validation(self):
        with pytest.raises(ValueError):
            GridCdf(np.array([0.5]))
        with pytest.raises(ValueError):
            GridCdf(np.array([0.0, 0.8, 0.5, 1.0]))
        with pytest.raises(ValueError):
            GridCdf(np.array([0.0, 0.5, 0.9]))

    def test_interpolation_between_nodes(self):
        grid = GridCdf(np.array([0.0, 0.5, 1.0]))
        assert grid(0.25) == pytest.approx(0.25)
        assert np.allclose(grid(np.array([0.0, 0.75, 1.0])), [0.0, 0.75, 1.0])

    def test_from_distribution_hits_cdf(self):
        grid = GridCdf.from_distribution(Beta(2, 2), 257)
        assert grid.values[128] == pytest.approx(0.5, abs=1e-12)

    def test_node_integrals_exact_for_linear(self):
        grid = GridCdf.identity(101)
        assert grid.node_integrals()[-1] == pytest.approx(0.5, abs=1e-15)
        assert grid.integral_to(0.3) == pytest.approx(0.045, abs=1e-15)


class TestApplyOperator:
    def test_identity_is_fixed(self):
        grid = GridCdf.identity(N)
        for cut in (Uniform(), Beta(2, 2), PointMass(0.3)):
            out = apply_operator(grid, cut)
            assert np.max(np.abs(out.values - grid.values)) < 1e-9

    @pytest.mark.parametrize("cut", [Uniform(), Beta(2, 2), Beta(0.5, 2),
                                     PointMass(0.3), Empirical([0.2, 0.6, 0.9])],
                             ids=lambda d: d.spec)
    def test_linear_functions_fixed(self, cut):
        ts = np.linspace(0, 1, N)
        grid = GridCdf(0.25 + 0.75 * ts)
        out = apply_operator(grid, cut)
        assert np.max(np.abs(out.values - grid.values)) < 1e-9

    def test_cubic_iterates_match_closed_form(self):
        grid = cubic_grid()
        ts = grid.nodes
        for k, it in enumerate(iterate_operator(grid, Uniform(), 3), start=1):
            assert np.max(np.abs(it.values - closed_form_cubic_iterate(k, ts))) < 1e-6

    def test_cubic_distance_halves_each_step(self):
        grid = cubic_grid()
        d0 = grid.sup_distance_to_identity()
        iterates = iterate_operator(grid, Uniform(), 3)
        for k, it in enumerate(iterates, start=1):
            assert it.sup_distance_to_identity() / d0 == pytest.approx(
                0.5**k, abs=1e-5)

    def test_point_mass_matches_direct_bracket(self):
        rng = np.random.default_rng(11)
        values = np.sort(rng.uniform(size=N))
        values[0], values[-1] = 0.0, 1.0
        grid = GridCdf(values)
        c = 0.5
        ts = grid.nodes
        direct = grid(ts * c) + grid(ts + (1 - ts) * c) - grid(c)
        out = apply_operator(grid, PointMass(c))
        assert np.max(np.abs(out.values - np.maximum.accumulate(direct))) < 1e-12

    def test_large_empirical_atom_set_stays_bounded(self):
        # 100k atoms would need a 1.6 GB matrix without chunking.
        rng = np.random.default_rng(3)
        cut = Empirical(rng.uniform(0.05, 0.95, size=100_000))
        grid = GridCdf.from_distribution(Beta(2, 2), N)
        out = apply_operator(grid, cut)
        assert np.all(np.diff(out.values) >= 0.0)
        # one operator step keeps the identity fixed regardless of atoms
        ident = apply_operator(GridCdf.identity(N), cut)
        assert ident.sup_distance_to_identity() < 1e-9
        hs = ell_cdf_general(grid, cut, np.linspace(0, 1, 9))
        assert np.all(np.diff(hs) >= -1e-12)

    @pytest.mark.parametrize("cut", [Uniform(), Beta(2, 2), Bates(5)],
                             ids=lambda d: d.spec)
    def test_output_monotone_and_endpoint_preserving(self, cut):
        grid = GridCdf.from_distribution(Beta(0.5, 2), 513)
        out = apply_operator(grid, cut)
        assert np.all(np.diff(out.values) >= 0.0)
        assert out.values[0] == pytest.approx(grid.values[0], abs=1e-9)
        assert out.values[-1] == pytest.approx(grid.values[-1], abs=1e-9)

    def test_quadratic_test_function(self):
        # T phi for phi(t) = t^2 equals 2 t (1-t) q + t^2 with q = E[c(1-c)].
        ts = np.linspace(0, 1, 513)
        for cut in (Uniform(), Beta(2, 2), Beta(0.5, 2), Bates(20), PointMass(0.3)):
            q = theory.cut_concavity(cut)
            got = apply_operator_to_function(lambda x: x * x, cut, ts)
            assert np.max(np.abs(got - (2 * ts * (1 - ts) * q + ts * ts))) < 1e-8


class TestIterateOperator:
    def test_identity_iterates_stay_identity(self):
        for it in iterate_operator(GridCdf.identity(257), Beta(2, 2), 4):
            assert it.sup_distance_to_identity() < 1e-9

    def test_endpoint_atom_rejected(self):
        values = np.linspace(0, 1, 257)
        atom = GridCdf(np.clip(values + 0.2, 0.0, 1.0))  # G(0) = 0.2
        with pytest.raises(EndpointAtomError):
            iterate_operator(atom, Uniform(), 1)
        with pytest.raises(EndpointAtomError):
            iterate_operator(GridCdf.identity(257), PointMass(0.0), 1)

    def test_beta_05_2_empirical_rate(self):
        grid = GridCdf.from_distribution(Beta(0.5, 2), N)
        iterates = iterate_operator(grid, Uniform(), 30)
        distances = [grid.sup_distance_to_identity()] + [
            it.sup_distance_to_identity() for it in iterates]
        ratios = [b / a for a, b in zip(distances, distances[1:])]
        assert max(ratios[5:]) <= 27 / 35 + 0.02


class TestEllCdfGeneral:
    def test_identity_reduces_to_uniform_root_law(self):
        ident = GridCdf.identity(N)
        ts = np.linspace(0, 1, 33)
        for cut in (Uniform(), Beta(2, 2), PointMass(0.4)):
            got = np.asarray(ell_cdf_general(ident, cut, ts))
            ref = np.array([theory.ell_cdf(cut, float(t)) for t in ts])
            assert np.max(np.abs(got - ref)) < 1e-8

    def test_endpoints(self):
        grid = cubic_grid(513)
        for cut in (Uniform(), Beta(2, 2)):
            assert ell_cdf_general(grid, cut, 0.0) == pytest.approx(0.0, abs=1e-12)
            assert ell_cdf_general(grid, cut, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_sup_bound_against_uniform_root_law(self):
        # ||H_n - H|| <= 2 ||G_n - t||
        grid = GridCdf.from_distribution(Beta(0.5, 2), N)
        ts = grid.nodes
        h_ref = ts * ts  # uniform-cut law
        for it in iterate_operator(grid, Uniform(), 10):
            hn = np.asarray(ell_cdf_general(it, Uniform(), ts))
            assert np.max(np.abs(hn - h_ref)) <= 2 * it.sup_distance_to_identity() + 1e-9


class TestRateBounds:
    def test_identity_bound_is_zero(self):
        ident = GridCdf.identity(257)
        for k in (1, 5, 20):
            assert rate_bound(ident, Uniform(), 0.25, 0.0, k) == 0.0

    def test_cubic_bound_dominates_first_step(self):
        grid = cubic_grid()
        eps = band_epsilon(grid, 0.25)
        d1 = iterate_operator(grid, Uniform(), 1)[0].sup_distance_to_identity()
        assert rate_bound(grid, Uniform(), 0.25, eps, 1) >= d1

    def test_beta_01_2_bound_holds_thirty_steps(self):
        grid = GridCdf.from_distribution(Beta(0.1, 2), N)
        eps = band_epsilon(grid, 0.25)
        for k, it in enumerate(iterate_operator(grid, Uniform(), 30), start=1):
            assert it.sup_distance_to_identity() <= rate_bound(grid, Uniform(), 0.25, eps, k)

    def test_hypothesis_violation_raises(self):
        grid = cubic_grid(257)
        with pytest.raises(BandHypothesisError):
            rate_bound(grid, Uniform(), 0.25, 1e-6, 1)

    def test_mean_bound_holds(self):
        grid = GridCdf.from_distribution(Beta(2, 2), 513)
        eps = band_epsilon(grid, 0.25)
        mu_limit = theory.expected_contraction(Uniform())
        for k, it in enumerate(iterate_operator(grid, Uniform(), 10), start=1):
            mean_k, _ = hn_mean_var(it, Uniform())
            bound = mean_rate_bound(grid, Uniform(), 0.25, eps, k)
            assert abs(mean_k - mu_limit) <= bound + 1e-6


class TestMomentConvergence:
    def test_mean_within_twice_sup_distance(self):
        grid = GridCdf.from_distribution(Beta(0.5, 2), N)
        mu_limit = theory.expected_contraction(Uniform())
        var_limit = theory.contraction_variance(Uniform())
        iterates = iterate_operator(grid, Uniform(), 20)
        for it in iterates:
            mean_k, _ = hn_mean_var(it, Uniform())
            assert abs(mean_k - mu_limit) <= 2 * it.sup_distance_to_identity() + 1e-6
        final_mean, final_var = hn_mean_var(iterates[-1], Uniform())
        assert final_mean == pytest.approx(mu_limit, abs=1e-3)
        assert final_var == pytest.approx(var_limit, abs=1e-3)
