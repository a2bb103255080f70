import math

import numpy as np
import pytest

from mcchaos import chaos_basis as cb
from mcchaos import experiments as ex
from mcchaos.errors import InvalidArgument
from mcchaos.kron_operator import KroneckerChaosOperator, project_loads, sample_loads, sample_stiffness
from mcchaos.krylov import solve
from mcchaos.mesh_fem import assemble_mass, build_mesh, unit_stiffness
from mcchaos.random_field import ForcingModel, draw_samples, kappa_eval, log_affine

SEEDS = (1, 2, 3, 4, 5)


class TestStudyCases:
    def test_case1_mean_value(self):
        u0 = ex.case1_model().exact_mean(0.5)
        assert u0 == pytest.approx(0.125 * math.exp(math.sin(0.5) ** 2 / 2))
        assert u0 == pytest.approx(0.14022, abs=1e-5)

    def test_case1_forcing_at_origin(self):
        f = ex.case1_model().forcing
        for y in (-1.3, 0.0, 2.0):
            assert f(np.array(0.0), np.array([y])) == pytest.approx(1 + 0.5 * y)

    def test_case2_mean(self):
        case = ex.case2_model()
        assert case.exact_mean(0.5) == pytest.approx(0.206090, abs=1e-6)
        x = np.linspace(0, 1, 9)
        np.testing.assert_allclose(case.exact_mean(x), x * (1 - x) * math.exp(0.5) / 2, rtol=1e-15)

    @pytest.mark.parametrize("name", ["case1", "case2"])
    def test_finite_difference_pde_residual(self, name):
        case = ex.get_case(name)
        rng = np.random.default_rng(17)
        h = 1e-5
        for _ in range(20):
            x = rng.uniform(0.0, 1.0)
            y = rng.standard_normal(case.n_vars)

            def u(t):
                return case.exact_solution(t, y)

            def kappa(t):
                return kappa_eval(case.model, t, y)

            flux_diff = (kappa(x + h / 2) * (u(x + h) - u(x)) - kappa(x - h / 2) * (u(x) - u(x - h))) / h**2
            assert abs(-flux_diff - case.forcing(np.array(x), y)) < 1e-6

    @pytest.mark.parametrize("name", ["case1", "case2"])
    def test_mean_formula_against_quadrature(self, name):
        case = ex.get_case(name)
        nodes, weights = cb.tensor_gauss_hermite([30] * case.n_vars)
        x = np.linspace(0.05, 0.95, 7)
        quad = sum(w * case.exact_solution(x, y) for y, w in zip(nodes, weights))
        np.testing.assert_allclose(case.exact_mean(x), quad, rtol=1e-12)

    def test_exact_coefficients_against_quadrature(self):
        case = ex.case1_model()
        nodes, weights = cb.gauss_hermite_nodes(40)
        x = np.linspace(0.1, 0.9, 5)
        for k in range(5):
            proj = sum(w * case.exact_solution(x, [y]) * cb.hermite_eval(k, y)
                       for y, w in zip(nodes, weights)) / math.factorial(k)
            np.testing.assert_allclose(case.exact_coefficient((k,), x), proj, rtol=1e-10, atol=1e-15)

    def test_unknown_case(self):
        with pytest.raises(InvalidArgument):
            ex.get_case("case3")


class TestErrorNorms:
    mesh = build_mesh(50)
    a = unit_stiffness(mesh)
    m = assemble_mass(mesh)

    def test_zero(self):
        v = np.random.default_rng(0).standard_normal(49)
        assert ex.error_h1(v, v, self.a) == 0.0
        assert ex.error_l2(v, v, self.m) == 0.0

    def test_single_hat(self):
        d = np.zeros(49)
        d[20] = 1.0
        assert ex.error_h1(d, np.zeros(49), self.a) == pytest.approx(math.sqrt(2 / self.mesh.h))
        assert ex.error_l2(d, np.zeros(49), self.m) == pytest.approx(math.sqrt(2 * self.mesh.h / 3))

    def test_homogeneous(self):
        d = np.random.default_rng(1).standard_normal(49)
        z = np.zeros(49)
        assert ex.error_h1(-3.5 * d, z, self.a) == pytest.approx(3.5 * ex.error_h1(d, z, self.a))

    def test_discrete_poincare(self):
        rng = np.random.default_rng(2)
        z = np.zeros(49)
        for _ in range(50):
            d = rng.standard_normal(49)
            assert ex.error_l2(d, z, self.m) <= ex.error_h1(d, z, self.a) / math.pi

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgument):
            ex.error_h1(np.zeros(48), np.zeros(48), self.a)


class TestClassicalMonteCarlo:
    def test_deterministic_problem_ignores_samples(self):
        mesh = build_mesh(20)
        model = log_affine(lambda x: np.zeros_like(x))
        forcing = ForcingModel(lambda x, y: np.ones_like(x), 1)
        one = ex.classical_mc_mean(mesh, model, forcing, draw_samples(1, 1, 1))
        many = ex.classical_mc_mean(mesh, model, forcing, draw_samples(2, 50, 1))
        np.testing.assert_allclose(many, one, rtol=1e-13)
        xi = mesh.interior_nodes
        np.testing.assert_allclose(one, xi * (1 - xi) / 2, atol=1e-14)

    @pytest.mark.parametrize("name, seed", [("case1", 1), ("case1", 2), ("case2", 3)])
    def test_equals_identity_z_kronecker_path(self, name, seed):
        case = ex.get_case(name)
        mesh = build_mesh(30)
        samples = draw_samples(seed, 12, case.n_vars)
        mc = ex.classical_mc_mean(mesh, case.model, case.forcing, samples)
        diag, off = sample_stiffness(mesh, samples, case.model)
        loads = sample_loads(mesh, samples, case.forcing)
        w = np.full(12, 1 / 12)
        op = KroneckerChaosOperator(z=np.eye(12), weights=w, diag=diag, off=off, mesh=mesh)
        sol = solve(op, project_loads(loads, np.eye(12), w), tol=1e-13)
        assert sol.report.converged
        np.testing.assert_allclose(w @ sol.coefficients, mc, rtol=0, atol=1e-10 * np.abs(mc).max())

    def test_case1_error_band(self):
        case = ex.case1_model()
        mesh = build_mesh(100)
        mc = ex.classical_mc_mean(mesh, case.model, case.forcing, draw_samples(1, 10_000, 1))
        err = ex.error_h1(case.exact_mean(mesh.interior_nodes), mc, unit_stiffness(mesh))
        assert 5e-4 <= err <= 5e-2


class TestExperimentConfig:
    def test_conventions(self):
        assert ex.ExperimentConfig(case="case1").total_degree(1) == 0
        assert ex.ExperimentConfig(case="case2", degrees=(0, 1)).total_degree(1) == 1
        assert ex.ExperimentConfig(case="case1", degree_convention="degree").total_degree(3) == 3

    @pytest.mark.parametrize("kwargs, field", [
        ({"degrees": ()}, "degrees"),
        ({"degrees": (-1,)}, "degrees"),
        ({"degrees": (0,)}, "degrees"),  # the terms convention starts at one term
        ({"sample_counts": (0,)}, "sample_counts"),
        ({"case": "nope"}, "case"),
        ({"norms": ("h2",)}, "norms"),
        ({"n_elements": 1}, "n_elements"),
        ({"case": "case2", "degree_convention": "terms"}, "degree_convention"),
    ])
    def test_validation_names_field(self, kwargs, field):
        with pytest.raises(InvalidArgument, match=field):
            ex.ExperimentConfig(**kwargs)


@pytest.fixture(scope="module")
def case1_grid():
    config = ex.ExperimentConfig(case="case1", degrees=(1, 2, 3, 4), sample_counts=(100, 1000, 10_000),
                                 seeds=SEEDS, preconditioner="mean")
    return ex.run_table(config)


class TestRunTable:
    def test_shape(self, case1_grid):
        assert len(case1_grid.chaos_cells()) == 4 * 3 * 5
        assert len(case1_grid.mc_cells()) == 3 * 5
        assert not [c for c in case1_grid.cells if c.failure]

    def test_errors_finite_and_nonnegative(self, case1_grid):
        for c in case1_grid.cells:
            assert np.isfinite(c.eps_h1) and c.eps_h1 >= 0
            assert np.isfinite(c.eps_l2) and c.eps_l2 >= 0

    def test_one_term_small_sample_band(self, case1_grid):
        for seed in SEEDS:
            assert 0.05 <= case1_grid.lookup(1, 100, seed).eps_h1 <= 0.15

    def test_convergence_in_n(self, case1_grid):
        for seed in SEEDS:
            e = [case1_grid.lookup(n, 1000, seed).eps_h1 for n in (1, 2, 3)]
            assert e[0] > e[1] > e[2]
            assert e[0] / e[2] > 10

    def test_convergence_in_s(self, case1_grid):
        med = {S: np.median([case1_grid.lookup(4, S, s).eps_h1 for s in SEEDS]) for S in (100, 10_000)}
        assert med[10_000] < med[100]

    def test_l2_below_h1(self, case1_grid):
        for c in case1_grid.cells:
            assert c.eps_l2 < c.eps_h1

    def test_mc_column_is_attached(self, case1_grid):
        cell = case1_grid.lookup(2, 1000, 3)
        assert cell.mc_error == case1_grid.lookup("mc", 1000, 3).eps_h1

    def test_csv(self, case1_grid, tmp_path):
        case1_grid.write_csv(tmp_path / "e.csv")
        lines = (tmp_path / "e.csv").read_text().splitlines()
        assert lines[0] == "case,n,S,seed,eps_h1,eps_l2,mc_error,cg_iters"
        assert len(lines) == 1 + 15 * 5

    def test_median_table(self, case1_grid, tmp_path):
        case1_grid.write_table_csv(tmp_path / "t.csv", "h1")
        lines = (tmp_path / "t.csv").read_text().splitlines()
        assert lines[0] == "n,100,1000,10000"
        assert [ln.split(",")[0] for ln in lines[1:]] == ["1", "2", "3", "4", "Error MC"]

    def test_failures_are_recorded_per_cell(self):
        # S = 3 samples cannot determine 6 coefficients: that cell fails, the rest still run
        config = ex.ExperimentConfig(case="case1", degrees=(1, 6), sample_counts=(3, 50), seeds=(1,))
        report = ex.run_table(config)
        bad = report.lookup(6, 3, 1)
        assert bad.failure and "semidefinite" in bad.failure and bad.eps_h1 is None
        assert report.lookup(1, 3, 1).eps_h1 is not None
        assert report.lookup(6, 50, 1).eps_h1 is not None

    def test_plain_and_orthonormal_bases_agree(self):
        base = dict(case="case1", degrees=(3,), sample_counts=(200,), seeds=(4,))
        a = ex.run_table(ex.ExperimentConfig(**base, orthonormal=True)).lookup(3, 200, 4)
        b = ex.run_table(ex.ExperimentConfig(**base, orthonormal=False)).lookup(3, 200, 4)
        assert a.eps_h1 == pytest.approx(b.eps_h1, rel=1e-7)
        assert a.gram_condition < b.gram_condition

    def test_samples_from_file_collapse_seed_axis(self):
        samples = draw_samples(5, 60, 1)
        config = ex.ExperimentConfig(case="case1", degrees=(2,), sample_counts=(30, 60), seeds=(1,))
        report = ex.run_table(config, samples=samples)
        assert {c.seed for c in report.cells} == {"file"}
        ref = ex.run_table(ex.ExperimentConfig(case="case1", degrees=(2,), sample_counts=(30, 60), seeds=(5,)))
        assert report.lookup(2, 30, "file").eps_h1 == ref.lookup(2, 30, 5).eps_h1


@pytest.mark.slow
def test_high_degree_does_not_get_worse():
    config = ex.ExperimentConfig(case="case1", degrees=(5, 6), sample_counts=(5000,), seeds=SEEDS,
                                 preconditioner="mean")
    report = ex.run_table(config)
    for seed in SEEDS:
        assert report.lookup(6, 5000, seed).eps_h1 <= report.lookup(5, 5000, seed).eps_h1 * 1.5


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="errors keep falling with the degree instead of saturating: "
                                       "the MC-assembled system reproduces any solution in the span exactly")
def test_saturation_between_five_and_six_terms():
    config = ex.ExperimentConfig(case="case1", degrees=(5, 6), sample_counts=(5000, 10_000), seeds=SEEDS,
                                 preconditioner="mean")
    report = ex.run_table(config)
    for seed in SEEDS:
        for S in (5000, 10_000):
            e5, e6 = report.lookup(5, S, seed).eps_h1, report.lookup(6, S, seed).eps_h1
            assert abs(e5 - e6) < 0.5 * max(e5, e6)


@pytest.fixture(scope="module")
def curves():
    return {seed: ex.coefficient_convergence("case1", 3, (100, 1000, 10_000), seed, preconditioner="mean")
            for seed in SEEDS}


class TestCoefficientConvergence:
    def test_shapes(self, curves):
        c = curves[1]
        assert c.blocks[100].shape == (4, 99) and c.exact.shape == (4, 99)
        assert c.indices == ((0,), (1,), (2,), (3,))

    def test_first_order_coefficient(self, curves):
        mesh = build_mesh(100)
        a = unit_stiffness(mesh)
        x = mesh.interior_nodes
        ref = -np.sin(x) * ex.case1_model().exact_mean(x)
        for c in curves.values():
            rel = ex.error_h1(ref, c.blocks[10_000][1], a) / math.sqrt(a.quadratic_form(ref))
            assert rel < 0.1

    def test_mean_block_improves_with_samples(self, curves):
        a = unit_stiffness(build_mesh(100))
        improved = sum(ex.error_h1(c.exact[0], c.blocks[10_000][0], a) < ex.error_h1(c.exact[0], c.blocks[100][0], a)
                       for c in curves.values())
        assert improved >= 4

    def test_deterministic(self, curves):
        again = ex.coefficient_convergence("case1", 3, (100, 1000, 10_000), 1, preconditioner="mean")
        for S in (100, 1000, 10_000):
            assert again.blocks[S].tobytes() == curves[1].blocks[S].tobytes()

    def test_csv(self, curves, tmp_path):
        curves[2].write_csv(tmp_path / "c.csv", 1000)
        lines = (tmp_path / "c.csv").read_text().splitlines()
        assert lines[0] == "x,block0,block1,block2,block3"
        assert len(lines) == 100

    def test_needs_four_coefficients(self):
        with pytest.raises(InvalidArgument):
            ex.coefficient_convergence("case1", 2, (100,), 1)


@pytest.fixture(scope="module")
def rows():
    return ex.compare_modes("case1", chaos_samples=1000, chaos_degree=4)


class TestCompareModes:
    def test_three_finite_rows(self, rows):
        assert [r.mode for r in rows] == ["mc", "collocation", "chaos-mc"]
        for r in rows:
            assert np.isfinite(r.eps_h1) and np.isfinite(r.eps_l2) and np.isfinite(r.diagnostic)

    def test_identity_z_path_matches_mc(self, rows):
        assert rows[0].diagnostic_name == "identity_z_rel_diff"
        assert rows[0].diagnostic <= 1e-10

    def test_collocation_gram_diagonal(self, rows):
        assert rows[1].diagnostic_name == "gram_deviation"
        assert rows[1].diagnostic <= 1e-10
        assert rows[1].nodes == 5

    def test_two_variable_collocation(self):
        rows = ex.compare_modes("case2", n_elements=40, collocation_nodes=4, mc_samples=4,
                                chaos_degree=2, chaos_samples=300)
        assert rows[1].nodes == 16
        assert rows[0].diagnostic <= 1e-10
        assert rows[1].diagnostic <= 1e-10

    def test_csv(self, rows, tmp_path):
        ex.write_compare_csv(rows, tmp_path / "c.csv")
        lines = (tmp_path / "c.csv").read_text().splitlines()
        assert lines[0].startswith("mode,nodes,degree,eps_h1")
        assert len(lines) == 4
