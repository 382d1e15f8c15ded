#include <doctest.h>

#include "homlab/assembly.hpp"
#include "homlab/errors.hpp"
#include "homlab/resolvent.hpp"
#include "homlab/solvers.hpp"

#include <cmath>
#include <random>

using namespace homlab;

namespace {

constexpr double pi = 3.14159265358979323846;
constexpr double th0 = pi / 4.0;

SpectralParameter shift(cplx lam) { return SpectralParameter::make(lam, th0); }

Eigen::VectorXcd restrict_interior(const DiscreteOperator& op, const GridField& u) {
    Eigen::VectorXcd v(op.n_interior_dof());
    for (size_t i = 0; i < op.node_of_interior.size(); ++i)
        for (int c = 0; c < op.m; ++c)
            v[static_cast<long>(i) * op.m + c] = u.values[op.node_of_interior[i] * op.m + c];
    return v;
}

GridField random_dirichlet_field(std::shared_ptr<const DiscreteDomain> dom, int m,
                                 std::mt19937_64& rng) {
    GridField f = GridField::zero(dom, m);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (long idx = 0; idx < dom->num_nodes(); ++idx) {
        if (dom->is_boundary(idx)) continue;
        for (int c = 0; c < m; ++c) f.values[idx * m + c] = cplx(uni(rng), uni(rng));
    }
    return f;
}

} // namespace

TEST_CASE("Q1 stiffness reproduces the classical 9-point stencil for A = I") {
    auto dom = DiscreteDomain::rectangle(2, {1.0, 1.0, 1.0}, {4, 4, 0});
    auto op = assemble_parts(dom, Coefficients::homogenized(Eigen::MatrixXd::Identity(2, 2), 2));
    // interior grid is 3x3; its center row has the full stencil
    Eigen::MatrixXd K = Eigen::MatrixXd(op->K_ii);
    const int center = 4;  // middle of 3x3 interior, x-fastest
    CHECK(K(center, center) == doctest::Approx(8.0 / 3.0).epsilon(1e-13));
    CHECK(K(center, 3) == doctest::Approx(-1.0 / 3.0).epsilon(1e-13));   // west
    CHECK(K(center, 1) == doctest::Approx(-1.0 / 3.0).epsilon(1e-13));   // south
    CHECK(K(center, 0) == doctest::Approx(-1.0 / 3.0).epsilon(1e-13));   // corner
    double row_sum = K.row(center).sum();
    CHECK(row_sum == doctest::Approx(8.0 / 3.0 - 8.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("shift enters linearly: matrix(-1) = matrix(0) + M") {
    auto dom = DiscreteDomain::rectangle(2, {1.0, 1.0, 1.0}, {8, 8, 0});
    auto field = laminate_field(2, 2.0, 1.0);
    auto op = assemble_parts(dom, Coefficients::oscillating(field, 2.0));
    Eigen::MatrixXcd S0 = ShiftedOperator{op, shift(cplx(0.0, 0.0))}.materialize();
    Eigen::MatrixXcd S1 = ShiftedOperator{op, shift(cplx(-1.0, 0.0))}.materialize();
    Eigen::MatrixXcd M = op->M_ii.cast<cplx>();
    CHECK((S1 - S0 - M).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("hermiticity: matrix(lambda)^H equals matrix(conj lambda)") {
    auto dom = DiscreteDomain::rectangle(2, {1.0, 1.0, 1.0}, {8, 8, 0});
    auto field = laminate_field(2, 2.0, 1.0);
    auto op = assemble_parts(dom, Coefficients::oscillating(field, 2.0));
    const cplx lam(-2.0, 1.3);
    auto S = ShiftedOperator{op, shift(lam)}.materialize();
    auto Sc = ShiftedOperator{op, shift(std::conj(lam))}.materialize();
    Eigen::MatrixXcd D = Eigen::MatrixXcd(S).adjoint() - Eigen::MatrixXcd(Sc);
    CHECK(D.cwiseAbs().maxCoeff() <= 1e-14);
    // real shift: symmetric
    auto Sr = ShiftedOperator{op, shift(cplx(-1.0, 0.0))}.materialize();
    Eigen::MatrixXcd Dr = Eigen::MatrixXcd(Sr) - Eigen::MatrixXcd(Sr).transpose();
    CHECK(Dr.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("manufactured solution converges at second order in L2, first in H1") {
    // -laplace(u) + u = (2 pi^2 + 1) sin(pi x) sin(pi y), u* = sin sin
    auto exact = [](const double* x) { return std::sin(pi * x[0]) * std::sin(pi * x[1]); };
    auto F = [](const double* x, cplx* v) {
        v[0] = (2.0 * pi * pi + 1.0) * std::sin(pi * x[0]) * std::sin(pi * x[1]);
    };
    std::vector<int> ns = {16, 32, 64};
    std::vector<double> el2, eh1, einf;
    for (int n : ns) {
        auto dom = DiscreteDomain::rectangle(2, {1.0, 1.0, 1.0}, {n, n, 0});
        auto op = assemble_parts(dom, Coefficients::homogenized(Eigen::MatrixXd::Identity(2, 2), 2));
        DirichletSolver solver(op, shift(cplx(-1.0, 0.0)));
        auto sol = solve_dirichlet(solver, RhsSpec::function(F));
        CHECK(sol.residual <= 1e-9);
        GridField err = sol.u;
        double x[3];
        for (long idx = 0; idx < dom->num_nodes(); ++idx) {
            dom->node_position(idx, x);
            err.values[idx] -= exact(x);
        }
        el2.push_back(lp_norm(err, 2.0));
        eh1.push_back(w1p_seminorm(err, 2.0));
        einf.push_back(linf_norm(err));
    }
    CHECK(std::log2(el2[0] / el2[1]) >= 1.9);
    CHECK(std::log2(el2[1] / el2[2]) >= 1.9);
    CHECK(std::log2(einf[0] / einf[1]) >= 1.9);
    CHECK(std::log2(eh1[0] / eh1[1]) >= 0.95);
    CHECK(std::log2(eh1[1] / eh1[2]) >= 0.95);
}

TEST_CASE("zero data gives the zero solution") {
    auto dom = DiscreteDomain::rectangle(2, {1.0, 1.0, 1.0}, {12, 12, 0});
    auto op = assemble_parts(dom, Coefficients::homogenized(Eigen::MatrixXd::Identity(2, 2), 2));
    DirichletSolver solver(op, shift(cplx(-1.0, 0.0)));
    auto sol = solve_dirichlet(solver, RhsSpec::nodal(Eigen::VectorXcd::Zero(dom->num_nodes())));
    CHECK(linf_norm(sol.u) == 0.0);
}

TEST_CASE("dst_direct and sparse_lu agree to rounding") {
    auto dom = DiscreteDomain::rectangle(2, {1.0, 1.0, 1.0}, {24, 24, 0});
    Eigen::MatrixXd aniso(2, 2);
    aniso << std::sqrt(3.0), 0.0, 0.0, 2.0;
    auto op = assemble_parts(dom, Coefficients::homogenized(aniso, 2));
    REQUIRE(op->separable_constant);
    const auto lam = shift(cplx(-3.0, 2.0));
    SolverOptions o1;
    o1.mode = SolverOptions::Mode::dst_direct;
    SolverOptions o2;
    o2.mode = SolverOptions::Mode::sparse_lu;
    DirichletSolver s1(op, lam, o1), s2(op, lam, o2);
    std::mt19937_64 rng(5);
    auto F = random_dirichlet_field(dom, 1, rng);
    auto u1 = solve_dirichlet(s1, RhsSpec::nodal(F.values));
    auto u2 = solve_dirichlet(s2, RhsSpec::nodal(F.values));
    CHECK((u1.u.values - u2.u.values).cwiseAbs().maxCoeff() <=
          1e-12 * u1.u.values.cwiseAbs().maxCoeff());
}

TEST_CASE("discrete resolvent identity on all three strategies") {
    auto dom = DiscreteDomain::rectangle(2, {1.0, 1.0, 1.0}, {32, 32, 0});
    const double R0m2 = 1.0 / (dom->R0() * dom->R0());
    const auto lam = shift(cplx(-R0m2, 0.0));
    const auto mu = shift(cplx(-4.0 * R0m2, R0m2));

    auto run = [&](std::shared_ptr<const DiscreteOperator> op, SolverOptions::Mode mode) {
        SolverOptions opts;
        opts.mode = mode;
        DirichletSolver sl(op, lam, opts), sm(op, mu, opts);
        std::mt19937_64 rng(17);
        double worst = 0.0;
        for (int trial = 0; trial < 3; ++trial) {
            auto F = random_dirichlet_field(dom, op->m, rng);
            auto ul = solve_dirichlet(sl, RhsSpec::nodal(F.values));
            auto um = solve_dirichlet(sm, RhsSpec::nodal(F.values));
            auto ulm = solve_dirichlet(sl, RhsSpec::nodal(um.u.values));
            GridField defect = ul.u;
            defect.values -= um.u.values;
            defect.values -= (lam.value - mu.value) * ulm.u.values;
            worst = std::max(worst, lp_norm(defect, 2.0) / lp_norm(F, 2.0));
        }
        return worst;
    };

    auto op_const =
        assemble_parts(dom, Coefficients::homogenized(Eigen::MatrixXd::Identity(2, 2), 2));
    CHECK(run(op_const, SolverOptions::Mode::dst_direct) <= 1e-11);

    auto field = laminate_field(2, 2.0, 1.0);
    auto op_osc = assemble_parts(dom, Coefficients::oscillating(field, 0.5));
    CHECK(run(op_osc, SolverOptions::Mode::sparse_lu) <= 1e-11);
    CHECK(run(op_osc, SolverOptions::Mode::krylov) <= 1e-9);
}

TEST_CASE("boundary value solves: constants, screening, max principle") {
    auto dom = DiscreteDomain::rectangle(2, {1.0, 1.0, 1.0}, {32, 32, 0});
    auto op = assemble_parts(dom, Coefficients::homogenized(Eigen::MatrixXd::Identity(2, 2), 2));

    SUBCASE("constants are harmonic for L at lambda = 0") {
        DirichletSolver solver(op, shift(cplx(0.0, 0.0)));
        Eigen::VectorXcd g = Eigen::VectorXcd::Constant(dom->num_nodes(), cplx(2.5, 0.0));
        auto u = solve_boundary_value(solver, g);
        double dev = 0.0;
        for (long i = 0; i < dom->num_nodes(); ++i) dev = std::max(dev, std::abs(u.values[i] - 2.5));
        CHECK(dev <= 1e-10);
    }

    SUBCASE("screened problem obeys the maximum principle; fine-grid oracle stable") {
        DirichletSolver solver(op, shift(cplx(-1.0, 0.0)));
        Eigen::VectorXcd g = Eigen::VectorXcd::Constant(dom->num_nodes(), cplx(1.0, 0.0));
        auto u = solve_boundary_value(solver, g);
        CHECK(linf_norm(u) <= 1.0 + 1e-12);
        // center value against a refined grid
        int c[3] = {16, 16, 0};
        const double center_coarse = u.values[dom->node(c)].real();
        auto dom_f = DiscreteDomain::rectangle(2, {1.0, 1.0, 1.0}, {96, 96, 0});
        auto op_f =
            assemble_parts(dom_f, Coefficients::homogenized(Eigen::MatrixXd::Identity(2, 2), 2));
        DirichletSolver solver_f(op_f, shift(cplx(-1.0, 0.0)));
        auto uf = solve_boundary_value(solver_f, Eigen::VectorXcd::Constant(dom_f->num_nodes(),
                                                                            cplx(1.0, 0.0)));
        int cf[3] = {48, 48, 0};
        CHECK(center_coarse ==
              doctest::Approx(uf.values[dom_f->node(cf)].real()).epsilon(1e-2));
    }
}

TEST_CASE("Dirichlet correctors: exact for constant A, O(eps) for the laminate") {
    auto dom = DiscreteDomain::rectangle(2, {1.0, 1.0, 1.0}, {128, 128, 0});

    SUBCASE("constant coefficients give Phi = P") {
        auto cf = constant_scalar_field(2, 1.0);
        auto dc = dirichlet_correctors(dom, cf, 0.25);
        CHECK(dc.deviation_inf[0] <= 1e-9);
        CHECK(dc.deviation_inf[1] <= 1e-9);
    }

    SUBCASE("laminate deviation scales like eps, gradient stays bounded") {
        auto field = laminate_field(2, 2.0, 1.0);
        auto dc8 = dirichlet_correctors(dom, field, 1.0 / 4.0);
        auto dc16 = dirichlet_correctors(dom, field, 1.0 / 8.0);
        // ratio of deviations ~ 2 for a first-order quantity
        const double ratio = dc8.deviation_inf[0] / dc16.deviation_inf[0];
        CHECK(ratio >= 1.5);
        CHECK(ratio <= 2.6);
        CHECK(dc8.grad_sup <= 3.0);
        CHECK(dc16.grad_sup / dc8.grad_sup <= 1.5);
    }
}

TEST_CASE("operator corrector: zero cases and the submultiplicative bound") {
    auto dom = DiscreteDomain::rectangle(2, {1.0, 1.0, 1.0}, {128, 128, 0});
    auto field = laminate_field(2, 2.0, 1.0);
    auto dc = dirichlet_correctors(dom, field, 1.0 / 8.0);

    auto op0 = assemble_parts(dom, Coefficients::homogenized(Eigen::MatrixXd::Identity(2, 2), 2));
    DirichletSolver s0(op0, shift(cplx(-1.0, 0.0)));
    auto u0 = solve_dirichlet(s0, RhsSpec::function(bump_source(*dom, 1)));

    SUBCASE("u0 = 0 gives zero corrector") {
        ResolventSolution zero;
        zero.u = GridField::zero(dom, 1);
        zero.grad = recover_gradient(zero.u);
        auto w = operator_corrector_apply(dc, zero);
        CHECK(linf_norm(w) == 0.0);
    }

    SUBCASE("constant A gives Phi = P hence zero corrector") {
        auto cf = constant_scalar_field(2, 1.0);
        auto dc_const = dirichlet_correctors(dom, cf, 0.25);
        auto w = operator_corrector_apply(dc_const, u0);
        CHECK(linf_norm(w) <= 1e-8);
    }

    SUBCASE("sup bound by deviation times gradient") {
        auto w = operator_corrector_apply(dc, u0);
        double dev = *std::max_element(dc.deviation_inf.begin(), dc.deviation_inf.end());
        double gmax = linf_norm_of_gradient(*dom, 1, u0.grad);
        CHECK(linf_norm(w) <= 2.0 * dev * gmax + 1e-14);
    }

    SUBCASE("domain mismatch is an error") {
        auto dom2 = DiscreteDomain::rectangle(2, {1.0, 1.0, 1.0}, {64, 64, 0});
        auto op2 = assemble_parts(dom2, Coefficients::homogenized(Eigen::MatrixXd::Identity(2, 2), 2));
        DirichletSolver s2(op2, shift(cplx(-1.0, 0.0)));
        auto u2 = solve_dirichlet(s2, RhsSpec::function(bump_source(*dom2, 1)));
        CHECK_THROWS_AS(operator_corrector_apply(dc, u2), ConfigError);
    }
}

TEST_CASE("norms: exact values, Jensen ordering, H2 policy") {
    auto dom = DiscreteDomain::rectangle(2, {1.0, 1.0, 1.0}, {64, 64, 0});

    SUBCASE("u = 1 has unit Lp norms") {
        GridField one = GridField::zero(dom, 1);
        one.values.setConstant(cplx(1.0, 0.0));
        for (double p : {1.0, 2.0, 4.0}) CHECK(lp_norm(one, p) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(linf_norm(one) == 1.0);
    }

    SUBCASE("|sin sin|_2 = 1/2 with quadrature accuracy") {
        GridField u = GridField::zero(dom, 1);
        double x[3];
        for (long i = 0; i < dom->num_nodes(); ++i) {
            dom->node_position(i, x);
            u.values[i] = std::sin(pi * x[0]) * std::sin(pi * x[1]);
        }
        CHECK(lp_norm(u, 2.0) == doctest::Approx(0.5).epsilon(2e-4));
    }

    SUBCASE("normalized Lp norms are monotone in p on random fields") {
        std::mt19937_64 rng(33);
        for (int trial = 0; trial < 100; ++trial) {
            auto u = random_dirichlet_field(dom, 1, rng);
            const double l1 = lp_norm(u, 1.0), l2 = lp_norm(u, 2.0), l4 = lp_norm(u, 4.0);
            CHECK(l1 <= l2 * (1.0 + 1e-12));
            CHECK(l2 <= l4 * (1.0 + 1e-12));
            CHECK(l4 <= linf_norm(u) * (1.0 + 1e-12));
        }
    }

    SUBCASE("H2 is refused for oscillating solutions") {
        auto field = laminate_field(2, 2.0, 1.0);
        auto op = assemble_parts(dom, Coefficients::oscillating(field, 0.25));
        DirichletSolver s(op, shift(cplx(-1.0, 0.0)));
        auto sol = solve_dirichlet(s, RhsSpec::function(bump_source(*dom, 1)));
        CHECK_THROWS_AS(h2_seminorm(sol.u), ConfigError);
        CHECK_THROWS_AS(norm_table(sol.u, {"h2"}), ConfigError);
    }
}

TEST_CASE("bilinear form: coercive value, matrix pairing, adjoint and imaginary identities") {
    auto dom = DiscreteDomain::rectangle(2, {1.0, 1.0, 1.0}, {24, 24, 0});
    auto coeffs = Coefficients::homogenized(Eigen::MatrixXd::Identity(2, 2), 2);
    auto op = assemble_parts(dom, coeffs);
    std::mt19937_64 rng(71);
    auto u = random_dirichlet_field(dom, 1, rng);
    auto v = random_dirichlet_field(dom, 1, rng);

    SUBCASE("u = v, lambda = -1, A = I is grad-energy plus mass") {
        const auto lam = shift(cplx(-1.0, 0.0));
        const cplx b = bilinear_form(*dom, coeffs, lam, u, u);
        const double expect = std::pow(w1p_seminorm(u, 2.0), 2) + std::pow(lp_norm(u, 2.0), 2);
        CHECK(b.imag() <= 1e-12 * std::abs(b));
        CHECK(b.real() == doctest::Approx(expect).epsilon(1e-12));
    }

    SUBCASE("equals v^H (K - lambda M) u") {
        const auto lam = shift(cplx(-2.0, 1.0));
        const cplx b = bilinear_form(*dom, coeffs, lam, u, v);
        auto S = ShiftedOperator{op, lam};
        Eigen::VectorXcd ui = restrict_interior(*op, u), vi = restrict_interior(*op, v);
        Eigen::VectorXcd Su;
        S.apply(ui, Su);
        const cplx pairing = vi.dot(Su);  // conjugates vi
        CHECK(std::abs(b - pairing) <= 1e-12 * std::max(1.0, std::abs(b)));
    }

    SUBCASE("adjoint identity and imaginary-part identity") {
        auto field = laminate_field(2, 2.0, 1.0);
        auto osc = Coefficients::oscillating(field, 0.5);
        const auto lam = shift(cplx(-1.5, 2.0));
        const auto lam_conj = shift(std::conj(lam.value));
        const cplx b1 = bilinear_form(*dom, osc, lam, u, v);
        const cplx b2 = std::conj(bilinear_form(*dom, osc, lam_conj, v, u));
        CHECK(std::abs(b1 - b2) <= 1e-12 * std::max(1.0, std::abs(b1)));

        const cplx buu = bilinear_form(*dom, osc, lam, u, u);
        const double l2sq = std::pow(lp_norm(u, 2.0), 2);
        CHECK(buu.imag() == doctest::Approx(-lam.value.imag() * l2sq).epsilon(1e-12));
    }
}

TEST_CASE("flux right-hand side: gradient bound ratio is stable across shifts") {
    auto dom = DiscreteDomain::rectangle(2, {1.0, 1.0, 1.0}, {64, 64, 0});
    auto field = laminate_field(2, 2.0, 1.0);
    auto op = assemble_parts(dom, Coefficients::oscillating(field, 0.25));
    auto f = [](const double* x, cplx* v) {
        v[0] = std::sin(pi * x[0]) * x[1] * (1.0 - x[1]);
        v[1] = cplx(0.0, 1.0) * std::sin(pi * x[1]) * x[0];
    };
    std::vector<double> ratios;
    for (cplx lam : {cplx(0.0, 0.0), cplx(-2.0, 0.0), cplx(-20.0, 5.0)}) {
        DirichletSolver s(op, shift(lam));
        RhsSpec rhs;
        rhs.flux_fn = f;
        auto sol = solve_dirichlet(s, rhs);
        GridField ff = GridField::zero(dom, 1);
        double x[3];
        cplx val[2];
        for (long i = 0; i < dom->num_nodes(); ++i) {
            dom->node_position(i, x);
            f(x, val);
            ff.values[i] = std::sqrt(std::norm(val[0]) + std::norm(val[1]));
        }
        ratios.push_back(w1p_seminorm(sol.u, 2.0) / lp_norm(ff, 2.0));
    }
    const double mx = *std::max_element(ratios.begin(), ratios.end());
    const double mn = *std::min_element(ratios.begin(), ratios.end());
    CHECK(mx / mn <= 5.0);
}

TEST_CASE("resolution rule: under-resolved oscillation is a configuration error") {
    auto dom = DiscreteDomain::rectangle(2, {1.0, 1.0, 1.0}, {256, 256, 0});
    auto field = laminate_field(2, 2.0, 1.0);
    CHECK_THROWS_AS(assemble_parts(dom, Coefficients::oscillating(field, 1.0 / 64.0)),
                    ConfigError);
    // h = eps/16 exactly is allowed
    CHECK_NOTHROW(assemble_parts(dom, Coefficients::oscillating(field, 1.0 / 16.0)));
}

TEST_CASE("shifts on the positive real axis are rejected") {
    CHECK_THROWS_AS(shift(cplx(1.0, 0.0)), ConfigError);
}
