#include "homlab/resolvent.hpp"

#include "homlab/errors.hpp"
#include "homlab/parallel.hpp"

#include <cmath>

namespace homlab {

ResolventSolution solve_dirichlet(const DirichletSolver& solver, const RhsSpec& rhs,
                                  const std::vector<std::string>& norm_tokens) {
    const auto& parts = *solver.parts();
    Eigen::VectorXcd load = Eigen::VectorXcd::Zero(parts.n_interior_dof());
    if (rhs.F_nodal) load += load_from_nodal(parts, *rhs.F_nodal);
    if (rhs.F_fn) load += load_from_function(parts, rhs.F_fn);
    if (rhs.flux_fn) load += load_from_flux_function(parts, rhs.flux_fn);

    ResolventSolution sol;
    SolveInfo info;
    Eigen::VectorXcd u_int = solver.solve(load, &info);
    sol.u = scatter_to_field(parts, u_int);
    sol.grad = recover_gradient(sol.u);
    sol.residual = info.rel_residual;
    sol.iterations = info.iterations;
    sol.strategy = info.strategy;
    if (!norm_tokens.empty()) sol.norms = norm_table(sol.u, norm_tokens);
    return sol;
}

GridField solve_boundary_value(const DirichletSolver& solver, const Eigen::VectorXcd& g_full) {
    const auto& parts = *solver.parts();
    if (g_full.size() != parts.domain->num_nodes() * parts.m)
        throw ConfigError("solve_boundary_value: boundary data has wrong size");
    // keep only boundary entries of g
    Eigen::VectorXcd g = g_full;
    for (long node : parts.node_of_interior)
        for (int c = 0; c < parts.m; ++c) g[node * parts.m + c] = cplx(0.0, 0.0);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(parts.n_interior_dof());
    apply_boundary_lifting(parts, solver.lambda(), g, rhs);
    Eigen::VectorXcd u_int = solver.solve(rhs);
    return scatter_to_field(parts, u_int, &g);
}

Eigen::VectorXcd linear_boundary_data(const DiscreteDomain& dom, int m, int j, int beta) {
    Eigen::VectorXcd g = Eigen::VectorXcd::Zero(dom.num_nodes() * m);
    double x[3];
    for (long idx = 0; idx < dom.num_nodes(); ++idx) {
        dom.node_position(idx, x);
        g[idx * m + beta] = x[j];
    }
    return g;
}

DirichletCorrectors dirichlet_correctors(std::shared_ptr<const DiscreteDomain> domain,
                                         const CoefficientField& field, double epsilon,
                                         SolverOptions opts, int threads) {
    auto parts = assemble_parts(domain, Coefficients::oscillating(field, epsilon));
    return dirichlet_correctors(parts, opts, threads);
}

DirichletCorrectors dirichlet_correctors(std::shared_ptr<const DiscreteOperator> parts,
                                         SolverOptions opts, int threads) {
    if (!parts->coeffs.is_oscillating())
        throw ConfigError("dirichlet_correctors: needs an oscillating operator");
    auto domain = parts->domain;
    const int d = domain->d, m = parts->m;
    const double epsilon = parts->coeffs.epsilon;
    const auto lambda0 = SpectralParameter::make(cplx(0.0, 0.0), 0.5);
    DirichletSolver solver(parts, lambda0, opts);

    DirichletCorrectors out;
    out.domain = domain;
    out.m = m;
    out.epsilon = epsilon;
    out.phi.resize(d * m);
    out.grad_phi.resize(d * m);
    out.deviation_inf.assign(d * m, 0.0);

    std::vector<double> grad_sups(d * m, 0.0);
    parallel_for(d * m, threads, [&](int col) {
        const int j = col / m, beta = col % m;
        const Eigen::VectorXcd g = linear_boundary_data(*domain, m, j, beta);
        GridField phi = solve_boundary_value(solver, g);
        GridField dev = phi;
        double x[3];
        for (long idx = 0; idx < domain->num_nodes(); ++idx) {
            domain->node_position(idx, x);
            dev.values[idx * m + beta] -= x[j];
        }
        out.deviation_inf[col] = linf_norm(dev);
        out.grad_phi[col] = recover_gradient(phi);
        grad_sups[col] = linf_norm_of_gradient(*domain, m, out.grad_phi[col]);
        out.phi[col] = std::move(phi);
    });
    out.grad_sup = *std::max_element(grad_sups.begin(), grad_sups.end());
    return out;
}

GridField operator_corrector_apply(const DirichletCorrectors& correctors,
                                   const ResolventSolution& u0) {
    const auto& dom = *correctors.domain;
    if (!u0.u.domain->same_grid(dom))
        throw ConfigError("operator_corrector_apply: domain mismatch");
    const int d = dom.d, m = correctors.m;
    if (u0.u.m != m) throw ConfigError("operator_corrector_apply: component mismatch");

    GridField out = GridField::zero(correctors.domain, m);
    double x[3];
    for (long idx = 0; idx < dom.num_nodes(); ++idx) {
        dom.node_position(idx, x);
        for (int al = 0; al < m; ++al) {
            cplx acc(0.0, 0.0);
            for (int j = 0; j < d; ++j)
                for (int be = 0; be < m; ++be) {
                    const auto& phi = correctors.phi[j * m + be];
                    cplx dev = phi.values[idx * m + al];
                    if (al == be) dev -= x[j];
                    acc += dev * u0.grad[j][idx * m + be];
                }
            out.values[idx * m + al] = acc;
        }
    }
    return out;
}

std::function<void(const double*, cplx*)> bump_source(const DiscreteDomain& dom, int m) {
    const int d = dom.d;
    std::array<double, 3> L = dom.lengths;
    return [d, m, L](const double* x, cplx* out) {
        double v = 1.0;
        for (int k = 0; k < d; ++k) {
            const double s = std::sin(3.14159265358979323846 * x[k] / L[k]);
            v *= s * s;
        }
        for (int c = 0; c < m; ++c) out[c] = v;
    };
}

} // namespace homlab
