#ifndef HOMLAB_RESOLVENT_HPP
#define HOMLAB_RESOLVENT_HPP

#include "homlab/solvers.hpp"

#include <functional>
#include <map>
#include <optional>

namespace homlab {

/// Right-hand side of (L - lambda)u = F + div(f): any combination of nodal
/// data, an analytic source, and an analytic flux.
struct RhsSpec {
    std::optional<Eigen::VectorXcd> F_nodal;              // size num_nodes*m
    std::function<void(const double*, cplx*)> F_fn;       // m components
    std::function<void(const double*, cplx*)> flux_fn;    // d*m components (i*m+a)

    static RhsSpec nodal(Eigen::VectorXcd F) {
        RhsSpec r;
        r.F_nodal = std::move(F);
        return r;
    }
    static RhsSpec function(std::function<void(const double*, cplx*)> F) {
        RhsSpec r;
        r.F_fn = std::move(F);
        return r;
    }
};

struct ResolventSolution {
    GridField u;                           // zero on the boundary
    std::vector<Eigen::VectorXcd> grad;    // recovered nodal gradient, d arrays
    double residual = 0.0;
    int iterations = 0;
    std::string strategy;
    std::map<std::string, double> norms;   // filled when requested
};

/// Solves (L - lambda)u = F + div(f) with zero Dirichlet data.
ResolventSolution solve_dirichlet(const DirichletSolver& solver, const RhsSpec& rhs,
                                  const std::vector<std::string>& norm_tokens = {});

/// Solves (L - lambda)u = 0 with u = g on the boundary (lifting + interior
/// solve).  g is a full-grid nodal vector; interior entries are ignored.
GridField solve_boundary_value(const DirichletSolver& solver, const Eigen::VectorXcd& g_full);

/// The matrix of Dirichlet correctors: L_eps(Phi_j^b) = 0, Phi_j^b = P_j^b
/// on the boundary, P_j^b = x_j delta^{ab}.
struct DirichletCorrectors {
    std::shared_ptr<const DiscreteDomain> domain;
    int m = 1;
    double epsilon = 0.0;
    std::vector<GridField> phi;                           // d*m columns
    std::vector<std::vector<Eigen::VectorXcd>> grad_phi;  // per column: d arrays
    std::vector<double> deviation_inf;                    // ||Phi - P||_inf per column
    double grad_sup = 0.0;                                // max ||grad Phi||_inf
};

DirichletCorrectors dirichlet_correctors(std::shared_ptr<const DiscreteDomain> domain,
                                         const CoefficientField& field, double epsilon,
                                         SolverOptions opts = {}, int threads = 1);

/// Same, reusing an already-assembled oscillating operator.
DirichletCorrectors dirichlet_correctors(std::shared_ptr<const DiscreteOperator> parts,
                                         SolverOptions opts = {}, int threads = 1);

/// Nodal boundary data for P_j^b on a domain (full-grid vector).
Eigen::VectorXcd linear_boundary_data(const DiscreteDomain& domain, int m, int j, int beta);

/// (Phi_{eps,j}^{ab} - P_j^{ab}) d_j u0^b per node, with the recovered
/// gradient of u0.  Errors on domain mismatch.
GridField operator_corrector_apply(const DirichletCorrectors& correctors,
                                   const ResolventSolution& u0);

/// Smooth bump source: prod_k sin^2(pi x_k / L_k) on each component.
std::function<void(const double*, cplx*)> bump_source(const DiscreteDomain& domain, int m);

} // namespace homlab

#endif
