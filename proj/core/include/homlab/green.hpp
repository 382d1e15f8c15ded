#ifndef HOMLAB_GREEN_HPP
#define HOMLAB_GREEN_HPP

#include "homlab/fit.hpp"
#include "homlab/resolvent.hpp"

namespace homlab {

/// One column of the approximating Green function: the solution of
/// (L - lambda) G = e_gamma 1_{B(y,rho)} / |B(y,rho) cap Omega| with zero
/// Dirichlet data.
struct GreenColumn {
    GridField G;
    std::vector<Eigen::VectorXcd> grad;  // recovered nodal gradient
    std::array<double, 3> source{0, 0, 0};
    double rho = 0.0;
    int gamma = 0;
    SpectralParameter lambda;
    double residual = 0.0;
    std::string strategy;
};

/// Mollifier weights: nodal coefficients of the quadrature average over
/// B(y,rho) cap Omega, summing to one.  Shared by the column load and the
/// discrete point evaluation of Green columns.
std::vector<std::pair<long, double>> mollifier_weights(const DiscreteDomain& domain,
                                                       const double* y, double rho);

GreenColumn green_column(const DirichletSolver& solver, const double* y, double rho, int gamma);

/// rho-averaged point value of a field: the discrete realization of
/// pointwise evaluation for Green columns.
cplx mollified_value(const GridField& u, const double* x, double rho, int comp);

/// |G| and |grad G| sampled at log-spaced radii along the 2^d diagonal rays
/// from the source (averaged over rays; rays clipped to the domain).
struct RadialSamples {
    std::vector<double> r;
    std::vector<double> value_abs;
    std::vector<double> grad_abs;
};
RadialSamples sample_radial(const GreenColumn& col, int n_radii, double r_min, double r_max);

enum class DecayRegime { d3, d2log, grad, mixed };

struct DecayReport {
    DecayRegime regime;
    RateFit power;     // d3 / grad / mixed regimes
    LogLawFit loglaw;  // d2log regime
};

/// Fits the sampled decay against the kernel law of the regime:
///   d3:    |G| ~ r^{2-d} with a smooth additive offset removed,
///   d2log: |G| ~ C0 + C1 ln(R0/r),
///   grad:  |grad G| ~ r^{1-d},
///   mixed: finite-difference source derivative of grad ~ r^{-d}.
/// Requires the sampled radii to span at least `min_span` (default one
/// decade; the coarse d = 3 smoke geometry cannot reach a decade inside the
/// unit cube, so callers may lower the requirement explicitly).
DecayReport check_pointwise_decay(const RadialSamples& samples, DecayRegime regime, int d,
                                  double R0, double min_span = 10.0);

/// Quadrature of int |G| and int |grad G| over the domain.
struct IntegralBounds {
    double int_abs = 0.0;
    double int_abs_grad = 0.0;
};
IntegralBounds integral_bounds(const GreenColumn& col);

/// Green duality checked through two independent solves per pair:
/// rho-average of G_lambda(.,y) at x against the conjugate of the
/// rho-average of G_conj(lambda)(.,x) at y.
struct DualityPair {
    std::array<double, 3> x{0, 0, 0};
    std::array<double, 3> y{0, 0, 0};
};
struct DualityReport {
    double max_rel_err = 0.0;
    int pairs = 0;
};
DualityReport check_duality(std::shared_ptr<const DiscreteOperator> parts,
                            const SpectralParameter& lambda,
                            const std::vector<DualityPair>& pairs, double rho,
                            SolverOptions opts = {});

/// Convergence of Green columns G_eps -> G_0 on one fine grid:
/// value-level error max |G_eps - G_0| |x-y|^{d-1} fitted against eps, and
/// gradient-level error max |dG_eps - dPhi_eps dG_0| |x-y|^d fitted with the
/// ln(2 + 1/eps) correction divided out.
struct GreenConvergenceReport {
    std::vector<double> eps;
    std::vector<double> value_err;
    std::vector<double> grad_err;
    RateFit value_fit;
    RateFit grad_fit;  // log-corrected
};
GreenConvergenceReport green_convergence(std::shared_ptr<const DiscreteDomain> domain,
                                         const CoefficientField& field,
                                         const Eigen::MatrixXd& A_hat,
                                         const SpectralParameter& lambda,
                                         const std::vector<double>& eps_list, const double* y,
                                         double rho, const std::vector<std::array<double, 3>>& xs,
                                         SolverOptions opts = {}, int threads = 1);

} // namespace homlab

#endif
