#ifndef HOMLAB_ASSEMBLY_HPP
#define HOMLAB_ASSEMBLY_HPP

#include "homlab/domain.hpp"
#include "homlab/spectral.hpp"
#include "homlab/tensor_field.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <memory>

namespace homlab {

/// Which operator to discretize: A(x/eps) for eps > 0, or a constant
/// (typically homogenized) tensor.
struct Coefficients {
    // Oscillating case: a copy of the field plus the scale.
    std::optional<CoefficientField> field;
    double epsilon = 0.0;
    // Constant case: the (d*m)x(d*m) tensor.
    Eigen::MatrixXd constant_tensor;
    int m = 1;

    static Coefficients oscillating(const CoefficientField& f, double eps);
    static Coefficients homogenized(const Eigen::MatrixXd& tensor, int d, int m = 1);
    bool is_oscillating() const { return field.has_value(); }
};

/// Q1 stiffness and mass matrices on a rectangle with Dirichlet elimination:
/// interior-interior blocks drive solves, interior-times-full blocks carry
/// boundary lifting.  lambda enters later as K - lambda*M.
struct DiscreteOperator {
    std::shared_ptr<const DiscreteDomain> domain;
    Coefficients coeffs;
    int m = 1;

    Eigen::SparseMatrix<double, Eigen::RowMajor> K_ii, M_ii;  // interior x interior
    Eigen::SparseMatrix<double, Eigen::RowMajor> K_ib, M_ib;  // interior x all-dof (boundary cols)

    std::vector<long> interior_of_node;  // -1 for boundary nodes
    std::vector<long> node_of_interior;  // x-fastest lexicographic

    // Quadrature-mean m x m coefficient block per direction; feeds the
    // constant-coefficient spectral preconditioner.
    std::vector<Eigen::MatrixXd> gbar;
    // Constant coefficient with no cross-direction blocks: the tensor
    // 2-point Gauss stiffness separates per axis and the sine transform
    // solves it exactly.
    bool separable_constant = false;
    std::vector<Eigen::MatrixXd> const_blocks;

    long n_interior_dof() const { return static_cast<long>(node_of_interior.size()) * m; }
};

/// Assembles K and M.  Enforces the resolution rule h <= eps/16 on every
/// axis for oscillating coefficients.
std::shared_ptr<const DiscreteOperator> assemble_parts(
    std::shared_ptr<const DiscreteDomain> domain, const Coefficients& coeffs);

/// The shifted system K - lambda*M acting on interior dofs.
struct ShiftedOperator {
    std::shared_ptr<const DiscreteOperator> parts;
    SpectralParameter lambda;

    void apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const;
    Eigen::SparseMatrix<cplx> materialize() const;  // interior system, for direct solves/tests
};

/// Spec-facing constructor: checks lambda not in (0,inf) and the resolution
/// rule, assembles both matrices.
ShiftedOperator assemble_operator(std::shared_ptr<const DiscreteDomain> domain,
                                  const Coefficients& coeffs, const SpectralParameter& lambda);

// --- Load vectors (interior dofs) -----------------------------------------

/// Consistent load for nodal data F: (M F) restricted to interior rows.
/// This is exactly the discrete resolvent pairing R(lambda) = (K-lM)^{-1} M.
Eigen::VectorXcd load_from_nodal(const DiscreteOperator& op, const Eigen::VectorXcd& F_full);

/// Quadrature load for an analytic right-hand side F(x) (m components).
Eigen::VectorXcd load_from_function(
    const DiscreteOperator& op, const std::function<void(const double*, cplx*)>& F);

/// Flux load for div(f) data: subtracts int f_i^a d_i phi (f has d*m
/// components, index i*m+a).
Eigen::VectorXcd load_from_flux_function(
    const DiscreteOperator& op, const std::function<void(const double*, cplx*)>& f);

/// Boundary lifting: rhs -= (K_ib - lambda M_ib) g for full-grid nodal g
/// (interior entries of g are ignored).
void apply_boundary_lifting(const DiscreteOperator& op, const SpectralParameter& lambda,
                            const Eigen::VectorXcd& g_full, Eigen::VectorXcd& rhs);

/// Scatters an interior solution into a full-grid field (boundary = g or 0).
GridField scatter_to_field(const DiscreteOperator& op, const Eigen::VectorXcd& u_interior,
                           const Eigen::VectorXcd* g_full = nullptr);

/// int A grad(u) . conj(grad(v)) - lambda int u . conj(v) by element
/// quadrature; an independent evaluation path from the assembled matrices.
cplx bilinear_form(const DiscreteDomain& domain, const Coefficients& coeffs,
                   const SpectralParameter& lambda, const GridField& u, const GridField& v);

} // namespace homlab

#endif
