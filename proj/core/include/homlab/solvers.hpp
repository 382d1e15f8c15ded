#ifndef HOMLAB_SOLVERS_HPP
#define HOMLAB_SOLVERS_HPP

#include "homlab/assembly.hpp"

#include <memory>
#include <string>

namespace homlab {

struct SolverOptions {
    double tol = 1e-11;            // relative residual for iterative solves
    int max_iter = 10000;
    long direct_threshold = 300000;  // SparseLU cap on interior dofs (d = 2)
    enum class Mode { automatic, dst_direct, sparse_lu, krylov } mode = Mode::automatic;
};

struct SolveInfo {
    double rel_residual = 0.0;
    int iterations = 0;
    std::string strategy;
};

/// One interface over three strategies for (K - lambda M) u = rhs:
///   - dst_direct: exact sine-transform diagonalization; applies to constant
///     coefficients with no cross-direction blocks (the homogenized tensors
///     of all builtin families qualify),
///   - sparse_lu: complex sparse direct factorization, d = 2 up to the
///     threshold (3D fill-in rules it out),
///   - krylov: BiCGSTAB preconditioned by the dst_direct solve of the
///     quadrature-mean constant coefficient at the same shift.
/// Instances are immutable after construction; solve() is const and safe to
/// call from concurrent threads.
class DirichletSolver {
public:
    DirichletSolver(std::shared_ptr<const DiscreteOperator> parts, SpectralParameter lambda,
                    SolverOptions opts = {});
    ~DirichletSolver();
    DirichletSolver(DirichletSolver&&) noexcept;

    Eigen::VectorXcd solve(const Eigen::VectorXcd& rhs_interior, SolveInfo* info = nullptr) const;
    const std::string& strategy() const;
    const SpectralParameter& lambda() const;
    const std::shared_ptr<const DiscreteOperator>& parts() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace homlab

#endif
