#ifndef HOMLAB_CELL_HPP
#define HOMLAB_CELL_HPP

#include "homlab/tensor_field.hpp"

#include <Eigen/Dense>
#include <vector>

namespace homlab {

/// Structured node grid on the unit torus Y = [0,1)^d with periodic wrap.
struct UnitCellGrid {
    int d = 2;
    int N = 64;  // nodes (= elements) per axis; even and >= 8 for FFT symmetry

    UnitCellGrid() = default;
    UnitCellGrid(int d_, int N_);

    double h() const { return 1.0 / N; }
    long num_nodes() const;
    // Lexicographic node index, x-fastest, with periodic wrap.
    long node(const int* ix) const;
};

struct CellSolveOptions {
    double tol = 1e-10;   // relative algebraic residual
    int max_iter = 10000;
    int threads = 1;
};

/// Correctors chi_j^b, homogenized tensor, flux density b and flux
/// correctors F on one cell grid.  Nodal arrays are real and indexed
/// node*m + component.  Pair indices flatten as (i,a) -> i*m+a.
struct CorrectorSet {
    UnitCellGrid grid;
    int m = 1;

    // chi[j*m+b] is the nodal m-vector field chi_j^b.
    std::vector<Eigen::VectorXd> chi;
    // Nodal gradients d_k chi_j^b, produced by the element-local derivative
    // operators of the assembly averaged to nodes: grad_chi[j*m+b][k].
    std::vector<std::vector<Eigen::VectorXd>> grad_chi;

    Eigen::MatrixXd A_hat;  // homogenized tensor, (d*m) x (d*m)

    // Flux density b_ij^{ab}: b[(i*m+a)*(d*m) + j*m+b], nodal.
    std::vector<Eigen::VectorXd> b;
    // Flux correctors F_kij^{ab}: F[k][(i*m+a)*(d*m) + j*m+b], nodal,
    // antisymmetric in (k,i) exactly by construction.
    std::vector<std::vector<Eigen::VectorXd>> F;

    std::vector<double> solve_residuals;  // final relative residual per (j,b)
    std::vector<double> energy_defects;   // |chi'K chi - chi'r| / |chi'K chi|
    double flux_mean_max = 0.0;           // max |mean(b_ij^{ab})|
    double flux_div_residual = 0.0;       // sup |d_k F_kij - (b_ij - mean)|
};

/// Solves the corrector cell problems -div(A grad chi_j^b) = div(A grad P_j^b)
/// on the torus with Q1 elements and 2^d-point Gauss quadrature.  The
/// singular mean mode is projected out of the conjugate-gradient iterates.
CorrectorSet solve_correctors(const CoefficientField& field, const UnitCellGrid& grid,
                              const CellSolveOptions& opts = {});

/// Cell average of a_ij^{ab} + a_ik^{ag} d_k chi_j^{gb} with the assembly
/// quadrature.  Throws InconsistencyError if the result is asymmetric
/// beyond 1e-8 (symmetry is checked, never enforced).
Eigen::MatrixXd homogenize(const CoefficientField& field, const CorrectorSet& correctors);

/// Flux density b_ij^{ab} = a^_ij^{ab} - a_ij^{ab} - a_ik^{ag} d_k chi_j^{gb}
/// evaluated with the assembly quadrature per element and averaged to nodes,
/// so the nodal mean telescopes to the quadrature mean (zero to roundoff).
std::vector<Eigen::VectorXd> flux_density(const CoefficientField& field,
                                          const CorrectorSet& correctors,
                                          const Eigen::MatrixXd& A_hat);

struct FluxCorrectorResult {
    std::vector<std::vector<Eigen::VectorXd>> F;  // F[k][(i,a)(j,b)]
    double div_residual = 0.0;  // sup_nodes |d_k F_kij - (b_ij - mean b_ij)|
};

/// Solves laplace(f_ij) = b_ij on the torus by FFT with spectral
/// derivatives and forms F_kij = d_k f_ij - d_i f_kj.  Requires
/// |mean(b_ij)| <= mean_tol for every component.
FluxCorrectorResult solve_flux_correctors(const std::vector<Eigen::VectorXd>& b,
                                          const UnitCellGrid& grid, int m,
                                          double mean_tol = 1e-8);

/// Convenience: correctors + homogenize + flux density + flux correctors.
CorrectorSet build_cell_quantities(const CoefficientField& field, const UnitCellGrid& grid,
                                   const CellSolveOptions& opts = {});

/// Extremal Rayleigh quotients of a symmetric tensor block over canonical
/// and 64 seeded random unit directions.
std::pair<double, double> rayleigh_range(const Eigen::MatrixXd& tensor, unsigned seed = 0x5eedu);

} // namespace homlab

#endif
