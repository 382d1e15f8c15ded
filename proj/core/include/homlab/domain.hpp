#ifndef HOMLAB_DOMAIN_HPP
#define HOMLAB_DOMAIN_HPP

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace homlab {

using cplx = std::complex<double>;

/// Axis-aligned rectangle [0,L1]x[0,L2](x[0,L3]) with a uniform node grid,
/// n_k cells (n_k + 1 nodes) per axis.  Node indices are lexicographic,
/// x-fastest.
struct DiscreteDomain {
    int d = 2;
    std::array<double, 3> lengths{1.0, 1.0, 1.0};
    std::array<int, 3> n{0, 0, 0};  // cells per axis

    static std::shared_ptr<const DiscreteDomain> rectangle(int d,
                                                           std::array<double, 3> lengths,
                                                           std::array<int, 3> cells);

    double h(int axis) const { return lengths[axis] / n[axis]; }
    double h_max() const;
    int nodes_per_axis(int axis) const { return n[axis] + 1; }
    long num_nodes() const;
    long num_elements() const;
    long num_interior() const;
    double R0() const;  // Euclidean diagonal = diam

    long node(const int* ix) const;
    void node_coords(long idx, int* ix) const;
    void node_position(long idx, double* x) const;
    bool is_boundary(const int* ix) const;
    bool is_boundary(long idx) const;
    double delta(const double* x) const;  // distance to the boundary
    double delta_node(long idx) const;

    bool same_grid(const DiscreteDomain& other) const;
};

/// Complex nodal field with m components per node (node*m + component).
struct GridField {
    std::shared_ptr<const DiscreteDomain> domain;
    int m = 1;
    Eigen::VectorXcd values;
    // > 0 marks a solution of an oscillating operator at that scale; the
    // H^2 seminorm is refused for such fields.
    double oscillating_epsilon = 0.0;

    static GridField zero(std::shared_ptr<const DiscreteDomain> domain, int m);
    cplx at(long node, int comp) const { return values[node * m + comp]; }
    double abs_at(long node) const;  // |u(node)| over components
};

/// L^p norm by tensor Gauss quadrature of the Q1 interpolant (p < inf).
double lp_norm(const GridField& u, double p);
/// Nodal max of the pointwise modulus.
double linf_norm(const GridField& u);
/// W^{1,p} seminorm: quadrature of the Q1 element gradient.
double w1p_seminorm(const GridField& u, double p);
/// Full W^{1,p} norm: (|u|_p^p + |grad u|_p^p)^{1/p}.
double w1p_norm(const GridField& u, double p);
/// H^2 seminorm by second differences; refused for oscillating solutions.
double h2_seminorm(const GridField& u);

/// Element-constant gradients averaged to nodes with equal weights
/// (boundary nodes average their incident elements).  Returns d arrays of
/// size num_nodes*m.
std::vector<Eigen::VectorXcd> recover_gradient(const GridField& u);

/// L^p-type norms of a recovered (nodal) gradient, via quadrature of the
/// componentwise Q1 interpolant of the gradient field.
double lp_norm_of_gradient(const DiscreteDomain& domain, int m,
                           const std::vector<Eigen::VectorXcd>& grad, double p);
double linf_norm_of_gradient(const DiscreteDomain& domain, int m,
                             const std::vector<Eigen::VectorXcd>& grad);

/// Named-norm front end used by the CLI: tokens "l1" "l2" "l4" "linf",
/// "w1p:<p>", "h2".
std::map<std::string, double> norm_table(const GridField& u,
                                         const std::vector<std::string>& which);

/// Q1 interpolation of a nodal array at an arbitrary point (clamped to the
/// closed domain).
cplx interpolate_nodal(const DiscreteDomain& domain, int m, const Eigen::VectorXcd& nodal,
                       const double* x, int comp);
cplx interpolate(const GridField& u, const double* x, int comp);

} // namespace homlab

#endif
