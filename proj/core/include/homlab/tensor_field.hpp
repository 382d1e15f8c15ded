#ifndef HOMLAB_TENSOR_FIELD_HPP
#define HOMLAB_TENSOR_FIELD_HPP

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>

namespace homlab {

// A coefficient tensor value a_ij^{ab} is stored as a symmetric
// (d*m) x (d*m) matrix with row index (i,a) -> i*m+a and column
// (j,b) -> j*m+b.  The symmetry a_ij^{ab} = a_ji^{ba} is then plain
// matrix symmetry and ellipticity is a Rayleigh-quotient condition.
using TensorValue = Eigen::MatrixXd;

struct HolderData {
    double tau = 0.0;  // |A(x)-A(y)| <= tau |x-y|^nu
    double nu = 0.5;   // exponent in (0,1)
};

/// Periodic coefficient tensor A(y) on the unit torus [0,1)^d.
/// Immutable after construction; the sampler must be a pure function, so a
/// field can be shared freely across concurrent evaluations.
struct CoefficientField {
    int d = 2;           // space dimension, 2 or 3
    int m = 1;           // number of equations in the system
    double mu = 1.0;     // declared ellipticity constant
    std::string family;  // constant | laminate | trig | coupled-system | custom
    std::optional<HolderData> holder;

    // Writes the (d*m)x(d*m) tensor at the torus point y (y need not be
    // reduced; sampling reduces coordinates mod 1).
    std::function<void(const double* y, Eigen::Ref<TensorValue>)> sampler;

    int block_dim() const { return d * m; }

    // sample() reduces y into [0,1)^d and evaluates.  Total function.
    TensorValue sample(const double* y) const;
    TensorValue sample(std::initializer_list<double> y) const;

    // Mean of the m x m diagonal block per direction i over a coarse grid;
    // used by solvers to build constant-coefficient preconditioners.
    std::vector<Eigen::MatrixXd> mean_direction_blocks(int resolution = 16) const;
};

struct ValidationTolerances {
    double symmetry = 1e-12;
    double periodicity = 1e-12;
    double ellipticity_slack = 0.05;  // mu_low >= (1-slack)*mu etc.
};

struct ValidationReport {
    double symmetry_defect = 0.0;     // max |a_ij^{ab} - a_ji^{ba}|
    double mu_low = 0.0;              // min Rayleigh quotient seen
    double mu_high = 0.0;             // max Rayleigh quotient seen
    double periodicity_defect = 0.0;  // max wrap-around mismatch
    double holder_quotient = 0.0;     // max |A(x)-A(y)|/|x-y|^nu sampled
    bool symmetry_ok = false;
    bool ellipticity_ok = false;
    bool periodicity_ok = false;
    bool passed() const { return symmetry_ok && ellipticity_ok && periodicity_ok; }
};

/// Exhaustive scan over a resolution^d grid plus a fixed direction set
/// (canonical basis tensors and 64 seeded random unit tensors).  Reports
/// defects instead of aborting so callers can reject fields.
ValidationReport validate(const CoefficientField& field, int resolution,
                          const ValidationTolerances& tol = {},
                          unsigned seed = 0x5eedu);

/// Builtin families.  Throws ConfigError when parameters violate
/// ellipticity (e.g. trig with |alpha| >= c).
CoefficientField constant_field(int d, const Eigen::MatrixXd& tensor, int m = 1);
CoefficientField constant_scalar_field(int d, double value = 1.0);
CoefficientField laminate_field(int d, double base, double amplitude);
CoefficientField trig_field(int d, double c, double alpha);
CoefficientField coupled_system_field(int d, double c, double kappa);

} // namespace homlab

#endif
