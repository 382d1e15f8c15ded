#ifndef HOMLAB_SPECTRAL_HPP
#define HOMLAB_SPECTRAL_HPP

#include <complex>
#include <vector>

namespace homlab {

using cplx = std::complex<double>;

/// A complex resolvent shift lambda together with its polar data and the
/// sector aperture theta0.  lambda must avoid the positive real axis.
struct SpectralParameter {
    cplx value{0.0, 0.0};
    double theta0 = 0.78539816339744831;  // pi/4 default aperture

    double modulus() const { return std::abs(value); }
    // Argument normalized to [0, 2pi); meaningless when value == 0.
    double theta() const;
    bool is_zero() const { return value == cplx(0.0, 0.0); }

    static SpectralParameter make(cplx lambda, double theta0);
};

/// The constant c(lambda, theta): 1 on the left half plane (including the
/// imaginary axis) and at lambda = 0, and |sin theta|^{-1} on the right
/// half plane off the positive real axis.  Throws ConfigError for lambda
/// on the positive real axis.
double c_of(const SpectralParameter& p);

/// True iff |lambda| > 0 and the angular distance between lambda and the
/// positive real axis exceeds pi - theta0.  lambda = 0 is handled by
/// callers that accept the closed set Sigma_theta0 union {0}.
bool in_sector(cplx lambda, double theta0);

/// Deterministic moduli-major product grid of shifts.  Every (modulus,
/// angle) pair must lie in the sector or at the origin; offenders are
/// collected into one ConfigError message.
std::vector<SpectralParameter> sweep_grid(const std::vector<double>& moduli,
                                          const std::vector<double>& angles,
                                          double theta0);

} // namespace homlab

#endif
