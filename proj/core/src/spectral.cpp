#include "homlab/spectral.hpp"
#include "homlab/errors.hpp"

#include <cmath>
#include <sstream>

namespace homlab {

namespace {
constexpr double pi = 3.14159265358979323846;
}

double SpectralParameter::theta() const {
    double a = std::arg(value);  // (-pi, pi]
    if (a < 0.0) a += 2.0 * pi;
    return a;
}

SpectralParameter SpectralParameter::make(cplx lambda, double theta0) {
    if (theta0 <= 0.0 || theta0 >= pi / 2.0)
        throw ConfigError("SpectralParameter: theta0 must lie in (0, pi/2)");
    if (lambda.imag() == 0.0 && lambda.real() > 0.0)
        throw ConfigError("SpectralParameter: lambda on the positive real axis is excluded");
    SpectralParameter p;
    p.value = lambda;
    p.theta0 = theta0;
    return p;
}

double c_of(const SpectralParameter& p) {
    if (p.is_zero()) return 1.0;
    if (p.value.imag() == 0.0 && p.value.real() > 0.0)
        throw ConfigError("c_of: lambda on the positive real axis");
    const double th = p.theta();
    if (th >= pi / 2.0 && th <= 3.0 * pi / 2.0) return 1.0;
    return 1.0 / std::abs(std::sin(th));
}

bool in_sector(cplx lambda, double theta0) {
    if (lambda == cplx(0.0, 0.0)) return false;
    const double dist = std::abs(std::arg(lambda));  // angle to the positive real axis
    return dist > pi - theta0;
}

std::vector<SpectralParameter> sweep_grid(const std::vector<double>& moduli,
                                          const std::vector<double>& angles,
                                          double theta0) {
    std::vector<SpectralParameter> out;
    std::ostringstream offenders;
    bool bad = false;
    for (double r : moduli) {
        if (r < 0.0) {
            offenders << " modulus " << r << " < 0;";
            bad = true;
            continue;
        }
        if (r == 0.0) {
            out.push_back(SpectralParameter::make(cplx(0.0, 0.0), theta0));
            continue;
        }
        for (double a : angles) {
            const cplx lam = std::polar(r, a);
            if (!in_sector(lam, theta0)) {
                offenders << " (modulus " << r << ", angle " << a << ");";
                bad = true;
                continue;
            }
            out.push_back(SpectralParameter::make(lam, theta0));
        }
    }
    if (bad)
        throw ConfigError("sweep_grid: shifts outside Sigma_theta0:" + offenders.str());
    return out;
}

} // namespace homlab
