#include "homlab/fit.hpp"

#include "homlab/errors.hpp"

#include <cmath>

namespace homlab {

namespace {

// Simple linear least squares y = a + b x; returns (a, b, rms residual).
struct LinFit {
    double a, b, rms;
};

LinFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    const double b = (n * sxy - sx * sy) / det;
    const double a = (sy - b * sx) / n;
    double ss = 0;
    for (size_t i = 0; i < n; ++i) {
        const double r = y[i] - (a + b * x[i]);
        ss += r * r;
    }
    return {a, b, std::sqrt(ss / n)};
}

} // namespace

RateFit fit_rate(const std::vector<double>& eps, const std::vector<double>& errors,
                 double log_correction_q, double R0) {
    if (eps.size() != errors.size() || eps.size() < 3)
        throw ConfigError("fit_rate: need >= 3 matching (eps, error) points");
    std::vector<double> lx(eps.size()), ly(eps.size());
    for (size_t i = 0; i < eps.size(); ++i) {
        if (errors[i] <= 0.0) throw ConfigError("fit_rate: errors must be positive");
        if (eps[i] <= 0.0) throw ConfigError("fit_rate: eps must be positive");
        double corr = 1.0;
        if (log_correction_q != 0.0)
            corr = std::pow(std::log(R0 / eps[i] + 2.0), log_correction_q);
        lx[i] = std::log(eps[i]);
        ly[i] = std::log(errors[i] / corr);
    }
    const LinFit f = linear_fit(lx, ly);
    return {f.b, std::exp(f.a), f.rms};
}

RateFit fit_power_law(const std::vector<double>& r, const std::vector<double>& v) {
    if (r.size() != v.size() || r.size() < 2)
        throw ConfigError("fit_power_law: need >= 2 matching points");
    std::vector<double> lx(r.size()), ly(r.size());
    for (size_t i = 0; i < r.size(); ++i) {
        if (r[i] <= 0.0 || v[i] <= 0.0)
            throw ConfigError("fit_power_law: data must be positive");
        lx[i] = std::log(r[i]);
        ly[i] = std::log(v[i]);
    }
    const LinFit f = linear_fit(lx, ly);
    return {f.b, std::exp(f.a), f.rms};
}

RateFit fit_power_law_with_offset(const std::vector<double>& r, const std::vector<double>& v,
                                  double model_exponent) {
    if (r.size() != v.size() || r.size() < 3)
        throw ConfigError("fit_power_law_with_offset: need >= 3 points");
    // linear LS in {r^p, 1}
    double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
    for (size_t i = 0; i < r.size(); ++i) {
        const double basis = std::pow(r[i], model_exponent);
        s11 += basis * basis;
        s12 += basis;
        s22 += 1.0;
        b1 += basis * v[i];
        b2 += v[i];
    }
    const double det = s11 * s22 - s12 * s12;
    const double A = (b1 * s22 - b2 * s12) / det;
    const double B = (s11 * b2 - s12 * b1) / det;
    std::vector<double> rr, vv;
    for (size_t i = 0; i < r.size(); ++i) {
        const double corrected = v[i] - B;
        if (corrected > 0.0 && A > 0.0) {
            rr.push_back(r[i]);
            vv.push_back(corrected);
        }
    }
    if (rr.size() < 2)
        throw ConfigError("fit_power_law_with_offset: offset removal left too few points");
    return fit_power_law(rr, vv);
}

LogLawFit fit_log_law(const std::vector<double>& r, const std::vector<double>& v, double R0) {
    if (r.size() != v.size() || r.size() < 3)
        throw ConfigError("fit_log_law: need >= 3 matching points");
    std::vector<double> lx(r.size());
    double mean_abs = 0.0;
    for (size_t i = 0; i < r.size(); ++i) {
        if (r[i] <= 0.0) throw ConfigError("fit_log_law: radii must be positive");
        lx[i] = std::log(R0 / r[i]);
        mean_abs += std::abs(v[i]);
    }
    mean_abs /= static_cast<double>(r.size());
    const LinFit f = linear_fit(lx, v);
    LogLawFit out;
    out.offset = f.a;
    out.slope = f.b;
    out.relative_residual = mean_abs > 0.0 ? f.rms / mean_abs : 0.0;
    return out;
}

} // namespace homlab
