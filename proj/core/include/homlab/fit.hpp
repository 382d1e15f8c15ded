#ifndef HOMLAB_FIT_HPP
#define HOMLAB_FIT_HPP

#include <vector>

namespace homlab {

/// Result of a least-squares fit in log-log coordinates.
struct RateFit {
    double slope = 0.0;
    double constant = 0.0;  // exp(intercept)
    double residual = 0.0;  // RMS residual in log space
};

/// Least squares on (ln eps, ln(error / correction)) with
/// correction = (ln(eps^{-1} R0 + 2))^q when q != 0.
/// Requires >= 3 points and positive errors.
RateFit fit_rate(const std::vector<double>& eps, const std::vector<double>& errors,
                 double log_correction_q = 0.0, double R0 = 1.0);

/// Plain power-law fit v ~ C r^p in log-log coordinates.
RateFit fit_power_law(const std::vector<double>& r, const std::vector<double>& v);

/// Power fit with a smooth additive offset removed first: v ~ A r^p + B,
/// with (A, B) estimated by linear least squares at the model exponent and
/// the reported slope computed from the offset-corrected data.  This is the
/// d >= 3 kernel fit, where the harmonic boundary correction enters as a
/// smooth additive part.
RateFit fit_power_law_with_offset(const std::vector<double>& r, const std::vector<double>& v,
                                  double model_exponent);

/// Log-law fit v ~ offset + slope * ln(R0/r).  relative_residual is the RMS
/// fit residual divided by the mean of |v|.
struct LogLawFit {
    double offset = 0.0;
    double slope = 0.0;
    double relative_residual = 0.0;
};
LogLawFit fit_log_law(const std::vector<double>& r, const std::vector<double>& v, double R0);

} // namespace homlab

#endif
