#ifndef HOMLAB_HARNESS_HPP
#define HOMLAB_HARNESS_HPP

#include "homlab/cell.hpp"
#include "homlab/fit.hpp"
#include "homlab/resolvent.hpp"

#include <string>
#include <vector>

namespace homlab {

/// A shift declared as (modulus_scale, angle): modulus = scale / R0^2, so
/// sweeps are scale-aware.  scale = 0 means lambda = 0.
struct LambdaSpec {
    double modulus_scale = 0.0;
    double angle = 3.14159265358979323846;
};

struct ExperimentConfig {
    // coefficient family
    std::string family = "laminate";
    int d = 2;
    double base = 2.0, amplitude = 1.0;      // laminate
    double trig_c = 2.0, trig_alpha = 0.5;   // trig
    double coupled_c = 2.0, coupled_kappa = 0.5;
    double constant_value = 1.0;

    // domain and grids
    std::array<double, 3> lengths{1.0, 1.0, 1.0};
    int n = 256;       // cells per axis
    int cell_N = 256;  // unit-cell grid for the homogenized tensor

    // sweep
    std::string study = "l2h1";  // l2h1 | lp | uniformity
    std::vector<double> epsilons;
    std::vector<LambdaSpec> lambdas;
    double theta0 = 0.78539816339744831;
    std::vector<double> p_values{2.0};
    std::string rhs = "bump";
    unsigned long seed = 0;
    int threads = 1;

    // uniformity study: stored per-(lambda,p) baseline; empty = compute the
    // homogenized baseline live and (optionally) emit it
    std::string calibration_file;

    CoefficientField make_field() const;
    SpectralParameter lambda_at(const LambdaSpec& spec, double R0) const;
    void validate() const;  // resolution rule, sector membership
};

struct CellValue {
    double epsilon = 0.0;
    LambdaSpec lambda;
    double p = 0.0;
    std::string norm;
    double value = 0.0;
    bool failed = false;
    std::string error;
};

struct RateRow {
    LambdaSpec lambda;
    double p = 0.0;
    std::string norm;
    double slope = 0.0;
    double constant = 0.0;
    double residual = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    bool pass = false;
};

struct RateReport {
    std::string study;
    std::vector<CellValue> cells;
    std::vector<RateRow> rates;
    std::vector<std::string> notes;
    bool passed = false;
};

/// Theorem-1.1 study: L2 error and corrected-H1 error of u_eps against u_0
/// with the operator corrector, fitted per lambda row.
RateReport run_l2_h1_study(const ExperimentConfig& config);

/// Theorem-1.3/1.4 study: L^p errors (target slope 1) and corrected W^{1,p}
/// errors with the log correction divided out.  p = 2 cells coincide with
/// run_l2_h1_study by construction (same computation path).
RateReport run_lp_study(const ExperimentConfig& config, const std::vector<double>& p_values);

/// Theorem-1.2 study: normalized resolvent ratios against the calibrated
/// homogenized baseline; asserts max/min spread <= 5 per p across the whole
/// (eps, lambda) grid.
RateReport run_uniformity_study(const ExperimentConfig& config);

/// Stored calibration row for the uniformity baseline.
struct CalibrationRow {
    double modulus_scale = 0.0;
    double angle = 0.0;
    double p = 0.0;
    double ratio_lp = 0.0;   // ||u0||_p (R0^-2+|l|) / (c ||F||_p)
    double ratio_w1p = 0.0;  // ||grad u0||_p (R0^-2+|l|)^1/2 / (c ||F||_p)
};
std::vector<CalibrationRow> compute_calibration(const ExperimentConfig& config);

} // namespace homlab

#endif
