#include "homlab/harness.hpp"

#include "homlab/errors.hpp"
#include "homlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace homlab {

namespace {

struct SweepContext {
    CoefficientField field;
    std::shared_ptr<const DiscreteDomain> domain;
    Eigen::MatrixXd A_hat;
    double R0 = 0.0;
    int m = 1;
};

SweepContext make_context(const ExperimentConfig& cfg, bool need_cell) {
    SweepContext ctx;
    ctx.field = cfg.make_field();
    ctx.m = ctx.field.m;
    ctx.domain = DiscreteDomain::rectangle(
        cfg.d, cfg.lengths, {cfg.n, cfg.n, cfg.d == 3 ? cfg.n : 0});
    ctx.R0 = ctx.domain->R0();
    if (need_cell) {
        UnitCellGrid cell(cfg.d, cfg.cell_N);
        CellSolveOptions copts;
        copts.threads = cfg.threads;
        auto cs = solve_correctors(ctx.field, cell, copts);
        ctx.A_hat = homogenize(ctx.field, cs);
    }
    return ctx;
}

double corrected_w1p_norm(const GridField& w, double p) {
    auto grad = recover_gradient(w);
    const double a = lp_norm(w, p);
    const double b = lp_norm_of_gradient(*w.domain, w.m, grad, p);
    return std::pow(std::pow(a, p) + std::pow(b, p), 1.0 / p);
}

// Shared engine for the L2/H1 and Lp convergence studies.
RateReport convergence_engine(const ExperimentConfig& cfg, const std::vector<double>& p_values,
                              bool l2h1_labels) {
    ExperimentConfig config = cfg;
    config.validate();
    SweepContext ctx = make_context(config, true);
    const int n_eps = static_cast<int>(config.epsilons.size());
    const int n_lam = static_cast<int>(config.lambdas.size());
    const int n_p = static_cast<int>(p_values.size());
    if (n_eps < 3) throw ConfigError("convergence study: need >= 3 epsilons to fit rates");

    SolverOptions sopts;
    auto parts0 =
        assemble_parts(ctx.domain, Coefficients::homogenized(ctx.A_hat, config.d, ctx.m));
    auto F = bump_source(*ctx.domain, ctx.m);

    std::vector<ResolventSolution> u0(n_lam);
    parallel_for(n_lam, config.threads, [&](int l) {
        DirichletSolver s0(parts0, config.lambda_at(config.lambdas[l], ctx.R0), sopts);
        u0[l] = solve_dirichlet(s0, RhsSpec::function(F));
    });

    // errs[(e * n_lam + l) * n_p + ip]: {lp, corrected w1p}
    std::vector<double> lp_err(static_cast<size_t>(n_eps) * n_lam * n_p, 0.0);
    std::vector<double> w1p_err(static_cast<size_t>(n_eps) * n_lam * n_p, 0.0);

    for (int e = 0; e < n_eps; ++e) {
        const double eps = config.epsilons[e];
        auto parts = assemble_parts(ctx.domain, Coefficients::oscillating(ctx.field, eps));
        auto phi = dirichlet_correctors(parts, sopts, config.threads);
        parallel_for(n_lam, config.threads, [&](int l) {
            DirichletSolver solver(parts, config.lambda_at(config.lambdas[l], ctx.R0), sopts);
            auto u = solve_dirichlet(solver, RhsSpec::function(F));
            GridField diff = u.u;
            diff.values -= u0[l].u.values;
            diff.oscillating_epsilon = eps;
            GridField w = diff;
            w.values -= operator_corrector_apply(phi, u0[l]).values;
            for (int ip = 0; ip < n_p; ++ip) {
                const size_t at = (static_cast<size_t>(e) * n_lam + l) * n_p + ip;
                lp_err[at] = lp_norm(diff, p_values[ip]);
                w1p_err[at] = corrected_w1p_norm(w, p_values[ip]);
            }
        });
    }

    RateReport rep;
    rep.study = l2h1_labels ? "l2h1" : "lp";
    const std::string lp_name = l2h1_labels ? "l2" : "lp";
    const std::string w1p_name = l2h1_labels ? "h1_corrected" : "w1p_corrected_log";
    for (int e = 0; e < n_eps; ++e)
        for (int l = 0; l < n_lam; ++l)
            for (int ip = 0; ip < n_p; ++ip) {
                const size_t at = (static_cast<size_t>(e) * n_lam + l) * n_p + ip;
                CellValue c;
                c.epsilon = config.epsilons[e];
                c.lambda = config.lambdas[l];
                c.p = p_values[ip];
                c.norm = lp_name;
                c.value = lp_err[at];
                rep.cells.push_back(c);
                c.norm = w1p_name;
                c.value = w1p_err[at];
                rep.cells.push_back(c);
            }

    rep.passed = true;
    for (int l = 0; l < n_lam; ++l)
        for (int ip = 0; ip < n_p; ++ip) {
            const double p = p_values[ip];
            std::vector<double> ev(n_eps), e1(n_eps), e2(n_eps);
            for (int e = 0; e < n_eps; ++e) {
                const size_t at = (static_cast<size_t>(e) * n_lam + l) * n_p + ip;
                ev[e] = config.epsilons[e];
                e1[e] = lp_err[at];
                e2[e] = w1p_err[at];
            }
            RateRow r1, r2;
            r1.lambda = r2.lambda = config.lambdas[l];
            r1.p = r2.p = p;
            r1.norm = lp_name;
            r2.norm = w1p_name;
            if (p == 2.0) {
                r1.window_lo = 0.85;
                r1.window_hi = 1.15;
                r2.window_lo = 0.8;
                r2.window_hi = 1.2;
            } else {
                r1.window_lo = 0.8;
                r1.window_hi = 1.2;
                r2.window_lo = 0.75;
                r2.window_hi = 1.25;
            }
            const double max_err = std::max(*std::max_element(e1.begin(), e1.end()),
                                            *std::max_element(e2.begin(), e2.end()));
            if (max_err <= 1e-8) {
                // constant coefficients: u_eps = u_0 up to solver accuracy
                r1.pass = r2.pass = true;
                r1.slope = r2.slope = 0.0;
                rep.notes.push_back("lambda row " + std::to_string(l) +
                                    ": errors below 1e-8, slopes reported as exact");
            } else {
                const RateFit f1 = fit_rate(ev, e1);
                const double q = 4.0 * std::abs(0.5 - 1.0 / p);
                const RateFit f2 = fit_rate(ev, e2, q, ctx.R0);
                r1.slope = f1.slope;
                r1.constant = f1.constant;
                r1.residual = f1.residual;
                r2.slope = f2.slope;
                r2.constant = f2.constant;
                r2.residual = f2.residual;
                r1.pass = r1.slope >= r1.window_lo && r1.slope <= r1.window_hi;
                r2.pass = r2.slope >= r2.window_lo && r2.slope <= r2.window_hi;
                // monotone refinement along a descending epsilon list
                for (int e = 0; e + 1 < n_eps; ++e)
                    if (config.epsilons[e] > config.epsilons[e + 1] && e1[e] <= e1[e + 1])
                        rep.notes.push_back("non-monotone " + lp_name + " errors in lambda row " +
                                            std::to_string(l));
            }
            rep.passed = rep.passed && r1.pass && r2.pass;
            rep.rates.push_back(r1);
            rep.rates.push_back(r2);
        }
    return rep;
}

struct RatioKey {
    double scale, angle, p;
};

const CalibrationRow* find_calibration(const std::vector<CalibrationRow>& rows,
                                       const RatioKey& key) {
    for (const auto& r : rows)
        if (std::abs(r.modulus_scale - key.scale) <= 1e-9 * std::max(1.0, key.scale) &&
            std::abs(r.angle - key.angle) <= 1e-9 && std::abs(r.p - key.p) <= 1e-12)
            return &r;
    return nullptr;
}

std::vector<CalibrationRow> read_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("calibration file not found: " + path);
    std::vector<CalibrationRow> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        std::istringstream ss(line);
        CalibrationRow r;
        char comma;
        ss >> r.modulus_scale >> comma >> r.angle >> comma >> r.p >> comma >> r.ratio_lp >>
            comma >> r.ratio_w1p;
        if (!ss) throw ConfigError("calibration file: bad row '" + line + "'");
        rows.push_back(r);
    }
    return rows;
}

} // namespace

CoefficientField ExperimentConfig::make_field() const {
    if (family == "laminate") return laminate_field(d, base, amplitude);
    if (family == "trig") return trig_field(d, trig_c, trig_alpha);
    if (family == "coupled-system") return coupled_system_field(d, coupled_c, coupled_kappa);
    if (family == "constant") return constant_scalar_field(d, constant_value);
    throw ConfigError("unknown coefficient family '" + family + "'");
}

SpectralParameter ExperimentConfig::lambda_at(const LambdaSpec& spec, double R0) const {
    if (spec.modulus_scale == 0.0) return SpectralParameter::make(cplx(0.0, 0.0), theta0);
    const double mod = spec.modulus_scale / (R0 * R0);
    return SpectralParameter::make(std::polar(mod, spec.angle), theta0);
}

void ExperimentConfig::validate() const {
    if (d != 2 && d != 3) throw ConfigError("config: d must be 2 or 3");
    if (n < 4) throw ConfigError("config: n must be >= 4");
    auto dom = DiscreteDomain::rectangle(d, lengths, {n, n, d == 3 ? n : 0});
    for (size_t i = 0; i < epsilons.size(); ++i) {
        const double eps = epsilons[i];
        if (eps <= 0.0) throw ConfigError("config: epsilons[" + std::to_string(i) + "] <= 0");
        if (dom->h_max() > eps / 16.0 * (1.0 + 1e-12))
            throw ConfigError("config: epsilons[" + std::to_string(i) +
                              "] violates the resolution rule h <= eps/16 (h = " +
                              std::to_string(dom->h_max()) + ")");
    }
    const double R0 = dom->R0();
    for (size_t i = 0; i < lambdas.size(); ++i) {
        if (lambdas[i].modulus_scale == 0.0) continue;
        const cplx lam = std::polar(lambdas[i].modulus_scale / (R0 * R0), lambdas[i].angle);
        if (!in_sector(lam, theta0))
            throw ConfigError("config: lambda.grid[" + std::to_string(i) +
                              "] lies outside Sigma_theta0");
    }
    for (double p : p_values)
        if (p <= 1.0 || std::isinf(p))
            throw ConfigError("config: p values must lie in (1, inf)");
}

RateReport run_l2_h1_study(const ExperimentConfig& config) {
    return convergence_engine(config, {2.0}, true);
}

RateReport run_lp_study(const ExperimentConfig& config, const std::vector<double>& p_values) {
    return convergence_engine(config, p_values, false);
}

std::vector<CalibrationRow> compute_calibration(const ExperimentConfig& cfg) {
    ExperimentConfig config = cfg;
    config.validate();
    SweepContext ctx = make_context(config, true);
    auto parts0 =
        assemble_parts(ctx.domain, Coefficients::homogenized(ctx.A_hat, config.d, ctx.m));
    auto F = bump_source(*ctx.domain, ctx.m);
    GridField F_nodal = GridField::zero(ctx.domain, ctx.m);
    {
        double x[3];
        std::vector<cplx> val(ctx.m);
        for (long i = 0; i < ctx.domain->num_nodes(); ++i) {
            ctx.domain->node_position(i, x);
            F(x, val.data());
            for (int c = 0; c < ctx.m; ++c) F_nodal.values[i * ctx.m + c] = val[c];
        }
    }

    std::vector<CalibrationRow> rows;
    for (const auto& spec : config.lambdas) {
        const auto lam = config.lambda_at(spec, ctx.R0);
        DirichletSolver solver(parts0, lam, SolverOptions{});
        auto u = solve_dirichlet(solver, RhsSpec::function(F));
        const double weight = 1.0 / (ctx.R0 * ctx.R0) + lam.modulus();
        const double c_lam = c_of(lam);
        for (double p : config.p_values) {
            CalibrationRow r;
            r.modulus_scale = spec.modulus_scale;
            r.angle = spec.angle;
            r.p = p;
            const double fp = lp_norm(F_nodal, p);
            r.ratio_lp = lp_norm(u.u, p) * weight / (c_lam * fp);
            r.ratio_w1p = w1p_seminorm(u.u, p) * std::sqrt(weight) / (c_lam * fp);
            rows.push_back(r);
        }
    }
    return rows;
}

RateReport run_uniformity_study(const ExperimentConfig& cfg) {
    ExperimentConfig config = cfg;
    config.validate();

    // precondition: >= 3 decades of |lambda| plus lambda = 0
    {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        bool has_zero = false;
        for (const auto& l : config.lambdas) {
            if (l.modulus_scale == 0.0)
                has_zero = true;
            else {
                lo = std::min(lo, l.modulus_scale);
                hi = std::max(hi, l.modulus_scale);
            }
        }
        if (!has_zero || hi / lo < 1000.0 * (1.0 - 1e-12))
            throw ConfigError(
                "uniformity study: lambda grid must span >= 3 decades and include 0");
    }

    SweepContext ctx = make_context(config, true);
    std::vector<CalibrationRow> baseline;
    if (!config.calibration_file.empty())
        baseline = read_calibration(config.calibration_file);
    else
        baseline = compute_calibration(config);

    auto F = bump_source(*ctx.domain, ctx.m);
    GridField F_nodal = GridField::zero(ctx.domain, ctx.m);
    {
        double x[3];
        std::vector<cplx> val(ctx.m);
        for (long i = 0; i < ctx.domain->num_nodes(); ++i) {
            ctx.domain->node_position(i, x);
            F(x, val.data());
            for (int c = 0; c < ctx.m; ++c) F_nodal.values[i * ctx.m + c] = val[c];
        }
    }

    const int n_eps = static_cast<int>(config.epsilons.size());
    const int n_lam = static_cast<int>(config.lambdas.size());
    const int n_p = static_cast<int>(config.p_values.size());
    std::vector<double> rlp(static_cast<size_t>(n_eps) * n_lam * n_p, 0.0);
    std::vector<double> rw1p(static_cast<size_t>(n_eps) * n_lam * n_p, 0.0);

    RateReport rep;
    rep.study = "uniformity";
    for (int e = 0; e < n_eps; ++e) {
        auto parts = assemble_parts(
            ctx.domain, Coefficients::oscillating(ctx.field, config.epsilons[e]));
        parallel_for(n_lam, config.threads, [&](int l) {
            const auto lam = config.lambda_at(config.lambdas[l], ctx.R0);
            DirichletSolver solver(parts, lam, SolverOptions{});
            auto u = solve_dirichlet(solver, RhsSpec::function(F));
            const double weight = 1.0 / (ctx.R0 * ctx.R0) + lam.modulus();
            const double c_lam = c_of(lam);
            for (int ip = 0; ip < n_p; ++ip) {
                const double p = config.p_values[ip];
                const auto* cal =
                    find_calibration(baseline, {config.lambdas[l].modulus_scale,
                                                config.lambdas[l].angle, p});
                if (!cal)
                    throw ConfigError("uniformity study: no calibration row for "
                                      "(modulus_scale, angle, p) = (" +
                                      std::to_string(config.lambdas[l].modulus_scale) + ", " +
                                      std::to_string(config.lambdas[l].angle) + ", " +
                                      std::to_string(p) + ")");
                const double fp = lp_norm(F_nodal, p);
                const size_t at = (static_cast<size_t>(e) * n_lam + l) * n_p + ip;
                rlp[at] = lp_norm(u.u, p) * weight / (c_lam * fp) / cal->ratio_lp;
                rw1p[at] = w1p_seminorm(u.u, p) * std::sqrt(weight) / (c_lam * fp) /
                           cal->ratio_w1p;
            }
        });
    }

    for (int e = 0; e < n_eps; ++e)
        for (int l = 0; l < n_lam; ++l)
            for (int ip = 0; ip < n_p; ++ip) {
                const size_t at = (static_cast<size_t>(e) * n_lam + l) * n_p + ip;
                CellValue c;
                c.epsilon = config.epsilons[e];
                c.lambda = config.lambdas[l];
                c.p = config.p_values[ip];
                c.norm = "ratio_lp";
                c.value = rlp[at];
                rep.cells.push_back(c);
                c.norm = "ratio_w1p";
                c.value = rw1p[at];
                rep.cells.push_back(c);
            }

    rep.passed = true;
    for (int ip = 0; ip < n_p; ++ip) {
        double lo1 = 1e300, hi1 = 0, lo2 = 1e300, hi2 = 0;
        int worst_cell = -1;
        for (int e = 0; e < n_eps; ++e)
            for (int l = 0; l < n_lam; ++l) {
                const size_t at = (static_cast<size_t>(e) * n_lam + l) * n_p + ip;
                if (rlp[at] > hi1) {
                    hi1 = rlp[at];
                    worst_cell = static_cast<int>(at);
                }
                lo1 = std::min(lo1, rlp[at]);
                hi2 = std::max(hi2, rw1p[at]);
                lo2 = std::min(lo2, rw1p[at]);
            }
        RateRow r1, r2;
        r1.p = r2.p = config.p_values[ip];
        r1.norm = "ratio_lp_spread";
        r2.norm = "ratio_w1p_spread";
        r1.slope = hi1 / lo1;
        r2.slope = hi2 / lo2;
        r1.window_lo = r2.window_lo = 1.0;
        r1.window_hi = r2.window_hi = 5.0;
        r1.pass = r1.slope <= 5.0;
        r2.pass = r2.slope <= 5.0;
        if (!r1.pass || !r2.pass)
            rep.notes.push_back("uniformity spread blow-up near cell index " +
                                std::to_string(worst_cell));
        rep.passed = rep.passed && r1.pass && r2.pass;
        rep.rates.push_back(r1);
        rep.rates.push_back(r2);
    }
    return rep;
}

} // namespace homlab
