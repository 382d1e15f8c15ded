// homlab: numerical laboratory for periodic homogenization of shifted
// elliptic systems.  Subcommands: validate, cell, homogenize, resolve,
// green, sweep, report.

#include <CLI11.hpp>
#include <json.hpp>

#include "homlab/cell.hpp"
#include "homlab/config.hpp"
#include "homlab/errors.hpp"
#include "homlab/green.hpp"
#include "homlab/parallel.hpp"
#include "homlab/table_io.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace homlab;

namespace {

constexpr double pi = 3.14159265358979323846;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    int threads = 0;
    bool verbose = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "configuration file")->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--threads", args.threads, "worker threads (0 = hardware)");
    cmd->add_flag("--verbose", args.verbose, "chatty progress output");
}

fs::path ensure_out(const CommonArgs& args) {
    fs::path dir(args.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec && !fs::exists(dir)) throw ConfigError("cannot create output directory " + args.out_dir);
    return dir;
}

CoefficientField field_from(ConfigReader& r) {
    ExperimentConfig probe;
    probe.family = r.get_string("field", "family", probe.family);
    probe.d = static_cast<int>(r.get_int("field", "d", probe.d));
    probe.base = r.get_double("field", "base", probe.base);
    probe.amplitude = r.get_double("field", "amplitude", probe.amplitude);
    probe.trig_c = r.get_double("field", "c", probe.trig_c);
    probe.trig_alpha = r.get_double("field", "alpha", probe.trig_alpha);
    probe.coupled_c = r.get_double("field", "coupled_c", probe.coupled_c);
    probe.coupled_kappa = r.get_double("field", "coupled_kappa", probe.coupled_kappa);
    probe.constant_value = r.get_double("field", "value", probe.constant_value);
    return probe.make_field();
}

std::shared_ptr<const DiscreteDomain> domain_from(ConfigReader& r, int d) {
    auto lengths = r.get_doubles("domain", "lengths", {1.0, 1.0});
    if (static_cast<int>(lengths.size()) != d)
        throw ConfigError(r.path() + ": '[domain].lengths' must list d entries");
    const int n = static_cast<int>(r.get_int("domain", "n"));
    std::array<double, 3> L{1.0, 1.0, 1.0};
    for (int k = 0; k < d; ++k) L[k] = lengths[k];
    return DiscreteDomain::rectangle(d, L, {n, n, d == 3 ? n : 0});
}

Eigen::MatrixXd homogenized_tensor(const CoefficientField& field, int cell_N, int threads) {
    UnitCellGrid grid(field.d, cell_N);
    CellSolveOptions opts;
    opts.threads = threads;
    auto cs = solve_correctors(field, grid, opts);
    return homogenize(field, cs);
}

int run_validate(const CommonArgs& args) {
    ConfigReader reader(args.config_path);
    auto field = field_from(reader);
    const int resolution = static_cast<int>(reader.get_int("validate", "resolution", 64));
    ValidationTolerances tol;
    tol.symmetry = reader.get_double("validate", "symmetry_tol", tol.symmetry);
    tol.periodicity = reader.get_double("validate", "periodicity_tol", tol.periodicity);
    tol.ellipticity_slack = reader.get_double("validate", "ellipticity_slack", tol.ellipticity_slack);
    reader.finish();
    auto rep = validate(field, resolution, tol);
    json j = {{"family", field.family},
              {"symmetry_defect", rep.symmetry_defect},
              {"mu_low", rep.mu_low},
              {"mu_high", rep.mu_high},
              {"periodicity_defect", rep.periodicity_defect},
              {"holder_quotient", rep.holder_quotient},
              {"passed", rep.passed()}};
    std::cout << j.dump(2) << "\n";
    return rep.passed() ? 0 : 1;
}

void write_nodal_csv(const fs::path& path, const UnitCellGrid& grid, int m,
                     const std::vector<const Eigen::VectorXd*>& columns,
                     const std::vector<std::string>& names) {
    std::ofstream out(path);
    out << "ix,iy";
    if (grid.d == 3) out << ",iz";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    const int N = grid.N;
    int ix[3] = {0, 0, 0};
    for (long idx = 0; idx < grid.num_nodes(); ++idx) {
        long rest = idx;
        for (int k = 0; k < grid.d; ++k) {
            ix[k] = static_cast<int>(rest % N);
            rest /= N;
        }
        out << ix[0] << ',' << ix[1];
        if (grid.d == 3) out << ',' << ix[2];
        for (size_t c = 0; c < columns.size(); ++c) {
            (void)m;
            out << ',' << format_g17((*columns[c])[idx]);
        }
        out << '\n';
    }
}

int run_cell(const CommonArgs& args, bool homogenize_only) {
    ConfigReader reader(args.config_path);
    auto field = field_from(reader);
    const int N = static_cast<int>(reader.get_int("cell", "N", 64));
    const std::string format = reader.get_string("cell", "format", "csv");
    reader.finish();
    const auto out = ensure_out(args);

    UnitCellGrid grid(field.d, N);
    CellSolveOptions opts;
    opts.threads = args.threads > 0 ? args.threads : default_threads();

    const int d = field.d, m = field.m, bd = d * m;
    CorrectorSet cs =
        homogenize_only ? solve_correctors(field, grid, opts) : build_cell_quantities(field, grid, opts);
    if (homogenize_only) cs.A_hat = homogenize(field, cs);

    // summary text block with A_hat, residuals and invariant checks
    std::ofstream sum(out / "summary.txt");
    sum << "family: " << field.family << "  d=" << d << " m=" << m << " N=" << N << "\n";
    sum << "A_hat:\n";
    for (int r = 0; r < bd; ++r) {
        for (int c = 0; c < bd; ++c) sum << ' ' << format_g17(cs.A_hat(r, c));
        sum << '\n';
    }
    sum << "solve_residuals:";
    for (double r : cs.solve_residuals) sum << ' ' << format_g17(r);
    sum << "\nenergy_defects:";
    for (double r : cs.energy_defects) sum << ' ' << format_g17(r);
    double chi_mean_max = 0.0;
    for (const auto& chi : cs.chi)
        for (int c = 0; c < m; ++c) {
            double mean = 0.0;
            for (long p = 0; p < grid.num_nodes(); ++p) mean += chi[p * m + c];
            chi_mean_max = std::max(chi_mean_max, std::abs(mean / grid.num_nodes()));
        }
    sum << "\nchi_mean_max: " << format_g17(chi_mean_max) << '\n';
    auto [lo, hi] = rayleigh_range(cs.A_hat);
    sum << "A_hat_rayleigh: [" << format_g17(lo) << ", " << format_g17(hi) << "]\n";
    sum << "A_hat_asymmetry: "
        << format_g17((cs.A_hat - cs.A_hat.transpose()).cwiseAbs().maxCoeff()) << '\n';
    if (!homogenize_only) {
        sum << "flux_mean_max: " << format_g17(cs.flux_mean_max) << '\n';
        sum << "flux_div_residual: " << format_g17(cs.flux_div_residual) << '\n';
        double anti = 0.0;
        for (int k = 0; k < d; ++k)
            for (int i = 0; i < d; ++i)
                for (int col = 0; col < bd; ++col)
                    for (int al = 0; al < m; ++al)
                        anti = std::max(anti, (cs.F[k][(i * m + al) * bd + col] +
                                               cs.F[i][(k * m + al) * bd + col])
                                                  .cwiseAbs()
                                                  .maxCoeff());
        sum << "flux_antisymmetry_defect: " << format_g17(anti) << '\n';
    }

    if (homogenize_only) return 0;

    if (format == "binary") {
        auto dump = [&](const fs::path& p, const std::vector<Eigen::VectorXd>& cols) {
            std::ofstream bin(p, std::ios::binary);
            for (const auto& c : cols)
                bin.write(reinterpret_cast<const char*>(c.data()),
                          static_cast<std::streamsize>(sizeof(double) * c.size()));
        };
        dump(out / "chi.bin", cs.chi);
        dump(out / "b.bin", cs.b);
        for (int k = 0; k < d; ++k) dump(out / ("F" + std::to_string(k) + ".bin"), cs.F[k]);
    } else {
        // chi: one scalar column per (j, beta, alpha)
        std::vector<Eigen::VectorXd> chi_cols;
        std::vector<std::string> chi_names;
        for (int j = 0; j < d; ++j)
            for (int be = 0; be < m; ++be)
                for (int al = 0; al < m; ++al) {
                    Eigen::VectorXd col(grid.num_nodes());
                    for (long p = 0; p < grid.num_nodes(); ++p)
                        col[p] = cs.chi[j * m + be][p * m + al];
                    chi_cols.push_back(std::move(col));
                    chi_names.push_back("chi_j" + std::to_string(j + 1) + "_b" +
                                        std::to_string(be + 1) + "_a" + std::to_string(al + 1));
                }
        std::vector<const Eigen::VectorXd*> ptrs;
        for (const auto& c : chi_cols) ptrs.push_back(&c);
        write_nodal_csv(out / "chi.csv", grid, m, ptrs, chi_names);

        std::vector<std::string> bnames;
        std::vector<const Eigen::VectorXd*> bptrs;
        for (int r = 0; r < bd; ++r)
            for (int c = 0; c < bd; ++c) {
                bptrs.push_back(&cs.b[r * bd + c]);
                bnames.push_back("b_" + std::to_string(r) + "_" + std::to_string(c));
            }
        write_nodal_csv(out / "b.csv", grid, m, bptrs, bnames);

        std::vector<std::string> fnames;
        std::vector<const Eigen::VectorXd*> fptrs;
        for (int k = 0; k < d; ++k)
            for (int r = 0; r < bd; ++r)
                for (int c = 0; c < bd; ++c) {
                    fptrs.push_back(&cs.F[k][r * bd + c]);
                    fnames.push_back("F_" + std::to_string(k) + "_" + std::to_string(r) + "_" +
                                     std::to_string(c));
                }
        write_nodal_csv(out / "F.csv", grid, m, fptrs, fnames);
    }
    return 0;
}

int run_resolve(const CommonArgs& args) {
    ConfigReader reader(args.config_path);
    auto field = field_from(reader);
    auto domain = domain_from(reader, field.d);
    const std::string eps_str = reader.get_string("resolve", "epsilon", "homogenized");
    const double theta0 = reader.get_double("resolve", "theta0", pi / 4.0);
    const double scale = reader.get_double("resolve", "lambda_scale", 0.0);
    const double angle = reader.get_double("resolve", "lambda_angle", pi);
    const std::string rhs_kind = reader.get_string("resolve", "rhs", "manufactured");
    const double bump_x = reader.get_double("resolve", "point_x", 0.5);
    const double bump_y = reader.get_double("resolve", "point_y", 0.5);
    const double bump_z = reader.get_double("resolve", "point_z", 0.5);
    const double rho_h = reader.get_double("resolve", "rho_h", 2.0);
    const std::string rhs_file = reader.get_string("resolve", "rhs_file", "");
    const int cell_N = static_cast<int>(reader.get_int("cell", "N", 64));
    reader.finish();
    const auto out = ensure_out(args);
    const int threads = args.threads > 0 ? args.threads : default_threads();

    const double R0 = domain->R0();
    const cplx lam = scale == 0.0 ? cplx(0.0, 0.0) : std::polar(scale / (R0 * R0), angle);
    const auto lambda = SpectralParameter::make(lam, theta0);
    if (!lambda.is_zero() && !in_sector(lam, theta0))
        throw ConfigError(args.config_path + ": '[resolve].lambda_angle' is outside the sector");

    std::shared_ptr<const DiscreteOperator> parts;
    if (eps_str == "homogenized") {
        auto A_hat = homogenized_tensor(field, cell_N, threads);
        parts = assemble_parts(domain, Coefficients::homogenized(A_hat, field.d, field.m));
    } else {
        parts = assemble_parts(domain, Coefficients::oscillating(field, std::stod(eps_str)));
    }
    DirichletSolver solver(parts, lambda);

    RhsSpec rhs;
    const int d = field.d, m = field.m;
    if (rhs_kind == "manufactured") {
        // F makes u* = prod sin(pi x_k / L_k) exact for A = I
        std::array<double, 3> L = domain->lengths;
        const cplx lam_val = lambda.value;
        rhs.F_fn = [d, m, L, lam_val](const double* x, cplx* v) {
            double u = 1.0, lap = 0.0;
            for (int k = 0; k < d; ++k) {
                u *= std::sin(pi * x[k] / L[k]);
                lap += pi * pi / (L[k] * L[k]);
            }
            for (int c = 0; c < m; ++c) v[c] = (lap - lam_val) * u;
        };
    } else if (rhs_kind == "point-bump") {
        double y[3] = {bump_x, bump_y, bump_z};
        const auto weights = mollifier_weights(*domain, y, rho_h * domain->h_max());
        Eigen::VectorXcd F = Eigen::VectorXcd::Zero(domain->num_nodes() * m);
        for (const auto& [node, w] : weights) F[node * m] = w;
        rhs.F_nodal = F;
    } else if (rhs_kind == "file") {
        std::ifstream in(rhs_file);
        if (!in) throw ConfigError("resolve: rhs_file not found: " + rhs_file);
        Eigen::VectorXcd F = Eigen::VectorXcd::Zero(domain->num_nodes() * m);
        std::string line;
        std::getline(in, line);  // header
        long row = 0;
        while (std::getline(in, line) && row < F.size()) {
            std::istringstream ss(line);
            std::string tok;
            std::getline(ss, tok, ',');
            F[row].real(std::stod(tok));
            if (std::getline(ss, tok, ',')) F[row].imag(std::stod(tok));
            ++row;
        }
        rhs.F_nodal = F;
    } else {
        throw ConfigError("resolve: unknown rhs '" + rhs_kind + "'");
    }

    std::vector<std::string> norms = {"l1", "l2", "l4", "linf", "w1p:2"};
    if (!parts->coeffs.is_oscillating()) norms.push_back("h2");
    auto sol = solve_dirichlet(solver, rhs, norms);

    // nodal CSV
    {
        std::ofstream u_out(out / "u.csv");
        u_out << "node";
        for (int k = 0; k < d; ++k) u_out << ",x" << k + 1;
        for (int c = 0; c < m; ++c) u_out << ",re" << c + 1 << ",im" << c + 1;
        u_out << '\n';
        double x[3];
        for (long idx = 0; idx < domain->num_nodes(); ++idx) {
            domain->node_position(idx, x);
            u_out << idx;
            for (int k = 0; k < d; ++k) u_out << ',' << format_g17(x[k]);
            for (int c = 0; c < m; ++c)
                u_out << ',' << format_g17(sol.u.values[idx * m + c].real()) << ','
                      << format_g17(sol.u.values[idx * m + c].imag());
            u_out << '\n';
        }
    }
    json j = {{"strategy", sol.strategy},
              {"residual", sol.residual},
              {"iterations", sol.iterations},
              {"lambda_re", lam.real()},
              {"lambda_im", lam.imag()},
              {"norms", sol.norms}};
    std::ofstream(out / "summary.json") << j.dump(2) << '\n';
    if (args.verbose) std::cout << j.dump(2) << '\n';
    return 0;
}

int run_green(const CommonArgs& args) {
    ConfigReader reader(args.config_path);
    auto field = field_from(reader);
    auto domain = domain_from(reader, field.d);
    auto source = reader.get_doubles("green", "source");
    const double rho_h = reader.get_double("green", "rho_h", 2.0);
    const double theta0 = reader.get_double("green", "theta0", pi / 4.0);
    const double scale = reader.get_double("green", "lambda_scale", 0.0);
    const double angle = reader.get_double("green", "lambda_angle", pi);
    const std::string kind = reader.get_string("green", "kind", "oscillating");
    const double epsilon = reader.get_double("green", "epsilon", 0.125);
    const int n_radii = static_cast<int>(reader.get_int("green", "radii", 10));
    const double r_min = reader.get_double("green", "r_min", 0.0);
    const double r_max = reader.get_double("green", "r_max", 0.0);
    const int gamma = static_cast<int>(reader.get_int("green", "gamma", 1)) - 1;
    const int cell_N = static_cast<int>(reader.get_int("cell", "N", 64));
    reader.finish();
    const auto out = ensure_out(args);
    const int threads = args.threads > 0 ? args.threads : default_threads();

    const double R0 = domain->R0();
    const cplx lam = scale == 0.0 ? cplx(0.0, 0.0) : std::polar(scale / (R0 * R0), angle);
    const auto lambda = SpectralParameter::make(lam, theta0);

    std::shared_ptr<const DiscreteOperator> parts;
    if (kind == "homogenized") {
        auto A_hat = homogenized_tensor(field, cell_N, threads);
        parts = assemble_parts(domain, Coefficients::homogenized(A_hat, field.d, field.m));
    } else {
        parts = assemble_parts(domain, Coefficients::oscillating(field, epsilon));
    }
    DirichletSolver solver(parts, lambda);

    double y[3] = {0, 0, 0};
    for (size_t k = 0; k < source.size() && k < 3; ++k) y[k] = source[k];
    const double rho = rho_h * domain->h_max();
    auto col = green_column(solver, y, rho, gamma);

    const double rmin = r_min > 0.0 ? r_min : 2.0 * rho;
    const double rmax = r_max > 0.0 ? r_max : R0 / 8.0;
    auto samples = sample_radial(col, n_radii, rmin, rmax);

    {
        std::ofstream decay(out / "decay.csv");
        decay << "radius,abs_G,abs_grad_G\n";
        for (size_t i = 0; i < samples.r.size(); ++i)
            decay << format_g17(samples.r[i]) << ',' << format_g17(samples.value_abs[i]) << ','
                  << format_g17(samples.grad_abs[i]) << '\n';
    }
    write_xy(out / "decay_G.dat", samples.r, samples.value_abs, "radius |G|");
    write_xy(out / "decay_gradG.dat", samples.r, samples.grad_abs, "radius |grad G|");

    json fits;
    const double span = samples.r.empty() ? 0.0 : samples.r.back() / samples.r.front();
    if (samples.r.size() >= 8) {
        const double min_span = std::min(10.0, span);
        if (field.d == 2) {
            auto rep = check_pointwise_decay(samples, DecayRegime::d2log, 2, R0, min_span);
            fits["loglaw_slope"] = rep.loglaw.slope;
            fits["loglaw_offset"] = rep.loglaw.offset;
            fits["loglaw_rel_residual"] = rep.loglaw.relative_residual;
        } else {
            auto rep = check_pointwise_decay(samples, DecayRegime::d3, 3, R0, min_span);
            fits["power_exponent"] = rep.power.slope;
            fits["power_constant"] = rep.power.constant;
        }
        auto grep = check_pointwise_decay(samples, DecayRegime::grad, field.d, R0, min_span);
        fits["grad_exponent"] = grep.power.slope;
        fits["grad_constant"] = grep.power.constant;
    }
    auto ib = integral_bounds(col);
    json j = {{"residual", col.residual}, {"strategy", col.strategy},
              {"rho", rho},               {"span", span},
              {"int_abs_G", ib.int_abs},  {"int_abs_grad_G", ib.int_abs_grad},
              {"fits", fits}};
    std::ofstream(out / "fit_summary.json") << j.dump(2) << '\n';
    if (args.verbose) std::cout << j.dump(2) << '\n';
    return 0;
}

int emit_and_exit(const fs::path& out, const RateReport& rep, const ExperimentConfig& cfg) {
    write_cells_csv((out / "cells.csv").string(), rep);
    write_rates_csv((out / "rates.csv").string(), rep);
    write_report_txt((out / "report.txt").string(), rep);
    write_config_echo((out / "config_echo.ini").string(), cfg);
    if (!rep.passed) {
        json failures = json::array();
        for (const auto& r : rep.rates)
            if (!r.pass)
                failures.push_back({{"norm", r.norm},
                                    {"p", r.p},
                                    {"lambda_modulus", r.lambda.modulus_scale},
                                    {"lambda_angle", r.lambda.angle},
                                    {"slope", r.slope},
                                    {"window", {r.window_lo, r.window_hi}}});
        std::ofstream(out / "failures.json") << failures.dump(2) << '\n';
        std::cerr << failures.dump() << '\n';
        return 1;
    }
    return 0;
}

int run_sweep(const CommonArgs& args) {
    ConfigReader reader(args.config_path);
    ExperimentConfig cfg = experiment_config(reader);
    reader.finish();
    if (args.threads > 0) cfg.threads = args.threads;
    const auto out = ensure_out(args);

    if (cfg.study == "calibration") {
        auto rows = compute_calibration(cfg);
        write_calibration_csv((out / "calibration.csv").string(), rows);
        write_config_echo((out / "config_echo.ini").string(), cfg);
        return 0;
    }
    RateReport rep;
    if (cfg.study == "l2h1")
        rep = run_l2_h1_study(cfg);
    else if (cfg.study == "lp")
        rep = run_lp_study(cfg, cfg.p_values);
    else if (cfg.study == "uniformity")
        rep = run_uniformity_study(cfg);
    else
        throw ConfigError(args.config_path + ": unknown study '" + cfg.study + "'");
    return emit_and_exit(out, rep, cfg);
}

int run_report(const CommonArgs& args, const std::string& cells_path) {
    ConfigReader reader(args.config_path);
    ExperimentConfig cfg = experiment_config(reader);
    reader.finish();
    const auto out = ensure_out(args);
    double R0 = 0.0;
    for (int k = 0; k < cfg.d; ++k) R0 += cfg.lengths[k] * cfg.lengths[k];
    R0 = std::sqrt(R0);
    auto cells = read_cells_csv(cells_path);
    auto rep = refit_from_cells(cells, cfg.study, R0);
    return emit_and_exit(out, rep, cfg);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"homlab: homogenization laboratory for shifted elliptic systems"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string cells_path;

    auto* c_validate = app.add_subcommand("validate", "validate a coefficient field");
    add_common(c_validate, args);
    auto* c_cell = app.add_subcommand("cell", "solve the corrector cell problems");
    add_common(c_cell, args);
    auto* c_hom = app.add_subcommand("homogenize", "compute the homogenized tensor");
    add_common(c_hom, args);
    auto* c_resolve = app.add_subcommand("resolve", "one bounded-domain resolvent solve");
    add_common(c_resolve, args);
    auto* c_green = app.add_subcommand("green", "Green column, decay samples and fits");
    add_common(c_green, args);
    auto* c_sweep = app.add_subcommand("sweep", "run an (eps, lambda) study");
    add_common(c_sweep, args);
    auto* c_report = app.add_subcommand("report", "recompute rates from stored cells.csv");
    add_common(c_report, args);
    c_report->add_option("--cells", cells_path, "stored cells.csv")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_validate->parsed()) return run_validate(args);
        if (c_cell->parsed()) return run_cell(args, false);
        if (c_hom->parsed()) return run_cell(args, true);
        if (c_resolve->parsed()) return run_resolve(args);
        if (c_green->parsed()) return run_green(args);
        if (c_sweep->parsed()) return run_sweep(args);
        if (c_report->parsed()) return run_report(args, cells_path);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
