#include "homlab/config.hpp"

#include "homlab/errors.hpp"
#include "homlab/parallel.hpp"

#include <fstream>
#include <sstream>

namespace homlab {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace

ConfigReader::ConfigReader(const std::string& path) : path_(path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file not found: " + path);
    parse(in);
}

ConfigReader ConfigReader::from_string(const std::string& text, const std::string& label) {
    ConfigReader r;
    r.path_ = label;
    std::istringstream in(text);
    r.parse(in);
    return r;
}

void ConfigReader::parse(std::istream& in) {
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(path_ + ":" + std::to_string(lineno) + ": malformed section");
            section = trim(line.substr(1, line.size() - 2));
            sections_[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path_ + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(path_ + ":" + std::to_string(lineno) + ": empty key");
        auto& sec = sections_[section];
        if (sec.count(key))
            throw ConfigError(path_ + ":" + std::to_string(lineno) + ": duplicate key '" +
                              qualify(section, key) + "'");
        sec[key] = value;
    }
}

std::string ConfigReader::qualify(const std::string& section, const std::string& key) const {
    return (section.empty() ? key : "[" + section + "]." + key);
}

bool ConfigReader::has(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) > 0;
}

std::string ConfigReader::get_string(const std::string& section, const std::string& key) {
    auto it = sections_.find(section);
    if (it == sections_.end() || !it->second.count(key))
        throw ConfigError(path_ + ": missing key '" + qualify(section, key) + "'");
    consumed_.insert(section + "\n" + key);
    return it->second.at(key);
}

std::string ConfigReader::get_string(const std::string& section, const std::string& key,
                                     const std::string& fallback) {
    if (!has(section, key)) return fallback;
    return get_string(section, key);
}

double ConfigReader::get_double(const std::string& section, const std::string& key) {
    const std::string v = get_string(section, key);
    try {
        size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(path_ + ": '" + qualify(section, key) + "' is not a number: '" + v +
                          "'");
    }
}

double ConfigReader::get_double(const std::string& section, const std::string& key,
                                double fallback) {
    if (!has(section, key)) return fallback;
    return get_double(section, key);
}

long ConfigReader::get_int(const std::string& section, const std::string& key) {
    const double x = get_double(section, key);
    const long i = static_cast<long>(x);
    if (static_cast<double>(i) != x)
        throw ConfigError(path_ + ": '" + qualify(section, key) + "' must be an integer");
    return i;
}

long ConfigReader::get_int(const std::string& section, const std::string& key, long fallback) {
    if (!has(section, key)) return fallback;
    return get_int(section, key);
}

std::vector<double> ConfigReader::get_doubles(const std::string& section,
                                              const std::string& key) {
    const std::string v = get_string(section, key);
    std::vector<double> out;
    std::istringstream ss(v);
    std::string tok;
    while (ss >> tok) {
        try {
            size_t pos = 0;
            out.push_back(std::stod(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError(path_ + ": '" + qualify(section, key) +
                              "' has a non-numeric entry: '" + tok + "'");
        }
    }
    if (out.empty())
        throw ConfigError(path_ + ": '" + qualify(section, key) + "' is empty");
    return out;
}

std::vector<double> ConfigReader::get_doubles(const std::string& section, const std::string& key,
                                              std::vector<double> fallback) {
    if (!has(section, key)) return fallback;
    return get_doubles(section, key);
}

void ConfigReader::finish() const {
    std::string leftovers;
    for (const auto& [section, keys] : sections_)
        for (const auto& [key, value] : keys)
            if (!consumed_.count(section + "\n" + key))
                leftovers += " '" + qualify(section, key) + "'";
    if (!leftovers.empty())
        throw ConfigError(path_ + ": unknown keys:" + leftovers);
}

ExperimentConfig experiment_config(ConfigReader& r) {
    ExperimentConfig cfg;
    cfg.family = r.get_string("field", "family", cfg.family);
    cfg.d = static_cast<int>(r.get_int("field", "d", cfg.d));
    cfg.base = r.get_double("field", "base", cfg.base);
    cfg.amplitude = r.get_double("field", "amplitude", cfg.amplitude);
    cfg.trig_c = r.get_double("field", "c", cfg.trig_c);
    cfg.trig_alpha = r.get_double("field", "alpha", cfg.trig_alpha);
    cfg.coupled_c = r.get_double("field", "coupled_c", cfg.coupled_c);
    cfg.coupled_kappa = r.get_double("field", "coupled_kappa", cfg.coupled_kappa);
    cfg.constant_value = r.get_double("field", "value", cfg.constant_value);

    auto lengths = r.get_doubles("domain", "lengths", {1.0, 1.0});
    if (static_cast<int>(lengths.size()) != cfg.d)
        throw ConfigError(r.path() + ": '[domain].lengths' must list d = " +
                          std::to_string(cfg.d) + " entries");
    for (int k = 0; k < cfg.d; ++k) cfg.lengths[k] = lengths[k];
    cfg.n = static_cast<int>(r.get_int("domain", "n", cfg.n));
    cfg.cell_N = static_cast<int>(r.get_int("cell", "N", cfg.cell_N));

    cfg.theta0 = r.get_double("lambda", "theta0", cfg.theta0);
    cfg.lambdas.clear();
    std::vector<std::string> lambda_keys;  // config key per entry, for messages
    if (r.has("lambda", "moduli_scales")) {
        const auto scales = r.get_doubles("lambda", "moduli_scales");
        const auto angles = r.get_doubles("lambda", "angles", {3.14159265358979323846});
        for (double s : scales) {
            if (s == 0.0) {
                cfg.lambdas.push_back({0.0, 0.0});
                lambda_keys.push_back("lambda.moduli_scales (zero entry)");
                continue;
            }
            for (size_t j = 0; j < angles.size(); ++j) {
                cfg.lambdas.push_back({s, angles[j]});
                lambda_keys.push_back("lambda.angles[" + std::to_string(j) + "]");
            }
        }
    }
    if (r.has("lambda", "pairs")) {
        // "scale@angle" tokens
        std::istringstream ss(r.get_string("lambda", "pairs"));
        std::string tok;
        size_t i = 0;
        while (ss >> tok) {
            const auto at = tok.find('@');
            if (at == std::string::npos)
                throw ConfigError(r.path() + ": '[lambda].pairs' entries must be scale@angle");
            cfg.lambdas.push_back({std::stod(tok.substr(0, at)), std::stod(tok.substr(at + 1))});
            lambda_keys.push_back("lambda.pairs[" + std::to_string(i++) + "]");
        }
    }

    cfg.study = r.get_string("sweep", "study", cfg.study);
    cfg.epsilons = r.get_doubles("sweep", "epsilons", {});
    cfg.p_values = r.get_doubles("sweep", "p", cfg.p_values);
    cfg.rhs = r.get_string("sweep", "rhs", cfg.rhs);
    cfg.seed = static_cast<unsigned long>(r.get_int("sweep", "seed", 0));
    cfg.threads = static_cast<int>(r.get_int("sweep", "threads", 0));
    if (cfg.threads <= 0) cfg.threads = default_threads();
    cfg.calibration_file = r.get_string("sweep", "calibration", "");

    // sector membership with key-qualified messages
    const double R0 = [&] {
        double s = 0.0;
        for (int k = 0; k < cfg.d; ++k) s += cfg.lengths[k] * cfg.lengths[k];
        return std::sqrt(s);
    }();
    for (size_t i = 0; i < cfg.lambdas.size(); ++i) {
        if (cfg.lambdas[i].modulus_scale == 0.0) continue;
        const cplx lam =
            std::polar(cfg.lambdas[i].modulus_scale / (R0 * R0), cfg.lambdas[i].angle);
        if (!in_sector(lam, cfg.theta0))
            throw ConfigError(r.path() + ": " + lambda_keys[i] + " (angle " +
                              std::to_string(cfg.lambdas[i].angle) +
                              ") lies outside Sigma_theta0");
    }
    return cfg;
}

void write_config_echo(const std::string& path, const ExperimentConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config echo: " + path);
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    out << "# effective configuration (defaults filled in)\n[field]\n";
    out << "family = " << cfg.family << "\nd = " << cfg.d << "\n";
    if (cfg.family == "laminate")
        out << "base = " << fmt(cfg.base) << "\namplitude = " << fmt(cfg.amplitude) << "\n";
    if (cfg.family == "trig")
        out << "c = " << fmt(cfg.trig_c) << "\nalpha = " << fmt(cfg.trig_alpha) << "\n";
    if (cfg.family == "coupled-system")
        out << "coupled_c = " << fmt(cfg.coupled_c)
            << "\ncoupled_kappa = " << fmt(cfg.coupled_kappa) << "\n";
    if (cfg.family == "constant") out << "value = " << fmt(cfg.constant_value) << "\n";
    out << "\n[domain]\nlengths =";
    for (int k = 0; k < cfg.d; ++k) out << " " << fmt(cfg.lengths[k]);
    out << "\nn = " << cfg.n << "\n\n[cell]\nN = " << cfg.cell_N << "\n";
    out << "\n[lambda]\ntheta0 = " << fmt(cfg.theta0) << "\npairs =";
    for (const auto& l : cfg.lambdas) out << " " << fmt(l.modulus_scale) << "@" << fmt(l.angle);
    out << "\n\n[sweep]\nstudy = " << cfg.study << "\nepsilons =";
    for (double e : cfg.epsilons) out << " " << fmt(e);
    out << "\np =";
    for (double p : cfg.p_values) out << " " << fmt(p);
    out << "\nrhs = " << cfg.rhs << "\nseed = " << cfg.seed
        << "\nthreads = " << cfg.threads << "\n";
    if (!cfg.calibration_file.empty()) out << "calibration = " << cfg.calibration_file << "\n";
}

} // namespace homlab
