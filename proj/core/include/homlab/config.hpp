#ifndef HOMLAB_CONFIG_HPP
#define HOMLAB_CONFIG_HPP

#include "homlab/harness.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace homlab {

/// Sectioned key/value configuration file ("[section]" headers, "key = value"
/// lines, '#' comments).  Typed getters mark keys as consumed; finish()
/// turns any unconsumed key into an error, so misspelled keys never pass
/// silently.  All error messages are path-qualified.
class ConfigReader {
public:
    explicit ConfigReader(const std::string& path);
    static ConfigReader from_string(const std::string& text, const std::string& label = "<inline>");

    bool has(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key);
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback);
    double get_double(const std::string& section, const std::string& key);
    double get_double(const std::string& section, const std::string& key, double fallback);
    long get_int(const std::string& section, const std::string& key);
    long get_int(const std::string& section, const std::string& key, long fallback);
    std::vector<double> get_doubles(const std::string& section, const std::string& key);
    std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                    std::vector<double> fallback);

    /// Throws ConfigError listing every key that no getter consumed.
    void finish() const;

    const std::string& path() const { return path_; }

private:
    ConfigReader() = default;
    void parse(std::istream& in);
    std::string qualify(const std::string& section, const std::string& key) const;

    std::string path_;
    std::map<std::string, std::map<std::string, std::string>> sections_;
    mutable std::set<std::string> consumed_;
};

/// Reads the [field], [domain], [cell], [lambda] and [sweep] sections into
/// an ExperimentConfig.  Rejects out-of-sector shifts and resolution-rule
/// violations with key-qualified messages.
ExperimentConfig experiment_config(ConfigReader& reader);

/// Writes the effective configuration (defaults filled in) next to outputs.
void write_config_echo(const std::string& path, const ExperimentConfig& config);

} // namespace homlab

#endif
