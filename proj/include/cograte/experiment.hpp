#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cograte/optimizer.hpp"
#include "cograte/protocols.hpp"

namespace cograte::config {

/// Unparsable input, unknown key, or a required key that is missing.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat `section.key = value` text. `#` starts a comment; blank lines are
/// ignored; a later assignment to the same key replaces the earlier one.
class Config {
public:
    static Config parse(std::string_view text, std::string_view source = "<string>");
    static Config load_file(const std::string& path);

    void set(const std::string& key, std::string value);
    /// Assignments in `other` win.
    void merge(const Config& other);
    /// COGRATE_<SECTION>_<KEY> for every known key, e.g. COGRATE_CHANNEL_SIGMA_P_PD.
    void apply_env(const std::function<const char*(const char*)>& lookup);

    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }
    [[nodiscard]] std::optional<std::string> get(const std::string& key) const;
    [[nodiscard]] const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

/// Every key the tools understand, in canonical order.
const std::vector<std::string>& known_keys();

/// Name of the environment variable overriding `key`.
std::string env_name(std::string_view key);

/// Comma-separated tokens, whitespace trimmed.
std::vector<std::string> split_list(std::string_view text);

/// "a,b,c" or an inclusive range "start:step:stop".
std::vector<double> parse_lambda_list(std::string_view text);

/// Names of the built-in presets (fig1 ... fig5).
std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name.
Config preset(std::string_view name);

struct Series {
    std::string label;  ///< protocol name, plus "[key=value;...]" for list-valued keys
    Protocol protocol;
    SystemParams params;  ///< traffic.lambda applied
};

struct SimSettings {
    std::uint64_t slots = 1'000'000;
    std::uint64_t warmup = 10'000;
    unsigned reps = 1;
    std::uint64_t seed = 1;
};

struct Experiment {
    std::string name;
    std::vector<Series> series;
    std::vector<double> lambdas;
    optimizer::GridSpec grid;
    double t_frac = 0.5;  ///< allocation for evaluate/validate, fraction of the window
    double w_frac = 0.5;  ///< ... and of W
    SimSettings sim;
};

/// Throws ConfigError for syntax/missing keys and InvariantError for values
/// that parse but violate a parameter invariant.
Experiment build_experiment(const Config& cfg);

struct SweepRecord {
    double lambda_p;
    std::string label;
    Protocol protocol;
    bool feasible;
    double t_p, w_p, mu, delay, rate, energy, phi;
};

/// One record per (lambda, series), lambda-major, series in config order.
std::vector<SweepRecord> run_sweep(const Experiment& exp, const optimizer::RunOptions& options = {});

/// Header plus one line per record: %.6g fields, LF endings.
std::string format_sweep_csv(const std::vector<SweepRecord>& records);

}  // namespace cograte::config
