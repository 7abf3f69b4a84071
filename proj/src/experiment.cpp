#include "cograte/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "cograte/error.hpp"

namespace cograte::config {

namespace detail {
struct PresetEntry {
    const char* name;
    const char* text;
};
extern const PresetEntry kPresets[];
extern const std::size_t kPresetCount;
}  // namespace detail

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

// Parameter keys, in the order list-valued variants are expanded.
struct ParamKey {
    const char* key;
    double SystemParams::*field;
    bool required;
    bool p2_only;  // only P2 reads it
};

const ParamKey kParamKeys[] = {
    {"system.W", &SystemParams::w, true, false},
    {"system.T", &SystemParams::t, true, false},
    {"system.b", &SystemParams::b, true, false},
    {"system.tau_s", &SystemParams::tau_s, true, false},
    {"system.tau_f", &SystemParams::tau_f, true, false},
    {"power.P0", &SystemParams::p0, true, false},
    {"power.N0", &SystemParams::n0, true, false},
    {"channel.sigma_p_pd", &SystemParams::sigma_p_pd, true, false},
    {"channel.sigma_p_s", &SystemParams::sigma_p_s, true, false},
    {"channel.sigma_s_pd", &SystemParams::sigma_s_pd, true, false},
    {"channel.sigma_s_sd", &SystemParams::sigma_s_sd, true, false},
    {"feedback.f", &SystemParams::f, false, true},
    {"feedback.omega", &SystemParams::omega, false, true},
    {"energy.E", &SystemParams::energy_budget, true, false},
    {"sensing.target_pfa", &SystemParams::target_pfa, true, false},
    {"traffic.lambda", &SystemParams::lambda_p, false, false},
};

const char* const kOtherKeys[] = {
    "experiment.name", "experiment.protocols", "sweep.lambda", "grid.n_t", "grid.n_w",
    "alloc.t_frac",    "alloc.w_frac",         "sim.slots",    "sim.warmup", "sim.reps",
    "sim.seed",
};

bool is_known(const std::string& key) {
    const auto& keys = known_keys();
    return std::find(keys.begin(), keys.end(), key) != keys.end();
}

double parse_double(std::string_view token, const std::string& key) {
    const std::string t = trim(token);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw ConfigError("key '" + key + "': cannot parse '" + t + "' as a number");
    return v;
}

// A number, or a multiple of the slot duration written as e.g. "0.05T".
double parse_duration(std::string_view token, const std::string& key, double slot) {
    const std::string t = trim(token);
    if (!t.empty() && t.back() == 'T') {
        const std::string head = trim(std::string_view(t).substr(0, t.size() - 1));
        return parse_double(head.empty() ? "1" : head, key) * slot;
    }
    return parse_double(t, key);
}

template <class Int>
Int parse_int(const std::string& text, const std::string& key) {
    const std::string t = trim(text);
    Int v{};
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw ConfigError("key '" + key + "': cannot parse '" + t + "' as an integer");
    return v;
}

std::string short_key(const std::string& key) { return key.substr(key.find('.') + 1); }

}  // namespace

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& p : kParamKeys) k.emplace_back(p.key);
        for (const char* o : kOtherKeys) k.emplace_back(o);
        return k;
    }();
    return keys;
}

std::string env_name(std::string_view key) {
    std::string out = "COGRATE_";
    for (const char c : key)
        out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

Config Config::parse(std::string_view text, std::string_view source) {
    Config cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        const std::string where = std::string(source) + ":" + std::to_string(number);
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        if (!is_known(key)) throw ConfigError(where + ": unknown key '" + key + "'");
        cfg.values_[key] = trim(std::string_view(body).substr(eq + 1));
    }
    return cfg;
}

Config Config::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse(text.str(), path);
}

void Config::set(const std::string& key, std::string value) {
    if (!is_known(key)) throw ConfigError("unknown key '" + key + "'");
    values_[key] = std::move(value);
}

void Config::merge(const Config& other) {
    for (const auto& [k, v] : other.values_) values_[k] = v;
}

void Config::apply_env(const std::function<const char*(const char*)>& lookup) {
    for (const auto& key : known_keys())
        if (const char* v = lookup(env_name(key).c_str())) values_[key] = v;
}

std::optional<std::string> Config::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = text.find(',', start);
        out.push_back(trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::vector<double> parse_lambda_list(std::string_view text) {
    const std::string key = "sweep.lambda";
    std::vector<double> out;
    if (text.find(':') != std::string_view::npos) {
        const auto a = text.find(':');
        const auto b = text.find(':', a + 1);
        if (b == std::string_view::npos) throw ConfigError("sweep.lambda: range must be start:step:stop");
        const double start = parse_double(text.substr(0, a), key);
        const double step = parse_double(text.substr(a + 1, b - a - 1), key);
        const double stop = parse_double(text.substr(b + 1), key);
        if (!(step > 0.0) || stop < start) throw ConfigError("sweep.lambda: need step > 0 and stop >= start");
        const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (long k = 0; k < n; ++k) {
            // Round away the accumulated representation error (0.1*3 -> 0.3).
            const double v = start + static_cast<double>(k) * step;
            out.push_back(std::round(v * 1e12) / 1e12);
        }
        return out;
    }
    for (const auto& tok : split_list(text)) out.push_back(parse_double(tok, key));
    return out;
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < detail::kPresetCount; ++i) names.emplace_back(detail::kPresets[i].name);
    return names;
}

Config preset(std::string_view name) {
    for (std::size_t i = 0; i < detail::kPresetCount; ++i)
        if (name == detail::kPresets[i].name)
            return Config::parse(detail::kPresets[i].text, "preset " + std::string(name));
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + std::string(name) + "' (available: " + known + ")");
}

Experiment build_experiment(const Config& cfg) {
    Experiment exp;
    exp.name = cfg.get("experiment.name").value_or("experiment");

    for (const auto& p : kParamKeys)
        if (p.required && !cfg.has(p.key)) throw ConfigError(std::string("missing required key '") + p.key + "'");

    const double slot = parse_double(*cfg.get("system.T"), "system.T");

    // Each parameter key holds one or more tokens.
    struct Axis {
        const ParamKey* key;
        std::vector<std::string> tokens;
    };
    std::vector<Axis> axes;
    for (const auto& p : kParamKeys) {
        const auto v = cfg.get(p.key);
        if (!v) continue;
        Axis a{&p, split_list(*v)};
        if (std::string(p.key) == "system.T" && a.tokens.size() > 1)
            throw ConfigError("system.T cannot be list-valued");
        axes.push_back(std::move(a));
    }

    std::vector<Protocol> protocols;
    for (const auto& tok : split_list(cfg.get("experiment.protocols").value_or("P1,P2"))) {
        try {
            protocols.push_back(parse_protocol(tok));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("experiment.protocols: ") + e.what());
        }
    }

    for (const Protocol proto : protocols) {
        // Varying axes that this protocol actually reads.
        std::vector<const Axis*> varying;
        for (const auto& a : axes)
            if (a.tokens.size() > 1 && (proto == Protocol::P2 || !a.key->p2_only)) varying.push_back(&a);
        std::vector<std::size_t> pick(varying.size(), 0);
        while (true) {
            SystemParams params;
            std::string suffix;
            for (const auto& a : axes) {
                std::size_t choice = 0;
                for (std::size_t v = 0; v < varying.size(); ++v)
                    if (varying[v] == &a) {
                        choice = pick[v];
                        if (!suffix.empty()) suffix += ';';
                        suffix += short_key(a.key->key) + "=" + a.tokens[choice];
                    }
                params.*(a.key->field) = parse_duration(a.tokens[choice], a.key->key, slot);
            }
            params.validate();
            exp.series.push_back(
                {std::string(to_string(proto)) + (suffix.empty() ? "" : "[" + suffix + "]"), proto, params});
            // Odometer over the varying axes, last axis fastest.
            std::size_t d = varying.size();
            while (d > 0 && ++pick[d - 1] == varying[d - 1]->tokens.size()) pick[--d] = 0;
            if (d == 0) break;
        }
    }

    if (const auto l = cfg.get("sweep.lambda"))
        exp.lambdas = parse_lambda_list(*l);
    else
        exp.lambdas = {exp.series.empty() ? 0.0 : exp.series.front().params.lambda_p};
    for (const double l : exp.lambdas)
        if (!(l >= 0.0 && l <= 1.0)) throw InvariantError("sweep.lambda values must lie in [0,1]");

    if (const auto v = cfg.get("grid.n_t")) exp.grid.n_t = parse_int<int>(*v, "grid.n_t");
    if (const auto v = cfg.get("grid.n_w")) exp.grid.n_w = parse_int<int>(*v, "grid.n_w");
    exp.grid.validate();
    if (const auto v = cfg.get("alloc.t_frac")) exp.t_frac = parse_double(*v, "alloc.t_frac");
    if (const auto v = cfg.get("alloc.w_frac")) exp.w_frac = parse_double(*v, "alloc.w_frac");
    if (const auto v = cfg.get("sim.slots")) exp.sim.slots = parse_int<std::uint64_t>(*v, "sim.slots");
    if (const auto v = cfg.get("sim.warmup")) exp.sim.warmup = parse_int<std::uint64_t>(*v, "sim.warmup");
    if (const auto v = cfg.get("sim.reps")) exp.sim.reps = parse_int<unsigned>(*v, "sim.reps");
    if (const auto v = cfg.get("sim.seed")) exp.sim.seed = parse_int<std::uint64_t>(*v, "sim.seed");
    return exp;
}

std::vector<SweepRecord> run_sweep(const Experiment& exp, const optimizer::RunOptions& options) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double inf = std::numeric_limits<double>::infinity();
    // Series-major computation, then re-ordered lambda-major.
    std::vector<std::vector<SweepRecord>> per_series;
    for (const auto& s : exp.series) {
        std::vector<SweepRecord> recs;
        if (s.protocol == Protocol::NC) {
            const double mu = mu_nc(s.params);
            for (const double l : exp.lambdas) {
                const bool stable = l == 0.0 || strictly_greater(mu, l);
                const double delay = l == 0.0 ? 1.0 : stable ? (1.0 - l) / (mu - l) : inf;
                recs.push_back({l, s.label, s.protocol, stable, s.params.t - s.params.tau_f, s.params.w, mu,
                                delay, 0.0, 0.0, 0.0});
            }
        } else {
            for (const auto& row : optimizer::sweep_lambda(s.params, s.protocol, exp.lambdas, exp.grid, options)) {
                SweepRecord r{row.lambda_p, s.label, s.protocol, false, nan, nan, nan, nan, nan, nan, row.phi};
                if (row.result.best_metrics) {
                    const ProtocolMetrics& m = *row.result.best_metrics;
                    r.feasible = true;
                    r.t_p = row.result.best_alloc->t_p;
                    r.w_p = row.result.best_alloc->w_p;
                    r.mu = m.mu_p;
                    r.delay = m.delay;
                    r.rate = m.mean_rate;
                    r.energy = m.mean_energy;
                }
                recs.push_back(std::move(r));
            }
        }
        per_series.push_back(std::move(recs));
    }
    std::vector<SweepRecord> out;
    for (std::size_t k = 0; k < exp.lambdas.size(); ++k)
        for (auto& recs : per_series) out.push_back(recs[k]);
    return out;
}

std::string format_sweep_csv(const std::vector<SweepRecord>& records) {
    std::string out = "lambda,protocol,t_p,w_p,mu,delay,rate,energy,phi,feasible\n";
    auto num = [](double v) {
        if (std::isnan(v)) return std::string("nan");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", v);
        return std::string(buf);
    };
    for (const auto& r : records) {
        out += num(r.lambda_p) + ',' + r.label;
        for (const double v : {r.t_p, r.w_p, r.mu, r.delay, r.rate, r.energy, r.phi}) out += ',' + num(v);
        out += r.feasible ? ",1\n" : ",0\n";
    }
    return out;
}

}  // namespace cograte::config
