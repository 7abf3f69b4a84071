// cograte: evaluate, optimize and cross-validate the cooperative protocols.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration error,
// 3 parameter invariant violated, 4 analytics and simulation disagree.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cograte/error.hpp"
#include "cograte/experiment.hpp"
#include "cograte/kernels.hpp"
#include "cograte/optimizer.hpp"
#include "cograte/protocols.hpp"
#include "cograte/simulator.hpp"

using namespace cograte;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;
constexpr int kExitValidation = 4;

struct Common {
    std::string config_file;
    std::string preset;
    std::string protocol;
    std::string lambda;
    std::vector<std::string> sets;
    std::string out;
};

struct Extra {
    std::string grid;
    std::optional<double> tp, wp;
    std::optional<std::uint64_t> slots, seed;
    std::optional<unsigned> reps;
    bool allow_unstable = false;
    double mu_bias = 0.0;
    unsigned threads = 0;
    std::string kernel;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("config", c.config_file, "key=value config file");
    cmd->add_option("--preset", c.preset, "built-in preset (fig1 ... fig5)");
    cmd->add_option("--protocol", c.protocol, "NC, P1, P2 or a comma list");
    cmd->add_option("--set", c.sets, "override, e.g. --set channel.sigma_p_pd=0.05")->allow_extra_args(false);
    cmd->add_option("--out", c.out, "also write CSV to this path");
}

// preset < file < environment < flags
config::Config assemble(const Common& c, const std::vector<std::pair<std::string, std::string>>& flags) {
    if (c.preset.empty() && c.config_file.empty())
        throw config::ConfigError("no configuration: pass a config file or --preset");
    config::Config cfg;
    if (!c.preset.empty()) cfg = config::preset(c.preset);
    if (!c.config_file.empty()) cfg.merge(config::Config::load_file(c.config_file));
    cfg.apply_env([](const char* name) { return std::getenv(name); });
    for (const auto& s : c.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw config::ConfigError("--set expects key=value, got '" + s + "'");
        cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (!c.protocol.empty()) cfg.set("experiment.protocols", c.protocol);
    for (const auto& [k, v] : flags) cfg.set(k, v);
    return cfg;
}

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void write_out(const std::string& path, const std::string& text) {
    if (path.empty()) return;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw config::ConfigError("cannot write '" + path + "'");
    f << text;
}

std::vector<std::pair<std::string, std::string>> alloc_flags(const Extra& x) {
    std::vector<std::pair<std::string, std::string>> f;
    if (x.tp) f.emplace_back("alloc.t_frac", num(*x.tp));
    if (x.wp) f.emplace_back("alloc.w_frac", num(*x.wp));
    return f;
}

int cmd_evaluate(const Common& c, const Extra& x) {
    auto flags = alloc_flags(x);
    if (!c.lambda.empty()) flags.emplace_back("traffic.lambda", c.lambda);
    const config::Experiment exp = config::build_experiment(assemble(c, flags));
    std::string csv =
        "series,lambda,t_p,w_p,mu,mu_nc,nu0,delay,rate_empty,rate_busy,rate,energy_empty,energy_busy,energy,"
        "out_p_pd,out_p_s,out_s_pd,succ_int,p_md,p_fa,feasible\n";
    for (const auto& s : exp.series) {
        const Allocation alloc = Allocation::from_fractions(s.params, s.protocol, exp.t_frac, exp.w_frac);
        const ProtocolMetrics m = evaluate(s.params, alloc, s.protocol);
        std::printf("[%s]\n", s.label.c_str());
        std::printf("mu_nc = %.4f\n", m.mu_nc);
        if (s.protocol != Protocol::NC) {
            std::printf("t_p = %s s\nw_p = %s Hz\n", num(alloc.t_p).c_str(), num(alloc.w_p).c_str());
        }
        std::printf("lambda = %s\nmu = %s\nnu0 = %s\ndelay = %s slots\n", num(s.params.lambda_p).c_str(),
                    num(m.mu_p).c_str(), num(m.nu0).c_str(), num(m.delay).c_str());
        std::printf("rate = %s bits/slot (empty %s, busy %s)\n", num(m.mean_rate).c_str(),
                    num(m.rate_empty).c_str(), num(m.rate_busy).c_str());
        std::printf("energy = %s J/slot (empty %s, busy %s)\n", num(m.mean_energy).c_str(),
                    num(m.energy_empty).c_str(), num(m.energy_busy).c_str());
        const LinkStats& st = m.stats;
        std::printf("links: out_p_pd = %s, out_p_s = %s, out_s_pd = %s, succ_int = %s\n",
                    num(st.out_p_pd).c_str(), num(st.out_p_s).c_str(), num(st.out_s_pd).c_str(),
                    num(st.succ_p_pd_int).c_str());
        std::printf("sensing: p_md = %s, p_fa = %s\n", num(st.p_md).c_str(), num(st.p_fa).c_str());
        std::printf("feasible = %s (%s)\n\n", m.feasible ? "yes" : "no", describe_violations(m.violations).c_str());
        csv += s.label;
        for (const double v : {s.params.lambda_p, alloc.t_p, alloc.w_p, m.mu_p, m.mu_nc, m.nu0, m.delay,
                               m.rate_empty, m.rate_busy, m.mean_rate, m.energy_empty, m.energy_busy,
                               m.mean_energy, st.out_p_pd, st.out_p_s, st.out_s_pd, st.succ_p_pd_int, st.p_md,
                               st.p_fa})
            csv += ',' + num(v);
        csv += m.feasible ? ",1\n" : ",0\n";
    }
    write_out(c.out, csv);
    return 0;
}

int cmd_optimize(const Common& c, const Extra& x) {
    std::vector<std::pair<std::string, std::string>> flags;
    if (!c.lambda.empty()) flags.emplace_back("sweep.lambda", c.lambda);
    if (!x.grid.empty()) {
        const auto sep = x.grid.find_first_of("xX");
        if (sep == std::string::npos) throw config::ConfigError("--grid expects NxM, got '" + x.grid + "'");
        flags.emplace_back("grid.n_t", x.grid.substr(0, sep));
        flags.emplace_back("grid.n_w", x.grid.substr(sep + 1));
    }
    const config::Experiment exp = config::build_experiment(assemble(c, flags));
    optimizer::RunOptions opts;
    opts.threads = x.threads;
    if (!x.kernel.empty()) opts.isa = kernels::parse_isa(x.kernel);
    const std::string csv = config::format_sweep_csv(config::run_sweep(exp, opts));
    std::fwrite(csv.data(), 1, csv.size(), stdout);
    write_out(c.out, csv);
    return 0;
}

// Standard score with exact-agreement handling for constant estimators.
double z_score(double sim, double se, double analytic) {
    const double diff = sim - analytic;
    if (se > 0.0 && std::isfinite(se)) return diff / se;
    return std::abs(diff) <= 1e-12 * std::max(std::abs(analytic), 1e-300) || diff == 0.0
               ? 0.0
               : std::numeric_limits<double>::infinity();
}

int cmd_validate(const Common& c, const Extra& x) {
    auto flags = alloc_flags(x);
    if (!c.lambda.empty()) flags.emplace_back("traffic.lambda", c.lambda);
    if (x.slots) flags.emplace_back("sim.slots", std::to_string(*x.slots));
    if (x.reps) flags.emplace_back("sim.reps", std::to_string(*x.reps));
    if (x.seed) flags.emplace_back("sim.seed", std::to_string(*x.seed));
    const config::Experiment exp = config::build_experiment(assemble(c, flags));

    std::string csv = "series,metric,analytic,simulated,stderr,z\n";
    bool failed = false;
    std::printf("%-16s %-7s %14s %14s %12s %8s\n", "series", "metric", "analytic", "simulated", "stderr", "z");
    for (const auto& s : exp.series) {
        const Allocation alloc = Allocation::from_fractions(s.params, s.protocol, exp.t_frac, exp.w_frac);
        ProtocolMetrics m = evaluate(s.params, alloc, s.protocol);
        if (!m.stable && !x.allow_unstable)
            throw InvariantError(s.label + ": queue unstable at lambda = " + num(s.params.lambda_p) +
                                 " (mu = " + num(m.mu_p) + "); pass --allow-unstable to compare saturated metrics");
        simulator::SimConfig sc;
        sc.n_slots = exp.sim.slots;
        sc.warmup_slots = exp.sim.warmup;
        sc.seed = exp.sim.seed;
        sc.protocol = s.protocol;
        sc.params = s.params;
        sc.alloc = alloc;
        const simulator::SimReport r = simulator::replicate(sc, exp.sim.reps);

        struct Row {
            const char* name;
            double analytic;
            simulator::Estimate sim;
        };
        std::vector<Row> rows;
        if (s.params.lambda_p > 0.0) rows.push_back({"mu", m.mu_p + x.mu_bias, r.mu});
        rows.push_back({"nu0", m.nu0, r.nu0});
        if (m.stable && s.params.lambda_p > 0.0) rows.push_back({"delay", m.delay, r.delay});
        rows.push_back({"rate", m.mean_rate, r.rate});
        rows.push_back({"energy", m.mean_energy, r.energy});
        for (const auto& row : rows) {
            const double z = z_score(row.sim.value, row.sim.se, row.analytic);
            failed = failed || !(std::abs(z) <= 4.0);
            std::printf("%-16s %-7s %14s %14s %12s %8.3f\n", s.label.c_str(), row.name, num(row.analytic).c_str(),
                        num(row.sim.value).c_str(), num(row.sim.se).c_str(), z);
            csv += s.label + ',' + row.name + ',' + num(row.analytic) + ',' + num(row.sim.value) + ',' +
                   num(row.sim.se) + ',' + num(z) + '\n';
        }
    }
    write_out(c.out, csv);
    std::printf("%s\n", failed ? "FAIL: |z| > 4 for at least one metric" : "OK: all |z| <= 4");
    return failed ? kExitValidation : 0;
}

int cmd_presets(const std::string& name) {
    if (name.empty()) {
        for (const auto& n : config::preset_names()) std::printf("%s\n", n.c_str());
        return 0;
    }
    const config::Config cfg = config::preset(name);
    for (const auto& [k, v] : cfg.values()) std::printf("%s = %s\n", k.c_str(), v.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cooperative cognitive relaying: analysis, optimization and simulation"};
    app.require_subcommand(1);
    Common common;
    Extra extra;

    auto* eval = app.add_subcommand("evaluate", "metrics for one allocation");
    add_common(eval, common);
    eval->add_option("--lambda", common.lambda, "primary arrival rate");
    eval->add_option("--tp", extra.tp, "T_p as a fraction of the transmission window");
    eval->add_option("--wp", extra.wp, "W_p as a fraction of W");

    auto* opt = app.add_subcommand("optimize", "grid-search sweep over lambda, CSV on stdout");
    add_common(opt, common);
    opt->add_option("--lambda", common.lambda, "list a,b,c or range start:step:stop");
    opt->add_option("--grid", extra.grid, "grid size NxM");
    opt->add_option("--threads", extra.threads, "worker threads (0: all cores)");
    opt->add_option("--kernel", extra.kernel, "scalar or avx2 (default: best available)");

    auto* val = app.add_subcommand("validate", "analytic metrics vs slot-level simulation");
    add_common(val, common);
    val->add_option("--lambda", common.lambda, "primary arrival rate");
    val->add_option("--tp", extra.tp, "T_p as a fraction of the transmission window");
    val->add_option("--wp", extra.wp, "W_p as a fraction of W");
    val->add_option("--slots", extra.slots, "slots per replication, warmup included");
    val->add_option("--reps", extra.reps, "replications");
    val->add_option("--seed", extra.seed, "base seed");
    val->add_flag("--allow-unstable", extra.allow_unstable, "compare saturated metrics for unstable queues");
    val->add_option("--inject-mu-bias", extra.mu_bias)->group("");

    std::string preset_name;
    auto* pre = app.add_subcommand("presets", "list presets, or print one");
    pre->add_option("name", preset_name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*eval) return cmd_evaluate(common, extra);
        if (*opt) return cmd_optimize(common, extra);
        if (*val) return cmd_validate(common, extra);
        if (*pre) return cmd_presets(preset_name);
    } catch (const config::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const InvariantError& e) {
        std::fprintf(stderr, "invalid parameters: %s\n", e.what());
        return kExitInvariant;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
