#include "cograte/protocols.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cograte/channel.hpp"
#include "cograte/error.hpp"
#include "cograte/queueing.hpp"

namespace cograte {

std::string_view to_string(Protocol p) {
    switch (p) {
        case Protocol::NC: return "NC";
        case Protocol::P1: return "P1";
        case Protocol::P2: return "P2";
    }
    return "?";
}

Protocol parse_protocol(std::string_view text) {
    std::string upper(text);
    for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (upper == "NC") return Protocol::NC;
    if (upper == "P1") return Protocol::P1;
    if (upper == "P2") return Protocol::P2;
    throw std::invalid_argument("unknown protocol '" + std::string(text) + "' (expected NC, P1 or P2)");
}

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw InvariantError(what);
}

bool unit_interval(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

void SystemParams::validate() const {
    require(w > 0.0, "W must be > 0");
    require(t > 0.0, "T must be > 0");
    require(b > 0.0, "b must be > 0");
    require(p0 > 0.0 && n0 > 0.0, "P0 and N0 must be > 0");
    require(tau_s > 0.0, "tau_s must be > 0");
    require(tau_f >= 0.0, "tau_f must be >= 0");
    require(tau_s < t, "tau_s must be < T");
    require(tau_s + tau_f < t, "tau_s + tau_f must be < T");
    require(sigma_p_pd > 0.0 && sigma_p_s > 0.0 && sigma_s_pd > 0.0 && sigma_s_sd > 0.0,
            "all mean channel gains must be > 0");
    require(unit_interval(f), "f must lie in [0,1]");
    require(unit_interval(omega), "omega must lie in [0,1]");
    require(energy_budget >= 0.0, "E must be >= 0");
    require(target_pfa > 0.0 && target_pfa < 1.0, "target P_FA must lie in (0,1)");
    require(unit_interval(lambda_p), "lambda_p must lie in [0,1]");
}

double SystemParams::transmission_window(Protocol p) const {
    return p == Protocol::P2 ? t - 2.0 * tau_f : t - tau_f;
}

sensing::SensingParams SystemParams::sensing_base() const {
    return {tau_s, w, p0, n0, sigma_p_s, target_pfa};
}

Allocation Allocation::from_fractions(const SystemParams& params, Protocol p, double t_frac,
                                      double w_frac) {
    return {t_frac * params.transmission_window(p), w_frac * params.w};
}

bool within_bounds(const SystemParams& params, Protocol p, const Allocation& alloc) {
    const double window = params.transmission_window(p);
    return alloc.t_p >= params.tau_s && alloc.t_p <= window && alloc.w_p >= 0.0 &&
           alloc.w_p <= params.w;
}

AllocationView resolve(const SystemParams& params, Protocol p, const Allocation& alloc) {
    if (!within_bounds(params, p, alloc))
        throw InvariantError("allocation outside tau_s <= T_p <= window, 0 <= W_p <= W");
    const double window = params.transmission_window(p);
    const double w_s = params.w - alloc.w_p;
    return {alloc.t_p, alloc.w_p, window - alloc.t_p, w_s, w_s / params.w};
}

LinkStats channel_stats(const SystemParams& params, Protocol p, const Allocation& alloc) {
    const AllocationView view = resolve(params, p, alloc);
    const channel::TransmissionSpec primary{params.b, view.t_p, view.w_p};
    const channel::TransmissionSpec relay{params.b, view.t_s, view.w_p};
    auto link = [&](double sigma) { return channel::LinkParams{sigma, params.p0, params.n0}; };

    LinkStats s;
    s.out_p_pd = channel::outage_prob(primary, link(params.sigma_p_pd));
    s.out_p_s = channel::outage_prob(primary, link(params.sigma_p_s));
    s.out_s_pd = channel::outage_prob(relay, link(params.sigma_s_pd));
    s.succ_p_pd_int =
        channel::interference_success_prob(primary, link(params.sigma_p_pd), params.sigma_s_pd);
    s.beta = params.beta();
    s.gamma_f = s.out_p_pd * params.f + (1.0 - params.f);
    return s;
}

LinkStats link_stats(const SystemParams& params, Protocol p, const Allocation& alloc,
                     sensing::SensingCache* cache) {
    LinkStats s = channel_stats(params, p, alloc);
    const AllocationView view = resolve(params, p, alloc);
    sensing::SensingParams sp = params.sensing_base();
    sp.w_p = view.w_p;
    if (sp.sample_count() >= 1.0) {
        const sensing::SensingErrors e = cache ? cache->get(view.w_p) : sensing::sensing_errors(sp);
        s.p_md = e.p_md;
        s.p_fa = e.p_fa;
        s.threshold = e.threshold;
    } else {
        s.p_md = 1.0;
        s.p_fa = params.target_pfa;
        s.threshold = std::numeric_limits<double>::quiet_NaN();
    }
    return s;
}

double mu_nc(const SystemParams& params) {
    params.validate();
    const channel::TransmissionSpec spec{params.b, params.t - params.tau_f, params.w};
    return 1.0 - channel::outage_prob(spec, {params.sigma_p_pd, params.p0, params.n0});
}

namespace {

double service_rate(const LinkStats& s, double relay_weight) {
    const double relay_on = (1.0 - s.out_p_s) * (1.0 - s.out_s_pd);
    return (1.0 - s.p_md) * (1.0 - s.out_p_pd * (1.0 - relay_weight * relay_on)) +
           s.p_md * s.succ_p_pd_int;
}

double empty_probability(double lambda_p, double mu) {
    return queueing::empty_prob({lambda_p, std::clamp(mu, 0.0, 1.0)});
}

}  // namespace

double mu_p1(const LinkStats& stats) { return service_rate(stats, 1.0); }

double mu_p2(const LinkStats& stats) { return service_rate(stats, stats.beta); }

double secondary_capacity(const SystemParams& params) {
    return channel::expected_log_capacity({params.sigma_s_sd, params.p0, params.n0});
}

SecondaryRates secondary_rate_p1(const SystemParams& params, const Allocation& alloc,
                                 const LinkStats& s, double g) {
    const AllocationView v = resolve(params, Protocol::P1, alloc);
    const double ds = v.delta_s;
    const double scale = params.w * g;
    const double empty = (params.tau_s * ds + (v.t_p - params.tau_s) * (s.p_fa * ds + 1.0 - s.p_fa) +
                          (v.t_s + params.tau_f)) *
                         scale;
    const double busy = ((params.tau_f + v.t_p) * ds + (s.p_md + (1.0 - s.p_md) * s.out_p_s) * v.t_s +
                         (1.0 - s.p_md) * (1.0 - s.out_p_s) * v.t_s *
                             ((1.0 - s.out_s_pd) * ds + s.out_s_pd)) *
                        scale;
    const double nu0 = empty_probability(params.lambda_p, mu_p1(s));
    return {empty, busy, nu0 * empty + (1.0 - nu0) * busy};
}

SecondaryRates secondary_rate_p2(const SystemParams& params, const Allocation& alloc,
                                 const LinkStats& s, double g) {
    const AllocationView v = resolve(params, Protocol::P2, alloc);
    const double ds = v.delta_s;
    const double scale = params.w * g;
    const double empty = (params.tau_s * ds + (v.t_p - params.tau_s) * (1.0 - s.p_fa + s.p_fa * ds) +
                          v.t_s + 2.0 * params.tau_f) *
                         scale;
    const double relay_phase =
        (1.0 - s.out_p_s) * (s.gamma_f * ((1.0 - s.out_s_pd) * ds + s.out_s_pd) + (1.0 - s.gamma_f)) +
        s.out_p_s;
    const double busy = ((2.0 * params.tau_f + v.t_p) * ds + (1.0 - s.p_md) * v.t_s * relay_phase +
                         s.p_md * v.t_s) *
                        scale;
    const double nu0 = empty_probability(params.lambda_p, mu_p2(s));
    return {empty, busy, nu0 * empty + (1.0 - nu0) * busy};
}

namespace {

// Per-slot SU energy; `feedback_phases` is 1 for P1 and 2 for P2.
SecondaryEnergy energy_split(const SystemParams& params, const AllocationView& v, const LinkStats& s,
                             double mu, int feedback_phases) {
    const double ds = v.delta_s;
    const double scale = params.w * params.p0;
    const double fb = feedback_phases * params.tau_f;
    const double empty =
        (params.tau_s * ds + (v.t_p - params.tau_s) * (s.p_fa * ds + 1.0 - s.p_fa) + v.t_s + fb) * scale;
    const double busy = ((fb + params.tau_s) * ds +
                         (v.t_p - params.tau_s) * ((1.0 - s.p_md) * ds + s.p_md) + v.t_s) *
                        scale;
    const double nu0 = empty_probability(params.lambda_p, mu);
    return {empty, busy, nu0 * empty + (1.0 - nu0) * busy};
}

}  // namespace

SecondaryEnergy energy_split_p1(const SystemParams& params, const Allocation& alloc,
                                const LinkStats& stats) {
    return energy_split(params, resolve(params, Protocol::P1, alloc), stats, mu_p1(stats), 1);
}

SecondaryEnergy energy_split_p2(const SystemParams& params, const Allocation& alloc,
                                const LinkStats& stats) {
    return energy_split(params, resolve(params, Protocol::P2, alloc), stats, mu_p2(stats), 2);
}

double mean_energy_p1(const SystemParams& params, const Allocation& alloc, const LinkStats& stats) {
    return energy_split_p1(params, alloc, stats).mean_energy;
}

double mean_energy_p2(const SystemParams& params, const Allocation& alloc, const LinkStats& stats) {
    return energy_split_p2(params, alloc, stats).mean_energy;
}

bool strictly_greater(double a, double b) { return a > b + 1e-12 * std::abs(b); }

bool at_most(double a, double b) { return a <= b + 1e-12 * std::abs(b); }

std::string describe_violations(std::uint32_t mask) {
    if (mask == kNone) return "none";
    std::string out;
    auto add = [&](std::uint32_t bit, const char* text) {
        if (!(mask & bit)) return;
        if (!out.empty()) out += ", ";
        out += text;
    };
    add(kUnstable, "unstable (mu <= lambda)");
    add(kNoDelayGain, "no delay gain (mu <= mu_nc)");
    add(kEnergy, "energy above budget");
    add(kBounds, "allocation out of bounds");
    return out;
}

void finalize_metrics(ProtocolMetrics& m, double lambda_p, double energy_budget) {
    m.stable = lambda_p == 0.0 || strictly_greater(m.mu_p, lambda_p);
    std::uint32_t v = m.violations & kBounds;
    if (!m.stable) v |= kUnstable;
    if (m.stable) {
        m.nu0 = lambda_p == 0.0 ? 1.0 : 1.0 - lambda_p / m.mu_p;
        m.delay = lambda_p == 0.0 ? 1.0 : (1.0 - lambda_p) / (m.mu_p - lambda_p);
    } else {
        m.nu0 = 0.0;
        m.delay = std::numeric_limits<double>::infinity();
    }
    m.mean_rate = m.nu0 * m.rate_empty + (1.0 - m.nu0) * m.rate_busy;
    m.mean_energy = m.nu0 * m.energy_empty + (1.0 - m.nu0) * m.energy_busy;
    if (m.protocol != Protocol::NC) {
        if (!strictly_greater(m.mu_p, m.mu_nc)) v |= kNoDelayGain;
        if (!(m.mean_energy >= 0.0 && at_most(m.mean_energy, energy_budget))) v |= kEnergy;
    }
    m.violations = v;
    m.feasible = v == kNone;
}

ProtocolMetrics evaluate(const SystemParams& params, const Allocation& alloc, Protocol protocol,
                         sensing::SensingCache* cache) {
    params.validate();
    ProtocolMetrics m;
    m.protocol = protocol;
    m.mu_nc = mu_nc(params);
    if (protocol == Protocol::NC) {
        m.mu_p = m.mu_nc;
        m.stats.out_p_pd = 1.0 - m.mu_nc;
        m.stats.p_md = 0.0;
        m.stats.p_fa = 0.0;
        finalize_metrics(m, params.lambda_p, params.energy_budget);
        return m;
    }
    if (!within_bounds(params, protocol, alloc)) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        m.mu_p = m.nu0 = m.delay = m.rate_empty = m.rate_busy = m.mean_rate = nan;
        m.energy_empty = m.energy_busy = m.mean_energy = nan;
        m.violations = kBounds;
        return m;
    }
    m.stats = link_stats(params, protocol, alloc, cache);
    const double g = secondary_capacity(params);
    // Per-slot values do not depend on lambda; evaluate them at lambda = 0
    // so the mixing below is the only lambda-dependent step.
    SystemParams idle = params;
    idle.lambda_p = 0.0;
    if (protocol == Protocol::P1) {
        m.mu_p = mu_p1(m.stats);
        const SecondaryRates r = secondary_rate_p1(idle, alloc, m.stats, g);
        const SecondaryEnergy e = energy_split_p1(idle, alloc, m.stats);
        m.rate_empty = r.rate_empty;
        m.rate_busy = r.rate_busy;
        m.energy_empty = e.energy_empty;
        m.energy_busy = e.energy_busy;
    } else {
        m.mu_p = mu_p2(m.stats);
        const SecondaryRates r = secondary_rate_p2(idle, alloc, m.stats, g);
        const SecondaryEnergy e = energy_split_p2(idle, alloc, m.stats);
        m.rate_empty = r.rate_empty;
        m.rate_busy = r.rate_busy;
        m.energy_empty = e.energy_empty;
        m.energy_busy = e.energy_busy;
    }
    finalize_metrics(m, params.lambda_p, params.energy_budget);
    return m;
}

}  // namespace cograte
