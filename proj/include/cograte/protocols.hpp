#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "cograte/sensing.hpp"

namespace cograte {

enum class Protocol { NC, P1, P2 };

std::string_view to_string(Protocol p);
/// Accepts "NC", "P1", "P2" (case-insensitive). Throws std::invalid_argument.
Protocol parse_protocol(std::string_view text);

/// Physical and protocol constants for one primary/secondary pair.
struct SystemParams {
    double w = 10e6;       ///< total bandwidth W, Hz
    double t = 5e-3;       ///< slot duration T, s
    double tau_f = 0.25e-3;
    double tau_s = 0.25e-3;
    double b = 5000.0;     ///< packet size, bits
    double p0 = 1e-10;     ///< PSD of every transmitter, W/Hz
    double n0 = 1e-11;     ///< noise PSD, W/Hz
    double sigma_p_pd = 0.005;
    double sigma_p_s = 1.0;
    double sigma_s_pd = 0.1;
    double sigma_s_sd = 0.1;
    double f = 1.0;        ///< probability the SU decodes the primary feedback
    double omega = 1.0;    ///< probability an undecoded feedback is taken as NACK
    double energy_budget = 5e-6;  ///< E, J/slot
    double target_pfa = 0.1;
    double lambda_p = 0.0;  ///< primary arrivals, packets/slot

    /// Throws InvariantError naming the first violated constraint.
    void validate() const;

    /// T - tau_f for NC/P1, T - 2 tau_f for P2.
    [[nodiscard]] double transmission_window(Protocol p) const;
    [[nodiscard]] double beta() const { return f + (1.0 - f) * omega; }
    [[nodiscard]] sensing::SensingParams sensing_base() const;
};

/// Primary share of the slot: transmission time T_p and subband W_p.
/// The secondary gets T_s = window - T_p and W_s = W - W_p.
struct Allocation {
    double t_p;
    double w_p;

    static Allocation from_fractions(const SystemParams& params, Protocol p, double t_frac,
                                     double w_frac);
};

struct AllocationView {
    double t_p;
    double w_p;
    double t_s;
    double w_s;
    double delta_s;  ///< W_s / W
};

/// Derived quantities; throws InvariantError unless tau_s <= T_p <= window and 0 <= W_p <= W.
AllocationView resolve(const SystemParams& params, Protocol p, const Allocation& alloc);
bool within_bounds(const SystemParams& params, Protocol p, const Allocation& alloc);

struct LinkStats {
    double out_p_pd = 1.0;
    double out_p_s = 1.0;
    double out_s_pd = 1.0;
    double succ_p_pd_int = 0.0;  ///< decoding probability at pd under SU interference
    double p_md = 1.0;
    double p_fa = 0.0;
    double threshold = 0.0;      ///< energy-detector threshold, W (NaN when no subband)
    double gamma_f = 1.0;        ///< P(SU treats the overheard feedback as NACK), omega = 1 form
    double beta = 1.0;           ///< f + (1-f) omega
};

/// Outages for p->pd and p->s at (b, T_p, W_p), s->pd at (b, T_s, W_p),
/// sensing errors at (tau_s, W_p). Subbands too narrow for a single sensing
/// sample (including W_p = 0) report p_md = 1 and p_fa = target.
LinkStats link_stats(const SystemParams& params, Protocol p, const Allocation& alloc,
                     sensing::SensingCache* cache = nullptr);

/// The channel part of link_stats; sensing fields are left at their defaults.
LinkStats channel_stats(const SystemParams& params, Protocol p, const Allocation& alloc);

double mu_nc(const SystemParams& params);
double mu_p1(const LinkStats& stats);
double mu_p2(const LinkStats& stats);

/// Expected secondary capacity W-scaled factor: E[log2(1 + alpha_s,sd P0/N0)].
double secondary_capacity(const SystemParams& params);

struct SecondaryRates {
    double rate_empty;  ///< bits/slot when the primary queue is empty
    double rate_busy;   ///< bits/slot when it is not
    double mean_rate;
};

/// Mean rate mixes the two with nu_0 = 1 - lambda/mu; throws InstabilityError
/// when mu <= lambda (and lambda > 0).
SecondaryRates secondary_rate_p1(const SystemParams& params, const Allocation& alloc,
                                 const LinkStats& stats, double g);
SecondaryRates secondary_rate_p2(const SystemParams& params, const Allocation& alloc,
                                 const LinkStats& stats, double g);

struct SecondaryEnergy {
    double energy_empty;
    double energy_busy;
    double mean_energy;
};

SecondaryEnergy energy_split_p1(const SystemParams& params, const Allocation& alloc,
                                const LinkStats& stats);
SecondaryEnergy energy_split_p2(const SystemParams& params, const Allocation& alloc,
                                const LinkStats& stats);
double mean_energy_p1(const SystemParams& params, const Allocation& alloc, const LinkStats& stats);
double mean_energy_p2(const SystemParams& params, const Allocation& alloc, const LinkStats& stats);

/// Comparison a > b with a 1e-12 relative guard.
bool strictly_greater(double a, double b);
/// Comparison a <= b with a 1e-12 relative guard.
bool at_most(double a, double b);

enum Violation : std::uint32_t {
    kNone = 0,
    kUnstable = 1u << 0,          ///< mu <= lambda
    kNoDelayGain = 1u << 1,       ///< mu <= mu_nc (cooperative delay not below D_nc)
    kEnergy = 1u << 2,            ///< mean energy above E
    kBounds = 1u << 3,            ///< allocation outside the box
};

std::string describe_violations(std::uint32_t mask);

struct ProtocolMetrics {
    Protocol protocol = Protocol::NC;
    double mu_p = 0.0;
    double mu_nc = 0.0;
    double nu0 = 0.0;      ///< 0 for unstable queues (saturated)
    double delay = 0.0;    ///< slots; +inf when unstable
    double rate_empty = 0.0;
    double rate_busy = 0.0;
    double mean_rate = 0.0;   ///< for unstable queues: the busy-slot value
    double energy_empty = 0.0;
    double energy_busy = 0.0;
    double mean_energy = 0.0;
    bool stable = false;
    bool feasible = false;
    std::uint32_t violations = kNone;
    LinkStats stats{};
};

/// All metrics for one protocol and allocation. NC ignores the allocation and
/// leaves the SU silent. Infeasibility is reported through `violations`.
ProtocolMetrics evaluate(const SystemParams& params, const Allocation& alloc, Protocol protocol,
                         sensing::SensingCache* cache = nullptr);

/// Combine lambda-independent per-slot values into lambda-dependent metrics.
/// Shared by evaluate() and the grid reduction.
void finalize_metrics(ProtocolMetrics& m, double lambda_p, double energy_budget);

}  // namespace cograte
