#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string_view>

#include "cograte/protocols.hpp"

namespace cograte::simulator {

struct SimConfig {
    std::uint64_t n_slots = 1'000'000;  ///< total, warmup included
    std::uint64_t seed = 1;
    std::uint64_t warmup_slots = 10'000;
    Protocol protocol = Protocol::P1;
    SystemParams params{};
    Allocation alloc{0.0, 0.0};  ///< ignored for NC
    /// Reuse the p->s decoding gain for sensing. Off: sensing sees its own
    /// draw of the p->s gain, matching the independence the closed forms assume.
    bool shared_sensing_gain = false;

    void validate() const;
};

enum class SensingOutcome { Detected, Missed, FalseAlarm, TrueIdle };

std::string_view to_string(SensingOutcome s);

struct SlotTrace {
    std::uint64_t queue_len_before = 0;
    bool arrival = false;
    bool primary_tx = false;
    SensingOutcome sensing = SensingOutcome::TrueIdle;
    bool direct_success = false;
    bool relay_attempted = false;
    bool relay_success = false;
    bool feedback_heard = false;
    double su_energy = 0.0;  ///< J
    double su_bits = 0.0;
};

/// Receives every simulated slot, warmup included.
using TraceSink = std::function<void(std::uint64_t slot, const SlotTrace&)>;

/// Header and one CSV record per slot, in SlotTrace field order.
void write_trace_header(std::ostream& out);
void write_trace_line(std::ostream& out, std::uint64_t slot, const SlotTrace& t);

struct Estimate {
    double value = 0.0;
    double se = 0.0;  ///< standard error; 0 when the estimator is constant over the run
};

struct SimReport {
    Estimate mu;      ///< departures per busy slot; NaN when no slot was busy
    Estimate nu0;     ///< fraction of slots starting with an empty queue
    Estimate delay;   ///< slots from arrival to departure; NaN without departures
    Estimate rate;    ///< SU bits per slot
    Estimate energy;  ///< SU joules per slot
    std::uint64_t slots_used = 0;
    std::uint64_t departures = 0;
    std::uint64_t busy_slots = 0;
    std::uint64_t final_queue = 0;
    bool unstable = false;  ///< backlog grew far beyond stationary fluctuations
};

SimReport run(const SimConfig& config, const TraceSink& trace = {});

/// n_reps independent runs with seeds derived from config.seed. Values are
/// replication means; the stderr pools the per-run batch-means errors.
/// n_reps = 1 returns run(config) unchanged. threads = 0 uses the hardware count.
SimReport replicate(const SimConfig& config, unsigned n_reps, unsigned threads = 0);

}  // namespace cograte::simulator
