#include "cograte/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "cograte/channel.hpp"
#include "cograte/error.hpp"
#include "cograte/rng.hpp"
#include "cograte/sensing.hpp"

namespace cograte::simulator {

void SimConfig::validate() const {
    params.validate();
    if (!(n_slots > warmup_slots)) throw InvariantError("n_slots must exceed warmup_slots");
    if (protocol != Protocol::NC) resolve(params, protocol, alloc);
}

std::string_view to_string(SensingOutcome s) {
    switch (s) {
        case SensingOutcome::Detected: return "detected";
        case SensingOutcome::Missed: return "missed";
        case SensingOutcome::FalseAlarm: return "false_alarm";
        case SensingOutcome::TrueIdle: return "true_idle";
    }
    return "?";
}

void write_trace_header(std::ostream& out) {
    out << "slot,queue_len_before,arrival,primary_tx,sensing,direct_success,relay_attempted,"
           "relay_success,feedback_heard,su_energy,su_bits\n";
}

void write_trace_line(std::ostream& out, std::uint64_t slot, const SlotTrace& t) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%llu,%llu,%d,%d,%s,%d,%d,%d,%d,%.9g,%.9g\n",
                  static_cast<unsigned long long>(slot),
                  static_cast<unsigned long long>(t.queue_len_before), t.arrival, t.primary_tx,
                  std::string(to_string(t.sensing)).c_str(), t.direct_success, t.relay_attempted,
                  t.relay_success, t.feedback_heard, t.su_energy, t.su_bits);
    out << buf;
}

namespace {

// Draw indices within a slot.
enum Draw : std::uint64_t {
    kArrival = 0,
    kGainPs,
    kGainPpd,
    kGainSpd,
    kSenseUniform,
    kGainSsd,
    kFeedbackHeard,
    kFeedbackGuess,
    kGainSense,
};

struct Thresholds {
    bool primary_ok = false;  // b/(W_p T_p) within the cap
    bool relay_ok = false;
    double sinr_primary = 0.0;  // 2^x - 1
    double sinr_relay = 0.0;
};

double sinr_threshold(double bits, double duration, double bandwidth, bool& ok) {
    const channel::TransmissionSpec spec{bits, duration, bandwidth};
    ok = !spec.saturated();
    return ok ? std::expm1(spec.rate_exponent() * std::numbers::ln2) : 0.0;
}

// Accumulates batch sums for batch-means standard errors.
class BatchStats {
public:
    explicit BatchStats(std::uint64_t used) {
        batches_ = static_cast<std::size_t>(std::min<std::uint64_t>(100, std::max<std::uint64_t>(used, 1)));
        size_ = std::max<std::uint64_t>(1, used / batches_);
        num_.assign(batches_, 0.0);
        den_.assign(batches_, 0.0);
    }

    [[nodiscard]] std::size_t batch_of(std::uint64_t k) const {
        return static_cast<std::size_t>(std::min<std::uint64_t>(k / size_, batches_ - 1));
    }

    void add(std::size_t b, double num, double den) {
        num_[b] += num;
        den_[b] += den;
    }

    // Ratio estimator sum(num)/sum(den) with a delta-method batch stderr.
    [[nodiscard]] Estimate ratio() const {
        double n = 0.0, d = 0.0;
        for (std::size_t b = 0; b < batches_; ++b) {
            n += num_[b];
            d += den_[b];
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        if (d == 0.0) return {nan, nan};
        const double r = n / d;
        if (batches_ < 2) return {r, std::numeric_limits<double>::infinity()};
        const double mean_den = d / static_cast<double>(batches_);
        double ss = 0.0;
        for (std::size_t b = 0; b < batches_; ++b) {
            const double e = num_[b] - r * den_[b];
            ss += e * e;
        }
        const double k = static_cast<double>(batches_);
        return {r, std::sqrt(ss / (k * (k - 1.0))) / mean_den};
    }

private:
    std::size_t batches_;
    std::uint64_t size_;
    std::vector<double> num_, den_;
};

struct Engine {
    const SimConfig& cfg;
    rng::CounterRng gen;
    AllocationView view{};
    Thresholds th;
    double nc_sinr = 0.0;
    bool nc_ok = false;
    bool can_sense = false;
    sensing::SensingParams sp{};
    double eps = 0.0;
    double p_fa = 0.0;
    double log_gain_scale = 0.0;  // P0/N0

    explicit Engine(const SimConfig& c) : cfg(c), gen(c.seed) {
        const SystemParams& p = cfg.params;
        nc_sinr = sinr_threshold(p.b, p.t - p.tau_f, p.w, nc_ok);
        log_gain_scale = p.p0 / p.n0;
        if (cfg.protocol == Protocol::NC) return;
        view = resolve(p, cfg.protocol, cfg.alloc);
        th.sinr_primary = sinr_threshold(p.b, view.t_p, view.w_p, th.primary_ok);
        th.sinr_relay = sinr_threshold(p.b, view.t_s, view.w_p, th.relay_ok);
        sp = p.sensing_base();
        sp.w_p = view.w_p;
        can_sense = sp.sample_count() >= 1.0;
        if (can_sense) {
            eps = sensing::detection_threshold(sp);
            p_fa = sensing::false_alarm_prob(sp, eps);
        } else {
            p_fa = p.target_pfa;
        }
    }

    // Decodes iff alpha >= (N0/P0)(2^x - 1).
    [[nodiscard]] bool decodes(double alpha, bool ok, double sinr) const {
        return ok && alpha * log_gain_scale >= sinr;
    }

    SlotTrace slot(std::uint64_t t, std::uint64_t queue) const {
        const SystemParams& p = cfg.params;
        SlotTrace s;
        s.queue_len_before = queue;
        s.arrival = gen.uniform(t, kArrival) < p.lambda_p;
        s.primary_tx = queue > 0;

        if (cfg.protocol == Protocol::NC) {
            s.sensing = s.primary_tx ? SensingOutcome::Detected : SensingOutcome::TrueIdle;
            if (s.primary_tx)
                s.direct_success = decodes(gen.exponential(t, kGainPpd, p.sigma_p_pd), nc_ok, nc_sinr);
            return s;
        }

        const bool p2 = cfg.protocol == Protocol::P2;
        const double ds = view.delta_s;
        const double fb = p2 ? 2.0 * p.tau_f : p.tau_f;
        const double sense_gap = view.t_p - p.tau_s;
        // Time-bandwidth products (in units of W*s) credited with bits and
        // charged with energy.
        double credited = 0.0;
        double active = 0.0;

        if (!s.primary_tx) {
            const bool alarm = gen.uniform(t, kSenseUniform) < p_fa;
            s.sensing = alarm ? SensingOutcome::FalseAlarm : SensingOutcome::TrueIdle;
            const double tp_share = alarm ? ds : 1.0;
            credited = p.tau_s * ds + sense_gap * tp_share + view.t_s + fb;
            active = credited;
        } else {
            const double a_ps = gen.exponential(t, kGainPs, p.sigma_p_s);
            const double a_ppd = gen.exponential(t, kGainPpd, p.sigma_p_pd);
            const double a_spd = gen.exponential(t, kGainSpd, p.sigma_s_pd);
            bool detected = false;
            if (can_sense) {
                const double a_sense =
                    cfg.shared_sensing_gain ? a_ps : gen.exponential(t, kGainSense, p.sigma_p_s);
                detected = gen.uniform(t, kSenseUniform) <
                           sensing::conditional_detection_prob(sp, eps, a_sense);
            }
            s.sensing = detected ? SensingOutcome::Detected : SensingOutcome::Missed;
            if (!detected) {
                // SU occupies W_p during the rest of T_p: SINR at the destination.
                s.direct_success = th.primary_ok && a_ppd * log_gain_scale >= th.sinr_primary * (1.0 + a_spd * log_gain_scale);
                credited = (fb + view.t_p) * ds + view.t_s;
                active = (fb + p.tau_s) * ds + sense_gap + view.t_s;
            } else {
                s.direct_success = decodes(a_ppd, th.primary_ok, th.sinr_primary);
                const bool relayed = decodes(a_ps, th.primary_ok, th.sinr_primary);
                const bool relay_on = decodes(a_spd, th.relay_ok, th.sinr_relay);
                bool nack = true;
                if (p2) {
                    s.feedback_heard = gen.uniform(t, kFeedbackHeard) < p.f;
                    nack = s.feedback_heard ? !s.direct_success
                                            : gen.uniform(t, kFeedbackGuess) < p.omega;
                }
                s.relay_attempted = relayed && relay_on && nack;
                s.relay_success = s.relay_attempted;
                const double ts_share = s.relay_attempted ? ds : 1.0;
                credited = (fb + view.t_p) * ds + view.t_s * ts_share;
                active = (fb + view.t_p) * ds + view.t_s;
            }
        }
        const double capacity = std::log2(1.0 + gen.exponential(t, kGainSsd, p.sigma_s_sd) * log_gain_scale);
        s.su_bits = credited * p.w * capacity;
        s.su_energy = active * p.w * p.p0;
        return s;
    }
};

}  // namespace

SimReport run(const SimConfig& config, const TraceSink& trace) {
    config.validate();
    const Engine engine(config);
    const std::uint64_t used = config.n_slots - config.warmup_slots;
    BatchStats mu(used), nu0(used), delay(used), rate(used), energy(used);

    std::deque<std::uint64_t> queue;  // arrival slots, head first
    SimReport rep;
    rep.slots_used = used;
    std::uint64_t arrivals = 0;
    for (std::uint64_t t = 0; t < config.n_slots; ++t) {
        const SlotTrace s = engine.slot(t, queue.size());
        if (trace) trace(t, s);
        const bool success = s.primary_tx && (s.direct_success || s.relay_success);
        std::uint64_t sojourn = 0;
        if (success) {
            sojourn = t - queue.front();
            queue.pop_front();
        }
        // Departures happen before arrivals: a packet never leaves in its arrival slot.
        if (s.arrival) queue.push_back(t);

        if (t < config.warmup_slots) continue;
        const std::size_t b = mu.batch_of(t - config.warmup_slots);
        mu.add(b, success ? 1.0 : 0.0, s.primary_tx ? 1.0 : 0.0);
        nu0.add(b, s.primary_tx ? 0.0 : 1.0, 1.0);
        if (success) delay.add(b, static_cast<double>(sojourn), 1.0);
        rate.add(b, s.su_bits, 1.0);
        energy.add(b, s.su_energy, 1.0);
        rep.departures += success ? 1 : 0;
        rep.busy_slots += s.primary_tx ? 1 : 0;
        arrivals += s.arrival ? 1 : 0;
    }
    rep.mu = mu.ratio();
    rep.nu0 = nu0.ratio();
    rep.delay = delay.ratio();
    rep.rate = rate.ratio();
    rep.energy = energy.ratio();
    rep.final_queue = queue.size();
    const double net = static_cast<double>(arrivals) - static_cast<double>(rep.departures);
    rep.unstable = net > 3.0 * std::sqrt(static_cast<double>(arrivals)) + 50.0;
    return rep;
}

SimReport replicate(const SimConfig& config, unsigned n_reps, unsigned threads) {
    if (n_reps < 1) throw InvariantError("n_reps must be >= 1");
    if (n_reps == 1) return run(config);
    config.validate();
    std::vector<SimReport> reps(n_reps);
    unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, n_reps);
    std::atomic<unsigned> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n_reps);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (unsigned k = next++; k < n_reps; k = next++) {
                try {
                    SimConfig c = config;
                    c.seed = rng::replication_seed(config.seed, k);
                    reps[k] = run(c);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    // Aggregate in replication order. The stderr pools the within-run
    // batch-means errors; the spread of a handful of replication means is too
    // noisy to score against.
    auto combine = [&](Estimate SimReport::*field) {
        double sum = 0.0, var = 0.0;
        for (const auto& r : reps) {
            sum += (r.*field).value;
            var += (r.*field).se * (r.*field).se;
        }
        const double n = static_cast<double>(n_reps);
        return Estimate{sum / n, std::sqrt(var) / n};
    };
    SimReport out;
    out.mu = combine(&SimReport::mu);
    out.nu0 = combine(&SimReport::nu0);
    out.delay = combine(&SimReport::delay);
    out.rate = combine(&SimReport::rate);
    out.energy = combine(&SimReport::energy);
    for (const auto& r : reps) {
        out.slots_used += r.slots_used;
        out.departures += r.departures;
        out.busy_slots += r.busy_slots;
        out.final_queue += r.final_queue;
        out.unstable = out.unstable || r.unstable;
    }
    return out;
}

}  // namespace cograte::simulator
