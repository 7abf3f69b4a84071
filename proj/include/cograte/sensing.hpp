#pragma once

#include <map>
#include <shared_mutex>

#include "cograte/numerics.hpp"

namespace cograte::sensing {

struct SensingParams {
    double tau_s;       ///< sensing duration, s
    double w_p;         ///< sensed (primary) subband, Hz
    double p0;          ///< PSD, W/Hz
    double n0;          ///< noise PSD, W/Hz
    double sigma_ps;    ///< mean gain of the p->s link
    double target_pfa;  ///< design false-alarm probability

    void validate() const;
    /// F_s * tau_s with F_s = 2 W_p (not rounded).
    [[nodiscard]] double sample_count() const { return 2.0 * w_p * tau_s; }
    [[nodiscard]] double noise_power() const { return n0 * w_p; }
    [[nodiscard]] double signal_power() const { return p0 * w_p; }
};

struct SensingErrors {
    double p_fa;
    double p_md;
    double threshold;  ///< energy threshold epsilon, W
};

/// Energy threshold meeting target_pfa under the CLT approximation.
double detection_threshold(const SensingParams& params);

double false_alarm_prob(const SensingParams& params, double eps);

/// P(detect | alpha_ps = alpha): Gaussian tail with mean alpha P_p + N_p.
double conditional_detection_prob(const SensingParams& params, double eps, double alpha);

/// Misdetection probability averaged over the exponential p->s gain.
/// Quadrature failures propagate as ConvergenceError.
double misdetection_prob(const SensingParams& params, const numerics::QuadratureSpec& spec = {});

SensingErrors sensing_errors(const SensingParams& params);

/// Memo of SensingErrors keyed by W_p for one fixed set of the remaining
/// sensing parameters. Keys within 1e-12 relative are treated as equal.
/// Safe for concurrent use.
class SensingCache {
public:
    explicit SensingCache(SensingParams base);

    SensingErrors get(double w_p);
    [[nodiscard]] std::size_t size() const;

private:
    SensingParams base_;
    mutable std::shared_mutex mutex_;
    std::map<double, SensingErrors> entries_;

    const SensingErrors* find_locked(double w_p) const;
};

}  // namespace cograte::sensing
