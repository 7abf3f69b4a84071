#pragma once

namespace cograte::channel {

/// Rate exponents b/(W*T) above this saturate the link to certain outage.
inline constexpr double kExponentCap = 60.0;

struct LinkParams {
    double sigma;  ///< mean power gain of the Rayleigh link
    double p0;     ///< transmit PSD, W/Hz
    double n0;     ///< noise PSD, W/Hz

    void validate() const;
};

/// A packet of `bits` sent in `duration` seconds over `bandwidth` Hz.
/// Zero duration or bandwidth is allowed and means the link can never carry
/// the packet (infinite rate exponent).
struct TransmissionSpec {
    double bits;
    double duration;
    double bandwidth;

    void validate() const;
    /// bits / (bandwidth * duration); +inf when the product is zero and bits > 0.
    [[nodiscard]] double rate_exponent() const;
    [[nodiscard]] bool saturated() const;
};

/// SNR gain threshold (n0/p0)(2^{b/(W T)} - 1). Throws OverflowError above the cap.
double outage_threshold(const TransmissionSpec& spec, const LinkParams& link);

/// P(alpha < alpha_th) for alpha ~ Exp(mean sigma). Saturated specs return 1.
double outage_prob(const TransmissionSpec& spec, const LinkParams& link);

/// Probability the direct link decodes while an interferer with mean gain
/// `interferer_sigma` transmits at the same PSD:
/// P(alpha_d p0 / (n0 + alpha_i p0) >= 2^x - 1).
double interference_success_prob(const TransmissionSpec& spec, const LinkParams& direct,
                                 double interferer_sigma);

/// E[log2(1 + alpha p0/n0)], alpha ~ Exp(mean sigma), in bits/s/Hz.
double expected_log_capacity(const LinkParams& link);

}  // namespace cograte::channel
