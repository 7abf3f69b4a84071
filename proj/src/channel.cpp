#include "cograte/channel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "cograte/error.hpp"
#include "cograte/numerics.hpp"

namespace cograte::channel {

void LinkParams::validate() const {
    if (!(sigma > 0.0)) throw DomainError("LinkParams: sigma must be > 0");
    if (!(p0 > 0.0)) throw DomainError("LinkParams: p0 must be > 0");
    if (!(n0 > 0.0)) throw DomainError("LinkParams: n0 must be > 0");
}

void TransmissionSpec::validate() const {
    if (!(bits >= 0.0) || !std::isfinite(bits)) throw DomainError("TransmissionSpec: bits must be >= 0");
    if (!(duration >= 0.0)) throw DomainError("TransmissionSpec: duration must be >= 0");
    if (!(bandwidth >= 0.0)) throw DomainError("TransmissionSpec: bandwidth must be >= 0");
}

double TransmissionSpec::rate_exponent() const {
    if (bits == 0.0) return 0.0;
    const double dof = bandwidth * duration;
    if (dof == 0.0) return std::numeric_limits<double>::infinity();
    return bits / dof;
}

bool TransmissionSpec::saturated() const { return !(rate_exponent() <= kExponentCap); }

double outage_threshold(const TransmissionSpec& spec, const LinkParams& link) {
    spec.validate();
    link.validate();
    if (spec.saturated()) throw OverflowError("outage_threshold: rate exponent exceeds cap");
    return (link.n0 / link.p0) * std::expm1(spec.rate_exponent() * std::numbers::ln2);
}

double outage_prob(const TransmissionSpec& spec, const LinkParams& link) {
    spec.validate();
    link.validate();
    if (spec.saturated()) return 1.0;
    return -std::expm1(-outage_threshold(spec, link) / link.sigma);
}

double interference_success_prob(const TransmissionSpec& spec, const LinkParams& direct,
                                 double interferer_sigma) {
    if (!(interferer_sigma >= 0.0))
        throw DomainError("interference_success_prob: interferer_sigma must be >= 0");
    spec.validate();
    direct.validate();
    if (spec.saturated()) return 0.0;
    const double sinr_threshold = std::expm1(spec.rate_exponent() * std::numbers::ln2);
    const double no_interference = std::exp(-outage_threshold(spec, direct) / direct.sigma);
    return no_interference / (1.0 + (interferer_sigma / direct.sigma) * sinr_threshold);
}

double expected_log_capacity(const LinkParams& link) {
    link.validate();
    const double snr = link.sigma * link.p0 / link.n0;
    return numerics::scaled_upper_incomplete_gamma0(1.0 / snr) / std::numbers::ln2;
}

}  // namespace cograte::channel
