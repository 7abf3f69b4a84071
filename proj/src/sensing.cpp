#include "cograte/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "cograte/error.hpp"

namespace cograte::sensing {

void SensingParams::validate() const {
    if (!(tau_s > 0.0)) throw DomainError("SensingParams: tau_s must be > 0");
    if (!(w_p > 0.0)) throw DomainError("SensingParams: w_p must be > 0");
    if (!(p0 > 0.0) || !(n0 > 0.0)) throw DomainError("SensingParams: p0 and n0 must be > 0");
    if (!(sigma_ps > 0.0)) throw DomainError("SensingParams: sigma_ps must be > 0");
    if (!(target_pfa > 0.0 && target_pfa < 1.0))
        throw DomainError("SensingParams: target_pfa must lie in (0,1)");
    if (!(sample_count() >= 1.0))
        throw DomainError("SensingParams: 2*w_p*tau_s must be >= 1 sample");
}

double detection_threshold(const SensingParams& params) {
    params.validate();
    return params.noise_power() *
           (numerics::q_inverse(params.target_pfa) / std::sqrt(params.sample_count()) + 1.0);
}

double false_alarm_prob(const SensingParams& params, double eps) {
    params.validate();
    return numerics::q_function(std::sqrt(params.sample_count()) * (eps / params.noise_power() - 1.0));
}

double conditional_detection_prob(const SensingParams& params, double eps, double alpha) {
    const double mean = alpha * params.signal_power() + params.noise_power();
    return numerics::q_function(std::sqrt(params.sample_count()) * (eps / mean - 1.0));
}

double misdetection_prob(const SensingParams& params, const numerics::QuadratureSpec& spec) {
    params.validate();
    const double root_n = std::sqrt(params.sample_count());
    // Threshold relative to noise power: eps/N_p = 1 + kappa.
    const double kappa = numerics::q_inverse(params.target_pfa) / root_n;
    const double snr_scale = params.sigma_ps * params.p0 / params.n0;
    // Integrate over u = alpha/sigma_ps ~ Exp(1): the weight is e^{-u}, and
    // 1 - Q(x) = Q(-x) keeps the small misdetection mass free of cancellation.
    auto integrand = [&](double u) {
        const double ratio = (1.0 + kappa) / (1.0 + snr_scale * u);
        return numerics::q_function(root_n * (1.0 - ratio)) * std::exp(-u);
    };
    // The detector switches within a few 1/sqrt(n) widths of eps = Lambda_1;
    // split there so the first panel resolves the step.
    const double crossing = std::max(kappa, 0.0) / snr_scale;
    const double width = (1.0 + std::abs(kappa)) / (snr_scale * root_n);
    const double split = crossing + 12.0 * width;
    const double p_md = numerics::integrate(integrand, 0.0, split, spec) +
                        numerics::integrate(integrand, split, numerics::kInf, spec);
    return std::clamp(p_md, 0.0, 1.0);
}

SensingErrors sensing_errors(const SensingParams& params) {
    const double eps = detection_threshold(params);
    return {false_alarm_prob(params, eps), misdetection_prob(params), eps};
}

SensingCache::SensingCache(SensingParams base) : base_(base) {}

const SensingErrors* SensingCache::find_locked(double w_p) const {
    constexpr double tol = 1e-12;
    auto it = entries_.lower_bound(w_p * (1.0 - tol));
    if (it != entries_.end() && std::abs(it->first - w_p) <= tol * std::abs(w_p)) return &it->second;
    return nullptr;
}

SensingErrors SensingCache::get(double w_p) {
    {
        std::shared_lock lock(mutex_);
        if (const auto* hit = find_locked(w_p)) return *hit;
    }
    SensingParams params = base_;
    params.w_p = w_p;
    const SensingErrors computed = sensing_errors(params);
    std::unique_lock lock(mutex_);
    if (const auto* hit = find_locked(w_p)) return *hit;
    entries_.emplace(w_p, computed);
    return computed;
}

std::size_t SensingCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

}  // namespace cograte::sensing
