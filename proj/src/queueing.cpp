#include "cograte/queueing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cograte/error.hpp"

namespace cograte::queueing {

void QueueModel::validate() const {
    if (!(lambda_p >= 0.0 && lambda_p <= 1.0))
        throw DomainError("QueueModel: lambda_p must lie in [0,1]");
    if (!(mu_p >= 0.0 && mu_p <= 1.0)) throw DomainError("QueueModel: mu_p must lie in [0,1]");
}

bool is_stable(const QueueModel& q) {
    q.validate();
    return q.mu_p > q.lambda_p;
}

namespace {
void require_stable(const QueueModel& q, const char* what) {
    if (q.lambda_p == 0.0) return;
    if (!is_stable(q))
        throw InstabilityError(std::string(what) + ": queue unstable (mu = " +
                               std::to_string(q.mu_p) + " <= lambda = " +
                               std::to_string(q.lambda_p) + ")");
}
}  // namespace

double empty_prob(const QueueModel& q) {
    q.validate();
    if (q.lambda_p == 0.0) return 1.0;
    require_stable(q, "empty_prob");
    return 1.0 - q.lambda_p / q.mu_p;
}

double geometric_ratio(const QueueModel& q) {
    q.validate();
    if (q.lambda_p == 0.0) return 0.0;
    require_stable(q, "geometric_ratio");
    return q.lambda_p * (1.0 - q.mu_p) / ((1.0 - q.lambda_p) * q.mu_p);
}

StationaryDistribution stationary_dist(const QueueModel& q, int k_max) {
    if (k_max < 0) throw DomainError("stationary_dist: k_max must be >= 0");
    const double nu0 = empty_prob(q);
    StationaryDistribution out{std::vector<double>(static_cast<std::size_t>(k_max) + 1, 0.0), 0.0};
    out.probs[0] = nu0;
    if (q.lambda_p == 0.0) return out;
    const double eta = geometric_ratio(q);
    // mu = 1 gives eta = 0: at most one packet, held for exactly one slot.
    const double lead = nu0 / (1.0 - q.mu_p);
    if (q.mu_p == 1.0) {
        if (k_max >= 1) out.probs[1] = q.lambda_p;
        out.tail_mass = k_max >= 1 ? 0.0 : q.lambda_p;
        return out;
    }
    double power = 1.0;
    for (int k = 1; k <= k_max; ++k) {
        power *= eta;
        out.probs[static_cast<std::size_t>(k)] = lead * power;
    }
    // sum_{k>=1} nu_k = lead * eta/(1-eta) = 1 - nu0
    out.tail_mass = std::max(0.0, lead * power * eta / (1.0 - eta));
    return out;
}

int truncation_point(const QueueModel& q, double tail_tol) {
    if (!(tail_tol > 0.0 && tail_tol < 1.0)) throw DomainError("truncation_point: tail_tol in (0,1)");
    if (q.lambda_p == 0.0 || q.mu_p == 1.0) return 1;
    const double eta = geometric_ratio(q);
    const double lead = empty_prob(q) / (1.0 - q.mu_p);
    // tail after k_max = lead * eta^{k_max+1} / (1-eta)
    const double k = std::log(tail_tol * (1.0 - eta) / lead) / std::log(eta) - 1.0;
    return std::max(1, static_cast<int>(std::ceil(k)));
}

double mean_delay(const QueueModel& q) {
    q.validate();
    if (q.lambda_p == 0.0) return 1.0;
    require_stable(q, "mean_delay");
    return (1.0 - q.lambda_p) / (q.mu_p - q.lambda_p);
}

}  // namespace cograte::queueing
