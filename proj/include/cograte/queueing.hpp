#pragma once

#include <vector>

namespace cograte::queueing {

/// Discrete-time Geo/Geo/1 queue with late arrivals: Bernoulli(lambda)
/// arrivals, Bernoulli(mu) service of the head packet in busy slots, and
/// departures before arrivals within a slot.
struct QueueModel {
    double lambda_p;
    double mu_p;

    void validate() const;
};

bool is_stable(const QueueModel& q);

/// Stationary probability of an empty queue, 1 - lambda/mu. lambda = 0 gives 1
/// for any mu; otherwise throws InstabilityError when mu <= lambda.
double empty_prob(const QueueModel& q);

/// lambda(1-mu) / ((1-lambda) mu), the geometric ratio of the stationary law.
double geometric_ratio(const QueueModel& q);

struct StationaryDistribution {
    std::vector<double> probs;  ///< nu_0 .. nu_kmax
    double tail_mass;           ///< sum of nu_k for k > kmax
};

StationaryDistribution stationary_dist(const QueueModel& q, int k_max);

/// Smallest k_max whose truncated geometric tail is below `tail_tol`.
int truncation_point(const QueueModel& q, double tail_tol = 1e-12);

/// Mean sojourn in slots, (1 - lambda)/(mu - lambda). The lambda = 0 case is
/// reported as 1 slot by convention.
double mean_delay(const QueueModel& q);

}  // namespace cograte::queueing
