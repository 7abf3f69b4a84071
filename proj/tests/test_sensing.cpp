#include <cmath>
#include <random>
#include <thread>
#include <vector>

#include "cograte/error.hpp"
#include "cograte/numerics.hpp"
#include "cograte/sensing.hpp"
#include "doctest.h"

using namespace cograte;
using namespace cograte::sensing;

namespace {
SensingParams full_band() { return {0.25e-3, 10e6, 1e-10, 1e-11, 1.0, 0.1}; }
}  // namespace

TEST_CASE("threshold and false alarm") {
    SensingParams p = full_band();
    CHECK(p.sample_count() == 5000.0);
    CHECK(detection_threshold(p) / p.noise_power() == doctest::Approx(1.01812387604873646).epsilon(1e-13));
    CHECK(false_alarm_prob(p, detection_threshold(p)) == doctest::Approx(0.1).epsilon(1e-10));
    CHECK(false_alarm_prob(p, p.noise_power()) == 0.5);
    p.target_pfa = 0.5;
    CHECK(detection_threshold(p) == doctest::Approx(p.noise_power()).epsilon(1e-15));

    SensingParams hundred{0.25e-3, 2e5, 1e-10, 1e-11, 1.0, 0.1};
    CHECK(hundred.sample_count() == doctest::Approx(100.0));
    CHECK(false_alarm_prob(hundred, 2.0 * hundred.noise_power()) ==
          doctest::Approx(7.61985302416052607e-24).epsilon(1e-9));

    p.target_pfa = 1.0;
    CHECK_THROWS_AS(detection_threshold(p), DomainError);
    p.target_pfa = 0.1;
    p.w_p = 100.0;  // 0.05 samples
    CHECK_THROWS_AS(detection_threshold(p), DomainError);
}

TEST_CASE("misdetection pinned values") {
    SensingParams p = full_band();
    CHECK(misdetection_prob(p) == doctest::Approx(0.00189509870017192707).epsilon(1e-8));
    p.w_p = 5e6;
    CHECK(misdetection_prob(p) == doctest::Approx(0.00268961312866715694).epsilon(1e-8));
    p.w_p = 1e6;
    CHECK(misdetection_prob(p) == doctest::Approx(0.00610894803723529536).epsilon(1e-8));
    p.w_p = 1e5;
    CHECK(misdetection_prob(p) == doctest::Approx(0.0207899367275238651).epsilon(1e-8));
}

TEST_CASE("misdetection limits and monotonicity") {
    SensingParams p = full_band();
    p.target_pfa = 0.999;
    CHECK(misdetection_prob(p) < 0.01);
    p = full_band();
    p.sigma_ps = 1e6;
    CHECK(misdetection_prob(p) < 1e-3);

    p = full_band();
    p.w_p = 1e6;
    double prev = 1.0;
    for (double tau = 1e-5; tau <= 1e-3; tau *= 1.6) {
        p.tau_s = tau;
        const double md = misdetection_prob(p);
        CHECK(md >= 0.0);
        CHECK(md <= prev + 1e-12);
        prev = md;
    }
    p = full_band();
    prev = 0.0;
    for (double pfa = 0.5; pfa > 1e-6; pfa /= 3.0) {
        p.target_pfa = pfa;
        const double md = misdetection_prob(p);
        CHECK(md >= prev - 1e-12);
        CHECK(md <= 1.0);
        prev = md;
    }
    // Barely one sample: still a probability.
    p = full_band();
    p.w_p = 2000.0;
    const double md = misdetection_prob(p);
    CHECK(md >= 0.0);
    CHECK(md <= 1.0);
}

TEST_CASE("misdetection agrees with Monte Carlo conditional detection") {
    SensingParams p = full_band();
    p.w_p = 2e6;
    const double eps = detection_threshold(p);
    std::mt19937_64 gen(99);
    std::exponential_distribution<double> gain(1.0 / p.sigma_ps);
    const int n = 1'000'000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double miss = 1.0 - conditional_detection_prob(p, eps, gain(gen));
        sum += miss;
        sum2 += miss * miss;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - misdetection_prob(p)) <= 3.0 * se);
}

TEST_CASE("quadrature failure surfaces") {
    numerics::QuadratureSpec tight{1e-15, 0.0, 1};
    CHECK_THROWS_AS(misdetection_prob(full_band(), tight), ConvergenceError);
}

TEST_CASE("sensing cache") {
    SensingCache cache(full_band());
    const SensingErrors a = cache.get(5e6);
    const SensingErrors b = cache.get(5e6 * (1.0 + 1e-14));
    CHECK(cache.size() == 1);
    CHECK(a.p_md == b.p_md);
    cache.get(6e6);
    CHECK(cache.size() == 2);

    SensingCache shared(full_band());
    std::vector<std::thread> pool;
    for (int t = 0; t < 4; ++t)
        pool.emplace_back([&] {
            for (int k = 1; k <= 20; ++k) shared.get(k * 2.5e5);
        });
    for (auto& th : pool) th.join();
    CHECK(shared.size() == 20);
    SensingParams p = full_band();
    p.w_p = 2.5e6;
    CHECK(shared.get(2.5e6).p_md == misdetection_prob(p));
}
