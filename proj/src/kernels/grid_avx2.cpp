// AVX2 variant of the grid-row kernel. Compiled with per-function target
// attributes so the rest of the library stays baseline x86-64.

#include <array>
#include <cstddef>

#include "cograte/channel.hpp"
#include "cograte/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define COGRATE_HAVE_X86 1
#else
#define COGRATE_HAVE_X86 0
#endif

namespace cograte::kernels {

#if COGRATE_HAVE_X86

namespace {

#define COGRATE_AVX2 __attribute__((target("avx2")))

// exp(r) for |r| <= ln2/2: Taylor to r^13 (truncation < 1e-17 relative).
COGRATE_AVX2 inline __m256d exp_reduced(__m256d r) {
    constexpr std::array<double, 14> c = {
        1.0,
        1.0,
        1.0 / 2,
        1.0 / 6,
        1.0 / 24,
        1.0 / 120,
        1.0 / 720,
        1.0 / 5040,
        1.0 / 40320,
        1.0 / 362880,
        1.0 / 3628800,
        1.0 / 39916800,
        1.0 / 479001600,
        1.0 / 6227020800.0};
    __m256d p = _mm256_set1_pd(c[13]);
    for (int k = 12; k >= 0; --k) p = _mm256_add_pd(_mm256_mul_pd(p, r), _mm256_set1_pd(c[static_cast<std::size_t>(k)]));
    return p;
}

// 2^k for integral-valued k in [-1022, 1023].
COGRATE_AVX2 inline __m256d pow2_int(__m256d k) {
    const __m128i k32 = _mm256_cvtpd_epi32(k);
    __m256i k64 = _mm256_cvtepi32_epi64(k32);
    k64 = _mm256_add_epi64(k64, _mm256_set1_epi64x(1023));
    return _mm256_castsi256_pd(_mm256_slli_epi64(k64, 52));
}

// exp(x); results below the normal range flush to zero.
COGRATE_AVX2 inline __m256d exp_pd(__m256d x) {
    const __m256d lo = _mm256_set1_pd(-708.0);
    const __m256d hi = _mm256_set1_pd(709.0);
    const __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
    x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);
    const __m256d k = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    // Cody-Waite split of ln 2.
    __m256d r = _mm256_sub_pd(x, _mm256_mul_pd(k, _mm256_set1_pd(0.693145751953125)));
    r = _mm256_sub_pd(r, _mm256_mul_pd(k, _mm256_set1_pd(1.42860682030941723212e-6)));
    const __m256d y = _mm256_mul_pd(exp_reduced(r), pow2_int(k));
    return _mm256_andnot_pd(underflow, y);
}

// 2^x - 1 for x in [0, 60].
COGRATE_AVX2 inline __m256d exp2m1_pd(__m256d x) {
    const __m256d k = _mm256_round_pd(x, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    const __m256d r = _mm256_mul_pd(_mm256_sub_pd(x, k), _mm256_set1_pd(0.69314718055994530942));
    return _mm256_sub_pd(_mm256_mul_pd(exp_reduced(r), pow2_int(k)), _mm256_set1_pd(1.0));
}

struct Lanes {
    __m256d mu, rate_empty, rate_busy, energy_empty, energy_busy;
};

struct Constants {
    __m256d one, zero, cap, b, t_p, t_s, tau_s, tau_f_sum, w, noise_over_power;
    __m256d inv_sigma_pd, inv_sigma_ps, inv_sigma_spd, int_ratio;
    __m256d f, beta, rate_scale, energy_scale;
    bool p2;
};

COGRATE_AVX2 inline Lanes evaluate4(const Constants& c, __m256d w_p, __m256d p_md, __m256d p_fa) {
    const __m256d one = c.one;
    // Rate exponents; zero degrees of freedom give +inf and saturate.
    const __m256d x_pri = _mm256_div_pd(c.b, _mm256_mul_pd(w_p, c.t_p));
    const __m256d x_rel = _mm256_div_pd(c.b, _mm256_mul_pd(w_p, c.t_s));
    const __m256d ok_pri = _mm256_cmp_pd(x_pri, c.cap, _CMP_LE_OQ);
    const __m256d ok_rel = _mm256_cmp_pd(x_rel, c.cap, _CMP_LE_OQ);
    const __m256d snr_pri = exp2m1_pd(_mm256_and_pd(ok_pri, x_pri));
    const __m256d snr_rel = exp2m1_pd(_mm256_and_pd(ok_rel, x_rel));
    const __m256d th_pri = _mm256_mul_pd(c.noise_over_power, snr_pri);
    const __m256d th_rel = _mm256_mul_pd(c.noise_over_power, snr_rel);

    const __m256d zero = c.zero;
    const __m256d pass_pd = _mm256_and_pd(ok_pri, exp_pd(_mm256_sub_pd(zero, _mm256_mul_pd(th_pri, c.inv_sigma_pd))));
    const __m256d pass_ps = _mm256_and_pd(ok_pri, exp_pd(_mm256_sub_pd(zero, _mm256_mul_pd(th_pri, c.inv_sigma_ps))));
    const __m256d pass_spd = _mm256_and_pd(ok_rel, exp_pd(_mm256_sub_pd(zero, _mm256_mul_pd(th_rel, c.inv_sigma_spd))));
    const __m256d out_pd = _mm256_sub_pd(one, pass_pd);
    const __m256d out_ps = _mm256_sub_pd(one, pass_ps);
    const __m256d out_spd = _mm256_sub_pd(one, pass_spd);
    const __m256d succ_int =
        _mm256_div_pd(pass_pd, _mm256_add_pd(one, _mm256_mul_pd(c.int_ratio, snr_pri)));

    const __m256d detect = _mm256_sub_pd(one, p_md);
    const __m256d relay_on = _mm256_mul_pd(c.beta, _mm256_mul_pd(pass_ps, pass_spd));
    Lanes o;
    o.mu = _mm256_add_pd(
        _mm256_mul_pd(detect, _mm256_sub_pd(one, _mm256_mul_pd(out_pd, _mm256_sub_pd(one, relay_on)))),
        _mm256_mul_pd(p_md, succ_int));

    const __m256d ds = _mm256_div_pd(_mm256_sub_pd(c.w, w_p), c.w);
    const __m256d sense_gap = _mm256_sub_pd(c.t_p, c.tau_s);
    // Empty slots: identical phase structure for rate and energy.
    const __m256d empty_time = _mm256_add_pd(
        _mm256_add_pd(_mm256_mul_pd(c.tau_s, ds),
                      _mm256_mul_pd(sense_gap, _mm256_add_pd(_mm256_mul_pd(p_fa, ds), _mm256_sub_pd(one, p_fa)))),
        _mm256_add_pd(c.t_s, c.tau_f_sum));
    o.rate_empty = _mm256_mul_pd(empty_time, c.rate_scale);
    o.energy_empty = _mm256_mul_pd(empty_time, c.energy_scale);

    const __m256d relay_split = _mm256_add_pd(_mm256_mul_pd(pass_spd, ds), out_spd);
    __m256d relay_phase;
    if (!c.p2) {
        // (P_MD + (1-P_MD) P_ps) + (1-P_MD)(1-P_ps)((1-P_spd) ds + P_spd)
        relay_phase = _mm256_add_pd(_mm256_add_pd(p_md, _mm256_mul_pd(detect, out_ps)),
                                    _mm256_mul_pd(_mm256_mul_pd(detect, pass_ps), relay_split));
    } else {
        const __m256d gamma = _mm256_add_pd(_mm256_mul_pd(out_pd, c.f), _mm256_sub_pd(one, c.f));
        const __m256d inner = _mm256_add_pd(
            _mm256_mul_pd(pass_ps, _mm256_add_pd(_mm256_mul_pd(gamma, relay_split), _mm256_sub_pd(one, gamma))),
            out_ps);
        relay_phase = _mm256_add_pd(_mm256_mul_pd(detect, inner), p_md);
    }
    const __m256d busy_time = _mm256_add_pd(_mm256_mul_pd(_mm256_add_pd(c.tau_f_sum, c.t_p), ds),
                                            _mm256_mul_pd(relay_phase, c.t_s));
    o.rate_busy = _mm256_mul_pd(busy_time, c.rate_scale);
    const __m256d busy_energy_time = _mm256_add_pd(
        _mm256_add_pd(_mm256_mul_pd(_mm256_add_pd(c.tau_f_sum, c.tau_s), ds),
                      _mm256_mul_pd(sense_gap, _mm256_add_pd(_mm256_mul_pd(detect, ds), p_md))),
        c.t_s);
    o.energy_busy = _mm256_mul_pd(busy_energy_time, c.energy_scale);
    return o;
}

}  // namespace

COGRATE_AVX2 void evaluate_row_avx2(const RowContext& ctx, const RowInput& in, const RowOutput& out) {
    const SystemParams& p = *ctx.params;
    const bool p2 = ctx.protocol == Protocol::P2;
    const double t_s = p.transmission_window(ctx.protocol) - in.t_p;
    Constants c;
    c.one = _mm256_set1_pd(1.0);
    c.zero = _mm256_setzero_pd();
    c.cap = _mm256_set1_pd(channel::kExponentCap);
    c.b = _mm256_set1_pd(p.b);
    c.t_p = _mm256_set1_pd(in.t_p);
    c.t_s = _mm256_set1_pd(t_s);
    c.tau_s = _mm256_set1_pd(p.tau_s);
    c.tau_f_sum = _mm256_set1_pd(p2 ? 2.0 * p.tau_f : p.tau_f);
    c.w = _mm256_set1_pd(p.w);
    c.noise_over_power = _mm256_set1_pd(p.n0 / p.p0);
    c.inv_sigma_pd = _mm256_set1_pd(1.0 / p.sigma_p_pd);
    c.inv_sigma_ps = _mm256_set1_pd(1.0 / p.sigma_p_s);
    c.inv_sigma_spd = _mm256_set1_pd(1.0 / p.sigma_s_pd);
    c.int_ratio = _mm256_set1_pd(p.sigma_s_pd / p.sigma_p_pd);
    c.f = _mm256_set1_pd(p.f);
    c.beta = _mm256_set1_pd(p2 ? p.beta() : 1.0);
    c.rate_scale = _mm256_set1_pd(p.w * ctx.capacity);
    c.energy_scale = _mm256_set1_pd(p.w * p.p0);
    c.p2 = p2;

    const std::size_t n = in.w_p.size();
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        const Lanes o = evaluate4(c, _mm256_loadu_pd(&in.w_p[j]), _mm256_loadu_pd(&in.p_md[j]),
                                  _mm256_loadu_pd(&in.p_fa[j]));
        _mm256_storeu_pd(&out.mu[j], o.mu);
        _mm256_storeu_pd(&out.rate_empty[j], o.rate_empty);
        _mm256_storeu_pd(&out.rate_busy[j], o.rate_busy);
        _mm256_storeu_pd(&out.energy_empty[j], o.energy_empty);
        _mm256_storeu_pd(&out.energy_busy[j], o.energy_busy);
    }
    if (j < n) {
        // Tail: pad with a benign W_p (the last valid one) and keep the live lanes.
        alignas(32) std::array<double, 4> w{}, md{}, fa{};
        for (std::size_t k = 0; k < 4; ++k) {
            const std::size_t src = j + k < n ? j + k : n - 1;
            w[k] = in.w_p[src];
            md[k] = in.p_md[src];
            fa[k] = in.p_fa[src];
        }
        const Lanes o = evaluate4(c, _mm256_load_pd(w.data()), _mm256_load_pd(md.data()),
                                  _mm256_load_pd(fa.data()));
        alignas(32) std::array<double, 4> mu{}, re{}, rb{}, ee{}, eb{};
        _mm256_store_pd(mu.data(), o.mu);
        _mm256_store_pd(re.data(), o.rate_empty);
        _mm256_store_pd(rb.data(), o.rate_busy);
        _mm256_store_pd(ee.data(), o.energy_empty);
        _mm256_store_pd(eb.data(), o.energy_busy);
        for (std::size_t k = 0; j + k < n; ++k) {
            out.mu[j + k] = mu[k];
            out.rate_empty[j + k] = re[k];
            out.rate_busy[j + k] = rb[k];
            out.energy_empty[j + k] = ee[k];
            out.energy_busy[j + k] = eb[k];
        }
    }
}

bool avx2_available() { return __builtin_cpu_supports("avx2"); }

#else

void evaluate_row_avx2(const RowContext&, const RowInput&, const RowOutput&) {
    throw std::runtime_error("AVX2 kernel not built for this architecture");
}

bool avx2_available() { return false; }

#endif

}  // namespace cograte::kernels
