#include <cstddef>

#include "cograte/kernels.hpp"

namespace cograte::kernels {

void evaluate_row_scalar(const RowContext& ctx, const RowInput& in, const RowOutput& out) {
    // Per-slot values only; the lambda mix happens in the caller.
    SystemParams params = *ctx.params;
    params.lambda_p = 0.0;
    for (std::size_t j = 0; j < in.w_p.size(); ++j) {
        const Allocation alloc{in.t_p, in.w_p[j]};
        LinkStats stats = channel_stats(params, ctx.protocol, alloc);
        stats.p_md = in.p_md[j];
        stats.p_fa = in.p_fa[j];
        if (ctx.protocol == Protocol::P1) {
            const SecondaryRates r = secondary_rate_p1(params, alloc, stats, ctx.capacity);
            const SecondaryEnergy e = energy_split_p1(params, alloc, stats);
            out.mu[j] = mu_p1(stats);
            out.rate_empty[j] = r.rate_empty;
            out.rate_busy[j] = r.rate_busy;
            out.energy_empty[j] = e.energy_empty;
            out.energy_busy[j] = e.energy_busy;
        } else {
            const SecondaryRates r = secondary_rate_p2(params, alloc, stats, ctx.capacity);
            const SecondaryEnergy e = energy_split_p2(params, alloc, stats);
            out.mu[j] = mu_p2(stats);
            out.rate_empty[j] = r.rate_empty;
            out.rate_busy[j] = r.rate_busy;
            out.energy_empty[j] = e.energy_empty;
            out.energy_busy[j] = e.energy_busy;
        }
    }
}

}  // namespace cograte::kernels
