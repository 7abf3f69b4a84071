#include "cograte/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <string>
#include <thread>

#include "cograte/error.hpp"
#include "cograte/sensing.hpp"

namespace cograte::optimizer {

void GridSpec::validate() const {
    if (n_t < 2 || n_w < 2) throw InvariantError("grid needs at least 2 points per axis");
}

namespace {

unsigned worker_count(const RunOptions& options, std::size_t jobs) {
    unsigned n = options.threads ? options.threads : std::thread::hardware_concurrency();
    n = std::max(1u, n);
    return static_cast<unsigned>(std::min<std::size_t>(n, jobs));
}

// Runs body(k) for k in [0, jobs); each k is written by exactly one worker.
template <class Body>
void parallel_for(std::size_t jobs, unsigned workers, const Body& body) {
    if (workers <= 1) {
        for (std::size_t k = 0; k < jobs; ++k) body(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < jobs && !failed; k = next++) {
                try {
                    body(k);
                } catch (...) {
                    if (!failed.exchange(true)) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

double axis_point(double lo, double hi, int k, int n) {
    if (k == n - 1) return hi;
    const double frac = static_cast<double>(k) / static_cast<double>(n - 1);
    return std::min(hi, lo + frac * (hi - lo));
}

void require_cooperative(Protocol protocol) {
    if (protocol == Protocol::NC)
        throw std::invalid_argument("optimizer: protocol must be P1 or P2");
}

}  // namespace

GridEvaluation evaluate_grid(const SystemParams& params, Protocol protocol, const GridSpec& grid,
                             const RunOptions& options) {
    params.validate();
    grid.validate();
    require_cooperative(protocol);

    GridEvaluation ev;
    ev.protocol = protocol;
    ev.grid = grid;
    ev.mu_nc = mu_nc(params);
    const double window = params.transmission_window(protocol);
    for (int i = 0; i < grid.n_t; ++i) ev.t_p.push_back(axis_point(params.tau_s, window, i, grid.n_t));
    for (int j = 0; j < grid.n_w; ++j) ev.w_p.push_back(axis_point(0.0, params.w, j, grid.n_w));

    // Sensing depends on W_p only.
    const auto n_w = static_cast<std::size_t>(grid.n_w);
    std::vector<double> p_md(n_w), p_fa(n_w);
    parallel_for(n_w, worker_count(options, n_w), [&](std::size_t j) {
        sensing::SensingParams sp = params.sensing_base();
        sp.w_p = ev.w_p[j];
        if (sp.sample_count() >= 1.0) {
            const sensing::SensingErrors e = sensing::sensing_errors(sp);
            p_md[j] = e.p_md;
            p_fa[j] = e.p_fa;
        } else {
            p_md[j] = 1.0;
            p_fa[j] = params.target_pfa;
        }
    });

    const std::size_t total = static_cast<std::size_t>(grid.n_t) * n_w;
    for (auto* v : {&ev.mu, &ev.rate_empty, &ev.rate_busy, &ev.energy_empty, &ev.energy_busy})
        v->assign(total, 0.0);

    SystemParams idle = params;
    idle.lambda_p = 0.0;
    const kernels::RowContext ctx{&idle, protocol, secondary_capacity(params)};
    const kernels::RowKernel kernel = kernels::select(options.isa.value_or(kernels::best_isa()));
    const auto n_t = static_cast<std::size_t>(grid.n_t);
    parallel_for(n_t, worker_count(options, n_t), [&](std::size_t i) {
        const std::size_t off = i * n_w;
        const kernels::RowInput in{ev.t_p[i], ev.w_p, p_md, p_fa};
        const kernels::RowOutput out{
            std::span(ev.mu).subspan(off, n_w), std::span(ev.rate_empty).subspan(off, n_w),
            std::span(ev.rate_busy).subspan(off, n_w), std::span(ev.energy_empty).subspan(off, n_w),
            std::span(ev.energy_busy).subspan(off, n_w)};
        kernel(ctx, in, out);
    });
    return ev;
}

namespace {

ProtocolMetrics point_metrics(const GridEvaluation& ev, std::size_t k, double lambda_p, double budget) {
    ProtocolMetrics m;
    m.protocol = ev.protocol;
    m.mu_nc = ev.mu_nc;
    m.mu_p = ev.mu[k];
    m.rate_empty = ev.rate_empty[k];
    m.rate_busy = ev.rate_busy[k];
    m.energy_empty = ev.energy_empty[k];
    m.energy_busy = ev.energy_busy[k];
    finalize_metrics(m, lambda_p, budget);
    return m;
}

}  // namespace

OptResult select_best(const SystemParams& params, const GridEvaluation& ev, double lambda_p,
                      bool keep_grid) {
    if (!(lambda_p >= 0.0 && lambda_p <= 1.0)) throw InvariantError("lambda_p must lie in [0,1]");
    OptResult result;
    result.lambda_p = lambda_p;
    if (keep_grid) result.grid_dump.emplace();
    std::optional<std::size_t> best;
    int best_i = 0, best_j = 0;
    double best_rate = 0.0;
    for (int i = 0; i < ev.grid.n_t; ++i) {
        for (int j = 0; j < ev.grid.n_w; ++j) {
            const std::size_t k = ev.index(i, j);
            const ProtocolMetrics m = point_metrics(ev, k, lambda_p, params.energy_budget);
            if (keep_grid)
                result.grid_dump->push_back(
                    {ev.t_p[i], ev.w_p[j], m.mu_p, m.mean_rate, m.mean_energy, m.feasible});
            if (!m.feasible) continue;
            ++result.feasible_count;
            // Index order visits W_p and T_p ascending, so ">=" on ties keeps the larger ones.
            if (!best || m.mean_rate > best_rate ||
                (m.mean_rate == best_rate && (j > best_j || (j == best_j && i > best_i)))) {
                best = k;
                best_rate = m.mean_rate;
                best_i = i;
                best_j = j;
            }
        }
    }
    if (best) {
        const Allocation alloc{ev.t_p[static_cast<std::size_t>(best_i)],
                               ev.w_p[static_cast<std::size_t>(best_j)]};
        ProtocolMetrics m = point_metrics(ev, *best, lambda_p, params.energy_budget);
        m.stats = link_stats(params, ev.protocol, alloc);
        result.best_alloc = alloc;
        result.best_metrics = m;
    }
    return result;
}

OptResult optimize(const SystemParams& params, Protocol protocol, const GridSpec& grid,
                   const RunOptions& options) {
    const GridEvaluation ev = evaluate_grid(params, protocol, grid, options);
    return select_best(params, ev, params.lambda_p, options.keep_grid);
}

double energy_savings(const SystemParams& params, const OptResult& best) {
    if (!best.best_alloc || !best.best_metrics) return 0.0;
    const ProtocolMetrics& m = *best.best_metrics;
    const double used = best.best_alloc->w_p * best.best_alloc->t_p / (params.w * (params.t - params.tau_f));
    return 1.0 - used * std::max(m.mu_nc, best.lambda_p) / m.mu_p;
}

std::vector<SweepRow> sweep_lambda(const SystemParams& params, Protocol protocol,
                                   const std::vector<double>& lambdas, const GridSpec& grid,
                                   const RunOptions& options) {
    std::vector<SweepRow> rows;
    if (lambdas.empty()) return rows;
    const GridEvaluation ev = evaluate_grid(params, protocol, grid, options);
    rows.reserve(lambdas.size());
    for (const double lambda_p : lambdas) {
        SystemParams at = params;
        at.lambda_p = lambda_p;
        at.validate();
        OptResult r = select_best(at, ev, lambda_p, options.keep_grid);
        const double phi = energy_savings(at, r);
        rows.push_back({lambda_p, std::move(r), phi});
    }
    return rows;
}

}  // namespace cograte::optimizer
