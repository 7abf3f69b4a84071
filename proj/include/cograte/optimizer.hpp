#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "cograte/kernels.hpp"
#include "cograte/protocols.hpp"

namespace cograte::optimizer {

/// Uniform grid over T_p in [tau_s, window] and W_p in [0, W], endpoints included.
/// Point (i, j) sits at fractions i/(n_t-1) and j/(n_w-1), so a grid whose
/// n-1 divides another's n-1 is an exact subset of it.
struct GridSpec {
    int n_t = 200;
    int n_w = 200;

    void validate() const;
};

struct RunOptions {
    unsigned threads = 0;              ///< 0: hardware concurrency
    std::optional<kernels::Isa> isa;   ///< default: kernels::best_isa()
    bool keep_grid = false;            ///< attach per-point metrics to OptResult
};

/// Lambda-independent values on the whole grid, row-major in T_p.
struct GridEvaluation {
    Protocol protocol = Protocol::P1;
    GridSpec grid;
    double mu_nc = 0.0;
    std::vector<double> t_p;   ///< n_t values
    std::vector<double> w_p;   ///< n_w values
    std::vector<double> mu, rate_empty, rate_busy, energy_empty, energy_busy;

    [[nodiscard]] std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(grid.n_w) +
               static_cast<std::size_t>(j);
    }
};

struct GridPoint {
    double t_p;
    double w_p;
    double mu;
    double mean_rate;
    double mean_energy;
    bool feasible;
};

struct OptResult {
    double lambda_p = 0.0;
    std::optional<Allocation> best_alloc;
    std::optional<ProtocolMetrics> best_metrics;
    std::size_t feasible_count = 0;
    std::optional<std::vector<GridPoint>> grid_dump;
};

GridEvaluation evaluate_grid(const SystemParams& params, Protocol protocol, const GridSpec& grid,
                             const RunOptions& options = {});

/// Constrained argmax at one arrival rate over a precomputed grid.
/// Ties go to the larger W_p, then the larger T_p.
OptResult select_best(const SystemParams& params, const GridEvaluation& eval, double lambda_p,
                      bool keep_grid = false);

/// Uses params.lambda_p. protocol must be P1 or P2.
OptResult optimize(const SystemParams& params, Protocol protocol, const GridSpec& grid = {},
                   const RunOptions& options = {});

/// phi = 1 - (W_p T_p)/(W (T - tau_f)) * max(mu_nc, lambda)/mu_c, or 0 without a feasible optimum.
double energy_savings(const SystemParams& params, const OptResult& best);

struct SweepRow {
    double lambda_p;
    OptResult result;
    double phi;
};

/// One row per entry of `lambdas`, in order. The grid is evaluated once.
std::vector<SweepRow> sweep_lambda(const SystemParams& params, Protocol protocol,
                                   const std::vector<double>& lambdas, const GridSpec& grid = {},
                                   const RunOptions& options = {});

}  // namespace cograte::optimizer
