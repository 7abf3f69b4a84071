#pragma once

#include <span>
#include <string_view>

#include "cograte/protocols.hpp"

namespace cograte::kernels {

// Per-point, lambda-independent quantities over one row of the allocation
// grid: a fixed T_p and a vector of W_p values. The optimizer mixes them with
// nu_0 for each lambda afterwards.

struct RowInput {
    double t_p;
    std::span<const double> w_p;
    std::span<const double> p_md;  ///< sensing errors per W_p, precomputed
    std::span<const double> p_fa;
};

struct RowOutput {
    std::span<double> mu;
    std::span<double> rate_empty;
    std::span<double> rate_busy;
    std::span<double> energy_empty;
    std::span<double> energy_busy;
};

struct RowContext {
    const SystemParams* params;
    Protocol protocol;     ///< P1 or P2
    double capacity;       ///< E[log2(1 + alpha_s,sd P0/N0)]
};

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);
Isa parse_isa(std::string_view text);

/// Reference implementation: one call into the protocols module per point.
void evaluate_row_scalar(const RowContext& ctx, const RowInput& in, const RowOutput& out);

/// Four points per step with AVX2 intrinsics. Only call when avx2_available().
void evaluate_row_avx2(const RowContext& ctx, const RowInput& in, const RowOutput& out);

bool avx2_available();

/// Widest variant the running CPU supports; COGRATE_KERNEL=scalar|avx2 overrides.
Isa best_isa();

using RowKernel = void (*)(const RowContext&, const RowInput&, const RowOutput&);

/// Throws std::runtime_error if `isa` is not supported on this CPU.
RowKernel select(Isa isa);

}  // namespace cograte::kernels
