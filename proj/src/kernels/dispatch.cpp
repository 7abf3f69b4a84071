#include <cstdlib>
#include <stdexcept>
#include <string>

#include "cograte/kernels.hpp"

namespace cograte::kernels {

std::string_view to_string(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

Isa parse_isa(std::string_view text) {
    if (text == "scalar") return Isa::Scalar;
    if (text == "avx2") return Isa::Avx2;
    throw std::invalid_argument("unknown kernel '" + std::string(text) + "' (expected scalar or avx2)");
}

Isa best_isa() {
    if (const char* forced = std::getenv("COGRATE_KERNEL"); forced && *forced) {
        const Isa isa = parse_isa(forced);
        if (isa == Isa::Avx2 && !avx2_available())
            throw std::runtime_error("COGRATE_KERNEL=avx2 but the CPU lacks AVX2");
        return isa;
    }
    return avx2_available() ? Isa::Avx2 : Isa::Scalar;
}

RowKernel select(Isa isa) {
    if (isa == Isa::Avx2) {
        if (!avx2_available()) throw std::runtime_error("AVX2 kernel requested on a CPU without AVX2");
        return &evaluate_row_avx2;
    }
    return &evaluate_row_scalar;
}

}  // namespace cograte::kernels
