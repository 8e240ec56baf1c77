#pragma once

#include <cstdint>
#include <random>

namespace ness {

/// Seedable generator whose output is identical on every platform.
///
/// The engine is std::mt19937_64, whose sequence is fixed by the standard.
/// Distribution transforms are implemented here because the standard library
/// distributions are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via the Marsaglia polar method.
    double normal();

    /// Uniform integer on [0, bound).
    std::uint64_t below(std::uint64_t bound);

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace ness
