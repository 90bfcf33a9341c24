#pragma once

#include <cstdint>

namespace sdot {

/// 64-bit seed for all randomized operations. The generator below is fixed,
/// so a seed identifies one reproducible stream family.
struct RandomSeed {
    std::uint64_t value = 0;
};

/// Counter-based generator: draw n of stream s under seed k is
///   mix(mix(k + GOLDEN * s) + GOLDEN * (n + 1))
/// with mix the splitmix64 finalizer. No hidden state beyond the counter, so
/// per-index substreams (stream = sample index) are reproducible in parallel.
/// Uniform doubles take the top 53 bits; normals use the Box-Muller transform
/// of two uniforms. Bit-identical given IEEE-754 doubles and faithfully
/// rounded sqrt/log/cos/sin.
class CounterRng {
public:
    CounterRng(RandomSeed seed, std::uint64_t stream)
        : base_(mix(seed.value + kGolden * stream)) {}

    std::uint64_t next_u64() { return mix(base_ + kGolden * (++counter_)); }

    /// Uniform in [0, 1).
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1); never returns 0.
    double uniform01_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (consumes two uniforms per pair).
    void normal_pair(double& z0, double& z1);

    /// Single standard normal; buffers the second Box-Muller output.
    double normal();

private:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t base_;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace sdot
