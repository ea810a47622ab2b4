#pragma once

// Deterministic random helpers for property tests.  std::mt19937's raw
// output sequence is pinned by the standard; the mappings below avoid
// std::uniform_*_distribution, whose algorithms are implementation-defined,
// so expected values frozen from one run hold everywhere.

#include <cstdint>
#include <random>
#include <vector>

namespace vertiflow::testsupport {

class Rng {
public:
    explicit Rng(std::uint32_t seed) : gen_(seed) {}

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) {
        const double u = static_cast<double>(gen_()) * (1.0 / 4294967296.0);
        return lo + (hi - lo) * u;
    }

    /// Uniform int in [lo, hi] (inclusive).
    int uniform_int(int lo, int hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(static_cast<std::uint64_t>(gen_()) % span);
    }

    bool chance(double p) { return uniform(0.0, 1.0) < p; }

    /// k distinct ints from [0, n).
    std::vector<int> sample(int n, int k) {
        std::vector<int> pool(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
        for (int i = 0; i < k; ++i) {
            const int j = uniform_int(i, n - 1);
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        }
        pool.resize(static_cast<std::size_t>(k));
        return pool;
    }

private:
    std::mt19937 gen_;
};

} // namespace vertiflow::testsupport
