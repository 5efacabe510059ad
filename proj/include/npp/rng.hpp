#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace npp {

// 64-bit FNV-1a. Used for sample content hashes and sub-seed derivation.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 14695981039346656037ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

// All randomness in a pipeline flows from one base seed; stages get
// independent streams keyed by a short tag.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view stage) {
    std::uint64_t h = fnv1a64(&base, sizeof base);
    return fnv1a64(stage.data(), stage.size(), h);
}

// Seeded generator. Distributions are implemented here (Box-Muller,
// inverse-CDF Laplace, Fisher-Yates) so streams do not depend on the
// standard library's unspecified distribution algorithms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t bits() { return gen_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    double gaussian() {
        double u1 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double gaussian(double mean, double sd) { return mean + sd * gaussian(); }

    double laplace(double scale) {
        double u = uniform() - 0.5;
        double s = u < 0.0 ? -1.0 : 1.0;
        return -scale * s * std::log(1.0 - 2.0 * std::fabs(u));
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_index(i)]);
        }
    }

private:
    std::mt19937_64 gen_;
};

} // namespace npp
