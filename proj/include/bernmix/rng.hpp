#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace bernmix {

// Deterministic pseudo-random source. The standard library's engines are
// portable but its distributions and std::shuffle are not, so every seeded
// result in this library is produced through this class instead.
//
// Core generator is splitmix64: one 64-bit word of state, full period,
// passes BigCrush, and cheap enough to use for seed derivation too.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0,1) using the top 53 bits, so every value is an exact
    // double and the sequence is identical on any IEEE-754 platform.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, bound). Multiply-shift with rejection
    // (Lemire), unbiased for any bound.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("Rng::below: bound must be positive");
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            const std::uint64_t t = (0 - bound) % bound;
            while (lo < t) {
                m = static_cast<unsigned __int128>(next_u64()) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Standard normal via Box-Muller; the spare deviate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derive an independent child seed from a master seed and a stream
    // index. Used so that e.g. the train/test shuffle, the calibration
    // shuffle and each forest tree get decoupled streams: changing how many
    // draws one consumer makes never perturbs another.
    static std::uint64_t derive(std::uint64_t master, std::uint64_t stream) {
        Rng r(master ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
        r.next_u64();
        return r.next_u64();
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace bernmix
