#pragma once

#include <cmath>
#include <cstdint>

namespace gramflow {

// Counter-based generator built on the SplitMix64 mixing function
// (Steele/Lea/Flood). Constants:
//   increment 0x9E3779B97F4A7C15
//   mix       0xBF58476D1CE4E5B9, 0x94D049BB133111EB
// A (seed, stream) pair selects an independent substream, so every
// operation that takes a seed draws from its own sequence and the
// resulting values are identical across platforms and runs.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : state_(mix(seed + kIncrement)) {}

    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : state_(mix(mix(seed + kIncrement) ^ mix(stream + kStreamSalt))) {}

    std::uint64_t next_u64() {
        state_ += kIncrement;
        return mix(state_);
    }

    // uniform on [0, 1), 53-bit resolution
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform on (0, 1]; safe as a log() argument
    double uniform_open01() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // uniform integer in [0, bound)
    std::uint64_t below(std::uint64_t bound) {
        return next_u64() % bound;
    }

    // standard normal via Box-Muller; consumes two uniforms per pair
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open01();
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * kPi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    // -1 or +1 with equal probability
    double sign() {
        return (next_u64() >> 63) ? 1.0 : -1.0;
    }

private:
    static constexpr std::uint64_t kIncrement = 0x9E3779B97F4A7C15ull;
    static constexpr std::uint64_t kStreamSalt = 0x632BE59BD9B4E019ull;
    static constexpr double kPi = 3.14159265358979323846;

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Stream tags used across the library so seeded operations never share
// a sequence.
namespace streams {
inline constexpr std::uint64_t kWeights = 1;
inline constexpr std::uint64_t kSigns = 2;
inline constexpr std::uint64_t kRegressionPoints = 3;
inline constexpr std::uint64_t kRegressionTargets = 4;
inline constexpr std::uint64_t kPinnInterior = 5;
inline constexpr std::uint64_t kPinnBoundary = 6;
inline constexpr std::uint64_t kGramMc = 7;
inline constexpr std::uint64_t kPerturbation = 8;
inline constexpr std::uint64_t kCheckTrial = 9;
}  // namespace streams

}  // namespace gramflow
