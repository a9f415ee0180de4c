#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace wdln {

// Purpose tags for deriving independent sub-streams. Adding a purpose does not
// perturb the draws of existing ones, which keeps runs comparable across
// schedulers when the environment streams are shared.
enum class StreamPurpose : std::uint64_t {
    ChannelGain = 1,
    Arrival = 2,
    ShardContent = 3,
    Transmission = 4,
    SchedulerInternal = 5,
    LocalSgd = 6,
    TestSet = 7,
    MdpEnv = 8,
};

// Mixes (base_seed, instance, device, purpose) into one 64-bit stream seed.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t instance,
                          std::uint64_t device, StreamPurpose purpose);

// Seeded random stream. One instance per (simulation instance, device, purpose);
// never shared across threads.
class RandomSource {
  public:
    explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    // Unit-mean exponential unless scaled by the caller.
    double exponential(double mean = 1.0) {
        return std::exponential_distribution<double>(1.0 / mean)(engine_);
    }

    double normal(double mu = 0.0, double sigma = 1.0) {
        return std::normal_distribution<double>(mu, sigma)(engine_);
    }

    std::uint64_t poisson(double rate) {
        return std::poisson_distribution<std::uint64_t>(rate)(engine_);
    }

    // Gamma with shape/rate parameterization.
    double gamma(double shape, double rate) {
        return std::gamma_distribution<double>(shape, 1.0 / rate)(engine_);
    }

    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t integer(std::uint64_t upper_exclusive) {
        return std::uniform_int_distribution<std::uint64_t>(0, upper_exclusive - 1)(engine_);
    }

    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(integer(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    std::mt19937_64& engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
};

} // namespace wdln
