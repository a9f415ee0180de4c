#include "wdln/arrivals.hpp"

#include <algorithm>
#include <cmath>

#include "wdln/errors.hpp"

namespace wdln {

void ArrivalParams::validate() const {
    if (rate_shards_per_round <= 0.0) throw InvalidConfig("arrival rate must be positive");
    if (m_max < 1) throw InvalidConfig("m_max must be >= 1");
}

std::uint32_t sample_arrivals(const ArrivalParams& params, RandomSource& rng) {
    const std::uint64_t draw = rng.poisson(params.rate_shards_per_round);
    return static_cast<std::uint32_t>(std::min<std::uint64_t>(draw, params.m_max));
}

double truncated_poisson_mean(double rate, std::uint32_t m_max) {
    double pmf = std::exp(-rate); // P[m = 0]
    double cdf = pmf;
    double mean = 0.0;
    for (std::uint32_t j = 1; j <= m_max; ++j) {
        pmf *= rate / static_cast<double>(j);
        if (j < m_max) {
            mean += static_cast<double>(j) * pmf;
            cdf += pmf;
        }
    }
    mean += static_cast<double>(m_max) * (1.0 - cdf); // tail mass clamps to m_max
    return mean;
}

void ShardBuffer::push(Shard shard) {
    total_samples_ += shard.samples.size();
    shards_.push_back(std::move(shard));
}

std::vector<Shard> ShardBuffer::drain() {
    std::vector<Shard> out(std::make_move_iterator(shards_.begin()),
                           std::make_move_iterator(shards_.end()));
    shards_.clear();
    total_samples_ = 0;
    return out;
}

} // namespace wdln
