#pragma once

#include <cstdint>
#include <deque>

#include "wdln/rng.hpp"
#include "wdln/task.hpp"

namespace wdln {

struct ArrivalParams {
    double rate_shards_per_round = 1.0;
    std::uint32_t m_max = 64; // clamp on per-round shard arrivals

    void validate() const;
};

// Poisson(rate) draw clamped at m_max, in shard units.
std::uint32_t sample_arrivals(const ArrivalParams& params, RandomSource& rng);

// Mean of min(Poisson(rate), m_max); the expected per-round arrival mass seen
// by the clamped process. Used where scheduling scores must match the finite
// oracle dynamics exactly.
double truncated_poisson_mean(double rate, std::uint32_t m_max);

// FIFO buffer of arrived-but-untrained shards for one device.
class ShardBuffer {
  public:
    void push(Shard shard);
    // Removes and returns all pending shards.
    std::vector<Shard> drain();
    std::size_t pending_shards() const { return shards_.size(); }
    std::size_t total_pending_samples() const { return total_samples_; }

  private:
    std::deque<Shard> shards_;
    std::size_t total_samples_ = 0;
};

} // namespace wdln
