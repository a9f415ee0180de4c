#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "wdln/arrivals.hpp"
#include "wdln/channel.hpp"
#include "wdln/learner.hpp"
#include "wdln/schedulers.hpp"
#include "wdln/task.hpp"

namespace wdln {

struct FlHyperParams {
    double lambda = 0.01;
    double beta = 0.001;
    double eta_d = 0.01;
    double eta_sgd = 0.05;
    std::uint32_t local_epochs = 5;
    std::uint32_t local_batch = 10;
    std::uint32_t n_max = 256;

    void validate() const;
};

struct CentralState {
    ModelParams w;
    std::int64_t round = 1;
};

struct DeviceFlState {
    std::vector<double> psi; // aggregated local gradient, empty until first train
    std::uint32_t n = 0;     // undelivered shards accumulated since last success
    std::uint64_t big_n = 0; // shards already folded into central updates
    std::int64_t d = 1;      // delayed rounds since last successful transmission
    std::uint32_t m_last = 0;
};

struct LocalUpdate {
    std::vector<double> delta;
    std::uint32_t sample_report = 0; // n + m, in shards
};

double dynamic_learning_rate(double eta_d, std::int64_t delayed_rounds);

// psi <- grad + beta * psi (the delayed-gradient recursion).
void aggregate_local_gradient(std::vector<double>& psi, std::span<const double> grad,
                              double beta);

// One device's local update phase: replace local parameters with the broadcast
// central ones, train on this round's shards, fold the result into psi, and
// scale by the delay-adjusted learning rate. Mutates psi only.
LocalUpdate local_train(DeviceFlState& device, const CentralState& central,
                        std::span<const Shard> shards, const FlHyperParams& fl,
                        RandomSource& sgd_rng);

// Eq.-level counter transitions, exposed for direct testing.
void reset_gradient_on_success(DeviceFlState& device, bool delivered);
void update_sample_counters(DeviceFlState& device, bool scheduled, bool delivered,
                            std::uint32_t m, std::uint32_t n_max);

// Applies the weighted central update in place. Returns false (and leaves the
// parameters untouched) when all sample counts are zero.
bool central_aggregate(CentralState& central, const std::vector<LocalUpdate>& updates,
                       const std::vector<std::uint64_t>& all_big_n,
                       const std::vector<std::uint8_t>& delivered);

struct DeviceSpec {
    ChannelParams channel;
    ArrivalParams arrivals;
};

struct WorldOptions {
    std::vector<DeviceSpec> devices;
    FlHyperParams fl;
    SyntheticTaskParams task;
    std::uint32_t w_slots = 5;
    double gamma = 0.01;
    bool learner_enabled = true;
    // When set, gains are drawn from the equal-probability fading bins instead
    // of the continuous distribution; this makes trajectories match the finite
    // MDP oracle exactly.
    std::optional<BinnedFading> binned_fading;
};

struct RoundRecord {
    std::int64_t round = 1;
    std::vector<std::uint8_t> scheduled;
    std::vector<std::uint8_t> delivered;
    std::vector<std::uint32_t> n_before; // n^t
    std::vector<std::uint32_t> m;        // m^t
    double effectivity = 0.0;
    double cum_reward = 0.0;
    std::uint32_t backlog_total = 0; // sum of n^{t+1}
    std::uint32_t stragglers = 0;    // devices without a delivery this round
    std::optional<double> loss;
    std::optional<double> accuracy;
};

// One simulation instance: owns all device state and random streams.
class World {
  public:
    World(WorldOptions options, std::uint64_t base_seed, std::uint64_t instance);

    RoundRecord run_round(Scheduler& scheduler);

    const CentralState& central() const { return central_; }
    const std::vector<DeviceFlState>& devices() const { return device_states_; }
    const WorldOptions& options() const { return options_; }
    double cumulative_reward() const { return cum_reward_; }
    EvalResult evaluate_central(std::span<const Sample> dataset) const;

  private:
    double sample_gain_for(std::size_t u);

    WorldOptions options_;
    CentralState central_;
    std::vector<DeviceFlState> device_states_;
    std::vector<RandomSource> gain_streams_;
    std::vector<RandomSource> arrival_streams_;
    std::vector<RandomSource> shard_streams_;
    std::vector<RandomSource> transmission_streams_;
    std::vector<RandomSource> sgd_streams_;
    std::vector<double> mean_gains_;
    double cum_reward_ = 0.0;
};

} // namespace wdln
