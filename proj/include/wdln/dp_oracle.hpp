#pragma once

#include <cstdint>
#include <vector>

#include "wdln/balsa.hpp"
#include "wdln/channel.hpp"
#include "wdln/fl_engine.hpp"

namespace wdln {

// Parameters of a deliberately tiny instance for which the scheduling MDP can
// be enumerated exactly.
struct SmallInstanceSpec {
    std::vector<DeviceSpec> devices; // arrivals.m_max is overridden by m_max below
    std::uint32_t gain_bins = 2;
    std::uint32_t n_max = 4;
    std::uint32_t m_max = 2;
    std::uint32_t w = 1;
    double gamma = 0.01;
};

// Exact finite MDP: states are joint (gain bin, backlog) tuples, actions are
// the W-subsets of devices, rewards are expected effectivity scores mapped
// affinely into [0, 1].
struct MdpModel {
    std::uint32_t num_devices = 0;
    std::uint32_t gain_bins = 0;
    std::uint32_t n_max = 0;
    std::uint32_t m_max = 0;
    std::uint32_t w = 0;
    double gamma = 0.0;

    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<std::vector<std::uint8_t>> actions; // action index -> scheduled vector

    std::vector<double> rewards;     // [s * A + a], normalized
    std::vector<double> transitions; // [(s * A + a) * S + s']

    // Affine reward map: F_raw = r_norm * reward_scale + reward_min.
    double reward_scale = 1.0;
    double reward_min = 0.0;

    BinnedFading fading;
    std::vector<std::vector<double>> success_prob; // [device][bin]
    std::vector<std::vector<double>> arrival_pmf;  // [device][m]
    std::vector<double> arrival_mean;              // clamped-Poisson means

    std::size_t encode_state(const std::vector<std::uint32_t>& bins,
                             const std::vector<std::uint32_t>& backlog) const;
    void decode_state(std::size_t state, std::vector<std::uint32_t>& bins,
                      std::vector<std::uint32_t>& backlog) const;
};

MdpModel build_mdp(const SmallInstanceSpec& spec);

struct ValueSolution {
    double j_star = 0.0;                // optimal average reward, normalized units
    std::vector<double> values;         // relative values, v[0] = 0
    std::vector<std::size_t> policy;    // per-state maximizing action
    std::size_t iterations = 0;
};

ValueSolution relative_value_iteration(const MdpModel& model, double tol = 1e-9,
                                       std::size_t max_iter = 1000000);

// Average reward of a deterministic stationary policy via the stationary
// distribution of the induced chain.
double evaluate_policy(const MdpModel& model, const std::vector<std::size_t>& policy);

// Per-state greedy action: schedule the W devices maximizing q * (n + E[m]).
std::vector<std::size_t> greedy_policy_table(const MdpModel& model);

// Simulation-side counterparts, sharing the exact same dynamics as the MDP.
WorldOptions make_oracle_world_options(const SmallInstanceSpec& spec);

// Visit-count discretizer whose gain bins separate every representative gain
// of every device in the binned environment.
StateDiscretizer make_oracle_discretizer(const SmallInstanceSpec& spec);

} // namespace wdln
