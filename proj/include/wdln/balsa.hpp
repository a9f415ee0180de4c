#pragma once

#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

#include "wdln/rng.hpp"
#include "wdln/schedulers.hpp"

namespace wdln {

// Conjugate bookkeeping for the per-device Poisson rate under the Jeffreys
// prior: after observing a total of sum_m arrivals over obs_rounds rounds the
// posterior is Gamma(shape = sum_m + 1/2, rate = obs_rounds).
struct PosteriorState {
    std::vector<std::uint64_t> sum_m;
    std::vector<std::uint64_t> obs_rounds;

    explicit PosteriorState(std::size_t num_devices = 0)
        : sum_m(num_devices, 0), obs_rounds(num_devices, 0) {}
    std::size_t size() const { return sum_m.size(); }
};

void posterior_update(PosteriorState& post, std::size_t device, std::uint64_t m_total,
                      std::uint64_t rounds_covered);

// Posterior mean (sum_m + 1/2) / obs_rounds; with no observations the diffuse
// surrogate Gamma(1/2, epsilon_rate) applies.
double posterior_mean(const PosteriorState& post, std::size_t device, double epsilon_rate);

std::vector<double> sample_theta(const PosteriorState& post, double epsilon_rate,
                                 RandomSource& rng);

// Quantizer for visit counting: gains fall into log-spaced bins, backlog values
// are clamped at n_truncation.
struct StateDiscretizer {
    std::vector<double> gain_bin_edges;
    std::uint32_t n_truncation = 256;

    static StateDiscretizer log_spaced(std::size_t num_bins, double lo, double hi,
                                       std::uint32_t n_truncation);
    std::uint32_t gain_bin(double gain_linear) const;
    std::uint32_t num_bins() const {
        return static_cast<std::uint32_t>(gain_bin_edges.size()) + 1;
    }
};

enum class CountingMode {
    Joint,    // exact joint (s, a) visit counts
    Factored, // per-device (h_bin, n, a_u) counts
    None      // episode-length doubling only
};

// Episode bookkeeping. T_prev is the previous stage length T_{k-1}; the stage
// ends when t > t_k + T_prev or when some visit count exceeds twice its value
// at the stage start.
struct StageState {
    std::uint64_t k = 0;
    std::int64_t t_k = 0;
    std::int64_t t_prev_len = 1;
    std::vector<double> sampled_theta;
};

// True if round t must open a new stage given the doubling rule inputs.
bool stage_should_end(std::int64_t t, std::int64_t t_k, std::int64_t t_prev_len,
                      bool count_trigger);

// True if a visit count that just moved to `count_after_increment` exceeds
// twice its `snapshot` value from the stage start.
bool count_doubling_trigger(std::uint64_t count_after_increment, std::uint64_t snapshot);

struct BalsaOptions {
    bool partially_observable = false;
    CountingMode counting = CountingMode::Factored;
    StateDiscretizer discretizer = StateDiscretizer::log_spaced(8, 1e-14, 1e-6, 256);
    double epsilon_rate = 1e-6;
    // Optional informative Gamma prior added as pseudo-observations.
    double prior_shape = 0.0;
    double prior_rounds = 0.0;
};

BalsaOptions default_balsa_options(std::size_t num_devices, bool partially_observable);

// Posterior-sampling scheduler. In the fully observable WDLN it reads the
// reported backlog and recovers every device's arrivals each round; in the
// partially observable variant it substitutes the backlog estimate
// n~ = (T^n - 1) * theta_k and updates posteriors only on delivery.
class BalsaScheduler final : public Scheduler {
  public:
    BalsaScheduler(std::size_t num_devices, BalsaOptions options, std::uint64_t seed);

    std::string name() const override { return options_.partially_observable ? "balsa-po" : "balsa"; }
    bool needs_backlog() const override { return !options_.partially_observable; }
    ScheduleDecision decide(const ObservedState& state, std::uint32_t w) override;
    void observe(const RoundOutcome& outcome) override;

    const PosteriorState& posterior() const { return posterior_; }
    const StageState& stage() const { return stage_; }
    std::uint64_t stages_started() const { return stage_.k; }
    // Forces the sampled rates for the remainder of the current stage; test hook
    // for checking equivalence with the greedy policy under known parameters.
    void freeze_theta(std::vector<double> theta);

  private:
    using Key = std::vector<std::uint32_t>;

    void start_stage(std::int64_t t);
    std::vector<std::uint32_t> estimated_backlog(std::int64_t t) const;
    void record_visit();

    std::size_t num_devices_;
    BalsaOptions options_;
    RandomSource rng_;
    PosteriorState posterior_;
    StageState stage_;
    bool theta_frozen_ = false;

    // Visit counts carry their stage-start value lazily: the first touch in a
    // stage snapshots the count, so stage starts cost O(1).
    struct VisitCount {
        std::uint64_t count = 0;
        std::uint64_t stage_start = 0;
        std::uint64_t stage_stamp = 0;
    };
    // Joint mode keys the full discretized (s, a); factored mode keeps one
    // packed (h_bin, n, a) count table per device.
    std::map<Key, VisitCount> counts_;
    std::vector<std::unordered_map<std::uint32_t, VisitCount>> factored_counts_;
    bool count_trigger_ = false;

    std::vector<std::int64_t> last_delivery_round_; // 0 = never
    std::vector<std::uint32_t> decision_backlog_;   // backlog used in the last decide
    std::vector<std::uint8_t> decision_action_;
    std::vector<double> decision_gains_;
    bool have_pending_decision_ = false;
};

} // namespace wdln
