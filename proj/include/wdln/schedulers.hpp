#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wdln/rng.hpp"

namespace wdln {

// What the AP can see in the scheduling phase. success_probs is derived from
// the observed gains through the known error model; backlog (n) is absent in
// the partially observable WDLN.
struct ObservedState {
    std::int64_t round = 1;
    std::vector<double> gains;
    std::vector<double> success_probs;
    std::optional<std::vector<std::uint32_t>> backlog;
};

struct ScheduleDecision {
    std::vector<std::uint8_t> scheduled;
    // Bench schedules everyone and is exempt from the sum(a)=W constraint;
    // the engine also forces its transmissions to succeed.
    bool constraint_exempt = false;
    bool force_delivery = false;

    std::uint32_t scheduled_count() const;
};

// Everything a scheduler may learn after the aggregation phase. reports holds
// n+m for delivered devices (physically transmitted alongside the update);
// backlog/backlog_next are absent in the partially observable WDLN.
struct RoundOutcome {
    std::int64_t round = 1;
    std::vector<double> gains;
    std::vector<std::uint8_t> scheduled;
    std::vector<std::uint8_t> delivered;
    std::vector<std::uint32_t> reports;
    std::optional<std::vector<std::uint32_t>> backlog;
    std::optional<std::vector<std::uint32_t>> backlog_next;
};

class Scheduler {
  public:
    virtual ~Scheduler() = default;
    virtual std::string name() const = 0;
    // True if the scheduler requires the reported backlog vector n.
    virtual bool needs_backlog() const { return false; }
    virtual ScheduleDecision decide(const ObservedState& state, std::uint32_t w) = 0;
    virtual void observe(const RoundOutcome& outcome) { (void)outcome; }
};

// Top-W selection by score, ties broken toward the lowest device index.
ScheduleDecision select_top_w(const std::vector<double>& scores, std::uint32_t w);

// Greedy policy: schedule the W devices maximizing p_u * (n_u + expected_m_u).
ScheduleDecision greedy_policy(const std::vector<double>& success_probs,
                               const std::vector<std::uint32_t>& backlog,
                               const std::vector<double>& expected_arrivals, std::uint32_t w);

// F = sum_{delivered}(n+m) - gamma * sum_{undelivered}(n+m).
double effectivity_score(const std::vector<double>& n_plus_m,
                         const std::vector<std::uint8_t>& scheduled,
                         const std::vector<std::uint8_t>& delivered, double gamma);

// Algebraically identical rearrangement:
// sum_u a_u x_u (1+gamma)(n+m) - gamma * sum_u (n+m).
double effectivity_score_rearranged(const std::vector<double>& n_plus_m,
                                    const std::vector<std::uint8_t>& scheduled,
                                    const std::vector<std::uint8_t>& delivered, double gamma);

class BenchScheduler final : public Scheduler {
  public:
    std::string name() const override { return "bench"; }
    ScheduleDecision decide(const ObservedState& state, std::uint32_t w) override;
};

class RoundRobinScheduler final : public Scheduler {
  public:
    std::string name() const override { return "rr"; }
    ScheduleDecision decide(const ObservedState& state, std::uint32_t w) override;

  private:
    std::int64_t counter_ = 0;
};

std::vector<std::uint32_t> round_robin_indices(std::int64_t round, std::uint32_t num_devices,
                                               std::uint32_t w);

class WMaxScheduler final : public Scheduler {
  public:
    std::string name() const override { return "wmax"; }
    ScheduleDecision decide(const ObservedState& state, std::uint32_t w) override;
};

// Greedy policy with the true arrival rates (perfect a priori information).
class AlsaPiScheduler final : public Scheduler {
  public:
    explicit AlsaPiScheduler(std::vector<double> true_rates)
        : true_rates_(std::move(true_rates)) {}
    std::string name() const override { return "alsa-pi"; }
    bool needs_backlog() const override { return true; }
    ScheduleDecision decide(const ObservedState& state, std::uint32_t w) override;

  private:
    std::vector<double> true_rates_;
};

} // namespace wdln
