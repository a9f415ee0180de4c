#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wdln/config.hpp"
#include "wdln/dp_oracle.hpp"
#include "wdln/fl_engine.hpp"

namespace wdln {

struct InstanceRun {
    std::vector<RoundRecord> records;
};

struct MetricSeries {
    std::vector<std::int64_t> rounds;
    std::vector<double> mean;
    std::vector<double> ci_lo;
    std::vector<double> ci_hi;
};

struct TargetStats {
    double target = 0.0;
    double satisfaction_rate = 0.0;
    // Mean over the instances that reached the target; NaN when none did.
    double mean_required_rounds = 0.0;
};

struct RunSummary {
    std::string scheduler;
    std::int64_t rounds = 0;
    std::uint32_t instances = 0;
    std::uint64_t base_seed = 0;
    std::map<std::string, MetricSeries> metrics;
    std::vector<TargetStats> targets;
    std::string j_star_source = "none";
    std::optional<double> j_star;
};

struct ExperimentResult {
    std::vector<InstanceRun> instances;
    RunSummary summary;
};

// Smallest 1-based position t such that series[t-1..t+1] all exceed `target`.
std::optional<std::size_t> compute_required_rounds(std::span<const double> accuracy_series,
                                                   double target);

// R(t) = t * j_star - sum_{tau <= t} reward[tau].
std::vector<double> compute_regret(std::span<const double> reward_series, double j_star);

ExperimentResult run_experiment(const ExperimentConfig& config);

// Writes records.csv, summary.json, and long.csv into out_dir.
void emit_outputs(const ExperimentResult& result, const std::string& out_dir);

// Rebuilds a RunSummary from a records.csv produced by emit_outputs.
RunSummary reaggregate_records(const std::string& records_csv_path);

// Mean and symmetric 95% normal-approximation confidence half-width.
std::pair<double, double> mean_ci95(std::span<const double> values);

struct RegretCheckpoint {
    std::int64_t rounds = 0;
    double mean_regret_per_round = 0.0;
};

// Runs BALSA on the binned small-instance environment for several seeds and
// reports the seed-averaged R(T)/T at each checkpoint. j_star_raw must be in
// effectivity-score units. With `paired` set, the trajectory reward is
// measured against the exact greedy policy driven by the same random streams
// (a common-random-numbers control variate): the environment noise cancels
// and only the learning loss remains, shifted by the constant greedy gap.
std::vector<RegretCheckpoint> balsa_regret_curve(const SmallInstanceSpec& spec,
                                                 double j_star_raw,
                                                 const std::vector<std::int64_t>& checkpoints,
                                                 std::uint32_t seeds, std::uint64_t base_seed,
                                                 bool paired = false);

} // namespace wdln
