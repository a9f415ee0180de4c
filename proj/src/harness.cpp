#include "wdln/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "wdln/errors.hpp"

namespace wdln {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_optional(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string{};
}

// Runs every instance of one configuration, optionally in parallel. Results
// land in instance order, so output is independent of thread scheduling.
std::vector<InstanceRun> run_instances(const ExperimentConfig& config, bool learner_enabled,
                                       const std::string& scheduler_name,
                                       const std::vector<Sample>& test_set) {
    ExperimentConfig effective = config;
    effective.learner_enabled = learner_enabled && config.learner_enabled;
    effective.scheduler.name = scheduler_name;

    std::vector<InstanceRun> runs(config.instances);
    auto run_one = [&](std::uint32_t instance) {
        World world(effective.world_options(), effective.base_seed, instance);
        auto scheduler = make_scheduler(effective, instance);
        InstanceRun run;
        run.records.reserve(static_cast<std::size_t>(effective.rounds));
        for (std::int64_t t = 1; t <= effective.rounds; ++t) {
            RoundRecord record = world.run_round(*scheduler);
            if (effective.learner_enabled &&
                (t % effective.snapshot_every == 0 || t == effective.rounds)) {
                const EvalResult eval = world.evaluate_central(test_set);
                record.loss = eval.loss;
                record.accuracy = eval.accuracy;
            }
            run.records.push_back(std::move(record));
        }
        runs[instance] = std::move(run);
    };

    std::uint32_t workers = config.threads == 0
                                ? std::max(1u, std::thread::hardware_concurrency())
                                : config.threads;
    workers = std::min(workers, config.instances);
    if (workers <= 1) {
        for (std::uint32_t i = 0; i < config.instances; ++i) run_one(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::uint32_t> next{0};
        for (std::uint32_t w = 0; w < workers; ++w) {
            pool.emplace_back([&]() {
                while (true) {
                    const std::uint32_t i = next.fetch_add(1);
                    if (i >= config.instances) return;
                    run_one(i);
                }
            });
        }
        for (std::thread& t : pool) t.join();
    }
    return runs;
}

using Extractor = std::optional<double> (*)(const RoundRecord&);

const std::vector<std::pair<std::string, Extractor>>& metric_extractors() {
    static const std::vector<std::pair<std::string, Extractor>> extractors = {
        {"F", [](const RoundRecord& r) -> std::optional<double> { return r.effectivity; }},
        {"cum_reward",
         [](const RoundRecord& r) -> std::optional<double> { return r.cum_reward; }},
        {"loss", [](const RoundRecord& r) -> std::optional<double> { return r.loss; }},
        {"accuracy", [](const RoundRecord& r) -> std::optional<double> { return r.accuracy; }},
        {"n_total",
         [](const RoundRecord& r) -> std::optional<double> {
             return static_cast<double>(r.backlog_total);
         }},
        {"stragglers",
         [](const RoundRecord& r) -> std::optional<double> {
             return static_cast<double>(r.stragglers);
         }},
    };
    return extractors;
}

MetricSeries aggregate_metric(const std::vector<InstanceRun>& runs, Extractor extract) {
    MetricSeries series;
    if (runs.empty()) return series;
    const std::size_t rounds = runs.front().records.size();
    std::vector<double> values;
    for (std::size_t r = 0; r < rounds; ++r) {
        values.clear();
        for (const InstanceRun& run : runs) {
            if (const auto v = extract(run.records[r])) values.push_back(*v);
        }
        if (values.empty()) continue;
        const auto [mean, half_width] = mean_ci95(values);
        series.rounds.push_back(runs.front().records[r].round);
        series.mean.push_back(mean);
        series.ci_lo.push_back(mean - half_width);
        series.ci_hi.push_back(mean + half_width);
    }
    return series;
}

MetricSeries aggregate_regret(const std::vector<InstanceRun>& runs, double j_star) {
    MetricSeries series;
    if (runs.empty()) return series;
    const std::size_t rounds = runs.front().records.size();
    std::vector<double> values;
    for (std::size_t r = 0; r < rounds; ++r) {
        values.clear();
        for (const InstanceRun& run : runs) {
            const RoundRecord& record = run.records[r];
            values.push_back(static_cast<double>(record.round) * j_star - record.cum_reward);
        }
        const auto [mean, half_width] = mean_ci95(values);
        series.rounds.push_back(runs.front().records[r].round);
        series.mean.push_back(mean);
        series.ci_lo.push_back(mean - half_width);
        series.ci_hi.push_back(mean + half_width);
    }
    return series;
}

std::vector<TargetStats> compute_targets(const std::vector<InstanceRun>& runs,
                                         const std::vector<double>& targets) {
    std::vector<TargetStats> stats;
    if (runs.empty() || runs.front().records.empty()) return stats;

    // Per-instance accuracy series at snapshot rounds.
    std::vector<std::vector<double>> series(runs.size());
    std::vector<std::vector<std::int64_t>> series_rounds(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i) {
        for (const RoundRecord& record : runs[i].records) {
            if (record.accuracy) {
                series[i].push_back(*record.accuracy);
                series_rounds[i].push_back(record.round);
            }
        }
    }
    if (series.front().empty()) return stats;

    for (double target : targets) {
        TargetStats ts;
        ts.target = target;
        std::size_t satisfied = 0;
        double required_sum = 0.0;
        std::size_t required_count = 0;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            if (!series[i].empty() && series[i].back() > target) ++satisfied;
            if (const auto pos = compute_required_rounds(series[i], target)) {
                required_sum += static_cast<double>(series_rounds[i][*pos - 1]);
                ++required_count;
            }
        }
        ts.satisfaction_rate = static_cast<double>(satisfied) / static_cast<double>(runs.size());
        ts.mean_required_rounds =
            required_count > 0 ? required_sum / static_cast<double>(required_count)
                               : std::numeric_limits<double>::quiet_NaN();
        stats.push_back(ts);
    }
    return stats;
}

nlohmann::ordered_json series_to_json(const MetricSeries& series) {
    return nlohmann::ordered_json{{"rounds", series.rounds},
                                  {"mean", series.mean},
                                  {"ci_lo", series.ci_lo},
                                  {"ci_hi", series.ci_hi}};
}

} // namespace

std::pair<double, double> mean_ci95(std::span<const double> values) {
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    return {mean, 1.96 * sd / std::sqrt(n)};
}

std::optional<std::size_t> compute_required_rounds(std::span<const double> accuracy_series,
                                                   double target) {
    if (accuracy_series.size() < 3) return std::nullopt;
    for (std::size_t i = 0; i + 2 < accuracy_series.size(); ++i) {
        if (accuracy_series[i] > target && accuracy_series[i + 1] > target &&
            accuracy_series[i + 2] > target) {
            return i + 1; // 1-based position of the first of the three
        }
    }
    return std::nullopt;
}

std::vector<double> compute_regret(std::span<const double> reward_series, double j_star) {
    std::vector<double> regret(reward_series.size());
    double cum = 0.0;
    for (std::size_t t = 0; t < reward_series.size(); ++t) {
        cum += reward_series[t];
        regret[t] = static_cast<double>(t + 1) * j_star - cum;
    }
    return regret;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();

    std::vector<Sample> test_set;
    if (config.learner_enabled) {
        RandomSource test_rng(derive_seed(config.base_seed, 0, 0, StreamPurpose::TestSet));
        test_set = generate_dataset(config.task, config.task.test_set_size, test_rng);
    }

    ExperimentResult result;
    result.summary.scheduler = config.scheduler.name;
    result.summary.rounds = config.rounds;
    result.summary.instances = config.instances;
    result.summary.base_seed = config.base_seed;

    // Resolve the regret reference before the main runs.
    if (config.j_star_mode == "value") {
        result.summary.j_star = config.j_star_value;
        result.summary.j_star_source = "config";
    } else if (config.j_star_mode == "alsa-pi") {
        const std::vector<InstanceRun> proxy_runs =
            run_instances(config, /*learner_enabled=*/false, "alsa-pi", test_set);
        double total = 0.0;
        std::size_t count = 0;
        for (const InstanceRun& run : proxy_runs) {
            const std::size_t from = run.records.size() / 2;
            for (std::size_t r = from; r < run.records.size(); ++r) {
                total += run.records[r].effectivity;
                ++count;
            }
        }
        result.summary.j_star = count > 0 ? total / static_cast<double>(count) : 0.0;
        result.summary.j_star_source = "proxy-alsa-pi(mean F, final 50% of rounds)";
    }

    result.instances =
        run_instances(config, config.learner_enabled, config.scheduler.name, test_set);

    for (const auto& [name, extractor] : metric_extractors()) {
        MetricSeries series = aggregate_metric(result.instances, extractor);
        if (!series.rounds.empty()) result.summary.metrics[name] = std::move(series);
    }
    if (result.summary.j_star) {
        MetricSeries series = aggregate_regret(result.instances, *result.summary.j_star);
        if (!series.rounds.empty()) result.summary.metrics["regret"] = std::move(series);
    }
    result.summary.targets = compute_targets(result.instances, config.targets);
    return result;
}

void emit_outputs(const ExperimentResult& result, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

    const std::string records_path = (fs::path(out_dir) / "records.csv").string();
    std::ofstream records(records_path);
    if (!records) throw IoError("cannot open " + records_path + " for writing");
    records << "round,scheduler,instance,F,cum_reward,regret,loss,accuracy,n_total,stragglers\n";
    for (std::size_t i = 0; i < result.instances.size(); ++i) {
        for (const RoundRecord& record : result.instances[i].records) {
            std::optional<double> regret;
            if (result.summary.j_star) {
                regret = static_cast<double>(record.round) * *result.summary.j_star -
                         record.cum_reward;
            }
            records << record.round << ',' << result.summary.scheduler << ',' << i << ','
                    << format_double(record.effectivity) << ','
                    << format_double(record.cum_reward) << ',' << format_optional(regret) << ','
                    << format_optional(record.loss) << ',' << format_optional(record.accuracy)
                    << ',' << record.backlog_total << ',' << record.stragglers << '\n';
        }
    }
    records.close();

    nlohmann::ordered_json summary;
    summary["scheduler"] = result.summary.scheduler;
    summary["rounds"] = result.summary.rounds;
    summary["instances"] = result.summary.instances;
    summary["base_seed"] = result.summary.base_seed;
    summary["j_star_source"] = result.summary.j_star_source;
    if (result.summary.j_star) summary["j_star"] = *result.summary.j_star;
    nlohmann::ordered_json metrics;
    for (const auto& [name, series] : result.summary.metrics) {
        metrics[name] = series_to_json(series);
    }
    summary["metrics"] = metrics;
    nlohmann::ordered_json targets = nlohmann::ordered_json::array();
    for (const TargetStats& ts : result.summary.targets) {
        nlohmann::ordered_json entry;
        entry["target"] = ts.target;
        entry["satisfaction_rate"] = ts.satisfaction_rate;
        if (std::isnan(ts.mean_required_rounds)) {
            entry["mean_required_rounds"] = nullptr;
        } else {
            entry["mean_required_rounds"] = ts.mean_required_rounds;
        }
        targets.push_back(entry);
    }
    summary["targets"] = targets;

    const std::string summary_path = (fs::path(out_dir) / "summary.json").string();
    std::ofstream summary_file(summary_path);
    if (!summary_file) throw IoError("cannot open " + summary_path + " for writing");
    summary_file << summary.dump(2) << '\n';
    summary_file.close();

    const std::string long_path = (fs::path(out_dir) / "long.csv").string();
    std::ofstream long_file(long_path);
    if (!long_file) throw IoError("cannot open " + long_path + " for writing");
    long_file << "scheduler,round,metric,mean,ci_lo,ci_hi\n";
    for (const auto& [name, series] : result.summary.metrics) {
        for (std::size_t i = 0; i < series.rounds.size(); ++i) {
            long_file << result.summary.scheduler << ',' << series.rounds[i] << ',' << name
                      << ',' << format_double(series.mean[i]) << ','
                      << format_double(series.ci_lo[i]) << ','
                      << format_double(series.ci_hi[i]) << '\n';
        }
    }
}

RunSummary reaggregate_records(const std::string& records_csv_path) {
    std::ifstream in(records_csv_path);
    if (!in) throw IoError("cannot open " + records_csv_path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("records file is empty: " + records_csv_path);

    struct Row {
        std::int64_t round;
        std::size_t instance;
        double f, cum_reward;
        std::optional<double> regret, loss, accuracy;
        double n_total, stragglers;
    };
    std::vector<Row> rows;
    std::string scheduler_name;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        while (fields.size() < 10) fields.emplace_back();
        Row row;
        row.round = std::stoll(fields[0]);
        scheduler_name = fields[1];
        row.instance = static_cast<std::size_t>(std::stoull(fields[2]));
        row.f = std::stod(fields[3]);
        row.cum_reward = std::stod(fields[4]);
        if (!fields[5].empty()) row.regret = std::stod(fields[5]);
        if (!fields[6].empty()) row.loss = std::stod(fields[6]);
        if (!fields[7].empty()) row.accuracy = std::stod(fields[7]);
        row.n_total = std::stod(fields[8]);
        row.stragglers = std::stod(fields[9]);
        rows.push_back(row);
    }

    std::size_t num_instances = 0;
    for (const Row& row : rows) num_instances = std::max(num_instances, row.instance + 1);

    std::vector<InstanceRun> runs(num_instances);
    for (const Row& row : rows) {
        RoundRecord record;
        record.round = row.round;
        record.effectivity = row.f;
        record.cum_reward = row.cum_reward;
        record.loss = row.loss;
        record.accuracy = row.accuracy;
        record.backlog_total = static_cast<std::uint32_t>(row.n_total);
        record.stragglers = static_cast<std::uint32_t>(row.stragglers);
        runs[row.instance].records.push_back(record);
    }

    RunSummary summary;
    summary.scheduler = scheduler_name;
    summary.instances = static_cast<std::uint32_t>(num_instances);
    summary.rounds =
        runs.empty() || runs.front().records.empty() ? 0 : runs.front().records.back().round;
    for (const auto& [name, extractor] : metric_extractors()) {
        MetricSeries series = aggregate_metric(runs, extractor);
        if (!series.rounds.empty()) summary.metrics[name] = std::move(series);
    }
    summary.j_star_source = "from-records";
    return summary;
}

namespace {

// Greedy policy with the true rates under the clamped arrival model; this is
// the policy whose exact average reward the oracle evaluates.
class OracleGreedyScheduler final : public Scheduler {
  public:
    explicit OracleGreedyScheduler(const SmallInstanceSpec& spec) {
        for (const DeviceSpec& device : spec.devices) {
            expected_arrivals_.push_back(
                truncated_poisson_mean(device.arrivals.rate_shards_per_round, spec.m_max));
        }
    }
    std::string name() const override { return "oracle-greedy"; }
    bool needs_backlog() const override { return true; }
    ScheduleDecision decide(const ObservedState& state, std::uint32_t w) override {
        return greedy_policy(state.success_probs, *state.backlog, expected_arrivals_, w);
    }

  private:
    std::vector<double> expected_arrivals_;
};

} // namespace

std::vector<RegretCheckpoint> balsa_regret_curve(const SmallInstanceSpec& spec,
                                                 double j_star_raw,
                                                 const std::vector<std::int64_t>& checkpoints,
                                                 std::uint32_t seeds, std::uint64_t base_seed,
                                                 bool paired) {
    std::vector<std::int64_t> sorted = checkpoints;
    std::sort(sorted.begin(), sorted.end());
    const std::int64_t horizon = sorted.empty() ? 0 : sorted.back();

    std::vector<double> totals(sorted.size(), 0.0);
    for (std::uint32_t seed = 0; seed < seeds; ++seed) {
        World world(make_oracle_world_options(spec), base_seed, seed);
        BalsaOptions options;
        options.partially_observable = false;
        options.counting = CountingMode::Joint;
        options.discretizer = make_oracle_discretizer(spec);
        BalsaScheduler scheduler(
            spec.devices.size(), options,
            derive_seed(base_seed, seed, 0, StreamPurpose::SchedulerInternal));

        // Same instance index, hence identical gain/arrival/transmission draws.
        std::optional<World> reference_world;
        std::optional<OracleGreedyScheduler> reference;
        if (paired) {
            reference_world.emplace(make_oracle_world_options(spec), base_seed, seed);
            reference.emplace(spec);
        }

        std::size_t next_checkpoint = 0;
        for (std::int64_t t = 1; t <= horizon; ++t) {
            world.run_round(scheduler);
            if (paired) reference_world->run_round(*reference);
            while (next_checkpoint < sorted.size() && sorted[next_checkpoint] == t) {
                const double baseline = paired
                                            ? reference_world->cumulative_reward()
                                            : static_cast<double>(t) * j_star_raw;
                const double regret = baseline - world.cumulative_reward();
                totals[next_checkpoint] += regret / static_cast<double>(t);
                ++next_checkpoint;
            }
        }
    }

    std::vector<RegretCheckpoint> out;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        out.push_back({sorted[i], totals[i] / static_cast<double>(seeds)});
    }
    return out;
}

} // namespace wdln
