#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "wdln/config.hpp"
#include "wdln/errors.hpp"
#include "wdln/harness.hpp"

using namespace wdln;

namespace {

std::string small_config_json(const char* scheduler, int rounds, int instances,
                              bool learner) {
    std::ostringstream out;
    out << R"({
  "devices": {"shard_size": 4, "m_max": 16, "list": [
    {"distance_km": 0.1, "rate": 1.0},
    {"distance_km": 0.15, "rate": 2.0},
    {"distance_km": 0.2, "rate": 0.5}
  ]},
  "fl": {"learner": )"
        << (learner ? "true" : "false") << R"(, "local_epochs": 1},
  "task": {"test_set_size": 200},
  "scheduler": {"name": ")"
        << scheduler << R"("},
  "experiment": {"rounds": )"
        << rounds << R"(, "instances": )" << instances
        << R"(, "base_seed": 3, "w": 1, "snapshot_every": 2, "threads": 1}
})";
    return out.str();
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("required rounds needs three consecutive exceedances") {
    const std::vector<double> series{0.8, 0.9, 0.9, 0.9};
    CHECK(compute_required_rounds(series, 0.85) == std::size_t{2});
    CHECK(compute_required_rounds(series, 0.0) == std::size_t{1});
    const std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
    CHECK_FALSE(compute_required_rounds(flat, 0.8).has_value());
    const std::vector<double> short_series{0.9, 0.9};
    CHECK_FALSE(compute_required_rounds(short_series, 0.5).has_value()); // too short
    const std::vector<double> choppy{0.9, 0.5, 0.9, 0.5, 0.9};
    CHECK_FALSE(compute_required_rounds(choppy, 0.8).has_value());
}

TEST_CASE("regret accumulates against the reference") {
    const std::vector<double> constant(5, 2.0);
    const auto zero = compute_regret(constant, 2.0);
    for (double r : zero) CHECK(r == doctest::Approx(0.0));

    const std::vector<double> idle(4, 0.0);
    const auto linear = compute_regret(idle, 1.5);
    for (std::size_t t = 0; t < idle.size(); ++t) {
        CHECK(linear[t] == doctest::Approx(1.5 * static_cast<double>(t + 1)));
    }
}

TEST_CASE("config validation points at the offending field") {
    CHECK_THROWS_WITH_AS(parse_experiment_config("{}"),
                         doctest::Contains("devices"), InvalidConfig);
    CHECK_THROWS_WITH_AS(
        parse_experiment_config(R"({"devices": {"list": [{"rate": 1.0}]}})"),
        doctest::Contains("distance_km"), InvalidConfig);
    CHECK_THROWS_WITH_AS(
        parse_experiment_config(
            R"({"devices": {"list": [{"distance_km": 0.1, "rate": -1}]}})"),
        doctest::Contains("rate"), InvalidConfig);
    CHECK_THROWS_WITH_AS(
        parse_experiment_config(small_config_json("nope", 1, 1, false)),
        doctest::Contains("scheduler.name"), InvalidConfig);

    ExperimentConfig bad_w = parse_experiment_config(small_config_json("rr", 1, 1, false));
    bad_w.w_slots = 9;
    CHECK_THROWS_WITH_AS(bad_w.validate(), doctest::Contains("experiment.w"), InvalidConfig);
}

TEST_CASE("experiment outputs are deterministic byte for byte") {
    const ExperimentConfig config =
        parse_experiment_config(small_config_json("balsa", 40, 2, false));
    namespace fs = std::filesystem;
    const fs::path dir1 = fs::temp_directory_path() / "wdln_det_a";
    const fs::path dir2 = fs::temp_directory_path() / "wdln_det_b";
    emit_outputs(run_experiment(config), dir1.string());
    emit_outputs(run_experiment(config), dir2.string());
    for (const char* name : {"records.csv", "summary.json", "long.csv"}) {
        CHECK(read_file(dir1 / name) == read_file(dir2 / name));
        CHECK_FALSE(read_file(dir1 / name).empty());
    }
}

TEST_CASE("empty runs emit header-only tables") {
    const ExperimentConfig config =
        parse_experiment_config(small_config_json("rr", 0, 1, false));
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "wdln_empty";
    emit_outputs(run_experiment(config), dir.string());
    CHECK(read_file(dir / "records.csv") ==
          "round,scheduler,instance,F,cum_reward,regret,loss,accuracy,n_total,stragglers\n");
    CHECK(read_file(dir / "long.csv") == "scheduler,round,metric,mean,ci_lo,ci_hi\n");
}

TEST_CASE("records keep a constant column count") {
    const ExperimentConfig config =
        parse_experiment_config(small_config_json("alsa-pi", 21, 2, true));
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "wdln_cols";
    emit_outputs(run_experiment(config), dir.string());
    std::ifstream in(dir / "records.csv");
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
        CHECK(std::count(line.begin(), line.end(), ',') == 9);
        ++lines;
    }
    CHECK(lines == 1 + 21 * 2);
}

TEST_CASE("reaggregation reproduces the summary means") {
    const ExperimentConfig config =
        parse_experiment_config(small_config_json("balsa-po", 30, 3, true));
    const ExperimentResult result = run_experiment(config);
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "wdln_reagg";
    emit_outputs(result, dir.string());
    const RunSummary rebuilt = reaggregate_records((dir / "records.csv").string());
    for (const auto& [name, series] : result.summary.metrics) {
        if (name == "regret") continue; // not recomputable without j_star
        REQUIRE(rebuilt.metrics.count(name) == 1);
        const MetricSeries& other = rebuilt.metrics.at(name);
        REQUIRE(other.mean.size() == series.mean.size());
        for (std::size_t i = 0; i < series.mean.size(); ++i) {
            CHECK(other.mean[i] == doctest::Approx(series.mean[i]).epsilon(1e-9));
            CHECK(other.ci_lo[i] == doctest::Approx(series.ci_lo[i]).epsilon(1e-9));
        }
    }
}

TEST_CASE("bench effectivity equals the arrival mass") {
    const ExperimentConfig config =
        parse_experiment_config(small_config_json("bench", 50, 1, false));
    const ExperimentResult result = run_experiment(config);
    for (const RoundRecord& record : result.instances[0].records) {
        double mass = 0.0;
        for (std::uint32_t m : record.m) mass += m;
        CHECK(record.effectivity == doctest::Approx(mass));
        CHECK(record.stragglers == 0);
    }
}

TEST_CASE("environment draws are shared across schedulers") {
    const ExperimentConfig rr_config =
        parse_experiment_config(small_config_json("rr", 25, 1, false));
    const ExperimentConfig wmax_config =
        parse_experiment_config(small_config_json("wmax", 25, 1, false));
    const ExperimentResult rr = run_experiment(rr_config);
    const ExperimentResult wmax = run_experiment(wmax_config);
    for (std::size_t t = 0; t < 25; ++t) {
        CHECK(rr.instances[0].records[t].m == wmax.instances[0].records[t].m);
    }
}

TEST_CASE("j_star value mode fills the regret metric") {
    ExperimentConfig config =
        parse_experiment_config(small_config_json("alsa-pi", 20, 2, false));
    config.j_star_mode = "value";
    config.j_star_value = 3.0;
    const ExperimentResult result = run_experiment(config);
    REQUIRE(result.summary.metrics.count("regret") == 1);
    const MetricSeries& regret = result.summary.metrics.at("regret");
    const MetricSeries& f = result.summary.metrics.at("F");
    // R(1) = j_star - F(1) on average.
    CHECK(regret.mean.front() == doctest::Approx(3.0 - f.mean.front()).epsilon(1e-9));
}
