#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "wdln/config.hpp"
#include "wdln/dp_oracle.hpp"
#include "wdln/errors.hpp"
#include "wdln/harness.hpp"

namespace {

int run_simulate(const std::string& config_path, const std::string& scheduler,
                 std::int64_t rounds, std::int64_t instances, std::int64_t seed,
                 const std::string& out_dir) {
    wdln::ExperimentConfig config = config_path.empty()
                                        ? wdln::default_experiment_config()
                                        : wdln::load_experiment_config(config_path);
    if (!scheduler.empty()) config.scheduler.name = scheduler;
    if (rounds >= 0) config.rounds = rounds;
    if (instances > 0) config.instances = static_cast<std::uint32_t>(instances);
    if (seed >= 0) config.base_seed = static_cast<std::uint64_t>(seed);
    config.validate();

    const wdln::ExperimentResult result = wdln::run_experiment(config);
    wdln::emit_outputs(result, out_dir);

    const auto& f = result.summary.metrics.count("F") ? result.summary.metrics.at("F")
                                                      : wdln::MetricSeries{};
    double mean_f = 0.0;
    if (!f.mean.empty()) {
        for (double v : f.mean) mean_f += v;
        mean_f /= static_cast<double>(f.mean.size());
    }
    std::cout << "scheduler=" << result.summary.scheduler << " rounds=" << config.rounds
              << " instances=" << config.instances << " mean_F=" << mean_f << '\n';
    std::cout << "outputs written to " << out_dir << '\n';
    return 0;
}

int run_oracle(const std::string& config_path, const std::string& out_dir) {
    const wdln::OracleConfig config = wdln::load_oracle_config(config_path);
    const wdln::MdpModel model = wdln::build_mdp(config.spec);
    const wdln::ValueSolution solution =
        wdln::relative_value_iteration(model, config.vi_tol, config.max_iter);
    const std::vector<std::size_t> greedy = wdln::greedy_policy_table(model);
    const double greedy_avg = wdln::evaluate_policy(model, greedy);

    const double j_star_raw = solution.j_star * model.reward_scale + model.reward_min;
    const double greedy_raw = greedy_avg * model.reward_scale + model.reward_min;

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw wdln::IoError("cannot create output directory " + out_dir);

    nlohmann::ordered_json doc;
    doc["states"] = model.num_states;
    doc["actions"] = model.num_actions;
    doc["j_star_normalized"] = solution.j_star;
    doc["j_star_raw"] = j_star_raw;
    doc["greedy_normalized"] = greedy_avg;
    doc["greedy_raw"] = greedy_raw;
    doc["greedy_gap"] = solution.j_star - greedy_avg;
    doc["vi_iterations"] = solution.iterations;
    std::ofstream json_out(fs::path(out_dir) / "oracle.json");
    json_out << doc.dump(2) << '\n';

    std::ofstream table(fs::path(out_dir) / "policy.txt");
    table << "# state_index  optimal_action  greedy_action  scheduled_devices(optimal)\n";
    std::vector<std::uint32_t> bins, backlog;
    for (std::size_t s = 0; s < model.num_states; ++s) {
        model.decode_state(s, bins, backlog);
        table << s << "  " << solution.policy[s] << "  " << greedy[s] << "  [";
        for (std::size_t u = 0; u < model.num_devices; ++u) {
            table << (model.actions[solution.policy[s]][u] ? '1' : '0');
        }
        table << "]  bins=(";
        for (std::size_t u = 0; u < model.num_devices; ++u) {
            table << bins[u] << (u + 1 < model.num_devices ? "," : "");
        }
        table << ") n=(";
        for (std::size_t u = 0; u < model.num_devices; ++u) {
            table << backlog[u] << (u + 1 < model.num_devices ? "," : "");
        }
        table << ")\n";
    }

    std::cout << "states=" << model.num_states << " actions=" << model.num_actions << '\n';
    std::cout << "J*(normalized)=" << solution.j_star << " J*(raw F units)=" << j_star_raw
              << '\n';
    std::cout << "greedy average reward=" << greedy_avg
              << " gap=" << (solution.j_star - greedy_avg) << '\n';
    std::cout << "outputs written to " << out_dir << '\n';
    return 0;
}

int run_report(const std::string& in_dir, const std::string& out_dir) {
    namespace fs = std::filesystem;
    const std::string records_path = (fs::path(in_dir) / "records.csv").string();
    const wdln::RunSummary summary = wdln::reaggregate_records(records_path);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw wdln::IoError("cannot create output directory " + out_dir);

    nlohmann::ordered_json doc;
    doc["scheduler"] = summary.scheduler;
    doc["rounds"] = summary.rounds;
    doc["instances"] = summary.instances;
    doc["j_star_source"] = summary.j_star_source;
    nlohmann::ordered_json metrics;
    for (const auto& [name, series] : summary.metrics) {
        metrics[name] = {{"rounds", series.rounds},
                         {"mean", series.mean},
                         {"ci_lo", series.ci_lo},
                         {"ci_hi", series.ci_hi}};
    }
    doc["metrics"] = metrics;
    std::ofstream out(fs::path(out_dir) / "summary.json");
    out << doc.dump(2) << '\n';

    std::ofstream long_file(fs::path(out_dir) / "long.csv");
    long_file << "scheduler,round,metric,mean,ci_lo,ci_hi\n";
    char buf[40];
    for (const auto& [name, series] : summary.metrics) {
        for (std::size_t i = 0; i < series.rounds.size(); ++i) {
            long_file << summary.scheduler << ',' << series.rounds[i] << ',' << name << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", series.mean[i]);
            long_file << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", series.ci_lo[i]);
            long_file << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", series.ci_hi[i]);
            long_file << buf << '\n';
        }
    }
    std::cout << "re-aggregated " << records_path << " into " << out_dir << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Asynchronous FL transmission-scheduling simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, in_dir, scheduler;
    std::int64_t rounds = -1, instances = -1, seed = -1;

    CLI::App* simulate = app.add_subcommand("simulate", "run a scheduling experiment");
    simulate->add_option("--config", config_path, "experiment config JSON");
    simulate->add_option("--scheduler", scheduler,
                         "bench|rr|wmax|alsa-pi|balsa|balsa-po (overrides config)");
    simulate->add_option("--rounds", rounds, "number of rounds (overrides config)");
    simulate->add_option("--instances", instances, "simulation instances (overrides config)");
    simulate->add_option("--seed", seed, "base seed (overrides config)");
    simulate->add_option("--out", out_dir, "output directory")->required();

    CLI::App* oracle = app.add_subcommand("oracle", "solve a small instance exactly");
    oracle->add_option("--config", config_path, "small-instance config JSON")->required();
    oracle->add_option("--out", out_dir, "output directory")->required();

    CLI::App* report = app.add_subcommand("report", "re-aggregate emitted records");
    report->add_option("--in", in_dir, "directory containing records.csv")->required();
    report->add_option("--out", out_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            return run_simulate(config_path, scheduler, rounds, instances, seed, out_dir);
        }
        if (oracle->parsed()) return run_oracle(config_path, out_dir);
        if (report->parsed()) return run_report(in_dir, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
