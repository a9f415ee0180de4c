#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wdln/balsa.hpp"
#include "wdln/dp_oracle.hpp"
#include "wdln/fl_engine.hpp"

namespace wdln {

struct SchedulerConfig {
    std::string name = "alsa-pi";
    double gamma = 0.01;
    std::uint32_t gain_bins = 8;
    std::string counting_mode = "auto"; // auto | joint | factored | none
    double epsilon_rate = 1e-6;
    double prior_shape = 0.0;  // 0 = Jeffreys
    double prior_rounds = 0.0;
};

struct ExperimentConfig {
    std::vector<DeviceSpec> devices;
    ChannelParams channel_base;
    std::uint32_t binned_env_bins = 0; // >0 draws gains from fading bins
    FlHyperParams fl;
    bool learner_enabled = true;
    SyntheticTaskParams task;
    SchedulerConfig scheduler;
    std::int64_t rounds = 2000;
    std::uint32_t instances = 20;
    std::uint64_t base_seed = 1;
    std::uint32_t w_slots = 5;
    std::uint32_t snapshot_every = 5;
    std::vector<double> targets = {0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8};
    std::string j_star_mode = "none"; // none | alsa-pi | value
    double j_star_value = 0.0;
    std::uint32_t threads = 0; // 0 = hardware concurrency
    std::string out_dir;

    void validate() const;
    WorldOptions world_options() const;
    std::vector<double> true_rates() const;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

// The 25-device experiment setup used throughout: per-device rates and
// distances, W = 5, gamma = 0.01, eta_d = 0.01, beta = 0.001.
ExperimentConfig default_experiment_config();

struct OracleConfig {
    SmallInstanceSpec spec;
    double vi_tol = 1e-9;
    std::size_t max_iter = 1000000;
};

OracleConfig parse_oracle_config(const std::string& json_text);
OracleConfig load_oracle_config(const std::string& path);

// Instantiates the named scheduler for one simulation instance.
std::unique_ptr<Scheduler> make_scheduler(const ExperimentConfig& config,
                                          std::uint64_t instance);

std::string experiment_config_to_json(const ExperimentConfig& config);

} // namespace wdln
