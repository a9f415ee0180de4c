#include "wdln/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wdln/errors.hpp"

namespace wdln {

namespace {

using nlohmann::json;

json require_object(const json& root, const std::string& key) {
    if (!root.contains(key)) throw InvalidConfig("missing section '" + key + "'");
    if (!root.at(key).is_object()) throw InvalidConfig("section '" + key + "' must be an object");
    return root.at(key);
}

template <typename T>
T get_or(const json& section, const std::string& section_name, const std::string& key,
         T fallback) {
    if (!section.contains(key)) return fallback;
    try {
        return section.at(key).get<T>();
    } catch (const json::exception&) {
        throw InvalidConfig("key '" + section_name + "." + key + "' has the wrong type");
    }
}

BerModel parse_ber_model(const std::string& name, const std::string& field) {
    if (name == "bpsk_uncoded") return BerModel::BpskUncoded;
    if (name == "logistic") return BerModel::Logistic;
    throw InvalidConfig("key '" + field + "' must be 'bpsk_uncoded' or 'logistic'");
}

ChannelParams parse_channel(const json& root) {
    ChannelParams channel;
    if (!root.contains("channel")) return channel;
    const json section = require_object(root, "channel");
    channel.tx_power_dbm = get_or(section, "channel", "tx_power_dbm", channel.tx_power_dbm);
    channel.noise_power_dbm =
        get_or(section, "channel", "noise_power_dbm", channel.noise_power_dbm);
    channel.packet_bits = get_or(section, "channel", "packet_bits", channel.packet_bits);
    channel.ber_model = parse_ber_model(
        get_or<std::string>(section, "channel", "ber_model", "bpsk_uncoded"),
        "channel.ber_model");
    channel.logistic_kappa =
        get_or(section, "channel", "logistic_kappa", channel.logistic_kappa);
    channel.logistic_snr50_db =
        get_or(section, "channel", "logistic_snr50_db", channel.logistic_snr50_db);
    if (channel.packet_bits < 1) throw InvalidConfig("key 'channel.packet_bits' must be >= 1");
    return channel;
}

std::vector<DeviceSpec> parse_devices(const json& root, const ChannelParams& base,
                                      std::uint32_t m_max) {
    const json section = require_object(root, "devices");
    if (!section.contains("list") || !section.at("list").is_array() ||
        section.at("list").empty()) {
        throw InvalidConfig("key 'devices.list' must be a non-empty array");
    }
    std::vector<DeviceSpec> devices;
    std::size_t index = 0;
    for (const json& entry : section.at("list")) {
        const std::string field = "devices.list[" + std::to_string(index) + "]";
        if (!entry.is_object()) throw InvalidConfig(field + " must be an object");
        DeviceSpec device;
        device.channel = base;
        if (!entry.contains("distance_km"))
            throw InvalidConfig(field + ".distance_km is required");
        device.channel.distance_km = entry.at("distance_km").get<double>();
        if (device.channel.distance_km <= 0.0)
            throw InvalidConfig(field + ".distance_km must be positive");
        if (!entry.contains("rate")) throw InvalidConfig(field + ".rate is required");
        device.arrivals.rate_shards_per_round = entry.at("rate").get<double>();
        if (device.arrivals.rate_shards_per_round <= 0.0)
            throw InvalidConfig(field + ".rate must be positive");
        device.arrivals.m_max = m_max;
        devices.push_back(device);
        ++index;
    }
    return devices;
}

} // namespace

void ExperimentConfig::validate() const {
    if (devices.empty()) throw InvalidConfig("devices.list must not be empty");
    if (w_slots < 1 || w_slots > devices.size())
        throw InvalidConfig("experiment.w must satisfy 1 <= W <= number of devices");
    if (rounds < 0) throw InvalidConfig("experiment.rounds must be >= 0");
    if (instances < 1) throw InvalidConfig("experiment.instances must be >= 1");
    if (snapshot_every < 1) throw InvalidConfig("experiment.snapshot_every must be >= 1");
    if (scheduler.gamma < 0.0 || scheduler.gamma >= 1.0)
        throw InvalidConfig("scheduler.gamma must lie in [0, 1)");
    if (scheduler.name != "bench" && scheduler.name != "rr" && scheduler.name != "wmax" &&
        scheduler.name != "alsa-pi" && scheduler.name != "balsa" &&
        scheduler.name != "balsa-po") {
        throw InvalidConfig("scheduler.name must be one of "
                            "bench|rr|wmax|alsa-pi|balsa|balsa-po");
    }
    if (scheduler.counting_mode != "auto" && scheduler.counting_mode != "joint" &&
        scheduler.counting_mode != "factored" && scheduler.counting_mode != "none") {
        throw InvalidConfig("scheduler.counting_mode must be auto|joint|factored|none");
    }
    if (scheduler.gain_bins < 1) throw InvalidConfig("scheduler.gain_bins must be >= 1");
    if (j_star_mode != "none" && j_star_mode != "alsa-pi" && j_star_mode != "value")
        throw InvalidConfig("experiment.j_star must be 'none', 'alsa-pi', or a number");
    fl.validate();
    if (learner_enabled) task.validate();
    for (const DeviceSpec& device : devices) device.arrivals.validate();
}

WorldOptions ExperimentConfig::world_options() const {
    WorldOptions options;
    options.devices = devices;
    options.fl = fl;
    options.task = task;
    options.w_slots = w_slots;
    options.gamma = scheduler.gamma;
    options.learner_enabled = learner_enabled;
    if (binned_env_bins > 0) options.binned_fading = make_binned_fading(binned_env_bins);
    return options;
}

std::vector<double> ExperimentConfig::true_rates() const {
    std::vector<double> rates;
    rates.reserve(devices.size());
    for (const DeviceSpec& device : devices) {
        rates.push_back(device.arrivals.rate_shards_per_round);
    }
    return rates;
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig config;
    config.channel_base = parse_channel(root);

    const json devices_section = require_object(root, "devices");
    const std::uint32_t m_max = get_or<std::uint32_t>(devices_section, "devices", "m_max", 64);
    config.task.shard_size =
        get_or<std::uint32_t>(devices_section, "devices", "shard_size", 10);
    config.devices = parse_devices(root, config.channel_base, m_max);

    if (root.contains("channel")) {
        const json section = require_object(root, "channel");
        config.binned_env_bins =
            get_or<std::uint32_t>(section, "channel", "binned_env_bins", 0);
    }

    if (root.contains("fl")) {
        const json section = require_object(root, "fl");
        config.fl.lambda = get_or(section, "fl", "lambda", config.fl.lambda);
        config.fl.beta = get_or(section, "fl", "beta", config.fl.beta);
        config.fl.eta_d = get_or(section, "fl", "eta_d", config.fl.eta_d);
        config.fl.eta_sgd = get_or(section, "fl", "eta_sgd", config.fl.eta_sgd);
        config.fl.local_epochs = get_or(section, "fl", "local_epochs", config.fl.local_epochs);
        config.fl.local_batch = get_or(section, "fl", "local_batch", config.fl.local_batch);
        config.fl.n_max = get_or(section, "fl", "n_max", config.fl.n_max);
        config.learner_enabled = get_or(section, "fl", "learner", true);
    }

    if (root.contains("task")) {
        const json section = require_object(root, "task");
        config.task.num_classes = get_or(section, "task", "num_classes", config.task.num_classes);
        config.task.feature_dim = get_or(section, "task", "feature_dim", config.task.feature_dim);
        config.task.mean_spacing =
            get_or(section, "task", "mean_spacing", config.task.mean_spacing);
        config.task.noise_std = get_or(section, "task", "noise_std", config.task.noise_std);
        config.task.test_set_size =
            get_or(section, "task", "test_set_size", config.task.test_set_size);
    }

    if (root.contains("scheduler")) {
        const json section = require_object(root, "scheduler");
        config.scheduler.name = get_or<std::string>(section, "scheduler", "name", "alsa-pi");
        config.scheduler.gamma = get_or(section, "scheduler", "gamma", 0.01);
        config.scheduler.gain_bins = get_or<std::uint32_t>(section, "scheduler", "gain_bins", 8);
        config.scheduler.counting_mode =
            get_or<std::string>(section, "scheduler", "counting_mode", "auto");
        config.scheduler.epsilon_rate = get_or(section, "scheduler", "epsilon_rate", 1e-6);
        config.scheduler.prior_shape = get_or(section, "scheduler", "prior_shape", 0.0);
        config.scheduler.prior_rounds = get_or(section, "scheduler", "prior_rounds", 0.0);
    }

    if (root.contains("experiment")) {
        const json section = require_object(root, "experiment");
        config.rounds = get_or<std::int64_t>(section, "experiment", "rounds", config.rounds);
        config.instances =
            get_or<std::uint32_t>(section, "experiment", "instances", config.instances);
        config.base_seed =
            get_or<std::uint64_t>(section, "experiment", "base_seed", config.base_seed);
        config.w_slots = get_or<std::uint32_t>(section, "experiment", "w", config.w_slots);
        config.snapshot_every =
            get_or<std::uint32_t>(section, "experiment", "snapshot_every", config.snapshot_every);
        config.threads = get_or<std::uint32_t>(section, "experiment", "threads", 0);
        if (section.contains("targets")) {
            config.targets = section.at("targets").get<std::vector<double>>();
        }
        if (section.contains("j_star")) {
            const json& j = section.at("j_star");
            if (j.is_number()) {
                config.j_star_mode = "value";
                config.j_star_value = j.get<double>();
            } else if (j.is_string()) {
                config.j_star_mode = j.get<std::string>();
            } else {
                throw InvalidConfig("experiment.j_star must be a number or string");
            }
        }
        config.out_dir = get_or<std::string>(section, "experiment", "out_dir", "");
    }

    config.validate();
    return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_experiment_config(buffer.str());
}

ExperimentConfig default_experiment_config() {
    ExperimentConfig config;
    struct Row {
        int count;
        double rate;
        double distance_m;
    };
    // Device population: rates in shards/round and AP distances.
    const Row rows[] = {
        {3, 1.0, 100.0}, {3, 1.0, 200.0}, {3, 1.0, 300.0}, {3, 1.0, 400.0}, {3, 1.0, 500.0},
        {1, 3.0, 300.0}, {1, 3.0, 350.0}, {1, 3.0, 400.0}, {1, 3.0, 450.0},
        {1, 5.0, 300.0}, {1, 5.0, 350.0}, {1, 5.0, 400.0}, {1, 5.0, 450.0},
        {1, 10.0, 400.0}, {1, 10.0, 450.0},
    };
    for (const Row& row : rows) {
        for (int i = 0; i < row.count; ++i) {
            DeviceSpec device;
            device.channel = config.channel_base;
            device.channel.distance_km = row.distance_m / 1000.0;
            device.arrivals.rate_shards_per_round = row.rate;
            device.arrivals.m_max = 64;
            config.devices.push_back(device);
        }
    }
    return config;
}

OracleConfig parse_oracle_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("config is not valid JSON: ") + e.what());
    }
    OracleConfig config;
    const ChannelParams base = parse_channel(root);
    const json oracle = require_object(root, "oracle");
    config.spec.gain_bins = get_or<std::uint32_t>(oracle, "oracle", "gain_bins", 2);
    config.spec.n_max = get_or<std::uint32_t>(oracle, "oracle", "n_max", 4);
    config.spec.m_max = get_or<std::uint32_t>(oracle, "oracle", "m_max", 2);
    config.spec.w = get_or<std::uint32_t>(oracle, "oracle", "w", 1);
    config.spec.gamma = get_or(oracle, "oracle", "gamma", 0.01);
    config.vi_tol = get_or(oracle, "oracle", "vi_tol", 1e-9);
    config.max_iter = get_or<std::size_t>(oracle, "oracle", "max_iter", 1000000);
    config.spec.devices = parse_devices(root, base, config.spec.m_max);
    return config;
}

OracleConfig load_oracle_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_oracle_config(buffer.str());
}

std::unique_ptr<Scheduler> make_scheduler(const ExperimentConfig& config,
                                          std::uint64_t instance) {
    const std::string& name = config.scheduler.name;
    if (name == "bench") return std::make_unique<BenchScheduler>();
    if (name == "rr") return std::make_unique<RoundRobinScheduler>();
    if (name == "wmax") return std::make_unique<WMaxScheduler>();
    if (name == "alsa-pi") return std::make_unique<AlsaPiScheduler>(config.true_rates());
    if (name == "balsa" || name == "balsa-po") {
        BalsaOptions options =
            default_balsa_options(config.devices.size(), name == "balsa-po");
        if (config.scheduler.counting_mode == "joint") options.counting = CountingMode::Joint;
        if (config.scheduler.counting_mode == "factored")
            options.counting = CountingMode::Factored;
        if (config.scheduler.counting_mode == "none") options.counting = CountingMode::None;
        options.epsilon_rate = config.scheduler.epsilon_rate;
        options.prior_shape = config.scheduler.prior_shape;
        options.prior_rounds = config.scheduler.prior_rounds;
        options.discretizer =
            StateDiscretizer::log_spaced(config.scheduler.gain_bins, 1e-14, 1e-6,
                                         config.fl.n_max);
        const std::uint64_t seed =
            derive_seed(config.base_seed, instance, 0, StreamPurpose::SchedulerInternal);
        return std::make_unique<BalsaScheduler>(config.devices.size(), options, seed);
    }
    throw InvalidConfig("unknown scheduler name: " + name);
}

std::string experiment_config_to_json(const ExperimentConfig& config) {
    nlohmann::ordered_json root;
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const DeviceSpec& device : config.devices) {
        list.push_back({{"distance_km", device.channel.distance_km},
                        {"rate", device.arrivals.rate_shards_per_round}});
    }
    root["devices"] = {{"shard_size", config.task.shard_size},
                       {"m_max", config.devices.front().arrivals.m_max},
                       {"list", list}};
    root["channel"] = {
        {"tx_power_dbm", config.channel_base.tx_power_dbm},
        {"noise_power_dbm", config.channel_base.noise_power_dbm},
        {"packet_bits", config.channel_base.packet_bits},
        {"ber_model",
         config.channel_base.ber_model == BerModel::BpskUncoded ? "bpsk_uncoded" : "logistic"},
    };
    root["fl"] = {{"lambda", config.fl.lambda},
                  {"beta", config.fl.beta},
                  {"eta_d", config.fl.eta_d},
                  {"eta_sgd", config.fl.eta_sgd},
                  {"local_epochs", config.fl.local_epochs},
                  {"local_batch", config.fl.local_batch},
                  {"n_max", config.fl.n_max},
                  {"learner", config.learner_enabled}};
    root["task"] = {{"num_classes", config.task.num_classes},
                    {"feature_dim", config.task.feature_dim},
                    {"mean_spacing", config.task.mean_spacing},
                    {"noise_std", config.task.noise_std},
                    {"test_set_size", config.task.test_set_size}};
    root["scheduler"] = {{"name", config.scheduler.name},
                         {"gamma", config.scheduler.gamma},
                         {"gain_bins", config.scheduler.gain_bins},
                         {"counting_mode", config.scheduler.counting_mode},
                         {"epsilon_rate", config.scheduler.epsilon_rate}};
    root["experiment"] = {{"rounds", config.rounds},
                          {"instances", config.instances},
                          {"base_seed", config.base_seed},
                          {"w", config.w_slots},
                          {"snapshot_every", config.snapshot_every},
                          {"targets", config.targets},
                          {"threads", config.threads}};
    return root.dump(2);
}

} // namespace wdln
