#include "wdln/task.hpp"

#include "wdln/errors.hpp"

namespace wdln {

void SyntheticTaskParams::validate() const {
    if (num_classes < 2) throw InvalidConfig("task.num_classes must be >= 2");
    if (feature_dim < 1) throw InvalidConfig("task.feature_dim must be >= 1");
    if (feature_dim < num_classes)
        throw InvalidConfig("task.feature_dim must be >= task.num_classes for distinct means");
    if (noise_std <= 0.0) throw InvalidConfig("task.noise_std must be positive");
    if (mean_spacing <= 0.0) throw InvalidConfig("task.mean_spacing must be positive");
    if (shard_size < 1) throw InvalidConfig("task.shard_size must be >= 1");
}

std::vector<double> SyntheticTaskParams::class_mean(std::uint32_t label) const {
    std::vector<double> mean(feature_dim, 0.0);
    mean[label] = mean_spacing;
    return mean;
}

Sample generate_sample(const SyntheticTaskParams& task, RandomSource& rng) {
    Sample s;
    s.label = static_cast<std::uint32_t>(rng.integer(task.num_classes));
    s.features.resize(task.feature_dim);
    for (std::uint32_t j = 0; j < task.feature_dim; ++j) {
        s.features[j] = rng.normal(0.0, task.noise_std);
    }
    s.features[s.label] += task.mean_spacing;
    return s;
}

Shard generate_shard(const SyntheticTaskParams& task, RandomSource& rng) {
    Shard shard;
    shard.samples.reserve(task.shard_size);
    for (std::uint32_t i = 0; i < task.shard_size; ++i) {
        shard.samples.push_back(generate_sample(task, rng));
    }
    return shard;
}

std::vector<Sample> generate_dataset(const SyntheticTaskParams& task, std::size_t count,
                                     RandomSource& rng) {
    std::vector<Sample> data;
    data.reserve(count);
    for (std::size_t i = 0; i < count; ++i) data.push_back(generate_sample(task, rng));
    return data;
}

} // namespace wdln
