#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "wdln/rng.hpp"

namespace wdln {

struct Sample {
    std::vector<double> features;
    std::uint32_t label = 0;
};

// A shard is the unit of data arrival: a fixed-size bundle of labeled samples.
struct Shard {
    std::vector<Sample> samples;
};

// Gaussian-mixture classification task. Class c has mean `spacing` in
// coordinate c (zero elsewhere) with isotropic noise; classes are drawn
// uniformly. feature_dim must be >= num_classes for the default mean layout.
struct SyntheticTaskParams {
    std::uint32_t num_classes = 4;
    std::uint32_t feature_dim = 8;
    double mean_spacing = 1.0;
    double noise_std = 1.0;
    std::uint32_t shard_size = 10;
    std::uint32_t test_set_size = 2000;

    void validate() const;
    std::vector<double> class_mean(std::uint32_t label) const;
};

Sample generate_sample(const SyntheticTaskParams& task, RandomSource& rng);
Shard generate_shard(const SyntheticTaskParams& task, RandomSource& rng);
std::vector<Sample> generate_dataset(const SyntheticTaskParams& task, std::size_t count,
                                     RandomSource& rng);

} // namespace wdln
