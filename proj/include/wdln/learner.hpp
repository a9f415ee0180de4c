#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wdln/rng.hpp"
#include "wdln/task.hpp"

namespace wdln {

// Multinomial logistic regression weights, row-major num_classes x (feature_dim+1)
// with the bias in the last column.
struct ModelParams {
    std::uint32_t num_classes = 0;
    std::uint32_t feature_dim = 0;
    std::vector<double> weights;

    static ModelParams zeros(std::uint32_t num_classes, std::uint32_t feature_dim);
    std::size_t row_stride() const { return feature_dim + 1; }
    std::span<double> row(std::uint32_t c) {
        return std::span<double>(weights).subspan(c * row_stride(), row_stride());
    }
    std::span<const double> row(std::uint32_t c) const {
        return std::span<const double>(weights).subspan(c * row_stride(), row_stride());
    }
    bool all_finite() const;
};

struct LocalSgdOptions {
    double lambda = 0.01;
    double eta_sgd = 0.05;
    std::uint32_t epochs = 5;
    std::uint32_t batch = 10;
};

struct LocalSgdResult {
    ModelParams params;
    std::vector<double> displacement; // w_start - w_end, flat
    std::size_t steps = 0;            // minibatch steps taken
};

// Mean cross-entropy over `samples` plus (lambda/2)*||w - anchor||^2.
double regularized_loss(const ModelParams& params, const ModelParams& anchor,
                        std::span<const Sample> samples, double lambda);

// Analytic gradient of regularized_loss, flat layout matching ModelParams.
std::vector<double> regularized_gradient(const ModelParams& params, const ModelParams& anchor,
                                         std::span<const Sample> samples, double lambda);

// Minibatch SGD on the regularized loss, `epochs` shuffled passes.
LocalSgdResult local_sgd(const ModelParams& start, const ModelParams& anchor,
                         std::span<const Shard> shards, const LocalSgdOptions& options,
                         RandomSource& rng);

struct EvalResult {
    double loss = 0.0;     // mean cross-entropy, no regularizer
    double accuracy = 0.0; // top-1, ties resolved to the lowest class index
};

EvalResult evaluate(const ModelParams& params, std::span<const Sample> dataset);

} // namespace wdln
