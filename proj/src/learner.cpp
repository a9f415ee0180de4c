#include "wdln/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wdln/errors.hpp"
#include "wdln/kernels.hpp"

namespace wdln {

namespace {

void pad_features(const Sample& s, std::vector<double>& padded) {
    padded.assign(s.features.begin(), s.features.end());
    padded.push_back(1.0);
}

// Fills `probs` with softmax(logits) and returns logsumexp(logits).
double softmax(std::span<const double> logits, std::vector<double>& probs) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    probs.resize(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c) {
        probs[c] = std::exp(logits[c] - m);
        total += probs[c];
    }
    for (double& p : probs) p /= total;
    return m + std::log(total);
}

struct Scratch {
    std::vector<double> padded;
    std::vector<double> logits;
    std::vector<double> probs;
};

void compute_logits(const ModelParams& params, std::span<const double> padded,
                    std::vector<double>& logits) {
    logits.resize(params.num_classes);
    for (std::uint32_t c = 0; c < params.num_classes; ++c) {
        logits[c] = kernels::dot(params.row(c), padded);
    }
}

// Adds the cross-entropy gradient of one sample, scaled by `weight`.
void accumulate_xent_gradient(const ModelParams& params, const Sample& sample, double weight,
                              std::vector<double>& grad, Scratch& scratch) {
    pad_features(sample, scratch.padded);
    compute_logits(params, scratch.padded, scratch.logits);
    softmax(scratch.logits, scratch.probs);
    const std::size_t stride = params.row_stride();
    for (std::uint32_t c = 0; c < params.num_classes; ++c) {
        const double coeff = weight * (scratch.probs[c] - (c == sample.label ? 1.0 : 0.0));
        kernels::axpy(coeff, scratch.padded,
                      std::span<double>(grad).subspan(c * stride, stride));
    }
}

} // namespace

ModelParams ModelParams::zeros(std::uint32_t num_classes, std::uint32_t feature_dim) {
    ModelParams p;
    p.num_classes = num_classes;
    p.feature_dim = feature_dim;
    p.weights.assign(static_cast<std::size_t>(num_classes) * (feature_dim + 1), 0.0);
    return p;
}

bool ModelParams::all_finite() const {
    return std::all_of(weights.begin(), weights.end(),
                       [](double w) { return std::isfinite(w); });
}

double regularized_loss(const ModelParams& params, const ModelParams& anchor,
                        std::span<const Sample> samples, double lambda) {
    Scratch scratch;
    double total = 0.0;
    for (const Sample& s : samples) {
        pad_features(s, scratch.padded);
        compute_logits(params, scratch.padded, scratch.logits);
        const double lse = softmax(scratch.logits, scratch.probs);
        total += lse - scratch.logits[s.label];
    }
    double loss = total / static_cast<double>(samples.size());
    if (lambda != 0.0) {
        double sq = 0.0;
        for (std::size_t i = 0; i < params.weights.size(); ++i) {
            const double d = params.weights[i] - anchor.weights[i];
            sq += d * d;
        }
        loss += 0.5 * lambda * sq;
    }
    return loss;
}

std::vector<double> regularized_gradient(const ModelParams& params, const ModelParams& anchor,
                                         std::span<const Sample> samples, double lambda) {
    std::vector<double> grad(params.weights.size(), 0.0);
    Scratch scratch;
    const double weight = 1.0 / static_cast<double>(samples.size());
    for (const Sample& s : samples) {
        accumulate_xent_gradient(params, s, weight, grad, scratch);
    }
    if (lambda != 0.0) {
        for (std::size_t i = 0; i < grad.size(); ++i) {
            grad[i] += lambda * (params.weights[i] - anchor.weights[i]);
        }
    }
    return grad;
}

LocalSgdResult local_sgd(const ModelParams& start, const ModelParams& anchor,
                         std::span<const Shard> shards, const LocalSgdOptions& options,
                         RandomSource& rng) {
    LocalSgdResult result;
    result.params = start;

    std::vector<const Sample*> samples;
    for (const Shard& shard : shards) {
        for (const Sample& s : shard.samples) samples.push_back(&s);
    }
    result.displacement.assign(start.weights.size(), 0.0);
    if (samples.empty() || options.epochs == 0) return result;

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grad(start.weights.size());
    Scratch scratch;
    const std::size_t batch = std::max<std::size_t>(1, options.batch);

    for (std::uint32_t epoch = 0; epoch < options.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t begin = 0; begin < order.size(); begin += batch) {
            const std::size_t end = std::min(order.size(), begin + batch);
            std::fill(grad.begin(), grad.end(), 0.0);
            const double weight = 1.0 / static_cast<double>(end - begin);
            for (std::size_t i = begin; i < end; ++i) {
                accumulate_xent_gradient(result.params, *samples[order[i]], weight, grad,
                                         scratch);
            }
            if (options.lambda != 0.0) {
                for (std::size_t i = 0; i < grad.size(); ++i) {
                    grad[i] += options.lambda * (result.params.weights[i] - anchor.weights[i]);
                }
            }
            kernels::axpy(-options.eta_sgd, grad, result.params.weights);
            ++result.steps;
        }
    }

    if (!result.params.all_finite()) {
        throw NonFiniteGradient("local SGD produced non-finite parameters");
    }
    for (std::size_t i = 0; i < start.weights.size(); ++i) {
        result.displacement[i] = start.weights[i] - result.params.weights[i];
    }
    return result;
}

EvalResult evaluate(const ModelParams& params, std::span<const Sample> dataset) {
    Scratch scratch;
    double total_loss = 0.0;
    std::size_t correct = 0;
    for (const Sample& s : dataset) {
        pad_features(s, scratch.padded);
        compute_logits(params, scratch.padded, scratch.logits);
        const double lse = softmax(scratch.logits, scratch.probs);
        total_loss += lse - scratch.logits[s.label];
        const std::size_t pred =
            std::distance(scratch.logits.begin(),
                          std::max_element(scratch.logits.begin(), scratch.logits.end()));
        if (pred == s.label) ++correct;
    }
    EvalResult out;
    out.loss = total_loss / static_cast<double>(dataset.size());
    out.accuracy = static_cast<double>(correct) / static_cast<double>(dataset.size());
    return out;
}

} // namespace wdln
