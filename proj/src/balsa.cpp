#include "wdln/balsa.hpp"

#include <algorithm>
#include <cmath>

#include "wdln/errors.hpp"

namespace wdln {

void posterior_update(PosteriorState& post, std::size_t device, std::uint64_t m_total,
                      std::uint64_t rounds_covered) {
    post.sum_m[device] += m_total;
    post.obs_rounds[device] += rounds_covered;
}

double posterior_mean(const PosteriorState& post, std::size_t device, double epsilon_rate) {
    const double shape = static_cast<double>(post.sum_m[device]) + 0.5;
    const double rate = post.obs_rounds[device] > 0
                            ? static_cast<double>(post.obs_rounds[device])
                            : epsilon_rate;
    return shape / rate;
}

std::vector<double> sample_theta(const PosteriorState& post, double epsilon_rate,
                                 RandomSource& rng) {
    std::vector<double> theta(post.size());
    for (std::size_t u = 0; u < post.size(); ++u) {
        const double shape = static_cast<double>(post.sum_m[u]) + 0.5;
        const double rate = post.obs_rounds[u] > 0 ? static_cast<double>(post.obs_rounds[u])
                                                   : epsilon_rate;
        theta[u] = rng.gamma(shape, rate);
    }
    return theta;
}

StateDiscretizer StateDiscretizer::log_spaced(std::size_t num_bins, double lo, double hi,
                                              std::uint32_t n_truncation) {
    if (num_bins < 1 || lo <= 0.0 || hi <= lo)
        throw InvalidConfig("invalid discretizer parameters");
    StateDiscretizer d;
    d.n_truncation = n_truncation;
    d.gain_bin_edges.resize(num_bins - 1);
    const double step = (std::log10(hi) - std::log10(lo)) / static_cast<double>(num_bins);
    for (std::size_t i = 0; i + 1 < num_bins; ++i) {
        d.gain_bin_edges[i] = std::pow(10.0, std::log10(lo) + step * static_cast<double>(i + 1));
    }
    return d;
}

std::uint32_t StateDiscretizer::gain_bin(double gain_linear) const {
    const auto it =
        std::upper_bound(gain_bin_edges.begin(), gain_bin_edges.end(), gain_linear);
    return static_cast<std::uint32_t>(it - gain_bin_edges.begin());
}

bool stage_should_end(std::int64_t t, std::int64_t t_k, std::int64_t t_prev_len,
                      bool count_trigger) {
    return t > t_k + t_prev_len || count_trigger;
}

bool count_doubling_trigger(std::uint64_t count_after_increment, std::uint64_t snapshot) {
    return count_after_increment > 2 * snapshot;
}

BalsaOptions default_balsa_options(std::size_t num_devices, bool partially_observable) {
    BalsaOptions options;
    options.partially_observable = partially_observable;
    options.counting = num_devices <= 4 ? CountingMode::Joint : CountingMode::Factored;
    return options;
}

BalsaScheduler::BalsaScheduler(std::size_t num_devices, BalsaOptions options, std::uint64_t seed)
    : num_devices_(num_devices),
      options_(std::move(options)),
      rng_(seed),
      posterior_(num_devices),
      last_delivery_round_(num_devices, 0) {
    if (options_.prior_shape > 0.0 && options_.prior_rounds > 0.0) {
        for (std::size_t u = 0; u < num_devices_; ++u) {
            // Informative Gamma(shape, rate) prior folded in as pseudo-counts.
            posterior_.sum_m[u] = static_cast<std::uint64_t>(options_.prior_shape);
            posterior_.obs_rounds[u] = static_cast<std::uint64_t>(options_.prior_rounds);
        }
    }
}

void BalsaScheduler::freeze_theta(std::vector<double> theta) {
    stage_.sampled_theta = std::move(theta);
    theta_frozen_ = true;
}

void BalsaScheduler::start_stage(std::int64_t t) {
    // T_{k-1} <- t - t_k; with t_k initialized to 0 this yields T_0 = 1 at t = 1.
    stage_.t_prev_len = t - stage_.t_k;
    stage_.t_k = t;
    stage_.k += 1;
    count_trigger_ = false;
    if (!theta_frozen_) {
        stage_.sampled_theta = sample_theta(posterior_, options_.epsilon_rate, rng_);
    }
}

std::vector<std::uint32_t> BalsaScheduler::estimated_backlog(std::int64_t t) const {
    std::vector<std::uint32_t> est(num_devices_);
    for (std::size_t u = 0; u < num_devices_; ++u) {
        const std::int64_t t_n = t - last_delivery_round_[u]; // rounds since last delivery
        const double approx =
            static_cast<double>(t_n - 1) * stage_.sampled_theta[u];
        const double clamped =
            std::min(approx, static_cast<double>(options_.discretizer.n_truncation));
        est[u] = static_cast<std::uint32_t>(std::max(0.0, std::floor(clamped)));
    }
    return est;
}

ScheduleDecision BalsaScheduler::decide(const ObservedState& state, std::uint32_t w) {
    if (!options_.partially_observable && !state.backlog) {
        throw MissingStateInfo("balsa requires the reported backlog n");
    }
    const std::int64_t t = state.round;
    if (stage_.k == 0 || stage_should_end(t, stage_.t_k, stage_.t_prev_len, count_trigger_)) {
        start_stage(t);
    }

    decision_backlog_ =
        options_.partially_observable ? estimated_backlog(t) : *state.backlog;
    ScheduleDecision decision =
        greedy_policy(state.success_probs, decision_backlog_, stage_.sampled_theta, w);

    decision_action_ = decision.scheduled;
    decision_gains_ = state.gains;
    have_pending_decision_ = true;
    return decision;
}

void BalsaScheduler::record_visit() {
    if (options_.counting == CountingMode::None) return;

    const auto& disc = options_.discretizer;
    auto clamp_n = [&](std::uint32_t n) { return std::min(n, disc.n_truncation); };

    auto bump = [&](VisitCount& entry) {
        if (entry.stage_stamp != stage_.k) {
            entry.stage_start = entry.count;
            entry.stage_stamp = stage_.k;
        }
        entry.count += 1;
        if (count_doubling_trigger(entry.count, entry.stage_start)) count_trigger_ = true;
    };

    if (options_.counting == CountingMode::Joint) {
        Key key;
        key.reserve(3 * num_devices_);
        for (std::size_t u = 0; u < num_devices_; ++u) {
            key.push_back(disc.gain_bin(decision_gains_[u]));
            key.push_back(clamp_n(decision_backlog_[u]));
            key.push_back(decision_action_[u]);
        }
        bump(counts_[key]);
        return;
    }

    if (factored_counts_.empty()) factored_counts_.resize(num_devices_);
    for (std::size_t u = 0; u < num_devices_; ++u) {
        // (n, bin, a) packed into one 32-bit key.
        const std::uint32_t key = (clamp_n(decision_backlog_[u]) << 9) |
                                  (disc.gain_bin(decision_gains_[u]) << 1) |
                                  decision_action_[u];
        bump(factored_counts_[u][key]);
    }
}

void BalsaScheduler::observe(const RoundOutcome& outcome) {
    if (!have_pending_decision_) return;
    record_visit();
    have_pending_decision_ = false;

    if (options_.partially_observable) {
        for (std::size_t u = 0; u < num_devices_; ++u) {
            if (!outcome.delivered[u]) continue;
            const std::int64_t t_n = outcome.round - last_delivery_round_[u];
            // The report n+m sums the arrivals of the t_n rounds since the
            // last delivery.
            posterior_update(posterior_, u, outcome.reports[u],
                             static_cast<std::uint64_t>(t_n));
            last_delivery_round_[u] = outcome.round;
        }
        return;
    }

    if (!outcome.backlog || !outcome.backlog_next) {
        throw MissingStateInfo("balsa requires backlog observations each round");
    }
    for (std::size_t u = 0; u < num_devices_; ++u) {
        std::uint64_t m = 0;
        if (outcome.delivered[u]) {
            m = outcome.reports[u] - (*outcome.backlog)[u];
            last_delivery_round_[u] = outcome.round;
        } else {
            // Arrivals recovered from the backlog difference; at the n_max cap
            // this is the physically observable (clamped) quantity.
            m = (*outcome.backlog_next)[u] - (*outcome.backlog)[u];
        }
        posterior_update(posterior_, u, m, 1);
    }
}

} // namespace wdln
