#include "wdln/fl_engine.hpp"

#include <algorithm>
#include <cmath>

#include "wdln/errors.hpp"
#include "wdln/kernels.hpp"

namespace wdln {

void FlHyperParams::validate() const {
    if (lambda < 0.0) throw InvalidConfig("fl.lambda must be >= 0");
    if (beta < 0.0 || beta >= 1.0) throw InvalidConfig("fl.beta must be in [0, 1)");
    if (eta_d <= 0.0) throw InvalidConfig("fl.eta_d must be positive");
    if (eta_sgd <= 0.0) throw InvalidConfig("fl.eta_sgd must be positive");
    if (local_batch < 1) throw InvalidConfig("fl.local_batch must be >= 1");
    if (n_max < 1) throw InvalidConfig("fl.n_max must be >= 1");
}

double dynamic_learning_rate(double eta_d, std::int64_t delayed_rounds) {
    return eta_d * std::max(1.0, std::log(static_cast<double>(delayed_rounds)));
}

void aggregate_local_gradient(std::vector<double>& psi, std::span<const double> grad,
                              double beta) {
    kernels::scale(beta, psi);
    kernels::axpy(1.0, grad, psi);
}

LocalUpdate local_train(DeviceFlState& device, const CentralState& central,
                        std::span<const Shard> shards, const FlHyperParams& fl,
                        RandomSource& sgd_rng) {
    if (device.psi.empty()) device.psi.assign(central.w.weights.size(), 0.0);

    const std::uint32_t m = static_cast<std::uint32_t>(shards.size());
    std::vector<double> grad(central.w.weights.size(), 0.0);
    if (!shards.empty()) {
        LocalSgdOptions sgd_options{fl.lambda, fl.eta_sgd, fl.local_epochs, fl.local_batch};
        LocalSgdResult trained = local_sgd(central.w, central.w, shards, sgd_options, sgd_rng);
        if (trained.steps > 0) {
            // Accumulated SGD displacement over the local epochs divided by the
            // total step size, so delta keeps the units of one gradient step.
            const double inv_total_step =
                1.0 / (fl.eta_sgd * static_cast<double>(trained.steps));
            grad = std::move(trained.displacement);
            kernels::scale(inv_total_step, grad);
        }
    }
    aggregate_local_gradient(device.psi, grad, fl.beta);

    LocalUpdate update;
    update.sample_report = device.n + m;
    update.delta.assign(device.psi.begin(), device.psi.end());
    kernels::scale(dynamic_learning_rate(fl.eta_d, device.d), update.delta);
    return update;
}

void reset_gradient_on_success(DeviceFlState& device, bool delivered) {
    if (delivered) {
        std::fill(device.psi.begin(), device.psi.end(), 0.0);
        device.d = 1;
    } else {
        device.d += 1;
    }
}

void update_sample_counters(DeviceFlState& device, bool scheduled, bool delivered,
                            std::uint32_t m, std::uint32_t n_max) {
    if (scheduled && delivered) {
        device.big_n += device.n + m;
        device.n = 0;
    } else {
        device.n = std::min(device.n + m, n_max);
    }
}

bool central_aggregate(CentralState& central, const std::vector<LocalUpdate>& updates,
                       const std::vector<std::uint64_t>& all_big_n,
                       const std::vector<std::uint8_t>& delivered) {
    double denom = 0.0;
    for (std::uint64_t n : all_big_n) denom += static_cast<double>(n);
    for (std::size_t u = 0; u < delivered.size(); ++u) {
        if (delivered[u]) denom += static_cast<double>(updates[u].sample_report);
    }
    if (denom <= 0.0) return false; // aggregation before any data exists
    for (std::size_t u = 0; u < delivered.size(); ++u) {
        if (!delivered[u] || updates[u].delta.empty()) continue;
        const double c = (static_cast<double>(all_big_n[u]) +
                          static_cast<double>(updates[u].sample_report)) /
                         denom;
        kernels::axpy(-c, updates[u].delta, central.w.weights);
    }
    return true;
}

World::World(WorldOptions options, std::uint64_t base_seed, std::uint64_t instance)
    : options_(std::move(options)) {
    const std::size_t u_count = options_.devices.size();
    if (u_count == 0) throw InvalidConfig("at least one device is required");
    if (options_.w_slots < 1 || options_.w_slots > u_count)
        throw InvalidConfig("W must satisfy 1 <= W <= U");
    options_.fl.validate();
    if (options_.learner_enabled) options_.task.validate();

    central_.w = ModelParams::zeros(options_.task.num_classes, options_.task.feature_dim);
    device_states_.resize(u_count);
    mean_gains_.reserve(u_count);
    for (std::size_t u = 0; u < u_count; ++u) {
        options_.devices[u].arrivals.validate();
        mean_gains_.push_back(mean_gain_linear(options_.devices[u].channel));
        gain_streams_.emplace_back(derive_seed(base_seed, instance, u, StreamPurpose::ChannelGain));
        arrival_streams_.emplace_back(derive_seed(base_seed, instance, u, StreamPurpose::Arrival));
        shard_streams_.emplace_back(
            derive_seed(base_seed, instance, u, StreamPurpose::ShardContent));
        transmission_streams_.emplace_back(
            derive_seed(base_seed, instance, u, StreamPurpose::Transmission));
        sgd_streams_.emplace_back(derive_seed(base_seed, instance, u, StreamPurpose::LocalSgd));
    }
}

double World::sample_gain_for(std::size_t u) {
    if (options_.binned_fading) {
        const BinnedFading& binned = *options_.binned_fading;
        const double draw = gain_streams_[u].uniform();
        double cum = 0.0;
        for (std::size_t b = 0; b < binned.probabilities.size(); ++b) {
            cum += binned.probabilities[b];
            if (draw < cum || b + 1 == binned.probabilities.size()) {
                return binned.representatives_e[b] * mean_gains_[u];
            }
        }
    }
    return sample_gain(options_.devices[u].channel, gain_streams_[u]).gain_linear;
}

RoundRecord World::run_round(Scheduler& scheduler) {
    const std::size_t u_count = options_.devices.size();
    const std::int64_t t = central_.round;

    // Transmission scheduling phase: the AP observes (h, n) and decides.
    ObservedState observed;
    observed.round = t;
    observed.gains.resize(u_count);
    observed.success_probs.resize(u_count);
    for (std::size_t u = 0; u < u_count; ++u) {
        observed.gains[u] = sample_gain_for(u);
        observed.success_probs[u] = success_probability(
            snr_linear(ChannelGain{observed.gains[u]}, options_.devices[u].channel),
            options_.devices[u].channel);
    }
    std::vector<std::uint32_t> backlog(u_count);
    for (std::size_t u = 0; u < u_count; ++u) backlog[u] = device_states_[u].n;
    if (scheduler.needs_backlog()) observed.backlog = backlog;

    ScheduleDecision decision = scheduler.decide(observed, options_.w_slots);
    if (decision.scheduled.size() != u_count)
        throw InvalidSchedule("scheduler returned a decision of the wrong size");
    if (!decision.constraint_exempt && decision.scheduled_count() != options_.w_slots)
        throw InvalidSchedule("scheduler violated the sum(a) = W constraint");

    // Local parameter update phase: arrivals land and every device trains from
    // the broadcast parameters, scheduled or not.
    std::vector<std::uint32_t> arrivals_now(u_count);
    std::vector<LocalUpdate> updates(u_count);
    for (std::size_t u = 0; u < u_count; ++u) {
        DeviceFlState& device = device_states_[u];
        const std::uint32_t m = sample_arrivals(options_.devices[u].arrivals, arrival_streams_[u]);
        arrivals_now[u] = m;
        device.m_last = m;
        updates[u].sample_report = device.n + m;

        if (!options_.learner_enabled) continue;

        std::vector<Shard> shards;
        shards.reserve(m);
        for (std::uint32_t s = 0; s < m; ++s) {
            shards.push_back(generate_shard(options_.task, shard_streams_[u]));
        }
        updates[u] = local_train(device, central_, shards, options_.fl, sgd_streams_[u]);
    }

    // Parameter aggregation phase: scheduled devices transmit; one uniform is
    // consumed per device per round to keep streams aligned across schedulers.
    std::vector<std::uint8_t> delivered(u_count, 0);
    for (std::size_t u = 0; u < u_count; ++u) {
        const double draw = transmission_streams_[u].uniform();
        if (!decision.scheduled[u]) continue;
        delivered[u] =
            decision.force_delivery ? 1 : (draw < observed.success_probs[u] ? 1 : 0);
    }

    std::vector<double> n_plus_m(u_count);
    for (std::size_t u = 0; u < u_count; ++u) {
        n_plus_m[u] = static_cast<double>(updates[u].sample_report);
    }
    const double effectivity =
        effectivity_score(n_plus_m, decision.scheduled, delivered, options_.gamma);
    cum_reward_ += effectivity;

    std::vector<std::uint64_t> all_big_n(u_count);
    for (std::size_t u = 0; u < u_count; ++u) all_big_n[u] = device_states_[u].big_n;
    if (options_.learner_enabled) {
        central_aggregate(central_, updates, all_big_n, delivered);
        if (!central_.w.all_finite())
            throw NonFiniteGradient("central parameters became non-finite");
    }

    RoundRecord record;
    record.round = t;
    record.scheduled = decision.scheduled;
    record.delivered = delivered;
    record.n_before = backlog;
    record.m = arrivals_now;
    record.effectivity = effectivity;
    record.cum_reward = cum_reward_;

    std::uint32_t delivered_count = 0;
    for (std::size_t u = 0; u < u_count; ++u) {
        DeviceFlState& device = device_states_[u];
        update_sample_counters(device, decision.scheduled[u] != 0, delivered[u] != 0,
                               arrivals_now[u], options_.fl.n_max);
        reset_gradient_on_success(device, delivered[u] != 0);
        record.backlog_total += device.n;
        delivered_count += delivered[u];
    }
    record.stragglers = static_cast<std::uint32_t>(u_count) - delivered_count;

    RoundOutcome outcome;
    outcome.round = t;
    outcome.gains = observed.gains;
    outcome.scheduled = decision.scheduled;
    outcome.delivered = delivered;
    outcome.reports.resize(u_count, 0);
    for (std::size_t u = 0; u < u_count; ++u) {
        if (delivered[u]) outcome.reports[u] = updates[u].sample_report;
    }
    if (scheduler.needs_backlog()) {
        outcome.backlog = backlog;
        std::vector<std::uint32_t> backlog_next(u_count);
        for (std::size_t u = 0; u < u_count; ++u) backlog_next[u] = device_states_[u].n;
        outcome.backlog_next = std::move(backlog_next);
    }
    scheduler.observe(outcome);

    central_.round += 1;
    return record;
}

EvalResult World::evaluate_central(std::span<const Sample> dataset) const {
    return evaluate(central_.w, dataset);
}

} // namespace wdln
