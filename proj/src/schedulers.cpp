#include "wdln/schedulers.hpp"

#include <algorithm>
#include <numeric>

#include "wdln/errors.hpp"

namespace wdln {

std::uint32_t ScheduleDecision::scheduled_count() const {
    return static_cast<std::uint32_t>(
        std::count(scheduled.begin(), scheduled.end(), std::uint8_t{1}));
}

ScheduleDecision select_top_w(const std::vector<double>& scores, std::uint32_t w) {
    const std::size_t u = scores.size();
    if (w > u) throw InvalidSchedule("W exceeds the number of devices");
    std::vector<std::uint32_t> idx(u);
    std::iota(idx.begin(), idx.end(), 0u);
    auto better = [&](std::uint32_t a, std::uint32_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    };
    if (w < u) std::nth_element(idx.begin(), idx.begin() + w, idx.end(), better);
    ScheduleDecision d;
    d.scheduled.assign(u, 0);
    for (std::uint32_t i = 0; i < w; ++i) d.scheduled[idx[i]] = 1;
    return d;
}

ScheduleDecision greedy_policy(const std::vector<double>& success_probs,
                               const std::vector<std::uint32_t>& backlog,
                               const std::vector<double>& expected_arrivals, std::uint32_t w) {
    const std::size_t u = success_probs.size();
    std::vector<double> scores(u);
    for (std::size_t i = 0; i < u; ++i) {
        scores[i] = success_probs[i] * (static_cast<double>(backlog[i]) + expected_arrivals[i]);
    }
    return select_top_w(scores, w);
}

double effectivity_score(const std::vector<double>& n_plus_m,
                         const std::vector<std::uint8_t>& scheduled,
                         const std::vector<std::uint8_t>& delivered, double gamma) {
    double score = 0.0;
    for (std::size_t i = 0; i < n_plus_m.size(); ++i) {
        if (delivered[i] && !scheduled[i])
            throw InvalidSchedule("delivered device was not scheduled");
        score += delivered[i] ? n_plus_m[i] : -gamma * n_plus_m[i];
    }
    return score;
}

double effectivity_score_rearranged(const std::vector<double>& n_plus_m,
                                    const std::vector<std::uint8_t>& scheduled,
                                    const std::vector<std::uint8_t>& delivered, double gamma) {
    double score = 0.0;
    for (std::size_t i = 0; i < n_plus_m.size(); ++i) {
        score += scheduled[i] * delivered[i] * (1.0 + gamma) * n_plus_m[i] - gamma * n_plus_m[i];
    }
    return score;
}

ScheduleDecision BenchScheduler::decide(const ObservedState& state, std::uint32_t) {
    ScheduleDecision d;
    d.scheduled.assign(state.gains.size(), 1);
    d.constraint_exempt = true;
    d.force_delivery = true;
    return d;
}

std::vector<std::uint32_t> round_robin_indices(std::int64_t round, std::uint32_t num_devices,
                                               std::uint32_t w) {
    std::vector<std::uint32_t> out(w);
    for (std::uint32_t j = 0; j < w; ++j) {
        out[j] = static_cast<std::uint32_t>((round * w + j) % num_devices);
    }
    return out;
}

ScheduleDecision RoundRobinScheduler::decide(const ObservedState& state, std::uint32_t w) {
    ScheduleDecision d;
    d.scheduled.assign(state.gains.size(), 0);
    for (std::uint32_t i :
         round_robin_indices(counter_, static_cast<std::uint32_t>(state.gains.size()), w)) {
        d.scheduled[i] = 1;
    }
    ++counter_;
    return d;
}

ScheduleDecision WMaxScheduler::decide(const ObservedState& state, std::uint32_t w) {
    return select_top_w(state.gains, w);
}

ScheduleDecision AlsaPiScheduler::decide(const ObservedState& state, std::uint32_t w) {
    if (!state.backlog) {
        throw MissingStateInfo("alsa-pi requires the reported backlog n");
    }
    return greedy_policy(state.success_probs, *state.backlog, true_rates_, w);
}

} // namespace wdln
