#include "wdln/dp_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wdln/errors.hpp"
#include "wdln/kernels.hpp"

namespace wdln {

namespace {

void check_guard(const SmallInstanceSpec& spec) {
    if (spec.devices.empty()) throw InvalidConfig("oracle instance needs devices");
    if (spec.devices.size() > 3)
        throw TooLarge("exact MDP limited to U <= 3; the state space grows exponentially");
    if (spec.gain_bins < 1 || spec.gain_bins > 3)
        throw TooLarge("exact MDP limited to at most 3 gain bins");
    if (spec.n_max > 4) throw TooLarge("exact MDP limited to n_max <= 4");
    if (spec.m_max < 1 || spec.m_max > 2) throw TooLarge("exact MDP limited to m_max <= 2");
    if (spec.w < 1 || spec.w > spec.devices.size())
        throw InvalidConfig("oracle W must satisfy 1 <= W <= U");
}

std::vector<std::vector<std::uint8_t>> enumerate_actions(std::uint32_t num_devices,
                                                         std::uint32_t w) {
    std::vector<std::vector<std::uint8_t>> actions;
    std::vector<std::uint32_t> combo(w);
    for (std::uint32_t i = 0; i < w; ++i) combo[i] = i;
    while (true) {
        std::vector<std::uint8_t> scheduled(num_devices, 0);
        for (std::uint32_t i : combo) scheduled[i] = 1;
        actions.push_back(std::move(scheduled));
        // next lexicographic W-combination
        std::int64_t pos = static_cast<std::int64_t>(w) - 1;
        while (pos >= 0 && combo[pos] == num_devices - w + pos) --pos;
        if (pos < 0) break;
        ++combo[pos];
        for (std::uint32_t i = static_cast<std::uint32_t>(pos) + 1; i < w; ++i) {
            combo[i] = combo[i - 1] + 1;
        }
    }
    return actions;
}

std::vector<double> clamped_poisson_pmf(double rate, std::uint32_t m_max) {
    std::vector<double> pmf(m_max + 1, 0.0);
    double p = std::exp(-rate);
    double cdf = 0.0;
    for (std::uint32_t j = 0; j < m_max; ++j) {
        pmf[j] = p;
        cdf += p;
        p *= rate / static_cast<double>(j + 1);
    }
    pmf[m_max] = 1.0 - cdf;
    return pmf;
}

} // namespace

std::size_t MdpModel::encode_state(const std::vector<std::uint32_t>& bins,
                                   const std::vector<std::uint32_t>& backlog) const {
    const std::size_t digits = static_cast<std::size_t>(gain_bins) * (n_max + 1);
    std::size_t state = 0;
    for (std::size_t u = num_devices; u-- > 0;) {
        state = state * digits + bins[u] * (n_max + 1) + backlog[u];
    }
    return state;
}

void MdpModel::decode_state(std::size_t state, std::vector<std::uint32_t>& bins,
                            std::vector<std::uint32_t>& backlog) const {
    const std::size_t digits = static_cast<std::size_t>(gain_bins) * (n_max + 1);
    bins.resize(num_devices);
    backlog.resize(num_devices);
    for (std::size_t u = 0; u < num_devices; ++u) {
        const std::size_t digit = state % digits;
        state /= digits;
        bins[u] = static_cast<std::uint32_t>(digit / (n_max + 1));
        backlog[u] = static_cast<std::uint32_t>(digit % (n_max + 1));
    }
}

MdpModel build_mdp(const SmallInstanceSpec& spec) {
    check_guard(spec);

    MdpModel model;
    model.num_devices = static_cast<std::uint32_t>(spec.devices.size());
    model.gain_bins = spec.gain_bins;
    model.n_max = spec.n_max;
    model.m_max = spec.m_max;
    model.w = spec.w;
    model.gamma = spec.gamma;
    model.fading = make_binned_fading(spec.gain_bins);
    model.actions = enumerate_actions(model.num_devices, spec.w);
    model.num_actions = model.actions.size();

    std::size_t states = 1;
    for (std::uint32_t u = 0; u < model.num_devices; ++u) {
        states *= static_cast<std::size_t>(spec.gain_bins) * (spec.n_max + 1);
    }
    model.num_states = states;

    for (const DeviceSpec& device : spec.devices) {
        std::vector<double> probs(spec.gain_bins);
        const double mean_gain = mean_gain_linear(device.channel);
        for (std::uint32_t b = 0; b < spec.gain_bins; ++b) {
            const double gain = model.fading.representatives_e[b] * mean_gain;
            probs[b] = success_probability(snr_linear(ChannelGain{gain}, device.channel),
                                           device.channel);
        }
        model.success_prob.push_back(std::move(probs));
        model.arrival_pmf.push_back(
            clamped_poisson_pmf(device.arrivals.rate_shards_per_round, spec.m_max));
        model.arrival_mean.push_back(
            truncated_poisson_mean(device.arrivals.rate_shards_per_round, spec.m_max));
    }

    // Worst-case effectivity range for the [0,1] reward map.
    const double mass_cap = static_cast<double>(model.num_devices) *
                            static_cast<double>(spec.n_max + spec.m_max);
    model.reward_min = -spec.gamma * mass_cap;
    model.reward_scale = (1.0 + spec.gamma) * mass_cap;

    // Per-device next-backlog pmf for (bin, scheduled, n).
    const std::size_t n_vals = spec.n_max + 1;
    auto next_pmf = [&](std::uint32_t u, std::uint32_t bin, bool scheduled, std::uint32_t n) {
        std::vector<double> pmf(n_vals, 0.0);
        const double q = scheduled ? model.success_prob[u][bin] : 0.0;
        if (scheduled) pmf[0] += q;
        for (std::uint32_t m = 0; m <= spec.m_max; ++m) {
            const std::uint32_t next_n = std::min(n + m, spec.n_max);
            pmf[next_n] += (1.0 - q) * model.arrival_pmf[u][m];
        }
        return pmf;
    };

    model.rewards.assign(model.num_states * model.num_actions, 0.0);
    model.transitions.assign(model.num_states * model.num_actions * model.num_states, 0.0);

    std::vector<std::uint32_t> bins, backlog, next_bins, next_backlog;
    std::vector<std::vector<double>> device_next(model.num_devices);
    for (std::size_t s = 0; s < model.num_states; ++s) {
        model.decode_state(s, bins, backlog);
        for (std::size_t a = 0; a < model.num_actions; ++a) {
            const auto& scheduled = model.actions[a];

            double expected_f = 0.0;
            for (std::uint32_t u = 0; u < model.num_devices; ++u) {
                const double mass = static_cast<double>(backlog[u]) + model.arrival_mean[u];
                const double q = scheduled[u] ? model.success_prob[u][bins[u]] : 0.0;
                expected_f += q * (1.0 + model.gamma) * mass - model.gamma * mass;
            }
            model.rewards[s * model.num_actions + a] =
                (expected_f - model.reward_min) / model.reward_scale;

            for (std::uint32_t u = 0; u < model.num_devices; ++u) {
                device_next[u] = next_pmf(u, bins[u], scheduled[u] != 0, backlog[u]);
            }
            double* row =
                model.transitions.data() + (s * model.num_actions + a) * model.num_states;
            for (std::size_t s2 = 0; s2 < model.num_states; ++s2) {
                model.decode_state(s2, next_bins, next_backlog);
                double p = 1.0;
                for (std::uint32_t u = 0; u < model.num_devices; ++u) {
                    p *= model.fading.probabilities[next_bins[u]] *
                         device_next[u][next_backlog[u]];
                    if (p == 0.0) break;
                }
                row[s2] = p;
            }
        }
    }
    return model;
}

ValueSolution relative_value_iteration(const MdpModel& model, double tol,
                                       std::size_t max_iter) {
    const std::size_t s_count = model.num_states;
    const std::size_t a_count = model.num_actions;
    std::vector<double> v(s_count, 0.0), next(s_count, 0.0);
    ValueSolution solution;
    solution.policy.assign(s_count, 0);

    for (std::size_t iter = 1; iter <= max_iter; ++iter) {
        for (std::size_t s = 0; s < s_count; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            std::size_t best_a = 0;
            for (std::size_t a = 0; a < a_count; ++a) {
                const double* row =
                    model.transitions.data() + (s * a_count + a) * s_count;
                const double q = model.rewards[s * a_count + a] +
                                 kernels::dot(std::span<const double>(row, s_count), v);
                if (q > best) {
                    best = q;
                    best_a = a;
                }
            }
            next[s] = best;
            solution.policy[s] = best_a;
        }
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t s = 0; s < s_count; ++s) {
            const double diff = next[s] - v[s];
            lo = std::min(lo, diff);
            hi = std::max(hi, diff);
        }
        const double anchor = next[0];
        for (std::size_t s = 0; s < s_count; ++s) v[s] = next[s] - anchor;
        if (hi - lo < tol) {
            solution.j_star = 0.5 * (hi + lo);
            solution.values = v;
            solution.iterations = iter;
            return solution;
        }
    }
    throw NoConvergence("relative value iteration did not reach the span tolerance");
}

double evaluate_policy(const MdpModel& model, const std::vector<std::size_t>& policy) {
    const std::size_t s_count = model.num_states;
    if (policy.size() != s_count)
        throw InvalidConfig("policy must assign an action to every state");

    // Stationary distribution: solve pi^T P = pi^T with sum(pi) = 1 by Gaussian
    // elimination on (P^T - I) with the last equation replaced by the simplex
    // constraint.
    std::vector<double> a(s_count * s_count, 0.0);
    std::vector<double> b(s_count, 0.0);
    for (std::size_t s = 0; s < s_count; ++s) {
        const double* row =
            model.transitions.data() + (s * model.num_actions + policy[s]) * s_count;
        for (std::size_t s2 = 0; s2 < s_count; ++s2) {
            a[s2 * s_count + s] += row[s2]; // transpose
        }
        a[s * s_count + s] -= 1.0;
    }
    for (std::size_t s = 0; s < s_count; ++s) a[(s_count - 1) * s_count + s] = 1.0;
    b[s_count - 1] = 1.0;

    for (std::size_t col = 0; col < s_count; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < s_count; ++r) {
            if (std::abs(a[r * s_count + col]) > std::abs(a[pivot * s_count + col])) pivot = r;
        }
        if (std::abs(a[pivot * s_count + col]) < 1e-13) {
            throw SingularChain("induced chain is not unichain");
        }
        if (pivot != col) {
            for (std::size_t c = 0; c < s_count; ++c) {
                std::swap(a[pivot * s_count + c], a[col * s_count + c]);
            }
            std::swap(b[pivot], b[col]);
        }
        const double inv = 1.0 / a[col * s_count + col];
        for (std::size_t r = col + 1; r < s_count; ++r) {
            const double factor = a[r * s_count + col] * inv;
            if (factor == 0.0) continue;
            for (std::size_t c = col; c < s_count; ++c) {
                a[r * s_count + c] -= factor * a[col * s_count + c];
            }
            b[r] -= factor * b[col];
        }
    }
    std::vector<double> pi(s_count, 0.0);
    for (std::size_t r = s_count; r-- > 0;) {
        double acc = b[r];
        for (std::size_t c = r + 1; c < s_count; ++c) acc -= a[r * s_count + c] * pi[c];
        pi[r] = acc / a[r * s_count + r];
    }

    double avg = 0.0;
    for (std::size_t s = 0; s < s_count; ++s) {
        if (pi[s] < -1e-8) throw SingularChain("stationary solve produced negative mass");
        avg += pi[s] * model.rewards[s * model.num_actions + policy[s]];
    }
    return avg;
}

std::vector<std::size_t> greedy_policy_table(const MdpModel& model) {
    std::vector<std::size_t> policy(model.num_states, 0);
    std::vector<std::uint32_t> bins, backlog;
    std::vector<double> probs(model.num_devices), expected(model.num_devices);
    std::vector<std::uint32_t> n_vec(model.num_devices);

    // Map scheduled vectors to action indices for lookup.
    std::map<std::vector<std::uint8_t>, std::size_t> action_index;
    for (std::size_t a = 0; a < model.num_actions; ++a) action_index[model.actions[a]] = a;

    for (std::size_t s = 0; s < model.num_states; ++s) {
        model.decode_state(s, bins, backlog);
        for (std::uint32_t u = 0; u < model.num_devices; ++u) {
            probs[u] = model.success_prob[u][bins[u]];
            expected[u] = model.arrival_mean[u];
            n_vec[u] = backlog[u];
        }
        const ScheduleDecision d = greedy_policy(probs, n_vec, expected, model.w);
        policy[s] = action_index.at(d.scheduled);
    }
    return policy;
}

WorldOptions make_oracle_world_options(const SmallInstanceSpec& spec) {
    check_guard(spec);
    WorldOptions options;
    options.devices = spec.devices;
    for (DeviceSpec& device : options.devices) device.arrivals.m_max = spec.m_max;
    options.fl.n_max = spec.n_max;
    options.w_slots = spec.w;
    options.gamma = spec.gamma;
    options.learner_enabled = false;
    options.binned_fading = make_binned_fading(spec.gain_bins);
    return options;
}

StateDiscretizer make_oracle_discretizer(const SmallInstanceSpec& spec) {
    const BinnedFading fading = make_binned_fading(spec.gain_bins);
    std::vector<double> reps;
    for (const DeviceSpec& device : spec.devices) {
        const double mean_gain = mean_gain_linear(device.channel);
        for (double e : fading.representatives_e) reps.push_back(e * mean_gain);
    }
    std::sort(reps.begin(), reps.end());
    reps.erase(std::unique(reps.begin(), reps.end()), reps.end());

    StateDiscretizer d;
    d.n_truncation = spec.n_max;
    for (std::size_t i = 0; i + 1 < reps.size(); ++i) {
        d.gain_bin_edges.push_back(std::sqrt(reps[i] * reps[i + 1])); // geometric midpoint
    }
    return d;
}

} // namespace wdln
