#include "wdln/channel.hpp"

#include <cmath>

#include "wdln/errors.hpp"

namespace wdln {

double pathloss_db(double distance_km) {
    return 128.1 + 37.6 * std::log10(distance_km);
}

double mean_gain_linear(const ChannelParams& params) {
    return std::pow(10.0, -pathloss_db(params.distance_km) / 10.0);
}

ChannelGain sample_gain(const ChannelParams& params, RandomSource& rng) {
    return ChannelGain{rng.exponential(1.0) * mean_gain_linear(params)};
}

double snr_linear(ChannelGain gain, const ChannelParams& params) {
    return gain.gain_linear *
           std::pow(10.0, (params.tx_power_dbm - params.noise_power_dbm) / 10.0);
}

namespace {

// BPSK bit error rate over the realized SNR: Q(sqrt(2*snr)) = erfc(sqrt(snr))/2.
double bpsk_bit_error_rate(double snr) {
    return 0.5 * std::erfc(std::sqrt(snr));
}

} // namespace

double success_probability(double snr, const ChannelParams& params) {
    if (snr < 0.0) snr = 0.0;
    switch (params.ber_model) {
    case BerModel::BpskUncoded: {
        const double b = bpsk_bit_error_rate(snr);
        if (b >= 1.0) return 0.0;
        return std::exp(static_cast<double>(params.packet_bits) * std::log1p(-b));
    }
    case BerModel::Logistic: {
        if (snr <= 0.0) return 0.0;
        const double snr_db = 10.0 * std::log10(snr);
        const double per =
            1.0 / (1.0 + std::exp(params.logistic_kappa * (snr_db - params.logistic_snr50_db)));
        return 1.0 - per;
    }
    }
    return 0.0;
}

bool sample_transmission(double success_prob, RandomSource& rng) {
    return rng.bernoulli(success_prob);
}

BinnedFading make_binned_fading(std::size_t num_bins) {
    if (num_bins == 0) throw InvalidConfig("binned fading requires at least one bin");
    BinnedFading binned;
    binned.probabilities.assign(num_bins, 1.0 / static_cast<double>(num_bins));
    binned.representatives_e.resize(num_bins);
    for (std::size_t b = 0; b < num_bins; ++b) {
        // Quantile edges of Exp(1): a = -ln(1 - b/B), open-ended last bin.
        const double lo = -std::log1p(-static_cast<double>(b) / static_cast<double>(num_bins));
        if (b + 1 == num_bins) {
            binned.representatives_e[b] = lo + 1.0;
        } else {
            const double hi =
                -std::log1p(-static_cast<double>(b + 1) / static_cast<double>(num_bins));
            // E[e | lo <= e < hi] = ((lo+1)e^-lo - (hi+1)e^-hi) / (e^-lo - e^-hi)
            const double num =
                (lo + 1.0) * std::exp(-lo) - (hi + 1.0) * std::exp(-hi);
            const double den = std::exp(-lo) - std::exp(-hi);
            binned.representatives_e[b] = num / den;
        }
    }
    return binned;
}

} // namespace wdln
