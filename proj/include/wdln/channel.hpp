#pragma once

#include <cstdint>
#include <vector>

#include "wdln/rng.hpp"

namespace wdln {

enum class BerModel { BpskUncoded, Logistic };

// Per-link channel description: log-distance pathloss plus unit-mean Rayleigh
// fading (exponential power gain), an uplink power budget, and the packet
// error model used to turn SNR into a delivery probability.
struct ChannelParams {
    double distance_km = 0.1;
    double tx_power_dbm = 23.0;
    double noise_power_dbm = -96.0;
    std::uint32_t packet_bits = 4096;
    BerModel ber_model = BerModel::BpskUncoded;
    // Logistic waterfall parameters, used only when ber_model == Logistic:
    // PER = 1 / (1 + exp(kappa * (snr_db - snr50_db))).
    double logistic_kappa = 1.0;
    double logistic_snr50_db = 5.0;
};

struct ChannelGain {
    double gain_linear = 0.0;
};

double pathloss_db(double distance_km);

// Deterministic pathloss component 10^(-PL/10); the fading draw multiplies it.
double mean_gain_linear(const ChannelParams& params);

ChannelGain sample_gain(const ChannelParams& params, RandomSource& rng);

double snr_linear(ChannelGain gain, const ChannelParams& params);

// P[x = 1 | snr] under the configured error model. Nondecreasing in snr,
// nonincreasing in packet_bits.
double success_probability(double snr, const ChannelParams& params);

bool sample_transmission(double success_prob, RandomSource& rng);

// Equal-probability quantization of the unit-mean exponential fading, used by
// the finite-MDP oracle and its sampled environment. Each bin is represented
// by its conditional mean so that the sampled environment and the exact
// transition kernel describe the same process.
struct BinnedFading {
    std::vector<double> probabilities;       // one per bin, sums to 1
    std::vector<double> representatives_e;   // E[e | bin] for e ~ Exp(1)
};

BinnedFading make_binned_fading(std::size_t num_bins);

} // namespace wdln
