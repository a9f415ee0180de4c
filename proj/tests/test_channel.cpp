#include <doctest.h>

#include <cmath>

#include "wdln/channel.hpp"
#include "wdln/rng.hpp"

using namespace wdln;

TEST_CASE("pathloss evaluates the log-distance model") {
    CHECK(pathloss_db(0.1) == doctest::Approx(90.5).epsilon(1e-12));
    CHECK(pathloss_db(0.4) == doctest::Approx(113.1375).epsilon(1e-5));
    CHECK(pathloss_db(1.0) == doctest::Approx(128.1));
}

TEST_CASE("gain is fading times pathloss") {
    ChannelParams params;
    params.distance_km = 0.1;
    // Unit fading draw recovers the deterministic pathloss factor.
    CHECK(mean_gain_linear(params) == doctest::Approx(std::pow(10.0, -9.05)).epsilon(1e-12));

    // Empirical mean of the exponential fading within 2%.
    RandomSource rng(123);
    double total = 0.0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) total += sample_gain(params, rng).gain_linear;
    CHECK(total / draws ==
          doctest::Approx(mean_gain_linear(params)).epsilon(0.02));
}

TEST_CASE("snr combines gain with the dB budget") {
    ChannelParams params;
    params.tx_power_dbm = 23.0;
    params.noise_power_dbm = -96.0;
    CHECK(snr_linear(ChannelGain{1.0}, params) == doctest::Approx(std::pow(10.0, 11.9)));
    CHECK(snr_linear(ChannelGain{0.0}, params) == 0.0);
    CHECK(snr_linear(ChannelGain{std::pow(10.0, -9.05)}, params) ==
          doctest::Approx(std::pow(10.0, 2.85)).epsilon(1e-9));
    CHECK(std::pow(10.0, 2.85) == doctest::Approx(707.9).epsilon(1e-3));
}

TEST_CASE("bpsk packet success probability") {
    ChannelParams params;
    params.packet_bits = 100;

    // Independent oracle: Q(x) = erfc(x / sqrt(2)) / 2 evaluated directly.
    const double q = 0.5 * std::erfc(std::sqrt(2.0 * 4.0) / std::sqrt(2.0));
    const double expected = std::pow(1.0 - q, 100);
    CHECK(success_probability(4.0, params) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(success_probability(4.0, params) == doctest::Approx(0.791).epsilon(2e-3));

    params.packet_bits = 1;
    // A single-bit packet succeeds with probability 1 - b.
    const double b = 0.5 * std::erfc(std::sqrt(2.0));
    CHECK(success_probability(2.0, params) == doctest::Approx(1.0 - b).epsilon(1e-12));

    params.packet_bits = 4096;
    CHECK(success_probability(1e9, params) == doctest::Approx(1.0)); // error-free limit
    CHECK(success_probability(0.0, params) >= 0.0);
    CHECK(success_probability(0.0, params) <= 1e-100);
}

TEST_CASE("success probability is monotone") {
    ChannelParams params;
    params.packet_bits = 1024;
    double prev = -1.0;
    for (double snr = 0.0; snr <= 20.0; snr += 0.25) {
        const double p = success_probability(snr, params);
        CHECK(p >= prev);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        prev = p;
    }
    // Nonincreasing in packet length at fixed snr.
    ChannelParams a = params, b = params;
    a.packet_bits = 128;
    b.packet_bits = 4096;
    for (double snr : {0.5, 2.0, 5.0, 9.0}) {
        CHECK(success_probability(snr, a) >= success_probability(snr, b));
    }
}

TEST_CASE("logistic waterfall model") {
    ChannelParams params;
    params.ber_model = BerModel::Logistic;
    params.logistic_kappa = 1.0;
    params.logistic_snr50_db = 5.0;
    // At the 50% point the success probability is one half.
    CHECK(success_probability(std::pow(10.0, 0.5), params) == doctest::Approx(0.5));
    CHECK(success_probability(1e9, params) == doctest::Approx(1.0));
    CHECK(success_probability(0.0, params) == 0.0);
    double prev = -1.0;
    for (double snr = 0.01; snr < 1e4; snr *= 3.0) {
        const double p = success_probability(snr, params);
        CHECK(p >= prev);
        prev = p;
    }
}

TEST_CASE("transmission draws are Bernoulli") {
    RandomSource rng(99);
    CHECK(sample_transmission(1.0, rng));
    CHECK_FALSE(sample_transmission(0.0, rng));
    int successes = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) successes += sample_transmission(0.5, rng) ? 1 : 0;
    CHECK(static_cast<double>(successes) / draws == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("binned fading matches the exponential distribution") {
    for (std::size_t bins : {1u, 2u, 3u, 8u}) {
        const BinnedFading binned = make_binned_fading(bins);
        double prob = 0.0, mean = 0.0;
        for (std::size_t b = 0; b < bins; ++b) {
            prob += binned.probabilities[b];
            mean += binned.probabilities[b] * binned.representatives_e[b];
            if (b > 0) CHECK(binned.representatives_e[b] > binned.representatives_e[b - 1]);
        }
        CHECK(prob == doctest::Approx(1.0).epsilon(1e-12));
        // Conditional means recombine to the unit mean.
        CHECK(mean == doctest::Approx(1.0).epsilon(1e-9));
    }
}
