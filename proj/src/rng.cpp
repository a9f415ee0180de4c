#include "wdln/rng.hpp"

namespace wdln {

namespace {

// splitmix64 finalizer; decorrelates structured inputs well enough for seeding.
std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t instance,
                          std::uint64_t device, StreamPurpose purpose) {
    std::uint64_t h = mix(base_seed);
    h = mix(h ^ mix(instance + 0x100000001ULL));
    h = mix(h ^ mix(device + 0x200000002ULL));
    h = mix(h ^ mix(static_cast<std::uint64_t>(purpose) + 0x300000003ULL));
    return h;
}

} // namespace wdln
