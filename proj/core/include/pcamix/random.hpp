#pragma once

#include "pcamix/errors.hpp"
#include "pcamix/lattice.hpp"

#include <array>
#include <cstdint>

namespace pcamix {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// Pure function of (counter, key); used as the source of all simulation noise
// so that every uniform is addressable by (seed, experiment, replica, t, site).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
        const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
        const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

// Injective 64-bit encoding of a site relative to an origin offset.
// Each coordinate is zigzag-encoded into 16 bits; supports d <= 4 and
// |coordinate| <= 32767, which covers every box this toolkit enumerates
// or simulates.
std::uint64_t pack_site(const Site& s, const Site* origin = nullptr);

// Addressing for one stream of uniforms. `replica` distinguishes independent
// Monte Carlo samples; coupled chains within one sample share the same key so
// they read identical uniforms per (t, site).
struct RandomnessKey {
    std::uint64_t seed = 0;
    std::uint32_t experiment = 0;
    std::uint32_t replica = 0;
    Site origin; // default-constructed: no offset

    RandomnessKey with_replica(std::uint32_t r) const {
        RandomnessKey k = *this;
        k.replica = r;
        return k;
    }
    RandomnessKey with_experiment(std::uint32_t e) const {
        RandomnessKey k = *this;
        k.experiment = e;
        return k;
    }
    // Key for the dynamics translated by `by`: sites are decoded relative to
    // the shifted origin, so translated runs replay translated noise.
    RandomnessKey translated(const Site& by) const;
};

inline double uniform01_from(std::uint64_t seed, std::uint32_t experiment, std::uint32_t replica,
                             std::uint32_t t, std::uint64_t site_code) {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(site_code),
        static_cast<std::uint32_t>(site_code >> 32),
        t,
        replica,
    };
    const std::array<std::uint32_t, 2> key = {
        static_cast<std::uint32_t>(seed) ^ experiment,
        static_cast<std::uint32_t>(seed >> 32),
    };
    const auto out = philox4x32(ctr, key);
    const std::uint64_t bits = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    return static_cast<double>(bits >> 11) * 0x1.0p-53; // [0, 1)
}

// The per-(time, site) uniform shared by all coupled replicas of one sample.
double uniform01(const RandomnessKey& key, std::uint32_t t, const Site& site);

} // namespace pcamix
