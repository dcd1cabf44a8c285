#include "pcamix/random.hpp"

namespace pcamix {

std::uint64_t pack_site(const Site& s, const Site* origin) {
    const int d = s.dim();
    if (d < 1 || d > 4) throw Error("site packing supports dimensions 1..4, got " + std::to_string(d));
    if (origin && origin->dim() != 0 && origin->dim() != d)
        throw Error("site/origin dimension mismatch in key packing");
    std::uint64_t code = 0;
    for (int i = 0; i < d; ++i) {
        int c = s[i];
        if (origin && origin->dim() == d) c -= (*origin)[i];
        const std::uint32_t zz =
            (static_cast<std::uint32_t>(c) << 1) ^ static_cast<std::uint32_t>(c >> 31);
        if (zz > 0xFFFFu) throw Error("site coordinate out of packable range at " + s.to_string());
        code |= static_cast<std::uint64_t>(zz) << (16 * i);
    }
    return code;
}

RandomnessKey RandomnessKey::translated(const Site& by) const {
    RandomnessKey k = *this;
    k.origin = (origin.dim() == 0) ? by : origin + by;
    return k;
}

double uniform01(const RandomnessKey& key, std::uint32_t t, const Site& site) {
    return uniform01_from(key.seed, key.experiment, key.replica, t,
                          pack_site(site, key.origin.dim() ? &key.origin : nullptr));
}

} // namespace pcamix
