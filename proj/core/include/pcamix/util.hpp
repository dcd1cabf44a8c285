#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

namespace pcamix {

// Round-trip-safe decimal rendering (17 significant digits) used for every
// numeric field written to CSV, so that re-runs compare byte for byte.
inline std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Sums values in ascending order of magnitude after sorting by value.
// The result depends only on the multiset of inputs, never on how a parallel
// producer ordered them, which keeps normalizations bit-stable.
inline double stable_sum(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double total = 0.0;
    for (double v : values) total += v;
    return total;
}

} // namespace pcamix
