#include "pcamix/rule.hpp"

#include "pcamix/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pcamix {

SpinSpace::SpinSpace(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) throw Error("spin space needs at least two values");
    double min_gap = std::numeric_limits<double>::infinity();
    double max_gap = 0.0;
    for (std::size_t i = 1; i < values_.size(); ++i) {
        const double gap = values_[i] - values_[i - 1];
        if (gap <= 0.0) throw Error("spin space values must be strictly increasing");
        min_gap = std::min(min_gap, gap);
    }
    max_gap = values_.back() - values_.front();
    kappa_ = 1.0 / min_gap;
    kappa_prime_ = max_gap;
}

const SpinSpace& SpinSpace::binary() {
    static const SpinSpace space({-1.0, +1.0});
    return space;
}

bool SpinSpace::is_binary() const {
    return values_.size() == 2 && values_[0] == -1.0 && values_[1] == 1.0;
}

InteractionKernel::InteractionKernel(int dim, std::vector<std::pair<Site, double>> entries)
    : dim_(dim) {
    if (dim < 1) throw Error("kernel dimension must be >= 1");
    for (auto& [off, w] : entries) {
        if (off.dim() != dim) throw Error("kernel offset dimension mismatch");
        (void)w;
    }
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].first == entries[i - 1].first)
            throw Error("duplicate kernel offset " + entries[i].first.to_string());
    }
    for (const auto& [off, w] : entries) {
        if (w != 0.0) entries_.emplace_back(off, w);
    }
    for (const auto& [off, w] : entries_) {
        if (weight(-off) != w)
            throw Error("kernel must be symmetric: K" + off.to_string() + " != K" + (-off).to_string());
        range_ = std::max(range_, off.l1_norm());
    }
}

InteractionKernel InteractionKernel::nearest_neighbor_2d(double coupling) {
    std::vector<std::pair<Site, double>> e;
    e.emplace_back(Site({1, 0}), coupling);
    e.emplace_back(Site({-1, 0}), coupling);
    e.emplace_back(Site({0, 1}), coupling);
    e.emplace_back(Site({0, -1}), coupling);
    return InteractionKernel(2, std::move(e));
}

double InteractionKernel::weight(const Site& offset) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), offset,
                               [](const auto& a, const Site& s) { return a.first < s; });
    if (it != entries_.end() && it->first == offset) return it->second;
    return 0.0;
}

bool InteractionKernel::non_negative() const {
    return std::all_of(entries_.begin(), entries_.end(),
                       [](const auto& e) { return e.second >= 0.0; });
}

NeighborhoodStencil InteractionKernel::stencil() const {
    std::vector<Site> offs;
    offs.reserve(entries_.size());
    for (const auto& [off, w] : entries_) offs.push_back(off);
    return NeighborhoodStencil(dim_, std::move(offs));
}

ClassCRule::ClassCRule(double beta, InteractionKernel kernel)
    : beta_(beta), kernel_(std::move(kernel)) {
    if (beta < 0.0) throw Error("beta must be >= 0");
}

double LocalRule::cumulative(double s, std::span<const double> neighbor_spins) const {
    const SpinSpace& space = spins();
    double total = 0.0;
    for (std::size_t i = 0; i < space.size(); ++i) {
        if (space.value(i) >= s) total += prob(space.value(i), neighbor_spins);
    }
    return total;
}

ClassCLocalRule::ClassCLocalRule(ClassCRule rule)
    : rule_(std::move(rule)), stencil_(rule_.kernel().stencil()) {
    weights_.reserve(stencil_.offsets().size());
    for (const Site& off : stencil_.offsets()) weights_.push_back(rule_.kernel().weight(off));
}

double ClassCLocalRule::prob(double s, std::span<const double> neighbor_spins) const {
    if (neighbor_spins.size() != weights_.size())
        throw Error("neighborhood value count mismatch in local rule");
    double field = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) field += weights_[i] * neighbor_spins[i];
    return rule_.update_prob(s, field);
}

double cumulative_g(const ClassCRule& rule, double s, double field) {
    if (s <= rule.spins().min()) return 1.0;
    return rule.plus_prob(field);
}

bool check_attractive(const ClassCRule& rule) {
    return rule.attractive();
}

bool check_attractive_bruteforce(const LocalRule& rule) {
    const SpinSpace& space = rule.spins();
    const std::size_t m = rule.neighborhood().offsets().size();
    const std::size_t states = space.size();
    double configs = 1.0;
    for (std::size_t i = 0; i < m; ++i) configs *= static_cast<double>(states);
    if (configs > (1 << 20)) throw BudgetError("neighborhood too large for exhaustive monotonicity check");

    // Walk every configuration; raising one site to the next spin value gives
    // a covering pair, and monotonicity along covers implies it globally.
    std::vector<std::size_t> digits(m, 0);
    std::vector<double> lo(m), hi(m);
    const std::size_t total = static_cast<std::size_t>(configs);
    for (std::size_t it = 0; it < total; ++it) {
        for (std::size_t i = 0; i < m; ++i) lo[i] = space.value(digits[i]);
        for (std::size_t pos = 0; pos < m; ++pos) {
            if (digits[pos] + 1 >= states) continue;
            hi = lo;
            hi[pos] = space.value(digits[pos] + 1);
            for (std::size_t si = 0; si < states; ++si) {
                const double s = space.value(si);
                if (rule.cumulative(s, lo) > rule.cumulative(s, hi) + 1e-12) return false;
            }
        }
        // increment mixed-radix counter
        for (std::size_t i = 0; i < m; ++i) {
            if (++digits[i] < states) break;
            digits[i] = 0;
        }
        if (m == 0) break;
    }
    return true;
}

double dv_sum(const ClassCRule& rule) {
    const auto& entries = rule.kernel().entries();
    const std::size_t m = entries.size();
    if (m == 0) return 0.0;
    if (m > 20) throw BudgetError("kernel support too large for exhaustive DV sum");
    const double beta = rule.beta();
    std::vector<double> gamma(m, 0.0);
    for (std::uint64_t mask = 0; mask < (1ULL << m); ++mask) {
        double field = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            field += ((mask >> j) & 1) ? entries[j].second : -entries[j].second;
        const double t0 = std::tanh(beta * field);
        for (std::size_t j = 0; j < m; ++j) {
            const double sj = ((mask >> j) & 1) ? 1.0 : -1.0;
            const double flipped = field - 2.0 * sj * entries[j].second;
            const double tv = 0.5 * std::abs(t0 - std::tanh(beta * flipped));
            gamma[j] = std::max(gamma[j], tv);
        }
    }
    double sum = 0.0;
    for (double g : gamma) sum += g;
    return sum;
}

double dv_threshold(const InteractionKernel& kernel, double tol) {
    auto dv = [&](double beta) { return dv_sum(ClassCRule(beta, kernel)); };
    double hi = 1.0;
    while (dv(hi) < 1.0) {
        hi *= 2.0;
        if (hi > 256.0) throw Error("DV sum never reaches 1 for this kernel");
    }
    double lo = 0.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (dv(mid) < 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace pcamix
