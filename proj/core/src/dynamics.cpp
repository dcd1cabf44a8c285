#include "pcamix/dynamics.hpp"

#include "pcamix/errors.hpp"
#include "pcamix/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace pcamix {

namespace {
constexpr std::size_t kNoTable = std::numeric_limits<std::size_t>::max();
constexpr std::size_t kMaxTableDegree = 10;
} // namespace

Configuration::Configuration(BoxRegion region, bool all_plus) : region_(std::move(region)) {
    const std::size_t n = region_.size();
    words_.assign((n + 63) / 64, all_plus ? ~0ULL : 0ULL);
    if (all_plus && n % 64 != 0) words_.back() &= (1ULL << (n % 64)) - 1;
}

Configuration Configuration::from_rank(BoxRegion region, std::uint64_t rank) {
    if (region.size() > 64) throw Error("rank indexing needs a region of at most 64 sites");
    Configuration c(std::move(region), false);
    if (c.size() < 64 && rank >> c.size())
        throw Error("configuration rank out of range");
    c.words_[0] = rank;
    return c;
}

Configuration Configuration::from_spins(BoxRegion region, const std::vector<double>& spins) {
    if (spins.size() != region.size()) throw Error("spin vector length does not match region");
    Configuration c(std::move(region), false);
    for (std::size_t i = 0; i < spins.size(); ++i) {
        if (spins[i] != 1.0 && spins[i] != -1.0) throw Error("binary configurations take spins -1/+1");
        c.set(i, spins[i] > 0.0);
    }
    return c;
}

Configuration Configuration::random(BoxRegion region, const RandomnessKey& key, std::uint32_t t) {
    Configuration c(std::move(region), false);
    for (std::size_t i = 0; i < c.size(); ++i) {
        c.set(i, uniform01(key, t, c.region_.site(i)) < 0.5);
    }
    return c;
}

void Configuration::set(std::size_t i, bool plus_value) {
    const std::uint64_t bit = 1ULL << (i & 63);
    if (plus_value)
        words_[i >> 6] |= bit;
    else
        words_[i >> 6] &= ~bit;
}

std::uint64_t Configuration::rank() const {
    if (size() > 64) throw Error("rank indexing needs a region of at most 64 sites");
    return words_.empty() ? 0 : words_[0];
}

bool Configuration::below(const Configuration& other) const {
    if (!(region_ == other.region_)) throw RegionMismatchError("order compare across regions");
    for (std::size_t w = 0; w < words_.size(); ++w) {
        if (words_[w] & ~other.words_[w]) return false;
    }
    return true;
}

Configuration Configuration::translated(const Site& by) const {
    Configuration c(region_.translated(by), false);
    c.words_ = words_; // site order is translation invariant under the lexicographic order
    return c;
}

Configuration Configuration::flipped() const {
    Configuration c(region_, false);
    for (std::size_t w = 0; w < words_.size(); ++w) c.words_[w] = ~words_[w];
    const std::size_t n = size();
    if (n % 64 != 0) c.words_.back() &= (1ULL << (n % 64)) - 1;
    return c;
}

bool Configuration::operator==(const Configuration& other) const {
    return region_ == other.region_ && words_ == other.words_;
}

BoundaryCondition BoundaryCondition::all_plus() {
    return BoundaryCondition(Kind::AllPlus, {});
}

BoundaryCondition BoundaryCondition::all_minus() {
    return BoundaryCondition(Kind::AllMinus, {});
}

BoundaryCondition BoundaryCondition::explicit_values(Configuration values) {
    std::vector<Configuration> v;
    v.push_back(std::move(values));
    return BoundaryCondition(Kind::Explicit, std::move(v));
}

BoundaryCondition BoundaryCondition::random_on(const BoxRegion& collar, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    Configuration values(collar, false);
    for (std::size_t i = 0; i < collar.size(); ++i) values.set(i, (gen() & 1) != 0);
    return explicit_values(std::move(values));
}

double BoundaryCondition::spin_at(const Site& s) const {
    switch (kind_) {
    case Kind::AllPlus: return 1.0;
    case Kind::AllMinus: return -1.0;
    case Kind::Explicit: {
        const auto idx = values_[0].region().try_index(s);
        if (!idx) throw MissingSpinError("boundary condition does not cover site " + s.to_string());
        return values_[0].spin(*idx);
    }
    }
    throw Error("unreachable boundary kind");
}

bool BoundaryCondition::leq_on(const BoundaryCondition& a, const BoundaryCondition& b,
                               const BoxRegion& probe) {
    if (a.kind() == Kind::AllMinus || b.kind() == Kind::AllPlus) return true;
    for (const Site& s : probe.sites()) {
        if (a.spin_at(s) > b.spin_at(s)) return false;
    }
    return true;
}

double ComposedSpins::at(const Site& s) const {
    if (const auto idx = interior_.region().try_index(s)) return interior_.spin(*idx);
    return boundary_.spin_at(s);
}

double local_field(const ClassCRule& rule, const Site& k, const ComposedSpins& eta) {
    double field = 0.0;
    for (const auto& [off, w] : rule.kernel().entries()) field += w * eta.at(k + off);
    return field;
}

LocalObservable::LocalObservable(BoxRegion support, std::vector<double> table)
    : support_(std::move(support)), table_(std::move(table)) {
    const std::size_t n = support_.size();
    if (n > 20) throw BudgetError("observable support too large to tabulate");
    if (table_.size() != (1ULL << n)) throw Error("observable table size must be 2^|support|");
    vars_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double v = 0.0;
        for (std::size_t r = 0; r < table_.size(); ++r)
            v = std::max(v, std::abs(table_[r] - table_[r ^ (1ULL << i)]));
        vars_[i] = v;
        seminorm_ += v;
    }
}

LocalObservable LocalObservable::spin_at_origin(int dim) {
    return LocalObservable(BoxRegion::ball(dim, 0), {-1.0, +1.0});
}

double LocalObservable::eval(const Configuration& cfg) const {
    std::uint64_t r = 0;
    for (std::size_t i = 0; i < support_.size(); ++i) {
        if (cfg.plus(cfg.region().index_of(support_.site(i)))) r |= 1ULL << i;
    }
    return table_[r];
}

FiniteVolumeDynamics::FiniteVolumeDynamics(ClassCRule rule, BoxRegion region,
                                           BoundaryCondition boundary)
    : rule_(std::move(rule)), region_(std::move(region)), boundary_(std::move(boundary)) {
    if (rule_.dim() != region_.dim()) throw RegionMismatchError("rule/region dimension mismatch");
    const std::size_t n = region_.size();
    const auto& entries = rule_.kernel().entries();
    nbr_begin_.assign(n + 1, 0);
    boundary_field_.assign(n, 0.0);
    table_begin_.assign(n, kNoTable);
    site_code_.reserve(n);

    for (std::size_t i = 0; i < n; ++i) {
        const Site& k = region_.site(i);
        site_code_.push_back(pack_site(k));
        for (const auto& [off, w] : entries) {
            const Site j = k + off;
            if (const auto idx = region_.try_index(j)) {
                nbr_index_.push_back(static_cast<std::uint32_t>(*idx));
                nbr_weight_.push_back(w);
            } else {
                // throws MissingSpinError when an explicit collar is incomplete
                boundary_field_[i] += w * boundary_.spin_at(j);
            }
        }
        nbr_begin_[i + 1] = static_cast<std::uint32_t>(nbr_index_.size());
    }

    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t deg = nbr_begin_[i + 1] - nbr_begin_[i];
        if (deg > kMaxTableDegree) continue;
        table_begin_[i] = thresholds_.size();
        const double* w = nbr_weight_.data() + nbr_begin_[i];
        for (std::uint64_t pat = 0; pat < (1ULL << deg); ++pat) {
            double field = boundary_field_[i];
            for (std::size_t b = 0; b < deg; ++b) field += ((pat >> b) & 1) ? w[b] : -w[b];
            thresholds_.push_back(rule_.plus_prob(field));
        }
    }
}

double FiniteVolumeDynamics::field_at(const Configuration& cfg, std::size_t i) const {
    double field = boundary_field_[i];
    for (std::uint32_t a = nbr_begin_[i]; a < nbr_begin_[i + 1]; ++a)
        field += cfg.plus(nbr_index_[a]) ? nbr_weight_[a] : -nbr_weight_[a];
    return field;
}

double FiniteVolumeDynamics::plus_prob_at(const Configuration& cfg, std::size_t i) const {
    return rule_.plus_prob(field_at(cfg, i));
}

void FiniteVolumeDynamics::step_into(const Configuration& from, Configuration& to,
                                     const RandomnessKey& key, std::uint32_t t) const {
    if (!(from.region() == region_) || !(to.region() == region_))
        throw RegionMismatchError("configuration lives on a different region than the dynamics");
    const bool shifted = key.origin.dim() != 0;
    const std::size_t n = region_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t code =
            shifted ? pack_site(region_.site(i), &key.origin) : site_code_[i];
        const double u = uniform01_from(key.seed, key.experiment, key.replica, t, code);
        double threshold;
        if (table_begin_[i] != kNoTable) {
            std::uint64_t pat = 0;
            for (std::uint32_t a = nbr_begin_[i], b = 0; a < nbr_begin_[i + 1]; ++a, ++b)
                pat |= static_cast<std::uint64_t>(from.plus(nbr_index_[a])) << b;
            threshold = thresholds_[table_begin_[i] + pat];
        } else {
            threshold = rule_.plus_prob(field_at(from, i));
        }
        to.set(i, u < threshold);
    }
}

Configuration FiniteVolumeDynamics::step(const Configuration& from, const RandomnessKey& key,
                                         std::uint32_t t) const {
    Configuration to(region_, false);
    step_into(from, to, key, t);
    return to;
}

Configuration FiniteVolumeDynamics::run(Configuration state, const RandomnessKey& key,
                                        std::uint32_t steps) const {
    Configuration buffer(region_, false);
    for (std::uint32_t t = 1; t <= steps; ++t) {
        step_into(state, buffer, key, t);
        std::swap(state, buffer);
    }
    return state;
}

Configuration step(const ClassCRule& rule, const BoxRegion& region, const BoundaryCondition& tau,
                   const Configuration& sigma, const RandomnessKey& key, std::uint32_t t) {
    return FiniteVolumeDynamics(rule, region, tau).step(sigma, key, t);
}

Configuration run(const ClassCRule& rule, const BoxRegion& region, const BoundaryCondition& tau,
                  Configuration sigma0, std::uint32_t steps, const RandomnessKey& key) {
    return FiniteVolumeDynamics(rule, region, tau).run(std::move(sigma0), key, steps);
}

ObservableEstimate estimate_observable(const ClassCRule& rule, const BoxRegion& region,
                                       const BoundaryCondition& tau, const Configuration& sigma0,
                                       std::uint32_t steps, const LocalObservable& f,
                                       std::uint64_t samples, const RandomnessKey& key,
                                       int threads) {
    if (samples < 1) throw Error("estimate_observable needs samples >= 1");
    if (!f.support().is_subset_of(region)) throw RegionMismatchError("observable support outside region");
    if (steps == 0) return {f.eval(sigma0), 0.0, samples};

    const FiniteVolumeDynamics dyn(rule, region, tau);
    std::vector<double> values(samples);
    parallel_for(samples, threads, [&](std::uint64_t s) {
        const Configuration out =
            dyn.run(sigma0, key.with_replica(static_cast<std::uint32_t>(s)), steps);
        values[s] = f.eval(out);
    });
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(samples);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double std_error =
        samples > 1 ? std::sqrt(ss / (static_cast<double>(samples) * (static_cast<double>(samples) - 1.0)))
                    : 0.0;
    return {mean, std_error, samples};
}

} // namespace pcamix
