#pragma once

#include "pcamix/lattice.hpp"
#include "pcamix/random.hpp"
#include "pcamix/rule.hpp"

#include <cstdint>
#include <vector>

namespace pcamix {

// Binary spin assignment on a region, bit-packed in the region's site order
// (bit set <=> spin +1). Rank is the bit pattern itself for |region| <= 64.
class Configuration {
public:
    Configuration(BoxRegion region, bool all_plus);
    static Configuration all_plus(BoxRegion region) { return Configuration(std::move(region), true); }
    static Configuration all_minus(BoxRegion region) { return Configuration(std::move(region), false); }
    static Configuration from_rank(BoxRegion region, std::uint64_t rank);
    static Configuration from_spins(BoxRegion region, const std::vector<double>& spins);
    // Independent fair bits per site, addressed through the key at time t.
    static Configuration random(BoxRegion region, const RandomnessKey& key, std::uint32_t t = 0);

    const BoxRegion& region() const { return region_; }
    std::size_t size() const { return region_.size(); }

    bool plus(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }
    void set(std::size_t i, bool plus_value);
    double spin(std::size_t i) const { return plus(i) ? 1.0 : -1.0; }
    double spin_at(const Site& s) const { return spin(region_.index_of(s)); }

    std::uint64_t rank() const; // throws for regions larger than 64 sites

    // Componentwise order: every spin of *this <= the corresponding spin of other.
    bool below(const Configuration& other) const;

    Configuration translated(const Site& by) const;
    Configuration flipped() const; // global spin flip

    bool operator==(const Configuration& other) const;
    const std::vector<std::uint64_t>& words() const { return words_; }

private:
    BoxRegion region_;
    std::vector<std::uint64_t> words_;
};

// Frozen spins on the complement of the simulated region.
class BoundaryCondition {
public:
    enum class Kind { AllPlus, AllMinus, Explicit };

    static BoundaryCondition all_plus();
    static BoundaryCondition all_minus();
    // `values` lives on the collar region the caller intends to cover.
    static BoundaryCondition explicit_values(Configuration values);
    // Fair random spins on the given collar, reproducible from the seed.
    static BoundaryCondition random_on(const BoxRegion& collar, std::uint64_t seed);

    Kind kind() const { return kind_; }
    bool is_extreme() const { return kind_ != Kind::Explicit; }
    double spin_at(const Site& s) const; // throws MissingSpinError when uncovered
    const Configuration* values() const { return kind_ == Kind::Explicit ? &values_[0] : nullptr; }

    // tau1 <= tau2 sitewise over `probe` (used to validate ordered couplings).
    static bool leq_on(const BoundaryCondition& a, const BoundaryCondition& b, const BoxRegion& probe);

private:
    BoundaryCondition(Kind kind, std::vector<Configuration> values)
        : kind_(kind), values_(std::move(values)) {}
    Kind kind_;
    std::vector<Configuration> values_; // empty unless Explicit
};

// sigma_Lambda tau_Lambda^c read view.
class ComposedSpins {
public:
    ComposedSpins(const Configuration& interior, const BoundaryCondition& boundary)
        : interior_(interior), boundary_(boundary) {}
    double at(const Site& s) const;

private:
    const Configuration& interior_;
    const BoundaryCondition& boundary_;
};

// Raw local field m = sum_j K(j) eta_{k+j} (before the beta factor).
double local_field(const ClassCRule& rule, const Site& k, const ComposedSpins& eta);

// Local function with finite support: value table indexed by the rank of the
// restriction to the support. Carries Var_k(f) and |||f||| = sum_k Var_k(f).
class LocalObservable {
public:
    LocalObservable(BoxRegion support, std::vector<double> table);
    static LocalObservable spin_at_origin(int dim); // f(sigma) = sigma_0

    const BoxRegion& support() const { return support_; }
    double eval(const Configuration& cfg) const; // support must lie inside cfg's region
    double var_at(std::size_t support_index) const { return vars_[support_index]; }
    double seminorm() const { return seminorm_; }

private:
    BoxRegion support_;
    std::vector<double> table_;
    std::vector<double> vars_;
    double seminorm_ = 0.0;
};

// Synchronous finite-volume dynamics P_Lambda^tau for a fixed rule, region and
// boundary condition. All site tables are precomputed; the object is immutable
// and safe to share across threads.
class FiniteVolumeDynamics {
public:
    FiniteVolumeDynamics(ClassCRule rule, BoxRegion region, BoundaryCondition boundary);

    const ClassCRule& rule() const { return rule_; }
    const BoxRegion& region() const { return region_; }
    const BoundaryCondition& boundary() const { return boundary_; }

    // One synchronous step at time t: site k becomes +1 iff
    // U(key, t, k) < p_k(+1 | previous configuration + boundary).
    void step_into(const Configuration& from, Configuration& to, const RandomnessKey& key,
                   std::uint32_t t) const;
    Configuration step(const Configuration& from, const RandomnessKey& key, std::uint32_t t) const;
    // n steps with time coordinates 1..n (t=0 is the initial condition).
    Configuration run(Configuration state, const RandomnessKey& key, std::uint32_t steps) const;

    double plus_prob_at(const Configuration& cfg, std::size_t i) const;
    double field_at(const Configuration& cfg, std::size_t i) const;

private:
    ClassCRule rule_;
    BoxRegion region_;
    BoundaryCondition boundary_;
    // flattened per-site interior neighbor lists
    std::vector<std::uint32_t> nbr_begin_;  // size + 1
    std::vector<std::uint32_t> nbr_index_;
    std::vector<double> nbr_weight_;
    std::vector<double> boundary_field_;
    // per-site threshold tables over neighbor sign patterns (degree <= 10)
    std::vector<std::size_t> table_begin_;  // npos when a site has no table
    std::vector<double> thresholds_;
    std::vector<std::uint64_t> site_code_;
    bool keyed_origin_ = false;
};

Configuration step(const ClassCRule& rule, const BoxRegion& region, const BoundaryCondition& tau,
                   const Configuration& sigma, const RandomnessKey& key, std::uint32_t t);

Configuration run(const ClassCRule& rule, const BoxRegion& region, const BoundaryCondition& tau,
                  Configuration sigma0, std::uint32_t steps, const RandomnessKey& key);

struct ObservableEstimate {
    double mean = 0.0;
    double std_error = 0.0; // standard error of the mean
    std::uint64_t samples = 0;
};

// Monte Carlo estimate of E f(omega(n)) over independent replicas; replica r
// uses key.with_replica(r). n = 0 evaluates f(sigma0) exactly.
ObservableEstimate estimate_observable(const ClassCRule& rule, const BoxRegion& region,
                                       const BoundaryCondition& tau, const Configuration& sigma0,
                                       std::uint32_t steps, const LocalObservable& f,
                                       std::uint64_t samples, const RandomnessKey& key,
                                       int threads = 0);

} // namespace pcamix
