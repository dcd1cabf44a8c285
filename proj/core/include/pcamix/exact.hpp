#pragma once

#include "pcamix/coupling.hpp"
#include "pcamix/dynamics.hpp"
#include "pcamix/rule.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace pcamix {

struct EnumerationBudget {
    std::size_t max_sites = 16;      // measures: 2^16 configurations
    std::size_t max_matrix_sites = 12; // dense transition matrices
};

// Exact probability vector over {-1,+1}^Lambda indexed by configuration rank
// (bit pattern in the region's lexicographic site order, bit set <=> +1).
class MeasureTable {
public:
    MeasureTable(BoxRegion region, std::vector<double> probs);

    const BoxRegion& region() const { return region_; }
    std::size_t sites() const { return region_.size(); }
    std::uint64_t configurations() const { return probs_.size(); }
    double prob(std::uint64_t rank) const { return probs_[rank]; }
    const std::vector<double>& probs() const { return probs_; }

    double spin_of(std::uint64_t rank, std::size_t site_index) const {
        return ((rank >> site_index) & 1) ? 1.0 : -1.0;
    }

    // Image under the global spin flip; exact entry permutation.
    MeasureTable flipped() const;

    void write_binary(std::ostream& os) const;
    void write_csv(std::ostream& os) const; // regions of at most 8 sites

private:
    BoxRegion region_;
    std::vector<double> probs_;
};

// Raw contents of a measure-table file; the region can only be rebuilt for
// origin-centred balls, which is what the exporter emits.
struct MeasureTableFile {
    std::uint32_t dim = 0;
    std::uint32_t l_or_size = 0;
    std::uint32_t spin_space_id = 0;
    std::vector<double> values;

    static MeasureTableFile read(std::istream& is); // validates magic and normalization
    MeasureTable as_ball_table() const;
};

// The multibody potential canonically attached to a tanh rule:
// phi_{U_k}(sigma) = -log cosh(beta sum_j K(k-j) sigma_j), zero elsewhere.
struct PotentialPhi {
    double beta = 0.0;
    InteractionKernel kernel;

    static PotentialPhi of(const ClassCRule& rule) { return {rule.beta(), rule.kernel()}; }
    double plaquette_energy(const Site& k, const ComposedSpins& spins) const;
};

// Exact reversible measure of P_Lambda^tau:
// nu(sigma) prop prod_k cosh(beta sum_j K(k-j) sigma~_j) exp(beta sigma_k b_k),
// sigma~ = sigma_Lambda tau_Lambda^c, b_k the boundary part of the field.
// Accumulated in log domain and normalized with an order-stable sum.
MeasureTable nu_table(const ClassCRule& rule, const BoxRegion& region,
                      const BoundaryCondition& tau, const EnumerationBudget& budget = {},
                      int threads = 0);

// Finite-volume Gibbs measure of the potential: energy sums plaquettes with
// U_k intersecting the region, boundary spins frozen to tau.
MeasureTable gibbs_table(const PotentialPhi& potential, const BoxRegion& region,
                         const BoundaryCondition& tau, const EnumerationBudget& budget = {},
                         int threads = 0);

// Dense synchronous transition kernel P[eta -> sigma] = prod_k p_k(sigma_k | eta~).
class TransitionMatrix {
public:
    TransitionMatrix(BoxRegion region, std::vector<double> entries);
    const BoxRegion& region() const { return region_; }
    std::uint64_t states() const { return states_; }
    double prob(std::uint64_t from, std::uint64_t to) const {
        return entries_[from * states_ + to];
    }
    const std::vector<double>& entries() const { return entries_; }

private:
    BoxRegion region_;
    std::uint64_t states_ = 0;
    std::vector<double> entries_;
};

TransitionMatrix transition_matrix(const ClassCRule& rule, const BoxRegion& region,
                                   const BoundaryCondition& tau,
                                   const EnumerationBudget& budget = {}, int threads = 0);

// Max over configuration pairs of |nu(a) P(a,b) - nu(b) P(b,a)|. Full sweep
// for at most `full_sweep_sites` sites, otherwise `pair_samples` random pairs.
double check_detailed_balance(const MeasureTable& table, const TransitionMatrix& matrix,
                              std::size_t full_sweep_sites = 6,
                              std::uint64_t pair_samples = 1'000'000,
                              std::uint64_t sample_seed = 0x9e3779b97f4a7c15ULL,
                              int threads = 0);

// Conditional of `joint` on `sub` given the configuration of the remaining
// sites encoded by `cond_rank` (bits in the lexicographic order of the
// complement within joint's region).
MeasureTable conditional_table(const MeasureTable& joint, const BoxRegion& sub,
                               std::uint64_t cond_rank);

// Consistency of the reversible measure with the finite-volume Gibbs
// conditionals: for every conditioning on outer \ inner, compares the
// conditional of nu_outer with the Gibbs table on inner under the composite
// boundary. Requires dist(inner, outer^c) > kernel range.
double check_gibbs_consistency(const ClassCRule& rule, const BoxRegion& inner,
                               const BoxRegion& outer, const BoundaryCondition& tau,
                               const EnumerationBudget& budget = {}, int threads = 0);

double magnetization(const MeasureTable& table, const Site& site);

enum class GapMethod { Exact, MonteCarlo };

struct GapResult {
    double value = 0.0;
    double ci_halfwidth = 0.0; // zero for exact evaluation
    GapMethod method = GapMethod::Exact;
    std::uint32_t horizon = 0;     // MC only
    double bias_diagnostic = 0.0;  // MC only: estimate at horizon/2 minus at horizon
};

struct GapOptions {
    EnumerationBudget budget;
    bool allow_mc = false;
    std::uint64_t mc_samples = 100'000;
    std::uint32_t mc_horizon = 0; // 0 -> heuristic from L
    RandomnessKey key;
    int threads = 0;
};

// Boundary-influence gap of the stationary measure on B_L:
// gap(L) = E_{nu^+}[sigma_0] - E_{nu^-}[sigma_0]. Exact by enumeration within
// budget; optionally estimated by the extremal coupled pair run to a horizon,
// which upper-bounds the gap with a reported bias diagnostic.
GapResult gap_a(const ClassCRule& rule, int box_radius, const GapOptions& options = {});

// Same gap under the finite-volume Gibbs measures of the potential.
GapResult wm_gap(const PotentialPhi& potential, int box_radius,
                 const EnumerationBudget& budget = {}, int threads = 0);

enum class OrderCheckMode { ExactUpsets, Heuristic };

struct OrderCheckResult {
    bool ordered = false;
    OrderCheckMode mode = OrderCheckMode::ExactUpsets;
    double worst_violation = 0.0; // max over test sets/functions of E_lo - E_hi
};

// Stochastic order lo <= hi. Exact for regions of at most 4 sites by checking
// every up-set of the configuration lattice; larger regions use a declared
// family of increasing test functions (single sites, pair indicators, all-plus).
OrderCheckResult stochastic_order(const MeasureTable& lo, const MeasureTable& hi);

// All upward-closed subsets of {0,1}^nbits as bitmasks over configurations;
// nbits <= 4 (Dedekind growth makes 5 pointless here). Cached.
const std::vector<std::uint32_t>& cube_upsets(int nbits);

} // namespace pcamix
