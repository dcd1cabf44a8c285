#pragma once

#include "pcamix/dynamics.hpp"

#include <memory>
#include <vector>

namespace pcamix {

// N finite-volume dynamics on one region with ordered boundary conditions,
// advanced in lockstep with one shared uniform per (time, site). For an
// attractive rule this preserves componentwise order between ordered replicas
// pathwise; N up to 4 covers every use in the recursion arguments.
class CoupledDynamics {
public:
    CoupledDynamics(const ClassCRule& rule, const BoxRegion& region,
                    std::vector<BoundaryCondition> boundaries);

    const BoxRegion& region() const { return region_; }
    std::size_t replicas() const { return dynamics_.size(); }
    const FiniteVolumeDynamics& dynamics(std::size_t r) const { return dynamics_[r]; }

private:
    BoxRegion region_;
    std::vector<FiniteVolumeDynamics> dynamics_;
};

// Mutable coupled state: one configuration per replica plus the shared key.
class CouplingState {
public:
    CouplingState(std::shared_ptr<const CoupledDynamics> dynamics,
                  std::vector<Configuration> initial, RandomnessKey key);

    // One shared-noise synchronous step; verifies the pathwise order
    // sigma^1 <= ... <= sigma^N afterwards and throws OrderViolationError
    // if it ever breaks (it cannot, for an attractive rule — any throw is a bug).
    void advance();

    bool ordered() const;
    bool coalesced() const; // all replicas identical
    std::uint32_t time() const { return time_; }
    const Configuration& replica(std::size_t r) const { return configs_[r]; }
    std::size_t replicas() const { return configs_.size(); }

private:
    std::shared_ptr<const CoupledDynamics> dynamics_;
    std::vector<Configuration> configs_;
    std::vector<Configuration> buffers_;
    RandomnessKey key_;
    std::uint32_t time_ = 0;
};

struct RhoEstimate {
    std::uint32_t n = 0;
    double p_hat = 0.0;         // raw disagreement fraction at the origin
    double ci_halfwidth = 0.0;  // 95% Wilson half-width (conservative side)
    std::uint64_t samples = 0;
};

// 95% Wilson score interval for a binomial proportion; the half-width is the
// larger distance from k/n to either interval end, so p_hat +- ci covers it.
RhoEstimate wilson_estimate(std::uint64_t hits, std::uint64_t samples, std::uint32_t n);

// rho(n): probability that the coupled pair started from (all-minus, all-plus)
// disagrees at the origin at time n. Requires the region to contain the
// n-step dependence cone of the origin, which makes the finite-volume run
// exact in law; boundary conditions are the extremal pair.
RhoEstimate estimate_rho(const ClassCRule& rule, const BoxRegion& region, std::uint32_t n,
                         std::uint64_t samples, const RandomnessKey& key, int threads = 0);

// Per-sample disagreement flags behind estimate_rho; exposed for the
// cone-independence checks which compare outcomes bit by bit across regions.
std::vector<std::uint8_t> rho_outcomes(const ClassCRule& rule, const BoxRegion& region,
                                       std::uint32_t n, std::uint64_t samples,
                                       const RandomnessKey& key, int threads = 0);

// Runs the 3-replica coupling (P^-, P^tau, P^+) from (minus, eta, plus) and
// reports whether componentwise order held after every one of the n steps,
// for every sample.
bool sandwich_check(const ClassCRule& rule, const BoxRegion& region,
                    const BoundaryCondition& middle_tau, const Configuration& eta,
                    std::uint32_t n, std::uint64_t samples, const RandomnessKey& key,
                    int threads = 0);

struct ErgodicityBoundReport {
    double lhs = 0.0;        // |E f(omega^+(n)) - E f(omega^-(n))|
    double lhs_std_error = 0.0;
    RhoEstimate rho;
    double seminorm = 0.0;   // |||f|||
    double bound = 0.0;      // 2 |||f||| rho_hat
    double slack = 0.0;      // 4 lhs stderr + 2 |||f||| rho ci
    bool holds = false;
};

// Monte Carlo check of the ergodicity control |E f - nu(f)| <= 2 |||f||| rho(n)
// via the extremal coupled pair; both sides come from the same coupled runs.
ErgodicityBoundReport ergodicity_bound_check(const ClassCRule& rule, const BoxRegion& region,
                                             const LocalObservable& f, std::uint32_t n,
                                             std::uint64_t samples, const RandomnessKey& key,
                                             int threads = 0);

// CSV rows "n,p_hat,ci_halfwidth,samples,beta,L,seed".
void write_rho_csv(std::ostream& os, const std::vector<RhoEstimate>& estimates, double beta,
                   int box_radius, std::uint64_t seed);

} // namespace pcamix
