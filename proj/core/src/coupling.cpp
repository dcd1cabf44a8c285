#include "pcamix/coupling.hpp"

#include "pcamix/errors.hpp"
#include "pcamix/parallel.hpp"
#include "pcamix/util.hpp"

#include <cmath>
#include <ostream>

namespace pcamix {

CoupledDynamics::CoupledDynamics(const ClassCRule& rule, const BoxRegion& region,
                                 std::vector<BoundaryCondition> boundaries)
    : region_(region) {
    if (boundaries.size() < 2 || boundaries.size() > 4)
        throw Error("coupled dynamics supports 2 to 4 replicas");
    if (!rule.attractive())
        throw Error("monotone coupling requires an attractive rule (non-negative kernel)");
    const BoxRegion shell = collar(region, rule.kernel().stencil());
    for (std::size_t r = 1; r < boundaries.size(); ++r) {
        if (!BoundaryCondition::leq_on(boundaries[r - 1], boundaries[r], shell))
            throw Error("coupled boundary conditions must be ordered tau_1 <= ... <= tau_N");
    }
    dynamics_.reserve(boundaries.size());
    for (auto& bc : boundaries) dynamics_.emplace_back(rule, region, std::move(bc));
}

CouplingState::CouplingState(std::shared_ptr<const CoupledDynamics> dynamics,
                             std::vector<Configuration> initial, RandomnessKey key)
    : dynamics_(std::move(dynamics)), configs_(std::move(initial)), key_(key) {
    if (configs_.size() != dynamics_->replicas())
        throw Error("one initial configuration per replica required");
    for (const Configuration& c : configs_) {
        if (!(c.region() == dynamics_->region()))
            throw RegionMismatchError("coupling replicas live on incompatible regions");
    }
    for (std::size_t r = 1; r < configs_.size(); ++r) {
        if (!configs_[r - 1].below(configs_[r]))
            throw Error("initial coupling configurations must be ordered");
    }
    buffers_.assign(configs_.size(), Configuration(dynamics_->region(), false));
}

void CouplingState::advance() {
    ++time_;
    for (std::size_t r = 0; r < configs_.size(); ++r)
        dynamics_->dynamics(r).step_into(configs_[r], buffers_[r], key_, time_);
    configs_.swap(buffers_);
    if (!ordered())
        throw OrderViolationError("coupled replicas lost componentwise order at t=" +
                                  std::to_string(time_));
}

bool CouplingState::ordered() const {
    for (std::size_t r = 1; r < configs_.size(); ++r) {
        if (!configs_[r - 1].below(configs_[r])) return false;
    }
    return true;
}

bool CouplingState::coalesced() const {
    for (std::size_t r = 1; r < configs_.size(); ++r) {
        if (!(configs_[r] == configs_[0])) return false;
    }
    return true;
}

RhoEstimate wilson_estimate(std::uint64_t hits, std::uint64_t samples, std::uint32_t n) {
    if (samples == 0) throw Error("Wilson estimate needs samples >= 1");
    const double z = 1.959963984540054; // 97.5% normal quantile
    const double nn = static_cast<double>(samples);
    const double p = static_cast<double>(hits) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double spread =
        z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    const double lo = std::max(0.0, center - spread);
    const double hi = std::min(1.0, center + spread);
    RhoEstimate est;
    est.n = n;
    est.p_hat = p;
    est.ci_halfwidth = std::max(hi - p, p - lo);
    est.samples = samples;
    return est;
}

namespace {

std::shared_ptr<const CoupledDynamics> extremal_pair(const ClassCRule& rule,
                                                     const BoxRegion& region) {
    std::vector<BoundaryCondition> bcs;
    bcs.push_back(BoundaryCondition::all_minus());
    bcs.push_back(BoundaryCondition::all_plus());
    return std::make_shared<CoupledDynamics>(rule, region, std::move(bcs));
}

void require_cone(const ClassCRule& rule, const BoxRegion& region, std::uint32_t n) {
    const BoxRegion cone = dependence_cone(BoxRegion::ball(rule.dim(), 0),
                                           static_cast<int>(n), rule.kernel().stencil());
    if (!cone.is_subset_of(region))
        throw RegionTooSmallError("region does not contain the horizon-" + std::to_string(n) +
                                  " dependence cone of the origin; need radius >= " +
                                  std::to_string(static_cast<int>(n) * rule.range()));
}

} // namespace

std::vector<std::uint8_t> rho_outcomes(const ClassCRule& rule, const BoxRegion& region,
                                       std::uint32_t n, std::uint64_t samples,
                                       const RandomnessKey& key, int threads) {
    if (samples < 1) throw Error("estimate_rho needs samples >= 1");
    require_cone(rule, region, n);
    const auto pair = extremal_pair(rule, region);
    const std::size_t origin = region.index_of(Site::origin(rule.dim()));
    std::vector<std::uint8_t> out(samples, 0);
    parallel_for(samples, threads, [&](std::uint64_t s) {
        CouplingState state(pair,
                            {Configuration::all_minus(region), Configuration::all_plus(region)},
                            key.with_replica(static_cast<std::uint32_t>(s)));
        for (std::uint32_t t = 0; t < n; ++t) state.advance();
        out[s] = state.replica(0).plus(origin) != state.replica(1).plus(origin) ? 1 : 0;
    });
    return out;
}

RhoEstimate estimate_rho(const ClassCRule& rule, const BoxRegion& region, std::uint32_t n,
                         std::uint64_t samples, const RandomnessKey& key, int threads) {
    const auto outcomes = rho_outcomes(rule, region, n, samples, key, threads);
    std::uint64_t hits = 0;
    for (std::uint8_t o : outcomes) hits += o;
    return wilson_estimate(hits, samples, n);
}

bool sandwich_check(const ClassCRule& rule, const BoxRegion& region,
                    const BoundaryCondition& middle_tau, const Configuration& eta,
                    std::uint32_t n, std::uint64_t samples, const RandomnessKey& key,
                    int threads) {
    std::vector<BoundaryCondition> bcs;
    bcs.push_back(BoundaryCondition::all_minus());
    bcs.push_back(middle_tau);
    bcs.push_back(BoundaryCondition::all_plus());
    const auto triple = std::make_shared<CoupledDynamics>(rule, region, std::move(bcs));
    std::vector<std::uint8_t> ok(samples, 0);
    parallel_for(samples, threads, [&](std::uint64_t s) {
        CouplingState state(triple,
                            {Configuration::all_minus(region), eta, Configuration::all_plus(region)},
                            key.with_replica(static_cast<std::uint32_t>(s)));
        bool sample_ok = true;
        try {
            for (std::uint32_t t = 0; t < n; ++t) state.advance(); // advance() re-checks order
        } catch (const OrderViolationError&) {
            sample_ok = false;
        }
        ok[s] = sample_ok ? 1 : 0;
    });
    for (std::uint8_t o : ok) {
        if (!o) return false;
    }
    return true;
}

ErgodicityBoundReport ergodicity_bound_check(const ClassCRule& rule, const BoxRegion& region,
                                             const LocalObservable& f, std::uint32_t n,
                                             std::uint64_t samples, const RandomnessKey& key,
                                             int threads) {
    require_cone(rule, region, n);
    if (!f.support().is_subset_of(region))
        throw RegionMismatchError("observable support outside coupled region");
    const auto pair = extremal_pair(rule, region);
    const std::size_t origin = region.index_of(Site::origin(rule.dim()));
    std::vector<double> diffs(samples);
    std::vector<std::uint8_t> disagree(samples);
    parallel_for(samples, threads, [&](std::uint64_t s) {
        CouplingState state(pair,
                            {Configuration::all_minus(region), Configuration::all_plus(region)},
                            key.with_replica(static_cast<std::uint32_t>(s)));
        for (std::uint32_t t = 0; t < n; ++t) state.advance();
        diffs[s] = f.eval(state.replica(1)) - f.eval(state.replica(0));
        disagree[s] = state.replica(0).plus(origin) != state.replica(1).plus(origin) ? 1 : 0;
    });
    double mean = 0.0;
    for (double d : diffs) mean += d;
    mean /= static_cast<double>(samples);
    double ss = 0.0;
    for (double d : diffs) ss += (d - mean) * (d - mean);
    const double se = samples > 1
                          ? std::sqrt(ss / (static_cast<double>(samples) *
                                            (static_cast<double>(samples) - 1.0)))
                          : 0.0;
    std::uint64_t hits = 0;
    for (std::uint8_t o : disagree) hits += o;

    ErgodicityBoundReport rep;
    rep.lhs = std::abs(mean);
    rep.lhs_std_error = se;
    rep.rho = wilson_estimate(hits, samples, n);
    rep.seminorm = f.seminorm();
    rep.bound = 2.0 * rep.seminorm * rep.rho.p_hat;
    rep.slack = 4.0 * se + 2.0 * rep.seminorm * rep.rho.ci_halfwidth;
    rep.holds = rep.lhs <= rep.bound + rep.slack;
    return rep;
}

void write_rho_csv(std::ostream& os, const std::vector<RhoEstimate>& estimates, double beta,
                   int box_radius, std::uint64_t seed) {
    os << "n,p_hat,ci_halfwidth,samples,beta,L,seed\n";
    for (const RhoEstimate& e : estimates) {
        os << e.n << ',' << format_g17(e.p_hat) << ',' << format_g17(e.ci_halfwidth) << ','
           << e.samples << ',' << format_g17(beta) << ',' << box_radius << ',' << seed << '\n';
    }
}

} // namespace pcamix
