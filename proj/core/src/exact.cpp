#include "pcamix/exact.hpp"

#include "pcamix/errors.hpp"
#include "pcamix/parallel.hpp"
#include "pcamix/util.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <set>

namespace pcamix {

namespace {

// log cosh(x) without overflow: |x| + log1p(e^{-2|x|}) - log 2.
double log_cosh(double x) {
    const double a = std::abs(x);
    return a + std::log1p(std::exp(-2.0 * a)) - 0.6931471805599453;
}

void check_budget(const BoxRegion& region, std::size_t max_sites, const char* what) {
    if (region.size() > max_sites)
        throw BudgetError(std::string(what) + ": region has " + std::to_string(region.size()) +
                          " sites, budget is " + std::to_string(max_sites));
}

// Per-factor interior neighbor lists and frozen boundary fields for a family
// of field terms sum_j K(j) sigma~_{k+j}, k running over `centers`.
struct FactorTable {
    std::vector<std::uint32_t> begin; // centers.size() + 1
    std::vector<std::uint32_t> index;
    std::vector<double> weight;
    std::vector<double> boundary;
};

FactorTable build_factors(const InteractionKernel& kernel, const std::vector<Site>& centers,
                          const BoxRegion& region, const BoundaryCondition& tau) {
    FactorTable t;
    t.begin.assign(centers.size() + 1, 0);
    t.boundary.assign(centers.size(), 0.0);
    for (std::size_t c = 0; c < centers.size(); ++c) {
        for (const auto& [off, w] : kernel.entries()) {
            const Site j = centers[c] + off;
            if (const auto idx = region.try_index(j)) {
                t.index.push_back(static_cast<std::uint32_t>(*idx));
                t.weight.push_back(w);
            } else {
                t.boundary[c] += w * tau.spin_at(j);
            }
        }
        t.begin[c + 1] = static_cast<std::uint32_t>(t.index.size());
    }
    return t;
}

double factor_field(const FactorTable& t, std::size_t c, std::uint64_t rank) {
    double field = t.boundary[c];
    for (std::uint32_t a = t.begin[c]; a < t.begin[c + 1]; ++a)
        field += ((rank >> t.index[a]) & 1) ? t.weight[a] : -t.weight[a];
    return field;
}

std::vector<double> normalize_log_weights(std::vector<double> logw, int threads) {
    double peak = logw[0];
    for (double lw : logw) peak = std::max(peak, lw);
    std::vector<double> w(logw.size());
    parallel_for(logw.size(), threads,
                 [&](std::uint64_t r) { w[r] = std::exp(logw[r] - peak); });
    const double total = stable_sum(w);
    for (double& x : w) x /= total;
    return w;
}

} // namespace

MeasureTable::MeasureTable(BoxRegion region, std::vector<double> probs)
    : region_(std::move(region)), probs_(std::move(probs)) {
    if (region_.size() > 20) throw BudgetError("measure table limited to 20 sites");
    if (probs_.size() != (1ULL << region_.size()))
        throw Error("measure table needs 2^|region| entries");
    double sum = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0)) throw Error("measure table entries must be non-negative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw Error("measure table does not normalize to 1");
}

MeasureTable MeasureTable::flipped() const {
    const std::uint64_t mask = probs_.size() - 1;
    std::vector<double> out(probs_.size());
    for (std::uint64_t r = 0; r < probs_.size(); ++r) out[r] = probs_[~r & mask];
    return MeasureTable(region_, std::move(out));
}

void MeasureTable::write_binary(std::ostream& os) const {
    const char magic[4] = {'P', 'C', 'M', 'T'};
    os.write(magic, 4);
    auto put_u32 = [&os](std::uint32_t v) {
        std::array<unsigned char, 4> b{static_cast<unsigned char>(v),
                                       static_cast<unsigned char>(v >> 8),
                                       static_cast<unsigned char>(v >> 16),
                                       static_cast<unsigned char>(v >> 24)};
        os.write(reinterpret_cast<const char*>(b.data()), 4);
    };
    put_u32(static_cast<std::uint32_t>(region_.dim()));
    put_u32(region_.is_origin_ball() ? static_cast<std::uint32_t>(region_.ball_radius())
                                     : static_cast<std::uint32_t>(region_.size()));
    put_u32(2); // binary spin space
    for (double p : probs_) {
        std::uint64_t bits;
        std::memcpy(&bits, &p, 8);
        std::array<unsigned char, 8> b;
        for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<unsigned char>(bits >> (8 * i));
        os.write(reinterpret_cast<const char*>(b.data()), 8);
    }
}

void MeasureTable::write_csv(std::ostream& os) const {
    if (region_.size() > 8) throw BudgetError("CSV export limited to 8 sites");
    os << "rank,spins,prob\n";
    for (std::uint64_t r = 0; r < probs_.size(); ++r) {
        os << r << ',';
        for (std::size_t i = 0; i < region_.size(); ++i) os << (((r >> i) & 1) ? '+' : '-');
        os << ',' << format_g17(probs_[r]) << '\n';
    }
}

MeasureTableFile MeasureTableFile::read(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "PCMT", 4) != 0)
        throw Error("not a measure table file (bad magic)");
    auto get_u32 = [&is]() {
        unsigned char b[4];
        is.read(reinterpret_cast<char*>(b), 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    };
    MeasureTableFile f;
    f.dim = get_u32();
    f.l_or_size = get_u32();
    f.spin_space_id = get_u32();
    if (!is) throw Error("truncated measure table header");
    if (f.spin_space_id != 2) throw Error("unsupported spin space id in measure table");
    double sum = 0.0;
    while (true) {
        unsigned char b[8];
        is.read(reinterpret_cast<char*>(b), 8);
        if (is.gcount() == 0) break;
        if (is.gcount() != 8) throw Error("truncated measure table payload");
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        double v;
        std::memcpy(&v, &bits, 8);
        if (!(v >= 0.0)) throw Error("corrupt measure table: negative entry");
        f.values.push_back(v);
        sum += v;
    }
    if (f.values.empty() || (f.values.size() & (f.values.size() - 1)) != 0)
        throw Error("corrupt measure table: entry count is not a power of two");
    if (std::abs(sum - 1.0) > 1e-12) throw Error("corrupt measure table: does not normalize");
    return f;
}

MeasureTable MeasureTableFile::as_ball_table() const {
    const BoxRegion region = BoxRegion::ball(static_cast<int>(dim), static_cast<int>(l_or_size));
    return MeasureTable(region, values);
}

double PotentialPhi::plaquette_energy(const Site& k, const ComposedSpins& spins) const {
    double field = 0.0;
    for (const auto& [off, w] : kernel.entries()) field += w * spins.at(k + off);
    return -log_cosh(beta * field);
}

MeasureTable nu_table(const ClassCRule& rule, const BoxRegion& region,
                      const BoundaryCondition& tau, const EnumerationBudget& budget,
                      int threads) {
    check_budget(region, budget.max_sites, "nu_table");
    const FactorTable factors = build_factors(rule.kernel(), region.sites(), region, tau);
    const double beta = rule.beta();
    const std::uint64_t nconf = 1ULL << region.size();
    std::vector<double> logw(nconf);
    parallel_for(nconf, threads, [&](std::uint64_t r) {
        double lw = 0.0;
        for (std::size_t c = 0; c < region.size(); ++c) {
            const double sigma_k = ((r >> c) & 1) ? 1.0 : -1.0;
            lw += log_cosh(beta * factor_field(factors, c, r)) +
                  beta * sigma_k * factors.boundary[c];
        }
        logw[r] = lw;
    });
    return MeasureTable(region, normalize_log_weights(std::move(logw), threads));
}

MeasureTable gibbs_table(const PotentialPhi& potential, const BoxRegion& region,
                         const BoundaryCondition& tau, const EnumerationBudget& budget,
                         int threads) {
    check_budget(region, budget.max_sites, "gibbs_table");
    // Plaquette centres with U_k intersecting the region; K symmetric.
    std::set<Site> centers_set;
    for (const Site& s : region.sites()) {
        for (const auto& [off, w] : potential.kernel.entries()) centers_set.insert(s + off);
    }
    const std::vector<Site> centers(centers_set.begin(), centers_set.end());
    const FactorTable factors = build_factors(potential.kernel, centers, region, tau);
    const double beta = potential.beta;
    const std::uint64_t nconf = 1ULL << region.size();
    std::vector<double> logw(nconf);
    parallel_for(nconf, threads, [&](std::uint64_t r) {
        double lw = 0.0; // -H
        for (std::size_t c = 0; c < centers.size(); ++c)
            lw += log_cosh(beta * factor_field(factors, c, r));
        logw[r] = lw;
    });
    return MeasureTable(region, normalize_log_weights(std::move(logw), threads));
}

TransitionMatrix::TransitionMatrix(BoxRegion region, std::vector<double> entries)
    : region_(std::move(region)), states_(1ULL << region_.size()), entries_(std::move(entries)) {
    if (entries_.size() != states_ * states_) throw Error("transition matrix size mismatch");
}

TransitionMatrix transition_matrix(const ClassCRule& rule, const BoxRegion& region,
                                   const BoundaryCondition& tau, const EnumerationBudget& budget,
                                   int threads) {
    check_budget(region, budget.max_matrix_sites, "transition_matrix");
    const FactorTable factors = build_factors(rule.kernel(), region.sites(), region, tau);
    const std::size_t n = region.size();
    const std::uint64_t states = 1ULL << n;
    std::vector<double> entries(states * states);
    parallel_for(states, threads, [&](std::uint64_t from) {
        std::array<double, 16> plus_prob_buf;
        std::vector<double> plus_prob_dyn;
        double* plus_prob = plus_prob_buf.data();
        if (n > plus_prob_buf.size()) {
            plus_prob_dyn.resize(n);
            plus_prob = plus_prob_dyn.data();
        }
        for (std::size_t c = 0; c < n; ++c)
            plus_prob[c] = rule.plus_prob(factor_field(factors, c, from));
        double* row = entries.data() + from * states;
        for (std::uint64_t to = 0; to < states; ++to) {
            double p = 1.0;
            for (std::size_t c = 0; c < n; ++c)
                p *= ((to >> c) & 1) ? plus_prob[c] : (1.0 - plus_prob[c]);
            row[to] = p;
        }
    });
    return TransitionMatrix(region, std::move(entries));
}

double check_detailed_balance(const MeasureTable& table, const TransitionMatrix& matrix,
                              std::size_t full_sweep_sites, std::uint64_t pair_samples,
                              std::uint64_t sample_seed, int threads) {
    if (!(table.region() == matrix.region()))
        throw RegionMismatchError("measure and transition matrix regions differ");
    const std::uint64_t states = matrix.states();
    if (table.sites() <= full_sweep_sites) {
        std::vector<double> worst(states, 0.0);
        parallel_for(states, threads, [&](std::uint64_t a) {
            double w = 0.0;
            for (std::uint64_t b = 0; b < states; ++b) {
                const double flux =
                    table.prob(a) * matrix.prob(a, b) - table.prob(b) * matrix.prob(b, a);
                w = std::max(w, std::abs(flux));
            }
            worst[a] = w;
        });
        double w = 0.0;
        for (double x : worst) w = std::max(w, x);
        return w;
    }
    std::mt19937_64 gen(sample_seed);
    std::uniform_int_distribution<std::uint64_t> pick(0, states - 1);
    double w = 0.0;
    for (std::uint64_t i = 0; i < pair_samples; ++i) {
        const std::uint64_t a = pick(gen);
        const std::uint64_t b = pick(gen);
        const double flux = table.prob(a) * matrix.prob(a, b) - table.prob(b) * matrix.prob(b, a);
        w = std::max(w, std::abs(flux));
    }
    return w;
}

namespace {

struct SplitIndex {
    std::vector<std::size_t> sub_pos;  // positions of sub sites inside joint order
    std::vector<std::size_t> rest_pos; // positions of the remaining sites, in joint order
};

SplitIndex split_region(const BoxRegion& joint, const BoxRegion& sub) {
    SplitIndex s;
    for (const Site& k : sub.sites()) s.sub_pos.push_back(joint.index_of(k));
    for (std::size_t i = 0; i < joint.size(); ++i) {
        if (!sub.contains(joint.site(i))) s.rest_pos.push_back(i);
    }
    return s;
}

std::uint64_t compose_rank(const SplitIndex& s, std::uint64_t sub_rank, std::uint64_t rest_rank) {
    std::uint64_t r = 0;
    for (std::size_t i = 0; i < s.sub_pos.size(); ++i)
        r |= ((sub_rank >> i) & 1) << s.sub_pos[i];
    for (std::size_t i = 0; i < s.rest_pos.size(); ++i)
        r |= ((rest_rank >> i) & 1) << s.rest_pos[i];
    return r;
}

} // namespace

MeasureTable conditional_table(const MeasureTable& joint, const BoxRegion& sub,
                               std::uint64_t cond_rank) {
    if (!sub.is_subset_of(joint.region()))
        throw RegionMismatchError("conditional sub-region not inside the joint region");
    const SplitIndex split = split_region(joint.region(), sub);
    std::vector<double> probs(1ULL << sub.size());
    double total = 0.0;
    for (std::uint64_t r = 0; r < probs.size(); ++r) {
        probs[r] = joint.prob(compose_rank(split, r, cond_rank));
        total += probs[r];
    }
    if (total <= 0.0) throw Error("conditioning event has zero probability");
    for (double& p : probs) p /= total;
    return MeasureTable(sub, std::move(probs));
}

double check_gibbs_consistency(const ClassCRule& rule, const BoxRegion& inner,
                               const BoxRegion& outer, const BoundaryCondition& tau,
                               const EnumerationBudget& budget, int threads) {
    if (!inner.is_subset_of(outer)) throw NestingError("inner region must lie inside the outer one");
    if (!contains_l1_neighborhood(outer, inner, rule.range()))
        throw NestingError("nesting precondition violated: need dist(inner, outer^c) > range " +
                           std::to_string(rule.range()));
    const MeasureTable joint = nu_table(rule, outer, tau, budget, threads);
    const SplitIndex split = split_region(outer, inner);
    // outer site index -> bit position within the conditioning rank
    std::vector<std::size_t> rest_bit(outer.size(), 0);
    for (std::size_t i = 0; i < split.rest_pos.size(); ++i) rest_bit[split.rest_pos[i]] = i;

    // Sites the Gibbs table on `inner` may read: within 2R of inner.
    std::set<Site> needed;
    for (const Site& s : inner.sites()) {
        for (const auto& [off1, w1] : rule.kernel().entries()) {
            const Site c = s + off1;
            for (const auto& [off2, w2] : rule.kernel().entries()) {
                const Site j = c + off2;
                if (!inner.contains(j)) needed.insert(j);
            }
        }
    }
    const std::vector<Site> collar_sites(needed.begin(), needed.end());
    const PotentialPhi potential = PotentialPhi::of(rule);

    const std::uint64_t conditionings = 1ULL << split.rest_pos.size();
    std::vector<double> worst(conditionings, 0.0);
    parallel_for(conditionings, threads, [&](std::uint64_t cond) {
        const MeasureTable conditional = conditional_table(joint, inner, cond);
        // Composite boundary: conditioning spins on outer \ inner, tau outside.
        BoundaryCondition composite = tau;
        if (!collar_sites.empty()) {
            Configuration collar_values(BoxRegion::of_sites(inner.dim(), collar_sites), false);
            const BoxRegion& collar_region = collar_values.region();
            for (std::size_t i = 0; i < collar_region.size(); ++i) {
                const Site& s = collar_region.site(i);
                double v;
                if (const auto oi = outer.try_index(s)) {
                    v = ((cond >> rest_bit[*oi]) & 1) ? 1.0 : -1.0;
                } else {
                    v = tau.spin_at(s);
                }
                collar_values.set(i, v > 0.0);
            }
            composite = BoundaryCondition::explicit_values(std::move(collar_values));
        }
        const MeasureTable gibbs = gibbs_table(potential, inner, composite, budget, 1);
        double w = 0.0;
        for (std::uint64_t r = 0; r < conditional.configurations(); ++r)
            w = std::max(w, std::abs(conditional.prob(r) - gibbs.prob(r)));
        worst[cond] = w;
    });
    double w = 0.0;
    for (double x : worst) w = std::max(w, x);
    return w;
}

double magnetization(const MeasureTable& table, const Site& site) {
    const std::size_t i = table.region().index_of(site);
    double m = 0.0;
    for (std::uint64_t r = 0; r < table.configurations(); ++r)
        m += table.spin_of(r, i) * table.prob(r);
    return m;
}

GapResult gap_a(const ClassCRule& rule, int box_radius, const GapOptions& options) {
    const BoxRegion region = BoxRegion::ball(rule.dim(), box_radius);
    const Site origin = Site::origin(rule.dim());
    if (region.size() <= options.budget.max_sites) {
        const MeasureTable plus = nu_table(rule, region, BoundaryCondition::all_plus(),
                                           options.budget, options.threads);
        const MeasureTable minus = nu_table(rule, region, BoundaryCondition::all_minus(),
                                            options.budget, options.threads);
        GapResult res;
        res.value = magnetization(plus, origin) - magnetization(minus, origin);
        res.method = GapMethod::Exact;
        return res;
    }
    if (!options.allow_mc)
        throw BudgetError("gap_a: box exceeds the exact-enumeration budget and MC mode is disabled");

    const std::uint32_t horizon =
        options.mc_horizon ? options.mc_horizon
                           : std::max<std::uint32_t>(64, 8 * static_cast<std::uint32_t>(box_radius));
    std::vector<BoundaryCondition> bcs;
    bcs.push_back(BoundaryCondition::all_minus());
    bcs.push_back(BoundaryCondition::all_plus());
    const auto pair = std::make_shared<CoupledDynamics>(rule, region, std::move(bcs));
    const std::size_t oi = region.index_of(origin);
    const std::uint64_t samples = options.mc_samples;
    std::vector<std::uint8_t> at_full(samples), at_half(samples);
    parallel_for(samples, options.threads, [&](std::uint64_t s) {
        CouplingState state(pair,
                            {Configuration::all_minus(region), Configuration::all_plus(region)},
                            options.key.with_replica(static_cast<std::uint32_t>(s)));
        for (std::uint32_t t = 0; t < horizon; ++t) {
            state.advance();
            if (horizon >= 2 && state.time() == horizon / 2)
                at_half[s] = state.replica(0).plus(oi) != state.replica(1).plus(oi) ? 1 : 0;
        }
        at_full[s] = state.replica(0).plus(oi) != state.replica(1).plus(oi) ? 1 : 0;
        if (horizon < 2) at_half[s] = at_full[s];
    });
    std::uint64_t hits_full = 0, hits_half = 0;
    for (std::uint64_t s = 0; s < samples; ++s) {
        hits_full += at_full[s];
        hits_half += at_half[s];
    }
    // spins differ by exactly 2 whenever the coupled pair disagrees
    const RhoEstimate est = wilson_estimate(hits_full, samples, horizon);
    GapResult res;
    res.value = 2.0 * est.p_hat;
    res.ci_halfwidth = 2.0 * est.ci_halfwidth;
    res.method = GapMethod::MonteCarlo;
    res.horizon = horizon;
    res.bias_diagnostic =
        2.0 * (static_cast<double>(hits_half) - static_cast<double>(hits_full)) /
        static_cast<double>(samples);
    return res;
}

GapResult wm_gap(const PotentialPhi& potential, int box_radius, const EnumerationBudget& budget,
                 int threads) {
    const BoxRegion region = BoxRegion::ball(potential.kernel.dim(), box_radius);
    const Site origin = Site::origin(potential.kernel.dim());
    const MeasureTable plus =
        gibbs_table(potential, region, BoundaryCondition::all_plus(), budget, threads);
    const MeasureTable minus =
        gibbs_table(potential, region, BoundaryCondition::all_minus(), budget, threads);
    GapResult res;
    res.value = magnetization(plus, origin) - magnetization(minus, origin);
    res.method = GapMethod::Exact;
    return res;
}

const std::vector<std::uint32_t>& cube_upsets(int nbits) {
    static std::array<std::vector<std::uint32_t>, 5> cache;
    static std::array<std::once_flag, 5> flags;
    if (nbits < 0 || nbits > 4) throw BudgetError("exact up-set enumeration limited to 4 sites");
    std::call_once(flags[static_cast<std::size_t>(nbits)], [nbits] {
        const int nconf = 1 << nbits;
        std::vector<std::uint32_t> out;
        for (std::uint64_t mask = 0; mask < (1ULL << nconf); ++mask) {
            bool closed = true;
            for (int c = 0; c < nconf && closed; ++c) {
                if (!((mask >> c) & 1)) continue;
                for (int b = 0; b < nbits; ++b) {
                    const int up = c | (1 << b);
                    if (!((mask >> up) & 1)) {
                        closed = false;
                        break;
                    }
                }
            }
            if (closed) out.push_back(static_cast<std::uint32_t>(mask));
        }
        cache[static_cast<std::size_t>(nbits)] = std::move(out);
    });
    return cache[static_cast<std::size_t>(nbits)];
}

OrderCheckResult stochastic_order(const MeasureTable& lo, const MeasureTable& hi) {
    if (!(lo.region() == hi.region()))
        throw RegionMismatchError("stochastic order compares tables on one region");
    const std::size_t n = lo.sites();
    OrderCheckResult res;
    if (n <= 4) {
        res.mode = OrderCheckMode::ExactUpsets;
        double worst = 0.0;
        for (std::uint32_t upset : cube_upsets(static_cast<int>(n))) {
            double a = 0.0, b = 0.0;
            for (std::uint64_t c = 0; c < lo.configurations(); ++c) {
                if ((upset >> c) & 1) {
                    a += lo.prob(c);
                    b += hi.prob(c);
                }
            }
            worst = std::max(worst, a - b);
        }
        res.worst_violation = worst;
        res.ordered = worst <= 1e-12;
        return res;
    }
    res.mode = OrderCheckMode::Heuristic;
    double worst = 0.0;
    auto expect = [&](const MeasureTable& t, auto&& f) {
        double e = 0.0;
        for (std::uint64_t c = 0; c < t.configurations(); ++c) e += f(c) * t.prob(c);
        return e;
    };
    for (std::size_t i = 0; i < n; ++i) {
        auto f = [i](std::uint64_t c) { return ((c >> i) & 1) ? 1.0 : -1.0; };
        worst = std::max(worst, expect(lo, f) - expect(hi, f));
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            auto f = [i, j](std::uint64_t c) {
                return (((c >> i) & 1) && ((c >> j) & 1)) ? 1.0 : 0.0;
            };
            worst = std::max(worst, expect(lo, f) - expect(hi, f));
        }
    }
    const std::uint64_t top = lo.configurations() - 1;
    auto all_plus = [top](std::uint64_t c) { return c == top ? 1.0 : 0.0; };
    worst = std::max(worst, expect(lo, all_plus) - expect(hi, all_plus));
    res.worst_violation = worst;
    res.ordered = worst <= 1e-12;
    return res;
}

} // namespace pcamix
