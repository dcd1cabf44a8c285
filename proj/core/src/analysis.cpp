#include "pcamix/analysis.hpp"

#include "pcamix/errors.hpp"
#include "pcamix/util.hpp"
#include "pcamix/version.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <ostream>

namespace pcamix {

DecayFit fit_exponential(const std::vector<std::pair<double, double>>& points) {
    std::vector<std::pair<double, double>> logs;
    for (const auto& [x, y] : points) {
        if (y > 0.0) logs.emplace_back(x, std::log(y));
    }
    if (logs.size() < 3)
        throw InsufficientDataError("exponential fit needs at least 3 positive points, got " +
                                    std::to_string(logs.size()));
    double sx = 0.0, sy = 0.0;
    for (const auto& [x, ly] : logs) {
        sx += x;
        sy += ly;
    }
    const double n = static_cast<double>(logs.size());
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, ly] : logs) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (ly - my);
        syy += (ly - my) * (ly - my);
    }
    if (sxx == 0.0) throw InsufficientDataError("exponential fit needs distinct x values");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ss_res = 0.0;
    for (const auto& [x, ly] : logs) {
        const double e = ly - (intercept + slope * x);
        ss_res += e * e;
    }
    DecayFit fit;
    fit.amplitude = std::exp(intercept);
    fit.rate = -slope;
    fit.rsq = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
    fit.points_used = static_cast<int>(logs.size());
    return fit;
}

double RateConstants::c_hat() const {
    return std::pow(2.0 * range + 1.0, dim);
}

double RateConstants::cone_volume(std::uint32_t n) const {
    return std::pow(2.0 * static_cast<double>(n) * range + 1.0, dim);
}

RateLambdaResult rate_lambda(std::uint32_t n1, double rho_n1, const RateConstants& consts) {
    if (!(rho_n1 > 0.0) || !(rho_n1 < 1.0))
        throw Error("rate_lambda needs rho(n1) in (0,1)");
    if (n1 == 0) throw Error("rate_lambda needs n1 >= 1");
    RateLambdaResult res;
    res.product = std::pow(2.0, consts.dim) * consts.c_hat() *
                  std::pow(static_cast<double>(n1), consts.dim) * rho_n1;
    if (res.product < 1.0) {
        res.accepted = true;
        res.lambda = -std::log(res.product) / (2.0 * static_cast<double>(n1));
    }
    return res;
}

namespace {

RecursionReport assemble_recursion(const RhoEstimate& at_2n, double coeff, double p, double ci,
                                   double constant, double constant_ci) {
    // upper-bound the quadratic term at p + ci and add the lhs interval
    RecursionReport rep;
    rep.lhs = at_2n.p_hat;
    rep.rhs = coeff * p * p + constant;
    rep.slack = coeff * (2.0 * p * ci + ci * ci) + constant_ci + at_2n.ci_halfwidth;
    rep.holds = rep.lhs <= rep.rhs + rep.slack;
    return rep;
}

} // namespace

RecursionReport check_recursion_rho(const RhoEstimate& at_n, const RhoEstimate& at_2n,
                                    const RateConstants& consts) {
    if (at_2n.n != 2 * at_n.n) throw Error("recursion check needs estimates at n and 2n");
    return assemble_recursion(at_2n, consts.cone_volume(at_n.n), at_n.p_hat, at_n.ci_halfwidth,
                              0.0, 0.0);
}

RecursionReport check_recursion_mixed(const RhoEstimate& at_n, const RhoEstimate& at_2n,
                                      int box_radius, const GapResult& gap,
                                      const RateConstants& consts) {
    if (at_2n.n != 2 * at_n.n) throw Error("recursion check needs estimates at n and 2n");
    const double coeff = 2.0 * std::pow(2.0 * box_radius + 1.0, consts.dim);
    const double constant = 2.0 * consts.kappa * gap.value;
    const double constant_ci = 2.0 * consts.kappa * gap.ci_halfwidth;
    return assemble_recursion(at_2n, coeff, at_n.p_hat, at_n.ci_halfwidth, constant, constant_ci);
}

namespace {

ScanRow row(double beta, std::string kind, int L, long long n, double value, double ci = 0.0,
            std::uint64_t samples = 0, std::string method = {}, std::string note = {}) {
    ScanRow r;
    r.beta = beta;
    r.kind = std::move(kind);
    r.box_radius = L;
    r.horizon = n;
    r.value = value;
    r.ci_halfwidth = ci;
    r.samples = samples;
    r.method = std::move(method);
    r.note = std::move(note);
    return r;
}

} // namespace

ScanOutcome phase_scan(const ScanSpec& spec, std::ostream* jsonl) {
    if (spec.betas.empty()) throw ConfigError("scan needs a non-empty beta grid");
    ScanOutcome out;
    const RateConstants consts{spec.kernel.dim(),
                               spec.kernel.range(),
                               SpinSpace::binary().kappa()};
    nlohmann::json meta;
    if (jsonl) {
        meta["type"] = "meta";
        meta["tool"] = "pcamix";
        meta["version"] = kVersion;
        nlohmann::json kernel = nlohmann::json::array();
        for (const auto& [off, w] : spec.kernel.entries())
            kernel.push_back({{"offset", off.coords()}, {"weight", w}});
        meta["kernel"] = kernel;
        meta["betas"] = spec.betas;
        meta["L"] = spec.box_radii;
        meta["n"] = spec.horizons;
        meta["samples"] = spec.samples;
        meta["seed"] = spec.seed;
        meta["allow_mc"] = spec.allow_mc;
        meta["c_hat"] = consts.c_hat();
        meta["kappa"] = consts.kappa;
        *jsonl << meta.dump() << '\n';
    }

    std::uint32_t cell = 0;
    for (double beta : spec.betas) {
        const ClassCRule rule(beta, spec.kernel);
        nlohmann::json jcell;
        jcell["type"] = "cell";
        jcell["beta"] = beta;
        nlohmann::json jerrors = nlohmann::json::array();

        ++out.cells_attempted;
        try {
            out.rows.push_back(row(beta, "dv", -1, -1, dv_sum(rule)));
        } catch (const Error& e) {
            out.rows.push_back(row(beta, "error", -1, -1, 0.0, 0.0, 0, {}, "dv_sum_failed"));
            jerrors.push_back(e.what());
            ++out.cells_failed;
        }

        std::vector<std::pair<double, double>> gap_points;
        int excluded = 0;
        for (int L : spec.box_radii) {
            ++out.cells_attempted;
            GapOptions opts;
            opts.allow_mc = spec.allow_mc;
            opts.mc_samples = spec.samples;
            opts.mc_horizon = spec.mc_horizon;
            opts.threads = spec.threads;
            opts.key = RandomnessKey{spec.seed, cell, 0, {}};
            ++cell;
            try {
                const GapResult g = gap_a(rule, L, opts);
                const bool mc = g.method == GapMethod::MonteCarlo;
                out.rows.push_back(row(beta, "gap", L, -1, g.value, g.ci_halfwidth,
                                       mc ? spec.samples : 0, mc ? "mc" : "exact"));
                // MC points drowned in noise would poison the log fit
                if (mc && g.value < 10.0 * g.ci_halfwidth) {
                    ++excluded;
                } else {
                    gap_points.emplace_back(static_cast<double>(L), g.value);
                }
            } catch (const Error& e) {
                out.rows.push_back(row(beta, "error", L, -1, 0.0, 0.0, 0, {}, "gap_failed"));
                jerrors.push_back(e.what());
                ++out.cells_failed;
            }
        }
        try {
            const DecayFit fit = fit_exponential(gap_points);
            out.rows.push_back(row(beta, "gap_fit_rate", -1, -1, fit.rate, 0.0,
                                   static_cast<std::uint64_t>(fit.points_used)));
            out.rows.push_back(row(beta, "gap_fit_amplitude", -1, -1, fit.amplitude));
            out.rows.push_back(row(beta, "gap_fit_rsq", -1, -1, fit.rsq, 0.0, 0, {},
                                   excluded ? "excluded=" + std::to_string(excluded) : ""));
        } catch (const Error&) {
            out.rows.push_back(
                row(beta, "error", -1, -1, 0.0, 0.0, 0, {}, "gap_fit_not_enough_points"));
        }

        std::vector<RhoEstimate> rhos;
        std::vector<std::pair<double, double>> rho_points;
        int rho_excluded = 0;
        for (std::uint32_t n : spec.horizons) {
            ++out.cells_attempted;
            const RandomnessKey key{spec.seed, cell, 0, {}};
            ++cell;
            try {
                const BoxRegion region =
                    BoxRegion::ball(rule.dim(), static_cast<int>(n) * rule.range());
                const RhoEstimate est =
                    estimate_rho(rule, region, n, spec.samples, key, spec.threads);
                rhos.push_back(est);
                out.rows.push_back(row(beta, "rho", static_cast<int>(n) * rule.range(),
                                       static_cast<long long>(n), est.p_hat, est.ci_halfwidth,
                                       est.samples));
                if (est.p_hat > 0.0 && est.p_hat >= 10.0 * est.ci_halfwidth)
                    rho_points.emplace_back(static_cast<double>(n), est.p_hat);
                else
                    ++rho_excluded;
            } catch (const Error& e) {
                out.rows.push_back(row(beta, "error", -1, static_cast<long long>(n), 0.0, 0.0, 0,
                                       {}, "rho_failed"));
                jerrors.push_back(e.what());
                ++out.cells_failed;
            }
        }
        try {
            const DecayFit fit = fit_exponential(rho_points);
            out.rows.push_back(row(beta, "rho_fit_rate", -1, -1, fit.rate, 0.0,
                                   static_cast<std::uint64_t>(fit.points_used)));
            out.rows.push_back(row(beta, "rho_fit_amplitude", -1, -1, fit.amplitude));
            out.rows.push_back(row(beta, "rho_fit_rsq", -1, -1, fit.rsq, 0.0, 0, {},
                                   rho_excluded ? "excluded=" + std::to_string(rho_excluded) : ""));
        } catch (const Error&) {
            out.rows.push_back(
                row(beta, "error", -1, -1, 0.0, 0.0, 0, {}, "rho_fit_not_enough_points"));
        }

        // explicit rate: smallest measured n whose product test passes
        bool accepted = false;
        double min_product = std::numeric_limits<double>::infinity();
        for (const RhoEstimate& est : rhos) {
            if (!(est.p_hat > 0.0 && est.p_hat < 1.0)) continue;
            const RateLambdaResult res = rate_lambda(est.n, est.p_hat, consts);
            min_product = std::min(min_product, res.product);
            if (res.accepted) {
                out.rows.push_back(row(beta, "rate_lambda", -1, static_cast<long long>(est.n),
                                       res.lambda, 0.0, est.samples));
                accepted = true;
                break;
            }
        }
        if (!accepted && !rhos.empty()) {
            out.rows.push_back(row(beta, "rate_lambda_rejected", -1, -1,
                                   std::isfinite(min_product) ? min_product : 0.0, 0.0, 0, {},
                                   "product>=1_at_all_measured_n"));
        }

        if (jsonl) {
            jcell["errors"] = jerrors;
            jcell["gap_fit_excluded"] = excluded;
            nlohmann::json jrho = nlohmann::json::array();
            for (const RhoEstimate& est : rhos)
                jrho.push_back({{"n", est.n},
                                {"p_hat", est.p_hat},
                                {"ci", est.ci_halfwidth},
                                {"samples", est.samples}});
            jcell["rho"] = jrho;
            *jsonl << jcell.dump() << '\n';
        }
    }
    return out;
}

void write_scan_csv(std::ostream& os, const std::vector<ScanRow>& rows) {
    os << "beta,kind,L,n,value,ci_halfwidth,samples,method,note\n";
    for (const ScanRow& r : rows) {
        os << format_g17(r.beta) << ',' << r.kind << ',';
        if (r.box_radius >= 0) os << r.box_radius;
        os << ',';
        if (r.horizon >= 0) os << r.horizon;
        os << ',' << format_g17(r.value) << ',' << format_g17(r.ci_halfwidth) << ',' << r.samples
           << ',' << r.method << ',' << r.note << '\n';
    }
}

} // namespace pcamix
