#pragma once

#include "pcamix/coupling.hpp"
#include "pcamix/exact.hpp"
#include "pcamix/rule.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace pcamix {

// y ~ C e^{-M x} fitted by least squares on (x, log y).
struct DecayFit {
    double amplitude = 0.0; // C
    double rate = 0.0;      // M (per unit x)
    double rsq = 0.0;
    int points_used = 0;
};

// Requires at least 3 strictly positive y values; non-positive points are
// ignored (their logs are meaningless).
DecayFit fit_exponential(const std::vector<std::pair<double, double>>& points);

// Dimension-dependent constants of the explicit-rate argument.
// c_hat = (2R+1)^d is the smallest constant with (2nR+1)^d <= c_hat n^d for
// all n >= 1; kappa comes from the spin space.
struct RateConstants {
    int dim = 0;
    int range = 0;
    double kappa = 0.0;

    static RateConstants of(const ClassCRule& rule) {
        return {rule.dim(), rule.range(), rule.spins().kappa()};
    }
    double c_hat() const;
    double cone_volume(std::uint32_t n) const; // (2nR+1)^d
};

// Outcome of the explicit-rate construction: when the product
// 2^d c_hat n1^d rho(n1) is below 1 it yields lambda > 0 with
// rho(n) <= e^{-lambda n} for n >= n1; otherwise n1 is too small and the
// rejection is a value, not an error.
struct RateLambdaResult {
    bool accepted = false;
    double lambda = 0.0;
    double product = 0.0; // 2^d c_hat n1^d rho_n1
};

RateLambdaResult rate_lambda(std::uint32_t n1, double rho_n1, const RateConstants& consts);

struct RecursionReport {
    double lhs = 0.0;   // measured rho(2n)
    double rhs = 0.0;   // bound assembled from rho(n) (and the gap, if mixed)
    double slack = 0.0; // propagated 95% interval slack
    bool holds = false;
};

// rho(2n) <= (2nR+1)^d rho(n)^2 within propagated confidence slack.
RecursionReport check_recursion_rho(const RhoEstimate& at_n, const RhoEstimate& at_2n,
                                    const RateConstants& consts);

// rho(2n) <= 2 (2L+1)^d rho(n)^2 + 2 kappa gap(L) within slack.
RecursionReport check_recursion_mixed(const RhoEstimate& at_n, const RhoEstimate& at_2n,
                                      int box_radius, const GapResult& gap,
                                      const RateConstants& consts);

// One scan task over a beta grid: DV sum, spatial gap series with a decay fit,
// temporal rho series with a decay fit, and the explicit-rate outcome.
struct ScanSpec {
    InteractionKernel kernel = InteractionKernel::nearest_neighbor_2d(1.0);
    std::vector<double> betas;
    std::vector<int> box_radii;        // L values for gap_a
    std::vector<std::uint32_t> horizons; // n values for rho
    std::uint64_t samples = 100'000;
    std::uint64_t seed = 0;
    bool allow_mc = false;
    std::uint32_t mc_horizon = 0;
    int threads = 0;
};

// One CSV row; L and n are -1 when not applicable. `kind` is one of:
// dv, gap, gap_fit_rate, gap_fit_amplitude, gap_fit_rsq, rho,
// rho_fit_rate, rho_fit_amplitude, rho_fit_rsq, rate_lambda,
// rate_lambda_rejected, error.
struct ScanRow {
    double beta = 0.0;
    std::string kind;
    int box_radius = -1;
    long long horizon = -1;
    double value = 0.0;
    double ci_halfwidth = 0.0;
    std::uint64_t samples = 0;
    std::string method; // exact | mc | empty
    std::string note;   // no commas
};

struct ScanOutcome {
    std::vector<ScanRow> rows;
    std::size_t cells_attempted = 0;
    std::size_t cells_failed = 0;
};

// Runs the scan; optionally streams JSON-lines metadata (one meta record and
// one record per beta cell) to `jsonl`.
ScanOutcome phase_scan(const ScanSpec& spec, std::ostream* jsonl = nullptr);

void write_scan_csv(std::ostream& os, const std::vector<ScanRow>& rows);

} // namespace pcamix
