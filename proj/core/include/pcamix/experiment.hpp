#pragma once

#include "pcamix/analysis.hpp"

#include <iosfwd>
#include <string>

namespace pcamix {

// Parsed scan configuration. The file format is flat `key = value` lines under
// [model] / [grid] / [run] section headers; '#' starts a comment. Every field
// is validated at parse time and errors carry the offending key.
struct ExperimentConfig {
    InteractionKernel kernel = InteractionKernel::nearest_neighbor_2d(1.0);
    std::vector<double> betas;
    std::vector<int> box_radii;
    std::vector<std::uint32_t> horizons;
    std::uint64_t samples = 100'000;
    std::uint64_t seed = 0;
    bool allow_mc = false;
    std::uint32_t mc_horizon = 0;
    int threads = 0;
    std::string outdir = "scan-out";

    static ExperimentConfig parse(std::istream& is);
    static ExperimentConfig parse_file(const std::string& path);
    ScanSpec scan_spec() const;
};

// Runs the scan and writes <outdir>/scan.csv and <outdir>/scan-meta.jsonl.
// Returns 0 when at least one measured cell succeeded, 1 otherwise.
int run_scan(const ExperimentConfig& config, std::ostream& log);

enum class VerifyLevel { Fast, Full };

struct VerifyOptions {
    int threads = 0;
    std::string baselines_path; // optional override of the built-in table
    std::uint64_t seed = 20240101;
};

// Runs the verification battery (detailed balance, Gibbs consistency,
// stochastic orders, cone and sandwich checks, frozen baselines) and prints
// one PASS/FAIL line per check. Returns 0 iff everything passed.
int run_verify(VerifyLevel level, const VerifyOptions& options, std::ostream& out);

} // namespace pcamix
