#include "pcamix/experiment.hpp"

#include "pcamix/errors.hpp"
#include "pcamix/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace pcamix {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("invalid number for '" + key + "': " + v);
    }
}

long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("invalid integer for '" + key + "': " + v);
    }
}

// "(1,0):1.5" -> offset + weight
std::pair<Site, double> parse_kernel_entry(const std::string& token) {
    const auto colon = token.rfind(':');
    if (token.empty() || token.front() != '(' || colon == std::string::npos)
        throw ConfigError("kernel entries look like (1,0):1.0, got: " + token);
    const auto close = token.find(')');
    if (close == std::string::npos || close > colon)
        throw ConfigError("unbalanced parentheses in kernel entry: " + token);
    std::vector<int> coords;
    std::string num;
    for (std::size_t i = 1; i <= close; ++i) {
        const char c = token[i];
        if (c == ',' || c == ')') {
            if (num.empty()) throw ConfigError("empty coordinate in kernel entry: " + token);
            coords.push_back(static_cast<int>(parse_int("kernel", num)));
            num.clear();
        } else {
            num.push_back(c);
        }
    }
    const double w = parse_double("kernel", token.substr(colon + 1));
    return {Site(std::move(coords)), w};
}

} // namespace

ExperimentConfig ExperimentConfig::parse(std::istream& is) {
    ExperimentConfig cfg;
    std::map<std::string, std::string> kv; // "section.key" -> value
    std::string section;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "model" && section != "grid" && section != "run")
                throw ConfigError("unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError("key '" + key + "' appears before any section");
        if (key.empty() || value.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
        if (!kv.emplace(section + "." + key, value).second)
            throw ConfigError("duplicate key '" + key + "' in [" + section + "]");
    }

    auto take = [&kv](const std::string& name) -> std::string {
        auto it = kv.find(name);
        if (it == kv.end()) return {};
        std::string v = it->second;
        kv.erase(it);
        return v;
    };

    // model
    const std::string preset = take("model.preset");
    const std::string kernel_spec = take("model.kernel");
    const std::string coupling = take("model.coupling");
    if (!preset.empty() && !kernel_spec.empty())
        throw ConfigError("give either model.preset or model.kernel, not both");
    if (!kernel_spec.empty()) {
        if (!coupling.empty()) throw ConfigError("model.coupling only applies to presets");
        std::vector<std::pair<Site, double>> entries;
        for (const std::string& tok : split_list(kernel_spec)) entries.push_back(parse_kernel_entry(tok));
        if (entries.empty()) throw ConfigError("model.kernel has no entries");
        const int dim = entries.front().first.dim();
        cfg.kernel = InteractionKernel(dim, std::move(entries));
    } else {
        const std::string name = preset.empty() ? "nn2d" : preset;
        if (name != "nn2d") throw ConfigError("unknown model preset '" + name + "'");
        const double j = coupling.empty() ? 1.0 : parse_double("model.coupling", coupling);
        cfg.kernel = InteractionKernel::nearest_neighbor_2d(j);
    }

    // grid
    const std::string betas = take("grid.beta");
    for (const std::string& tok : split_list(betas)) {
        const double b = parse_double("grid.beta", tok);
        if (b < 0.0) throw ConfigError("grid.beta entries must be >= 0");
        cfg.betas.push_back(b);
    }
    if (cfg.betas.empty()) throw ConfigError("grid.beta must be a non-empty list");
    for (const std::string& tok : split_list(take("grid.L"))) {
        const long long L = parse_int("grid.L", tok);
        if (L < 0) throw ConfigError("grid.L entries must be >= 0");
        cfg.box_radii.push_back(static_cast<int>(L));
    }
    for (const std::string& tok : split_list(take("grid.n"))) {
        const long long n = parse_int("grid.n", tok);
        if (n < 1) throw ConfigError("grid.n entries must be >= 1");
        cfg.horizons.push_back(static_cast<std::uint32_t>(n));
    }

    // run
    if (const std::string v = take("run.dimension"); !v.empty()) {
        if (parse_int("run.dimension", v) != cfg.kernel.dim())
            throw ConfigError("run.dimension disagrees with the kernel dimension");
    }
    if (const std::string v = take("run.samples"); !v.empty()) {
        const long long s = parse_int("run.samples", v);
        if (s < 1) throw ConfigError("run.samples must be >= 1");
        cfg.samples = static_cast<std::uint64_t>(s);
    }
    if (const std::string v = take("run.seed"); !v.empty())
        cfg.seed = static_cast<std::uint64_t>(parse_int("run.seed", v));
    if (const std::string v = take("run.threads"); !v.empty())
        cfg.threads = static_cast<int>(parse_int("run.threads", v));
    if (const std::string v = take("run.mc-horizon"); !v.empty())
        cfg.mc_horizon = static_cast<std::uint32_t>(parse_int("run.mc-horizon", v));
    if (const std::string v = take("run.outdir"); !v.empty()) cfg.outdir = v;
    if (const std::string v = take("run.mode"); !v.empty()) {
        if (v == "exact-only")
            cfg.allow_mc = false;
        else if (v == "mc-allowed")
            cfg.allow_mc = true;
        else
            throw ConfigError("run.mode must be exact-only or mc-allowed, got '" + v + "'");
    }

    if (!kv.empty()) throw ConfigError("unknown config key '" + kv.begin()->first + "'");
    return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse(in);
}

ScanSpec ExperimentConfig::scan_spec() const {
    ScanSpec spec;
    spec.kernel = kernel;
    spec.betas = betas;
    spec.box_radii = box_radii;
    spec.horizons = horizons;
    spec.samples = samples;
    spec.seed = seed;
    spec.allow_mc = allow_mc;
    spec.mc_horizon = mc_horizon;
    spec.threads = threads;
    return spec;
}

int run_scan(const ExperimentConfig& config, std::ostream& log) {
    namespace fs = std::filesystem;
    fs::create_directories(config.outdir);
    const std::string csv_path = (fs::path(config.outdir) / "scan.csv").string();
    const std::string jsonl_path = (fs::path(config.outdir) / "scan-meta.jsonl").string();
    std::ofstream jsonl(jsonl_path);
    if (!jsonl) throw ConfigError("cannot write " + jsonl_path);

    const ScanOutcome outcome = phase_scan(config.scan_spec(), &jsonl);

    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw ConfigError("cannot write " + csv_path);
    write_scan_csv(csv, outcome.rows);
    log << "scan: " << outcome.cells_attempted - outcome.cells_failed << "/"
        << outcome.cells_attempted << " cells ok -> " << csv_path << "\n";
    return outcome.cells_failed < outcome.cells_attempted ? 0 : 1;
}

namespace {

struct Baseline {
    std::string name;
    double value;
    double tolerance;
};

// Frozen reference numbers for the nn2d model with J = 1. The enumerated
// quantities were cross-checked against an independent brute-force
// implementation; closed forms are evaluated in high precision.
std::vector<Baseline> builtin_baselines() {
    return {
        {"dv_sum_nn2d_beta02", 0.7598979245104498, 1e-12},       // 2 tanh(0.4)
        {"dv_threshold_nn2d", 0.2746530721670274, 1e-4},         // atanh(1/2)/2
        {"gap_a_L0_beta02", 1.3280735405356983, 1e-12},          // 2 tanh(0.8)
        {"gap_a_L1_beta02", 0.8032754884391466, 1e-10},
        {"wm_gap_L0_beta02", 0.8032754884391468, 1e-10},
        {"wm_gap_L1_beta02", 0.8032754884391465, 1e-10},
        {"nu_single_site_plus_beta02", 0.8320183851339245, 1e-12}, // e^0.8 / (2 cosh 0.8)
        {"gibbs_single_site_plus_beta02", 0.7008188721097867, 1e-10},
        {"upset_count_4", 168.0, 0.0},
    };
}

std::vector<Baseline> load_baselines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open baselines file: " + path);
    auto table = builtin_baselines();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty() || line == "name,value,tolerance") continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) f.push_back(trim(tok));
        if (f.size() != 3)
            throw ConfigError("baselines line " + std::to_string(lineno) +
                              ": expected name,value,tolerance");
        auto it = std::find_if(table.begin(), table.end(),
                               [&](const Baseline& b) { return b.name == f[0]; });
        if (it == table.end()) throw ConfigError("unknown baseline name '" + f[0] + "'");
        it->value = parse_double("baseline." + f[0], f[1]);
        it->tolerance = parse_double("baseline." + f[0] + ".tolerance", f[2]);
    }
    return table;
}

class CheckRunner {
public:
    explicit CheckRunner(std::ostream& out) : out_(out) {}

    void run(const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
        bool ok = false;
        std::string detail;
        try {
            auto res = body();
            ok = res.first;
            detail = res.second;
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        out_ << (ok ? "PASS " : "FAIL ") << name;
        if (!detail.empty()) out_ << "  (" << detail << ")";
        out_ << "\n";
        if (!ok) ++failures_;
        ++total_;
    }

    int failures() const { return failures_; }
    int total() const { return total_; }

private:
    std::ostream& out_;
    int failures_ = 0;
    int total_ = 0;
};

std::string residual_str(double r) {
    return "residual=" + format_g17(r);
}

} // namespace

int run_verify(VerifyLevel level, const VerifyOptions& options, std::ostream& out) {
    const bool full = level == VerifyLevel::Full;
    const int threads = options.threads;
    const std::uint64_t samples_small = full ? 100'000 : 10'000;
    const InteractionKernel nn = InteractionKernel::nearest_neighbor_2d(1.0);
    const BoxRegion b0 = BoxRegion::ball(2, 0);
    const BoxRegion b1 = BoxRegion::ball(2, 1);
    const BoxRegion b2 = BoxRegion::ball(2, 2);
    const BoxRegion square22 = BoxRegion::of_sites(
        2, {Site({0, 0}), Site({0, 1}), Site({1, 0}), Site({1, 1})});
    CheckRunner checks(out);

    const auto baselines =
        options.baselines_path.empty() ? builtin_baselines() : load_baselines(options.baselines_path);
    auto baseline = [&](const std::string& name) {
        auto it = std::find_if(baselines.begin(), baselines.end(),
                               [&](const Baseline& b) { return b.name == name; });
        if (it == baselines.end()) throw ConfigError("missing baseline " + name);
        return *it;
    };
    auto check_baseline = [&](const std::string& name, double computed) {
        const Baseline b = baseline(name);
        checks.run("baseline:" + name, [&]() -> std::pair<bool, std::string> {
            const double diff = std::abs(computed - b.value);
            return {diff <= b.tolerance,
                    "computed=" + format_g17(computed) + " expected=" + format_g17(b.value) +
                        " |diff|=" + format_g17(diff)};
        });
    };

    // frozen baselines
    {
        const ClassCRule rule02(0.2, nn);
        check_baseline("dv_sum_nn2d_beta02", dv_sum(rule02));
        check_baseline("dv_threshold_nn2d", dv_threshold(nn, 1e-8));
        check_baseline("gap_a_L0_beta02", gap_a(rule02, 0).value);
        check_baseline("gap_a_L1_beta02", gap_a(rule02, 1).value);
        const PotentialPhi phi02 = PotentialPhi::of(rule02);
        check_baseline("wm_gap_L0_beta02", wm_gap(phi02, 0).value);
        check_baseline("wm_gap_L1_beta02", wm_gap(phi02, 1).value);
        const MeasureTable nu0 = nu_table(rule02, b0, BoundaryCondition::all_plus());
        check_baseline("nu_single_site_plus_beta02", nu0.prob(1));
        const MeasureTable mu0 = gibbs_table(phi02, b0, BoundaryCondition::all_plus());
        check_baseline("gibbs_single_site_plus_beta02", mu0.prob(1));
        check_baseline("upset_count_4", static_cast<double>(cube_upsets(4).size()));
    }

    // detailed balance + stationarity
    for (double beta : {0.1, 0.3}) {
        const ClassCRule rule(beta, nn);
        for (const char* tag : {"plus", "random"}) {
            const BoundaryCondition tau =
                std::string(tag) == "plus"
                    ? BoundaryCondition::all_plus()
                    : BoundaryCondition::random_on(collar(b1, nn.stencil()), options.seed + 7);
            checks.run("detailed-balance:B1:beta=" + format_g17(beta) + ":" + tag,
                       [&]() -> std::pair<bool, std::string> {
                           const MeasureTable table = nu_table(rule, b1, tau, {}, threads);
                           const TransitionMatrix mat = transition_matrix(rule, b1, tau, {}, threads);
                           const double r = check_detailed_balance(table, mat);
                           return {r < 1e-12, residual_str(r)};
                       });
        }
    }
    checks.run("detailed-balance-negative-control:B1:beta=0.3",
               [&]() -> std::pair<bool, std::string> {
                   const ClassCRule rule(0.3, nn);
                   const auto tau = BoundaryCondition::all_plus();
                   const TransitionMatrix mat = transition_matrix(rule, b1, tau, {}, threads);
                   const std::size_t n = b1.size();
                   const MeasureTable uniform(
                       b1, std::vector<double>(1ULL << n, 1.0 / static_cast<double>(1ULL << n)));
                   const double r = check_detailed_balance(uniform, mat);
                   return {r > 1e-6, "uniform measure must violate: " + residual_str(r)};
               });
    checks.run("stationarity:B1:beta=0.3", [&]() -> std::pair<bool, std::string> {
        const ClassCRule rule(0.3, nn);
        const auto tau = BoundaryCondition::all_plus();
        const MeasureTable table = nu_table(rule, b1, tau, {}, threads);
        const TransitionMatrix mat = transition_matrix(rule, b1, tau, {}, threads);
        double worst = 0.0;
        for (std::uint64_t to = 0; to < mat.states(); ++to) {
            double acc = 0.0;
            for (std::uint64_t from = 0; from < mat.states(); ++from)
                acc += table.prob(from) * mat.prob(from, to);
            worst = std::max(worst, std::abs(acc - table.prob(to)));
        }
        return {worst < 1e-10, residual_str(worst)};
    });

    if (full) {
        const BoxRegion square33 = [&] {
            std::vector<Site> sites;
            for (int x = -1; x <= 1; ++x)
                for (int y = -1; y <= 1; ++y) sites.push_back(Site({x, y}));
            return BoxRegion::of_sites(2, std::move(sites));
        }();
        checks.run("detailed-balance:3x3:beta=0.3:plus", [&]() -> std::pair<bool, std::string> {
            const ClassCRule rule(0.3, nn);
            const auto tau = BoundaryCondition::all_plus();
            const MeasureTable table = nu_table(rule, square33, tau, {}, threads);
            const TransitionMatrix mat = transition_matrix(rule, square33, tau, {}, threads);
            const double r = check_detailed_balance(table, mat, 6, 1'000'000, options.seed, threads);
            return {r < 1e-12, residual_str(r)};
        });
    }

    // Gibbs consistency
    checks.run(std::string("gibbs-consistency:origin-in-") + (full ? "B2" : "B1"),
               [&]() -> std::pair<bool, std::string> {
                   const ClassCRule rule(0.2, nn);
                   const double r = check_gibbs_consistency(rule, b0, full ? b2 : b1,
                                                            BoundaryCondition::all_plus(), {},
                                                            threads);
                   return {r < 1e-12, residual_str(r)};
               });

    // spin-flip duality, exact
    checks.run("flip-duality:B1:beta=0.3", [&]() -> std::pair<bool, std::string> {
        const ClassCRule rule(0.3, nn);
        const MeasureTable plus = nu_table(rule, b1, BoundaryCondition::all_plus(), {}, threads);
        const MeasureTable minus = nu_table(rule, b1, BoundaryCondition::all_minus(), {}, threads);
        const MeasureTable flip = plus.flipped();
        double worst = 0.0;
        for (std::uint64_t r = 0; r < minus.configurations(); ++r)
            worst = std::max(worst, std::abs(minus.prob(r) - flip.prob(r)));
        return {worst == 0.0, "max entry diff=" + format_g17(worst)};
    });

    // stochastic orders on the 2x2 square, exact up-set mode
    for (double beta : full ? std::vector<double>{0.3, 0.6} : std::vector<double>{0.3}) {
        const ClassCRule rule(beta, nn);
        const PotentialPhi phi = PotentialPhi::of(rule);
        const MeasureTable nup = nu_table(rule, square22, BoundaryCondition::all_plus(), {}, threads);
        const MeasureTable num = nu_table(rule, square22, BoundaryCondition::all_minus(), {}, threads);
        const MeasureTable mup = gibbs_table(phi, square22, BoundaryCondition::all_plus(), {}, threads);
        const MeasureTable mum = gibbs_table(phi, square22, BoundaryCondition::all_minus(), {}, threads);
        const std::string suffix = ":2x2:beta=" + format_g17(beta);
        auto report = [&](const char* name, const MeasureTable& lo, const MeasureTable& hi) {
            checks.run(name + suffix, [&]() -> std::pair<bool, std::string> {
                const OrderCheckResult r = stochastic_order(lo, hi);
                return {r.ordered && r.mode == OrderCheckMode::ExactUpsets,
                        "worst=" + format_g17(r.worst_violation)};
            });
        };
        report("order:nu-minus<=nu-plus", num, nup);
        report("order:mu-plus<=nu-plus", mup, nup);
        report("order:nu-minus<=mu-minus", num, mum);
    }

    // cone property: boundary perturbations outside B_{nR} cannot reach the origin
    for (std::uint32_t n : full ? std::vector<std::uint32_t>{1, 2, 3}
                                : std::vector<std::uint32_t>{1, 2}) {
        checks.run("cone:n=" + std::to_string(n), [&]() -> std::pair<bool, std::string> {
            const ClassCRule rule(0.3, nn);
            const BoxRegion region = BoxRegion::ball(2, static_cast<int>(n));
            const std::uint64_t trials = full ? 1000 : 200;
            std::mt19937_64 gen(options.seed + n);
            for (std::uint64_t trial = 0; trial < trials; ++trial) {
                const RandomnessKey key{options.seed, 100 + n, static_cast<std::uint32_t>(trial), {}};
                const Configuration sigma0 = Configuration::random(region, key, 0);
                const BoundaryCondition tau1 = BoundaryCondition::all_plus();
                const BoundaryCondition tau2 =
                    BoundaryCondition::random_on(collar(region, nn.stencil()), gen());
                const Configuration a = run(rule, region, tau1, sigma0, n, key);
                const Configuration b = run(rule, region, tau2, sigma0, n, key);
                if (a.spin_at(Site::origin(2)) != b.spin_at(Site::origin(2)))
                    return {false, "origin value leaked through the cone at trial " +
                                       std::to_string(trial)};
            }
            return {true, std::to_string(trials) + " trials bit-identical"};
        });
    }

    // sandwich and pathwise order of couplings
    checks.run("sandwich:B1:beta=0.3", [&]() -> std::pair<bool, std::string> {
        const ClassCRule rule(0.3, nn);
        const RandomnessKey key{options.seed, 200, 0, {}};
        const Configuration eta = Configuration::random(b1, key.with_experiment(201), 0);
        const BoundaryCondition middle =
            BoundaryCondition::random_on(collar(b1, nn.stencil()), options.seed + 3);
        const bool ok = sandwich_check(rule, b1, middle, eta, full ? 50 : 20,
                                       std::min<std::uint64_t>(samples_small, 200), key, threads);
        return {ok, "pathwise order held"};
    });
    for (double beta : {0.2, 0.6}) {
        checks.run("coupling-order:beta=" + format_g17(beta),
                   [&]() -> std::pair<bool, std::string> {
                       const ClassCRule rule(beta, nn);
                       const BoxRegion region = full ? b2 : b1;
                       const std::uint64_t n_samp = std::min<std::uint64_t>(samples_small, 500);
                       std::vector<BoundaryCondition> bcs;
                       bcs.push_back(BoundaryCondition::all_minus());
                       bcs.push_back(BoundaryCondition::all_plus());
                       const auto pair =
                           std::make_shared<CoupledDynamics>(rule, region, std::move(bcs));
                       for (std::uint64_t s = 0; s < n_samp; ++s) {
                           CouplingState state(pair,
                                               {Configuration::all_minus(region),
                                                Configuration::all_plus(region)},
                                               RandomnessKey{options.seed, 301,
                                                             static_cast<std::uint32_t>(s), {}});
                           for (int t = 0; t < 25; ++t) state.advance(); // throws on violation
                       }
                       return {true, std::to_string(n_samp) + " samples x 25 steps ordered"};
                   });
    }

    if (full) {
        // conditional restriction: conditionals of nu_{B2}^+ on the 2x2 block
        // are dominated by nu_{2x2}^+
        checks.run("conditional-restriction:2x2-in-B2:beta=0.3",
                   [&]() -> std::pair<bool, std::string> {
                       const ClassCRule rule(0.3, nn);
                       const MeasureTable joint =
                           nu_table(rule, b2, BoundaryCondition::all_plus(), {}, threads);
                       const MeasureTable block =
                           nu_table(rule, square22, BoundaryCondition::all_plus(), {}, threads);
                       std::mt19937_64 gen(options.seed + 11);
                       const std::uint64_t conds = 1ULL << (b2.size() - square22.size());
                       double worst = 0.0;
                       for (int trial = 0; trial < 64; ++trial) {
                           const std::uint64_t cond = gen() % conds;
                           const MeasureTable conditional = conditional_table(joint, square22, cond);
                           const OrderCheckResult r = stochastic_order(conditional, block);
                           worst = std::max(worst, r.worst_violation);
                           if (!r.ordered) return {false, "violated at conditioning " +
                                                              std::to_string(cond)};
                       }
                       return {true, "worst=" + format_g17(worst)};
                   });
        checks.run("gibbs-boundary-monotone:2x2:beta=0.3",
                   [&]() -> std::pair<bool, std::string> {
                       const ClassCRule rule(0.3, nn);
                       const PotentialPhi phi = PotentialPhi::of(rule);
                       // collar wide enough for every plaquette the energy reads
                       std::set<Site> shell;
                       for (const Site& s : square22.sites())
                           for (const auto& [o1, w1] : nn.entries())
                               for (const auto& [o2, w2] : nn.entries()) {
                                   const Site j = s + o1 + o2;
                                   if (!square22.contains(j)) shell.insert(j);
                               }
                       const BoxRegion shell_region =
                           BoxRegion::of_sites(2, std::vector<Site>(shell.begin(), shell.end()));
                       std::mt19937_64 gen(options.seed + 13);
                       Configuration lo(shell_region, false), hi(shell_region, false);
                       for (std::size_t i = 0; i < shell_region.size(); ++i) {
                           const bool a = (gen() & 1) != 0;
                           const bool b = a || ((gen() & 1) != 0);
                           lo.set(i, a);
                           hi.set(i, b);
                       }
                       const MeasureTable glo = gibbs_table(
                           phi, square22, BoundaryCondition::explicit_values(lo), {}, threads);
                       const MeasureTable ghi = gibbs_table(
                           phi, square22, BoundaryCondition::explicit_values(hi), {}, threads);
                       const OrderCheckResult r = stochastic_order(glo, ghi);
                       return {r.ordered, "worst=" + format_g17(r.worst_violation)};
                   });
    }

    out << (checks.failures() == 0 ? "OK" : "FAILED") << ": " << checks.total() - checks.failures()
        << "/" << checks.total() << " checks passed\n";
    return checks.failures() == 0 ? 0 : 1;
}

} // namespace pcamix
