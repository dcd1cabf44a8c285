#pragma once

#include "pcamix/lattice.hpp"

#include <cmath>
#include <span>
#include <utility>
#include <vector>

namespace pcamix {

// Totally ordered finite spin space. kappa = 1 / (smallest positive gap),
// kappa_prime = largest gap; both enter the coupling-to-magnetization bounds.
class SpinSpace {
public:
    explicit SpinSpace(std::vector<double> values); // strictly increasing
    static const SpinSpace& binary();               // {-1, +1}

    std::size_t size() const { return values_.size(); }
    double value(std::size_t i) const { return values_[i]; }
    double min() const { return values_.front(); }
    double max() const { return values_.back(); }
    double kappa() const { return kappa_; }
    double kappa_prime() const { return kappa_prime_; }
    bool is_binary() const;

private:
    std::vector<double> values_;
    double kappa_ = 0.0;
    double kappa_prime_ = 0.0;
};

// Symmetric finite-range interaction K : Z^d -> R, K(k) = K(-k).
class InteractionKernel {
public:
    InteractionKernel(int dim, std::vector<std::pair<Site, double>> entries);
    static InteractionKernel nearest_neighbor_2d(double coupling); // preset "nn2d"

    int dim() const { return dim_; }
    int range() const { return range_; }
    double weight(const Site& offset) const; // 0 when absent
    const std::vector<std::pair<Site, double>>& entries() const { return entries_; }
    bool non_negative() const;
    NeighborhoodStencil stencil() const; // offsets with nonzero weight (U_0)

private:
    int dim_ = 0;
    int range_ = 0;
    std::vector<std::pair<Site, double>> entries_; // sorted by offset, zeros dropped
};

// Updating rule of the tanh class: p(s | eta) = (1 + s tanh(beta * m)) / 2
// with local field m = sum_j K(j) eta_{k+j}. Binary spins.
class ClassCRule {
public:
    ClassCRule(double beta, InteractionKernel kernel);

    double beta() const { return beta_; }
    const InteractionKernel& kernel() const { return kernel_; }
    const SpinSpace& spins() const { return SpinSpace::binary(); }
    int dim() const { return kernel_.dim(); }
    int range() const { return kernel_.range(); }

    double plus_prob(double field) const { return 0.5 * (1.0 + std::tanh(beta_ * field)); }
    double update_prob(double s, double field) const { return 0.5 * (1.0 + s * std::tanh(beta_ * field)); }
    bool attractive() const { return kernel_.non_negative(); }

private:
    double beta_ = 0.0;
    InteractionKernel kernel_;
};

// A general single-site updating rule p_0(s | eta_{V_0}); translation
// invariance extends it to every site. Only the binary tanh rule ships as a
// concrete instance, but monotonicity checks work for any implementation.
class LocalRule {
public:
    virtual ~LocalRule() = default;
    virtual const SpinSpace& spins() const = 0;
    virtual const NeighborhoodStencil& neighborhood() const = 0;
    // Neighborhood values are listed in neighborhood().offsets() order.
    virtual double prob(double s, std::span<const double> neighbor_spins) const = 0;
    // Upper-tail cumulative G(s, .) = sum over s' >= s of p(s' | .).
    double cumulative(double s, std::span<const double> neighbor_spins) const;
};

// View of the class-C rule through the generic interface.
class ClassCLocalRule final : public LocalRule {
public:
    explicit ClassCLocalRule(ClassCRule rule);
    const SpinSpace& spins() const override { return rule_.spins(); }
    const NeighborhoodStencil& neighborhood() const override { return stencil_; }
    double prob(double s, std::span<const double> neighbor_spins) const override;

private:
    ClassCRule rule_;
    NeighborhoodStencil stencil_;
    std::vector<double> weights_; // aligned with stencil_.offsets()
};

// Upper-tail cumulative of the binary tanh rule given the local field:
// G(-1, .) = 1, G(+1, .) = plus_prob(field).
double cumulative_g(const ClassCRule& rule, double s, double field);

// Class-C rules are attractive iff the kernel is pointwise non-negative.
bool check_attractive(const ClassCRule& rule);

// Exhaustive monotonicity check of G over all covering pairs of neighborhood
// configurations; exercises the abstract definition. Cost |S|^{|V_0|}.
bool check_attractive_bruteforce(const LocalRule& rule);

// Dobrushin-Vasershtein influence sum: for each neighbor j the worst
// total-variation change of the update law under a single spin flip at j,
// maximized over achievable field pairs, summed over U_0. Ergodicity is
// guaranteed when the sum is < 1.
double dv_sum(const ClassCRule& rule);

// Smallest beta with dv_sum = 1, by bisection; tol is on beta.
double dv_threshold(const InteractionKernel& kernel, double tol = 1e-10);

} // namespace pcamix
