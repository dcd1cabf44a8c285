#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace pcamix {

// A lattice point of Z^d. Comparison is lexicographic over coordinates;
// this order fixes all configuration indexing and file layouts.
class Site {
public:
    Site() = default;
    explicit Site(std::vector<int> coords) : coords_(std::move(coords)) {}
    static Site origin(int dim) { return Site(std::vector<int>(static_cast<std::size_t>(dim), 0)); }

    int dim() const { return static_cast<int>(coords_.size()); }
    int operator[](int i) const { return coords_[static_cast<std::size_t>(i)]; }
    const std::vector<int>& coords() const { return coords_; }

    int l1_norm() const;

    Site operator+(const Site& o) const;
    Site operator-(const Site& o) const;
    Site operator-() const;

    bool operator==(const Site&) const = default;
    auto operator<=>(const Site&) const = default;

    std::string to_string() const; // "(1,0)"

private:
    std::vector<int> coords_;
};

struct SiteHash {
    std::size_t operator()(const Site& s) const noexcept;
};

// Set of stencil offsets V_0; a site's neighborhood is V_k = k + V_0.
class NeighborhoodStencil {
public:
    NeighborhoodStencil(int dim, std::vector<Site> offsets);
    static NeighborhoodStencil nearest_neighbor(int dim);

    int dim() const { return dim_; }
    const std::vector<Site>& offsets() const { return offsets_; }
    int range() const { return range_; } // max L1 norm over offsets
    bool symmetric() const;              // closed under negation

private:
    int dim_ = 0;
    int range_ = 0;
    std::vector<Site> offsets_; // sorted, duplicate-free
};

// A finite non-empty subset of Z^d with a fixed lexicographic site order and
// O(1) site -> index lookup. Immutable and cheap to copy.
class BoxRegion {
public:
    static BoxRegion ball(int dim, int radius);                // L1 ball at the origin
    static BoxRegion ball_at(const Site& center, int radius);
    static BoxRegion of_sites(int dim, std::vector<Site> sites);

    int dim() const { return impl_->dim; }
    std::size_t size() const { return impl_->sites.size(); }
    const std::vector<Site>& sites() const { return impl_->sites; }
    const Site& site(std::size_t i) const { return impl_->sites[i]; }

    bool contains(const Site& s) const { return impl_->index.count(s) != 0; }
    std::optional<std::size_t> try_index(const Site& s) const;
    std::size_t index_of(const Site& s) const; // throws Error if absent

    BoxRegion translated(const Site& by) const;

    // True when constructed as an L1 ball centred at the origin.
    bool is_origin_ball() const;
    int ball_radius() const { return impl_->radius; } // -1 unless a ball

    bool is_subset_of(const BoxRegion& other) const;
    bool operator==(const BoxRegion& other) const;

private:
    struct Impl {
        int dim = 0;
        std::vector<Site> sites;
        std::unordered_map<Site, std::size_t, SiteHash> index;
        bool is_ball = false;
        Site center;
        int radius = -1;
    };
    explicit BoxRegion(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    static BoxRegion make(int dim, std::vector<Site> sites, bool is_ball, Site center, int radius);
    std::shared_ptr<const Impl> impl_;
};

// B_L = {k : |k|_1 <= L}.
BoxRegion ball(int dim, int radius);

// n-step dependence cone: Lambda^(0) = Lambda,
// Lambda^(m) = union over k in Lambda^(m-1) of ({k} union k + offsets).
// Sites once reached stay in the cone, so the cone is monotone in n.
BoxRegion dependence_cone(const BoxRegion& region, int steps, const NeighborhoodStencil& stencil);

// {k in Lambda : k + offsets not fully contained in Lambda}.
BoxRegion inner_boundary(const BoxRegion& region, const NeighborhoodStencil& stencil);

// Sites of Lambda^c reached by some k + offset, k in Lambda. This is exactly
// the set of boundary values a finite-volume dynamics on Lambda reads.
BoxRegion collar(const BoxRegion& region, const NeighborhoodStencil& stencil);

// True when every site of `inner` has its radius-r ball inside `outer`,
// i.e. dist_L1(inner, outer^c) > r.
bool contains_l1_neighborhood(const BoxRegion& outer, const BoxRegion& inner, int r);

} // namespace pcamix
