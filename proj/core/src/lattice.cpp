#include "pcamix/lattice.hpp"

#include "pcamix/errors.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <sstream>

namespace pcamix {

int Site::l1_norm() const {
    int n = 0;
    for (int c : coords_) n += std::abs(c);
    return n;
}

Site Site::operator+(const Site& o) const {
    std::vector<int> c(coords_);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += o.coords_[i];
    return Site(std::move(c));
}

Site Site::operator-(const Site& o) const {
    std::vector<int> c(coords_);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] -= o.coords_[i];
    return Site(std::move(c));
}

Site Site::operator-() const {
    std::vector<int> c(coords_);
    for (int& x : c) x = -x;
    return Site(std::move(c));
}

std::string Site::to_string() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < coords_.size(); ++i) {
        if (i) os << ',';
        os << coords_[i];
    }
    os << ')';
    return os.str();
}

std::size_t SiteHash::operator()(const Site& s) const noexcept {
    // FNV-1a over the coordinate words.
    std::uint64_t h = 1469598103934665603ULL;
    for (int c : s.coords()) {
        h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(c));
        h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
}

NeighborhoodStencil::NeighborhoodStencil(int dim, std::vector<Site> offsets) : dim_(dim) {
    if (dim < 1) throw Error("stencil dimension must be >= 1");
    for (const Site& s : offsets) {
        if (s.dim() != dim) throw Error("stencil offset dimension mismatch");
    }
    std::sort(offsets.begin(), offsets.end());
    offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());
    offsets_ = std::move(offsets);
    for (const Site& s : offsets_) range_ = std::max(range_, s.l1_norm());
}

NeighborhoodStencil NeighborhoodStencil::nearest_neighbor(int dim) {
    std::vector<Site> offs;
    for (int i = 0; i < dim; ++i) {
        for (int sgn : {-1, 1}) {
            std::vector<int> c(static_cast<std::size_t>(dim), 0);
            c[static_cast<std::size_t>(i)] = sgn;
            offs.emplace_back(std::move(c));
        }
    }
    return NeighborhoodStencil(dim, std::move(offs));
}

bool NeighborhoodStencil::symmetric() const {
    for (const Site& s : offsets_) {
        if (!std::binary_search(offsets_.begin(), offsets_.end(), -s)) return false;
    }
    return true;
}

BoxRegion BoxRegion::make(int dim, std::vector<Site> sites, bool is_ball, Site center, int radius) {
    if (dim < 1) throw Error("region dimension must be >= 1");
    if (sites.empty()) throw Error("region must be non-empty");
    for (const Site& s : sites) {
        if (s.dim() != dim) throw Error("region site dimension mismatch");
    }
    std::sort(sites.begin(), sites.end());
    sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
    auto impl = std::make_shared<Impl>();
    impl->dim = dim;
    impl->sites = std::move(sites);
    impl->index.reserve(impl->sites.size());
    for (std::size_t i = 0; i < impl->sites.size(); ++i) impl->index.emplace(impl->sites[i], i);
    impl->is_ball = is_ball;
    impl->center = std::move(center);
    impl->radius = is_ball ? radius : -1;
    return BoxRegion(std::move(impl));
}

namespace {

void enumerate_ball(int dim, int radius, std::vector<int>& coords, int depth, int budget,
                    std::vector<Site>& out) {
    if (depth == dim) {
        out.emplace_back(coords);
        return;
    }
    for (int c = -budget; c <= budget; ++c) {
        coords[static_cast<std::size_t>(depth)] = c;
        enumerate_ball(dim, radius, coords, depth + 1, budget - std::abs(c), out);
    }
}

} // namespace

BoxRegion BoxRegion::ball(int dim, int radius) {
    return ball_at(Site::origin(dim), radius);
}

BoxRegion BoxRegion::ball_at(const Site& center, int radius) {
    if (radius < 0) throw Error("ball radius must be >= 0");
    std::vector<Site> sites;
    std::vector<int> coords(static_cast<std::size_t>(center.dim()), 0);
    enumerate_ball(center.dim(), radius, coords, 0, radius, sites);
    for (Site& s : sites) s = s + center;
    return make(center.dim(), std::move(sites), true, center, radius);
}

BoxRegion BoxRegion::of_sites(int dim, std::vector<Site> sites) {
    return make(dim, std::move(sites), false, Site::origin(dim), -1);
}

std::optional<std::size_t> BoxRegion::try_index(const Site& s) const {
    auto it = impl_->index.find(s);
    if (it == impl_->index.end()) return std::nullopt;
    return it->second;
}

std::size_t BoxRegion::index_of(const Site& s) const {
    auto it = impl_->index.find(s);
    if (it == impl_->index.end()) throw Error("site " + s.to_string() + " not in region");
    return it->second;
}

BoxRegion BoxRegion::translated(const Site& by) const {
    std::vector<Site> sites;
    sites.reserve(size());
    for (const Site& s : impl_->sites) sites.push_back(s + by);
    return make(dim(), std::move(sites), impl_->is_ball, impl_->center + by, impl_->radius);
}

bool BoxRegion::is_origin_ball() const {
    return impl_->is_ball && impl_->center == Site::origin(dim());
}

bool BoxRegion::is_subset_of(const BoxRegion& other) const {
    for (const Site& s : impl_->sites) {
        if (!other.contains(s)) return false;
    }
    return true;
}

bool BoxRegion::operator==(const BoxRegion& other) const {
    return impl_ == other.impl_ || impl_->sites == other.impl_->sites;
}

BoxRegion ball(int dim, int radius) {
    return BoxRegion::ball(dim, radius);
}

BoxRegion dependence_cone(const BoxRegion& region, int steps, const NeighborhoodStencil& stencil) {
    if (steps < 0) throw Error("dependence cone steps must be >= 0");
    if (stencil.dim() != region.dim()) throw Error("stencil/region dimension mismatch");
    std::set<Site> cur(region.sites().begin(), region.sites().end());
    for (int m = 0; m < steps; ++m) {
        std::set<Site> next(cur);
        for (const Site& k : cur) {
            for (const Site& off : stencil.offsets()) next.insert(k + off);
        }
        cur.swap(next);
    }
    return BoxRegion::of_sites(region.dim(), std::vector<Site>(cur.begin(), cur.end()));
}

BoxRegion inner_boundary(const BoxRegion& region, const NeighborhoodStencil& stencil) {
    std::vector<Site> out;
    for (const Site& k : region.sites()) {
        for (const Site& off : stencil.offsets()) {
            if (!region.contains(k + off)) {
                out.push_back(k);
                break;
            }
        }
    }
    return BoxRegion::of_sites(region.dim(), std::move(out));
}

BoxRegion collar(const BoxRegion& region, const NeighborhoodStencil& stencil) {
    std::set<Site> out;
    for (const Site& k : region.sites()) {
        for (const Site& off : stencil.offsets()) {
            Site j = k + off;
            if (!region.contains(j)) out.insert(j);
        }
    }
    return BoxRegion::of_sites(region.dim(), std::vector<Site>(out.begin(), out.end()));
}

bool contains_l1_neighborhood(const BoxRegion& outer, const BoxRegion& inner, int r) {
    const BoxRegion probe = ball(inner.dim(), r);
    for (const Site& k : inner.sites()) {
        for (const Site& off : probe.sites()) {
            if (!outer.contains(k + off)) return false;
        }
    }
    return true;
}

} // namespace pcamix
