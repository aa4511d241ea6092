#include "ldp/perc.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ldp/csv.hpp"
#include "ldp/error.hpp"
#include "ldp/four_arm.hpp"
#include "ldp/parallel.hpp"
#include "ldp/rng.hpp"

namespace ldp {

namespace {

constexpr double kRelTol = 1e-9;

void require_colors(const Configuration& cfg) {
    if (!cfg.lattice || cfg.colors.size() != cfg.lattice->size())
        throw InvalidArgument("configuration does not match its lattice");
}

Rect box_around(Point c, double r) { return {c.x - r, c.x + r, c.y - r, c.y + r}; }

bool arms_between(const Configuration& cfg, const AxialBox& outer, auto&& in_inner, std::span<const Axial> layer) {
    const Lattice& lat = *cfg.lattice;
    auto outside = [&](Axial a) { return !outer.contains(a); };
    auto open = [&](Axial a) { return cfg.colors[static_cast<std::size_t>(lat.index_of(a))] > 0; };
    return count_outward_crossings(layer, in_inner, outside, open) >= 2;
}

}  // namespace

Configuration sample_configuration(const LatticePtr& lat, std::uint64_t seed) {
    Configuration cfg{lat, std::vector<std::int8_t>(lat->size()), seed};
    const std::uint64_t key = mix64(seed);
    std::uint64_t word = 0;
    for (std::size_t s = 0; s < cfg.colors.size(); ++s) {
        if (s % 64 == 0) word = mix64(key ^ mix64(s / 64));
        cfg.colors[s] = ((word >> (s % 64)) & 1U) ? kOpen : kClosed;
    }
    return cfg;
}

Configuration constant_configuration(const LatticePtr& lat, std::int8_t color) {
    if (color != kOpen && color != kClosed) throw InvalidArgument("colour must be +1 or -1");
    return {lat, std::vector<std::int8_t>(lat->size(), color), 0};
}

bool color_connects(const Configuration& cfg, std::span<const SiteIndex> region, std::span<const SiteIndex> from,
                    std::span<const SiteIndex> to, std::int8_t color) {
    require_colors(cfg);
    const Lattice& lat = *cfg.lattice;
    // 0: not in region, 1: in region, 2: target, 3: visited
    std::vector<unsigned char> state(lat.size(), 0);
    for (SiteIndex s : region) state[static_cast<std::size_t>(s)] = 1;
    for (SiteIndex s : to)
        if (state[static_cast<std::size_t>(s)] == 1) state[static_cast<std::size_t>(s)] = 2;
    std::vector<SiteIndex> queue;
    for (SiteIndex s : from) {
        auto& st = state[static_cast<std::size_t>(s)];
        if (st == 0 || st == 3 || cfg.colors[static_cast<std::size_t>(s)] != color) continue;
        if (st == 2) return true;
        st = 3;
        queue.push_back(s);
    }
    for (std::size_t h = 0; h < queue.size(); ++h) {
        for (SiteIndex n : lat.neighbor_slots(queue[h])) {
            if (n == kNoSite) continue;
            auto& st = state[static_cast<std::size_t>(n)];
            if (st == 0 || st == 3 || cfg.colors[static_cast<std::size_t>(n)] != color) continue;
            if (st == 2) return true;
            st = 3;
            queue.push_back(n);
        }
    }
    return false;
}

PreparedQuad::PreparedQuad(LatticePtr lat, const RectQuad& q) : lat_(std::move(lat)), quad_(q) {
    sites_ = sites_in_region(*lat_, q.rect);
    if (sites_.empty()) return;
    first_ = sites_.front();
    local_.assign(static_cast<std::size_t>(sites_.back() - first_ + 1), -1);
    for (std::size_t l = 0; l < sites_.size(); ++l) local_[static_cast<std::size_t>(sites_[l] - first_)] = static_cast<int>(l);

    const double tol = kRelTol * lat_->eta();
    const double reach = q.orientation == QuadOrientation::LeftRight ? lat_->eta() : lat_->row_spacing();
    adj_.resize(sites_.size());
    target_.assign(sites_.size(), 0);
    for (std::size_t l = 0; l < sites_.size(); ++l) {
        const SiteIndex s = sites_[l];
        for (int d = 0; d < 6; ++d) {
            const SiteIndex n = lat_->neighbor(s, d);
            adj_[l][static_cast<std::size_t>(d)] = n == kNoSite ? -1 : local_of(n);
        }
        const Point p = lat_->position(s);
        const double u = q.orientation == QuadOrientation::LeftRight ? p.x : p.y;
        const double lo = q.orientation == QuadOrientation::LeftRight ? q.rect.x0 : q.rect.y0;
        const double hi = q.orientation == QuadOrientation::LeftRight ? q.rect.x1 : q.rect.y1;
        // A side holds the sites whose neighbour across that side lies outside the rectangle.
        if (u < lo + reach - tol) source_.push_back(static_cast<int>(l));
        if (u > hi - reach + tol) target_[l] = 1;
    }
    stamp_.assign(sites_.size(), 0);
    queue_.reserve(sites_.size());
}

int PreparedQuad::local_of(SiteIndex s) const noexcept {
    if (sites_.empty() || s < first_) return -1;
    const auto k = static_cast<std::size_t>(s - first_);
    return k < local_.size() ? local_[k] : -1;
}

bool PreparedQuad::crossed(std::span<const std::int8_t> colors, SiteIndex flip) const {
    if (sites_.empty()) return false;
    if (colors.size() != lat_->size()) throw InvalidArgument("colour vector does not match the quad's lattice");
    if (++epoch_ == 0) {
        std::fill(stamp_.begin(), stamp_.end(), 0U);
        epoch_ = 1;
    }
    const int flip_local = flip == kNoSite ? -1 : local_of(flip);
    auto is_open = [&](int l) {
        const bool o = colors[static_cast<std::size_t>(sites_[static_cast<std::size_t>(l)])] > 0;
        return l == flip_local ? !o : o;
    };
    queue_.clear();
    for (int l : source_) {
        if (!is_open(l)) continue;
        if (target_[static_cast<std::size_t>(l)]) return true;
        stamp_[static_cast<std::size_t>(l)] = epoch_;
        queue_.push_back(l);
    }
    for (std::size_t h = 0; h < queue_.size(); ++h) {
        for (int n : adj_[static_cast<std::size_t>(queue_[h])]) {
            if (n < 0 || stamp_[static_cast<std::size_t>(n)] == epoch_ || !is_open(n)) continue;
            if (target_[static_cast<std::size_t>(n)]) return true;
            stamp_[static_cast<std::size_t>(n)] = epoch_;
            queue_.push_back(n);
        }
    }
    return false;
}

CrossingResult crossing(const Configuration& cfg, const RectQuad& q) {
    require_colors(cfg);
    const PreparedQuad pq(cfg.lattice, q);
    if (pq.empty()) return {false, true};
    return {pq.crossed(cfg.colors), false};
}

bool pivotal_for(const Configuration& cfg, SiteIndex site, std::span<const RectQuad> quads) {
    require_colors(cfg);
    bool inside_any = false;
    bool all_now = true;
    bool all_flipped = true;
    for (const auto& q : quads) {
        const PreparedQuad pq(cfg.lattice, q);
        if (pq.contains(site)) inside_any = true;
        all_now = all_now && pq.crossed(cfg.colors);
        all_flipped = all_flipped && pq.crossed(cfg.colors, site);
    }
    return inside_any && all_now != all_flipped;
}

bool four_arm(const Configuration& cfg, SiteIndex site, double r_in, double r_out) {
    require_colors(cfg);
    const Lattice& lat = *cfg.lattice;
    if (r_in < lat.eta() * (1 - kRelTol)) throw InvalidArgument("four_arm needs r_in >= eta");
    if (!(r_out > r_in)) throw InvalidArgument("four_arm needs r_out > r_in");
    const Point c = lat.position(site);
    const Rect outer_rect = box_around(c, r_out);
    if (!lat.domain().contains(outer_rect, kRelTol * lat.eta()))
        throw InvalidArgument("four_arm annulus is clipped by the domain");
    const auto inner = AxialBox::from_rect(lat.eta(), box_around(c, r_in));
    const auto outer = AxialBox::from_rect(lat.eta(), outer_rect);
    const auto layer = inner.layer();
    return arms_between(cfg, outer, [&](Axial a) { return inner.contains(a); }, layer);
}

bool four_arm_from_site(const Configuration& cfg, SiteIndex site, const Rect& outer_rect) {
    require_colors(cfg);
    const Lattice& lat = *cfg.lattice;
    const double tol = kRelTol * lat.eta();
    if (!lat.domain().contains(outer_rect, tol)) throw InvalidArgument("four-arm box is clipped by the domain");
    if (!outer_rect.contains(lat.position(site), tol)) throw InvalidArgument("four-arm box must contain the site");
    const Axial origin = lat.axial(site);
    const auto outer = AxialBox::from_rect(lat.eta(), outer_rect);
    std::array<Axial, 6> layer{};
    std::size_t n = 0;
    for (const Axial d : kDirections)
        if (outer.contains(origin + d)) layer[n++] = origin + d;
    return arms_between(cfg, outer, [&](Axial a) { return a == origin; }, std::span<const Axial>(layer.data(), n));
}

std::optional<Rect> importance_box(const Lattice& lat, SiteIndex site, double eps) {
    const Rect& dom = lat.domain();
    const Point p = lat.position(site);
    auto cell = [&](double u) { return std::ceil(u / eps - kRelTol) - 1.0; };
    const double kx = cell(p.x - dom.x0);
    const double ky = cell(p.y - dom.y0);
    const Rect box{dom.x0 + (kx - 1) * eps, dom.x0 + (kx + 2) * eps, dom.y0 + (ky - 1) * eps, dom.y0 + (ky + 2) * eps};
    if (!dom.contains(box, kRelTol * lat.eta())) return std::nullopt;
    return box;
}

std::vector<SiteIndex> epsilon_important(const Configuration& cfg, double eps, unsigned threads) {
    require_colors(cfg);
    const Lattice& lat = *cfg.lattice;
    if (!(eps >= 4 * lat.eta() * (1 - kRelTol))) throw InvalidArgument("eps must be at least 4 eta");
    const std::size_t n = lat.size();
    std::vector<unsigned char> flag(n, 0);
    constexpr std::size_t kChunk = 1024;
    parallel_for((n + kChunk - 1) / kChunk, threads, [&](std::size_t c) {
        const std::size_t end = std::min(n, (c + 1) * kChunk);
        for (std::size_t s = c * kChunk; s < end; ++s) {
            const auto box = importance_box(lat, static_cast<SiteIndex>(s), eps);
            if (box && four_arm_from_site(cfg, static_cast<SiteIndex>(s), *box)) flag[s] = 1;
        }
    });
    std::vector<SiteIndex> out;
    for (std::size_t s = 0; s < n; ++s)
        if (flag[s]) out.push_back(static_cast<SiteIndex>(s));
    return out;
}

SiteMeasure pivotal_measure(const Configuration& cfg, double eps, const Alpha4Calibration& cal, unsigned threads) {
    require_colors(cfg);
    const Lattice& lat = *cfg.lattice;
    if (cal.empty()) throw CalibrationError("pivotal_measure needs an alpha4 calibration");
    if (std::abs(cal.eta - lat.eta()) > kRelTol * lat.eta())
        throw CalibrationError("alpha4 calibration mesh does not match the lattice");
    const double a4 = cal.at_mesh();
    if (!(a4 > 0.0)) throw CalibrationError("alpha4(eta, 1) must be positive");
    SiteMeasure m{cfg.lattice, std::vector<double>(lat.size(), 0.0), "pivotal eps=" + format_double(eps)};
    for (SiteIndex s : epsilon_important(cfg, eps, threads)) m.masses[static_cast<std::size_t>(s)] = lat.cell_area() / a4;
    return m;
}

double d_mod(const Configuration& a, const Configuration& b, int k_max) {
    require_colors(a);
    require_colors(b);
    if (a.lattice != b.lattice && a.colors.size() != b.colors.size())
        throw InvalidArgument("d_mod needs configurations on the same lattice");
    if (k_max < 1) throw InvalidArgument("k_max must be at least 1");
    const Lattice& lat = *a.lattice;
    const Rect& dom = lat.domain();

    auto points = [&](double extent, int k) { return static_cast<long double>(std::floor(extent * std::exp2(k) + kRelTol)) + 1; };
    long double total = 0;
    for (int k = 1; k <= k_max; ++k) {
        const long double nx = points(dom.width(), k), ny = points(dom.height(), k);
        total += nx * (nx - 1) / 2 * ny * (ny - 1);
        if (total > 1e7L) throw BudgetError("d_mod would enumerate more than 1e7 quads; lower k_max");
    }

    std::vector<SiteIndex> diff;
    for (std::size_t s = 0; s < a.colors.size(); ++s)
        if (a.colors[s] != b.colors[s]) diff.push_back(static_cast<SiteIndex>(s));
    if (diff.empty()) return 0.0;

    const double tol = kRelTol * lat.eta();
    for (int k = 1; k <= k_max; ++k) {
        const double g = std::exp2(-k);
        const int nx = static_cast<int>(points(dom.width(), k));
        const int ny = static_cast<int>(points(dom.height(), k));
        for (int x0 = 0; x0 < nx; ++x0)
            for (int x1 = x0 + 1; x1 < nx; ++x1)
                for (int y0 = 0; y0 < ny; ++y0)
                    for (int y1 = y0 + 1; y1 < ny; ++y1) {
                        const Rect r{dom.x0 + x0 * g, std::min(dom.x1, dom.x0 + x1 * g), dom.y0 + y0 * g,
                                     std::min(dom.y1, dom.y0 + y1 * g)};
                        const bool touched = std::any_of(diff.begin(), diff.end(), [&](SiteIndex s) {
                            return r.contains(lat.position(s), tol);
                        });
                        if (!touched) continue;
                        for (auto o : {QuadOrientation::LeftRight, QuadOrientation::BottomTop}) {
                            const PreparedQuad pq(a.lattice, {r, o});
                            if (pq.crossed(a.colors) != pq.crossed(b.colors)) return g;
                        }
                    }
    }
    return 0.0;
}

void write_sites_csv(std::ostream& os, const Lattice& lat, std::span<const SiteIndex> sites) {
    CsvWriter csv(os, {"site_index", "x", "y"});
    for (SiteIndex s : sites) {
        const Point p = lat.position(s);
        csv.row(s, p.x, p.y);
    }
}

}  // namespace ldp
