#pragma once

// Independent reference implementations used only by tests.

#include <cmath>
#include <functional>
#include <set>
#include <utility>
#include <vector>

#include "ldp/lattice.hpp"
#include "ldp/perc.hpp"

namespace ldp::oracle {

/// Sites of the triangular lattice in a rectangle, by scanning a generous index box.
inline std::vector<Point> enumerate_sites(double eta, const Rect& d) {
    std::vector<Point> out;
    const double h = std::sqrt(3.0) / 2 * eta;
    const int jlo = static_cast<int>(std::floor(d.y0 / h)) - 2;
    const int jhi = static_cast<int>(std::ceil(d.y1 / h)) + 2;
    for (int j = jlo; j <= jhi; ++j) {
        const int ilo = static_cast<int>(std::floor(d.x0 / eta - j / 2.0)) - 2;
        const int ihi = static_cast<int>(std::ceil(d.x1 / eta - j / 2.0)) + 2;
        for (int i = ilo; i <= ihi; ++i) {
            const Point p{eta * (i + j / 2.0), h * j};
            const double tol = 1e-9 * eta;
            if (p.x >= d.x0 - tol && p.x <= d.x1 + tol && p.y >= d.y0 - tol && p.y <= d.y1 + tol) out.push_back(p);
        }
    }
    return out;
}

/// Four-arm event by cluster counting: the annulus (sites in `annulus`)
/// holds at least two open and two closed clusters that touch both the inner
/// region and the outside.
inline bool four_arm_by_clusters(const Configuration& cfg, const std::vector<unsigned char>& annulus,
                                 const std::vector<unsigned char>& inner) {
    const Lattice& lat = *cfg.lattice;
    const std::size_t n = lat.size();
    std::vector<int> label(n, -1);
    int open_crossing = 0, closed_crossing = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (!annulus[s] || label[s] >= 0) continue;
        bool touches_in = false, touches_out = false;
        std::vector<SiteIndex> stack{static_cast<SiteIndex>(s)};
        label[s] = static_cast<int>(s);
        while (!stack.empty()) {
            const SiteIndex v = stack.back();
            stack.pop_back();
            for (int d = 0; d < 6; ++d) {
                const SiteIndex w = lat.neighbor(v, d);
                if (w == kNoSite) {
                    touches_out = true;
                    continue;
                }
                const auto wi = static_cast<std::size_t>(w);
                if (inner[wi]) touches_in = true;
                if (!annulus[wi] && !inner[wi]) touches_out = true;
                if (annulus[wi] && label[wi] < 0 && cfg.colors[wi] == cfg.colors[s]) {
                    label[wi] = static_cast<int>(s);
                    stack.push_back(w);
                }
            }
        }
        if (touches_in && touches_out) (cfg.colors[s] > 0 ? open_crossing : closed_crossing)++;
    }
    return open_crossing >= 2 && closed_crossing >= 2;
}

/// Pivotality by recomputing the crossing from scratch with color_connects.
inline bool crossing_by_sets(const Configuration& cfg, const RectQuad& q) {
    const Lattice& lat = *cfg.lattice;
    const auto region = sites_in_region(lat, q.rect);
    std::vector<SiteIndex> a, b;
    for (SiteIndex s : region) {
        const Point p = lat.position(s);
        const bool lr = q.orientation == QuadOrientation::LeftRight;
        const double u = lr ? p.x : p.y;
        const double reach = lr ? lat.eta() : lat.row_spacing();
        const double lo = lr ? q.rect.x0 : q.rect.y0;
        const double hi = lr ? q.rect.x1 : q.rect.y1;
        if (u < lo + reach - 1e-9 * lat.eta()) a.push_back(s);
        if (u > hi - reach + 1e-9 * lat.eta()) b.push_back(s);
    }
    return color_connects(cfg, region, a, b, kOpen);
}

}  // namespace ldp::oracle
