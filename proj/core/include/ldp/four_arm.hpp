#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <span>
#include <vector>

#include "ldp/error.hpp"
#include "ldp/lattice.hpp"

namespace ldp {

/// Counts percolation interfaces that leave an inner region and reach the
/// outside of an annulus, with the open side on the left when walking outward.
///
/// The lattice is addressed in axial coordinates through three predicates:
/// `in_inner(a)`, `outside(a)` (past the outer boundary) and `open(a)` (only
/// queried for annulus sites). `layer` lists the annulus sites adjacent to the
/// inner region. Both the inner region and the outside act as walls.
///
/// An interface starts at every triangle (L, L + d_k, L + d_{k-1}) with L open,
/// L + d_k closed and L + d_{k-1} inner, and advances across the triangle
/// (L, R, L + d_{k+1}) until it hits the inner region again or the outside.
/// Crossing interfaces alternate in orientation around the annulus, so the
/// four-arm event (open, closed, open, closed arms) holds iff at least two of
/// them go outward. Returns as soon as `stop_at` crossings are found.
template <class InInner, class Outside, class Open>
int count_outward_crossings(std::span<const Axial> layer, InInner&& in_inner, Outside&& outside, Open&& open,
                            int stop_at = 2, std::size_t max_steps = std::size_t(1) << 40) {
    int found = 0;
    std::size_t steps = 0;
    for (const Axial start : layer) {
        if (!open(start)) continue;
        for (int k = 0; k < 6; ++k) {
            if (!in_inner(start + kDirections[(k + 5) % 6])) continue;
            const Axial r0 = start + kDirections[k];
            if (in_inner(r0) || outside(r0) || open(r0)) continue;

            Axial left = start;
            int dir = k;  // right = left + d_dir
            for (;;) {
                const Axial t = left + kDirections[(dir + 1) % 6];
                if (in_inner(t)) break;
                if (outside(t)) {
                    if (++found >= stop_at) return found;
                    break;
                }
                if (open(t)) {
                    left = t;
                    dir = (dir + 5) % 6;
                } else {
                    dir = (dir + 1) % 6;
                }
                if (++steps > max_steps) throw NumericalError("interface exploration did not terminate");
            }
        }
    }
    return found;
}

/// Annulus sites adjacent to an inner region given as per-row closed index
/// intervals [lo, hi] for rows j0, j0+1, ... The region must be row-convex
/// (each row an interval) with no empty rows in between.
template <class InInner>
std::vector<Axial> inner_layer(int j0, std::span<const std::pair<int, int>> rows, InInner&& in_inner) {
    const int n = static_cast<int>(rows.size());
    auto nonempty = [&](int r) { return r >= 0 && r < n && rows[static_cast<std::size_t>(r)].first <= rows[static_cast<std::size_t>(r)].second; };
    std::vector<Axial> out;
    for (int r = -1; r <= n; ++r) {
        int lo_min = INT32_MAX, hi_max = INT32_MIN;
        for (int q = r - 1; q <= r + 1; ++q) {
            if (!nonempty(q)) continue;
            lo_min = std::min(lo_min, rows[static_cast<std::size_t>(q)].first);
            hi_max = std::max(hi_max, rows[static_cast<std::size_t>(q)].second);
        }
        if (lo_min > hi_max) continue;
        const int j = j0 + r;
        auto consider = [&](int lo, int hi) {
            for (int i = lo; i <= hi; ++i) {
                const Axial a{i, j};
                if (in_inner(a)) continue;
                bool adjacent = false;
                for (const Axial d : kDirections) adjacent = adjacent || in_inner(a + d);
                if (adjacent) out.push_back(a);
            }
        };
        if (nonempty(r)) {
            consider(lo_min - 1, rows[static_cast<std::size_t>(r)].first - 1);
            consider(rows[static_cast<std::size_t>(r)].second + 1, hi_max + 1);
        } else {
            consider(lo_min - 1, hi_max + 1);
        }
    }
    return out;
}

/// Lattice sites (in axial coordinates) whose centres lie in a closed
/// rectangle, stored as one index interval per row.
struct AxialBox {
    int j0 = 0;
    std::vector<std::pair<int, int>> rows;

    static AxialBox from_rect(double eta, const Rect& r) {
        constexpr double kH = 0.86602540378443864676;
        const double tol = 1e-9;
        AxialBox b;
        const int jlo = static_cast<int>(std::ceil(r.y0 / (kH * eta) - tol));
        const int jhi = static_cast<int>(std::floor(r.y1 / (kH * eta) + tol));
        b.j0 = jlo;
        for (int j = jlo; j <= jhi; ++j)
            b.rows.emplace_back(static_cast<int>(std::ceil(r.x0 / eta - 0.5 * j - tol)),
                                static_cast<int>(std::floor(r.x1 / eta - 0.5 * j + tol)));
        return b;
    }

    bool contains(Axial a) const noexcept {
        const long k = static_cast<long>(a.j) - j0;
        if (k < 0 || k >= static_cast<long>(rows.size())) return false;
        const auto& [lo, hi] = rows[static_cast<std::size_t>(k)];
        return a.i >= lo && a.i <= hi;
    }

    std::vector<Axial> layer() const {
        return inner_layer(j0, rows, [this](Axial a) { return contains(a); });
    }
};

}  // namespace ldp
