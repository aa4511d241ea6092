#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace ldp {

using SiteIndex = std::int32_t;
inline constexpr SiteIndex kNoSite = -1;

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Closed axis-aligned rectangle [x0,x1] x [y0,y1].
struct Rect {
    double x0 = 0.0;
    double x1 = 0.0;
    double y0 = 0.0;
    double y1 = 0.0;

    double width() const noexcept { return x1 - x0; }
    double height() const noexcept { return y1 - y0; }
    double area() const noexcept { return width() * height(); }
    double diameter() const noexcept;
    Point center() const noexcept { return {(x0 + x1) / 2, (y0 + y1) / 2}; }

    bool contains(Point p, double tol = 0.0) const noexcept {
        return p.x >= x0 - tol && p.x <= x1 + tol && p.y >= y0 - tol && p.y <= y1 + tol;
    }
    bool contains(const Rect& r, double tol = 0.0) const noexcept {
        return r.x0 >= x0 - tol && r.x1 <= x1 + tol && r.y0 >= y0 - tol && r.y1 <= y1 + tol;
    }
    Rect translated(double dx, double dy) const noexcept { return {x0 + dx, x1 + dx, y0 + dy, y1 + dy}; }
};

/// Axial lattice coordinates: the site (i, j) sits at eta * (i + j/2, j*sqrt(3)/2).
struct Axial {
    int i = 0;
    int j = 0;
    friend bool operator==(const Axial&, const Axial&) = default;
};

/// The six neighbour offsets in counter-clockwise order, starting at angle 0.
inline constexpr std::array<Axial, 6> kDirections{{{1, 0}, {0, 1}, {-1, 1}, {-1, 0}, {0, -1}, {1, -1}}};

inline constexpr Axial operator+(Axial a, Axial b) noexcept { return {a.i + b.i, a.j + b.j}; }

/// Triangular lattice with mesh `eta` restricted to a rectangular domain.
///
/// Sites are enumerated row by row (increasing j, then increasing i), so every
/// row occupies a contiguous index range with increasing x. Hexagonal cells are
/// implicit: each site owns the Voronoi cell of area (sqrt(3)/2) eta^2.
/// Immutable after construction.
class Lattice {
public:
    struct Row {
        int j = 0;
        int i_min = 0;
        int count = 0;
        SiteIndex start = 0;
    };

    double eta() const noexcept { return eta_; }
    const Rect& domain() const noexcept { return domain_; }
    std::size_t size() const noexcept { return axial_.size(); }
    double cell_area() const noexcept;
    double row_spacing() const noexcept;

    Point position(SiteIndex s) const noexcept { return position_[static_cast<std::size_t>(s)]; }
    Axial axial(SiteIndex s) const noexcept { return axial_[static_cast<std::size_t>(s)]; }
    Point position_of(Axial a) const noexcept;

    /// Index of the site with the given axial coordinates, or kNoSite.
    SiteIndex index_of(Axial a) const noexcept;

    /// Neighbour in direction `dir` (0..5), or kNoSite when it lies outside the domain.
    SiteIndex neighbor(SiteIndex s, int dir) const noexcept {
        return neighbors_[static_cast<std::size_t>(s)][static_cast<std::size_t>(dir)];
    }
    const std::array<SiteIndex, 6>& neighbor_slots(SiteIndex s) const noexcept {
        return neighbors_[static_cast<std::size_t>(s)];
    }
    /// Present neighbours only.
    std::vector<SiteIndex> neighbors(SiteIndex s) const;
    int degree(SiteIndex s) const noexcept;

    std::span<const Row> rows() const noexcept { return rows_; }
    /// Row record for lattice row j, or nullptr if the row is empty/out of range.
    const Row* row(int j) const noexcept;

    friend std::shared_ptr<const Lattice> build_lattice(double eta, const Rect& domain);

private:
    Lattice() = default;

    double eta_ = 0.0;
    Rect domain_{};
    int j_min_ = 0;
    std::vector<Row> rows_;
    std::vector<Axial> axial_;
    std::vector<Point> position_;
    std::vector<std::array<SiteIndex, 6>> neighbors_;
};

using LatticePtr = std::shared_ptr<const Lattice>;

/// Builds the lattice. Throws InvalidArgument for eta <= 0, a degenerate
/// (negative-size or non-finite) domain, or a domain holding no site;
/// BudgetError past 2^31 - 1 sites.
LatticePtr build_lattice(double eta, const Rect& domain);

/// Sites whose centre lies in the closed rectangle, in increasing index order.
std::vector<SiteIndex> sites_in_region(const Lattice& lat, const Rect& region);

enum class QuadOrientation {
    LeftRight,  ///< open sides are x = x0 and x = x1
    BottomTop,  ///< open sides are y = y0 and y = y1
};

/// Rectangular quad: a rectangle in the domain with a designated pair of
/// opposite sides to be connected.
struct RectQuad {
    Rect rect;
    QuadOrientation orientation = QuadOrientation::LeftRight;
};

/// Validated quad. The rectangle must have positive width and height and lie
/// in the (closed) lattice domain.
RectQuad make_quad(const Lattice& lat, const Rect& rect,
                   QuadOrientation orientation = QuadOrientation::LeftRight);

}  // namespace ldp
