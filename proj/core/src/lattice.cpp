#include "ldp/lattice.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ldp/error.hpp"

namespace ldp {

namespace {

constexpr double kSqrt3Over2 = 0.86602540378443864676;

double tolerance(double eta) { return 1e-9 * eta; }

}  // namespace

double Rect::diameter() const noexcept { return std::hypot(width(), height()); }

double Lattice::cell_area() const noexcept { return kSqrt3Over2 * eta_ * eta_; }

double Lattice::row_spacing() const noexcept { return kSqrt3Over2 * eta_; }

Point Lattice::position_of(Axial a) const noexcept {
    return {eta_ * (a.i + 0.5 * a.j), eta_ * kSqrt3Over2 * a.j};
}

const Lattice::Row* Lattice::row(int j) const noexcept {
    const long k = static_cast<long>(j) - j_min_;
    if (k < 0 || k >= static_cast<long>(rows_.size())) return nullptr;
    const Row& r = rows_[static_cast<std::size_t>(k)];
    return r.count > 0 ? &r : nullptr;
}

SiteIndex Lattice::index_of(Axial a) const noexcept {
    const Row* r = row(a.j);
    if (r == nullptr) return kNoSite;
    const int off = a.i - r->i_min;
    if (off < 0 || off >= r->count) return kNoSite;
    return r->start + off;
}

std::vector<SiteIndex> Lattice::neighbors(SiteIndex s) const {
    std::vector<SiteIndex> out;
    out.reserve(6);
    for (SiteIndex n : neighbor_slots(s))
        if (n != kNoSite) out.push_back(n);
    return out;
}

int Lattice::degree(SiteIndex s) const noexcept {
    int d = 0;
    for (SiteIndex n : neighbor_slots(s)) d += (n != kNoSite);
    return d;
}

LatticePtr build_lattice(double eta, const Rect& domain) {
    if (!(eta > 0.0) || !std::isfinite(eta))
        throw InvalidArgument("eta must be positive and finite");
    if (!std::isfinite(domain.x0) || !std::isfinite(domain.x1) || !std::isfinite(domain.y0) ||
        !std::isfinite(domain.y1) || domain.width() < 0.0 || domain.height() < 0.0)
        throw InvalidArgument("domain is degenerate");

    const double tol = tolerance(eta);
    const double h = kSqrt3Over2 * eta;
    const double j_lo = std::ceil((domain.y0 - tol) / h);
    const double j_hi = std::floor((domain.y1 + tol) / h);
    if (j_hi - j_lo > 4e9) throw BudgetError("lattice exceeds 2^31 - 1 sites");

    std::shared_ptr<Lattice> lat(new Lattice());
    lat->eta_ = eta;
    lat->domain_ = domain;
    lat->j_min_ = static_cast<int>(j_lo);

    long long total = 0;
    for (double jd = j_lo; jd <= j_hi; jd += 1.0) {
        const int j = static_cast<int>(jd);
        const double i_lo = std::ceil((domain.x0 - tol) / eta - 0.5 * j);
        const double i_hi = std::floor((domain.x1 + tol) / eta - 0.5 * j);
        Lattice::Row r;
        r.j = j;
        r.i_min = static_cast<int>(i_lo);
        r.count = i_hi >= i_lo ? static_cast<int>(i_hi - i_lo + 1) : 0;
        r.start = static_cast<SiteIndex>(total);
        total += r.count;
        if (total > std::numeric_limits<SiteIndex>::max())
            throw BudgetError("lattice exceeds 2^31 - 1 sites");
        lat->rows_.push_back(r);
    }
    if (total == 0) throw InvalidArgument("domain contains no lattice site");

    const auto n = static_cast<std::size_t>(total);
    lat->axial_.reserve(n);
    lat->position_.reserve(n);
    for (const auto& r : lat->rows_) {
        for (int k = 0; k < r.count; ++k) {
            const Axial a{r.i_min + k, r.j};
            lat->axial_.push_back(a);
            lat->position_.push_back(lat->position_of(a));
        }
    }
    lat->neighbors_.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
        const Axial a = lat->axial_[s];
        for (std::size_t d = 0; d < 6; ++d) lat->neighbors_[s][d] = lat->index_of(a + kDirections[d]);
    }
    return lat;
}

std::vector<SiteIndex> sites_in_region(const Lattice& lat, const Rect& region) {
    std::vector<SiteIndex> out;
    const double eta = lat.eta();
    const double tol = tolerance(eta);
    for (const auto& r : lat.rows()) {
        if (r.count == 0) continue;
        const double y = lat.row_spacing() * r.j;
        if (y < region.y0 - tol || y > region.y1 + tol) continue;
        const double i_lo = std::max<double>(r.i_min, std::ceil((region.x0 - tol) / eta - 0.5 * r.j));
        const double i_hi =
            std::min<double>(r.i_min + r.count - 1, std::floor((region.x1 + tol) / eta - 0.5 * r.j));
        for (double i = i_lo; i <= i_hi; i += 1.0)
            out.push_back(r.start + static_cast<SiteIndex>(static_cast<int>(i) - r.i_min));
    }
    return out;
}

RectQuad make_quad(const Lattice& lat, const Rect& rect, QuadOrientation orientation) {
    if (!(rect.width() > 0.0) || !(rect.height() > 0.0))
        throw InvalidArgument("quad must have positive width and height");
    if (!lat.domain().contains(rect, tolerance(lat.eta())))
        throw InvalidArgument("quad must lie inside the lattice domain");
    return {rect, orientation};
}

}  // namespace ldp
