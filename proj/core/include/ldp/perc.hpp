#pragma once

#include <cstdint>
#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "ldp/calibration.hpp"
#include "ldp/gmc.hpp"
#include "ldp/lattice.hpp"

namespace ldp {

inline constexpr std::int8_t kOpen = 1;
inline constexpr std::int8_t kClosed = -1;

/// One colour per site: +1 open (black), -1 closed (white).
struct Configuration {
    LatticePtr lattice;
    std::vector<std::int8_t> colors;
    std::uint64_t seed = 0;

    bool open(SiteIndex s) const noexcept { return colors[static_cast<std::size_t>(s)] > 0; }
};

/// Critical (p = 1/2) iid configuration; colour of site s is a pure function of (seed, s).
Configuration sample_configuration(const LatticePtr& lat, std::uint64_t seed);
Configuration constant_configuration(const LatticePtr& lat, std::int8_t color);

/// True iff some path of sites of colour `color` inside `region` joins a site
/// of `from` to a site of `to`. `region` is a list of site indices; `from` and
/// `to` are taken to be subsets of it.
bool color_connects(const Configuration& cfg, std::span<const SiteIndex> region, std::span<const SiteIndex> from,
                    std::span<const SiteIndex> to, std::int8_t color = kOpen);

/// A quad with its site set, local adjacency and side sets precomputed, for
/// repeated crossing queries on configurations of one lattice.
///
/// Sites inside the closed rectangle take part. For a left-right quad the
/// sides are the sites within eta of x = x0 and of x = x1; for bottom-top the
/// sites within one row spacing of y = y0 and of y = y1. Queries reuse
/// internal scratch space, so concurrent callers need their own copies.
class PreparedQuad {
public:
    PreparedQuad(LatticePtr lat, const RectQuad& q);

    const RectQuad& quad() const noexcept { return quad_; }
    bool empty() const noexcept { return sites_.empty(); }
    std::span<const SiteIndex> sites() const noexcept { return sites_; }
    /// True iff the site lies in the quad.
    bool contains(SiteIndex s) const noexcept { return local_of(s) >= 0; }

    /// Open crossing between the two designated sides. `flip` (optional)
    /// evaluates the configuration with that one site's colour inverted.
    bool crossed(std::span<const std::int8_t> colors, SiteIndex flip = kNoSite) const;

private:
    int local_of(SiteIndex s) const noexcept;

    LatticePtr lat_;
    RectQuad quad_;
    std::vector<SiteIndex> sites_;
    std::vector<std::array<int, 6>> adj_;
    std::vector<int> source_;
    std::vector<unsigned char> target_;
    SiteIndex first_ = 0;
    std::vector<int> local_;  // global index - first_ -> local index or -1
    mutable std::vector<unsigned> stamp_;
    mutable unsigned epoch_ = 0;
    mutable std::vector<int> queue_;
};

struct CrossingResult {
    bool crossed = false;
    bool empty_quad = false;  ///< the quad holds no site; crossed is false
};

CrossingResult crossing(const Configuration& cfg, const RectQuad& q);
inline bool crosses(const Configuration& cfg, const RectQuad& q) { return crossing(cfg, q).crossed; }

/// Whether flipping `site` changes "every quad is crossed". False for sites outside all quads.
bool pivotal_for(const Configuration& cfg, SiteIndex site, std::span<const RectQuad> quads);

/// Four alternating arms from the closed box of half-side r_in around `site`
/// to the outside of the box of half-side r_out. Throws if r_in < eta,
/// r_out <= r_in, or the outer box is not inside the domain.
bool four_arm(const Configuration& cfg, SiteIndex site, double r_in, double r_out);

/// Four alternating arms from the site itself to the outside of `outer`,
/// which must contain the site and lie in the domain.
bool four_arm_from_site(const Configuration& cfg, SiteIndex site, const Rect& outer);

/// The 3 eps square around the eps-grid square holding `site`, or nullopt if it
/// leaves the domain. The grid is anchored at the domain's lower-left corner; a
/// site on a grid line belongs to the square with the smaller index.
std::optional<Rect> importance_box(const Lattice& lat, SiteIndex site, double eps);

/// Sites with four arms from themselves to the boundary of their importance box.
std::vector<SiteIndex> epsilon_important(const Configuration& cfg, double eps, unsigned threads = 1);

/// cell_area / alpha4(eta, 1) on every eps-important site.
SiteMeasure pivotal_measure(const Configuration& cfg, double eps, const Alpha4Calibration& cal,
                            unsigned threads = 1);

/// Largest 2^-k (k = 1..k_max) such that some rectangle with corners on the
/// 2^-k grid (anchored at the domain corner), in either orientation, is crossed
/// by exactly one of a, b; 0 if none. Throws BudgetError past 1e7 quads.
double d_mod(const Configuration& a, const Configuration& b, int k_max);

/// CSV with header site_index,x,y.
void write_sites_csv(std::ostream& os, const Lattice& lat, std::span<const SiteIndex> sites);

}  // namespace ldp
