#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ldp/error.hpp"
#include "ldp/lattice.hpp"
#include "oracles.hpp"

using namespace ldp;

TEST(Lattice, UnitSquareAtUnitMeshMatchesEnumeration) {
    const auto lat = build_lattice(1.0, {0, 1, 0, 1});
    const auto ref = oracle::enumerate_sites(1.0, {0, 1, 0, 1});
    ASSERT_EQ(lat->size(), ref.size());
    EXPECT_EQ(lat->size(), 3u);  // (0,0), (1,0), (0.5, sqrt3/2)
    EXPECT_NEAR(lat->position(2).x, 0.5, 1e-15);
    EXPECT_NEAR(lat->position(2).y, std::sqrt(3.0) / 2, 1e-15);
}

TEST(Lattice, CountMatchesEnumerationOnAssortedDomains) {
    const std::vector<std::pair<double, Rect>> cases = {
        {0.5, {0, 1, 0, 1}}, {0.1, {0, 1, 0, 1}}, {0.07, {-0.3, 0.9, 0.2, 1.1}}, {1.0 / 64, {0, 2, 0, 1}},
        {0.25, {0.1, 0.6, 0, 1}}};
    for (const auto& [eta, d] : cases) {
        const auto lat = build_lattice(eta, d);
        EXPECT_EQ(lat->size(), oracle::enumerate_sites(eta, d).size()) << "eta=" << eta;
    }
}

TEST(Lattice, CellArea) {
    for (double eta : {1.0, 0.3, 1e-3}) {
        const auto lat = build_lattice(eta, {0, 1, 0, 1});
        EXPECT_DOUBLE_EQ(lat->cell_area(), std::sqrt(3.0) / 2 * eta * eta);
    }
}

TEST(Lattice, InteriorSitesHaveSixNeighbours) {
    int interior = 0;
    const auto big = build_lattice(0.5, {0, 3, 0, 3});
    for (SiteIndex s = 0; s < static_cast<SiteIndex>(big->size()); ++s) {
        const Point p = big->position(s);
        if (p.x >= 0.5 && p.x <= 2.5 && p.y >= 0.5 && p.y <= 2.5) {
            EXPECT_EQ(big->degree(s), 6);
            ++interior;
        }
    }
    EXPECT_GT(interior, 10);
}

TEST(Lattice, NeighbourDistanceAndSymmetry) {
    const auto lat = build_lattice(0.01, {0, 2, 0, 1.5});
    ASSERT_LT(lat->size(), 100000u);
    for (SiteIndex s = 0; s < static_cast<SiteIndex>(lat->size()); ++s) {
        EXPECT_LE(lat->degree(s), 6);
        for (SiteIndex n : lat->neighbors(s)) {
            const Point a = lat->position(s), b = lat->position(n);
            ASSERT_NEAR(std::hypot(a.x - b.x, a.y - b.y), 0.01, 1e-12 * 0.01 * 10);
            const auto back = lat->neighbors(n);
            ASSERT_NE(std::find(back.begin(), back.end(), s), back.end());
        }
    }
}

TEST(Lattice, CellAreasFitInDomain) {
    const auto lat = build_lattice(0.05, {0, 1, 0, 1});
    const double r = 0.05 / std::sqrt(3.0);  // hexagon circumradius
    double inside = 0.0;
    for (SiteIndex s = 0; s < static_cast<SiteIndex>(lat->size()); ++s) {
        const Point p = lat->position(s);
        if (p.x - r >= 0 && p.x + r <= 1 && p.y - r >= 0 && p.y + r <= 1) inside += lat->cell_area();
    }
    EXPECT_LE(inside, 1.0);
}

TEST(Lattice, TranslationByOneMeshShiftsSites) {
    const double eta = 0.1;
    const auto a = build_lattice(eta, {0, 1, 0, 1});
    const auto b = build_lattice(eta, {eta, 1 + eta, 0, 1});
    ASSERT_EQ(a->size(), b->size());
    for (SiteIndex s = 0; s < static_cast<SiteIndex>(a->size()); ++s) {
        EXPECT_NEAR(a->position(s).x + eta, b->position(s).x, 1e-12);
        EXPECT_NEAR(a->position(s).y, b->position(s).y, 1e-12);
    }
}

TEST(Lattice, Deterministic) {
    const auto a = build_lattice(0.03, {0, 1, 0, 1});
    const auto b = build_lattice(0.03, {0, 1, 0, 1});
    ASSERT_EQ(a->size(), b->size());
    for (SiteIndex s = 0; s < static_cast<SiteIndex>(a->size()); ++s) EXPECT_EQ(a->axial(s), b->axial(s));
}

TEST(Lattice, RejectsBadInput) {
    EXPECT_THROW(build_lattice(0.0, {0, 1, 0, 1}), InvalidArgument);
    EXPECT_THROW(build_lattice(-1.0, {0, 1, 0, 1}), InvalidArgument);
    EXPECT_THROW(build_lattice(0.1, {1, 0, 0, 1}), InvalidArgument);
    EXPECT_THROW(build_lattice(0.1, {0, NAN, 0, 1}), InvalidArgument);
    EXPECT_THROW(build_lattice(1.0, {0.2, 0.4, 0.2, 0.4}), InvalidArgument);
}

TEST(SitesInRegion, WholeDomainAndEmptySliver) {
    const auto lat = build_lattice(0.1, {0, 1, 0, 1});
    EXPECT_EQ(sites_in_region(*lat, lat->domain()).size(), lat->size());
    EXPECT_TRUE(sites_in_region(*lat, {0.01, 0.04, 0.0, 0.05}).empty());
}

TEST(SitesInRegion, HalvesPartitionTheDomain) {
    const auto lat = build_lattice(0.1, {0, 1, 0, 1});
    // Split at a line that holds no site centre, so the closed halves are disjoint.
    const auto left = sites_in_region(*lat, {0, 0.52, 0, 1});
    const auto right = sites_in_region(*lat, {0.52, 1, 0, 1});
    std::vector<int> seen(lat->size(), 0);
    for (auto s : left) ++seen[static_cast<std::size_t>(s)];
    for (auto s : right) ++seen[static_cast<std::size_t>(s)];
    for (int c : seen) EXPECT_EQ(c, 1);
}

TEST(SitesInRegion, MatchesDirectFilter) {
    const auto lat = build_lattice(0.037, {0, 1, 0, 1});
    const Rect r{0.13, 0.71, 0.2, 0.55};
    std::vector<SiteIndex> ref;
    for (SiteIndex s = 0; s < static_cast<SiteIndex>(lat->size()); ++s)
        if (r.contains(lat->position(s), 1e-12)) ref.push_back(s);
    EXPECT_EQ(sites_in_region(*lat, r), ref);
}

TEST(Quad, Validation) {
    const auto lat = build_lattice(0.1, {0, 1, 0, 1});
    EXPECT_NO_THROW(make_quad(*lat, {0, 1, 0, 1}));
    EXPECT_THROW(make_quad(*lat, {0, 1.5, 0, 1}), InvalidArgument);
    EXPECT_THROW(make_quad(*lat, {0.5, 0.5, 0, 1}), InvalidArgument);
}
