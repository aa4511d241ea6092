#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ldp/error.hpp"
#include "ldp/field.hpp"
#include "ldp/stats.hpp"

using namespace ldp;
using namespace ldp::stats;

TEST(CholeskyField, SingleSiteVariance) {
    const auto lat = build_lattice(0.5, {0, 0.4, 0, 0.4});
    ASSERT_EQ(lat->size(), 1u);
    const CholeskySampler sampler(lat, exact_log_kernel(1.0, 0.25));
    EXPECT_NEAR(sampler.covariance(0, 0), std::log(1.0 / 0.25) + 0.25, 1e-14);
    RunningStats st;
    for (std::uint64_t k = 0; k < 20000; ++k) {
        const auto f = sampler.sample(k);
        EXPECT_DOUBLE_EQ(f.variance[0], sampler.covariance(0, 0));
        st.add(f.values[0] * f.values[0]);
    }
    EXPECT_NEAR(st.mean(), sampler.covariance(0, 0), 4 * st.stderr_of_mean());
}

TEST(CholeskyField, TwoSitesCovariance) {
    const double eta = 0.1;
    const auto lat = build_lattice(eta, {0, 0.15, 0, 0.05});
    ASSERT_EQ(lat->size(), 2u);
    const CholeskySampler sampler(lat, exact_log_kernel(1.0));
    EXPECT_NEAR(sampler.covariance(0, 1), std::log(1 / eta), 1e-14);
    RunningStats prod;
    for (std::uint64_t k = 0; k < 1000000; ++k) {
        const auto f = sampler.sample(k);
        prod.add(f.values[0] * f.values[1]);
    }
    EXPECT_NEAR(prod.mean(), std::log(1 / eta), 3 * prod.stderr_of_mean());
}

TEST(CholeskyField, Deterministic) {
    const auto lat = build_lattice(0.1, {0, 1, 0, 1});
    const auto a = sample_field_cholesky(lat, exact_log_kernel(2.0), 9);
    const auto b = sample_field_cholesky(lat, exact_log_kernel(2.0), 9);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.variance, b.variance);
}

TEST(CholeskyField, EmpiricalCovarianceMatchesKernel) {
    const auto lat = build_lattice(0.1, {0, 0.9, 0, 0.75});
    ASSERT_LE(lat->size(), 100u);
    ASSERT_GE(lat->size(), 80u);
    const CholeskySampler sampler(lat, exact_log_kernel(2.0));
    const std::size_t n = lat->size();
    const std::size_t reps = 10000;
    std::vector<std::vector<double>> draws;
    draws.reserve(reps);
    for (std::size_t k = 0; k < reps; ++k) draws.push_back(sampler.sample(k).values);

    std::size_t ok = 0, total = 0, mean_ok = 0;
    for (std::size_t i = 0; i < n; ++i) {
        RunningStats m;
        for (const auto& d : draws) m.add(d[i]);
        mean_ok += std::abs(m.mean()) <= 4 * m.stderr_of_mean();
        for (std::size_t j = i; j < n; ++j) {
            RunningStats st;
            for (const auto& d : draws) st.add(d[i] * d[j]);
            const double k = sampler.covariance(static_cast<SiteIndex>(i), static_cast<SiteIndex>(j));
            ok += std::abs(st.mean() - k) <= 4 * st.stderr_of_mean();
            ++total;
        }
    }
    EXPECT_GE(static_cast<double>(ok), 0.99 * static_cast<double>(total));
    EXPECT_GE(static_cast<double>(mean_ok), 0.99 * static_cast<double>(n));
}

TEST(CholeskyField, Preconditions) {
    const auto lat = build_lattice(0.1, {0, 1, 0, 1});
    EXPECT_THROW(CholeskySampler(lat, exact_log_kernel(0.5)), InvalidArgument);
    EXPECT_THROW(CholeskySampler(lat, brw_kernel(4)), InvalidArgument);
    const auto big = build_lattice(0.01, {0, 1, 0, 1});
    EXPECT_THROW(CholeskySampler(big, exact_log_kernel(2.0)), BudgetError);
}

TEST(BrwField, CovarianceByAncestorCount) {
    const auto geo = DyadicGeometry::for_domain({0, 1, 0, 1});
    const int depth = 10;
    const Point p{0.3, 0.3};
    EXPECT_DOUBLE_EQ(brw_covariance(geo, depth, p, p), (depth + 1) * std::log(2.0));
    EXPECT_DOUBLE_EQ(brw_covariance(geo, depth, {0.2, 0.2}, {0.7, 0.2}), std::log(2.0));
    // |x - y| = 2^-5: common levels are 5 or 6 depending on alignment.
    for (double x0 : {0.1, 0.3, 0.51, 0.77}) {
        const double c = brw_covariance(geo, depth, {x0, 0.4}, {x0 + 1.0 / 32, 0.4}) / std::log(2.0);
        EXPECT_GE(c, 1.0);
        EXPECT_LE(c, 6.0);
        // Direct count of shared squares.
        int shared = 0;
        for (int l = 0; l <= depth; ++l) {
            const double side = std::exp2(-l);
            shared += std::floor(x0 / side) == std::floor((x0 + 1.0 / 32) / side);
        }
        EXPECT_DOUBLE_EQ(c, shared);
    }
    const double aligned = brw_covariance(geo, depth, {0.5 + 0.001, 0.4}, {0.5 + 0.001 + 1.0 / 32, 0.4}) / std::log(2.0);
    EXPECT_TRUE(aligned == 5.0 || aligned == 6.0);
}

TEST(BrwField, VarianceAndMinDepth) {
    const auto lat = build_lattice(1.0 / 64, {0, 1, 0, 1});
    const auto geo = DyadicGeometry::for_domain(lat->domain());
    const int depth = geo.min_depth(lat->eta());
    EXPECT_EQ(depth, 6);
    const auto f = sample_field_brw(lat, brw_kernel(depth), 4);
    for (double v : f.variance) EXPECT_DOUBLE_EQ(v, (depth + 1) * std::log(2.0));
    EXPECT_THROW(sample_field_brw(lat, brw_kernel(0), 4), InvalidArgument);
}

TEST(BrwField, CovarianceIsLogCorrelated) {
    const auto lat = build_lattice(1.0 / 32, {0, 1, 0, 1});
    const auto geo = DyadicGeometry::for_domain(lat->domain());
    const int depth = geo.min_depth(lat->eta());
    double lo = 1e300, hi = -1e300;
    for (SiteIndex a = 0; a < static_cast<SiteIndex>(lat->size()); a += 3)
        for (SiteIndex b = a + 1; b < static_cast<SiteIndex>(lat->size()); b += 5) {
            const Point p = lat->position(a), q = lat->position(b);
            const double g = brw_covariance(geo, depth, p, q) - std::log(1 / std::hypot(p.x - q.x, p.y - q.y));
            lo = std::min(lo, g);
            hi = std::max(hi, g);
        }
    // The additive correction is bounded above by a few multiples of log 2; closeness of
    // straddling pairs makes it unbounded below, so only the upper side is a constant.
    EXPECT_LT(hi, 3 * std::log(2.0));
    EXPECT_LT(lo, 0.0);
}

TEST(BrwField, EmpiricalMatchesAncestorCovariance) {
    const auto lat = build_lattice(0.25, {0, 1, 0, 1});
    const auto geo = DyadicGeometry::for_domain(lat->domain());
    const int depth = 3;
    std::vector<std::vector<double>> draws;
    for (std::uint64_t k = 0; k < 20000; ++k) draws.push_back(sample_field_brw(lat, brw_kernel(depth), k).values);
    for (SiteIndex i = 0; i < static_cast<SiteIndex>(lat->size()); ++i)
        for (SiteIndex j = i; j < static_cast<SiteIndex>(lat->size()); ++j) {
            RunningStats st;
            for (const auto& d : draws) st.add(d[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(j)]);
            EXPECT_NEAR(st.mean(), brw_covariance(geo, depth, lat->position(i), lat->position(j)),
                        5 * st.stderr_of_mean());
        }
}

TEST(FieldSnapshot, RoundTrip) {
    const auto lat = build_lattice(0.1, {0, 1, 0, 1});
    const auto f = sample_field(lat, exact_log_kernel(2.0, 0.01), 77);
    std::stringstream ss;
    write_field_snapshot(ss, f);
    const auto g = read_field_snapshot(ss, lat);
    EXPECT_EQ(f.values, g.values);
    EXPECT_EQ(f.variance, g.variance);
    EXPECT_EQ(g.seed, 77u);
    EXPECT_EQ(g.kernel.kind, KernelKind::ExactLog);
    EXPECT_DOUBLE_EQ(g.kernel.ridge, f.kernel.ridge);
    std::stringstream bad("nope");
    EXPECT_THROW(read_field_snapshot(bad, lat), InvalidArgument);
}
