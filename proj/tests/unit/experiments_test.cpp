#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ldp/error.hpp"
#include "ldp/experiments.hpp"
#include "ldp/rng.hpp"

using namespace ldp;

TEST(Theta, Identities) {
    EXPECT_DOUBLE_EQ(theta(0.75, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(theta(2.0, 0.0), 1.0);
    EXPECT_NEAR(theta(0.75, std::sqrt(0.75)), 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(theta(0.75, 0.5), 0.5);
    EXPECT_THROW(theta(0.0, 0.5), InvalidArgument);
}

TEST(Regime, CentralChargeIdentities) {
    const auto zero = regime_classify(std::sqrt(1.0 / 6));
    EXPECT_NEAR(zero.Q, std::sqrt(1.5) + std::sqrt(2.0 / 3), 1e-12);
    EXPECT_NEAR(zero.c, 0.0, 1e-9);
    EXPECT_EQ(zero.regime, Regime::Stable);
    EXPECT_NEAR(regime_classify(kStableThreshold).c, 1.0, 1e-9);
    EXPECT_NEAR(regime_classify(std::nextafter(kFrozenThreshold, 0.0)).c, 16.0, 1e-9);
    EXPECT_EQ(regime_classify(kStableThreshold).regime, Regime::Intermediate);
    EXPECT_EQ(regime_classify(kFrozenThreshold).regime, Regime::Unresolved);
    EXPECT_EQ(regime_classify(0.3).regime, Regime::Stable);
    EXPECT_EQ(regime_classify(1.0).regime, Regime::Intermediate);
    EXPECT_EQ(regime_classify(1.5).regime, Regime::Supercritical);
    EXPECT_STREQ(to_string(Regime::Supercritical), "SUPERCRITICAL");
    EXPECT_THROW(regime_classify(0.0), InvalidArgument);
    EXPECT_THROW(regime_classify(2.0), InvalidArgument);
}

TEST(Regime, ChargeDecreasesInQ) {
    // Q = d/g + g/2 is decreasing on (0, sqrt(2d)); c falls as Q grows.
    double prev_q = 0.0, prev_c = 1e300;
    for (double g = 1.2; g > 0.05; g -= 0.01) {
        const auto r = regime_classify(g);
        EXPECT_GT(r.Q, prev_q);
        EXPECT_LT(r.c, prev_c);
        prev_q = r.Q;
        prev_c = r.c;
    }
}

TEST(PowerLaw, ExactInput) {
    std::vector<double> t, est, se;
    for (double x = 1; x <= 100; x *= 2) {
        t.push_back(x);
        est.push_back(0.2 * std::pow(x, -0.5));
        se.push_back(1e-6);
    }
    const auto fit = fit_power_law(t, est, se, 1.0);
    EXPECT_NEAR(fit.xi_hat, 0.5, 1e-6);
    EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
    EXPECT_EQ(fit.used_t.size(), t.size());
    EXPECT_TRUE(fit.excluded_t.empty());
    EXPECT_EQ(fit_power_law(t, est, se, 8.0).used_t.size(), 4u);
}

TEST(PowerLaw, ExponentialDecayFitsPoorly) {
    std::vector<double> t, est, se;
    for (double x = 0.5; x <= 20; x += 0.5) {
        t.push_back(x);
        est.push_back(std::exp(-x));
        se.push_back(0.0);
    }
    const auto fit = fit_power_law(t, est, se, 0.5);
    EXPECT_LT(fit.r_squared, 0.95);
    EXPECT_GT(fit.r_squared, 0.0);
}

TEST(PowerLaw, NoiseAroundZeroIsAnError) {
    CounterRng rng(3);
    std::vector<double> t, est, se;
    for (double x = 1; x <= 100; x *= 1.5) {
        t.push_back(x);
        est.push_back(0.01 * rng.normal());
        se.push_back(0.01);
    }
    try {
        fit_power_law(t, est, se, 1.0);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("excluded"), std::string::npos);
    }
    const std::vector<double> two{1, 2};
    EXPECT_THROW(fit_power_law(two, two, std::vector<double>{1}, 0.0), InvalidArgument);
}

TEST(Mixing, LagZeroAndMonotoneAtGammaZero) {
    MixingConfig cfg;
    cfg.eta = 1.0 / 16;
    cfg.t_grid = {0.01, 0.1, 1.0, 10.0};
    cfg.n_replicas = 400;
    cfg.seed = 5;
    const auto c = mixing_curve(cfg, fixed_alpha4(cfg.eta, 0.1));
    ASSERT_EQ(c.est_cov.size(), 4u);
    // At a tiny lag the covariance is close to p(1 - p).
    const double var0 = c.p0 * (1 - c.p0) * 400.0 / 399.0;
    EXPECT_NEAR(c.est_cov[0], var0, 3 * c.se[0] + 0.02);
    for (double s : c.se) EXPECT_GT(s, 0.0);
    for (std::size_t k = 1; k < c.est_cov.size(); ++k)
        EXPECT_LE(c.est_cov[k], c.est_cov[k - 1] + 2 * std::hypot(c.se[k], c.se[k - 1]));
    EXPECT_LT(c.est_cov.back(), 0.25 * c.est_cov.front());
    std::ostringstream os;
    write_mixing_csv(os, c);
    EXPECT_EQ(os.str().rfind("gamma,eta,mode,t,est_cov,se,n\n0,0.0625,annealed,0.01,", 0), 0u);
}

TEST(Mixing, DeterministicAcrossThreads) {
    MixingConfig cfg;
    cfg.gamma = 0.5;
    cfg.eta = 1.0 / 16;
    cfg.t_grid = {0.5, 5.0};
    cfg.n_replicas = 40;
    cfg.mode = MixingMode::Quenched;
    cfg.threads = 1;
    const auto cal = fixed_alpha4(cfg.eta, 0.1);
    const auto a = mixing_curve(cfg, cal);
    cfg.threads = 3;
    const auto b = mixing_curve(cfg, cal);
    EXPECT_EQ(a.est_cov, b.est_cov);
    EXPECT_EQ(a.se, b.se);
    EXPECT_EQ(parse_mixing_mode("quenched"), MixingMode::Quenched);
    EXPECT_THROW(parse_mixing_mode("both"), InvalidArgument);
    cfg.gamma = 2.5;
    EXPECT_THROW(mixing_curve(cfg, cal), InvalidArgument);
    cfg.gamma = 0.5;
    cfg.t_grid = {1.0, 0.5};
    EXPECT_THROW(mixing_curve(cfg, cal), InvalidArgument);
}

TEST(Frozen, ZeroTimeNeverFlips) {
    FrozenConfig cfg;
    cfg.etas = {1.0 / 16};
    cfg.t = 0.0;
    cfg.n_replicas = 10;
    const std::vector<Alpha4Calibration> cals{fixed_alpha4(1.0 / 16, 0.1)};
    const auto rows = frozen_check(cfg, cals);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].p_flip, 0.0);
    EXPECT_THROW(frozen_check(cfg, {}), InvalidArgument);
    std::ostringstream os;
    write_frozen_csv(os, 1.8, 0.0, rows);
    EXPECT_EQ(os.str(), "gamma,eta,t,p_flip,se,n\n1.8,0.0625,0,0,0,10\n");
}

TEST(Laplace, TrivialCases) {
    const auto lat = build_lattice(0.125, {0, 1, 0, 0.8});
    const auto base = lebesgue_measure(lat);
    const std::vector<double> t{0.0, 1.0, 4.0};
    const auto flat = laplace_decay_check(0.0, base, exact_log_kernel(2.0), t, 10, 1);
    for (const auto& row : flat.rows) EXPECT_NEAR(row.estimate, std::exp(-row.t * base.total()), 1e-14);
    const auto rep = laplace_decay_check(0.5, base, exact_log_kernel(2.0), t, 500, 2);
    EXPECT_EQ(rep.rows[0].estimate, 1.0);
    EXPECT_DOUBLE_EQ(rep.theta_bound, theta(0.75, 0.5));
    // Jensen: E[exp(-t mu)] >= exp(-t E[mu]).
    EXPECT_GE(rep.rows[2].estimate + 3 * rep.rows[2].se, std::exp(-4.0 * base.total()));
    std::ostringstream os;
    write_laplace_csv(os, 0.5, rep);
    EXPECT_EQ(os.str().rfind("gamma,t,estimate,se\n0.5,0,1,0\n", 0), 0u);
}
