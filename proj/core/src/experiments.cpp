#include "ldp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ldp/csv.hpp"
#include "ldp/error.hpp"
#include "ldp/parallel.hpp"
#include "ldp/rng.hpp"
#include "ldp/stats.hpp"

namespace ldp {

namespace {

constexpr std::uint64_t kFieldStream = 0xF1E1D;
constexpr std::uint64_t kBootstrapStream = 0xB007;

double sample_cov(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b, std::span<const std::size_t> idx) {
    const double n = static_cast<double>(idx.size());
    double sa = 0, sb = 0, sab = 0;
    for (std::size_t k : idx) {
        sa += a[k];
        sb += b[k];
        sab += a[k] * b[k];
    }
    return (sab - sa * sb / n) / (n - 1);
}

void validate_grid(std::span<const double> t_grid) {
    if (t_grid.empty()) throw InvalidArgument("t grid must not be empty");
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        if (!(t_grid[k] > 0.0) || !std::isfinite(t_grid[k])) throw InvalidArgument("t grid values must be positive");
        if (k > 0 && !(t_grid[k] > t_grid[k - 1])) throw InvalidArgument("t grid must be strictly increasing");
    }
}

}  // namespace

const char* to_string(MixingMode m) noexcept { return m == MixingMode::Annealed ? "annealed" : "quenched"; }

MixingMode parse_mixing_mode(const std::string& s) {
    if (s == "annealed") return MixingMode::Annealed;
    if (s == "quenched") return MixingMode::Quenched;
    throw InvalidArgument("mode must be annealed or quenched");
}

Kernel default_brw_kernel(const Lattice& lat) {
    return brw_kernel(DyadicGeometry::for_domain(lat.domain()).min_depth(lat.eta()));
}

MixingCurve mixing_curve(const MixingConfig& cfg, const Alpha4Calibration& cal) {
    if (!(cfg.gamma >= 0.0 && cfg.gamma < 2.0)) throw InvalidArgument("gamma out of [0,2)");
    validate_grid(cfg.t_grid);
    if (cfg.n_replicas < 2) throw InvalidArgument("need at least two replicas");
    const auto lat = build_lattice(cfg.eta, cfg.domain);
    const RectQuad quad = make_quad(*lat, cfg.quad.rect, cfg.quad.orientation);
    const Kernel kernel = cfg.brw_depth > 0 ? brw_kernel(cfg.brw_depth) : default_brw_kernel(*lat);
    const LdpParams params{cfg.gamma, cfg.C, std::nullopt};
    const double T = cfg.t_grid.back();

    std::vector<double> samples{0.0};
    samples.insert(samples.end(), cfg.t_grid.begin(), cfg.t_grid.end());
    const std::array<RectQuad, 1> quads{quad};

    std::optional<Field> quenched;
    if (cfg.mode == MixingMode::Quenched) quenched = sample_field(lat, kernel, cfg.field_seed);
    auto flat_field = [&] {
        Field f;
        f.lattice = lat;
        f.kernel = kernel;
        f.values.assign(lat->size(), 0.0);
        f.variance.assign(lat->size(), 1.0);
        return f;
    };
    const std::optional<Field> flat = cfg.gamma == 0.0 ? std::optional<Field>(flat_field()) : std::nullopt;

    const std::size_t nt = samples.size();
    std::vector<std::vector<std::uint8_t>> x(nt, std::vector<std::uint8_t>(cfg.n_replicas));
    parallel_for(cfg.n_replicas, cfg.threads, [&](std::size_t r) {
        std::optional<Field> own;
        const Field* field = nullptr;
        if (flat) {
            field = &*flat;
        } else if (quenched) {
            field = &*quenched;
        } else {
            own = sample_field(lat, kernel, derive_seed(cfg.seed ^ kFieldStream, r));
            field = &*own;
        }
        const auto tr = run_ldp(*field, params, cal, T, quads, samples, derive_seed(cfg.seed, r));
        for (std::size_t k = 0; k < nt; ++k) x[k][r] = tr.crossed[k][0];
    });

    MixingCurve out;
    out.config = cfg;
    out.config.quad = quad;
    std::vector<std::size_t> all(cfg.n_replicas);
    for (std::size_t r = 0; r < all.size(); ++r) all[r] = r;
    double open0 = 0;
    for (auto v : x[0]) open0 += v;
    out.p0 = open0 / static_cast<double>(cfg.n_replicas);

    std::vector<std::vector<std::size_t>> boot(cfg.bootstrap, std::vector<std::size_t>(cfg.n_replicas));
    CounterRng rng(derive_seed(cfg.seed, kBootstrapStream));
    for (auto& b : boot)
        for (auto& i : b) i = static_cast<std::size_t>(rng() % cfg.n_replicas);

    for (std::size_t k = 1; k < nt; ++k) {
        out.est_cov.push_back(sample_cov(x[0], x[k], all));
        stats::RunningStats st;
        for (const auto& b : boot) st.add(sample_cov(x[0], x[k], b));
        out.se.push_back(std::sqrt(st.variance()));
    }
    return out;
}

PowerLawFit fit_power_law(std::span<const double> t, std::span<const double> est, std::span<const double> se,
                          double t_min) {
    if (t.size() != est.size() || t.size() != se.size()) throw InvalidArgument("fit inputs have different lengths");
    PowerLawFit fit;
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (!(t[k] >= t_min) || !(t[k] > 0.0)) continue;
        if (est[k] > 0.0 && est[k] - 2 * se[k] > 0.0) {
            fit.used_t.push_back(t[k]);
            lx.push_back(std::log(t[k]));
            ly.push_back(std::log(est[k]));
        } else {
            fit.excluded_t.push_back(t[k]);
        }
    }
    if (lx.size() < 4)
        throw Error("fit", "power-law fit needs 4 grid points with positive estimates clear of 0; got " +
                               std::to_string(lx.size()) + " (" + std::to_string(fit.excluded_t.size()) +
                               " excluded)");
    const auto lf = stats::fit_line(lx, ly);
    fit.xi_hat = -lf.slope;
    fit.stderr_ = lf.slope_stderr;
    fit.r_squared = lf.r_squared;
    return fit;
}

double theta(double d, double gamma) {
    if (!(d > 0.0)) throw InvalidArgument("d must be positive");
    return (d - gamma * gamma) / (d + gamma * gamma);
}

const char* to_string(Regime r) noexcept {
    switch (r) {
        case Regime::Stable: return "STABLE";
        case Regime::Intermediate: return "INTERMEDIATE";
        case Regime::Supercritical: return "SUPERCRITICAL";
        case Regime::Unresolved: return "UNRESOLVED";
    }
    return "?";
}

RegimeReport regime_classify(double gamma, double d) {
    if (!(gamma > 0.0 && gamma < 2.0)) throw InvalidArgument("gamma out of (0,2)");
    if (!(d > 0.0)) throw InvalidArgument("d must be positive");
    RegimeReport rep;
    rep.gamma = gamma;
    rep.d = d;
    if (gamma < kStableThreshold)
        rep.regime = Regime::Stable;
    else if (gamma < kFrozenThreshold)
        rep.regime = Regime::Intermediate;
    else if (gamma == kFrozenThreshold)
        rep.regime = Regime::Unresolved;
    else
        rep.regime = Regime::Supercritical;
    rep.Q = d / gamma + gamma / 2;
    rep.c = 25 - 6 * rep.Q * rep.Q;
    return rep;
}

std::vector<FrozenRow> frozen_check(const FrozenConfig& cfg, std::span<const Alpha4Calibration> cals) {
    if (!(cfg.gamma >= 0.0 && cfg.gamma < 2.0)) throw InvalidArgument("gamma out of [0,2)");
    if (cals.size() != cfg.etas.size()) throw InvalidArgument("need one calibration per mesh");
    if (!(cfg.t >= 0.0)) throw InvalidArgument("t must be non-negative");
    if (cfg.n_replicas < 2) throw InvalidArgument("need at least two replicas");
    std::vector<FrozenRow> rows;
    for (std::size_t e = 0; e < cfg.etas.size(); ++e) {
        FrozenRow row{cfg.etas[e], 0.0, 0.0, cfg.n_replicas};
        if (cfg.t == 0.0) {
            rows.push_back(row);
            continue;
        }
        const auto lat = build_lattice(cfg.etas[e], cfg.quad.rect);
        const RectQuad quad = make_quad(*lat, cfg.quad.rect, cfg.quad.orientation);
        const Kernel kernel = default_brw_kernel(*lat);
        const std::array<RectQuad, 1> quads{quad};
        const std::array<double, 2> samples{0.0, cfg.t};
        const LdpParams params{cfg.gamma, kInfinity, std::nullopt};
        std::vector<std::uint8_t> flip(cfg.n_replicas, 0);
        const std::uint64_t seed = derive_seed(cfg.seed, e);
        parallel_for(cfg.n_replicas, cfg.threads, [&](std::size_t r) {
            const Field field = sample_field(lat, kernel, derive_seed(seed ^ kFieldStream, r));
            const auto tr = run_ldp(field, params, cals[e], cfg.t, quads, samples, derive_seed(seed, r));
            flip[r] = tr.crossed[0][0] != tr.crossed[1][0];
        });
        double hits = 0;
        for (auto f : flip) hits += f;
        const double n = static_cast<double>(cfg.n_replicas);
        row.p_flip = hits / n;
        row.se = std::sqrt(std::max(row.p_flip * (1 - row.p_flip), 1.0 / n) / n);
        rows.push_back(row);
    }
    return rows;
}

LaplaceReport laplace_decay_check(double gamma, const SiteMeasure& base, const Kernel& kernel,
                                  std::span<const double> t_grid, std::size_t n_replicas, std::uint64_t seed,
                                  double d, unsigned threads) {
    if (!(gamma >= 0.0 && gamma < 2.0)) throw InvalidArgument("gamma out of [0,2)");
    if (!base.lattice) throw InvalidArgument("base measure has no lattice");
    if (!(base.total() > 0.0)) throw InvalidArgument("base measure must have positive total mass");
    if (n_replicas < 2) throw InvalidArgument("need at least two replicas");
    for (double t : t_grid)
        if (!(t >= 0.0)) throw InvalidArgument("t grid values must be non-negative");

    std::vector<double> totals(n_replicas, base.total());
    if (gamma > 0.0) {
        std::optional<CholeskySampler> chol;
        if (kernel.kind == KernelKind::ExactLog) chol.emplace(base.lattice, kernel);
        parallel_for(n_replicas, threads, [&](std::size_t r) {
            const std::uint64_t s = derive_seed(seed, r);
            const Field f = chol ? chol->sample(s) : sample_field(base.lattice, kernel, s);
            totals[r] = gmc_measure(f, gamma, base).total();
        });
    }

    LaplaceReport rep;
    rep.base_total = base.total();
    rep.theta_bound = theta(d, gamma);
    std::vector<double> lx, ly;
    for (double t : t_grid) {
        stats::RunningStats st;
        for (double m : totals) st.add(std::exp(-t * m));
        rep.rows.push_back({t, st.mean(), st.stderr_of_mean()});
    }
    std::vector<const LaplaceRow*> positive;
    for (const auto& row : rep.rows)
        if (row.t > 0.0 && row.estimate > 0.0) positive.push_back(&row);
    for (std::size_t k = positive.size() / 2; k < positive.size(); ++k) {
        lx.push_back(std::log(positive[k]->t));
        ly.push_back(std::log(positive[k]->estimate));
    }
    if (lx.size() >= 2) rep.fitted_slope = stats::fit_line(lx, ly).slope;
    return rep;
}

void write_mixing_csv(std::ostream& os, const MixingCurve& c) {
    CsvWriter csv(os, {"gamma", "eta", "mode", "t", "est_cov", "se", "n"});
    for (std::size_t k = 0; k < c.est_cov.size(); ++k)
        csv.row(c.config.gamma, c.config.eta, to_string(c.config.mode), c.config.t_grid[k], c.est_cov[k], c.se[k],
                c.config.n_replicas);
}

void write_frozen_csv(std::ostream& os, double gamma, double t, std::span<const FrozenRow> rows) {
    CsvWriter csv(os, {"gamma", "eta", "t", "p_flip", "se", "n"});
    for (const auto& r : rows) csv.row(gamma, r.eta, t, r.p_flip, r.se, r.n);
}

void write_laplace_csv(std::ostream& os, double gamma, const LaplaceReport& rep) {
    CsvWriter csv(os, {"gamma", "t", "estimate", "se"});
    for (const auto& r : rep.rows) csv.row(gamma, r.t, r.estimate, r.se);
}

}  // namespace ldp
