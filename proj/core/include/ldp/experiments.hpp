#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ldp/calibration.hpp"
#include "ldp/dynamics.hpp"
#include "ldp/field.hpp"
#include "ldp/gmc.hpp"
#include "ldp/lattice.hpp"

namespace ldp {

enum class MixingMode { Annealed, Quenched };

const char* to_string(MixingMode m) noexcept;
MixingMode parse_mixing_mode(const std::string& s);

struct MixingConfig {
    double gamma = 0.0;
    double eta = 0.0078125;
    Rect domain{0, 1, 0, 1};
    RectQuad quad{{0, 1, 0, 1}, QuadOrientation::LeftRight};
    std::vector<double> t_grid;
    std::size_t n_replicas = 400;
    MixingMode mode = MixingMode::Annealed;
    std::uint64_t seed = 1;
    /// Seed of the single field used in quenched mode.
    std::uint64_t field_seed = 1;
    /// DyadicBrw depth; 0 picks the smallest depth resolving the mesh.
    int brw_depth = 0;
    double C = kInfinity;
    std::size_t bootstrap = 200;
    unsigned threads = 0;
};

/// Cov(1_A(0), 1_A(t)) over replicas, A the crossing of the quad.
struct MixingCurve {
    MixingConfig config;
    std::vector<double> est_cov;
    std::vector<double> se;  ///< bootstrap standard error
    double p0 = 0.0;         ///< empirical crossing probability at time 0
};

/// Runs n_replicas LDP trajectories to max(t_grid), each from a fresh
/// critical configuration; annealed mode also draws a fresh field per replica.
MixingCurve mixing_curve(const MixingConfig& cfg, const Alpha4Calibration& cal);

struct PowerLawFit {
    double xi_hat = 0.0;  ///< decay exponent: est ~ t^-xi
    double stderr_ = 0.0;
    double r_squared = 0.0;
    std::vector<double> used_t;
    std::vector<double> excluded_t;  ///< grid points whose 2 SE interval touches 0
};

/// Least squares of log est_cov against log t over grid points t >= t_min
/// with est_cov - 2 se > 0. Needs four such points.
PowerLawFit fit_power_law(std::span<const double> t, std::span<const double> est, std::span<const double> se,
                          double t_min);
inline PowerLawFit fit_power_law(const MixingCurve& c, double t_min) {
    return fit_power_law(c.config.t_grid, c.est_cov, c.se, t_min);
}

/// (d - gamma^2) / (d + gamma^2).
double theta(double d, double gamma);

enum class Regime { Stable, Intermediate, Supercritical, Unresolved };
const char* to_string(Regime r) noexcept;

inline const double kStableThreshold = 2.0 - 1.5811388300841898;  // 2 - sqrt(5/2)
inline const double kFrozenThreshold = 1.2247448713915890;        // sqrt(3/2)

struct RegimeReport {
    double gamma = 0.0;
    double d = 0.75;
    Regime regime = Regime::Stable;
    double stable_threshold = kStableThreshold;
    double frozen_threshold = kFrozenThreshold;
    double Q = 0.0;  ///< d / gamma + gamma / 2
    double c = 0.0;  ///< 25 - 6 Q^2
};

RegimeReport regime_classify(double gamma, double d = 0.75);

struct FrozenRow {
    double eta = 0.0;
    double p_flip = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

struct FrozenConfig {
    double gamma = 1.8;
    std::vector<double> etas;
    RectQuad quad{{0, 1, 0, 1}, QuadOrientation::LeftRight};
    double t = 10.0;
    std::size_t n_replicas = 1000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

/// P(crossing of the quad differs between times 0 and t) per mesh, annealed
/// over BRW fields on the quad's rectangle. `cals[k]` calibrates etas[k].
std::vector<FrozenRow> frozen_check(const FrozenConfig& cfg, std::span<const Alpha4Calibration> cals);

struct LaplaceRow {
    double t = 0.0;
    double estimate = 0.0;
    double se = 0.0;
};

struct LaplaceReport {
    std::vector<LaplaceRow> rows;
    double fitted_slope = 0.0;  ///< log-log slope over the upper half of the positive-t grid
    double theta_bound = 0.0;   ///< theta(d, gamma)
    double base_total = 0.0;
};

/// Monte Carlo E[exp(-t mu(D))] over field replicas, mu the GMC of `base`.
LaplaceReport laplace_decay_check(double gamma, const SiteMeasure& base, const Kernel& kernel,
                                  std::span<const double> t_grid, std::size_t n_replicas, std::uint64_t seed,
                                  double d = 0.75, unsigned threads = 0);

/// Default BRW kernel resolving the lattice mesh.
Kernel default_brw_kernel(const Lattice& lat);

/// CSV writers (one row per grid point).
void write_mixing_csv(std::ostream& os, const MixingCurve& c);
void write_frozen_csv(std::ostream& os, double gamma, double t, std::span<const FrozenRow> rows);
void write_laplace_csv(std::ostream& os, double gamma, const LaplaceReport& rep);

}  // namespace ldp
