#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "ldp/calibration.hpp"
#include "ldp/field.hpp"
#include "ldp/gmc.hpp"
#include "ldp/perc.hpp"

namespace ldp {

/// Poisson clock rate per site: measure mass divided by alpha4(eta, 1).
struct ClockRates {
    LatticePtr lattice;
    std::vector<double> rates;
    double total_rate = 0.0;
    double alpha4 = 1.0;  ///< the normaliser used
};

ClockRates make_rates(const SiteMeasure& m, const Alpha4Calibration& cal);
/// Same with an explicit normaliser.
ClockRates make_rates(const SiteMeasure& m, double alpha4);

struct Event {
    double time = 0.0;
    SiteIndex site = 0;
    std::int8_t color = 0;
};

struct Trajectory {
    Configuration initial;
    Configuration final;  ///< state at the horizon
    double horizon = 0.0;
    std::uint64_t seed = 0;
    std::size_t event_count = 0;
    std::vector<Event> events;  ///< filled only when requested
    std::vector<double> sample_times;
    std::vector<std::vector<std::uint8_t>> crossed;  ///< [sample][quad]
    /// Per quad, number of changes of the crossing indicator inside the
    /// switch window; filled only in exact switch-counting mode.
    std::vector<std::size_t> switch_counts;
};

struct DynamicsOptions {
    bool record_events = false;
    /// Re-evaluate registered quads at every event that changes a colour inside them.
    bool exact_switches = false;
    double switch_window_start = 0.0;
    double switch_window_end = kInfinity;
};

/// Maximum number of expected events (total_rate * T) accepted by run_dp.
inline constexpr double kEventBudget = 1e9;

/// Dynamical percolation on [0, T]. Every site carries a marked Poisson
/// process: points with mark Gamma_k / T at times uniform on [0, T], keyed by
/// (seed, site, k); the site rings at the points with mark <= its rate and is
/// recoloured with an independent fair colour keyed the same way. Lowering
/// rates sitewise (same seed and T) therefore removes events without moving
/// the others. Sample times must be sorted and lie in [0, T].
Trajectory run_dp(const Configuration& init, const ClockRates& rates, double T, std::span<const RectQuad> quads,
                  std::span<const double> sample_times, std::uint64_t seed, const DynamicsOptions& opts = {});

struct LdpParams {
    double gamma = 0.0;
    double C = kInfinity;  ///< moderate-point cutoff; infinity disables truncation
    std::optional<double> rho;  ///< default_rho(gamma) when unset
};

/// The clock rates of Liouville dynamical percolation: GMC of the field over
/// Lebesgue measure, optionally truncated to the moderate set of constant C.
ClockRates ldp_rates(const Field& field, const LdpParams& p, const Alpha4Calibration& cal);

/// run_dp from an independent critical configuration (seed stream 1) with
/// dynamics driven by ldp_rates (seed stream 2).
Trajectory run_ldp(const Field& field, const LdpParams& p, const Alpha4Calibration& cal, double T,
                   std::span<const RectQuad> quads, std::span<const double> sample_times, std::uint64_t seed,
                   const DynamicsOptions& opts = {});

struct CoupledCutoffResult {
    Configuration at_c;        ///< omega^C(t)
    Configuration at_c_prime;  ///< the coupled copy of omega^{C'}(t)
    std::size_t discrepancies = 0;  ///< registered quads crossed by exactly one of them
    double correction_rate = 0.0;   ///< total rate of the correction dynamics
};

/// Two-level coupling of the C and C' cutoff systems (C < C', C' may be
/// infinite). The C-system runs on [0, t]; then correction dynamics with rates
/// from the GMC mass of M_{C'} minus M_C runs on [0, t] starting from
/// omega^C(t), and an event at (s, x) takes effect only if the C-system did
/// not update x during (s, t].
CoupledCutoffResult coupled_cutoff_run(const Field& field, double gamma, double C, double C_prime, double t,
                                       std::span<const RectQuad> quads, std::uint64_t seed,
                                       const Alpha4Calibration& cal, std::optional<double> rho = std::nullopt);

/// Monotone near-critical coupling. Each site gets tau ~ Exp(rate) keyed by
/// (seed, site). At lambda >= 0 a site is open if it was open in `init` or
/// tau <= lambda; at lambda < 0 it is closed if it was closed or tau <= -lambda.
/// `lambdas` must be sorted and contain 0.
std::vector<Configuration> near_critical(const Configuration& init, const ClockRates& rates,
                                         std::span<const double> lambdas, std::uint64_t seed);

/// Exact pivotal probability of every site for the crossing of q, by
/// enumerating all colourings of the quad's sites (at most 24 of them).
std::vector<double> exact_pivotal_probabilities(const LatticePtr& lat, const RectQuad& q);

struct SwitchCountReport {
    double observed_mean = 0.0;
    double observed_se = 0.0;
    double predicted = 0.0;
    double predicted_se = 0.0;  ///< 0 when pivotal probabilities are exact
    bool predicted_exact = false;
    double z_score = 0.0;
    std::size_t n_replicas = 0;
};

/// Compares the mean number of crossing changes of q during [T1, T2] in
/// stationary dynamics with (T2 - T1) * sum_x rate_x * P(x pivotal) / 2 (a
/// ring changes the colour with probability 1/2). Pivotal probabilities are
/// enumerated exactly for quads with at most 16 sites, otherwise estimated
/// from n_replicas independent static configurations.
SwitchCountReport switch_count_check(const ClockRates& rates, const RectQuad& q, double T1, double T2,
                                     std::size_t n_replicas, std::uint64_t seed, unsigned threads = 0);

/// CSV with header sample_time,quad_id,crossed.
void write_trajectory_csv(std::ostream& os, const Trajectory& tr);
/// CSV with header time,site,new_color.
void write_events_csv(std::ostream& os, const Trajectory& tr);

}  // namespace ldp
