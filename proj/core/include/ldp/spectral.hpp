#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "ldp/calibration.hpp"
#include "ldp/dynamics.hpp"
#include "ldp/gmc.hpp"
#include "ldp/lattice.hpp"

namespace ldp {

using SubsetMask = std::uint32_t;

inline constexpr int kMaxTransformBits = 25;
inline constexpr int kMaxBruteForceBits = 14;

/// Boolean function on n sites: values[mask] in {-1, +1}, where bit k of the
/// mask is the colour of site_ids[k] (1 = open = +1).
struct TruthTable {
    std::vector<SiteIndex> site_ids;
    std::vector<std::int8_t> values;

    int n() const noexcept { return static_cast<int>(site_ids.size()); }
};

/// Builds a table from a predicate on masks (true -> +1). site_ids default to 0..n-1.
TruthTable make_truth_table(int n, const std::function<bool(SubsetMask)>& f, std::vector<SiteIndex> site_ids = {});
TruthTable dictator(int n, int k);
TruthTable majority3();
TruthTable constant_function(int n, std::int8_t value);

/// Fourier-Walsh coefficients fhat(S) = E[f chi_S], indexed by subset mask.
std::vector<double> walsh_transform(const TruthTable& tt);

/// Law of the spectral sample: weight(S) = fhat(S)^2.
struct SpectralDistribution {
    std::vector<SiteIndex> site_ids;
    double f_hat_empty = 0.0;
    /// Non-empty subsets with weight above 1e-18, increasing mask order.
    std::vector<std::pair<SubsetMask, double>> weights;

    double weight(SubsetMask s) const noexcept;
    /// E|S| = sum over S of |S| weight(S).
    double mean_size() const noexcept;
};

/// Throws NumericalError if Parseval fails by more than 1e-10.
SpectralDistribution spectral_distribution(std::span<const double> coeffs, std::vector<SiteIndex> site_ids);
inline SpectralDistribution spectral_distribution(const TruthTable& tt) {
    return spectral_distribution(walsh_transform(tt), tt.site_ids);
}

/// cell_area / alpha4(eta, 1) on the sites of S.
SiteMeasure spectral_measure(std::span<const SiteIndex> sample, const LatticePtr& lat, const Alpha4Calibration& cal);

/// Clock rate of each bit, read from lattice-wide rates through site_ids.
std::vector<double> bit_rates(std::span<const SiteIndex> site_ids, const ClockRates& rates);

/// Cov[f(omega_0), f(omega_t)] = sum over non-empty S of fhat(S)^2 exp(-t sum_{x in S} rate_x).
double covariance_spectral(const SpectralDistribution& dist, std::span<const double> rates, double t);
double covariance_spectral(const SpectralDistribution& dist, const ClockRates& rates, double t);

/// The same covariance by summing over all pairs (omega_0, omega_t) with the
/// exact two-time law of each site, (1 + a b e^{-t rate}) / 4. n <= 14.
double covariance_bruteforce(const TruthTable& tt, std::span<const double> rates, double t);
double covariance_bruteforce(const TruthTable& tt, const ClockRates& rates, double t);
/// Cov[f(omega_0), g(omega_t)] for two tables on the same sites.
double cross_covariance_bruteforce(const TruthTable& f, const TruthTable& g, std::span<const double> rates, double t);

struct IntensityReport {
    std::vector<double> spectral_one;  ///< P(x in S) per bit
    std::vector<double> pivotal_one;   ///< P(x pivotal) per bit
    double max_one_point = 0.0;        ///< max |P(x in S) - P(x pivotal)|
    double max_two_point = 0.0;        ///< max over x < y of |P(x,y in S) - P(x,y pivotal)|
};

/// Exact one- and two-point spectral and pivotal intensities. n <= 14.
IntensityReport intensity_check(const TruthTable& tt);

/// f = +1 iff every quad is crossed, as a function of the colours of the
/// sites lying in the union of the quads (at most 25).
TruthTable crossing_truth_table(const LatticePtr& lat, std::span<const RectQuad> quads);

/// CSV with header mask,weight over the subsets of non-negligible weight,
/// the empty set first.
void write_spectrum_csv(std::ostream& os, const SpectralDistribution& dist);

}  // namespace ldp
