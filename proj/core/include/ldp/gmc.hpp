#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "ldp/calibration.hpp"
#include "ldp/field.hpp"
#include "ldp/lattice.hpp"

namespace ldp {

/// Non-negative mass per hexagonal cell. Every measure in the model
/// (Lebesgue, LQG, pivotal, spectral, truncations) is one of these,
/// distinguished by `label`.
struct SiteMeasure {
    LatticePtr lattice;
    std::vector<double> masses;
    std::string label;

    double total() const noexcept;
};

/// Sites whose LQG ball masses stay below C alpha4(2^-n,1) 2^(-n rho) at all
/// dyadic scales 2^-n >= eta, n >= 1.
struct ModerateSet {
    double C = 0.0;
    double rho = 0.0;
    std::vector<unsigned char> member;

    std::size_t count() const noexcept;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

SiteMeasure lebesgue_measure(const LatticePtr& lat);

/// Wick-normalised GMC: mass_i = exp(gamma h_i - gamma^2 Var h_i / 2) * base_i.
SiteMeasure gmc_measure(const Field& field, double gamma, const SiteMeasure& base);

/// Sum over ordered pairs i != j of m_i m_j / |x_i - x_j|^d plus the
/// self-pair term sum_i m_i^2 / (eta/2)^d.
double d_energy(const SiteMeasure& m, double d);
/// Direct O(N^2) summation (the default up to 2e4 sites).
double d_energy_direct(const SiteMeasure& m, double d);
/// Autocorrelation of the mass grid by FFT over axial offsets; exact up to
/// round-off, used above 2e4 sites.
double d_energy_fft(const SiteMeasure& m, double d);

/// Prefix sums per lattice row; answers disk-mass queries in O(radius / eta).
class BallMass {
public:
    explicit BallMass(const SiteMeasure& m);
    /// Mass of the cells whose centres lie within distance r of `center`.
    double operator()(Point center, double r) const noexcept;

private:
    LatticePtr lat_;
    std::vector<double> prefix_;  // per row: prefix_[start + row_index + k] = sum of first k masses
};

/// Default moderate-point exponent: ((3/8 - gamma^2/4) / 2) clipped to [0.01, 0.2].
double default_rho(double gamma) noexcept;

ModerateSet moderate_set(const SiteMeasure& gmc, double C, double rho, const Alpha4Calibration& cal);

SiteMeasure truncate_measure(const SiteMeasure& m, const ModerateSet& ms);

/// CSV with header site_index,x,y,mass.
void write_measure_csv(std::ostream& os, const SiteMeasure& m);

}  // namespace ldp
