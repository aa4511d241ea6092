#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ldp {

/// Monte Carlo estimate of the four-arm probability alpha4(r, 1) on the
/// lattice of mesh `eta`, tabulated at a set of radii.
struct Alpha4Calibration {
    struct Entry {
        double r = 0.0;
        double alpha4 = 0.0;
        double se = 0.0;
        std::uint64_t n = 0;
        bool upper_bound = false;  ///< no successes: alpha4 holds a 95% upper bound
    };

    double eta = 0.0;
    std::uint64_t seed = 0;
    std::vector<Entry> entries;  ///< sorted by decreasing r
    /// Slope used when fewer than two usable entries exist.
    double default_slope = 1.25;

    bool empty() const noexcept { return entries.empty(); }

    /// Least-squares slope of log alpha4 against log r over the usable entries
    /// (r < 1, not flagged). Positive; about 5/4 at criticality.
    double fitted_slope() const;

    /// alpha4(r, 1): 1 for r >= 1, log-linear interpolation between tabulated
    /// radii, and extrapolation with the fitted slope outside the table.
    double at(double r) const;

    /// alpha4(eta, 1), the clock-rate normaliser.
    double at_mesh() const { return at(eta); }
};

/// A calibration holding a single known value of alpha4(eta, 1). Used when the
/// normaliser is fixed by hand (tests, tiny instances).
Alpha4Calibration fixed_alpha4(double eta, double alpha4_at_mesh, double slope = 1.25);

struct CalibrationOptions {
    std::uint64_t n_samples = 10000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    /// Directory of the on-disk cache; empty disables caching.
    std::filesystem::path cache_dir;
};

/// Estimates alpha4(r, 1) for each radius by sampling critical percolation on
/// the triangular lattice of mesh eta around a site and testing the four-arm
/// event from the square of half-side r to the square of half-side 1.
/// Radii must satisfy 8 eta <= r <= 1. One configuration is shared by all
/// radii of a sample. Results are cached per (eta, r, n_samples, seed).
Alpha4Calibration calibrate_alpha4(double eta, std::vector<double> radii, const CalibrationOptions& opts);

/// Dyadic radii 2^-1, 2^-2, ... down to the smallest one that is >= 8 eta.
std::vector<double> default_calibration_radii(double eta);

/// Cache directory from LDP_CACHE_DIR (empty when unset).
std::filesystem::path cache_dir_from_env();

/// JSON (de)serialisation of the cache format:
/// {"eta", "seed", "created_at", "entries": [{"r", "alpha4", "se", "n", "upper_bound"}]}.
std::string calibration_to_json(const Alpha4Calibration& cal, std::uint64_t n_samples);
Alpha4Calibration calibration_from_json(const std::string& text);

}  // namespace ldp
