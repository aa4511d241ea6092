#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ldp::stats {

/// Streaming mean/variance (Welford). Merge is associative, so replica
/// results can be reduced in any grouping.
class RunningStats {
public:
    void add(double x) noexcept;
    void merge(const RunningStats& other) noexcept;

    std::size_t count() const noexcept { return n_; }
    double mean() const noexcept { return mean_; }
    double variance() const noexcept;  ///< unbiased sample variance
    double stderr_of_mean() const noexcept;

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

double mean(std::span<const double> xs) noexcept;

/// Sample covariance (n-1 normalisation).
double covariance(std::span<const double> xs, std::span<const double> ys) noexcept;

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double r_squared = 0.0;
    std::size_t n = 0;
};

/// Ordinary least squares y = intercept + slope * x. Needs at least two points.
LinearFit fit_line(std::span<const double> xs, std::span<const double> ys);

/// Upper-tail p-value of a chi-square statistic with `dof` degrees of freedom.
double chi_square_pvalue(double statistic, double dof);

/// Pearson chi-square goodness of fit of observed counts against expected counts.
struct ChiSquareResult {
    double statistic = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
};
ChiSquareResult chi_square_test(std::span<const double> observed, std::span<const double> expected);

/// One-sample Kolmogorov-Smirnov test of `samples` against the Exp(rate) law.
struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};
KsResult ks_test_exponential(std::vector<double> samples, double rate);

/// Asymptotic Kolmogorov distribution tail P(K > x).
double kolmogorov_tail(double x) noexcept;

}  // namespace ldp::stats
