#include "ldp/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

#include "ldp/error.hpp"

namespace ldp::stats {

void RunningStats::add(double x) noexcept {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
}

void RunningStats::merge(const RunningStats& o) noexcept {
    if (o.n_ == 0) return;
    if (n_ == 0) {
        *this = o;
        return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(o.n_);
    const double d = o.mean_ - mean_;
    mean_ += d * nb / (na + nb);
    m2_ += o.m2_ + d * d * na * nb / (na + nb);
    n_ += o.n_;
}

double RunningStats::variance() const noexcept {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

double RunningStats::stderr_of_mean() const noexcept {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

double mean(std::span<const double> xs) noexcept {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double covariance(std::span<const double> xs, std::span<const double> ys) noexcept {
    const std::size_t n = std::min(xs.size(), ys.size());
    if (n < 2) return 0.0;
    const double mx = mean(xs.first(n));
    const double my = mean(ys.first(n));
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += (xs[k] - mx) * (ys[k] - my);
    return s / static_cast<double>(n - 1);
}

LinearFit fit_line(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = std::min(xs.size(), ys.size());
    if (n < 2) throw InvalidArgument("fit_line needs at least two points");
    const double mx = mean(xs.first(n));
    const double my = mean(ys.first(n));
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        sxy += (xs[k] - mx) * (ys[k] - my);
        syy += (ys[k] - my) * (ys[k] - my);
    }
    if (sxx <= 0.0) throw InvalidArgument("fit_line needs distinct abscissae");
    LinearFit f;
    f.n = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    const double sse = std::max(0.0, syy - f.slope * sxy);
    f.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    f.slope_stderr = n > 2 ? std::sqrt(sse / static_cast<double>(n - 2) / sxx) : 0.0;
    return f;
}

double chi_square_pvalue(double statistic, double dof) {
    if (dof <= 0) throw InvalidArgument("chi-square needs positive degrees of freedom");
    if (statistic <= 0.0) return 1.0;
    boost::math::chi_squared dist(dof);
    return boost::math::cdf(boost::math::complement(dist, statistic));
}

ChiSquareResult chi_square_test(std::span<const double> observed, std::span<const double> expected) {
    if (observed.size() != expected.size() || observed.size() < 2)
        throw InvalidArgument("chi-square test needs matching bins (at least two)");
    ChiSquareResult r;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        if (!(expected[k] > 0.0)) throw InvalidArgument("chi-square expected counts must be positive");
        const double d = observed[k] - expected[k];
        r.statistic += d * d / expected[k];
    }
    r.dof = static_cast<double>(observed.size() - 1);
    r.p_value = chi_square_pvalue(r.statistic, r.dof);
    return r;
}

double kolmogorov_tail(double x) noexcept {
    if (x <= 0.0) return 1.0;
    if (x < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test_exponential(std::vector<double> samples, double rate) {
    if (samples.empty()) throw InvalidArgument("KS test needs samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const double cdf = 1.0 - std::exp(-rate * samples[k]);
        d = std::max({d, (static_cast<double>(k) + 1.0) / n - cdf, cdf - static_cast<double>(k) / n});
    }
    KsResult r;
    r.statistic = d;
    // Stephens' finite-sample correction.
    const double sn = std::sqrt(n);
    r.p_value = kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d);
    return r;
}

}  // namespace ldp::stats
