#include "ldp/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <ostream>

#include "ldp/csv.hpp"
#include "ldp/error.hpp"
#include "ldp/perc.hpp"

namespace ldp {

namespace {

void check_table(const TruthTable& tt, int limit, const char* what) {
    if (tt.n() < 0 || tt.n() > limit)
        throw BudgetError(std::string(what) + " is limited to " + std::to_string(limit) + " sites");
    if (tt.values.size() != (std::size_t(1) << tt.n())) throw InvalidArgument("truth table has the wrong length");
    for (auto v : tt.values)
        if (v != 1 && v != -1) throw InvalidArgument("truth table values must be +1 or -1");
}

void check_rates(std::span<const double> rates, int n) {
    if (rates.size() != static_cast<std::size_t>(n)) throw InvalidArgument("need one clock rate per bit");
    for (double r : rates)
        if (!(r >= 0.0)) throw InvalidArgument("clock rates must be non-negative");
}

// weight[d] = prod over bits k of ((1 + e_k)/2 if bit k of d is 0 else (1 - e_k)/2), e_k = exp(-t rate_k).
std::vector<double> flip_weights(std::span<const double> rates, double t) {
    const std::size_t n = rates.size();
    std::vector<double> w(std::size_t(1) << n, 1.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double e = std::exp(-t * rates[k]);
        const double stay = (1 + e) / 2;
        const double flip = (1 - e) / 2;
        const std::size_t bit = std::size_t(1) << k;
        for (std::size_t d = 0; d < w.size(); ++d) w[d] *= (d & bit) ? flip : stay;
    }
    return w;
}

double mean_value(const TruthTable& tt) {
    double s = 0.0;
    for (auto v : tt.values) s += v;
    return s / static_cast<double>(tt.values.size());
}

}  // namespace

TruthTable make_truth_table(int n, const std::function<bool(SubsetMask)>& f, std::vector<SiteIndex> site_ids) {
    if (n < 0 || n > kMaxTransformBits) throw BudgetError("truth tables are limited to 25 sites");
    if (site_ids.empty()) {
        site_ids.resize(static_cast<std::size_t>(n));
        std::iota(site_ids.begin(), site_ids.end(), 0);
    }
    if (site_ids.size() != static_cast<std::size_t>(n)) throw InvalidArgument("need one site id per bit");
    TruthTable tt{std::move(site_ids), std::vector<std::int8_t>(std::size_t(1) << n)};
    for (SubsetMask m = 0; m < tt.values.size(); ++m) tt.values[m] = f(m) ? 1 : -1;
    return tt;
}

TruthTable dictator(int n, int k) {
    if (k < 0 || k >= n) throw InvalidArgument("dictator bit out of range");
    return make_truth_table(n, [k](SubsetMask m) { return (m >> k) & 1U; });
}

TruthTable majority3() {
    return make_truth_table(3, [](SubsetMask m) { return std::popcount(m) >= 2; });
}

TruthTable constant_function(int n, std::int8_t value) {
    return make_truth_table(n, [value](SubsetMask) { return value > 0; });
}

std::vector<double> walsh_transform(const TruthTable& tt) {
    check_table(tt, kMaxTransformBits, "the Walsh transform");
    std::vector<double> a(tt.values.begin(), tt.values.end());
    const std::size_t size = a.size();
    for (std::size_t h = 1; h < size; h <<= 1)
        for (std::size_t i = 0; i < size; i += 2 * h)
            for (std::size_t j = i; j < i + h; ++j) {
                const double x = a[j], y = a[j + h];
                a[j] = x + y;
                a[j + h] = x - y;
            }
    // a[S] = sum_w f(w) (-1)^{|w & S|}; chi_S(w) = (-1)^{|S| - |w & S|}.
    const double scale = 1.0 / static_cast<double>(size);
    for (std::size_t s = 0; s < size; ++s) a[s] *= (std::popcount(s) % 2 ? -scale : scale);
    return a;
}

double SpectralDistribution::weight(SubsetMask s) const noexcept {
    if (s == 0) return f_hat_empty * f_hat_empty;
    const auto it = std::lower_bound(weights.begin(), weights.end(), s,
                                     [](const auto& p, SubsetMask m) { return p.first < m; });
    return it != weights.end() && it->first == s ? it->second : 0.0;
}

double SpectralDistribution::mean_size() const noexcept {
    double m = 0.0;
    for (const auto& [s, w] : weights) m += std::popcount(s) * w;
    return m;
}

SpectralDistribution spectral_distribution(std::span<const double> coeffs, std::vector<SiteIndex> site_ids) {
    if (coeffs.empty() || !std::has_single_bit(coeffs.size()))
        throw InvalidArgument("coefficient vector length must be a power of two");
    if (coeffs.size() != (std::size_t(1) << site_ids.size())) throw InvalidArgument("need one site id per bit");
    SpectralDistribution d;
    d.site_ids = std::move(site_ids);
    d.f_hat_empty = coeffs[0];
    double total = coeffs[0] * coeffs[0];
    for (std::size_t s = 1; s < coeffs.size(); ++s) {
        const double w = coeffs[s] * coeffs[s];
        total += w;
        if (w > 1e-18) d.weights.emplace_back(static_cast<SubsetMask>(s), w);
    }
    if (std::abs(total - 1.0) > 1e-10)
        throw NumericalError("Parseval check failed: sum of squared coefficients is " + format_double(total));
    return d;
}

SiteMeasure spectral_measure(std::span<const SiteIndex> sample, const LatticePtr& lat, const Alpha4Calibration& cal) {
    if (cal.empty()) throw CalibrationError("spectral_measure needs an alpha4 calibration");
    const double a4 = cal.at(lat->eta());
    SiteMeasure m{lat, std::vector<double>(lat->size(), 0.0), "spectral"};
    for (SiteIndex s : sample) {
        if (s < 0 || static_cast<std::size_t>(s) >= lat->size()) throw InvalidArgument("spectral sample site out of range");
        m.masses[static_cast<std::size_t>(s)] = lat->cell_area() / a4;
    }
    return m;
}

std::vector<double> bit_rates(std::span<const SiteIndex> site_ids, const ClockRates& rates) {
    std::vector<double> out;
    out.reserve(site_ids.size());
    for (SiteIndex s : site_ids) {
        if (s < 0 || static_cast<std::size_t>(s) >= rates.rates.size())
            throw InvalidArgument("clock rates do not cover the truth table's sites");
        out.push_back(rates.rates[static_cast<std::size_t>(s)]);
    }
    return out;
}

double covariance_spectral(const SpectralDistribution& dist, std::span<const double> rates, double t) {
    check_rates(rates, static_cast<int>(dist.site_ids.size()));
    if (!(t >= 0.0)) throw InvalidArgument("t must be non-negative");
    double c = 0.0;
    for (const auto& [s, w] : dist.weights) {
        double exponent = 0.0;
        for (SubsetMask m = s; m != 0; m &= m - 1) exponent += rates[static_cast<std::size_t>(std::countr_zero(m))];
        c += w * std::exp(-t * exponent);
    }
    return c;
}

double covariance_spectral(const SpectralDistribution& dist, const ClockRates& rates, double t) {
    return covariance_spectral(dist, bit_rates(dist.site_ids, rates), t);
}

double cross_covariance_bruteforce(const TruthTable& f, const TruthTable& g, std::span<const double> rates, double t) {
    check_table(f, kMaxBruteForceBits, "brute-force covariance");
    check_table(g, kMaxBruteForceBits, "brute-force covariance");
    if (f.n() != g.n()) throw InvalidArgument("truth tables must share their sites");
    check_rates(rates, f.n());
    if (!(t >= 0.0)) throw InvalidArgument("t must be non-negative");
    const auto w = flip_weights(rates, t);
    const std::size_t size = f.values.size();
    double joint = 0.0;
    for (std::size_t a = 0; a < size; ++a) {
        double inner = 0.0;
        for (std::size_t d = 0; d < size; ++d) inner += g.values[a ^ d] * w[d];
        joint += f.values[a] * inner;
    }
    joint /= static_cast<double>(size);
    return joint - mean_value(f) * mean_value(g);
}

double covariance_bruteforce(const TruthTable& tt, std::span<const double> rates, double t) {
    return cross_covariance_bruteforce(tt, tt, rates, t);
}

double covariance_bruteforce(const TruthTable& tt, const ClockRates& rates, double t) {
    return covariance_bruteforce(tt, bit_rates(tt.site_ids, rates), t);
}

IntensityReport intensity_check(const TruthTable& tt) {
    check_table(tt, kMaxBruteForceBits, "intensity_check");
    const int n = tt.n();
    const std::size_t size = tt.values.size();
    const auto coeffs = walsh_transform(tt);

    std::vector<std::vector<std::uint8_t>> piv(static_cast<std::size_t>(n), std::vector<std::uint8_t>(size));
    for (int k = 0; k < n; ++k)
        for (std::size_t m = 0; m < size; ++m) piv[static_cast<std::size_t>(k)][m] = tt.values[m] != tt.values[m ^ (std::size_t(1) << k)];

    IntensityReport rep;
    rep.spectral_one.assign(static_cast<std::size_t>(n), 0.0);
    rep.pivotal_one.assign(static_cast<std::size_t>(n), 0.0);
    std::vector<double> spec_two(static_cast<std::size_t>(n * n), 0.0);
    for (std::size_t s = 1; s < size; ++s) {
        const double w = coeffs[s] * coeffs[s];
        for (int x = 0; x < n; ++x) {
            if (!((s >> x) & 1U)) continue;
            rep.spectral_one[static_cast<std::size_t>(x)] += w;
            for (int y = x + 1; y < n; ++y)
                if ((s >> y) & 1U) spec_two[static_cast<std::size_t>(x * n + y)] += w;
        }
    }
    const double inv = 1.0 / static_cast<double>(size);
    for (int x = 0; x < n; ++x) {
        const auto& px = piv[static_cast<std::size_t>(x)];
        rep.pivotal_one[static_cast<std::size_t>(x)] = std::accumulate(px.begin(), px.end(), 0.0) * inv;
        rep.max_one_point = std::max(rep.max_one_point,
                                     std::abs(rep.spectral_one[static_cast<std::size_t>(x)] - rep.pivotal_one[static_cast<std::size_t>(x)]));
        for (int y = x + 1; y < n; ++y) {
            const auto& py = piv[static_cast<std::size_t>(y)];
            double both = 0.0;
            for (std::size_t m = 0; m < size; ++m) both += px[m] & py[m];
            rep.max_two_point = std::max(rep.max_two_point, std::abs(spec_two[static_cast<std::size_t>(x * n + y)] - both * inv));
        }
    }
    return rep;
}

TruthTable crossing_truth_table(const LatticePtr& lat, std::span<const RectQuad> quads) {
    if (quads.empty()) throw InvalidArgument("crossing_truth_table needs at least one quad");
    std::vector<PreparedQuad> pq;
    std::vector<SiteIndex> sites;
    for (const auto& q : quads) {
        pq.emplace_back(lat, q);
        sites.insert(sites.end(), pq.back().sites().begin(), pq.back().sites().end());
    }
    std::sort(sites.begin(), sites.end());
    sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
    if (sites.size() > static_cast<std::size_t>(kMaxTransformBits))
        throw BudgetError("crossing truth tables are limited to 25 sites");
    std::vector<std::int8_t> colors(lat->size(), kClosed);
    const int n = static_cast<int>(sites.size());
    return make_truth_table(
        n,
        [&](SubsetMask m) {
            for (int k = 0; k < n; ++k) colors[static_cast<std::size_t>(sites[static_cast<std::size_t>(k)])] = (m >> k) & 1U ? kOpen : kClosed;
            return std::all_of(pq.begin(), pq.end(), [&](const PreparedQuad& q) { return q.crossed(colors); });
        },
        sites);
}

void write_spectrum_csv(std::ostream& os, const SpectralDistribution& dist) {
    CsvWriter csv(os, {"mask", "weight"});
    const double empty = dist.f_hat_empty * dist.f_hat_empty;
    if (empty > 1e-18) csv.row(0, empty);
    for (const auto& [s, w] : dist.weights) csv.row(s, w);
}

}  // namespace ldp
