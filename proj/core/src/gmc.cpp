#include "ldp/gmc.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>

#include <fftw3.h>

#include "ldp/csv.hpp"
#include "ldp/error.hpp"

namespace ldp {

namespace {

constexpr std::size_t kDirectEnergyLimit = 20000;

void require_same_lattice(const SiteMeasure& m, const char* what) {
    if (!m.lattice) throw InvalidArgument(std::string(what) + ": measure has no lattice");
    if (m.masses.size() != m.lattice->size())
        throw InvalidArgument(std::string(what) + ": mass vector does not match the lattice");
}

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};
template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <class T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
    if (!p) throw std::bad_alloc();
    return FftwBuffer<T>(p);
}

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct Plan {
    fftw_plan p = nullptr;
    ~Plan() {
        if (p) {
            std::lock_guard lock(fftw_planner_mutex());
            fftw_destroy_plan(p);
        }
    }
};

}  // namespace

double SiteMeasure::total() const noexcept { return std::accumulate(masses.begin(), masses.end(), 0.0); }

std::size_t ModerateSet::count() const noexcept {
    return static_cast<std::size_t>(std::count(member.begin(), member.end(), 1));
}

SiteMeasure lebesgue_measure(const LatticePtr& lat) {
    return {lat, std::vector<double>(lat->size(), lat->cell_area()), "lebesgue"};
}

SiteMeasure gmc_measure(const Field& field, double gamma, const SiteMeasure& base) {
    if (!(gamma >= 0.0 && gamma < 2.0)) throw InvalidArgument("gamma out of [0,2)");
    require_same_lattice(base, "gmc_measure");
    if (field.lattice != base.lattice && field.values.size() != base.masses.size())
        throw InvalidArgument("gmc_measure: field and base measure live on different lattices");
    SiteMeasure out{base.lattice, base.masses, "gmc gamma=" + format_double(gamma)};
    if (gamma == 0.0) return out;
    for (std::size_t i = 0; i < out.masses.size(); ++i)
        out.masses[i] *= std::exp(gamma * field.values[i] - 0.5 * gamma * gamma * field.variance[i]);
    return out;
}

double d_energy(const SiteMeasure& m, double d) {
    require_same_lattice(m, "d_energy");
    return m.masses.size() <= kDirectEnergyLimit ? d_energy_direct(m, d) : d_energy_fft(m, d);
}

double d_energy_direct(const SiteMeasure& m, double d) {
    require_same_lattice(m, "d_energy");
    if (!(d > 0.0)) throw InvalidArgument("d must be positive");
    const Lattice& lat = *m.lattice;
    const double half = -0.5 * d;
    const std::size_t n = m.masses.size();
    double off = 0.0;
    double self = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        const double ma = m.masses[a];
        self += ma * ma;
        if (ma == 0.0) continue;
        const Point pa = lat.position(static_cast<SiteIndex>(a));
        double row = 0.0;
        for (std::size_t b = a + 1; b < n; ++b) {
            const Point pb = lat.position(static_cast<SiteIndex>(b));
            const double dx = pa.x - pb.x;
            const double dy = pa.y - pb.y;
            row += m.masses[b] * std::pow(dx * dx + dy * dy, half);
        }
        off += ma * row;
    }
    return 2.0 * off + self / std::pow(lat.eta() / 2, d);
}

double d_energy_fft(const SiteMeasure& m, double d) {
    require_same_lattice(m, "d_energy");
    if (!(d > 0.0)) throw InvalidArgument("d must be positive");
    const Lattice& lat = *m.lattice;
    int imin = INT32_MAX, imax = INT32_MIN, jmin = INT32_MAX, jmax = INT32_MIN;
    for (const auto& r : lat.rows()) {
        imin = std::min(imin, r.i_min);
        imax = std::max(imax, r.i_min + r.count - 1);
        jmin = std::min(jmin, r.j);
        jmax = std::max(jmax, r.j);
    }
    const int ni = imax - imin + 1;
    const int nj = jmax - jmin + 1;
    const int pi = 2 * ni;
    const int pj = 2 * nj;
    const std::size_t real_n = static_cast<std::size_t>(pi) * static_cast<std::size_t>(pj);
    const int ci = pi / 2 + 1;
    const std::size_t cplx_n = static_cast<std::size_t>(pj) * static_cast<std::size_t>(ci);

    auto grid = fftw_buffer<double>(real_n);
    auto spec = fftw_buffer<fftw_complex>(cplx_n);
    std::fill(grid.get(), grid.get() + real_n, 0.0);
    double self = 0.0;
    for (std::size_t s = 0; s < m.masses.size(); ++s) {
        const Axial a = lat.axial(static_cast<SiteIndex>(s));
        grid[static_cast<std::size_t>(a.j - jmin) * pi + static_cast<std::size_t>(a.i - imin)] = m.masses[s];
        self += m.masses[s] * m.masses[s];
    }

    Plan fwd, bwd;
    {
        std::lock_guard lock(fftw_planner_mutex());
        fwd.p = fftw_plan_dft_r2c_2d(pj, pi, grid.get(), spec.get(), FFTW_ESTIMATE);
        bwd.p = fftw_plan_dft_c2r_2d(pj, pi, spec.get(), grid.get(), FFTW_ESTIMATE);
    }
    if (!fwd.p || !bwd.p) throw NumericalError("FFTW planning failed");
    fftw_execute(fwd.p);
    for (std::size_t k = 0; k < cplx_n; ++k) {
        spec[k][0] = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
        spec[k][1] = 0.0;
    }
    fftw_execute(bwd.p);
    const double scale = 1.0 / static_cast<double>(real_n);

    // Offsets (di, dj) with |di| < ni, |dj| < nj; squared distance in units of eta^2 is di^2 + di dj + dj^2.
    const double eta2 = lat.eta() * lat.eta();
    const double half = -0.5 * d;
    double off = 0.0;
    for (int dj = -(nj - 1); dj <= nj - 1; ++dj) {
        const std::size_t row = static_cast<std::size_t>((dj + pj) % pj) * pi;
        for (int di = -(ni - 1); di <= ni - 1; ++di) {
            if (di == 0 && dj == 0) continue;
            const double c = grid[row + static_cast<std::size_t>((di + pi) % pi)] * scale;
            if (c == 0.0) continue;
            const double q = static_cast<double>(di) * di + static_cast<double>(di) * dj + static_cast<double>(dj) * dj;
            off += c * std::pow(eta2 * q, half);
        }
    }
    return off + self / std::pow(lat.eta() / 2, d);
}

BallMass::BallMass(const SiteMeasure& m) : lat_(m.lattice) {
    require_same_lattice(m, "BallMass");
    const auto rows = lat_->rows();
    prefix_.assign(m.masses.size() + rows.size(), 0.0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::size_t base = static_cast<std::size_t>(row.start) + r;
        for (int k = 0; k < row.count; ++k)
            prefix_[base + k + 1] = prefix_[base + k] + m.masses[static_cast<std::size_t>(row.start) + k];
    }
}

double BallMass::operator()(Point c, double r) const noexcept {
    const double eta = lat_->eta();
    const double rs = lat_->row_spacing();
    const double tol = 1e-9 * eta;
    const auto rows = lat_->rows();
    const int j_lo = static_cast<int>(std::ceil((c.y - r - tol) / rs));
    const int j_hi = static_cast<int>(std::floor((c.y + r + tol) / rs));
    double sum = 0.0;
    for (int j = j_lo; j <= j_hi; ++j) {
        const Lattice::Row* row = lat_->row(j);
        if (!row) continue;
        const double dy = j * rs - c.y;
        const double w2 = r * r - dy * dy;
        if (w2 < -tol * r) continue;
        const double w = std::sqrt(std::max(w2, 0.0));
        const int i_lo = std::max(row->i_min, static_cast<int>(std::ceil((c.x - w - tol) / eta - j / 2.0)));
        const int i_hi =
            std::min(row->i_min + row->count - 1, static_cast<int>(std::floor((c.x + w + tol) / eta - j / 2.0)));
        if (i_hi < i_lo) continue;
        const std::size_t base = static_cast<std::size_t>(row->start) + static_cast<std::size_t>(row - rows.data());
        sum += prefix_[base + static_cast<std::size_t>(i_hi - row->i_min) + 1] -
               prefix_[base + static_cast<std::size_t>(i_lo - row->i_min)];
    }
    return sum;
}

double default_rho(double gamma) noexcept { return std::clamp((0.375 - gamma * gamma / 4) / 2, 0.01, 0.2); }

ModerateSet moderate_set(const SiteMeasure& gmc, double C, double rho, const Alpha4Calibration& cal) {
    require_same_lattice(gmc, "moderate_set");
    if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
    if (std::isnan(C) || C < 0.0) throw InvalidArgument("C must be non-negative");
    if (cal.empty()) throw CalibrationError("moderate_set needs an alpha4 calibration");
    const Lattice& lat = *gmc.lattice;
    ModerateSet ms{C, rho, std::vector<unsigned char>(lat.size(), 0)};
    if (std::isinf(C)) {
        std::fill(ms.member.begin(), ms.member.end(), 1);
        return ms;
    }
    if (C == 0.0) return ms;

    std::vector<double> radii, caps;
    for (int n = 1;; ++n) {
        const double r = std::exp2(-n);
        if (r < lat.eta() * (1 - 1e-12)) break;
        radii.push_back(r);
        caps.push_back(C * cal.at(r) * std::exp2(-n * rho));
    }
    const BallMass ball(gmc);
    for (std::size_t s = 0; s < lat.size(); ++s) {
        const Point p = lat.position(static_cast<SiteIndex>(s));
        bool ok = true;
        // Finest scales first: they fail most often and are cheapest.
        for (std::size_t k = radii.size(); k-- > 0;) {
            if (!(ball(p, radii[k]) < caps[k])) {
                ok = false;
                break;
            }
        }
        ms.member[s] = ok ? 1 : 0;
    }
    return ms;
}

SiteMeasure truncate_measure(const SiteMeasure& m, const ModerateSet& ms) {
    require_same_lattice(m, "truncate_measure");
    if (ms.member.size() != m.masses.size()) throw InvalidArgument("moderate set does not match the measure");
    SiteMeasure out{m.lattice, m.masses, m.label + " truncated C=" + format_double(ms.C)};
    for (std::size_t i = 0; i < out.masses.size(); ++i)
        if (!ms.member[i]) out.masses[i] = 0.0;
    return out;
}

void write_measure_csv(std::ostream& os, const SiteMeasure& m) {
    require_same_lattice(m, "write_measure_csv");
    CsvWriter csv(os, {"site_index", "x", "y", "mass"});
    for (std::size_t i = 0; i < m.masses.size(); ++i) {
        const Point p = m.lattice->position(static_cast<SiteIndex>(i));
        csv.row(i, p.x, p.y, m.masses[i]);
    }
}

}  // namespace ldp
