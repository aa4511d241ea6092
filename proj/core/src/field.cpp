#include "ldp/field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ldp/error.hpp"
#include "ldp/rng.hpp"

namespace ldp {

namespace {

const double kLog2 = std::numbers::ln2;

double exact_log_entry(const Kernel& k, double eta, Point a, Point b, bool same) {
    const double d = same ? 0.0 : std::hypot(a.x - b.x, a.y - b.y);
    return std::log(k.length_scale / std::max(d, eta / 2)) + (same ? k.ridge : 0.0);
}

void validate_exact_log(const Lattice& lat, const Kernel& k) {
    if (k.kind != KernelKind::ExactLog) throw InvalidArgument("Cholesky sampler needs an ExactLog kernel");
    if (!(k.length_scale > 0.0)) throw InvalidArgument("kernel length scale must be positive");
    if (k.length_scale < lat.domain().diameter() * (1 - 1e-12))
        throw InvalidArgument("kernel length scale must be at least the domain diameter");
    if (k.ridge < 0.0) throw InvalidArgument("kernel ridge must be non-negative");
    if (lat.size() > CholeskySampler::kMaxSites)
        throw BudgetError("Cholesky sampling is limited to 8192 sites; use the DyadicBrw kernel");
}

template <class T>
void put_le(std::ostream& os, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
    unsigned char b[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw InvalidArgument("truncated field snapshot");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

}  // namespace

struct CholeskySampler::Factor {
    Eigen::MatrixXd lower;
};

CholeskySampler::CholeskySampler(LatticePtr lat, const Kernel& kernel)
    : lat_(std::move(lat)), kernel_(kernel) {
    validate_exact_log(*lat_, kernel_);
    const auto n = static_cast<Eigen::Index>(lat_->size());
    const double eta = lat_->eta();

    Eigen::MatrixXd base(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        const Point pa = lat_->position(static_cast<SiteIndex>(a));
        for (Eigen::Index b = 0; b <= a; ++b) {
            const Point pb = lat_->position(static_cast<SiteIndex>(b));
            Kernel no_ridge = kernel_;
            no_ridge.ridge = 0.0;
            base(a, b) = base(b, a) = exact_log_entry(no_ridge, eta, pa, pb, a == b);
        }
    }

    double ridge = kernel_.ridge;
    for (int attempt = 0; attempt <= 8; ++attempt) {
        Eigen::MatrixXd k = base;
        k.diagonal().array() += ridge;
        Eigen::LLT<Eigen::MatrixXd> llt(k);
        if (llt.info() == Eigen::Success) {
            factor_ = std::make_unique<Factor>();
            factor_->lower = llt.matrixL();
            kernel_.ridge = ridge;
            return;
        }
        ridge = ridge > 0.0 ? 2.0 * ridge : 1e-10 * base.diagonal().mean();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(base, Eigen::EigenvaluesOnly);
    std::ostringstream msg;
    msg << "kernel matrix is not positive definite after ridge escalation to " << ridge / 2
        << "; smallest eigenvalue estimate " << eig.eigenvalues().minCoeff();
    throw NumericalError(msg.str());
}

CholeskySampler::~CholeskySampler() = default;
CholeskySampler::CholeskySampler(CholeskySampler&&) noexcept = default;
CholeskySampler& CholeskySampler::operator=(CholeskySampler&&) noexcept = default;

double CholeskySampler::covariance(SiteIndex a, SiteIndex b) const noexcept {
    return exact_log_entry(kernel_, lat_->eta(), lat_->position(a), lat_->position(b), a == b);
}

Field CholeskySampler::sample(std::uint64_t seed) const {
    const auto n = static_cast<Eigen::Index>(lat_->size());
    CounterRng rng(seed);
    Eigen::VectorXd z(n);
    for (Eigen::Index k = 0; k < n; ++k) z[k] = rng.normal();
    const Eigen::VectorXd h = factor_->lower.triangularView<Eigen::Lower>() * z;

    Field f;
    f.lattice = lat_;
    f.kernel = kernel_;
    f.seed = seed;
    f.values.assign(h.data(), h.data() + n);
    f.variance.resize(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k)
        f.variance[static_cast<std::size_t>(k)] = covariance(static_cast<SiteIndex>(k), static_cast<SiteIndex>(k));
    return f;
}

Field sample_field_cholesky(const LatticePtr& lat, const Kernel& kernel, std::uint64_t seed) {
    return CholeskySampler(lat, kernel).sample(seed);
}

DyadicGeometry DyadicGeometry::for_domain(const Rect& domain) {
    const double extent = std::max(domain.width(), domain.height());
    DyadicGeometry g;
    g.origin = {domain.x0, domain.y0};
    g.side = extent > 0.0 ? std::exp2(std::ceil(std::log2(extent))) : 1.0;
    return g;
}

std::pair<std::int64_t, std::int64_t> DyadicGeometry::square(Point p, int level) const noexcept {
    const double cells = std::exp2(level);
    const auto last = static_cast<std::int64_t>(cells) - 1;
    auto idx = [&](double u) {
        const auto k = static_cast<std::int64_t>(std::floor(u / side * cells));
        return std::clamp<std::int64_t>(k, 0, last);
    };
    return {idx(p.x - origin.x), idx(p.y - origin.y)};
}

int DyadicGeometry::common_levels(Point p, Point q, int depth) const noexcept {
    int count = 0;
    for (int k = 0; k <= depth; ++k) {
        if (square(p, k) != square(q, k)) break;
        ++count;
    }
    return count;
}

int DyadicGeometry::min_depth(double eta) const noexcept {
    return std::max(1, static_cast<int>(std::ceil(std::log2(side / eta) - 1e-12)));
}

double brw_covariance(const DyadicGeometry& geo, int depth, Point p, Point q) noexcept {
    return kLog2 * geo.common_levels(p, q, depth);
}

Field sample_field_brw(const LatticePtr& lat, const Kernel& kernel, std::uint64_t seed) {
    if (kernel.kind != KernelKind::DyadicBrw) throw InvalidArgument("BRW sampler needs a DyadicBrw kernel");
    if (kernel.brw_depth <= 0) throw InvalidArgument("brw_depth must be positive");
    if (kernel.brw_depth > 60) throw InvalidArgument("brw_depth must be at most 60");
    const auto geo = DyadicGeometry::for_domain(lat->domain());
    if (kernel.brw_depth < geo.min_depth(lat->eta()))
        throw InvalidArgument("brw_depth too small for the lattice mesh (need at least " +
                              std::to_string(geo.min_depth(lat->eta())) + ")");

    const std::size_t n = lat->size();
    const double sd = std::sqrt(kLog2);
    Field f;
    f.lattice = lat;
    f.kernel = kernel;
    f.seed = seed;
    f.values.assign(n, 0.0);
    f.variance.assign(n, kLog2 * (kernel.brw_depth + 1));
    for (std::size_t s = 0; s < n; ++s) {
        const Point p = lat->position(static_cast<SiteIndex>(s));
        double h = 0.0;
        for (int k = 0; k <= kernel.brw_depth; ++k) {
            const auto [ix, iy] = geo.square(p, k);
            CounterRng rng(hash_words({seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(ix),
                                       static_cast<std::uint64_t>(iy)}));
            h += sd * rng.normal();
        }
        f.values[s] = h;
    }
    return f;
}

Field sample_field(const LatticePtr& lat, const Kernel& kernel, std::uint64_t seed) {
    switch (kernel.kind) {
        case KernelKind::ExactLog:
            return sample_field_cholesky(lat, kernel, seed);
        case KernelKind::DyadicBrw:
            return sample_field_brw(lat, kernel, seed);
    }
    throw InvalidArgument("unknown kernel kind");
}

void write_field_snapshot(std::ostream& os, const Field& f) {
    os.write("LDPF", 4);
    put_le<std::uint32_t>(os, 1);
    put_le<std::uint64_t>(os, f.values.size());
    put_le<std::uint64_t>(os, f.seed);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.kernel.kind));
    put_le<double>(os, f.kernel.length_scale);
    put_le<std::int32_t>(os, f.kernel.brw_depth);
    put_le<double>(os, f.kernel.ridge);
    put_le<double>(os, f.lattice ? f.lattice->eta() : 0.0);
    for (double v : f.values) put_le<double>(os, v);
    for (double v : f.variance) put_le<double>(os, v);
    if (!os) throw Error("io", "failed writing field snapshot");
}

Field read_field_snapshot(std::istream& is, const LatticePtr& lat) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "LDPF", 4) != 0)
        throw InvalidArgument("not a field snapshot");
    if (get_le<std::uint32_t>(is) != 1) throw InvalidArgument("unsupported field snapshot version");
    const auto n = get_le<std::uint64_t>(is);
    if (n != lat->size()) throw InvalidArgument("field snapshot site count does not match the lattice");
    Field f;
    f.lattice = lat;
    f.seed = get_le<std::uint64_t>(is);
    f.kernel.kind = static_cast<KernelKind>(get_le<std::uint32_t>(is));
    f.kernel.length_scale = get_le<double>(is);
    f.kernel.brw_depth = get_le<std::int32_t>(is);
    f.kernel.ridge = get_le<double>(is);
    const double eta = get_le<double>(is);
    if (std::abs(eta - lat->eta()) > 1e-12 * lat->eta())
        throw InvalidArgument("field snapshot mesh does not match the lattice");
    f.values.resize(n);
    f.variance.resize(n);
    for (auto& v : f.values) v = get_le<double>(is);
    for (auto& v : f.variance) v = get_le<double>(is);
    return f;
}

}  // namespace ldp
