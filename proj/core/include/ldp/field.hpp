#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "ldp/lattice.hpp"

namespace ldp {

enum class KernelKind : std::uint32_t {
    ExactLog = 0,   ///< K(x,y) = log(L / max(|x-y|, eta/2)) + ridge * delta_xy
    DyadicBrw = 1,  ///< branching random walk over a dyadic square hierarchy
};

struct Kernel {
    KernelKind kind = KernelKind::ExactLog;
    double length_scale = 1.0;  ///< L; must be at least the domain diameter
    int brw_depth = 0;          ///< DyadicBrw only
    double ridge = 0.0;         ///< diagonal regularisation (ExactLog only)
};

inline Kernel exact_log_kernel(double length_scale, double ridge = 0.0) {
    return {KernelKind::ExactLog, length_scale, 0, ridge};
}
inline Kernel brw_kernel(int depth) { return {KernelKind::DyadicBrw, 1.0, depth, 0.0}; }

/// One realisation of a centred log-correlated Gaussian field at lattice
/// sites, together with the exact per-site variance used for Wick
/// normalisation.
struct Field {
    LatticePtr lattice;
    Kernel kernel;
    std::uint64_t seed = 0;
    std::vector<double> values;
    std::vector<double> variance;
};

/// Dense Cholesky sampler for the ExactLog kernel. Factorises once, then draws
/// any number of replicas. The ridge is doubled (up to 8 times) until the
/// factorisation succeeds; `kernel().ridge` reports the value actually used.
class CholeskySampler {
public:
    static constexpr std::size_t kMaxSites = 8192;

    CholeskySampler(LatticePtr lat, const Kernel& kernel);
    ~CholeskySampler();
    CholeskySampler(CholeskySampler&&) noexcept;
    CholeskySampler& operator=(CholeskySampler&&) noexcept;

    Field sample(std::uint64_t seed) const;
    const Kernel& kernel() const noexcept { return kernel_; }
    const LatticePtr& lattice() const noexcept { return lat_; }

    /// Kernel entry between two sites, including the ridge on the diagonal.
    double covariance(SiteIndex a, SiteIndex b) const noexcept;

private:
    struct Factor;
    LatticePtr lat_;
    Kernel kernel_;
    std::unique_ptr<Factor> factor_;
};

Field sample_field_cholesky(const LatticePtr& lat, const Kernel& kernel, std::uint64_t seed);

/// Dyadic hierarchy used by the branching-random-walk field: the root square
/// has side 2^ceil(log2(max(width, height))) anchored at the domain's lower-left corner.
struct DyadicGeometry {
    Point origin;
    double side = 1.0;

    static DyadicGeometry for_domain(const Rect& domain);
    /// Square containing p at the given level (level 0 is the root).
    std::pair<std::int64_t, std::int64_t> square(Point p, int level) const noexcept;
    /// Number of levels in [0, depth] at which p and q share a square.
    int common_levels(Point p, Point q, int depth) const noexcept;
    /// Smallest depth whose finest squares have side <= eta.
    int min_depth(double eta) const noexcept;
};

/// h(x) = sum_{k=0..depth} N_k(square_k(x)), N ~ N(0, log 2) independent per square.
Field sample_field_brw(const LatticePtr& lat, const Kernel& kernel, std::uint64_t seed);

/// Dispatches on kernel.kind.
Field sample_field(const LatticePtr& lat, const Kernel& kernel, std::uint64_t seed);

/// Exact BRW covariance between two points: log 2 times the number of common levels.
double brw_covariance(const DyadicGeometry& geo, int depth, Point p, Point q) noexcept;

/// Binary snapshot, little-endian: "LDPF", u32 version, u64 site count,
/// u64 seed, u32 kind, f64 L, i32 depth, f64 ridge, f64 eta, f64 values[n],
/// f64 variance[n].
void write_field_snapshot(std::ostream& os, const Field& field);
Field read_field_snapshot(std::istream& is, const LatticePtr& lat);

}  // namespace ldp
