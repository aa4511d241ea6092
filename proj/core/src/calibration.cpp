#include "ldp/calibration.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ldp/error.hpp"
#include "ldp/four_arm.hpp"
#include "ldp/parallel.hpp"
#include "ldp/rng.hpp"
#include "ldp/stats.hpp"

namespace ldp {

namespace {

constexpr double kRelTol = 1e-9;

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::filesystem::path cache_file(const std::filesystem::path& dir, double eta, std::uint64_t n, std::uint64_t seed) {
    std::ostringstream name;
    name << "alpha4_eta" << std::hexfloat << eta << "_n" << std::dec << n << "_seed" << seed << ".json";
    return dir / name.str();
}

Alpha4Calibration read_cache(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) return {};
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return calibration_from_json(buf.str());
    } catch (const std::exception&) {
        return {};  // unreadable cache entries are recomputed
    }
}

void write_cache(const std::filesystem::path& file, const Alpha4Calibration& cal, std::uint64_t n) {
    std::filesystem::create_directories(file.parent_path());
    auto tmp = file;
    tmp += ".tmp" + std::to_string(mix64(static_cast<std::uint64_t>(
                                       std::chrono::steady_clock::now().time_since_epoch().count())));
    {
        std::ofstream out(tmp);
        out << calibration_to_json(cal, n);
        if (!out) throw Error("io", "failed writing calibration cache " + tmp.string());
    }
    std::filesystem::rename(tmp, file);
}

// Colour of an axial site in sample `key`: one hashed bit, so no lattice is stored.
inline bool hashed_open(std::uint64_t key, Axial a) noexcept {
    const std::uint64_t w = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a.i)) << 32) |
                            static_cast<std::uint32_t>(a.j);
    return mix64(key ^ mix64(w)) & 1U;
}

}  // namespace

double Alpha4Calibration::fitted_slope() const {
    std::vector<double> xs, ys;
    for (const auto& e : entries) {
        if (e.r >= 1.0 || e.upper_bound || !(e.alpha4 > 0.0)) continue;
        xs.push_back(std::log(e.r));
        ys.push_back(std::log(e.alpha4));
    }
    if (xs.size() < 2) return default_slope;
    return stats::fit_line(xs, ys).slope;
}

double Alpha4Calibration::at(double r) const {
    if (!(r > 0.0)) throw InvalidArgument("alpha4 radius must be positive");
    if (r >= 1.0) return 1.0;
    if (entries.empty()) throw CalibrationError("alpha4 calibration is empty");
    // (log r, log alpha), increasing r, ending at (0, 0). Flagged upper bounds are
    // used only when nothing else is available.
    std::vector<std::pair<double, double>> pts;
    for (bool allow_bounds : {false, true}) {
        for (const auto& e : entries)
            if (e.r < 1.0 && e.alpha4 > 0.0 && (allow_bounds || !e.upper_bound))
                pts.emplace_back(std::log(e.r), std::log(e.alpha4));
        if (!pts.empty()) break;
    }
    if (pts.empty()) throw CalibrationError("alpha4 calibration has no usable entry below r = 1");
    std::sort(pts.begin(), pts.end());
    pts.emplace_back(0.0, 0.0);
    const double lr = std::log(r);
    if (lr <= pts.front().first) return std::exp(pts.front().second + fitted_slope() * (lr - pts.front().first));
    for (std::size_t k = 1; k < pts.size(); ++k) {
        if (lr <= pts[k].first) {
            const auto [x0, y0] = pts[k - 1];
            const auto [x1, y1] = pts[k];
            return std::exp(y0 + (y1 - y0) * (lr - x0) / (x1 - x0));
        }
    }
    return 1.0;
}

Alpha4Calibration fixed_alpha4(double eta, double alpha4_at_mesh, double slope) {
    if (!(eta > 0.0 && eta < 1.0)) throw InvalidArgument("eta must be in (0, 1)");
    if (!(alpha4_at_mesh > 0.0 && alpha4_at_mesh <= 1.0)) throw InvalidArgument("alpha4 must be in (0, 1]");
    Alpha4Calibration cal;
    cal.eta = eta;
    cal.default_slope = slope;
    cal.entries.push_back({eta, alpha4_at_mesh, 0.0, 0, false});
    return cal;
}

std::vector<double> default_calibration_radii(double eta) {
    std::vector<double> radii;
    for (int n = 1; std::exp2(-n) >= 8 * eta * (1 - kRelTol); ++n) radii.push_back(std::exp2(-n));
    return radii;
}

std::filesystem::path cache_dir_from_env() {
    const char* v = std::getenv("LDP_CACHE_DIR");
    return v && *v ? std::filesystem::path(v) : std::filesystem::path();
}

Alpha4Calibration calibrate_alpha4(double eta, std::vector<double> radii, const CalibrationOptions& opts) {
    if (!(eta > 0.0 && eta <= 0.125)) throw InvalidArgument("calibration mesh must be in (0, 1/8]");
    if (opts.n_samples == 0) throw InvalidArgument("n_samples must be positive");
    if (radii.empty()) radii = default_calibration_radii(eta);
    for (double r : radii)
        if (!(r >= 8 * eta * (1 - kRelTol) && r <= 1.0 + kRelTol))
            throw InvalidArgument("calibration radii must lie in [8 eta, 1]");
    std::sort(radii.begin(), radii.end(), std::greater<>());
    radii.erase(std::unique(radii.begin(), radii.end()), radii.end());

    Alpha4Calibration cached;
    std::filesystem::path file;
    if (!opts.cache_dir.empty()) {
        file = cache_file(opts.cache_dir, eta, opts.n_samples, opts.seed);
        cached = read_cache(file);
        if (cached.eta != eta || cached.seed != opts.seed) cached = {};
    }
    auto lookup = [&](double r) -> const Alpha4Calibration::Entry* {
        for (const auto& e : cached.entries)
            if (std::abs(e.r - r) <= kRelTol * r && e.n == opts.n_samples) return &e;
        return nullptr;
    };

    std::vector<double> todo;
    for (double r : radii)
        if (r < 1.0 - kRelTol && !lookup(r)) todo.push_back(r);

    std::vector<std::uint64_t> hits(todo.size(), 0);
    if (!todo.empty()) {
        const Rect outer_rect{-1.0, 1.0, -1.0, 1.0};
        const auto outer = AxialBox::from_rect(eta, outer_rect);
        std::vector<AxialBox> inner;
        std::vector<std::vector<Axial>> layers;
        for (double r : todo) {
            inner.push_back(AxialBox::from_rect(eta, {-r, r, -r, r}));
            layers.push_back(inner.back().layer());
        }
        constexpr std::uint64_t kChunk = 256;
        const std::uint64_t chunks = (opts.n_samples + kChunk - 1) / kChunk;
        std::vector<std::vector<std::uint64_t>> chunk_hits(chunks, std::vector<std::uint64_t>(todo.size(), 0));
        parallel_for(chunks, opts.threads, [&](std::size_t c) {
            const std::uint64_t end = std::min<std::uint64_t>(opts.n_samples, (c + 1) * kChunk);
            for (std::uint64_t s = c * kChunk; s < end; ++s) {
                const std::uint64_t key = derive_seed(opts.seed, s);
                auto outside = [&](Axial a) { return !outer.contains(a); };
                auto open = [&](Axial a) { return hashed_open(key, a); };
                // Radii are decreasing and the events nested: stop at the first failure.
                for (std::size_t k = 0; k < todo.size(); ++k) {
                    const auto& box = inner[k];
                    if (count_outward_crossings(layers[k], [&](Axial a) { return box.contains(a); }, outside, open) < 2)
                        break;
                    ++chunk_hits[c][k];
                }
            }
        });
        for (const auto& ch : chunk_hits)
            for (std::size_t k = 0; k < todo.size(); ++k) hits[k] += ch[k];
    }

    Alpha4Calibration cal;
    cal.eta = eta;
    cal.seed = opts.seed;
    const double n = static_cast<double>(opts.n_samples);
    for (double r : radii) {
        if (r >= 1.0 - kRelTol) {
            cal.entries.push_back({1.0, 1.0, 0.0, opts.n_samples, false});
            continue;
        }
        if (const auto* e = lookup(r)) {
            cal.entries.push_back(*e);
            continue;
        }
        const auto k = static_cast<std::size_t>(std::find(todo.begin(), todo.end(), r) - todo.begin());
        Alpha4Calibration::Entry e{r, 0.0, 0.0, opts.n_samples, false};
        if (hits[k] == 0) {
            e.alpha4 = std::min(1.0, 3.0 / n);  // rule of three: 95% upper bound
            e.upper_bound = true;
        } else {
            const double p = static_cast<double>(hits[k]) / n;
            e.alpha4 = p;
            e.se = std::sqrt(p * (1 - p) / n);
        }
        cal.entries.push_back(e);
    }

    if (!file.empty() && !todo.empty()) {
        Alpha4Calibration merged = cached;
        merged.eta = eta;
        merged.seed = opts.seed;
        for (const auto& e : cal.entries)
            if (!lookup(e.r)) merged.entries.push_back(e);
        std::sort(merged.entries.begin(), merged.entries.end(), [](const auto& a, const auto& b) { return a.r > b.r; });
        write_cache(file, merged, opts.n_samples);
    }
    return cal;
}

std::string calibration_to_json(const Alpha4Calibration& cal, std::uint64_t n_samples) {
    nlohmann::json j;
    j["eta"] = cal.eta;
    j["seed"] = cal.seed;
    j["n_samples"] = n_samples;
    j["created_at"] = utc_timestamp();
    j["entries"] = nlohmann::json::array();
    for (const auto& e : cal.entries)
        j["entries"].push_back({{"r", e.r}, {"alpha4", e.alpha4}, {"se", e.se}, {"n", e.n}, {"upper_bound", e.upper_bound}});
    return j.dump(2) + "\n";
}

Alpha4Calibration calibration_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        Alpha4Calibration cal;
        cal.eta = j.at("eta").get<double>();
        cal.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& e : j.at("entries")) {
            Alpha4Calibration::Entry en;
            en.r = e.at("r").get<double>();
            en.alpha4 = e.at("alpha4").get<double>();
            en.se = e.at("se").get<double>();
            en.n = e.at("n").get<std::uint64_t>();
            en.upper_bound = e.value("upper_bound", false);
            if (!(en.r > 0.0) || !(en.alpha4 > 0.0 && en.alpha4 <= 1.0))
                throw CalibrationError("calibration entry out of range");
            cal.entries.push_back(en);
        }
        std::sort(cal.entries.begin(), cal.entries.end(), [](const auto& a, const auto& b) { return a.r > b.r; });
        return cal;
    } catch (const nlohmann::json::exception& e) {
        throw CalibrationError(std::string("malformed calibration JSON: ") + e.what());
    }
}

}  // namespace ldp
