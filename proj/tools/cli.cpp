#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "ldp/calibration.hpp"
#include "ldp/csv.hpp"
#include "ldp/dynamics.hpp"
#include "ldp/error.hpp"
#include "ldp/experiments.hpp"
#include "ldp/field.hpp"
#include "ldp/gmc.hpp"
#include "ldp/rng.hpp"
#include "ldp/spectral.hpp"

#ifndef LDP_GIT_DESCRIBE
#define LDP_GIT_DESCRIBE "unknown"
#endif
#ifndef LDP_VERSION
#define LDP_VERSION "0.0.0"
#endif

namespace ldp::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum class Type { Real, RealOrInf, Integer, Text, RealList };

struct Param {
    const char* name;
    Type type;
    json fallback;  ///< null: unset (optional or derived)
    const char* help;
};

const Param kSeed{"seed", Type::Integer, 1, "master seed"};
const Param kThreads{"threads", Type::Integer, 0, "worker threads, 0 = machine parallelism"};
const Param kOut{"out", Type::Text, "", "CSV output path; standard output when empty"};
const Param kCache{"cache", Type::Text, "", "alpha4 cache directory; LDP_CACHE_DIR when empty"};
const Param kDomain{"domain", Type::RealList, json::array({0, 1, 0, 1}), "x0,x1,y0,y1"};
const Param kQuad{"quad", Type::RealList, nullptr, "x0,x1,y0,y1 of the quad; the domain when unset"};
const Param kOrientation{"orientation", Type::Text, "lr", "lr (left-right) or bt (bottom-top)"};
const Param kKernel{"kernel", Type::Text, "brw", "brw or exact"};
const Param kDepth{"depth", Type::Integer, 0, "BRW depth, 0 = resolve the mesh"};
const Param kC{"C", Type::RealOrInf, nullptr, "moderate-point cutoff; inf disables truncation"};
const Param kAlpha4{"alpha4", Type::Real, nullptr, "fixed alpha4(eta,1); calibrated when unset"};
const Param kCalibSamples{"calib_samples", Type::Integer, 10000, "samples per radius for calibration"};
const Param kCalibSeed{"calib_seed", Type::Integer, 1, "calibration seed"};

Param with_default(Param p, json v) {
    p.fallback = std::move(v);
    return p;
}

const std::map<std::string, std::string>& command_descriptions() {
    static const std::map<std::string, std::string> table{
        {"calibrate", "estimate alpha4(eta, r) by Monte Carlo and cache it"},
        {"field", "sample a log-correlated field on the lattice"},
        {"gmc", "sample the lattice GMC measure"},
        {"simulate", "run GMC-driven dynamical percolation and record crossings"},
        {"spectrum", "Fourier-Walsh spectrum of a Boolean function"},
        {"mixing", "crossing covariance decay in time"},
        {"frozen", "flip probability across meshes in the frozen regime"},
        {"switchcheck", "observed vs predicted crossing switch counts"},
        {"regime", "regime, Q and central charge for gamma"},
    };
    return table;
}

const std::map<std::string, std::vector<Param>>& command_params() {
    static const std::map<std::string, std::vector<Param>> table{
        {"calibrate",
         {with_default({"eta", Type::Real, nullptr, "lattice mesh"}, 0.0078125),
          {"samples", Type::Integer, 10000, "samples per radius"},
          {"radii", Type::RealList, nullptr, "radii; dyadic down to 8 eta when unset"},
          kSeed, kThreads, kCache, kOut}},
        {"field",
         {with_default({"eta", Type::Real, nullptr, "lattice mesh"}, 0.015625), kDomain, kKernel, kDepth, kSeed,
          {"snapshot", Type::Text, "", "binary snapshot path"}, kOut}},
        {"gmc",
         {with_default({"eta", Type::Real, nullptr, "lattice mesh"}, 0.015625), kDomain, kKernel, kDepth,
          {"gamma", Type::Real, 0.5, "GMC parameter in [0,2)"}, kSeed, kOut}},
        {"simulate",
         {with_default({"eta", Type::Real, nullptr, "lattice mesh"}, 0.015625), kDomain, kQuad, kOrientation, kKernel,
          kDepth, {"gamma", Type::Real, 0.5, "GMC parameter in [0,2)"}, kC,
          {"tmax", Type::Real, 10.0, "time horizon"},
          {"times", Type::RealList, nullptr, "sample times; 11 evenly spaced points when unset"},
          {"events", Type::Text, "", "event log CSV path"}, kAlpha4, kCalibSamples, kCalibSeed, kSeed, kThreads,
          kCache, kOut}},
        {"spectrum",
         {{"function", Type::Text, "maj3", "maj3, dictator, constant or crossing"},
          {"n", Type::Integer, 3, "number of bits (dictator, constant)"},
          {"k", Type::Integer, 0, "dictator bit"},
          with_default({"eta", Type::Real, nullptr, "lattice mesh (crossing)"}, 1.0),
          with_default(kDomain, json::array({0, 2.5, 0, 1.8})), kQuad, kOrientation, kOut}},
        {"mixing",
         {{"gamma", Type::Real, 0.5, "GMC parameter in [0,2)"},
          with_default({"eta", Type::Real, nullptr, "lattice mesh"}, 0.0078125), kDomain, kQuad, kOrientation,
          {"replicas", Type::Integer, 400, "replicas"},
          {"tmin", Type::Real, 0.1, "smallest grid time"},
          {"tmax", Type::Real, 100.0, "largest grid time"},
          {"points", Type::Integer, 12, "log-spaced grid points"},
          {"t_grid", Type::RealList, nullptr, "explicit time grid"},
          {"mode", Type::Text, "annealed", "annealed or quenched"},
          {"field_seed", Type::Integer, 1, "field seed in quenched mode"}, kDepth, kC,
          {"bootstrap", Type::Integer, 200, "bootstrap resamples"},
          {"fit_tmin", Type::Real, 1.0, "smallest time used by the power-law fit"},
          {"d", Type::Real, 0.75, "pivotal dimension"}, kAlpha4, kCalibSamples, kCalibSeed, kSeed, kThreads, kCache,
          kOut}},
        {"frozen",
         {{"gamma", Type::Real, 1.8, "0 (control) or in (sqrt(3/2),2)"},
          {"etas", Type::RealList, json::array({0.03125, 0.015625, 0.0078125}), "meshes, coarse to fine"},
          with_default(kQuad, json::array({0, 1, 0, 1})), kOrientation, {"t", Type::Real, 10.0, "time"},
          {"replicas", Type::Integer, 1000, "replicas per mesh"}, kCalibSamples, kCalibSeed, kSeed, kThreads, kCache,
          kOut}},
        {"switchcheck",
         {with_default({"eta", Type::Real, nullptr, "lattice mesh"}, 1.0),
          with_default(kDomain, json::array({0, 2.5, 0, 2.6})), kQuad, kOrientation,
          {"rate", Type::Real, 1.0, "clock rate of every site"}, {"t1", Type::Real, 0.0, "window start"},
          {"t2", Type::Real, 1.0, "window end"}, {"replicas", Type::Integer, 10000, "replicas"}, kSeed, kThreads,
          kOut}},
        {"regime",
         {{"gamma", Type::Real, nullptr, "GMC parameter in (0,2)"}, {"d", Type::Real, 0.75, "pivotal dimension"},
          kOut}},
    };
    return table;
}

const Param& find_param(const std::string& command, const std::string& key) {
    for (const auto& p : command_params().at(command))
        if (key == p.name) return p;
    throw Error("unknown_key", "unknown parameter '" + key + "' for " + command);
}

double parse_real(const std::string& key, const std::string& s, bool allow_inf) {
    if (allow_inf && (s == "inf" || s == "infinity")) return kInfinity;
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != s.size() || !std::isfinite(v)) throw Error("type", key + " expects a number, got '" + s + "'");
    return v;
}

json from_flag(const Param& p, const std::string& s) {
    const std::string key = std::string("--") + p.name;
    switch (p.type) {
        case Type::Real: return parse_real(key, s, false);
        case Type::RealOrInf: {
            const double v = parse_real(key, s, true);
            return std::isinf(v) ? json(nullptr) : json(v);
        }
        case Type::Integer: {
            std::size_t pos = 0;
            std::uint64_t v = 0;
            try {
                if (!s.empty() && s[0] != '-') v = std::stoull(s, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos == 0 || pos != s.size()) throw Error("type", key + " expects a non-negative integer, got '" + s + "'");
            return v;
        }
        case Type::Text: return s;
        case Type::RealList: {
            json arr = json::array();
            std::stringstream ss(s);
            std::string item;
            while (std::getline(ss, item, ',')) arr.push_back(parse_real(key, item, false));
            if (arr.empty()) throw Error("type", key + " expects a comma-separated list of numbers");
            return arr;
        }
    }
    return nullptr;
}

json from_file(const Param& p, const json& v) {
    const std::string key = p.name;
    auto mismatch = [&](const char* what) { return Error("type", "config key " + key + " expects " + what); };
    switch (p.type) {
        case Type::Real:
            if (!v.is_number()) throw mismatch("a number");
            return v;
        case Type::RealOrInf:
            if (v.is_string() && (v == "inf" || v == "infinity")) return nullptr;
            if (v.is_null() || v.is_number()) return v;
            throw mismatch("a number or \"inf\"");
        case Type::Integer:
            if (!v.is_number_unsigned()) throw mismatch("a non-negative integer");
            return v;
        case Type::Text:
            if (!v.is_string()) throw mismatch("a string");
            return v;
        case Type::RealList:
            if (!v.is_array() || v.empty()) throw mismatch("a list of numbers");
            for (const auto& x : v)
                if (!x.is_number()) throw mismatch("a list of numbers");
            return v;
    }
    return v;
}

// Typed access to validated parameters.
double real(const json& p, const char* k) { return p.at(k).get<double>(); }
std::uint64_t integer(const json& p, const char* k) { return p.at(k).get<std::uint64_t>(); }
std::string text(const json& p, const char* k) { return p.at(k).get<std::string>(); }
std::vector<double> list(const json& p, const char* k) { return p.at(k).get<std::vector<double>>(); }
bool has(const json& p, const char* k) { return p.contains(k) && !p.at(k).is_null(); }
double cutoff(const json& p) { return has(p, "C") ? real(p, "C") : kInfinity; }
unsigned threads(const json& p) { return static_cast<unsigned>(integer(p, "threads")); }

Rect to_rect(const std::vector<double>& v, const char* what) {
    if (v.size() != 4) throw InvalidArgument(std::string(what) + " needs 4 values x0,x1,y0,y1");
    const Rect r{v[0], v[1], v[2], v[3]};
    if (!(r.x0 < r.x1 && r.y0 < r.y1)) throw InvalidArgument(std::string(what) + " must have x0 < x1 and y0 < y1");
    return r;
}

Rect domain_of(const json& p) { return to_rect(list(p, "domain"), "domain"); }

QuadOrientation orientation_of(const json& p) {
    const auto s = text(p, "orientation");
    if (s == "lr") return QuadOrientation::LeftRight;
    if (s == "bt") return QuadOrientation::BottomTop;
    throw InvalidArgument("orientation must be lr or bt");
}

Rect quad_rect(const json& p) { return has(p, "quad") ? to_rect(list(p, "quad"), "quad") : domain_of(p); }

Kernel kernel_of(const json& p, const Lattice& lat) {
    const auto kind = text(p, "kernel");
    if (kind == "brw") {
        const int depth = static_cast<int>(integer(p, "depth"));
        return depth > 0 ? brw_kernel(depth) : default_brw_kernel(lat);
    }
    if (kind == "exact") {
        const Rect d = lat.domain();
        return exact_log_kernel(2.0 * std::max(d.x1 - d.x0, d.y1 - d.y0));
    }
    throw InvalidArgument("kernel must be brw or exact");
}

void check_gamma(double g) {
    if (!(g >= 0.0 && g < 2.0)) throw InvalidArgument("gamma out of [0,2)");
}

void check_eta(double eta) {
    if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("eta out of (0,1]");
}

void check_grid(const std::vector<double>& t, bool allow_zero) {
    if (t.empty()) throw InvalidArgument("time grid must not be empty");
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (!(allow_zero ? t[k] >= 0.0 : t[k] > 0.0)) throw InvalidArgument("time grid values must be positive");
        if (k > 0 && !(t[k] > t[k - 1])) throw InvalidArgument("time grid must be strictly increasing");
    }
}

void check_inside(const Rect& inner, const Rect& outer) {
    if (inner.x0 < outer.x0 || inner.x1 > outer.x1 || inner.y0 < outer.y0 || inner.y1 > outer.y1)
        throw InvalidArgument("quad must lie inside the domain");
}

// Preconditions of every command, checked before any compute.
void validate(const RunConfig& cfg) {
    const auto& p = cfg.params;
    const auto& c = cfg.command;
    if (p.contains("eta")) check_eta(real(p, "eta"));
    if (p.contains("domain")) domain_of(p);
    if (p.contains("orientation")) orientation_of(p);
    if (p.contains("quad") && p.contains("domain")) check_inside(quad_rect(p), domain_of(p));
    if (p.contains("kernel") && text(p, "kernel") != "brw" && text(p, "kernel") != "exact")
        throw InvalidArgument("kernel must be brw or exact");
    if (has(p, "C") && !(real(p, "C") > 0.0)) throw InvalidArgument("C must be positive");
    if (has(p, "alpha4") && !(real(p, "alpha4") > 0.0 && real(p, "alpha4") <= 1.0))
        throw InvalidArgument("alpha4 out of (0,1]");
    if (p.contains("replicas") && integer(p, "replicas") < 2) throw InvalidArgument("replicas must be at least 2");
    if (p.contains("calib_samples") && integer(p, "calib_samples") < 1)
        throw InvalidArgument("calib_samples must be positive");

    if (c == "calibrate") {
        if (integer(p, "samples") < 1) throw InvalidArgument("samples must be positive");
        if (has(p, "radii"))
            for (double r : list(p, "radii"))
                if (!(r >= 8 * real(p, "eta") && r <= 1.0)) throw InvalidArgument("radii must lie in [8 eta, 1]");
    } else if (c == "gmc" || c == "simulate" || c == "mixing") {
        check_gamma(real(p, "gamma"));
    }
    if (c == "simulate") {
        if (!(real(p, "tmax") > 0.0)) throw InvalidArgument("tmax must be positive");
        if (has(p, "times")) {
            const auto t = list(p, "times");
            check_grid(t, true);
            if (t.back() > real(p, "tmax")) throw InvalidArgument("sample times must not exceed tmax");
        }
    } else if (c == "spectrum") {
        const auto f = text(p, "function");
        if (f != "maj3" && f != "dictator" && f != "constant" && f != "crossing")
            throw InvalidArgument("function must be maj3, dictator, constant or crossing");
        const auto n = integer(p, "n");
        if ((f == "dictator" || f == "constant") && (n < 1 || n > static_cast<std::uint64_t>(kMaxTransformBits)))
            throw InvalidArgument("n out of [1,25]");
        if (f == "dictator" && integer(p, "k") >= n) throw InvalidArgument("k must be below n");
    } else if (c == "mixing") {
        if (has(p, "t_grid")) {
            check_grid(list(p, "t_grid"), false);
        } else {
            if (!(real(p, "tmin") > 0.0 && real(p, "tmax") > real(p, "tmin")))
                throw InvalidArgument("need 0 < tmin < tmax");
            if (integer(p, "points") < 2) throw InvalidArgument("points must be at least 2");
        }
        parse_mixing_mode(text(p, "mode"));
        if (integer(p, "bootstrap") < 2) throw InvalidArgument("bootstrap must be at least 2");
        if (!(real(p, "d") > 0.0)) throw InvalidArgument("d must be positive");
    } else if (c == "frozen") {
        const double g = real(p, "gamma");
        if (!(g == 0.0 || (g > kFrozenThreshold && g < 2.0)))
            throw InvalidArgument("gamma must be 0 (control) or in (sqrt(3/2),2)");
        for (double e : list(p, "etas")) check_eta(e);
        quad_rect(p);
        if (!(real(p, "t") >= 0.0)) throw InvalidArgument("t must be non-negative");
    } else if (c == "switchcheck") {
        if (!(real(p, "rate") >= 0.0)) throw InvalidArgument("rate must be non-negative");
        if (!(real(p, "t1") >= 0.0 && real(p, "t2") > real(p, "t1"))) throw InvalidArgument("need 0 <= t1 < t2");
    } else if (c == "regime") {
        if (!has(p, "gamma")) throw InvalidArgument("regime needs --gamma");
        const double g = real(p, "gamma");
        if (!(g > 0.0 && g < 2.0)) throw InvalidArgument("gamma out of (0,2)");
        if (!(real(p, "d") > 0.0)) throw InvalidArgument("d must be positive");
    }
}

Alpha4Calibration calibration_for(const json& p, double eta) {
    if (has(p, "alpha4")) return fixed_alpha4(eta, real(p, "alpha4"));
    const auto radii = default_calibration_radii(eta);
    if (radii.empty()) throw CalibrationError("mesh too coarse to calibrate alpha4; pass --alpha4");
    CalibrationOptions opts;
    opts.n_samples = integer(p, "calib_samples");
    opts.seed = integer(p, "calib_seed");
    opts.threads = threads(p);
    opts.cache_dir = text(p, "cache").empty() ? cache_dir_from_env() : fs::path(text(p, "cache"));
    return calibrate_alpha4(eta, radii, opts);
}

std::string now_utc() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

void write_atomically(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("io", "cannot open " + tmp.string());
        f << content;
        if (!f) throw Error("io", "failed writing " + tmp.string());
    }
    fs::rename(tmp, path);
}

// What a command produced: the CSV body, extra manifest fields and soft-check outcomes.
struct Outcome {
    Outcome(std::string body) : csv(std::move(body)) {}

    std::string csv;
    json info = json::object();
    std::vector<std::string> soft_failures;
};

Outcome run_calibrate(const json& p) {
    const double eta = real(p, "eta");
    CalibrationOptions opts;
    opts.n_samples = integer(p, "samples");
    opts.seed = integer(p, "seed");
    opts.threads = threads(p);
    opts.cache_dir = text(p, "cache").empty() ? cache_dir_from_env() : fs::path(text(p, "cache"));
    const auto radii = has(p, "radii") ? list(p, "radii") : default_calibration_radii(eta);
    const auto cal = calibrate_alpha4(eta, radii, opts);
    std::ostringstream os;
    CsvWriter csv(os, {"eta", "r", "alpha4", "se", "n", "upper_bound"});
    for (const auto& e : cal.entries) csv.row(eta, e.r, e.alpha4, e.se, e.n, e.upper_bound);
    Outcome out{os.str()};
    if (cal.entries.size() >= 2) out.info["fitted_slope"] = cal.fitted_slope();
    return out;
}

Outcome run_field(const json& p) {
    const auto lat = build_lattice(real(p, "eta"), domain_of(p));
    const auto f = sample_field(lat, kernel_of(p, *lat), integer(p, "seed"));
    if (!text(p, "snapshot").empty()) {
        std::ostringstream bin;
        write_field_snapshot(bin, f);
        write_atomically(text(p, "snapshot"), bin.str());
    }
    std::ostringstream os;
    CsvWriter csv(os, {"site_index", "x", "y", "value", "variance"});
    for (SiteIndex s = 0; s < static_cast<SiteIndex>(lat->size()); ++s) {
        const Point q = lat->position(s);
        csv.row(s, q.x, q.y, f.values[static_cast<std::size_t>(s)], f.variance[static_cast<std::size_t>(s)]);
    }
    return {os.str()};
}

Outcome run_gmc(const json& p) {
    const auto lat = build_lattice(real(p, "eta"), domain_of(p));
    const auto f = sample_field(lat, kernel_of(p, *lat), integer(p, "seed"));
    const auto m = gmc_measure(f, real(p, "gamma"), lebesgue_measure(lat));
    std::ostringstream os;
    write_measure_csv(os, m);
    Outcome out{os.str()};
    out.info["total_mass"] = m.total();
    return out;
}

Outcome run_simulate(const json& p) {
    const double eta = real(p, "eta"), T = real(p, "tmax");
    const auto lat = build_lattice(eta, domain_of(p));
    const std::vector<RectQuad> quads{make_quad(*lat, quad_rect(p), orientation_of(p))};
    std::vector<double> times;
    if (has(p, "times")) {
        times = list(p, "times");
    } else {
        for (int k = 0; k <= 10; ++k) times.push_back(T * k / 10.0);
    }
    const std::uint64_t seed = integer(p, "seed");
    const auto field = sample_field(lat, kernel_of(p, *lat), derive_seed(seed, 0));
    const auto cal = calibration_for(p, eta);
    DynamicsOptions opts;
    opts.record_events = !text(p, "events").empty();
    const auto tr = run_ldp(field, {real(p, "gamma"), cutoff(p), {}}, cal, T, quads, times, derive_seed(seed, 1), opts);
    if (opts.record_events) {
        std::ostringstream ev;
        write_events_csv(ev, tr);
        write_atomically(text(p, "events"), ev.str());
    }
    std::ostringstream os;
    write_trajectory_csv(os, tr);
    Outcome out{os.str()};
    out.info["event_count"] = tr.event_count;
    out.info["alpha4_at_mesh"] = cal.at_mesh();
    return out;
}

Outcome run_spectrum(const json& p) {
    const auto f = text(p, "function");
    TruthTable tt;
    if (f == "maj3") {
        tt = majority3();
    } else if (f == "dictator") {
        tt = dictator(static_cast<int>(integer(p, "n")), static_cast<int>(integer(p, "k")));
    } else if (f == "constant") {
        tt = constant_function(static_cast<int>(integer(p, "n")), 1);
    } else {
        const auto lat = build_lattice(real(p, "eta"), domain_of(p));
        const std::vector<RectQuad> quads{make_quad(*lat, quad_rect(p), orientation_of(p))};
        tt = crossing_truth_table(lat, quads);
    }
    const auto dist = spectral_distribution(tt);
    std::ostringstream os;
    write_spectrum_csv(os, dist);
    Outcome out{os.str()};
    out.info["bits"] = tt.n();
    out.info["mean_size"] = dist.mean_size();
    return out;
}

Outcome run_mixing(const json& p) {
    MixingConfig cfg;
    cfg.gamma = real(p, "gamma");
    cfg.eta = real(p, "eta");
    cfg.domain = domain_of(p);
    cfg.quad = {quad_rect(p), orientation_of(p)};
    if (has(p, "t_grid")) {
        cfg.t_grid = list(p, "t_grid");
    } else {
        const double a = std::log(real(p, "tmin")), b = std::log(real(p, "tmax"));
        const auto n = integer(p, "points");
        for (std::uint64_t k = 0; k < n; ++k)
            cfg.t_grid.push_back(std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1)));
    }
    cfg.n_replicas = integer(p, "replicas");
    cfg.mode = parse_mixing_mode(text(p, "mode"));
    cfg.seed = integer(p, "seed");
    cfg.field_seed = integer(p, "field_seed");
    cfg.brw_depth = static_cast<int>(integer(p, "depth"));
    cfg.C = cutoff(p);
    cfg.bootstrap = integer(p, "bootstrap");
    cfg.threads = threads(p);
    const auto curve = mixing_curve(cfg, calibration_for(p, cfg.eta));

    std::ostringstream os;
    write_mixing_csv(os, curve);
    Outcome out{os.str()};
    out.info["p0"] = curve.p0;
    for (std::size_t k = 1; k < curve.est_cov.size(); ++k)
        if (curve.est_cov[k] > curve.est_cov[k - 1] + 2 * std::hypot(curve.se[k], curve.se[k - 1]))
            out.soft_failures.push_back("est_cov increases beyond 2 SE at t=" + format_double(cfg.t_grid[k]));
    const double th = theta(real(p, "d"), cfg.gamma);
    if (th > 0.0) {
        // Decay exponent benchmark: half of 2 theta / 5.
        const double threshold = th / 5.0;
        out.info["theta"] = th;
        out.info["xi_threshold"] = threshold;
        try {
            const auto fit = fit_power_law(curve, real(p, "fit_tmin"));
            out.info["xi_hat"] = fit.xi_hat;
            out.info["xi_stderr"] = fit.stderr_;
            out.info["r_squared"] = fit.r_squared;
            out.info["fit_excluded_t"] = fit.excluded_t;
            if (fit.xi_hat < threshold)
                out.soft_failures.push_back("fitted exponent " + format_double(fit.xi_hat) + " below " +
                                            format_double(threshold));
        } catch (const Error& e) {
            out.soft_failures.push_back(std::string("power-law fit failed: ") + e.what());
        }
    }
    return out;
}

Outcome run_frozen(const json& p) {
    FrozenConfig cfg;
    cfg.gamma = real(p, "gamma");
    cfg.etas = list(p, "etas");
    cfg.quad = {quad_rect(p), orientation_of(p)};
    cfg.t = real(p, "t");
    cfg.n_replicas = integer(p, "replicas");
    cfg.seed = integer(p, "seed");
    cfg.threads = threads(p);
    std::vector<Alpha4Calibration> cals;
    for (double eta : cfg.etas) cals.push_back(calibration_for(p, eta));
    const auto rows = frozen_check(cfg, cals);
    std::ostringstream os;
    write_frozen_csv(os, cfg.gamma, cfg.t, rows);
    Outcome out{os.str()};
    if (cfg.gamma > kFrozenThreshold)
        for (std::size_t k = 1; k < rows.size(); ++k)
            if (rows[k].p_flip > rows[k - 1].p_flip + 2 * std::hypot(rows[k].se, rows[k - 1].se))
                out.soft_failures.push_back("flip probability increases beyond 2 SE at eta=" +
                                            format_double(rows[k].eta));
    return out;
}

Outcome run_switchcheck(const json& p) {
    const auto lat = build_lattice(real(p, "eta"), domain_of(p));
    const auto quad = make_quad(*lat, quad_rect(p), orientation_of(p));
    const auto rates = make_rates(SiteMeasure{lat, std::vector<double>(lat->size(), real(p, "rate")), "uniform"}, 1.0);
    const auto rep = switch_count_check(rates, quad, real(p, "t1"), real(p, "t2"), integer(p, "replicas"),
                                        integer(p, "seed"), threads(p));
    std::ostringstream os;
    CsvWriter csv(os, {"observed_mean", "observed_se", "predicted", "predicted_se", "predicted_exact", "z", "n"});
    csv.row(rep.observed_mean, rep.observed_se, rep.predicted, rep.predicted_se, rep.predicted_exact, rep.z_score,
            rep.n_replicas);
    Outcome out{os.str()};
    if (!(std::abs(rep.z_score) < 4.0)) out.soft_failures.push_back("|z| = " + format_double(std::abs(rep.z_score)) + " >= 4");
    return out;
}

Outcome run_regime(const json& p) {
    const auto rep = regime_classify(real(p, "gamma"), real(p, "d"));
    std::ostringstream os;
    CsvWriter csv(os, {"gamma", "d", "regime", "Q", "c", "stable_threshold", "frozen_threshold"});
    csv.row(rep.gamma, rep.d, to_string(rep.regime), rep.Q, rep.c, rep.stable_threshold, rep.frozen_threshold);
    return {os.str()};
}

}  // namespace

const std::vector<std::string>& commands() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [name, params] : command_params()) v.push_back(name);
        return v;
    }();
    return names;
}

RunConfig parse_config(const std::vector<std::string>& args) {
    CLI::App app{"Liouville dynamical percolation laboratory", "ldp"};
    app.require_subcommand(1);
    app.set_version_flag("--version", LDP_VERSION);
    std::map<std::string, std::map<std::string, std::string>> raw;
    std::map<std::string, std::string> config_path;
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, params] : command_params()) {
        auto* sub = app.add_subcommand(name, command_descriptions().at(name));
        subs[name] = sub;
        sub->add_option("--config", config_path[name], "JSON file of parameters; flags override it");
        for (const auto& prm : params) {
            std::string help = prm.help;
            if (!prm.fallback.is_null()) help += " (default " + prm.fallback.dump() + ")";
            sub->add_option(std::string("--") + prm.name, raw[name][prm.name], help);
        }
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested{app.help()};
    } catch (const CLI::CallForVersion&) {
        throw HelpRequested{std::string(LDP_VERSION) + "\n"};
    } catch (const CLI::ParseError& e) {
        throw Error("usage", e.what());
    }

    RunConfig cfg;
    for (const auto& [name, sub] : subs)
        if (sub->parsed()) cfg.command = name;
    for (const auto& prm : command_params().at(cfg.command)) cfg.params[prm.name] = prm.fallback;

    if (const auto& path = config_path[cfg.command]; !path.empty()) {
        std::ifstream f(path);
        if (!f) throw Error("io", "cannot read config file " + path);
        json file;
        try {
            f >> file;
        } catch (const json::exception& e) {
            throw Error("config", "config file is not valid JSON: " + std::string(e.what()));
        }
        if (!file.is_object()) throw Error("config", "config file must hold a JSON object");
        for (const auto& [key, value] : file.items()) cfg.params[key] = from_file(find_param(cfg.command, key), value);
    }
    auto* sub = subs[cfg.command];
    for (const auto& prm : command_params().at(cfg.command))
        if (sub->count(std::string("--") + prm.name) > 0)
            cfg.params[prm.name] = from_flag(prm, raw[cfg.command][prm.name]);
    validate(cfg);
    return cfg;
}

int dispatch(const RunConfig& cfg, std::ostream& out_stream, std::ostream& err) {
    static const std::map<std::string, Outcome (*)(const json&)> handlers{
        {"calibrate", run_calibrate}, {"field", run_field},   {"gmc", run_gmc},
        {"simulate", run_simulate},   {"spectrum", run_spectrum}, {"mixing", run_mixing},
        {"frozen", run_frozen},       {"switchcheck", run_switchcheck}, {"regime", run_regime},
    };
    const auto it = handlers.find(cfg.command);
    if (it == handlers.end()) throw Error("usage", "unknown command " + cfg.command);

    const auto started = std::chrono::steady_clock::now();
    const std::string started_at = now_utc();
    const Outcome res = it->second(cfg.params);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    for (const auto& f : res.soft_failures) err << json{{"soft_check", "fail"}, {"detail", f}}.dump() << '\n';

    const std::string out = cfg.params.value("out", "");
    if (out.empty()) {
        out_stream << res.csv;
    } else {
        json manifest{
            {"command", cfg.command},
            {"params", cfg.params},
            {"version", LDP_VERSION},
            {"git_describe", LDP_GIT_DESCRIBE},
            {"started_at", started_at},
            {"wall_seconds", wall},
            {"output", out},
            {"results", res.info},
            {"soft_failures", res.soft_failures},
        };
        if (cfg.params.contains("gamma") && cfg.params["gamma"].is_number() && real(cfg.params, "gamma") > 0.0 &&
            real(cfg.params, "gamma") < 2.0)
            manifest["regime"] = to_string(regime_classify(real(cfg.params, "gamma")).regime);
        write_atomically(out, res.csv);
        write_atomically(out + ".manifest.json", manifest.dump(2) + "\n");
    }
    return res.soft_failures.empty() ? kExitOk : kExitSoftFail;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::string command = "<command>";
    try {
        const RunConfig cfg = parse_config(args);
        command = cfg.command;
        return dispatch(cfg, out, err);
    } catch (const HelpRequested& h) {
        out << h.text;
        return kExitOk;
    } catch (const Error& e) {
        for (const auto& a : args)
            if (command_params().count(a)) {
                command = a;
                break;
            }
        err << json{{"error", e.code()}, {"message", e.what()}}.dump() << '\n';
        err << "hint: see `ldp " << command << " --help` for parameters and ranges\n";
    } catch (const std::exception& e) {
        err << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
        err << "hint: this is unexpected; rerun with the same config to reproduce\n";
    }
    return kExitError;
}

}  // namespace ldp::cli
