#include "ldp/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ldp/csv.hpp"
#include "ldp/error.hpp"
#include "ldp/parallel.hpp"
#include "ldp/rng.hpp"
#include "ldp/stats.hpp"

namespace ldp {

namespace {

constexpr std::uint64_t kStreamInit = 1;
constexpr std::uint64_t kStreamDynamics = 2;
constexpr std::uint64_t kStreamCorrection = 3;

void check_rates(const ClockRates& rates, const Configuration& cfg) {
    if (rates.rates.size() != cfg.colors.size())
        throw InvalidArgument("clock rates and configuration have different site counts");
}

// All rings on [0, T], sorted by time. See run_dp for the construction.
std::vector<Event> generate_events(const ClockRates& rates, double T, std::uint64_t seed) {
    if (!(T >= 0.0) || !std::isfinite(T)) throw InvalidArgument("horizon must be finite and non-negative");
    if (rates.total_rate * T > kEventBudget)
        throw BudgetError("expected event count total_rate * T exceeds 1e9");
    std::vector<Event> events;
    events.reserve(static_cast<std::size_t>(rates.total_rate * T * 1.1) + 16);
    for (std::size_t x = 0; x < rates.rates.size(); ++x) {
        const double budget = rates.rates[x] * T;
        if (!(budget > 0.0)) continue;
        CounterRng rng(hash_words({seed, x}));
        double gamma = 0.0;
        for (;;) {
            gamma += rng.exponential(1.0);
            if (gamma > budget) break;
            const double time = T * rng.uniform();
            const std::int8_t color = (rng() & 1U) ? kOpen : kClosed;
            events.push_back({time, static_cast<SiteIndex>(x), color});
        }
    }
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        return a.time < b.time || (a.time == b.time && a.site < b.site);
    });
    return events;
}

double normaliser(const Lattice& lat, const Alpha4Calibration& cal) {
    if (cal.empty()) throw CalibrationError("clock rates need an alpha4 calibration");
    if (std::abs(cal.eta - lat.eta()) > 1e-9 * lat.eta())
        throw CalibrationError("alpha4 calibration mesh does not match the lattice");
    return cal.at_mesh();
}

SiteMeasure lqg_measure(const Field& field, double gamma) {
    return gmc_measure(field, gamma, lebesgue_measure(field.lattice));
}

}  // namespace

ClockRates make_rates(const SiteMeasure& m, double alpha4) {
    if (!(alpha4 > 0.0)) throw CalibrationError("alpha4(eta, 1) must be positive");
    if (!m.lattice || m.masses.size() != m.lattice->size()) throw InvalidArgument("measure does not match its lattice");
    ClockRates r{m.lattice, m.masses, 0.0, alpha4};
    for (double& v : r.rates) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("measure masses must be finite and non-negative");
        v /= alpha4;
        r.total_rate += v;
    }
    return r;
}

ClockRates make_rates(const SiteMeasure& m, const Alpha4Calibration& cal) {
    if (!m.lattice) throw InvalidArgument("measure has no lattice");
    return make_rates(m, normaliser(*m.lattice, cal));
}

Trajectory run_dp(const Configuration& init, const ClockRates& rates, double T, std::span<const RectQuad> quads,
                  std::span<const double> sample_times, std::uint64_t seed, const DynamicsOptions& opts) {
    if (!(T > 0.0)) throw InvalidArgument("T must be positive");
    check_rates(rates, init);
    for (std::size_t k = 0; k < sample_times.size(); ++k) {
        if (!(sample_times[k] >= 0.0 && sample_times[k] <= T)) throw InvalidArgument("sample times must lie in [0, T]");
        if (k > 0 && sample_times[k] < sample_times[k - 1]) throw InvalidArgument("sample times must be sorted");
    }
    const auto events = generate_events(rates, T, seed);

    std::vector<PreparedQuad> pq;
    pq.reserve(quads.size());
    for (const auto& q : quads) pq.emplace_back(init.lattice, q);

    Trajectory tr;
    tr.initial = init;
    tr.horizon = T;
    tr.seed = seed;
    tr.event_count = events.size();
    tr.sample_times.assign(sample_times.begin(), sample_times.end());
    tr.crossed.reserve(sample_times.size());

    auto colors = init.colors;
    auto record = [&] {
        std::vector<std::uint8_t> row(pq.size());
        for (std::size_t q = 0; q < pq.size(); ++q) row[q] = pq[q].crossed(colors) ? 1 : 0;
        tr.crossed.push_back(std::move(row));
    };

    std::vector<std::uint8_t> current;
    if (opts.exact_switches) {
        tr.switch_counts.assign(pq.size(), 0);
        for (const auto& q : pq) current.push_back(q.crossed(colors) ? 1 : 0);
    }

    std::size_t next_sample = 0;
    for (const Event& e : events) {
        while (next_sample < sample_times.size() && sample_times[next_sample] < e.time) {
            record();
            ++next_sample;
        }
        auto& c = colors[static_cast<std::size_t>(e.site)];
        const bool changed = c != e.color;
        c = e.color;
        if (opts.exact_switches && changed) {
            for (std::size_t q = 0; q < pq.size(); ++q) {
                if (!pq[q].contains(e.site)) continue;
                const std::uint8_t now = pq[q].crossed(colors) ? 1 : 0;
                if (now != current[q]) {
                    current[q] = now;
                    if (e.time >= opts.switch_window_start && e.time <= opts.switch_window_end) ++tr.switch_counts[q];
                }
            }
        }
    }
    while (next_sample < sample_times.size()) {
        record();
        ++next_sample;
    }
    if (opts.record_events) tr.events = events;
    tr.final = Configuration{init.lattice, std::move(colors), init.seed};
    return tr;
}

ClockRates ldp_rates(const Field& field, const LdpParams& p, const Alpha4Calibration& cal) {
    SiteMeasure m = lqg_measure(field, p.gamma);
    if (!std::isinf(p.C)) m = truncate_measure(m, moderate_set(m, p.C, p.rho.value_or(default_rho(p.gamma)), cal));
    return make_rates(m, cal);
}

Trajectory run_ldp(const Field& field, const LdpParams& p, const Alpha4Calibration& cal, double T,
                   std::span<const RectQuad> quads, std::span<const double> sample_times, std::uint64_t seed,
                   const DynamicsOptions& opts) {
    const ClockRates rates = ldp_rates(field, p, cal);
    const Configuration init = sample_configuration(field.lattice, derive_seed(seed, kStreamInit));
    return run_dp(init, rates, T, quads, sample_times, derive_seed(seed, kStreamDynamics), opts);
}

CoupledCutoffResult coupled_cutoff_run(const Field& field, double gamma, double C, double C_prime, double t,
                                       std::span<const RectQuad> quads, std::uint64_t seed,
                                       const Alpha4Calibration& cal, std::optional<double> rho) {
    if (!(C < C_prime)) throw InvalidArgument("coupled_cutoff_run needs C < C'");
    if (!(t >= 0.0)) throw InvalidArgument("t must be non-negative");
    const Lattice& lat = *field.lattice;
    const double r = rho.value_or(default_rho(gamma));
    const SiteMeasure gmc = lqg_measure(field, gamma);
    const ModerateSet ms = moderate_set(gmc, C, r, cal);
    const ModerateSet ms_prime = moderate_set(gmc, C_prime, r, cal);

    SiteMeasure diff{field.lattice, std::vector<double>(lat.size(), 0.0), "correction"};
    for (std::size_t x = 0; x < lat.size(); ++x)
        if (ms_prime.member[x] && !ms.member[x]) diff.masses[x] = gmc.masses[x];
    const ClockRates rates_c = make_rates(truncate_measure(gmc, ms), cal);
    const ClockRates rates_diff = make_rates(diff, cal);

    const Configuration init = sample_configuration(field.lattice, derive_seed(seed, kStreamInit));
    CoupledCutoffResult out{init, init, 0, rates_diff.total_rate};
    if (t == 0.0) return out;

    const auto events_c = generate_events(rates_c, t, derive_seed(seed, kStreamDynamics));
    std::vector<double> last_c(lat.size(), -1.0);
    for (const Event& e : events_c) {
        out.at_c.colors[static_cast<std::size_t>(e.site)] = e.color;
        last_c[static_cast<std::size_t>(e.site)] = e.time;
    }
    out.at_c_prime = out.at_c;
    for (const Event& e : generate_events(rates_diff, t, derive_seed(seed, kStreamCorrection)))
        if (last_c[static_cast<std::size_t>(e.site)] <= e.time)
            out.at_c_prime.colors[static_cast<std::size_t>(e.site)] = e.color;

    for (const auto& q : quads) {
        const PreparedQuad pq(field.lattice, q);
        if (pq.crossed(out.at_c.colors) != pq.crossed(out.at_c_prime.colors)) ++out.discrepancies;
    }
    return out;
}

std::vector<Configuration> near_critical(const Configuration& init, const ClockRates& rates,
                                         std::span<const double> lambdas, std::uint64_t seed) {
    check_rates(rates, init);
    if (!std::is_sorted(lambdas.begin(), lambdas.end())) throw InvalidArgument("lambdas must be sorted");
    if (std::find(lambdas.begin(), lambdas.end(), 0.0) == lambdas.end())
        throw InvalidArgument("lambdas must include 0");
    const std::size_t n = init.colors.size();
    std::vector<double> tau(n, kInfinity);
    for (std::size_t x = 0; x < n; ++x)
        if (rates.rates[x] > 0.0) tau[x] = CounterRng(hash_words({seed, x})).exponential(rates.rates[x]);

    std::vector<Configuration> out;
    out.reserve(lambdas.size());
    for (double lambda : lambdas) {
        Configuration c = init;
        const std::int8_t target = lambda >= 0.0 ? kOpen : kClosed;
        const double reach = std::abs(lambda);
        for (std::size_t x = 0; x < n; ++x)
            if (tau[x] <= reach) c.colors[x] = target;
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<double> exact_pivotal_probabilities(const LatticePtr& lat, const RectQuad& q) {
    const PreparedQuad pq(lat, q);
    const auto sites = pq.sites();
    const std::size_t n = sites.size();
    if (n > 24) throw BudgetError("exact pivotal enumeration is limited to 24 quad sites");
    std::vector<double> prob(lat->size(), 0.0);
    if (n == 0) return prob;
    const std::uint64_t states = std::uint64_t(1) << n;
    std::vector<std::uint8_t> value(states);
    std::vector<std::int8_t> colors(lat->size(), kClosed);
    for (std::uint64_t mask = 0; mask < states; ++mask) {
        for (std::size_t k = 0; k < n; ++k) colors[static_cast<std::size_t>(sites[k])] = (mask >> k) & 1U ? kOpen : kClosed;
        value[mask] = pq.crossed(colors) ? 1 : 0;
    }
    for (std::size_t k = 0; k < n; ++k) {
        std::uint64_t count = 0;
        for (std::uint64_t mask = 0; mask < states; ++mask) count += value[mask] != value[mask ^ (std::uint64_t(1) << k)];
        prob[static_cast<std::size_t>(sites[k])] = static_cast<double>(count) / static_cast<double>(states);
    }
    return prob;
}

SwitchCountReport switch_count_check(const ClockRates& rates, const RectQuad& q, double T1, double T2,
                                     std::size_t n_replicas, std::uint64_t seed, unsigned threads) {
    if (!(T2 > T1) || !(T1 >= 0.0)) throw InvalidArgument("switch_count_check needs 0 <= T1 < T2");
    if (n_replicas < 2) throw InvalidArgument("switch_count_check needs at least two replicas");
    if (!rates.lattice) throw InvalidArgument("clock rates have no lattice");
    const LatticePtr& lat = rates.lattice;
    const PreparedQuad pq(lat, q);
    const double window = T2 - T1;

    SwitchCountReport rep;
    rep.n_replicas = n_replicas;
    if (pq.sites().size() <= 16) {
        const auto p = exact_pivotal_probabilities(lat, q);
        double s = 0.0;
        for (std::size_t x = 0; x < p.size(); ++x) s += rates.rates[x] * p[x];
        rep.predicted = window * s / 2;
        rep.predicted_exact = true;
    } else {
        std::vector<double> v(n_replicas, 0.0);
        parallel_for(n_replicas, threads, [&](std::size_t r) {
            PreparedQuad local = pq;
            const auto cfg = sample_configuration(lat, derive_seed(seed ^ 0x5157A7C1ULL, r));
            const bool base = local.crossed(cfg.colors);
            double s = 0.0;
            for (SiteIndex x : local.sites()) {
                const double rate = rates.rates[static_cast<std::size_t>(x)];
                if (rate > 0.0 && local.crossed(cfg.colors, x) != base) s += rate;
            }
            v[r] = s;
        });
        stats::RunningStats st;
        for (double x : v) st.add(x);
        rep.predicted = window * st.mean() / 2;
        rep.predicted_se = window * st.stderr_of_mean() / 2;
    }

    std::vector<double> counts(n_replicas, 0.0);
    const std::array<RectQuad, 1> qs{q};
    DynamicsOptions opts;
    opts.exact_switches = true;
    opts.switch_window_start = T1;
    opts.switch_window_end = T2;
    parallel_for(n_replicas, threads, [&](std::size_t r) {
        const auto init = sample_configuration(lat, derive_seed(seed, 2 * r));
        const auto tr = run_dp(init, rates, T2, qs, {}, derive_seed(seed, 2 * r + 1), opts);
        counts[r] = static_cast<double>(tr.switch_counts[0]);
    });
    stats::RunningStats st;
    for (double c : counts) st.add(c);
    rep.observed_mean = st.mean();
    rep.observed_se = st.stderr_of_mean();
    const double se = std::hypot(rep.observed_se, rep.predicted_se);
    rep.z_score = se > 0.0 ? (rep.observed_mean - rep.predicted) / se : (rep.observed_mean == rep.predicted ? 0.0 : kInfinity);
    return rep;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    CsvWriter csv(os, {"sample_time", "quad_id", "crossed"});
    for (std::size_t k = 0; k < tr.crossed.size(); ++k)
        for (std::size_t q = 0; q < tr.crossed[k].size(); ++q) csv.row(tr.sample_times[k], q, static_cast<int>(tr.crossed[k][q]));
}

void write_events_csv(std::ostream& os, const Trajectory& tr) {
    CsvWriter csv(os, {"time", "site", "new_color"});
    for (const Event& e : tr.events) csv.row(e.time, e.site, static_cast<int>(e.color));
}

}  // namespace ldp
