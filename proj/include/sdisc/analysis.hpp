#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sdisc/discretize.hpp"
#include "sdisc/errors.hpp"
#include "sdisc/generalized_plant.hpp"
#include "sdisc/hinf_norm.hpp"
#include "sdisc/lifting.hpp"
#include "sdisc/state_space.hpp"
#include "sdisc/synthesis.hpp"

namespace sdisc {

namespace detail {

// 12 significant digits, enough to reproduce a double to ~1 ulp visually
// while keeping CSV files diffable.
inline std::string format_sig(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
}

}  // namespace detail

// Logarithmically spaced frequency grid, endpoints included exactly.
inline std::vector<double> log_grid(double w_min, double w_max, int count) {
    if (!(w_min > 0.0))
        throw validation_error("log_grid: w_min must be positive, got " + std::to_string(w_min));
    if (!(w_max > w_min))
        throw validation_error("log_grid: w_max must exceed w_min");
    if (count < 2) throw validation_error("log_grid: count must be >= 2, got " + std::to_string(count));
    std::vector<double> grid(static_cast<std::size_t>(count));
    const double l0 = std::log10(w_min), l1 = std::log10(w_max);
    for (int i = 0; i < count; ++i)
        grid[static_cast<std::size_t>(i)] = std::pow(10.0, l0 + (l1 - l0) * i / (count - 1));
    grid.front() = w_min;
    grid.back() = w_max;
    return grid;
}

// Magnitude in dB, floored so that exact zeros and denormals do not produce
// -inf in output files.
inline double magnitude_db(double mag) {
    constexpr double floor_db = -150.0;
    if (!(mag > 0.0)) return floor_db;
    return std::max(20.0 * std::log10(mag), floor_db);
}

// ---------------------------------------------------------------------------
// Frequency-response comparison

struct ComparisonTable {
    std::vector<double> frequencies;              // rad/s, strictly increasing
    std::vector<std::string> names;               // "target" first, then one per filter
    std::vector<std::vector<double>> columns_db;  // parallel to names, floored at -150 dB
};

// Magnitude of the continuous target against any number of discrete filters
// sharing one sample period.  The grid must stay inside (0, pi/h).
inline ComparisonTable compare_frequency_responses(
    const StateSpaceModel& target,
    const std::vector<std::pair<std::string, StateSpaceModel>>& filters,
    const std::vector<double>& grid) {
    if (target.is_discrete())
        throw validation_error("compare_frequency_responses: target must be continuous-time");
    if (grid.empty())
        throw validation_error("compare_frequency_responses: frequency grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0))
            throw validation_error("compare_frequency_responses: frequencies must be positive, "
                                   "got " + std::to_string(grid[i]));
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw validation_error("compare_frequency_responses: grid must be strictly "
                                   "increasing");
    }
    double h = 0.0;
    for (const auto& [name, sys] : filters) {
        if (!sys.is_discrete())
            throw validation_error("compare_frequency_responses: filter '" + name +
                                   "' must be discrete-time");
        if (h == 0.0)
            h = sys.sample_period();
        else if (std::abs(sys.sample_period() - h) > 1e-9 * h)
            throw validation_error("compare_frequency_responses: filter '" + name +
                                   "' does not share the common sample period");
    }
    if (h > 0.0 && grid.back() >= std::numbers::pi / h)
        throw validation_error("compare_frequency_responses: grid reaches " +
                               std::to_string(grid.back()) + " rad/s, must stay below pi/h = " +
                               std::to_string(std::numbers::pi / h));

    ComparisonTable table;
    table.frequencies = grid;
    table.names.reserve(filters.size() + 1);
    table.names.push_back("target");
    for (const auto& [name, sys] : filters) table.names.push_back(name);

    std::vector<FrequencyEvaluator> evals;
    evals.reserve(filters.size() + 1);
    evals.emplace_back(target);
    for (const auto& [name, sys] : filters) evals.emplace_back(sys);

    table.columns_db.assign(evals.size(), std::vector<double>(grid.size()));
    for (std::size_t c = 0; c < evals.size(); ++c)
        for (std::size_t k = 0; k < grid.size(); ++k)
            table.columns_db[c][k] = magnitude_db(evals[c].peak_gain(grid[k]));
    return table;
}

inline void write_comparison_csv(std::ostream& out, const ComparisonTable& table) {
    out << "omega_rad_s";
    for (const auto& name : table.names) out << "," << name << "_dB";
    out << "\n";
    for (std::size_t k = 0; k < table.frequencies.size(); ++k) {
        out << detail::format_sig(table.frequencies[k]);
        for (const auto& col : table.columns_db) out << "," << detail::format_sig(col[k]);
        out << "\n";
    }
}

// ---------------------------------------------------------------------------
// Time-domain comparison

// Right-continuous step schedule: values[i] holds on [times[i], times[i+1]),
// the last value holds forever.
struct PiecewiseConstant {
    std::vector<double> times;
    std::vector<double> values;

    void validate() const {
        if (times.empty()) throw validation_error("schedule: no breakpoints");
        if (times.size() != values.size())
            throw validation_error("schedule: times and values differ in length");
        if (times.front() != 0.0)
            throw validation_error("schedule: first breakpoint must be t = 0, got " +
                                   std::to_string(times.front()));
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (!std::isfinite(times[i]) || !std::isfinite(values[i]))
                throw validation_error("schedule: entries must be finite");
            if (i > 0 && !(times[i] > times[i - 1]))
                throw validation_error("schedule: breakpoints must be strictly increasing");
        }
    }
};

// Unit-amplitude rectangular wave with half-period 5h; six half-periods cover
// the default 30h scenario.
inline PiecewiseConstant default_rectangular_input(double h) {
    if (!(h > 0.0)) throw validation_error("default_rectangular_input: h must be positive");
    PiecewiseConstant sched;
    for (int k = 0; k < 6; ++k) {
        sched.times.push_back(5.0 * h * k);
        sched.values.push_back(k % 2 == 0 ? 1.0 : -1.0);
    }
    return sched;
}

// Lines of "t value" (comma or whitespace separated, '#' starts a comment).
inline PiecewiseConstant read_schedule(std::istream& in) {
    PiecewiseConstant sched;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        double t = 0.0, v = 0.0;
        if (!(fields >> t)) continue;  // blank or comment-only line
        if (!(fields >> v))
            throw validation_error("schedule line " + std::to_string(lineno) +
                                   ": expected 't value'");
        std::string extra;
        if (fields >> extra)
            throw validation_error("schedule line " + std::to_string(lineno) +
                                   ": trailing content '" + extra + "'");
        sched.times.push_back(t);
        sched.values.push_back(v);
    }
    sched.validate();
    return sched;
}

// Sample the schedule onto a uniform grid of `count` points spaced `period`.
inline SampledSignal rasterize(const PiecewiseConstant& sched, double period, long count) {
    sched.validate();
    if (!(period > 0.0)) throw validation_error("rasterize: period must be positive");
    if (count < 0) throw validation_error("rasterize: count must be nonnegative");
    SampledSignal out;
    out.period = period;
    out.values.reserve(static_cast<std::size_t>(count));
    std::size_t seg = 0;
    for (long k = 0; k < count; ++k) {
        const double t = static_cast<double>(k) * period;
        while (seg + 1 < sched.times.size() &&
               t >= sched.times[seg + 1] - 1e-12 * std::max(1.0, std::abs(sched.times[seg + 1])))
            ++seg;
        out.values.push_back(Vector::Constant(1, sched.values[seg]));
    }
    return out;
}

struct SimulationComparison {
    SampledSignal ideal;    // target branch, delayed m slow steps, on the fast grid
    SampledSignal digital;  // sample -> filter -> hold branch on the fast grid
    double error_energy;    // sum of squared differences scaled by h/N
};

// Run both branches of the error system on a concrete fast-rate input.
// The filter may be given either as the slow-rate design (spec.L outputs,
// period h) or as the deployable interleaved form (single output, period h/L);
// both produce the same held waveform.
inline SimulationComparison simulate_comparison(const StateSpaceModel& G,
                                                const StateSpaceModel& K, const DesignSpec& spec,
                                                const SampledSignal& input) {
    spec.validate();
    if (G.is_discrete())
        throw validation_error("simulate_comparison: G must be continuous-time");
    if (G.inputs() != 1 || G.outputs() != 1)
        throw validation_error("simulate_comparison: G must be single-input single-output");
    if (!K.is_discrete())
        throw validation_error("simulate_comparison: filter must be discrete-time");
    if (K.inputs() != 1)
        throw validation_error("simulate_comparison: filter must have one input");
    const double fast = spec.fast_period();
    if (std::abs(input.period - fast) > 1e-9 * fast)
        throw validation_error("simulate_comparison: input period must be h/N = " +
                               std::to_string(fast));
    if (input.length() % spec.N != 0)
        throw validation_error("simulate_comparison: input length must cover a whole number "
                               "of slow periods h");
    if (input.length() > 0 && input.channels() != 1)
        throw validation_error("simulate_comparison: input must have one channel");
    const long fast_steps = input.length();
    const long slow_steps = fast_steps / spec.N;

    // Target branch: fast discretization of G, then an m-step slow delay.
    const SampledSignal y = simulate(c2d_zoh(G, fast), input);
    SampledSignal ideal;
    ideal.period = fast;
    ideal.start_index = input.start_index;
    ideal.values.assign(static_cast<std::size_t>(fast_steps), Vector::Zero(1));
    const long delay_samples = static_cast<long>(spec.m) * spec.N;
    for (long k = delay_samples; k < fast_steps; ++k)
        ideal.values[static_cast<std::size_t>(k)] = y.values[static_cast<std::size_t>(k - delay_samples)];

    // Digital branch: sample every N fast steps, filter, hold each filter
    // output for p = N/L fast steps.
    SampledSignal digital;
    digital.period = fast;
    digital.start_index = input.start_index;
    digital.values.assign(static_cast<std::size_t>(fast_steps), Vector::Zero(1));
    const double h = spec.h;
    if (K.outputs() == spec.L && std::abs(K.sample_period() - h) <= 1e-9 * h) {
        // Slow-rate design; one output block per slow step.
        SampledSignal us;
        us.period = h;
        us.values.reserve(static_cast<std::size_t>(slow_steps));
        for (long k = 0; k < slow_steps; ++k)
            us.values.push_back(input.values[static_cast<std::size_t>(k * spec.N)]);
        const SampledSignal v = simulate(K, us);
        const int p = spec.N / spec.L;
        for (long k = 0; k < slow_steps; ++k)
            for (int j = 0; j < spec.L; ++j)
                for (int r = 0; r < p; ++r)
                    digital.values[static_cast<std::size_t>(k * spec.N + j * p + r)](0) =
                        v.values[static_cast<std::size_t>(k)](j);
    } else if (K.outputs() == 1 && std::abs(K.sample_period() - h / spec.L) <= 1e-9 * h / spec.L) {
        // Deployable form at period h/L driven by the zero-stuffed samples.
        const long ctrl_steps = slow_steps * spec.L;
        SampledSignal uz;
        uz.period = h / spec.L;
        uz.values.assign(static_cast<std::size_t>(ctrl_steps), Vector::Zero(1));
        for (long k = 0; k < slow_steps; ++k)
            uz.values[static_cast<std::size_t>(k * spec.L)] =
                input.values[static_cast<std::size_t>(k * spec.N)];
        const SampledSignal v = simulate(K, uz);
        const int p = spec.N / spec.L;
        for (long i = 0; i < ctrl_steps; ++i)
            for (int r = 0; r < p; ++r)
                digital.values[static_cast<std::size_t>(i * p + r)](0) =
                    v.values[static_cast<std::size_t>(i)](0);
    } else {
        throw validation_error(
            "simulate_comparison: filter must run at period h with spec.L outputs, or at "
            "period h/L with one output; got " + std::to_string(K.outputs()) +
            " outputs at period " + std::to_string(K.sample_period()));
    }

    double energy = 0.0;
    for (long k = 0; k < fast_steps; ++k) {
        const double d = ideal.values[static_cast<std::size_t>(k)](0) -
                         digital.values[static_cast<std::size_t>(k)](0);
        energy += d * d;
    }

    SimulationComparison out{std::move(ideal), std::move(digital), energy * fast};
    return out;
}

inline SimulationComparison simulate_comparison(const StateSpaceModel& G,
                                                const StateSpaceModel& K, const DesignSpec& spec,
                                                const PiecewiseConstant& input, double duration) {
    spec.validate();
    const double ratio = duration / spec.h;
    const long slow_steps = std::lround(ratio);
    if (!(duration > 0.0) || std::abs(ratio - static_cast<double>(slow_steps)) > 1e-9 * std::max(1.0, ratio))
        throw validation_error("simulate_comparison: duration = " + std::to_string(duration) +
                               " must be a positive whole multiple of h = " +
                               std::to_string(spec.h));
    return simulate_comparison(G, K, spec,
                               rasterize(input, spec.fast_period(), slow_steps * spec.N));
}

inline void write_simulation_csv(std::ostream& out, const SimulationComparison& sim) {
    out << "t,ideal,digital\n";
    for (Eigen::Index k = 0; k < sim.ideal.length(); ++k) {
        const double t = static_cast<double>(sim.ideal.start_index + k) * sim.ideal.period;
        out << detail::format_sig(t) << ","
            << detail::format_sig(sim.ideal.values[static_cast<std::size_t>(k)](0)) << ","
            << detail::format_sig(sim.digital.values[static_cast<std::size_t>(k)](0)) << "\n";
    }
}

// ---------------------------------------------------------------------------
// Error system for a fixed filter

// Slow-rate form of a filter: unchanged if it already emits one block per
// slow step; a single-output filter running at h/L is re-blocked into its
// lifted equivalent driven by the zero-stuffed slow samples.
inline StateSpaceModel slow_rate_form(const StateSpaceModel& K, double h) {
    if (!K.is_discrete() || K.inputs() != 1)
        throw validation_error("slow_rate_form: filter must be discrete-time with one input");
    if (!(h > 0.0)) throw validation_error("slow_rate_form: h must be positive");
    if (std::abs(K.sample_period() - h) <= 1e-9 * h) return K;
    const double ratio = h / K.sample_period();
    const long L = std::lround(ratio);
    if (K.outputs() != 1 || L < 1 || std::abs(ratio - static_cast<double>(L)) > 1e-6 * ratio)
        throw validation_error("slow_rate_form: filter period " +
                               std::to_string(K.sample_period()) +
                               " must be h or h/L for a whole L, h = " + std::to_string(h));
    Matrix stuff = Matrix::Zero(L, 1);
    stuff(0, 0) = 1.0;
    return series(lift(K, static_cast<int>(L)).slow_system(),
                  StateSpaceModel::static_gain(std::move(stuff), h));
}

// True error system on the slow clock for a given filter:
//   E(z) = z^{-m} G_N F_N - H K(z) S F_N
// No regularization channel: the filter is fixed, not being synthesized.
// The hold width follows the filter's output count, which must divide N.
inline StateSpaceModel error_system_with_filter(const StateSpaceModel& G,
                                                const StateSpaceModel& F, const DesignSpec& spec,
                                                const StateSpaceModel& K_any) {
    spec.validate();
    detail::require_design_models(G, F);
    const StateSpaceModel K = slow_rate_form(K_any, spec.h);
    const int Lk = static_cast<int>(K.outputs());
    if (Lk < 1 || spec.N % Lk != 0)
        throw validation_error("error_system_with_filter: filter output count " +
                               std::to_string(Lk) + " must divide N = " + std::to_string(spec.N));

    const double fast = spec.fast_period();
    const StateSpaceModel GNs = lift(c2d_zoh(G, fast), spec.N).slow_system();
    const StateSpaceModel FNs = lift(c2d_zoh(F, fast), spec.N).slow_system();
    const StateSpaceModel target =
        series(delay_chain(spec.m, spec.N, spec.h), series(GNs, FNs));
    const StateSpaceModel hold =
        StateSpaceModel::static_gain(multirate_hold_matrix(spec.N, Lk), spec.h);
    const StateSpaceModel sample = StateSpaceModel::static_gain(sample_matrix(spec.N), spec.h);
    const StateSpaceModel filtered = series(hold, series(K, series(sample, FNs)));
    return subtract(target, filtered);
}

// ---------------------------------------------------------------------------
// Upsampling sweep

struct SweepPoint {
    int L;
    double gamma;  // certified closed-loop error norm at this hold rate
};

// Redesign the filter for each hold multiplicity L and record the certified
// error norm.  The tight default tolerance keeps the monotone trend visible
// down to 1e-6 between consecutive rows.
inline std::vector<SweepPoint> sweep_upsampling(const StateSpaceModel& G,
                                                const StateSpaceModel& F, double h, int m, int N,
                                                const std::vector<int>& Ls,
                                                double gamma_rel_tol = 5e-7) {
    std::vector<SweepPoint> out;
    out.reserve(Ls.size());
    for (int L : Ls) {
        DesignSpec spec;
        spec.h = h;
        spec.m = m;
        spec.N = N;
        spec.L = L;
        spec.gamma_rel_tol = gamma_rel_tol;
        spec.validate();
        const SynthesisResult res = gamma_iterate(build_error_plant(G, F, spec), spec);
        out.push_back({L, res.gamma_certified});
    }
    return out;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points) {
    out << "L,gamma\n";
    for (const SweepPoint& pt : points)
        out << pt.L << "," << detail::format_sig(pt.gamma) << "\n";
}

// ---------------------------------------------------------------------------
// Small-gain stability certificate

enum class CertificateVerdict { certified_stable, not_certified };

inline const char* to_string(CertificateVerdict v) {
    return v == CertificateVerdict::certified_stable ? "certified-stable" : "not-certified";
}

struct StabilityCertificate {
    double norm_GF;           // continuous loop gain ||G F||
    double norm_E;            // discrete error norm ||E_N|| for the supplied filter
    double margin;            // 1 - norm_GF - norm_E
    CertificateVerdict verdict;
    int N;                    // fast subdivision used for the error norm
    std::string note;         // reason when not certified
};

// Small-gain argument: replacing the analog loop G F by its digital
// implementation perturbs the loop gain by at most ||E_N||, so
// ||G F|| + ||E_N|| < 1 certifies the closed loop.  Requires the undelayed
// error system (m = 0); a delayed target would certify the wrong loop.
inline StabilityCertificate small_gain_certificate(const StateSpaceModel& G,
                                                   const StateSpaceModel& F,
                                                   const StateSpaceModel& K,
                                                   const DesignSpec& spec) {
    spec.validate();
    if (spec.m != 0)
        throw validation_error("small_gain_certificate: spec.m must be 0, got " +
                               std::to_string(spec.m) +
                               " (the bound covers only the undelayed error system)");
    detail::require_design_models(G, F);

    StabilityCertificate cert;
    cert.N = spec.N;
    cert.norm_GF = hinf_norm_continuous(series(G, F), 1e-8);
    cert.norm_E = hinf_norm_discrete(error_system_with_filter(G, F, spec, K), 1e-8,
                                     spec.unit_circle_tol);
    cert.margin = 1.0 - cert.norm_GF - cert.norm_E;
    if (cert.norm_GF >= 1.0) {
        cert.verdict = CertificateVerdict::not_certified;
        cert.note = "small-gain precondition ||G F|| < 1 fails (||G F|| = " +
                    std::to_string(cert.norm_GF) + ")";
    } else if (cert.margin > 0.0) {
        cert.verdict = CertificateVerdict::certified_stable;
    } else {
        cert.verdict = CertificateVerdict::not_certified;
        cert.note = "discretization error norm " + std::to_string(cert.norm_E) +
                    " consumes the loop-gain margin";
    }
    return cert;
}

}  // namespace sdisc
