// experiments.hpp — named experiments over a JSON config: CSV data files plus a JSON verdict
//
// Config document (every key optional):
//   {"experiment": "fig1",
//    "generator": <generator document, see io.hpp>,          default {"model": "counterexample"}
//    "t_end": 5, "dt": 0.001, "seed": 1, "grid_points": 500,
//    "initial_states": {"radii": [0.1, 0.4, 0.7, 0.99], "n_angles": 15},
//    "output": {"dir": "...", "csv_stride": 10},
//    "bounds": {"x0_range": [-0.6, 0], "p0_limits": [[1.0, 0.64], [1.5, 0.5329]], "reach_states": 100},
//    "witness": {"grid_points": 51, "unital_schedules": 20, "unital_grid": 21, "unital_states": 200},
//    "sigma_map": {"times": [...], "n_bases": 32, "eta": 1e-4, "include_qutrit": true},
//    "nonmarkov": {"n_pairs": 32, "n_weights": 9}}

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "qthermo/core.hpp"
#include "qthermo/entropy_production.hpp"
#include "qthermo/generator.hpp"
#include "qthermo/io.hpp"
#include "qthermo/markovianity.hpp"
#include "qthermo/phase_covariant.hpp"
#include "qthermo/propagation.hpp"

namespace qthermo::experiments {

using io::json;

struct ExperimentConfig {
    std::string experiment = "fig1";
    json generator = {{"model", "counterexample"}};
    double t_end = 5.0;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    int grid_points = 500;

    std::vector<double> radii{0.1, 0.4, 0.7, 0.99};
    int n_angles = 15;

    std::filesystem::path out_dir = "qthermo_out";
    int csv_stride = 10;
    int jobs = 1;

    double x0_min = -0.6;
    double x0_max = 0.0;
    std::vector<std::pair<double, double>> p0_limits{{1.0, 0.64}, {1.5, 0.5329}};   // (after t, strict upper bound)
    int reach_states = 100;

    int witness_grid = 51;
    int unital_schedules = 20;
    int unital_grid = 21;
    int unital_states = 200;

    std::vector<double> probe_times{0.5, 1.0, 1.5, 1.8, 2.0, 2.5, 3.0, 4.0, 5.0};
    int n_bases = 32;
    double eta = 1e-4;
    bool include_qutrit = true;

    int n_pairs = 32;
    int n_weights = 9;

    void validate() const {
        if (n_angles < 1 || n_angles % 2 == 0) throw Error(ErrorKind::InvalidConfig, "n_angles must be odd");
        for (double r : radii)
            if (!(r >= 0.0 && r <= 1.0)) throw Error(ErrorKind::InvalidConfig, "radius outside [0,1]");
        try {
            step_count(t_end, dt);
        } catch (const Error& e) {
            throw Error(ErrorKind::InvalidConfig, e.what());
        }
        if (grid_points < 2 || witness_grid < 2 || unital_grid < 1) throw Error(ErrorKind::InvalidConfig, "grid too small");
        if (csv_stride < 1 || jobs < 1) throw Error(ErrorKind::InvalidConfig, "csv_stride and jobs must be >= 1");
        if (n_pairs < 1 || n_weights < 1 || n_bases < 1 || reach_states < 0 || unital_schedules < 0 || unital_states < 1)
            throw Error(ErrorKind::InvalidConfig, "sample counts out of range");
        if (!(eta > 0.0)) throw Error(ErrorKind::InvalidConfig, "eta must be positive");
    }
};

inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    try {
        c.experiment = j.value("experiment", c.experiment);
        if (j.contains("generator")) c.generator = j.at("generator");
        c.t_end = j.value("t_end", c.t_end);
        c.dt = j.value("dt", c.dt);
        c.seed = j.value("seed", c.seed);
        c.grid_points = j.value("grid_points", c.grid_points);
        if (j.contains("initial_states")) {
            const auto& s = j.at("initial_states");
            c.radii = s.value("radii", c.radii);
            c.n_angles = s.value("n_angles", c.n_angles);
        }
        if (j.contains("output")) {
            const auto& o = j.at("output");
            if (o.contains("dir")) c.out_dir = o.at("dir").get<std::string>();
            c.csv_stride = o.value("csv_stride", c.csv_stride);
        }
        if (j.contains("bounds")) {
            const auto& b = j.at("bounds");
            if (b.contains("x0_range")) {
                const auto r = b.at("x0_range").get<std::vector<double>>();
                if (r.size() != 2) throw Error(ErrorKind::InvalidConfig, "x0_range needs two values");
                c.x0_min = r[0];
                c.x0_max = r[1];
            }
            if (b.contains("p0_limits")) c.p0_limits = b.at("p0_limits").get<std::vector<std::pair<double, double>>>();
            c.reach_states = b.value("reach_states", c.reach_states);
        }
        if (j.contains("witness")) {
            const auto& w = j.at("witness");
            c.witness_grid = w.value("grid_points", c.witness_grid);
            c.unital_schedules = w.value("unital_schedules", c.unital_schedules);
            c.unital_grid = w.value("unital_grid", c.unital_grid);
            c.unital_states = w.value("unital_states", c.unital_states);
        }
        if (j.contains("sigma_map")) {
            const auto& s = j.at("sigma_map");
            c.probe_times = s.value("times", c.probe_times);
            c.n_bases = s.value("n_bases", c.n_bases);
            c.eta = s.value("eta", c.eta);
            c.include_qutrit = s.value("include_qutrit", c.include_qutrit);
        }
        if (j.contains("nonmarkov")) {
            const auto& n = j.at("nonmarkov");
            c.n_pairs = n.value("n_pairs", c.n_pairs);
            c.n_weights = n.value("n_weights", c.n_weights);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, e.what());
    }
    return c;
}

/// Everything that affects results; output location and job count are left out.
inline json config_to_json(const ExperimentConfig& c) {
    return {{"experiment", c.experiment},
            {"generator", c.generator},
            {"t_end", c.t_end},
            {"dt", c.dt},
            {"seed", c.seed},
            {"grid_points", c.grid_points},
            {"initial_states", {{"radii", c.radii}, {"n_angles", c.n_angles}}},
            {"output", {{"csv_stride", c.csv_stride}}},
            {"bounds", {{"x0_range", {c.x0_min, c.x0_max}}, {"p0_limits", c.p0_limits}, {"reach_states", c.reach_states}}},
            {"witness",
             {{"grid_points", c.witness_grid},
              {"unital_schedules", c.unital_schedules},
              {"unital_grid", c.unital_grid},
              {"unital_states", c.unital_states}}},
            {"sigma_map",
             {{"times", c.probe_times}, {"n_bases", c.n_bases}, {"eta", c.eta}, {"include_qutrit", c.include_qutrit}}},
            {"nonmarkov", {{"n_pairs", c.n_pairs}, {"n_weights", c.n_weights}}}};
}

inline std::string config_hash(const ExperimentConfig& c) { return io::config_hash(config_to_json(c)); }

struct Verdict {
    std::string experiment;
    bool pass = false;
    json stats = json::object();
    std::string config_hash;
    std::vector<std::string> files;

    json to_json() const {
        return {{"experiment", experiment}, {"pass", pass}, {"stats", stats}, {"config_hash", config_hash}, {"files", files}};
    }
};

// ---------------------------------------------------------------------------------------------
// Worker pool: f(k) for k in [0, n) on `jobs` threads; the first failing index rethrows.

template <typename F>
void parallel_for(std::size_t n, int jobs, F&& f) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
    if (workers <= 1) {
        for (std::size_t k = 0; k < n; ++k) f(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < n; k = next++) {
                try {
                    f(k);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

namespace detail {

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = a + (b - a) * k / (n - 1);
    return out;
}

inline std::vector<double> uniform_grid(double t_end, double dt) {
    const long n = step_count(t_end, dt);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n + 1));
    for (long k = 0; k <= n; ++k) out.push_back(static_cast<double>(k) * dt);
    return out;
}

inline std::filesystem::path experiment_dir(const ExperimentConfig& c, const std::string& name) {
    auto dir = c.out_dir / name;
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::ofstream open_csv(const std::filesystem::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw Error(ErrorKind::InvalidConfig, "cannot write " + p.string());
    return os;
}

inline PhaseCovariantRates require_phase_covariant(const ExperimentConfig& c, const char* what) {
    auto rates = io::phase_covariant_from_json(c.generator);
    if (!rates) throw Error(ErrorKind::InvalidConfig, std::string(what) + " needs a phase-covariant generator");
    return *rates;
}

inline void write_verdict(const std::filesystem::path& dir, Verdict& v) {
    const auto p = dir / "verdict.json";
    v.files.push_back(p.string());
    std::ofstream os(p, std::ios::binary);
    os << v.to_json().dump(2) << '\n';
}

inline json witness_json(const WitnessResult& w) {
    json j = {{"found_negative", w.found_negative}, {"sigma", w.sigma}, {"epsilon", w.epsilon},
              {"eigenvalue", {w.eigenvalue.real(), w.eigenvalue.imag()}}};
    if (w.state) j["state"] = io::matrix_to_json(w.state->matrix());
    return j;
}

} // namespace detail

// ---------------------------------------------------------------------------------------------
// fig1: entropy production rate along trajectories from a grid of initial Bloch vectors

inline constexpr double fig1_sigma_floor = -1e-9;

inline Verdict run_fig1(const ExperimentConfig& c) {
    c.validate();
    const GeneratorSpec gen = io::generator_from_json(c.generator);
    if (gen.dim() != 2) throw Error(ErrorKind::InvalidConfig, "fig1 needs a qubit generator");
    const auto dir = detail::experiment_dir(c, "fig1");
    const auto tgrid = detail::uniform_grid(c.t_end, c.dt);
    const auto ifps = fixed_points(gen, tgrid);

    struct Run {
        double radius, theta;
        int n;
        Trajectory traj;
        double min_sigma = std::numeric_limits<double>::infinity();
        double max_sigma = -std::numeric_limits<double>::infinity();
        double t_min = 0.0;
    };
    std::vector<Run> runs;
    for (double r : c.radii)
        for (int n = 0; n < c.n_angles; ++n) runs.push_back({r, 2.0 * std::numbers::pi * n / c.n_angles, n, {}});

    parallel_for(runs.size(), c.jobs, [&](std::size_t k) {
        Run& run = runs[k];
        const BlochVector v0{run.radius * std::cos(run.theta), 0.0, run.radius * std::sin(run.theta)};
        run.traj = integrate(gen, bloch_to_state(v0), c.t_end, c.dt, true);
        annotate(run.traj, gen, ifps);
        for (const auto& s : run.traj.epr) {
            if (s.sigma < run.min_sigma) {
                run.min_sigma = s.sigma;
                run.t_min = s.t;
            }
            run.max_sigma = std::max(run.max_sigma, s.sigma);
        }
    });

    Verdict v{"fig1", true, json::object(), config_hash(c), {}};
    json per_state = json::array();
    json exits = json::array();
    const Run* worst = &runs.front();
    double max_sigma = -std::numeric_limits<double>::infinity();
    for (const Run& run : runs) {
        const auto name = "sigma_r" + io::format_double(run.radius) + "_n" + std::to_string(run.n) + ".csv";
        auto os = detail::open_csv(dir / name);
        io::CsvWriter w(os);
        w.header({"t", "vx", "vy", "vz", "sigma", "dS", "flow", "region"});
        for (std::size_t k = 0; k < run.traj.epr.size(); k += static_cast<std::size_t>(c.csv_stride)) {
            const auto& s = run.traj.epr[k];
            const BlochVector b = state_to_bloch(run.traj.states[k]);
            w.write_row({io::format_double(s.t), io::format_double(b.x), io::format_double(b.y), io::format_double(b.z),
                         io::format_double(s.sigma), io::format_double(s.dS), io::format_double(s.flow),
                         s.region ? to_string(*s.region) : ""});
        }
        v.files.push_back((dir / name).string());
        per_state.push_back({{"radius", run.radius}, {"n", run.n}, {"theta", run.theta},
                             {"min_sigma", run.min_sigma}, {"t_at_min", run.t_min}});
        if (run.traj.left_state_space_at) exits.push_back({{"radius", run.radius}, {"n", run.n}, {"t", *run.traj.left_state_space_at}});
        if (run.min_sigma < worst->min_sigma) worst = &run;
        max_sigma = std::max(max_sigma, run.max_sigma);
    }
    v.pass = worst->min_sigma >= fig1_sigma_floor && exits.empty();
    v.stats = {{"min_sigma", worst->min_sigma},
               {"max_sigma", max_sigma},
               {"argmin", {{"radius", worst->radius}, {"n", worst->n}, {"t", worst->t_min}}},
               {"threshold", fig1_sigma_floor},
               {"initial_states", runs.size()},
               {"per_state", per_state},
               {"left_state_space", exits}};
    if (!v.pass) {
        try {
            v.stats["witness"] = detail::witness_json(eigensign_witness(gen, worst->t_min));
            v.stats["witness"]["t"] = worst->t_min;
        } catch (const Error& e) {
            v.stats["witness"] = {{"error", to_string(e.kind())}, {"t", worst->t_min}};
        }
    }
    detail::write_verdict(dir, v);
    return v;
}

// ---------------------------------------------------------------------------------------------
// cp-check: the two complete-positivity conditions on a grid

inline constexpr double cp_tolerance = 1e-12;

inline Verdict run_cp_check(const ExperimentConfig& c) {
    c.validate();
    const auto rates = detail::require_phase_covariant(c, "cp-check");
    const auto dir = detail::experiment_dir(c, "cp-check");
    Verdict v{"cp-check", true, json::object(), config_hash(c), {}};
    auto os = detail::open_csv(dir / "cp_conditions.csv");
    io::CsvWriter w(os);
    w.header({"t", "f1", "f2"});
    double max_f1 = -std::numeric_limits<double>::infinity(), max_f2 = max_f1;
    double min_f1 = std::numeric_limits<double>::infinity(), min_f2 = min_f1;
    for (double t : detail::linspace(0.0, c.t_end, c.grid_points)) {
        const CpConditions cp = cp_conditions(rates, t);
        w.row({t, cp.f1, cp.f2});
        max_f1 = std::max(max_f1, cp.f1);
        max_f2 = std::max(max_f2, cp.f2);
        min_f1 = std::min(min_f1, cp.f1);
        min_f2 = std::min(min_f2, cp.f2);
    }
    v.files.push_back((dir / "cp_conditions.csv").string());
    v.pass = max_f1 <= cp_tolerance && max_f2 <= cp_tolerance;
    v.stats = {{"max_f1", max_f1}, {"max_f2", max_f2}, {"min_f1", min_f1}, {"min_f2", min_f2},
               {"threshold", cp_tolerance}, {"grid_points", c.grid_points}};
    detail::write_verdict(dir, v);
    return v;
}

// ---------------------------------------------------------------------------------------------
// bounds: x0(t), P0(t) and the simulated reach of random initial states

inline constexpr double bounds_tolerance = 1e-9;

inline Verdict run_bounds(const ExperimentConfig& c) {
    c.validate();
    const auto rates = detail::require_phase_covariant(c, "bounds");
    const auto dir = detail::experiment_dir(c, "bounds");
    Verdict v{"bounds", true, json::object(), config_hash(c), {}};

    std::mt19937_64 rng(c.seed);
    std::vector<BlochVector> starts;
    for (int k = 0; k < c.reach_states; ++k) starts.push_back(random_bloch(rng));

    auto os = detail::open_csv(dir / "bounds.csv");
    io::CsvWriter w(os);
    w.header({"t", "x0", "P0", "max_reach_sq"});
    double x0_min = std::numeric_limits<double>::infinity(), x0_max = -x0_min;
    json p0_max = json::array();
    std::vector<double> p0_peak(c.p0_limits.size(), -std::numeric_limits<double>::infinity());
    double worst_reach_margin = std::numeric_limits<double>::infinity();
    int degenerate = 0;
    bool x0_ok = true;
    for (double t : detail::linspace(0.0, c.t_end, c.grid_points)) {
        ReachBounds b;
        try {
            b = appendix_c_bounds(rates, t);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::DegenerateDenominator) throw;
            ++degenerate;
            continue;
        }
        const DecayFunctions f = decay_functions(rates, t);
        double reach = 0.0;
        for (const auto& s : starts) {
            const double r = propagate_bloch(f, s).norm();
            reach = std::max(reach, r * r);
            worst_reach_margin = std::min(worst_reach_margin, std::sqrt(std::max(b.p0, 0.0)) + bounds_tolerance - r);
        }
        w.row({t, b.x0, b.p0, reach});
        if (t > 0.0) {
            x0_min = std::min(x0_min, b.x0);
            x0_max = std::max(x0_max, b.x0);
            if (b.x0 < c.x0_min - bounds_tolerance || b.x0 > c.x0_max + bounds_tolerance) x0_ok = false;
        }
        for (std::size_t k = 0; k < c.p0_limits.size(); ++k)
            if (t > c.p0_limits[k].first) p0_peak[k] = std::max(p0_peak[k], b.p0);
    }
    v.files.push_back((dir / "bounds.csv").string());
    bool p0_ok = true;
    for (std::size_t k = 0; k < c.p0_limits.size(); ++k) {
        const bool ok = p0_peak[k] < c.p0_limits[k].second;
        p0_ok = p0_ok && ok;
        p0_max.push_back({{"after", c.p0_limits[k].first}, {"limit", c.p0_limits[k].second}, {"max_P0", p0_peak[k]}, {"pass", ok}});
    }
    const bool reach_ok = c.reach_states == 0 || worst_reach_margin >= 0.0;
    v.pass = x0_ok && p0_ok && reach_ok;
    v.stats = {{"min_x0", x0_min}, {"max_x0", x0_max}, {"x0_pass", x0_ok}, {"p0", p0_max},
               {"reach_margin_min", c.reach_states ? json(worst_reach_margin) : json(nullptr)}, {"reach_pass", reach_ok},
               {"degenerate_instants", degenerate}};
    detail::write_verdict(dir, v);
    return v;
}

// ---------------------------------------------------------------------------------------------
// witness: the eigenvalue-sign theorem on the configured generator and on random unital models

struct UnitalInstant {
    double t = 0.0;
    bool pdiv = false;
    bool eigen_negative = false;
    bool sigma_nonnegative = false;
    double min_sigma = 0.0;
    bool agree() const { return pdiv == eigen_negative && eigen_negative == sigma_nonnegative; }
};

namespace tol {
inline constexpr double unital_sigma = 1e-10;
} // namespace tol

/// Phase-covariant rates with gamma_+ = gamma_- = g(t); g and gamma_z are piecewise linear with
/// four pieces on [0, t_end] and knot values drawn so that every P-divisibility regime occurs.
template <typename Rng>
PhaseCovariantRates random_unital_rates(double t_end, Rng& rng) {
    std::uniform_real_distribution<double> ug(-0.3, 0.7), uz(-0.3, 0.3), uw(-1.0, 1.0);
    auto piecewise = [&](auto& dist) {
        constexpr int pieces = 4;
        std::vector<double> knots;
        for (int k = 0; k <= pieces; ++k) knots.push_back(dist(rng));
        std::vector<Segment> segs;
        for (int k = 0; k < pieces; ++k) {
            const double a = t_end * k / pieces, b = t_end * (k + 1) / pieces;
            const double slope = (knots[k + 1] - knots[k]) / (b - a);
            Segment s;
            s.t_start = a;
            s.t_end = k + 1 == pieces ? std::numeric_limits<double>::infinity() : b;
            s.coeffs = {knots[k] - slope * a, slope};
            segs.push_back(std::move(s));
        }
        return RateSchedule(std::move(segs));
    };
    PhaseCovariantRates r;
    r.gamma_plus = piecewise(ug);
    r.gamma_minus = r.gamma_plus;
    r.gamma_z = piecewise(uz);
    r.omega_r = RateSchedule::constant(uw(rng));
    return r;
}

/// The three verdicts at each instant t_k = k t_end / n_grid, k = 1..n_grid. The sampled states
/// are the six axis states at radius 1/2 and n_states draws from the ball of radius 0.95.
inline std::vector<UnitalInstant> unital_equivalence(const PhaseCovariantRates& rates, double t_end, int n_grid,
                                                     int n_states, std::uint64_t seed) {
    const GeneratorSpec gen = make_generator(rates);
    std::mt19937_64 rng(seed);
    std::vector<DensityMatrix> states;
    for (int a = 0; a < 3; ++a)
        for (double s : {-0.5, 0.5}) {
            Vec3 v = Vec3::Zero();
            v(a) = s;
            states.push_back(bloch_to_state(BlochVector::from(v)));
        }
    for (int k = 0; k < n_states; ++k) states.push_back(bloch_to_state(random_bloch(rng, 0.95)));

    std::vector<UnitalInstant> out;
    for (int k = 1; k <= n_grid; ++k) {
        UnitalInstant u;
        u.t = t_end * k / n_grid;
        u.pdiv = pdiv_conditions(rates, u.t).pdiv();
        const SpectralDecomposition dec = spectral_decompose(gen, u.t);
        u.eigen_negative = true;
        for (const Complex& lam : dec.eigenvalues)
            if (lam.real() > qthermo::tol::null_space * dec.spectral_scale) u.eigen_negative = false;
        const DensityMatrix& ifp = dec.state();
        u.min_sigma = std::numeric_limits<double>::infinity();
        for (const auto& rho : states) u.min_sigma = std::min(u.min_sigma, epr_general(gen, u.t, rho, ifp));
        u.sigma_nonnegative = u.min_sigma >= -tol::unital_sigma;
        out.push_back(u);
    }
    return out;
}

inline Verdict run_witness(const ExperimentConfig& c) {
    c.validate();
    const GeneratorSpec gen = io::generator_from_json(c.generator);
    const auto dir = detail::experiment_dir(c, "witness");
    Verdict v{"witness", true, json::object(), config_hash(c), {}};

    auto os = detail::open_csv(dir / "witness.csv");
    io::CsvWriter w(os);
    w.header({"t", "max_re_eigenvalue", "outcome", "sigma"});
    int positive = 0, found = 0, none = 0, skipped = 0;
    double min_sigma = std::numeric_limits<double>::infinity();
    json first_witness = nullptr;
    for (double t : detail::linspace(0.0, c.t_end, c.witness_grid)) {
        double max_re = -std::numeric_limits<double>::infinity();
        std::string outcome;
        double sigma = 0.0;
        try {
            const SpectralDecomposition dec = spectral_decompose(gen, t);
            for (const Complex& lam : dec.eigenvalues)
                if (std::abs(lam) > qthermo::tol::null_space * dec.spectral_scale) max_re = std::max(max_re, lam.real());
            const WitnessResult r = eigensign_witness(gen, t);
            ++positive;
            if (r.found_negative) {
                ++found;
                sigma = r.sigma;
                min_sigma = std::min(min_sigma, r.sigma);
                outcome = "witness";
                if (first_witness.is_null()) {
                    first_witness = detail::witness_json(r);
                    first_witness["t"] = t;
                }
            } else {
                outcome = "not_found";
            }
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::NoPositiveEigenvalue) {
                ++none;
                outcome = to_string(e.kind());
            } else {
                ++skipped;
                outcome = std::string("skipped:") + to_string(e.kind());
            }
        }
        w.write_row({io::format_double(t), io::format_double(max_re), outcome, io::format_double(sigma)});
    }
    v.files.push_back((dir / "witness.csv").string());

    std::vector<std::vector<UnitalInstant>> sweeps(static_cast<std::size_t>(c.unital_schedules));
    parallel_for(sweeps.size(), c.jobs, [&](std::size_t k) {
        std::mt19937_64 rng(c.seed + 1000003ULL * (k + 1));
        const auto rates = random_unital_rates(c.t_end, rng);
        sweeps[k] = unital_equivalence(rates, c.t_end, c.unital_grid, c.unital_states, c.seed + k);
    });
    auto us = detail::open_csv(dir / "unital_sweep.csv");
    io::CsvWriter uw(us);
    uw.header({"schedule", "t", "pdiv", "eigen_negative", "sigma_nonnegative", "min_sigma"});
    int instants = 0, agree = 0, pdiv_count = 0;
    for (std::size_t k = 0; k < sweeps.size(); ++k)
        for (const auto& u : sweeps[k]) {
            ++instants;
            agree += u.agree();
            pdiv_count += u.pdiv;
            uw.row({static_cast<double>(k), u.t, double(u.pdiv), double(u.eigen_negative), double(u.sigma_nonnegative), u.min_sigma});
        }
    v.files.push_back((dir / "unital_sweep.csv").string());

    const bool theorem_ok = found == positive;
    const bool unital_ok = agree == instants;
    v.pass = theorem_ok && unital_ok;
    v.stats = {{"instants", c.witness_grid},
               {"positive_eigenvalue_instants", positive},
               {"witness_found", found},
               {"no_positive_eigenvalue_instants", none},
               {"skipped_instants", skipped},
               {"min_witness_sigma", found ? json(min_sigma) : json(nullptr)},
               {"first_witness", first_witness},
               {"unital", {{"schedules", c.unital_schedules}, {"instants", instants}, {"agree", agree},
                           {"pdiv_instants", pdiv_count}, {"pass", unital_ok}}}};
    detail::write_verdict(dir, v);
    return v;
}

// ---------------------------------------------------------------------------------------------
// sigma-map: infimum of the entropy production functional over inputs at fixed times

/// Qutrit with classical jumps |j><i| at unit rate except the 0 -> 1 channel at rate -0.05.
inline GeneratorSpec engineered_qutrit() {
    std::vector<Channel> ch;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            if (i == j) continue;
            Matrix l = Matrix::Zero(3, 3);
            l(j, i) = 1.0;
            ch.push_back({l, RateSchedule::constant(i == 0 && j == 1 ? -0.05 : 1.0)});
        }
    return GeneratorSpec(3, {}, std::move(ch));
}

struct SigmaMapCase {
    std::string name;
    double t = 0.0;
    bool pdiv_reference = false;
    MapEprVerdict probe;
    bool consistent() const {
        return pdiv_reference ? (probe.pdiv_consistent && !probe.divergent) : (probe.divergent && probe.eta_confirmed);
    }
};

inline Verdict run_sigma_map(const ExperimentConfig& c) {
    c.validate();
    const GeneratorSpec gen = io::generator_from_json(c.generator);
    const auto rates = io::phase_covariant_from_json(c.generator);
    const auto dir = detail::experiment_dir(c, "sigma-map");
    Verdict v{"sigma-map", true, json::object(), config_hash(c), {}};

    std::vector<SigmaMapCase> cases;
    for (double t : c.probe_times) cases.push_back({"generator", t, false, {}});
    std::optional<GeneratorSpec> qutrit;
    if (c.include_qutrit) {
        qutrit = engineered_qutrit();
        cases.push_back({"qutrit", 1.0, false, {}});
    }
    const auto schedule = default_log_eps_schedule();
    parallel_for(cases.size(), c.jobs, [&](std::size_t k) {
        SigmaMapCase& sc = cases[k];
        const GeneratorSpec& g = sc.name == "qutrit" ? *qutrit : gen;
        sc.probe = sigma_map_probe(g, sc.t, c.n_bases, schedule, c.eta, c.seed);
        sc.pdiv_reference = (rates && sc.name == "generator") ? pdiv_conditions(*rates, sc.t).pdiv() : sc.probe.scan.pdiv;
    });

    auto os = detail::open_csv(dir / "sigma_map.csv");
    io::CsvWriter w(os);
    w.header({"case", "t", "pdiv_reference", "kossakowski_worst", "divergent", "infimum", "consistent"});
    auto ts = detail::open_csv(dir / "sigma_map_trace.csv");
    io::CsvWriter tw(ts);
    tw.header({"case", "t", "log_eps", "objective"});
    int consistent = 0;
    double min_pdiv_infimum = 0.0, max_final_nonpdiv = -std::numeric_limits<double>::infinity();
    for (const auto& sc : cases) {
        consistent += sc.consistent();
        w.write_row({sc.name, io::format_double(sc.t), sc.pdiv_reference ? "1" : "0", io::format_double(sc.probe.scan.worst_value),
                     sc.probe.divergent ? "1" : "0", io::format_double(sc.probe.infimum), sc.consistent() ? "1" : "0"});
        for (const auto& [le, val] : sc.probe.objective_trace)
            tw.write_row({sc.name, io::format_double(sc.t), io::format_double(le), io::format_double(val)});
        if (sc.pdiv_reference) min_pdiv_infimum = std::min(min_pdiv_infimum, sc.probe.infimum);
        else max_final_nonpdiv = std::max(max_final_nonpdiv, sc.probe.objective_trace.back().second);
    }
    v.files.push_back((dir / "sigma_map.csv").string());
    v.files.push_back((dir / "sigma_map_trace.csv").string());
    v.pass = consistent == static_cast<int>(cases.size());
    v.stats = {{"cases", cases.size()},
               {"consistent", consistent},
               {"min_infimum_pdiv", min_pdiv_infimum},
               {"max_final_objective_non_pdiv",
                std::isfinite(max_final_nonpdiv) ? json(max_final_nonpdiv) : json(nullptr)}};
    detail::write_verdict(dir, v);
    return v;
}

// ---------------------------------------------------------------------------------------------
// nonmarkov: sampled trace-distance backflow

inline constexpr double backflow_threshold = 1e-9;

inline Verdict run_nonmarkov(const ExperimentConfig& c) {
    c.validate();
    const auto rates = io::phase_covariant_from_json(c.generator);
    const GeneratorSpec gen = io::generator_from_json(c.generator);
    const auto dir = detail::experiment_dir(c, "nonmarkov");
    Verdict v{"nonmarkov", true, json::object(), config_hash(c), {}};

    NonMarkovResult res;
    bool pdiv_everywhere = true;
    const auto tgrid = detail::uniform_grid(c.t_end, c.dt);
    if (rates) {
        res = nonmarkov_measure(PhaseCovariantDynamics(*rates, c.t_end, c.dt), c.n_pairs, c.n_weights, c.seed);
        for (double t : tgrid) pdiv_everywhere = pdiv_everywhere && pdiv_conditions(*rates, t).pdiv();
    } else {
        res = nonmarkov_measure(GeneratorDynamics(gen, c.t_end, c.dt), c.n_pairs, c.n_weights, c.seed);
        for (double t : detail::linspace(0.0, c.t_end, c.witness_grid))
            pdiv_everywhere = pdiv_everywhere && kossakowski_scan(gen, t, c.n_bases, c.seed).pdiv;
    }

    auto os = detail::open_csv(dir / "nonmarkov_flow.csv");
    io::CsvWriter w(os);
    w.header({"t", "distance", "derivative"});
    for (std::size_t k = 0; k < res.best_flow.size(); k += static_cast<std::size_t>(c.csv_stride))
        w.row({res.best_flow[k].t, res.best_flow[k].distance, res.best_flow[k].derivative});
    auto rs = detail::open_csv(dir / "nonmarkov_running.csv");
    io::CsvWriter rw(rs);
    rw.header({"pairs", "value"});
    for (std::size_t k = 0; k < res.running_max.size(); ++k) rw.row({static_cast<double>(k + 1), res.running_max[k]});
    v.files.push_back((dir / "nonmarkov_flow.csv").string());
    v.files.push_back((dir / "nonmarkov_running.csv").string());

    const bool backflow = res.value > backflow_threshold;
    v.pass = backflow != pdiv_everywhere;
    v.stats = {{"value", res.value},
               {"backflow", backflow},
               {"pdiv_everywhere", pdiv_everywhere},
               {"best_pair", res.best_pair},
               {"best_p1", res.best_p1},
               {"threshold", backflow_threshold}};
    detail::write_verdict(dir, v);
    return v;
}

// ---------------------------------------------------------------------------------------------

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"fig1", "cp-check", "bounds", "witness", "sigma-map", "nonmarkov"};
    return names;
}

inline Verdict run_experiment(const std::string& name, const ExperimentConfig& c);

/// All experiments applicable to the configured generator; passes when every one passes.
/// cp-check and bounds need the phase-covariant model, fig1 needs a qubit.
inline Verdict run_sweep(const ExperimentConfig& c) {
    c.validate();
    const auto dir = detail::experiment_dir(c, "sweep");
    Verdict v{"sweep", true, json::object(), config_hash(c), {}};
    const bool phase_covariant = io::phase_covariant_from_json(c.generator).has_value();
    const bool qubit = io::generator_from_json(c.generator).dim() == 2;
    json parts = json::array();
    for (const auto& name : experiment_names()) {
        if ((!phase_covariant && (name == "cp-check" || name == "bounds")) || (!qubit && name == "fig1")) {
            parts.push_back({{"experiment", name}, {"skipped", true}});
            continue;
        }
        const Verdict part = run_experiment(name, c);
        v.pass = v.pass && part.pass;
        parts.push_back({{"experiment", part.experiment}, {"pass", part.pass}, {"config_hash", part.config_hash}});
        v.files.insert(v.files.end(), part.files.begin(), part.files.end());
    }
    v.stats = {{"experiments", parts}};
    detail::write_verdict(dir, v);
    return v;
}

inline Verdict run_experiment(const std::string& name, const ExperimentConfig& c) {
    if (name == "fig1") return run_fig1(c);
    if (name == "cp-check") return run_cp_check(c);
    if (name == "bounds") return run_bounds(c);
    if (name == "witness") return run_witness(c);
    if (name == "sigma-map") return run_sigma_map(c);
    if (name == "nonmarkov") return run_nonmarkov(c);
    if (name == "sweep") return run_sweep(c);
    throw Error(ErrorKind::InvalidConfig, "unknown experiment " + name);
}

} // namespace qthermo::experiments
