#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "qthermo/experiments.hpp"

using namespace qthermo;
namespace ex = qthermo::experiments;
using io::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("qthermo_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

ex::ExperimentConfig small(const std::string& name) {
    ex::ExperimentConfig c = ex::config_from_json({{"t_end", 2.5},
                                                   {"dt", 0.01},
                                                   {"initial_states", {{"radii", {0.4, 0.99}}, {"n_angles", 5}}},
                                                   {"grid_points", 101},
                                                   {"witness", {{"grid_points", 11}, {"unital_schedules", 2}, {"unital_grid", 5}, {"unital_states", 20}}},
                                                   {"sigma_map", {{"times", {0.5, 2.5}}, {"n_bases", 8}}},
                                                   {"nonmarkov", {{"n_pairs", 8}, {"n_weights", 5}}}});
    c.out_dir = scratch(name);
    return c;
}

json positive_eigenvalue_generator() {
    return json::parse(R"({"model": "phase_covariant", "rates": {"gamma_plus": 0.2, "gamma_minus": 0.8,
        "gamma_z": {"segments": [{"t_start": 0, "t_end": 1, "poly_coeffs": [0]},
                                 {"t_start": 1, "t_end": null, "poly_coeffs": [-0.3]}]}}})");
}

} // namespace

TEST(Config, DefaultsAndOverrides) {
    const auto c = ex::config_from_json(json::object());
    EXPECT_EQ(c.n_angles, 15);
    EXPECT_EQ(c.radii, (std::vector<double>{0.1, 0.4, 0.7, 0.99}));
    EXPECT_EQ(c.dt, 1e-3);
    EXPECT_NO_THROW(c.validate());
    const auto d = ex::config_from_json({{"t_end", 2.0}, {"output", {{"dir", "/tmp/x"}}}});
    EXPECT_EQ(d.t_end, 2.0);
    EXPECT_EQ(d.out_dir, "/tmp/x");
}

TEST(Config, Validation) {
    auto kind = [](const json& j) {
        try {
            ex::config_from_json(j).validate();
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::InvalidArgument;
    };
    EXPECT_EQ(kind({{"initial_states", {{"n_angles", 14}}}}), ErrorKind::InvalidConfig);
    EXPECT_EQ(kind({{"dt", 0.3}}), ErrorKind::InvalidConfig);
    EXPECT_EQ(kind({{"initial_states", {{"radii", {1.5}}}}}), ErrorKind::InvalidConfig);
    EXPECT_EQ(kind({{"t_end", "long"}}), ErrorKind::InvalidConfig);
    EXPECT_EQ(kind({{"sigma_map", {{"n_bases", 0}}}}), ErrorKind::InvalidConfig);
    EXPECT_THROW(ex::run_experiment("plot", small("unknown")), Error);
}

TEST(Config, HashIgnoresOutputLocation) {
    auto a = small("hash_a");
    auto b = small("hash_b");
    b.jobs = 4;
    EXPECT_EQ(ex::config_hash(a), ex::config_hash(b));
    b.seed = 2;
    EXPECT_NE(ex::config_hash(a), ex::config_hash(b));
}

TEST(Fig1, PassesAndWritesData) {
    const auto c = small("fig1");
    const auto v = ex::run_fig1(c);
    EXPECT_TRUE(v.pass);
    EXPECT_EQ(v.stats["initial_states"], 10);
    EXPECT_GE(v.stats["min_sigma"].get<double>(), -1e-9);
    EXPECT_EQ(v.stats["per_state"].size(), 10u);
    const auto verdict = json::parse(slurp(c.out_dir / "fig1" / "verdict.json"));
    for (const char* key : {"experiment", "pass", "stats", "config_hash"}) EXPECT_TRUE(verdict.contains(key)) << key;
    EXPECT_EQ(verdict["config_hash"], ex::config_hash(c));
    const std::string csv = slurp(c.out_dir / "fig1" / "sigma_r0.99_n0.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,vx,vy,vz,sigma,dS,flow,region");
    EXPECT_EQ(csv.find('\r'), std::string::npos);
}

TEST(Fig1, DeterministicAcrossJobCounts) {
    auto a = small("det_a");
    auto b = small("det_b");
    b.jobs = 3;
    ex::run_fig1(a);
    ex::run_fig1(b);
    for (const auto& entry : std::filesystem::directory_iterator(a.out_dir / "fig1")) {
        if (entry.path().extension() != ".csv") continue;
        EXPECT_EQ(slurp(entry.path()), slurp(b.out_dir / "fig1" / entry.path().filename())) << entry.path();
    }
}

TEST(Fig1, PositiveEigenvalueFailsWithWitness) {
    auto c = small("fig1_fail");
    c.generator = positive_eigenvalue_generator();
    const auto v = ex::run_fig1(c);
    EXPECT_FALSE(v.pass);
    EXPECT_LT(v.stats["min_sigma"].get<double>(), -1e-9);
    ASSERT_TRUE(v.stats.contains("witness"));
    EXPECT_TRUE(v.stats["witness"]["found_negative"].get<bool>());
}

TEST(CpCheck, PassAndNegativeControl) {
    auto c = small("cp");
    const auto v = ex::run_cp_check(c);
    EXPECT_TRUE(v.pass);
    const std::string csv = slurp(c.out_dir / "cp-check" / "cp_conditions.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n', csv.find('\n') + 1)), "t,f1,f2\n0,0,0");
    c.generator = json::parse(R"({"model": "phase_covariant", "rates": {"gamma_plus": 0.2, "gamma_minus": 0.8, "gamma_z": -0.3}})");
    EXPECT_FALSE(ex::run_cp_check(c).pass);
    c.generator = {{"dim", 2}};
    EXPECT_THROW(ex::run_cp_check(c), Error);
}

TEST(Bounds, PassOnTheExample) {
    const auto v = ex::run_bounds(small("bounds"));
    EXPECT_TRUE(v.pass);
    EXPECT_GE(v.stats["min_x0"].get<double>(), -0.6 - 1e-9);
    EXPECT_LE(v.stats["max_x0"].get<double>(), 0.0);
    EXPECT_GE(v.stats["reach_margin_min"].get<double>(), 0.0);
}

TEST(Witness, ExampleAndNegativeRates) {
    auto c = small("witness");
    const auto v = ex::run_witness(c);
    EXPECT_TRUE(v.pass);
    EXPECT_EQ(v.stats["positive_eigenvalue_instants"], 0);
    EXPECT_EQ(v.stats["no_positive_eigenvalue_instants"], 11);
    EXPECT_EQ(v.stats["unital"]["agree"], v.stats["unital"]["instants"]);
    c.generator = json::parse(R"({"model": "phase_covariant", "rates": {"gamma_plus": -0.1, "gamma_minus": -0.4}})");
    const auto w = ex::run_witness(c);
    EXPECT_TRUE(w.pass);
    EXPECT_EQ(w.stats["witness_found"], 11);
    EXPECT_LT(w.stats["min_witness_sigma"].get<double>(), 0.0);
}

TEST(SigmaMap, ExampleAndQutrit) {
    const auto v = ex::run_sigma_map(small("sigma"));
    EXPECT_TRUE(v.pass);
    EXPECT_EQ(v.stats["cases"], 3);
    EXPECT_LT(v.stats["max_final_objective_non_pdiv"].get<double>(), -50.0);
}

TEST(NonMarkov, ExampleShowsBackflow) {
    auto c = small("nonmarkov");
    c.t_end = 5.0;
    const auto v = ex::run_nonmarkov(c);
    EXPECT_TRUE(v.pass);
    EXPECT_TRUE(v.stats["backflow"].get<bool>());
    c.generator = json::parse(R"({"model": "phase_covariant", "rates": {"gamma_plus": 0.2, "gamma_minus": 0.8, "gamma_z": 0.1}})");
    const auto w = ex::run_nonmarkov(c);
    EXPECT_TRUE(w.pass);
    EXPECT_FALSE(w.stats["backflow"].get<bool>());
}

TEST(Sweep, SkipsInapplicableExperiments) {
    auto c = small("sweep");
    c.generator = json::parse(R"({"dim": 2, "hamiltonian_kind": "none",
        "jump_ops": [{"operator": [[0, 1], [0, 0]], "rate": 0.2}, {"operator": [[0, 0], [1, 0]], "rate": 0.8}]})");
    const auto v = ex::run_sweep(c);
    EXPECT_TRUE(v.pass);
    int skipped = 0;
    for (const auto& p : v.stats["experiments"]) skipped += p.value("skipped", false);
    EXPECT_EQ(skipped, 2);
}

TEST(Pool, RethrowsAndCoversAllIndices) {
    std::vector<int> hit(50, 0);
    ex::parallel_for(hit.size(), 4, [&](std::size_t k) { hit[k] = static_cast<int>(k); });
    for (std::size_t k = 0; k < hit.size(); ++k) EXPECT_EQ(hit[k], static_cast<int>(k));
    EXPECT_THROW(ex::parallel_for(10, 3, [](std::size_t k) {
                     if (k == 7) throw Error(ErrorKind::InvalidArgument, "boom");
                 }),
                 Error);
}
