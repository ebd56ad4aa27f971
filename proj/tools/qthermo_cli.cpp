// qthermo: run a named experiment and print its verdict
//   qthermo <fig1|cp-check|bounds|witness|sigma-map|nonmarkov|sweep> [--config FILE] [--t-end T]
//           [--dt H] [--out DIR] [--seed S] [--jobs N]
// exit status: 0 PASS, 2 FAIL, 1 error

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qthermo/experiments.hpp"

namespace ex = qthermo::experiments;

int main(int argc, char** argv) {
    CLI::App app{"Entropy production and divisibility experiments for open quantum systems"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<double> t_end, dt;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    int jobs = 1;

    std::vector<CLI::App*> subs;
    for (std::string name : {"fig1", "cp-check", "bounds", "witness", "sigma-map", "nonmarkov", "sweep"}) {
        auto* sub = app.add_subcommand(name, name == "sweep" ? "run every experiment" : "run the " + name + " experiment");
        sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--t-end", t_end, "final time");
        sub->add_option("--dt", dt, "time step");
        sub->add_option("--out", out, "output root (default $QTHERMO_OUT_DIR, then ./qthermo_out)");
        sub->add_option("--seed", seed, "random seed");
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
        subs.push_back(sub);
    }
    CLI11_PARSE(app, argc, argv);

    try {
        qthermo::io::json doc = qthermo::io::json::object();
        if (!config_path.empty()) {
            std::ifstream is(config_path);
            try {
                doc = qthermo::io::json::parse(is);
            } catch (const qthermo::io::json::exception& e) {
                throw qthermo::Error(qthermo::ErrorKind::InvalidConfig, e.what());
            }
        }
        ex::ExperimentConfig cfg = ex::config_from_json(doc);
        if (!doc.contains("output") || !doc.at("output").contains("dir"))
            if (const char* env = std::getenv("QTHERMO_OUT_DIR"); env && *env) cfg.out_dir = env;
        if (out) cfg.out_dir = *out;
        if (t_end) cfg.t_end = *t_end;
        if (dt) cfg.dt = *dt;
        if (seed) cfg.seed = *seed;
        cfg.jobs = jobs;

        const std::string name = app.get_subcommands().front()->get_name();
        cfg.experiment = name;
        const ex::Verdict v = ex::run_experiment(name, cfg);
        std::cout << v.to_json().dump(2) << '\n';
        std::cerr << v.experiment << ": " << (v.pass ? "PASS" : "FAIL") << '\n';
        return v.pass ? 0 : 2;
    } catch (const qthermo::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
