#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "edgelab/experiments.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"edgelab: tridiagonal beta-ensemble edge laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", artifact_dir;

    CLI::App* run = app.add_subcommand("run", "execute an experiment config");
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    run->add_option("-o,--out", out_dir, "artifact output directory");

    CLI::App* validate = app.add_subcommand("validate", "check a config without running it");
    validate->add_option("config", config_path, "experiment config (JSON)")->required();

    CLI::App* report = app.add_subcommand("report", "print the summary of an artifact directory");
    report->add_option("dir", artifact_dir, "artifact directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            edgelab::ExperimentOutcome outcome =
                edgelab::run_experiment(slurp(config_path), out_dir);
            std::cout << outcome.summary;
            if (outcome.inconclusive) {
                std::cout << "RESULT: inconclusive\n";
                return 2;
            }
            std::cout << (outcome.pass ? "RESULT: pass\n" : "RESULT: fail\n");
            return outcome.pass ? 0 : 1;
        }
        if (validate->parsed()) {
            auto problems = edgelab::validate_experiment_config(slurp(config_path));
            if (problems.empty()) {
                std::cout << "config OK\n";
                return 0;
            }
            for (const auto& p : problems) std::cerr << p << "\n";
            return 1;
        }
        if (report->parsed()) {
            std::string summary = slurp(artifact_dir + "/summary.json");
            nlohmann::json j = nlohmann::json::parse(summary);
            std::cout << summary;
            bool pass = j.value("pass", false);
            std::cout << (pass ? "RESULT: pass\n" : "RESULT: fail\n");
            return pass ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
