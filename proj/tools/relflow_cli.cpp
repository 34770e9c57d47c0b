// relflow command-line driver.
//   relflow run <config.json> [--out DIR] [--override key=value ...]
//   relflow validate <config.json>
//   relflow presets
// Exit codes: 0 tolerances met, 1 tolerance exceeded, 2 configuration error,
// 3 runtime or numerical failure.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "relflow/scenario.hpp"

namespace {

constexpr int exit_pass = 0;
constexpr int exit_tolerance = 1;
constexpr int exit_config = 2;
constexpr int exit_runtime = 3;

relflow::json load_document(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw relflow::ConfigError(path, "cannot read config file");
    std::stringstream buf;
    buf << in.rdbuf();
    relflow::json doc;
    try {
        doc = relflow::json::parse(buf.str());
    } catch (const relflow::json::parse_error& e) {
        throw relflow::ConfigError(path, e.what());
    }
    for (const auto& o : overrides) relflow::apply_override(doc, o);
    return doc;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Relativistic charged particle and Clebsch fluid scenarios"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir;
    std::vector<std::string> overrides;

    auto* run = app.add_subcommand("run", "run a scenario and write CSV artifacts plus summary.json");
    run->add_option("config", config, "scenario JSON file")->required();
    run->add_option("--out", out_dir, "output directory (overrides output.dir)");
    run->add_option("--override", overrides, "dotted key=value applied to the config before parsing")
        ->take_all()
        ->expected(0, -1);

    auto* validate = app.add_subcommand("validate", "parse and validate a scenario without running it");
    validate->add_option("config", config, "scenario JSON file")->required();
    validate->add_option("--override", overrides, "dotted key=value applied before parsing")->expected(0, -1);

    auto* presets = app.add_subcommand("presets", "list initial-condition presets");

    CLI11_PARSE(app, argc, argv);

    if (presets->parsed()) {
        for (const auto& p : relflow::preset_catalog) std::cout << p.name << "\t" << p.summary << "\n";
        return exit_pass;
    }

    relflow::Scenario scenario;
    try {
        scenario = relflow::parse_config(load_document(config, overrides));
    } catch (const relflow::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return exit_config;
    }

    if (validate->parsed()) {
        std::cout << "ok: " << relflow::to_string(scenario.kind) << "\n";
        return exit_pass;
    }

    try {
        const relflow::RunResult r = relflow::run_scenario(scenario, out_dir);
        for (const auto& f : r.files) std::cout << f.string() << "\n";
        std::cout << (r.pass ? "PASS" : "FAIL: tolerance exceeded") << "\n";
        return r.pass ? exit_pass : exit_tolerance;
    } catch (const relflow::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "run failed (" << relflow::to_string(scenario.kind) << "): " << e.what() << "\n";
        return exit_runtime;
    }
}
