// fermiprobe — impurity-dephasing thermometry toolkit CLI.
//
// Subcommands:
//   run <config>            execute a sweep described by an INI config
//   preset <name> [--out D] materialize and run a named figure preset
//   validate <config>       parse and check a config, no execution
//   oracle-check            determinant vs Fock-space trace on small systems
//
// Exit codes: 0 success, 1 config error, 2 partial failure, 3 oracle mismatch.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fermiprobe/oracle_suite.hpp"
#include "fermiprobe/runner.hpp"
#include "fermiprobe/version.hpp"

namespace fp = fermiprobe;

namespace {

int finish_run(const fp::runner::RunReport& report) {
    std::cout << "points: " << report.n_points << ", failed: " << report.n_failed
              << "\nmanifest: " << report.manifest_path << "\n";
    return report.n_failed == 0 ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(fp::version_string) +
                 " - thermometry of an ideal Fermi gas via impurity dephasing"};
    app.require_subcommand(1);
    app.fallthrough();

    int workers = 0;
    std::uint64_t seed = 0;
    bool force = false;
    bool have_seed = false;
    app.add_option("--workers", workers, "sweep worker count (0: hardware)");
    app.add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
        have_seed = true;
    });
    app.add_flag("--force", force, "allow the weak channel beyond |kFa| = 0.5");

    std::string config_path, preset_name, out_dir;
    auto* run_cmd = app.add_subcommand("run", "run a sweep from a config file");
    run_cmd->add_option("config", config_path, "INI config path")->required();

    auto* preset_cmd = app.add_subcommand("preset", "run a named figure preset");
    preset_cmd->add_option("name", preset_name, "preset name")->required();
    preset_cmd->add_option("--out", out_dir, "output directory (default: ./<name>)");

    auto* validate_cmd = app.add_subcommand("validate", "validate a config file");
    validate_cmd->add_option("config", config_path, "INI config path")->required();

    std::uint64_t oracle_seed = 20260808;
    int oracle_systems = 8;
    auto* oracle_cmd =
        app.add_subcommand("oracle-check", "small-system Fock oracle suite");
    oracle_cmd->add_option("--systems", oracle_systems, "number of random systems");
    oracle_cmd->add_option("--oracle-seed", oracle_seed, "suite seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed() || validate_cmd->parsed()) {
            fp::runner::ExperimentConfig cfg = fp::runner::parse_config_file(config_path);
            if (workers > 0) cfg.workers = workers;
            if (have_seed) cfg.seed = seed;
            if (force) cfg.force = true;
            fp::runner::validate(cfg);
            if (validate_cmd->parsed()) {
                std::cout << "config ok: " << config_path << "\n";
                return 0;
            }
            return finish_run(fp::runner::run(cfg));
        }
        if (preset_cmd->parsed()) {
            fp::runner::ExperimentConfig cfg = fp::runner::preset(preset_name);
            cfg.out_dir = out_dir.empty() ? preset_name : out_dir;
            if (workers > 0) cfg.workers = workers;
            if (have_seed) cfg.seed = seed;
            if (force) cfg.force = true;
            std::filesystem::create_directories(cfg.out_dir);
            const auto ini_path =
                std::filesystem::path(cfg.out_dir) / ("config_" + preset_name + ".ini");
            std::ofstream ini(ini_path);
            ini << fp::runner::config_to_ini(cfg);
            ini.close();
            std::cout << "config: " << ini_path.string() << "\n";
            return finish_run(fp::runner::run(cfg));
        }
        if (oracle_cmd->parsed()) {
            const auto rep = fp::oracle::run_suite(oracle_systems, 10, 1e-10, oracle_seed);
            std::printf("oracle-check: %d systems, %d points, max |det - trace| = %.3e\n",
                        rep.systems, rep.points, rep.max_abs_error);
            std::printf("%s\n", rep.pass ? "OK" : "MISMATCH");
            return rep.pass ? 0 : 3;
        }
    } catch (const fp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const fp::UnknownPreset& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
