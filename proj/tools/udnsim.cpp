#include <CLI11.hpp>
#include <string>

#include "udn/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"spatial coordination strategy simulator for ultra-dense wireless networks"};
    app.require_subcommand(1);

    udn::cli::RunOptions opt;
    std::string study_name;
    double inject = 0.0;

    CLI::App* run = app.add_subcommand("run", "run a campaign from a JSON config");
    run->add_option("--config", opt.config_path, "campaign config (JSON)")->required();
    run->add_option("--out", opt.out_dir, "output directory (default .)");
    run->add_option("--override", opt.overrides, "KEY=VAL config override, repeatable");
    run->add_option("--snapshots", opt.snapshots, "override the snapshot count");
    run->add_option("--seed", opt.seed, "override the master seed");
    run->add_option("--threads", opt.threads, "worker threads (1 = serial reference)");

    CLI::App* study = app.add_subcommand("study", "run a pre-baked study grid");
    study->add_option("name", study_name, "proportionate | densification | ue-density")
        ->required();
    study->add_option("--out", opt.out_dir, "output directory (default .)");
    study->add_option("--snapshots", opt.snapshots, "snapshots per cell (default 25)");
    study->add_flag("--full", opt.full, "include the largest grid points");
    study->add_option("--threads", opt.threads, "worker threads (1 = serial reference)");
    study->add_option("--seed", opt.seed, "master seed (default 0)");

    CLI::App* verify = app.add_subcommand("verify", "run the oracle suite");
    verify->add_option("--out", opt.out_dir, "directory for verify-report.txt");
    verify->add_option("--inject-epsilon", inject, "")->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : udn::cli::kExitConfig;
    }

    if (run->parsed()) return udn::cli::cmd_run(opt);
    if (study->parsed()) return udn::cli::cmd_study(study_name, opt);
    return udn::cli::cmd_verify(opt.out_dir, inject);
}
