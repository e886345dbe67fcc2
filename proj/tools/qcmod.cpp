#include "qcmod/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"qcmod: discrete p-modulus, chordal metrics, ring Q-map verification, and "
                 "singularity experiments"};
    std::string config_path;
    std::string out_dir;
    int threads = 0;
    long seed = -1;
    bool verbose = false;
    app.add_option("--config", config_path, "run configuration file")->required();
    app.add_option("--out", out_dir, "output directory (overrides the config)");
    app.add_option("--threads", threads, "worker cap, 0 = auto (runs are single-process)");
    app.add_option("--seed", seed, "sampling seed (overrides the config)");
    app.add_flag("--verbose", verbose, "echo progress to stderr");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 2 : 0;
    }

    qcmod::RunConfig cfg;
    try {
        cfg = qcmod::parse_run_config_file(config_path);
    } catch (const std::exception& e) {
        std::cerr << "qcmod: " << e.what() << "\n";
        return 2;
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed >= 0) cfg.seed = seed;
    cfg.threads = threads;
    cfg.verbose = verbose;

    std::string note;
    int code = qcmod::run(cfg, &note);
    if (code != 0 || verbose) std::cerr << "qcmod: " << note << "\n";
    return code;
}
