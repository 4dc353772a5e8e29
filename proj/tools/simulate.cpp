// simulate <config-path> [--experiment b2b|detuning|multipass] [--out <csv>] [--seeds N] [--smoke]
// Exit codes: 0 success, 2 config error, 3 simulation failure.

#include <cwdm/harness.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Nyquist vs cyclic-spectrum WDM link simulator"};
    std::string config_path;
    std::string experiment;
    std::string out_path;
    int seeds = 0;
    int threads = 0;
    bool smoke = false;
    app.add_option("config", config_path, "INI configuration file")->required();
    app.add_option("--experiment", experiment, "b2b, detuning or multipass (overrides the config)")
        ->check(CLI::IsMember({"b2b", "detuning", "multipass"}));
    app.add_option("--out", out_path, "CSV output path (default: stdout)");
    app.add_option("--seeds", seeds, "number of Monte Carlo seeds")->check(CLI::PositiveNumber);
    app.add_option("--threads", threads, "worker threads (output order is unaffected)")->check(CLI::PositiveNumber);
    app.add_flag("--smoke", smoke, "2^14 symbols, one seed, two OSNR points");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    cwdm::ExperimentConfig cfg;
    try {
        cfg = cwdm::load_config(config_path);
        if (!experiment.empty()) cfg.experiment = cwdm::parse_experiment(experiment);
        if (smoke) cwdm::apply_smoke_profile(cfg);
        if (seeds > 0) cfg.n_seeds = seeds;
        if (threads > 0) cfg.threads = threads;
        cfg.validate();
    } catch (const cwdm::Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        const auto rows = cwdm::run_experiment(cfg);
        for (const auto& r : rows)
            if (!r.ok())
                std::cerr << "row failed (" << r.experiment << ", " << r.baud_hz / 1e9 << " Gbd, "
                          << cwdm::to_string(r.mode) << ", seed " << r.seed << ", pass " << r.pass_index
                          << "): " << r.failure << "\n";
        if (out_path.empty()) {
            std::cout << cwdm::format_results(rows);
            std::cerr << cwdm::format_summary(rows, cfg);
        } else {
            cwdm::emit_results(rows, out_path);
            std::cout << cwdm::format_summary(rows, cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << "simulation failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
