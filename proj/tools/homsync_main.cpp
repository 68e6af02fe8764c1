#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "homsync/harness.hpp"
#include "homsync/random.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailed = 1;   // typed protocol/estimation failure
constexpr int kExitUsage = 2;       // config or usage error

homsync::ExperimentConfig load_config(const std::string& path,
                                      std::optional<std::uint64_t> seed_override) {
    homsync::ExperimentConfig cfg = homsync::ExperimentConfig::load(path);
    if (seed_override) cfg.seed = *seed_override;
    return cfg;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw homsync::InvalidConfig("cannot open output file: " + path);
    return out;
}

void log_timing(const homsync::StageTiming& t) {
    std::cerr << "timing_ms balance=" << t.balance_ms << " emit=" << t.emit_ms
              << " detect=" << t.detect_ms << " transfer=" << t.transfer_ms
              << " correlate=" << t.correlate_ms << '\n';
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            const std::string& out_path) {
    const auto cfg = load_config(config_path, seed);
    const homsync::ExperimentReport report = homsync::run_experiment(cfg);
    auto out = open_output(out_path);
    homsync::write_report(out, report);
    log_timing(report.timing);
    if (report.failed) {
        std::cerr << "run failed: " << report.failure_reason << '\n';
        return kExitRunFailed;
    }
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& axis,
              const std::vector<double>& values, std::uint64_t trials,
              const std::string& out_path) {
    const auto cfg = load_config(config_path, std::nullopt);
    const auto reports = homsync::run_sweep(cfg, axis, values, trials);
    auto out = open_output(out_path);
    homsync::write_sweep_csv(out, axis, values, trials, reports);
    return kExitOk;
}

int cmd_histogram(const std::string& config_path, std::optional<std::uint64_t> seed,
                  const std::string& out_path) {
    const auto cfg = load_config(config_path, seed);
    const homsync::CorrelationHistogram h = homsync::run_histogram(cfg);
    auto out = open_output(out_path);
    homsync::write_histogram_csv(out, h);
    return kExitOk;
}

int cmd_balance_demo(const std::string& config_path, std::optional<std::uint64_t> seed) {
    const auto cfg = load_config(config_path, seed);
    cfg.validate();
    homsync::RandomStream rng =
        homsync::RandomStream(cfg.seed).substream(homsync::stage::kBalance);
    const auto probe = [&](homsync::FsDuration setting) {
        homsync::OpticalPath candidate = cfg.path_b;
        candidate.delay_line_fs = setting;
        return homsync::simulate_hom_run(cfg.hom,
                                         homsync::path_imbalance(cfg.path_a, candidate),
                                         cfg.balance.pairs_per_setting, rng);
    };
    try {
        const homsync::BalanceResult result = homsync::balance_search(probe, cfg.balance);
        homsync::write_scan_trace_csv(std::cout, result.scan_trace);
        std::cerr << "balanced at " << result.delay_setting_fs.count()
                  << " fs, contrast " << result.contrast << '\n';
        return kExitOk;
    } catch (const homsync::NoDipFound& e) {
        std::cout << "delay_fs,count\n";
        for (const auto& [delay, count] : e.scan_trace)
            std::cout << delay << ',' << count << '\n';
        std::cerr << "balance failed: " << e.what() << '\n';
        return kExitRunFailed;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator for entangled-photon clock synchronization"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    std::string axis;
    std::string values_csv;
    std::uint64_t trials = 1;

    auto* run = app.add_subcommand("run", "Run one seeded experiment, write a JSON report");
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    run->add_option("--seed", seed, "override the config seed");
    run->add_option("--out", out_path, "report output path")->required();

    auto* sweep = app.add_subcommand("sweep", "Sweep one config axis, write a CSV summary");
    sweep->add_option("--config", config_path)->required();
    sweep->add_option("--axis", axis, "one of: session_length, jitter, efficiency, dark_rate, bin_width, pairs_per_setting")->required();
    sweep->add_option("--values", values_csv, "comma-separated axis values")->required();
    sweep->add_option("--trials", trials, "trials per value")->required();
    sweep->add_option("--out", out_path)->required();

    auto* hist = app.add_subcommand("histogram", "Dump one run's correlation histogram as CSV");
    hist->add_option("--config", config_path)->required();
    hist->add_option("--seed", seed);
    hist->add_option("--out", out_path)->required();

    auto* demo = app.add_subcommand("balance-demo", "Print the balance scan trace as CSV");
    demo->add_option("--config", config_path)->required();
    demo->add_option("--seed", seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, seed, out_path);
        if (hist->parsed()) return cmd_histogram(config_path, seed, out_path);
        if (demo->parsed()) return cmd_balance_demo(config_path, seed);
        if (sweep->parsed()) {
            std::vector<double> values;
            std::stringstream ss(values_csv);
            std::string field;
            while (std::getline(ss, field, ',')) {
                if (field.empty()) continue;
                values.push_back(std::stod(field));
            }
            if (values.empty())
                throw homsync::InvalidConfig("--values needs at least one number");
            return cmd_sweep(config_path, axis, values, trials, out_path);
        }
    } catch (const homsync::UnknownAxis& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const homsync::InvalidConfig& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const homsync::Error& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return kExitRunFailed;
    } catch (const std::exception& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
