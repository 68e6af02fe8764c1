#include "homsync/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "homsync/random.hpp"

namespace homsync {

using nlohmann::json;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

json source_to_json(const SourceModel& s) {
    return {{"emission_mode",
             s.emission_mode == EmissionMode::Poisson ? "poisson" : "fixed_interval"},
            {"mean_interval_fs", s.mean_interval_fs.count()},
            {"pair_jitter_sigma_fs", s.pair_jitter_sigma_fs},
            {"session_length_fs", s.session_length_fs.count()}};
}

SourceModel source_from_json(const json& j) {
    SourceModel s;
    const auto mode = j.at("emission_mode").get<std::string>();
    if (mode == "poisson") {
        s.emission_mode = EmissionMode::Poisson;
    } else if (mode == "fixed_interval") {
        s.emission_mode = EmissionMode::FixedInterval;
    } else {
        throw InvalidConfig("emission_mode must be \"poisson\" or \"fixed_interval\"");
    }
    s.mean_interval_fs = FsDuration(j.at("mean_interval_fs").get<std::int64_t>());
    s.pair_jitter_sigma_fs = j.value("pair_jitter_sigma_fs", 0.0);
    s.session_length_fs = FsDuration(j.at("session_length_fs").get<std::int64_t>());
    return s;
}

json path_to_json(const OpticalPath& p) {
    return {{"base_delay_fs", p.base_delay_fs.count()},
            {"delay_line_fs", p.delay_line_fs.count()},
            {"transmission", p.transmission}};
}

OpticalPath path_from_json(const json& j) {
    OpticalPath p;
    p.base_delay_fs = FsDuration(j.at("base_delay_fs").get<std::int64_t>());
    p.delay_line_fs = FsDuration(j.value("delay_line_fs", std::int64_t{0}));
    p.transmission = j.value("transmission", 1.0);
    return p;
}

json hom_to_json(const HomModel& h) {
    return {{"visibility", h.visibility},
            {"dip_sigma_fs", h.dip_sigma_fs},
            {"p_max", h.p_max}};
}

HomModel hom_from_json(const json& j) {
    HomModel h;
    h.visibility = j.at("visibility").get<double>();
    h.dip_sigma_fs = j.at("dip_sigma_fs").get<double>();
    h.p_max = j.at("p_max").get<double>();
    return h;
}

json clock_to_json(const ClockModel& c) {
    return {{"offset_fs", c.offset_fs.count()},
            {"rate_deviation", c.rate_deviation},
            {"jitter_sigma_fs", c.jitter_sigma_fs},
            {"quantization_fs", c.quantization_fs}};
}

ClockModel clock_from_json(const json& j) {
    ClockModel c;
    c.offset_fs = FsDuration(j.at("offset_fs").get<std::int64_t>());
    c.rate_deviation = j.value("rate_deviation", 0.0);
    c.jitter_sigma_fs = j.value("jitter_sigma_fs", 0.0);
    c.quantization_fs = j.value("quantization_fs", std::int64_t{1});
    return c;
}

json detector_to_json(const DetectorModel& d) {
    return {{"efficiency", d.efficiency},
            {"dark_rate_per_s", d.dark_rate_per_s},
            {"dead_time_fs", d.dead_time_fs.count()}};
}

DetectorModel detector_from_json(const json& j) {
    DetectorModel d;
    d.efficiency = j.value("efficiency", 1.0);
    d.dark_rate_per_s = j.value("dark_rate_per_s", 0.0);
    d.dead_time_fs = FsDuration(j.value("dead_time_fs", std::int64_t{0}));
    return d;
}

json balance_to_json(const BalanceConfig& b) {
    return {{"scan_min_fs", b.scan_min_fs.count()},
            {"scan_max_fs", b.scan_max_fs.count()},
            {"coarse_step_fs", b.coarse_step_fs.count()},
            {"pairs_per_setting", b.pairs_per_setting},
            {"refine_tolerance_fs", b.refine_tolerance_fs.count()},
            {"min_contrast", b.min_contrast}};
}

BalanceConfig balance_from_json(const json& j) {
    BalanceConfig b;
    b.scan_min_fs = FsDuration(j.at("scan_min_fs").get<std::int64_t>());
    b.scan_max_fs = FsDuration(j.at("scan_max_fs").get<std::int64_t>());
    b.coarse_step_fs = FsDuration(j.at("coarse_step_fs").get<std::int64_t>());
    b.pairs_per_setting = j.at("pairs_per_setting").get<std::uint64_t>();
    b.refine_tolerance_fs = FsDuration(j.value("refine_tolerance_fs", std::int64_t{5}));
    b.min_contrast = j.value("min_contrast", 0.3);
    return b;
}

json correlation_to_json(const CorrelationConfig& c) {
    json j = {{"bin_width_fs", c.bin_width_fs.count()},
              {"search_halfwidth_fs", c.search_halfwidth_fs.count()}};
    if (c.coarse_bin_width_fs) j["coarse_bin_width_fs"] = c.coarse_bin_width_fs->count();
    return j;
}

CorrelationConfig correlation_from_json(const json& j) {
    CorrelationConfig c;
    c.bin_width_fs = FsDuration(j.value("bin_width_fs", std::int64_t{10}));
    c.search_halfwidth_fs =
        FsDuration(j.value("search_halfwidth_fs", std::int64_t{10'000'000}));
    if (j.contains("coarse_bin_width_fs") && !j.at("coarse_bin_width_fs").is_null()) {
        c.coarse_bin_width_fs =
            FsDuration(j.at("coarse_bin_width_fs").get<std::int64_t>());
    }
    return c;
}

json estimate_to_json(const OffsetEstimate& e) {
    return {{"tau0_fs", e.tau0_fs.count()},
            {"peak_height_normalized", e.peak_height_normalized},
            {"background_level", e.background_level},
            {"significance", e.significance},
            {"n_contributing", e.n_contributing}};
}

json balance_result_to_json(const BalanceResult& b) {
    return {{"delay_setting_fs", b.delay_setting_fs.count()},
            {"min_rate", b.min_rate},
            {"contrast", b.contrast},
            {"scan_points", b.scan_trace.size()}};
}

/// Everything one protocol execution produces; run_experiment and
/// run_histogram are views of this.
struct PipelineOutput {
    ExperimentReport report;
    std::optional<CorrelationHistogram> histogram;
};

FailureReason classify(const Error& e) {
    if (dynamic_cast<const NoDipFound*>(&e)) return FailureReason::NoDip;
    if (dynamic_cast<const EmptySeries*>(&e)) return FailureReason::EmptySeries;
    if (dynamic_cast<const AmbiguousPeak*>(&e)) return FailureReason::AmbiguousPeak;
    if (dynamic_cast<const DecodeError*>(&e)) return FailureReason::DecodeFailed;
    if (dynamic_cast<const OverflowError*>(&e)) return FailureReason::Overflow;
    return FailureReason::InvalidConfig;
}

PipelineOutput execute(const ExperimentConfig& cfg, bool want_histogram) {
    cfg.validate();

    PipelineOutput out;
    ExperimentReport& report = out.report;
    report.config = cfg;
    report.seed = cfg.seed;

    SyncSession session(cfg.seed);
    const RandomStream master(cfg.seed);

    try {
        auto t0 = std::chrono::steady_clock::now();
        session.begin_balancing();
        OpticalPath path_b = cfg.path_b;
        if (!cfg.skip_balancing &&
            static_cast<double>(cfg.balance.coarse_step_fs.count()) >
                cfg.hom.dip_sigma_fs / 2.0) {
            std::fprintf(stderr,
                         "warning: balance coarse_step (%lld fs) exceeds dip_sigma/2 "
                         "(%.1f fs); the scan may step over the dip\n",
                         static_cast<long long>(cfg.balance.coarse_step_fs.count()),
                         cfg.hom.dip_sigma_fs / 2.0);
        }
        if (!cfg.skip_balancing) {
            RandomStream balance_rng = master.substream(stage::kBalance);
            const auto probe = [&](FsDuration setting) {
                OpticalPath candidate = cfg.path_b;
                candidate.delay_line_fs = setting;
                return simulate_hom_run(cfg.hom, path_imbalance(cfg.path_a, candidate),
                                        cfg.balance.pairs_per_setting, balance_rng);
            };
            report.balance = balance_search(probe, cfg.balance);
            path_b.delay_line_fs = report.balance->delay_setting_fs;
        }
        report.residual_imbalance_fs = path_imbalance(cfg.path_a, path_b);
        report.truth_tau0_fs = (cfg.clock_a.offset_fs - cfg.clock_b.offset_fs) -
                               report.residual_imbalance_fs;
        report.timing.balance_ms = ms_since(t0);

        t0 = std::chrono::steady_clock::now();
        session.begin_collecting();
        RandomStream emission_rng = master.substream(stage::kEmission);
        const std::vector<PairEmission> pairs = emit_pairs(cfg.source, emission_rng);
        report.pairs_emitted = pairs.size();
        report.timing.emit_ms = ms_since(t0);

        t0 = std::chrono::steady_clock::now();
        RandomStream detect_rng = master.substream(stage::kDetection);
        auto [series_a, series_b] = propagate_and_detect(
            pairs, cfg.path_a, path_b, cfg.clock_a, cfg.clock_b, cfg.detector_a,
            cfg.detector_b, cfg.source.session_length_fs, detect_rng);
        report.events_a = series_a.timestamps.size();
        report.events_b = series_b.timestamps.size();
        report.timing.detect_ms = ms_since(t0);

        t0 = std::chrono::steady_clock::now();
        session.begin_awaiting_data();
        const std::vector<std::uint8_t> wire = encode(series_a, session.session_id());
        const ArrivalDataMessage msg = decode({wire.data(), wire.size()});
        const ArrivalSeries received_a = to_series(msg, series_a.session_length_fs);
        report.timing.transfer_ms = ms_since(t0);

        t0 = std::chrono::steady_clock::now();
        session.begin_correlating();
        OffsetEstimate estimate;
        if (want_histogram) {
            if (cfg.correlation.coarse_bin_width_fs) {
                auto [fine, est] = correlate_twopass(received_a, series_b, cfg.correlation);
                out.histogram = std::move(fine);
                estimate = est;
            } else {
                out.histogram = correlate(received_a, series_b, cfg.correlation);
                estimate = estimate_offset(*out.histogram);
            }
        } else {
            estimate = synchronize(received_a, series_b, cfg.correlation, cfg.clock_b).second;
        }
        report.estimate = estimate;
        report.residual_fs = estimate.tau0_fs - report.truth_tau0_fs;
        session.complete(estimate);
        report.timing.correlate_ms = ms_since(t0);
    } catch (const Error& e) {
        session.fail(classify(e));
        report.failed = true;
        report.failure_reason = e.what();
    }
    report.final_state = session.state();
    return out;
}

} // namespace

void ExperimentConfig::validate() const {
    source.validate();
    path_a.validate();
    path_b.validate();
    hom.validate();
    clock_a.validate();
    clock_b.validate();
    detector_a.validate();
    detector_b.validate();
    if (!skip_balancing) balance.validate();
    correlation.validate();
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig cfg;
    cfg.source = source_from_json(j.at("source"));
    cfg.path_a = path_from_json(j.at("path_a"));
    cfg.path_b = path_from_json(j.at("path_b"));
    cfg.hom = hom_from_json(j.at("hom"));
    cfg.clock_a = clock_from_json(j.at("clock_a"));
    cfg.clock_b = clock_from_json(j.at("clock_b"));
    cfg.detector_a = detector_from_json(j.at("detector_a"));
    cfg.detector_b = detector_from_json(j.at("detector_b"));
    if (j.contains("balance")) cfg.balance = balance_from_json(j.at("balance"));
    else {
        cfg.balance.scan_min_fs = FsDuration(-10'000);
        cfg.balance.scan_max_fs = FsDuration(10'000);
        cfg.balance.coarse_step_fs = FsDuration(50);
        cfg.balance.pairs_per_setting = 10'000;
        cfg.balance.refine_tolerance_fs = FsDuration(5);
        cfg.balance.min_contrast = 0.3;
    }
    cfg.correlation = j.contains("correlation")
                          ? correlation_from_json(j.at("correlation"))
                          : CorrelationConfig{};
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.skip_balancing = j.value("skip_balancing", false);
    return cfg;
}

json ExperimentConfig::to_json() const {
    return {{"source", source_to_json(source)},
            {"path_a", path_to_json(path_a)},
            {"path_b", path_to_json(path_b)},
            {"hom", hom_to_json(hom)},
            {"clock_a", clock_to_json(clock_a)},
            {"clock_b", clock_to_json(clock_b)},
            {"detector_a", detector_to_json(detector_a)},
            {"detector_b", detector_to_json(detector_b)},
            {"balance", balance_to_json(balance)},
            {"correlation", correlation_to_json(correlation)},
            {"seed", seed},
            {"skip_balancing", skip_balancing}};
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot open config file: " + path);
    json j;
    try {
        in >> j;
        return from_json(j);
    } catch (const json::exception& e) {
        throw InvalidConfig("config parse error in " + path + ": " + e.what());
    }
}

json ExperimentReport::to_json() const {
    json j;
    j["config"] = config.to_json();
    j["seed"] = seed;
    j["failed"] = failed;
    j["failure_reason"] = failed ? json(failure_reason) : json(nullptr);
    j["final_state"] = to_string(final_state);
    j["balance"] = balance ? balance_result_to_json(*balance) : json(nullptr);
    j["residual_imbalance_fs"] = residual_imbalance_fs.count();
    j["truth_tau0_fs"] = truth_tau0_fs.count();
    j["estimate"] = estimate ? estimate_to_json(*estimate) : json(nullptr);
    j["estimated_tau0_fs"] = estimate ? json(estimate->tau0_fs.count()) : json(nullptr);
    j["residual_fs"] = residual_fs ? json(residual_fs->count()) : json(nullptr);
    j["pairs_emitted"] = pairs_emitted;
    j["events_a"] = events_a;
    j["events_b"] = events_b;
    return j;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    return execute(cfg, false).report;
}

CorrelationHistogram run_histogram(const ExperimentConfig& cfg) {
    PipelineOutput out = execute(cfg, true);
    if (out.report.failed && !out.histogram)
        throw Error("histogram unavailable: " + out.report.failure_reason);
    return std::move(*out.histogram);
}

const std::vector<std::string> kSweepAxes = {
    "session_length", "jitter", "efficiency", "dark_rate", "bin_width",
    "pairs_per_setting"};

namespace {

ExperimentConfig with_axis_value(const ExperimentConfig& base, const std::string& axis,
                                 double value) {
    ExperimentConfig cfg = base;
    if (axis == "session_length") {
        cfg.source.session_length_fs = FsDuration(std::llround(value));
    } else if (axis == "jitter") {
        cfg.clock_a.jitter_sigma_fs = value;
        cfg.clock_b.jitter_sigma_fs = value;
    } else if (axis == "efficiency") {
        cfg.detector_a.efficiency = value;
        cfg.detector_b.efficiency = value;
    } else if (axis == "dark_rate") {
        cfg.detector_a.dark_rate_per_s = value;
        cfg.detector_b.dark_rate_per_s = value;
    } else if (axis == "bin_width") {
        cfg.correlation.bin_width_fs = FsDuration(std::llround(value));
    } else if (axis == "pairs_per_setting") {
        cfg.balance.pairs_per_setting = static_cast<std::uint64_t>(std::llround(value));
    } else {
        throw UnknownAxis("unknown sweep axis: " + axis);
    }
    return cfg;
}

} // namespace

std::vector<ExperimentReport> run_sweep(const ExperimentConfig& base,
                                        const std::string& axis,
                                        const std::vector<double>& values,
                                        std::uint64_t trials_per_value) {
    if (std::find(kSweepAxes.begin(), kSweepAxes.end(), axis) == kSweepAxes.end())
        throw UnknownAxis("unknown sweep axis: " + axis);
    std::vector<ExperimentReport> reports;
    reports.reserve(values.size() * trials_per_value);
    for (const double value : values) {
        for (std::uint64_t trial = 0; trial < trials_per_value; ++trial) {
            ExperimentConfig cfg = with_axis_value(base, axis, value);
            cfg.seed = base.seed + trial;
            reports.push_back(run_experiment(cfg));
        }
    }
    return reports;
}

void write_report(std::ostream& out, const ExperimentReport& report) {
    out << report.to_json().dump(2) << '\n';
}

void write_sweep_csv(std::ostream& out, const std::string& axis,
                     const std::vector<double>& values, std::uint64_t trials_per_value,
                     const std::vector<ExperimentReport>& reports) {
    out << "axis_value,trial,residual_fs,significance\n";
    std::size_t idx = 0;
    for (const double value : values) {
        for (std::uint64_t trial = 0; trial < trials_per_value; ++trial, ++idx) {
            const ExperimentReport& r = reports.at(idx);
            out << json(value).dump() << ',' << trial << ',';
            if (r.residual_fs) out << r.residual_fs->count();
            out << ',';
            if (r.estimate) out << json(r.estimate->significance).dump();
            out << '\n';
        }
    }
    (void)axis;
}

void write_histogram_csv(std::ostream& out, const CorrelationHistogram& h) {
    out << "bin_center_fs,count\n";
    char buf[64];
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.1f", h.bin_center(k));
        out << buf << ',' << h.counts[k] << '\n';
    }
}

void write_scan_trace_csv(std::ostream& out,
                          const std::vector<std::pair<FsDuration, std::uint64_t>>& trace) {
    out << "delay_fs,count\n";
    for (const auto& [delay, count] : trace) {
        out << delay.count() << ',' << count << '\n';
    }
}

} // namespace homsync
