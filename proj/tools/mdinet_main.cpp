// mdinet: star-network MDI-QKD simulator and analysis tool.
//
// Subcommands: simulate, keyrate, hom-scan, calibrate, report.
// Exit status: 0 on success, 1 on operational failure, 2 on config errors.

#include "mdinet/calibration.hpp"
#include "mdinet/config.hpp"
#include "mdinet/keyrate.hpp"
#include "mdinet/orchestrator.hpp"
#include "mdinet/stats_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace mdinet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

SimConfig load_or_default(const std::string& path) {
    if (path.empty()) return default_config();
    return load_config(path);
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string session_file_stem(const SessionOutcome& session) {
    return "session_" + std::to_string(session.session_index) + "_" + session.pair_id;
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed, const std::string& out,
                 double scale_override, bool verbose) {
    SimConfig config = load_or_default(config_path);
    if (scale_override > 0.0) config.schedule.desk_scale = scale_override;
    config.validate();

    fs::create_directories(out);
    if (verbose) std::cerr << "running network simulation, seed " << seed << "\n";
    const RunReport report = run_network(config, seed);

    for (const auto& session : report.sessions) {
        if (verbose)
            std::cerr << "session " << session.session_index << " " << session.pair_id
                      << (session.valid ? " ok" : " invalid") << "\n";
        const std::string stem = session_file_stem(session);
        if (session.valid)
            write_statistics_file((fs::path(out) / (stem + ".stats")).string(),
                                  session.statistics);
        std::ofstream trace(fs::path(out) / (stem + "_calibration.csv"), std::ios::binary);
        write_trace_csv(trace, session.calibration_trace);
    }
    for (const auto& acc : report.accumulated)
        write_statistics_file((fs::path(out) / ("accumulated_" + acc.pair_id + ".stats"))
                                  .string(),
                              acc.statistics);

    write_text_file(fs::path(out) / "report.json", report_to_json(report).dump(2) + "\n");
    write_text_file(fs::path(out) / "config_used.json",
                    config_to_json(config).dump(2) + "\n");

    std::cout << "sessions: " << report.sessions.size() << "\n";
    for (const auto& acc : report.accumulated)
        std::cout << acc.pair_id << ": " << acc.keyrate.rate_bps << " bps accumulated over "
                  << acc.data_time_s << " s\n";
    return kExitOk;
}

int cmd_keyrate(const std::string& stats_path, const std::string& config_path,
                const std::string& out) {
    const SimConfig config = load_or_default(config_path);
    const SessionStatistics stats = parse_statistics_file(stats_path);
    const KeyRateResult result = secure_key_rate(stats, config.protocol);
    const std::string text = keyrate_to_json(result).dump(2) + "\n";
    std::cout << text;
    if (!out.empty()) {
        fs::create_directories(out);
        write_text_file(fs::path(out) / "keyrate.json", text);
    }
    return kExitOk;
}

int cmd_hom_scan(const std::string& config_path, std::uint64_t seed, const std::string& out,
                 const std::string& range, double offset_pm) {
    const SimConfig config = load_or_default(config_path);

    double lo = -config.feedback.scan_span_c;
    double hi = config.feedback.scan_span_c;
    double step = config.feedback.scan_coarse_step_c;
    if (!range.empty()) {
        const auto first = range.find(':');
        if (first == std::string::npos)
            throw ConfigError("range: expected LO:HI or LO:HI:STEP");
        const auto second = range.find(':', first + 1);
        try {
            lo = std::stod(range.substr(0, first));
            hi = std::stod(range.substr(first + 1, second - first - 1));
            if (second != std::string::npos) step = std::stod(range.substr(second + 1));
        } catch (const std::exception&) {
            throw ConfigError("range: expected LO:HI or LO:HI:STEP");
        }
        if (hi <= lo || step <= 0.0) throw ConfigError("range: need LO < HI and STEP > 0");
    }

    CalibrationSession session(config.drift, config.feedback, config.topology.detectors,
                               config.protocol.clock_rate_hz, seed);
    session.force_wavelength_offset(1, offset_pm);

    std::vector<ScanPoint> curve;
    for (double t = lo; t <= hi + 1e-12; t += step)
        curve.push_back({t, session.hom_value_at(t)});

    std::size_t best = 0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        if (curve[i].value < curve[best].value) best = i;

    fs::create_directories(out);
    std::ofstream csv(fs::path(out) / "hom_scan.csv", std::ios::binary);
    csv << "temperature_c,coincidence_value,is_minimum\n";
    for (std::size_t i = 0; i < curve.size(); ++i)
        csv << curve[i].temperature_c << ',' << curve[i].value << ',' << (i == best ? 1 : 0)
            << "\n";

    std::cout << "minimum " << curve[best].value << " at " << curve[best].temperature_c
              << " C\n";
    if (curve[best].value > config.feedback.dip_found_threshold) {
        std::cerr << "error: runtime: interference dip not found in scan range\n";
        return kExitFailure;
    }
    return kExitOk;
}

int cmd_calibrate(const std::string& config_path, std::uint64_t seed,
                  const std::string& out) {
    const SimConfig config = load_or_default(config_path);
    CalibrationSession session(config.drift, config.feedback, config.topology.detectors,
                               config.protocol.clock_rate_hz, seed);
    session.apply_switch_kick();

    fs::create_directories(out);
    bool ok = true;
    std::string failure;
    CalibrationOutcome outcome;
    try {
        outcome = session.recalibrate();
    } catch (const CalibrationError& e) {
        ok = false;
        failure = e.what();
    }
    {
        std::ofstream trace(fs::path(out) / "calibration.csv", std::ios::binary);
        write_trace_csv(trace, session.trace());
    }
    nlohmann::ordered_json j;
    j["ok"] = ok;
    if (!ok) j["error"] = failure;
    const DistinguishabilityState residual = session.distinguishability();
    j["residual"] = {{"delta_wavelength_pm", residual.delta_wavelength_pm},
                     {"delta_time_ps", residual.delta_time_ps},
                     {"polarization_overlap", residual.polarization_overlap},
                     {"mode_overlap", residual.mode_overlap()},
                     {"max_phase_residual_rad", session.max_phase_residual_rad()}};
    j["dead_time_s"] = session.dead_time_s();
    write_text_file(fs::path(out) / "calibration.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    if (!ok) {
        std::cerr << "error: runtime: " << failure << "\n";
        return kExitFailure;
    }
    return kExitOk;
}

int cmd_report(const std::string& in_dir, const std::string& config_path,
               const std::string& out) {
    const SimConfig config = load_or_default(config_path);
    std::map<std::string, std::vector<SessionStatistics>> by_pair;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(in_dir)) {
        if (!entry.is_regular_file()) continue;
        const fs::path& p = entry.path();
        if (p.extension() != ".stats") continue;
        if (p.filename().string().rfind("session_", 0) != 0) continue;
        files.push_back(p);
    }
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
        SessionStatistics stats = parse_statistics_file(p.string());
        by_pair[stats.pair_id].push_back(std::move(stats));
    }
    if (by_pair.empty()) {
        std::cerr << "error: runtime: no session statistics found in " << in_dir << "\n";
        return kExitFailure;
    }
    nlohmann::ordered_json j;
    nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
    for (const auto& [pair_id, sessions] : by_pair) {
        const SessionStatistics merged = merge_sessions(sessions);
        const KeyRateResult rate = secure_key_rate(merged, config.protocol);
        nlohmann::ordered_json entry;
        entry["pair_id"] = pair_id;
        entry["sessions_merged"] = sessions.size();
        entry["keyrate"] = keyrate_to_json(rate);
        pairs.push_back(entry);
        std::cout << pair_id << ": " << rate.rate_bps << " bps accumulated ("
                  << sessions.size() << " sessions)\n";
    }
    j["pairs"] = pairs;
    if (!out.empty()) {
        fs::create_directories(out);
        write_text_file(fs::path(out) / "report_accumulated.json", j.dump(2) + "\n");
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"star-network MDI-QKD simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 1;
    std::string out = "out";
    double scale_override = 0.0;
    bool verbose = false;

    auto add_common = [&](CLI::App* cmd, bool with_scale) {
        cmd->add_option("--config", config_path, "configuration JSON path");
        cmd->add_option("--seed", seed, "random seed");
        cmd->add_option("--out", out, "output directory");
        if (with_scale)
            cmd->add_option("--scale", scale_override, "desk-scale factor override");
        cmd->add_flag("--verbose", verbose, "progress output on stderr");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "run the full network pipeline");
    add_common(simulate, true);

    CLI::App* keyrate = app.add_subcommand("keyrate", "key rate from a statistics file");
    std::string stats_path;
    keyrate->add_option("--stats", stats_path, "statistics file")->required();
    add_common(keyrate, false);

    CLI::App* hom = app.add_subcommand("hom-scan", "interference dip vs temperature");
    std::string range;
    double offset_pm = 0.0;
    hom->add_option("--range", range, "temperature range LO:HI[:STEP] in C");
    hom->add_option("--offset-pm", offset_pm, "preset wavelength offset of the second laser");
    add_common(hom, false);

    CLI::App* calibrate =
        app.add_subcommand("calibrate", "switch kick plus full recalibration");
    add_common(calibrate, false);

    CLI::App* report = app.add_subcommand("report", "re-aggregate exported session statistics");
    std::string in_dir;
    report->add_option("--in", in_dir, "directory with session .stats files")->required();
    add_common(report, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: config: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (simulate->parsed())
            return cmd_simulate(config_path, seed, out, scale_override, verbose);
        if (keyrate->parsed())
            return cmd_keyrate(stats_path, config_path,
                               keyrate->count("--out") > 0 ? out : std::string());
        if (hom->parsed()) return cmd_hom_scan(config_path, seed, out, range, offset_pm);
        if (calibrate->parsed()) return cmd_calibrate(config_path, seed, out);
        if (report->parsed()) return cmd_report(in_dir, config_path, out);
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ParseError& e) {
        std::cerr << "error: parse: " << e.what() << "\n";
        return kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: runtime: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitOk;
}
