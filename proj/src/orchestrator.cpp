#include "mdinet/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>

namespace mdinet {

SessionPlan schedule(const NetworkTopology& topology, double total_duration_s,
                     double session_duration_s, std::uint64_t seed) {
    topology.validate();
    if (session_duration_s <= 0.0) throw ConfigError("schedule: session duration must be > 0");
    if (total_duration_s < 0.0) throw ConfigError("schedule: total duration must be >= 0");

    std::vector<std::array<int, 2>> pairs;
    for (int i = 0; i < static_cast<int>(topology.users.size()); ++i)
        for (int j = i + 1; j < static_cast<int>(topology.users.size()); ++j)
            pairs.push_back({i, j});

    SessionPlan plan;
    Rng rng(derive_stream(seed, kStreamSchedule));
    double start = 0.0;
    while (start < total_duration_s) {
        SessionSlot slot;
        slot.pair = pairs[rng.below(pairs.size())];
        slot.start_s = start;
        slot.duration_s = std::min(session_duration_s, total_duration_s - start);
        slot.seed = rng.next_u64();
        plan.sessions.push_back(slot);
        start += session_duration_s;
    }
    return plan;
}

SiftResult sift(const std::vector<RawEvent>& events) {
    SiftResult result;
    std::uint64_t index = 0;
    for (const RawEvent& event : events) {
        const std::uint64_t event_index = index++;
        if (event.basis_a != event.basis_b) continue;  // basis sift drops the rest
        CellCounts& cell =
            result.statistics.cell(event.intensity_a, event.intensity_b, event.basis_a);
        cell.sent += 1;
        if (!event.psi_minus) continue;
        cell.coincidences += 1;
        const bool error = event.bit_a == event.bit_b;  // disagreement after the flip
        if (error) cell.errors += 1;
        SiftedRecord record;
        record.event_index = event_index;
        record.basis = event.basis_a;
        record.intensity_a = event.intensity_a;
        record.intensity_b = event.intensity_b;
        record.bit_a = event.bit_a;
        record.bit_b = 1 - event.bit_b;
        record.error = error;
        result.records.push_back(record);
    }
    result.statistics.n_pulses = events.size();
    return result;
}

SessionStatistics merge_sessions(const std::vector<SessionStatistics>& sessions) {
    if (sessions.empty()) throw DomainError("merge_sessions: nothing to merge");
    SessionStatistics merged = sessions.front();
    for (std::size_t i = 1; i < sessions.size(); ++i) {
        const SessionStatistics& s = sessions[i];
        if (s.pair_id != merged.pair_id)
            throw DomainError("merge_sessions: pair mismatch '" + s.pair_id + "' vs '" +
                              merged.pair_id + "'");
        if (s.scale != merged.scale)
            throw DomainError("merge_sessions: inconsistent count scales");
        for (int c = 0; c < 18; ++c) {
            merged.cells[c].sent += s.cells[c].sent;
            merged.cells[c].coincidences += s.cells[c].coincidences;
            merged.cells[c].errors += s.cells[c].errors;
        }
        merged.n_pulses += s.n_pulses;
    }
    merged.tagged = false;
    merged.tags.clear();
    return merged;
}

SessionOutcome run_session(const SimConfig& config, const std::array<int, 2>& pair,
                           int session_index, double start_s, double duration_s,
                           std::uint64_t seed) {
    config.validate();
    const auto& users = config.topology.users;
    if (pair[0] < 0 || pair[1] < 0 || pair[0] >= static_cast<int>(users.size()) ||
        pair[1] >= static_cast<int>(users.size()) || pair[0] == pair[1])
        throw ConfigError("run_session: invalid user pair");
    if (duration_s <= 0.0) throw ConfigError("run_session: duration must be > 0");

    SessionOutcome outcome;
    outcome.session_index = session_index;
    outcome.pair = pair;
    outcome.pair_id = users[pair[0]].id + "-" + users[pair[1]].id;
    outcome.start_s = start_s;
    outcome.duration_s = duration_s;

    CalibrationSession calibration(config.drift, config.feedback, config.topology.detectors,
                                   config.protocol.clock_rate_hz,
                                   derive_stream(seed, kStreamCalibration, session_index));
    calibration.apply_switch_kick();
    try {
        calibration.recalibrate();
    } catch (const CalibrationError& e) {
        outcome.valid = false;
        outcome.invalid_reason = e.what();
        outcome.calibration_trace = calibration.trace();
        outcome.dead_time_s = calibration.dead_time_s();
        outcome.statistics.pair_id = outcome.pair_id;
        return outcome;
    }

    outcome.dead_time_s = calibration.dead_time_s();
    const double data_time = std::max(0.0, duration_s - outcome.dead_time_s);
    outcome.data_time_s = data_time;

    const double scale = config.schedule.desk_scale;
    const double chunk_s = config.schedule.chunk_duration_s;
    const int n_chunks = std::max(1, static_cast<int>(std::ceil(data_time / chunk_s)));

    SessionStatistics raw;
    raw.pair_id = outcome.pair_id;
    raw.scale = scale;
    double simulated_time = 0.0;
    for (int chunk = 0; chunk < n_chunks; ++chunk) {
        const double this_chunk = std::min(chunk_s, data_time - simulated_time);
        if (this_chunk <= 0.0) break;
        simulated_time += this_chunk;
        calibration.advance(this_chunk);

        const std::uint64_t n_pulses = static_cast<std::uint64_t>(
            std::llround(this_chunk * config.protocol.clock_rate_hz * scale));
        if (n_pulses == 0) continue;
        SimulationOptions options;
        options.n_pulses = n_pulses;
        options.seed = derive_stream(seed, kStreamPulse, session_index,
                                     static_cast<std::uint64_t>(chunk));
        options.pair_id = outcome.pair_id;
        const SessionStatistics chunk_stats = simulate_session(
            config.protocol, users[pair[0]].channel, users[pair[1]].channel,
            config.topology.detectors, calibration.distinguishability(), options);
        for (int c = 0; c < 18; ++c) {
            raw.cells[c].sent += chunk_stats.cells[c].sent;
            raw.cells[c].coincidences += chunk_stats.cells[c].coincidences;
            raw.cells[c].errors += chunk_stats.cells[c].errors;
        }
        raw.n_pulses += chunk_stats.n_pulses;
    }

    outcome.simulated_pulses = raw.n_pulses;
    outcome.statistics = renormalize_counts(raw, scale);
    outcome.keyrate = secure_key_rate(outcome.statistics, config.protocol);
    outcome.calibration_trace = calibration.trace();
    outcome.time_averaged_overlap = calibration.time_averaged_overlap();
    outcome.time_averaged_phase_residual = calibration.time_averaged_phase_residual();
    outcome.valid = true;
    return outcome;
}

RunReport run_network(const SimConfig& config, std::uint64_t seed) {
    const auto wall_start = std::chrono::steady_clock::now();
    config.validate();

    RunReport report;
    report.seed = seed;
    report.plan = schedule(config.topology, config.schedule.total_duration_s,
                           config.schedule.session_duration_s, seed);

    for (std::size_t i = 0; i < report.plan.sessions.size(); ++i) {
        const SessionSlot& slot = report.plan.sessions[i];
        SessionOutcome outcome;
        try {
            outcome = run_session(config, slot.pair, static_cast<int>(i), slot.start_s,
                                  slot.duration_s, slot.seed);
        } catch (const std::exception& e) {
            outcome.session_index = static_cast<int>(i);
            outcome.pair = slot.pair;
            outcome.pair_id = config.topology.users[slot.pair[0]].id + "-" +
                              config.topology.users[slot.pair[1]].id;
            outcome.start_s = slot.start_s;
            outcome.duration_s = slot.duration_s;
            outcome.valid = false;
            outcome.invalid_reason = e.what();
        }
        SwitchEvent event;
        event.session_index = outcome.session_index;
        event.pair_id = outcome.pair_id;
        event.t_s = outcome.start_s;
        event.calibration_ok = outcome.valid;
        event.note = outcome.valid ? "session valid" : outcome.invalid_reason;
        report.switch_events.push_back(event);
        report.sessions.push_back(std::move(outcome));
    }

    // accumulate the valid sessions of every pair that appeared in the plan
    std::vector<std::string> pair_order;
    for (const auto& session : report.sessions)
        if (std::find(pair_order.begin(), pair_order.end(), session.pair_id) ==
            pair_order.end())
            pair_order.push_back(session.pair_id);
    for (const std::string& pair_id : pair_order) {
        std::vector<SessionStatistics> parts;
        PairAccumulation acc;
        acc.pair_id = pair_id;
        for (const auto& session : report.sessions) {
            if (session.pair_id != pair_id || !session.valid) continue;
            parts.push_back(session.statistics);
            acc.data_time_s += session.data_time_s;
            acc.sessions_merged += 1;
        }
        if (parts.empty()) continue;
        acc.statistics = merge_sessions(parts);
        acc.keyrate = secure_key_rate(acc.statistics, config.protocol);
        report.accumulated.push_back(std::move(acc));
    }

    const auto wall_end = std::chrono::steady_clock::now();
    report.elapsed_wall_s =
        std::chrono::duration_cast<std::chrono::duration<double>>(wall_end - wall_start)
            .count();
    const std::time_t now = std::time(nullptr);
    char buffer[32];
    std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    report.generated_at = buffer;
    return report;
}

namespace {

nlohmann::ordered_json bound_to_json(const ConfidenceBound& b) {
    return {{"observed", b.observed},     {"trials", b.trials},
            {"rate", b.rate()},           {"lower", b.lower_rate},
            {"upper", b.upper_rate},      {"epsilon_share", b.epsilon_share}};
}

nlohmann::ordered_json bound_table_to_json(const CellBoundTable& table) {
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (IntensityLabel a : kIntensityLabels)
        for (IntensityLabel b : kIntensityLabels) {
            nlohmann::ordered_json cell =
                bound_to_json(table[static_cast<int>(a)][static_cast<int>(b)]);
            cell["a"] = to_string(a);
            cell["b"] = to_string(b);
            cells.push_back(cell);
        }
    return cells;
}

}  // namespace

nlohmann::ordered_json keyrate_to_json(const KeyRateResult& result) {
    nlohmann::ordered_json j;
    j["rate_per_pulse"] = result.rate_per_pulse;
    j["rate_per_pulse_raw"] = result.rate_per_pulse_raw;
    j["rate_bps"] = result.rate_bps;
    j["epsilon_total"] = result.epsilon_total;
    j["decoy"] = {{"y11_lower", result.estimate.y11_lower},
                  {"e11_upper", result.estimate.e11_upper},
                  {"feasible", result.estimate.feasible},
                  {"diagnostics", result.estimate.diagnostics},
                  {"z_gain_bounds", bound_table_to_json(result.estimate.z_gain_bounds)},
                  {"x_error_gain_bounds",
                   bound_table_to_json(result.estimate.x_error_gain_bounds)}};
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (IntensityLabel a : kIntensityLabels)
        for (IntensityLabel b : kIntensityLabels) {
            const ZCellEcho& echo =
                result.z_cells[static_cast<int>(a) * 3 + static_cast<int>(b)];
            cells.push_back({{"a", to_string(a)},
                             {"b", to_string(b)},
                             {"sent", echo.sent},
                             {"coincidences", echo.coincidences},
                             {"errors", echo.errors},
                             {"gain", echo.gain},
                             {"error_rate", echo.error_rate},
                             {"weight", echo.weight}});
        }
    j["z_cells"] = cells;
    j["diagnostics"] = result.diagnostics;
    return j;
}

nlohmann::ordered_json report_to_json(const RunReport& report) {
    nlohmann::ordered_json j;
    j["seed"] = report.seed;

    nlohmann::ordered_json sessions = nlohmann::ordered_json::array();
    for (const auto& s : report.sessions) {
        nlohmann::ordered_json session;
        session["index"] = s.session_index;
        session["pair_id"] = s.pair_id;
        session["start_s"] = s.start_s;
        session["duration_s"] = s.duration_s;
        session["valid"] = s.valid;
        if (!s.valid) session["invalid_reason"] = s.invalid_reason;
        session["simulated_pulses"] = s.simulated_pulses;
        session["dead_time_s"] = s.dead_time_s;
        session["data_time_s"] = s.data_time_s;
        session["time_averaged_overlap"] = s.time_averaged_overlap;
        session["time_averaged_phase_residual"] = s.time_averaged_phase_residual;
        if (s.valid) session["keyrate"] = keyrate_to_json(s.keyrate);
        sessions.push_back(session);
    }
    j["sessions"] = sessions;

    nlohmann::ordered_json accumulated = nlohmann::ordered_json::array();
    for (const auto& acc : report.accumulated) {
        nlohmann::ordered_json a;
        a["pair_id"] = acc.pair_id;
        a["sessions_merged"] = acc.sessions_merged;
        a["data_time_s"] = acc.data_time_s;
        a["keyrate"] = keyrate_to_json(acc.keyrate);
        accumulated.push_back(a);
    }
    j["accumulated"] = accumulated;

    nlohmann::ordered_json events = nlohmann::ordered_json::array();
    for (const auto& e : report.switch_events)
        events.push_back({{"session_index", e.session_index},
                          {"pair_id", e.pair_id},
                          {"t_s", e.t_s},
                          {"calibration_ok", e.calibration_ok},
                          {"note", e.note}});
    j["switch_events"] = events;

    j["metadata"] = {{"generated_at", report.generated_at},
                     {"elapsed_wall_s", report.elapsed_wall_s}};
    return j;
}

}  // namespace mdinet
