#pragma once

#include "mdinet/calibration.hpp"
#include "mdinet/config.hpp"
#include "mdinet/keyrate.hpp"
#include "mdinet/optics.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace mdinet {

struct SessionSlot {
    std::array<int, 2> pair = {0, 1};  // indices into topology.users
    double start_s = 0.0;
    double duration_s = 0.0;
    std::uint64_t seed = 0;
};

struct SessionPlan {
    std::vector<SessionSlot> sessions;
};

/// Random pair per slot, uniform over all user pairs, deterministic under
/// the seed. Repeats are allowed; the switch just reroutes every slot.
SessionPlan schedule(const NetworkTopology& topology, double total_duration_s,
                     double session_duration_s, std::uint64_t seed);

/// One raw pulse-slot record as both users and the relay see it.
struct RawEvent {
    IntensityLabel intensity_a = IntensityLabel::vacuum;
    IntensityLabel intensity_b = IntensityLabel::vacuum;
    Basis basis_a = Basis::Z;
    Basis basis_b = Basis::Z;
    int bit_a = 0;
    int bit_b = 0;
    bool psi_minus = false;
};

struct SiftedRecord {
    std::uint64_t event_index = 0;
    Basis basis = Basis::Z;
    IntensityLabel intensity_a = IntensityLabel::vacuum;
    IntensityLabel intensity_b = IntensityLabel::vacuum;
    int bit_a = 0;
    int bit_b = 0;  // after the designated user's flip
    bool error = false;
};

struct SiftResult {
    std::vector<SiftedRecord> records;
    SessionStatistics statistics;
};

/// Same-basis post-selection and cell accounting. The second user flips
/// every bit (the accepted outcome anticorrelates the pair), so an error is
/// a disagreement after the flip.
SiftResult sift(const std::vector<RawEvent>& events);

/// Cell-wise sum; all inputs must belong to the same pair.
SessionStatistics merge_sessions(const std::vector<SessionStatistics>& sessions);

struct SessionOutcome {
    int session_index = 0;
    std::string pair_id;
    std::array<int, 2> pair = {0, 1};
    double start_s = 0.0;
    double duration_s = 0.0;
    bool valid = false;
    std::string invalid_reason;
    SessionStatistics statistics;  // renormalized to the full pulse budget
    std::uint64_t simulated_pulses = 0;
    KeyRateResult keyrate;
    CalibrationTrace calibration_trace;
    double dead_time_s = 0.0;
    double data_time_s = 0.0;
    double time_averaged_overlap = 0.0;
    double time_averaged_phase_residual = 0.0;
};

/// Switch kick, full recalibration, then chunked data taking with the live
/// feedback loops running between chunks. Desk scale shrinks the simulated
/// pulse count; the collected counts are scaled back up so downstream
/// estimation sees the full-length session.
SessionOutcome run_session(const SimConfig& config, const std::array<int, 2>& pair,
                           int session_index, double start_s, double duration_s,
                           std::uint64_t seed);

struct PairAccumulation {
    std::string pair_id;
    int sessions_merged = 0;
    double data_time_s = 0.0;
    SessionStatistics statistics;
    KeyRateResult keyrate;
};

struct SwitchEvent {
    int session_index = 0;
    std::string pair_id;
    double t_s = 0.0;
    bool calibration_ok = false;
    std::string note;
};

struct RunReport {
    std::uint64_t seed = 0;
    SessionPlan plan;
    std::vector<SessionOutcome> sessions;
    std::vector<PairAccumulation> accumulated;
    std::vector<SwitchEvent> switch_events;
    std::string generated_at;  // wall clock; excluded from determinism checks
    double elapsed_wall_s = 0.0;
};

/// schedule -> run_session loop -> merge -> report. Deterministic under the
/// seed apart from the wall-clock metadata.
RunReport run_network(const SimConfig& config, std::uint64_t seed);

nlohmann::ordered_json keyrate_to_json(const KeyRateResult& result);
nlohmann::ordered_json report_to_json(const RunReport& report);

}  // namespace mdinet
