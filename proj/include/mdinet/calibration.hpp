#pragma once

#include "mdinet/core.hpp"
#include "mdinet/optics.hpp"
#include "mdinet/rng.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace mdinet {

class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Laser wavelength response to its temperature actuator: 0.8 pm per 0.01 C.
inline constexpr double kTemperatureSlopePmPerC = 80.0;

/// Kick applied to the connected pair whenever the optical switch reroutes.
struct SwitchKickModel {
    double timing_spread_ps = 500.0;  // uniform in +-spread
    double overlap_min = 0.70;        // polarization overlap lands uniformly here
    double overlap_max = 0.95;
};

struct DriftModel {
    double phase_drift_rad_per_sqrt_s = 0.005;   // random walk per user AMZI
    double wavelength_drift_pm_per_hour = 0.05;  // steady ramp per laser
    double timing_drift_ps_per_hour = 20.0;      // steady ramp
    double polarization_decay_per_hour = 0.01;   // expected overlap loss when untouched
    SwitchKickModel switch_kick;

    void validate() const;
};

// --- controller knobs -------------------------------------------------------

struct ControllerConfig {
    double phase_gain = 0.5;
    double phase_dither_rad = 0.05;
    double phase_tolerance_rad = 0.01;
    int phase_max_steps = 500;
    double power_meter_noise = 0.01;  // multiplicative

    double scan_span_c = 2.0;
    double scan_coarse_step_c = 0.05;
    double scan_fine_step_c = 0.01;
    double scan_fine_span_c = 0.15;
    double dip_found_threshold = 0.9;
    double dip_skip_threshold = 0.55;  // dip already good, skip the scan
    std::uint64_t hom_pulses_per_point = 300000;
    double hom_intensity = 0.2;  // arrival intensity per arm while calibrating

    double delay_step_ps = 10.0;
    double delay_span_ps = 10000.0;
    double timing_noise_ps = 1.0;

    double polarization_tolerance = 0.999;  // fraction of the achievable maximum
    int polarization_max_steps = 200;
    double polarization_initial_step_rad = 0.2;

    double feedback_interval_s = 1.0;   // phase loop cadence during data taking
    double touchup_interval_s = 60.0;   // polarization/timing cadence during data
    double step_cost_s = 0.01;          // charged per actuator step inside recalibration
    double scan_settle_s = 0.1;         // thermal settle per scan point

    void validate() const;
};

// --- loop states ------------------------------------------------------------

struct PhaseMonitorReading {
    double power_port_1 = 0.0;
    double power_port_2 = 0.0;

    double ratio() const {  // P2 / (P1 + P2); zero at the lock point
        const double total = power_port_1 + power_port_2;
        if (total <= 0.0) throw DomainError("phase reading: both ports zero");
        return power_port_2 / total;
    }
};

struct PhaseLoopState {
    double command_rad = 0.0;
    int dither_sign = +1;       // probe side the next reading is taken on
    double pending_ratio = 0.0; // ratio measured on the + side of the dither
    bool have_pending = false;
    bool locked = false;
    bool saturated = false;     // command wrapped around the actuator range
};

/// Consumes one monitor reading taken at (command + dither_sign * dither) and
/// updates the loop: the two dither sides give the correction its sign, the
/// ratio gives its size. Locks at phi = 0 where port 2 goes dark.
void phase_feedback_step(const PhaseMonitorReading& reading, PhaseLoopState& state,
                         const ControllerConfig& config);

struct TimingState {
    double delay_command_ps = 0.0;
    bool converged = false;
};

/// Quantized delay-chip correction; residual below one chip step.
void timing_sync(double measured_offset_ps, TimingState& state,
                 const ControllerConfig& config);

struct PolarizationLoopState {
    double command_rad = 0.0;
    double step_rad = 0.2;
    int direction = +1;
    double last_power = -1.0;  // negative: no measurement consumed yet
    bool converged = false;
};

/// One descent step on the PBS reflected power: keep walking while each
/// measurement improves on the previous one, otherwise turn around with a
/// smaller step.
void polarization_feedback(double reflected_power, PolarizationLoopState& state,
                           const ControllerConfig& config);

struct ScanPoint {
    double temperature_c = 0.0;
    double value = 0.0;
};

struct WavelengthScanResult {
    double optimal_temperature_c = 0.0;
    double minimum_value = 1.0;
    std::vector<ScanPoint> curve;
};

/// Coarse + fine temperature scan of the interference dip with a parabolic
/// vertex refinement on the three lowest fine points. Throws
/// CalibrationError when no dip is visible anywhere in the scan window.
WavelengthScanResult wavelength_calibrate(const std::function<double(double)>& hom_source,
                                          double center_c, const ControllerConfig& config);

/// Aggregated actuator state of one connected pair.
struct ControllerState {
    std::array<PhaseLoopState, 2> phase;          // per user AMZI
    std::array<double, 2> temperature_c = {0.0, 0.0};  // per laser
    TimingState timing;
    std::array<PolarizationLoopState, 2> polarization;  // per BSM input arm
    bool wavelength_converged = false;
};

struct TraceEntry {
    double t_seconds = 0.0;
    std::string loop_name;
    double command = 0.0;
    double residual = 0.0;
};

using CalibrationTrace = std::vector<TraceEntry>;

void write_trace_csv(std::ostream& out, const CalibrationTrace& trace);

struct CalibrationOutcome {
    DistinguishabilityState residual;
    double max_phase_residual_rad = 0.0;
    double dead_time_s = 0.0;
    bool skipped = true;  // true when every loop was already in tolerance
};

/// Drifting physical truth of one connected pair plus the feedback loops
/// acting on it. Owns its random stream; all measurements are reproducible
/// for a fixed seed.
class CalibrationSession {
public:
    CalibrationSession(const DriftModel& drift, const ControllerConfig& config,
                       const DetectorPair& detectors, double clock_rate_hz,
                       std::uint64_t seed);

    void apply_switch_kick();

    /// Timing -> polarization -> wavelength -> phase, in that order; the
    /// interference dip is only meaningful once timing and polarization sit
    /// inside tolerance. Retries the whole sequence once if the dip cannot
    /// be found, then throws CalibrationError.
    CalibrationOutcome recalibrate();

    /// Advances plant drift over dt while running the cadenced loops the way
    /// a live session does (phase every feedback interval, polarization and
    /// timing touch-ups every touch-up interval).
    void advance(double dt_s);

    DistinguishabilityState distinguishability() const;
    double phase_residual_rad(int user) const;
    double max_phase_residual_rad() const;

    // Measured coincidence value at a commanded temperature; moves the
    // actuator. The multiplier buys extra pulses for one-off checks.
    double hom_value_at(double temperature_c, int pulse_multiplier = 1);

    const ControllerState& controller() const { return state_; }
    const CalibrationTrace& trace() const { return trace_; }
    double elapsed_s() const { return elapsed_s_; }
    double dead_time_s() const { return dead_time_s_; }
    double time_averaged_overlap() const;
    double time_averaged_phase_residual() const;

    // test hooks
    void disable_polarization_actuator(int arm) { polarization_max_[arm] = 0.0; }
    void force_phase(int user, double value) { amzi_phase_[user] = value; }
    void force_wavelength_offset(int laser, double pm) { laser_offset_pm_[laser] = pm; }
    void force_timing_offset(double ps) { timing_offset_ps_ = ps; }
    void force_polarization_misset(int arm, double rad) { polarization_misset_[arm] = rad; }

private:
    PhaseMonitorReading measure_phase_ports(int user);
    double measure_timing();
    double measure_reflected_power(int arm);
    void run_phase_lock(int user);
    void run_polarization(int arm);
    void run_timing();
    void charge(double seconds);
    void record(const std::string& loop, double command, double residual);
    void calibrate_once(CalibrationOutcome& outcome);

    DriftModel drift_;
    ControllerConfig config_;
    DetectorPair detectors_;
    double clock_rate_hz_;
    Rng rng_;
    std::uint64_t hom_counter_ = 0;

    // hidden truth
    std::array<double, 2> amzi_phase_ = {0.0, 0.0};
    std::array<double, 2> laser_offset_pm_ = {0.0, 0.0};
    std::array<double, 2> wavelength_ramp_sign_ = {+1.0, -1.0};
    std::array<double, 2> polarization_misset_ = {0.0, 0.0};
    std::array<double, 2> polarization_max_ = {1.0, 1.0};
    double timing_offset_ps_ = 0.0;
    double timing_ramp_sign_ = +1.0;

    ControllerState state_;
    CalibrationTrace trace_;
    double elapsed_s_ = 0.0;
    double dead_time_s_ = 0.0;
    double overlap_time_integral_ = 0.0;
    double phase_time_integral_ = 0.0;
    double overlap_time_total_ = 0.0;
    double next_touchup_s_ = 0.0;
};

}  // namespace mdinet
