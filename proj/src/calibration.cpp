#include "mdinet/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace mdinet {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_pi(double phi) {
    phi = std::fmod(phi + kPi, 2.0 * kPi);
    if (phi < 0.0) phi += 2.0 * kPi;
    return phi - kPi;
}

}  // namespace

void DriftModel::validate() const {
    if (phase_drift_rad_per_sqrt_s < 0.0 || wavelength_drift_pm_per_hour < 0.0 ||
        timing_drift_ps_per_hour < 0.0 || polarization_decay_per_hour < 0.0)
        throw ConfigError("drift: scales must be >= 0");
    if (switch_kick.timing_spread_ps < 0.0)
        throw ConfigError("drift: switch kick timing spread must be >= 0");
    if (switch_kick.overlap_min < 0.0 || switch_kick.overlap_max > 1.0 ||
        switch_kick.overlap_min > switch_kick.overlap_max)
        throw ConfigError("drift: switch kick overlap range must lie in [0,1] ordered");
}

void ControllerConfig::validate() const {
    if (phase_gain <= 0.0 || phase_gain > 1.0)
        throw ConfigError("feedback: phase gain must lie in (0,1]");
    if (phase_dither_rad <= 0.0 || phase_tolerance_rad <= 0.0)
        throw ConfigError("feedback: phase dither and tolerance must be > 0");
    if (scan_coarse_step_c <= 0.0 || scan_fine_step_c <= 0.0 || scan_span_c <= 0.0)
        throw ConfigError("feedback: scan steps and span must be > 0");
    if (delay_step_ps <= 0.0 || delay_span_ps <= 0.0)
        throw ConfigError("feedback: delay step and span must be > 0");
    if (hom_pulses_per_point == 0)
        throw ConfigError("feedback: scan needs at least one pulse per point");
    if (polarization_tolerance <= 0.0 || polarization_tolerance > 1.0)
        throw ConfigError("feedback: polarization tolerance must lie in (0,1]");
}

void phase_feedback_step(const PhaseMonitorReading& reading, PhaseLoopState& state,
                         const ControllerConfig& config) {
    const double ratio = reading.ratio();
    if (!state.have_pending) {
        // first half of the dither cycle: remember the + side
        state.pending_ratio = ratio;
        state.have_pending = true;
        state.dither_sign = -1;
        return;
    }
    const double ratio_plus = state.pending_ratio;
    const double ratio_minus = ratio;
    state.have_pending = false;
    state.dither_sign = +1;

    // the two dither sides average to (1 - cos(phi) cos(d)) / 2, which
    // inverts to |phi| with the dither contribution removed
    const double mean_ratio = std::clamp(0.5 * (ratio_plus + ratio_minus), 0.0, 1.0);
    const double cos_dither = std::cos(config.phase_dither_rad);
    const double cos_phi = std::clamp((1.0 - 2.0 * mean_ratio) / cos_dither, -1.0, 1.0);
    const double magnitude = std::acos(cos_phi);
    if (magnitude < 0.5 * config.phase_tolerance_rad) {
        state.locked = true;
        return;
    }
    state.locked = false;
    const double sign = ratio_plus <= ratio_minus ? +1.0 : -1.0;
    double next = state.command_rad + sign * config.phase_gain * magnitude;
    if (next > kPi || next < -kPi) {
        next = wrap_pi(next);
        state.saturated = true;
    }
    state.command_rad = next;
}

void timing_sync(double measured_offset_ps, TimingState& state,
                 const ControllerConfig& config) {
    if (std::abs(measured_offset_ps) > config.delay_span_ps)
        throw CalibrationError("timing offset beyond delay-chip span");
    const double quanta = std::round(measured_offset_ps / config.delay_step_ps);
    if (quanta != 0.0) state.delay_command_ps += quanta * config.delay_step_ps;
    state.converged = std::abs(measured_offset_ps - quanta * config.delay_step_ps) <=
                      config.delay_step_ps;
}

void polarization_feedback(double reflected_power, PolarizationLoopState& state,
                           const ControllerConfig& config) {
    if (reflected_power < 0.0)
        throw DomainError("polarization feedback: reflected power must be >= 0");
    const double threshold = 1.0 - config.polarization_tolerance;
    if (reflected_power <= threshold * 0.9) {
        state.converged = true;
        state.last_power = reflected_power;
        return;
    }
    state.converged = false;
    if (state.last_power >= 0.0 && reflected_power >= state.last_power) {
        state.direction = -state.direction;
        state.step_rad *= 0.6;
    }
    state.last_power = reflected_power;
    state.command_rad += state.direction * state.step_rad;
}

WavelengthScanResult wavelength_calibrate(const std::function<double(double)>& hom_source,
                                          double center_c, const ControllerConfig& config) {
    WavelengthScanResult result;

    auto scan = [&](double lo, double hi, double step) {
        std::vector<ScanPoint> points;
        const int n = static_cast<int>(std::floor((hi - lo) / step + 0.5)) + 1;
        points.reserve(n);
        for (int i = 0; i < n; ++i) {
            const double t = lo + i * step;
            points.push_back({t, hom_source(t)});
        }
        return points;
    };

    const auto coarse = scan(center_c - config.scan_span_c, center_c + config.scan_span_c,
                             config.scan_coarse_step_c);
    auto coarse_min = std::min_element(coarse.begin(), coarse.end(),
                                       [](const ScanPoint& a, const ScanPoint& b) {
                                           return a.value < b.value;
                                       });
    result.curve = coarse;
    if (coarse_min->value > config.dip_found_threshold)
        throw CalibrationError("interference dip not found in temperature scan");

    const auto fine = scan(coarse_min->temperature_c - config.scan_fine_span_c,
                           coarse_min->temperature_c + config.scan_fine_span_c,
                           config.scan_fine_step_c);
    result.curve.insert(result.curve.end(), fine.begin(), fine.end());

    std::size_t best = 0;
    for (std::size_t i = 1; i < fine.size(); ++i)
        if (fine[i].value < fine[best].value) best = i;

    result.minimum_value = fine[best].value;
    result.optimal_temperature_c = fine[best].temperature_c;
    if (best > 0 && best + 1 < fine.size()) {
        // parabola through the minimum and its neighbours
        const double y0 = fine[best - 1].value;
        const double y1 = fine[best].value;
        const double y2 = fine[best + 1].value;
        const double denom = y0 - 2.0 * y1 + y2;
        if (denom > 1e-12) {
            double shift = 0.5 * (y0 - y2) / denom;
            shift = std::clamp(shift, -1.0, 1.0);
            result.optimal_temperature_c += shift * config.scan_fine_step_c;
        }
    }
    return result;
}

void write_trace_csv(std::ostream& out, const CalibrationTrace& trace) {
    out << "t_seconds,loop_name,command,residual\n";
    for (const auto& entry : trace)
        out << entry.t_seconds << ',' << entry.loop_name << ',' << entry.command << ','
            << entry.residual << "\n";
}

CalibrationSession::CalibrationSession(const DriftModel& drift,
                                       const ControllerConfig& config,
                                       const DetectorPair& detectors, double clock_rate_hz,
                                       std::uint64_t seed)
    : drift_(drift),
      config_(config),
      detectors_(detectors),
      clock_rate_hz_(clock_rate_hz),
      rng_(derive_stream(seed, kStreamPlant)) {
    drift_.validate();
    config_.validate();
    for (auto& pol : state_.polarization) pol.step_rad = config_.polarization_initial_step_rad;
    wavelength_ramp_sign_ = {rng_.bernoulli(0.5) ? 1.0 : -1.0,
                             rng_.bernoulli(0.5) ? 1.0 : -1.0};
    timing_ramp_sign_ = rng_.bernoulli(0.5) ? 1.0 : -1.0;
}

void CalibrationSession::apply_switch_kick() {
    const auto& kick = drift_.switch_kick;
    timing_offset_ps_ += (2.0 * rng_.uniform() - 1.0) * kick.timing_spread_ps;
    for (int arm = 0; arm < 2; ++arm) {
        const double overlap =
            kick.overlap_min + rng_.uniform() * (kick.overlap_max - kick.overlap_min);
        polarization_misset_[arm] =
            state_.polarization[arm].command_rad + std::acos(std::sqrt(overlap));
        state_.polarization[arm].converged = false;
        state_.polarization[arm].last_power = -1.0;
        state_.polarization[arm].step_rad = config_.polarization_initial_step_rad;
    }
    // reconnection also scrambles the reference phase
    for (int user = 0; user < 2; ++user) amzi_phase_[user] = (rng_.uniform() - 0.5) * 2.0 * kPi;
    state_.wavelength_converged = false;
}

PhaseMonitorReading CalibrationSession::measure_phase_ports(int user) {
    const PhaseLoopState& loop = state_.phase[user];
    // the reading is taken at command + dither_sign * dither
    const double at = loop.command_rad + loop.dither_sign * config_.phase_dither_rad;
    const double residual = wrap_pi(amzi_phase_[user] - at);
    PhaseMonitorReading reading;
    const double c = std::cos(residual);
    reading.power_port_1 =
        std::max(0.0, 0.5 * (1.0 + c) * (1.0 + config_.power_meter_noise * rng_.gaussian()));
    reading.power_port_2 =
        std::max(0.0, 0.5 * (1.0 - c) * (1.0 + config_.power_meter_noise * rng_.gaussian()));
    if (reading.power_port_1 <= 0.0 && reading.power_port_2 <= 0.0)
        reading.power_port_1 = 1e-12;
    return reading;
}

double CalibrationSession::measure_timing() {
    return timing_offset_ps_ - state_.timing.delay_command_ps +
           config_.timing_noise_ps * rng_.gaussian();
}

double CalibrationSession::measure_reflected_power(int arm) {
    const double residual = polarization_misset_[arm] - state_.polarization[arm].command_rad;
    const double aligned = polarization_max_[arm] * std::cos(residual) * std::cos(residual);
    const double power = (1.0 - aligned) * (1.0 + config_.power_meter_noise * rng_.gaussian());
    return std::max(0.0, power);
}

double CalibrationSession::phase_residual_rad(int user) const {
    return wrap_pi(amzi_phase_[user] - state_.phase[user].command_rad);
}

double CalibrationSession::max_phase_residual_rad() const {
    return std::max(std::abs(phase_residual_rad(0)), std::abs(phase_residual_rad(1)));
}

DistinguishabilityState CalibrationSession::distinguishability() const {
    DistinguishabilityState d;
    const double w0 = laser_offset_pm_[0] + kTemperatureSlopePmPerC * state_.temperature_c[0];
    const double w1 = laser_offset_pm_[1] + kTemperatureSlopePmPerC * state_.temperature_c[1];
    d.delta_wavelength_pm = w0 - w1;
    d.delta_time_ps = timing_offset_ps_ - state_.timing.delay_command_ps;
    double overlap = 1.0;
    for (int arm = 0; arm < 2; ++arm) {
        const double residual =
            polarization_misset_[arm] - state_.polarization[arm].command_rad;
        overlap *= polarization_max_[arm] * std::cos(residual) * std::cos(residual);
    }
    d.polarization_overlap = std::clamp(overlap, 0.0, 1.0);
    d.intensity_ratio = 1.0;  // the attenuators equalize the calibration pulses
    return d;
}

double CalibrationSession::hom_value_at(double temperature_c, int pulse_multiplier) {
    state_.temperature_c[1] = temperature_c;  // scanning the second laser
    const std::uint64_t pulses = config_.hom_pulses_per_point *
                                 static_cast<std::uint64_t>(std::max(1, pulse_multiplier));
    charge(config_.scan_settle_s + double(pulses) / clock_rate_hz_);
    const DistinguishabilityState dist = distinguishability();
    const std::uint64_t seed =
        derive_stream(rng_.next_u64(), kStreamCalibration, hom_counter_++);
    return hom_coincidence_value(dist, config_.hom_intensity, detectors_, pulses, seed);
}

void CalibrationSession::charge(double seconds) {
    elapsed_s_ += seconds;
    dead_time_s_ += seconds;
}

void CalibrationSession::record(const std::string& loop, double command, double residual) {
    trace_.push_back({elapsed_s_, loop, command, residual});
}

void CalibrationSession::run_timing() {
    const double measured = measure_timing();
    if (std::abs(measured) <= config_.delay_step_ps) {
        state_.timing.converged = true;
        record("timing", state_.timing.delay_command_ps, measured);
        return;
    }
    timing_sync(measured, state_.timing, config_);
    charge(config_.step_cost_s);
    const double after = measure_timing();
    state_.timing.converged = std::abs(after) <= config_.delay_step_ps;
    record("timing", state_.timing.delay_command_ps, after);
}

void CalibrationSession::run_polarization(int arm) {
    PolarizationLoopState& loop = state_.polarization[arm];
    loop.last_power = -1.0;
    loop.step_rad = config_.polarization_initial_step_rad;
    const std::string name = arm == 0 ? "polarization_a" : "polarization_b";
    for (int step = 0; step < config_.polarization_max_steps; ++step) {
        const double power = measure_reflected_power(arm);
        polarization_feedback(power, loop, config_);
        if (step % 8 == 0 || loop.converged)
            record(name, loop.command_rad,
                   polarization_misset_[arm] - loop.command_rad);
        if (loop.converged) return;
        charge(config_.step_cost_s);
    }
    record(name, loop.command_rad, polarization_misset_[arm] - loop.command_rad);
}

void CalibrationSession::run_phase_lock(int user) {
    PhaseLoopState& loop = state_.phase[user];
    loop.locked = false;
    loop.have_pending = false;
    loop.dither_sign = +1;
    const std::string name = user == 0 ? "phase_a" : "phase_b";
    for (int step = 0; step < config_.phase_max_steps; ++step) {
        const PhaseMonitorReading reading = measure_phase_ports(user);
        phase_feedback_step(reading, loop, config_);
        if (step % 8 == 0 || loop.locked)
            record(name, loop.command_rad, phase_residual_rad(user));
        if (loop.locked) return;
        charge(config_.step_cost_s);
    }
    record(name, loop.command_rad, phase_residual_rad(user));
}

void CalibrationSession::calibrate_once(CalibrationOutcome& outcome) {
    // timing first: the interference dip needs overlapping pulses
    run_timing();
    if (!state_.timing.converged) outcome.skipped = false;

    // polarization second: no dip without a common polarization mode
    for (int arm = 0; arm < 2; ++arm) {
        const double power = measure_reflected_power(arm);
        const double threshold = (1.0 - config_.polarization_tolerance) * 0.9;
        if (power <= threshold) {
            state_.polarization[arm].converged = true;
            record(arm == 0 ? "polarization_a" : "polarization_b",
                   state_.polarization[arm].command_rad, power);
            continue;
        }
        outcome.skipped = false;
        run_polarization(arm);
    }

    // wavelength third, via the dip itself; the skip check buys extra pulses
    // so measurement noise cannot mimic a degraded dip
    const double current = hom_value_at(state_.temperature_c[1], 4);
    record("wavelength", state_.temperature_c[1], current);
    if (current > config_.dip_skip_threshold) {
        outcome.skipped = false;
        const WavelengthScanResult scan = wavelength_calibrate(
            [this](double t) { return hom_value_at(t); }, state_.temperature_c[1], config_);
        state_.temperature_c[1] = scan.optimal_temperature_c;
        record("wavelength", scan.optimal_temperature_c, scan.minimum_value);
    }
    state_.wavelength_converged = true;

    // phase last; it rides on the stabilization laser, not the dip
    for (int user = 0; user < 2; ++user) {
        PhaseLoopState& loop = state_.phase[user];
        // probe both dither sides without commanding anything
        loop.have_pending = false;
        loop.dither_sign = +1;
        const double ratio_plus = measure_phase_ports(user).ratio();
        loop.dither_sign = -1;
        const double ratio_minus = measure_phase_ports(user).ratio();
        loop.dither_sign = +1;
        const double mean_ratio = std::clamp(0.5 * (ratio_plus + ratio_minus), 0.0, 1.0);
        const double cos_phi = std::clamp(
            (1.0 - 2.0 * mean_ratio) / std::cos(config_.phase_dither_rad), -1.0, 1.0);
        if (std::acos(cos_phi) < config_.phase_tolerance_rad) {
            loop.locked = true;
            record(user == 0 ? "phase_a" : "phase_b", loop.command_rad,
                   phase_residual_rad(user));
            continue;
        }
        outcome.skipped = false;
        run_phase_lock(user);
    }
}

CalibrationOutcome CalibrationSession::recalibrate() {
    CalibrationOutcome outcome;
    const double dead_before = dead_time_s_;
    try {
        calibrate_once(outcome);
    } catch (const CalibrationError&) {
        // one full retry, then propagate
        calibrate_once(outcome);
    }
    outcome.residual = distinguishability();
    outcome.max_phase_residual_rad = max_phase_residual_rad();
    outcome.dead_time_s = dead_time_s_ - dead_before;
    return outcome;
}

void CalibrationSession::advance(double dt_s) {
    double remaining = dt_s;
    while (remaining > 0.0) {
        const double step = std::min(remaining, config_.feedback_interval_s);
        remaining -= step;
        elapsed_s_ += step;

        // drift
        const double sqrt_step = std::sqrt(step);
        const double hours = step / 3600.0;
        for (int u = 0; u < 2; ++u) {
            amzi_phase_[u] =
                wrap_pi(amzi_phase_[u] +
                        drift_.phase_drift_rad_per_sqrt_s * sqrt_step * rng_.gaussian());
            laser_offset_pm_[u] +=
                drift_.wavelength_drift_pm_per_hour * hours * wavelength_ramp_sign_[u];
        }
        timing_offset_ps_ += drift_.timing_drift_ps_per_hour * hours * timing_ramp_sign_;
        const double decay_angle = std::sqrt(drift_.polarization_decay_per_hour * hours);
        for (int arm = 0; arm < 2; ++arm)
            polarization_misset_[arm] += decay_angle * rng_.gaussian();

        // live phase loop, one reading per interval per user
        for (int user = 0; user < 2; ++user) {
            const PhaseMonitorReading reading = measure_phase_ports(user);
            phase_feedback_step(reading, state_.phase[user], config_);
        }

        // periodic polarization/timing touch-up on their own monitors
        if (elapsed_s_ >= next_touchup_s_) {
            next_touchup_s_ = elapsed_s_ + config_.touchup_interval_s;
            for (int arm = 0; arm < 2; ++arm) {
                PolarizationLoopState& loop = state_.polarization[arm];
                loop.step_rad = std::max(loop.step_rad, 0.02);
                loop.last_power = -1.0;
                for (int i = 0; i < 8; ++i) {
                    polarization_feedback(measure_reflected_power(arm), loop, config_);
                    if (loop.converged) break;
                }
            }
            const double measured = measure_timing();
            if (std::abs(measured) > config_.delay_step_ps)
                timing_sync(measured, state_.timing, config_);
            record("touchup", 0.0, distinguishability().mode_overlap());
        }

        const double zeta = distinguishability().mode_overlap();
        overlap_time_integral_ += zeta * step;
        phase_time_integral_ += max_phase_residual_rad() * step;
        overlap_time_total_ += step;
    }
}

double CalibrationSession::time_averaged_overlap() const {
    return overlap_time_total_ > 0.0 ? overlap_time_integral_ / overlap_time_total_ : 1.0;
}

double CalibrationSession::time_averaged_phase_residual() const {
    return overlap_time_total_ > 0.0 ? phase_time_integral_ / overlap_time_total_ : 0.0;
}

}  // namespace mdinet
