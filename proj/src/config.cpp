#include "mdinet/config.hpp"

#include <fstream>
#include <set>

namespace mdinet {

using nlohmann::json;

void NetworkTopology::validate() const {
    if (users.size() < 2) throw ConfigError("topology.users: at least two users required");
    std::set<std::string> ids;
    for (const auto& user : users) {
        if (user.id.empty()) throw ConfigError("topology.users: empty id");
        if (!ids.insert(user.id).second)
            throw ConfigError("topology.users: duplicate id '" + user.id + "'");
        user.channel.validate();
    }
    detectors[0].validate();
    detectors[1].validate();
    if (bs_insertion_loss_db < 0.0)
        throw ConfigError("topology.bs_insertion_loss_db: must be >= 0");
    if (optical_switch.connection_loss_db < 0.0)
        throw ConfigError("topology.switch.connection_loss_db: must be >= 0");
    if (optical_switch.input_ports < static_cast<int>(users.size()))
        throw ConfigError("topology.switch: not enough input ports for the users");
}

int NetworkTopology::user_index(const std::string& id) const {
    for (std::size_t i = 0; i < users.size(); ++i)
        if (users[i].id == id) return static_cast<int>(i);
    return -1;
}

void ScheduleConfig::validate() const {
    if (total_duration_s < 0.0) throw ConfigError("schedule.total_duration_s: must be >= 0");
    if (session_duration_s <= 0.0)
        throw ConfigError("schedule.session_duration_s: must be > 0");
    if (desk_scale <= 0.0 || desk_scale > 1.0)
        throw ConfigError("schedule.desk_scale: must lie in (0,1]");
    if (chunk_duration_s <= 0.0) throw ConfigError("schedule.chunk_duration_s: must be > 0");
}

void SimConfig::validate() const {
    protocol.validate();
    topology.validate();
    drift.validate();
    feedback.validate();
    schedule.validate();
}

SimConfig default_config() {
    SimConfig config;

    auto make_channel = [&](double fiber_db, double misalignment) {
        ChannelModel ch;
        ch.fiber_loss_db = fiber_db;
        ch.switch_loss_db = 1.0;
        ch.dwdm_loss_db = 0.7;
        ch.bs_insertion_loss_share_db = 0.7;
        ch.misalignment_error = misalignment;
        return ch;
    };
    // misalignment per user fitted once against the field key rates
    config.topology.users = {
        {"U1", make_channel(5.1, 0.0085)},
        {"U2", make_channel(9.2, 0.0085)},
        {"U3", make_channel(8.1, 0.0193)},
    };
    config.topology.detectors[0] = DetectorModel{0.64, 100.0, 1.7e-9};
    config.topology.detectors[1] = DetectorModel{0.66, 100.0, 1.7e-9};
    return config;
}

namespace {

void require_keys(const json& j, const std::string& path,
                  const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& item : j.items())
        if (!allowed.count(item.key()))
            throw ConfigError(path + "." + item.key() + ": unknown key");
}

double get_number(const json& j, const std::string& path, const std::string& key,
                  double fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
    return v.get<double>();
}

std::uint64_t get_count(const json& j, const std::string& path, const std::string& key,
                        std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_unsigned() && !v.is_number_integer())
        throw ConfigError(path + "." + key + ": expected an integer");
    return v.get<std::uint64_t>();
}

int get_int(const json& j, const std::string& path, const std::string& key, int fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(path + "." + key + ": expected an integer");
    return v.get<int>();
}

void parse_intensity(const json& j, const std::string& path, IntensitySetting& setting) {
    require_keys(j, path, {"mean_photon_number", "send_probability"});
    setting.mean_photon_number =
        get_number(j, path, "mean_photon_number", setting.mean_photon_number);
    setting.send_probability =
        get_number(j, path, "send_probability", setting.send_probability);
}

void parse_protocol(const json& j, SimConfig& config) {
    const std::string path = "protocol";
    require_keys(j, path,
                 {"intensities", "x_basis_probability", "clock_rate_hz",
                  "coincidence_window_s", "error_correction_efficiency",
                  "failure_probability"});
    ProtocolParams& p = config.protocol;
    if (j.contains("intensities")) {
        const json& ints = j.at("intensities");
        require_keys(ints, path + ".intensities", {"vacuum", "decoy", "signal"});
        for (IntensityLabel label : kIntensityLabels) {
            const char* name = to_string(label);
            if (ints.contains(name))
                parse_intensity(ints.at(name), path + ".intensities." + name,
                                p.intensities[static_cast<int>(label)]);
        }
    }
    if (j.contains("x_basis_probability")) {
        const json& bp = j.at("x_basis_probability");
        require_keys(bp, path + ".x_basis_probability", {"vacuum", "decoy", "signal"});
        for (IntensityLabel label : kIntensityLabels) {
            const char* name = to_string(label);
            p.basis.x_probability[static_cast<int>(label)] =
                get_number(bp, path + ".x_basis_probability", name,
                           p.basis.x_probability[static_cast<int>(label)]);
        }
    }
    p.clock_rate_hz = get_number(j, path, "clock_rate_hz", p.clock_rate_hz);
    p.coincidence_window_s =
        get_number(j, path, "coincidence_window_s", p.coincidence_window_s);
    p.error_correction_efficiency =
        get_number(j, path, "error_correction_efficiency", p.error_correction_efficiency);
    p.failure_probability = get_number(j, path, "failure_probability", p.failure_probability);
}

void parse_topology(const json& j, SimConfig& config) {
    const std::string path = "topology";
    require_keys(j, path,
                 {"users", "detectors", "bs_insertion_loss_db", "switch_loss_db",
                  "dwdm_loss_db", "misalignment_error", "switch_ports"});
    NetworkTopology& topo = config.topology;

    const double switch_loss = get_number(j, path, "switch_loss_db", 1.0);
    const double dwdm_loss = get_number(j, path, "dwdm_loss_db", 0.7);
    topo.bs_insertion_loss_db =
        get_number(j, path, "bs_insertion_loss_db", topo.bs_insertion_loss_db);
    const double default_misalignment = get_number(j, path, "misalignment_error", 0.012);
    topo.optical_switch.connection_loss_db = switch_loss;

    if (j.contains("switch_ports")) {
        const json& sp = j.at("switch_ports");
        if (!sp.is_string()) throw ConfigError("topology.switch_ports: expected 'NxM'");
        const std::string s = sp.get<std::string>();
        const auto x = s.find('x');
        if (x == std::string::npos)
            throw ConfigError("topology.switch_ports: expected 'NxM'");
        try {
            topo.optical_switch.input_ports = std::stoi(s.substr(0, x));
            topo.optical_switch.output_ports = std::stoi(s.substr(x + 1));
        } catch (const std::exception&) {
            throw ConfigError("topology.switch_ports: expected 'NxM'");
        }
    }

    if (j.contains("users")) {
        const json& users = j.at("users");
        if (!users.is_array()) throw ConfigError("topology.users: expected an array");
        topo.users.clear();
        int index = 0;
        for (const json& u : users) {
            const std::string upath = path + ".users[" + std::to_string(index++) + "]";
            require_keys(u, upath, {"id", "fiber_loss_db", "misalignment_error"});
            if (!u.contains("id") || !u.at("id").is_string())
                throw ConfigError(upath + ".id: required string");
            UserNode node;
            node.id = u.at("id").get<std::string>();
            node.channel.fiber_loss_db = get_number(u, upath, "fiber_loss_db", 0.0);
            node.channel.switch_loss_db = switch_loss;
            node.channel.dwdm_loss_db = dwdm_loss;
            node.channel.bs_insertion_loss_share_db = topo.bs_insertion_loss_db / 2.0;
            node.channel.misalignment_error =
                get_number(u, upath, "misalignment_error", default_misalignment);
            topo.users.push_back(node);
        }
    } else {
        for (auto& user : topo.users) {
            user.channel.switch_loss_db = switch_loss;
            user.channel.dwdm_loss_db = dwdm_loss;
            user.channel.bs_insertion_loss_share_db = topo.bs_insertion_loss_db / 2.0;
            user.channel.misalignment_error = default_misalignment;
        }
    }

    if (j.contains("detectors")) {
        const json& dets = j.at("detectors");
        if (!dets.is_array() || dets.size() != 2)
            throw ConfigError("topology.detectors: expected exactly two entries");
        for (int d = 0; d < 2; ++d) {
            const std::string dpath = path + ".detectors[" + std::to_string(d) + "]";
            require_keys(dets[d], dpath,
                         {"efficiency", "dark_count_rate_hz", "gate_window_s"});
            topo.detectors[d].efficiency =
                get_number(dets[d], dpath, "efficiency", topo.detectors[d].efficiency);
            topo.detectors[d].dark_count_rate_hz = get_number(
                dets[d], dpath, "dark_count_rate_hz", topo.detectors[d].dark_count_rate_hz);
            topo.detectors[d].gate_window_s =
                get_number(dets[d], dpath, "gate_window_s", topo.detectors[d].gate_window_s);
        }
    }
    // detector gates default to the coincidence window
    for (int d = 0; d < 2; ++d)
        if (!j.contains("detectors") || !j.at("detectors")[d].contains("gate_window_s"))
            topo.detectors[d].gate_window_s = config.protocol.coincidence_window_s;
}

void parse_drift(const json& j, SimConfig& config) {
    const std::string path = "drift";
    require_keys(j, path,
                 {"phase_drift_rad_per_sqrt_s", "wavelength_drift_pm_per_hour",
                  "timing_drift_ps_per_hour", "polarization_decay_per_hour", "switch_kick"});
    DriftModel& d = config.drift;
    d.phase_drift_rad_per_sqrt_s =
        get_number(j, path, "phase_drift_rad_per_sqrt_s", d.phase_drift_rad_per_sqrt_s);
    d.wavelength_drift_pm_per_hour =
        get_number(j, path, "wavelength_drift_pm_per_hour", d.wavelength_drift_pm_per_hour);
    d.timing_drift_ps_per_hour =
        get_number(j, path, "timing_drift_ps_per_hour", d.timing_drift_ps_per_hour);
    d.polarization_decay_per_hour =
        get_number(j, path, "polarization_decay_per_hour", d.polarization_decay_per_hour);
    if (j.contains("switch_kick")) {
        const json& k = j.at("switch_kick");
        require_keys(k, path + ".switch_kick",
                     {"timing_spread_ps", "overlap_min", "overlap_max"});
        d.switch_kick.timing_spread_ps =
            get_number(k, path + ".switch_kick", "timing_spread_ps",
                       d.switch_kick.timing_spread_ps);
        d.switch_kick.overlap_min =
            get_number(k, path + ".switch_kick", "overlap_min", d.switch_kick.overlap_min);
        d.switch_kick.overlap_max =
            get_number(k, path + ".switch_kick", "overlap_max", d.switch_kick.overlap_max);
    }
}

void parse_feedback(const json& j, SimConfig& config) {
    const std::string path = "feedback";
    require_keys(
        j, path,
        {"phase_gain", "phase_dither_rad", "phase_tolerance_rad", "phase_max_steps",
         "power_meter_noise", "scan_span_c", "scan_coarse_step_c", "scan_fine_step_c",
         "scan_fine_span_c", "dip_found_threshold", "dip_skip_threshold",
         "hom_pulses_per_point", "hom_intensity", "delay_step_ps", "delay_span_ps",
         "timing_noise_ps", "polarization_tolerance", "polarization_max_steps",
         "polarization_initial_step_rad", "feedback_interval_s", "touchup_interval_s",
         "step_cost_s", "scan_settle_s"});
    ControllerConfig& f = config.feedback;
    f.phase_gain = get_number(j, path, "phase_gain", f.phase_gain);
    f.phase_dither_rad = get_number(j, path, "phase_dither_rad", f.phase_dither_rad);
    f.phase_tolerance_rad = get_number(j, path, "phase_tolerance_rad", f.phase_tolerance_rad);
    f.phase_max_steps = get_int(j, path, "phase_max_steps", f.phase_max_steps);
    f.power_meter_noise = get_number(j, path, "power_meter_noise", f.power_meter_noise);
    f.scan_span_c = get_number(j, path, "scan_span_c", f.scan_span_c);
    f.scan_coarse_step_c = get_number(j, path, "scan_coarse_step_c", f.scan_coarse_step_c);
    f.scan_fine_step_c = get_number(j, path, "scan_fine_step_c", f.scan_fine_step_c);
    f.scan_fine_span_c = get_number(j, path, "scan_fine_span_c", f.scan_fine_span_c);
    f.dip_found_threshold = get_number(j, path, "dip_found_threshold", f.dip_found_threshold);
    f.dip_skip_threshold = get_number(j, path, "dip_skip_threshold", f.dip_skip_threshold);
    f.hom_pulses_per_point =
        get_count(j, path, "hom_pulses_per_point", f.hom_pulses_per_point);
    f.hom_intensity = get_number(j, path, "hom_intensity", f.hom_intensity);
    f.delay_step_ps = get_number(j, path, "delay_step_ps", f.delay_step_ps);
    f.delay_span_ps = get_number(j, path, "delay_span_ps", f.delay_span_ps);
    f.timing_noise_ps = get_number(j, path, "timing_noise_ps", f.timing_noise_ps);
    f.polarization_tolerance =
        get_number(j, path, "polarization_tolerance", f.polarization_tolerance);
    f.polarization_max_steps =
        get_int(j, path, "polarization_max_steps", f.polarization_max_steps);
    f.polarization_initial_step_rad = get_number(j, path, "polarization_initial_step_rad",
                                                 f.polarization_initial_step_rad);
    f.feedback_interval_s = get_number(j, path, "feedback_interval_s", f.feedback_interval_s);
    f.touchup_interval_s = get_number(j, path, "touchup_interval_s", f.touchup_interval_s);
    f.step_cost_s = get_number(j, path, "step_cost_s", f.step_cost_s);
    f.scan_settle_s = get_number(j, path, "scan_settle_s", f.scan_settle_s);
}

void parse_schedule(const json& j, SimConfig& config) {
    const std::string path = "schedule";
    require_keys(j, path,
                 {"total_duration_s", "session_duration_s", "desk_scale",
                  "chunk_duration_s"});
    ScheduleConfig& s = config.schedule;
    s.total_duration_s = get_number(j, path, "total_duration_s", s.total_duration_s);
    s.session_duration_s = get_number(j, path, "session_duration_s", s.session_duration_s);
    s.desk_scale = get_number(j, path, "desk_scale", s.desk_scale);
    s.chunk_duration_s = get_number(j, path, "chunk_duration_s", s.chunk_duration_s);
}

}  // namespace

SimConfig parse_config(const json& j) {
    require_keys(j, "config", {"protocol", "topology", "drift", "feedback", "schedule"});
    SimConfig config = default_config();
    if (j.contains("protocol")) parse_protocol(j.at("protocol"), config);
    if (j.contains("topology")) parse_topology(j.at("topology"), config);
    if (j.contains("drift")) parse_drift(j.at("drift"), config);
    if (j.contains("feedback")) parse_feedback(j.at("feedback"), config);
    if (j.contains("schedule")) parse_schedule(j.at("schedule"), config);
    config.validate();
    return config;
}

SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }
    return parse_config(j);
}

nlohmann::ordered_json config_to_json(const SimConfig& config) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json protocol;
    nlohmann::ordered_json intensities;
    for (IntensityLabel label : kIntensityLabels) {
        const IntensitySetting& s = config.protocol.setting(label);
        intensities[to_string(label)] = {{"mean_photon_number", s.mean_photon_number},
                                         {"send_probability", s.send_probability}};
    }
    protocol["intensities"] = intensities;
    protocol["x_basis_probability"] = {
        {"vacuum", config.protocol.basis.x_probability[0]},
        {"decoy", config.protocol.basis.x_probability[1]},
        {"signal", config.protocol.basis.x_probability[2]}};
    protocol["clock_rate_hz"] = config.protocol.clock_rate_hz;
    protocol["coincidence_window_s"] = config.protocol.coincidence_window_s;
    protocol["error_correction_efficiency"] = config.protocol.error_correction_efficiency;
    protocol["failure_probability"] = config.protocol.failure_probability;
    j["protocol"] = protocol;

    nlohmann::ordered_json topology;
    nlohmann::ordered_json users = nlohmann::ordered_json::array();
    for (const auto& user : config.topology.users)
        users.push_back({{"id", user.id},
                         {"fiber_loss_db", user.channel.fiber_loss_db},
                         {"misalignment_error", user.channel.misalignment_error}});
    topology["users"] = users;
    topology["switch_loss_db"] = config.topology.optical_switch.connection_loss_db;
    topology["dwdm_loss_db"] =
        config.topology.users.empty() ? 0.7 : config.topology.users[0].channel.dwdm_loss_db;
    topology["bs_insertion_loss_db"] = config.topology.bs_insertion_loss_db;
    topology["switch_ports"] = std::to_string(config.topology.optical_switch.input_ports) +
                               "x" +
                               std::to_string(config.topology.optical_switch.output_ports);
    nlohmann::ordered_json dets = nlohmann::ordered_json::array();
    for (int d = 0; d < 2; ++d)
        dets.push_back({{"efficiency", config.topology.detectors[d].efficiency},
                        {"dark_count_rate_hz", config.topology.detectors[d].dark_count_rate_hz},
                        {"gate_window_s", config.topology.detectors[d].gate_window_s}});
    topology["detectors"] = dets;
    j["topology"] = topology;

    j["drift"] = {{"phase_drift_rad_per_sqrt_s", config.drift.phase_drift_rad_per_sqrt_s},
                  {"wavelength_drift_pm_per_hour", config.drift.wavelength_drift_pm_per_hour},
                  {"timing_drift_ps_per_hour", config.drift.timing_drift_ps_per_hour},
                  {"polarization_decay_per_hour", config.drift.polarization_decay_per_hour},
                  {"switch_kick",
                   {{"timing_spread_ps", config.drift.switch_kick.timing_spread_ps},
                    {"overlap_min", config.drift.switch_kick.overlap_min},
                    {"overlap_max", config.drift.switch_kick.overlap_max}}}};

    const ControllerConfig& f = config.feedback;
    j["feedback"] = {{"phase_gain", f.phase_gain},
                     {"phase_dither_rad", f.phase_dither_rad},
                     {"phase_tolerance_rad", f.phase_tolerance_rad},
                     {"phase_max_steps", f.phase_max_steps},
                     {"power_meter_noise", f.power_meter_noise},
                     {"scan_span_c", f.scan_span_c},
                     {"scan_coarse_step_c", f.scan_coarse_step_c},
                     {"scan_fine_step_c", f.scan_fine_step_c},
                     {"scan_fine_span_c", f.scan_fine_span_c},
                     {"dip_found_threshold", f.dip_found_threshold},
                     {"dip_skip_threshold", f.dip_skip_threshold},
                     {"hom_pulses_per_point", f.hom_pulses_per_point},
                     {"hom_intensity", f.hom_intensity},
                     {"delay_step_ps", f.delay_step_ps},
                     {"delay_span_ps", f.delay_span_ps},
                     {"timing_noise_ps", f.timing_noise_ps},
                     {"polarization_tolerance", f.polarization_tolerance},
                     {"polarization_max_steps", f.polarization_max_steps},
                     {"polarization_initial_step_rad", f.polarization_initial_step_rad},
                     {"feedback_interval_s", f.feedback_interval_s},
                     {"touchup_interval_s", f.touchup_interval_s},
                     {"step_cost_s", f.step_cost_s},
                     {"scan_settle_s", f.scan_settle_s}};

    j["schedule"] = {{"total_duration_s", config.schedule.total_duration_s},
                     {"session_duration_s", config.schedule.session_duration_s},
                     {"desk_scale", config.schedule.desk_scale},
                     {"chunk_duration_s", config.schedule.chunk_duration_s}};
    return j;
}

}  // namespace mdinet
