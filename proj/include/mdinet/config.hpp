#pragma once

#include "mdinet/calibration.hpp"
#include "mdinet/core.hpp"
#include "mdinet/optics.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace mdinet {

struct UserNode {
    std::string id;
    ChannelModel channel;  // fully assembled: fiber + switch + dwdm + bs share
};

struct SwitchModel {
    int input_ports = 8;
    int output_ports = 4;
    double connection_loss_db = 1.0;
};

struct NetworkTopology {
    std::vector<UserNode> users;
    DetectorPair detectors = {DetectorModel{0.64, 100.0, 1.7e-9},
                              DetectorModel{0.66, 100.0, 1.7e-9}};
    double bs_insertion_loss_db = 1.4;
    SwitchModel optical_switch;

    void validate() const;
    int user_index(const std::string& id) const;  // -1 when unknown
};

struct ScheduleConfig {
    double total_duration_s = 21600.0;   // three two-hour sessions
    double session_duration_s = 7200.0;  // switch cadence
    double desk_scale = 2e-4;            // simulated fraction of the real pulse budget
    double chunk_duration_s = 60.0;      // drift/feedback granularity inside a session

    void validate() const;
};

struct SimConfig {
    ProtocolParams protocol;
    NetworkTopology topology;
    DriftModel drift;
    ControllerConfig feedback;
    ScheduleConfig schedule;

    void validate() const;
};

/// Field-deployment defaults: 3 users at 5.1/9.2/8.1 dB, 1 dB switch,
/// 0.7 dB DWDM, 1.4 dB splitter, 64%/66% detectors with 100 Hz darks.
SimConfig default_config();

/// Strict parser: unknown keys anywhere are a ConfigError naming the field.
SimConfig parse_config(const nlohmann::json& j);
SimConfig load_config(const std::string& path);

nlohmann::ordered_json config_to_json(const SimConfig& config);

}  // namespace mdinet
