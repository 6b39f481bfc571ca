#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mdinet/config.hpp"
#include "mdinet/stats_io.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kBin = TEST_MDINET_BIN;

struct TempDir {
    fs::path path;
    TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args, const fs::path& capture) {
    const std::string cmd = kBin + " " + args + " >" + (capture / "stdout.txt").string() +
                            " 2>" + (capture / "stderr.txt").string();
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_small_config(const fs::path& path) {
    json j;
    j["schedule"] = {{"total_duration_s", 600.0},
                     {"session_duration_s", 300.0},
                     {"desk_scale", 2e-6},
                     {"chunk_duration_s", 60.0}};
    j["feedback"] = {{"hom_pulses_per_point", 20000}};
    std::ofstream out(path);
    out << j.dump(2);
}

}  // namespace

TEST_CASE("simulate writes a coherent, re-parseable output tree") {
    TempDir dir("mdinet_cli_simulate");
    write_small_config(dir.path / "config.json");
    const int rc = run("simulate --config " + (dir.path / "config.json").string() +
                           " --seed 11 --out " + (dir.path / "out").string(),
                       dir.path);
    CHECK(rc == 0);

    REQUIRE(fs::exists(dir.path / "out" / "report.json"));
    json report = json::parse(slurp(dir.path / "out" / "report.json"));
    CHECK(report.at("sessions").size() == 2);

    // every emitted stats file parses with the library reader
    int stats_files = 0;
    for (const auto& entry : fs::directory_iterator(dir.path / "out")) {
        if (entry.path().extension() != ".stats") continue;
        ++stats_files;
        CHECK_NOTHROW(mdinet::parse_statistics_file(entry.path().string()));
    }
    CHECK(stats_files > 0);

    // the echoed configuration is itself a valid configuration
    CHECK_NOTHROW(mdinet::load_config((dir.path / "out" / "config_used.json").string()));

    SUBCASE("keyrate on an exported session reproduces the in-run result bit-exactly") {
        fs::path session_stats;
        for (const auto& entry : fs::directory_iterator(dir.path / "out")) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("session_", 0) == 0 && entry.path().extension() == ".stats") {
                session_stats = entry.path();
                break;
            }
        }
        REQUIRE(!session_stats.empty());
        const std::string name = session_stats.filename().string();
        const int index = std::stoi(name.substr(8, name.find('_', 8) - 8));

        const int rc2 = run("keyrate --stats " + session_stats.string() + " --config " +
                                (dir.path / "config.json").string(),
                            dir.path);
        CHECK(rc2 == 0);
        json from_cli = json::parse(slurp(dir.path / "stdout.txt"));

        json in_run;
        for (const auto& session : report.at("sessions"))
            if (session.at("index") == index) in_run = session.at("keyrate");
        REQUIRE(!in_run.is_null());
        CHECK(from_cli.at("rate_bps").dump() == in_run.at("rate_bps").dump());
        CHECK(from_cli.at("rate_per_pulse").dump() == in_run.at("rate_per_pulse").dump());
        CHECK(from_cli.at("decoy").at("y11_lower").dump() ==
              in_run.at("decoy").at("y11_lower").dump());
    }

    SUBCASE("report subcommand re-aggregates the exported sessions") {
        const int rc3 = run("report --in " + (dir.path / "out").string() + " --config " +
                                (dir.path / "config.json").string() + " --out " +
                                (dir.path / "agg").string(),
                            dir.path);
        CHECK(rc3 == 0);
        CHECK(fs::exists(dir.path / "agg" / "report_accumulated.json"));
        json agg = json::parse(slurp(dir.path / "agg" / "report_accumulated.json"));
        CHECK(agg.at("pairs").size() >= 1);
    }
}

TEST_CASE("the shipped network configuration parses and matches the deployment") {
    const auto config = mdinet::load_config(std::string(TEST_CONFIG_DIR) +
                                            "/field_network.json");
    REQUIRE(config.topology.users.size() == 3);
    CHECK(config.topology.users[0].channel.fiber_loss_db == doctest::Approx(5.1));
    CHECK(config.topology.users[1].channel.fiber_loss_db == doctest::Approx(9.2));
    CHECK(config.topology.users[2].channel.fiber_loss_db == doctest::Approx(8.1));
    CHECK(config.topology.detectors[0].efficiency == doctest::Approx(0.64));
    CHECK(config.topology.detectors[1].efficiency == doctest::Approx(0.66));
    CHECK(config.protocol.clock_rate_hz == doctest::Approx(7.5e7));
    CHECK(config.schedule.session_duration_s == doctest::Approx(7200.0));
}

TEST_CASE("config errors exit with status 2 and name the field") {
    TempDir dir("mdinet_cli_config");

    {
        std::ofstream out(dir.path / "bad.json");
        out << "{ \"protocol\": { \"intensities\": { \"decoy\": "
               "{ \"mean_photon_number\": -0.1 } } } }";
    }
    int rc = run("simulate --config " + (dir.path / "bad.json").string() + " --out " +
                     (dir.path / "out").string(),
                 dir.path);
    CHECK(rc == 2);
    std::string err = slurp(dir.path / "stderr.txt");
    CHECK(err.rfind("error: config:", 0) == 0);

    {
        std::ofstream out(dir.path / "unknown.json");
        out << "{ \"protocol\": { \"clock_rate_hzz\": 1 } }";
    }
    rc = run("simulate --config " + (dir.path / "unknown.json").string() + " --out " +
                 (dir.path / "out").string(),
             dir.path);
    CHECK(rc == 2);
    err = slurp(dir.path / "stderr.txt");
    CHECK(err.find("clock_rate_hzz") != std::string::npos);
    CHECK(err.find("unknown key") != std::string::npos);

    {
        std::ofstream out(dir.path / "invalid.json");
        out << "{ not json";
    }
    rc = run("simulate --config " + (dir.path / "invalid.json").string() + " --out " +
                 (dir.path / "out").string(),
             dir.path);
    CHECK(rc == 2);
}

TEST_CASE("keyrate rejects malformed statistics") {
    TempDir dir("mdinet_cli_keyrate");
    { std::ofstream out(dir.path / "empty.stats"); }
    const int rc = run("keyrate --stats " + (dir.path / "empty.stats").string(), dir.path);
    CHECK(rc == 1);
    CHECK(slurp(dir.path / "stderr.txt").rfind("error: parse:", 0) == 0);
}

TEST_CASE("hom-scan emits the dip curve and flags a missing dip") {
    TempDir dir("mdinet_cli_hom");
    {
        // default scan statistics; only the horizon is shrunk
        json j;
        j["schedule"] = {{"total_duration_s", 600.0}, {"session_duration_s", 300.0}};
        std::ofstream out(dir.path / "config.json");
        out << j.dump(2);
    }

    int rc = run("hom-scan --config " + (dir.path / "config.json").string() +
                     " --range -0.3:0.3:0.05 --seed 4 --out " + (dir.path / "a").string(),
                 dir.path);
    CHECK(rc == 0);
    const std::string curve = slurp(dir.path / "a" / "hom_scan.csv");
    CHECK(curve.rfind("temperature_c,coincidence_value,is_minimum\n", 0) == 0);
    CHECK(curve.find(",1\n") != std::string::npos);  // a marked minimum

    // 30 pm offset pushes the dip far outside this scan window
    rc = run("hom-scan --config " + (dir.path / "config.json").string() +
                 " --range -0.1:0.1:0.05 --offset-pm 30 --seed 4 --out " +
                 (dir.path / "b").string(),
             dir.path);
    CHECK(rc == 1);
    CHECK(fs::exists(dir.path / "b" / "hom_scan.csv"));  // curve still written
}

TEST_CASE("calibrate runs a full recalibration and reports residuals") {
    TempDir dir("mdinet_cli_cal");
    write_small_config(dir.path / "config.json");
    const int rc = run("calibrate --config " + (dir.path / "config.json").string() +
                           " --seed 3 --out " + (dir.path / "out").string(),
                       dir.path);
    CHECK(rc == 0);
    REQUIRE(fs::exists(dir.path / "out" / "calibration.json"));
    json j = json::parse(slurp(dir.path / "out" / "calibration.json"));
    CHECK(j.at("ok") == true);
    CHECK(j.at("residual").at("mode_overlap").get<double>() >= 0.99);
    const std::string trace = slurp(dir.path / "out" / "calibration.csv");
    CHECK(trace.rfind("t_seconds,loop_name,command,residual\n", 0) == 0);
}
