#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hdf/config.hpp"

using namespace hdf;

namespace {

std::string error_of(const std::string& yaml)
{
    try {
        parse_config(yaml);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("paper profile constants")
{
    const ScenarioConfig c = ScenarioConfig::paper();
    CHECK(c.sensors == 15);
    CHECK(c.box_min == Vec3(0, 0, 0));
    CHECK(c.box_max == Vec3(40, 40, 3));
    CHECK(c.area_x_max == 40.0);
    CHECK(c.area_y_max == 40.0);
    CHECK(c.rhs_side * c.rhs_side == 64);
    CHECK(c.rhs_spacing == doctest::Approx(1.0 / 3.0));
    CHECK(c.rhs_center == Vec3(70, 20, 10));
    CHECK(c.rhs_efficiency == 1.0);
    CHECK(c.feed_count == 1);
    CHECK(c.feed_spacing == 0.5);
    CHECK(c.feed_center == Vec3(68, 18, 10));
    CHECK(c.rhs_q == 1.5); // cos^3 pattern, peak 8
    CHECK(c.feed_q == 1.5);
    CHECK(c.aaf_eta_wavelengths == 12.0);
    CHECK(c.aaf_alpha == 4.0);
    CHECK(c.sensor_noise_var == 1.0);
    CHECK(c.target_snr_db == 15.0);
    CHECK(c.ref_attenuation_db == -30.0);
    CHECK(c.ref_distance == 1.0);
    CHECK(c.path_loss_exponent == 2.0);
    CHECK(c.rician_db_lo == 3.0);
    CHECK(c.rician_db_hi == 5.0);
    CHECK(c.noise_dbm == -50.0);
    CHECK(c.n_channels == 100);
    CHECK(c.n_trials == 1000);
    CHECK(c.target_pfa == 0.01);

    CHECK(c.sigma_w2() == doctest::Approx(1e-5)); // -50 dBm in mW
    CHECK(c.theta_power() == doctest::Approx(std::pow(10.0, 1.5)));
}

TEST_CASE("desk profile is a reduced paper profile")
{
    const ScenarioConfig d = ScenarioConfig::desk();
    CHECK(d.sensors == 10);
    CHECK(d.rhs_side == 4);
    CHECK(d.grid_side == 3);
    CHECK(d.n_channels == 20);
    CHECK(d.n_trials == 400);
    CHECK(d.noise_dbm == ScenarioConfig::paper().noise_dbm);
    CHECK_NOTHROW(d.validate());
}

TEST_CASE("scenario construction")
{
    const ScenarioConfig c = ScenarioConfig::desk();
    const Scenario s = c.build_scenario();
    CHECK(s.field.size() == 10);
    CHECK(s.rhs.size() == 16);
    CHECK(s.feeds.size() == 1);
    CHECK(s.sigma_w2 == doctest::Approx(1e-5));
    CHECK(s.link.mu_ref == doctest::Approx(1e-3));
    for (const auto& p : s.field.positions) {
        CHECK(p.x() >= 0.0);
        CHECK(p.x() <= 40.0);
        CHECK(p.z() <= 3.0);
    }
    // Sensor placement depends only on the WSN seed.
    const Scenario again = c.build_scenario();
    CHECK(again.field.positions == s.field.positions);
    ScenarioConfig other = c;
    other.seed = 99;
    CHECK(other.build_scenario().field.positions == s.field.positions);
    other.wsn_seed = 7;
    CHECK(other.build_scenario().field.positions != s.field.positions);
}

TEST_CASE("feed layouts")
{
    CHECK(parse_layout("2x2") == std::pair{2, 2});
    CHECK(parse_layout("4x1") == std::pair{4, 1});
    CHECK_THROWS_AS(parse_layout("2by2"), ConfigError);
    CHECK(default_layout(1) == "1x1");
    CHECK(default_layout(2) == "2x1");
    CHECK(default_layout(4) == "2x2");
    CHECK(default_layout(3) == "3x1");
}

TEST_CASE("YAML round trip")
{
    ScenarioConfig c = ScenarioConfig::paper();
    c.sensors = 7;
    c.feed_count = 4;
    c.feed_layout = "2x2";
    c.rhs_spacing = 0.3;
    c.rules = {RuleId::BFuC0, RuleId::GLR};
    c.seed = 12345678901ULL;
    const ScenarioConfig back = parse_config(serialize_config(c));
    CHECK(serialize_config(back) == serialize_config(c));
    CHECK(back.sensors == 7);
    CHECK(back.rhs_spacing == 0.3);
    CHECK(back.rules == c.rules);
    CHECK(back.seed == c.seed);

    const auto path = (std::filesystem::temp_directory_path() / "hdf_config_test.yaml").string();
    std::ofstream(path) << "wsn:\n  sensors: 6\n";
    const ScenarioConfig partial = load_config(path, ScenarioConfig::desk());
    CHECK(partial.sensors == 6);
    CHECK(partial.rhs_side == 4); // everything else from the base profile
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_config(path), ConfigError);
}

TEST_CASE("config errors name the key")
{
    CHECK(error_of("rhs:\n  sidee: 3\n").find("rhs.sidee") != std::string::npos);
    CHECK(error_of("bogus:\n  x: 1\n").find("bogus") != std::string::npos);
    CHECK(error_of("wsn:\n  sensors: 0\n").find("wsn.sensors") != std::string::npos);
    CHECK(error_of("wsn:\n  sensors: many\n").find("wsn.sensors") != std::string::npos);
    CHECK(error_of("eval:\n  rules: [eFuC-0, what]\n").find("eval.rules") != std::string::npos);
    CHECK(error_of("schema_version: 9\n").find("schema_version") != std::string::npos);
    CHECK(error_of("feeds:\n  count: 4\n  layout: 3x1\n").find("feeds") != std::string::npos);
    CHECK(error_of("eval:\n  target_pfa: 1.5\n").find("eval.target_pfa") != std::string::npos);
    CHECK(error_of("sensing:\n  target_snr_db: 20\n").empty());
}

TEST_CASE("shipped configuration files match the built-in profiles")
{
    const std::string dir = HDF_SOURCE_DIR "/configs/";
    CHECK(serialize_config(load_config(dir + "paper.yaml")) == serialize_config(ScenarioConfig::paper()));
    CHECK(serialize_config(load_config(dir + "desk.yaml")) == serialize_config(ScenarioConfig::desk()));
}
