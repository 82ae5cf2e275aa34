#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hdf/evaluate.hpp"

namespace hdf {

/// Configuration problem; the message starts with the offending key path.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Human-editable scenario description. Physical quantities carry their unit
/// in the key name of the YAML form (e.g. noise_dbm, spacing_wavelengths).
struct ScenarioConfig {
    // sensing
    double target_snr_db = 15.0;
    double sensor_noise_var = 1.0;
    double aaf_eta_wavelengths = 12.0;
    double aaf_alpha = 4.0;
    double local_pfa = 0.05;
    // wsn
    int sensors = 15;
    Vec3 box_min = Vec3(0.0, 0.0, 0.0);
    Vec3 box_max = Vec3(40.0, 40.0, 3.0);
    std::uint64_t wsn_seed = 1;
    // area
    double area_x_min = 0.0, area_x_max = 40.0;
    double area_y_min = 0.0, area_y_max = 40.0;
    int grid_side = 5;
    int quadrature_side = 64;
    // rhs
    int rhs_side = 8;
    double rhs_spacing = 1.0 / 3.0;
    Vec3 rhs_center = Vec3(70.0, 20.0, 10.0);
    double rhs_q = 1.5;
    double rhs_efficiency = 1.0;
    // feeds
    int feed_count = 1;
    std::string feed_layout = "1x1";
    double feed_spacing = 0.5;
    Vec3 feed_center = Vec3(68.0, 18.0, 10.0);
    double feed_q = 1.5;
    // link
    double ref_attenuation_db = -30.0;
    double ref_distance = 1.0;
    double path_loss_exponent = 2.0;
    double rician_db_lo = 3.0;
    double rician_db_hi = 5.0;
    double noise_dbm = -50.0;
    // design
    double tol = 1e-6;
    int max_iter = 200;
    int glr_max_sensors = GlrKernel::kDefaultMaxSensors;
    // eval
    std::vector<RuleId> rules = all_rules();
    int n_channels = 100;
    int n_trials = 1000;
    double target_pfa = 0.01;
    std::uint64_t seed = 2025;

    /// Full-scale scenario: K = 15, M = 64, N = 1, N_t = 25, 100 x 1000 trials.
    static ScenarioConfig paper();
    /// Desk-scale scenario: K = 10, M = 16, N = 1, N_t = 9, 20 x 400 trials.
    static ScenarioConfig desk();

    /// Throws ConfigError naming the first invalid field.
    void validate() const;

    /// Target power theta from the target SNR over the sensor noise.
    double theta_power() const;
    /// Channel noise variance in linear mW.
    double sigma_w2() const;

    Scenario build_scenario() const;
    ExperimentConfig experiment() const;
};

/// Number of feeds along x and z for a layout string "AxB".
std::pair<int, int> parse_layout(const std::string& layout);
/// Layout used when only N is given: 1x1, 2x1, 2x2, otherwise Nx1.
std::string default_layout(int feeds);

/// Parses YAML text on top of `base`; unknown keys and type errors raise ConfigError.
ScenarioConfig parse_config(const std::string& text, const ScenarioConfig& base = ScenarioConfig::paper());
ScenarioConfig load_config(const std::string& path, const ScenarioConfig& base = ScenarioConfig::paper());
std::string serialize_config(const ScenarioConfig& cfg);

} // namespace hdf
