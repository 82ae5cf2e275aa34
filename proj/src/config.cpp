#include "hdf/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace hdf {

ScenarioConfig ScenarioConfig::paper() { return ScenarioConfig{}; }

ScenarioConfig ScenarioConfig::desk()
{
    ScenarioConfig c;
    c.sensors = 10;
    c.rhs_side = 4;
    c.feed_count = 1;
    c.feed_layout = "1x1";
    c.grid_side = 3;
    c.n_channels = 20;
    c.n_trials = 400;
    return c;
}

std::pair<int, int> parse_layout(const std::string& layout)
{
    const auto x = layout.find('x');
    if (x == std::string::npos) throw ConfigError("feeds.layout: expected \"AxB\", got \"" + layout + "\"");
    try {
        std::size_t p1 = 0, p2 = 0;
        const int a = std::stoi(layout.substr(0, x), &p1);
        const int b = std::stoi(layout.substr(x + 1), &p2);
        if (p1 != x || p2 != layout.size() - x - 1 || a < 1 || b < 1) throw std::invalid_argument("");
        return {a, b};
    } catch (const std::exception&) {
        throw ConfigError("feeds.layout: expected \"AxB\" with positive integers, got \"" + layout + "\"");
    }
}

std::string default_layout(int feeds)
{
    if (feeds == 4) return "2x2";
    return std::to_string(feeds) + "x1";
}

void ScenarioConfig::validate() const
{
    auto need = [](bool ok, const char* path, const std::string& what) {
        if (!ok) throw ConfigError(std::string(path) + ": " + what);
    };
    need(std::isfinite(target_snr_db), "sensing.target_snr_db", "must be finite");
    need(sensor_noise_var > 0.0, "sensing.sensor_noise_var", "must be > 0");
    need(aaf_eta_wavelengths > 0.0, "sensing.aaf_eta_wavelengths", "must be > 0");
    need(aaf_alpha > 0.0, "sensing.aaf_alpha", "must be > 0");
    need(local_pfa > 0.0 && local_pfa < 1.0, "sensing.local_pfa", "must lie in (0,1)");
    need(sensors >= 1, "wsn.sensors", "must be >= 1");
    need((box_max - box_min).minCoeff() >= 0.0, "wsn.box_max_wavelengths", "must not be below box_min");
    need(area_x_max >= area_x_min, "area.x_range_wavelengths", "range is inverted");
    need(area_y_max >= area_y_min, "area.y_range_wavelengths", "range is inverted");
    need(grid_side >= 1, "area.grid_side", "must be >= 1");
    need(quadrature_side >= 8, "area.quadrature_side", "must be >= 8");
    need(rhs_side >= 1, "rhs.side", "must be >= 1");
    need(rhs_spacing > 0.0, "rhs.spacing_wavelengths", "must be > 0");
    need(rhs_q >= 0.0, "rhs.q_factor", "must be >= 0");
    need(rhs_efficiency > 0.0 && rhs_efficiency <= 1.0, "rhs.efficiency", "must lie in (0,1]");
    need(feed_count >= 1, "feeds.count", "must be >= 1");
    const auto [fx, fz] = parse_layout(feed_layout);
    need(fx * fz == feed_count, "feeds.layout", "does not hold feeds.count feeds");
    need(feed_spacing > 0.0, "feeds.spacing_wavelengths", "must be > 0");
    need(feed_q >= 0.0, "feeds.q_factor", "must be >= 0");
    need(std::isfinite(ref_attenuation_db), "link.ref_attenuation_db", "must be finite");
    need(ref_distance > 0.0, "link.ref_distance_wavelengths", "must be > 0");
    need(path_loss_exponent >= 0.0, "link.path_loss_exponent", "must be >= 0");
    need(rician_db_lo <= rician_db_hi, "link.rician_factor_db", "range is inverted");
    need(std::isfinite(noise_dbm), "channel.noise_dbm", "must be finite");
    need(tol > 0.0, "design.tol", "must be > 0");
    need(max_iter >= 1, "design.max_iter", "must be >= 1");
    need(glr_max_sensors >= 1 && glr_max_sensors <= 40, "design.glr_max_sensors", "must lie in [1,40]");
    need(!rules.empty(), "eval.rules", "must not be empty");
    need(n_channels >= 1, "eval.n_channels", "must be >= 1");
    need(n_trials >= 1, "eval.n_trials", "must be >= 1");
    need(target_pfa > 0.0 && target_pfa < 1.0, "eval.target_pfa", "must lie in (0,1)");
}

double ScenarioConfig::theta_power() const { return sensor_noise_var * db_to_linear(target_snr_db); }

double ScenarioConfig::sigma_w2() const { return db_to_linear(noise_dbm); }

Scenario ScenarioConfig::build_scenario() const
{
    validate();
    Scenario s;
    s.sensing.theta_power = theta_power();
    s.sensing.eta_ref = aaf_eta_wavelengths;
    s.sensing.alpha_exp = aaf_alpha;
    s.sensing.local_pfa = local_pfa;
    Rng rng = make_rng(wsn_seed, stream::kSensors);
    s.field = SensorField::random_box(static_cast<std::size_t>(sensors), box_min, box_max, s.sensing,
                                      sensor_noise_var, rng);
    s.area.x_min = area_x_min;
    s.area.x_max = area_x_max;
    s.area.y_min = area_y_min;
    s.area.y_max = area_y_max;
    s.area.grid_side = grid_side;
    s.area.quad_side = quadrature_side;
    s.rhs = RhsGeometry::planar(rhs_center, rhs_side, rhs_side, rhs_spacing, rhs_spacing, rhs_q,
                                rhs_efficiency);
    const auto [fx, fz] = parse_layout(feed_layout);
    s.feeds = FeedGeometry::grid(feed_center, fx, fz, feed_spacing, feed_q);
    s.link.mu_ref = db_to_linear(ref_attenuation_db);
    s.link.d0 = ref_distance;
    s.link.nu = path_loss_exponent;
    s.link.rician_db_lo = rician_db_lo;
    s.link.rician_db_hi = rician_db_hi;
    s.sigma_w2 = sigma_w2();
    s.validate();
    return s;
}

ExperimentConfig ScenarioConfig::experiment() const
{
    ExperimentConfig e;
    e.scenario = build_scenario();
    e.rules = rules;
    e.n_channels = n_channels;
    e.n_trials = n_trials;
    e.target_pfa = target_pfa;
    e.seed = seed;
    e.ao.tol = tol;
    e.ao.max_iter = max_iter;
    e.glr_max_sensors = glr_max_sensors;
    return e;
}

namespace {

class Reader {
public:
    explicit Reader(const YAML::Node& root) : root_(root)
    {
        if (!root_.IsMap()) throw ConfigError("<root>: expected a mapping");
    }

    YAML::Node section(const std::string& name)
    {
        const YAML::Node n = root_[name];
        if (!n) return YAML::Node();
        if (!n.IsMap()) throw ConfigError(name + ": expected a mapping");
        return n;
    }

    template <class T>
    void get(const YAML::Node& sec, const std::string& sec_name, const std::string& key, T& out)
    {
        used_.insert(sec_name + "." + key);
        if (!sec) return;
        const YAML::Node n = sec[key];
        if (!n) return;
        try {
            out = n.as<T>();
        } catch (const YAML::Exception&) {
            throw ConfigError(sec_name + "." + key + ": cannot read value '" + YAML::Dump(n) + "'");
        }
    }

    void get_vec3(const YAML::Node& sec, const std::string& sec_name, const std::string& key, Vec3& out)
    {
        std::vector<double> v{out[0], out[1], out[2]};
        get(sec, sec_name, key, v);
        if (v.size() != 3) throw ConfigError(sec_name + "." + key + ": expected 3 numbers");
        out = Vec3(v[0], v[1], v[2]);
    }

    void get_range(const YAML::Node& sec, const std::string& sec_name, const std::string& key,
                   double& lo, double& hi)
    {
        std::vector<double> v{lo, hi};
        get(sec, sec_name, key, v);
        if (v.size() != 2) throw ConfigError(sec_name + "." + key + ": expected [low, high]");
        lo = v[0];
        hi = v[1];
    }

    void reject_unknown() const
    {
        static const std::set<std::string> sections = {"schema_version", "sensing", "wsn", "area", "rhs",
                                                       "feeds", "link", "channel", "design", "eval"};
        for (const auto& kv : root_) {
            const auto name = kv.first.as<std::string>();
            if (!sections.count(name)) throw ConfigError(name + ": unknown section");
            if (name == "schema_version") continue;
            for (const auto& inner : kv.second) {
                const auto key = name + "." + inner.first.as<std::string>();
                if (!used_.count(key)) throw ConfigError(key + ": unknown key");
            }
        }
    }

private:
    YAML::Node root_;
    std::set<std::string> used_;
};

} // namespace

ScenarioConfig parse_config(const std::string& text, const ScenarioConfig& base)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("<yaml>: ") + e.what());
    }
    if (!root || root.IsNull()) return base;

    ScenarioConfig c = base;
    Reader r(root);
    if (root["schema_version"]) {
        int v = 0;
        try {
            v = root["schema_version"].as<int>();
        } catch (const YAML::Exception&) {
            throw ConfigError("schema_version: expected an integer");
        }
        if (v != kSchemaVersion) throw ConfigError("schema_version: unsupported version " + std::to_string(v));
    }

    auto s = r.section("sensing");
    r.get(s, "sensing", "target_snr_db", c.target_snr_db);
    r.get(s, "sensing", "sensor_noise_var", c.sensor_noise_var);
    r.get(s, "sensing", "aaf_eta_wavelengths", c.aaf_eta_wavelengths);
    r.get(s, "sensing", "aaf_alpha", c.aaf_alpha);
    r.get(s, "sensing", "local_pfa", c.local_pfa);

    auto w = r.section("wsn");
    r.get(w, "wsn", "sensors", c.sensors);
    r.get_vec3(w, "wsn", "box_min_wavelengths", c.box_min);
    r.get_vec3(w, "wsn", "box_max_wavelengths", c.box_max);
    r.get(w, "wsn", "seed", c.wsn_seed);

    auto a = r.section("area");
    r.get_range(a, "area", "x_range_wavelengths", c.area_x_min, c.area_x_max);
    r.get_range(a, "area", "y_range_wavelengths", c.area_y_min, c.area_y_max);
    r.get(a, "area", "grid_side", c.grid_side);
    r.get(a, "area", "quadrature_side", c.quadrature_side);

    auto h = r.section("rhs");
    r.get(h, "rhs", "side", c.rhs_side);
    r.get(h, "rhs", "spacing_wavelengths", c.rhs_spacing);
    r.get_vec3(h, "rhs", "center_wavelengths", c.rhs_center);
    r.get(h, "rhs", "q_factor", c.rhs_q);
    r.get(h, "rhs", "efficiency", c.rhs_efficiency);

    auto f = r.section("feeds");
    const int feeds_before = c.feed_count;
    r.get(f, "feeds", "count", c.feed_count);
    std::string layout;
    r.get(f, "feeds", "layout", layout);
    if (!layout.empty()) c.feed_layout = layout;
    else if (c.feed_count != feeds_before) c.feed_layout = default_layout(c.feed_count);
    r.get(f, "feeds", "spacing_wavelengths", c.feed_spacing);
    r.get_vec3(f, "feeds", "center_wavelengths", c.feed_center);
    r.get(f, "feeds", "q_factor", c.feed_q);

    auto l = r.section("link");
    r.get(l, "link", "ref_attenuation_db", c.ref_attenuation_db);
    r.get(l, "link", "ref_distance_wavelengths", c.ref_distance);
    r.get(l, "link", "path_loss_exponent", c.path_loss_exponent);
    r.get_range(l, "link", "rician_factor_db", c.rician_db_lo, c.rician_db_hi);

    auto ch = r.section("channel");
    r.get(ch, "channel", "noise_dbm", c.noise_dbm);

    auto d = r.section("design");
    r.get(d, "design", "tol", c.tol);
    r.get(d, "design", "max_iter", c.max_iter);
    r.get(d, "design", "glr_max_sensors", c.glr_max_sensors);

    auto e = r.section("eval");
    std::vector<std::string> names;
    r.get(e, "eval", "rules", names);
    if (e && e["rules"]) {
        c.rules.clear();
        for (const auto& n : names) {
            try {
                c.rules.push_back(parse_rule(n));
            } catch (const InvalidArgument& ex) {
                throw ConfigError(std::string("eval.rules: ") + ex.what());
            }
        }
    }
    r.get(e, "eval", "n_channels", c.n_channels);
    r.get(e, "eval", "n_trials", c.n_trials);
    r.get(e, "eval", "target_pfa", c.target_pfa);
    r.get(e, "eval", "seed", c.seed);

    r.reject_unknown();
    c.validate();
    return c;
}

ScenarioConfig load_config(const std::string& path, const ScenarioConfig& base)
{
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), base);
}

std::string serialize_config(const ScenarioConfig& c)
{
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    auto vec3 = [&](const Vec3& v) {
        out << YAML::Flow << YAML::BeginSeq << v[0] << v[1] << v[2] << YAML::EndSeq;
    };
    auto range = [&](double lo, double hi) {
        out << YAML::Flow << YAML::BeginSeq << lo << hi << YAML::EndSeq;
    };

    out << YAML::BeginMap;
    out << YAML::Key << "schema_version" << YAML::Value << kSchemaVersion;

    out << YAML::Key << "sensing" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "target_snr_db" << YAML::Value << c.target_snr_db;
    out << YAML::Key << "sensor_noise_var" << YAML::Value << c.sensor_noise_var;
    out << YAML::Key << "aaf_eta_wavelengths" << YAML::Value << c.aaf_eta_wavelengths;
    out << YAML::Key << "aaf_alpha" << YAML::Value << c.aaf_alpha;
    out << YAML::Key << "local_pfa" << YAML::Value << c.local_pfa;
    out << YAML::EndMap;

    out << YAML::Key << "wsn" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "sensors" << YAML::Value << c.sensors;
    out << YAML::Key << "box_min_wavelengths" << YAML::Value;
    vec3(c.box_min);
    out << YAML::Key << "box_max_wavelengths" << YAML::Value;
    vec3(c.box_max);
    out << YAML::Key << "seed" << YAML::Value << c.wsn_seed;
    out << YAML::EndMap;

    out << YAML::Key << "area" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "x_range_wavelengths" << YAML::Value;
    range(c.area_x_min, c.area_x_max);
    out << YAML::Key << "y_range_wavelengths" << YAML::Value;
    range(c.area_y_min, c.area_y_max);
    out << YAML::Key << "grid_side" << YAML::Value << c.grid_side;
    out << YAML::Key << "quadrature_side" << YAML::Value << c.quadrature_side;
    out << YAML::EndMap;

    out << YAML::Key << "rhs" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "side" << YAML::Value << c.rhs_side;
    out << YAML::Key << "spacing_wavelengths" << YAML::Value << c.rhs_spacing;
    out << YAML::Key << "center_wavelengths" << YAML::Value;
    vec3(c.rhs_center);
    out << YAML::Key << "q_factor" << YAML::Value << c.rhs_q;
    out << YAML::Key << "efficiency" << YAML::Value << c.rhs_efficiency;
    out << YAML::EndMap;

    out << YAML::Key << "feeds" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "count" << YAML::Value << c.feed_count;
    out << YAML::Key << "layout" << YAML::Value << c.feed_layout;
    out << YAML::Key << "spacing_wavelengths" << YAML::Value << c.feed_spacing;
    out << YAML::Key << "center_wavelengths" << YAML::Value;
    vec3(c.feed_center);
    out << YAML::Key << "q_factor" << YAML::Value << c.feed_q;
    out << YAML::EndMap;

    out << YAML::Key << "link" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "ref_attenuation_db" << YAML::Value << c.ref_attenuation_db;
    out << YAML::Key << "ref_distance_wavelengths" << YAML::Value << c.ref_distance;
    out << YAML::Key << "path_loss_exponent" << YAML::Value << c.path_loss_exponent;
    out << YAML::Key << "rician_factor_db" << YAML::Value;
    range(c.rician_db_lo, c.rician_db_hi);
    out << YAML::EndMap;

    out << YAML::Key << "channel" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "noise_dbm" << YAML::Value << c.noise_dbm;
    out << YAML::EndMap;

    out << YAML::Key << "design" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "tol" << YAML::Value << c.tol;
    out << YAML::Key << "max_iter" << YAML::Value << c.max_iter;
    out << YAML::Key << "glr_max_sensors" << YAML::Value << c.glr_max_sensors;
    out << YAML::EndMap;

    out << YAML::Key << "eval" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "rules" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (auto r : c.rules) out << to_string(r);
    out << YAML::EndSeq;
    out << YAML::Key << "n_channels" << YAML::Value << c.n_channels;
    out << YAML::Key << "n_trials" << YAML::Value << c.n_trials;
    out << YAML::Key << "target_pfa" << YAML::Value << c.target_pfa;
    out << YAML::Key << "seed" << YAML::Value << c.seed;
    out << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

} // namespace hdf
