// hdfsim: scenario design, ROC and sweep runner.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hdf/config.hpp"
#include "hdf/validation.hpp"

namespace fs = std::filesystem;
using namespace hdf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Common {
    std::string config;
    std::string profile = "paper";
    std::string out;
    std::string rules;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
};

ScenarioConfig resolve(const Common& o)
{
    ScenarioConfig base;
    if (o.profile == "desk") base = ScenarioConfig::desk();
    else if (o.profile == "paper") base = ScenarioConfig::paper();
    else throw ConfigError("--profile: expected desk or paper, got '" + o.profile + "'");
    ScenarioConfig c = o.config.empty() ? base : load_config(o.config, base);
    if (o.seed_set) c.seed = o.seed;
    if (!o.rules.empty()) {
        c.rules.clear();
        std::stringstream ss(o.rules);
        std::string name;
        while (std::getline(ss, name, ',')) {
            try {
                c.rules.push_back(parse_rule(name));
            } catch (const InvalidArgument& e) {
                throw ConfigError(std::string("--rules: ") + e.what());
            }
        }
    }
    c.validate();
    return c;
}

void ensure_dir(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
}

int cmd_design(const ScenarioConfig& c, const std::string& out_path)
{
    const ExperimentConfig cfg = c.experiment();
    std::vector<RuleId> designed;
    for (auto r : {RuleId::EFuC0, RuleId::EFuC1, RuleId::BFuC0, RuleId::BFuC1, RuleId::IS})
        if (std::find(cfg.rules.begin(), cfg.rules.end(), r) != cfg.rules.end()) designed.push_back(r);
    if (designed.empty()) throw ConfigError("eval.rules: cmd design needs at least one designed rule");

    ExperimentConfig sub = cfg;
    sub.rules = designed;
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["seed"] = cfg.seed;
    auto& channels = j["channels"];
    channels = nlohmann::ordered_json::array();
    std::vector<double> sums(designed.size(), 0.0);
    for (int ch = 0; ch < cfg.n_channels; ++ch) {
        ChannelFit fit;
        try {
            fit = fit_channel(sub, static_cast<std::uint64_t>(ch));
        } catch (const std::exception& e) {
            throw Error("channel " + std::to_string(ch) + ": " + e.what());
        }
        nlohmann::ordered_json cj;
        cj["channel"] = ch;
        auto& dj = cj["designs"];
        dj = nlohmann::ordered_json::array();
        for (std::size_t r = 0; r < designed.size(); ++r) {
            const auto& d = *fit.rules[r].design;
            nlohmann::ordered_json e;
            e["rule"] = to_string(designed[r]);
            e["iterations"] = d.iterations;
            e["converged"] = d.converged;
            e["objective"] = d.objective;
            e["deflection"] = fit.deflection[r];
            e["objective_trace"] = d.objective_trace;
            e["phases"] = std::vector<double>(d.phases.data(), d.phases.data() + d.phases.size());
            dj.push_back(std::move(e));
            sums[r] += fit.deflection[r];
        }
        channels.push_back(std::move(cj));
    }
    auto& means = j["mean_deflection"];
    means = nlohmann::ordered_json::object();
    for (std::size_t r = 0; r < designed.size(); ++r)
        means[to_string(designed[r])] = sums[r] / cfg.n_channels;

    const fs::path p(out_path);
    if (p.has_parent_path()) ensure_dir(p.parent_path().string());
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw Error("cannot open '" + out_path + "' for writing");
    f << j.dump(2) << '\n';
    std::cout << "wrote " << out_path << '\n';
    return kExitOk;
}

void print_reports(const std::vector<RocReport>& reports, double pfa)
{
    std::cout << "rule               pd@" << pfa << "   stderr    auc\n";
    for (const auto& r : reports) {
        std::printf("%-18s %7.4f  %7.4f  %6.4f\n", to_string(r.rule).c_str(), r.at_target.pd,
                    r.at_target.stderr_, r.auc);
    }
}

int cmd_roc(const ScenarioConfig& c, const std::string& out_dir)
{
    const ExperimentConfig cfg = c.experiment();
    const auto reports = run_experiment(cfg);
    ensure_dir(out_dir);
    write_roc_csv(reports, (fs::path(out_dir) / "roc.csv").string());
    write_summary_json(cfg, reports, (fs::path(out_dir) / "summary.json").string());
    write_timing_json(reports, (fs::path(out_dir) / "timing.json").string());
    print_reports(reports, cfg.target_pfa);
    return kExitOk;
}

int isqrt_exact(int v, const char* what)
{
    const int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(v))));
    if (r * r != v) throw ConfigError(std::string("--values: ") + what + " must be a perfect square, got " + std::to_string(v));
    return r;
}

int cmd_sweep(const ScenarioConfig& c, const std::string& axis, const std::vector<int>& values,
              const std::string& out_dir)
{
    if (values.empty()) throw ConfigError("--values: at least one value is required");
    if (axis != "K" && axis != "M" && axis != "N" && axis != "Nt")
        throw ConfigError("--axis: expected one of K, M, N, Nt");
    ensure_dir(out_dir);
    const auto path = (fs::path(out_dir) / "sweep.csv").string();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open '" + path + "' for writing");
    f << "schema_version,axis,value,rule,pd,stderr\n" << std::setprecision(10);
    for (int v : values) {
        ScenarioConfig s = c;
        if (axis == "K") s.sensors = v;
        else if (axis == "M") s.rhs_side = isqrt_exact(v, "M");
        else if (axis == "N") {
            s.feed_count = v;
            s.feed_layout = default_layout(v);
        } else s.grid_side = isqrt_exact(v, "Nt");
        s.validate();
        const ExperimentConfig cfg = s.experiment();
        const auto reports = run_experiment(cfg);
        std::cout << axis << " = " << v << '\n';
        print_reports(reports, cfg.target_pfa);
        for (const auto& r : reports)
            f << kSchemaVersion << ',' << axis << ',' << v << ',' << to_string(r.rule) << ','
              << r.at_target.pd << ',' << r.at_target.stderr_ << '\n';
    }
    std::cout << "wrote " << path << '\n';
    return kExitOk;
}

int cmd_validate()
{
    const auto results = run_validation_suite();
    bool ok = true;
    for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name;
        if (!r.detail.empty()) std::cout << "  (" << r.detail << ")";
        std::cout << '\n';
        ok = ok && r.passed;
    }
    return ok ? kExitOk : kExitRuntime;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Holographic decision-fusion simulator"};
    app.require_subcommand(1);
    Common o;
    std::string axis;
    std::vector<int> values;

    auto add_common = [&](CLI::App* sub, const std::string& out_default, const std::string& out_help) {
        sub->add_option("--config", o.config, "YAML scenario file (keys override the profile)");
        sub->add_option("--profile", o.profile, "Base profile: desk or paper")->capture_default_str();
        sub->add_option("--out", o.out, out_help + " (default: " + out_default + ")");
        sub->add_option("--rules", o.rules, "Comma-separated rule names");
        sub->add_option("--threads", o.threads, "OpenMP thread count (0 = runtime default)");
        sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) {
            o.seed = s;
            o.seed_set = true;
        }, "Override the experiment seed");
    };

    auto* design = app.add_subcommand("design", "Run the RHS designs and write per-channel summaries");
    add_common(design, "design.json", "Output JSON file");
    auto* roc = app.add_subcommand("roc", "Monte Carlo ROC experiment");
    add_common(roc, "out", "Output directory");
    auto* sweep = app.add_subcommand("sweep", "Repeat the experiment along one axis");
    add_common(sweep, "out", "Output directory");
    sweep->add_option("--axis", axis, "K, M, N or Nt")->required();
    sweep->add_option("--values", values, "Axis values")->required()->delimiter(',');
    app.add_subcommand("validate", "Run the oracle suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

#ifdef _OPENMP
    if (o.threads > 0) omp_set_num_threads(o.threads);
#endif

    try {
        if (app.got_subcommand("validate")) return cmd_validate();
        if (o.out.empty()) o.out = app.got_subcommand("design") ? "design.json" : "out";
        const ScenarioConfig c = resolve(o);
        if (app.got_subcommand("design")) return cmd_design(c, o.out);
        if (app.got_subcommand("roc")) return cmd_roc(c, o.out);
        return cmd_sweep(c, axis, values, o.out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
