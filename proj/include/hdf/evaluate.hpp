#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hdf/channel.hpp"
#include "hdf/design.hpp"
#include "hdf/fusion.hpp"
#include "hdf/sensing.hpp"

namespace hdf {

/// Fully resolved physical scenario (sensor positions already drawn).
struct Scenario {
    SensingParams sensing;
    SensorField field;
    SurveillanceArea area;
    RhsGeometry rhs;
    FeedGeometry feeds;
    LinkParams link;
    double sigma_w2 = 1e-5; // linear, mW

    void validate() const;
    RVec tx_gains() const;
};

enum class RuleId {
    EFuC0,
    EFuC1,
    BFuC0,
    BFuC1,
    IS,
    GLR,         // GLR fusion on the bFuC-0 phases
    GLR_IS_RHS,  // GLR fusion on the IS phases
    GLR_OBS,     // error-free reporting channel
    GLR_RANDOM,  // GLR fusion on the random initial phases
};

const std::vector<RuleId>& all_rules();
std::string to_string(RuleId r);
/// Throws InvalidArgument for unknown names.
RuleId parse_rule(const std::string& name);

struct ExperimentConfig {
    Scenario scenario;
    std::vector<RuleId> rules;
    int n_channels = 100;
    int n_trials = 1000; // per hypothesis per channel
    double target_pfa = 0.01;
    std::uint64_t seed = 1;
    AoOptions ao;
    int glr_max_sensors = GlrKernel::kDefaultMaxSensors;

    void validate() const;
};

struct RocPoint {
    double pfa = 0.0;
    double pd = 0.0;
};

struct PdEstimate {
    double pd = 0.0;
    double stderr_ = 0.0;
    double threshold = 0.0;
    bool few_samples = false; // target_pfa * n0 < 5
};

struct RocReport {
    RuleId rule = RuleId::IS;
    std::vector<double> h0, h1; // sorted ascending
    std::vector<RocPoint> roc;
    PdEstimate at_target;
    double auc = 0.0;
    double mean_deflection = 0.0; // eFuC-1 yardstick; NaN when not applicable
    double design_seconds = 0.0;  // summed over channels
    double fusion_seconds_per_y = 0.0;
};

/// A fusion rule fitted to one channel realisation.
struct FittedRule {
    RuleId rule = RuleId::IS;
    CMat He; // effective channel the rule listens through (empty for GLR_OBS)
    std::shared_ptr<const RhsDesign> design;
    std::shared_ptr<const GlrKernel> glr;
    std::shared_ptr<const ObservationBound> obs;

    /// Statistic for decisions x and channel noise w of one trial.
    double operator()(const RVec& x, const CVec& w, const RVec& tx_gains) const;
};

struct ChannelFit {
    ChannelRealization channel;
    RVec init_phases;
    std::vector<FittedRule> rules;
    std::vector<double> design_seconds; // per rule
    std::vector<double> deflection;     // per rule, NaN for GLR-type rules
};

/// Draws channel realisation `index` and fits every requested rule to it.
ChannelFit fit_channel(const ExperimentConfig& cfg, std::uint64_t index);

/// Statistics of one rule over n_trials, using the per-trial streams of
/// channel `index`. Every rule sees the same decisions and noise in a trial.
std::vector<double> simulate_statistics(const Scenario& scenario, const FittedRule& rule,
                                        Hypothesis hypothesis, int n_trials, std::uint64_t seed,
                                        std::uint64_t index);

/// Stepwise ROC over the pooled sorted values, from (0,0) to (1,1).
std::vector<RocPoint> empirical_roc(const std::vector<double>& h0, const std::vector<double>& h1);

/// Linear interpolation of a ROC polyline at pfa (upper envelope at jumps).
double roc_pd_at(const std::vector<RocPoint>& roc, double pfa);

double roc_auc(const std::vector<RocPoint>& roc);

/// Threshold at the empirical (1 - pfa) quantile of h0; ties at the threshold
/// are split by randomisation so that the false-alarm rate equals pfa exactly.
PdEstimate pd_at_pfa(std::vector<double> h0, std::vector<double> h1, double target_pfa);

enum class Execution { Serial, Parallel };

/// Outer loop over channels, inner loops over trials; reports pooled across channels.
std::vector<RocReport> run_experiment(const ExperimentConfig& cfg,
                                      Execution exec = Execution::Parallel);

/// Fixed false-alarm grid used for CSV output: 0 and 241 log-spaced points in [1e-4, 1].
std::vector<double> pfa_grid();

constexpr int kSchemaVersion = 1;

void write_roc_csv(const std::vector<RocReport>& reports, const std::string& path);
void write_summary_json(const ExperimentConfig& cfg, const std::vector<RocReport>& reports,
                        const std::string& path);
void write_timing_json(const std::vector<RocReport>& reports, const std::string& path);

} // namespace hdf
