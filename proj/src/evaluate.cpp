#include "hdf/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hdf {

void Scenario::validate() const
{
    sensing.validate();
    field.validate();
    if (field.size() == 0) throw InvalidArgument("scenario has no sensors");
    area.validate();
    rhs.validate();
    feeds.validate();
    link.validate();
    if (!(sigma_w2 > 0.0)) throw InvalidArgument("channel noise variance must be > 0");
}

RVec Scenario::tx_gains() const
{
    return Eigen::Map<const RVec>(field.tx_gains.data(), static_cast<Eigen::Index>(field.tx_gains.size()));
}

const std::vector<RuleId>& all_rules()
{
    static const std::vector<RuleId> rules = {RuleId::EFuC0, RuleId::EFuC1,      RuleId::BFuC0,
                                              RuleId::BFuC1, RuleId::IS,         RuleId::GLR,
                                              RuleId::GLR_IS_RHS, RuleId::GLR_OBS, RuleId::GLR_RANDOM};
    return rules;
}

std::string to_string(RuleId r)
{
    switch (r) {
    case RuleId::EFuC0: return "eFuC-0";
    case RuleId::EFuC1: return "eFuC-1";
    case RuleId::BFuC0: return "bFuC-0";
    case RuleId::BFuC1: return "bFuC-1";
    case RuleId::IS: return "IS";
    case RuleId::GLR: return "GLR";
    case RuleId::GLR_IS_RHS: return "GLR+IS-RHS";
    case RuleId::GLR_OBS: return "GLR-obs-bound";
    case RuleId::GLR_RANDOM: return "random-RHS-GLR";
    }
    return "?";
}

RuleId parse_rule(const std::string& name)
{
    for (auto r : all_rules())
        if (to_string(r) == name) return r;
    throw InvalidArgument("unknown rule '" + name + "'");
}

void ExperimentConfig::validate() const
{
    scenario.validate();
    if (rules.empty()) throw InvalidArgument("eval.rules is empty");
    if (n_channels < 1) throw InvalidArgument("eval.n_channels must be >= 1");
    if (n_trials < 1) throw InvalidArgument("eval.n_trials must be >= 1");
    if (!(target_pfa > 0.0 && target_pfa < 1.0)) throw InvalidArgument("eval.target_pfa must lie in (0,1)");
    if (ao.max_iter < 1) throw InvalidArgument("design.max_iter must be >= 1");
    if (!(ao.tol > 0.0)) throw InvalidArgument("design.tol must be > 0");
}

double FittedRule::operator()(const RVec& x, const CVec& w, const RVec& tx_gains) const
{
    if (rule == RuleId::GLR_OBS) return (*obs)(x);
    const CVec y = received_with_noise(He, tx_gains, x, w);
    if (glr) return (*glr)(y);
    return design->statistic(y);
}

namespace {

bool is_glr_channel_rule(RuleId r)
{
    return r == RuleId::GLR || r == RuleId::GLR_IS_RHS || r == RuleId::GLR_RANDOM;
}

// Which RHS design a rule depends on; -1 for none.
int design_key(RuleId r)
{
    switch (r) {
    case RuleId::EFuC0: return 0;
    case RuleId::EFuC1: return 1;
    case RuleId::BFuC0:
    case RuleId::GLR: return 2;
    case RuleId::BFuC1: return 3;
    case RuleId::IS:
    case RuleId::GLR_IS_RHS: return 4;
    default: return -1;
    }
}

} // namespace

ChannelFit fit_channel(const ExperimentConfig& cfg, std::uint64_t index)
{
    using clock = std::chrono::steady_clock;
    const Scenario& s = cfg.scenario;
    const RVec gains = s.tx_gains();

    ChannelFit fit;
    Rng ch_rng = make_rng(cfg.seed, stream::kChannel, index);
    fit.channel = draw_channel(s.field.positions, s.rhs, s.feeds, s.link, ch_rng);
    Rng ph_rng = make_rng(cfg.seed, stream::kInitPhases, index);
    fit.init_phases = random_phases(static_cast<Eigen::Index>(s.rhs.size()), ph_rng);

    const RVec rho0 = rho0_vector(s.field);
    const TargetGrid grid = TargetGrid::build(s.field, s.sensing, s.area);
    std::optional<RVec> rho_bar;
    auto get_rho_bar = [&]() -> const RVec& {
        if (!rho_bar) rho_bar = expected_rho1(s.field, s.sensing, s.area);
        return *rho_bar;
    };

    std::map<int, std::pair<std::shared_ptr<const RhsDesign>, double>> designs;
    auto get_design = [&](int key) {
        auto it = designs.find(key);
        if (it != designs.end()) return it->second;
        DesignObjective obj;
        switch (key) {
        case 0: obj = DesignObjective::efuc(DeflectionKind::Normal, get_rho_bar(), rho0); break;
        case 1: obj = DesignObjective::efuc(DeflectionKind::Modified, get_rho_bar(), rho0); break;
        case 2: obj = DesignObjective::bfuc(DeflectionKind::Normal, grid); break;
        case 3: obj = DesignObjective::bfuc(DeflectionKind::Modified, grid); break;
        default: obj = DesignObjective::ideal_sensors(); break;
        }
        const auto t0 = clock::now();
        auto d = std::make_shared<const RhsDesign>(
            run_ao(obj, fit.channel, gains, s.sigma_w2, fit.init_phases, cfg.ao));
        const double secs = std::chrono::duration<double>(clock::now() - t0).count();
        return designs[key] = {d, secs};
    };

    for (RuleId r : cfg.rules) {
        FittedRule fr;
        fr.rule = r;
        double secs = 0.0;
        double defl = std::numeric_limits<double>::quiet_NaN();
        if (r == RuleId::GLR_OBS) {
            fr.obs = std::make_shared<const ObservationBound>(grid);
        } else {
            RVec phases = fit.init_phases;
            const int key = design_key(r);
            if (key >= 0) {
                auto [d, t] = get_design(key);
                fr.design = d;
                secs = t;
                phases = d->phases;
            }
            fr.He = effective_channel(fit.channel.G, phases, fit.channel.H);
            if (is_glr_channel_rule(r)) {
                const auto t0 = clock::now();
                fr.glr = std::make_shared<const GlrKernel>(fr.He, gains, s.sigma_w2, grid, cfg.glr_max_sensors);
                secs += std::chrono::duration<double>(clock::now() - t0).count();
            } else if (r == RuleId::IS) {
                defl = efuc_deflection(fr.design->fusion.rules[0].a, fr.He, gains, get_rho_bar(), rho0,
                                       DeflectionKind::Modified, s.sigma_w2);
            } else {
                defl = fr.design->objective;
            }
        }
        fit.rules.push_back(std::move(fr));
        fit.design_seconds.push_back(secs);
        fit.deflection.push_back(defl);
    }
    return fit;
}

namespace {

struct TrialDraw {
    RVec x;
    CVec w;
};

TrialDraw draw_trial(const Scenario& s, Hypothesis hyp, std::uint64_t seed, std::uint64_t index,
                     std::uint64_t t)
{
    Rng rng = make_rng(seed, stream::kTrial, index, static_cast<std::uint64_t>(hyp), t);
    const Vec3 pt = hyp == Hypothesis::H1 ? s.area.sample_uniform(rng) : Vec3::Zero();
    TrialDraw d;
    d.x = sample_decisions(s.field, s.sensing, hyp, pt, rng);
    d.w = sample_noise(static_cast<Eigen::Index>(s.feeds.size()), s.sigma_w2, rng);
    return d;
}

} // namespace

std::vector<double> simulate_statistics(const Scenario& scenario, const FittedRule& rule,
                                        Hypothesis hypothesis, int n_trials, std::uint64_t seed,
                                        std::uint64_t index)
{
    const RVec gains = scenario.tx_gains();
    std::vector<double> out(static_cast<std::size_t>(std::max(n_trials, 0)));
    for (int t = 0; t < n_trials; ++t) {
        const auto d = draw_trial(scenario, hypothesis, seed, index, static_cast<std::uint64_t>(t));
        out[static_cast<std::size_t>(t)] = rule(d.x, d.w, gains);
    }
    return out;
}

std::vector<RocPoint> empirical_roc(const std::vector<double>& h0_in, const std::vector<double>& h1_in)
{
    if (h0_in.empty() || h1_in.empty()) throw InvalidArgument("empirical_roc: empty sample set");
    std::vector<double> h0 = h0_in, h1 = h1_in;
    std::sort(h0.begin(), h0.end());
    std::sort(h1.begin(), h1.end());
    const double n0 = static_cast<double>(h0.size());
    const double n1 = static_cast<double>(h1.size());

    std::vector<RocPoint> roc{{0.0, 0.0}};
    std::size_t i0 = h0.size(), i1 = h1.size();
    while (i0 > 0 || i1 > 0) {
        double v = -std::numeric_limits<double>::infinity();
        if (i0 > 0) v = std::max(v, h0[i0 - 1]);
        if (i1 > 0) v = std::max(v, h1[i1 - 1]);
        while (i0 > 0 && h0[i0 - 1] >= v) --i0;
        while (i1 > 0 && h1[i1 - 1] >= v) --i1;
        roc.push_back({(n0 - static_cast<double>(i0)) / n0, (n1 - static_cast<double>(i1)) / n1});
    }
    return roc;
}

double roc_pd_at(const std::vector<RocPoint>& roc, double pfa)
{
    if (roc.empty()) throw InvalidArgument("roc_pd_at: empty ROC");
    if (pfa <= roc.front().pfa) {
        double best = roc.front().pd;
        for (const auto& p : roc)
            if (p.pfa <= pfa) best = std::max(best, p.pd);
        return best;
    }
    for (std::size_t i = 1; i < roc.size(); ++i) {
        if (roc[i].pfa >= pfa) {
            if (roc[i].pfa == pfa) {
                double best = roc[i].pd;
                for (std::size_t j = i + 1; j < roc.size() && roc[j].pfa == pfa; ++j) best = std::max(best, roc[j].pd);
                return best;
            }
            const auto& a = roc[i - 1];
            const auto& b = roc[i];
            const double f = (pfa - a.pfa) / (b.pfa - a.pfa);
            return a.pd + f * (b.pd - a.pd);
        }
    }
    return roc.back().pd;
}

double roc_auc(const std::vector<RocPoint>& roc)
{
    double area = 0.0;
    for (std::size_t i = 1; i < roc.size(); ++i)
        area += (roc[i].pfa - roc[i - 1].pfa) * 0.5 * (roc[i].pd + roc[i - 1].pd);
    return area;
}

PdEstimate pd_at_pfa(std::vector<double> h0, std::vector<double> h1, double target_pfa)
{
    if (h0.empty() || h1.empty()) throw InvalidArgument("pd_at_pfa: empty sample set");
    if (!(target_pfa > 0.0 && target_pfa < 1.0)) throw InvalidArgument("pd_at_pfa: target_pfa must lie in (0,1)");
    std::sort(h0.begin(), h0.end());
    const auto n0 = h0.size();
    const double allowed = target_pfa * static_cast<double>(n0);
    const auto k = std::min(static_cast<std::size_t>(std::floor(allowed)), n0 - 1);

    PdEstimate est;
    est.few_samples = allowed < 5.0;
    const double gamma = h0[n0 - 1 - k];
    est.threshold = gamma;

    const auto above0 = static_cast<double>(h0.end() - std::upper_bound(h0.begin(), h0.end(), gamma));
    const auto tie0 = static_cast<double>(std::count(h0.begin(), h0.end(), gamma));
    const double frac = tie0 > 0.0 ? std::clamp((allowed - above0) / tie0, 0.0, 1.0) : 0.0;

    double above1 = 0.0, tie1 = 0.0;
    for (double v : h1) {
        if (v > gamma) above1 += 1.0;
        else if (v == gamma) tie1 += 1.0;
    }
    const double n1 = static_cast<double>(h1.size());
    est.pd = (above1 + frac * tie1) / n1;
    est.stderr_ = std::sqrt(est.pd * (1.0 - est.pd) / n1);
    return est;
}

std::vector<RocReport> run_experiment(const ExperimentConfig& cfg, Execution exec)
{
    using clock = std::chrono::steady_clock;
    cfg.validate();
    const Scenario& s = cfg.scenario;
    const RVec gains = s.tx_gains();
    const auto nr = cfg.rules.size();
    const auto nc = static_cast<std::size_t>(cfg.n_channels);
    const auto nt = static_cast<std::size_t>(cfg.n_trials);

    std::vector<std::vector<double>> h0(nr, std::vector<double>(nc * nt));
    std::vector<std::vector<double>> h1(nr, std::vector<double>(nc * nt));
    std::vector<double> design_s(nr * nc, 0.0), fusion_s(nr * nc, 0.0), defl(nr * nc, 0.0);
    std::vector<std::string> errors(nc);

    auto body = [&](std::size_t c) {
        try {
            const ChannelFit fit = fit_channel(cfg, c);
            for (std::size_t r = 0; r < nr; ++r) {
                design_s[r * nc + c] = fit.design_seconds[r];
                defl[r * nc + c] = fit.deflection[r];
            }
            for (auto hyp : {Hypothesis::H0, Hypothesis::H1}) {
                auto& dest = hyp == Hypothesis::H0 ? h0 : h1;
                for (std::size_t t = 0; t < nt; ++t) {
                    const auto d = draw_trial(s, hyp, cfg.seed, c, t);
                    for (std::size_t r = 0; r < nr; ++r) {
                        const auto t0 = clock::now();
                        dest[r][c * nt + t] = fit.rules[r](d.x, d.w, gains);
                        fusion_s[r * nc + c] += std::chrono::duration<double>(clock::now() - t0).count();
                    }
                }
            }
        } catch (const std::exception& e) {
            errors[c] = e.what();
        }
    };

    if (exec == Execution::Parallel) {
        const auto n = static_cast<std::int64_t>(nc);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
        for (std::int64_t c = 0; c < n; ++c) body(static_cast<std::size_t>(c));
    } else {
        for (std::size_t c = 0; c < nc; ++c) body(c);
    }
    for (std::size_t c = 0; c < nc; ++c)
        if (!errors[c].empty()) throw Error("channel " + std::to_string(c) + ": " + errors[c]);

    std::vector<RocReport> out;
    for (std::size_t r = 0; r < nr; ++r) {
        RocReport rep;
        rep.rule = cfg.rules[r];
        rep.h0 = std::move(h0[r]);
        rep.h1 = std::move(h1[r]);
        std::sort(rep.h0.begin(), rep.h0.end());
        std::sort(rep.h1.begin(), rep.h1.end());
        rep.roc = empirical_roc(rep.h0, rep.h1);
        rep.at_target = pd_at_pfa(rep.h0, rep.h1, cfg.target_pfa);
        rep.auc = roc_auc(rep.roc);
        double dsum = 0.0, tsum = 0.0, fsum = 0.0;
        for (std::size_t c = 0; c < nc; ++c) {
            dsum += defl[r * nc + c];
            tsum += design_s[r * nc + c];
            fsum += fusion_s[r * nc + c];
        }
        rep.mean_deflection = dsum / static_cast<double>(nc);
        rep.design_seconds = tsum;
        rep.fusion_seconds_per_y = fsum / static_cast<double>(2 * nc * nt);
        out.push_back(std::move(rep));
    }
    return out;
}

std::vector<double> pfa_grid()
{
    std::vector<double> g{0.0};
    for (int i = 0; i <= 240; ++i) g.push_back(std::pow(10.0, -4.0 + 4.0 * i / 240.0));
    return g;
}

namespace {

std::ofstream open_out(const std::string& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open '" + path + "' for writing");
    return f;
}

nlohmann::ordered_json number_or_null(double v)
{
    return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

} // namespace

void write_roc_csv(const std::vector<RocReport>& reports, const std::string& path)
{
    auto f = open_out(path);
    f << "schema_version,rule,pfa,pd\n";
    f << std::setprecision(10);
    const auto grid = pfa_grid();
    for (const auto& rep : reports)
        for (double p : grid)
            f << kSchemaVersion << ',' << to_string(rep.rule) << ',' << p << ',' << roc_pd_at(rep.roc, p) << '\n';
}

void write_summary_json(const ExperimentConfig& cfg, const std::vector<RocReport>& reports,
                        const std::string& path)
{
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["seed"] = cfg.seed;
    j["n_channels"] = cfg.n_channels;
    j["n_trials"] = cfg.n_trials;
    j["target_pfa"] = cfg.target_pfa;
    j["sensors"] = cfg.scenario.field.size();
    j["rhs_elements"] = cfg.scenario.rhs.size();
    j["feeds"] = cfg.scenario.feeds.size();
    j["grid_points"] = cfg.scenario.area.grid_count();
    auto& rules = j["rules"];
    rules = nlohmann::ordered_json::array();
    for (const auto& rep : reports) {
        nlohmann::ordered_json r;
        r["rule"] = to_string(rep.rule);
        r["pd"] = rep.at_target.pd;
        r["stderr"] = rep.at_target.stderr_;
        r["threshold"] = rep.at_target.threshold;
        r["few_h0_samples"] = rep.at_target.few_samples;
        r["auc"] = rep.auc;
        r["mean_deflection"] = number_or_null(rep.mean_deflection);
        r["n_h0"] = rep.h0.size();
        r["n_h1"] = rep.h1.size();
        rules.push_back(std::move(r));
    }
    auto f = open_out(path);
    f << j.dump(2) << '\n';
}

void write_timing_json(const std::vector<RocReport>& reports, const std::string& path)
{
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    auto& rules = j["rules"];
    rules = nlohmann::ordered_json::array();
    for (const auto& rep : reports) {
        nlohmann::ordered_json r;
        r["rule"] = to_string(rep.rule);
        r["design_seconds_total"] = rep.design_seconds;
        r["fusion_seconds_per_observation"] = rep.fusion_seconds_per_y;
        rules.push_back(std::move(r));
    }
    auto f = open_out(path);
    f << j.dump(2) << '\n';
}

} // namespace hdf
