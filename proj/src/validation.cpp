#include "hdf/validation.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace hdf {

double naive_glr(const CVec& y, const CMat& He, const RVec& tx_gains, double sigma_w2,
                 const TargetGrid& grid)
{
    const auto k = He.cols();
    const CMat HD = He * tx_gains.cast<cplx>().asDiagonal();
    std::vector<double> s1(grid.size(), 0.0);
    double s0 = 0.0;
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << k); ++bits) {
        RVec x(k);
        for (Eigen::Index i = 0; i < k; ++i) x[i] = ((bits >> i) & 1U) ? 1.0 : -1.0;
        const double p = std::exp(-(y - HD * x.cast<cplx>()).squaredNorm() / sigma_w2);
        double f0 = 1.0;
        for (Eigen::Index i = 0; i < k; ++i) f0 *= x[i] > 0 ? grid.rho0[i] : 1.0 - grid.rho0[i];
        s0 += p * f0;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            double f1 = 1.0;
            for (Eigen::Index i = 0; i < k; ++i) f1 *= x[i] > 0 ? grid.rho1[j][i] : 1.0 - grid.rho1[j][i];
            s1[j] += p * f1;
        }
    }
    double best = 0.0;
    for (double v : s1) best = std::max(best, v);
    return std::log(best / s0);
}

namespace {

int uniform_int(Rng& rng, int lo, int hi)
{
    return lo + static_cast<int>(std::floor(uniform01(rng) * (hi - lo + 1)));
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

CMat random_cmat(Eigen::Index r, Eigen::Index c, Rng& rng, double var = 1.0)
{
    CMat m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = complex_normal(rng, var);
    return m;
}

RVec random_probs(Eigen::Index k, Rng& rng, double lo, double hi)
{
    RVec r(k);
    for (Eigen::Index i = 0; i < k; ++i) r[i] = uniform(rng, lo, hi);
    return r;
}

AugmentedVector random_unit(Eigen::Index half, Rng& rng)
{
    CVec t(half);
    for (Eigen::Index i = 0; i < half; ++i) t[i] = complex_normal(rng, 1.0);
    return AugmentedVector(t).normalized();
}

RVec random_phase_vec(Eigen::Index m, Rng& rng)
{
    RVec p(m);
    for (Eigen::Index i = 0; i < m; ++i) p[i] = kTwoPi * uniform01(rng);
    return p;
}

template <class F>
CheckResult timed(const std::string& name, F&& body)
{
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    r.name = name;
    try {
        body(r);
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

} // namespace

RandomInstance random_instance(Rng& rng, int max_k, int max_side, int max_feeds, int grid_side)
{
    RandomInstance in;
    const int k = uniform_int(rng, 2, max_k);
    const int side = uniform_int(rng, 1, max_side);
    const int n = uniform_int(rng, 1, max_feeds);

    in.sensing.theta_power = db_to_linear(uniform(rng, 5.0, 20.0));
    in.sensing.local_pfa = uniform(rng, 0.02, 0.2);
    in.field = SensorField::random_box(static_cast<std::size_t>(k), Vec3(0, 0, 0), Vec3(40, 40, 3),
                                       in.sensing, 1.0, rng);
    for (auto& g : in.field.tx_gains) g = uniform(rng, 0.5, 1.5);
    in.tx_gains = Eigen::Map<const RVec>(in.field.tx_gains.data(), k);

    SurveillanceArea area;
    area.grid_side = grid_side;
    area.quad_side = 16;
    in.grid = TargetGrid::build(in.field, in.sensing, area);
    in.rho0 = in.grid.rho0;
    in.rho_bar = expected_rho1(in.field, in.sensing, area);

    const auto rhs = RhsGeometry::planar(Vec3(70, 20, 10), side, side, 1.0 / 3.0, 1.0 / 3.0, 1.5, 1.0);
    const auto feeds = FeedGeometry::grid(Vec3(68, 18, 10), n, 1, 0.5, 1.5);
    in.channel = draw_channel(in.field.positions, rhs, feeds, LinkParams{}, rng);
    in.sigma_w2 = std::pow(10.0, uniform(rng, -8.0, -4.0));
    return in;
}

CheckResult check_mm_monotonicity(int n_scenarios, std::uint64_t seed)
{
    return timed("MM/AO objective traces are non-decreasing", [&](CheckResult& r) {
        int traces = 0, bad = 0;
        double worst = 0.0;
        for (int s = 0; s < n_scenarios; ++s) {
            Rng rng = make_rng(seed, static_cast<std::uint64_t>(s));
            const auto in = random_instance(rng, 8, 4, 2);
            const RVec init = random_phase_vec(in.channel.H.rows(), rng);
            AoOptions opt;
            opt.max_iter = 40;
            opt.stop_on_convergence = false;
            const std::vector<DesignObjective> objectives = {
                DesignObjective::efuc(DeflectionKind::Normal, in.rho_bar, in.rho0),
                DesignObjective::efuc(DeflectionKind::Modified, in.rho_bar, in.rho0),
                DesignObjective::bfuc(DeflectionKind::Normal, in.grid),
                DesignObjective::bfuc(DeflectionKind::Modified, in.grid),
                DesignObjective::ideal_sensors()};
            for (const auto& obj : objectives) {
                const auto d = run_ao(obj, in.channel, in.tx_gains, in.sigma_w2, init, opt);
                ++traces;
                bool ok = d.objective + 1e-9 * std::abs(d.objective) >= d.objective_trace.back();
                for (std::size_t i = 1; i < d.objective_trace.size(); ++i) {
                    const double prev = d.objective_trace[i - 1];
                    const double drop = (prev - d.objective_trace[i]) / std::max(std::abs(prev), 1e-300);
                    worst = std::max(worst, drop);
                    if (drop > 1e-9) ok = false;
                }
                if (!ok) ++bad;
            }
        }
        r.passed = bad == 0;
        std::ostringstream os;
        os << traces << " traces, " << bad << " violating, worst relative drop " << worst;
        r.detail = os.str();
    });
}

CheckResult check_step_a_optimality(int n_instances, int n_probes, std::uint64_t seed)
{
    return timed("Step A attains the generalised Rayleigh bound", [&](CheckResult& r) {
        double worst_rel = 0.0;
        int probe_wins = 0;
        for (int s = 0; s < n_instances; ++s) {
            Rng rng = make_rng(seed, static_cast<std::uint64_t>(s));
            const int k = uniform_int(rng, 2, 6);
            const int n = uniform_int(rng, 1, 3);
            const CMat He = random_cmat(n, k, rng);
            const RVec gains = random_probs(k, rng, 0.5, 1.5);
            const RVec rho0 = random_probs(k, rng, 0.01, 0.3);
            const RVec rho_bar = random_probs(k, rng, 0.3, 0.95);
            const double sigma2 = std::pow(10.0, uniform(rng, -3.0, 0.0));
            const auto kind = uniform01(rng) < 0.5 ? DeflectionKind::Normal : DeflectionKind::Modified;

            const auto a = step_a_efuc(He, gains, rho_bar, rho0, kind, sigma2);
            const RVec c = decision_cov_diag(kind == DeflectionKind::Normal ? rho0 : rho_bar);
            const CMat cov = augmented_cov(He, gains, c, sigma2);
            const CVec dmu = augmented_mean_diff(He, gains, rho_bar - rho0);
            const double bound = dmu.dot(cov.inverse() * dmu).real();
            const double at_opt = deflection_wl(a, dmu, cov);
            worst_rel = std::max(worst_rel, std::abs(at_opt - bound) / bound);
            for (int p = 0; p < n_probes; ++p)
                if (deflection_wl(random_unit(n, rng), dmu, cov) > at_opt * (1.0 + 1e-12)) ++probe_wins;
        }
        r.passed = worst_rel <= 1e-8 && probe_wins == 0;
        std::ostringstream os;
        os << "worst relative gap " << worst_rel << ", probes beating the optimum " << probe_wins;
        r.detail = os.str();
    });
}

CheckResult check_ratio_identity(int n_instances, std::uint64_t seed)
{
    return timed("design matrices reproduce the end-to-end deflection ratio", [&](CheckResult& r) {
        double worst = 0.0;
        int evaluated = 0;
        for (int s = 0; s < n_instances; ++s) {
            Rng rng = make_rng(seed, static_cast<std::uint64_t>(s));
            const int k = uniform_int(rng, 1, 6);
            const int m = uniform_int(rng, 1, 9);
            const int n = uniform_int(rng, 1, 3);
            const CMat G = random_cmat(n, m, rng);
            const CMat H = random_cmat(m, k, rng);
            const RVec gains = random_probs(k, rng, 0.5, 1.5);
            const RVec rho0 = random_probs(k, rng, 0.01, 0.3);
            const double sigma2 = std::pow(10.0, uniform(rng, -3.0, 0.0));
            for (int branch = 0; branch < 3; ++branch) {
                const RVec rho1 = random_probs(k, rng, 0.3, 0.95);
                for (auto kind : {DeflectionKind::Normal, DeflectionKind::Modified}) {
                    const RVec c = decision_cov_diag(kind == DeflectionKind::Normal ? rho0 : rho1);
                    const auto a = random_unit(n, rng);
                    const auto dm = build_design_matrices(G, H, gains, rho1 - rho0, a, c, sigma2, true);
                    const RVec theta = random_phase_vec(m, rng);
                    const CVec t = augment(phase_factors(theta));
                    const double ratio = t.dot(dm.Xi * t).real() / t.dot(dm.Psi * t).real();
                    const double compact = dm.xi_quad(t) / dm.psi_quad(t);

                    const CMat He = effective_channel(G, theta, H);
                    const double defl = deflection_wl(a, augmented_mean_diff(He, gains, rho1 - rho0),
                                                      augmented_cov(He, gains, c, sigma2));
                    const double ref = defl / 4.0;
                    const double scale = std::max(1.0, std::abs(ref));
                    worst = std::max({worst, std::abs(ratio - ref) / scale, std::abs(compact - ref) / scale});
                    ++evaluated;
                }
            }
        }
        r.passed = worst <= 1e-9;
        std::ostringstream os;
        os << evaluated << " (instance, branch, kind) cases, worst scaled error " << worst;
        r.detail = os.str();
    });
}

CheckResult check_glr_enumeration(int n_draws, std::uint64_t seed)
{
    return timed("Gray-code GLR equals the naive double sum", [&](CheckResult& r) {
        double worst = 0.0, worst_par = 0.0;
        for (int s = 0; s < n_draws; ++s) {
            Rng rng = make_rng(seed, static_cast<std::uint64_t>(s));
            const int k = uniform_int(rng, 1, 6);
            const int n = uniform_int(rng, 1, 3);
            const int nt = uniform_int(rng, 1, 4);
            const CMat He = random_cmat(n, k, rng, 1.0 / k);
            const RVec gains = random_probs(k, rng, 0.5, 1.5);
            TargetGrid grid;
            grid.rho0 = random_probs(k, rng, 0.01, 0.3);
            for (int j = 0; j < nt; ++j) {
                grid.points.emplace_back(uniform(rng, 0, 40), uniform(rng, 0, 40), 0.0);
                grid.rho1.push_back(random_probs(k, rng, 0.05, 0.95));
            }
            const double sigma2 = uniform(rng, 0.5, 3.0);
            const RVec x = sample_decisions(grid.rho1[0], rng);
            const CVec y = sample_received(He, gains, x, sigma2, rng);

            const GlrKernel kernel(He, gains, sigma2, grid);
            const double naive = naive_glr(y, He, gains, sigma2, grid);
            const double fast = kernel.evaluate_serial(y);
            const double par = kernel(y);
            const double scale = std::max(1.0, std::abs(naive));
            worst = std::max(worst, std::abs(fast - naive) / scale);
            worst_par = std::max(worst_par, std::abs(par - naive) / scale);
        }
        r.passed = worst <= 1e-9 && worst_par <= 1e-9;
        std::ostringstream os;
        os << "worst error serial " << worst << ", parallel " << worst_par;
        r.detail = os.str();
    });
}

CheckResult check_sensing_oracles(int n_draws, std::uint64_t seed)
{
    return timed("sensing layer matches sampling and integration", [&](CheckResult& r) {
        Rng rng = make_rng(seed);
        std::ostringstream os;
        bool ok = true;

        // Energy detector against direct sampling of the local observation.
        double worst_z = 0.0;
        for (int c = 0; c < 6; ++c) {
            const double sigma2 = uniform(rng, 0.5, 2.0);
            const double gamma = threshold_from_local_pfa(uniform(rng, 0.01, 0.3), sigma2);
            const double theta = db_to_linear(uniform(rng, 0.0, 20.0));
            const double g = uniform(rng, 0.05, 1.0);
            const double pf = local_pfa(gamma, sigma2);
            const double pd = local_pd(gamma, sigma2, theta, g);
            int hits0 = 0, hits1 = 0;
            for (int i = 0; i < n_draws; ++i) {
                const double r0 = std::sqrt(sigma2) * standard_normal(rng);
                const double r1 = std::sqrt(sigma2 + theta * g * g) * standard_normal(rng);
                hits0 += r0 * r0 > gamma;
                hits1 += r1 * r1 > gamma;
            }
            const double nd = n_draws;
            const double z0 = std::abs(hits0 / nd - pf) / std::sqrt(pf * (1 - pf) / nd);
            const double z1 = std::abs(hits1 / nd - pd) / std::sqrt(std::max(pd * (1 - pd), 1e-12) / nd);
            worst_z = std::max({worst_z, z0, z1});
        }
        ok = ok && worst_z <= 3.0;
        os << "detector worst z " << worst_z;

        // Directivity integrates to 4 pi over the sphere.
        double worst_norm = 0.0;
        for (double q : {0.0, 0.5, 1.5, 3.0}) {
            const int steps = 20000;
            const double h = (kPi / 2.0) / steps;
            double acc = 0.0;
            for (int i = 0; i <= steps; ++i) {
                const double th = i * h;
                const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
                acc += w * directivity(std::cos(th), q) * std::sin(th);
            }
            const double integral = acc * h / 3.0 * kTwoPi / (4.0 * kPi);
            worst_norm = std::max(worst_norm, std::abs(integral - 1.0));
        }
        ok = ok && worst_norm <= 1e-3 && std::abs(directivity(1.0, 1.5) - 8.0) < 1e-12;
        os << ", directivity normalisation error " << worst_norm;

        // Rician draws carry the path-loss power on average.
        const auto rhs = RhsGeometry::planar(Vec3(70, 20, 10), 4, 4, 1.0 / 3.0, 1.0 / 3.0, 1.5, 1.0);
        const LinkParams link;
        const Vec3 pos(10, 25, 1);
        const int draws = std::max(1000, n_draws / 5);
        double sum = 0.0, sum2 = 0.0;
        double pl = 0.0;
        for (int i = 0; i < draws; ++i) {
            const auto [h, meta] = sensor_rhs_channel(pos, rhs, link, rng);
            pl = path_loss(meta.distance, link);
            const double v = h.squaredNorm() / (static_cast<double>(rhs.size()) * pl);
            sum += v;
            sum2 += v * v;
        }
        const double mean = sum / draws;
        const double sd = std::sqrt(std::max(sum2 / draws - mean * mean, 0.0) / draws);
        const double z = std::abs(mean - 1.0) / sd;
        ok = ok && z <= 3.0;
        os << ", Rician power z " << z;

        r.passed = ok;
        r.detail = os.str();
    });
}

std::vector<CheckResult> run_validation_suite()
{
    return {check_mm_monotonicity(), check_step_a_optimality(), check_ratio_identity(),
            check_glr_enumeration(), check_sensing_oracles()};
}

} // namespace hdf
