#include "hdf/design.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hdf {

const char* to_string(DesignFamily f)
{
    switch (f) {
    case DesignFamily::EFuC: return "eFuC";
    case DesignFamily::BFuC: return "bFuC";
    case DesignFamily::IS: return "IS";
    }
    return "?";
}

DesignObjective DesignObjective::efuc(DeflectionKind kind, RVec rho_bar, RVec rho0)
{
    DesignObjective o;
    o.family = DesignFamily::EFuC;
    o.kind = kind;
    o.rho_bar = std::move(rho_bar);
    o.rho0 = std::move(rho0);
    return o;
}

DesignObjective DesignObjective::bfuc(DeflectionKind kind, TargetGrid grid)
{
    DesignObjective o;
    o.family = DesignFamily::BFuC;
    o.kind = kind;
    o.rho0 = grid.rho0;
    o.grid = std::move(grid);
    return o;
}

DesignObjective DesignObjective::ideal_sensors()
{
    DesignObjective o;
    o.family = DesignFamily::IS;
    return o;
}

void DesignObjective::validate(Eigen::Index k) const
{
    if (family == DesignFamily::EFuC) {
        if (!rho_bar || grid) throw InvalidArgument("eFuC objective needs rho_bar and no grid");
        if (rho_bar->size() != k || rho0.size() != k)
            throw DimensionMismatch("eFuC objective: probability vectors must have K entries");
    } else if (family == DesignFamily::BFuC) {
        if (!grid || rho_bar) throw InvalidArgument("bFuC objective needs a grid and no rho_bar");
        if (grid->size() == 0) throw InvalidArgument("bFuC objective: empty grid");
        if (grid->rho0.size() != k) throw DimensionMismatch("bFuC objective: rho0 must have K entries");
        for (const auto& r : grid->rho1)
            if (r.size() != k) throw DimensionMismatch("bFuC objective: grid rho1 must have K entries");
    }
}

CVec DesignMatrices::xi_times(const CVec& t) const { return v * v.dot(t); }

CVec DesignMatrices::psi_times(const CVec& t) const
{
    const CVec d = delta0 * t;
    return delta0.adjoint() * (s_diag.cast<cplx>().asDiagonal() * d) + noise * t;
}

double DesignMatrices::xi_quad(const CVec& t) const { return std::norm(v.dot(t)); }

double DesignMatrices::psi_quad(const CVec& t) const
{
    const CVec d = delta0 * t;
    return (s_diag.array() * d.array().abs2()).sum() + noise * t.squaredNorm();
}

double largest_eigenvalue(const CMat& m)
{
    if (m.rows() != m.cols() || m.rows() == 0) throw InvalidArgument("largest_eigenvalue: matrix must be square and non-empty");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw InvalidArgument("largest_eigenvalue: matrix is not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMat> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

DesignMatrices build_design_matrices(const CMat& G, const CMat& H, const RVec& tx_gains,
                                     const RVec& rho10, const AugmentedVector& a,
                                     const RVec& c_diag, double sigma_w2, bool dense)
{
    const auto m = H.rows();
    const auto k = H.cols();
    if (G.cols() != m || a.half_size() != G.rows() || tx_gains.size() != k || rho10.size() != k ||
        c_diag.size() != k) {
        std::ostringstream os;
        os << "build_design_matrices: G " << G.rows() << "x" << G.cols() << ", H " << m << "x" << k
           << ", a " << a.half_size() << ", gains " << tx_gains.size() << ", rho10 " << rho10.size()
           << ", C " << c_diag.size();
        throw DimensionMismatch(os.str());
    }

    const CVec u = H * (tx_gains.array() * rho10.array()).matrix().cast<cplx>();
    const CVec g = G.adjoint() * a.top();

    DesignMatrices dm;
    dm.v = augment(u.conjugate().cwiseProduct(g));
    dm.delta0.resize(k, 2 * m);
    const CMat A = H.transpose() * g.conjugate().asDiagonal();
    dm.delta0.leftCols(m) = A;
    dm.delta0.rightCols(m) = A.conjugate();
    dm.s_diag = tx_gains.array().square() * c_diag.array();
    dm.noise = sigma_w2 / (2.0 * static_cast<double>(m)) * a.norm() * a.norm();

    // delta0 delta0^H = 2 Re(A A^H), so lambda_max(Psi) reduces to a K x K problem.
    const RVec sq = dm.s_diag.cwiseMax(0.0).cwiseSqrt();
    const RMat R = sq.asDiagonal() * (2.0 * (A * A.adjoint()).real()) * sq.asDiagonal();
    Eigen::SelfAdjointEigenSolver<RMat> es(R, Eigen::EigenvaluesOnly);
    dm.lambda_max = std::max(0.0, es.eigenvalues().maxCoeff()) + dm.noise;

    if (dense) {
        dm.dense = true;
        const auto n = G.rows();
        dm.N_mat = CMat::Zero(2 * n, 2 * m);
        dm.N_mat.topLeftCorner(n, m) = G * u.asDiagonal();
        dm.N_mat.bottomRightCorner(n, m) = G.conjugate() * u.conjugate().asDiagonal();
        dm.Xi = dm.v * dm.v.adjoint();
        dm.Psi = dm.delta0.adjoint() * dm.s_diag.cast<cplx>().asDiagonal() * dm.delta0 +
                 dm.noise * CMat::Identity(2 * m, 2 * m);
    }
    return dm;
}

namespace {

void require_separation(const RVec& rho10, const CVec& dmu)
{
    if (rho10.cwiseAbs().maxCoeff() == 0.0 || dmu.norm() == 0.0)
        throw DesignError("zero mean separation: the fusion direction is undefined");
}

RVec kind_cov(DeflectionKind kind, const RVec& rho1, const RVec& rho0)
{
    return decision_cov_diag(kind == DeflectionKind::Normal ? rho0 : rho1);
}

AugmentedVector solve_direction(const HermitianSolver& solver, const CVec& dmu)
{
    return AugmentedVector::from_full(solver.solve(dmu)).normalized();
}

} // namespace

AugmentedVector step_a_efuc(const CMat& He, const RVec& tx_gains, const RVec& rho_bar,
                            const RVec& rho0, DeflectionKind kind, double sigma_w2)
{
    const RVec rho10 = rho_bar - rho0;
    const CVec dmu = augmented_mean_diff(He, tx_gains, rho10);
    require_separation(rho10, dmu);
    const CMat cov = augmented_cov(He, tx_gains, kind_cov(kind, rho_bar, rho0), sigma_w2);
    return solve_direction(HermitianSolver(cov), dmu);
}

std::vector<AugmentedVector> step_a_bfuc(const CMat& He, const RVec& tx_gains, const TargetGrid& grid,
                                         DeflectionKind kind, double sigma_w2)
{
    std::vector<AugmentedVector> out;
    out.reserve(grid.size());
    std::optional<HermitianSolver> shared;
    if (kind == DeflectionKind::Normal)
        shared.emplace(augmented_cov(He, tx_gains, decision_cov_diag(grid.rho0), sigma_w2));
    for (const auto& rho1 : grid.rho1) {
        const RVec rho10 = rho1 - grid.rho0;
        const CVec dmu = augmented_mean_diff(He, tx_gains, rho10);
        require_separation(rho10, dmu);
        if (shared) {
            out.push_back(solve_direction(*shared, dmu));
        } else {
            const HermitianSolver own(augmented_cov(He, tx_gains, decision_cov_diag(rho1), sigma_w2));
            out.push_back(solve_direction(own, dmu));
        }
    }
    return out;
}

AugmentedVector step_a_is(const CMat& He, const RVec& tx_gains)
{
    if (He.cols() != tx_gains.size()) throw DimensionMismatch("step_a_is: He columns must match gains");
    const CVec top = He * tx_gains.cast<cplx>();
    if (top.norm() == 0.0) throw DesignError("zero mean separation: the ideal-sensor direction is undefined");
    return AugmentedVector(top).normalized();
}

namespace {

RVec phases_from(const CVec& w_aug, const RVec& theta_prev)
{
    const auto m = theta_prev.size();
    const CVec w = 0.5 * (w_aug.head(m) + w_aug.tail(m).conjugate());
    const double scale = w.cwiseAbs().maxCoeff();
    RVec out = theta_prev;
    for (Eigen::Index i = 0; i < m; ++i)
        if (std::abs(w[i]) > 1e-15 * scale && std::abs(w[i]) > 0.0) out[i] = wrap_phase(std::arg(w[i]));
        else out[i] = wrap_phase(theta_prev[i]);
    return out;
}

} // namespace

RVec mm_phase_update(const RVec& theta_prev, const std::vector<DesignMatrices>& matrices)
{
    if (matrices.empty()) throw InvalidArgument("mm_phase_update: no design matrices");
    if (!theta_prev.allFinite()) throw InvalidArgument("mm_phase_update: non-finite phases");
    const CVec t = augment(phase_factors(theta_prev));
    CVec phi = CVec::Zero(t.size());
    for (const auto& dm : matrices) {
        if (dm.v.size() != t.size()) throw DimensionMismatch("mm_phase_update: matrix size does not match phases");
        const double den = dm.psi_quad(t);
        if (!(den > 0.0)) continue;
        const double num = dm.xi_quad(t);
        phi += dm.xi_times(t) / den - (num / (den * den)) * (dm.psi_times(t) - dm.lambda_max * t);
    }
    return phases_from(phi, theta_prev);
}

RVec mm_phase_update_is(const RVec& theta_prev, const CVec& v_is)
{
    if (v_is.size() != 2 * theta_prev.size()) throw DimensionMismatch("mm_phase_update_is: size mismatch");
    const CVec t = augment(phase_factors(theta_prev));
    return phases_from(v_is * v_is.dot(t), theta_prev);
}

double design_objective_value(const DesignObjective& obj, const CMat& He, const RVec& tx_gains,
                              const std::vector<AugmentedVector>& a, double sigma_w2)
{
    switch (obj.family) {
    case DesignFamily::IS: {
        const double s = a.at(0).inner_full(augment(He * tx_gains.cast<cplx>())).real();
        return s * s;
    }
    case DesignFamily::EFuC:
        return efuc_deflection(a.at(0), He, tx_gains, *obj.rho_bar, obj.rho0, obj.kind, sigma_w2);
    case DesignFamily::BFuC: {
        const auto& grid = *obj.grid;
        if (a.size() != grid.size()) throw DimensionMismatch("bFuC objective: one vector per branch");
        std::optional<CMat> shared;
        if (obj.kind == DeflectionKind::Normal)
            shared = augmented_cov(He, tx_gains, decision_cov_diag(grid.rho0), sigma_w2);
        double total = 0.0;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const CVec dmu = augmented_mean_diff(He, tx_gains, grid.rho1[j] - grid.rho0);
            if (shared) total += deflection_wl(a[j], dmu, *shared);
            else
                total += deflection_wl(a[j], dmu,
                                       augmented_cov(He, tx_gains, decision_cov_diag(grid.rho1[j]), sigma_w2));
        }
        return total / static_cast<double>(grid.size());
    }
    }
    return 0.0;
}

double efuc_deflection(const AugmentedVector& a, const CMat& He, const RVec& tx_gains,
                       const RVec& rho_bar, const RVec& rho0, DeflectionKind kind, double sigma_w2)
{
    const CVec dmu = augmented_mean_diff(He, tx_gains, rho_bar - rho0);
    return deflection_wl(a, dmu, augmented_cov(He, tx_gains, kind_cov(kind, rho_bar, rho0), sigma_w2));
}

RVec random_phases(Eigen::Index m, Rng& rng)
{
    RVec p(m);
    for (Eigen::Index i = 0; i < m; ++i) p[i] = kTwoPi * uniform01(rng);
    return p;
}

namespace {

std::vector<AugmentedVector> step_a(const DesignObjective& obj, const CMat& He, const RVec& gains,
                                    double sigma_w2)
{
    switch (obj.family) {
    case DesignFamily::EFuC: return {step_a_efuc(He, gains, *obj.rho_bar, obj.rho0, obj.kind, sigma_w2)};
    case DesignFamily::BFuC: return step_a_bfuc(He, gains, *obj.grid, obj.kind, sigma_w2);
    case DesignFamily::IS: return {step_a_is(He, gains)};
    }
    return {};
}

RVec step_b(const DesignObjective& obj, const ChannelRealization& ch, const RVec& gains,
            const std::vector<AugmentedVector>& a, double sigma_w2, const RVec& theta)
{
    const auto k = ch.H.cols();
    if (obj.family == DesignFamily::IS) {
        const auto dm = build_design_matrices(ch.G, ch.H, gains, RVec::Ones(k), a[0], RVec::Zero(k),
                                              sigma_w2, false);
        return mm_phase_update_is(theta, dm.v);
    }
    if (obj.family == DesignFamily::EFuC) {
        const RVec& rb = *obj.rho_bar;
        const auto dm = build_design_matrices(ch.G, ch.H, gains, rb - obj.rho0, a[0],
                                              kind_cov(obj.kind, rb, obj.rho0), sigma_w2, false);
        return mm_phase_update(theta, {dm});
    }
    const auto& grid = *obj.grid;
    std::vector<DesignMatrices> mats(grid.size());
    const auto nt = static_cast<std::int64_t>(grid.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (!omp_in_parallel() && nt >= 8)
#endif
    for (std::int64_t j = 0; j < nt; ++j) {
        const auto& rho1 = grid.rho1[static_cast<std::size_t>(j)];
        mats[static_cast<std::size_t>(j)] =
            build_design_matrices(ch.G, ch.H, gains, rho1 - grid.rho0, a[static_cast<std::size_t>(j)],
                                  kind_cov(obj.kind, rho1, grid.rho0), sigma_w2, false);
    }
    return mm_phase_update(theta, mats);
}

FilterBank make_fusion(const DesignObjective& obj, const CMat& He, const RVec& gains,
                       const std::vector<AugmentedVector>& a, double sigma_w2)
{
    FilterBank bank;
    if (obj.family != DesignFamily::BFuC) {
        bank.rules.push_back(WlRule{a[0], 0.0, 1.0});
        return bank;
    }
    const auto& grid = *obj.grid;
    bank.grid = grid.points;

    // The biases assume one covariance common to all branches: the H0 one for
    // the normal kind, the grid-averaged H1 one for the modified kind.
    RVec c;
    if (obj.kind == DeflectionKind::Normal) {
        c = decision_cov_diag(grid.rho0);
    } else {
        c = RVec::Zero(grid.rho0.size());
        for (const auto& r : grid.rho1) c += decision_cov_diag(r);
        c /= static_cast<double>(grid.size());
    }
    const CMat cov = augmented_cov(He, gains, c, sigma_w2);

    std::vector<CVec> mean1, dmu;
    for (const auto& r : grid.rho1) {
        mean1.push_back(augmented_mean(He, gains, r));
        dmu.push_back(augmented_mean_diff(He, gains, r - grid.rho0));
    }
    const auto biases = glr_biases(mean1, augmented_mean(He, gains, grid.rho0), cov);
    const auto gains_j = glr_branch_gains(a, dmu, cov);
    for (std::size_t j = 0; j < a.size(); ++j) bank.rules.push_back(WlRule{a[j], biases[j], gains_j[j]});
    return bank;
}

} // namespace

RhsDesign run_ao(const DesignObjective& objective, const ChannelRealization& channel,
                 const RVec& tx_gains, double sigma_w2, const RVec& init_phases,
                 const AoOptions& options)
{
    using clock = std::chrono::steady_clock;
    const auto t_start = clock::now();

    if (options.max_iter < 1) throw InvalidArgument("run_ao: max_iter must be >= 1");
    if (!(options.tol > 0.0)) throw InvalidArgument("run_ao: tol must be > 0");
    if (!(sigma_w2 > 0.0)) throw InvalidArgument("run_ao: sigma_w2 must be > 0");
    const auto m = channel.H.rows();
    if (init_phases.size() != m || channel.G.cols() != m)
        throw DimensionMismatch("run_ao: phases, G and H disagree on M");
    if (tx_gains.size() != channel.H.cols()) throw DimensionMismatch("run_ao: gains must have K entries");
    objective.validate(channel.H.cols());

    RhsDesign d;
    d.family = objective.family;
    d.kind = objective.kind;
    RVec theta = init_phases.unaryExpr([](double p) { return wrap_phase(p); });

    std::vector<AugmentedVector> a;
    double prev = 0.0;
    for (int it = 0; it < options.max_iter; ++it) {
        const auto t_iter = clock::now();
        const CMat He = effective_channel(channel.G, theta, channel.H);
        a = step_a(objective, He, tx_gains, sigma_w2);
        if (it == 0) prev = design_objective_value(objective, He, tx_gains, a, sigma_w2);

        theta = step_b(objective, channel, tx_gains, a, sigma_w2, theta);
        const CMat He_next = effective_channel(channel.G, theta, channel.H);
        const double f = design_objective_value(objective, He_next, tx_gains, a, sigma_w2);
        d.objective_trace.push_back(f);
        d.iteration_seconds.push_back(std::chrono::duration<double>(clock::now() - t_iter).count());
        d.iterations = it + 1;

        const double rel = std::abs(f - prev) / std::max(std::abs(prev), 1e-300);
        prev = f;
        if (rel < options.tol && !d.converged) {
            d.converged = true;
            if (options.stop_on_convergence) break;
        }
    }

    // Refresh the fusion vectors at the final phases; this can only raise the objective.
    const CMat He = effective_channel(channel.G, theta, channel.H);
    a = step_a(objective, He, tx_gains, sigma_w2);
    d.objective = design_objective_value(objective, He, tx_gains, a, sigma_w2);
    d.fusion = make_fusion(objective, He, tx_gains, a, sigma_w2);
    d.phases = theta;
    d.seconds = std::chrono::duration<double>(clock::now() - t_start).count();
    return d;
}

} // namespace hdf
