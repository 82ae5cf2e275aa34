#include "hdf/fusion.hpp"

#include <algorithm>
#include <bit>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hdf {

TargetGrid TargetGrid::build(const SensorField& field, const SensingParams& params,
                             const std::vector<Vec3>& points)
{
    TargetGrid g;
    g.points = points;
    g.rho0 = rho0_vector(field);
    g.rho1.reserve(points.size());
    for (const auto& p : points) g.rho1.push_back(rho_vectors(field, params, p).rho1);
    return g;
}

TargetGrid TargetGrid::build(const SensorField& field, const SensingParams& params,
                             const SurveillanceArea& area)
{
    return build(field, params, area.grid_points());
}

double wl_statistic(const WlRule& rule, const CVec& y)
{
    return rule.gain * rule.a.apply(y) + rule.bias;
}

double filter_bank_statistic(const FilterBank& bank, const CVec& y)
{
    if (bank.rules.empty()) throw InvalidArgument("filter bank is empty");
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& r : bank.rules) best = std::max(best, wl_statistic(r, y));
    return best;
}

std::vector<double> glr_biases(const std::vector<CVec>& mean1_aug, const CVec& mean0_aug,
                               const CMat& aug_cov)
{
    const HermitianSolver solver(aug_cov);
    const double q0 = solver.inverse_quad(mean0_aug);
    std::vector<double> b;
    b.reserve(mean1_aug.size());
    for (const auto& m1 : mean1_aug) b.push_back(-0.5 * solver.inverse_quad(m1) + 0.5 * q0);
    return b;
}

std::vector<double> glr_branch_gains(const std::vector<AugmentedVector>& vectors,
                                     const std::vector<CVec>& mean_diff_aug, const CMat& aug_cov)
{
    if (vectors.size() != mean_diff_aug.size())
        throw DimensionMismatch("branch gains: one mean separation per branch is required");
    std::vector<double> c;
    c.reserve(vectors.size());
    for (std::size_t j = 0; j < vectors.size(); ++j) {
        const double num = vectors[j].inner_full(mean_diff_aug[j]).real();
        const double den = vectors[j].quad_form(aug_cov);
        c.push_back(den > 0.0 ? num / den : 0.0);
    }
    return c;
}

namespace {

// Keeps log(1 - p) finite for probabilities that round to 1.
constexpr double kProbFloor = 1e-300;
constexpr double kProbCeil = 1.0 - 0x1.0p-53;

double clamp_prob(double p) { return std::clamp(p, kProbFloor, kProbCeil); }

// Fixed chunking of the Gray sequence; independent of the thread count.
constexpr int kChunkBits = 6;

} // namespace

GlrKernel::GlrKernel(const CMat& He, const RVec& tx_gains, double sigma_w2, const TargetGrid& grid,
                     int max_sensors)
{
    k_ = static_cast<int>(He.cols());
    if (k_ > max_sensors) {
        std::ostringstream os;
        os << "GLR fusion over K = " << k_ << " sensors needs 2^" << k_
           << " likelihood terms per observation; the configured cap is K <= " << max_sensors;
        throw ComplexityError(os.str());
    }
    if (k_ < 1 || tx_gains.size() != k_ || grid.rho0.size() != k_)
        throw DimensionMismatch("GLR kernel: He, gains and grid must share K");
    if (grid.size() == 0) throw InvalidArgument("GLR kernel: empty target grid");
    if (!(sigma_w2 > 0.0)) throw InvalidArgument("GLR kernel: sigma_w2 must be > 0");

    n_grid_ = grid.size();
    hd_ = He * tx_gains.cast<cplx>().asDiagonal();
    inv_sigma2_ = 1.0 / sigma_w2;

    base1_.resize(static_cast<Eigen::Index>(n_grid_), 1);
    delta1_.resize(static_cast<Eigen::Index>(n_grid_), k_);
    for (std::size_t j = 0; j < n_grid_; ++j) {
        const auto& r = grid.rho1[j];
        if (r.size() != k_) throw DimensionMismatch("GLR kernel: grid probability vector size");
        double base = 0.0;
        for (int k = 0; k < k_; ++k) {
            const double p = clamp_prob(r[k]);
            base += std::log1p(-p);
            delta1_(static_cast<Eigen::Index>(j), k) = std::log(p) - std::log1p(-p);
        }
        base1_(static_cast<Eigen::Index>(j), 0) = base;
    }
    delta0_.resize(k_);
    base0_ = 0.0;
    for (int k = 0; k < k_; ++k) {
        const double p = clamp_prob(grid.rho0[k]);
        base0_ += std::log1p(-p);
        delta0_[k] = std::log(p) - std::log1p(-p);
    }
}

void GlrKernel::run_range(const CVec& y, std::uint64_t begin, std::uint64_t end,
                          ChunkResult& out) const
{
    const auto ng = static_cast<Eigen::Index>(n_grid_);
    out.h1.assign(n_grid_, LogSumExp{});
    out.h0 = LogSumExp{};

    // State at Gray index `begin`: bit k set <=> x_k = +1.
    std::uint64_t code = begin ^ (begin >> 1);
    CVec resid = y;
    RVec lf1 = base1_.col(0);
    double lf0 = base0_;
    for (int k = 0; k < k_; ++k) {
        const bool plus = (code >> k) & 1U;
        resid -= (plus ? 1.0 : -1.0) * hd_.col(k);
        if (plus) {
            lf1 += delta1_.col(k);
            lf0 += delta0_[k];
        }
    }

    for (std::uint64_t t = begin;; ) {
        const double ll = -resid.squaredNorm() * inv_sigma2_;
        for (Eigen::Index j = 0; j < ng; ++j) out.h1[static_cast<std::size_t>(j)].add(ll + lf1[j]);
        out.h0.add(ll + lf0);

        if (++t == end) break;
        const int k = std::countr_zero(t);
        const bool to_plus = !((code >> k) & 1U);
        code ^= (std::uint64_t{1} << k);
        if (to_plus) {
            resid -= 2.0 * hd_.col(k);
            lf1 += delta1_.col(k);
            lf0 += delta0_[k];
        } else {
            resid += 2.0 * hd_.col(k);
            lf1 -= delta1_.col(k);
            lf0 -= delta0_[k];
        }
    }
}

double GlrKernel::finish(const std::vector<LogSumExp>& h1, const LogSumExp& h0) const
{
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& acc : h1) best = std::max(best, acc.value());
    return best - h0.value();
}

double GlrKernel::evaluate_serial(const CVec& y) const
{
    if (y.size() != hd_.rows()) throw DimensionMismatch("GLR: observation size mismatch");
    ChunkResult r;
    run_range(y, 0, std::uint64_t{1} << k_, r);
    return finish(r.h1, r.h0);
}

double GlrKernel::operator()(const CVec& y) const
{
    if (y.size() != hd_.rows()) throw DimensionMismatch("GLR: observation size mismatch");
    const int chunk_bits = std::min(k_, kChunkBits);
    const std::uint64_t n_chunks = std::uint64_t{1} << chunk_bits;
    const std::uint64_t chunk_len = std::uint64_t{1} << (k_ - chunk_bits);
    std::vector<ChunkResult> parts(n_chunks);

    const auto nc = static_cast<std::int64_t>(n_chunks);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (!omp_in_parallel() && k_ >= 10)
#endif
    for (std::int64_t c = 0; c < nc; ++c) {
        const auto b = static_cast<std::uint64_t>(c) * chunk_len;
        run_range(y, b, b + chunk_len, parts[static_cast<std::size_t>(c)]);
    }

    std::vector<LogSumExp> h1(n_grid_);
    LogSumExp h0;
    for (const auto& p : parts) {
        for (std::size_t j = 0; j < n_grid_; ++j) h1[j].merge(p.h1[j]);
        h0.merge(p.h0);
    }
    return finish(h1, h0);
}

double glr_statistic(const CVec& y, const CMat& He, const RVec& tx_gains, double sigma_w2,
                     const TargetGrid& grid, int max_sensors)
{
    return GlrKernel(He, tx_gains, sigma_w2, grid, max_sensors)(y);
}

ObservationBound::ObservationBound(const TargetGrid& grid)
{
    if (grid.size() == 0) throw InvalidArgument("observation bound: empty target grid");
    const auto k = grid.rho0.size();
    const auto ng = static_cast<Eigen::Index>(grid.size());
    log_ratio_plus_.resize(ng, k);
    log_ratio_minus_.resize(ng, k);
    auto clamp = [&](double p) {
        const double c = std::clamp(p, kClamp, 1.0 - kClamp);
        if (c != p) clamped_ = true;
        return c;
    };
    for (Eigen::Index j = 0; j < ng; ++j) {
        const auto& r1 = grid.rho1[static_cast<std::size_t>(j)];
        if (r1.size() != k) throw DimensionMismatch("observation bound: grid probability vector size");
        for (Eigen::Index i = 0; i < k; ++i) {
            const double pd = clamp(r1[i]);
            const double pf = clamp(grid.rho0[i]);
            log_ratio_plus_(j, i) = std::log(pd / pf);
            log_ratio_minus_(j, i) = std::log((1.0 - pd) / (1.0 - pf));
        }
    }
    if (clamped_)
        std::cerr << "warning: observation bound clamped degenerate probabilities to [1e-12, 1-1e-12]\n";
}

double ObservationBound::operator()(const RVec& x) const
{
    if (x.size() != log_ratio_plus_.cols()) throw DimensionMismatch("observation bound: x size");
    const RVec up = (1.0 + x.array()) * 0.5;
    const RVec down = (1.0 - x.array()) * 0.5;
    const RVec per_point = log_ratio_plus_ * up + log_ratio_minus_ * down;
    return per_point.maxCoeff();
}

double glr_observation_bound(const RVec& x, const TargetGrid& grid)
{
    return ObservationBound(grid)(x);
}

} // namespace hdf
