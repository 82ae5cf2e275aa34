#pragma once

#include <limits>
#include <vector>

#include "hdf/augmented.hpp"
#include "hdf/sensing.hpp"

namespace hdf {

/// Widely-linear rule  gain * a_aug^H y_aug + bias  with ||a_aug|| = 1.
///
/// `gain` is 1 for single-rule designs. Inside a filter bank it rescales each
/// unit-norm branch to the Gaussian log-likelihood-ratio weight, which is the
/// scale the GLR-derived biases are expressed in.
struct WlRule {
    AugmentedVector a;
    double bias = 0.0;
    double gain = 1.0;
};

/// Candidate target positions together with the sensor detection
/// probabilities at each of them.
struct TargetGrid {
    std::vector<Vec3> points;
    std::vector<RVec> rho1; // one K-vector per point
    RVec rho0;

    std::size_t size() const { return points.size(); }

    static TargetGrid build(const SensorField& field, const SensingParams& params,
                            const std::vector<Vec3>& points);
    static TargetGrid build(const SensorField& field, const SensingParams& params,
                            const SurveillanceArea& area);
};

struct FilterBank {
    std::vector<WlRule> rules;
    std::vector<Vec3> grid;
};

double wl_statistic(const WlRule& rule, const CVec& y);

/// max_j of the branch statistics. Throws on an empty bank.
double filter_bank_statistic(const FilterBank& bank, const CVec& y);

/// Biases b_j = -1/2 mu1_j^H S^{-1} mu1_j + 1/2 mu0^H S^{-1} mu0 for augmented
/// means mu and the common augmented covariance S.
std::vector<double> glr_biases(const std::vector<CVec>& mean1_aug, const CVec& mean0_aug,
                               const CMat& aug_cov);

/// Per-branch gains c_j = (a_j^H dmu_j) / (a_j^H S a_j). When a_j is parallel
/// to S^{-1} dmu_j this makes c_j a_j = S^{-1} dmu_j exactly.
std::vector<double> glr_branch_gains(const std::vector<AugmentedVector>& vectors,
                                     const std::vector<CVec>& mean_diff_aug, const CMat& aug_cov);

/// Running log-sum-exp accumulator.
struct LogSumExp {
    double max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;

    void add(double v)
    {
        if (v == -std::numeric_limits<double>::infinity()) return;
        if (v > max) {
            sum = sum * std::exp(max - v) + 1.0;
            max = v;
        } else {
            sum += std::exp(v - max);
        }
    }
    void merge(const LogSumExp& o)
    {
        if (o.sum == 0.0) return;
        if (sum == 0.0) {
            *this = o;
            return;
        }
        if (o.max > max) {
            sum = sum * std::exp(max - o.max) + o.sum;
            max = o.max;
        } else {
            sum += o.sum * std::exp(o.max - max);
        }
    }
    double value() const
    {
        return sum > 0.0 ? max + std::log(sum) : -std::numeric_limits<double>::infinity();
    }
};

/// Exact GLR over the multiple-access channel, maximised over a target grid.
///
/// The 2^K decision vectors are visited in Gray-code order so that every step
/// changes a single x_k: the residual y - He D x moves by a rank-one update and
/// the per-grid log pmfs by one table lookup each, for O(N + N_t) work per term.
/// The Gray sequence is cut into a fixed number of chunks that are reduced in
/// index order, so the parallel result does not depend on the thread count.
class GlrKernel {
public:
    static constexpr int kDefaultMaxSensors = 20;

    GlrKernel(const CMat& He, const RVec& tx_gains, double sigma_w2, const TargetGrid& grid,
              int max_sensors = kDefaultMaxSensors);

    /// OpenMP-parallel evaluation (falls back to one thread inside an
    /// enclosing parallel region).
    double operator()(const CVec& y) const;
    /// Single pass over the whole Gray sequence; reference for tests.
    double evaluate_serial(const CVec& y) const;

    int sensors() const { return k_; }
    std::size_t grid_size() const { return n_grid_; }

private:
    struct ChunkResult {
        std::vector<LogSumExp> h1;
        LogSumExp h0;
    };
    void run_range(const CVec& y, std::uint64_t begin, std::uint64_t end, ChunkResult& out) const;
    double finish(const std::vector<LogSumExp>& h1, const LogSumExp& h0) const;

    int k_ = 0;
    std::size_t n_grid_ = 0;
    CMat hd_; // He * D, N x K
    double inv_sigma2_ = 0.0;
    RMat base1_;  // per grid: log pmf of x = -1 vector, stored as (n_grid, 1)
    RMat delta1_; // (n_grid, K): log P - log(1 - P)
    double base0_ = 0.0;
    RVec delta0_;
};

double glr_statistic(const CVec& y, const CMat& He, const RVec& tx_gains, double sigma_w2,
                     const TargetGrid& grid, int max_sensors = GlrKernel::kDefaultMaxSensors);

/// GLR with error-free reporting: max over the grid of the decision log-likelihood ratio.
class ObservationBound {
public:
    static constexpr double kClamp = 1e-12;

    explicit ObservationBound(const TargetGrid& grid);
    double operator()(const RVec& x) const;
    /// True when some probability had to be clamped into [eps, 1-eps].
    bool clamped() const { return clamped_; }

private:
    RMat log_ratio_plus_;  // (n_grid, K): ln(Pd / Pf)
    RMat log_ratio_minus_; // (n_grid, K): ln((1-Pd)/(1-Pf))
    bool clamped_ = false;
};

double glr_observation_bound(const RVec& x, const TargetGrid& grid);

} // namespace hdf
