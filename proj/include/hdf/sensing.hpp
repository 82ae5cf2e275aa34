#pragma once

#include <vector>

#include "hdf/common.hpp"

namespace hdf {

/// Standard normal tail probability Q(x) = Pr(N(0,1) > x).
double q_function(double x);

/// Inverse of q_function on (0,1), by bracketed root finding on Q.
double q_inverse(double p);

struct SensingParams {
    double theta_power = 1.0; // average emitted power of the target
    double eta_ref = 12.0;    // attenuation reference distance [wavelengths]
    double alpha_exp = 4.0;   // attenuation exponent
    double local_pfa = 0.05;  // design false-alarm rate of every sensor

    void validate() const;
};

struct SensorField {
    std::vector<Vec3> positions;
    std::vector<double> noise_vars;
    std::vector<double> tx_gains;
    std::vector<double> thresholds;

    std::size_t size() const { return positions.size(); }
    void validate() const;

    /// Sensors placed uniformly at random in the box [lo, hi], unit noise
    /// and unit transmit gain, thresholds set from params.local_pfa.
    static SensorField random_box(std::size_t count, const Vec3& lo, const Vec3& hi,
                                  const SensingParams& params, double noise_var, Rng& rng);
};

struct RhoVectors {
    RVec rho1;
    RVec rho0;
    RVec rho10;
};

/// Rectangular region on the ground plane (z = 0).
struct SurveillanceArea {
    double x_min = 0.0, x_max = 40.0;
    double y_min = 0.0, y_max = 40.0;
    int grid_side = 5;  // candidate positions per side, N_t = grid_side^2
    int quad_side = 64; // quadrature points per side for expectations

    void validate() const;
    int grid_count() const { return grid_side * grid_side; }

    /// Cell-centred candidate positions, x fastest.
    std::vector<Vec3> grid_points() const;
    /// Midpoint-rule nodes used by expected_rho1.
    std::vector<Vec3> quadrature_points() const;
    Vec3 sample_uniform(Rng& rng) const;
};

/// Power-law amplitude attenuation 1/sqrt(1 + (d/eta)^alpha).
double aaf(const Vec3& p_t, const Vec3& p_sen, const SensingParams& params);

double threshold_from_local_pfa(double pfa, double sigma_n2);
double local_pfa(double gamma, double sigma_n2);
double local_pd(double gamma, double sigma_n2, double theta_power, double g);

/// Coefficients of the local log-likelihood ratio  lambda = offset + slope * r^2.
struct LocalLlr {
    double offset = 0.0;
    double slope = 0.0;

    LocalLlr(double sigma_n2, double theta_power, double g);
    double operator()(double r) const { return offset + slope * r * r; }
};

RhoVectors rho_vectors(const SensorField& field, const SensingParams& params, const Vec3& p_t);

/// Detection probabilities of the false-alarm-only case (target absent).
RVec rho0_vector(const SensorField& field);

/// Uniform-prior average of the detection probabilities over the area.
RVec expected_rho1(const SensorField& field, const SensingParams& params,
                   const SurveillanceArea& area);

/// Same average under an arbitrary weighting of the quadrature nodes.
/// Weights are normalised internally.
RVec expected_rho1_weighted(const SensorField& field, const SensingParams& params,
                            const std::vector<Vec3>& nodes, const std::vector<double>& weights);

/// Diagonal of the decision covariance, 4 p (1 - p).
RVec decision_cov_diag(const RVec& rho);
RMat decision_cov(const RVec& rho);

/// Draws x in {-1,+1}^K with Pr(x_k = +1) = rho[k].
RVec sample_decisions(const RVec& rho, Rng& rng);

enum class Hypothesis { H0 = 0, H1 = 1 };

RVec sample_decisions(const SensorField& field, const SensingParams& params,
                      Hypothesis hypothesis, const Vec3& p_t, Rng& rng);

} // namespace hdf
