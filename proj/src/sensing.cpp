#include "hdf/sensing.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace hdf {

double q_function(double x)
{
    return 0.5 * std::erfc(x / std::sqrt(2.0));
}

double q_inverse(double p)
{
    if (!(p > 0.0 && p < 1.0)) {
        std::ostringstream os;
        os << "q_inverse: probability " << p << " outside (0,1)";
        throw InvalidArgument(os.str());
    }
    // Q is strictly decreasing; bracket then bisect, finishing with Newton steps.
    double lo = -40.0;
    double hi = 40.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (q_function(mid) > p)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-12) break;
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 3; ++it) {
        const double pdf = std::exp(-0.5 * x * x) / std::sqrt(kTwoPi);
        if (pdf <= 0.0) break;
        const double step = (q_function(x) - p) / pdf;
        const double next = x + step;
        if (!(next > lo - 1e-9 && next < hi + 1e-9)) break;
        x = next;
    }
    return x;
}

void SensingParams::validate() const
{
    if (!(theta_power > 0.0)) throw InvalidArgument("sensing.theta_power must be > 0");
    if (!(eta_ref > 0.0)) throw InvalidArgument("sensing.eta_ref must be > 0");
    if (!(alpha_exp > 0.0)) throw InvalidArgument("sensing.alpha_exp must be > 0");
    if (!(local_pfa > 0.0 && local_pfa < 1.0))
        throw InvalidArgument("sensing.local_pfa must lie in (0,1)");
}

void SensorField::validate() const
{
    const std::size_t k = positions.size();
    if (k == 0) throw InvalidArgument("sensor field is empty");
    if (noise_vars.size() != k || tx_gains.size() != k || thresholds.size() != k)
        throw InvalidArgument("sensor field lists have different lengths");
    for (std::size_t i = 0; i < k; ++i) {
        if (!(noise_vars[i] > 0.0) || !(tx_gains[i] > 0.0) || !(thresholds[i] > 0.0))
            throw InvalidArgument("sensor " + std::to_string(i) +
                                  ": noise variance, gain and threshold must be > 0");
    }
}

SensorField SensorField::random_box(std::size_t count, const Vec3& lo, const Vec3& hi,
                                    const SensingParams& params, double noise_var, Rng& rng)
{
    SensorField f;
    f.positions.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        Vec3 p;
        for (int d = 0; d < 3; ++d) p[d] = lo[d] + (hi[d] - lo[d]) * uniform01(rng);
        f.positions.push_back(p);
    }
    f.noise_vars.assign(count, noise_var);
    f.tx_gains.assign(count, 1.0);
    f.thresholds.assign(count, threshold_from_local_pfa(params.local_pfa, noise_var));
    return f;
}

void SurveillanceArea::validate() const
{
    if (!(x_max >= x_min) || !(y_max >= y_min))
        throw InvalidArgument("area bounds are inverted");
    if (grid_side < 1) throw InvalidArgument("area.grid_side must be >= 1");
    if (quad_side < 8) throw InvalidArgument("area.quad_side must be >= 8");
}

namespace {

std::vector<Vec3> midpoint_grid(const SurveillanceArea& a, int side)
{
    std::vector<Vec3> pts;
    pts.reserve(static_cast<std::size_t>(side) * side);
    const double dx = (a.x_max - a.x_min) / side;
    const double dy = (a.y_max - a.y_min) / side;
    for (int iy = 0; iy < side; ++iy)
        for (int ix = 0; ix < side; ++ix)
            pts.emplace_back(a.x_min + (ix + 0.5) * dx, a.y_min + (iy + 0.5) * dy, 0.0);
    return pts;
}

} // namespace

std::vector<Vec3> SurveillanceArea::grid_points() const { return midpoint_grid(*this, grid_side); }

std::vector<Vec3> SurveillanceArea::quadrature_points() const
{
    return midpoint_grid(*this, quad_side);
}

Vec3 SurveillanceArea::sample_uniform(Rng& rng) const
{
    const double x = x_min + (x_max - x_min) * uniform01(rng);
    const double y = y_min + (y_max - y_min) * uniform01(rng);
    return {x, y, 0.0};
}

double aaf(const Vec3& p_t, const Vec3& p_sen, const SensingParams& params)
{
    const double d = (p_t - p_sen).norm();
    return 1.0 / std::sqrt(1.0 + std::pow(d / params.eta_ref, params.alpha_exp));
}

double threshold_from_local_pfa(double pfa, double sigma_n2)
{
    if (!(pfa > 0.0 && pfa < 1.0))
        throw InvalidArgument("threshold_from_local_pfa: pfa must lie in (0,1)");
    if (!(sigma_n2 > 0.0)) throw InvalidArgument("threshold_from_local_pfa: sigma_n2 must be > 0");
    // pfa = 2 Q(sqrt(gamma / sigma^2))
    const double z = q_inverse(pfa / 2.0);
    return z * z * sigma_n2;
}

double local_pfa(double gamma, double sigma_n2)
{
    return 2.0 * q_function(std::sqrt(gamma / sigma_n2));
}

double local_pd(double gamma, double sigma_n2, double theta_power, double g)
{
    return 2.0 * q_function(std::sqrt(gamma / (sigma_n2 + theta_power * g * g)));
}

LocalLlr::LocalLlr(double sigma_n2, double theta_power, double g)
{
    const double sig = theta_power * g * g;
    offset = 0.5 * std::log(sigma_n2 / (sigma_n2 + sig));
    slope = sig / (2.0 * sigma_n2 * (sigma_n2 + sig));
}

RhoVectors rho_vectors(const SensorField& field, const SensingParams& params, const Vec3& p_t)
{
    const auto k = static_cast<Eigen::Index>(field.size());
    RhoVectors r;
    r.rho1.resize(k);
    r.rho0.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto s = static_cast<std::size_t>(i);
        const double g = aaf(p_t, field.positions[s], params);
        r.rho1[i] = local_pd(field.thresholds[s], field.noise_vars[s], params.theta_power, g);
        r.rho0[i] = local_pfa(field.thresholds[s], field.noise_vars[s]);
    }
    r.rho10 = r.rho1 - r.rho0;
    return r;
}

RVec rho0_vector(const SensorField& field)
{
    RVec r(static_cast<Eigen::Index>(field.size()));
    for (std::size_t k = 0; k < field.size(); ++k)
        r[static_cast<Eigen::Index>(k)] = local_pfa(field.thresholds[k], field.noise_vars[k]);
    return r;
}

RVec expected_rho1_weighted(const SensorField& field, const SensingParams& params,
                            const std::vector<Vec3>& nodes, const std::vector<double>& weights)
{
    if (nodes.empty() || nodes.size() != weights.size())
        throw InvalidArgument("expected_rho1: nodes and weights must be non-empty and equal length");
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (!(wsum > 0.0)) throw InvalidArgument("expected_rho1: weights must sum to a positive value");

    RVec acc = RVec::Zero(static_cast<Eigen::Index>(field.size()));
    for (std::size_t i = 0; i < nodes.size(); ++i)
        acc += (weights[i] / wsum) * rho_vectors(field, params, nodes[i]).rho1;
    return acc;
}

RVec expected_rho1(const SensorField& field, const SensingParams& params,
                   const SurveillanceArea& area)
{
    area.validate();
    const auto nodes = area.quadrature_points();
    const std::vector<double> weights(nodes.size(), 1.0);
    return expected_rho1_weighted(field, params, nodes, weights);
}

RVec decision_cov_diag(const RVec& rho)
{
    return (4.0 * rho.array() * (1.0 - rho.array())).matrix();
}

RMat decision_cov(const RVec& rho)
{
    return decision_cov_diag(rho).asDiagonal();
}

RVec sample_decisions(const RVec& rho, Rng& rng)
{
    RVec x(rho.size());
    for (Eigen::Index k = 0; k < rho.size(); ++k) x[k] = uniform01(rng) < rho[k] ? 1.0 : -1.0;
    return x;
}

RVec sample_decisions(const SensorField& field, const SensingParams& params,
                      Hypothesis hypothesis, const Vec3& p_t, Rng& rng)
{
    if (hypothesis == Hypothesis::H0) return sample_decisions(rho0_vector(field), rng);
    return sample_decisions(rho_vectors(field, params, p_t).rho1, rng);
}

} // namespace hdf
