#pragma once

#include <utility>
#include <vector>

#include "hdf/common.hpp"

namespace hdf {

/// Planar holographic surface. Elements are indexed zero-based with the
/// horizontal index fastest: m = mx + side_h * my.
struct RhsGeometry {
    std::vector<Vec3> element_positions;
    Vec3 center = Vec3::Zero();
    Vec3 boresight = Vec3(-1.0, 0.0, 0.0);
    Vec3 axis_h = Vec3(0.0, 1.0, 0.0); // in-plane direction of mx
    Vec3 axis_v = Vec3(0.0, 0.0, 1.0); // in-plane direction of my
    int side_h = 1;
    int side_v = 1;
    double dx = 1.0 / 3.0;
    double dy = 1.0 / 3.0;
    double q_factor = 1.5;
    double efficiency = 1.0;

    std::size_t size() const { return element_positions.size(); }
    void validate() const;

    /// side_h x side_v array centred at `center`, lying in the plane spanned by
    /// axis_h and axis_v, with boresight axis_h x axis_v negated so that the
    /// default frame (y-z plane) faces -x.
    static RhsGeometry planar(const Vec3& center, int side_h, int side_v, double dx, double dy,
                              double q_factor, double efficiency,
                              const Vec3& axis_h = Vec3(0.0, 1.0, 0.0),
                              const Vec3& axis_v = Vec3(0.0, 0.0, 1.0));
};

/// Receive feeds, each pointing its maximum-gain direction at the RHS centre.
struct FeedGeometry {
    std::vector<Vec3> feed_positions;
    double dx = 0.5;
    double dy = 0.5;
    double q_factor = 1.5;

    std::size_t size() const { return feed_positions.size(); }
    void validate() const;

    /// count_x feeds along +x and count_z along +z, centred at `center`.
    static FeedGeometry grid(const Vec3& center, int count_x, int count_z, double spacing,
                             double q_factor);
};

struct LinkParams {
    double mu_ref = 1e-3;   // attenuation at d0 (linear)
    double d0 = 1.0;        // reference distance [wavelengths]
    double nu = 2.0;        // path-loss exponent
    double rician_db_lo = 3.0;
    double rician_db_hi = 5.0;
    double wavelength = 1.0;

    void validate() const;
};

struct SensorLinkMeta {
    double theta_aoa = 0.0; // polar angle from boresight
    double phi_aoa = 0.0;   // azimuth in the RHS plane, from axis_h
    double tau = 0.0;       // LoS phase offset
    double rician_b = 0.0;
    double distance = 0.0;
};

struct ChannelRealization {
    CMat H; // M x K, sensors -> RHS
    CMat G; // N x M, RHS -> feeds
    std::vector<SensorLinkMeta> meta;
};

double path_loss(double d, const LinkParams& p);

/// Steering vector of an mx-by-my planar array, row-major with mx fastest.
/// Spacings are in wavelengths.
CVec upa_steering(double theta, double phi, int mx, int my, double dh, double dv);

/// Rician factor b = sqrt(kappa / (1 + kappa)) for kappa given in dB.
double rician_b_from_db(double kappa_db);

/// Polar/azimuth angles of arrival of a source at `pos` in the RHS frame.
std::pair<double, double> angles_of_arrival(const Vec3& pos, const RhsGeometry& rhs);

std::pair<CVec, SensorLinkMeta> sensor_rhs_channel(const Vec3& sensor_pos, const RhsGeometry& rhs,
                                                   const LinkParams& p, Rng& rng);

/// Draw with an externally fixed Rician factor (used by tests and oracles).
std::pair<CVec, SensorLinkMeta> sensor_rhs_channel_fixed_b(const Vec3& sensor_pos,
                                                           const RhsGeometry& rhs,
                                                           const LinkParams& p, double b,
                                                           Rng& rng);

/// Element radiation pattern 2(2q+1) cos^{2q}(theta) on the front hemisphere.
double directivity(double cos_theta, double q);

/// Deterministic near-field RHS -> feed channel (N x M).
CMat rhs_feed_channel(const RhsGeometry& rhs, const FeedGeometry& feeds, double wavelength = 1.0);

/// H (M x K) for all sensors.
CMat sensors_rhs_matrix(const std::vector<Vec3>& sensors, const RhsGeometry& rhs,
                        const LinkParams& p, Rng& rng, std::vector<SensorLinkMeta>* meta = nullptr);

ChannelRealization draw_channel(const std::vector<Vec3>& sensors, const RhsGeometry& rhs,
                                const FeedGeometry& feeds, const LinkParams& p, Rng& rng);

/// Unit-modulus phase factors e^{j phi}.
CVec phase_factors(const RVec& phases);

/// G diag(e^{j phi}) H.
CMat effective_channel(const CMat& G, const RVec& phases, const CMat& H);

/// y = He diag(tx_gains) x + w with w ~ CN(0, sigma_w2 I).
CVec sample_received(const CMat& He, const RVec& tx_gains, const RVec& x, double sigma_w2, Rng& rng);

/// Same model with a pre-drawn noise vector.
CVec received_with_noise(const CMat& He, const RVec& tx_gains, const RVec& x, const CVec& w);

/// Draws w ~ CN(0, sigma_w2 I_n).
CVec sample_noise(Eigen::Index n, double sigma_w2, Rng& rng);

} // namespace hdf
