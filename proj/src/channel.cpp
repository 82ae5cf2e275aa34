#include "hdf/channel.hpp"

#include <cmath>
#include <sstream>

namespace hdf {

void RhsGeometry::validate() const
{
    if (element_positions.empty()) throw InvalidArgument("rhs has no elements");
    if (std::abs(boresight.norm() - 1.0) > 1e-9) throw InvalidArgument("rhs boresight must be unit norm");
    if (!(q_factor >= 0.0)) throw InvalidArgument("rhs.q_factor must be >= 0");
    if (!(efficiency > 0.0 && efficiency <= 1.0)) throw InvalidArgument("rhs.efficiency must lie in (0,1]");
    if (!(dx > 0.0) || !(dy > 0.0)) throw InvalidArgument("rhs spacings must be > 0");
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : element_positions) centroid += p;
    centroid /= static_cast<double>(element_positions.size());
    if ((centroid - center).norm() > 1e-9) throw InvalidArgument("rhs center is not the element centroid");
    for (const auto& p : element_positions)
        if (std::abs((p - center).dot(boresight)) > 1e-9)
            throw InvalidArgument("rhs elements are not coplanar with normal = boresight");
}

RhsGeometry RhsGeometry::planar(const Vec3& center, int side_h, int side_v, double dx, double dy,
                                double q_factor, double efficiency, const Vec3& axis_h,
                                const Vec3& axis_v)
{
    if (side_h < 1 || side_v < 1) throw InvalidArgument("rhs sides must be >= 1");
    RhsGeometry g;
    g.center = center;
    g.axis_h = axis_h.normalized();
    g.axis_v = axis_v.normalized();
    g.boresight = -g.axis_h.cross(g.axis_v).normalized();
    g.side_h = side_h;
    g.side_v = side_v;
    g.dx = dx;
    g.dy = dy;
    g.q_factor = q_factor;
    g.efficiency = efficiency;
    g.element_positions.reserve(static_cast<std::size_t>(side_h) * side_v);
    for (int my = 0; my < side_v; ++my) {
        for (int mx = 0; mx < side_h; ++mx) {
            const double oh = (mx - 0.5 * (side_h - 1)) * dx;
            const double ov = (my - 0.5 * (side_v - 1)) * dy;
            g.element_positions.push_back(center + oh * g.axis_h + ov * g.axis_v);
        }
    }
    return g;
}

void FeedGeometry::validate() const
{
    if (feed_positions.empty()) throw InvalidArgument("feed array is empty");
    for (std::size_t i = 0; i < feed_positions.size(); ++i)
        for (std::size_t j = i + 1; j < feed_positions.size(); ++j)
            if ((feed_positions[i] - feed_positions[j]).norm() < 1e-12)
                throw InvalidArgument("feeds " + std::to_string(i) + " and " + std::to_string(j) +
                                      " coincide");
    if (!(q_factor >= 0.0)) throw InvalidArgument("feeds.q_factor must be >= 0");
}

FeedGeometry FeedGeometry::grid(const Vec3& center, int count_x, int count_z, double spacing,
                                double q_factor)
{
    if (count_x < 1 || count_z < 1) throw InvalidArgument("feed layout counts must be >= 1");
    FeedGeometry f;
    f.dx = spacing;
    f.dy = spacing;
    f.q_factor = q_factor;
    for (int iz = 0; iz < count_z; ++iz)
        for (int ix = 0; ix < count_x; ++ix)
            f.feed_positions.push_back(center + Vec3((ix - 0.5 * (count_x - 1)) * spacing, 0.0,
                                                     (iz - 0.5 * (count_z - 1)) * spacing));
    return f;
}

void LinkParams::validate() const
{
    if (!(d0 > 0.0)) throw InvalidArgument("link.d0 must be > 0");
    if (!(nu >= 0.0)) throw InvalidArgument("link.nu must be >= 0");
    if (!(rician_db_lo <= rician_db_hi)) throw InvalidArgument("link rician range is inverted");
    if (!(wavelength > 0.0)) throw InvalidArgument("link.wavelength must be > 0");
}

double path_loss(double d, const LinkParams& p)
{
    if (!(d > 0.0)) throw InvalidArgument("path_loss: distance must be > 0");
    return p.mu_ref * std::pow(d / p.d0, -p.nu);
}

CVec upa_steering(double theta, double phi, int mx, int my, double dh, double dv)
{
    if (mx < 1 || my < 1) throw InvalidArgument("upa_steering: array sides must be >= 1");
    CVec a(static_cast<Eigen::Index>(mx) * my);
    const double uh = std::sin(theta) * std::cos(phi);
    const double uv = std::sin(theta) * std::sin(phi);
    for (int iy = 0; iy < my; ++iy)
        for (int ix = 0; ix < mx; ++ix)
            a[ix + mx * iy] = std::polar(1.0, kTwoPi * (ix * dh * uh + iy * dv * uv));
    return a;
}

double rician_b_from_db(double kappa_db)
{
    const double kappa = db_to_linear(kappa_db);
    return std::sqrt(kappa / (1.0 + kappa));
}

std::pair<double, double> angles_of_arrival(const Vec3& pos, const RhsGeometry& rhs)
{
    const Vec3 d = pos - rhs.center;
    const double r = d.norm();
    if (!(r > 0.0)) throw InvalidArgument("source coincides with the RHS centre");
    const Vec3 u = d / r;
    const double c = std::clamp(u.dot(rhs.boresight), -1.0, 1.0);
    const double theta = std::acos(c);
    const double h = u.dot(rhs.axis_h);
    const double v = u.dot(rhs.axis_v);
    const double phi = (h == 0.0 && v == 0.0) ? 0.0 : std::atan2(v, h);
    return {theta, phi};
}

std::pair<CVec, SensorLinkMeta> sensor_rhs_channel_fixed_b(const Vec3& sensor_pos,
                                                           const RhsGeometry& rhs,
                                                           const LinkParams& p, double b, Rng& rng)
{
    SensorLinkMeta meta;
    meta.distance = (sensor_pos - rhs.center).norm();
    const auto [theta, phi] = angles_of_arrival(sensor_pos, rhs);
    meta.theta_aoa = theta;
    meta.phi_aoa = phi;
    meta.rician_b = b;
    meta.tau = kTwoPi * uniform01(rng);

    const double amp = std::sqrt(path_loss(meta.distance, p));
    const CVec los = upa_steering(theta, phi, rhs.side_h, rhs.side_v, rhs.dx, rhs.dy) *
                     std::polar(1.0, meta.tau);
    const auto m = static_cast<Eigen::Index>(rhs.size());
    if (los.size() != m) throw DimensionMismatch("rhs element count does not match side_h*side_v");
    CVec h(m);
    const double scatter = std::sqrt(std::max(0.0, 1.0 - b * b));
    for (Eigen::Index i = 0; i < m; ++i) h[i] = amp * (b * los[i] + scatter * complex_normal(rng, 1.0));
    return {h, meta};
}

std::pair<CVec, SensorLinkMeta> sensor_rhs_channel(const Vec3& sensor_pos, const RhsGeometry& rhs,
                                                   const LinkParams& p, Rng& rng)
{
    const double kappa_db = p.rician_db_lo + (p.rician_db_hi - p.rician_db_lo) * uniform01(rng);
    return sensor_rhs_channel_fixed_b(sensor_pos, rhs, p, rician_b_from_db(kappa_db), rng);
}

double directivity(double cos_theta, double q)
{
    if (cos_theta <= 0.0) return 0.0;
    return 2.0 * (2.0 * q + 1.0) * std::pow(std::min(cos_theta, 1.0), 2.0 * q);
}

CMat rhs_feed_channel(const RhsGeometry& rhs, const FeedGeometry& feeds, double wavelength)
{
    const auto n = static_cast<Eigen::Index>(feeds.size());
    const auto m = static_cast<Eigen::Index>(rhs.size());
    CMat G(n, m);
    const double lam = wavelength;
    const double k0 = kTwoPi / lam;
    const double area_rhs = rhs.dx * rhs.dy * lam * lam;
    const double area_fc = feeds.dx * feeds.dy * lam * lam;
    for (Eigen::Index in = 0; in < n; ++in) {
        const Vec3& pf = feeds.feed_positions[static_cast<std::size_t>(in)];
        const Vec3 to_center = rhs.center - pf;
        const double to_center_norm = to_center.norm();
        for (Eigen::Index im = 0; im < m; ++im) {
            const Vec3& pm = rhs.element_positions[static_cast<std::size_t>(im)];
            const Vec3 diff = pf - pm; // element -> feed
            const double dist_wl = diff.norm();
            if (dist_wl < 1e-12) {
                std::ostringstream os;
                os << "feed " << in << " coincides with rhs element " << im;
                throw InvalidArgument(os.str());
            }
            const double cos_rhs = diff.dot(rhs.boresight) / dist_wl;
            const double cos_fc =
                to_center_norm > 0.0 ? to_center.dot(-diff) / (to_center_norm * dist_wl) : 1.0;
            const double g_rhs = 4.0 * kPi / (lam * lam) * area_rhs * directivity(cos_rhs, rhs.q_factor);
            const double g_fc = 4.0 * kPi / (lam * lam) * area_fc * directivity(cos_fc, feeds.q_factor);
            const double dist = dist_wl * lam;
            const double mag = lam / (4.0 * kPi) * std::sqrt(rhs.efficiency * g_rhs * g_fc) / dist;
            G(in, im) = std::polar(mag, -k0 * dist);
        }
    }
    return G;
}

CMat sensors_rhs_matrix(const std::vector<Vec3>& sensors, const RhsGeometry& rhs,
                        const LinkParams& p, Rng& rng, std::vector<SensorLinkMeta>* meta)
{
    const auto m = static_cast<Eigen::Index>(rhs.size());
    CMat H(m, static_cast<Eigen::Index>(sensors.size()));
    if (meta) meta->clear();
    for (std::size_t k = 0; k < sensors.size(); ++k) {
        auto [h, mk] = sensor_rhs_channel(sensors[k], rhs, p, rng);
        H.col(static_cast<Eigen::Index>(k)) = h;
        if (meta) meta->push_back(mk);
    }
    return H;
}

ChannelRealization draw_channel(const std::vector<Vec3>& sensors, const RhsGeometry& rhs,
                                const FeedGeometry& feeds, const LinkParams& p, Rng& rng)
{
    ChannelRealization c;
    c.H = sensors_rhs_matrix(sensors, rhs, p, rng, &c.meta);
    c.G = rhs_feed_channel(rhs, feeds, p.wavelength);
    return c;
}

CVec phase_factors(const RVec& phases)
{
    CVec t(phases.size());
    for (Eigen::Index i = 0; i < phases.size(); ++i) t[i] = std::polar(1.0, phases[i]);
    return t;
}

CMat effective_channel(const CMat& G, const RVec& phases, const CMat& H)
{
    if (G.cols() != H.rows() || phases.size() != G.cols()) {
        std::ostringstream os;
        os << "effective_channel: G is " << G.rows() << "x" << G.cols() << ", H is " << H.rows()
           << "x" << H.cols() << ", phases has " << phases.size() << " entries";
        throw DimensionMismatch(os.str());
    }
    return G * phase_factors(phases).asDiagonal() * H;
}

CVec sample_noise(Eigen::Index n, double sigma_w2, Rng& rng)
{
    CVec w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = complex_normal(rng, sigma_w2);
    return w;
}

CVec received_with_noise(const CMat& He, const RVec& tx_gains, const RVec& x, const CVec& w)
{
    if (He.cols() != x.size() || tx_gains.size() != x.size() || w.size() != He.rows())
        throw DimensionMismatch("received signal: He, gains, x and w do not conform");
    return He * (tx_gains.array() * x.array()).matrix().cast<cplx>() + w;
}

CVec sample_received(const CMat& He, const RVec& tx_gains, const RVec& x, double sigma_w2, Rng& rng)
{
    return received_with_noise(He, tx_gains, x, sample_noise(He.rows(), sigma_w2, rng));
}

} // namespace hdf
