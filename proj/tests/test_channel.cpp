#include <doctest.h>

#include <cmath>

#include "hdf/channel.hpp"

using namespace hdf;

namespace {

RhsGeometry paper_rhs(int side = 4)
{
    return RhsGeometry::planar(Vec3(70, 20, 10), side, side, 1.0 / 3.0, 1.0 / 3.0, 1.5, 1.0);
}

CMat random_cmat(Eigen::Index r, Eigen::Index c, Rng& rng)
{
    CMat m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = complex_normal(rng, 1.0);
    return m;
}

} // namespace

TEST_CASE("path loss")
{
    LinkParams p;
    CHECK(path_loss(p.d0, p) == doctest::Approx(p.mu_ref));
    CHECK(path_loss(10.0, p) == doctest::Approx(1e-5).epsilon(1e-12));
    LinkParams flat = p;
    flat.nu = 0.0;
    CHECK(path_loss(37.0, flat) == doctest::Approx(p.mu_ref));
    CHECK_THROWS_AS(path_loss(0.0, p), InvalidArgument);
}

TEST_CASE("upa steering vector")
{
    const CVec b = upa_steering(0.0, 0.3, 3, 2, 0.5, 0.5);
    CHECK((b - CVec::Ones(6)).norm() < 1e-14);
    CHECK(upa_steering(0.4, 0.2, 1, 1, 0.3, 0.3).size() == 1);
    CHECK(std::abs(upa_steering(0.4, 0.2, 1, 1, 0.3, 0.3)[0] - 1.0) < 1e-15);

    const CVec a = upa_steering(kPi / 2, 0.0, 4, 2, 0.5, 0.5);
    for (int my = 0; my < 2; ++my)
        for (int mx = 0; mx < 4; ++mx) CHECK(std::abs(a[mx + 4 * my] - (mx % 2 ? -1.0 : 1.0)) < 1e-12);
    const CVec r = upa_steering(0.7, 1.1, 4, 4, 1.0 / 3.0, 1.0 / 3.0);
    CHECK((r.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-14);
}

TEST_CASE("Rician factor and channel power")
{
    CHECK(rician_b_from_db(3.0) == doctest::Approx(std::sqrt(std::pow(10, 0.3) / (1 + std::pow(10, 0.3)))));
    CHECK(rician_b_from_db(3.0) == doctest::Approx(0.8166).epsilon(1e-3));

    const auto rhs = paper_rhs();
    const LinkParams link;
    const Vec3 pos(12, 30, 2);
    Rng rng(21);

    const auto [h_los, meta] = sensor_rhs_channel_fixed_b(pos, rhs, link, 1.0, rng);
    CHECK(h_los.squaredNorm() == doctest::Approx(rhs.size() * path_loss(meta.distance, link)).epsilon(1e-12));
    CHECK(meta.tau >= 0.0);
    CHECK(meta.tau < kTwoPi);

    for (double b : {0.0, 0.8166}) {
        const int n = 10000;
        double s = 0, s2 = 0, pl = 0;
        for (int i = 0; i < n; ++i) {
            const auto [h, m] = sensor_rhs_channel_fixed_b(pos, rhs, link, b, rng);
            pl = path_loss(m.distance, link);
            const double v = h.squaredNorm() / rhs.size();
            s += v;
            s2 += v * v;
        }
        const double mean = s / n;
        const double sd = std::sqrt((s2 / n - mean * mean) / n);
        CHECK(std::abs(mean - pl) < 3 * sd);
    }

    // Drawn kappa stays in range.
    for (int i = 0; i < 200; ++i) {
        const auto [h, m] = sensor_rhs_channel(pos, rhs, link, rng);
        CHECK(m.rician_b >= rician_b_from_db(3.0) - 1e-12);
        CHECK(m.rician_b <= rician_b_from_db(5.0) + 1e-12);
    }
}

TEST_CASE("angles of arrival")
{
    const auto rhs = paper_rhs();
    const auto [theta, phi] = angles_of_arrival(rhs.center + 25.0 * rhs.boresight, rhs);
    CHECK(std::abs(theta) < 1e-12);
    (void)phi;
    const auto [t2, p2] = angles_of_arrival(rhs.center + Vec3(-10, 10, 0), rhs);
    CHECK(t2 == doctest::Approx(kPi / 4));
    CHECK(p2 == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("directivity")
{
    CHECK(directivity(1.0, 1.5) == doctest::Approx(8.0)); // peak gain of 8 for the cos^3 pattern
    CHECK(directivity(0.0, 1.5) == 0.0);
    CHECK(directivity(-0.4, 1.5) == 0.0);
    for (double q : {0.0, 1.0, 1.5, 3.0}) {
        const int steps = 4000;
        const double h = (kPi / 2) / steps;
        double acc = 0;
        for (int i = 0; i < steps; ++i) {
            const double th = (i + 0.5) * h;
            acc += directivity(std::cos(th), q) * std::sin(th) * h;
        }
        CHECK(acc * kTwoPi / (4 * kPi) == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("RHS to feed channel")
{
    const auto rhs = paper_rhs(2);
    const auto feeds = FeedGeometry::grid(Vec3(68, 18, 10), 2, 1, 0.5, 1.5);
    const CMat G = rhs_feed_channel(rhs, feeds);
    CHECK(G.rows() == 2);
    CHECK(G.cols() == 4);
    CHECK((G - rhs_feed_channel(rhs, feeds)).norm() == 0.0);
    for (Eigen::Index n = 0; n < 2; ++n)
        for (Eigen::Index m = 0; m < 4; ++m) {
            const double d = (feeds.feed_positions[n] - rhs.element_positions[m]).norm();
            const double expected = wrap_phase(-kTwoPi * d);
            CHECK(std::abs(std::polar(1.0, std::arg(G(n, m))) - std::polar(1.0, expected)) < 1e-9);
        }

    // Single element with a feed on its boresight axis, both patterns at their peak.
    RhsGeometry one = RhsGeometry::planar(Vec3(70, 20, 10), 1, 1, 1.0 / 3.0, 1.0 / 3.0, 1.5, 1.0);
    FeedGeometry f;
    f.feed_positions = {Vec3(70 - 3.0, 20, 10)};
    f.dx = f.dy = 0.5;
    f.q_factor = 1.5;
    const CMat g1 = rhs_feed_channel(one, f);
    const double lam = 1.0, d = 3.0, rho = 8.0;
    const double gr = 4 * kPi / (lam * lam) * (1.0 / 9.0) * rho;
    const double gf = 4 * kPi / (lam * lam) * 0.25 * rho;
    CHECK(std::abs(g1(0, 0)) == doctest::Approx(lam / (4 * kPi) * std::sqrt(gr * gf) / d).epsilon(1e-12));

    // Magnitude falls with distance along the axis.
    f.feed_positions = {Vec3(70 - 5.0, 20, 10)};
    CHECK(std::abs(rhs_feed_channel(one, f)(0, 0)) < std::abs(g1(0, 0)));

    // Behind the surface.
    f.feed_positions = {Vec3(73, 20, 10)};
    CHECK(std::abs(rhs_feed_channel(one, f)(0, 0)) == 0.0);

    f.feed_positions = {one.element_positions[0]};
    CHECK_THROWS_AS(rhs_feed_channel(one, f), InvalidArgument);
}

TEST_CASE("geometry validation")
{
    auto rhs = paper_rhs();
    CHECK_NOTHROW(rhs.validate());
    CHECK(rhs.boresight.isApprox(Vec3(-1, 0, 0)));
    rhs.center += Vec3(0, 0.1, 0);
    CHECK_THROWS_AS(rhs.validate(), InvalidArgument);
    FeedGeometry f;
    f.feed_positions = {Vec3(1, 1, 1), Vec3(1, 1, 1)};
    CHECK_THROWS_AS(f.validate(), InvalidArgument);
}

TEST_CASE("effective channel")
{
    Rng rng(4);
    const CMat G = random_cmat(2, 5, rng);
    const CMat H = random_cmat(5, 3, rng);
    CHECK((effective_channel(G, RVec::Zero(5), H) - G * H).norm() < 1e-12);

    const CMat g1 = random_cmat(2, 1, rng), h1 = random_cmat(1, 3, rng);
    RVec ph(1);
    ph << 0.9;
    CHECK((effective_channel(g1, ph, h1) - std::polar(1.0, 0.9) * g1 * h1).norm() < 1e-12);

    RVec p(5);
    for (int i = 0; i < 5; ++i) p[i] = kTwoPi * uniform01(rng);
    const CMat he = effective_channel(G, p, H);
    const CMat shifted = effective_channel(G, (p.array() + 0.77).matrix(), H);
    CHECK((shifted - std::polar(1.0, 0.77) * he).norm() < 1e-12);

    Eigen::JacobiSVD<CMat> sg(G), sh(H), se(he);
    CHECK(se.singularValues()[0] <= sg.singularValues()[0] * sh.singularValues()[0] * (1 + 1e-12));
    CHECK_THROWS_AS(effective_channel(G, RVec::Zero(4), H), DimensionMismatch);
}

TEST_CASE("received signal")
{
    Rng rng(8);
    const CMat He = random_cmat(2, 3, rng);
    const RVec gains = RVec::Constant(3, 0.7);
    RVec x(3);
    x << 1, -1, 1;
    const CVec mean = He * (0.7 * x).cast<cplx>();
    CHECK((received_with_noise(He, gains, x, CVec::Zero(2)) - mean).norm() < 1e-14);
    CHECK((received_with_noise(He, gains, -x, CVec::Zero(2)) + mean).norm() < 1e-14);

    const double s2 = 0.3;
    const int n = 100000;
    CMat acc = CMat::Zero(2, 2);
    for (int i = 0; i < n; ++i) {
        const CVec e = sample_received(He, gains, x, s2, rng) - mean;
        acc += e * e.adjoint();
    }
    acc /= n;
    const double tol = 3 * s2 / std::sqrt(double(n));
    CHECK(std::abs(acc(0, 0).real() - s2) < tol);
    CHECK(std::abs(acc(1, 1).real() - s2) < tol);
    CHECK(std::abs(acc(0, 1)) < 3 * s2 / std::sqrt(double(n)) * 1.5);
}
