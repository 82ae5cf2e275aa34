#include <doctest.h>

#include "hdf/augmented.hpp"
#include "hdf/sensing.hpp"

using namespace hdf;

namespace {

CMat random_cmat(Eigen::Index r, Eigen::Index c, Rng& rng)
{
    CMat m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = complex_normal(rng, 1.0);
    return m;
}

CVec random_cvec(Eigen::Index n, Rng& rng) { return random_cmat(n, 1, rng).col(0); }

RVec random_probs(Eigen::Index k, Rng& rng)
{
    RVec p(k);
    for (Eigen::Index i = 0; i < k; ++i) p[i] = 0.05 + 0.9 * uniform01(rng);
    return p;
}

} // namespace

TEST_CASE("augmented vector structure")
{
    Rng rng(1);
    const CVec a = random_cvec(3, rng);
    const AugmentedVector av(a);
    const CVec f = av.full();
    CHECK(f.size() == 6);
    CHECK((f.tail(3) - a.conjugate()).norm() == 0.0);
    CHECK(av.norm() == doctest::Approx(f.norm()));
    CHECK(av.normalized().norm() == doctest::Approx(1.0));

    const CVec y = random_cvec(3, rng);
    const cplx explicit_full = f.dot(augment(y));
    CHECK(std::abs(explicit_full.imag()) < 1e-12);
    CHECK(av.apply(y) == doctest::Approx(explicit_full.real()));

    const CVec v = random_cvec(6, rng);
    CHECK(std::abs(av.inner_full(v) - f.dot(v)) < 1e-12);

    // from_full projects onto the conjugate-symmetric subspace.
    const AugmentedVector p = AugmentedVector::from_full(v);
    CHECK((AugmentedVector::from_full(p.full()).top() - p.top()).norm() < 1e-14);
    CHECK((AugmentedVector::from_full(f).top() - a).norm() < 1e-14);

    CHECK_THROWS_AS(AugmentedVector::from_full(CVec::Zero(5)), DimensionMismatch);
    CHECK_THROWS_AS(AugmentedVector(CVec::Zero(2)).normalized(), InvalidArgument);
    CHECK_THROWS_AS(av.apply(CVec::Zero(4)), DimensionMismatch);
}

TEST_CASE("augment_rows")
{
    Rng rng(2);
    const CMat A = random_cmat(2, 3, rng);
    const CVec x = random_cvec(3, rng);
    const CMat Aa = augment_rows(A);
    CHECK((Aa * x).head(2).isApprox(A * x));
    CHECK((Aa.bottomRows(2) - A.conjugate()).norm() == 0.0);
}

TEST_CASE("signal moments match sample moments")
{
    Rng rng(3);
    const int n = 2, k = 3;
    const CMat He = random_cmat(n, k, rng);
    const RVec gains = (RVec(3) << 0.5, 1.0, 1.5).finished();
    const RVec rho1 = random_probs(k, rng), rho0 = random_probs(k, rng);
    const double s2 = 0.2;
    const SignalMoments m = moments_y(He, gains, rho1, rho0, s2);

    CHECK((m.aug_cov1 - augmented_cov(He, gains, decision_cov_diag(rho1), s2)).norm() < 1e-12);
    CHECK((m.aug_cov0 - augmented_cov(He, gains, decision_cov_diag(rho0), s2)).norm() < 1e-12);
    CHECK((augment(m.mean1) - augmented_mean(He, gains, rho1)).norm() < 1e-12);
    CHECK((augment(m.mean1 - m.mean0) - augmented_mean_diff(He, gains, rho1 - rho0)).norm() < 1e-12);
    CHECK((m.cov1 - m.cov1.adjoint()).norm() < 1e-12);
    CHECK((m.pcov1 - m.pcov1.transpose()).norm() < 1e-12);

    const int draws = 200000;
    CVec sum = CVec::Zero(n);
    CMat outer = CMat::Zero(n, n), pouter = CMat::Zero(n, n);
    for (int i = 0; i < draws; ++i) {
        const RVec x = sample_decisions(rho1, rng);
        CVec y = He * (gains.array() * x.array()).matrix().cast<cplx>();
        for (int r = 0; r < n; ++r) y[r] += complex_normal(rng, s2);
        sum += y;
        outer += y * y.adjoint();
        pouter += y * y.transpose();
    }
    const CVec mean = sum / draws;
    const CMat cov = outer / draws - mean * mean.adjoint();
    const CMat pcov = pouter / draws - mean * mean.transpose();
    const double scale = (He * gains.cast<cplx>().asDiagonal()).norm();
    const double tol = 6.0 * (scale * scale + s2) / std::sqrt(double(draws));
    CHECK((mean - m.mean1).norm() < tol);
    CHECK((cov - m.cov1).norm() < 2 * tol);
    CHECK((pcov - m.pcov1).norm() < 2 * tol);
}

TEST_CASE("widely-linear deflection")
{
    Rng rng(4);
    const CMat He = random_cmat(2, 4, rng);
    const RVec gains = RVec::Ones(4);
    const RVec rho1 = random_probs(4, rng), rho0 = random_probs(4, rng);
    const CVec dmu = augmented_mean_diff(He, gains, rho1 - rho0);
    const CMat S = augmented_cov(He, gains, decision_cov_diag(rho0), 0.3);

    const double best = max_deflection(dmu, S);
    const CMat Sinv = S.inverse();
    CHECK(best == doctest::Approx((dmu.adjoint() * Sinv * dmu)(0, 0).real()).epsilon(1e-10));

    const AugmentedVector opt = AugmentedVector::from_full(Sinv * dmu);
    CHECK(deflection_wl(opt, dmu, S) == doctest::Approx(best).epsilon(1e-10));
    for (int i = 0; i < 200; ++i) {
        const AugmentedVector a(random_cvec(2, rng));
        const double d = deflection_wl(a, dmu, S);
        CHECK(d <= best * (1 + 1e-12));
        CHECK(deflection_wl(AugmentedVector(a.top() * 3.7), dmu, S) == doctest::Approx(d).epsilon(1e-12));
        // A global phase on a is not a WL invariance, but the real sign is.
        CHECK(deflection_wl(AugmentedVector(-a.top()), dmu, S) == doctest::Approx(d).epsilon(1e-12));
    }
    CHECK_THROWS_AS(deflection_wl(AugmentedVector(CVec::Zero(3)), dmu, S), DimensionMismatch);
}

TEST_CASE("Hermitian solver")
{
    Rng rng(5);
    const CMat B = random_cmat(4, 4, rng);
    const CMat S = B * B.adjoint() + CMat::Identity(4, 4);
    const CVec b = random_cvec(4, rng);
    const HermitianSolver solver(S);
    CHECK(!solver.jittered());
    CHECK((solver.solve(b) - S.inverse() * b).norm() < 1e-10);

    // Rank-deficient input falls back to a jittered factorisation.
    const CVec u = random_cvec(4, rng);
    const HermitianSolver singular(u * u.adjoint());
    CHECK(singular.jittered());
    CHECK_THROWS_AS(HermitianSolver(-CMat::Identity(3, 3)), Error);
}
