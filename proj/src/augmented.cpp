#include "hdf/augmented.hpp"

namespace hdf {

AugmentedVector AugmentedVector::from_full(const CVec& full)
{
    if (full.size() % 2 != 0) throw DimensionMismatch("augmented vector must have even length");
    const Eigen::Index l = full.size() / 2;
    return AugmentedVector(0.5 * (full.head(l) + full.tail(l).conjugate()));
}

CVec AugmentedVector::full() const { return augment(top_); }

AugmentedVector AugmentedVector::normalized() const
{
    const double n = norm();
    if (!(n > 0.0)) throw InvalidArgument("cannot normalise a zero augmented vector");
    return AugmentedVector(top_ / n);
}

double AugmentedVector::apply(const CVec& y) const
{
    if (y.size() != top_.size()) throw DimensionMismatch("augmented statistic: size mismatch");
    return 2.0 * top_.dot(y).real();
}

cplx AugmentedVector::inner_full(const CVec& v) const
{
    if (v.size() != size()) throw DimensionMismatch("augmented inner product: size mismatch");
    const Eigen::Index l = top_.size();
    return top_.dot(v.head(l)) + top_.conjugate().dot(v.tail(l));
}

double AugmentedVector::quad_form(const CMat& m) const
{
    const CVec f = full();
    return f.dot(m * f).real();
}

CMat augment_rows(const CMat& a)
{
    CMat out(2 * a.rows(), a.cols());
    out.topRows(a.rows()) = a;
    out.bottomRows(a.rows()) = a.conjugate();
    return out;
}

CVec augment(const CVec& v)
{
    CVec out(2 * v.size());
    out.head(v.size()) = v;
    out.tail(v.size()) = v.conjugate();
    return out;
}

const char* to_string(DeflectionKind k) { return k == DeflectionKind::Normal ? "normal" : "modified"; }

namespace {

void check_conform(const CMat& He, const RVec& tx_gains, const RVec& rho)
{
    if (He.cols() != tx_gains.size() || rho.size() != tx_gains.size())
        throw DimensionMismatch("moments: He columns, gains and probability vector must share K");
}

} // namespace

SignalMoments moments_y(const CMat& He, const RVec& tx_gains, const RVec& rho1, const RVec& rho0,
                        double sigma_w2)
{
    check_conform(He, tx_gains, rho1);
    check_conform(He, tx_gains, rho0);
    const auto n = He.rows();
    const CMat HD = He * tx_gains.cast<cplx>().asDiagonal();
    SignalMoments s;
    s.mean1 = HD * (2.0 * rho1.array() - 1.0).matrix().cast<cplx>();
    s.mean0 = HD * (2.0 * rho0.array() - 1.0).matrix().cast<cplx>();

    auto second_order = [&](const RVec& rho, CMat& cov, CMat& pcov) {
        const RVec c = (4.0 * rho.array() * (1.0 - rho.array())).matrix();
        const CMat HDC = HD * c.cast<cplx>().asDiagonal();
        cov = HDC * HD.adjoint() + sigma_w2 * CMat::Identity(n, n);
        pcov = HDC * HD.transpose();
    };
    second_order(rho1, s.cov1, s.pcov1);
    second_order(rho0, s.cov0, s.pcov0);

    auto assemble = [&](const CMat& cov, const CMat& pcov) {
        CMat a(2 * n, 2 * n);
        a.topLeftCorner(n, n) = cov;
        a.topRightCorner(n, n) = pcov;
        a.bottomLeftCorner(n, n) = pcov.conjugate();
        a.bottomRightCorner(n, n) = cov.conjugate();
        return a;
    };
    s.aug_cov1 = assemble(s.cov1, s.pcov1);
    s.aug_cov0 = assemble(s.cov0, s.pcov0);
    return s;
}

CMat augmented_cov(const CMat& He, const RVec& tx_gains, const RVec& c_diag, double sigma_w2)
{
    check_conform(He, tx_gains, c_diag);
    const CMat HaD = augment_rows(He) * tx_gains.cast<cplx>().asDiagonal();
    const auto n2 = HaD.rows();
    return HaD * c_diag.cast<cplx>().asDiagonal() * HaD.adjoint() +
           sigma_w2 * CMat::Identity(n2, n2);
}

CVec augmented_mean_diff(const CMat& He, const RVec& tx_gains, const RVec& rho10)
{
    check_conform(He, tx_gains, rho10);
    return augment(2.0 * He * (tx_gains.array() * rho10.array()).matrix().cast<cplx>());
}

CVec augmented_mean(const CMat& He, const RVec& tx_gains, const RVec& rho)
{
    check_conform(He, tx_gains, rho);
    return augment(He * (tx_gains.array() * (2.0 * rho.array() - 1.0)).matrix().cast<cplx>());
}

double deflection_wl(const AugmentedVector& a, const CVec& mean_diff_aug, const CMat& aug_cov)
{
    if (aug_cov.rows() != a.size() || aug_cov.cols() != a.size())
        throw DimensionMismatch("deflection: covariance does not match the WL vector");
    const double num = a.inner_full(mean_diff_aug).real();
    const double den = a.quad_form(aug_cov);
    if (!(den > 0.0)) throw Error("deflection: non-positive variance (singular augmented covariance)");
    return num * num / den;
}

HermitianSolver::HermitianSolver(const CMat& m)
{
    llt_.compute(m);
    if (llt_.info() != Eigen::Success) {
        const double jitter = 1e-12 * m.trace().real() / static_cast<double>(m.rows());
        llt_.compute(m + jitter * CMat::Identity(m.rows(), m.cols()));
        jittered_ = true;
        if (llt_.info() != Eigen::Success)
            throw Error("Hermitian factorisation failed: matrix is not positive definite");
    }
}

CVec HermitianSolver::solve(const CVec& b) const { return llt_.solve(b); }

double HermitianSolver::inverse_quad(const CVec& b) const { return b.dot(llt_.solve(b)).real(); }

double max_deflection(const CVec& mean_diff_aug, const CMat& aug_cov)
{
    return HermitianSolver(aug_cov).inverse_quad(mean_diff_aug);
}

} // namespace hdf
