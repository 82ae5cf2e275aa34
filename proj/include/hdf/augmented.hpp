#pragma once

#include "hdf/common.hpp"

namespace hdf {

/// Augmented vector [a; conj(a)]. Only the top half is stored, so the
/// conjugate symmetry of the bottom half holds by construction.
class AugmentedVector {
public:
    AugmentedVector() = default;
    explicit AugmentedVector(CVec top) : top_(std::move(top)) {}

    /// Builds from a full 2L vector, symmetrising the two halves.
    static AugmentedVector from_full(const CVec& full);

    const CVec& top() const { return top_; }
    Eigen::Index half_size() const { return top_.size(); }
    Eigen::Index size() const { return 2 * top_.size(); }

    CVec full() const;
    /// Euclidean norm of the full 2L vector.
    double norm() const { return std::sqrt(2.0) * top_.norm(); }
    AugmentedVector normalized() const;

    /// a_aug^H y_aug = 2 Re(a^H y) for a plain (non-augmented) y.
    double apply(const CVec& y) const;
    /// a_aug^H v for an arbitrary full-length vector v.
    cplx inner_full(const CVec& v) const;
    /// a_aug^H M a_aug for a full 2L x 2L matrix.
    double quad_form(const CMat& m) const;

private:
    CVec top_;
};

/// [A; conj(A)].
CMat augment_rows(const CMat& a);
/// [v; conj(v)].
CVec augment(const CVec& v);

enum class DeflectionKind { Normal = 0, Modified = 1 };

const char* to_string(DeflectionKind k);

struct SignalMoments {
    CVec mean1, mean0;   // E{y | H_i}
    CMat cov1, cov0;     // Cov(y | H_i)
    CMat pcov1, pcov0;   // PCov(y | H_i)
    CMat aug_cov1, aug_cov0;
};

/// Conditional moments of y = He D x + w, given per-hypothesis probability
/// vectors rho1 (H1) and rho0 (H0).
SignalMoments moments_y(const CMat& He, const RVec& tx_gains, const RVec& rho1, const RVec& rho0,
                        double sigma_w2);

/// He_aug D C D He_aug^H + sigma_w2 I_{2N}, with C = diag(c_diag).
CMat augmented_cov(const CMat& He, const RVec& tx_gains, const RVec& c_diag, double sigma_w2);

/// Augmented mean separation E{y_aug|H1} - E{y_aug|H0} = 2 He_aug D rho10.
CVec augmented_mean_diff(const CMat& He, const RVec& tx_gains, const RVec& rho10);

/// Augmented conditional mean He_aug D (2 rho - 1).
CVec augmented_mean(const CMat& He, const RVec& tx_gains, const RVec& rho);

/// (a^H dmu)^2 / (a^H Sigma a).
double deflection_wl(const AugmentedVector& a, const CVec& mean_diff_aug, const CMat& aug_cov);

/// Cholesky factorisation of a Hermitian positive-definite matrix. If the
/// plain factorisation fails, a diagonal jitter of 1e-12 * trace / n is added.
class HermitianSolver {
public:
    explicit HermitianSolver(const CMat& m);
    CVec solve(const CVec& b) const;
    /// b^H M^{-1} b (real part).
    double inverse_quad(const CVec& b) const;
    bool jittered() const { return jittered_; }

private:
    Eigen::LLT<CMat> llt_;
    bool jittered_ = false;
};

/// Generalised Rayleigh maximum dmu^H Sigma^{-1} dmu.
double max_deflection(const CVec& mean_diff_aug, const CMat& aug_cov);

} // namespace hdf
