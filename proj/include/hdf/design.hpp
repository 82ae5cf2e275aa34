#pragma once

#include <optional>
#include <vector>

#include "hdf/augmented.hpp"
#include "hdf/channel.hpp"
#include "hdf/fusion.hpp"

namespace hdf {

enum class DesignFamily { EFuC, BFuC, IS };

const char* to_string(DesignFamily f);

struct DesignObjective {
    DesignFamily family = DesignFamily::EFuC;
    DeflectionKind kind = DeflectionKind::Normal; // ignored for IS
    RVec rho0;                                    // false-alarm vector (eFuC, bFuC)
    std::optional<RVec> rho_bar;                  // eFuC only
    std::optional<TargetGrid> grid;               // bFuC only

    static DesignObjective efuc(DeflectionKind kind, RVec rho_bar, RVec rho0);
    static DesignObjective bfuc(DeflectionKind kind, TargetGrid grid);
    static DesignObjective ideal_sensors();

    void validate(Eigen::Index k) const;
};

/// Matrices of the phase subproblem for one (branch) deflection ratio.
///
/// The compact factors (v, delta0, s_diag, noise) are always filled; the dense
/// 2M x 2M forms only when requested, because the MM update never needs them.
struct DesignMatrices {
    CVec v;        // N^H a_aug, length 2M
    CMat delta0;   // K x 2M
    RVec s_diag;   // diagonal of D C D
    double noise = 0.0; // (sigma_w2 / 2M) ||a||^2
    double lambda_max = 0.0;

    bool dense = false;
    CMat N_mat; // 2N x 2M
    CMat Xi;    // v v^H
    CMat Psi;   // delta0^H D C D delta0 + noise I

    CVec xi_times(const CVec& theta_aug) const;
    CVec psi_times(const CVec& theta_aug) const;
    double xi_quad(const CVec& theta_aug) const;
    double psi_quad(const CVec& theta_aug) const;
};

/// Assembles the matrices with u = H D rho10, g = G^H a_top.
DesignMatrices build_design_matrices(const CMat& G, const CMat& H, const RVec& tx_gains,
                                     const RVec& rho10, const AugmentedVector& a,
                                     const RVec& c_diag, double sigma_w2, bool dense = true);

/// Largest eigenvalue of a Hermitian matrix. Throws on non-Hermitian input.
double largest_eigenvalue(const CMat& m);

AugmentedVector step_a_efuc(const CMat& He, const RVec& tx_gains, const RVec& rho_bar,
                            const RVec& rho0, DeflectionKind kind, double sigma_w2);

std::vector<AugmentedVector> step_a_bfuc(const CMat& He, const RVec& tx_gains, const TargetGrid& grid,
                                         DeflectionKind kind, double sigma_w2);

AugmentedVector step_a_is(const CMat& He, const RVec& tx_gains);

/// One MM step on sum_j xi_j / psi_j. Components whose update argument is zero
/// keep their previous phase.
RVec mm_phase_update(const RVec& theta_prev, const std::vector<DesignMatrices>& matrices);

/// Phase alignment step for the ideal-sensor objective (v^H theta_aug)^2.
RVec mm_phase_update_is(const RVec& theta_prev, const CVec& v_is);

struct AoOptions {
    double tol = 1e-6;
    int max_iter = 200;
    /// When false the loop always runs max_iter iterations (timing studies).
    bool stop_on_convergence = true;
};

struct RhsDesign {
    DesignFamily family = DesignFamily::EFuC;
    DeflectionKind kind = DeflectionKind::Normal;
    RVec phases;
    FilterBank fusion;          // a single rule for eFuC and IS
    std::vector<double> objective_trace;
    std::vector<double> iteration_seconds;
    int iterations = 0;
    bool converged = false;
    double objective = 0.0;     // family objective at the returned design
    double seconds = 0.0;

    double statistic(const CVec& y) const { return filter_bank_statistic(fusion, y); }
};

/// Family objective: eFuC deflection, mean branch deflection for bFuC (both
/// with the factor 4), or (a_aug^H He_aug D 1)^2 for IS.
double design_objective_value(const DesignObjective& obj, const CMat& He, const RVec& tx_gains,
                              const std::vector<AugmentedVector>& a, double sigma_w2);

/// Alternating optimisation: Step A (closed-form fusion) then one MM phase
/// step, repeated until the relative objective change drops below tol.
RhsDesign run_ao(const DesignObjective& objective, const ChannelRealization& channel,
                 const RVec& tx_gains, double sigma_w2, const RVec& init_phases,
                 const AoOptions& options = {});

/// Uniform phases on [0, 2pi).
RVec random_phases(Eigen::Index m, Rng& rng);

/// eFuC-style deflection of an arbitrary single WL rule on a fixed channel.
double efuc_deflection(const AugmentedVector& a, const CMat& He, const RVec& tx_gains,
                       const RVec& rho_bar, const RVec& rho0, DeflectionKind kind, double sigma_w2);

} // namespace hdf
