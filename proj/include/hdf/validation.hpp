#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hdf/design.hpp"
#include "hdf/fusion.hpp"

namespace hdf {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

/// GLR by explicit products over all 2^K decision vectors, without any
/// log-domain arithmetic. Only usable when the exponentials stay in range.
double naive_glr(const CVec& y, const CMat& He, const RVec& tx_gains, double sigma_w2,
                 const TargetGrid& grid);

/// A small random physical instance: sensors, RHS, feeds and one channel draw.
struct RandomInstance {
    SensorField field;
    SensingParams sensing;
    TargetGrid grid;
    RVec rho_bar;
    RVec rho0;
    ChannelRealization channel;
    RVec tx_gains;
    double sigma_w2 = 1e-5;
};

RandomInstance random_instance(Rng& rng, int max_k, int max_side, int max_feeds, int grid_side = 2);

/// Every run_ao trace (four FuC variants and IS) is non-decreasing with
/// relative slack 1e-9 over n random scenarios.
CheckResult check_mm_monotonicity(int n_scenarios = 100, std::uint64_t seed = 11);

/// Closed-form Step A reaches the generalised Rayleigh bound and beats random probes.
CheckResult check_step_a_optimality(int n_instances = 50, int n_probes = 10000, std::uint64_t seed = 12);

/// Design-matrix ratio against the end-to-end deflection through the effective channel.
CheckResult check_ratio_identity(int n_instances = 50, std::uint64_t seed = 13);

/// Gray-code log-sum-exp GLR against the naive double sum for K <= 6, N_t <= 4.
CheckResult check_glr_enumeration(int n_draws = 100, std::uint64_t seed = 14);

/// Local detector probabilities, directivity normalisation and Rician power
/// budget against Monte Carlo or numerical integration.
CheckResult check_sensing_oracles(int n_draws = 100000, std::uint64_t seed = 15);

std::vector<CheckResult> run_validation_suite();

} // namespace hdf
