#pragma once

#include <cstdint>
#include <vector>

#include "multiscale/entropy.hpp"
#include "multiscale/measure.hpp"
#include "multiscale/space.hpp"

namespace multiscale {

// The multiplier-to-scale map of the hierarchical maximizer:
// zeta_l = mu / (1 + gamma_l) with gamma_1 = 0, so zeta_1 = mu. Requires
// mu > 0 (otherwise no positive scale parameters exist).
ScaleParams multipliers_to_zetas(const ProductSpace& space, const Multipliers& mult);

// Construct the maximizer of phi_functional over the simplex by the backward
// sweep; self-checks phi(maximizer) == log_z_root within 1e-10.
MultiscaleMeasure solve_variational(const CostTensor& H, const Multipliers& mult);

// Two-scale thermodynamics read directly off the multipliers:
// beta_2 = mu/(1+gamma) and beta_1/beta_2 = 1+gamma (with the overall beta
// normalized to 1). frozen_level2 flags the gamma -> -1 divergence.
struct TemperatureRatios {
    double beta2 = 0.0;
    double ratio_beta1_beta2 = 0.0;
    bool frozen_level2 = false;
};
TemperatureRatios temperature_ratios(const Multipliers& mult);

// One converged root of the two-target constrained problem.
struct ConstrainedRoot {
    double mu = 0.0;
    double gamma = 0.0;
    double resid_energy = 0.0;   // <H> - E at the root
    double resid_entropy = 0.0;  // S^2 - S2 at the root
    int iterations = 0;
};

struct ConstrainedSolution {
    ConstrainedSolution(Multipliers mult, MultiscaleMeasure m) : multipliers(std::move(mult)), measure(std::move(m)) {}

    Multipliers multipliers;  // principal (smallest-residual) root
    MultiscaleMeasure measure;
    double resid_energy = 0.0;
    double resid_entropy = 0.0;
    int iterations = 0;
    std::vector<ConstrainedRoot> roots;  // every distinct root the seeds found
};

// Solve <H> = energy_target and S^2 = level2_entropy_target for (mu, gamma)
// on a two-level space. Damped Newton in (log zeta_1, log zeta_2) with a
// finite-difference Jacobian, seeded from a log-spaced grid; throws
// InfeasibleError when no seed converges.
ConstrainedSolution solve_constrained_two_scale(const CostTensor& H, double energy_target,
                                                double level2_entropy_target);

// Fluctuation-dissipation probe on a two-level measure: tilts H by lambda
// times the probe A (which must depend on exactly one level alpha), takes the
// central finite difference of <O> at lambda = 0, and compares against
// beta_alpha Cov(O, A) with beta_alpha = zeta_alpha. The single-covariance
// form is exact for alpha = 1; for alpha = 2 it generally is not (the slow
// level contributes through the two-bath decomposition below), so the
// returned gap is the honest measurement either way.
struct ResponseCheck {
    double lhs = 0.0;      // finite-difference derivative
    double rhs = 0.0;      // zeta_alpha * covariance
    double abs_err = 0.0;  // |lhs - rhs|
    int alpha = 0;         // level the probe was classified to
};
ResponseCheck linear_response_check(const CostTensor& H, const ScaleParams& zetas,
                                    const Observable& obs, const Observable& probe, double h);

// Exact decomposition of the same derivative into the two thermal baths:
//   d<O>/dlambda = zeta_2 E_1[ Cov_{<2}(O, A) ] + zeta_1 Cov_1( E_2 O, E_2 A ).
// Holds for any O, A on a two-level space.
struct TwoBathResponse {
    double lhs = 0.0;        // finite-difference derivative
    double fast_term = 0.0;  // zeta_2 E_1[Cov_{<2}]
    double slow_term = 0.0;  // zeta_1 Cov_1 of conditional averages
    double abs_err = 0.0;    // |lhs - fast_term - slow_term|
};
TwoBathResponse two_bath_response(const CostTensor& H, const ScaleParams& zetas,
                                  const Observable& obs, const Observable& probe, double h);

// Augment a two-level joint with a hidden Bernoulli(zeta) bit that decides
// whether the deep coordinate is resampled (bit = 1, true conditional) or
// frozen at the per-slice argmax (bit = 0, lowest flat index on ties). The
// entropy of the augmented measure splits exactly:
//   S[augmented] = S[Bernoulli(zeta)] + S^1 + zeta S^2 .
struct LatentEntropySplit {
    double lhs = 0.0;  // entropy of the augmented measure
    double rhs = 0.0;  // the three-term split
};
LatentEntropySplit latent_entropy_identity(const ProductSpace& space,
                                           const std::vector<double>& joint, double zeta);

}  // namespace multiscale
