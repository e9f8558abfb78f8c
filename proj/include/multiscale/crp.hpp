#pragma once

// Chinese-restaurant sampling of Poisson-Dirichlet box frequencies and the
// Monte Carlo experiments that check the grand-canonical representation of
// the two-level pressure: with weights (nu_alpha) ~ PD(zeta) and independent
// atoms y_alpha, E log sum_alpha nu_alpha Z(y_alpha) equals the root pressure
// of the uniformly weighted two-level measure with scales (zeta_2, zeta_1) =
// (1, zeta).
//
// Coupling note: replicate t derives its placement stream and its atom stream
// from (master seed, t) only, and atoms are drawn one per box in creation
// order. Runs with a larger truncation therefore extend the very same
// trajectories ball by ball, so truncation effects can be read off a doubling
// comparison without Monte Carlo noise swamping them.

#include <cstdint>
#include <vector>

#include "multiscale/measure.hpp"
#include "multiscale/rng.hpp"
#include "multiscale/space.hpp"

namespace multiscale {

// One restaurant-process trajectory: occupancies in creation order.
struct CrpState {
    double zeta = 0.0;
    std::int64_t n = 0;
    std::vector<std::int64_t> occupancies;
    std::int64_t k = 0;  // number of occupied boxes
};

// Ball 1 opens box 1; with m balls placed and k boxes open, ball m+1 opens a
// new box with probability zeta*k/m and joins box alpha with probability
// (n_alpha - zeta)/m. Placement is sampled in O(1) amortized per ball: pick a
// uniform ball, accept its box with probability (n_alpha - zeta)/n_alpha,
// retry within the existing-box branch otherwise.
CrpState crp_run(std::int64_t n, double zeta, std::uint64_t seed);

// Box frequencies in creation order (rho) and sorted descending (nu).
struct RandomWeights {
    std::vector<double> rho;
    std::vector<double> nu;
    std::int64_t n = 0;
};

RandomWeights pd_weights(const CrpState& state);

// Atoms y_alpha: i.i.d. uniform draws of the level-1 coordinate, one per
// occupied box in creation order, with their partition values
// Z_alpha = (1/|X_2|) sum_{x_2} e^{H(x_2, y_alpha)}.
struct AtomEnvironment {
    std::vector<std::int64_t> y;
    std::vector<double> z;
};

AtomEnvironment draw_atoms(const CostTensor& H, std::int64_t k, RngStream& stream);

// The exact two-level measure the cascade experiments estimate against:
// scales (zeta_2, zeta_1) = (1, zeta) with uniform a-priori weights, so the
// root pressure is (1/zeta) log E_1 e^{zeta log Z}.
MultiscaleMeasure uniform_reference_measure(const CostTensor& H, double zeta);

struct GrandPotentialEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int replicates = 0;
    std::int64_t truncation_n = 0;
    double target = 0.0;  // exact root pressure of the reference measure
};

// Monte Carlo estimate of E log sum_alpha nu_alpha Z_alpha from `replicates`
// independent restaurant runs of size crp_n.
GrandPotentialEstimate grand_potential_mc(const CostTensor& H, double zeta, std::int64_t crp_n,
                                          int replicates, std::uint64_t seed);

struct RandomAverageEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int replicates = 0;
    std::int64_t truncation_n = 0;
    double target = 0.0;  // exact <f> under the reference measure
};

// Estimates <f> by averaging, per replicate, the random two-level measure
//   mu(x_2, alpha) = [nu_alpha Z_alpha / sum_beta nu_beta Z_beta]
//                    * [e^{H(x_2, y_alpha)} / (|X_2| Z_alpha)],
// with f evaluated at (x_2, y_alpha).
RandomAverageEstimate random_two_scale_average(const CostTensor& H, const Observable& f,
                                               double zeta, std::int64_t crp_n, int replicates,
                                               std::uint64_t seed);

// Two independently coded routes to the same random measure, compared entry
// by entry after sorting boxes by weight (ties keep creation order):
//   maximizer:  p(x_2, alpha) proportional to rho_alpha e^{H(x_2, y_alpha)},
//               the closed-form solution of the Gibbs principle with random
//               chemical potentials log rho_alpha;
//   reference:  the two-factor random-measure formula above.
// Both tables are flat over (alpha, x_2) with alpha the slow index; the two
// formulas agree identically, so max_entry_gap is a pure coding check.
struct DualPathComparison {
    std::int64_t k = 0;
    std::vector<std::int64_t> atoms;  // y_alpha, weight-sorted order
    std::vector<double> nu;           // sorted weights
    std::vector<double> maximizer;
    std::vector<double> reference;
    double max_entry_gap = 0.0;
};

DualPathComparison crp_multinomial_experiment(const CostTensor& H, double zeta, std::int64_t n,
                                              std::uint64_t seed);

}  // namespace multiscale
