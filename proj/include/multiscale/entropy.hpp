#pragma once

#include <vector>

#include "multiscale/measure.hpp"
#include "multiscale/space.hpp"

namespace multiscale {

// -sum p log p in nats, 0 log 0 = 0. Requires entries >= 0 and total mass
// within 1e-9 of one.
double shannon_entropy(const std::vector<double>& p);

// Per-level entropy decomposition: per_level[l-1] is the average entropy of
// the level-l conditional under the level-(l-1) marginal, and the chain rule
// makes the per-level terms sum to the entropy of the joint. Slices whose
// parent carries zero mass contribute zero.
struct EntropyProfile {
    double total = 0.0;
    std::vector<double> per_level;
};

EntropyProfile entropy_profile(const ProductSpace& space, const std::vector<double>& joint);
EntropyProfile entropy_profile(const MultiscaleMeasure& m);

// Lagrange multipliers of the constrained maximum-entropy functional: one
// energy multiplier mu and one entropy multiplier gamma_l per level l >= 2
// (gamma_1 = 0 by convention). Stored root-first: gammas[0] = gamma_2.
struct Multipliers {
    Multipliers(double mu_in, std::vector<double> gammas_in);

    double gamma(int level) const;  // gamma_1 == 0

    double mu = 0.0;
    std::vector<double> gammas;  // levels 2..r
};

// phi(p) = S[p] + mu <H>_p + sum_{l>=2} gamma_l S^l[p], the objective whose
// maximizer over the simplex is the multiscale measure.
double phi_functional(const std::vector<double>& joint, const CostTensor& H, const Multipliers& mult);

}  // namespace multiscale
