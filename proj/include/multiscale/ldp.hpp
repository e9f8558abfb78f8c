#pragma once

// Reinforced multinomial scattering on a multiscale product space, together
// with the exact large-deviation bookkeeping used to check that the observed
// decay of event probabilities matches the multi-level relative-entropy rate.
//
// The sampling side is a cascade: n balls are scattered over the level-1
// boxes, every ball is duplicated (or thinned) according to a reinforcement
// parameter, the survivors are scattered over level-2 boxes within their
// parent, and so on down the tree.  The analysis side never samples: event
// probabilities are composed from exact multinomial and binomial pmfs.

#include <cstdint>
#include <utility>
#include <vector>

#include "multiscale/measure.hpp"
#include "multiscale/rng.hpp"
#include "multiscale/space.hpp"

namespace multiscale {

// Occupancy counts over the deepest level of a product space.
struct Histogram {
    Histogram(ProductSpace space, std::vector<std::int64_t> counts);

    // counts_i / n, all zeros when n == 0.
    std::vector<double> empirical() const;

    ProductSpace space;
    std::vector<std::int64_t> counts;  // one per deepest-level box
    std::int64_t n = 0;                // total number of balls
};

// A normalized reference distribution with its per-level slice conditionals
// precomputed.  conditional(l) is indexed by level-l prefix; slices under a
// zero-mass parent are identically zero.
struct BaseMeasure {
    BaseMeasure(ProductSpace space, std::vector<double> joint);

    static BaseMeasure uniform(const ProductSpace& space);

    const std::vector<double>& conditional(int level) const;  // 1..depth
    const std::vector<double>& marginal(int level) const;     // 0..depth

    ProductSpace space;
    std::vector<double> joint;

  private:
    std::vector<std::vector<double>> conditionals_;
    std::vector<std::vector<double>> marginals_;
};

// Per-level reinforcement strengths.  Constructed deepest-level-first to
// match ScaleParams; gamma(l) is the strength applied to the balls entering
// level l.  Each entry must exceed -1 (gamma = -1 would annihilate).
struct ReinforcementParams {
    ReinforcementParams(const ProductSpace& space,
                        std::vector<double> gammas_deepest_first);

    double gamma(int level) const;  // 1..depth
    int depth() const { return static_cast<int>(gammas.size()); }

    std::vector<double> gammas;  // root-first
};

// Everything one cascade run produced.  level_counts[l-1] holds the level-l
// occupancies; scattered_counts[l-1] holds the post-reinforcement ball count
// of every level-(l-1) parent, so each level_counts slice sums to its
// parent's scattered count.  The pre-reinforcement count of a parent is the
// previous level's occupancy (or n at the root).
struct ReinforcedOutcome {
    explicit ReinforcedOutcome(ProductSpace space_in) : space(std::move(space_in)) {}

    ProductSpace space;
    std::uint64_t seed = 0;
    std::int64_t n = 0;
    std::vector<std::vector<std::int64_t>> level_counts;
    std::vector<std::vector<std::int64_t>> scattered_counts;
    std::vector<std::int64_t> level_totals;  // realized totals per level

    Histogram deepest() const;
};

// One multinomial scatter of n balls over the deepest-level boxes of q.
Histogram multinomial_sample(std::int64_t n, const BaseMeasure& q,
                             std::uint64_t seed);

// Relative entropy sum_i p_i log(p_i / q_i); +infinity when p charges a
// q-null box.  Both arguments must be normalized distributions.
double kl_divergence(const std::vector<double>& p,
                     const std::vector<double>& q);

// Exact log-probability of drawing h from Multinomial(h.n, q.joint),
// computed through log-gamma; -infinity when h charges a q-null box.
double exact_log_multinomial_pmf(const Histogram& h, const BaseMeasure& q);

// Independently duplicate or thin `count` balls with strength gamma:
//   gamma in [0, 1]:  each ball becomes 1 + Bernoulli(gamma) balls;
//   gamma in (-1, 0): each ball survives with probability 1 + gamma;
//   gamma > 1:        each ball becomes 1 + floor(gamma) + Bernoulli(frac).
// Integer gamma therefore rescales deterministically (gamma = 1 doubles).
std::int64_t reinforce_balls(std::int64_t count, double gamma,
                             RngStream& stream);
std::int64_t reinforce_balls(std::int64_t count, double gamma,
                             std::uint64_t seed);

// Full cascade: scatter, reinforce, scatter, ... down all levels of q.
// Streams are derived per (level, node), so the draws at a level do not
// depend on the reinforcement strengths of deeper levels.
ReinforcedOutcome run_reinforced_multiscale(std::int64_t n,
                                            const ReinforcementParams& gammas,
                                            const BaseMeasure& q,
                                            std::uint64_t seed);

// Two-level convenience wrapper: no reinforcement before level 1, strength
// gamma before level 2.  Identical outcome to run_reinforced_multiscale with
// the same seed and gammas (gamma, 0).
ReinforcedOutcome run_reinforced_two_scale(std::int64_t n, double gamma,
                                           const BaseMeasure& q,
                                           std::uint64_t seed);

// A rate value that may be +infinity (p charging a q-null branch).
struct RateValue {
    double value = 0.0;
    bool infinite = false;
};

// Multi-level rate function
//   I(p) = sum_l (1 + gamma_l) * sum_parents p^(l-1)(j) KL(p(.|j) || q(.|j))
// evaluated from the deepest-level distribution p.  Zero-mass p-parents
// contribute nothing.
RateValue rate_function(const std::vector<double>& p, const BaseMeasure& q,
                        const ReinforcementParams& gammas);

// One row of the finite-n decay ladder for a fixed target distribution.
struct RateLadderRow {
    std::int64_t n = 0;
    double neg_log_prob_over_n = 0.0;  // -(1/n) log P(exact hit)
    double rate = 0.0;                 // large-n limit it should approach
    double gap = 0.0;                  // neg_log_prob_over_n - rate
};

// Exact probability that the cascade hits the target occupancies n * p at
// every level simultaneously, composed from multinomial pmfs at the scatter
// stages and binomial pmfs (evaluated at their mean) at the reinforcement
// stages.  Every implied target count must be an integer: the function
// refuses to round and throws ConfigError for incompatible n.  For nested
// reinforcement the limiting rate carries the accumulated duplication of all
// shallower levels, so the `rate` column uses those effective strengths.
std::vector<RateLadderRow> empirical_rate_estimate(
    const std::vector<double>& p, const BaseMeasure& q,
    const ReinforcementParams& gammas, const std::vector<std::int64_t>& ns);

// Minimizer of I(p) - mu * <p, H> over distributions p, obtained in closed
// form as a weighted multiscale measure with level strengths
// zeta_l = mu / (1 + gamma_l) and slice weights q(.|parent).  mu = 0 returns
// q itself.
std::vector<double> tilted_rate_minimizer(const CostTensor& H,
                                          const BaseMeasure& q,
                                          const ReinforcementParams& gammas,
                                          double mu);

}  // namespace multiscale
