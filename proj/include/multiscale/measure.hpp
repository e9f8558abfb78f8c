#pragma once

#include <cstdint>
#include <vector>

#include "multiscale/space.hpp"

namespace multiscale {

// Joints larger than this are not materialized; use joint_at() instead.
constexpr std::int64_t kJointGuard = 10'000'000;

// Optional per-level reference weights w_l over the level-l prefixes. The
// weighted single-node partition function is  sum_i w_l(i) e^{zeta_l P_l(i)}.
// Plain builds use w == 1; folding an empirical conditional q in as weights
// turns the build into the tilted-measure construction used by the
// large-deviation module. Weights are stored as logs; -infinity marks a
// zero-weight branch (allowed as long as each slice keeps some mass).
struct LevelWeights {
    // log_w[l-1] has length space.prefix_count(l), l = 1..r.
    std::vector<std::vector<double>> log_w;

    static LevelWeights ones(const ProductSpace& space);
    // w_l == 1/|X_l| per child: turns e^{zeta_l P_{l-1}} into an average
    // instead of a sum over the level-l children.
    static LevelWeights uniform(const ProductSpace& space);
    // One conditional table per level, laid out like MultiscaleMeasure
    // conditionals; zeros become -infinity log-weights.
    static LevelWeights from_conditional_tables(const ProductSpace& space,
                                                const std::vector<std::vector<double>>& tables);

    void validate(const ProductSpace& space) const;
};

// The solved multiscale Gibbs object for (X, zeta, H) and optional weights w:
//
//   P_r = H,   e^{zeta_l P_{l-1}(x_{<l})} = sum_{x_l} w_l e^{zeta_l P_l},
//   p^{<l} = w_l e^{zeta_l (P_l - P_{l-1})},       p = prod_l p^{<l}.
//
// All level-l tables (pressures, conditionals, marginals) are dense arrays
// over the level-l prefixes; the slice belonging to a level-(l-1) node j is
// the contiguous range [j*s_l, (j+1)*s_l).
//
// Pressure normalization: P_0 here includes the root sum, i.e.
// e^{zeta_1 P_0} = sum_{x_1} w_1 e^{zeta_1 P_1}.  That is the convention under
// which the recursion above holds uniformly for l = 1..r and under which
// dP_0/dlambda equals the tilted average.  The root partition scalar
// log_z_root() = log sum_{x_1} w_1 e^{zeta_1 P_1} = zeta_1 P_0 is exposed
// separately: it is the quantity entering the entropy functional and the
// cascade identities, and it is what "log Z" means in the reports.
class MultiscaleMeasure {
  public:
    const ProductSpace& space() const { return space_; }
    const ScaleParams& zetas() const { return zetas_; }
    double zeta(int level) const { return zetas_.zeta(level); }

    // P_l table over prefix_count(l), l = 0..r (P_0 has one entry).
    const std::vector<double>& pressure(int level) const;
    double root_pressure() const { return pressures_[0][0]; }
    double log_z_root() const { return log_z_root_; }

    // p^{<l} table over prefix_count(l), l = 1..r.
    const std::vector<double>& conditional(int level) const;
    // p^{(l)} table over prefix_count(l), l = 0..r.
    const std::vector<double>& marginal(int level) const;

    bool joint_materialized() const;
    const std::vector<double>& joint() const;
    // Chain-rule product along the coordinate path; works at any size.
    double joint_at(std::int64_t flat) const;

    const LevelWeights& weights() const { return weights_; }

    friend MultiscaleMeasure build_weighted_measure(const CostTensor& H, const ScaleParams& zetas,
                                                    const LevelWeights& weights, int threads);

  private:
    MultiscaleMeasure(ProductSpace space, ScaleParams zetas) : space_(std::move(space)), zetas_(std::move(zetas)) {}

    ProductSpace space_;
    ScaleParams zetas_;
    LevelWeights weights_;
    std::vector<std::vector<double>> pressures_;     // index l = 0..r
    std::vector<std::vector<double>> conditionals_;  // index l-1, l = 1..r
    std::vector<std::vector<double>> marginals_;     // index l = 0..r; deep ones may be empty
    double log_z_root_ = 0.0;
};

// Backward pressure recursion in the log domain (max-subtracted log-sum-exp).
// threads > 1 parallelizes the per-node work at each level; results are
// bitwise identical to threads == 1.
MultiscaleMeasure build_measure(const CostTensor& H, const ScaleParams& zetas, int threads = 1);
MultiscaleMeasure build_weighted_measure(const CostTensor& H, const ScaleParams& zetas,
                                         const LevelWeights& weights, int threads = 1);

// <f> = sum_x p(x) f(x). Uses the marginal at f.depends_up_to.
double average(const MultiscaleMeasure& m, const Observable& f);

// <f>_{<level} as a table over the level-(level-1) prefixes; requires
// f.depends_up_to <= level.
std::vector<double> conditional_average(const MultiscaleMeasure& m, const Observable& f, int level);

// P_0 of the measure built from H + lambda*f. Central differences of this in
// lambda recover averages of f.
double tilted_pressure(const CostTensor& H, const ScaleParams& zetas, const Observable& f,
                       double lambda);

// F_l = -P_l / beta at inverse temperature beta, with the per-level inverse
// temperatures beta_l = zeta_l * beta. Construction re-derives every
// conditional from the free-energy increments and records the worst deviation
// from the stored tables (identity_gap); it must be at rounding level.
struct FreeEnergies {
    double beta = 1.0;
    std::vector<double> beta_levels;      // beta_l, l = 1..r
    std::vector<std::vector<double>> levels;  // F_l table, l = 0..r
    double root_free_energy = 0.0;        // -log_z_root / beta
    double identity_gap = 0.0;            // max | p^{<l} - w_l e^{-beta_l (F_l - F_{l-1})} |
};
FreeEnergies free_energies(const MultiscaleMeasure& m, double beta);

}  // namespace multiscale
