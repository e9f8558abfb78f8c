#include "multiscale/variational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "multiscale/errors.hpp"

namespace multiscale {

ScaleParams multipliers_to_zetas(const ProductSpace& space, const Multipliers& mult) {
    if (static_cast<int>(mult.gammas.size()) != space.depth() - 1)
        throw ConfigError("multipliers_to_zetas: expected one gamma per level >= 2");
    if (!(mult.mu > 0.0))
        throw ConfigError("multipliers_to_zetas: mu must be positive (got " +
                          std::to_string(mult.mu) + "); zeta_l = mu/(1+gamma_l) needs mu > 0");
    std::vector<double> deepest_first;
    for (int l = space.depth(); l >= 1; --l)
        deepest_first.push_back(mult.mu / (1.0 + mult.gamma(l)));
    return ScaleParams(space, deepest_first);
}

MultiscaleMeasure solve_variational(const CostTensor& H, const Multipliers& mult) {
    MultiscaleMeasure m = build_measure(H, multipliers_to_zetas(H.space, mult));
    const double val = phi_functional(m.joint(), H, mult);
    if (std::abs(val - m.log_z_root()) > 1e-10)
        throw NumericError("solve_variational: phi at the maximizer misses log Z by " +
                           std::to_string(val - m.log_z_root()));
    return m;
}

TemperatureRatios temperature_ratios(const Multipliers& mult) {
    if (mult.gammas.size() != 1)
        throw ConfigError("temperature_ratios: defined for two-level multipliers only");
    const double g = mult.gammas[0];
    TemperatureRatios t;
    t.beta2 = mult.mu / (1.0 + g);
    t.ratio_beta1_beta2 = 1.0 + g;
    t.frozen_level2 = (1.0 + g) < 1e-6;
    return t;
}

namespace {

struct Residual {
    double energy = 0.0;
    double entropy = 0.0;
    double norm = 0.0;
};

Residual constrained_residual(const CostTensor& H, double energy_target, double entropy_target,
                              double z1, double z2) {
    MultiscaleMeasure m = build_measure(H, ScaleParams(H.space, {z2, z1}));
    const auto& joint = m.joint();
    double energy = 0.0;
    for (std::size_t i = 0; i < joint.size(); ++i) energy += joint[i] * H.values[i];
    const double s2 = entropy_profile(m).per_level[1];
    Residual r;
    r.energy = energy - energy_target;
    r.entropy = s2 - entropy_target;
    r.norm = std::max(std::abs(r.energy), std::abs(r.entropy));
    return r;
}

struct NewtonOutcome {
    bool converged = false;
    double u1 = 0.0;  // log zeta_1
    double u2 = 0.0;  // log zeta_2
    Residual f;
    int iterations = 0;
};

constexpr double kLogLo = -23.02585092994046;  // log 1e-10
constexpr double kLogHi = 13.815510557964274;  // log 1e6

NewtonOutcome newton_from_seed(const CostTensor& H, double energy_target, double entropy_target,
                               double u1, double u2) {
    NewtonOutcome out;
    auto eval = [&](double a, double b) {
        return constrained_residual(H, energy_target, entropy_target, std::exp(a), std::exp(b));
    };
    Residual f = eval(u1, u2);
    for (int iter = 0; iter < 200; ++iter) {
        if (f.norm < 1e-9) {
            out.converged = true;
            out.u1 = u1;
            out.u2 = u2;
            out.f = f;
            out.iterations = iter;
            return out;
        }
        const double h = 1e-6;
        const Residual f1 = eval(u1 + h, u2);
        const Residual f2 = eval(u1, u2 + h);
        const double j00 = (f1.energy - f.energy) / h, j01 = (f2.energy - f.energy) / h;
        const double j10 = (f1.entropy - f.entropy) / h, j11 = (f2.entropy - f.entropy) / h;
        const double det = j00 * j11 - j01 * j10;
        if (!std::isfinite(det) || std::abs(det) < 1e-18) return out;
        double d1 = -(j11 * f.energy - j01 * f.entropy) / det;
        double d2 = -(-j10 * f.energy + j00 * f.entropy) / det;
        const double step = std::max(std::abs(d1), std::abs(d2));
        if (step > 4.0) {  // log-space trust region
            d1 *= 4.0 / step;
            d2 *= 4.0 / step;
        }
        bool accepted = false;
        for (double t = 1.0; t >= 1.0 / 1024.0; t /= 2.0) {
            const double n1 = std::clamp(u1 + t * d1, kLogLo, kLogHi);
            const double n2 = std::clamp(u2 + t * d2, kLogLo, kLogHi);
            const Residual fn = eval(n1, n2);
            if (fn.norm < f.norm * (1.0 - 1e-4 * t) || fn.norm < 1e-12) {
                u1 = n1;
                u2 = n2;
                f = fn;
                accepted = true;
                break;
            }
        }
        if (!accepted) return out;
    }
    return out;
}

}  // namespace

ConstrainedSolution solve_constrained_two_scale(const CostTensor& H, double energy_target,
                                                double level2_entropy_target) {
    const ProductSpace& sp = H.space;
    if (sp.depth() != 2)
        throw ConfigError("solve_constrained_two_scale: space must have exactly two levels");
    const double s2_max = std::log(static_cast<double>(sp.level_size(2)));
    if (!(level2_entropy_target > 0.0) || !(level2_entropy_target < s2_max))
        throw InfeasibleError("solve_constrained_two_scale: entropy target " +
                              std::to_string(level2_entropy_target) + " outside (0, " +
                              std::to_string(s2_max) + ")");
    const double h_min = *std::min_element(H.values.begin(), H.values.end());
    const double h_max = *std::max_element(H.values.begin(), H.values.end());
    if (!(energy_target > h_min) || !(energy_target < h_max))
        throw InfeasibleError("solve_constrained_two_scale: energy target " +
                              std::to_string(energy_target) + " outside (" + std::to_string(h_min) +
                              ", " + std::to_string(h_max) + ")");

    // rank a log-spaced grid of (zeta_1, zeta_2) seeds by residual norm
    struct Seed {
        double u1, u2, norm;
    };
    std::vector<Seed> seeds;
    const double lo2 = std::log(1e-5), hi2 = std::log(100.0);
    const double lo1 = std::log(1e-3), hi1 = std::log(30.0);
    for (int a = 0; a < 20; ++a)
        for (int b = 0; b < 20; ++b) {
            const double u1 = lo1 + (hi1 - lo1) * a / 19.0;
            const double u2 = lo2 + (hi2 - lo2) * b / 19.0;
            const Residual r =
                constrained_residual(H, energy_target, level2_entropy_target, std::exp(u1), std::exp(u2));
            seeds.push_back({u1, u2, r.norm});
        }
    std::sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) { return a.norm < b.norm; });

    std::vector<ConstrainedRoot> roots;
    double best_norm = std::numeric_limits<double>::infinity();
    int tried = 0;
    for (const Seed& s : seeds) {
        if (tried >= 48 || roots.size() >= 8) break;
        ++tried;
        const NewtonOutcome out =
            newton_from_seed(H, energy_target, level2_entropy_target, s.u1, s.u2);
        if (!out.converged) continue;
        ConstrainedRoot root;
        root.mu = std::exp(out.u1);
        root.gamma = std::exp(out.u1 - out.u2) - 1.0;
        root.resid_energy = out.f.energy;
        root.resid_entropy = out.f.entropy;
        root.iterations = out.iterations;
        best_norm = std::min(best_norm, out.f.norm);
        bool duplicate = false;
        for (const ConstrainedRoot& have : roots)
            if (std::abs(have.mu - root.mu) <= 1e-6 * std::max(1.0, std::abs(have.mu)) &&
                std::abs(have.gamma - root.gamma) <= 1e-6 * std::max(1.0, std::abs(have.gamma)))
                duplicate = true;
        if (!duplicate) roots.push_back(root);
    }
    if (roots.empty())
        throw InfeasibleError(
            "solve_constrained_two_scale: no root reached the residual tolerance from any grid "
            "seed; targets (E = " +
            std::to_string(energy_target) + ", S2 = " + std::to_string(level2_entropy_target) +
            ") appear infeasible");

    std::sort(roots.begin(), roots.end(), [](const ConstrainedRoot& a, const ConstrainedRoot& b) {
        return std::max(std::abs(a.resid_energy), std::abs(a.resid_entropy)) <
               std::max(std::abs(b.resid_energy), std::abs(b.resid_entropy));
    });
    const ConstrainedRoot& top = roots.front();
    Multipliers mult(top.mu, {top.gamma});
    ConstrainedSolution sol(mult, build_measure(H, multipliers_to_zetas(sp, mult)));
    sol.resid_energy = top.resid_energy;
    sol.resid_entropy = top.resid_entropy;
    sol.iterations = top.iterations;
    sol.roots = roots;
    return sol;
}

namespace {

// classify a two-level probe: level 1 if constant inside each level-1 block,
// level 2 if invariant across blocks; anything else is rejected
int classify_probe(const ProductSpace& sp, const Observable& probe) {
    const std::int64_t s2 = sp.level_size(2);
    const std::int64_t n1 = sp.level_size(1);
    bool const_in_x2 = true;
    for (std::int64_t j = 0; j < n1 && const_in_x2; ++j)
        for (std::int64_t i = 1; i < s2; ++i)
            if (probe(j * s2 + i) != probe(j * s2)) {
                const_in_x2 = false;
                break;
            }
    if (const_in_x2) return 1;
    bool const_in_x1 = true;
    for (std::int64_t x2 = 0; x2 < s2 && const_in_x1; ++x2)
        for (std::int64_t j = 1; j < n1; ++j)
            if (probe(j * s2 + x2) != probe(x2)) {
                const_in_x1 = false;
                break;
            }
    if (const_in_x1) return 2;
    throw ConfigError("linear response: the probe depends on both levels");
}

Observable product_observable(const Observable& a, const Observable& b) {
    std::vector<double> vals(a.values().size());
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = a.values()[i] * b.values()[i];
    return Observable(a.space(), std::move(vals), a.space().depth());
}

double tilted_average(const CostTensor& H, const ScaleParams& zetas, const Observable& obs,
                      const Observable& probe, double lambda) {
    std::vector<double> shifted = H.values;
    for (std::size_t i = 0; i < shifted.size(); ++i)
        shifted[i] += lambda * probe(static_cast<std::int64_t>(i));
    return average(build_measure(CostTensor(H.space, std::move(shifted)), zetas), obs);
}

}  // namespace

ResponseCheck linear_response_check(const CostTensor& H, const ScaleParams& zetas,
                                    const Observable& obs, const Observable& probe, double h) {
    const ProductSpace& sp = H.space;
    if (sp.depth() != 2)
        throw ConfigError("linear_response_check: space must have exactly two levels");
    if (obs.space() != sp || probe.space() != sp)
        throw ConfigError("linear_response_check: observables live on a different space");
    if (!(h > 0.0)) throw ConfigError("linear_response_check: step must be positive");

    ResponseCheck rc;
    rc.alpha = classify_probe(sp, probe);
    rc.lhs = (tilted_average(H, zetas, obs, probe, h) - tilted_average(H, zetas, obs, probe, -h)) /
             (2.0 * h);
    MultiscaleMeasure m = build_measure(H, zetas);
    const double cov =
        average(m, product_observable(obs, probe)) - average(m, obs) * average(m, probe);
    rc.rhs = zetas.zeta(rc.alpha) * cov;
    rc.abs_err = std::abs(rc.lhs - rc.rhs);
    return rc;
}

TwoBathResponse two_bath_response(const CostTensor& H, const ScaleParams& zetas,
                                  const Observable& obs, const Observable& probe, double h) {
    const ProductSpace& sp = H.space;
    if (sp.depth() != 2)
        throw ConfigError("two_bath_response: space must have exactly two levels");
    if (obs.space() != sp || probe.space() != sp)
        throw ConfigError("two_bath_response: observables live on a different space");
    if (!(h > 0.0)) throw ConfigError("two_bath_response: step must be positive");

    TwoBathResponse tb;
    tb.lhs = (tilted_average(H, zetas, obs, probe, h) - tilted_average(H, zetas, obs, probe, -h)) /
             (2.0 * h);
    MultiscaleMeasure m = build_measure(H, zetas);
    const auto eo = conditional_average(m, obs, 2);
    const auto ea = conditional_average(m, probe, 2);
    const auto eoa = conditional_average(m, product_observable(obs, probe), 2);
    const auto& p1 = m.marginal(1);

    double fast = 0.0, mo = 0.0, ma = 0.0, moment = 0.0;
    for (std::size_t j = 0; j < p1.size(); ++j) {
        fast += p1[j] * (eoa[j] - eo[j] * ea[j]);
        mo += p1[j] * eo[j];
        ma += p1[j] * ea[j];
        moment += p1[j] * eo[j] * ea[j];
    }
    tb.fast_term = zetas.zeta(2) * fast;
    tb.slow_term = zetas.zeta(1) * (moment - mo * ma);
    tb.abs_err = std::abs(tb.lhs - tb.fast_term - tb.slow_term);
    return tb;
}

LatentEntropySplit latent_entropy_identity(const ProductSpace& space,
                                           const std::vector<double>& joint, double zeta) {
    if (space.depth() != 2)
        throw ConfigError("latent_entropy_identity: space must have exactly two levels");
    if (!(zeta > 0.0) || !(zeta < 1.0))
        throw ConfigError("latent_entropy_identity: zeta must lie strictly inside (0, 1)");
    const EntropyProfile prof = entropy_profile(space, joint);  // validates the joint

    const std::int64_t s2 = space.level_size(2);
    const std::int64_t n1 = space.level_size(1);
    std::vector<double> augmented(2 * joint.size(), 0.0);
    for (std::int64_t j = 0; j < n1; ++j) {
        double mass = 0.0;
        std::int64_t arg = j * s2;  // lowest flat index wins ties
        for (std::int64_t i = j * s2; i < (j + 1) * s2; ++i) {
            mass += joint[static_cast<std::size_t>(i)];
            if (joint[static_cast<std::size_t>(i)] > joint[static_cast<std::size_t>(arg)]) arg = i;
        }
        if (mass <= 0.0) continue;
        for (std::int64_t i = j * s2; i < (j + 1) * s2; ++i)
            augmented[static_cast<std::size_t>(2 * i + 1)] = zeta * joint[static_cast<std::size_t>(i)];
        augmented[static_cast<std::size_t>(2 * arg)] = (1.0 - zeta) * mass;
    }

    LatentEntropySplit split;
    split.lhs = shannon_entropy(augmented);
    const double bern = -(zeta * std::log(zeta) + (1.0 - zeta) * std::log(1.0 - zeta));
    split.rhs = bern + prof.per_level[0] + zeta * prof.per_level[1];
    return split;
}

}  // namespace multiscale
