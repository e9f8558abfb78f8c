#include "multiscale/entropy.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "multiscale/errors.hpp"

namespace multiscale {

double shannon_entropy(const std::vector<double>& p) {
    double sum = 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double v = p[i];
        if (!(v >= 0.0))
            throw ConfigError("shannon_entropy: negative or NaN entry at index " + std::to_string(i));
        sum += v;
        if (v > 0.0) s -= v * std::log(v);
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("shannon_entropy: mass " + std::to_string(sum) + " is not 1 within 1e-9");
    return s;
}

namespace {

// Shared core: consumes the level marginals and accumulates
// S^l = -sum_i p^(l)(i) log( p^(l)(i) / p^(l-1)(parent(i)) ),
// which equals the parent-weighted entropy of the level-l conditionals and
// silently skips zero-mass branches.
EntropyProfile profile_from_marginals(const ProductSpace& sp,
                                      const std::function<const std::vector<double>&(int)>& marg) {
    EntropyProfile prof;
    for (int l = 1; l <= sp.depth(); ++l) {
        const std::vector<double>& cur = marg(l);
        const std::vector<double>& prev = marg(l - 1);
        double s = 0.0;
        for (std::int64_t i = 0; i < sp.prefix_count(l); ++i) {
            const double pi = cur[static_cast<std::size_t>(i)];
            if (pi <= 0.0) continue;
            const double pj = prev[static_cast<std::size_t>(sp.parent_of(i, l))];
            s -= pi * std::log(pi / pj);
        }
        prof.per_level.push_back(s);
        prof.total += s;
    }
    return prof;
}

}  // namespace

EntropyProfile entropy_profile(const ProductSpace& space, const std::vector<double>& joint) {
    if (static_cast<std::int64_t>(joint.size()) != space.total_size())
        throw ConfigError("entropy_profile: joint length does not match the space");
    (void)shannon_entropy(joint);  // validates mass and non-negativity

    // marginals by contiguous block reduction, deepest first
    std::vector<std::vector<double>> margs(static_cast<std::size_t>(space.depth()) + 1);
    margs[static_cast<std::size_t>(space.depth())] = joint;
    for (int l = space.depth(); l >= 1; --l) {
        const auto& cur = margs[static_cast<std::size_t>(l)];
        auto& prev = margs[static_cast<std::size_t>(l - 1)];
        prev.assign(static_cast<std::size_t>(space.prefix_count(l - 1)), 0.0);
        const std::int64_t sl = space.level_size(l);
        for (std::int64_t i = 0; i < space.prefix_count(l); ++i)
            prev[static_cast<std::size_t>(i / sl)] += cur[static_cast<std::size_t>(i)];
    }
    return profile_from_marginals(
        space, [&](int l) -> const std::vector<double>& { return margs[static_cast<std::size_t>(l)]; });
}

EntropyProfile entropy_profile(const MultiscaleMeasure& m) {
    return profile_from_marginals(
        m.space(), [&](int l) -> const std::vector<double>& { return m.marginal(l); });
}

Multipliers::Multipliers(double mu_in, std::vector<double> gammas_in)
    : mu(mu_in), gammas(std::move(gammas_in)) {
    if (!std::isfinite(mu))
        throw ConfigError("Multipliers: mu must be finite");
    for (std::size_t i = 0; i < gammas.size(); ++i)
        if (!std::isfinite(gammas[i]) || !(1.0 + gammas[i] > 0.0))
            throw ConfigError("Multipliers: 1 + gamma must be positive at level " +
                              std::to_string(i + 2));
}

double Multipliers::gamma(int level) const {
    if (level < 1 || level > static_cast<int>(gammas.size()) + 1)
        throw ConfigError("Multipliers: level out of range");
    return level == 1 ? 0.0 : gammas[static_cast<std::size_t>(level - 2)];
}

double phi_functional(const std::vector<double>& joint, const CostTensor& H, const Multipliers& mult) {
    const ProductSpace& sp = H.space;
    if (static_cast<std::int64_t>(joint.size()) != sp.total_size())
        throw ConfigError("phi_functional: joint length does not match the space of H");
    if (static_cast<int>(mult.gammas.size()) != sp.depth() - 1)
        throw ConfigError("phi_functional: expected one gamma per level >= 2");
    const EntropyProfile prof = entropy_profile(sp, joint);
    double energy = 0.0;
    for (std::size_t i = 0; i < joint.size(); ++i) energy += joint[i] * H.values[i];
    double val = prof.total + mult.mu * energy;
    for (int l = 2; l <= sp.depth(); ++l)
        val += mult.gamma(l) * prof.per_level[static_cast<std::size_t>(l - 1)];
    return val;
}

}  // namespace multiscale
