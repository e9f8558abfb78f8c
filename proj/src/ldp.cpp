#include "multiscale/ldp.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "multiscale/errors.hpp"

namespace multiscale {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_distribution(const std::vector<double>& p, std::int64_t want_len, const char* what) {
    if (static_cast<std::int64_t>(p.size()) != want_len)
        throw ConfigError(std::string(what) + ": wrong length");
    double sum = 0.0;
    for (double v : p) {
        if (!std::isfinite(v) || v < 0.0)
            throw ConfigError(std::string(what) + ": entries must be finite and nonnegative");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError(std::string(what) + ": mass must sum to one");
}

// log of a binomial coefficient through log-gamma.
double log_choose(std::int64_t n, std::int64_t k) {
    return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0);
}

// Nearest integer if x is one up to rounding noise; throws otherwise. The
// ladder refuses to silently move a target that the caller's n cannot realize.
std::int64_t require_integer(double x, const char* what) {
    const double r = std::round(x);
    if (std::abs(x - r) > 1e-9 * std::max(1.0, std::abs(x)))
        throw ConfigError(std::string(what) + ": implied target count " + std::to_string(x) +
                          " is not an integer; choose a compatible n");
    return static_cast<std::int64_t>(r);
}

// Marginals of a deepest-level distribution at every level, index 0..r.
std::vector<std::vector<double>> marginal_tables(const ProductSpace& space,
                                                 const std::vector<double>& deepest) {
    const int r = space.depth();
    std::vector<std::vector<double>> marg(static_cast<std::size_t>(r) + 1);
    marg[static_cast<std::size_t>(r)] = deepest;
    for (int l = r; l >= 1; --l) {
        const std::int64_t parents = space.prefix_count(l - 1);
        const std::int64_t s = space.level_size(l);
        std::vector<double> up(static_cast<std::size_t>(parents), 0.0);
        const auto& cur = marg[static_cast<std::size_t>(l)];
        for (std::int64_t j = 0; j < parents; ++j) {
            double acc = 0.0;
            for (std::int64_t c = 0; c < s; ++c) acc += cur[static_cast<std::size_t>(j * s + c)];
            up[static_cast<std::size_t>(j)] = acc;
        }
        marg[static_cast<std::size_t>(l - 1)] = std::move(up);
    }
    return marg;
}

}  // namespace

Histogram::Histogram(ProductSpace space_in, std::vector<std::int64_t> counts_in)
    : space(std::move(space_in)), counts(std::move(counts_in)) {
    if (static_cast<std::int64_t>(counts.size()) != space.total_size())
        throw ConfigError("Histogram: counts length must equal the space size");
    for (std::int64_t c : counts) {
        if (c < 0) throw ConfigError("Histogram: negative count");
        n += c;
    }
}

std::vector<double> Histogram::empirical() const {
    std::vector<double> freq(counts.size(), 0.0);
    if (n == 0) return freq;
    for (std::size_t i = 0; i < counts.size(); ++i)
        freq[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
    return freq;
}

BaseMeasure::BaseMeasure(ProductSpace space_in, std::vector<double> joint_in)
    : space(std::move(space_in)), joint(std::move(joint_in)) {
    if (static_cast<std::int64_t>(joint.size()) != space.total_size())
        throw ConfigError("BaseMeasure: joint length must equal the space size");
    double sum = 0.0;
    for (double v : joint) {
        if (!std::isfinite(v) || v < 0.0)
            throw ConfigError("BaseMeasure: entries must be finite and nonnegative");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw ConfigError("BaseMeasure: joint must sum to one within 1e-12");

    marginals_ = marginal_tables(space, joint);
    const int r = space.depth();
    conditionals_.resize(static_cast<std::size_t>(r));
    for (int l = 1; l <= r; ++l) {
        const std::int64_t s = space.level_size(l);
        const auto& low = marginals_[static_cast<std::size_t>(l)];
        const auto& up = marginals_[static_cast<std::size_t>(l - 1)];
        std::vector<double> cond(low.size(), 0.0);
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(low.size()); ++i) {
            const double pm = up[static_cast<std::size_t>(i / s)];
            if (pm > 0.0) cond[static_cast<std::size_t>(i)] = low[static_cast<std::size_t>(i)] / pm;
        }
        conditionals_[static_cast<std::size_t>(l - 1)] = std::move(cond);
    }
}

BaseMeasure BaseMeasure::uniform(const ProductSpace& space) {
    const double v = 1.0 / static_cast<double>(space.total_size());
    return BaseMeasure(space, std::vector<double>(static_cast<std::size_t>(space.total_size()), v));
}

const std::vector<double>& BaseMeasure::conditional(int level) const {
    if (level < 1 || level > space.depth())
        throw ConfigError("BaseMeasure::conditional: level out of range");
    return conditionals_[static_cast<std::size_t>(level - 1)];
}

const std::vector<double>& BaseMeasure::marginal(int level) const {
    if (level < 0 || level > space.depth())
        throw ConfigError("BaseMeasure::marginal: level out of range");
    return marginals_[static_cast<std::size_t>(level)];
}

ReinforcementParams::ReinforcementParams(const ProductSpace& space,
                                         std::vector<double> gammas_deepest_first) {
    if (static_cast<int>(gammas_deepest_first.size()) != space.depth())
        throw ConfigError("ReinforcementParams: need one strength per level");
    gammas.assign(gammas_deepest_first.rbegin(), gammas_deepest_first.rend());
    for (double g : gammas) {
        if (!std::isfinite(g) || g <= -1.0)
            throw ConfigError("ReinforcementParams: strengths must be finite and > -1");
    }
}

double ReinforcementParams::gamma(int level) const {
    if (level < 1 || level > depth())
        throw ConfigError("ReinforcementParams::gamma: level out of range");
    return gammas[static_cast<std::size_t>(level - 1)];
}

Histogram ReinforcedOutcome::deepest() const { return Histogram(space, level_counts.back()); }

Histogram multinomial_sample(std::int64_t n, const BaseMeasure& q, std::uint64_t seed) {
    if (n < 0) throw ConfigError("multinomial_sample: n must be nonnegative");
    RngStream g = RngStream::derive(seed, {stream_tag::kScatter});
    return Histogram(q.space, g.multinomial(n, q.joint));
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    check_distribution(p, static_cast<std::int64_t>(p.size()), "kl_divergence: p");
    check_distribution(q, static_cast<std::int64_t>(p.size()), "kl_divergence: q");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0) return kInf;
        acc += p[i] * std::log(p[i] / q[i]);
    }
    return acc;
}

double exact_log_multinomial_pmf(const Histogram& h, const BaseMeasure& q) {
    if (h.space != q.space) throw ConfigError("exact_log_multinomial_pmf: space mismatch");
    double lp = std::lgamma(static_cast<double>(h.n) + 1.0);
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const std::int64_t c = h.counts[i];
        lp -= std::lgamma(static_cast<double>(c) + 1.0);
        if (c > 0) {
            if (q.joint[i] <= 0.0) return -kInf;
            lp += static_cast<double>(c) * std::log(q.joint[i]);
        }
    }
    return lp;
}

std::int64_t reinforce_balls(std::int64_t count, double gamma, RngStream& stream) {
    if (count < 0) throw ConfigError("reinforce_balls: count must be nonnegative");
    if (!std::isfinite(gamma) || gamma <= -1.0)
        throw ConfigError("reinforce_balls: gamma must be finite and > -1");
    if (gamma < 0.0) return stream.binomial(count, 1.0 + gamma);
    const double base = std::floor(gamma);
    const double frac = gamma - base;
    const std::int64_t per_ball = 1 + static_cast<std::int64_t>(base);
    if (frac == 0.0) return count * per_ball;  // integer strength: deterministic
    return count * per_ball + stream.binomial(count, frac);
}

std::int64_t reinforce_balls(std::int64_t count, double gamma, std::uint64_t seed) {
    RngStream g = RngStream::derive(seed, {stream_tag::kReinforce});
    return reinforce_balls(count, gamma, g);
}

ReinforcedOutcome run_reinforced_multiscale(std::int64_t n, const ReinforcementParams& gammas,
                                            const BaseMeasure& q, std::uint64_t seed) {
    if (n < 0) throw ConfigError("run_reinforced_multiscale: n must be nonnegative");
    if (gammas.depth() != q.space.depth())
        throw ConfigError("run_reinforced_multiscale: strengths do not match the space depth");

    const ProductSpace& space = q.space;
    const int r = space.depth();
    ReinforcedOutcome out(space);
    out.seed = seed;
    out.n = n;

    std::vector<std::int64_t> prev{n};  // level-0 table: everything at the root
    for (int l = 1; l <= r; ++l) {
        const std::int64_t parents = space.prefix_count(l - 1);
        const std::int64_t s = space.level_size(l);
        const auto& cond = q.conditional(l);
        std::vector<std::int64_t> scattered(static_cast<std::size_t>(parents), 0);
        std::vector<std::int64_t> level(static_cast<std::size_t>(space.prefix_count(l)), 0);
        std::int64_t total = 0;
        for (std::int64_t j = 0; j < parents; ++j) {
            const std::int64_t c = prev[static_cast<std::size_t>(j)];
            std::int64_t c2 = 0;
            if (c > 0) {
                RngStream dup = RngStream::derive(
                    seed, {stream_tag::kReinforce, static_cast<std::uint64_t>(l),
                           static_cast<std::uint64_t>(j)});
                c2 = reinforce_balls(c, gammas.gamma(l), dup);
            }
            scattered[static_cast<std::size_t>(j)] = c2;
            total += c2;
            if (c2 > 0) {
                std::vector<double> slice(cond.begin() + j * s, cond.begin() + (j + 1) * s);
                RngStream scat = RngStream::derive(
                    seed, {stream_tag::kScatter, static_cast<std::uint64_t>(l),
                           static_cast<std::uint64_t>(j)});
                const std::vector<std::int64_t> drawn = scat.multinomial(c2, slice);
                for (std::int64_t cidx = 0; cidx < s; ++cidx)
                    level[static_cast<std::size_t>(j * s + cidx)] = drawn[static_cast<std::size_t>(cidx)];
            }
        }
        out.scattered_counts.push_back(std::move(scattered));
        out.level_totals.push_back(total);
        prev = level;
        out.level_counts.push_back(std::move(level));
    }
    return out;
}

ReinforcedOutcome run_reinforced_two_scale(std::int64_t n, double gamma, const BaseMeasure& q,
                                           std::uint64_t seed) {
    if (q.space.depth() != 2)
        throw ConfigError("run_reinforced_two_scale: space must have exactly two levels");
    return run_reinforced_multiscale(n, ReinforcementParams(q.space, {gamma, 0.0}), q, seed);
}

RateValue rate_function(const std::vector<double>& p, const BaseMeasure& q,
                        const ReinforcementParams& gammas) {
    const ProductSpace& space = q.space;
    check_distribution(p, space.total_size(), "rate_function: p");
    if (gammas.depth() != space.depth())
        throw ConfigError("rate_function: strengths do not match the space depth");

    const auto marg = marginal_tables(space, p);
    double acc = 0.0;
    for (int l = 1; l <= space.depth(); ++l) {
        const std::int64_t s = space.level_size(l);
        const auto& cur = marg[static_cast<std::size_t>(l)];
        const auto& up = marg[static_cast<std::size_t>(l - 1)];
        const auto& qcond = q.conditional(l);
        double level_term = 0.0;
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(cur.size()); ++i) {
            const double pi = cur[static_cast<std::size_t>(i)];
            if (pi <= 0.0) continue;
            const double pm = up[static_cast<std::size_t>(i / s)];
            const double qi = qcond[static_cast<std::size_t>(i)];
            if (qi <= 0.0) return {kInf, true};
            level_term += pi * std::log(pi / (pm * qi));
        }
        acc += (1.0 + gammas.gamma(l)) * level_term;
    }
    return {acc, false};
}

std::vector<RateLadderRow> empirical_rate_estimate(const std::vector<double>& p,
                                                   const BaseMeasure& q,
                                                   const ReinforcementParams& gammas,
                                                   const std::vector<std::int64_t>& ns) {
    const ProductSpace& space = q.space;
    check_distribution(p, space.total_size(), "empirical_rate_estimate: p");
    if (gammas.depth() != space.depth())
        throw ConfigError("empirical_rate_estimate: strengths do not match the space depth");
    if (ns.empty()) throw ConfigError("empirical_rate_estimate: need at least one n");

    const int r = space.depth();
    const auto marg = marginal_tables(space, p);

    // The realized ball count entering level l carries the accumulated
    // duplication of every level above it, so the decay per original ball is
    // the rate function at those accumulated strengths.
    std::vector<double> cum(static_cast<std::size_t>(r) + 1, 1.0);
    std::vector<double> eff_deepest_first(static_cast<std::size_t>(r));
    for (int l = 1; l <= r; ++l) {
        cum[static_cast<std::size_t>(l)] = cum[static_cast<std::size_t>(l - 1)] * (1.0 + gammas.gamma(l));
        eff_deepest_first[static_cast<std::size_t>(r - l)] = cum[static_cast<std::size_t>(l)] - 1.0;
    }
    const RateValue rate = rate_function(p, q, ReinforcementParams(space, eff_deepest_first));
    if (rate.infinite)
        throw ConfigError("empirical_rate_estimate: target charges a branch with zero reference mass");

    std::vector<RateLadderRow> rows;
    rows.reserve(ns.size());
    for (std::int64_t n : ns) {
        if (n <= 0) throw ConfigError("empirical_rate_estimate: n must be positive");

        // Integer occupancy targets at every level, refusing to round.
        std::vector<std::vector<std::int64_t>> targets(static_cast<std::size_t>(r) + 1);
        targets[0] = {n};
        for (int l = 1; l <= r; ++l) {
            const auto& m = marg[static_cast<std::size_t>(l)];
            std::vector<std::int64_t> t(m.size(), 0);
            for (std::size_t i = 0; i < m.size(); ++i)
                t[i] = require_integer(static_cast<double>(n) * cum[static_cast<std::size_t>(l)] * m[i],
                                       "empirical_rate_estimate");
            targets[static_cast<std::size_t>(l)] = std::move(t);
        }

        double lp = 0.0;
        for (int l = 1; l <= r; ++l) {
            const std::int64_t s = space.level_size(l);
            const double g = gammas.gamma(l);
            const auto& tl = targets[static_cast<std::size_t>(l)];
            const auto& tu = targets[static_cast<std::size_t>(l - 1)];
            const auto& qcond = q.conditional(l);
            for (std::int64_t j = 0; j < space.prefix_count(l - 1); ++j) {
                const std::int64_t c = tu[static_cast<std::size_t>(j)];
                std::int64_t post = 0;
                for (std::int64_t cidx = 0; cidx < s; ++cidx)
                    post += tl[static_cast<std::size_t>(j * s + cidx)];

                // Reinforcement factor: binomial pmf at the duplication (or
                // survival) count the targets imply, which is its mean.
                if (g < 0.0) {
                    if (post > c)
                        throw ConfigError("empirical_rate_estimate: thinning target exceeds parent count");
                    lp += log_choose(c, post) + static_cast<double>(post) * std::log(1.0 + g) +
                          static_cast<double>(c - post) * std::log(-g);
                } else {
                    const double base = std::floor(g);
                    const double frac = g - base;
                    const std::int64_t per_ball = 1 + static_cast<std::int64_t>(base);
                    const std::int64_t dup = post - c * per_ball;
                    if (frac == 0.0) {
                        if (dup != 0)
                            throw ConfigError(
                                "empirical_rate_estimate: targets inconsistent with integer strength");
                    } else {
                        if (dup < 0 || dup > c)
                            throw ConfigError(
                                "empirical_rate_estimate: duplication target outside [0, parent count]");
                        lp += log_choose(c, dup) + static_cast<double>(dup) * std::log(frac) +
                              static_cast<double>(c - dup) * std::log(1.0 - frac);
                    }
                }

                // Scatter factor: exact multinomial pmf at the slice targets.
                if (post > 0) {
                    lp += std::lgamma(static_cast<double>(post) + 1.0);
                    for (std::int64_t cidx = 0; cidx < s; ++cidx) {
                        const std::int64_t y = tl[static_cast<std::size_t>(j * s + cidx)];
                        lp -= std::lgamma(static_cast<double>(y) + 1.0);
                        if (y > 0) lp += static_cast<double>(y) * std::log(qcond[static_cast<std::size_t>(j * s + cidx)]);
                    }
                }
            }
        }

        RateLadderRow row;
        row.n = n;
        row.neg_log_prob_over_n = -lp / static_cast<double>(n);
        row.rate = rate.value;
        row.gap = row.neg_log_prob_over_n - rate.value;
        rows.push_back(row);
    }
    return rows;
}

std::vector<double> tilted_rate_minimizer(const CostTensor& H, const BaseMeasure& q,
                                          const ReinforcementParams& gammas, double mu) {
    if (H.space != q.space) throw ConfigError("tilted_rate_minimizer: space mismatch");
    if (gammas.depth() != q.space.depth())
        throw ConfigError("tilted_rate_minimizer: strengths do not match the space depth");
    if (!std::isfinite(mu) || mu < 0.0)
        throw ConfigError("tilted_rate_minimizer: mu must be finite and nonnegative");
    if (mu == 0.0) return q.joint;  // zero tilt: the rate alone is minimized by q

    const int r = q.space.depth();
    std::vector<double> zetas_deepest(static_cast<std::size_t>(r));
    for (int l = 1; l <= r; ++l)
        zetas_deepest[static_cast<std::size_t>(r - l)] = mu / (1.0 + gammas.gamma(l));
    std::vector<std::vector<double>> tables(static_cast<std::size_t>(r));
    for (int l = 1; l <= r; ++l) tables[static_cast<std::size_t>(l - 1)] = q.conditional(l);

    const MultiscaleMeasure m =
        build_weighted_measure(H, ScaleParams(q.space, zetas_deepest),
                               LevelWeights::from_conditional_tables(q.space, tables));
    return m.joint();
}

}  // namespace multiscale
