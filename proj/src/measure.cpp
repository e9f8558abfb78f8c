#include "multiscale/measure.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "multiscale/errors.hpp"
#include "multiscale/parallel.hpp"

namespace multiscale {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

LevelWeights LevelWeights::ones(const ProductSpace& space) {
    LevelWeights w;
    for (int l = 1; l <= space.depth(); ++l)
        w.log_w.emplace_back(static_cast<std::size_t>(space.prefix_count(l)), 0.0);
    return w;
}

LevelWeights LevelWeights::uniform(const ProductSpace& space) {
    LevelWeights w;
    for (int l = 1; l <= space.depth(); ++l)
        w.log_w.emplace_back(static_cast<std::size_t>(space.prefix_count(l)),
                             -std::log(static_cast<double>(space.level_size(l))));
    return w;
}

LevelWeights LevelWeights::from_conditional_tables(const ProductSpace& space,
                                                   const std::vector<std::vector<double>>& tables) {
    if (static_cast<int>(tables.size()) != space.depth())
        throw ConfigError("LevelWeights: expected one conditional table per level");
    LevelWeights w;
    for (int l = 1; l <= space.depth(); ++l) {
        const auto& t = tables[static_cast<std::size_t>(l - 1)];
        if (static_cast<std::int64_t>(t.size()) != space.prefix_count(l))
            throw ConfigError("LevelWeights: table at level " + std::to_string(l) +
                              " has wrong length");
        std::vector<double> lw(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (!(t[i] >= 0.0) || !std::isfinite(t[i]))
                throw ConfigError("LevelWeights: conditional entries must be finite and >= 0");
            lw[i] = t[i] > 0.0 ? std::log(t[i]) : kNegInf;
        }
        w.log_w.push_back(std::move(lw));
    }
    return w;
}

void LevelWeights::validate(const ProductSpace& space) const {
    if (log_w.empty()) return;  // empty means "all weights one"
    if (static_cast<int>(log_w.size()) != space.depth())
        throw ConfigError("LevelWeights: expected one table per level");
    for (int l = 1; l <= space.depth(); ++l) {
        const auto& lw = log_w[static_cast<std::size_t>(l - 1)];
        if (static_cast<std::int64_t>(lw.size()) != space.prefix_count(l))
            throw ConfigError("LevelWeights: table at level " + std::to_string(l) +
                              " has wrong length");
        for (double v : lw)
            if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
                throw ConfigError("LevelWeights: log-weights must be < +infinity and not NaN");
    }
}

const std::vector<double>& MultiscaleMeasure::pressure(int level) const {
    if (level < 0 || level > space_.depth())
        throw ConfigError("MultiscaleMeasure::pressure: level out of range");
    return pressures_[static_cast<std::size_t>(level)];
}

const std::vector<double>& MultiscaleMeasure::conditional(int level) const {
    if (level < 1 || level > space_.depth())
        throw ConfigError("MultiscaleMeasure::conditional: level out of range");
    return conditionals_[static_cast<std::size_t>(level - 1)];
}

const std::vector<double>& MultiscaleMeasure::marginal(int level) const {
    if (level < 0 || level > space_.depth())
        throw ConfigError("MultiscaleMeasure::marginal: level out of range");
    const auto& m = marginals_[static_cast<std::size_t>(level)];
    if (m.empty() && space_.prefix_count(level) > 0)
        throw ConfigError("MultiscaleMeasure::marginal: level " + std::to_string(level) +
                          " exceeds the materialization guard; use joint_at");
    return m;
}

bool MultiscaleMeasure::joint_materialized() const { return !marginals_.back().empty(); }

const std::vector<double>& MultiscaleMeasure::joint() const {
    if (!joint_materialized())
        throw ConfigError("MultiscaleMeasure::joint: space exceeds the 10^7 guard; use joint_at");
    return marginals_.back();
}

double MultiscaleMeasure::joint_at(std::int64_t flat) const {
    if (flat < 0 || flat >= space_.total_size())
        throw ConfigError("MultiscaleMeasure::joint_at: flat index out of range");
    double p = 1.0;
    for (int l = 1; l <= space_.depth(); ++l)
        p *= conditionals_[static_cast<std::size_t>(l - 1)]
                          [static_cast<std::size_t>(space_.prefix_index(flat, l))];
    return p;
}

MultiscaleMeasure build_weighted_measure(const CostTensor& H, const ScaleParams& zetas,
                                         const LevelWeights& weights, int threads) {
    const ProductSpace& space = H.space;
    if (static_cast<int>(zetas.zetas_root_first.size()) != space.depth())
        throw ConfigError("build_measure: scale parameter count does not match space depth");
    weights.validate(space);

    MultiscaleMeasure m(space, zetas);
    m.weights_ = weights;
    const int r = space.depth();
    m.pressures_.assign(static_cast<std::size_t>(r) + 1, {});
    m.conditionals_.assign(static_cast<std::size_t>(r), {});
    m.pressures_[static_cast<std::size_t>(r)] = H.values;

    double root_lse = kNegInf;
    for (int l = r; l >= 1; --l) {
        const std::int64_t sl = space.level_size(l);
        const std::int64_t n_par = space.prefix_count(l - 1);
        const double zl = zetas.zeta(l);
        const std::vector<double>& upper = m.pressures_[static_cast<std::size_t>(l)];
        const std::vector<double>* lw =
            weights.log_w.empty() ? nullptr : &weights.log_w[static_cast<std::size_t>(l - 1)];
        std::vector<double>& lower = m.pressures_[static_cast<std::size_t>(l - 1)];
        std::vector<double>& cond = m.conditionals_[static_cast<std::size_t>(l - 1)];
        lower.assign(static_cast<std::size_t>(n_par), 0.0);
        cond.assign(static_cast<std::size_t>(space.prefix_count(l)), 0.0);

        exec::parallel_for(n_par, threads, [&](std::int64_t j) {
            const std::int64_t beg = j * sl;
            auto score = [&](std::int64_t i) {
                const double w = lw ? (*lw)[static_cast<std::size_t>(i)] : 0.0;
                return zl * upper[static_cast<std::size_t>(i)] + w;
            };
            double mx = kNegInf;
            for (std::int64_t i = beg; i < beg + sl; ++i) mx = std::max(mx, score(i));
            if (!(mx > kNegInf)) {
                // weight-starved slice: no mass anywhere below this node
                lower[static_cast<std::size_t>(j)] = kNegInf;
                return;
            }
            double sum = 0.0;
            for (std::int64_t i = beg; i < beg + sl; ++i) sum += std::exp(score(i) - mx);
            const double lse = mx + std::log(sum);
            lower[static_cast<std::size_t>(j)] = lse / zl;
            for (std::int64_t i = beg; i < beg + sl; ++i)
                cond[static_cast<std::size_t>(i)] = std::exp(score(i) - lse);
        });
        if (l == 1) root_lse = zl * lower[0];
    }
    if (!std::isfinite(m.pressures_[0][0]))
        throw NumericError("build_measure: the measure carries no mass (all weights vanish)");
    m.log_z_root_ = root_lse;

    m.marginals_.assign(static_cast<std::size_t>(r) + 1, {});
    m.marginals_[0] = {1.0};
    for (int l = 1; l <= r; ++l) {
        if (space.prefix_count(l) > kJointGuard) break;  // deeper levels stay on-demand
        const std::int64_t sl = space.level_size(l);
        const std::vector<double>& prev = m.marginals_[static_cast<std::size_t>(l - 1)];
        const std::vector<double>& cond = m.conditionals_[static_cast<std::size_t>(l - 1)];
        std::vector<double>& cur = m.marginals_[static_cast<std::size_t>(l)];
        cur.assign(static_cast<std::size_t>(space.prefix_count(l)), 0.0);
        exec::parallel_for(space.prefix_count(l), threads, [&](std::int64_t i) {
            cur[static_cast<std::size_t>(i)] =
                prev[static_cast<std::size_t>(i / sl)] * cond[static_cast<std::size_t>(i)];
        });
    }
    return m;
}

MultiscaleMeasure build_measure(const CostTensor& H, const ScaleParams& zetas, int threads) {
    return build_weighted_measure(H, zetas, LevelWeights{}, threads);
}

double average(const MultiscaleMeasure& m, const Observable& f) {
    if (f.space() != m.space()) throw ConfigError("average: observable lives on a different space");
    const int l = f.depends_up_to();
    const ProductSpace& sp = m.space();
    const auto& marg = m.marginal(l);  // throws past the guard; desk scale is fine
    const std::int64_t block = sp.suffix_count(l);
    double acc = 0.0;  // fixed-order serial reduction: results must not depend on threads
    for (std::int64_t j = 0; j < sp.prefix_count(l); ++j)
        acc += marg[static_cast<std::size_t>(j)] * f(j * block);
    return acc;
}

std::vector<double> conditional_average(const MultiscaleMeasure& m, const Observable& f, int level) {
    const ProductSpace& sp = m.space();
    if (f.space() != sp)
        throw ConfigError("conditional_average: observable lives on a different space");
    if (level < 1 || level > sp.depth())
        throw ConfigError("conditional_average: level out of range");
    if (f.depends_up_to() > level)
        throw ConfigError("conditional_average: observable depends on level " +
                          std::to_string(f.depends_up_to()) + ", deeper than requested level " +
                          std::to_string(level));
    const auto& cond = m.conditional(level);
    const std::int64_t sl = sp.level_size(level);
    const std::int64_t block = sp.suffix_count(level);
    std::vector<double> out(static_cast<std::size_t>(sp.prefix_count(level - 1)), 0.0);
    for (std::int64_t j = 0; j < sp.prefix_count(level - 1); ++j) {
        double acc = 0.0;
        for (std::int64_t i = j * sl; i < (j + 1) * sl; ++i)
            acc += cond[static_cast<std::size_t>(i)] * f(i * block);
        out[static_cast<std::size_t>(j)] = acc;
    }
    return out;
}

double tilted_pressure(const CostTensor& H, const ScaleParams& zetas, const Observable& f,
                       double lambda) {
    if (f.space() != H.space)
        throw ConfigError("tilted_pressure: observable lives on a different space");
    std::vector<double> shifted = H.values;
    for (std::size_t i = 0; i < shifted.size(); ++i)
        shifted[i] += lambda * f(static_cast<std::int64_t>(i));
    return build_measure(CostTensor(H.space, std::move(shifted)), zetas).root_pressure();
}

FreeEnergies free_energies(const MultiscaleMeasure& m, double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw ConfigError("free_energies: beta must be a positive finite real");
    const ProductSpace& sp = m.space();
    FreeEnergies fe;
    fe.beta = beta;
    for (int l = 1; l <= sp.depth(); ++l) fe.beta_levels.push_back(m.zeta(l) * beta);
    for (int l = 0; l <= sp.depth(); ++l) {
        const auto& P = m.pressure(l);
        std::vector<double> F(P.size());
        for (std::size_t i = 0; i < P.size(); ++i) F[i] = -P[i] / beta;
        fe.levels.push_back(std::move(F));
    }
    fe.root_free_energy = -m.log_z_root() / beta;

    // Re-derive each conditional from the increments: p^{<l} must equal
    // w_l e^{-beta_l (F_l - F_{l-1})} up to rounding.
    double gap = 0.0;
    for (int l = 1; l <= sp.depth(); ++l) {
        const auto& Fl = fe.levels[static_cast<std::size_t>(l)];
        const auto& Fp = fe.levels[static_cast<std::size_t>(l - 1)];
        const auto& cond = m.conditional(l);
        const std::vector<double>* lw =
            m.weights().log_w.empty() ? nullptr : &m.weights().log_w[static_cast<std::size_t>(l - 1)];
        const double bl = fe.beta_levels[static_cast<std::size_t>(l - 1)];
        for (std::int64_t i = 0; i < sp.prefix_count(l); ++i) {
            const double fi = Fl[static_cast<std::size_t>(i)];
            const double fj = Fp[static_cast<std::size_t>(m.space().parent_of(i, l))];
            const double w = lw ? (*lw)[static_cast<std::size_t>(i)] : 0.0;
            double recon = 0.0;  // +inf free energy = zero-mass branch
            if (std::isfinite(fi) && std::isfinite(fj)) recon = std::exp(w - bl * (fi - fj));
            gap = std::max(gap, std::abs(recon - cond[static_cast<std::size_t>(i)]));
        }
    }
    fe.identity_gap = gap;
    if (gap > 1e-12)
        throw NumericError("free_energies: conditional reconstruction deviates by " +
                           std::to_string(gap));
    return fe;
}

}  // namespace multiscale
