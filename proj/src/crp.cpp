#include "multiscale/crp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "multiscale/errors.hpp"

namespace multiscale {

namespace {

void check_two_level(const ProductSpace& space, const char* what) {
    if (space.depth() != 2) throw ConfigError(std::string(what) + ": space must have exactly two levels");
}

void check_zeta(double zeta, const char* what) {
    if (!(zeta > 0.0 && zeta < 1.0))
        throw ConfigError(std::string(what) + ": zeta must lie strictly inside (0,1)");
}

struct MeanStdError {
    double mean = 0.0;
    double std_error = 0.0;
};

MeanStdError summarize(const std::vector<double>& vals) {
    MeanStdError out;
    const double t = static_cast<double>(vals.size());
    for (double v : vals) out.mean += v;
    out.mean /= t;
    if (vals.size() > 1) {
        double ss = 0.0;
        for (double v : vals) ss += (v - out.mean) * (v - out.mean);
        out.std_error = std::sqrt(ss / (t * (t - 1.0)));
    }
    return out;
}

std::uint64_t replicate_seed(std::uint64_t master, int rep) {
    return RngStream::derive(master, {stream_tag::kReplicate, static_cast<std::uint64_t>(rep)})
        .next_u64();
}

}  // namespace

CrpState crp_run(std::int64_t n, double zeta, std::uint64_t seed) {
    if (n < 1) throw ConfigError("crp_run: n must be at least 1");
    check_zeta(zeta, "crp_run");

    RngStream g = RngStream::derive(seed, {stream_tag::kCrp});
    CrpState state;
    state.zeta = zeta;
    state.n = n;
    state.occupancies = {1};
    std::vector<std::int64_t> ball_box;
    ball_box.reserve(static_cast<std::size_t>(n));
    ball_box.push_back(0);

    for (std::int64_t m = 1; m < n; ++m) {
        const auto k = static_cast<double>(state.occupancies.size());
        if (g.next_unit() * static_cast<double>(m) < zeta * k) {
            state.occupancies.push_back(1);
            ball_box.push_back(static_cast<std::int64_t>(state.occupancies.size()) - 1);
        } else {
            // Size-biased proposal via a uniform ball; acceptance
            // (n_alpha - zeta)/n_alpha leaves exactly (n_alpha - zeta)/m per box.
            for (;;) {
                const std::int64_t a = ball_box[static_cast<std::size_t>(g.next_below(m))];
                const auto na = static_cast<double>(state.occupancies[static_cast<std::size_t>(a)]);
                if (g.next_unit() * na < na - zeta) {
                    ++state.occupancies[static_cast<std::size_t>(a)];
                    ball_box.push_back(a);
                    break;
                }
            }
        }
    }
    state.k = static_cast<std::int64_t>(state.occupancies.size());
    return state;
}

RandomWeights pd_weights(const CrpState& state) {
    RandomWeights w;
    w.n = state.n;
    w.rho.reserve(state.occupancies.size());
    for (std::int64_t c : state.occupancies)
        w.rho.push_back(static_cast<double>(c) / static_cast<double>(state.n));
    w.nu = w.rho;
    std::sort(w.nu.begin(), w.nu.end(), std::greater<double>());
    return w;
}

AtomEnvironment draw_atoms(const CostTensor& H, std::int64_t k, RngStream& stream) {
    check_two_level(H.space, "draw_atoms");
    const std::int64_t s1 = H.space.level_size(1);
    const std::int64_t s2 = H.space.level_size(2);
    AtomEnvironment env;
    env.y.reserve(static_cast<std::size_t>(k));
    env.z.reserve(static_cast<std::size_t>(k));
    for (std::int64_t a = 0; a < k; ++a) {
        const std::int64_t y = stream.next_below(s1);
        double z = 0.0;
        for (std::int64_t x2 = 0; x2 < s2; ++x2)
            z += std::exp(H.values[static_cast<std::size_t>(y * s2 + x2)]);
        env.y.push_back(y);
        env.z.push_back(z / static_cast<double>(s2));
    }
    return env;
}

MultiscaleMeasure uniform_reference_measure(const CostTensor& H, double zeta) {
    check_two_level(H.space, "uniform_reference_measure");
    check_zeta(zeta, "uniform_reference_measure");
    return build_weighted_measure(H, ScaleParams(H.space, {1.0, zeta}),
                                  LevelWeights::uniform(H.space));
}

GrandPotentialEstimate grand_potential_mc(const CostTensor& H, double zeta, std::int64_t crp_n,
                                          int replicates, std::uint64_t seed) {
    check_two_level(H.space, "grand_potential_mc");
    check_zeta(zeta, "grand_potential_mc");
    if (crp_n < 1) throw ConfigError("grand_potential_mc: crp_n must be at least 1");
    if (replicates < 1) throw ConfigError("grand_potential_mc: need at least one replicate");

    const MultiscaleMeasure ref = uniform_reference_measure(H, zeta);
    std::vector<double> vals(static_cast<std::size_t>(replicates));
    for (int t = 0; t < replicates; ++t) {
        const CrpState state = crp_run(crp_n, zeta, replicate_seed(seed, t));
        RngStream atoms = RngStream::derive(seed, {stream_tag::kAtoms, static_cast<std::uint64_t>(t)});
        const AtomEnvironment env = draw_atoms(H, state.k, atoms);
        double tot = 0.0;
        for (std::int64_t a = 0; a < state.k; ++a)
            tot += static_cast<double>(state.occupancies[static_cast<std::size_t>(a)]) /
                   static_cast<double>(crp_n) * env.z[static_cast<std::size_t>(a)];
        vals[static_cast<std::size_t>(t)] = std::log(tot);
    }

    const MeanStdError ms = summarize(vals);
    GrandPotentialEstimate est;
    est.mean = ms.mean;
    est.std_error = ms.std_error;
    est.replicates = replicates;
    est.truncation_n = crp_n;
    est.target = ref.root_pressure();
    return est;
}

RandomAverageEstimate random_two_scale_average(const CostTensor& H, const Observable& f,
                                               double zeta, std::int64_t crp_n, int replicates,
                                               std::uint64_t seed) {
    check_two_level(H.space, "random_two_scale_average");
    check_zeta(zeta, "random_two_scale_average");
    if (crp_n < 1) throw ConfigError("random_two_scale_average: crp_n must be at least 1");
    if (replicates < 1) throw ConfigError("random_two_scale_average: need at least one replicate");
    if (f.space() != H.space) throw ConfigError("random_two_scale_average: observable space mismatch");

    const MultiscaleMeasure ref = uniform_reference_measure(H, zeta);
    const std::int64_t s2 = H.space.level_size(2);

    std::vector<double> vals(static_cast<std::size_t>(replicates));
    for (int t = 0; t < replicates; ++t) {
        const CrpState state = crp_run(crp_n, zeta, replicate_seed(seed, t));
        RngStream atoms = RngStream::derive(seed, {stream_tag::kAtoms, static_cast<std::uint64_t>(t)});
        const AtomEnvironment env = draw_atoms(H, state.k, atoms);

        double denom = 0.0;
        for (std::int64_t a = 0; a < state.k; ++a)
            denom += static_cast<double>(state.occupancies[static_cast<std::size_t>(a)]) /
                     static_cast<double>(crp_n) * env.z[static_cast<std::size_t>(a)];

        double acc = 0.0;
        for (std::int64_t a = 0; a < state.k; ++a) {
            const double nu_a = static_cast<double>(state.occupancies[static_cast<std::size_t>(a)]) /
                                static_cast<double>(crp_n);
            const double weight = nu_a * env.z[static_cast<std::size_t>(a)] / denom;
            const std::int64_t y = env.y[static_cast<std::size_t>(a)];
            double col = 0.0;
            for (std::int64_t x2 = 0; x2 < s2; ++x2) {
                const std::int64_t flat = y * s2 + x2;
                col += std::exp(H.values[static_cast<std::size_t>(flat)]) * f(flat);
            }
            col /= static_cast<double>(s2) * env.z[static_cast<std::size_t>(a)];
            acc += weight * col;
        }
        vals[static_cast<std::size_t>(t)] = acc;
    }

    const MeanStdError ms = summarize(vals);
    RandomAverageEstimate est;
    est.mean = ms.mean;
    est.std_error = ms.std_error;
    est.replicates = replicates;
    est.truncation_n = crp_n;
    est.target = average(ref, f);
    return est;
}

DualPathComparison crp_multinomial_experiment(const CostTensor& H, double zeta, std::int64_t n,
                                              std::uint64_t seed) {
    check_two_level(H.space, "crp_multinomial_experiment");
    check_zeta(zeta, "crp_multinomial_experiment");
    if (n < 1) throw ConfigError("crp_multinomial_experiment: n must be at least 1");

    const CrpState state = crp_run(n, zeta, seed);
    RngStream atoms = RngStream::derive(seed, {stream_tag::kAtoms});
    const AtomEnvironment env = draw_atoms(H, state.k, atoms);
    const RandomWeights w = pd_weights(state);
    const std::int64_t s2 = H.space.level_size(2);

    // Shared sort permutation: weight-descending, creation order on ties.
    std::vector<std::int64_t> perm(static_cast<std::size_t>(state.k));
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&](std::int64_t a, std::int64_t b) {
        return w.rho[static_cast<std::size_t>(a)] > w.rho[static_cast<std::size_t>(b)];
    });

    DualPathComparison cmp;
    cmp.k = state.k;
    cmp.atoms.resize(static_cast<std::size_t>(state.k));
    cmp.nu.resize(static_cast<std::size_t>(state.k));
    cmp.maximizer.assign(static_cast<std::size_t>(state.k * s2), 0.0);
    cmp.reference.assign(static_cast<std::size_t>(state.k * s2), 0.0);

    // Path one: Gibbs maximizer with chemical potentials log rho_alpha,
    // normalized by its own total mass.
    double norm = 0.0;
    for (std::int64_t as = 0; as < state.k; ++as) {
        const std::int64_t a = perm[static_cast<std::size_t>(as)];
        cmp.atoms[static_cast<std::size_t>(as)] = env.y[static_cast<std::size_t>(a)];
        cmp.nu[static_cast<std::size_t>(as)] = w.rho[static_cast<std::size_t>(a)];
        for (std::int64_t x2 = 0; x2 < s2; ++x2) {
            const double v =
                w.rho[static_cast<std::size_t>(a)] *
                std::exp(H.values[static_cast<std::size_t>(env.y[static_cast<std::size_t>(a)] * s2 + x2)]);
            cmp.maximizer[static_cast<std::size_t>(as * s2 + x2)] = v;
            norm += v;
        }
    }
    for (double& v : cmp.maximizer) v /= norm;

    // Path two: the two-factor random-measure formula.
    double denom = 0.0;
    for (std::int64_t as = 0; as < state.k; ++as) {
        const std::int64_t a = perm[static_cast<std::size_t>(as)];
        denom += cmp.nu[static_cast<std::size_t>(as)] * env.z[static_cast<std::size_t>(a)];
    }
    for (std::int64_t as = 0; as < state.k; ++as) {
        const std::int64_t a = perm[static_cast<std::size_t>(as)];
        const double za = env.z[static_cast<std::size_t>(a)];
        const double weight = cmp.nu[static_cast<std::size_t>(as)] * za / denom;
        for (std::int64_t x2 = 0; x2 < s2; ++x2) {
            const double gibbs =
                std::exp(H.values[static_cast<std::size_t>(env.y[static_cast<std::size_t>(a)] * s2 + x2)]) /
                (static_cast<double>(s2) * za);
            cmp.reference[static_cast<std::size_t>(as * s2 + x2)] = weight * gibbs;
        }
    }

    for (std::size_t i = 0; i < cmp.maximizer.size(); ++i)
        cmp.max_entry_gap = std::max(cmp.max_entry_gap, std::abs(cmp.maximizer[i] - cmp.reference[i]));
    return cmp;
}

}  // namespace multiscale
