#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "multiscale/crp.hpp"
#include "multiscale/errors.hpp"
#include "oracle.hpp"

using namespace multiscale;

namespace {

constexpr std::uint64_t kSeed = 550033;

// Fixed random-looking instance on X_2 x X_1 with sizes (2, 3); the exact
// values below were computed independently from the closed forms
//   Z(x_1) = (1/2) sum_{x_2} e^{H}, P_0 = 2 log((1/3) sum Z^{1/2}).
const ProductSpace kSpace23({2, 3});
const std::vector<double> kHr{0.83, -1.21, 0.44, 1.02, -0.95, 0.31};
constexpr double kP0Half = 0.333552632959087;      // zeta = 0.5
constexpr double kAnnealed = 0.367830636801884;    // log E_1 Z
constexpr double kQuenched = 0.299044295757777;    // E_1 log Z

// Positive compositions of m into exactly k parts.
void positive_compositions(std::int64_t m, int k, std::vector<std::int64_t>& cur,
                           std::vector<std::vector<std::int64_t>>& out) {
    if (k == 1) {
        if (m >= 1) {
            cur.push_back(m);
            out.push_back(cur);
            cur.pop_back();
        }
        return;
    }
    for (std::int64_t c = 1; c + (k - 1) <= m; ++c) {
        cur.push_back(c);
        positive_compositions(m - c, k - 1, cur, out);
        cur.pop_back();
    }
}

}  // namespace

TEST_CASE("restaurant runs respect the placement rules") {
    const CrpState one = crp_run(1, 0.5, 7);
    CHECK(one.occupancies == std::vector<std::int64_t>{1});
    CHECK(one.k == 1);
    CHECK(one.n == 1);

    RngStream g = RngStream::derive(kSeed, {stream_tag::kInstance, 1});
    for (int rep = 0; rep < 200; ++rep) {
        const std::int64_t n = 1 + g.next_below(400);
        const double zeta = 0.05 + 0.9 * g.next_unit();
        const CrpState st = crp_run(n, zeta, g.next_u64());
        CHECK(st.k == static_cast<std::int64_t>(st.occupancies.size()));
        std::int64_t total = 0;
        for (std::int64_t c : st.occupancies) {
            CHECK(c >= 1);
            total += c;
        }
        CHECK(total == n);
    }

    CHECK(crp_run(321, 0.4, 99).occupancies == crp_run(321, 0.4, 99).occupancies);

    CHECK_THROWS_AS(crp_run(0, 0.5, 1), ConfigError);
    CHECK_THROWS_AS(crp_run(10, 0.0, 1), ConfigError);
    CHECK_THROWS_AS(crp_run(10, 1.0, 1), ConfigError);
    CHECK_THROWS_AS(crp_run(10, -0.2, 1), ConfigError);
}

TEST_CASE("second ball opens a new box with probability zeta") {
    const int runs = 100000;
    const double zeta = 0.5;
    int opened = 0;
    for (int t = 0; t < runs; ++t)
        if (crp_run(2, zeta, RngStream::derive(kSeed, {stream_tag::kReplicate, static_cast<std::uint64_t>(t)}).next_u64()).k == 2)
            ++opened;
    const double freq = static_cast<double>(opened) / runs;
    CHECK(std::abs(freq - zeta) < 4.0 * std::sqrt(0.25 / runs));
}

TEST_CASE("transition masses sum to one for every small occupancy state") {
    for (double zeta : {0.1, 0.5, 0.9}) {
        for (std::int64_t m = 1; m <= 5; ++m) {
            for (int k = 1; k <= static_cast<int>(m); ++k) {
                std::vector<std::vector<std::int64_t>> states;
                std::vector<std::int64_t> cur;
                positive_compositions(m, k, cur, states);
                for (const auto& occ : states) {
                    double mass = zeta * static_cast<double>(k) / static_cast<double>(m);
                    for (std::int64_t na : occ)
                        mass += (static_cast<double>(na) - zeta) / static_cast<double>(m);
                    CHECK(std::abs(mass - 1.0) < 1e-15);
                }
            }
        }
    }
}

TEST_CASE("occupied-box counts grow with n and with zeta") {
    const int reps = 100;
    const auto mean_k = [&](std::int64_t n, double zeta, std::uint64_t tag) {
        double sum = 0.0, ss = 0.0;
        for (int t = 0; t < reps; ++t) {
            const auto st = crp_run(n, zeta, RngStream::derive(kSeed, {tag, static_cast<std::uint64_t>(t)}).next_u64());
            sum += static_cast<double>(st.k);
            ss += static_cast<double>(st.k) * static_cast<double>(st.k);
        }
        const double m = sum / reps;
        const double var = (ss - reps * m * m) / (reps - 1);
        return std::pair<double, double>{m, std::sqrt(var / reps)};
    };

    const auto [m_small, se_small] = mean_k(100, 0.5, 11);
    const auto [m_big, se_big] = mean_k(10000, 0.5, 12);
    CHECK(m_big - m_small > 5.0 * std::sqrt(se_small * se_small + se_big * se_big));

    const auto [m_lo, se_lo] = mean_k(10000, 0.2, 13);
    const auto [m_hi, se_hi] = mean_k(10000, 0.8, 14);
    CHECK(m_hi - m_lo > 5.0 * std::sqrt(se_lo * se_lo + se_hi * se_hi));
}

TEST_CASE("pd weights: frequencies in creation order, sorted descending copy") {
    const CrpState a{0.5, 4, {3, 1}, 2};
    const RandomWeights wa = pd_weights(a);
    CHECK(wa.rho == std::vector<double>{0.75, 0.25});
    CHECK(wa.nu == std::vector<double>{0.75, 0.25});

    const CrpState b{0.5, 4, {1, 3}, 2};
    const RandomWeights wb = pd_weights(b);
    CHECK(wb.rho == std::vector<double>{0.25, 0.75});
    CHECK(wb.nu == std::vector<double>{0.75, 0.25});

    RngStream g = RngStream::derive(kSeed, {stream_tag::kInstance, 2});
    for (int rep = 0; rep < 1000; ++rep) {
        const RandomWeights w = pd_weights(crp_run(50, 0.05 + 0.9 * g.next_unit(), g.next_u64()));
        double sr = 0.0, sn = 0.0;
        for (double v : w.rho) sr += v;
        for (std::size_t i = 0; i < w.nu.size(); ++i) {
            sn += w.nu[i];
            if (i > 0) CHECK(w.nu[i] <= w.nu[i - 1]);
        }
        CHECK(std::abs(sr - 1.0) < 1e-12);
        CHECK(std::abs(sn - 1.0) < 1e-12);
        auto sorted = w.rho;
        std::sort(sorted.begin(), sorted.end(), std::greater<double>());
        CHECK(sorted == w.nu);
    }
}

TEST_CASE("grand potential: constant and worked instances are exact") {
    // Constant Hamiltonian: every Z_alpha = e^c, so each replicate returns c.
    const CostTensor flat(kSpace23, std::vector<double>(6, 0.7));
    const GrandPotentialEstimate ge = grand_potential_mc(flat, 0.4, 500, 50, kSeed);
    CHECK(std::abs(ge.mean - 0.7) < 1e-12);
    CHECK(ge.std_error <= 1e-12);
    CHECK(std::abs(ge.target - 0.7) < 1e-12);
    CHECK(ge.replicates == 50);
    CHECK(ge.truncation_n == 500);

    // The four-state reference instance has Z identically 2, so the random
    // sum collapses to log 2 with zero variance and matches its target.
    const auto inst = oracle::worked_example();
    const CostTensor H(inst.space, inst.H);
    const GrandPotentialEstimate gw = grand_potential_mc(H, 0.5, 500, 50, kSeed + 1);
    CHECK(std::abs(gw.mean - std::log(2.0)) < 1e-12);
    CHECK(gw.std_error <= 1e-12);
    CHECK(std::abs(gw.target - std::log(2.0)) < 1e-12);

    CHECK_THROWS_AS(grand_potential_mc(CostTensor(ProductSpace({2, 2, 2}), std::vector<double>(8, 0.0)), 0.5, 10, 2, 1),
                    ConfigError);
    CHECK_THROWS_AS(grand_potential_mc(flat, 1.0, 10, 2, 1), ConfigError);
    CHECK_THROWS_AS(grand_potential_mc(flat, 0.5, 0, 2, 1), ConfigError);
    CHECK_THROWS_AS(grand_potential_mc(flat, 0.5, 10, 0, 1), ConfigError);
}

TEST_CASE("grand potential: random instance agrees with the exact pressure") {
    const CostTensor H(kSpace23, kHr);

    // The exact target itself against the independently computed closed form.
    CHECK(std::abs(uniform_reference_measure(H, 0.5).root_pressure() - kP0Half) < 1e-12);

    const GrandPotentialEstimate ge = grand_potential_mc(H, 0.5, 4000, 200, kSeed + 2);
    CHECK(ge.std_error > 0.0);
    CHECK(std::abs(ge.mean - ge.target) <= 3.0 * ge.std_error);
    CHECK(std::abs(ge.target - kP0Half) < 1e-12);
}

TEST_CASE("extreme zeta: annealed at 0.99, quenched at 0.05") {
    const CostTensor H(kSpace23, kHr);

    // Near one the random sum behaves like E_1 Z by the law of large numbers.
    const GrandPotentialEstimate hot = grand_potential_mc(H, 0.99, 10000, 200, kSeed + 3);
    CHECK(std::abs(hot.mean - kAnnealed) <= 3.0 * hot.std_error);

    // Near zero the largest weight carries all the mass: E_1 log Z.
    const GrandPotentialEstimate cold = grand_potential_mc(H, 0.05, 10000, 200, kSeed + 4);
    CHECK(std::abs(cold.mean - kQuenched) <= 3.0 * cold.std_error);
}

TEST_CASE("standard error shrinks like the square root of the replicate count") {
    const CostTensor H(kSpace23, kHr);
    const GrandPotentialEstimate few = grand_potential_mc(H, 0.5, 500, 100, kSeed + 5);
    const GrandPotentialEstimate many = grand_potential_mc(H, 0.5, 500, 10000, kSeed + 5);
    const double ratio = few.std_error / many.std_error;
    CHECK(ratio > 5.0);
    CHECK(ratio < 20.0);
}

TEST_CASE("doubling the truncation shifts the estimate by less than one standard error") {
    // Replicate streams are derived from (seed, t) only and consumed
    // sequentially, so the 2000-ball runs extend the 1000-ball runs ball by
    // ball and the comparison isolates the truncation effect.
    const CostTensor H(kSpace23, kHr);
    const GrandPotentialEstimate a = grand_potential_mc(H, 0.5, 1000, 100, kSeed + 6);
    const GrandPotentialEstimate b = grand_potential_mc(H, 0.5, 2000, 100, kSeed + 6);
    CHECK(std::abs(b.mean - a.mean) < a.std_error);
}

TEST_CASE("replicates reproduce through the documented stream paths; ordering is immaterial") {
    const CostTensor H(kSpace23, kHr);
    const int reps = 10;
    const std::int64_t crp_n = 300;
    const std::uint64_t master = kSeed + 7;
    const GrandPotentialEstimate ge = grand_potential_mc(H, 0.5, crp_n, reps, master);

    double mean = 0.0;
    for (int t = 0; t < reps; ++t) {
        const std::uint64_t st =
            RngStream::derive(master, {stream_tag::kReplicate, static_cast<std::uint64_t>(t)}).next_u64();
        const CrpState state = crp_run(crp_n, 0.5, st);
        RngStream astream = RngStream::derive(master, {stream_tag::kAtoms, static_cast<std::uint64_t>(t)});
        const AtomEnvironment env = draw_atoms(H, state.k, astream);
        const RandomWeights w = pd_weights(state);

        // Creation-order and weight-sorted summation agree up to roundoff.
        double rho_sum = 0.0;
        for (std::size_t a = 0; a < w.rho.size(); ++a) rho_sum += w.rho[a] * env.z[a];
        std::vector<std::size_t> perm(w.rho.size());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        std::stable_sort(perm.begin(), perm.end(),
                         [&](std::size_t a, std::size_t b) { return w.rho[a] > w.rho[b]; });
        double nu_sum = 0.0;
        for (std::size_t i = 0; i < perm.size(); ++i) nu_sum += w.rho[perm[i]] * env.z[perm[i]];
        CHECK(std::abs(std::log(rho_sum) - std::log(nu_sum)) < 1e-13);

        mean += std::log(rho_sum);
    }
    mean /= reps;
    CHECK(std::abs(mean - ge.mean) < 1e-12);
}

TEST_CASE("random two-scale averages: constants, worked instance, level-2 reduction") {
    const auto inst = oracle::worked_example();
    const CostTensor H(inst.space, inst.H);

    const RandomAverageEstimate rc =
        random_two_scale_average(H, Observable::constant(inst.space, 2.5), 0.5, 300, 40, kSeed + 8);
    CHECK(std::abs(rc.mean - 2.5) < 1e-12);
    CHECK(rc.std_error <= 1e-12);
    CHECK(std::abs(rc.target - 2.5) < 1e-12);

    // f = H on the worked instance: the exact average under the uniformly
    // weighted (1, 1/2)-measure is (3/8) log 3 + (1/2) log 2.
    const Observable fH(inst.space, inst.H, 2);
    const RandomAverageEstimate rh = random_two_scale_average(H, fH, 0.5, 2000, 200, kSeed + 9);
    CHECK(std::abs(rh.target - 0.758553198530514) < 1e-12);
    CHECK(rh.std_error > 0.0);
    CHECK(std::abs(rh.mean - rh.target) <= 3.0 * rh.std_error);

    // H constant in x_1 and f a function of x_2 only: the target collapses to
    // a single-level Gibbs average.
    const ProductSpace sp22({2, 2});
    const std::vector<double> h{0.4, -0.2};
    const CostTensor Hcol(sp22, {h[0], h[1], h[0], h[1]});
    const Observable fcol(sp22, {1.3, -0.7, 1.3, -0.7}, 2);
    const double z = std::exp(h[0]) + std::exp(h[1]);
    const double gibbs = (std::exp(h[0]) * 1.3 + std::exp(h[1]) * (-0.7)) / z;
    const RandomAverageEstimate rg = random_two_scale_average(Hcol, fcol, 0.5, 1000, 100, kSeed + 10);
    CHECK(std::abs(rg.target - gibbs) < 1e-12);
    CHECK(std::abs(rg.mean - rg.target) <= 3.0 * rg.std_error + 1e-12);

    CHECK_THROWS_AS(
        random_two_scale_average(H, Observable::constant(kSpace23, 1.0), 0.5, 10, 2, 1), ConfigError);
    CHECK_THROWS_AS(random_two_scale_average(H, fH, 0.0, 10, 2, 1), ConfigError);
    CHECK_THROWS_AS(random_two_scale_average(H, fH, 0.5, 0, 2, 1), ConfigError);
    CHECK_THROWS_AS(random_two_scale_average(H, fH, 0.5, 10, 0, 1), ConfigError);
}

TEST_CASE("dual-path experiment: the two formulas agree entry by entry") {
    RngStream g = RngStream::derive(kSeed, {stream_tag::kInstance, 3});
    const CostTensor H(kSpace23, oracle::random_H(g, 6, -1.5, 1.5));

    const DualPathComparison cmp = crp_multinomial_experiment(H, 0.5, 1000, kSeed + 11);
    CHECK(cmp.k >= 1);
    CHECK(cmp.max_entry_gap < 1e-12);
    double mass_a = 0.0, mass_b = 0.0;
    for (double v : cmp.maximizer) mass_a += v;
    for (double v : cmp.reference) mass_b += v;
    CHECK(std::abs(mass_a - 1.0) < 1e-12);
    CHECK(std::abs(mass_b - 1.0) < 1e-12);
    for (std::size_t i = 1; i < cmp.nu.size(); ++i) CHECK(cmp.nu[i] <= cmp.nu[i - 1]);
    for (std::int64_t y : cmp.atoms) {
        CHECK(y >= 0);
        CHECK(y < 3);
    }

    // Deterministic per seed.
    const DualPathComparison again = crp_multinomial_experiment(H, 0.5, 1000, kSeed + 11);
    CHECK(again.maximizer == cmp.maximizer);
    CHECK(again.atoms == cmp.atoms);

    // One ball: a single box, plain Gibbs on the atom's column.
    const DualPathComparison single = crp_multinomial_experiment(H, 0.5, 1, kSeed + 12);
    CHECK(single.k == 1);
    const std::int64_t y = single.atoms[0];
    double col_z = std::exp(H.values[static_cast<std::size_t>(2 * y)]) +
                   std::exp(H.values[static_cast<std::size_t>(2 * y + 1)]);
    for (std::int64_t x2 = 0; x2 < 2; ++x2)
        CHECK(std::abs(single.maximizer[static_cast<std::size_t>(x2)] -
                       std::exp(H.values[static_cast<std::size_t>(2 * y + x2)]) / col_z) < 1e-14);

    // Zero cost: only the chemical potentials remain.
    const CostTensor zero(kSpace23, std::vector<double>(6, 0.0));
    const DualPathComparison flat = crp_multinomial_experiment(zero, 0.3, 500, kSeed + 13);
    for (std::int64_t a = 0; a < flat.k; ++a)
        for (std::int64_t x2 = 0; x2 < 2; ++x2)
            CHECK(std::abs(flat.maximizer[static_cast<std::size_t>(a * 2 + x2)] - flat.nu[static_cast<std::size_t>(a)] / 2.0) <
                  1e-14);
}
