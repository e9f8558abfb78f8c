#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "multiscale/errors.hpp"
#include "multiscale/measure.hpp"
#include "multiscale/rng.hpp"
#include "multiscale/space.hpp"
#include "oracle.hpp"

using namespace multiscale;

namespace {

constexpr std::uint64_t kSeed = 20260815;

ProductSpace random_space(RngStream& g) {
    const int r = 1 + static_cast<int>(g.next_below(4));
    std::vector<std::int64_t> sizes;
    for (int l = 0; l < r; ++l) sizes.push_back(1 + g.next_below(4));
    ProductSpace sp(sizes);
    if (sp.total_size() < 2) return ProductSpace({2, 2});
    return sp;
}

}  // namespace

TEST_CASE("uniform case: two states, zero cost") {
    ProductSpace sp({2});
    auto m = build_measure(CostTensor(sp, {0.0, 0.0}), ScaleParams(sp, {1.0}));
    CHECK(m.root_pressure() == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(m.log_z_root() == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(m.joint()[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(m.joint()[1] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("four-state reference instance: hand values and oracle agree") {
    auto inst = oracle::worked_example();
    auto om = oracle::build(inst.space, inst.H, {0.5, 1.0});  // root-first (zeta_1, zeta_2)
    auto m = build_measure(CostTensor(inst.space, inst.H), ScaleParams(inst.space, inst.zetas_deepest_first));

    // hand-computed: log Z at the root is log 4; the root pressure solves
    // e^{P_0/2} = sum e^{P_1/2}, giving log 16
    CHECK(std::abs(m.log_z_root() - std::log(4.0)) < 1e-12);
    CHECK(std::abs(m.root_pressure() - std::log(16.0)) < 1e-12);
    CHECK(std::abs(om.log_z_root - std::log(4.0)) < 1e-12);
    CHECK(std::abs(om.root_pressure - std::log(16.0)) < 1e-12);

    const std::vector<double> cond1{0.5, 0.5};
    const std::vector<double> cond2{0.25, 0.75, 0.5, 0.5};
    const std::vector<double> joint{0.125, 0.375, 0.25, 0.25};
    for (std::size_t i = 0; i < cond1.size(); ++i)
        CHECK(std::abs(m.conditional(1)[i] - cond1[i]) < 1e-12);
    for (std::size_t i = 0; i < cond2.size(); ++i)
        CHECK(std::abs(m.conditional(2)[i] - cond2[i]) < 1e-12);
    for (std::size_t i = 0; i < joint.size(); ++i) {
        CHECK(std::abs(m.joint()[i] - joint[i]) < 1e-12);
        CHECK(std::abs(om.joint[i] - joint[i]) < 1e-12);
    }
}

TEST_CASE("all-zeta-one builds reduce to plain Gibbs") {
    for (int k = 0; k < 5; ++k) {
        auto g = RngStream::derive(kSeed, {stream_tag::kInstance, 100 + static_cast<std::uint64_t>(k)});
        ProductSpace sp = random_space(g);
        auto H = oracle::random_H(g, sp.total_size(), -3.0, 3.0);
        auto m = build_measure(CostTensor(sp, H), ScaleParams(sp, std::vector<double>(sp.depth(), 1.0)));
        auto p = oracle::gibbs(H);
        for (std::int64_t i = 0; i < sp.total_size(); ++i)
            CHECK(std::abs(m.joint()[static_cast<std::size_t>(i)] - p[static_cast<std::size_t>(i)]) < 1e-12);
    }
}

TEST_CASE("type invariants hold on random instances and match the raw-domain oracle") {
    for (int k = 0; k < 20; ++k) {
        auto g = RngStream::derive(kSeed, {stream_tag::kInstance, static_cast<std::uint64_t>(k)});
        ProductSpace sp = random_space(g);
        auto H = oracle::random_H(g, sp.total_size(), -3.0, 3.0);
        auto zr = oracle::random_zetas(g, sp.depth(), 0.1, 3.0);  // root-first
        std::vector<double> zd(zr.rbegin(), zr.rend());
        auto m = build_measure(CostTensor(sp, H), ScaleParams(sp, zd));
        auto om = oracle::build(sp, H, zr);

        // conditional slices are probability vectors
        for (int l = 1; l <= sp.depth(); ++l) {
            const auto& c = m.conditional(l);
            for (std::int64_t j = 0; j < sp.prefix_count(l - 1); ++j) {
                double s = 0.0;
                for (std::int64_t i = j * sp.level_size(l); i < (j + 1) * sp.level_size(l); ++i) {
                    CHECK(c[static_cast<std::size_t>(i)] >= 0.0);
                    CHECK(c[static_cast<std::size_t>(i)] <= 1.0);
                    s += c[static_cast<std::size_t>(i)];
                }
                CHECK(std::abs(s - 1.0) < 1e-12);
            }
        }

        // chain rule: joint equals the product of conditionals
        for (std::int64_t i = 0; i < sp.total_size(); ++i) {
            double prod = 1.0;
            for (int l = 1; l <= sp.depth(); ++l)
                prod *= m.conditional(l)[static_cast<std::size_t>(sp.prefix_index(i, l))];
            CHECK(std::abs(m.joint()[static_cast<std::size_t>(i)] - prod) < 1e-12);
            CHECK(m.joint_at(i) == m.joint()[static_cast<std::size_t>(i)]);
            CHECK(std::abs(m.joint()[static_cast<std::size_t>(i)] - om.joint[static_cast<std::size_t>(i)]) < 1e-12);
        }

        // marginals are contiguous reductions of the joint
        for (int l = 0; l <= sp.depth(); ++l) {
            auto expect = oracle::marginal(sp, m.joint(), l);
            for (std::size_t i = 0; i < expect.size(); ++i)
                CHECK(std::abs(m.marginal(l)[i] - expect[i]) < 1e-12);
        }

        // recursion consistency at every node, relative 1e-12
        for (int l = 1; l <= sp.depth(); ++l) {
            const double zl = m.zeta(l);
            for (std::int64_t j = 0; j < sp.prefix_count(l - 1); ++j) {
                double lhs = std::exp(zl * m.pressure(l - 1)[static_cast<std::size_t>(j)]);
                double rhs = 0.0;
                for (std::int64_t i = j * sp.level_size(l); i < (j + 1) * sp.level_size(l); ++i)
                    rhs += std::exp(zl * m.pressure(l)[static_cast<std::size_t>(i)]);
                CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(std::abs(lhs), std::abs(rhs)));
            }
        }

        CHECK(std::abs(m.root_pressure() - om.root_pressure) <
              1e-11 * std::max(1.0, std::abs(om.root_pressure)));
        CHECK(std::abs(m.log_z_root() - om.log_z_root) <
              1e-11 * std::max(1.0, std::abs(om.log_z_root)));
    }
}

TEST_CASE("averages: constants, the reference instance, and an indicator") {
    auto inst = oracle::worked_example();
    auto m = build_measure(CostTensor(inst.space, inst.H), ScaleParams(inst.space, inst.zetas_deepest_first));

    CHECK(average(m, Observable::constant(inst.space, 2.5)) == doctest::Approx(2.5).epsilon(1e-14));

    const double expect_H = (3.0 / 8.0) * std::log(3.0) + 0.5 * std::log(2.0);
    Observable fH(inst.space, inst.H, inst.space.depth());
    CHECK(std::abs(average(m, fH) - expect_H) < 1e-12);
    CHECK(average(m, fH) == doctest::Approx(0.758554).epsilon(1e-5));

    Observable ind_a = Observable::from_prefix_table(inst.space, 1, {1.0, 0.0});
    CHECK(std::abs(average(m, ind_a) - 0.5) < 1e-12);
}

TEST_CASE("conditional averages keep the lower coordinates") {
    auto inst = oracle::worked_example();
    auto m = build_measure(CostTensor(inst.space, inst.H), ScaleParams(inst.space, inst.zetas_deepest_first));

    auto ones = conditional_average(m, Observable::constant(inst.space, 1.0), 2);
    REQUIRE(ones.size() == 2);
    CHECK(std::abs(ones[0] - 1.0) < 1e-14);
    CHECK(std::abs(ones[1] - 1.0) < 1e-14);

    // f(x_2) = x_2: reads 3/4 under x_1 = a and 1/2 under x_1 = b
    Observable f2 = Observable::from_prefix_table(inst.space, 2, {0.0, 1.0, 0.0, 1.0});
    auto ca = conditional_average(m, f2, 2);
    REQUIRE(ca.size() == 2);
    CHECK(std::abs(ca[0] - 0.75) < 1e-12);
    CHECK(std::abs(ca[1] - 0.5) < 1e-12);

    // at the root the table is a scalar equal to the plain level-1 average
    Observable f1 = Observable::from_prefix_table(inst.space, 1, {2.0, -1.0});
    auto c1 = conditional_average(m, f1, 1);
    REQUIRE(c1.size() == 1);
    CHECK(std::abs(c1[0] - (0.5 * 2.0 + 0.5 * -1.0)) < 1e-12);

    CHECK_THROWS_AS(conditional_average(m, f2, 0), ConfigError);
    CHECK_THROWS_AS(conditional_average(m, f2, 3), ConfigError);
    CHECK_THROWS_AS(conditional_average(m, f2, 1), ConfigError);  // f reads deeper than level 1
}

TEST_CASE("tilted pressure: derivative identity against finite differences") {
    auto inst = oracle::worked_example();
    CostTensor H(inst.space, inst.H);
    ScaleParams z(inst.space, inst.zetas_deepest_first);
    auto m = build_measure(H, z);
    Observable fH(inst.space, inst.H, inst.space.depth());

    CHECK(tilted_pressure(H, z, fH, 0.0) == m.root_pressure());

    const double h = 1e-5;
    const double fd = oracle::central_diff(
        [&](double lam) { return tilted_pressure(H, z, fH, lam); }, h);
    CHECK(std::abs(fd - average(m, fH)) < 1e-6 * std::max(1.0, std::abs(fd)));
    CHECK(fd == doctest::Approx(0.758554).epsilon(1e-4));

    // 20 random (H, zeta, f) triples
    for (int k = 0; k < 20; ++k) {
        auto g = RngStream::derive(kSeed, {stream_tag::kInstance, 200 + static_cast<std::uint64_t>(k)});
        ProductSpace sp = random_space(g);
        auto Hv = oracle::random_H(g, sp.total_size(), -3.0, 3.0);
        auto zr = oracle::random_zetas(g, sp.depth(), 0.1, 3.0);
        std::vector<double> zd(zr.rbegin(), zr.rend());
        CostTensor Hk(sp, Hv);
        ScaleParams zk(sp, zd);
        Observable f(sp, oracle::random_H(g, sp.total_size(), -1.0, 1.0), sp.depth());
        const double fdk = oracle::central_diff(
            [&](double lam) { return tilted_pressure(Hk, zk, f, lam); }, h);
        const double av = average(build_measure(Hk, zk), f);
        CHECK(std::abs(fdk - av) < 1e-6 * std::max(1.0, std::abs(av)));
    }
}

TEST_CASE("tilting an observable of level l leaves deeper conditionals unchanged") {
    auto g = RngStream::derive(kSeed, {stream_tag::kInstance, 300});
    ProductSpace sp({3, 2, 2});  // r = 3
    auto Hv = oracle::random_H(g, sp.total_size(), -2.0, 2.0);
    ScaleParams z(sp, {1.3, 0.7, 0.5});
    auto m0 = build_measure(CostTensor(sp, Hv), z);

    for (int l = 1; l < sp.depth(); ++l) {
        std::vector<double> table;
        for (std::int64_t j = 0; j < sp.prefix_count(l); ++j) table.push_back(g.next_unit());
        Observable f = Observable::from_prefix_table(sp, l, table);
        std::vector<double> tilted = Hv;
        for (std::size_t i = 0; i < tilted.size(); ++i) tilted[i] += 0.37 * f(static_cast<std::int64_t>(i));
        auto m1 = build_measure(CostTensor(sp, tilted), z);
        for (int lp = l + 1; lp <= sp.depth(); ++lp)
            for (std::size_t i = 0; i < m0.conditional(lp).size(); ++i)
                CHECK(std::abs(m1.conditional(lp)[i] - m0.conditional(lp)[i]) < 1e-12);
        // while the level-l conditional does move
        double moved = 0.0;
        for (std::size_t i = 0; i < m0.conditional(l).size(); ++i)
            moved = std::max(moved, std::abs(m1.conditional(l)[i] - m0.conditional(l)[i]));
        CHECK(moved > 1e-6);
    }
}

TEST_CASE("free energies: unit temperature, reference values, reconstruction") {
    auto inst = oracle::worked_example();
    auto m = build_measure(CostTensor(inst.space, inst.H), ScaleParams(inst.space, inst.zetas_deepest_first));

    auto fe = free_energies(m, 1.0);
    CHECK(fe.identity_gap < 1e-12);
    CHECK(std::abs(fe.root_free_energy - (-std::log(4.0))) < 1e-12);
    CHECK(std::abs(fe.levels[0][0] - (-std::log(16.0))) < 1e-12);
    for (int l = 0; l <= inst.space.depth(); ++l)
        for (std::size_t i = 0; i < fe.levels[static_cast<std::size_t>(l)].size(); ++i)
            CHECK(fe.levels[static_cast<std::size_t>(l)][i] ==
                  -m.pressure(l)[i]);  // beta = 1: exact sign flip
    CHECK(fe.beta_levels == std::vector<double>{0.5, 1.0});

    auto fe2 = free_energies(m, 2.5);
    CHECK(fe2.identity_gap < 1e-12);
    CHECK(std::abs(fe2.root_free_energy - (-std::log(4.0) / 2.5)) < 1e-12);

    CHECK_THROWS_AS(free_energies(m, 0.0), ConfigError);
    CHECK_THROWS_AS(free_energies(m, -1.0), ConfigError);
}

TEST_CASE("weighted builds match the raw-domain oracle and handle dead branches") {
    for (int k = 0; k < 10; ++k) {
        auto g = RngStream::derive(kSeed, {stream_tag::kInstance, 400 + static_cast<std::uint64_t>(k)});
        ProductSpace sp = random_space(g);
        auto Hv = oracle::random_H(g, sp.total_size(), -2.0, 2.0);
        auto zr = oracle::random_zetas(g, sp.depth(), 0.2, 2.5);
        std::vector<double> zd(zr.rbegin(), zr.rend());
        auto q = oracle::random_conditional_tables(g, sp);
        auto m = build_weighted_measure(CostTensor(sp, Hv), ScaleParams(sp, zd),
                                        LevelWeights::from_conditional_tables(sp, q));
        auto om = oracle::build(sp, Hv, zr, &q);
        for (std::int64_t i = 0; i < sp.total_size(); ++i)
            CHECK(std::abs(m.joint()[static_cast<std::size_t>(i)] - om.joint[static_cast<std::size_t>(i)]) < 1e-12);
        CHECK(std::abs(m.log_z_root() - om.log_z_root) < 1e-11 * std::max(1.0, std::abs(om.log_z_root)));
        auto fe = free_energies(m, 1.0);  // reconstruction must honour the weights
        CHECK(fe.identity_gap < 1e-12);
    }

    // explicit unit weights give bitwise the same measure as no weights
    auto inst = oracle::worked_example();
    CostTensor H(inst.space, inst.H);
    ScaleParams z(inst.space, inst.zetas_deepest_first);
    auto plain = build_measure(H, z);
    auto ones = build_weighted_measure(H, z, LevelWeights::ones(inst.space));
    for (std::size_t i = 0; i < plain.joint().size(); ++i) CHECK(plain.joint()[i] == ones.joint()[i]);

    // a slice whose weights all vanish carries no mass but the rest renormalizes
    std::vector<std::vector<double>> q{{0.5, 0.5}, {0.0, 0.0, 0.3, 0.7}};
    auto dead = build_weighted_measure(H, z, LevelWeights::from_conditional_tables(inst.space, q));
    CHECK(dead.joint()[0] == 0.0);
    CHECK(dead.joint()[1] == 0.0);
    CHECK(std::abs(dead.joint()[2] + dead.joint()[3] - 1.0) < 1e-12);

    // all weights vanishing is an error
    std::vector<std::vector<double>> all_dead{{0.0, 0.0}, {0.0, 0.0, 0.0, 0.0}};
    CHECK_THROWS_AS(
        build_weighted_measure(H, z, LevelWeights::from_conditional_tables(inst.space, all_dead)),
        NumericError);
}

TEST_CASE("uniform weights divide each level sum by the level size") {
    auto inst = oracle::worked_example();
    CostTensor H(inst.space, inst.H);
    ScaleParams z(inst.space, inst.zetas_deepest_first);
    auto m = build_weighted_measure(H, z, LevelWeights::uniform(inst.space));
    // by hand: Z(x_1=a) = (1+3)/2 = 2, Z(x_1=b) = (2+2)/2 = 2,
    // log_z_root = log((2^{1/2} + 2^{1/2})/2) = log sqrt(2)
    CHECK(std::abs(m.log_z_root() - 0.5 * std::log(2.0)) < 1e-12);
    std::vector<std::vector<double>> w{{0.5, 0.5}, {0.25, 0.25, 0.25, 0.25}};
    auto om = oracle::build(inst.space, inst.H, {0.5, 1.0}, &w);
    for (std::size_t i = 0; i < om.joint.size(); ++i)
        CHECK(std::abs(m.joint()[i] - om.joint[i]) < 1e-12);
}

TEST_CASE("mismatched spaces and depths are rejected") {
    ProductSpace sp({2, 2});
    ProductSpace other({3, 2});
    CostTensor H(sp, std::vector<double>(4, 0.0));
    ScaleParams z_other(other, {1.0, 1.0});
    CHECK_THROWS_AS(build_measure(CostTensor(ProductSpace({4}), std::vector<double>(4, 0.0)), z_other),
                    ConfigError);

    auto m = build_measure(H, ScaleParams(sp, {1.0, 1.0}));
    Observable f_other = Observable::constant(other, 1.0);
    CHECK_THROWS_AS(average(m, f_other), ConfigError);
    CHECK_THROWS_AS(conditional_average(m, f_other, 1), ConfigError);
    CHECK_THROWS_AS(tilted_pressure(H, ScaleParams(sp, {1.0, 1.0}), f_other, 0.1), ConfigError);

    CHECK_THROWS_AS(m.pressure(3), ConfigError);
    CHECK_THROWS_AS(m.conditional(0), ConfigError);
    CHECK_THROWS_AS(m.marginal(-1), ConfigError);
    CHECK_THROWS_AS(m.joint_at(-1), ConfigError);
    CHECK_THROWS_AS(m.joint_at(4), ConfigError);
}
