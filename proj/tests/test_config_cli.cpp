// Config parsing, report utilities, and end-to-end runs of the msgibbs
// binary. Process tests locate the binary via MSGIBBS_BIN and the shipped
// configs via MSGIBBS_SCENARIOS (both injected by the test harness) and skip
// with a message when either is missing.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "multiscale/config.hpp"
#include "multiscale/errors.hpp"
#include "multiscale/report.hpp"
#include "multiscale/rng.hpp"

using namespace multiscale;
namespace fs = std::filesystem;

namespace {

std::string error_text(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const std::exception& err) {
        return err.what();
    }
    return "";
}

bool mentions(const std::string& text, const std::string& needle) {
    return text.find(needle) != std::string::npos;
}

const std::string kBuildConfig = R"({
  "schema_version": 1,
  "command": "build-measure",
  "seed": 42,
  "space": { "level_sizes": [3, 2] },
  "hamiltonian": { "kind": "uniform_random", "low": -2.0, "high": 2.0 },
  "build": { "zetas": [0.8, 0.4], "weights": "uniform", "beta": 2.0 }
})";

}  // namespace

TEST_CASE("a build config parses into the expected fields") {
    ExperimentConfig cfg = parse_config_text(kBuildConfig);
    CHECK(cfg.schema_version == 1);
    CHECK(cfg.command == "build-measure");
    CHECK(cfg.seed == 42);
    CHECK(cfg.space.level_sizes == std::vector<std::int64_t>{3, 2});
    CHECK(cfg.hamiltonian.kind == HamiltonianSpec::Kind::kUniformRandom);
    CHECK(cfg.hamiltonian.low == -2.0);
    CHECK(cfg.hamiltonian.high == 2.0);
    CHECK(cfg.build.zetas == std::vector<double>{0.8, 0.4});
    CHECK(cfg.build.uniform_weights);
    CHECK(cfg.build.beta == 2.0);
}

TEST_CASE("the full seed range survives parsing") {
    ExperimentConfig cfg = parse_config_text(R"({
      "schema_version": 1, "command": "build-measure", "seed": 18446744073709551615,
      "space": {"level_sizes": [2, 2]},
      "hamiltonian": {"kind": "reference_four_state"},
      "build": {"zetas": [1.0, 0.5]}
    })");
    CHECK(cfg.seed == 18446744073709551615ULL);
    // negative seeds are rejected rather than wrapped
    CHECK_THROWS_AS(parse_config_text(R"({
      "schema_version": 1, "command": "build-measure", "seed": -1,
      "space": {"level_sizes": [2, 2]},
      "hamiltonian": {"kind": "reference_four_state"},
      "build": {"zetas": [1.0, 0.5]}
    })"),
                    ConfigError);
}

TEST_CASE("malformed json reports the offending line") {
    const std::string broken = "{\n  \"schema_version\": 1,\n  \"command\": oops\n}";
    CHECK_THROWS_AS(parse_config_text(broken), ConfigError);
    CHECK(mentions(error_text([&] { parse_config_text(broken); }), "line 3"));
}

TEST_CASE("unknown keys are rejected at every nesting level") {
    auto with = [](const std::string& from, const std::string& to) {
        std::string text = kBuildConfig;
        text.replace(text.find(from), from.size(), to);
        return text;
    };
    // top level
    CHECK_THROWS_AS(parse_config_text(with("\"seed\": 42", "\"seed\": 42, \"extra\": 1")),
                    ConfigError);
    // inside space
    CHECK_THROWS_AS(parse_config_text(with("[3, 2] }", "[3, 2], \"pad\": 0 }")), ConfigError);
    // inside hamiltonian: 'values' belongs to the explicit kind only
    CHECK_THROWS_AS(
        parse_config_text(with("\"high\": 2.0", "\"high\": 2.0, \"values\": [1]")),
        ConfigError);
    // inside build
    CHECK_THROWS_AS(parse_config_text(with("\"beta\": 2.0", "\"beta\": 2.0, \"mu\": 1")),
                    ConfigError);
}

TEST_CASE("schema version and command gating") {
    auto swap = [](const std::string& from, const std::string& to) {
        std::string text = kBuildConfig;
        text.replace(text.find(from), from.size(), to);
        return parse_config_text(text);
    };
    CHECK_THROWS_AS(swap("\"schema_version\": 1", "\"schema_version\": 2"), ConfigError);
    CHECK_THROWS_AS(swap("\"command\": \"build-measure\"", "\"command\": \"tabulate\""),
                    ConfigError);
    // a build-measure config must not carry sections of other commands
    CHECK_THROWS_AS(
        swap("\"build\": { \"zetas\": [0.8, 0.4], \"weights\": \"uniform\", \"beta\": 2.0 }",
             "\"build\": { \"zetas\": [0.8, 0.4] }, \"solve\": { \"mode\": \"multipliers\" }"),
        ConfigError);
    // ... and its own section is mandatory
    const std::string text = error_text([&] {
        swap("\"build\": { \"zetas\": [0.8, 0.4], \"weights\": \"uniform\", \"beta\": 2.0 }",
             "\"build\": { }");
    });
    CHECK(mentions(text, "zetas"));
}

TEST_CASE("simulate configs never carry a hamiltonian") {
    CHECK_THROWS_AS(parse_config_text(R"({
      "schema_version": 1, "command": "simulate", "seed": 1,
      "space": {"level_sizes": [2, 2]},
      "hamiltonian": {"kind": "reference_four_state"},
      "simulate": {"gammas": [0.0, 0.0], "target_joint": [0.25, 0.25, 0.25, 0.25],
                   "n_ladder": [100]}
    })"),
                    ConfigError);
}

TEST_CASE("hamiltonian realization honours each kind") {
    ProductSpace space({3, 2});

    SUBCASE("explicit values must match the space size") {
        HamiltonianSpec spec;
        spec.kind = HamiltonianSpec::Kind::kExplicit;
        spec.values = {1.0, 2.0, 3.0};
        CHECK_THROWS_AS(realize_hamiltonian(space, spec, 1), ConfigError);
        spec.values = {1, 2, 3, 4, 5, 6};
        CHECK(realize_hamiltonian(space, spec, 1).values == spec.values);
    }
    SUBCASE("uniform draws stay in range and depend only on the seed") {
        HamiltonianSpec spec;
        spec.kind = HamiltonianSpec::Kind::kUniformRandom;
        spec.low = -3.0;
        spec.high = -1.0;
        CostTensor a = realize_hamiltonian(space, spec, 9);
        CostTensor b = realize_hamiltonian(space, spec, 9);
        CostTensor c = realize_hamiltonian(space, spec, 10);
        CHECK(a.values == b.values);
        CHECK(a.values != c.values);
        for (double v : a.values) {
            CHECK(v >= spec.low);
            CHECK(v < spec.high);
        }
    }
    SUBCASE("the four-state reference instance requires a 2x2 space") {
        HamiltonianSpec spec;
        spec.kind = HamiltonianSpec::Kind::kReferenceFourState;
        CHECK_THROWS_AS(realize_hamiltonian(space, spec, 1), ConfigError);
        CostTensor h = realize_hamiltonian(ProductSpace({2, 2}), spec, 1);
        CHECK(h.values[0] == 0.0);
        CHECK(h.values[1] == doctest::Approx(std::log(3.0)).epsilon(1e-15));
    }
}

TEST_CASE("hash and formatting helpers behave as published") {
    // FNV-1a reference vectors
    CHECK(fnv1a64(std::string{}) == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64(std::string{"a"}) == 0xaf63dc4c8601ec8cULL);
    CHECK(hex64(0xcbf29ce484222325ULL) == "cbf29ce484222325");
    CHECK(hex64(0x1ULL) == "0000000000000001");

    // shortest-round-trip doubles
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
    CHECK(format_double(-0.0) == "-0");
    CHECK(std::stod(format_double(1e300)) == 1e300);

    CHECK(render_csv({"a", "b"}, {{"1", "2"}, {"3", "4"}}) == "a,b\n1,2\n3,4\n");
    CHECK_THROWS(render_csv({"a", "b"}, {{"1"}}));
}

// ---- process-level runs -----------------------------------------------------

namespace {

struct CliFixture {
    std::string bin;
    fs::path scenarios;
    fs::path work;
    bool available = false;

    CliFixture() {
        const char* b = std::getenv("MSGIBBS_BIN");
        const char* s = std::getenv("MSGIBBS_SCENARIOS");
        if (b == nullptr || s == nullptr) return;
        bin = b;
        scenarios = s;
        work = fs::temp_directory_path() /
               ("msgibbs_cli_" + hex64(fnv1a64(bin + scenarios.string())));
        fs::remove_all(work);
        fs::create_directories(work);
        available = true;
    }
    ~CliFixture() {
        if (available) fs::remove_all(work);
    }

    int run(const std::string& args) const {
        const std::string cmd =
            "\"" + bin + "\" " + args + " > /dev/null 2> /dev/null";
        const int status = std::system(cmd.c_str());
        return status < 0 ? status : WEXITSTATUS(status);
    }
    std::string scenario(const std::string& name) const {
        return (scenarios / name).string();
    }
    std::string out(const std::string& tag) const { return (work / tag).string(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("the binary round-trips the shipped scenarios") {
    CliFixture cli;
    if (!cli.available) {
        MESSAGE("MSGIBBS_BIN / MSGIBBS_SCENARIOS not set; skipping process tests");
        return;
    }

    SUBCASE("build-measure succeeds and reruns byte-identically") {
        const std::string cfg = cli.scenario("build_reference.json");
        CHECK(cli.run("build-measure --config \"" + cfg + "\" --out " + cli.out("b1")) == 0);
        CHECK(cli.run("build-measure --config \"" + cfg + "\" --out " + cli.out("b2")) == 0);
        const std::string a = slurp(cli.out("b1") + "/measure.json");
        CHECK(a == slurp(cli.out("b2") + "/measure.json"));
        CHECK(mentions(a, "\"log_z_root\": 1.3862943611"));
        CHECK(mentions(a, "\"config_hash\""));
    }

    SUBCASE("solve handles both modes and flags infeasible targets") {
        CHECK(cli.run("solve --config \"" + cli.scenario("solve_round_trip.json") +
                      "\" --out " + cli.out("s1")) == 0);
        CHECK(cli.run("solve --config \"" + cli.scenario("solve_constrained.json") +
                      "\" --out " + cli.out("s2")) == 0);
        CHECK(mentions(slurp(cli.out("s2") + "/solve.json"), "\"mu\": 0.89999999"));
        CHECK(cli.run("solve --config \"" + cli.scenario("solve_infeasible.json") +
                      "\" --out " + cli.out("s3")) == 4);
    }

    SUBCASE("simulate writes the decay ladder") {
        CHECK(cli.run("simulate --config \"" + cli.scenario("simulate_flat.json") +
                      "\" --out " + cli.out("l1")) == 0);
        const std::string csv = slurp(cli.out("l1") + "/ladder.csv");
        CHECK(mentions(csv, "n,neg_log_prob_over_n,rate,gap"));
        CHECK(mentions(csv, "10000"));
        CHECK(mentions(slurp(cli.out("l1") + "/report.json"), "\"realizations\""));
    }

    SUBCASE("cascade honours the master seed") {
        const std::string cfg = cli.scenario("cascade_grid.json");
        CHECK(cli.run("cascade --config \"" + cfg + "\" --out " + cli.out("c1")) == 0);
        CHECK(cli.run("cascade --config \"" + cfg + "\" --out " + cli.out("c2")) == 0);
        CHECK(cli.run("cascade --config \"" + cfg + "\" --out " + cli.out("c3") +
                      " --seed 7") == 0);
        const std::string first = slurp(cli.out("c1") + "/cascade.csv");
        CHECK(first == slurp(cli.out("c2") + "/cascade.csv"));
        CHECK(first != slurp(cli.out("c3") + "/cascade.csv"));
        CHECK(mentions(slurp(cli.out("c1") + "/report.json"), "\"doubling_pass\": true"));
    }

    SUBCASE("config errors exit with status 2") {
        // subcommand / config mismatch
        CHECK(cli.run("solve --config \"" + cli.scenario("build_reference.json") +
                      "\" --out " + cli.out("e1")) == 2);
        // unreadable path
        CHECK(cli.run("solve --config \"" + cli.out("nope.json") + "\" --out " +
                      cli.out("e2")) == 2);
        // malformed file
        const fs::path bad = cli.work / "bad.json";
        write_text_file(bad.string(), "{ not json\n");
        CHECK(cli.run("build-measure --config \"" + bad.string() + "\" --out " +
                      cli.out("e3")) == 2);
        // unknown flag
        CHECK(cli.run("cascade --frobnicate") == 2);
    }
}
