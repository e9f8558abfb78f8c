#include "multiscale/config.hpp"

#include <json.hpp>

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>

#include "multiscale/errors.hpp"
#include "multiscale/report.hpp"
#include "multiscale/rng.hpp"

namespace multiscale {
namespace {

using nlohmann::json;

// 1-based line number of a byte offset, for parse errors.
std::size_t line_of_offset(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw ConfigError("config field '" + field + "': " + what);
}

const json& require_field(const json& obj, const std::string& ctx, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(ctx.empty() ? key : ctx + "." + key, "missing required field");
    return *it;
}

// Strict schema: any key outside `allowed` is an error, so typos never pass
// silently and stale configs fail loudly after schema changes.
void check_keys(const json& obj, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed)
            if (item.key() == key) { known = true; break; }
        if (!known)
            fail(ctx.empty() ? item.key() : ctx + "." + item.key(), "unknown key");
    }
}

const json& expect_object(const json& value, const std::string& ctx) {
    if (!value.is_object()) fail(ctx, "expected an object");
    return value;
}

double as_number(const json& value, const std::string& ctx) {
    if (!value.is_number()) fail(ctx, "expected a number");
    double x = value.get<double>();
    if (!std::isfinite(x)) fail(ctx, "expected a finite number");
    return x;
}

std::int64_t as_integer(const json& value, const std::string& ctx) {
    if (!value.is_number_integer()) fail(ctx, "expected an integer");
    return value.get<std::int64_t>();
}

bool as_bool(const json& value, const std::string& ctx) {
    if (!value.is_boolean()) fail(ctx, "expected a boolean");
    return value.get<bool>();
}

std::string as_string(const json& value, const std::string& ctx) {
    if (!value.is_string()) fail(ctx, "expected a string");
    return value.get<std::string>();
}

std::vector<double> as_number_array(const json& value, const std::string& ctx) {
    if (!value.is_array()) fail(ctx, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(value.size());
    for (std::size_t i = 0; i < value.size(); ++i)
        out.push_back(as_number(value[i], ctx + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<std::int64_t> as_integer_array(const json& value, const std::string& ctx) {
    if (!value.is_array()) fail(ctx, "expected an array of integers");
    std::vector<std::int64_t> out;
    out.reserve(value.size());
    for (std::size_t i = 0; i < value.size(); ++i)
        out.push_back(as_integer(value[i], ctx + "[" + std::to_string(i) + "]"));
    return out;
}

SpaceSpec parse_space(const json& value) {
    expect_object(value, "space");
    check_keys(value, "space", {"level_sizes"});
    SpaceSpec spec;
    spec.level_sizes = as_integer_array(require_field(value, "space", "level_sizes"),
                                        "space.level_sizes");
    if (spec.level_sizes.empty()) fail("space.level_sizes", "must not be empty");
    return spec;
}

HamiltonianSpec parse_hamiltonian(const json& value) {
    expect_object(value, "hamiltonian");
    HamiltonianSpec spec;
    std::string kind = as_string(require_field(value, "hamiltonian", "kind"),
                                 "hamiltonian.kind");
    if (kind == "explicit") {
        spec.kind = HamiltonianSpec::Kind::kExplicit;
        check_keys(value, "hamiltonian", {"kind", "values"});
        spec.values = as_number_array(require_field(value, "hamiltonian", "values"),
                                      "hamiltonian.values");
    } else if (kind == "uniform_random") {
        spec.kind = HamiltonianSpec::Kind::kUniformRandom;
        check_keys(value, "hamiltonian", {"kind", "low", "high"});
        spec.low = as_number(require_field(value, "hamiltonian", "low"), "hamiltonian.low");
        spec.high = as_number(require_field(value, "hamiltonian", "high"), "hamiltonian.high");
        if (!(spec.low < spec.high)) fail("hamiltonian.high", "must exceed 'low'");
    } else if (kind == "reference_four_state") {
        spec.kind = HamiltonianSpec::Kind::kReferenceFourState;
        check_keys(value, "hamiltonian", {"kind"});
    } else {
        fail("hamiltonian.kind",
             "unknown kind '" + kind +
                 "' (expected explicit | uniform_random | reference_four_state)");
    }
    return spec;
}

BuildSection parse_build(const json& value) {
    expect_object(value, "build");
    check_keys(value, "build", {"zetas", "weights", "beta"});
    BuildSection section;
    section.zetas = as_number_array(require_field(value, "build", "zetas"), "build.zetas");
    if (auto it = value.find("weights"); it != value.end()) {
        std::string w = as_string(*it, "build.weights");
        if (w == "uniform")
            section.uniform_weights = true;
        else if (w != "ones")
            fail("build.weights", "expected 'ones' or 'uniform'");
    }
    if (auto it = value.find("beta"); it != value.end()) {
        section.beta = as_number(*it, "build.beta");
        if (!(section.beta > 0.0)) fail("build.beta", "must be positive");
    }
    return section;
}

SolveSection parse_solve(const json& value) {
    expect_object(value, "solve");
    SolveSection section;
    std::string mode = as_string(require_field(value, "solve", "mode"), "solve.mode");
    if (mode == "multipliers") {
        section.mode = SolveSection::Mode::kMultipliers;
        check_keys(value, "solve", {"mode", "mu", "gammas"});
        section.mu = as_number(require_field(value, "solve", "mu"), "solve.mu");
        section.gammas = as_number_array(require_field(value, "solve", "gammas"),
                                         "solve.gammas");
    } else if (mode == "constrained") {
        section.mode = SolveSection::Mode::kConstrained;
        check_keys(value, "solve", {"mode", "energy", "level2_entropy"});
        section.energy = as_number(require_field(value, "solve", "energy"), "solve.energy");
        section.level2_entropy = as_number(
            require_field(value, "solve", "level2_entropy"), "solve.level2_entropy");
    } else {
        fail("solve.mode", "expected 'multipliers' or 'constrained'");
    }
    return section;
}

SimulateSection parse_simulate(const json& value) {
    expect_object(value, "simulate");
    check_keys(value, "simulate",
               {"base_joint", "gammas", "target_joint", "n_ladder", "cascade_runs"});
    SimulateSection section;
    if (auto it = value.find("base_joint"); it != value.end())
        section.base_joint = as_number_array(*it, "simulate.base_joint");
    section.gammas = as_number_array(require_field(value, "simulate", "gammas"),
                                     "simulate.gammas");
    section.target_joint = as_number_array(
        require_field(value, "simulate", "target_joint"), "simulate.target_joint");
    section.n_ladder = as_integer_array(require_field(value, "simulate", "n_ladder"),
                                        "simulate.n_ladder");
    if (section.n_ladder.empty()) fail("simulate.n_ladder", "must not be empty");
    for (std::size_t i = 0; i < section.n_ladder.size(); ++i)
        if (section.n_ladder[i] <= 0)
            fail("simulate.n_ladder[" + std::to_string(i) + "]", "must be positive");
    if (auto it = value.find("cascade_runs"); it != value.end()) {
        std::int64_t runs = as_integer(*it, "simulate.cascade_runs");
        if (runs < 0) fail("simulate.cascade_runs", "must be non-negative");
        section.cascade_runs = static_cast<int>(runs);
    }
    return section;
}

CascadeSection parse_cascade(const json& value) {
    expect_object(value, "cascade");
    check_keys(value, "cascade",
               {"zetas", "crp_n", "replicates", "doubling_check", "average_cost",
                "level1_indicator"});
    CascadeSection section;
    section.zetas = as_number_array(require_field(value, "cascade", "zetas"),
                                    "cascade.zetas");
    if (section.zetas.empty()) fail("cascade.zetas", "must not be empty");
    section.crp_n = as_integer(require_field(value, "cascade", "crp_n"), "cascade.crp_n");
    if (section.crp_n <= 0) fail("cascade.crp_n", "must be positive");
    std::int64_t reps = as_integer(require_field(value, "cascade", "replicates"),
                                   "cascade.replicates");
    if (reps <= 0) fail("cascade.replicates", "must be positive");
    section.replicates = static_cast<int>(reps);
    if (auto it = value.find("doubling_check"); it != value.end())
        section.doubling_check = as_bool(*it, "cascade.doubling_check");
    if (auto it = value.find("average_cost"); it != value.end())
        section.average_cost = as_bool(*it, "cascade.average_cost");
    if (auto it = value.find("level1_indicator"); it != value.end()) {
        std::int64_t idx = as_integer(*it, "cascade.level1_indicator");
        if (idx < 0) fail("cascade.level1_indicator", "must be non-negative");
        section.level1_indicator = static_cast<int>(idx);
    }
    return section;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& err) {
        throw ConfigError("config parse error at line " +
                          std::to_string(line_of_offset(text, err.byte)) + ": " +
                          err.what());
    }
    expect_object(root, "<root>");
    check_keys(root, "",
               {"schema_version", "command", "seed", "space", "hamiltonian", "build",
                "solve", "simulate", "cascade"});

    ExperimentConfig cfg;
    std::int64_t version = as_integer(require_field(root, "", "schema_version"),
                                      "schema_version");
    if (version != 1)
        fail("schema_version", "unsupported version " + std::to_string(version) +
                                   " (this tool reads version 1)");
    cfg.schema_version = 1;

    cfg.command = as_string(require_field(root, "", "command"), "command");
    const json& seed = require_field(root, "", "seed");
    if (!seed.is_number_unsigned()) fail("seed", "expected an unsigned integer");
    cfg.seed = seed.get<std::uint64_t>();
    cfg.space = parse_space(require_field(root, "", "space"));

    // Exactly the section named by `command` may appear; every command except
    // the pure sampling one also needs a Hamiltonian.
    auto forbid = [&root](const char* key, const std::string& cmd) {
        if (root.contains(key))
            fail(key, "not allowed when command is '" + cmd + "'");
    };
    if (cfg.command == "build-measure") {
        cfg.hamiltonian = parse_hamiltonian(require_field(root, "", "hamiltonian"));
        cfg.build = parse_build(require_field(root, "", "build"));
        forbid("solve", cfg.command);
        forbid("simulate", cfg.command);
        forbid("cascade", cfg.command);
    } else if (cfg.command == "solve") {
        cfg.hamiltonian = parse_hamiltonian(require_field(root, "", "hamiltonian"));
        cfg.solve = parse_solve(require_field(root, "", "solve"));
        forbid("build", cfg.command);
        forbid("simulate", cfg.command);
        forbid("cascade", cfg.command);
    } else if (cfg.command == "simulate") {
        forbid("hamiltonian", cfg.command);
        cfg.simulate = parse_simulate(require_field(root, "", "simulate"));
        forbid("build", cfg.command);
        forbid("solve", cfg.command);
        forbid("cascade", cfg.command);
    } else if (cfg.command == "cascade") {
        cfg.hamiltonian = parse_hamiltonian(require_field(root, "", "hamiltonian"));
        cfg.cascade = parse_cascade(require_field(root, "", "cascade"));
        forbid("build", cfg.command);
        forbid("solve", cfg.command);
        forbid("simulate", cfg.command);
    } else {
        fail("command", "unknown command '" + cfg.command +
                            "' (expected build-measure | solve | simulate | cascade)");
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::string bytes;
    try {
        bytes = read_file_bytes(path);
    } catch (const std::exception& err) {
        throw ConfigError(err.what());
    }
    return parse_config_text(bytes);
}

ProductSpace make_space(const SpaceSpec& spec) {
    try {
        return ProductSpace(spec.level_sizes);
    } catch (const std::exception& err) {
        throw ConfigError(std::string("config field 'space.level_sizes': ") + err.what());
    }
}

CostTensor realize_hamiltonian(const ProductSpace& space, const HamiltonianSpec& spec,
                               std::uint64_t seed) {
    switch (spec.kind) {
        case HamiltonianSpec::Kind::kExplicit: {
            if (static_cast<std::int64_t>(spec.values.size()) != space.total_size())
                fail("hamiltonian.values",
                     "expected " + std::to_string(space.total_size()) +
                         " entries for this space, got " + std::to_string(spec.values.size()));
            return CostTensor(space, spec.values);
        }
        case HamiltonianSpec::Kind::kUniformRandom: {
            RngStream stream = RngStream::derive(seed, {stream_tag::kInstance});
            std::vector<double> values(static_cast<std::size_t>(space.total_size()));
            for (double& v : values) v = spec.low + (spec.high - spec.low) * stream.next_unit();
            return CostTensor(space, values);
        }
        case HamiltonianSpec::Kind::kReferenceFourState: {
            if (space.sizes_deepest_first() != std::vector<std::int64_t>{2, 2})
                fail("hamiltonian.kind",
                     "reference_four_state requires space.level_sizes == [2, 2]");
            return CostTensor(space,
                              {0.0, std::log(3.0), std::log(2.0), std::log(2.0)});
        }
    }
    throw ConfigError("config field 'hamiltonian.kind': unhandled kind");
}

}  // namespace multiscale
