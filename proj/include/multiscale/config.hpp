#pragma once

// JSON experiment configuration for the msgibbs tool.
//
// Schema (version 1, unknown keys rejected at every nesting level):
//
//   {
//     "schema_version": 1,
//     "command": "build-measure" | "solve" | "simulate" | "cascade",
//     "seed": <uint64>,                     // master seed; --seed overrides
//     "space": {"level_sizes": [..]},       // deepest level first, like the API
//     "hamiltonian": {...},                 // absent for "simulate"
//     "<command section>": {...}
//   }
//
// Hamiltonian kinds:
//   {"kind": "explicit", "values": [..]}                  one entry per state
//   {"kind": "uniform_random", "low": a, "high": b}       drawn from the master
//       seed on a dedicated instance stream, so the same seed always names the
//       same random cost tensor no matter which command consumes it
//   {"kind": "reference_four_state"}                      the 2x2 instance with
//       state costs (0, log 3, log 2, log 2) used throughout the test suite
//
// All per-level arrays (level_sizes, zetas, gammas) list the deepest level
// first, matching ProductSpace / ScaleParams / ReinforcementParams.

#include <cstdint>
#include <string>
#include <vector>

#include "multiscale/space.hpp"

namespace multiscale {

struct SpaceSpec {
    std::vector<std::int64_t> level_sizes;  // deepest first
};

struct HamiltonianSpec {
    enum class Kind { kExplicit, kUniformRandom, kReferenceFourState };
    Kind kind = Kind::kExplicit;
    std::vector<double> values;  // kExplicit
    double low = -1.0;           // kUniformRandom
    double high = 1.0;
};

struct BuildSection {
    std::vector<double> zetas;     // deepest first, one per level
    bool uniform_weights = false;  // default: unit weights
    double beta = 1.0;             // free-energy report temperature
};

struct SolveSection {
    enum class Mode { kMultipliers, kConstrained };
    Mode mode = Mode::kMultipliers;
    // kMultipliers
    double mu = 1.0;
    std::vector<double> gammas;  // levels 2..r, deepest first
    // kConstrained (two-scale only)
    double energy = 0.0;
    double level2_entropy = 0.0;
};

struct SimulateSection {
    std::vector<double> base_joint;    // empty: uniform base measure
    std::vector<double> gammas;        // deepest first, one per level
    std::vector<double> target_joint;  // distribution whose decay rate is probed
    std::vector<std::int64_t> n_ladder;
    int cascade_runs = 0;  // optional sampled-cascade realizations in the report
};

struct CascadeSection {
    std::vector<double> zetas;  // grid of reinforcement strengths in (0, 1)
    std::int64_t crp_n = 1000;
    int replicates = 100;
    bool doubling_check = false;  // rerun at 2 * crp_n and flag the shift
    bool average_cost = false;    // also estimate the mean state cost
    int level1_indicator = -1;    // >= 0: also estimate P(root coordinate == value)
};

struct ExperimentConfig {
    int schema_version = 1;
    std::string command;
    std::uint64_t seed = 0;
    SpaceSpec space;
    HamiltonianSpec hamiltonian;  // meaningful unless command == "simulate"
    BuildSection build;
    SolveSection solve;
    SimulateSection simulate;
    CascadeSection cascade;
};

// Both throw ConfigError carrying a line or field diagnostic.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

ProductSpace make_space(const SpaceSpec& spec);

// Materializes the cost tensor; random kinds draw from a stream derived as
// derive(seed, {stream_tag::kInstance}), independent of every sampling stream.
CostTensor realize_hamiltonian(const ProductSpace& space, const HamiltonianSpec& spec,
                               std::uint64_t seed);

}  // namespace multiscale
