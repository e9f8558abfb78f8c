#pragma once

// Desk-scale acceptance suite: ten numbered quantitative checks covering the
// measure construction, the variational solver, the reinforced-sampling decay
// rates, and the cascade estimators. Each check pins its tolerances in code
// and derives every random quantity from the master seed, so a rerun with the
// same seed reproduces the identical pass/fail outcome and detail lines.
//
// The same checks back the tool's `selftest` command; the artifact bundle
// written there (and compared byte-for-byte by check 10) lives here too.

#include <cstdint>
#include <string>
#include <vector>

namespace multiscale::acceptance {

inline constexpr std::uint64_t kDefaultSeed = 20260815;
inline constexpr int kCriterionCount = 10;

// Wall-clock ceilings (seconds), part of each criterion's contract; index 0
// is unused. Enforced by the suite runners, never serialized into artifacts.
inline constexpr double kRuntimeCeilingSeconds[kCriterionCount + 1] = {
    0, 5, 1, 30, 30, 10, 60, 5, 120, 60, 1};

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    // Deterministic sub-check lines ("[ok] ..." / "[FAIL] ..."); free of wall
    // times so they can be serialized into artifacts.
    std::vector<std::string> details;
};

CriterionResult run_criterion(int id, std::uint64_t seed = kDefaultSeed);
std::vector<CriterionResult> run_all(std::uint64_t seed = kDefaultSeed);

// Writes one reduced-size output per tool command (measure report, solver
// report, decay ladder CSV, cascade CSV) with fixed internal sizes. Returns
// the file names written, relative to `dir`. Reruns with the same seed
// produce byte-identical files; check 10 asserts exactly that.
std::vector<std::string> write_artifact_bundle(const std::string& dir, std::uint64_t seed);

// JSON summary of a suite run (ids, names, pass flags, detail lines, seed,
// tool version). Contains no timing data.
std::string render_report_json(const std::vector<CriterionResult>& results,
                               std::uint64_t seed);

}  // namespace multiscale::acceptance
