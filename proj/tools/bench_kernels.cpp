// Timing harness for the measure-construction kernels: serial pass vs the
// OpenMP-backed parallel_for, on spaces large enough for the per-level sweeps
// to dominate. Also cross-checks that both paths emit bitwise-identical
// tables, which is the property the unit tests rely on at desk scale.
//
//   bench_kernels [--threads N] [--repeats K] [--seed S]
//
// With --threads 0 (default) the parallel pass uses every hardware thread.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "multiscale/entropy.hpp"
#include "multiscale/measure.hpp"
#include "multiscale/parallel.hpp"
#include "multiscale/rng.hpp"
#include "multiscale/space.hpp"

using namespace multiscale;

namespace {

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::vector<double> random_costs(RngStream& g, std::int64_t n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = -8.0 + 16.0 * g.next_unit();
    return v;
}

struct Case {
    const char* label;
    std::vector<std::int64_t> sizes;  // deepest first
};

}  // namespace

int main(int argc, char** argv) {
    int threads = 0;
    int repeats = 3;
    std::uint64_t seed = 1;
    for (int i = 1; i < argc; ++i) {
        auto grab = [&](const char* flag) -> const char* {
            if (std::strcmp(argv[i], flag) != 0) return nullptr;
            if (i + 1 >= argc) {
                std::fprintf(stderr, "%s needs a value\n", flag);
                std::exit(2);
            }
            return argv[++i];
        };
        if (const char* v = grab("--threads"))
            threads = std::atoi(v);
        else if (const char* v = grab("--repeats"))
            repeats = std::max(1, std::atoi(v));
        else if (const char* v = grab("--seed"))
            seed = std::strtoull(v, nullptr, 10);
        else {
            std::fprintf(stderr, "usage: %s [--threads N] [--repeats K] [--seed S]\n",
                         argv[0]);
            return 2;
        }
    }
    const int wide = exec::resolve_threads(threads);
    std::printf("hardware threads: %d, parallel pass uses %d\n", exec::hardware_threads(),
                wide);

    const Case cases[] = {
        {"depth 2,  1e6 states", {1000, 1000}},
        {"depth 3,  1.3e6 states", {110, 110, 110}},
        {"depth 5,  1.0e6 states", {16, 16, 16, 16, 16}},
    };

    std::printf("%-24s %12s %12s %9s %9s\n", "case", "serial s", "parallel s", "speedup",
                "match");
    for (const Case& c : cases) {
        ProductSpace sp(c.sizes);
        RngStream g = RngStream::derive(seed, {stream_tag::kInstance, 0});
        CostTensor H(sp, random_costs(g, sp.total_size()));
        std::vector<double> zs(c.sizes.size());
        for (double& z : zs) z = 0.1 + 2.0 * g.next_unit();
        ScaleParams zetas(sp, zs);

        double t_serial = 1e300;
        double t_wide = 1e300;
        MultiscaleMeasure* a = nullptr;
        MultiscaleMeasure* b = nullptr;
        for (int rep = 0; rep < repeats; ++rep) {
            double t0 = now_seconds();
            auto* m1 = new MultiscaleMeasure(build_measure(H, zetas, 1));
            t_serial = std::min(t_serial, now_seconds() - t0);
            t0 = now_seconds();
            auto* m2 = new MultiscaleMeasure(build_measure(H, zetas, wide));
            t_wide = std::min(t_wide, now_seconds() - t0);
            delete a;
            delete b;
            a = m1;
            b = m2;
        }
        const bool match = a->joint() == b->joint() && a->log_z_root() == b->log_z_root();
        std::printf("%-24s %12.4f %12.4f %8.2fx %9s\n", c.label, t_serial, t_wide,
                    t_serial / t_wide, match ? "bitwise" : "DIFFER");
        if (!match) {
            delete a;
            delete b;
            return 1;
        }
        delete a;
        delete b;
    }
    return 0;
}
