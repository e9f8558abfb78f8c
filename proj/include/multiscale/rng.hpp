#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace multiscale {

// Counter-based deterministic RNG.
//
// One 64-bit master seed drives every stochastic component. Independent
// streams are derived by hash-chaining a path of 64-bit labels onto the master
// key (e.g. {kReplicate, rep_index} or {kScatter, level, node}), so
//   * replicates can run in any thread order and still reproduce bitwise,
//   * a draw consumed by one component never shifts another component's stream.
// Outputs come from the splitmix64 finalizer applied to (key, counter); the
// generator is stateless apart from the counter, and its output sequence is a
// documented function of (master seed, path), independent of platform and
// standard library. All samplers are implemented here for the same reason:
// std::*_distribution is not bit-portable across standard libraries.
class RngStream {
  public:
    explicit RngStream(std::uint64_t key) : key_(key) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Derive a child key from `master` by absorbing each path element in order.
    static RngStream derive(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
        std::uint64_t k = mix(master);
        for (std::uint64_t e : path) k = mix(k ^ (e + 0x632be59bd9b4e019ULL));
        return RngStream(k);
    }

    std::uint64_t next_u64() { return mix(key_ ^ (counter_++ * 0xd1b54a32d192ed03ULL)); }

    // Uniform double in [0,1) with 53 significant bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased integer in [0, n) by rejection.
    std::int64_t next_below(std::int64_t n) {
        if (n <= 0) throw std::invalid_argument("RngStream::next_below: n must be positive");
        const std::uint64_t un = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return static_cast<std::int64_t>(v % un);
    }

    bool bernoulli(double p) { return next_unit() < p; }

    // Binomial(n, p) as an explicit Bernoulli count. O(n), fine at desk scale,
    // and trivially reproducible.
    std::int64_t binomial(std::int64_t n, double p) {
        if (n < 0) throw std::invalid_argument("RngStream::binomial: negative count");
        if (p <= 0.0) return 0;
        if (p >= 1.0) return n;
        std::int64_t k = 0;
        for (std::int64_t i = 0; i < n; ++i) k += bernoulli(p) ? 1 : 0;
        return k;
    }

    // Multinomial(n, probs) via sequential conditional binomials.
    std::vector<std::int64_t> multinomial(std::int64_t n, const std::vector<double>& probs) {
        std::vector<std::int64_t> counts(probs.size(), 0);
        double rest = 1.0;
        std::int64_t left = n;
        for (std::size_t i = 0; i + 1 < probs.size() && left > 0; ++i) {
            const double cond = rest > 0.0 ? probs[i] / rest : 0.0;
            const std::int64_t c = binomial(left, cond < 1.0 ? cond : 1.0);
            counts[i] = c;
            left -= c;
            rest -= probs[i];
        }
        if (!probs.empty()) counts[probs.size() - 1] += left;
        return counts;
    }

  private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

// Stream-path tags, so distinct components can never collide on a derived key.
namespace stream_tag {
constexpr std::uint64_t kScatter = 1;    // multinomial scatter at (level, node)
constexpr std::uint64_t kReinforce = 2;  // duplication step at (level, node)
constexpr std::uint64_t kReplicate = 3;  // Monte-Carlo replicate index
constexpr std::uint64_t kAtoms = 4;      // cascade atom draws y_alpha
constexpr std::uint64_t kCrp = 5;        // restaurant-process ball placement
constexpr std::uint64_t kCloud = 6;      // perturbation clouds in tests/acceptance
constexpr std::uint64_t kInstance = 7;   // random problem instances in tests/acceptance
}  // namespace stream_tag

}  // namespace multiscale
