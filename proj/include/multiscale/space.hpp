#pragma once

#include <cstdint>
#include <vector>

namespace multiscale {

// Finite product space X = X_r x ... x X_1 of r levels.
//
// Level numbering follows the hierarchy: level 1 is the root (coarsest) scale,
// level r the deepest. Configs and constructors list level sizes deepest level
// first, (|X_r|, ..., |X_1|); internally everything is stored root-first.
//
// Flat indexing: x_1 is the slowest-varying digit and x_r the fastest, i.e.
//   flat = (((x_1 * s_2 + x_2) * s_3 + x_3) ... ) * s_r + x_r .
// Consequence used throughout: all states sharing the prefix (x_1,...,x_l)
// form one contiguous block of length suffix_count(l), so marginalizing the
// deep levels is a contiguous reduction, and the level-l tables (pressures,
// conditionals, marginals) are indexed by prefix_index = flat / suffix_count(l).
class ProductSpace {
  public:
    // sizes_deepest_first = (|X_r|, ..., |X_1|), each >= 1.
    explicit ProductSpace(const std::vector<std::int64_t>& sizes_deepest_first);

    int depth() const { return static_cast<int>(sizes_.size()); }
    std::int64_t total_size() const { return prefix_count_.back(); }

    // Size of X_l, 1 <= l <= r.
    std::int64_t level_size(int level) const { return sizes_[static_cast<std::size_t>(level - 1)]; }

    // Number of distinct prefixes (x_1,...,x_l); equals 1 at l=0 and
    // total_size at l=r. This is the length of every level-l table.
    std::int64_t prefix_count(int level) const { return prefix_count_[static_cast<std::size_t>(level)]; }

    // Number of states below a fixed prefix (x_1,...,x_l).
    std::int64_t suffix_count(int level) const { return suffix_count_[static_cast<std::size_t>(level)]; }

    std::vector<std::int64_t> sizes_deepest_first() const;

    // coords[l-1] = x_l, root-first.
    std::int64_t encode(const std::vector<std::int64_t>& coords) const;
    std::vector<std::int64_t> decode(std::int64_t flat) const;

    // Digit x_l of a flat index.
    std::int64_t coordinate(std::int64_t flat, int level) const {
        return (flat / suffix_count(level)) % level_size(level);
    }

    // Index of the prefix (x_1,...,x_l) of `flat` within the level-l tables.
    std::int64_t prefix_index(std::int64_t flat, int level) const { return flat / suffix_count(level); }

    // Level-(l-1) parent of a level-l prefix node.
    std::int64_t parent_of(std::int64_t prefix, int level) const { return prefix / level_size(level); }

    // Level-(l+1) children of a level-l prefix node occupy
    // [first_child(node, level), first_child(node + 1, level)).
    std::int64_t first_child(std::int64_t prefix, int level) const {
        return prefix * level_size(level + 1);
    }

    bool operator==(const ProductSpace& other) const { return sizes_ == other.sizes_; }
    bool operator!=(const ProductSpace& other) const { return !(*this == other); }

  private:
    std::vector<std::int64_t> sizes_;         // root-first: sizes_[l-1] = |X_l|
    std::vector<std::int64_t> prefix_count_;  // prefix_count_[l] = s_1 * ... * s_l
    std::vector<std::int64_t> suffix_count_;  // suffix_count_[l] = s_{l+1} * ... * s_r
};

// Hamiltonian H : X -> R as a dense table over flat indices. Weights go as
// e^{+zeta H}, so larger H means more probable.
struct CostTensor {
    CostTensor(ProductSpace space_in, std::vector<double> values_in);

    ProductSpace space;
    std::vector<double> values;  // length space.total_size(), all finite
};

// Scale parameters (zeta_r, ..., zeta_1), deepest first to match configs.
struct ScaleParams {
    ScaleParams(const ProductSpace& space_in, std::vector<double> zetas_deepest_first);

    // zeta_l, 1 <= l <= r.
    double zeta(int level) const { return zetas_root_first[static_cast<std::size_t>(level - 1)]; }

    std::vector<double> zetas_root_first;
    std::vector<double> zetas_deepest_first() const;
};

// Real observable f over X. depends_up_to = l declares that f reads only the
// coordinates (x_1,...,x_l); the constructor verifies f is constant across
// each deep block, so averaging code may trust the declaration.
class Observable {
  public:
    Observable(ProductSpace space_in, std::vector<double> values_in, int depends_up_to_in);

    static Observable constant(const ProductSpace& space, double c);
    // Lift a table over the level-l prefixes to a full observable.
    static Observable from_prefix_table(const ProductSpace& space, int level,
                                        const std::vector<double>& table);

    const ProductSpace& space() const { return space_; }
    const std::vector<double>& values() const { return values_; }
    int depends_up_to() const { return depends_up_to_; }
    double operator()(std::int64_t flat) const { return values_[static_cast<std::size_t>(flat)]; }

  private:
    ProductSpace space_;
    std::vector<double> values_;
    int depends_up_to_;
};

}  // namespace multiscale
