#include "multiscale/space.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "multiscale/errors.hpp"

namespace multiscale {

ProductSpace::ProductSpace(const std::vector<std::int64_t>& sizes_deepest_first) {
    if (sizes_deepest_first.empty()) throw ConfigError("ProductSpace: need at least one level");
    sizes_.assign(sizes_deepest_first.rbegin(), sizes_deepest_first.rend());
    prefix_count_.assign(sizes_.size() + 1, 1);
    for (std::size_t l = 0; l < sizes_.size(); ++l) {
        if (sizes_[l] < 1)
            throw ConfigError("ProductSpace: level size must be >= 1, got " + std::to_string(sizes_[l]));
        if (prefix_count_[l] > std::numeric_limits<std::int64_t>::max() / sizes_[l])
            throw ConfigError("ProductSpace: total size overflows 64-bit index space");
        prefix_count_[l + 1] = prefix_count_[l] * sizes_[l];
    }
    suffix_count_.assign(sizes_.size() + 1, 1);
    for (std::size_t l = sizes_.size(); l-- > 0;) suffix_count_[l] = suffix_count_[l + 1] * sizes_[l];
}

std::vector<std::int64_t> ProductSpace::sizes_deepest_first() const {
    return std::vector<std::int64_t>(sizes_.rbegin(), sizes_.rend());
}

std::int64_t ProductSpace::encode(const std::vector<std::int64_t>& coords) const {
    if (coords.size() != sizes_.size())
        throw ConfigError("ProductSpace::encode: expected " + std::to_string(sizes_.size()) +
                          " coordinates, got " + std::to_string(coords.size()));
    std::int64_t flat = 0;
    for (std::size_t l = 0; l < sizes_.size(); ++l) {
        if (coords[l] < 0 || coords[l] >= sizes_[l])
            throw ConfigError("ProductSpace::encode: coordinate " + std::to_string(coords[l]) +
                              " out of range at level " + std::to_string(l + 1));
        flat = flat * sizes_[l] + coords[l];
    }
    return flat;
}

std::vector<std::int64_t> ProductSpace::decode(std::int64_t flat) const {
    if (flat < 0 || flat >= total_size())
        throw ConfigError("ProductSpace::decode: flat index " + std::to_string(flat) + " out of range");
    std::vector<std::int64_t> coords(sizes_.size());
    for (std::size_t l = sizes_.size(); l-- > 0;) {
        coords[l] = flat % sizes_[l];
        flat /= sizes_[l];
    }
    return coords;
}

CostTensor::CostTensor(ProductSpace space_in, std::vector<double> values_in)
    : space(std::move(space_in)), values(std::move(values_in)) {
    if (static_cast<std::int64_t>(values.size()) != space.total_size())
        throw ConfigError("CostTensor: expected " + std::to_string(space.total_size()) +
                          " values, got " + std::to_string(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw ConfigError("CostTensor: non-finite entry at flat index " + std::to_string(i));
}

ScaleParams::ScaleParams(const ProductSpace& space_in, std::vector<double> zetas_deepest_first) {
    if (static_cast<int>(zetas_deepest_first.size()) != space_in.depth())
        throw ConfigError("ScaleParams: expected " + std::to_string(space_in.depth()) +
                          " scale parameters, got " + std::to_string(zetas_deepest_first.size()));
    zetas_root_first.assign(zetas_deepest_first.rbegin(), zetas_deepest_first.rend());
    for (std::size_t l = 0; l < zetas_root_first.size(); ++l)
        if (!(zetas_root_first[l] > 0.0) || !std::isfinite(zetas_root_first[l]))
            throw ConfigError("ScaleParams: zeta at level " + std::to_string(l + 1) +
                              " must be a positive finite real");
}

std::vector<double> ScaleParams::zetas_deepest_first() const {
    return std::vector<double>(zetas_root_first.rbegin(), zetas_root_first.rend());
}

Observable::Observable(ProductSpace space_in, std::vector<double> values_in, int depends_up_to_in)
    : space_(std::move(space_in)), values_(std::move(values_in)), depends_up_to_(depends_up_to_in) {
    if (static_cast<std::int64_t>(values_.size()) != space_.total_size())
        throw ConfigError("Observable: expected " + std::to_string(space_.total_size()) +
                          " values, got " + std::to_string(values_.size()));
    if (depends_up_to_ < 0 || depends_up_to_ > space_.depth())
        throw ConfigError("Observable: depends_up_to must lie in [0, depth]");
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (!std::isfinite(values_[i]))
            throw ConfigError("Observable: non-finite entry at flat index " + std::to_string(i));
    // The declared locality must hold exactly: within each block sharing the
    // prefix (x_1,...,x_l) the value may not vary.
    const std::int64_t block = space_.suffix_count(depends_up_to_);
    for (std::int64_t start = 0; start < space_.total_size(); start += block)
        for (std::int64_t i = start + 1; i < start + block; ++i)
            if (values_[static_cast<std::size_t>(i)] != values_[static_cast<std::size_t>(start)])
                throw ConfigError(
                    "Observable: values vary below level " + std::to_string(depends_up_to_) +
                    " although depends_up_to declares them constant there");
}

Observable Observable::constant(const ProductSpace& space, double c) {
    return Observable(space, std::vector<double>(static_cast<std::size_t>(space.total_size()), c), 0);
}

Observable Observable::from_prefix_table(const ProductSpace& space, int level,
                                         const std::vector<double>& table) {
    if (level < 0 || level > space.depth())
        throw ConfigError("Observable::from_prefix_table: level out of range");
    if (static_cast<std::int64_t>(table.size()) != space.prefix_count(level))
        throw ConfigError("Observable::from_prefix_table: expected " +
                          std::to_string(space.prefix_count(level)) + " entries, got " +
                          std::to_string(table.size()));
    std::vector<double> values(static_cast<std::size_t>(space.total_size()));
    const std::int64_t block = space.suffix_count(level);
    for (std::int64_t p = 0; p < space.prefix_count(level); ++p)
        for (std::int64_t i = p * block; i < (p + 1) * block; ++i)
            values[static_cast<std::size_t>(i)] = table[static_cast<std::size_t>(p)];
    return Observable(space, std::move(values), level);
}

}  // namespace multiscale
