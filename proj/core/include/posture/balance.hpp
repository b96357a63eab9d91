#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "posture/dataset.hpp"

namespace posture {

enum class BalanceMode : std::uint8_t { none, undersample, smote };

std::string_view to_string(BalanceMode m);
/// Accepts none, under/undersample, smote.
BalanceMode parse_balance_mode(std::string_view name);

struct BalanceConfig {
    BalanceMode mode = BalanceMode::none;
    unsigned smote_percent = 400;  // synthetic rows per original minority row, in percent
    std::size_t k_neighbors = 5;
    double target_ratio = 1.0;  // majority : minority after balancing
    std::uint64_t seed = 0;
};

/// Draws the majority class without replacement down to the minority count.
/// Throws DataError unless both classes are present.
Dataset random_undersample(const Dataset& data, std::uint64_t seed);

/// x + u * (neighbor - x)
std::vector<double> smote_interpolate(std::span<const double> x, std::span<const double> neighbor, double u);

struct SyntheticRow {
    std::vector<double> values;
    std::size_t parent;    // row index in the input dataset
    std::size_t neighbor;  // row index in the input dataset
    double u;
};

/// For each minority row, its k nearest minority neighbours (Euclidean, raw
/// features) and percent/100 synthetic rows interpolated towards a uniformly
/// chosen neighbour. The fractional part of percent/100 is realised on a random
/// subset of rows. When k >= the minority count, k drops to count - 1.
/// Throws DataError for fewer than 2 minority rows.
std::vector<SyntheticRow> smote_generate(const Dataset& data, std::span<const std::size_t> minority, unsigned percent,
                                         std::size_t k, std::uint64_t seed);

/// Oversamples the minority class with SMOTE and undersamples the majority class
/// to round(target_ratio * new minority count). Real minority rows are all kept.
Dataset smote_balance(const Dataset& data, const BalanceConfig& config);

/// Dispatches on config.mode.
Dataset balance(const Dataset& data, const BalanceConfig& config);

}  // namespace posture
