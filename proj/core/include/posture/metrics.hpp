#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "posture/types.hpp"

namespace posture {

/// counts[actual][predicted], class order (lying, sitting).
struct ConfusionMatrix {
    std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

    void add(Posture actual, Posture predicted) { ++counts[class_index(actual)][class_index(predicted)]; }
    std::uint64_t total() const;
    std::uint64_t actual(Posture p) const;

    // Positive class is sitting.
    std::uint64_t tp() const { return counts[1][1]; }
    std::uint64_t fn() const { return counts[1][0]; }
    std::uint64_t fp() const { return counts[0][1]; }
    std::uint64_t tn() const { return counts[0][0]; }

    ConfusionMatrix& operator+=(const ConfusionMatrix& o);
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double balanced_accuracy = 0.0;
    // Set when one class is absent, so balanced accuracy averages the defined recall only.
    bool partial = false;
};

/// Sitting is the positive class. Zero denominators give 0.
Metrics metrics_from_cm(const ConfusionMatrix& cm);

/// Unweighted mean of each metric over folds.
Metrics mean_metrics(std::span<const Metrics> folds);

}  // namespace posture
