#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "posture/types.hpp"

namespace posture {

/// Where a row came from. Real rows point at their row in the root table;
/// synthetic (SMOTE) rows record both parents and the interpolation factor.
struct Provenance {
    static constexpr std::int64_t kNone = -1;

    std::int64_t source = kNone;
    std::int64_t parent_a = kNone;
    std::int64_t parent_b = kNone;
    double u = 0.0;

    bool synthetic() const { return source == kNone; }
};

/// Row-major feature matrix with labels, subject ids and provenance.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::vector<std::string> feature_names, std::vector<std::string> subject_names = {});

    std::size_t rows() const { return labels_.size(); }
    std::size_t features() const { return feature_names_.size(); }
    bool empty() const { return labels_.empty(); }

    const std::vector<std::string>& feature_names() const { return feature_names_; }
    const std::vector<std::string>& subject_names() const { return subject_names_; }

    /// Index of `name`, appending it if new.
    int intern_subject(const std::string& name);

    std::span<const double> row(std::size_t i) const {
        return {values_.data() + i * features(), features()};
    }
    double value(std::size_t i, std::size_t feature) const { return values_[i * features() + feature]; }
    Posture label(std::size_t i) const { return labels_[i]; }
    int subject(std::size_t i) const { return subjects_[i]; }
    const Provenance& provenance(std::size_t i) const { return provenance_[i]; }

    /// Appends a real row whose provenance source is its own index.
    void add_row(std::span<const double> values, Posture label, int subject);
    void add_row(std::span<const double> values, Posture label, int subject, const Provenance& prov);

    void reserve(std::size_t n);

    /// Rows in the given order (duplicates allowed); keeps names and provenance.
    Dataset subset(std::span<const std::size_t> indices) const;
    /// Same rows, only the given columns.
    Dataset select_columns(std::span<const std::size_t> columns) const;

    std::array<std::size_t, kNumClasses> class_counts() const;
    std::vector<std::size_t> rows_of_class(Posture label) const;
    /// Sorted distinct subject ids present.
    std::vector<int> subjects_present() const;

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::vector<std::string> feature_names_;
    std::vector<std::string> subject_names_;
    std::vector<double> values_;
    std::vector<Posture> labels_;
    std::vector<int> subjects_;
    std::vector<Provenance> provenance_;
};

inline bool operator==(const Provenance& a, const Provenance& b) {
    return a.source == b.source && a.parent_a == b.parent_a && a.parent_b == b.parent_b && a.u == b.u;
}

}  // namespace posture
