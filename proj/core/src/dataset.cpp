#include "posture/dataset.hpp"

#include <algorithm>

#include "posture/errors.hpp"

namespace posture {

Dataset::Dataset(std::vector<std::string> feature_names, std::vector<std::string> subject_names)
    : feature_names_(std::move(feature_names)), subject_names_(std::move(subject_names)) {}

int Dataset::intern_subject(const std::string& name) {
    const auto it = std::find(subject_names_.begin(), subject_names_.end(), name);
    if (it != subject_names_.end()) return static_cast<int>(it - subject_names_.begin());
    subject_names_.push_back(name);
    return static_cast<int>(subject_names_.size() - 1);
}

void Dataset::add_row(std::span<const double> values, Posture label, int subject) {
    add_row(values, label, subject, Provenance{static_cast<std::int64_t>(rows())});
}

void Dataset::add_row(std::span<const double> values, Posture label, int subject, const Provenance& prov) {
    if (values.size() != features()) {
        throw DataError("row has " + std::to_string(values.size()) + " values, expected " +
                        std::to_string(features()));
    }
    if (label == Posture::out_of_view) throw DataError("out_of_view is not a class label");
    values_.insert(values_.end(), values.begin(), values.end());
    labels_.push_back(label);
    subjects_.push_back(subject);
    provenance_.push_back(prov);
}

void Dataset::reserve(std::size_t n) {
    values_.reserve(n * features());
    labels_.reserve(n);
    subjects_.reserve(n);
    provenance_.reserve(n);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out(feature_names_, subject_names_);
    out.reserve(indices.size());
    for (std::size_t i : indices) out.add_row(row(i), labels_[i], subjects_[i], provenance_[i]);
    return out;
}

Dataset Dataset::select_columns(std::span<const std::size_t> columns) const {
    std::vector<std::string> names;
    for (std::size_t c : columns) names.push_back(feature_names_.at(c));
    Dataset out(std::move(names), subject_names_);
    out.reserve(rows());
    std::vector<double> buf(columns.size());
    for (std::size_t i = 0; i < rows(); ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j) buf[j] = value(i, columns[j]);
        out.add_row(buf, labels_[i], subjects_[i], provenance_[i]);
    }
    return out;
}

std::array<std::size_t, kNumClasses> Dataset::class_counts() const {
    std::array<std::size_t, kNumClasses> c{};
    for (Posture p : labels_) ++c[class_index(p)];
    return c;
}

std::vector<std::size_t> Dataset::rows_of_class(Posture label) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rows(); ++i) {
        if (labels_[i] == label) out.push_back(i);
    }
    return out;
}

std::vector<int> Dataset::subjects_present() const {
    std::vector<int> s(subjects_.begin(), subjects_.end());
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

}  // namespace posture
