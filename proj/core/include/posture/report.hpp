#pragma once

#include <ostream>
#include <span>
#include <string>

#include "posture/dataset.hpp"
#include "posture/eval.hpp"

namespace posture {

/// One table per balance mode, one row per device set, columns
/// Accuracy, F1-score, Precision, Recall, Balanced Accuracy (pooled), followed
/// by the same tables averaged over folds.
void write_text_report(std::ostream& out, std::span<const EvalResult> results);

/// Per-fold detail, chosen parameters, seeds and confusion matrices as JSON.
std::string results_to_json(std::span<const EvalResult> results, const std::string& extra_json = "{}");

/// Reverse of results_to_json for the fields needed to re-render the text report.
std::vector<EvalResult> results_from_json(const std::string& text);

/// Per feature column: class medians and quartiles plus the Mann-Whitney p-value,
/// as CSV.
void write_feature_tests(std::ostream& out, const Dataset& data);

}  // namespace posture
