#include "posture/metrics.hpp"

namespace posture {
namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t t = 0;
    for (const auto& row : counts) {
        for (auto c : row) t += c;
    }
    return t;
}

std::uint64_t ConfusionMatrix::actual(Posture p) const {
    const auto& row = counts[class_index(p)];
    return row[0] + row[1];
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
    for (std::size_t a = 0; a < kNumClasses; ++a) {
        for (std::size_t p = 0; p < kNumClasses; ++p) counts[a][p] += o.counts[a][p];
    }
    return *this;
}

Metrics metrics_from_cm(const ConfusionMatrix& cm) {
    Metrics m;
    m.accuracy = ratio(cm.tp() + cm.tn(), cm.total());
    m.precision = ratio(cm.tp(), cm.tp() + cm.fp());
    m.recall = ratio(cm.tp(), cm.tp() + cm.fn());
    m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;

    double sum = 0.0;
    int defined = 0;
    if (cm.tp() + cm.fn() > 0) {
        sum += m.recall;
        ++defined;
    }
    if (cm.tn() + cm.fp() > 0) {
        sum += ratio(cm.tn(), cm.tn() + cm.fp());
        ++defined;
    }
    m.balanced_accuracy = defined ? sum / defined : 0.0;
    m.partial = defined < 2;
    return m;
}

Metrics mean_metrics(std::span<const Metrics> folds) {
    Metrics m;
    if (folds.empty()) return m;
    for (const auto& f : folds) {
        m.accuracy += f.accuracy;
        m.precision += f.precision;
        m.recall += f.recall;
        m.f1 += f.f1;
        m.balanced_accuracy += f.balanced_accuracy;
        m.partial = m.partial || f.partial;
    }
    const double n = static_cast<double>(folds.size());
    m.accuracy /= n;
    m.precision /= n;
    m.recall /= n;
    m.f1 /= n;
    m.balanced_accuracy /= n;
    return m;
}

}  // namespace posture
