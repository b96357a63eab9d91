#include "posture/balance.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "posture/errors.hpp"
#include "posture/random.hpp"

namespace posture {
namespace {

struct ClassSplit {
    Posture minority;
    Posture majority;
    std::vector<std::size_t> minority_rows;
    std::vector<std::size_t> majority_rows;
};

ClassSplit split_classes(const Dataset& data) {
    const auto counts = data.class_counts();
    if (counts[0] == 0 || counts[1] == 0) throw DataError("balancing needs rows of both classes");
    // Equal counts: sitting is treated as the minority.
    const Posture minority = counts[1] <= counts[0] ? Posture::sitting : Posture::lying;
    const Posture majority = minority == Posture::sitting ? Posture::lying : Posture::sitting;
    return {minority, majority, data.rows_of_class(minority), data.rows_of_class(majority)};
}

// Keeps every row not of class `thinned`, plus the chosen rows of that class, in input order.
Dataset keep_rows(const Dataset& data, Posture thinned, std::vector<std::size_t> chosen) {
    std::sort(chosen.begin(), chosen.end());
    std::vector<std::size_t> keep;
    keep.reserve(data.rows());
    auto next = chosen.begin();
    for (std::size_t i = 0; i < data.rows(); ++i) {
        if (data.label(i) != thinned) {
            keep.push_back(i);
        } else if (next != chosen.end() && *next == i) {
            keep.push_back(i);
            ++next;
        }
    }
    return data.subset(keep);
}

std::vector<std::size_t> draw(const std::vector<std::size_t>& rows, std::size_t k, Rng& rng) {
    const auto picks = rng.sample_without_replacement(rows.size(), k);
    std::vector<std::size_t> out(picks.size());
    for (std::size_t i = 0; i < picks.size(); ++i) out[i] = rows[picks[i]];
    return out;
}

}  // namespace

std::string_view to_string(BalanceMode m) {
    switch (m) {
        case BalanceMode::none: return "none";
        case BalanceMode::undersample: return "under";
        case BalanceMode::smote: return "smote";
    }
    return "?";
}

BalanceMode parse_balance_mode(std::string_view name) {
    if (name == "none") return BalanceMode::none;
    if (name == "under" || name == "undersample") return BalanceMode::undersample;
    if (name == "smote") return BalanceMode::smote;
    throw DataError("unknown balance mode '" + std::string(name) + "'");
}

Dataset random_undersample(const Dataset& data, std::uint64_t seed) {
    const auto split = split_classes(data);
    if (split.majority_rows.size() == split.minority_rows.size()) return data;
    Rng rng(seed);
    return keep_rows(data, split.majority, draw(split.majority_rows, split.minority_rows.size(), rng));
}

std::vector<double> smote_interpolate(std::span<const double> x, std::span<const double> neighbor, double u) {
    std::vector<double> s(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) s[j] = x[j] + u * (neighbor[j] - x[j]);
    return s;
}

std::vector<SyntheticRow> smote_generate(const Dataset& data, std::span<const std::size_t> minority, unsigned percent,
                                         std::size_t k, std::uint64_t seed) {
    const std::size_t m = minority.size();
    if (m < 2) throw DataError("SMOTE needs at least 2 minority rows");
    if (k < 1) throw DataError("SMOTE needs k_neighbors >= 1");
    if (k >= m) {
        std::clog << "warning: SMOTE k=" << k << " with " << m << " minority rows; using k=" << m - 1 << '\n';
        k = m - 1;
    }
    if (percent == 0) return {};

    // Brute-force k nearest neighbours; distance ties go to the lower index.
    std::vector<std::vector<std::size_t>> neighbors(m);
    std::vector<std::pair<double, std::size_t>> dist(m - 1);
    for (std::size_t i = 0; i < m; ++i) {
        const auto xi = data.row(minority[i]);
        std::size_t c = 0;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            const auto xj = data.row(minority[j]);
            double d2 = 0.0;
            for (std::size_t f = 0; f < xi.size(); ++f) d2 += (xi[f] - xj[f]) * (xi[f] - xj[f]);
            dist[c++] = {d2, j};
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k), dist.end());
        neighbors[i].resize(k);
        for (std::size_t q = 0; q < k; ++q) neighbors[i][q] = dist[q].second;
    }

    Rng rng(seed);
    const std::size_t whole = percent / 100;
    const std::size_t extra = m * (percent % 100) / 100;

    std::vector<SyntheticRow> out;
    out.reserve(m * whole + extra);
    const auto make = [&](std::size_t i) {
        const std::size_t nb = neighbors[i][rng.below(k)];
        const double u = rng.uniform();
        out.push_back({smote_interpolate(data.row(minority[i]), data.row(minority[nb]), u), minority[i],
                       minority[nb], u});
    };
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t r = 0; r < whole; ++r) make(i);
    }
    if (extra > 0) {
        auto chosen = rng.sample_without_replacement(m, extra);
        std::sort(chosen.begin(), chosen.end());
        for (std::size_t i : chosen) make(i);
    }
    return out;
}

Dataset smote_balance(const Dataset& data, const BalanceConfig& config) {
    if (!(config.target_ratio > 0.0)) throw DataError("target_ratio must be positive");
    const auto split = split_classes(data);
    const auto synthetic = smote_generate(data, split.minority_rows, config.smote_percent, config.k_neighbors,
                                          derive_seed(config.seed, 1));

    const std::size_t minority_total = split.minority_rows.size() + synthetic.size();
    const auto target = static_cast<std::size_t>(std::llround(config.target_ratio * static_cast<double>(minority_total)));
    Dataset out = data;
    if (target < split.majority_rows.size()) {
        Rng rng(derive_seed(config.seed, 2));
        out = keep_rows(data, split.majority, draw(split.majority_rows, target, rng));
    }
    out.reserve(out.rows() + synthetic.size());
    for (const auto& s : synthetic) {
        Provenance prov;
        prov.parent_a = data.provenance(s.parent).source;
        prov.parent_b = data.provenance(s.neighbor).source;
        prov.u = s.u;
        out.add_row(s.values, split.minority, data.subject(s.parent), prov);
    }
    return out;
}

Dataset balance(const Dataset& data, const BalanceConfig& config) {
    switch (config.mode) {
        case BalanceMode::none: return data;
        case BalanceMode::undersample: return random_undersample(data, config.seed);
        case BalanceMode::smote: return smote_balance(data, config);
    }
    return data;
}

}  // namespace posture
