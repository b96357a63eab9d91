#include "posture/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "posture/errors.hpp"

namespace posture {
namespace {

// A constant series gets its value back exactly, so its deviations are exact zeros.
double mean_of(std::span<const double> v) {
    if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; })) return v[0];
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v, double mean) {
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double pearson(std::span<const Accel> block, double Accel::*a, double Accel::*b) {
    std::vector<double> va(block.size()), vb(block.size());
    for (std::size_t i = 0; i < block.size(); ++i) {
        va[i] = block[i].*a;
        vb[i] = block[i].*b;
    }
    const double ma = mean_of(va);
    const double mb = mean_of(vb);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (const auto& s : block) {
        const double da = s.*a - ma;
        const double db = s.*b - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace

double vector_magnitude(const Accel& a) {
    return std::sqrt(a.x * a.x + a.y * a.y + a.z * a.z);
}

std::vector<double> vm_series(std::span<const Accel> block) {
    std::vector<double> vm(block.size());
    std::transform(block.begin(), block.end(), vm.begin(), vector_magnitude);
    return vm;
}

MeanSd mvm_sdvm(std::span<const double> vm) {
    if (vm.size() < 2) throw DataError("mvm_sdvm needs at least 2 values");
    const double m = mean_of(vm);
    return {m, sample_sd(vm, m)};
}

MeanSd angle_stats(std::span<const Accel> block) {
    if (block.size() < 2) throw DataError("angle_stats needs at least 2 samples");
    std::vector<double> angles(block.size());
    for (std::size_t i = 0; i < block.size(); ++i) {
        const double vm = vector_magnitude(block[i]);
        if (vm == 0.0) throw DegenerateWindow("zero vector magnitude");
        angles[i] = std::asin(std::clamp(block[i].x / vm, -1.0, 1.0)) * 180.0 / std::numbers::pi;
    }
    const double m = mean_of(angles);
    return {m, sample_sd(angles, m)};
}

VmMoments vm_moments(std::span<const double> vm) {
    if (vm.size() < 4) throw DataError("vm_moments needs at least 4 values");
    const double n = static_cast<double>(vm.size());
    const double m = mean_of(vm);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0, lag = 0.0;
    for (std::size_t i = 0; i < vm.size(); ++i) {
        const double d = vm[i] - m;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        if (i + 1 < vm.size()) lag += d * (vm[i + 1] - m);
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    VmMoments out{lag / (n - 1.0), 0.0, 0.0};
    if (m2 > 0.0) {
        out.skewness = m3 / std::pow(m2, 1.5);
        out.kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return out;
}

double vm_entropy(std::span<const double> vm) {
    if (vm.empty()) throw DataError("vm_entropy needs at least 1 value");
    const auto [lo_it, hi_it] = std::minmax_element(vm.begin(), vm.end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo)) return 0.0;
    std::array<std::size_t, kEntropyBins> counts{};
    const double scale = static_cast<double>(kEntropyBins) / (hi - lo);
    for (double v : vm) {
        const auto bin = static_cast<std::size_t>((v - lo) * scale);
        ++counts[std::min(bin, kEntropyBins - 1)];
    }
    const double n = static_cast<double>(vm.size());
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

double vm_cv(double mvm, double sdvm) {
    if (mvm == 0.0) throw DegenerateWindow("zero mean vector magnitude");
    return 100.0 * sdvm / mvm;
}

AxisCorrelations axis_correlations(std::span<const Accel> block) {
    if (block.size() < 2) throw DataError("axis_correlations needs at least 2 samples");
    return {pearson(block, &Accel::x, &Accel::y), pearson(block, &Accel::y, &Accel::z),
            pearson(block, &Accel::x, &Accel::z)};
}

Spectrum dft_spectrum(std::span<const double> vm, double rate_hz) {
    if (vm.size() < 2) throw DataError("dft_spectrum needs at least 2 values");
    const std::size_t n = vm.size();
    Spectrum out;
    out.length = n;
    out.resolution_hz = rate_hz / static_cast<double>(n);
    out.moduli.assign(n / 2 + 1, 0.0);

    double sum = 0.0;
    for (double v : vm) sum += v;
    out.moduli[0] = std::abs(sum);
    // Non-DC bins do not depend on the mean. Removing it first keeps round-off
    // relative to the movement, and a flat window gets exact zeros.
    if (std::all_of(vm.begin(), vm.end(), [&](double v) { return v == vm[0]; })) return out;
    const double mean = sum / static_cast<double>(n);
    for (std::size_t k = 1; k <= n / 2; ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            // Reduce k*t mod n first so the angle stays small and exact.
            const double angle = 2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
            re += (vm[t] - mean) * std::cos(angle);
            im -= (vm[t] - mean) * std::sin(angle);
        }
        out.moduli[k] = std::hypot(re, im);
    }
    return out;
}

SpectralFeatures spectral_features(const Spectrum& spectrum) {
    constexpr double kSlack = 1e-9;  // bin frequencies like 0.6 are not exact in binary
    double total = 0.0, band = 0.0, peak = 0.0;
    std::size_t peak_k = 0;
    for (std::size_t k = 1; k < spectrum.moduli.size(); ++k) {
        const double m = spectrum.moduli[k];
        const double f = spectrum.frequency(k);
        total += m;
        if (f >= kMovementBandLowHz - kSlack && f <= kMovementBandHighHz + kSlack) band += m;
        if (m > peak) {
            peak = m;
            peak_k = k;
        }
    }
    if (total <= 0.0) return {0.0, 0.0, 0.0};
    return {band / total, spectrum.frequency(peak_k), peak / total};
}

DeviceFeatures device_features(std::span<const Accel> block, double rate_hz) {
    const auto vm = vm_series(block);
    const auto [mvm, sdvm] = mvm_sdvm(vm);
    const auto [mangle, sdangle] = angle_stats(block);
    const auto moments = vm_moments(vm);
    const double entropy = vm_entropy(vm);
    const double cv = vm_cv(mvm, sdvm);
    const auto corr = axis_correlations(block);
    const auto spectral = spectral_features(dft_spectrum(vm, rate_hz));
    return {mvm,
            sdvm,
            mangle,
            sdangle,
            moments.covariance,
            moments.skewness,
            moments.kurtosis,
            entropy,
            cv,
            corr.xy,
            corr.yz,
            corr.xz,
            spectral.p625,
            spectral.df,
            spectral.fpdf};
}

FeatureVector extract_features(const LabeledWindow& window, DeviceSet devices, double rate_hz) {
    FeatureVector fv{window.subject, window.label, devices, {}};
    fv.values.reserve(devices == DeviceSet::both ? 2 * kFeaturesPerDevice : kFeaturesPerDevice);
    for (Device d : {Device::wrist, Device::ankle}) {
        if (!includes(devices, d)) continue;
        const auto f = device_features(window.block(d), rate_hz);
        fv.values.insert(fv.values.end(), f.begin(), f.end());
    }
    return fv;
}

std::vector<std::string> feature_columns(DeviceSet devices) {
    std::vector<std::string> cols;
    for (Device d : {Device::wrist, Device::ankle}) {
        if (!includes(devices, d)) continue;
        for (auto name : kFeatureNames) cols.push_back(std::string(name) + "_" + std::string(to_string(d)));
    }
    return cols;
}

}  // namespace posture
