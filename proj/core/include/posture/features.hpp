#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "posture/ingest.hpp"
#include "posture/types.hpp"

namespace posture {

inline constexpr std::size_t kFeaturesPerDevice = 15;

// Column order of every feature vector and of the feature table.
inline constexpr std::array<std::string_view, kFeaturesPerDevice> kFeatureNames = {
    "mvm",      "sdvm",    "mangle",  "sdangle", "covariance", "skewness", "kurtosis", "entropy",
    "cv",       "corr_xy", "corr_yz", "corr_xz", "p625",       "df",       "fpdf",
};

inline constexpr std::size_t kEntropyBins = 16;

double vector_magnitude(const Accel& a);
std::vector<double> vm_series(std::span<const Accel> block);

struct MeanSd {
    double mean;
    double sd;
};

/// Mean and n-1 standard deviation. Throws DataError for fewer than 2 values.
MeanSd mvm_sdvm(std::span<const double> vm);

/// Angle of each sample against the device x axis, asin(x / vm) in degrees, then
/// mean and n-1 sd. Throws DegenerateWindow if any sample has zero magnitude.
MeanSd angle_stats(std::span<const Accel> block);

struct VmMoments {
    double covariance;  // lag-1 autocovariance, 1/(n-1) normalisation
    double skewness;    // m3 / m2^1.5
    double kurtosis;    // m4 / m2^2 - 3
};

/// Throws DataError for fewer than 4 values. Zero variance gives all zeros.
VmMoments vm_moments(std::span<const double> vm);

/// Shannon entropy in bits of a kEntropyBins equal-width histogram on [min, max].
double vm_entropy(std::span<const double> vm);

/// 100 * sd / mean. Throws DegenerateWindow when the mean is zero.
double vm_cv(double mvm, double sdvm);

struct AxisCorrelations {
    double xy;
    double yz;
    double xz;
};

/// Pearson correlations; a pair involving a constant axis yields 0.
AxisCorrelations axis_correlations(std::span<const Accel> block);

/// One-sided DFT magnitudes, bins k = 0 .. N/2 at frequency k * rate / N.
struct Spectrum {
    double resolution_hz = 0.0;
    std::size_t length = 0;  // N, the number of input samples
    std::vector<double> moduli;

    double frequency(std::size_t k) const { return resolution_hz * static_cast<double>(k); }
};

/// Direct O(N^2) evaluation. Throws DataError for fewer than 2 values.
Spectrum dft_spectrum(std::span<const double> vm, double rate_hz);

inline constexpr double kMovementBandLowHz = 0.6;
inline constexpr double kMovementBandHighHz = 2.5;

struct SpectralFeatures {
    double p625;  // share of the positive-frequency modulus sum in [0.6, 2.5] Hz
    double df;    // frequency of the largest positive-frequency modulus, lowest on ties
    double fpdf;  // that modulus over the positive-frequency sum
};

/// DC is excluded from every sum. A zero sum gives (0, 0, 0).
SpectralFeatures spectral_features(const Spectrum& spectrum);

using DeviceFeatures = std::array<double, kFeaturesPerDevice>;

/// All 15 features of one device block, in kFeatureNames order.
DeviceFeatures device_features(std::span<const Accel> block, double rate_hz = kAnalysisRateHz);

struct FeatureVector {
    std::string subject;
    Posture label = Posture::lying;
    DeviceSet devices = DeviceSet::both;
    std::vector<double> values;
};

/// Wrist block first when both devices are selected. Degenerate blocks throw
/// DegenerateWindow; callers drop the window.
FeatureVector extract_features(const LabeledWindow& window, DeviceSet devices, double rate_hz = kAnalysisRateHz);

/// Column names such as `mvm_wrist`, in vector order.
std::vector<std::string> feature_columns(DeviceSet devices);

}  // namespace posture
