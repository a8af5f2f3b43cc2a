#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "streamhar/labels.hpp"
#include "streamhar/windowing.hpp"

namespace streamhar {

struct TimeFeatures {
  double max = 0, min = 0, mean = 0, median = 0, std = 0, range = 0;
  double skewness = 0, kurtosis = 0, iqr = 0, autocorr = 0, rms = 0;
};

struct Spectrum {
  std::vector<double> bin_freqs;   // Hz, bin i at i * rate / n
  std::vector<double> magnitudes;  // |X_i| over the non-negative half
  double mean_square = 0;          // (1/n) sum s_i^2 of the source series
};

struct FreqFeatures {
  double max_freq = 0, med_freq = 0, spectral_centroid = 0;
  double spectral_entropy = 0, spectral_energy = 0;
};

inline constexpr std::size_t kFeaturesPerAxis = 16;
inline constexpr std::size_t kFeaturesPerSensor = 3 * kFeaturesPerAxis + 1;
inline constexpr std::size_t kFeatureDim = 2 * kFeaturesPerSensor;  // 98

struct FeatureVector {
  std::vector<double> values;
  std::optional<LabelId> label;
  std::uint64_t window_index = 0;
};

struct FeatureConfig {
  std::size_t autocorr_lag = 1;
  // Signal magnitude area over |x|+|y|+|z|; false gives the signless sum.
  bool sma_absolute = true;
};

// Degenerate inputs never throw: zero variance yields skewness, kurtosis and
// autocorrelation of 0.
TimeFeatures time_features(std::span<const double> series, std::size_t autocorr_lag = 1);

// Magnitude spectrum of the real DFT, bins 0..n/2, no taper.
Spectrum spectrum(std::span<const double> series, double rate_hz);

// An all-zero spectrum yields zeros for every frequency feature.
FreqFeatures freq_features(const Spectrum& spec);

double sma(std::span<const double> x, std::span<const double> y, std::span<const double> z,
           bool absolute = true);

// Layout: [accel x(16), accel y(16), accel z(16), accel SMA, gyro x(16),
// gyro y(16), gyro z(16), gyro SMA]; each 16 is the eleven time features
// followed by the five frequency features, in TimeFeatures/FreqFeatures order.
FeatureVector extract(const SensorWindow& window, const FeatureConfig& config = {});

// Human-readable names in layout order, e.g. "accel_x_max", "gyro_sma".
const std::vector<std::string>& feature_names();

// Linear interpolation between closest ranks on a sorted copy.
double quantile(std::span<const double> series, double q);

// Per-dimension online z-scoring. normalize() folds the vector into the
// Welford accumulators first and then standardises with the updated
// statistics; dimensions with zero spread map to 0.
class OnlineNormalizer {
 public:
  explicit OnlineNormalizer(std::size_t dim = kFeatureDim);

  FeatureVector normalize(const FeatureVector& v);
  std::vector<double> transform(std::span<const double> values) const;

  std::size_t dim() const noexcept { return mean_.size(); }
  std::uint64_t count() const noexcept { return count_; }
  double mean(std::size_t i) const { return mean_.at(i); }
  double variance(std::size_t i) const;

 private:
  std::uint64_t count_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

}  // namespace streamhar
