#include "streamhar/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "streamhar/error.hpp"

namespace streamhar {

double quantile(std::span<const double> series, double q) {
  if (series.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of an empty series");
  std::vector<double> sorted(series.begin(), series.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

TimeFeatures time_features(std::span<const double> s, std::size_t lag) {
  if (s.empty()) throw Error(ErrorCode::InvalidArgument, "time features need at least one value");
  const auto n = static_cast<double>(s.size());
  TimeFeatures f;
  const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
  f.min = *mn;
  f.max = *mx;
  f.range = f.max - f.min;

  double sum = 0, sum_sq = 0;
  for (double v : s) {
    sum += v;
    sum_sq += v * v;
  }
  f.mean = sum / n;
  f.rms = std::sqrt(sum_sq / n);

  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : s) {
    const double d = v - f.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  // a constant series has exactly zero spread even when the mean is inexact
  const double var = f.range == 0.0 ? 0.0 : m2 / n;
  f.std = std::sqrt(var);

  std::vector<double> sorted(s.begin(), s.end());
  std::sort(sorted.begin(), sorted.end());
  f.median = quantile(sorted, 0.5);
  f.iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);

  if (var > 0.0) {
    f.skewness = m3 / (n * var * f.std);
    f.kurtosis = m4 / (n * var * var);
    if (lag < s.size()) {
      double acc = 0;
      for (std::size_t i = 0; i + lag < s.size(); ++i) acc += (s[i] - f.mean) * (s[i + lag] - f.mean);
      f.autocorr = acc / (static_cast<double>(s.size() - lag) * var);
    }
  }
  return f;
}

namespace {

// FFTW planning is not thread-safe; executing an existing plan on new arrays
// is. Plans are created once per length and kept for the process lifetime.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int n) {
    std::lock_guard lock(mu_);
    if (auto it = plans_.find(n); it != plans_.end()) return it->second;
    std::vector<double> in(static_cast<std::size_t>(n));
    std::vector<fftw_complex> out(static_cast<std::size_t>(n / 2 + 1));
    fftw_plan p = fftw_plan_dft_r2c_1d(n, in.data(), out.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(n, p);
    return p;
  }

  ~PlanCache() {
    for (auto& [n, p] : plans_) fftw_destroy_plan(p);
  }

 private:
  std::mutex mu_;
  std::map<int, fftw_plan> plans_;
};

}  // namespace

Spectrum spectrum(std::span<const double> series, double rate_hz) {
  if (series.size() < 2) throw Error(ErrorCode::InvalidArgument, "spectrum needs at least two values");
  const int n = static_cast<int>(series.size());
  std::vector<double> in(series.begin(), series.end());
  std::vector<fftw_complex> out(static_cast<std::size_t>(n / 2 + 1));
  fftw_execute_dft_r2c(PlanCache::instance().get(n), in.data(), out.data());

  Spectrum spec;
  spec.bin_freqs.reserve(out.size());
  spec.magnitudes.reserve(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    spec.bin_freqs.push_back(static_cast<double>(i) * rate_hz / n);
    spec.magnitudes.push_back(std::hypot(out[i][0], out[i][1]));
  }
  double sum_sq = 0;
  for (double v : series) sum_sq += v * v;
  spec.mean_square = sum_sq / n;
  return spec;
}

FreqFeatures freq_features(const Spectrum& spec) {
  FreqFeatures f;
  f.spectral_energy = spec.mean_square;
  const auto& mag = spec.magnitudes;
  if (mag.size() != spec.bin_freqs.size())
    throw Error(ErrorCode::LengthMismatch, "spectrum bins and magnitudes differ in length");

  double mag_sum = 0, power_sum = 0, weighted = 0;
  std::size_t peak = 0;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    mag_sum += mag[i];
    power_sum += mag[i] * mag[i];
    weighted += spec.bin_freqs[i] * mag[i];
    if (mag[i] > mag[peak]) peak = i;
  }
  if (power_sum <= 0.0) return f;

  f.max_freq = spec.bin_freqs[peak];
  f.spectral_centroid = weighted / mag_sum;

  double cumulative = 0;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    cumulative += mag[i] * mag[i];
    if (cumulative >= 0.5 * power_sum) {
      f.med_freq = spec.bin_freqs[i];
      break;
    }
  }

  double entropy = 0;
  for (double m : mag) {
    const double p = m * m / power_sum;
    if (p > 0.0) entropy -= p * std::log(p);
  }
  f.spectral_entropy = entropy;
  return f;
}

double sma(std::span<const double> x, std::span<const double> y, std::span<const double> z,
           bool absolute) {
  if (x.size() != y.size() || x.size() != z.size())
    throw Error(ErrorCode::LengthMismatch, "SMA axes differ in length");
  if (x.empty()) throw Error(ErrorCode::InvalidArgument, "SMA of empty axes");
  double acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    acc += absolute ? std::abs(x[i]) + std::abs(y[i]) + std::abs(z[i]) : x[i] + y[i] + z[i];
  return acc / static_cast<double>(x.size());
}

namespace {

void append_axis(std::vector<double>& out, const AxisSeries& s, double rate, const FeatureConfig& cfg) {
  const auto t = time_features(s, cfg.autocorr_lag);
  out.insert(out.end(), {t.max, t.min, t.mean, t.median, t.std, t.range, t.skewness, t.kurtosis,
                         t.iqr, t.autocorr, t.rms});
  FreqFeatures fq;
  if (s.size() >= 2) {
    fq = freq_features(spectrum(s, rate));
  } else {
    fq.spectral_energy = t.rms * t.rms;
  }
  out.insert(out.end(), {fq.max_freq, fq.med_freq, fq.spectral_centroid, fq.spectral_entropy,
                         fq.spectral_energy});
}

}  // namespace

FeatureVector extract(const SensorWindow& window, const FeatureConfig& config) {
  if (window.samples.empty()) throw Error(ErrorCode::InvalidArgument, "cannot extract from an empty window");
  FeatureVector fv;
  fv.values.reserve(kFeatureDim);
  fv.label = window.label;
  fv.window_index = window.index;
  for (Sensor sensor : {Sensor::Accel, Sensor::Gyro}) {
    const auto x = axis_view(window, sensor, Axis::X);
    const auto y = axis_view(window, sensor, Axis::Y);
    const auto z = axis_view(window, sensor, Axis::Z);
    append_axis(fv.values, x, window.rate_hz, config);
    append_axis(fv.values, y, window.rate_hz, config);
    append_axis(fv.values, z, window.rate_hz, config);
    fv.values.push_back(sma(x, y, z, config.sma_absolute));
  }
  return fv;
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    static constexpr std::array<const char*, kFeaturesPerAxis> per_axis = {
        "max",      "min",      "mean",   "median",   "std",      "range",
        "skewness", "kurtosis", "iqr",    "autocorr", "rms",      "max_freq",
        "med_freq", "spectral_centroid",  "spectral_entropy",     "spectral_energy"};
    std::vector<std::string> out;
    for (const char* sensor : {"accel", "gyro"}) {
      for (const char* axis : {"x", "y", "z"})
        for (const char* f : per_axis) out.push_back(std::string(sensor) + "_" + axis + "_" + f);
      out.push_back(std::string(sensor) + "_sma");
    }
    return out;
  }();
  return names;
}

OnlineNormalizer::OnlineNormalizer(std::size_t dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}

double OnlineNormalizer::variance(std::size_t i) const {
  return count_ == 0 ? 0.0 : m2_.at(i) / static_cast<double>(count_);
}

FeatureVector OnlineNormalizer::normalize(const FeatureVector& v) {
  if (v.values.size() != dim())
    throw Error(ErrorCode::DimensionMismatch, "normalizer expects " + std::to_string(dim()) +
                                                  " values, got " + std::to_string(v.values.size()));
  ++count_;
  const auto n = static_cast<double>(count_);
  for (std::size_t i = 0; i < dim(); ++i) {
    const double delta = v.values[i] - mean_[i];
    mean_[i] += delta / n;
    m2_[i] += delta * (v.values[i] - mean_[i]);
  }
  FeatureVector out = v;
  out.values = transform(v.values);
  return out;
}

std::vector<double> OnlineNormalizer::transform(std::span<const double> values) const {
  std::vector<double> out(values.size(), 0.0);
  for (std::size_t i = 0; i < values.size() && i < dim(); ++i) {
    const double sd = std::sqrt(variance(i));
    out[i] = sd > 0.0 ? (values[i] - mean_[i]) / sd : 0.0;
  }
  return out;
}

}  // namespace streamhar
