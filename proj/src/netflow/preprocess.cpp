#include "ldrift/netflow/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "ldrift/errors.hpp"
#include "ldrift/numkit/rng.hpp"

namespace ldrift::netflow {

std::string to_string(ScalerMode mode) {
  return mode == ScalerMode::kMinMax ? "minmax" : "zscore";
}

ScalerMode scaler_mode_from_string(const std::string& name) {
  if (name == "minmax") return ScalerMode::kMinMax;
  if (name == "zscore") return ScalerMode::kZScore;
  throw ConfigError("unknown scaler mode '" + name + "' (expected minmax or zscore)");
}

ScalerParams fit_scaler(const FeatureMatrix& train, ScalerMode mode) {
  const auto& x = train.features;
  if (x.rows() == 0) throw DataError("cannot fit a scaler on an empty matrix");
  ScalerParams p;
  p.mode = mode;
  p.offset.assign(x.cols(), 0.0);
  p.extent.assign(x.cols(), 0.0);
  for (std::size_t c = 0; c < x.cols(); ++c) {
    if (mode == ScalerMode::kMinMax) {
      double lo = x(0, c), hi = x(0, c);
      for (std::size_t r = 1; r < x.rows(); ++r) {
        lo = std::min(lo, x(r, c));
        hi = std::max(hi, x(r, c));
      }
      p.offset[c] = lo;
      p.extent[c] = hi;
    } else {
      double mean = 0.0;
      for (std::size_t r = 0; r < x.rows(); ++r) mean += x(r, c);
      mean /= static_cast<double>(x.rows());
      double var = 0.0;
      for (std::size_t r = 0; r < x.rows(); ++r) var += (x(r, c) - mean) * (x(r, c) - mean);
      p.offset[c] = mean;
      p.extent[c] = std::sqrt(var / static_cast<double>(x.rows()));
    }
  }
  return p;
}

numkit::Tensor apply_scaler(const numkit::Tensor& x, const ScalerParams& params) {
  if (x.cols() != params.dim()) {
    throw DimensionError("scaler fit on " + std::to_string(params.dim()) +
                         " features, matrix has " + std::to_string(x.cols()));
  }
  numkit::Tensor out(x.rows(), x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const double denom = params.mode == ScalerMode::kMinMax ? params.extent[c] - params.offset[c]
                                                           : params.extent[c];
    for (std::size_t r = 0; r < x.rows(); ++r) {
      out(r, c) = denom > 0.0 ? (x(r, c) - params.offset[c]) / denom : 0.0;
    }
  }
  return out;
}

FeatureMatrix apply_scaler(const FeatureMatrix& m, const ScalerParams& params) {
  FeatureMatrix out;
  out.features = apply_scaler(m.features, params);
  out.labels = m.labels;
  out.feature_names = m.feature_names;
  return out;
}

Split stratified_split(const FeatureMatrix& m, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> by_class[2];
  for (std::size_t r = 0; r < m.labels.size(); ++r) {
    const int l = m.labels[r];
    if (l != kNormal && l != kAttack) throw DataError("labels must be 0 or 1");
    by_class[l].push_back(r);
  }
  numkit::Rng rng(seed);
  Split s;
  for (auto& rows : by_class) {
    if (rows.size() < 2) {
      throw DataError("stratified split needs at least 2 instances per class, got " +
                      std::to_string(rows.size()));
    }
    const auto perm = rng.permutation(rows.size());
    auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(rows.size()) * test_fraction));
    n_test = std::clamp<std::size_t>(n_test, 1, rows.size() - 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      (i < n_test ? s.test_rows : s.train_rows).push_back(rows[perm[i]]);
    }
  }
  std::sort(s.train_rows.begin(), s.train_rows.end());
  std::sort(s.test_rows.begin(), s.test_rows.end());
  s.train = m.select(s.train_rows);
  s.test = m.select(s.test_rows);
  return s;
}

}  // namespace ldrift::netflow
