#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ldrift/netflow/dataset.hpp"

namespace ldrift::netflow {

enum class ScalerMode { kMinMax, kZScore };

std::string to_string(ScalerMode mode);
ScalerMode scaler_mode_from_string(const std::string& name);

// Per-feature (min, max) for min-max or (mean, std) for z-score.
struct ScalerParams {
  ScalerMode mode = ScalerMode::kMinMax;
  std::vector<double> offset;  // min or mean
  std::vector<double> extent;  // max or std

  std::size_t dim() const { return offset.size(); }
};

ScalerParams fit_scaler(const FeatureMatrix& train, ScalerMode mode = ScalerMode::kMinMax);
// Degenerate (constant) features map to 0. Values outside the fit range are not clipped.
FeatureMatrix apply_scaler(const FeatureMatrix& m, const ScalerParams& params);
numkit::Tensor apply_scaler(const numkit::Tensor& x, const ScalerParams& params);

struct Split {
  FeatureMatrix train;
  FeatureMatrix test;
  std::vector<std::size_t> train_rows;  // indices into the input, ascending
  std::vector<std::size_t> test_rows;
};

// Per class, round(count * test_fraction) rows go to test, clamped so both
// sides keep at least one instance of the class.
Split stratified_split(const FeatureMatrix& m, double test_fraction, std::uint64_t seed);

}  // namespace ldrift::netflow
