#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ldrift/netflow/dataset.hpp"
#include "ldrift/numkit/rng.hpp"
#include "ldrift/numkit/tensor.hpp"

namespace ldrift::netflow {

// Diagonal Gaussian component of a class-conditional mixture.
struct MixtureComponent {
  double weight = 1.0;
  std::vector<double> mean;
  std::vector<double> stddev;
};

struct ClassSource {
  double prior = 0.5;
  std::vector<MixtureComponent> components;
};

// x_S = scale ⊙ (rotation · x) + translation, applied to fresh draws.
struct DriftTransform {
  numkit::Tensor rotation;  // d×d, orthonormal
  std::vector<double> translation;
  std::vector<double> scale;

  static DriftTransform identity(std::size_t dim);
};

struct DriftSpec {
  std::size_t n_per_domain = 5000;
  std::vector<ClassSource> classes;  // index 0 = Normal, 1 = Attack
  DriftTransform drift;
  double noise_std = 0.0;
  std::uint64_t seed = 1;

  std::size_t dim() const;
  // Throws ConfigError on any violated invariant.
  void validate() const;
};

// Rotation by `angle_rad` inside a random 2-plane spanned by two orthonormal
// vectors drawn from rng; identity on the orthogonal complement.
numkit::Tensor plane_rotation(std::size_t dim, double angle_rad, numkit::Rng& rng);

struct DriftPreset {
  std::size_t n_per_domain = 5000;
  std::size_t dim = 20;
  std::size_t components_per_class = 2;
  double attack_prior = 0.5;
  double component_std = 1.0;
  // Component means are N(0, separation²) per feature.
  double separation = 1.0;
  // Attack component means sit this many stds higher on every feature, the way
  // flood traffic runs at larger volumes than benign traffic.
  double class_shift = 1.0;
  double rotation_deg = 30.0;
  double translation_sigma = 2.0;  // shift of every feature, in component stds
  double scale = 1.5;
  double noise_std = 0.05;
  std::uint64_t seed = 7;
};

DriftSpec make_drift_spec(const DriftPreset& preset);

// Domain H from the mixtures; domain S from fresh mixture draws pushed through
// the drift transform plus isotropic noise.
std::pair<FeatureMatrix, FeatureMatrix> synth_drift(const DriftSpec& spec);

// JSON: either an explicit spec ("classes", "drift", ...) or preset fields.
DriftSpec drift_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DriftSpec& spec);

}  // namespace ldrift::netflow
