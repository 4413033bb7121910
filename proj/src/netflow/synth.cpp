#include "ldrift/netflow/synth.hpp"

#include <cmath>
#include <numbers>

#include "ldrift/errors.hpp"

namespace ldrift::netflow {
namespace {

std::size_t pick(const std::vector<double>& weights, numkit::Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

void sample_domain(const DriftSpec& spec, numkit::Rng& rng, numkit::Tensor& x,
                   std::vector<int>& labels) {
  const std::size_t d = spec.dim();
  x = numkit::Tensor(spec.n_per_domain, d);
  labels.assign(spec.n_per_domain, 0);
  std::vector<double> priors;
  for (const auto& c : spec.classes) priors.push_back(c.prior);
  for (std::size_t i = 0; i < spec.n_per_domain; ++i) {
    const std::size_t cls = pick(priors, rng);
    const auto& source = spec.classes[cls];
    std::vector<double> weights;
    for (const auto& comp : source.components) weights.push_back(comp.weight);
    const auto& comp = source.components[pick(weights, rng)];
    for (std::size_t j = 0; j < d; ++j) x(i, j) = comp.mean[j] + comp.stddev[j] * rng.normal();
    labels[i] = static_cast<int>(cls);
  }
}

std::vector<std::string> feature_names(std::size_t d) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < d; ++j) names.push_back("f" + std::to_string(j));
  return names;
}

}  // namespace

DriftTransform DriftTransform::identity(std::size_t dim) {
  return {numkit::Tensor::identity(dim), std::vector<double>(dim, 0.0),
          std::vector<double>(dim, 1.0)};
}

std::size_t DriftSpec::dim() const {
  if (classes.empty() || classes.front().components.empty()) return 0;
  return classes.front().components.front().mean.size();
}

void DriftSpec::validate() const {
  if (classes.size() != 2) throw ConfigError("drift spec needs exactly two classes");
  if (n_per_domain < 2) throw ConfigError("n_per_domain must be >= 2");
  const std::size_t d = dim();
  if (d == 0) throw ConfigError("drift spec has zero feature dimension");
  double prior_sum = 0.0;
  for (const auto& c : classes) {
    if (!(c.prior >= 0.0)) throw ConfigError("class prior must be non-negative");
    prior_sum += c.prior;
    if (c.components.empty()) throw ConfigError("class has no mixture components");
    for (const auto& comp : c.components) {
      if (comp.mean.size() != d || comp.stddev.size() != d) {
        throw ConfigError("mixture component dimension differs from " + std::to_string(d));
      }
      if (!(comp.weight > 0.0)) throw ConfigError("mixture weight must be positive");
      for (double s : comp.stddev) {
        if (!(s > 0.0) || !std::isfinite(s)) {
          throw ConfigError("degenerate covariance: component std must be positive");
        }
      }
    }
  }
  if (std::abs(prior_sum - 1.0) > 1e-9) throw ConfigError("class priors must sum to 1");
  if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be non-negative");
  const auto& r = drift.rotation;
  if (r.rows() != d || r.cols() != d || drift.translation.size() != d || drift.scale.size() != d) {
    throw ConfigError("drift transform dimension differs from " + std::to_string(d));
  }
  const numkit::Tensor rrt = numkit::matmul_nt(r, r);
  if (numkit::max_abs_diff(rrt, numkit::Tensor::identity(d)) > 1e-9) {
    throw ConfigError("drift rotation is not orthonormal");
  }
}

numkit::Tensor plane_rotation(std::size_t dim, double angle_rad, numkit::Rng& rng) {
  if (dim < 2) throw ConfigError("plane rotation needs dim >= 2");
  std::vector<double> u(dim), v(dim);
  auto normalize = [](std::vector<double>& a) {
    double n = 0.0;
    for (double x : a) n += x * x;
    n = std::sqrt(n);
    for (double& x : a) x /= n;
  };
  for (auto& x : u) x = rng.normal();
  normalize(u);
  for (auto& x : v) x = rng.normal();
  double dot = 0.0;
  for (std::size_t i = 0; i < dim; ++i) dot += u[i] * v[i];
  for (std::size_t i = 0; i < dim; ++i) v[i] -= dot * u[i];
  normalize(v);
  const double c = std::cos(angle_rad), s = std::sin(angle_rad);
  numkit::Tensor r = numkit::Tensor::identity(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      r(i, j) += (c - 1.0) * (u[i] * u[j] + v[i] * v[j]) + s * (v[i] * u[j] - u[i] * v[j]);
    }
  }
  return r;
}

DriftSpec make_drift_spec(const DriftPreset& p) {
  numkit::Rng rng(p.seed ^ 0xd1f7ULL);
  DriftSpec spec;
  spec.n_per_domain = p.n_per_domain;
  spec.seed = p.seed;
  spec.noise_std = p.noise_std;
  const double priors[2] = {1.0 - p.attack_prior, p.attack_prior};
  for (std::size_t c = 0; c < 2; ++c) {
    const double prior = priors[c];
    const double shift = c == 1 ? p.class_shift * p.component_std : 0.0;
    ClassSource cls;
    cls.prior = prior;
    for (std::size_t k = 0; k < p.components_per_class; ++k) {
      MixtureComponent comp;
      comp.weight = 1.0;
      for (std::size_t j = 0; j < p.dim; ++j) comp.mean.push_back(p.separation * rng.normal() + shift);
      comp.stddev.assign(p.dim, p.component_std);
      cls.components.push_back(std::move(comp));
    }
    spec.classes.push_back(std::move(cls));
  }
  spec.drift.rotation = plane_rotation(p.dim, p.rotation_deg * std::numbers::pi / 180.0, rng);
  spec.drift.translation.assign(p.dim, p.translation_sigma * p.component_std);
  spec.drift.scale.assign(p.dim, p.scale);
  spec.validate();
  return spec;
}

std::pair<FeatureMatrix, FeatureMatrix> synth_drift(const DriftSpec& spec) {
  spec.validate();
  const std::size_t d = spec.dim();
  numkit::Rng root(spec.seed);
  numkit::Rng rng_h = root.fork();
  numkit::Rng rng_s = root.fork();

  FeatureMatrix h, s;
  sample_domain(spec, rng_h, h.features, h.labels);
  h.feature_names = feature_names(d);

  numkit::Tensor base;
  sample_domain(spec, rng_s, base, s.labels);
  const numkit::Tensor rotated = numkit::matmul_nt(base, spec.drift.rotation);
  s.features = numkit::Tensor(base.rows(), d);
  for (std::size_t i = 0; i < base.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      s.features(i, j) = spec.drift.scale[j] * rotated(i, j) + spec.drift.translation[j] +
                         spec.noise_std * rng_s.normal();
    }
  }
  s.feature_names = feature_names(d);
  return {std::move(h), std::move(s)};
}

DriftSpec drift_spec_from_json(const nlohmann::json& j) {
  if (!j.contains("classes")) {
    DriftPreset p;
    p.n_per_domain = j.value("n_per_domain", p.n_per_domain);
    p.dim = j.value("dim", p.dim);
    p.components_per_class = j.value("components_per_class", p.components_per_class);
    p.attack_prior = j.value("attack_prior", p.attack_prior);
    p.component_std = j.value("component_std", p.component_std);
    p.separation = j.value("separation", p.separation);
    p.class_shift = j.value("class_shift", p.class_shift);
    p.rotation_deg = j.value("rotation_deg", p.rotation_deg);
    p.translation_sigma = j.value("translation_sigma", p.translation_sigma);
    p.scale = j.value("scale", p.scale);
    p.noise_std = j.value("noise_std", p.noise_std);
    p.seed = j.value("seed", p.seed);
    return make_drift_spec(p);
  }
  DriftSpec spec;
  spec.n_per_domain = j.at("n_per_domain").get<std::size_t>();
  spec.seed = j.value("seed", spec.seed);
  spec.noise_std = j.value("noise_std", 0.0);
  for (const auto& jc : j.at("classes")) {
    ClassSource c;
    c.prior = jc.at("prior").get<double>();
    for (const auto& jm : jc.at("components")) {
      c.components.push_back({jm.value("weight", 1.0), jm.at("mean").get<std::vector<double>>(),
                              jm.at("std").get<std::vector<double>>()});
    }
    spec.classes.push_back(std::move(c));
  }
  const std::size_t d = spec.dim();
  spec.drift = DriftTransform::identity(d);
  if (j.contains("drift")) {
    const auto& jd = j.at("drift");
    if (jd.contains("rotation")) {
      const auto rows = jd.at("rotation").get<std::vector<std::vector<double>>>();
      std::vector<double> flat;
      for (const auto& r : rows) {
        if (r.size() != rows.size()) throw ConfigError("drift rotation must be square");
        flat.insert(flat.end(), r.begin(), r.end());
      }
      spec.drift.rotation = numkit::Tensor(rows.size(), rows.size(), std::move(flat));
    }
    if (jd.contains("translation")) spec.drift.translation = jd.at("translation").get<std::vector<double>>();
    if (jd.contains("scale")) spec.drift.scale = jd.at("scale").get<std::vector<double>>();
  }
  spec.validate();
  return spec;
}

nlohmann::json to_json(const DriftSpec& spec) {
  nlohmann::json j;
  j["n_per_domain"] = spec.n_per_domain;
  j["seed"] = spec.seed;
  j["noise_std"] = spec.noise_std;
  for (const auto& c : spec.classes) {
    nlohmann::json jc;
    jc["prior"] = c.prior;
    for (const auto& m : c.components) {
      jc["components"].push_back({{"weight", m.weight}, {"mean", m.mean}, {"std", m.stddev}});
    }
    j["classes"].push_back(jc);
  }
  std::vector<std::vector<double>> rot;
  for (std::size_t r = 0; r < spec.drift.rotation.rows(); ++r) {
    auto row = spec.drift.rotation.row(r);
    rot.emplace_back(row.begin(), row.end());
  }
  j["drift"] = {{"rotation", rot}, {"translation", spec.drift.translation}, {"scale", spec.drift.scale}};
  return j;
}

}  // namespace ldrift::netflow
