#include "ldrift/align.hpp"

#include <algorithm>
#include <cmath>

#include "ldrift/errors.hpp"
#include "ldrift/numkit/ops.hpp"

namespace ldrift::align {

using numkit::Activation;
using numkit::ParameterBinder;
using numkit::Tape;
using numkit::Tensor;
using numkit::Var;

GaussianMoments moments(const Tensor& batch) {
  const std::size_t n = batch.rows();
  if (n < 2) throw DimensionError("moments need at least 2 rows, got " + std::to_string(n));
  GaussianMoments m;
  m.mean.assign(batch.cols(), 0.0);
  m.stddev.assign(batch.cols(), 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < batch.cols(); ++c) m.mean[c] += batch(r, c);
  for (auto& v : m.mean) v /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < batch.cols(); ++c) {
      const double d = batch(r, c) - m.mean[c];
      m.stddev[c] += d * d;
    }
  }
  for (auto& v : m.stddev) v = std::sqrt(v / static_cast<double>(n));
  return m;
}

double wasserstein_distance(const GaussianMoments& a, const GaussianMoments& b) {
  if (a.mean.size() != b.mean.size() || a.stddev.size() != b.stddev.size() ||
      a.mean.size() != a.stddev.size()) {
    throw DimensionError("W_d between moments of dimension " + std::to_string(a.dim()) + " and " +
                         std::to_string(b.dim()));
  }
  double s = 0.0;
  for (std::size_t j = 0; j < a.dim(); ++j) {
    const double dm = a.mean[j] - b.mean[j];
    const double ds = a.stddev[j] - b.stddev[j];
    s += dm * dm + ds * ds;
  }
  return std::sqrt(s);
}

Var wasserstein_to(const Var& batch, const GaussianMoments& target, double variance_floor) {
  const auto [n, d] = batch.shape();
  if (d != target.dim()) {
    throw DimensionError("W_d: batch width " + std::to_string(d) + " vs target dimension " +
                         std::to_string(target.dim()));
  }
  if (n < 2) throw DimensionError("W_d needs at least 2 rows per batch");
  Tape& tape = batch.tape();
  Var mu = numkit::column_mean(batch);
  Var centered = numkit::add_bias(batch, numkit::scale(mu, -1.0));
  Var sigma = numkit::sqrt(numkit::column_mean(numkit::square(centered)), variance_floor);
  Var dm = numkit::sub(mu, tape.constant(Tensor::row_vector(target.mean)));
  Var ds = numkit::sub(sigma, tape.constant(Tensor::row_vector(target.stddev)));
  return numkit::sqrt(numkit::add(numkit::sum(numkit::square(dm)), numkit::sum(numkit::square(ds))));
}

std::string to_string(MomentScope scope) {
  return scope == MomentScope::kPerBatch ? "per_batch" : "global";
}

MomentScope moment_scope_from_string(const std::string& name) {
  if (name == "per_batch") return MomentScope::kPerBatch;
  if (name == "global") return MomentScope::kGlobal;
  throw ConfigError("unknown moment_scope '" + name + "' (expected per_batch or global)");
}

void AlignConfig::validate() const {
  if (latent_dim == 0) throw ConfigError("aligner latent_dim must be >= 1");
  for (auto w : hidden) {
    if (w == 0) throw ConfigError("aligner hidden widths must be >= 1");
  }
  if (batch_size < 2) throw ConfigError("aligner batch_size must be >= 2");
  if (!(learning_rate > 0.0)) throw ConfigError("aligner learning_rate must be positive");
  if (!(init_noise >= 0.0)) throw ConfigError("aligner init_noise must be >= 0");
}

template <typename Self, typename Out>
static void collect_named(Self& p, Out& out) {
  out.emplace_back("skip.weight", &p.skip.weight);
  out.emplace_back("skip.bias", &p.skip.bias);
  for (std::size_t i = 0; i < p.hidden.size(); ++i) {
    out.emplace_back("hidden." + std::to_string(i) + ".weight", &p.hidden[i].weight);
    out.emplace_back("hidden." + std::to_string(i) + ".bias", &p.hidden[i].bias);
  }
  out.emplace_back("out.weight", &p.out.weight);
  out.emplace_back("out.bias", &p.out.bias);
}

std::vector<std::pair<std::string, const Tensor*>> AlignParams::named_tensors() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  collect_named(*this, out);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> AlignParams::named_tensors() {
  std::vector<std::pair<std::string, Tensor*>> out;
  collect_named(*this, out);
  return out;
}

AlignParams init_align(const AlignConfig& config) {
  config.validate();
  numkit::Rng rng(config.seed);
  const std::size_t d = config.latent_dim;
  AlignParams p;
  p.skip = {Tensor::identity(d), Tensor(1, d)};
  for (auto& w : p.skip.weight.data()) w += config.init_noise * rng.normal();
  std::size_t width = d;
  for (auto h : config.hidden) {
    p.hidden.push_back(numkit::Dense::glorot(width, h, rng));
    width = h;
  }
  p.out = numkit::Dense::glorot(width, d, rng);
  for (auto& w : p.out.weight.data()) w *= 1e-2;
  return p;
}

namespace {

template <typename Params>
Var forward_on_tape(ParameterBinder& binder, Params& params, const Var& z) {
  Var y = numkit::dense_forward(binder.bind(params.skip), z);
  Var h = z;
  for (auto& layer : params.hidden) {
    h = numkit::activate(numkit::dense_forward(binder.bind(layer), h), Activation::elu());
  }
  return numkit::add(y, numkit::dense_forward(binder.bind(params.out), h));
}

void check_width(const Tensor& z, const AlignParams& params) {
  if (z.cols() != params.latent_dim()) {
    throw DimensionError("aligner expects latent width " + std::to_string(params.latent_dim()) +
                         ", got " + std::to_string(z.cols()));
  }
}

}  // namespace

Tensor apply_align(const Tensor& z, const AlignParams& params) {
  check_width(z, params);
  Tensor y = params.skip.forward(z);
  Tensor h = z;
  for (const auto& layer : params.hidden) h = numkit::activate(layer.forward(h), Activation::elu());
  numkit::add_inplace(y, params.out.forward(h));
  return y;
}

double align_loss(const Tensor& z, const GaussianMoments& target, const AlignParams& params) {
  check_width(z, params);
  Tape tape;
  ParameterBinder binder(tape, false);
  return wasserstein_to(forward_on_tape(binder, params, tape.constant(z)), target).value()[0];
}

std::vector<Tensor> align_loss_gradient(const Tensor& z, const GaussianMoments& target,
                                        const AlignParams& params) {
  check_width(z, params);
  AlignParams copy = params;
  Tape tape;
  ParameterBinder binder(tape, true);
  Var loss = wasserstein_to(forward_on_tape(binder, copy, tape.constant(z)), target);
  tape.backward(loss);
  return binder.gradients();
}

AlignTrainResult train_align(const Tensor& z_source, const GaussianMoments& target,
                             const AlignConfig& config) {
  config.validate();
  if (target.dim() != config.latent_dim) {
    throw DimensionError("alignment target has dimension " + std::to_string(target.dim()) +
                         ", aligner is configured for " + std::to_string(config.latent_dim));
  }
  AlignTrainResult result{init_align(config), {}};
  check_width(z_source, result.params);
  if (z_source.rows() < 2) throw DataError("alignment needs at least 2 source rows");

  numkit::Rng rng(config.seed ^ 0xa11ULL);
  numkit::Adam adam({config.learning_rate});
  const std::size_t batch =
      config.moment_scope == MomentScope::kGlobal ? z_source.rows() : std::min(config.batch_size, z_source.rows());

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = rng.permutation(z_source.rows());
    double total = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::size_t stop = std::min(order.size(), start + batch);
      // A single trailing row has no spread; skip it this epoch.
      if (stop - start < 2) break;
      const std::vector<std::size_t> idx(order.begin() + start, order.begin() + stop);
      Tape tape;
      ParameterBinder binder(tape, true);
      Var loss = wasserstein_to(forward_on_tape(binder, result.params, tape.constant(z_source.select_rows(idx))),
                                target);
      const double value = loss.value()[0];
      if (!std::isfinite(value)) {
        throw DivergenceError("alignment loss became non-finite at epoch " + std::to_string(epoch + 1) +
                              ", step " + std::to_string(steps + 1));
      }
      tape.backward(loss);
      binder.apply(adam);
      total += value;
      ++steps;
    }
    result.history.push_back(steps ? total / static_cast<double>(steps) : 0.0);
  }
  return result;
}

}  // namespace ldrift::align
