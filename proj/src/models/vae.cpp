#include "ldrift/vae.hpp"

#include <algorithm>
#include <cmath>

#include "ldrift/errors.hpp"
#include "ldrift/numkit/ops.hpp"

namespace ldrift::vae {

using numkit::Activation;
using numkit::ParameterBinder;
using numkit::Tape;
using numkit::Tensor;
using numkit::Var;

void VaeConfig::validate() const {
  if (input_dim == 0) throw ConfigError("VAE input_dim must be >= 1");
  if (latent_dim == 0) throw ConfigError("VAE latent_dim must be >= 1");
  for (auto w : encoder_hidden) {
    if (w == 0) throw ConfigError("VAE hidden widths must be >= 1");
  }
  if (batch_size == 0) throw ConfigError("VAE batch_size must be >= 1");
  if (!(kl_weight >= 0.0)) throw ConfigError("VAE kl_weight must be >= 0");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) {
    throw ConfigError("VAE warmup_fraction must lie in [0, 1]");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("VAE learning_rate must be positive");
}

template <typename Self, typename Out>
static void collect_named(Self& p, Out& out) {
  for (std::size_t i = 0; i < p.encoder.size(); ++i) {
    out.emplace_back("encoder." + std::to_string(i) + ".weight", &p.encoder[i].weight);
    out.emplace_back("encoder." + std::to_string(i) + ".bias", &p.encoder[i].bias);
  }
  out.emplace_back("mean_head.weight", &p.mean_head.weight);
  out.emplace_back("mean_head.bias", &p.mean_head.bias);
  out.emplace_back("log_var_head.weight", &p.log_var_head.weight);
  out.emplace_back("log_var_head.bias", &p.log_var_head.bias);
  for (std::size_t i = 0; i < p.decoder.size(); ++i) {
    out.emplace_back("decoder." + std::to_string(i) + ".weight", &p.decoder[i].weight);
    out.emplace_back("decoder." + std::to_string(i) + ".bias", &p.decoder[i].bias);
  }
}

std::vector<std::pair<std::string, const Tensor*>> VaeParams::named_tensors() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  collect_named(*this, out);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> VaeParams::named_tensors() {
  std::vector<std::pair<std::string, Tensor*>> out;
  collect_named(*this, out);
  return out;
}

VaeParams init_vae(const VaeConfig& config) {
  config.validate();
  numkit::Rng rng(config.seed);
  VaeParams p;
  std::size_t width = config.input_dim;
  for (auto h : config.encoder_hidden) {
    p.encoder.push_back(numkit::Dense::glorot(width, h, rng));
    width = h;
  }
  p.mean_head = numkit::Dense::glorot(width, config.latent_dim, rng);
  p.log_var_head = numkit::Dense::glorot(width, config.latent_dim, rng);
  width = config.latent_dim;
  for (auto it = config.encoder_hidden.rbegin(); it != config.encoder_hidden.rend(); ++it) {
    p.decoder.push_back(numkit::Dense::glorot(width, *it, rng));
    width = *it;
  }
  p.decoder.push_back(numkit::Dense::glorot(width, config.input_dim, rng));
  p.sigmoid_output = config.sigmoid_output;
  return p;
}

namespace {

const Activation kHidden = Activation::elu();

Activation output_activation(const VaeParams& p) {
  return p.sigmoid_output ? Activation::sigmoid() : Activation::identity();
}

void check_input(const Tensor& x, const VaeParams& params) {
  if (x.cols() != params.input_dim()) {
    throw DimensionError("VAE expects " + std::to_string(params.input_dim()) +
                         " input features, got " + std::to_string(x.cols()));
  }
}

Tensor encoder_trunk(const Tensor& x, const VaeParams& params) {
  Tensor h = x;
  for (const auto& layer : params.encoder) h = numkit::activate(layer.forward(h), kHidden);
  return h;
}

struct TapeForward {
  Var mean;
  Var log_var;
  Var reconstruction;
};

template <typename Params>
TapeForward forward_on_tape(ParameterBinder& binder, Params& params, const Var& x,
                            const Tensor& eps) {
  Var h = x;
  for (auto& layer : params.encoder) h = numkit::activate(dense_forward(binder.bind(layer), h), kHidden);
  Var mean = dense_forward(binder.bind(params.mean_head), h);
  Var log_var = dense_forward(binder.bind(params.log_var_head), h);
  Var stddev = numkit::activate(numkit::scale(log_var, 0.5), Activation::exp());
  Var z = numkit::add(mean, numkit::mul(stddev, x.tape().constant(eps)));
  Var d = z;
  for (std::size_t i = 0; i < params.decoder.size(); ++i) {
    d = dense_forward(binder.bind(params.decoder[i]), d);
    d = numkit::activate(d, i + 1 == params.decoder.size() ? output_activation(params) : kHidden);
  }
  return {mean, log_var, d};
}

}  // namespace

LatentBatch encode(const Tensor& x, const VaeParams& params, numkit::Rng& rng) {
  check_input(x, params);
  const Tensor h = encoder_trunk(x, params);
  LatentBatch out;
  out.mean = params.mean_head.forward(h);
  out.log_var = params.log_var_head.forward(h);
  out.sample = Tensor(out.mean.rows(), out.mean.cols());
  for (std::size_t i = 0; i < out.sample.size(); ++i) {
    out.sample[i] = out.mean[i] + std::exp(0.5 * out.log_var[i]) * rng.normal();
  }
  return out;
}

Tensor decode(const Tensor& z, const VaeParams& params) {
  if (z.cols() != params.latent_dim()) {
    throw DimensionError("VAE decoder expects latent width " + std::to_string(params.latent_dim()) +
                         ", got " + std::to_string(z.cols()));
  }
  Tensor d = z;
  for (std::size_t i = 0; i < params.decoder.size(); ++i) {
    d = numkit::activate(params.decoder[i].forward(d),
                         i + 1 == params.decoder.size() ? output_activation(params) : kHidden);
  }
  return d;
}

Tensor project(const Tensor& x, const VaeParams& params) {
  check_input(x, params);
  return params.mean_head.forward(encoder_trunk(x, params));
}

std::vector<double> kl_per_row(const Tensor& mean, const Tensor& log_var) {
  if (mean.shape() != log_var.shape()) {
    throw DimensionError("KL: mean " + mean.shape().str() + " vs log_var " + log_var.shape().str());
  }
  std::vector<double> kl(mean.rows(), 0.0);
  for (std::size_t r = 0; r < mean.rows(); ++r) {
    for (std::size_t c = 0; c < mean.cols(); ++c) {
      const double m = mean(r, c), lv = log_var(r, c);
      kl[r] += 0.5 * (m * m + std::exp(lv) - 1.0 - lv);
    }
  }
  return kl;
}

ElboTerms elbo_loss(const Tensor& x, const Tensor& reconstruction, const Tensor& mean,
                    const Tensor& log_var, double kl_weight) {
  if (x.shape() != reconstruction.shape() || x.rows() != mean.rows()) {
    throw DimensionError("ELBO: input " + x.shape().str() + ", reconstruction " +
                         reconstruction.shape().str() + ", mean " + mean.shape().str());
  }
  if (x.rows() == 0) throw DimensionError("ELBO of an empty batch");
  const double n = static_cast<double>(x.rows());
  ElboTerms t;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = reconstruction[i] - x[i];
    t.reconstruction += e * e;
  }
  t.reconstruction /= n;
  for (double k : kl_per_row(mean, log_var)) t.kl += k;
  t.kl /= n;
  t.total = t.reconstruction + kl_weight * t.kl;
  return t;
}

Var elbo_loss(const Var& x, const Var& reconstruction, const Var& mean, const Var& log_var,
              double kl_weight) {
  if (x.shape() != reconstruction.shape() || mean.shape() != log_var.shape() ||
      x.shape().rows != mean.shape().rows) {
    throw DimensionError("ELBO: input " + x.shape().str() + ", reconstruction " +
                         reconstruction.shape().str() + ", mean " + mean.shape().str());
  }
  const double inv_n = 1.0 / static_cast<double>(x.shape().rows);
  Var recon = numkit::scale(numkit::sum(numkit::square(numkit::sub(reconstruction, x))), inv_n);
  Var kl_terms = numkit::sub(numkit::add(numkit::square(mean), numkit::activate(log_var, Activation::exp())),
                             numkit::add_scalar(log_var, 1.0));
  Var kl = numkit::scale(numkit::sum(kl_terms), 0.5 * inv_n);
  return numkit::add(recon, numkit::scale(kl, kl_weight));
}

VaeTrainResult train_vae(const Tensor& data, const VaeConfig& config) {
  VaeConfig cfg = config;
  if (cfg.input_dim == 0) cfg.input_dim = data.cols();
  return train_vae(data, cfg, init_vae(cfg));
}

VaeTrainResult train_vae(const Tensor& data, const VaeConfig& config, VaeParams initial) {
  VaeConfig cfg = config;
  if (cfg.input_dim == 0) cfg.input_dim = data.cols();
  cfg.validate();
  if (initial.input_dim() != cfg.input_dim || initial.latent_dim() != cfg.latent_dim) {
    throw DimensionError("initial VAE parameters do not match the configuration");
  }
  if (data.cols() != cfg.input_dim) {
    throw DimensionError("VAE configured for " + std::to_string(cfg.input_dim) +
                         " features, data has " + std::to_string(data.cols()));
  }
  if (data.rows() < cfg.batch_size && cfg.epochs > 0) {
    throw ConfigError("VAE needs at least batch_size (" + std::to_string(cfg.batch_size) +
                      ") rows, got " + std::to_string(data.rows()));
  }

  VaeTrainResult result{std::move(initial), {}};
  numkit::Rng rng(cfg.seed ^ 0x7a3e5ULL);
  numkit::Adam adam({cfg.learning_rate});
  const std::size_t warmup_epochs =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(cfg.warmup_fraction * cfg.epochs)));

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double kl_w =
        cfg.warmup_fraction > 0.0
            ? cfg.kl_weight * std::min(1.0, static_cast<double>(epoch + 1) / warmup_epochs)
            : cfg.kl_weight;
    const auto order = rng.permutation(data.rows());
    EpochLoss acc{0.0, 0.0, 0.0, kl_w};
    std::size_t seen = 0;
    for (std::size_t start = 0, batch = 0; start < order.size(); start += cfg.batch_size, ++batch) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::vector<std::size_t> idx(order.begin() + start, order.begin() + stop);
      const Tensor xb = data.select_rows(idx);
      Tensor eps(xb.rows(), cfg.latent_dim);
      for (auto& v : eps.data()) v = rng.normal();

      Tape tape;
      ParameterBinder binder(tape, true);
      Var x = tape.constant(xb);
      const TapeForward f = forward_on_tape(binder, result.params, x, eps);
      Var loss = elbo_loss(x, f.reconstruction, f.mean, f.log_var, kl_w);
      const double value = loss.value()[0];
      if (!std::isfinite(value)) {
        throw DivergenceError("VAE loss became non-finite at epoch " + std::to_string(epoch + 1) +
                              ", batch " + std::to_string(batch + 1));
      }
      tape.backward(loss);
      binder.apply(adam);

      const ElboTerms terms =
          elbo_loss(xb, f.reconstruction.value(), f.mean.value(), f.log_var.value(), kl_w);
      const double w = static_cast<double>(xb.rows());
      acc.total += terms.total * w;
      acc.reconstruction += terms.reconstruction * w;
      acc.kl += terms.kl * w;
      seen += xb.rows();
    }
    const double inv = 1.0 / static_cast<double>(seen);
    acc.total *= inv;
    acc.reconstruction *= inv;
    acc.kl *= inv;
    result.history.push_back(acc);
  }
  return result;
}

}  // namespace ldrift::vae
