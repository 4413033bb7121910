#include "ldrift/gat.hpp"

#include <cmath>

#include "ldrift/errors.hpp"
#include "ldrift/numkit/ops.hpp"

namespace ldrift::gat {

using numkit::Activation;
using numkit::ParameterBinder;
using numkit::Tape;
using numkit::Tensor;
using numkit::Var;

void GatConfig::validate() const {
  if (in_dim == 0) throw ConfigError("GAT in_dim must be >= 1");
  if (hidden_dim == 0) throw ConfigError("GAT hidden_dim must be >= 1");
  if (heads == 0) throw ConfigError("GAT heads must be >= 1");
  if (layers == 0) throw ConfigError("GAT layers must be >= 1");
  if (!(leaky_relu_alpha > 0.0 && leaky_relu_alpha < 1.0)) {
    throw ConfigError("GAT leaky_relu_alpha must lie in (0, 1)");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("GAT dropout_rate must lie in [0, 1)");
  if (!(learning_rate > 0.0)) throw ConfigError("GAT learning_rate must be positive");
}

template <typename Self, typename Out>
static void collect_named(Self& p, Out& out) {
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    for (std::size_t h = 0; h < p.layers[l].heads.size(); ++h) {
      auto& head = p.layers[l].heads[h];
      const std::string prefix = "layer" + std::to_string(l) + ".head" + std::to_string(h) + ".";
      out.emplace_back(prefix + "weight", &head.weight);
      out.emplace_back(prefix + "attn_src", &head.attn_src);
      out.emplace_back(prefix + "attn_dst", &head.attn_dst);
    }
  }
  out.emplace_back("output.weight", &p.output.weight);
  out.emplace_back("output.bias", &p.output.bias);
}

std::vector<std::pair<std::string, const Tensor*>> GatParams::named_tensors() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  collect_named(*this, out);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> GatParams::named_tensors() {
  std::vector<std::pair<std::string, Tensor*>> out;
  collect_named(*this, out);
  return out;
}

GatParams init_gat(const GatConfig& config) {
  config.validate();
  numkit::Rng rng(config.seed);
  GatParams p;
  p.leaky_relu_alpha = config.leaky_relu_alpha;
  std::size_t width = config.in_dim;
  for (std::size_t l = 0; l < config.layers; ++l) {
    GatLayerParams layer;
    layer.concat = l + 1 < config.layers;
    for (std::size_t h = 0; h < config.heads; ++h) {
      GatHead head;
      head.weight = numkit::glorot_uniform(width, config.hidden_dim, rng);
      head.attn_src = numkit::glorot_uniform(config.hidden_dim, 1, rng);
      head.attn_dst = numkit::glorot_uniform(config.hidden_dim, 1, rng);
      layer.heads.push_back(std::move(head));
    }
    width = layer.out_dim();
    p.layers.push_back(std::move(layer));
  }
  p.output = numkit::Dense::glorot(width, 2, rng);
  return p;
}

namespace {

struct TapeForward {
  Var logits;
  std::vector<std::vector<Var>> attention;
};

void check_width(const graph::TrafficGraph& g, const GatParams& params) {
  if (params.layers.empty()) throw ConfigError("GAT has no layers");
  if (g.node_features().cols() != params.in_dim()) {
    throw DimensionError("GAT expects node width " + std::to_string(params.in_dim()) + ", got " +
                         std::to_string(g.node_features().cols()));
  }
}

template <typename Layer>
Var layer_on_tape(ParameterBinder& binder, Layer& layer, const Var& h, const graph::TrafficGraph& g,
                  double alpha, std::vector<Var>* attention) {
  const std::size_t n = g.node_count();
  const auto& src = g.sources();
  const auto& dst = g.targets();
  const Activation leaky = Activation::leaky_relu(alpha);
  std::vector<Var> outs;
  for (auto& head : layer.heads) {
    Var w = binder.bind(head.weight);
    Var a_src = binder.bind(head.attn_src);
    Var a_dst = binder.bind(head.attn_dst);
    Var wh = numkit::matmul(h, w);
    Var score_src = numkit::matmul(wh, a_src);
    Var score_dst = numkit::matmul(wh, a_dst);
    Var logits = numkit::activate(
        numkit::add(numkit::gather_rows(score_src, src), numkit::gather_rows(score_dst, dst)), leaky);
    Var att = numkit::segment_softmax(logits, dst, n);
    if (attention) attention->push_back(att);
    outs.push_back(numkit::weighted_scatter(att, wh, src, dst, n));
  }
  Var combined = layer.concat ? numkit::concat_cols(outs) : numkit::average(outs);
  return numkit::activate(combined, Activation::elu());
}

template <typename Params>
TapeForward forward_on_tape(Tape& tape, ParameterBinder& binder, Params& params,
                            const graph::TrafficGraph& g, double dropout, numkit::Rng* rng) {
  TapeForward f;
  Var h = tape.constant(g.node_features());
  for (auto& layer : params.layers) {
    if (dropout > 0.0 && rng) {
      Tensor mask(h.shape().rows, h.shape().cols);
      for (auto& m : mask.data()) m = rng->uniform() < dropout ? 0.0 : 1.0 / (1.0 - dropout);
      h = numkit::mul(h, tape.constant(std::move(mask)));
    }
    f.attention.emplace_back();
    h = layer_on_tape(binder, layer, h, g, params.leaky_relu_alpha, &f.attention.back());
  }
  f.logits = numkit::dense_forward(binder.bind(params.output), h);
  return f;
}

double accuracy(const Tensor& logits, const std::vector<int>& labels) {
  std::size_t correct = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const int pred = logits(r, 1) > logits(r, 0) ? 1 : 0;
    correct += pred == labels[r];
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

}  // namespace

LayerOutput gat_layer(const Tensor& h, const graph::TrafficGraph& g, const GatLayerParams& layer,
                      double leaky_relu_alpha) {
  if (layer.heads.empty()) throw ConfigError("GAT layer has no heads");
  if (h.cols() != layer.in_dim() || h.rows() != g.node_count()) {
    throw DimensionError("GAT layer expects " + std::to_string(g.node_count()) + "x" +
                         std::to_string(layer.in_dim()) + " features, got " + h.shape().str());
  }
  Tape tape;
  ParameterBinder binder(tape, false);
  std::vector<Var> attention;
  Var out = layer_on_tape(binder, layer, tape.constant(h), g, leaky_relu_alpha, &attention);
  LayerOutput result{out.value(), {}};
  for (const auto& a : attention) result.attention.push_back(a.value());
  return result;
}

ClassifyTrace classify_with_attention(const graph::TrafficGraph& g, const GatParams& params) {
  check_width(g, params);
  Tape tape;
  ParameterBinder binder(tape, false);
  const TapeForward f = forward_on_tape(tape, binder, params, g, 0.0, nullptr);
  ClassifyTrace trace{numkit::softmax_rows(f.logits.value()), {}};
  for (const auto& layer : f.attention) {
    trace.attention.emplace_back();
    for (const auto& a : layer) trace.attention.back().push_back(a.value());
  }
  return trace;
}

Tensor classify(const graph::TrafficGraph& g, const GatParams& params) {
  return classify_with_attention(g, params).probabilities;
}

std::vector<int> predict(const graph::TrafficGraph& g, const GatParams& params) {
  const Tensor p = classify(g, params);
  std::vector<int> out(p.rows());
  for (std::size_t r = 0; r < p.rows(); ++r) out[r] = p(r, 1) > p(r, 0) ? 1 : 0;
  return out;
}

double gat_loss(const graph::TrafficGraph& g, const GatParams& params) {
  check_width(g, params);
  Tape tape;
  ParameterBinder binder(tape, false);
  const TapeForward f = forward_on_tape(tape, binder, params, g, 0.0, nullptr);
  return numkit::nll_loss(numkit::log_softmax_rows(f.logits), g.labels()).value()[0];
}

std::vector<Tensor> gat_loss_gradient(const graph::TrafficGraph& g, const GatParams& params) {
  check_width(g, params);
  GatParams copy = params;
  Tape tape;
  ParameterBinder binder(tape, true);
  const TapeForward f = forward_on_tape(tape, binder, copy, g, 0.0, nullptr);
  Var loss = numkit::nll_loss(numkit::log_softmax_rows(f.logits), g.labels());
  tape.backward(loss);
  return binder.gradients();
}

GatTrainResult train_gat(const graph::TrafficGraph& g, const GatConfig& config) {
  config.validate();
  const auto& labels = g.labels();
  if (labels.size() != g.node_count()) throw DataError("GAT training graph has no labels");
  bool has[2] = {false, false};
  for (int l : labels) {
    if (l != 0 && l != 1) throw DataError("GAT labels must be 0 or 1");
    has[l] = true;
  }
  if (!has[0] || !has[1]) throw DataError("GAT training needs both classes in the labels");

  GatTrainResult result{init_gat(config), {}};
  check_width(g, result.params);
  numkit::Rng rng(config.seed ^ 0x6a7ULL);
  numkit::Adam adam({config.learning_rate});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Tape tape;
    ParameterBinder binder(tape, true);
    const TapeForward f =
        forward_on_tape(tape, binder, result.params, g, config.dropout_rate, &rng);
    Var loss = numkit::nll_loss(numkit::log_softmax_rows(f.logits), labels);
    const double value = loss.value()[0];
    if (!std::isfinite(value)) {
      throw DivergenceError("GAT loss became non-finite at epoch " + std::to_string(epoch + 1));
    }
    result.history.push_back({value, accuracy(f.logits.value(), labels)});
    tape.backward(loss);
    binder.apply(adam);
  }
  return result;
}

}  // namespace ldrift::gat
