#include "ldrift/numkit/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ldrift/errors.hpp"

namespace ldrift::numkit {
namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape " + a.shape().str() + " vs " +
                         b.shape().str());
  }
}

double activation_derivative(double x, double y, const Activation& act) {
  switch (act.kind) {
    case ActivationKind::kRelu: return x > 0.0 ? 1.0 : 0.0;
    case ActivationKind::kLeakyRelu: return x > 0.0 ? 1.0 : act.alpha;
    case ActivationKind::kElu: return x > 0.0 ? 1.0 : y + act.alpha;
    case ActivationKind::kSigmoid: return y * (1.0 - y);
    case ActivationKind::kTanh: return 1.0 - y * y;
    case ActivationKind::kExp: return y;
    case ActivationKind::kIdentity: return 1.0;
  }
  return 1.0;
}

std::vector<std::size_t> copy_index(std::span<const std::size_t> idx) {
  return {idx.begin(), idx.end()};
}

}  // namespace

Activation Activation::leaky_relu(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("leaky_relu slope must lie in (0, 1)");
  return {ActivationKind::kLeakyRelu, alpha};
}

double activate(double x, const Activation& act) {
  switch (act.kind) {
    case ActivationKind::kRelu: return x > 0.0 ? x : 0.0;
    case ActivationKind::kLeakyRelu: return x > 0.0 ? x : act.alpha * x;
    case ActivationKind::kElu: return x > 0.0 ? x : act.alpha * std::expm1(x);
    case ActivationKind::kSigmoid:
      if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
      else {
        const double e = std::exp(x);
        return e / (1.0 + e);
      }
    case ActivationKind::kTanh: return std::tanh(x);
    case ActivationKind::kExp: return std::exp(x);
    case ActivationKind::kIdentity: return x;
  }
  return x;
}

Tensor activate(const Tensor& x, const Activation& act) {
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = activate(x[i], act);
  return y;
}

Var matmul(const Var& a, const Var& b) {
  Tensor out = matmul(a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (Tensor* ga = t.grad_buffer(ia)) add_inplace(*ga, matmul_nt(g, t.value(ib)));
    if (Tensor* gb = t.grad_buffer(ib)) add_inplace(*gb, matmul_tn(t.value(ia), g));
  });
}

Var add_bias(const Var& x, const Var& bias) {
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols()) {
    throw DimensionError("add_bias: bias " + bv.shape().str() + " does not fit " +
                         xv.shape().str());
  }
  Tensor out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv[c];
  const std::size_t ix = x.id(), ib = bias.id();
  return x.tape().record(std::move(out), {x, bias}, [ix, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (Tensor* gx = t.grad_buffer(ix)) add_inplace(*gx, g);
    if (Tensor* gb = t.grad_buffer(ib)) {
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) (*gb)[c] += g(r, c);
    }
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  add_inplace(out, b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (Tensor* ga = t.grad_buffer(ia)) add_inplace(*ga, g);
    if (Tensor* gb = t.grad_buffer(ib)) add_inplace(*gb, g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (Tensor* ga = t.grad_buffer(ia)) add_inplace(*ga, g);
    if (Tensor* gb = t.grad_buffer(ib)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (Tensor* ga = t.grad_buffer(ia)) {
      const Tensor& bv = t.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
    }
    if (Tensor* gb = t.grad_buffer(ib)) {
      const Tensor& av = t.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
    }
  });
}

Var scale(const Var& x, double factor) {
  Tensor out = x.value();
  for (auto& v : out.data()) v *= factor;
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix, factor](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (Tensor* gx = t.grad_buffer(ix)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += factor * g[i];
    }
  });
}

Var add_scalar(const Var& x, double c) {
  Tensor out = x.value();
  for (auto& v : out.data()) v += c;
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix](Tape& t, std::size_t self) {
    if (Tensor* gx = t.grad_buffer(ix)) add_inplace(*gx, t.grad(self));
  });
}

Var activate(const Var& x, const Activation& act) {
  Tensor out = activate(x.value(), act);
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix, act](Tape& t, std::size_t self) {
    Tensor* gx = t.grad_buffer(ix);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    const Tensor& xv = t.value(ix);
    const Tensor& yv = t.value(self);
    for (std::size_t i = 0; i < g.size(); ++i)
      (*gx)[i] += g[i] * activation_derivative(xv[i], yv[i], act);
  });
}

Var square(const Var& x) {
  Tensor out = x.value();
  for (auto& v : out.data()) v *= v;
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix](Tape& t, std::size_t self) {
    Tensor* gx = t.grad_buffer(ix);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    const Tensor& xv = t.value(ix);
    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += 2.0 * xv[i] * g[i];
  });
}

Var sqrt(const Var& x, double eps) {
  Tensor out = x.value();
  for (auto& v : out.data()) v = std::sqrt(v + eps);
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix](Tape& t, std::size_t self) {
    Tensor* gx = t.grad_buffer(ix);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    const Tensor& yv = t.value(self);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (yv[i] > 0.0) (*gx)[i] += g[i] / (2.0 * yv[i]);
    }
  });
}

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const std::size_t ix = x.id();
  return x.tape().record(Tensor(1, 1, s), {x}, [ix](Tape& t, std::size_t self) {
    Tensor* gx = t.grad_buffer(ix);
    if (!gx) return;
    const double g = t.grad(self)[0];
    for (auto& v : gx->data()) v += g;
  });
}

Var mean(const Var& x) {
  const double n = static_cast<double>(x.value().size());
  if (n == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(x), 1.0 / n);
}

Var column_mean(const Var& x) {
  const Tensor& xv = x.value();
  if (xv.rows() == 0) throw DimensionError("column_mean of an empty tensor");
  Tensor out(1, xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < xv.cols(); ++c) out[c] += xv(r, c);
  const double inv = 1.0 / static_cast<double>(xv.rows());
  for (auto& v : out.data()) v *= inv;
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix, inv](Tape& t, std::size_t self) {
    Tensor* gx = t.grad_buffer(ix);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    for (std::size_t r = 0; r < gx->rows(); ++r)
      for (std::size_t c = 0; c < gx->cols(); ++c) (*gx)(r, c) += g[c] * inv;
  });
}

Var row_sum(const Var& x) {
  const Tensor& xv = x.value();
  Tensor out(xv.rows(), 1);
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < xv.cols(); ++c) out[r] += xv(r, c);
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix](Tape& t, std::size_t self) {
    Tensor* gx = t.grad_buffer(ix);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    for (std::size_t r = 0; r < gx->rows(); ++r)
      for (std::size_t c = 0; c < gx->cols(); ++c) (*gx)(r, c) += g[r];
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  const std::size_t n = parts.front().value().rows();
  std::size_t width = 0;
  for (const auto& p : parts) {
    if (p.value().rows() != n) throw DimensionError("concat_cols: row counts differ");
    width += p.value().cols();
  }
  Tensor out(n, width);
  std::vector<std::size_t> ids, offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < n; ++r)
      std::copy_n(v.row(r).begin(), v.cols(), out.row(r).begin() + off);
    ids.push_back(p.id());
    offsets.push_back(off);
    off += v.cols();
  }
  return parts.front().tape().record(
      std::move(out), parts, [ids, offsets](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          Tensor* gp = t.grad_buffer(ids[k]);
          if (!gp) continue;
          for (std::size_t r = 0; r < gp->rows(); ++r)
            for (std::size_t c = 0; c < gp->cols(); ++c) (*gp)(r, c) += g(r, offsets[k] + c);
        }
      });
}

Var average(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("average: no operands");
  Var acc = parts.front();
  for (std::size_t k = 1; k < parts.size(); ++k) acc = add(acc, parts[k]);
  return parts.size() == 1 ? acc : scale(acc, 1.0 / static_cast<double>(parts.size()));
}

Var gather_rows(const Var& x, std::span<const std::size_t> index) {
  Tensor out = x.value().select_rows(index);
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x},
                         [ix, idx = copy_index(index)](Tape& t, std::size_t self) {
                           Tensor* gx = t.grad_buffer(ix);
                           if (!gx) return;
                           const Tensor& g = t.grad(self);
                           const std::size_t w = g.cols();
                           for (std::size_t e = 0; e < idx.size(); ++e) {
                             auto dst = gx->row(idx[e]);
                             auto src = g.row(e);
                             for (std::size_t c = 0; c < w; ++c) dst[c] += src[c];
                           }
                         });
}

Tensor segment_softmax(const Tensor& logits, std::span<const std::size_t> segment,
                       std::size_t segment_count) {
  if (logits.cols() != 1 || logits.rows() != segment.size()) {
    throw DimensionError("segment_softmax: logits " + logits.shape().str() + " vs " +
                         std::to_string(segment.size()) + " segment ids");
  }
  std::vector<double> seg_max(segment_count, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> seg_size(segment_count, 0);
  for (std::size_t e = 0; e < segment.size(); ++e) {
    if (segment[e] >= segment_count) {
      throw StructuralError("segment_softmax: segment id " + std::to_string(segment[e]) +
                            " out of range");
    }
    seg_max[segment[e]] = std::max(seg_max[segment[e]], logits[e]);
    ++seg_size[segment[e]];
  }
  for (std::size_t s = 0; s < segment_count; ++s) {
    if (seg_size[s] == 0) {
      throw StructuralError("segment_softmax: segment " + std::to_string(s) +
                            " is empty (isolated node)");
    }
  }
  Tensor out(logits.rows(), 1);
  std::vector<double> denom(segment_count, 0.0);
  for (std::size_t e = 0; e < segment.size(); ++e) {
    out[e] = std::exp(logits[e] - seg_max[segment[e]]);
    denom[segment[e]] += out[e];
  }
  for (std::size_t e = 0; e < segment.size(); ++e) out[e] /= denom[segment[e]];
  return out;
}

Var segment_softmax(const Var& logits, std::span<const std::size_t> segment,
                    std::size_t segment_count) {
  Tensor out = segment_softmax(logits.value(), segment, segment_count);
  const std::size_t il = logits.id();
  return logits.tape().record(
      std::move(out), {logits},
      [il, seg = copy_index(segment), segment_count](Tape& t, std::size_t self) {
        Tensor* gl = t.grad_buffer(il);
        if (!gl) return;
        const Tensor& g = t.grad(self);
        const Tensor& y = t.value(self);
        // d logit_e = y_e * (g_e - sum_{f in seg} g_f y_f)
        std::vector<double> dot(segment_count, 0.0);
        for (std::size_t e = 0; e < seg.size(); ++e) dot[seg[e]] += g[e] * y[e];
        for (std::size_t e = 0; e < seg.size(); ++e) (*gl)[e] += y[e] * (g[e] - dot[seg[e]]);
      });
}

Var weighted_scatter(const Var& weight, const Var& values, std::span<const std::size_t> src,
                     std::span<const std::size_t> dst, std::size_t out_rows) {
  const Tensor& w = weight.value();
  const Tensor& v = values.value();
  if (w.cols() != 1 || w.rows() != src.size() || src.size() != dst.size()) {
    throw DimensionError("weighted_scatter: weight " + w.shape().str() + " vs " +
                         std::to_string(src.size()) + " edges");
  }
  const std::size_t width = v.cols();
  Tensor out(out_rows, width);
  for (std::size_t e = 0; e < src.size(); ++e) {
    if (src[e] >= v.rows() || dst[e] >= out_rows) {
      throw StructuralError("weighted_scatter: edge endpoint out of range");
    }
    auto o = out.row(dst[e]);
    auto in = v.row(src[e]);
    for (std::size_t c = 0; c < width; ++c) o[c] += w[e] * in[c];
  }
  const std::size_t iw = weight.id(), iv = values.id();
  return weight.tape().record(
      std::move(out), {weight, values},
      [iw, iv, s = copy_index(src), d = copy_index(dst)](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& wv = t.value(iw);
        const Tensor& vv = t.value(iv);
        Tensor* gw = t.grad_buffer(iw);
        Tensor* gv = t.grad_buffer(iv);
        const std::size_t width = vv.cols();
        for (std::size_t e = 0; e < s.size(); ++e) {
          auto ge = g.row(d[e]);
          if (gw) {
            auto in = vv.row(s[e]);
            double acc = 0.0;
            for (std::size_t c = 0; c < width; ++c) acc += ge[c] * in[c];
            (*gw)[e] += acc;
          }
          if (gv) {
            auto out = gv->row(s[e]);
            for (std::size_t c = 0; c < width; ++c) out[c] += wv[e] * ge[c];
          }
        }
      });
}

Tensor softmax_rows(const Tensor& x) {
  Tensor out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    auto o = out.row(r);
    const double m = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) s += (o[c] = std::exp(in[c] - m));
    for (auto& v : o) v /= s;
  }
  return out;
}

Var log_softmax_rows(const Var& x) {
  const Tensor& xv = x.value();
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    auto in = xv.row(r);
    const double m = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (double v : in) s += std::exp(v - m);
    const double lse = m + std::log(s);
    for (std::size_t c = 0; c < in.size(); ++c) out(r, c) = in[c] - lse;
  }
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix](Tape& t, std::size_t self) {
    Tensor* gx = t.grad_buffer(ix);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      double gs = 0.0;
      for (std::size_t c = 0; c < g.cols(); ++c) gs += g(r, c);
      for (std::size_t c = 0; c < g.cols(); ++c) (*gx)(r, c) += g(r, c) - std::exp(y(r, c)) * gs;
    }
  });
}

Var nll_loss(const Var& log_probs, std::span<const int> targets) {
  const Tensor& lp = log_probs.value();
  if (lp.rows() != targets.size() || lp.rows() == 0) {
    throw DimensionError("nll_loss: " + lp.shape().str() + " vs " +
                         std::to_string(targets.size()) + " targets");
  }
  double s = 0.0;
  for (std::size_t r = 0; r < lp.rows(); ++r) {
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= lp.cols()) {
      throw DimensionError("nll_loss: target class out of range");
    }
    s -= lp(r, static_cast<std::size_t>(targets[r]));
  }
  const double inv = 1.0 / static_cast<double>(lp.rows());
  const std::size_t ix = log_probs.id();
  std::vector<int> tg(targets.begin(), targets.end());
  return log_probs.tape().record(
      Tensor(1, 1, s * inv), {log_probs}, [ix, inv, tg = std::move(tg)](Tape& t, std::size_t self) {
        Tensor* gx = t.grad_buffer(ix);
        if (!gx) return;
        const double g = t.grad(self)[0];
        for (std::size_t r = 0; r < tg.size(); ++r)
          (*gx)(r, static_cast<std::size_t>(tg[r])) -= g * inv;
      });
}

}  // namespace ldrift::numkit
