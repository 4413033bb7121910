#include "ldrift/pipeline/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include "ldrift/errors.hpp"
#include "ldrift/netflow/synth.hpp"

namespace ldrift::pipeline {

using nlohmann::json;
using numkit::Tensor;

std::string to_string(Domain d) { return d == Domain::kHistorical ? "h" : "s"; }

Domain domain_from_string(const std::string& name) {
  if (name == "h" || name == "H" || name == "historical") return Domain::kHistorical;
  if (name == "s" || name == "S" || name == "current") return Domain::kCurrent;
  throw ConfigError("unknown domain '" + name + "' (expected h or s)");
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

std::string upper(Domain d) { return d == Domain::kHistorical ? "H" : "S"; }

// Re-throws with the stage name in front, keeping the error category.
template <typename F>
auto in_stage(const std::string& stage, F&& f) -> decltype(f()) {
  const std::string at = "stage '" + stage + "': ";
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(at + e.what());
  } catch (const DivergenceError& e) {
    throw DivergenceError(at + e.what());
  } catch (const DimensionError& e) {
    throw DimensionError(at + e.what());
  } catch (const StructuralError& e) {
    throw StructuralError(at + e.what());
  } catch (const DataError& e) {
    throw DataError(at + e.what());
  }
}

template <typename T>
const T& need(const std::optional<T>& slot, const std::string& block) {
  if (!slot) throw DataError("missing block '" + block + "'");
  return *slot;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

void write_log(const std::filesystem::path& dir, const std::string& name, const std::string& content) {
  if (dir.empty()) return;
  write_file_atomic(dir / name, content);
}

// Keeps the feature columns both domains share, in the historical order.
void restrict_to_common(netflow::FeatureMatrix& h, netflow::FeatureMatrix& s) {
  std::vector<std::size_t> keep_h, keep_s;
  for (std::size_t i = 0; i < h.feature_names.size(); ++i) {
    const auto key = netflow::normalize_column_name(h.feature_names[i]);
    for (std::size_t j = 0; j < s.feature_names.size(); ++j) {
      if (netflow::normalize_column_name(s.feature_names[j]) == key) {
        keep_h.push_back(i);
        keep_s.push_back(j);
        break;
      }
    }
  }
  if (keep_h.empty()) throw DataError("the two datasets share no feature columns");
  auto project = [](netflow::FeatureMatrix& m, const std::vector<std::size_t>& cols) {
    Tensor out(m.rows(), cols.size());
    std::vector<std::string> names;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      names.push_back(m.feature_names[cols[j]]);
      for (std::size_t i = 0; i < m.rows(); ++i) out(i, j) = m.features(i, cols[j]);
    }
    m.features = std::move(out);
    m.feature_names = std::move(names);
  };
  project(h, keep_h);
  project(s, keep_s);
}

netflow::FeatureMatrix subsample(const netflow::FeatureMatrix& m, std::size_t max_rows, std::uint64_t seed) {
  if (max_rows == 0 || m.rows() <= max_rows) return m;
  numkit::Rng rng(seed);
  auto order = rng.permutation(m.rows());
  order.resize(max_rows);
  std::sort(order.begin(), order.end());
  return m.select(order);
}

Tensor scalar(double v) { return Tensor(1, 1, v); }

void store_vae(Checkpoint& c, Domain d, const vae::VaeParams& p) {
  const std::string enc = "E_" + upper(d), dec = "decoder_" + upper(d);
  std::vector<std::pair<std::string, const Tensor*>> e, r;
  for (const auto& [name, t] : p.named_tensors()) (name.starts_with("decoder.") ? r : e).emplace_back(name, t);
  c.put_block(enc, e);
  c.put_block(dec, r);
  c.put(dec + "/sigmoid_output", scalar(p.sigmoid_output ? 1.0 : 0.0));
}

numkit::Dense dense_at(const Checkpoint& c, const std::string& prefix) {
  return {c.tensor(prefix + ".weight"), c.tensor(prefix + ".bias")};
}

vae::VaeParams load_vae(const Checkpoint& c, Domain d) {
  const std::string enc = "E_" + upper(d), dec = "decoder_" + upper(d);
  if (!c.has_block(dec)) throw DataError("checkpoint is missing block '" + dec + "'");
  vae::VaeParams p;
  for (std::size_t i = 0; c.has(enc + "/encoder." + std::to_string(i) + ".weight"); ++i) {
    p.encoder.push_back(dense_at(c, enc + "/encoder." + std::to_string(i)));
  }
  p.mean_head = dense_at(c, enc + "/mean_head");
  p.log_var_head = dense_at(c, enc + "/log_var_head");
  for (std::size_t i = 0; c.has(dec + "/decoder." + std::to_string(i) + ".weight"); ++i) {
    p.decoder.push_back(dense_at(c, dec + "/decoder." + std::to_string(i)));
  }
  if (p.decoder.empty()) throw DataError("checkpoint block '" + dec + "' has no layers");
  p.sigmoid_output = c.tensor(dec + "/sigmoid_output")[0] != 0.0;
  return p;
}

gat::GatParams load_gat(const Checkpoint& c, const std::string& block) {
  gat::GatParams p;
  for (std::size_t l = 0; c.has(block + "/layer" + std::to_string(l) + ".head0.weight"); ++l) {
    gat::GatLayerParams layer;
    for (std::size_t h = 0;; ++h) {
      const std::string prefix = block + "/layer" + std::to_string(l) + ".head" + std::to_string(h) + ".";
      if (!c.has(prefix + "weight")) break;
      layer.heads.push_back({c.tensor(prefix + "weight"), c.tensor(prefix + "attn_src"), c.tensor(prefix + "attn_dst")});
    }
    p.layers.push_back(std::move(layer));
  }
  if (p.layers.empty()) throw DataError("checkpoint block '" + block + "' has no attention layers");
  for (std::size_t l = 0; l < p.layers.size(); ++l) p.layers[l].concat = l + 1 < p.layers.size();
  p.output = dense_at(c, block + "/output");
  p.leaky_relu_alpha = c.tensor(block + "/leaky_relu_alpha")[0];
  return p;
}

align::AlignParams load_aligner(const Checkpoint& c) {
  align::AlignParams p;
  p.skip = dense_at(c, "aligner/skip");
  for (std::size_t i = 0; c.has("aligner/hidden." + std::to_string(i) + ".weight"); ++i) {
    p.hidden.push_back(dense_at(c, "aligner/hidden." + std::to_string(i)));
  }
  p.out = dense_at(c, "aligner/out");
  return p;
}

std::string confusion_csv(const eval::ConfusionMatrix& cm) {
  const auto pct = cm.row_percentages();
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "true\\predicted,attack,normal\n";
  os << "attack," << pct[1][1] << ',' << pct[1][0] << '\n';
  os << "normal," << pct[0][1] << ',' << pct[0][0] << '\n';
  return os.str();
}

std::string prefixed_text(const std::string& prefix, const eval::MetricsReport& r) {
  std::istringstream in(eval::to_text(r));
  std::string out, line;
  while (std::getline(in, line)) out += prefix + "." + line + "\n";
  return out;
}

}  // namespace

PreparedData prepare_data(const PipelineConfig& config) {
  netflow::FeatureMatrix h, s;
  if (config.synthetic) {
    auto pair = netflow::synth_drift(netflow::drift_spec_from_json(*config.synthetic));
    h = std::move(pair.first);
    s = std::move(pair.second);
  } else {
    h = netflow::clean(netflow::load_csv(config.dataset_h, config.labels.column), config.labels, config.clean);
    s = netflow::clean(netflow::load_csv(config.dataset_s, config.labels.column), config.labels, config.clean);
    restrict_to_common(h, s);
  }
  h = subsample(h, config.max_rows, derive_seed(config.seed, 10));
  s = subsample(s, config.max_rows, derive_seed(config.seed, 11));
  return {netflow::stratified_split(h, config.test_fraction, derive_seed(config.seed, 4)),
          netflow::stratified_split(s, config.test_fraction, derive_seed(config.seed, 5))};
}

void store_models(Checkpoint& ckpt, const Models& m) {
  for (Domain d : {Domain::kHistorical, Domain::kCurrent}) {
    if (const auto& sc = m.scaler(d)) {
      const std::string b = "scaler_" + upper(d);
      ckpt.put(b + "/offset", Tensor::row_vector(sc->offset));
      ckpt.put(b + "/extent", Tensor::row_vector(sc->extent));
      ckpt.put(b + "/mode", scalar(sc->mode == netflow::ScalerMode::kZScore ? 1.0 : 0.0));
    }
    if (const auto& v = m.vae(d)) store_vae(ckpt, d, *v);
    if (const auto& c = m.classifier(d)) {
      const std::string b = "C_" + upper(d);
      ckpt.put_block(b, c->named_tensors());
      ckpt.put(b + "/leaky_relu_alpha", scalar(c->leaky_relu_alpha));
    }
  }
  if (m.aligner) ckpt.put_block("aligner", m.aligner->named_tensors());
}

Models load_models(const Checkpoint& ckpt) {
  Models m;
  for (Domain d : {Domain::kHistorical, Domain::kCurrent}) {
    const std::string sb = "scaler_" + upper(d);
    if (ckpt.has_block(sb)) {
      netflow::ScalerParams sc;
      sc.mode = ckpt.tensor(sb + "/mode")[0] != 0.0 ? netflow::ScalerMode::kZScore : netflow::ScalerMode::kMinMax;
      const auto offset = ckpt.tensor(sb + "/offset").data();
      const auto extent = ckpt.tensor(sb + "/extent").data();
      sc.offset.assign(offset.begin(), offset.end());
      sc.extent.assign(extent.begin(), extent.end());
      m.scaler(d) = std::move(sc);
    }
    if (ckpt.has_block("E_" + upper(d))) m.vae(d) = load_vae(ckpt, d);
    if (ckpt.has_block("C_" + upper(d))) m.classifier(d) = load_gat(ckpt, "C_" + upper(d));
  }
  if (ckpt.has_block("aligner")) m.aligner = load_aligner(ckpt);
  return m;
}

Tensor encode(const Tensor& raw, const netflow::ScalerParams& scaler, const vae::VaeParams& vae) {
  return vae::project(netflow::apply_scaler(raw, scaler), vae);
}

eval::MetricsReport classify_latent(const Tensor& latent, const std::vector<int>& labels,
                                    const graph::KnnConfig& knn, const gat::GatParams& classifier) {
  const auto g = graph::knn_graph(latent, labels, knn);
  return eval::evaluate(labels, gat::predict(g, classifier));
}

void stage_fit_scaler(const PipelineConfig& config, const PreparedData& data, Domain d, Models& models) {
  in_stage("scaler_" + to_string(d), [&] { models.scaler(d) = netflow::fit_scaler(data.of(d).train, config.scaler); });
}

void stage_train_vae(const PipelineConfig& config, const PreparedData& data, Domain d, Models& models,
                     const std::filesystem::path& log_dir) {
  in_stage("vae_" + to_string(d), [&] {
    const auto& scaler = need(models.scaler(d), "scaler_" + upper(d));
    vae::VaeConfig vc = d == Domain::kHistorical ? config.vae_h : config.vae_s;
    vc.input_dim = data.of(d).train.dim();
    const auto result = vae::train_vae(netflow::apply_scaler(data.of(d).train.features, scaler), vc);
    std::string log = "epoch,total,reconstruction,kl,kl_weight\n";
    for (std::size_t e = 0; e < result.history.size(); ++e) {
      const auto& h = result.history[e];
      log += std::to_string(e + 1) + "," + fmt(h.total) + "," + fmt(h.reconstruction) + "," + fmt(h.kl) + "," +
             fmt(h.kl_weight) + "\n";
    }
    write_log(log_dir, "vae_" + to_string(d) + ".csv", log);
    models.vae(d) = result.params;
  });
}

graph::TrafficGraph stage_build_graph(const PipelineConfig& config, const PreparedData& data, Domain d,
                                      Models& models) {
  return in_stage("graph_" + to_string(d), [&] {
    const auto& split = data.of(d);
    const Tensor latent = encode(split.train.features, need(models.scaler(d), "scaler_" + upper(d)),
                                 need(models.vae(d), "E_" + upper(d)));
    return graph::knn_graph(latent, split.train.labels, config.knn);
  });
}

void stage_train_classifier(const PipelineConfig& config, const PreparedData& data, Domain d, Models& models,
                            const std::filesystem::path& log_dir) {
  const auto g = stage_build_graph(config, data, d, models);
  in_stage("gat_" + to_string(d), [&] {
    if (!log_dir.empty()) graph::write_edge_list(g, log_dir / ("graph_" + to_string(d) + ".edges"));
    const auto result = gat::train_gat(g, config.gat);
    std::string log = "epoch,loss,accuracy\n";
    for (std::size_t e = 0; e < result.history.size(); ++e) {
      log += std::to_string(e + 1) + "," + fmt(result.history[e].loss) + "," + fmt(result.history[e].accuracy) + "\n";
    }
    write_log(log_dir, "gat_" + to_string(d) + ".csv", log);
    models.classifier(d) = result.params;
  });
}

namespace {

// Current-domain training latents the aligner learns from (attack rows only
// when configured; that filter is the only use of labels here).
Tensor align_source(const PipelineConfig& config, const PreparedData& data, const Models& m) {
  const Tensor z = encode(data.s.train.features, need(m.scaler_s, "scaler_S"), need(m.vae_s, "E_S"));
  if (!config.align_attack_only) return z;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.s.train.labels.size(); ++i) {
    if (data.s.train.labels[i] == netflow::kAttack) rows.push_back(i);
  }
  return z.select_rows(rows);
}

align::GaussianMoments historical_moments(const PreparedData& data, const Models& m) {
  return align::moments(encode(data.h.train.features, need(m.scaler_h, "scaler_H"), need(m.vae_h, "E_H")));
}

}  // namespace

std::pair<double, double> stage_train_align(const PipelineConfig& config, const PreparedData& data, Models& models,
                                            const std::filesystem::path& log_dir) {
  return in_stage("align", [&] {
    const auto target = historical_moments(data, models);
    const Tensor z = align_source(config, data, models);
    const auto result = align::train_align(z, target, config.align);
    std::string log = "epoch,w_d\n";
    for (std::size_t e = 0; e < result.history.size(); ++e) {
      log += std::to_string(e + 1) + "," + fmt(result.history[e]) + "\n";
    }
    write_log(log_dir, "align.csv", log);
    models.aligner = result.params;
    return std::pair{align::wasserstein_distance(target, align::moments(z)),
                     align::wasserstein_distance(target, align::moments(align::apply_align(z, result.params)))};
  });
}

std::string config_snapshot(const PipelineConfig& config) {
  json j = to_json(config);
  // Where the run writes is not part of what it computes.
  j.erase("out_dir");
  return j.dump(2);
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  in_stage("config", [&] { config.validate(); });
  const auto& dir = config.out_dir;
  std::filesystem::create_directories(dir);
  PipelineResult r;
  auto save = [&](const std::filesystem::path& path) {
    Checkpoint ckpt;
    store_models(ckpt, r.models);
    ckpt.put_text("config", config_snapshot(config));
    ckpt.save(path);
    return ckpt.checksum();
  };
  try {
    const auto data = in_stage("data", [&] { return prepare_data(config); });
    stage_fit_scaler(config, data, Domain::kHistorical, r.models);
    stage_fit_scaler(config, data, Domain::kCurrent, r.models);
    stage_train_vae(config, data, Domain::kHistorical, r.models, dir);
    stage_train_classifier(config, data, Domain::kHistorical, r.models, dir);
    stage_train_vae(config, data, Domain::kCurrent, r.models, dir);
    std::tie(r.w_d_before, r.w_d_after) = stage_train_align(config, data, r.models, dir);
  } catch (const Error&) {
    save(dir / "pipeline.partial.ckpt");
    throw;
  }
  r.checkpoint_path = dir / "pipeline.ckpt";
  r.checkpoint_checksum = save(r.checkpoint_path);
  r.logs = {dir / "vae_h.csv", dir / "gat_h.csv", dir / "vae_s.csv", dir / "align.csv"};
  return r;
}

json to_json(const DriftReport& r) {
  json j;
  j["cross_encoder"] = to_string(r.cross_encoder);
  j["cells"]["train_h_test_h"] = eval::to_json(r.train_h_test_h);
  j["cells"]["train_h_test_s"] = eval::to_json(r.train_h_test_s);
  j["cells"]["train_s_test_s"] = eval::to_json(r.train_s_test_s);
  j["cells"]["train_s_test_h"] = eval::to_json(r.train_s_test_h);
  j["checkpoint_checksum"] = hex64(r.checkpoint_checksum);
  return j;
}

DriftReport run_drift_experiment(const PipelineConfig& config, const Models* reuse) {
  in_stage("config", [&] { config.validate(); });
  const auto& dir = config.out_dir;
  std::filesystem::create_directories(dir);
  const auto data = in_stage("data", [&] { return prepare_data(config); });
  Models m = reuse ? *reuse : Models{};
  m.aligner.reset();
  for (Domain d : {Domain::kHistorical, Domain::kCurrent}) {
    if (!m.scaler(d)) stage_fit_scaler(config, data, d, m);
    if (!m.vae(d)) stage_train_vae(config, data, d, m, dir);
    if (!m.classifier(d)) stage_train_classifier(config, data, d, m, dir);
  }

  DriftReport r;
  r.cross_encoder = config.cross_encoder;
  auto cell = [&](Domain train, Domain test) {
    return in_stage("evaluate_" + to_string(train) + to_string(test), [&] {
      const Domain via = train == test || config.cross_encoder == CrossEncoder::kTestDomain ? test : train;
      const auto& split = data.of(test);
      const Tensor z = encode(split.test.features, *m.scaler(via), *m.vae(via));
      return classify_latent(z, split.test.labels, config.knn, *m.classifier(train));
    });
  };
  r.train_h_test_h = cell(Domain::kHistorical, Domain::kHistorical);
  r.train_h_test_s = cell(Domain::kHistorical, Domain::kCurrent);
  r.train_s_test_s = cell(Domain::kCurrent, Domain::kCurrent);
  r.train_s_test_h = cell(Domain::kCurrent, Domain::kHistorical);

  Checkpoint ckpt;
  store_models(ckpt, m);
  ckpt.put_text("config", config_snapshot(config));
  ckpt.save(dir / "drift.ckpt");
  r.checkpoint_checksum = ckpt.checksum();

  write_file_atomic(dir / "drift_report.json", to_json(r).dump(2) + "\n");
  write_file_atomic(dir / "drift_report.txt",
                    prefixed_text("train_h_test_h", r.train_h_test_h) + prefixed_text("train_h_test_s", r.train_h_test_s) +
                        prefixed_text("train_s_test_s", r.train_s_test_s) +
                        prefixed_text("train_s_test_h", r.train_s_test_h));
  return r;
}

json to_json(const AlignmentReport& r) {
  json j;
  j["cross_encoder"] = to_string(r.cross_encoder);
  j["in_domain"] = eval::to_json(r.in_domain);
  j["before_alignment"] = eval::to_json(r.before);
  j["after_alignment"] = eval::to_json(r.after);
  j["w_d"] = {{"before", r.w_d_before},
              {"after", r.w_d_after},
              {"test_before", r.w_d_test_before},
              {"test_after", r.w_d_test_after}};
  j["c_h_checksum"] = {{"before", hex64(r.c_h_checksum_before)},
                       {"after", hex64(r.c_h_checksum_after)},
                       {"identical", r.c_h_checksum_before == r.c_h_checksum_after}};
  return j;
}

AlignmentReport run_alignment_experiment(const PipelineConfig& config, const Checkpoint& checkpoint) {
  in_stage("config", [&] { config.validate(); });
  const Models m = in_stage("load", [&] { return load_models(checkpoint); });
  const auto& scaler_h = need(m.scaler_h, "scaler_H");
  const auto& scaler_s = need(m.scaler_s, "scaler_S");
  const auto& e_h = need(m.vae_h, "E_H");
  const auto& e_s = need(m.vae_s, "E_S");
  const auto& c_h = need(m.c_h, "C_H");
  const auto& aligner = need(m.aligner, "aligner");
  const auto data = in_stage("data", [&] { return prepare_data(config); });

  AlignmentReport r;
  r.cross_encoder = config.cross_encoder;
  r.c_h_checksum_before = params_checksum(c_h.named_tensors());
  in_stage("evaluate", [&] {
    r.in_domain = classify_latent(encode(data.h.test.features, scaler_h, e_h), data.h.test.labels, config.knn, c_h);
    const bool via_h = config.cross_encoder == CrossEncoder::kTrainDomain;
    r.before = classify_latent(encode(data.s.test.features, via_h ? scaler_h : scaler_s, via_h ? e_h : e_s),
                               data.s.test.labels, config.knn, c_h);
    const Tensor zs_test = encode(data.s.test.features, scaler_s, e_s);
    const Tensor aligned_test = align::apply_align(zs_test, aligner);
    r.after = classify_latent(aligned_test, data.s.test.labels, config.knn, c_h);

    const auto target = historical_moments(data, m);
    const Tensor zs = align_source(config, data, m);
    r.w_d_before = align::wasserstein_distance(target, align::moments(zs));
    r.w_d_after = align::wasserstein_distance(target, align::moments(align::apply_align(zs, aligner)));
    r.w_d_test_before = align::wasserstein_distance(target, align::moments(zs_test));
    r.w_d_test_after = align::wasserstein_distance(target, align::moments(aligned_test));
  });
  r.c_h_checksum_after = params_checksum(c_h.named_tensors());

  const auto& dir = config.out_dir;
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "align_report.json", to_json(r).dump(2) + "\n");
  write_file_atomic(dir / "align_report.txt", prefixed_text("in_domain", r.in_domain) +
                                                  prefixed_text("before", r.before) + prefixed_text("after", r.after) +
                                                  "w_d.before = " + fmt(r.w_d_before) + "\nw_d.after = " +
                                                  fmt(r.w_d_after) + "\n");
  write_file_atomic(dir / "confusion_before.csv", confusion_csv(r.before.confusion));
  write_file_atomic(dir / "confusion_after.csv", confusion_csv(r.after.confusion));
  return r;
}

AlignmentReport run_alignment_experiment(const PipelineConfig& config) {
  const auto path = config.out_dir / "pipeline.ckpt";
  const auto ckpt = Checkpoint::load(path);
  return run_alignment_experiment(config, ckpt);
}

}  // namespace ldrift::pipeline
