#include "ldrift/pipeline/config.hpp"

#include <fstream>
#include <functional>
#include <map>

#include "ldrift/errors.hpp"

namespace ldrift::pipeline {

using nlohmann::json;

std::string to_string(CrossEncoder e) { return e == CrossEncoder::kTrainDomain ? "train_domain" : "test_domain"; }

CrossEncoder cross_encoder_from_string(const std::string& name) {
  if (name == "train_domain") return CrossEncoder::kTrainDomain;
  if (name == "test_domain") return CrossEncoder::kTestDomain;
  throw ConfigError("unknown cross_encoder '" + name + "' (expected train_domain or test_domain)");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finaliser over seed and stream id
  std::uint64_t z = seed + stream * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

struct Field {
  std::function<void(PipelineConfig&, const json&)> set;
  std::function<json(const PipelineConfig&)> get;
};

template <typename T, typename Member>
Field plain(Member member) {
  return {[member](PipelineConfig& c, const json& v) { std::invoke(member, c) = v.get<T>(); },
          [member](const PipelineConfig& c) { return json(std::invoke(member, c)); }};
}

// Fields of a nested struct reached through an accessor.
template <typename T, typename Access>
Field nested(Access access) {
  return {[access](PipelineConfig& c, const json& v) { access(c) = v.get<T>(); },
          [access](const PipelineConfig& c) { return json(access(const_cast<PipelineConfig&>(c))); }};
}

void add_vae_fields(std::map<std::string, Field>& f, const std::string& prefix,
                    vae::VaeConfig PipelineConfig::*which) {
  auto at = [which](PipelineConfig& c) -> vae::VaeConfig& { return c.*which; };
  f[prefix + ".latent_dim"] = nested<std::size_t>([at](PipelineConfig& c) -> auto& { return at(c).latent_dim; });
  f[prefix + ".encoder_hidden"] =
      nested<std::vector<std::size_t>>([at](PipelineConfig& c) -> auto& { return at(c).encoder_hidden; });
  f[prefix + ".epochs"] = nested<std::size_t>([at](PipelineConfig& c) -> auto& { return at(c).epochs; });
  f[prefix + ".batch_size"] = nested<std::size_t>([at](PipelineConfig& c) -> auto& { return at(c).batch_size; });
  f[prefix + ".kl_weight"] = nested<double>([at](PipelineConfig& c) -> auto& { return at(c).kl_weight; });
  f[prefix + ".warmup_fraction"] =
      nested<double>([at](PipelineConfig& c) -> auto& { return at(c).warmup_fraction; });
  f[prefix + ".learning_rate"] = nested<double>([at](PipelineConfig& c) -> auto& { return at(c).learning_rate; });
  f[prefix + ".seed"] = nested<std::uint64_t>([at](PipelineConfig& c) -> auto& { return at(c).seed; });
  f[prefix + ".sigmoid_output"] = nested<bool>([at](PipelineConfig& c) -> auto& { return at(c).sigmoid_output; });
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> f;
    f["dataset_h"] = plain<std::string>(&PipelineConfig::dataset_h);
    f["dataset_s"] = plain<std::string>(&PipelineConfig::dataset_s);
    f["synthetic"] = {[](PipelineConfig& c, const json& v) {
                        if (v.is_null()) {
                          c.synthetic.reset();
                        } else if (v.is_object()) {
                          c.synthetic = v;
                        } else {
                          throw ConfigError("synthetic must be an object or null");
                        }
                      },
                      [](const PipelineConfig& c) { return c.synthetic ? *c.synthetic : json(nullptr); }};
    f["label_column"] = nested<std::string>([](PipelineConfig& c) -> auto& { return c.labels.column; });
    f["benign_labels"] =
        nested<std::vector<std::string>>([](PipelineConfig& c) -> auto& { return c.labels.benign_values; });
    f["drop_columns"] =
        nested<std::vector<std::string>>([](PipelineConfig& c) -> auto& { return c.clean.drop_columns; });
    f["keep_columns"] =
        nested<std::vector<std::string>>([](PipelineConfig& c) -> auto& { return c.clean.keep_columns; });
    f["scaler"] = {[](PipelineConfig& c, const json& v) { c.scaler = netflow::scaler_mode_from_string(v.get<std::string>()); },
                   [](const PipelineConfig& c) { return json(netflow::to_string(c.scaler)); }};
    f["test_fraction"] = plain<double>(&PipelineConfig::test_fraction);
    f["max_rows"] = plain<std::size_t>(&PipelineConfig::max_rows);

    add_vae_fields(f, "vae_h", &PipelineConfig::vae_h);
    add_vae_fields(f, "vae_s", &PipelineConfig::vae_s);

    f["knn.k"] = nested<std::size_t>([](PipelineConfig& c) -> auto& { return c.knn.k; });
    f["knn.symmetrize"] = nested<bool>([](PipelineConfig& c) -> auto& { return c.knn.symmetrize; });

    f["gat.in_dim"] = nested<std::size_t>([](PipelineConfig& c) -> auto& { return c.gat.in_dim; });
    f["gat.hidden_dim"] = nested<std::size_t>([](PipelineConfig& c) -> auto& { return c.gat.hidden_dim; });
    f["gat.heads"] = nested<std::size_t>([](PipelineConfig& c) -> auto& { return c.gat.heads; });
    f["gat.layers"] = nested<std::size_t>([](PipelineConfig& c) -> auto& { return c.gat.layers; });
    f["gat.leaky_relu_alpha"] = nested<double>([](PipelineConfig& c) -> auto& { return c.gat.leaky_relu_alpha; });
    f["gat.dropout_rate"] = nested<double>([](PipelineConfig& c) -> auto& { return c.gat.dropout_rate; });
    f["gat.epochs"] = nested<std::size_t>([](PipelineConfig& c) -> auto& { return c.gat.epochs; });
    f["gat.learning_rate"] = nested<double>([](PipelineConfig& c) -> auto& { return c.gat.learning_rate; });
    f["gat.seed"] = nested<std::uint64_t>([](PipelineConfig& c) -> auto& { return c.gat.seed; });

    f["align.latent_dim"] = nested<std::size_t>([](PipelineConfig& c) -> auto& { return c.align.latent_dim; });
    f["align.hidden"] = nested<std::vector<std::size_t>>([](PipelineConfig& c) -> auto& { return c.align.hidden; });
    f["align.epochs"] = nested<std::size_t>([](PipelineConfig& c) -> auto& { return c.align.epochs; });
    f["align.batch_size"] = nested<std::size_t>([](PipelineConfig& c) -> auto& { return c.align.batch_size; });
    f["align.learning_rate"] = nested<double>([](PipelineConfig& c) -> auto& { return c.align.learning_rate; });
    f["align.seed"] = nested<std::uint64_t>([](PipelineConfig& c) -> auto& { return c.align.seed; });
    f["align.moment_scope"] = {
        [](PipelineConfig& c, const json& v) { c.align.moment_scope = align::moment_scope_from_string(v.get<std::string>()); },
        [](const PipelineConfig& c) { return json(align::to_string(c.align.moment_scope)); }};
    f["align.init_noise"] = nested<double>([](PipelineConfig& c) -> auto& { return c.align.init_noise; });
    f["align_attack_only"] = plain<bool>(&PipelineConfig::align_attack_only);
    f["cross_encoder"] = {[](PipelineConfig& c, const json& v) { c.cross_encoder = cross_encoder_from_string(v.get<std::string>()); },
                          [](const PipelineConfig& c) { return json(to_string(c.cross_encoder)); }};
    f["seed"] = plain<std::uint64_t>(&PipelineConfig::seed);
    f["out_dir"] = {[](PipelineConfig& c, const json& v) { c.out_dir = v.get<std::string>(); },
                    [](const PipelineConfig& c) { return json(c.out_dir.string()); }};
    return f;
  }();
  return table;
}

}  // namespace

void PipelineConfig::reseed(std::uint64_t new_seed) {
  seed = new_seed;
  // Both VAEs start from the same initialisation (see README: alignment).
  vae_h.seed = vae_s.seed = derive_seed(new_seed, 1);
  gat.seed = derive_seed(new_seed, 2);
  align.seed = derive_seed(new_seed, 3);
}

void PipelineConfig::validate() const {
  const bool csv = !dataset_h.empty() || !dataset_s.empty();
  if (csv && synthetic) throw ConfigError("give either dataset_h/dataset_s or synthetic, not both");
  if (csv && (dataset_h.empty() || dataset_s.empty())) {
    throw ConfigError("both dataset_h and dataset_s are required");
  }
  if (!csv && !synthetic) throw ConfigError("no data source: set dataset_h/dataset_s or synthetic");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  if (labels.column.empty()) throw ConfigError("label_column is empty");

  const std::size_t d = vae_h.latent_dim;
  if (vae_s.latent_dim != d || gat.in_dim != d || align.latent_dim != d) {
    throw ConfigError("latent widths disagree: vae_h " + std::to_string(d) + ", vae_s " +
                      std::to_string(vae_s.latent_dim) + ", gat.in_dim " + std::to_string(gat.in_dim) +
                      ", align " + std::to_string(align.latent_dim));
  }
  // input_dim is only known once the data is loaded.
  for (auto v : {vae_h, vae_s}) {
    v.input_dim = 1;
    v.validate();
  }
  if (knn.k == 0) throw ConfigError("knn.k must be >= 1");
  gat.validate();
  align.validate();
}

PipelineConfig default_config() {
  PipelineConfig c;
  c.synthetic = json::object();
  // Low KL weight keeps the posterior means informative on min-max data;
  // at 1.0 the latent collapses and classes blur (see README).
  for (auto* v : {&c.vae_h, &c.vae_s}) v->kl_weight = 0.003;
  c.align.batch_size = 1024;
  c.reseed(c.seed);
  return c;
}

PipelineConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  PipelineConfig c = default_config();
  const auto& table = fields();
  for (const auto& [key, value] : j.items()) {
    if (key != "latent_dim" && !table.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  try {
    if (j.contains("seed")) c.reseed(j.at("seed").get<std::uint64_t>());
    if (j.contains("latent_dim")) {
      const auto d = j.at("latent_dim").get<std::size_t>();
      c.vae_h.latent_dim = c.vae_s.latent_dim = c.gat.in_dim = c.align.latent_dim = d;
    }
    if (j.contains("dataset_h") || j.contains("dataset_s")) c.synthetic.reset();
    for (const auto& [key, value] : j.items()) {
      if (key == "latent_dim" || key == "seed") continue;
      table.at(key).set(c, value);
    }
    // A sigmoid head cannot reach z-scored targets; default to a linear one.
    if (c.scaler == netflow::ScalerMode::kZScore) {
      if (!j.contains("vae_h.sigmoid_output")) c.vae_h.sigmoid_output = false;
      if (!j.contains("vae_s.sigmoid_output")) c.vae_s.sigmoid_output = false;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const PipelineConfig& config) {
  json j = json::object();
  for (const auto& [key, field] : fields()) j[key] = field.get(config);
  return j;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace ldrift::pipeline
