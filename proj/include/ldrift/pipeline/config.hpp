#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ldrift/align.hpp"
#include "ldrift/gat.hpp"
#include "ldrift/graph.hpp"
#include "ldrift/netflow/dataset.hpp"
#include "ldrift/netflow/preprocess.hpp"
#include "ldrift/vae.hpp"

namespace ldrift::pipeline {

// Which encoder (and scaler) carries the other domain's test traffic in a
// no-alignment cross-domain evaluation.
enum class CrossEncoder {
  kTrainDomain,  // the classifier's own domain, e.g. S test data through E_H
  kTestDomain,   // the test data's own domain, e.g. S test data through E_S
};
std::string to_string(CrossEncoder e);
CrossEncoder cross_encoder_from_string(const std::string& name);

// Independent stream seed derived from a root seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct PipelineConfig {
  // Data: either two CSVs or a synthetic drift spec (preset fields or explicit).
  std::string dataset_h;
  std::string dataset_s;
  std::optional<nlohmann::json> synthetic;
  netflow::LabelSpec labels;
  netflow::CleanOptions clean;
  netflow::ScalerMode scaler = netflow::ScalerMode::kMinMax;
  double test_fraction = 0.2;
  // Random per-domain subsample before splitting; 0 keeps every row.
  std::size_t max_rows = 0;

  vae::VaeConfig vae_h;
  vae::VaeConfig vae_s;
  graph::KnnConfig knn;
  gat::GatConfig gat;
  align::AlignConfig align;
  bool align_attack_only = false;
  CrossEncoder cross_encoder = CrossEncoder::kTrainDomain;

  std::uint64_t seed = 7;
  std::filesystem::path out_dir = "ldrift_out";

  // Re-derives every stage seed from `seed`.
  void reseed(std::uint64_t new_seed);
  // ConfigError on any inconsistency, including latent widths that disagree
  // between the VAEs, the classifier input and the aligner.
  void validate() const;
};

// Defaults: synthetic drift preset and pipeline-tuned stage settings.
PipelineConfig default_config();

// Flat JSON object whose keys mirror the field paths ("vae_h.epochs",
// "gat.heads", "seed", ...). Unknown keys are rejected. A top-level
// "latent_dim" sets all four latent widths at once. Stage seeds not given
// explicitly derive from "seed".
PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& config);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace ldrift::pipeline
