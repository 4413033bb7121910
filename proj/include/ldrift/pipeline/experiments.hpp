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
#include "ldrift/metrics.hpp"
#include "ldrift/netflow/preprocess.hpp"
#include "ldrift/pipeline/checkpoint.hpp"
#include "ldrift/pipeline/config.hpp"
#include "ldrift/vae.hpp"

namespace ldrift::pipeline {

enum class Domain { kHistorical, kCurrent };
std::string to_string(Domain d);  // "h" or "s"
Domain domain_from_string(const std::string& name);

// Cleaned, unscaled train/test partitions of both domains.
struct PreparedData {
  netflow::Split h;
  netflow::Split s;
  const netflow::Split& of(Domain d) const { return d == Domain::kHistorical ? h : s; }
};
PreparedData prepare_data(const PipelineConfig& config);

// Everything a run can produce. Each domain owns its scaler, VAE and (in the
// drift experiment) classifier; the aligner maps current latents onto the
// historical ones.
struct Models {
  std::optional<netflow::ScalerParams> scaler_h, scaler_s;
  std::optional<vae::VaeParams> vae_h, vae_s;
  std::optional<gat::GatParams> c_h, c_s;
  std::optional<align::AlignParams> aligner;

  std::optional<netflow::ScalerParams>& scaler(Domain d) { return d == Domain::kHistorical ? scaler_h : scaler_s; }
  std::optional<vae::VaeParams>& vae(Domain d) { return d == Domain::kHistorical ? vae_h : vae_s; }
  std::optional<gat::GatParams>& classifier(Domain d) { return d == Domain::kHistorical ? c_h : c_s; }
  const std::optional<netflow::ScalerParams>& scaler(Domain d) const {
    return d == Domain::kHistorical ? scaler_h : scaler_s;
  }
  const std::optional<vae::VaeParams>& vae(Domain d) const { return d == Domain::kHistorical ? vae_h : vae_s; }
  const std::optional<gat::GatParams>& classifier(Domain d) const { return d == Domain::kHistorical ? c_h : c_s; }
};

// Blocks: scaler_H, scaler_S, E_H, decoder_H, E_S, decoder_S, C_H, C_S, aligner.
void store_models(Checkpoint& ckpt, const Models& models);
// Absent blocks stay empty.
Models load_models(const Checkpoint& ckpt);

// Scaler, then posterior-mean projection.
numkit::Tensor encode(const numkit::Tensor& raw, const netflow::ScalerParams& scaler, const vae::VaeParams& vae);
// Within-batch kNN graph over `latent`, then the frozen classifier.
eval::MetricsReport classify_latent(const numkit::Tensor& latent, const std::vector<int>& labels,
                                    const graph::KnnConfig& knn, const gat::GatParams& classifier);

// Individual stages. Each fills its slot in `models` and, when log_dir is
// non-empty, writes a CSV history there. Errors carry the stage name.
void stage_fit_scaler(const PipelineConfig& config, const PreparedData& data, Domain d, Models& models);
void stage_train_vae(const PipelineConfig& config, const PreparedData& data, Domain d, Models& models,
                     const std::filesystem::path& log_dir);
graph::TrafficGraph stage_build_graph(const PipelineConfig& config, const PreparedData& data, Domain d,
                                      Models& models);
void stage_train_classifier(const PipelineConfig& config, const PreparedData& data, Domain d, Models& models,
                            const std::filesystem::path& log_dir);
// Returns (global W_d before, after) on the current-domain training latents.
std::pair<double, double> stage_train_align(const PipelineConfig& config, const PreparedData& data, Models& models,
                                            const std::filesystem::path& log_dir);

std::string config_snapshot(const PipelineConfig& config);

struct PipelineResult {
  Models models;
  std::uint64_t checkpoint_checksum = 0;
  std::filesystem::path checkpoint_path;
  std::vector<std::filesystem::path> logs;
  double w_d_before = 0.0;
  double w_d_after = 0.0;
};
// Steps 1-4: VAE_H, kNN graph + C_H, VAE_S, aligner. Writes pipeline.ckpt and
// vae_h.csv, gat_h.csv, vae_s.csv, align.csv under config.out_dir.
PipelineResult run_pipeline(const PipelineConfig& config);

struct DriftReport {
  eval::MetricsReport train_h_test_h;
  eval::MetricsReport train_h_test_s;
  eval::MetricsReport train_s_test_s;
  eval::MetricsReport train_s_test_h;
  CrossEncoder cross_encoder = CrossEncoder::kTrainDomain;
  std::uint64_t checkpoint_checksum = 0;
};
nlohmann::json to_json(const DriftReport& r);
// The four train/test cells without alignment. `reuse` may carry already
// trained models; missing ones are trained. Writes drift.ckpt and
// drift_report.json (+ .txt) under config.out_dir.
DriftReport run_drift_experiment(const PipelineConfig& config, const Models* reuse = nullptr);

struct AlignmentReport {
  eval::MetricsReport in_domain;  // H test through E_H and C_H
  eval::MetricsReport before;     // S test, no alignment, per config.cross_encoder
  eval::MetricsReport after;      // S test through E_S, aligner, C_H
  double w_d_before = 0.0;        // global, current training latents vs historical
  double w_d_after = 0.0;
  double w_d_test_before = 0.0;   // same on the current test partition
  double w_d_test_after = 0.0;
  std::uint64_t c_h_checksum_before = 0;
  std::uint64_t c_h_checksum_after = 0;
  CrossEncoder cross_encoder = CrossEncoder::kTrainDomain;
};
nlohmann::json to_json(const AlignmentReport& r);
// Needs scaler_H, scaler_S, E_H, E_S, C_H and aligner blocks. Writes
// align_report.json (+ .txt) and row-normalised confusion CSVs.
AlignmentReport run_alignment_experiment(const PipelineConfig& config, const Checkpoint& checkpoint);
// Loads <out_dir>/pipeline.ckpt.
AlignmentReport run_alignment_experiment(const PipelineConfig& config);

std::string hex64(std::uint64_t v);

}  // namespace ldrift::pipeline
