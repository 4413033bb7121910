// Command-line front end: each subcommand runs one stage or experiment and
// reads/writes <out>/pipeline.ckpt so stages can be rerun independently.

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "ldrift/errors.hpp"
#include "ldrift/netflow/synth.hpp"
#include "ldrift/pipeline/experiments.hpp"

using namespace ldrift;
using namespace ldrift::pipeline;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kDivergence = 4 };

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string dataset_h;
  std::string dataset_s;
  std::string synthetic_path;
  std::string mode;
  std::string domain = "h";
  bool no_align = false;
};

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

PipelineConfig build_config(const Options& o) {
  PipelineConfig c = o.config_path.empty() ? default_config() : load_config(o.config_path);
  if (o.seed) c.reseed(*o.seed);
  if (!o.out_dir.empty()) c.out_dir = o.out_dir;
  if (!o.dataset_h.empty() || !o.dataset_s.empty()) {
    c.dataset_h = o.dataset_h;
    c.dataset_s = o.dataset_s;
    c.synthetic.reset();
  }
  if (!o.synthetic_path.empty()) {
    c.synthetic = read_json(o.synthetic_path);
    c.dataset_h.clear();
    c.dataset_s.clear();
  }
  c.validate();
  return c;
}

std::filesystem::path checkpoint_path(const PipelineConfig& c) { return c.out_dir / "pipeline.ckpt"; }

Models load_or_empty(const PipelineConfig& c) {
  const auto path = checkpoint_path(c);
  return std::filesystem::exists(path) ? load_models(Checkpoint::load(path)) : Models{};
}

void save(const PipelineConfig& c, const Models& m) {
  Checkpoint ckpt;
  store_models(ckpt, m);
  ckpt.put_text("config", config_snapshot(c));
  ckpt.save(checkpoint_path(c));
  std::cout << "checkpoint " << checkpoint_path(c).string() << " checksum " << hex64(ckpt.checksum()) << "\n";
}

void print_metrics(const std::string& label, const eval::MetricsReport& r) {
  std::printf("%-28s accuracy %.4f  precision %.4f  recall %.4f  f1 %.4f\n", label.c_str(), r.accuracy, r.precision,
              r.recall, r.f1);
}

void cmd_synth(const Options& o) {
  PipelineConfig c = default_config();
  if (!o.synthetic_path.empty()) c.synthetic = read_json(o.synthetic_path);
  if (!o.out_dir.empty()) c.out_dir = o.out_dir;
  auto spec = netflow::drift_spec_from_json(*c.synthetic);
  if (o.seed) spec.seed = *o.seed;
  const auto [h, s] = netflow::synth_drift(spec);
  std::filesystem::create_directories(c.out_dir);
  netflow::write_csv(h, c.out_dir / "domain_h.csv");
  netflow::write_csv(s, c.out_dir / "domain_s.csv");
  write_file_atomic(c.out_dir / "drift_spec.json", netflow::to_json(spec).dump(2) + "\n");
  std::cout << "wrote " << h.rows() << " + " << s.rows() << " rows to " << c.out_dir.string() << "\n";
}

void cmd_train_vae(const Options& o) {
  const auto c = build_config(o);
  const Domain d = domain_from_string(o.domain);
  const auto data = prepare_data(c);
  Models m = load_or_empty(c);
  stage_fit_scaler(c, data, d, m);
  stage_train_vae(c, data, d, m, c.out_dir);
  save(c, m);
}

void cmd_build_graph(const Options& o) {
  const auto c = build_config(o);
  const Domain d = domain_from_string(o.domain);
  const auto data = prepare_data(c);
  Models m = load_or_empty(c);
  const auto g = stage_build_graph(c, data, d, m);
  const auto path = c.out_dir / ("graph_" + to_string(d) + ".edges");
  graph::write_edge_list(g, path);
  std::cout << g.node_count() << " nodes, " << g.edge_count() << " edges -> " << path.string() << "\n";
}

void cmd_train_gat(const Options& o) {
  const auto c = build_config(o);
  const Domain d = domain_from_string(o.domain);
  const auto data = prepare_data(c);
  Models m = load_or_empty(c);
  stage_train_classifier(c, data, d, m, c.out_dir);
  save(c, m);
}

void cmd_train_align(const Options& o) {
  const auto c = build_config(o);
  const auto data = prepare_data(c);
  Models m = load_or_empty(c);
  const auto [before, after] = stage_train_align(c, data, m, c.out_dir);
  std::printf("W_d %.6f -> %.6f\n", before, after);
  save(c, m);
}

void cmd_evaluate(const Options& o) {
  const auto c = build_config(o);
  const Domain d = domain_from_string(o.domain);
  const auto data = prepare_data(c);
  const Models m = load_or_empty(c);
  if (!m.c_h) throw DataError("checkpoint is missing block 'C_H'");
  const auto& split = data.of(d);
  numkit::Tensor z;
  if (d == Domain::kHistorical) {
    if (!m.scaler_h || !m.vae_h) throw DataError("checkpoint is missing block 'E_H'");
    z = encode(split.test.features, *m.scaler_h, *m.vae_h);
  } else if (o.no_align) {
    const bool via_h = c.cross_encoder == CrossEncoder::kTrainDomain;
    const auto& sc = via_h ? m.scaler_h : m.scaler_s;
    const auto& v = via_h ? m.vae_h : m.vae_s;
    if (!sc || !v) throw DataError(std::string("checkpoint is missing block '") + (via_h ? "E_H" : "E_S") + "'");
    z = encode(split.test.features, *sc, *v);
  } else {
    if (!m.scaler_s || !m.vae_s) throw DataError("checkpoint is missing block 'E_S'");
    if (!m.aligner) throw DataError("checkpoint is missing block 'aligner'");
    z = align::apply_align(encode(split.test.features, *m.scaler_s, *m.vae_s), *m.aligner);
  }
  const auto r = classify_latent(z, split.test.labels, c.knn, *m.c_h);
  std::filesystem::create_directories(c.out_dir);
  const auto path = c.out_dir / ("eval_" + to_string(d) + ".json");
  write_file_atomic(path, eval::to_json(r).dump(2) + "\n");
  print_metrics("test " + to_string(d), r);
}

void cmd_drift(const Options& o) {
  const auto c = build_config(o);
  const auto r = run_drift_experiment(c);
  std::cout << "cross_encoder " << to_string(r.cross_encoder) << "\n";
  print_metrics("train H / test H", r.train_h_test_h);
  print_metrics("train H / test S (no align)", r.train_h_test_s);
  print_metrics("train S / test S", r.train_s_test_s);
  print_metrics("train S / test H (no align)", r.train_s_test_h);
  std::cout << "report " << (c.out_dir / "drift_report.json").string() << "\n";
}

void cmd_align(const Options& o) {
  const auto c = build_config(o);
  const auto r = run_alignment_experiment(c);
  print_metrics("in-domain (H)", r.in_domain);
  print_metrics("current, before alignment", r.before);
  print_metrics("current, after alignment", r.after);
  std::printf("global W_d %.6f -> %.6f\n", r.w_d_before, r.w_d_after);
  std::cout << "C_H checksum " << hex64(r.c_h_checksum_before) << " -> " << hex64(r.c_h_checksum_after) << "\n";
  std::cout << "report " << (c.out_dir / "align_report.json").string() << "\n";
}

void cmd_pipeline(const Options& o) {
  const auto c = build_config(o);
  const auto r = run_pipeline(c);
  std::printf("global W_d %.6f -> %.6f\n", r.w_d_before, r.w_d_after);
  std::cout << "checkpoint " << r.checkpoint_path.string() << " checksum " << hex64(r.checkpoint_checksum) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-space drift adaptation for IoT traffic classifiers"};
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_path, "Flat JSON pipeline config");
  app.add_option("--seed", o.seed, "Global seed (re-derives every stage seed)");
  app.add_option("--out", o.out_dir, "Output directory");
  app.add_option("--dataset-h", o.dataset_h, "Historical-domain CSV");
  app.add_option("--dataset-s", o.dataset_s, "Current-domain CSV");
  app.add_option("--synthetic", o.synthetic_path, "Synthetic drift spec JSON");
  app.add_option("--mode", o.mode, "Run an experiment without a subcommand")
      ->check(CLI::IsMember({"drift", "align", "pipeline"}));

  auto with_domain = [&o](CLI::App* sub) {
    sub->add_option("--domain", o.domain, "h or s")->check(CLI::IsMember({"h", "s"}));
    return sub;
  };
  auto* synth = app.add_subcommand("synth-data", "Write the synthetic two-domain CSVs");
  auto* train_vae = with_domain(app.add_subcommand("train-vae", "Fit the scaler and VAE of one domain"));
  auto* build_graph = with_domain(app.add_subcommand("build-graph", "Dump the latent kNN graph of one domain"));
  auto* train_gat = with_domain(app.add_subcommand("train-gat", "Train the graph classifier of one domain"));
  auto* train_align = app.add_subcommand("train-align", "Train the latent aligner");
  auto* evaluate = with_domain(app.add_subcommand("evaluate", "Classify a domain's test split with C_H"));
  evaluate->add_flag("--no-align", o.no_align, "Skip the aligner for the current domain");
  auto* drift = app.add_subcommand("drift-exp", "Four-cell drift experiment");
  auto* align_exp = app.add_subcommand("align-exp", "Before/after alignment experiment");
  auto* pipe = app.add_subcommand("pipeline", "Run all four training steps");
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (synth->parsed()) cmd_synth(o);
    else if (train_vae->parsed()) cmd_train_vae(o);
    else if (build_graph->parsed()) cmd_build_graph(o);
    else if (train_gat->parsed()) cmd_train_gat(o);
    else if (train_align->parsed()) cmd_train_align(o);
    else if (evaluate->parsed()) cmd_evaluate(o);
    else if (drift->parsed() || o.mode == "drift") cmd_drift(o);
    else if (align_exp->parsed() || o.mode == "align") cmd_align(o);
    else if (pipe->parsed() || o.mode == "pipeline") cmd_pipeline(o);
    else {
      std::cerr << app.help();
      return kConfig;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kDivergence;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
