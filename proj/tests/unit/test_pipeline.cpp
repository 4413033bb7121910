#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "doctest.h"
#include "ldrift/errors.hpp"
#include "ldrift/pipeline/checkpoint.hpp"
#include "ldrift/pipeline/config.hpp"
#include "ldrift/pipeline/experiments.hpp"

using namespace ldrift;
using namespace ldrift::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ldrift_test_" + name);
  fs::remove_all(p);
  return p;
}

// Tiny synthetic run that still exercises every stage.
PipelineConfig small_config(const fs::path& out) {
  PipelineConfig c = default_config();
  c.synthetic = nlohmann::json{{"n_per_domain", 300}, {"dim", 10}};
  for (auto* v : {&c.vae_h, &c.vae_s}) {
    v->epochs = 4;
    v->batch_size = 32;
  }
  c.gat.epochs = 10;
  c.align.epochs = 3;
  c.align.batch_size = 64;
  c.out_dir = out;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DRIFTCLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config json round trip") {
  PipelineConfig c = default_config();
  c.gat.heads = 3;
  c.align.moment_scope = align::MomentScope::kGlobal;
  c.cross_encoder = CrossEncoder::kTestDomain;
  const auto j = to_json(c);
  const auto back = config_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(back.gat.heads == 3);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(config_from_json({{"gat.head", 2}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"gat.heads", "four"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"scaler", "robust"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"dataset_h", "a.csv"}}), ConfigError);
  try {
    config_from_json({{"vae_s.latent_dim", 6}});
    FAIL("expected a latent width mismatch");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("latent") != std::string::npos);
  }
  // A mismatch is refused before any training starts.
  PipelineConfig c = small_config(scratch("mismatch"));
  c.align.latent_dim = 4;
  CHECK_THROWS_AS(run_pipeline(c), ConfigError);
  CHECK(!fs::exists(c.out_dir / "vae_h.csv"));
}

TEST_CASE("seed derivation") {
  const auto a = config_from_json({{"seed", 3}});
  const auto b = config_from_json({{"seed", 4}});
  CHECK(a.vae_h.seed != b.vae_h.seed);
  CHECK(a.vae_h.seed == a.vae_s.seed);
  CHECK(a.gat.seed != a.align.seed);
  CHECK(config_from_json({{"seed", 3}, {"gat.seed", 99}}).gat.seed == 99);
}

TEST_CASE("checkpoint container") {
  Checkpoint ck;
  ck.put("E_H/encoder.0.weight", numkit::Tensor::from_rows({{1, 2}, {3, 4}}));
  ck.put("C_H/output.bias", numkit::Tensor(1, 2, -0.5));
  ck.put_text("config", "{}");
  const auto bytes = ck.serialize();
  const auto back = Checkpoint::deserialize(bytes);
  CHECK(back.serialize() == bytes);
  CHECK(back.checksum() == ck.checksum());
  CHECK(back.tensor("E_H/encoder.0.weight")(1, 0) == 3.0);
  CHECK(back.has_block("C_H"));
  CHECK(!back.has_block("aligner"));

  auto corrupt = bytes;
  corrupt[corrupt.size() / 2] ^= 0x01;
  CHECK_THROWS_AS(Checkpoint::deserialize(corrupt), DataError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS_AS(Checkpoint::deserialize(truncated), DataError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(Checkpoint::deserialize(bad_magic), DataError);

  const auto path = scratch("ckpt") / "x.ckpt";
  fs::create_directories(path.parent_path());
  ck.save(path);
  CHECK(Checkpoint::load(path).checksum() == ck.checksum());
  CHECK_THROWS_AS(Checkpoint::load(path.parent_path() / "absent.ckpt"), DataError);
}

TEST_CASE("pipeline run, reload and determinism") {
  const auto out = scratch("pipeline");
  const auto c = small_config(out);
  const auto r = run_pipeline(c);
  CHECK(fs::exists(r.checkpoint_path));
  for (const auto& log : r.logs) {
    CHECK(fs::exists(log));
    CHECK(fs::file_size(log) > 0);
  }
  const auto ck = Checkpoint::load(r.checkpoint_path);
  CHECK(ck.checksum() == r.checkpoint_checksum);
  for (const char* block : {"scaler_H", "scaler_S", "E_H", "E_S", "decoder_H", "decoder_S", "C_H", "aligner"})
    CHECK(ck.has_block(block));

  const auto loaded = load_models(ck);
  REQUIRE(loaded.c_h);
  CHECK(params_checksum(loaded.c_h->named_tensors()) == params_checksum(r.models.c_h->named_tensors()));

  const auto a1 = run_alignment_experiment(c);
  CHECK(a1.c_h_checksum_before == a1.c_h_checksum_after);
  const std::string report1 = slurp(out / "align_report.json");

  const auto out2 = scratch("pipeline2");
  auto c2 = c;
  c2.out_dir = out2;
  const auto r2 = run_pipeline(c2);
  CHECK(r2.checkpoint_checksum == r.checkpoint_checksum);
  run_alignment_experiment(c2);
  CHECK(slurp(out2 / "align_report.json") == report1);

  SUBCASE("missing aligner block is named") {
    Checkpoint partial = ck;
    partial.erase_block("aligner");
    try {
      run_alignment_experiment(c, partial);
      FAIL("expected a missing block error");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("aligner") != std::string::npos);
    }
  }
}

TEST_CASE("identity drift leaves no gap") {
  const auto out = scratch("identity");
  PipelineConfig c = default_config();
  c.synthetic = nlohmann::json{{"n_per_domain", 1500},
                               {"dim", 10},
                               {"rotation_deg", 0.0},
                               {"translation_sigma", 0.0},
                               {"scale", 1.0},
                               {"noise_std", 0.0}};
  for (auto* v : {&c.vae_h, &c.vae_s}) v->epochs = 15;
  c.gat.epochs = 100;
  c.out_dir = out;
  const auto r = run_drift_experiment(c);
  CHECK(std::abs(r.train_h_test_h.accuracy - r.train_h_test_s.accuracy) < 0.03);
  CHECK(fs::exists(out / "drift_report.json"));
}

TEST_CASE("stage failures carry the stage name") {
  const auto out = scratch("stage_error");
  auto c = small_config(out);
  c.vae_s.batch_size = 100000;
  try {
    run_pipeline(c);
    FAIL("expected a stage failure");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("stage 'vae_s'") != std::string::npos);
  }
  // Work finished before the failure is kept.
  CHECK(fs::exists(out / "pipeline.partial.ckpt"));
  CHECK(Checkpoint::load(out / "pipeline.partial.ckpt").has_block("C_H"));
}

TEST_CASE("command-line exit codes") {
  const auto dir = scratch("cli");
  fs::create_directories(dir);
  CHECK(run_cli("--no-such-flag") == 2);
  {
    std::ofstream(dir / "bad.json") << R"({"gat.heads": 0})";
  }
  CHECK(run_cli("--config " + (dir / "bad.json").string() + " pipeline --out " + dir.string()) == 2);
  CHECK(run_cli("--dataset-h " + (dir / "nope_h.csv").string() + " --dataset-s " + (dir / "nope_s.csv").string() +
                " pipeline --out " + dir.string()) == 3);
  // align-exp without a checkpoint cannot find its models.
  CHECK(run_cli("align-exp --out " + (dir / "empty").string()) == 3);
  CHECK(run_cli("--help") == 0);
}
