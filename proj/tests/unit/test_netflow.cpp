#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ldrift/errors.hpp"
#include "ldrift/netflow/dataset.hpp"
#include "ldrift/netflow/preprocess.hpp"
#include "ldrift/netflow/synth.hpp"

using namespace ldrift;
using namespace ldrift::netflow;
using numkit::Tensor;

namespace {

RawTable table_from(const std::string& text, const std::string& label = "Label") {
  std::istringstream in(text);
  return parse_csv(in, label);
}

FeatureMatrix matrix(std::vector<std::vector<double>> rows, std::vector<int> labels) {
  FeatureMatrix m;
  std::vector<double> flat;
  for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  m.features = Tensor(rows.size(), rows.empty() ? 0 : rows.front().size(), std::move(flat));
  m.labels = std::move(labels);
  for (std::size_t j = 0; j < m.features.cols(); ++j) m.feature_names.push_back("f" + std::to_string(j));
  return m;
}

}  // namespace

TEST_CASE("csv parsing") {
  const auto t = table_from("a,b,Label\n1,2,Benign\n3,4,DoS\n5,6,Normal\n");
  CHECK(t.rows.size() == 3);
  CHECK(t.column_names.size() == 3);
  CHECK(t.label_column == 2);

  CHECK(parse_csv_record(R"(1,"x, y","say ""hi""",)") ==
        std::vector<std::string>{"1", "x, y", "say \"hi\"", ""});

  const auto quoted = table_from("a,Label\n\"multi\nline\",Benign\n");
  CHECK(quoted.rows.size() == 1);
  CHECK(quoted.rows[0][0] == "multi\nline");

  try {
    table_from("a,b,Label\n1,2,Benign\n3,DoS\n");
    FAIL("expected a ragged-row error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  CHECK_THROWS_AS(table_from("a,b\n1,2\n"), DataError);
  CHECK_THROWS_AS(load_csv("/nonexistent/flows.csv", "Label"), DataError);
}

TEST_CASE("label binarisation on a hand-built fixture") {
  const std::string csv =
      "x,Label\n1,Benign\n2,DDoS\n3,benign\n4,Normal\n5,PortScan\n"
      "6,BENIGN\n7,Mirai\n8,0\n9,1\n10, Benign \n";
  const auto m = clean(table_from(csv), LabelSpec{});
  CHECK(m.labels == std::vector<int>{0, 1, 0, 0, 1, 0, 1, 0, 1, 0});
}

TEST_CASE("clean rules") {
  SUBCASE("duplicates collapse to one row") {
    const auto m = clean(table_from("a,b,Label\n1,2,DoS\n1,2,DoS\n"), LabelSpec{});
    CHECK(m.rows() == 1);
  }
  SUBCASE("empty, unparseable and infinite cells drop the row") {
    const auto m = clean(table_from("a,b,Label\n1,,DoS\n2,x,DoS\n3,inf,DoS\n4,5,Benign\n"), LabelSpec{});
    CHECK(m.rows() == 1);
    CHECK(m.features(0, 0) == 4);
  }
  SUBCASE("listed columns are dropped with normalised names") {
    const auto m = clean(table_from("flow_id,SRC IP,Dst_IP,timestamp,dur,Label\n9,1.2.3.4,5.6.7.8,12,0.5,DoS\n"),
                         LabelSpec{});
    CHECK(m.feature_names == std::vector<std::string>{"dur"});
  }
  SUBCASE("no droppable columns leaves features unchanged") {
    const auto m = clean(table_from("a,b,Label\n1,2,DoS\n3,4,Benign\n"), LabelSpec{});
    CHECK(m.features == Tensor::from_rows({{1, 2}, {3, 4}}));
  }
  SUBCASE("keep-columns override") {
    CleanOptions opt;
    opt.keep_columns = {"b"};
    const auto m = clean(table_from("a,b,Label\n1,2,DoS\n3,4,Benign\n"), LabelSpec{}, opt);
    CHECK(m.feature_names == std::vector<std::string>{"b"});
  }
  CHECK_THROWS_AS(clean(table_from("a,Label\n,DoS\n"), LabelSpec{}), DataError);
}

TEST_CASE("clean is idempotent") {
  const auto first = clean(table_from("a,b,Label\n1,2,DoS\n1,2,DoS\n3,,Benign\n5,6,Benign\n7,8,x\n"), LabelSpec{});
  const auto second = clean(to_table(first), LabelSpec{});
  CHECK(second.features == first.features);
  CHECK(second.labels == first.labels);
  CHECK(second.feature_names == first.feature_names);
}

TEST_CASE("csv export round trip") {
  const auto m = matrix({{0.25, -1e-7}, {3.0, 12345.678}}, {0, 1});
  const auto path = std::filesystem::temp_directory_path() / "ldrift_roundtrip.csv";
  write_csv(m, path);
  const auto back = clean(load_csv(path, "Label"), LabelSpec{});
  std::filesystem::remove(path);
  CHECK(back.features == m.features);
  CHECK(back.labels == m.labels);
}

TEST_CASE("scaler examples") {
  const auto train = matrix({{0, 7}, {10, 7}, {4, 7}}, {0, 1, 0});
  const auto p = fit_scaler(train);
  const auto test = apply_scaler(matrix({{5, 7}, {12, 9}}, {0, 1}), p);
  CHECK(test.features(0, 0) == 0.5);
  CHECK(test.features(1, 0) == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(test.features(0, 1) == 0.0);
  CHECK(test.features(1, 1) == 0.0);

  const auto z = fit_scaler(train, ScalerMode::kZScore);
  const auto zt = apply_scaler(train, z);
  double mean = 0.0;
  for (std::size_t i = 0; i < 3; ++i) mean += zt.features(i, 0);
  CHECK(std::abs(mean) < 1e-12);

  CHECK_THROWS_AS(fit_scaler(FeatureMatrix{Tensor(0, 2), {}, {}}), DataError);
  CHECK(scaler_mode_from_string("zscore") == ScalerMode::kZScore);
  CHECK_THROWS_AS(scaler_mode_from_string("robust"), ConfigError);
}

TEST_CASE("min-max of the fit partition spans [0, 1]") {
  numkit::Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x(20 + rng.below(30), 1 + rng.below(6));
    for (auto& v : x.data()) v = rng.uniform(-1e3, 1e3);
    const FeatureMatrix m{x, std::vector<int>(x.rows(), 0), {}};
    const auto s = apply_scaler(m, fit_scaler(m));
    for (std::size_t j = 0; j < x.cols(); ++j) {
      double lo = 1e9, hi = -1e9;
      for (std::size_t i = 0; i < x.rows(); ++i) {
        lo = std::min(lo, s.features(i, j));
        hi = std::max(hi, s.features(i, j));
      }
      CHECK(std::abs(lo) < 1e-12);
      CHECK(std::abs(hi - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("stratified split") {
  auto build = [](std::size_t normal, std::size_t attack) {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (std::size_t i = 0; i < normal + attack; ++i) {
      rows.push_back({static_cast<double>(i)});
      labels.push_back(i < normal ? kNormal : kAttack);
    }
    return matrix(rows, labels);
  };
  const auto even = stratified_split(build(50, 50), 0.2, 1);
  CHECK(even.test.count(kNormal) == 10);
  CHECK(even.test.count(kAttack) == 10);

  const auto skew = stratified_split(build(90, 10), 0.2, 1);
  CHECK(skew.test.count(kNormal) == 18);
  CHECK(skew.test.count(kAttack) == 2);

  const auto again = stratified_split(build(90, 10), 0.2, 1);
  CHECK(again.test_rows == skew.test_rows);

  std::vector<int> seen(100, 0);
  for (auto r : skew.train_rows) ++seen[r];
  for (auto r : skew.test_rows) ++seen[r];
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));

  CHECK_THROWS_AS(stratified_split(build(10, 1), 0.2, 1), DataError);
  CHECK_THROWS_AS(stratified_split(build(10, 10), 1.0, 1), ConfigError);
}

TEST_CASE("synthetic drift") {
  SUBCASE("identity drift gives the same generator") {
    DriftPreset p;
    p.n_per_domain = 4000;
    auto spec = make_drift_spec(p);
    spec.drift = DriftTransform::identity(spec.dim());
    spec.noise_std = 0.0;
    const auto [h, s] = synth_drift(spec);
    CHECK(!(h.features == s.features));
    for (std::size_t j = 0; j < spec.dim(); ++j) {
      double mh = 0.0, ms = 0.0;
      for (std::size_t i = 0; i < h.rows(); ++i) mh += h.features(i, j);
      for (std::size_t i = 0; i < s.rows(); ++i) ms += s.features(i, j);
      CHECK(std::abs(mh / h.rows() - ms / s.rows()) < 0.15);
    }
  }
  SUBCASE("translation-only drift shifts per-class means") {
    DriftPreset p;
    auto spec = make_drift_spec(p);
    spec.drift = DriftTransform::identity(spec.dim());
    for (std::size_t j = 0; j < spec.dim(); ++j) spec.drift.translation[j] = j % 2 ? 2.0 : -1.0;
    spec.noise_std = 0.0;
    const auto [h, s] = synth_drift(spec);
    for (int c : {kNormal, kAttack}) {
      for (std::size_t j = 0; j < spec.dim(); ++j) {
        double sh = 0.0, sh2 = 0.0, ss = 0.0;
        std::size_t nh = 0, ns = 0;
        for (std::size_t i = 0; i < h.rows(); ++i) {
          if (h.labels[i] != c) continue;
          sh += h.features(i, j);
          sh2 += h.features(i, j) * h.features(i, j);
          ++nh;
        }
        for (std::size_t i = 0; i < s.rows(); ++i) {
          if (s.labels[i] != c) continue;
          ss += s.features(i, j);
          ++ns;
        }
        const double mh = sh / nh, ms = ss / ns;
        const double sd = std::sqrt(sh2 / nh - mh * mh);
        const double sem = sd * std::sqrt(1.0 / nh + 1.0 / ns);
        CHECK(std::abs((ms - mh) - spec.drift.translation[j]) < 3.0 * sem + 0.05);
      }
    }
  }
  SUBCASE("non-orthonormal rotation is rejected") {
    auto spec = make_drift_spec(DriftPreset{});
    spec.drift.rotation(0, 0) += 1e-6;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    CHECK_THROWS_AS(synth_drift(spec), ConfigError);
  }
  SUBCASE("degenerate covariance is rejected") {
    auto spec = make_drift_spec(DriftPreset{});
    spec.classes[0].components[0].stddev[3] = 0.0;
    CHECK_THROWS_AS(synth_drift(spec), ConfigError);
  }
  SUBCASE("fixed seed is byte-identical and json round trips") {
    DriftPreset p;
    p.n_per_domain = 300;
    const auto spec = make_drift_spec(p);
    const auto a = synth_drift(spec);
    const auto b = synth_drift(drift_spec_from_json(to_json(spec)));
    CHECK(a.first.features == b.first.features);
    CHECK(a.second.features == b.second.features);
    CHECK(a.second.labels == b.second.labels);
  }
  SUBCASE("plane rotation is orthonormal") {
    numkit::Rng rng(4);
    const Tensor r = plane_rotation(12, 0.7, rng);
    CHECK(numkit::max_abs_diff(numkit::matmul_tn(r, r), Tensor::identity(12)) < 1e-12);
  }
}
