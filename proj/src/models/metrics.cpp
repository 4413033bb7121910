#include "ldrift/metrics.hpp"

#include <iomanip>
#include <sstream>

#include "ldrift/errors.hpp"

namespace ldrift::eval {
namespace {

const char* class_name(std::size_t c) { return c == 0 ? "normal" : "attack"; }

double ratio(std::uint64_t num, std::uint64_t den, const std::string& name,
             std::vector<std::string>& zero_division) {
  if (den == 0) {
    zero_division.push_back(name);
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::uint64_t ConfusionMatrix::total() const {
  return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
}

std::array<std::array<double, 2>, 2> ConfusionMatrix::row_percentages() const {
  std::array<std::array<double, 2>, 2> out{};
  for (std::size_t t = 0; t < 2; ++t) {
    const std::uint64_t row = counts[t][0] + counts[t][1];
    if (row == 0) continue;
    for (std::size_t p = 0; p < 2; ++p) {
      out[t][p] = 100.0 * static_cast<double>(counts[t][p]) / static_cast<double>(row);
    }
  }
  return out;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) {
    throw DimensionError("confusion: " + std::to_string(truth.size()) + " labels vs " +
                         std::to_string(predicted.size()) + " predictions");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if ((truth[i] != 0 && truth[i] != 1) || (predicted[i] != 0 && predicted[i] != 1)) {
      throw DataError("confusion: labels must be 0 or 1");
    }
    ++cm.counts[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  }
  return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw DataError("metrics of an empty confusion matrix");
  MetricsReport r;
  r.confusion = cm;
  r.accuracy = static_cast<double>(cm.counts[0][0] + cm.counts[1][1]) / static_cast<double>(total);
  for (std::size_t c = 0; c < 2; ++c) {
    const std::size_t o = 1 - c;
    const std::uint64_t tp = cm.counts[c][c];
    const std::uint64_t fp = cm.counts[o][c];
    const std::uint64_t fn = cm.counts[c][o];
    auto& m = r.per_class[c];
    const std::string name = class_name(c);
    m.support = tp + fn;
    m.precision = ratio(tp, tp + fp, name + ".precision", r.zero_division);
    m.recall = ratio(tp, tp + fn, name + ".recall", r.zero_division);
    if (m.precision + m.recall > 0.0) {
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    } else {
      r.zero_division.push_back(name + ".f1");
    }
    const double w = static_cast<double>(m.support) / static_cast<double>(total);
    r.precision += w * m.precision;
    r.recall += w * m.recall;
    r.f1 += w * m.f1;
  }
  return r;
}

MetricsReport evaluate(std::span<const int> truth, std::span<const int> predicted) {
  return metrics(confusion(truth, predicted));
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
  const auto pct = cm.row_percentages();
  nlohmann::json j;
  // Rows are true classes, columns predicted classes, attack first.
  j["order"] = {"attack", "normal"};
  j["counts"] = {{cm.counts[1][1], cm.counts[1][0]}, {cm.counts[0][1], cm.counts[0][0]}};
  j["row_percent"] = {{pct[1][1], pct[1][0]}, {pct[0][1], pct[0][0]}};
  return j;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& m = r.per_class[c];
    j["per_class"][class_name(c)] = {
        {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
  }
  j["confusion"] = to_json(r.confusion);
  j["zero_division"] = r.zero_division;
  return j;
}

std::string to_text(const MetricsReport& r) {
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed;
  os << "accuracy = " << r.accuracy << '\n'
     << "precision = " << r.precision << '\n'
     << "recall = " << r.recall << '\n'
     << "f1 = " << r.f1 << '\n';
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& m = r.per_class[c];
    const std::string n = class_name(c);
    os << n << ".precision = " << m.precision << '\n'
       << n << ".recall = " << m.recall << '\n'
       << n << ".f1 = " << m.f1 << '\n'
       << n << ".support = " << m.support << '\n';
  }
  const auto pct = r.confusion.row_percentages();
  os << "confusion.attack_as_attack_pct = " << pct[1][1] << '\n'
     << "confusion.attack_as_normal_pct = " << pct[1][0] << '\n'
     << "confusion.normal_as_attack_pct = " << pct[0][1] << '\n'
     << "confusion.normal_as_normal_pct = " << pct[0][0] << '\n';
  return os.str();
}

}  // namespace ldrift::eval
