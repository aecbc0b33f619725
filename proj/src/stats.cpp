// Copyright 2026 The keymask Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "keymask/stats.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "keymask/csv.hpp"
#include "keymask/error.hpp"
#include "keymask/parallel.hpp"
#include "keymask/rng.hpp"

namespace keymask::stats {
namespace {

// Labels mapped to dense ints so resamples only touch integer arrays.
struct Encoded {
  std::vector<std::uint32_t> gold;
  std::vector<std::uint32_t> pred;
  std::size_t num_labels = 0;
};

Encoded Encode(const PredictionSet& ps, std::span<const std::string> labels) {
  if (labels.empty()) throw ContractViolation("label set is empty");
  std::map<std::string_view, std::uint32_t> index;
  for (const auto& l : labels) index.emplace(l, static_cast<std::uint32_t>(index.size()));
  auto lookup = [&](const std::string& l) {
    auto it = index.find(l);
    if (it == index.end()) throw ContractViolation("label '" + l + "' is not in the label set");
    return it->second;
  };
  Encoded e;
  e.num_labels = index.size();
  e.gold.reserve(ps.size());
  e.pred.reserve(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    e.gold.push_back(lookup(ps.gold[i]));
    e.pred.push_back(lookup(ps.pred[i]));
  }
  return e;
}

// Accumulates per-sample outcomes, then yields either metric.
class Tally {
 public:
  explicit Tally(std::size_t num_labels)
      : tp_(num_labels, 0), gold_(num_labels, 0), pred_(num_labels, 0) {}

  void Add(std::uint32_t gold, std::uint32_t pred) {
    ++n_;
    ++gold_[gold];
    ++pred_[pred];
    if (gold == pred) {
      ++tp_[gold];
      ++correct_;
    }
  }

  double Accuracy() const { return static_cast<double>(correct_) / static_cast<double>(n_); }

  double MacroF1() const {
    double sum = 0.0;
    for (std::size_t l = 0; l < tp_.size(); ++l) {
      const std::uint64_t denom = gold_[l] + pred_[l];
      // F1 = 2PR / (P + R) = 2 tp / (gold + pred); zero support scores 0.
      if (denom > 0) sum += 2.0 * static_cast<double>(tp_[l]) / static_cast<double>(denom);
    }
    return sum / static_cast<double>(tp_.size());
  }

  double Value(Metric m) const { return m == Metric::kAccuracy ? Accuracy() : MacroF1(); }

 private:
  std::vector<std::uint64_t> tp_, gold_, pred_;
  std::uint64_t n_ = 0;
  std::uint64_t correct_ = 0;
};

Tally FullTally(const Encoded& e) {
  Tally t(e.num_labels);
  for (std::size_t i = 0; i < e.gold.size(); ++i) t.Add(e.gold[i], e.pred[i]);
  return t;
}

void RequireNonEmpty(const PredictionSet& ps) {
  ps.Validate();
  if (ps.size() == 0) throw ContractViolation("prediction set is empty");
}

std::vector<std::string> SortedUnion(std::span<const std::string> a, std::span<const std::string> b) {
  std::set<std::string> s(a.begin(), a.end());
  s.insert(b.begin(), b.end());
  return {s.begin(), s.end()};
}

template <typename Row>
std::vector<Row> ReadThreeColumns(const std::filesystem::path& path, const char* c0, const char* c1,
                                  const char* c2) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  CsvReader reader(in, path.string());
  auto header = reader.Next();
  if (!header) throw FormatError(path.string(), 1, "missing header");
  const auto i0 = FindColumn(*header, c0);
  const auto i1 = FindColumn(*header, c1);
  const auto i2 = FindColumn(*header, c2);
  if (!i0 || !i1 || !i2) {
    throw FormatError(path.string(), 1,
                      std::string("header must contain ") + c0 + "," + c1 + "," + c2);
  }
  std::vector<Row> rows;
  const std::size_t need = std::max({*i0, *i1, *i2});
  while (auto rec = reader.Next()) {
    if (rec->size() <= need) throw FormatError(path.string(), reader.record_line(), "short row");
    rows.push_back({(*rec)[*i0], (*rec)[*i1], (*rec)[*i2]});
  }
  return rows;
}

struct Triple {
  std::string a, b, c;
};

}  // namespace

void PredictionSet::Validate() const {
  if (doc_ids.size() != gold.size() || gold.size() != pred.size()) {
    throw ContractViolation("prediction set columns differ in length");
  }
}

PredictionSet ReadPredictionsCsv(const std::filesystem::path& path) {
  PredictionSet ps;
  for (auto& row : ReadThreeColumns<Triple>(path, "doc_id", "gold", "pred")) {
    ps.doc_ids.push_back(std::move(row.a));
    ps.gold.push_back(std::move(row.b));
    ps.pred.push_back(std::move(row.c));
  }
  return ps;
}

std::vector<std::string> LabelSet(const PredictionSet& ps) { return SortedUnion(ps.gold, ps.pred); }

double Accuracy(const PredictionSet& ps) {
  RequireNonEmpty(ps);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) correct += ps.gold[i] == ps.pred[i];
  return static_cast<double>(correct) / static_cast<double>(ps.size());
}

double MacroF1(const PredictionSet& ps, std::span<const std::string> labels) {
  RequireNonEmpty(ps);
  return FullTally(Encode(ps, labels)).MacroF1();
}

double MacroF1(const PredictionSet& ps) { return MacroF1(ps, LabelSet(ps)); }

std::string_view ToString(Metric metric) {
  return metric == Metric::kAccuracy ? "accuracy" : "f1";
}

Metric ParseMetric(std::string_view name) {
  if (name == "accuracy") return Metric::kAccuracy;
  if (name == "f1") return Metric::kF1;
  throw ConfigError("unknown metric '" + std::string(name) + "' (expected f1 or accuracy)");
}

BootstrapResult PairedBootstrap(const PredictionSet& a, const PredictionSet& b, Metric metric,
                                std::size_t n_resamples, std::uint64_t seed, unsigned threads) {
  RequireNonEmpty(a);
  RequireNonEmpty(b);
  if (a.size() != b.size()) throw ContractViolation("systems were scored on different numbers of items");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.doc_ids[i] != b.doc_ids[i] || a.gold[i] != b.gold[i]) {
      throw ContractViolation("systems are misaligned at row " + std::to_string(i + 1) + " (doc '" +
                              a.doc_ids[i] + "' vs '" + b.doc_ids[i] + "')");
    }
  }
  if (n_resamples == 0) throw ContractViolation("n_resamples must be positive");

  const auto labels = SortedUnion(LabelSet(a), LabelSet(b));
  const Encoded ea = Encode(a, labels);
  const Encoded eb = Encode(b, labels);
  const std::size_t n = a.size();

  BootstrapResult result;
  result.metric = metric;
  result.n_resamples = n_resamples;
  result.seed = seed;
  result.observed_delta = FullTally(ea).Value(metric) - FullTally(eb).Value(metric);

  std::vector<char> not_better(n_resamples, 0);
  ParallelFor(n_resamples, threads, [&](std::size_t r) {
    CounterRng rng(seed, r);
    Tally ta(labels.size());
    Tally tb(labels.size());
    for (std::size_t k = 0; k < n; ++k) {
      const auto i = static_cast<std::size_t>(rng.NextBelow(n));
      ta.Add(ea.gold[i], ea.pred[i]);
      tb.Add(eb.gold[i], eb.pred[i]);
    }
    not_better[r] = (ta.Value(metric) - tb.Value(metric)) <= 0.0;
  });
  result.count_not_better =
      static_cast<std::size_t>(std::count(not_better.begin(), not_better.end(), 1));
  result.p_value = static_cast<double>(result.count_not_better) / static_cast<double>(n_resamples);
  return result;
}

AgreementBand BandFor(double kappa) {
  if (kappa < 0.0) return AgreementBand::kPoor;
  if (kappa <= 0.20) return AgreementBand::kSlight;
  if (kappa <= 0.40) return AgreementBand::kFair;
  if (kappa <= 0.60) return AgreementBand::kModerate;
  if (kappa <= 0.80) return AgreementBand::kSubstantial;
  return AgreementBand::kNearPerfect;
}

std::string_view ToString(AgreementBand band) {
  switch (band) {
    case AgreementBand::kPoor: return "poor";
    case AgreementBand::kSlight: return "slight";
    case AgreementBand::kFair: return "fair";
    case AgreementBand::kModerate: return "moderate";
    case AgreementBand::kSubstantial: return "substantial";
    case AgreementBand::kNearPerfect: return "near_perfect";
  }
  return "poor";
}

std::string_view DisplayName(AgreementBand band) {
  switch (band) {
    case AgreementBand::kPoor: return "Poor";
    case AgreementBand::kSlight: return "Slight";
    case AgreementBand::kFair: return "Fair";
    case AgreementBand::kModerate: return "Moderate";
    case AgreementBand::kSubstantial: return "Substantial";
    case AgreementBand::kNearPerfect: return "Near Perfect";
  }
  return "Poor";
}

KappaResult KappaFromMatrix(const std::vector<std::vector<std::uint64_t>>& matrix) {
  const std::size_t k = matrix.size();
  if (k == 0) throw ContractViolation("confusion matrix is empty");
  std::vector<std::uint64_t> rows(k, 0), cols(k, 0);
  std::uint64_t n = 0;
  std::uint64_t diagonal = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (matrix[i].size() != k) throw ContractViolation("confusion matrix must be square");
    for (std::size_t j = 0; j < k; ++j) {
      rows[i] += matrix[i][j];
      cols[j] += matrix[i][j];
      n += matrix[i][j];
    }
    diagonal += matrix[i][i];
  }
  if (n == 0) throw ContractViolation("confusion matrix has no ratings");
  std::uint64_t chance = 0;
  for (std::size_t i = 0; i < k; ++i) chance += rows[i] * cols[i];

  KappaResult r;
  r.matrix = matrix;
  const double total = static_cast<double>(n);
  r.observed_agreement = static_cast<double>(diagonal) / total;
  r.expected_agreement = static_cast<double>(chance) / (total * total);
  if (chance == n * n) {
    // Both raters used a single, shared category.
    r.kappa = diagonal == n ? 1.0 : 0.0;
  } else {
    r.kappa = (r.observed_agreement - r.expected_agreement) / (1.0 - r.expected_agreement);
  }
  r.band = BandFor(r.kappa);
  return r;
}

KappaResult CohensKappa(std::span<const std::string> ratings_a,
                        std::span<const std::string> ratings_b,
                        std::span<const std::string> categories) {
  if (ratings_a.size() != ratings_b.size()) {
    throw ContractViolation("raters scored " + std::to_string(ratings_a.size()) + " and " +
                            std::to_string(ratings_b.size()) + " items");
  }
  if (ratings_a.empty()) throw ContractViolation("no ratings");
  if (categories.empty()) throw ContractViolation("category set is empty");
  std::map<std::string_view, std::size_t> index;
  for (const auto& c : categories) index.emplace(c, index.size());
  auto lookup = [&](const std::string& c) {
    auto it = index.find(c);
    if (it == index.end()) throw ContractViolation("unknown category '" + c + "'");
    return it->second;
  };
  std::vector<std::vector<std::uint64_t>> matrix(index.size(),
                                                 std::vector<std::uint64_t>(index.size(), 0));
  for (std::size_t i = 0; i < ratings_a.size(); ++i) ++matrix[lookup(ratings_a[i])][lookup(ratings_b[i])];
  KappaResult r = KappaFromMatrix(matrix);
  r.categories.resize(index.size());
  for (const auto& [name, i] : index) r.categories[i] = std::string(name);
  return r;
}

KappaResult CohensKappa(std::span<const std::string> ratings_a,
                        std::span<const std::string> ratings_b) {
  const auto categories = SortedUnion(ratings_a, ratings_b);
  return CohensKappa(ratings_a, ratings_b, categories);
}

Ratings ReadRatingsCsv(const std::filesystem::path& path) {
  Ratings r;
  for (auto& row : ReadThreeColumns<Triple>(path, "item_id", "rater_a", "rater_b")) {
    r.item_ids.push_back(std::move(row.a));
    r.rater_a.push_back(std::move(row.b));
    r.rater_b.push_back(std::move(row.c));
  }
  return r;
}

std::string ToJson(const BootstrapResult& r) {
  nlohmann::ordered_json j;
  j["test"] = "paired_bootstrap";
  j["metric"] = std::string(ToString(r.metric));
  j["p_value"] = r.p_value;
  j["n_resamples"] = r.n_resamples;
  j["observed_delta"] = r.observed_delta;
  j["seed"] = r.seed;
  j["count_not_better"] = r.count_not_better;
  j["significance_level"] = kSignificanceLevel;
  j["significant"] = r.p_value <= kSignificanceLevel;
  j["p_value_convention"] = std::string(kPValueConvention);
  j["f1_averaging"] = std::string(kZeroSupportConvention);
  return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string ToJson(const KappaResult& r) {
  nlohmann::ordered_json j;
  j["test"] = "cohens_kappa";
  j["kappa"] = r.kappa;
  j["observed_agreement"] = r.observed_agreement;
  j["expected_agreement"] = r.expected_agreement;
  j["band"] = std::string(ToString(r.band));
  j["band_label"] = std::string(DisplayName(r.band));
  j["categories"] = r.categories;
  j["matrix"] = r.matrix;
  j["kappa_convention"] = "unweighted; kappa = 1 when expected agreement is 1 and raters agree fully";
  j["band_scale"] = "<0 poor; [0,0.2] slight; (0.2,0.4] fair; (0.4,0.6] moderate; (0.6,0.8] substantial; (0.8,1] near_perfect";
  return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace keymask::stats
