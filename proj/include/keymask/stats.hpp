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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace keymask::stats {

/// Aligned gold and predicted labels for one system.
struct PredictionSet {
  std::vector<std::string> doc_ids;
  std::vector<std::string> gold;
  std::vector<std::string> pred;

  std::size_t size() const noexcept { return gold.size(); }
  /// Throws ContractViolation when the three columns differ in length.
  void Validate() const;
};

/// Reads `doc_id,gold,pred` CSV (header required).
PredictionSet ReadPredictionsCsv(const std::filesystem::path& path);

/// Sorted union of gold and predicted labels.
std::vector<std::string> LabelSet(const PredictionSet& ps);

double Accuracy(const PredictionSet& ps);

/// Unweighted mean of per-label F1 over `labels`. A label with no gold and no
/// predicted instances scores 0. Throws ContractViolation on an empty label
/// set or a label outside it.
double MacroF1(const PredictionSet& ps, std::span<const std::string> labels);
double MacroF1(const PredictionSet& ps);

inline constexpr std::string_view kZeroSupportConvention =
    "macro average; a label absent from both gold and predictions contributes F1 = 0";
inline constexpr std::string_view kPValueConvention =
    "one-sided: p = fraction of resamples with metric(a) - metric(b) <= 0";

enum class Metric { kAccuracy, kF1 };

std::string_view ToString(Metric metric);
Metric ParseMetric(std::string_view name);

struct BootstrapResult {
  double p_value = 1.0;
  std::size_t n_resamples = 0;
  Metric metric = Metric::kAccuracy;
  /// metric(a) - metric(b) on the full sets.
  double observed_delta = 0.0;
  std::uint64_t seed = 0;
  /// Resamples whose delta was <= 0.
  std::size_t count_not_better = 0;
};

/// Paired bootstrap test of "system a beats system b".
///
/// Resample r draws |a| indices uniformly with replacement from a stream
/// keyed by (seed, r), so the result is independent of `threads`. F1 is
/// macro-averaged over the label set of the full data. Throws
/// ContractViolation when the sets are empty or not aligned on doc ids and
/// gold labels.
BootstrapResult PairedBootstrap(const PredictionSet& a, const PredictionSet& b, Metric metric,
                                std::size_t n_resamples = 1000, std::uint64_t seed = 0,
                                unsigned threads = 1);

/// Significance cut used when reporting bootstrap results.
inline constexpr double kSignificanceLevel = 0.05;

enum class AgreementBand { kPoor, kSlight, kFair, kModerate, kSubstantial, kNearPerfect };

/// <0 poor; [0,.2] slight; (.2,.4] fair; (.4,.6] moderate; (.6,.8] substantial;
/// (.8,1] near perfect.
AgreementBand BandFor(double kappa);
std::string_view ToString(AgreementBand band);
/// Title-case label, e.g. "Near Perfect".
std::string_view DisplayName(AgreementBand band);

struct KappaResult {
  double kappa = 0.0;
  double observed_agreement = 0.0;
  double expected_agreement = 0.0;
  AgreementBand band = AgreementBand::kPoor;
  std::vector<std::string> categories;
  /// matrix[i][j]: items rater a put in categories[i] and rater b in categories[j].
  std::vector<std::vector<std::uint64_t>> matrix;
};

/// Cohen's kappa from a square confusion matrix of counts.
KappaResult KappaFromMatrix(const std::vector<std::vector<std::uint64_t>>& matrix);

/// Unweighted Cohen's kappa for two raters over a declared category set.
/// Throws ContractViolation on empty input, a length mismatch, or a rating
/// outside `categories`.
KappaResult CohensKappa(std::span<const std::string> ratings_a,
                        std::span<const std::string> ratings_b,
                        std::span<const std::string> categories);
/// As above with the categories taken as the sorted union of both raters.
KappaResult CohensKappa(std::span<const std::string> ratings_a,
                        std::span<const std::string> ratings_b);

struct Ratings {
  std::vector<std::string> item_ids;
  std::vector<std::string> rater_a;
  std::vector<std::string> rater_b;
};

/// Reads `item_id,rater_a,rater_b` CSV (header required).
Ratings ReadRatingsCsv(const std::filesystem::path& path);

std::string ToJson(const BootstrapResult& result);
std::string ToJson(const KappaResult& result);

}  // namespace keymask::stats
