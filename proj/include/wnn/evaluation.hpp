#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "wnn/augment.hpp"
#include "wnn/classifier.hpp"
#include "wnn/image.hpp"

namespace wnn {

enum class ClassifierKind { nn, wnn, dwnn, hybrid };

[[nodiscard]] ClassifierKind parse_classifier_kind(const std::string& name);
[[nodiscard]] std::string to_string(ClassifierKind kind);

struct Misclassified {
  int digit = 0;
  std::uint32_t id = 0;  // 1-based position within the digit
  int predicted = 0;
  friend bool operator==(const Misclassified&, const Misclassified&) = default;
};

struct EvaluationReport {
  std::string label;  // column name, e.g. "NN" or "WNN11"
  ClassifierKind kind = ClassifierKind::wnn;
  int window_size = kDefaultWindowSize;
  double p = 2.0;
  std::size_t excluded_windows = 0;
  bool binarized = false;
  int threshold = kDefaultThreshold;
  std::string augment = "set0";
  std::array<std::uint64_t, kClassCount> train_counts{};  // before augmentation

  std::array<std::uint32_t, kClassCount> tested{};
  std::array<std::uint32_t, kClassCount> errors{};
  std::uint32_t total_errors = 0;
  std::uint64_t test_count = 0;
  double error_rate = 0.0;
  std::vector<Misclassified> misclassified;  // in test-set order
  std::uint64_t test_digest = 0;             // identifies the test set
  bool complete = true;
  double wall_clock_seconds = 0.0;
};

struct EvaluateOptions {
  int threads = 0;
  /// Level applied lazily to the training set for nn/wnn; for the hybrid it
  /// is the level used by its WNN and NN parts.
  AugmentLevel augment{};
  TransformOrder ext_order = TransformOrder::transform_first;
  /// Line file of finished verdicts; an existing file is resumed.
  std::filesystem::path checkpoint;
  std::size_t batch_size = 128;
  /// Stop once at least this many new images are classified (0 = no limit);
  /// the report then has complete == false.
  std::size_t stop_after = 0;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

/// Classifies every test image and tallies errors per true digit. The
/// result does not depend on thread count or on checkpoint interruptions.
[[nodiscard]] EvaluationReport evaluate(ClassifierKind kind, const LabeledSet& train,
                                        const LabeledSet& test, const ClassifierConfig& config,
                                        const EvaluateOptions& options = {});

/// Predicted digit per test image in test-set order (digit-major).
[[nodiscard]] std::vector<int> predict_all(ClassifierKind kind, const LabeledSet& train,
                                           const LabeledSet& test, const ClassifierConfig& config,
                                           const EvaluateOptions& options = {});

/// One WNN report per window size, optionally preceded by the NN report.
[[nodiscard]] std::vector<EvaluationReport> sweep_window_sizes(
    const LabeledSet& train, const LabeledSet& test, const std::vector<int>& sizes,
    const Exponent& p, bool include_nn = false, const EvaluateOptions& options = {});

struct ErrorOverlap {
  std::size_t common = 0;
  std::size_t union_size = 0;
  double fraction = 0.0;  // common / union, 1 when both are empty
};

/// Compares the misclassified-image sets of two reports over the same test
/// set. Throws ParameterError when the test sets differ.
[[nodiscard]] ErrorOverlap error_overlap(const EvaluationReport& a, const EvaluationReport& b);

/// Naive-algorithm operation count per classification:
/// nn: 10 M (784*3 + 1); wnn: 10 M (784 (3 S^2 + 1) + 1).
[[nodiscard]] std::uint64_t op_count(ClassifierKind algorithm, std::uint64_t images_per_class,
                                     int window_size);

/// "digit,<label>..." header, rows 0-9, then "Total".
void write_error_table_csv(std::ostream& out, std::span<const EvaluationReport> reports);
[[nodiscard]] std::string error_table_csv(std::span<const EvaluationReport> reports);
/// Same table with aligned columns.
[[nodiscard]] std::string error_table_text(std::span<const EvaluationReport> reports);

/// JSON rendering of a report; timing is left out unless requested so that
/// identical runs give identical files.
[[nodiscard]] std::string report_json(const EvaluationReport& report, bool include_timing = false);
[[nodiscard]] EvaluationReport report_from_json(const std::string& text);

/// FNV-1a digest of the (digit, id) sequence of a labeled set.
[[nodiscard]] std::uint64_t test_set_digest(const LabeledSet& set);

}  // namespace wnn
