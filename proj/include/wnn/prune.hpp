#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wnn/classifier.hpp"

namespace wnn {

/// Per-window class minima of the window p-th-power sums for every
/// evaluation image, stored [window][image][class]. Excluding a window then
/// amounts to subtracting one term from each class sum.
class WindowMinimaCache {
 public:
  WindowMinimaCache(const TrainingSet& train, const LabeledSet& eval, const ClassifierConfig& config,
                    int threads = 0);

  [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
  [[nodiscard]] const std::vector<int>& labels() const noexcept { return labels_; }
  [[nodiscard]] const Exponent& exponent() const noexcept { return p_; }
  [[nodiscard]] double minimum(int window, std::size_t image, int digit) const {
    return values_[(static_cast<std::size_t>(window) * size() + image) * kClassCount +
                   static_cast<std::size_t>(digit)];
  }
  [[nodiscard]] const double* window_row(int window) const {
    return values_.data() + static_cast<std::size_t>(window) * size() * kClassCount;
  }

  /// Class power sums per image over the windows not in `excluded`.
  [[nodiscard]] std::vector<std::array<double, kClassCount>> sums(const WindowMask& excluded) const;
  [[nodiscard]] std::uint32_t errors(const WindowMask& excluded) const;
  [[nodiscard]] double gap(const WindowMask& excluded) const;

 private:
  std::vector<int> labels_;
  std::vector<double> values_;
  Exponent p_;
};

/// Errors on `eval` with current_excluded plus `candidate` left out (NE_W).
/// Throws ContractViolation when the candidate is already excluded.
[[nodiscard]] std::uint32_t errors_excluding(int candidate, const WindowMask& current_excluded,
                                             const LabeledSet& eval, const TrainingSet& train,
                                             const ClassifierConfig& config);

/// Summed distance gap Dist(true class) - min over classes Dist, with
/// current_excluded plus `candidate` left out (GAP_W).
[[nodiscard]] double gap(int candidate, const WindowMask& current_excluded,
                         const LabeledSet& eval, const TrainingSet& train,
                         const ClassifierConfig& config);

enum class NeScoring {
  cumulative,  // NE_W with every earlier exclusion still in place
  single       // NE_W with only W excluded
};

struct PruneOptions {
  NeScoring scoring = NeScoring::cumulative;
  int threads = 0;
  /// Optional second set scored after every step (not used for choosing).
  const LabeledSet* holdout = nullptr;
  std::uint64_t seed = 0;  // echoed into the trace
};

struct PruneTrace {
  std::vector<int> excluded;  // 0-based, in exclusion order
  std::vector<std::uint32_t> errors;          // eval errors after each step
  std::vector<std::uint32_t> holdout_errors;  // empty without a holdout set
  std::uint32_t baseline_errors = 0;
  std::optional<std::uint32_t> baseline_holdout_errors;
  std::uint64_t eval_count = 0;
  std::uint64_t holdout_count = 0;
  std::uint64_t seed = 0;
  int window_size = kDefaultWindowSize;
};

/// Greedy exclusion: each step excludes, among the windows with the fewest
/// errors, the one with the largest gap (lowest index on ties).
/// `config.excluded` is the starting set. Throws ParameterError for K > 783
/// or more exclusions than windows remain.
[[nodiscard]] PruneTrace prune(const TrainingSet& train, const LabeledSet& eval,
                               const ClassifierConfig& config, int max_exclusions,
                               const PruneOptions& options = {});

/// Seeded per-digit split into (validation, holdout); ids and order within
/// each part follow the input.
[[nodiscard]] std::pair<LabeledSet, LabeledSet> split_validation(const LabeledSet& test,
                                                                 std::size_t per_digit_validation,
                                                                 std::uint64_t seed);

/// Trace file: "#" comment lines, then "step,window,errors[,holdout_errors]"
/// with 1-based windows; step 0 is the baseline with an empty window field.
void write_prune_trace(const std::filesystem::path& path, const PruneTrace& trace);
[[nodiscard]] std::string prune_trace_text(const PruneTrace& trace);

/// Reads 1-based window numbers from a trace file or a plain list (one per
/// line) and returns the first `limit` of them (all when limit < 0).
[[nodiscard]] WindowMask read_excluded_windows(const std::filesystem::path& path, int limit = -1);

}  // namespace wnn
