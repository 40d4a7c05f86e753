#include "wnn/prune.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "wnn/error.hpp"
#include "wnn/parallel.hpp"

namespace wnn {
namespace {

using Sums = std::vector<std::array<double, kClassCount>>;

void check_candidate(int candidate, const WindowMask& current) {
  if (candidate < 0 || candidate >= kPixelCount) {
    throw ParameterError("window index must lie in [0,783], got " + std::to_string(candidate));
  }
  if (current.test(static_cast<std::size_t>(candidate))) {
    throw ContractViolation("window " + std::to_string(candidate + 1) + " is already excluded");
  }
}

int argmin_minus(const std::array<double, kClassCount>& base, const double* row) {
  int best = 0;
  double best_v = base[0] - row[0];
  for (int c = 1; c < kClassCount; ++c) {
    const double v = base[static_cast<std::size_t>(c)] - row[c];
    if (v < best_v) {
      best_v = v;
      best = c;
    }
  }
  return best;
}

std::uint32_t errors_minus(const Sums& base, const double* row, const std::vector<int>& labels) {
  std::uint32_t errors = 0;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    errors += argmin_minus(base[b], row + b * kClassCount) != labels[b];
  }
  return errors;
}

double gap_minus(const Sums& base, const double* row, const std::vector<int>& labels,
                 const Exponent& p) {
  double total = 0.0;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const double* r = row + b * kClassCount;
    double lowest = base[b][0] - r[0];
    for (int c = 1; c < kClassCount; ++c) lowest = std::min(lowest, base[b][static_cast<std::size_t>(c)] - r[c]);
    const auto t = static_cast<std::size_t>(labels[b]);
    total += p.root(base[b][t] - r[labels[b]]) - p.root(lowest);
  }
  return total;
}

// Unbiased draw from [0, bound).
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    const std::uint64_t x = rng();
    if (x < limit) return x % bound;
  }
}

}  // namespace

WindowMinimaCache::WindowMinimaCache(const TrainingSet& train, const LabeledSet& eval,
                                     const ClassifierConfig& config, int threads)
    : p_(config.p) {
  config.validate();
  train.check_nonempty();
  if (train.binarized() != config.binarized) {
    throw ContractViolation("training set binarization does not match the classifier config");
  }
  std::vector<const Image*> images;
  for (int d = 0; d < kClassCount; ++d) {
    for (const auto& image : eval.images(d)) {
      images.push_back(&image);
      labels_.push_back(d);
    }
  }
  const std::size_t n = images.size();
  values_.assign(static_cast<std::size_t>(kPixelCount) * n * kClassCount, 0.0);
  parallel_for(n, threads, [&](std::size_t b, int) {
    const QueryImage query = make_query(config.prepare(*images[b]));
    WindowMinimaAccumulator acc(config.window_size, config.p);
    for (int c = 0; c < kClassCount; ++c) {
      acc.reset();
      acc.update(query, train.references(c));
      const WindowValues m = acc.minima();
      for (int w = 0; w < kPixelCount; ++w) {
        values_[(static_cast<std::size_t>(w) * n + b) * kClassCount + static_cast<std::size_t>(c)] =
            m[static_cast<std::size_t>(w)];
      }
    }
  });
}

Sums WindowMinimaCache::sums(const WindowMask& excluded) const {
  Sums out(size());
  for (auto& s : out) s.fill(0.0);
  for (int w = 0; w < kPixelCount; ++w) {
    if (excluded.test(static_cast<std::size_t>(w))) continue;
    const double* row = window_row(w);
    for (std::size_t b = 0; b < size(); ++b) {
      for (int c = 0; c < kClassCount; ++c) out[b][static_cast<std::size_t>(c)] += row[b * kClassCount + static_cast<std::size_t>(c)];
    }
  }
  return out;
}

std::uint32_t WindowMinimaCache::errors(const WindowMask& excluded) const {
  if (excluded.all()) throw ContractViolation("all 784 windows are excluded");
  const Sums s = sums(excluded);
  std::uint32_t errors = 0;
  for (std::size_t b = 0; b < size(); ++b) errors += argmin_class(s[b]) != labels_[b];
  return errors;
}

double WindowMinimaCache::gap(const WindowMask& excluded) const {
  if (excluded.all()) throw ContractViolation("all 784 windows are excluded");
  const Sums s = sums(excluded);
  double total = 0.0;
  for (std::size_t b = 0; b < size(); ++b) {
    const double lowest = *std::min_element(s[b].begin(), s[b].end());
    total += p_.root(s[b][static_cast<std::size_t>(labels_[b])]) - p_.root(lowest);
  }
  return total;
}

std::uint32_t errors_excluding(int candidate, const WindowMask& current_excluded,
                               const LabeledSet& eval, const TrainingSet& train,
                               const ClassifierConfig& config) {
  check_candidate(candidate, current_excluded);
  WindowMask mask = current_excluded;
  mask.set(static_cast<std::size_t>(candidate));
  ClassifierConfig base = config;
  base.excluded.reset();
  return WindowMinimaCache(train, eval, base).errors(mask);
}

double gap(int candidate, const WindowMask& current_excluded, const LabeledSet& eval,
           const TrainingSet& train, const ClassifierConfig& config) {
  check_candidate(candidate, current_excluded);
  WindowMask mask = current_excluded;
  mask.set(static_cast<std::size_t>(candidate));
  ClassifierConfig base = config;
  base.excluded.reset();
  return WindowMinimaCache(train, eval, base).gap(mask);
}

PruneTrace prune(const TrainingSet& train, const LabeledSet& eval, const ClassifierConfig& config,
                 int max_exclusions, const PruneOptions& options) {
  const int remaining_windows = kPixelCount - static_cast<int>(config.excluded.count());
  if (max_exclusions < 0 || max_exclusions > kPixelCount - 1 ||
      max_exclusions > remaining_windows - 1) {
    throw ParameterError("cannot exclude " + std::to_string(max_exclusions) + " more windows; " +
                         std::to_string(remaining_windows) + " remain and one must be kept");
  }
  ClassifierConfig base = config;
  base.excluded.reset();
  const int threads = resolve_threads(options.threads);
  const WindowMinimaCache cache(train, eval, base, threads);
  std::optional<WindowMinimaCache> holdout;
  if (options.holdout) holdout.emplace(train, *options.holdout, base, threads);

  PruneTrace trace;
  trace.seed = options.seed;
  trace.window_size = config.window_size;
  trace.eval_count = cache.size();
  WindowMask excluded = config.excluded;
  Sums current = cache.sums(excluded);
  const Sums full = options.scoring == NeScoring::single ? cache.sums({}) : Sums{};
  Sums holdout_current;
  trace.baseline_errors = cache.errors(excluded);
  if (holdout) {
    trace.holdout_count = holdout->size();
    holdout_current = holdout->sums(excluded);
    trace.baseline_holdout_errors = holdout->errors(excluded);
  }
  const auto& labels = cache.labels();

  std::vector<std::uint32_t> ne(kPixelCount);
  std::vector<double> gaps(kPixelCount);
  for (int step = 0; step < max_exclusions; ++step) {
    const Sums& scoring = options.scoring == NeScoring::cumulative ? current : full;
    std::vector<int> candidates;
    for (int w = 0; w < kPixelCount; ++w) {
      if (!excluded.test(static_cast<std::size_t>(w))) candidates.push_back(w);
    }
    parallel_for(candidates.size(), threads, [&](std::size_t i, int) {
      const int w = candidates[i];
      ne[static_cast<std::size_t>(w)] = errors_minus(scoring, cache.window_row(w), labels);
    });
    std::uint32_t fewest = std::numeric_limits<std::uint32_t>::max();
    for (int w : candidates) fewest = std::min(fewest, ne[static_cast<std::size_t>(w)]);
    std::vector<int> tied;
    for (int w : candidates) {
      if (ne[static_cast<std::size_t>(w)] == fewest) tied.push_back(w);
    }
    int chosen = tied.front();
    if (tied.size() > 1) {
      parallel_for(tied.size(), threads, [&](std::size_t i, int) {
        const int w = tied[i];
        gaps[static_cast<std::size_t>(w)] = gap_minus(scoring, cache.window_row(w), labels, cache.exponent());
      });
      for (int w : tied) {
        if (gaps[static_cast<std::size_t>(w)] > gaps[static_cast<std::size_t>(chosen)]) chosen = w;
      }
    }

    excluded.set(static_cast<std::size_t>(chosen));
    const double* row = cache.window_row(chosen);
    std::uint32_t errors = 0;
    for (std::size_t b = 0; b < labels.size(); ++b) {
      for (int c = 0; c < kClassCount; ++c) current[b][static_cast<std::size_t>(c)] -= row[b * kClassCount + static_cast<std::size_t>(c)];
      errors += argmin_class(current[b]) != labels[b];
    }
    trace.excluded.push_back(chosen);
    trace.errors.push_back(errors);
    if (holdout) {
      const double* hrow = holdout->window_row(chosen);
      std::uint32_t herrors = 0;
      for (std::size_t b = 0; b < holdout->size(); ++b) {
        for (int c = 0; c < kClassCount; ++c) holdout_current[b][static_cast<std::size_t>(c)] -= hrow[b * kClassCount + static_cast<std::size_t>(c)];
        herrors += argmin_class(holdout_current[b]) != holdout->labels()[b];
      }
      trace.holdout_errors.push_back(herrors);
    }
  }
  return trace;
}

std::pair<LabeledSet, LabeledSet> split_validation(const LabeledSet& test,
                                                   std::size_t per_digit_validation,
                                                   std::uint64_t seed) {
  for (int d = 0; d < kClassCount; ++d) {
    if (per_digit_validation > 0 && per_digit_validation >= test.size(d)) {
      throw ParameterError("digit " + std::to_string(d) + ": validation size " +
                           std::to_string(per_digit_validation) + " must be below its " +
                           std::to_string(test.size(d)) + " test images");
    }
  }
  std::mt19937_64 rng(seed);
  LabeledSet validation, holdout;
  for (int d = 0; d < kClassCount; ++d) {
    const auto& cls = test.at(d);
    const std::size_t n = cls.images.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_below(rng, i)]);
    std::vector<bool> chosen(n, false);
    for (std::size_t i = 0; i < per_digit_validation; ++i) chosen[order[i]] = true;
    for (std::size_t i = 0; i < n; ++i) {
      (chosen[i] ? validation : holdout).add(d, cls.images[i], cls.ids[i]);
    }
  }
  return {std::move(validation), std::move(holdout)};
}

std::string prune_trace_text(const PruneTrace& trace) {
  std::ostringstream s;
  s << "# window_size=" << trace.window_size << " seed=" << trace.seed
    << " eval_images=" << trace.eval_count;
  if (trace.baseline_holdout_errors) s << " holdout_images=" << trace.holdout_count;
  s << '\n';
  const bool with_holdout = trace.baseline_holdout_errors.has_value();
  s << "step,window,errors" << (with_holdout ? ",holdout_errors" : "") << '\n';
  s << "0,," << trace.baseline_errors;
  if (with_holdout) s << ',' << *trace.baseline_holdout_errors;
  s << '\n';
  for (std::size_t i = 0; i < trace.excluded.size(); ++i) {
    s << i + 1 << ',' << trace.excluded[i] + 1 << ',' << trace.errors[i];
    if (with_holdout) s << ',' << trace.holdout_errors[i];
    s << '\n';
  }
  return s.str();
}

void write_prune_trace(const std::filesystem::path& path, const PruneTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot write " + path.string());
  out << prune_trace_text(trace);
}

WindowMask read_excluded_windows(const std::filesystem::path& path, int limit) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  WindowMask mask;
  std::string line;
  int taken = 0;
  int line_no = 0;
  while (std::getline(in, line) && (limit < 0 || taken < limit)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line.rfind("step", 0) == 0) continue;
    std::string field = line;
    if (const auto comma = line.find(','); comma != std::string::npos) {
      const auto next = line.find(',', comma + 1);
      field = line.substr(comma + 1, next == std::string::npos ? std::string::npos : next - comma - 1);
      if (field.empty()) continue;  // baseline row
    }
    int window = 0;
    try {
      std::size_t used = 0;
      window = std::stoi(field, &used);
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad window '" + field + "'");
    }
    if (window < 1 || window > kPixelCount) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": window " +
                       std::to_string(window) + " outside [1,784]");
    }
    mask.set(static_cast<std::size_t>(window - 1));
    ++taken;
  }
  return mask;
}

}  // namespace wnn
