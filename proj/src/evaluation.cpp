#include "wnn/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "json.hpp"
#include "wnn/dwnn.hpp"
#include "wnn/error.hpp"
#include "wnn/parallel.hpp"

namespace wnn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kChunkImages = 4096;
constexpr std::size_t kExtChunk = 32;
constexpr std::size_t kExtCacheLimit = 4096;
constexpr const char* kCheckpointTag = "# wnn-checkpoint v1 ";

struct TestRef {
  int digit;
  std::uint32_t id;
  const Image* image;
};

std::vector<TestRef> enumerate(const LabeledSet& test) {
  std::vector<TestRef> out;
  for (int d = 0; d < kClassCount; ++d) {
    const auto& cls = test.at(d);
    for (std::size_t i = 0; i < cls.images.size(); ++i) out.push_back({d, cls.ids[i], &cls.images[i]});
  }
  return out;
}

struct Fnv {
  std::uint64_t h = 1469598103934665603ull;
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  }
  template <class T>
  void value(const T& v) {
    bytes(&v, sizeof(v));
  }
};

std::uint64_t pixel_digest(const LabeledSet& set) {
  Fnv f;
  for (int d = 0; d < kClassCount; ++d) {
    f.value(set.size(d));
    for (const auto& image : set.images(d)) f.bytes(image.pixels().data(), image.pixels().size());
  }
  return f.h;
}

std::string label_for(ClassifierKind kind, int window_size) {
  switch (kind) {
    case ClassifierKind::nn: return "NN";
    case ClassifierKind::wnn: return "WNN" + std::to_string(window_size);
    case ClassifierKind::dwnn: return "DWNN" + std::to_string(window_size);
    case ClassifierKind::hybrid: return "HYBRID" + std::to_string(window_size);
  }
  return "?";
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Training images of one class, delivered as packed chunks. Set 0 is packed
// once; augmented levels are regenerated chunk by chunk on every pass.
class ChunkStream {
 public:
  ChunkStream(const LabeledSet& base, const AugmentLevel& level, const ClassifierConfig& config,
              int threads)
      : base_(base), variants_(level_variants(level)), config_(config), threads_(threads) {
    if (variants_.size() == 1) {
      for (int d = 0; d < kClassCount; ++d) {
        auto& refs = cached_[static_cast<std::size_t>(d)];
        for (const auto& image : base.images(d)) refs.append(config.prepare(image));
      }
    }
  }

  template <class F>
  void for_each(int digit, F&& f) const {
    if (variants_.size() == 1) {
      f(cached_[static_cast<std::size_t>(digit)]);
      return;
    }
    const auto& images = base_.images(digit);
    const std::size_t per_chunk = std::max<std::size_t>(1, kChunkImages / variants_.size());
    std::vector<Image> generated;
    for (std::size_t start = 0; start < images.size(); start += per_chunk) {
      const std::size_t count = std::min(per_chunk, images.size() - start);
      generated.assign(count * variants_.size(), Image{});
      parallel_for(count, threads_, [&](std::size_t b, int) {
        for (std::size_t v = 0; v < variants_.size(); ++v) {
          generated[b * variants_.size() + v] = config_.prepare(variants_[v].apply(images[start + b]));
        }
      });
      f(ReferenceSet(generated));
    }
  }

 private:
  const LabeledSet& base_;
  std::vector<Variant> variants_;
  const ClassifierConfig& config_;
  int threads_;
  std::array<ReferenceSet, kClassCount> cached_;
};

// Extensions of Set-0 training images, cached when small.
class ExtStream {
 public:
  ExtStream(const LabeledSet& base, TransformOrder order, const ClassifierConfig& config,
            int threads)
      : base_(base), order_(order), config_(config), threads_(threads) {
    if (base.total() <= kExtCacheLimit) {
      cache_.emplace();
      for (int d = 0; d < kClassCount; ++d) {
        const auto& images = base.images(d);
        auto& out = (*cache_)[static_cast<std::size_t>(d)];
        out.resize(images.size());
        parallel_for(images.size(), threads_, [&](std::size_t i, int) { out[i] = pack(images[i]); });
      }
    }
  }

  template <class F>
  void for_each(int digit, F&& f) const {
    if (cache_) {
      f(std::span<const ReferenceSet>((*cache_)[static_cast<std::size_t>(digit)]));
      return;
    }
    const auto& images = base_.images(digit);
    std::vector<ReferenceSet> chunk;
    for (std::size_t start = 0; start < images.size(); start += kExtChunk) {
      const std::size_t count = std::min(kExtChunk, images.size() - start);
      chunk.assign(count, ReferenceSet{});
      parallel_for(count, threads_, [&](std::size_t i, int) { chunk[i] = pack(images[start + i]); });
      f(std::span<const ReferenceSet>(chunk));
    }
  }

 private:
  ReferenceSet pack(const Image& image) const {
    ReferenceSet refs;
    for (const auto& v : build_ext(image, order_).variants) refs.append(config_.prepare(v));
    return refs;
  }

  const LabeledSet& base_;
  TransformOrder order_;
  const ClassifierConfig& config_;
  int threads_;
  std::optional<std::array<std::vector<ReferenceSet>, kClassCount>> cache_;
};

std::string fingerprint(ClassifierKind kind, const LabeledSet& train, const LabeledSet& test,
                        const ClassifierConfig& config, const EvaluateOptions& options) {
  Fnv excluded;
  const std::string bits = config.excluded.to_string();
  excluded.bytes(bits.data(), bits.size());
  std::ostringstream s;
  s << label_for(kind, config.window_size) << " p=" << format_double(config.p.value())
    << " excluded=" << config.excluded.count() << ":" << std::hex << excluded.h << std::dec
    << " binarized=" << config.binarized << " threshold=" << config.threshold
    << " augment=" << to_string(options.augment.dataset) << "/" << to_string(options.augment.level)
    << "/" << static_cast<int>(options.augment.order)
    << " ext=" << static_cast<int>(options.ext_order) << " train=" << std::hex
    << pixel_digest(train) << " test=" << pixel_digest(test) << ":" << test_set_digest(test);
  return s.str();
}

class Checkpoint {
 public:
  Checkpoint(const std::filesystem::path& path, const std::string& header,
             const std::vector<TestRef>& tests, std::vector<int>& predicted)
      : path_(path) {
    std::map<std::pair<int, std::uint32_t>, std::size_t> index;
    for (std::size_t i = 0; i < tests.size(); ++i) {
      if (!index.emplace(std::pair{tests[i].digit, tests[i].id}, i).second) {
        throw ParameterError("checkpointing needs unique test ids; digit " +
                             std::to_string(tests[i].digit) + " repeats id " +
                             std::to_string(tests[i].id));
      }
    }
    std::uintmax_t valid = 0;
    if (std::filesystem::exists(path)) {
      std::ifstream in(path, std::ios::binary);
      std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      std::size_t pos = 0;
      bool first = true;
      while (pos < text.size()) {
        const std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) break;  // torn final line
        const std::string line = text.substr(pos, end - pos);
        if (first) {
          if (line != kCheckpointTag + header) {
            throw ParameterError("checkpoint " + path.string() + " belongs to a different run");
          }
          first = false;
        } else {
          int digit = 0;
          unsigned id = 0;
          int guess = 0;
          if (std::sscanf(line.c_str(), "%d,%u,%d", &digit, &id, &guess) != 3 || guess < 0 ||
              guess >= kClassCount) {
            throw ParseError("checkpoint " + path.string() + ": bad record '" + line + "'");
          }
          const auto it = index.find({digit, id});
          if (it == index.end()) {
            throw ParseError("checkpoint " + path.string() + ": unknown test image " +
                             std::to_string(digit) + "/" + std::to_string(id));
          }
          predicted[it->second] = guess;
        }
        pos = end + 1;
        valid = pos;
      }
    }
    if (valid > 0) {
      std::filesystem::resize_file(path, valid);
      out_.open(path, std::ios::binary | std::ios::app);
    } else {
      out_.open(path, std::ios::binary | std::ios::trunc);
      out_ << kCheckpointTag << header << '\n';
    }
    if (!out_) throw ParameterError("cannot write checkpoint " + path.string());
    out_.flush();
  }

  void record(const TestRef& t, int predicted) {
    out_ << t.digit << ',' << t.id << ',' << predicted << '\n';
  }
  void flush() {
    out_.flush();
    if (!out_) throw Error("write to checkpoint " + path_.string() + " failed");
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

std::vector<int> run(ClassifierKind kind, const LabeledSet& train, const LabeledSet& test,
                     const ClassifierConfig& config, const EvaluateOptions& options,
                     bool& complete) {
  config.validate();
  if (!train.all_classes_nonempty()) {
    for (int d = 0; d < kClassCount; ++d) {
      if (train.size(d) == 0) throw ContractViolation("training class " + std::to_string(d) + " is empty");
    }
  }
  if (kind == ClassifierKind::dwnn && options.augment.level != Level::set0) {
    throw ParameterError("dwnn works on the unaugmented Set 0");
  }
  const int threads = resolve_threads(options.threads);
  const auto tests = enumerate(test);
  std::vector<int> predicted(tests.size(), -1);

  std::optional<Checkpoint> checkpoint;
  if (!options.checkpoint.empty()) {
    checkpoint.emplace(options.checkpoint, fingerprint(kind, train, test, config, options), tests,
                       predicted);
  }
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    if (predicted[i] < 0) pending.push_back(i);
  }
  complete = true;
  if (pending.empty()) return predicted;

  const bool uses_wnn = kind == ClassifierKind::wnn || kind == ClassifierKind::hybrid;
  const bool uses_nn = kind == ClassifierKind::nn || kind == ClassifierKind::hybrid;
  const bool uses_dwnn = kind == ClassifierKind::dwnn || kind == ClassifierKind::hybrid;
  const Exponent nn_p = kind == ClassifierKind::hybrid ? Exponent(2.0) : config.p;

  std::optional<ChunkStream> stream;
  std::optional<ExtStream> exts;
  if (uses_wnn || uses_nn) stream.emplace(train, options.augment, config, threads);
  if (uses_dwnn) exts.emplace(train, options.ext_order, config, threads);

  const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);
  std::size_t processed = 0;
  const std::size_t done_before = tests.size() - pending.size();
  for (std::size_t start = 0; start < pending.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, pending.size() - start);
    std::vector<QueryImage> queries(count);
    for (std::size_t t = 0; t < count; ++t) {
      queries[t] = make_query(config.prepare(*tests[pending[start + t]].image));
    }
    using Row = std::array<double, kClassCount>;
    std::vector<Row> wnn(count), nn(count), dw(count);
    for (std::size_t t = 0; t < count; ++t) {
      nn[t].fill(kInf);
      dw[t].fill(kInf);
    }

    if (uses_wnn || uses_nn) {
      std::vector<WindowMinimaAccumulator> accs;
      if (uses_wnn) accs.assign(count, WindowMinimaAccumulator(config.window_size, config.p));
      for (int c = 0; c < kClassCount; ++c) {
        for (auto& a : accs) a.reset();
        stream->for_each(c, [&](const ReferenceSet& chunk) {
          parallel_for(count, threads, [&](std::size_t t, int) {
            if (uses_wnn) accs[t].update(queries[t], chunk);
            if (uses_nn) {
              auto& v = nn[t][static_cast<std::size_t>(c)];
              v = std::min(v, min_full_power_distance(queries[t], chunk, nn_p));
            }
          });
        });
        if (uses_wnn) {
          for (std::size_t t = 0; t < count; ++t) {
            wnn[t][static_cast<std::size_t>(c)] = accs[t].power_sum(config.excluded);
          }
        }
      }
    }

    if (uses_dwnn) {
      std::vector<WindowMinimaAccumulator> scratch(
          count, WindowMinimaAccumulator(config.window_size, Exponent(2.0)));
      for (int c = 0; c < kClassCount; ++c) {
        exts->for_each(c, [&](std::span<const ReferenceSet> chunk) {
          parallel_for(count, threads, [&](std::size_t t, int) {
            auto& v = dw[t][static_cast<std::size_t>(c)];
            for (const auto& ext : chunk) {
              v = std::min(v, dwnn_power(queries[t], ext, config.window_size, scratch[t]));
            }
          });
        });
      }
    }

    for (std::size_t t = 0; t < count; ++t) {
      int guess = 0;
      switch (kind) {
        case ClassifierKind::nn: guess = argmin_class(nn[t]); break;
        case ClassifierKind::wnn: guess = argmin_class(wnn[t]); break;
        case ClassifierKind::dwnn: guess = argmin_class(dw[t]); break;
        case ClassifierKind::hybrid:
          guess = resolve_hybrid(argmin_class(wnn[t]), argmin_class(dw[t]), nn[t]).final_digit;
          break;
      }
      const std::size_t i = pending[start + t];
      predicted[i] = guess;
      if (checkpoint) checkpoint->record(tests[i], guess);
    }
    if (checkpoint) checkpoint->flush();
    processed += count;
    if (options.progress) options.progress(done_before + processed, tests.size());
    if (options.stop_after > 0 && processed >= options.stop_after &&
        start + count < pending.size()) {
      complete = false;
      break;
    }
  }
  return predicted;
}

EvaluationReport make_report(ClassifierKind kind, const LabeledSet& train, const LabeledSet& test,
                             const ClassifierConfig& config, const EvaluateOptions& options,
                             const std::vector<int>& predicted, bool complete) {
  EvaluationReport r;
  r.label = label_for(kind, config.window_size);
  r.kind = kind;
  r.window_size = config.window_size;
  r.p = kind == ClassifierKind::dwnn ? 2.0 : config.p.value();
  r.excluded_windows = config.excluded.count();
  r.binarized = config.binarized;
  r.threshold = config.threshold;
  r.augment = kind == ClassifierKind::dwnn ? "set0" : to_string(options.augment.level);
  for (int d = 0; d < kClassCount; ++d) r.train_counts[static_cast<std::size_t>(d)] = train.size(d);
  r.test_digest = test_set_digest(test);
  r.complete = complete;
  const auto tests = enumerate(test);
  for (std::size_t i = 0; i < tests.size(); ++i) {
    if (predicted[i] < 0) continue;
    const auto d = static_cast<std::size_t>(tests[i].digit);
    ++r.tested[d];
    if (predicted[i] != tests[i].digit) {
      ++r.errors[d];
      r.misclassified.push_back({tests[i].digit, tests[i].id, predicted[i]});
    }
  }
  for (int d = 0; d < kClassCount; ++d) {
    r.total_errors += r.errors[static_cast<std::size_t>(d)];
    r.test_count += r.tested[static_cast<std::size_t>(d)];
  }
  r.error_rate = r.test_count ? static_cast<double>(r.total_errors) / static_cast<double>(r.test_count) : 0.0;
  return r;
}

}  // namespace

ClassifierKind parse_classifier_kind(const std::string& name) {
  if (name == "nn") return ClassifierKind::nn;
  if (name == "wnn") return ClassifierKind::wnn;
  if (name == "dwnn") return ClassifierKind::dwnn;
  if (name == "hybrid") return ClassifierKind::hybrid;
  throw ParameterError("unknown classifier '" + name + "' (expected nn, wnn, dwnn or hybrid)");
}

std::string to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::nn: return "nn";
    case ClassifierKind::wnn: return "wnn";
    case ClassifierKind::dwnn: return "dwnn";
    case ClassifierKind::hybrid: return "hybrid";
  }
  return "?";
}

std::uint64_t test_set_digest(const LabeledSet& set) {
  Fnv f;
  for (int d = 0; d < kClassCount; ++d) {
    const auto& ids = set.at(d).ids;
    f.value(static_cast<std::uint64_t>(ids.size()));
    for (auto id : ids) f.value(id);
  }
  return f.h;
}

std::vector<int> predict_all(ClassifierKind kind, const LabeledSet& train, const LabeledSet& test,
                             const ClassifierConfig& config, const EvaluateOptions& options) {
  bool complete = true;
  return run(kind, train, test, config, options, complete);
}

EvaluationReport evaluate(ClassifierKind kind, const LabeledSet& train, const LabeledSet& test,
                          const ClassifierConfig& config, const EvaluateOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  bool complete = true;
  const auto predicted = run(kind, train, test, config, options, complete);
  auto report = make_report(kind, train, test, config, options, predicted, complete);
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::vector<EvaluationReport> sweep_window_sizes(const LabeledSet& train, const LabeledSet& test,
                                                 const std::vector<int>& sizes, const Exponent& p,
                                                 bool include_nn, const EvaluateOptions& options) {
  for (int s : sizes) check_window_size(s);
  std::vector<EvaluationReport> out;
  ClassifierConfig config;
  config.p = p;
  auto with_checkpoint = [&](const std::string& label) {
    EvaluateOptions o = options;
    if (!o.checkpoint.empty()) o.checkpoint += "." + label;
    return o;
  };
  if (include_nn) out.push_back(evaluate(ClassifierKind::nn, train, test, config, with_checkpoint("NN")));
  for (int s : sizes) {
    config.window_size = s;
    out.push_back(evaluate(ClassifierKind::wnn, train, test, config,
                           with_checkpoint(label_for(ClassifierKind::wnn, s))));
  }
  return out;
}

ErrorOverlap error_overlap(const EvaluationReport& a, const EvaluationReport& b) {
  if (a.test_digest != b.test_digest || a.tested != b.tested) {
    throw ParameterError("error_overlap needs reports over the same test set");
  }
  std::set<std::pair<int, std::uint32_t>> sa, sb;
  for (const auto& m : a.misclassified) sa.emplace(m.digit, m.id);
  for (const auto& m : b.misclassified) sb.emplace(m.digit, m.id);
  ErrorOverlap o;
  for (const auto& k : sa) o.common += sb.count(k);
  o.union_size = sa.size() + sb.size() - o.common;
  o.fraction = o.union_size ? static_cast<double>(o.common) / static_cast<double>(o.union_size) : 1.0;
  return o;
}

std::uint64_t op_count(ClassifierKind algorithm, std::uint64_t images_per_class, int window_size) {
  if (images_per_class < 1) throw ParameterError("op_count needs at least one image per class");
  const std::uint64_t m = images_per_class;
  switch (algorithm) {
    case ClassifierKind::nn: return 10 * m * (784 * 3 + 1);
    case ClassifierKind::wnn: {
      check_window_size(window_size);
      const auto s = static_cast<std::uint64_t>(window_size);
      return 10 * m * (784 * (3 * s * s + 1) + 1);
    }
    default: throw ParameterError("op_count covers nn and wnn only");
  }
}

void write_error_table_csv(std::ostream& out, std::span<const EvaluationReport> reports) {
  out << "digit";
  for (const auto& r : reports) out << ',' << r.label;
  out << '\n';
  for (int d = 0; d < kClassCount; ++d) {
    out << d;
    for (const auto& r : reports) out << ',' << r.errors[static_cast<std::size_t>(d)];
    out << '\n';
  }
  out << "Total";
  for (const auto& r : reports) out << ',' << r.total_errors;
  out << '\n';
}

std::string error_table_csv(std::span<const EvaluationReport> reports) {
  std::ostringstream s;
  write_error_table_csv(s, reports);
  return s.str();
}

std::string error_table_text(std::span<const EvaluationReport> reports) {
  std::ostringstream s;
  std::vector<int> width;
  for (const auto& r : reports) width.push_back(std::max<int>(6, static_cast<int>(r.label.size()) + 1));
  s << std::left << std::setw(6) << "digit" << std::right;
  for (std::size_t i = 0; i < reports.size(); ++i) s << std::setw(width[i]) << reports[i].label;
  s << '\n';
  for (int d = 0; d < kClassCount; ++d) {
    s << std::left << std::setw(6) << d << std::right;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      s << std::setw(width[i]) << reports[i].errors[static_cast<std::size_t>(d)];
    }
    s << '\n';
  }
  s << std::left << std::setw(6) << "Total" << std::right;
  for (std::size_t i = 0; i < reports.size(); ++i) s << std::setw(width[i]) << reports[i].total_errors;
  s << '\n';
  return s.str();
}

std::string report_json(const EvaluationReport& r, bool include_timing) {
  nlohmann::ordered_json j;
  j["label"] = r.label;
  j["classifier"] = to_string(r.kind);
  j["window_size"] = r.window_size;
  j["p"] = r.p;
  j["excluded_windows"] = r.excluded_windows;
  j["binarized"] = r.binarized;
  j["threshold"] = r.threshold;
  j["augment"] = r.augment;
  j["train_counts"] = r.train_counts;
  j["test_count"] = r.test_count;
  j["test_digest"] = r.test_digest;
  j["per_digit_tested"] = r.tested;
  j["per_digit_errors"] = r.errors;
  j["total_errors"] = r.total_errors;
  j["error_rate"] = r.error_rate;
  j["complete"] = r.complete;
  auto& list = j["misclassified"] = nlohmann::ordered_json::array();
  for (const auto& m : r.misclassified) {
    list.push_back({{"digit", m.digit}, {"id", m.id}, {"predicted", m.predicted}});
  }
  if (include_timing) j["wall_clock_seconds"] = r.wall_clock_seconds;
  return j.dump(2) + "\n";
}

EvaluationReport report_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EvaluationReport r;
    r.label = j.at("label").get<std::string>();
    r.kind = parse_classifier_kind(j.at("classifier").get<std::string>());
    r.window_size = j.at("window_size").get<int>();
    r.p = j.at("p").get<double>();
    r.excluded_windows = j.at("excluded_windows").get<std::size_t>();
    r.binarized = j.at("binarized").get<bool>();
    r.threshold = j.at("threshold").get<int>();
    r.augment = j.at("augment").get<std::string>();
    r.train_counts = j.at("train_counts").get<std::array<std::uint64_t, kClassCount>>();
    r.test_count = j.at("test_count").get<std::uint64_t>();
    r.test_digest = j.at("test_digest").get<std::uint64_t>();
    r.tested = j.at("per_digit_tested").get<std::array<std::uint32_t, kClassCount>>();
    r.errors = j.at("per_digit_errors").get<std::array<std::uint32_t, kClassCount>>();
    r.total_errors = j.at("total_errors").get<std::uint32_t>();
    r.error_rate = j.at("error_rate").get<double>();
    r.complete = j.at("complete").get<bool>();
    for (const auto& m : j.at("misclassified")) {
      r.misclassified.push_back(
          {m.at("digit").get<int>(), m.at("id").get<std::uint32_t>(), m.at("predicted").get<int>()});
    }
    if (j.contains("wall_clock_seconds")) r.wall_clock_seconds = j["wall_clock_seconds"].get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad report JSON: ") + e.what());
  }
}

}  // namespace wnn
