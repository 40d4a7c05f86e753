// Command-line entry point: prepare, augment, evaluate, sweep, prune,
// opcount, render.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wnn/augment.hpp"
#include "wnn/dwnn.hpp"
#include "wnn/error.hpp"
#include "wnn/evaluation.hpp"
#include "wnn/idx.hpp"
#include "wnn/prune.hpp"
#include "wnn/split.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace wnn;

namespace {

struct RunConfig {
  std::string subcommand;
  int threads = 0;
  bool dry_run = false;

  // data
  std::string dataset = "mnist";
  fs::path data_dir;
  std::string split = "balanced";
  std::string train_range = "1:6000";
  std::string test_range = "6001:";

  // classifier
  std::string classifier = "wnn";
  int window_size = kDefaultWindowSize;
  double p = 2.0;
  bool binarize = false;
  int threshold = kDefaultThreshold;
  fs::path exclude_file;
  int exclude_count = -1;
  std::string augment = "set0";
  std::string order = "shift-first";
  std::string ext_order = "rotate-first";

  // outputs
  fs::path csv;
  fs::path json;
  fs::path out;
  fs::path checkpoint;
  fs::path compare;
  bool timing = false;
  bool quiet = false;

  // sweep
  std::vector<int> sizes;
  bool with_nn = false;

  // prune
  int exclusions = 0;
  std::size_t validation = 0;
  std::uint64_t seed = 1;
  std::string scoring = "cumulative";

  // opcount
  std::string algorithm = "wnn";
  std::uint64_t images_per_class = 24000;

  // augment
  bool count_only = false;

  // render
  std::string which = "test";
  int digit = 0;
  std::uint32_t index = 1;
  int count = 1;
  bool pair = false;
};

TransformOrder parse_order(const std::string& s) {
  if (s == "shift-first") return TransformOrder::shift_first;
  if (s == "rotate-first" || s == "transform-first") return TransformOrder::transform_first;
  throw ParameterError("unknown transform order '" + s + "' (expected shift-first or rotate-first)");
}

ordered_json describe(const RunConfig& c) {
  ordered_json j;
  j["subcommand"] = c.subcommand;
  j["threads"] = c.threads;
  j["dataset"] = c.dataset;
  j["data_dir"] = c.data_dir.string();
  j["split"] = c.split;
  if (c.split == "custom") {
    j["train"] = c.train_range;
    j["test"] = c.test_range;
  }
  j["classifier"] = c.classifier;
  j["window_size"] = c.window_size;
  j["p"] = c.p;
  j["binarize"] = c.binarize;
  j["threshold"] = c.threshold;
  j["exclude_file"] = c.exclude_file.string();
  j["exclude_count"] = c.exclude_count;
  j["augment"] = c.augment;
  j["order"] = c.order;
  j["ext_order"] = c.ext_order;
  j["checkpoint"] = c.checkpoint.string();
  j["csv"] = c.csv.string();
  j["json"] = c.json.string();
  j["out"] = c.out.string();
  if (c.subcommand == "sweep") {
    j["sizes"] = c.sizes;
    j["with_nn"] = c.with_nn;
  }
  if (c.subcommand == "prune") {
    j["exclusions"] = c.exclusions;
    j["validation_per_digit"] = c.validation;
    j["seed"] = c.seed;
    j["scoring"] = c.scoring;
  }
  if (c.subcommand == "opcount") {
    j["algorithm"] = c.algorithm;
    j["images_per_class"] = c.images_per_class;
  }
  if (c.subcommand == "render") {
    j["set"] = c.which;
    j["digit"] = c.digit;
    j["index"] = c.index;
    j["count"] = c.count;
    j["pair"] = c.pair;
  }
  return j;
}

DatasetKind dataset_kind(const RunConfig& c) { return parse_dataset_kind(c.dataset); }

SplitSpec split_spec(const RunConfig& c) {
  const DatasetKind kind = dataset_kind(c);
  const SplitScheme scheme = parse_split_scheme(c.split);
  if (scheme == SplitScheme::custom) {
    return SplitSpec::custom(kind, IndexRange::parse(c.train_range), IndexRange::parse(c.test_range));
  }
  SplitSpec spec;
  spec.dataset = kind;
  spec.scheme = scheme;
  return spec;
}

ClassifierConfig classifier_config(const RunConfig& c) {
  ClassifierConfig config;
  config.window_size = c.window_size;
  config.p = Exponent(c.p);
  config.binarized = c.binarize;
  config.threshold = c.threshold;
  if (!c.exclude_file.empty()) config.excluded = read_excluded_windows(c.exclude_file, c.exclude_count);
  config.validate();
  return config;
}

AugmentLevel augment_level(const RunConfig& c) {
  return {dataset_kind(c) == DatasetKind::mnist ? DatasetKind::mnist : DatasetKind::emnist_digits,
          parse_level(c.augment), parse_order(c.order)};
}

Split load_split(const RunConfig& c) {
  const DatasetKind kind = dataset_kind(c);
  const SplitSpec spec = split_spec(c);
  const RawDataset raw = load_dataset(kind, DatasetFiles::in_directory(kind, c.data_dir));
  return build_split(spec, raw);
}

EvaluateOptions evaluate_options(const RunConfig& c) {
  EvaluateOptions o;
  o.threads = c.threads;
  o.augment = augment_level(c);
  o.ext_order = parse_order(c.ext_order);
  o.checkpoint = c.checkpoint;
  if (!c.quiet) {
    o.progress = [](std::size_t done, std::size_t total) {
      std::fprintf(stderr, "\r%zu/%zu", done, total);
      if (done == total) std::fputc('\n', stderr);
    };
  }
  return o;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void emit_table(const RunConfig& c, const std::vector<EvaluationReport>& reports) {
  const std::string csv = error_table_csv(reports);
  if (c.csv.empty()) {
    std::cout << csv;
  } else {
    write_text(c.csv, csv);
    if (!c.quiet) std::cerr << error_table_text(reports);
  }
}

int run_prepare(const RunConfig& c) {
  if (c.out.empty()) throw ParameterError("prepare needs --out DIR");
  const Split s = load_split(c);
  fs::create_directories(c.out);
  auto maybe_binarize = [&](const LabeledSet& set) {
    auto items = flatten(set);
    if (c.binarize) {
      for (auto& item : items) item.image = binarize(item.image, c.threshold);
    }
    return items;
  };
  write_idx(c.out / "train-images-idx3-ubyte", c.out / "train-labels-idx1-ubyte", maybe_binarize(s.train));
  write_idx(c.out / "test-images-idx3-ubyte", c.out / "test-labels-idx1-ubyte", maybe_binarize(s.test));
  ordered_json m = describe(c);
  std::array<std::size_t, kClassCount> train{}, test{};
  for (int d = 0; d < kClassCount; ++d) {
    train[static_cast<std::size_t>(d)] = s.train.size(d);
    test[static_cast<std::size_t>(d)] = s.test.size(d);
  }
  m["train_counts"] = train;
  m["test_counts"] = test;
  write_text(c.out / "manifest.json", m.dump(2) + "\n");
  std::cout << "train " << s.train.total() << " images, test " << s.test.total() << " images -> "
            << c.out.string() << "\n";
  return 0;
}

int run_augment(const RunConfig& c) {
  const AugmentLevel level = augment_level(c);
  if (c.count_only) {
    std::array<std::uint64_t, kClassCount> base{};
    const Split s = load_split(c);
    for (int d = 0; d < kClassCount; ++d) base[static_cast<std::size_t>(d)] = s.train.size(d);
    const auto counts = count_level(base, level);
    std::uint64_t total = 0;
    std::cout << "digit,count\n";
    for (int d = 0; d < kClassCount; ++d) {
      std::cout << d << ',' << counts[static_cast<std::size_t>(d)] << '\n';
      total += counts[static_cast<std::size_t>(d)];
    }
    std::cout << "Total," << total << '\n';
    return 0;
  }
  if (c.out.empty()) throw ParameterError("augment needs --out DIR (or --count-only)");
  const Split s = load_split(c);
  fs::create_directories(c.out);
  IdxWriter writer(c.out / "train-images-idx3-ubyte", c.out / "train-labels-idx1-ubyte");
  std::array<std::uint64_t, kClassCount> counts{};
  for_each_augmented(s.train, level, [&](int d, const Image& image) {
    writer.write(image, d);
    ++counts[static_cast<std::size_t>(d)];
  });
  writer.close();
  ordered_json m;
  m["dataset"] = c.dataset;
  m["level"] = c.augment;
  m["order"] = c.order;
  m["counts"] = counts;
  m["total"] = writer.count();
  write_text(c.out / "manifest.json", m.dump(2) + "\n");
  std::cout << writer.count() << " images -> " << c.out.string() << "\n";
  return 0;
}

int run_evaluate(const RunConfig& c) {
  const ClassifierConfig config = classifier_config(c);
  const ClassifierKind kind = parse_classifier_kind(c.classifier);
  const Split s = load_split(c);
  const EvaluationReport report = evaluate(kind, s.train, s.test, config, evaluate_options(c));
  emit_table(c, {report});
  if (!c.json.empty()) write_text(c.json, report_json(report, c.timing));
  if (!c.compare.empty()) {
    const auto other = report_from_json(read_text(c.compare));
    const auto o = error_overlap(report, other);
    std::cerr << "overlap with " << c.compare.string() << ": common " << o.common << ", union " << o.union_size
              << ", fraction " << o.fraction << "\n";
  }
  if (!report.complete) std::cerr << "incomplete run\n";
  return 0;
}

int run_sweep(const RunConfig& c) {
  const ClassifierConfig config = classifier_config(c);
  const Split s = load_split(c);
  EvaluateOptions options = evaluate_options(c);
  std::vector<EvaluationReport> reports;
  auto one = [&](ClassifierKind kind, int size) {
    ClassifierConfig cc = config;
    cc.window_size = size;
    EvaluateOptions o = options;
    const std::string label = kind == ClassifierKind::nn ? "NN" : "WNN" + std::to_string(size);
    if (!o.checkpoint.empty()) o.checkpoint += "." + label;
    reports.push_back(evaluate(kind, s.train, s.test, cc, o));
    if (!c.json.empty()) write_text(c.json / (label + ".json"), report_json(reports.back(), c.timing));
  };
  if (c.with_nn) one(ClassifierKind::nn, config.window_size);
  for (int size : c.sizes) one(ClassifierKind::wnn, size);
  emit_table(c, reports);
  return 0;
}

int run_prune(const RunConfig& c) {
  if (c.out.empty()) throw ParameterError("prune needs --out FILE for the trace");
  const ClassifierConfig config = classifier_config(c);
  const Split s = load_split(c);
  PruneOptions options;
  options.threads = c.threads;
  options.seed = c.seed;
  if (c.scoring == "single") {
    options.scoring = NeScoring::single;
  } else if (c.scoring != "cumulative") {
    throw ParameterError("unknown scoring '" + c.scoring + "' (expected cumulative or single)");
  }
  const TrainingSet train(s.train, config.binarized, config.threshold);
  PruneTrace trace;
  if (c.validation > 0) {
    const auto [validation, holdout] = split_validation(s.test, c.validation, c.seed);
    options.holdout = &holdout;
    trace = prune(train, validation, config, c.exclusions, options);
  } else {
    trace = prune(train, s.test, config, c.exclusions, options);
  }
  write_prune_trace(c.out, trace);
  std::cout << "baseline " << trace.baseline_errors << " errors";
  if (!trace.errors.empty()) std::cout << ", after " << trace.errors.size() << " exclusions " << trace.errors.back();
  std::cout << " -> " << c.out.string() << "\n";
  return 0;
}

int run_opcount(const RunConfig& c) {
  std::cout << op_count(parse_classifier_kind(c.algorithm), c.images_per_class, c.window_size) << "\n";
  return 0;
}

void write_pgm(const fs::path& path, const Image& image) {
  std::ostringstream s;
  s << "P5\n28 28\n255\n";
  s.write(reinterpret_cast<const char*>(image.pixels().data()), kPixelCount);
  write_text(path, s.str());
}

std::string ascii(const Image& image) {
  static const char ramp[] = " .:-=+*#%@";
  std::string out;
  for (int r = 0; r < kSide; ++r) {
    for (int c = 0; c < kSide; ++c) out += ramp[image.at(r, c) * 9 / 255];
    out += '\n';
  }
  return out;
}

int run_render(const RunConfig& c) {
  check_digit(c.digit);
  if (c.out.empty()) throw ParameterError("render needs --out DIR");
  const Split s = load_split(c);
  const LabeledSet& set = c.which == "train" ? s.train : s.test;
  if (c.which != "train" && c.which != "test") throw ParameterError("--set must be train or test");
  const auto& cls = set.at(c.digit);
  fs::create_directories(c.out);
  for (int k = 0; k < c.count; ++k) {
    const std::size_t i = static_cast<std::size_t>(c.index) - 1 + static_cast<std::size_t>(k);
    if (c.index < 1 || i >= cls.images.size()) {
      throw ParameterError("index " + std::to_string(i + 1) + " outside the " + std::to_string(cls.images.size()) +
                           " " + c.which + " images of digit " + std::to_string(c.digit));
    }
    const Image& image = cls.images[i];
    const std::string stem = c.which + "_d" + std::to_string(c.digit) + "_" + std::to_string(i + 1);
    write_pgm(c.out / (stem + ".pgm"), image);
    std::cout << stem << " (id " << cls.ids[i] << ")\n" << ascii(image);
    if (c.pair) {
      write_pgm(c.out / (stem + "_transposed.pgm"), orient_emnist(image));
      std::cout << stem << " transposed\n" << ascii(orient_emnist(image));
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Windowed nearest neighbour classifier"};
  app.require_subcommand(1);
  RunConfig c;
  if (const char* env = std::getenv("WNN_DATA_DIR")) c.data_dir = env;
  else c.data_dir = "data";

  app.add_option("--threads", c.threads, "Worker threads, 0 = all cores")->capture_default_str();
  app.add_flag("--dry-run", c.dry_run, "Print the resolved configuration and stop");
  app.add_flag("-q,--quiet", c.quiet, "No progress output");

  auto data_options = [&](CLI::App* sub) {
    sub->add_option("--dataset", c.dataset, "mnist or emnist-digits")->capture_default_str();
    sub->add_option("--data-dir", c.data_dir, "IDX directory (default $WNN_DATA_DIR)")->capture_default_str();
    sub->add_option("--split", c.split, "standard, balanced or custom")->capture_default_str();
    sub->add_option("--train", c.train_range, "custom train range, e.g. 1:4000")->capture_default_str();
    sub->add_option("--test", c.test_range, "custom test range, e.g. 4001:5000")->capture_default_str();
  };
  auto classifier_options = [&](CLI::App* sub) {
    sub->add_option("-S,--window", c.window_size, "Window size (odd)")->capture_default_str();
    sub->add_option("-p,--exponent", c.p, "Exponent p >= 1")->capture_default_str();
    sub->add_flag("--binarize", c.binarize, "Binarize train and test images");
    sub->add_option("--threshold", c.threshold, "Binarization threshold")->capture_default_str();
    sub->add_option("--exclude-file", c.exclude_file, "Excluded windows (trace or list, 1-based)");
    sub->add_option("--exclude-count", c.exclude_count, "Use only the first K windows of --exclude-file");
    sub->add_option("--checkpoint", c.checkpoint, "Resumable verdict file");
    sub->add_option("--csv", c.csv, "CSV error table (default stdout)");
    sub->add_option("--json", c.json, "JSON report path (sweep: directory)");
    sub->add_flag("--timing", c.timing, "Include wall-clock time in JSON");
  };

  auto* prepare = app.add_subcommand("prepare", "Write a train/test split as IDX files");
  data_options(prepare);
  prepare->add_option("--out", c.out, "Output directory");
  prepare->add_flag("--binarize", c.binarize, "Binarize images");
  prepare->add_option("--threshold", c.threshold, "Binarization threshold")->capture_default_str();

  auto* augment = app.add_subcommand("augment", "Materialize an augmented training set");
  data_options(augment);
  augment->add_option("--level", c.augment, "set0..set4")->capture_default_str();
  augment->add_option("--order", c.order, "shift-first or rotate-first")->capture_default_str();
  augment->add_option("--out", c.out, "Output directory");
  augment->add_flag("--count-only", c.count_only, "Print per-digit counts only");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Per-digit error table for one classifier");
  data_options(evaluate_cmd);
  classifier_options(evaluate_cmd);
  evaluate_cmd->add_option("--classifier", c.classifier, "nn, wnn, dwnn or hybrid")->capture_default_str();
  evaluate_cmd->add_option("--augment", c.augment, "Training level set0..set4 (hybrid: its Set-4 level)")
      ->capture_default_str();
  evaluate_cmd->add_option("--order", c.order, "shift-first or rotate-first")->capture_default_str();
  evaluate_cmd->add_option("--ext-order", c.ext_order, "DWNN extension order")->capture_default_str();
  evaluate_cmd->add_option("--compare", c.compare, "JSON report to compute the error overlap with");

  auto* sweep = app.add_subcommand("sweep", "Error table over window sizes");
  data_options(sweep);
  classifier_options(sweep);
  sweep->add_option("--sizes", c.sizes, "Window sizes")->required()->delimiter(',');
  sweep->add_flag("--nn", c.with_nn, "Add an NN column first");

  auto* prune_cmd = app.add_subcommand("prune", "Greedy window exclusion");
  data_options(prune_cmd);
  classifier_options(prune_cmd);
  prune_cmd->add_option("-K,--exclusions", c.exclusions, "Number of windows to exclude")->required();
  prune_cmd->add_option("--validation", c.validation, "Validation images per digit (0 = whole test set)")
      ->capture_default_str();
  prune_cmd->add_option("--seed", c.seed, "Seed of the validation split")->capture_default_str();
  prune_cmd->add_option("--scoring", c.scoring, "cumulative or single")->capture_default_str();
  prune_cmd->add_option("--out", c.out, "Trace file");

  auto* opcount = app.add_subcommand("opcount", "Operation count of the naive algorithms");
  opcount->add_option("--alg", c.algorithm, "nn or wnn")->capture_default_str();
  opcount->add_option("-M", c.images_per_class, "Training images per class")->capture_default_str();
  opcount->add_option("-S", c.window_size, "Window size")->capture_default_str();

  auto* render = app.add_subcommand("render", "Write images as PGM with an ASCII preview");
  data_options(render);
  render->add_option("--set", c.which, "train or test")->capture_default_str();
  render->add_option("--digit", c.digit, "Digit")->capture_default_str();
  render->add_option("--index", c.index, "1-based position within the digit")->capture_default_str();
  render->add_option("--count", c.count, "Number of consecutive images")->capture_default_str();
  render->add_flag("--pair", c.pair, "Also write the transposed image");
  render->add_option("--out", c.out, "Output directory");

  CLI11_PARSE(app, argc, argv);
  c.subcommand = app.get_subcommands().front()->get_name();
  if (c.dataset == "emnist") c.dataset = "emnist-digits";

  try {
    if (c.dry_run) {
      std::cout << describe(c).dump(2) << "\n";
      return 0;
    }
    if (c.subcommand == "prepare") return run_prepare(c);
    if (c.subcommand == "augment") return run_augment(c);
    if (c.subcommand == "evaluate") return run_evaluate(c);
    if (c.subcommand == "sweep") return run_sweep(c);
    if (c.subcommand == "prune") return run_prune(c);
    if (c.subcommand == "opcount") return run_opcount(c);
    if (c.subcommand == "render") return run_render(c);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
