// Python bindings. Images are uint8 numpy arrays of shape (28, 28); image
// collections are (N, 28, 28) with a matching label vector.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <optional>
#include <vector>

#include "wnn/augment.hpp"
#include "wnn/classifier.hpp"
#include "wnn/dwnn.hpp"
#include "wnn/error.hpp"
#include "wnn/evaluation.hpp"
#include "wnn/idx.hpp"
#include "wnn/prune.hpp"

namespace py = pybind11;
using namespace wnn;

namespace {

using Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using Labels = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

Image to_image(const Array& a) {
  if (a.ndim() != 2 || a.shape(0) != kSide || a.shape(1) != kSide) {
    throw ParameterError("expected a 28x28 image");
  }
  Image image;
  std::memcpy(image.pixels().data(), a.data(), kPixelCount);
  return image;
}

std::vector<Image> to_images(const Array& a) {
  if (a.ndim() != 3 || a.shape(1) != kSide || a.shape(2) != kSide) {
    throw ParameterError("expected an (N, 28, 28) image array");
  }
  std::vector<Image> out(static_cast<std::size_t>(a.shape(0)));
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::memcpy(out[i].pixels().data(), a.data() + i * kPixelCount, kPixelCount);
  }
  return out;
}

Array from_image(const Image& image) {
  Array a({kSide, kSide});
  std::memcpy(a.mutable_data(), image.pixels().data(), kPixelCount);
  return a;
}

Array from_images(const std::vector<Image>& images) {
  Array a({static_cast<py::ssize_t>(images.size()), py::ssize_t{kSide}, py::ssize_t{kSide}});
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::memcpy(a.mutable_data() + i * kPixelCount, images[i].pixels().data(), kPixelCount);
  }
  return a;
}

LabeledSet to_set(const Array& images, const Labels& labels) {
  const auto list = to_images(images);
  if (labels.ndim() != 1 || static_cast<std::size_t>(labels.shape(0)) != list.size()) {
    throw ParameterError("labels must be a vector with one entry per image");
  }
  LabeledSet set;
  for (std::size_t i = 0; i < list.size(); ++i) set.add(static_cast<int>(labels.data()[i]), list[i]);
  return set;
}

WindowMask to_mask(const std::optional<std::vector<int>>& excluded) {
  WindowMask mask;
  if (!excluded) return mask;
  for (int w : *excluded) {
    if (w < 0 || w >= kPixelCount) throw ParameterError("window index " + std::to_string(w) + " outside [0, 783]");
    mask.set(static_cast<std::size_t>(w));
  }
  return mask;
}

ClassifierConfig make_config(int window_size, double p, bool binarized, int threshold,
                             const std::optional<std::vector<int>>& excluded) {
  ClassifierConfig c;
  c.window_size = window_size;
  c.p = Exponent(p);
  c.binarized = binarized;
  c.threshold = threshold;
  c.excluded = to_mask(excluded);
  c.validate();
  return c;
}

py::object parse_json(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

}  // namespace

PYBIND11_MODULE(_wnn, m) {
  m.doc() = "Windowed nearest neighbour classifier";

  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  m.def("load_idx", [](const std::string& images, const std::string& labels) {
    const auto items = load_idx(images, labels);
    std::vector<Image> list;
    std::vector<std::int64_t> labels_out;
    for (const auto& item : items) {
      list.push_back(item.image);
      labels_out.push_back(item.label);
    }
    return py::make_tuple(from_images(list), py::array(py::dtype::of<std::int64_t>(),
                                                           {static_cast<py::ssize_t>(labels_out.size())},
                                                           {py::ssize_t{sizeof(std::int64_t)}}, labels_out.data()));
  }, py::arg("images_path"), py::arg("labels_path"));

  m.def("shift", [](const Array& a, int dx, int dy) { return from_image(shift(to_image(a), dx, dy)); },
        py::arg("image"), py::arg("dx"), py::arg("dy"));
  m.def("rotate", [](const Array& a, double deg) { return from_image(rotate(to_image(a), deg)); },
        py::arg("image"), py::arg("degrees"));
  m.def("rescale", [](const Array& a, int w, int h) { return from_image(rescale_center(to_image(a), w, h)); },
        py::arg("image"), py::arg("width"), py::arg("height"));
  m.def("binarize", [](const Array& a, int t) { return from_image(binarize(to_image(a), t)); },
        py::arg("image"), py::arg("threshold") = kDefaultThreshold);
  m.def("augment", [](const Array& a, const std::string& level, const std::string& dataset, bool rotate_first) {
    AugmentLevel spec{parse_dataset_kind(dataset), parse_level(level),
                      rotate_first ? TransformOrder::transform_first : TransformOrder::shift_first};
    return from_images(expand(to_image(a), spec));
  }, py::arg("image"), py::arg("level"), py::arg("dataset") = "mnist", py::arg("rotate_first") = false);
  m.def("extend", [](const Array& a) { return from_images(build_ext(to_image(a)).variants); },
        py::arg("image"), "The 125 rotated and shifted variants used by DWNN.");

  m.def("local_distance", [](const Array& q, const Array& cls, int row, int col, int window_size, double p) {
    const auto images = to_images(cls);
    return local_distance(to_image(q), images, window_index(row, col), window_size, Exponent(p));
  }, py::arg("query"), py::arg("images"), py::arg("row"), py::arg("col"), py::arg("window_size") = kDefaultWindowSize,
     py::arg("p") = 2.0);
  m.def("global_distance", [](const Array& q, const Array& cls, int window_size, double p, bool binarized,
                              int threshold, const std::optional<std::vector<int>>& excluded) {
    const auto images = to_images(cls);
    return global_distance(to_image(q), images, make_config(window_size, p, binarized, threshold, excluded));
  }, py::arg("query"), py::arg("images"), py::arg("window_size") = kDefaultWindowSize, py::arg("p") = 2.0,
     py::arg("binarized") = false, py::arg("threshold") = kDefaultThreshold, py::arg("excluded") = py::none());

  m.def("classify", [](const Array& q, const Array& images, const Labels& labels, int window_size, double p,
                       bool binarized, int threshold, const std::optional<std::vector<int>>& excluded) {
    const auto config = make_config(window_size, p, binarized, threshold, excluded);
    const TrainingSet train(to_set(images, labels), binarized, threshold);
    const auto r = classify(to_image(q), train, config);
    const std::vector<double> d(r.profile.distance.begin(), r.profile.distance.end());
    return py::make_tuple(r.digit, d);
  }, py::arg("query"), py::arg("images"), py::arg("labels"), py::arg("window_size") = kDefaultWindowSize,
     py::arg("p") = 2.0, py::arg("binarized") = false, py::arg("threshold") = kDefaultThreshold,
     py::arg("excluded") = py::none(), "Returns (digit, per-class distances).");
  m.def("classify_nn", [](const Array& q, const Array& images, const Labels& labels, double p) {
    const TrainingSet train(to_set(images, labels));
    return classify_nn(to_image(q), train, Exponent(p));
  }, py::arg("query"), py::arg("images"), py::arg("labels"), py::arg("p") = 2.0);
  m.def("classify_dwnn", [](const Array& q, const Array& images, const Labels& labels, int window_size) {
    const ExtendedTrainingSet set0(to_set(images, labels));
    return dwnn_classify(to_image(q), set0, window_size);
  }, py::arg("query"), py::arg("images"), py::arg("labels"), py::arg("window_size") = kDefaultWindowSize);

  m.def("evaluate", [](const std::string& kind, const Array& train_images, const Labels& train_labels,
                       const Array& test_images, const Labels& test_labels, int window_size, double p,
                       bool binarized, int threshold, const std::optional<std::vector<int>>& excluded,
                       const std::string& augment, int threads) {
    const auto config = make_config(window_size, p, binarized, threshold, excluded);
    const auto train = to_set(train_images, train_labels);
    const auto test = to_set(test_images, test_labels);
    EvaluateOptions options;
    options.threads = threads;
    options.augment.level = parse_level(augment);
    EvaluationReport report;
    {
      py::gil_scoped_release release;
      report = evaluate(parse_classifier_kind(kind), train, test, config, options);
    }
    return parse_json(report_json(report));
  }, py::arg("kind"), py::arg("train_images"), py::arg("train_labels"), py::arg("test_images"),
     py::arg("test_labels"), py::arg("window_size") = kDefaultWindowSize, py::arg("p") = 2.0,
     py::arg("binarized") = false, py::arg("threshold") = kDefaultThreshold, py::arg("excluded") = py::none(),
     py::arg("augment") = "set0", py::arg("threads") = 0, "Per-digit error report as a dict.");

  m.def("prune", [](const Array& train_images, const Labels& train_labels, const Array& eval_images,
                    const Labels& eval_labels, int exclusions, int window_size, double p, int threads) {
    const auto config = make_config(window_size, p, false, kDefaultThreshold, std::nullopt);
    const TrainingSet train(to_set(train_images, train_labels));
    const auto eval = to_set(eval_images, eval_labels);
    PruneOptions options;
    options.threads = threads;
    PruneTrace trace;
    {
      py::gil_scoped_release release;
      trace = prune(train, eval, config, exclusions, options);
    }
    py::dict out;
    out["excluded"] = trace.excluded;
    out["errors"] = trace.errors;
    out["baseline_errors"] = trace.baseline_errors;
    return out;
  }, py::arg("train_images"), py::arg("train_labels"), py::arg("eval_images"), py::arg("eval_labels"),
     py::arg("exclusions"), py::arg("window_size") = kDefaultWindowSize, py::arg("p") = 2.0, py::arg("threads") = 0,
     "Greedy window exclusion; window indices are 0-based (row * 28 + col).");

  m.def("op_count", [](const std::string& alg, std::uint64_t m_per_class, int window_size) {
    return op_count(parse_classifier_kind(alg), m_per_class, window_size);
  }, py::arg("algorithm"), py::arg("images_per_class"), py::arg("window_size") = kDefaultWindowSize);
}
