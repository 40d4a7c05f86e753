#include "wnn/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <string>
#include <type_traits>

#include "wnn/error.hpp"

namespace wnn {

QueryImage make_query(const Image& image) noexcept {
  QueryImage out;
  std::copy(image.pixels().begin(), image.pixels().end(), out.px.begin());
  return out;
}

void ReferenceSet::append(const Image& image) {
  const std::size_t lane = count_ % kLanes;
  if (lane == 0) blocks_.emplace_back();
  auto& block = blocks_.back();
  const auto& px = image.pixels();
  for (int k = 0; k < kPixelCount; ++k) {
    // fill this lane and every later one, so the tail repeats the last image
    for (std::size_t l = lane; l < static_cast<std::size_t>(kLanes); ++l) {
      block.px[static_cast<std::size_t>(k) * kLanes + l] = px[static_cast<std::size_t>(k)];
    }
  }
  ++count_;
}

void ReferenceSet::append(std::span<const Image> images) {
  blocks_.reserve(blocks_.size() + images.size() / kLanes + 1);
  for (const auto& image : images) append(image);
}

void ReferenceSet::clear() noexcept {
  blocks_.clear();
  count_ = 0;
}

Exponent::Exponent(double p) : p_(p), integral_(std::floor(p) == p) {
  if (!(p >= 1.0) || !std::isfinite(p)) {
    throw ParameterError("exponent p must be finite and >= 1, got " + std::to_string(p));
  }
}

double Exponent::cost(int abs_diff) const noexcept {
  const double d = abs_diff;
  if (integral_ && p_ <= 64.0) {
    double v = 1.0;
    for (int i = 0; i < static_cast<int>(p_); ++i) v *= d;
    return v;
  }
  return std::pow(d, p_);
}

double Exponent::root(double power_sum) const noexcept {
  if (p_ == 1.0) return power_sum;
  if (p_ == 2.0) return std::sqrt(power_sum);
  return std::pow(power_sum, 1.0 / p_);
}

void check_window_size(int window_size) {
  if (window_size < 1 || window_size % 2 == 0) {
    throw ParameterError("window size must be a positive odd integer, got " +
                         std::to_string(window_size));
  }
}

namespace {

constexpr int kMaxHalf = kSide - 1;  // a half-width of 27 already covers the grid

// One value per lane. Every arithmetic operation on these compiles to a
// single SIMD instruction (or a fixed sequence on narrower targets).
template <class T>
using Vec [[gnu::vector_size(sizeof(T) * kLanes)]] = T;
using I16V = Vec<std::int16_t>;
using I32V = Vec<std::int32_t>;
using U32V = Vec<std::uint32_t>;
using F64V = Vec<double>;

inline I32V load_lanes(const std::int16_t* src) noexcept {
  I16V v;
  std::memcpy(&v, src, sizeof(v));
  return __builtin_convertvector(v, I32V);
}

template <class V>
inline V vmin(V a, V b) noexcept {
  return a < b ? a : b;
}

struct SquareCost {
  using Acc = U32V;
  Acc operator()(I32V d) const noexcept { return reinterpret_cast<U32V>(d * d); }
};

struct AbsCost {
  using Acc = U32V;
  Acc operator()(I32V d) const noexcept { return reinterpret_cast<U32V>(d < 0 ? -d : d); }
};

struct CubeCost {
  using Acc = U32V;
  Acc operator()(I32V d) const noexcept {
    const U32V a = reinterpret_cast<U32V>(d < 0 ? -d : d);
    return a * a * a;
  }
};

template <class V>
struct TableCost {
  using Acc = V;
  using T = std::remove_reference_t<decltype(V{}[0])>;
  std::array<T, 256> table{};
  explicit TableCost(const Exponent& p) {
    for (int d = 0; d < 256; ++d) table[static_cast<std::size_t>(d)] = static_cast<T>(p.cost(d));
  }
  Acc operator()(I32V d) const noexcept {
    Acc out;
    for (int l = 0; l < kLanes; ++l) {
      const int a = d[l] < 0 ? -d[l] : d[l];
      out[l] = table[static_cast<std::size_t>(a)];
    }
    return out;
  }
};

}  // namespace

struct WindowMinimaAccumulator::Impl {
  virtual ~Impl() = default;
  [[nodiscard]] virtual std::unique_ptr<Impl> clone() const = 0;
  virtual void reset() noexcept = 0;
  virtual void update(const QueryImage& query, const ImageBlock& block) noexcept = 0;
  virtual void merge(const Impl& other) = 0;
  virtual void read(WindowValues& out) const noexcept = 0;
  [[nodiscard]] virtual double sum(const WindowMask& excluded) const noexcept = 0;
  [[nodiscard]] virtual bool exact() const noexcept = 0;
};

namespace {

// kHalf >= 0 fixes the half-width at compile time; -1 reads it at run time.
template <int kHalf, class Cost>
class Engine final : public WindowMinimaAccumulator::Impl {
  using Acc = typename Cost::Acc;
  using Scalar = std::remove_reference_t<decltype(Acc{}[0])>;
  static constexpr bool kIntegral = std::is_integral_v<Scalar>;

 public:
  Engine(int half, Cost cost) : half_(half), cost_(std::move(cost)) { reset(); }

  std::unique_ptr<Impl> clone() const override { return std::make_unique<Engine>(*this); }

  void reset() noexcept override {
    Acc top;
    for (int l = 0; l < kLanes; ++l) top[l] = std::numeric_limits<Scalar>::max();
    std::fill(std::begin(mins_), std::end(mins_), top);
  }

  void update(const QueryImage& query, const ImageBlock& block) noexcept override {
    const int h = kHalf >= 0 ? kHalf : half_;
    const std::int32_t* q = query.px.data();
    const std::int16_t* a = block.px.data();
    if constexpr (kIntegral) {
      running_box(h, q, a);
    } else {
      for (int k = 0; k < kPixelCount; ++k) cost_rows_[k] = cost_at(q, a, k);
      direct_box(h);
    }
  }

  void merge(const Impl& other) override {
    const auto* o = dynamic_cast<const Engine*>(&other);
    if (o == nullptr || o->half_ != half_) {
      throw ContractViolation("cannot merge accumulators with different configurations");
    }
    for (int k = 0; k < kPixelCount; ++k) mins_[k] = vmin(mins_[k], o->mins_[k]);
  }

  void read(WindowValues& out) const noexcept override {
    for (int k = 0; k < kPixelCount; ++k) {
      Scalar m = mins_[k][0];
      for (int l = 1; l < kLanes; ++l) m = std::min(m, Scalar{mins_[k][l]});
      out[static_cast<std::size_t>(k)] = static_cast<double>(m);
    }
  }

  double sum(const WindowMask& excluded) const noexcept override {
    WindowValues values;
    read(values);
    if constexpr (kIntegral) {
      std::uint64_t total = 0;
      for (std::size_t k = 0; k < values.size(); ++k) {
        if (!excluded.test(k)) total += static_cast<std::uint64_t>(values[k]);
      }
      return static_cast<double>(total);
    } else {
      double total = 0.0;
      for (std::size_t k = 0; k < values.size(); ++k) {
        if (!excluded.test(k)) total += values[k];
      }
      return total;
    }
  }

  bool exact() const noexcept override { return kIntegral; }

 private:
  Acc cost_at(const std::int32_t* q, const std::int16_t* a, int k) const noexcept {
    return cost_(q[k] - load_lanes(a + static_cast<std::size_t>(k) * kLanes));
  }

  // Unsigned running sums: exact modulo 2^32, and every true window sum
  // fits, so intermediate wrap-around cancels out.
  // Per-pixel costs are recomputed for the leaving row rather than stored;
  // that keeps the working set to the block and the minima.
  void running_box(int h, const std::int32_t* q, const std::int16_t* a) noexcept {
    Acc col[kSide] = {};
    const int first = std::min(h, kSide - 1);
    for (int r = 0; r <= first; ++r) {
      for (int c = 0; c < kSide; ++c) col[c] += cost_at(q, a, r * kSide + c);
    }
    for (int r = 0; r < kSide; ++r) {
      if (r > 0) {
        if (r + h < kSide) {
          for (int c = 0; c < kSide; ++c) col[c] += cost_at(q, a, (r + h) * kSide + c);
        }
        if (r - h - 1 >= 0) {
          for (int c = 0; c < kSide; ++c) col[c] -= cost_at(q, a, (r - h - 1) * kSide + c);
        }
      }
      Acc run = {};
      for (int c = 0; c <= first; ++c) run += col[c];
      Acc* m = mins_ + r * kSide;
      m[0] = vmin(m[0], run);
      for (int c = 1; c < kSide; ++c) {
        if (c + h < kSide) run += col[c + h];
        if (c - h - 1 >= 0) run -= col[c - h - 1];
        m[c] = vmin(m[c], run);
      }
    }
  }

  // Floating point: no cancellation, each sum is formed from scratch.
  void direct_box(int h) noexcept {
    Acc col[kSide];
    for (int r = 0; r < kSide; ++r) {
      const int r0 = std::max(0, r - h);
      const int r1 = std::min(kSide - 1, r + h);
      for (int c = 0; c < kSide; ++c) {
        Acc v = {};
        for (int rr = r0; rr <= r1; ++rr) v += cost_rows_[rr * kSide + c];
        col[c] = v;
      }
      for (int c = 0; c < kSide; ++c) {
        const int c0 = std::max(0, c - h);
        const int c1 = std::min(kSide - 1, c + h);
        Acc run = {};
        for (int cc = c0; cc <= c1; ++cc) run += col[cc];
        mins_[r * kSide + c] = vmin(mins_[r * kSide + c], run);
      }
    }
  }

  int half_;
  Cost cost_;
  Acc mins_[kPixelCount];
  Acc cost_rows_[kPixelCount];
};

template <class Cost>
std::unique_ptr<WindowMinimaAccumulator::Impl> make_engine(int half, Cost cost) {
  switch (half) {
    case 0: return std::make_unique<Engine<0, Cost>>(half, cost);
    case 1: return std::make_unique<Engine<1, Cost>>(half, cost);
    case 2: return std::make_unique<Engine<2, Cost>>(half, cost);
    case 3: return std::make_unique<Engine<3, Cost>>(half, cost);
    case 4: return std::make_unique<Engine<4, Cost>>(half, cost);
    case 5: return std::make_unique<Engine<5, Cost>>(half, cost);
    case 6: return std::make_unique<Engine<6, Cost>>(half, cost);
    case 7: return std::make_unique<Engine<7, Cost>>(half, cost);
    case 8: return std::make_unique<Engine<8, Cost>>(half, cost);
    case 9: return std::make_unique<Engine<9, Cost>>(half, cost);
    case 10: return std::make_unique<Engine<10, Cost>>(half, cost);
    case 11: return std::make_unique<Engine<11, Cost>>(half, cost);
    default: return std::make_unique<Engine<-1, Cost>>(half, cost);
  }
}

bool fits_u32(int window_size, const Exponent& p) {
  const int side = std::min(window_size, kSide);
  return p.is_integral() && static_cast<double>(side) * side * p.cost(255) <= 4294967295.0;
}

std::unique_ptr<WindowMinimaAccumulator::Impl> make_impl(int window_size, const Exponent& p) {
  const int half = std::min(window_size / 2, kMaxHalf);
  const bool u32 = fits_u32(window_size, p);
  if (p.value() == 2.0) return make_engine(half, SquareCost{});
  if (p.value() == 1.0) return make_engine(half, AbsCost{});
  if (p.value() == 3.0 && u32) return make_engine(half, CubeCost{});
  if (u32) return make_engine(half, TableCost<U32V>(p));
  return make_engine(half, TableCost<F64V>(p));
}

}  // namespace

WindowMinimaAccumulator::WindowMinimaAccumulator(int window_size, Exponent p)
    : window_size_(window_size), p_(p) {
  check_window_size(window_size);
  impl_ = make_impl(window_size, p_);
}

WindowMinimaAccumulator::~WindowMinimaAccumulator() = default;
WindowMinimaAccumulator::WindowMinimaAccumulator(WindowMinimaAccumulator&&) noexcept = default;
WindowMinimaAccumulator& WindowMinimaAccumulator::operator=(WindowMinimaAccumulator&&) noexcept =
    default;

WindowMinimaAccumulator::WindowMinimaAccumulator(const WindowMinimaAccumulator& other)
    : window_size_(other.window_size_),
      p_(other.p_),
      seen_(other.seen_),
      impl_(other.impl_->clone()) {}

WindowMinimaAccumulator& WindowMinimaAccumulator::operator=(const WindowMinimaAccumulator& other) {
  if (this != &other) {
    window_size_ = other.window_size_;
    p_ = other.p_;
    seen_ = other.seen_;
    impl_ = other.impl_->clone();
  }
  return *this;
}

void WindowMinimaAccumulator::reset() noexcept {
  impl_->reset();
  seen_ = false;
}

void WindowMinimaAccumulator::update(const QueryImage& query, const ImageBlock& block) noexcept {
  impl_->update(query, block);
  seen_ = true;
}

void WindowMinimaAccumulator::update(const QueryImage& query,
                                     const ReferenceSet& references) noexcept {
  for (const auto& block : references.blocks()) impl_->update(query, block);
  seen_ = seen_ || !references.empty();
}

void WindowMinimaAccumulator::merge(const WindowMinimaAccumulator& other) {
  if (window_size_ != other.window_size_ || !(p_ == other.p_)) {
    throw ContractViolation("cannot merge accumulators with different configurations");
  }
  impl_->merge(*other.impl_);
  seen_ = seen_ || other.seen_;
}

bool WindowMinimaAccumulator::exact() const noexcept { return impl_->exact(); }

WindowValues WindowMinimaAccumulator::minima() const {
  if (empty()) throw ContractViolation("window minima requested before any reference image");
  WindowValues out;
  impl_->read(out);
  return out;
}

double WindowMinimaAccumulator::power_sum(const WindowMask& excluded) const {
  if (empty()) throw ContractViolation("window minima requested before any reference image");
  if (excluded.all()) throw ContractViolation("all 784 windows are excluded");
  return impl_->sum(excluded);
}

void full_power_distances(const QueryImage& query, const ImageBlock& block, const Exponent& p,
                          std::span<double, kLanes> out) noexcept {
  const std::int32_t* q = query.px.data();
  const std::int16_t* a = block.px.data();
  if (p.value() == 2.0 || p.value() == 1.0) {
    // <= 784 * 65025 fits in 32 bits
    U32V acc = {};
    if (p.value() == 2.0) {
      for (int k = 0; k < kPixelCount; ++k) {
        acc += SquareCost{}(q[k] - load_lanes(a + static_cast<std::size_t>(k) * kLanes));
      }
    } else {
      for (int k = 0; k < kPixelCount; ++k) {
        acc += AbsCost{}(q[k] - load_lanes(a + static_cast<std::size_t>(k) * kLanes));
      }
    }
    for (int l = 0; l < kLanes; ++l) out[static_cast<std::size_t>(l)] = acc[l];
    return;
  }
  const TableCost<F64V> cost(p);
  F64V acc = {};
  for (int k = 0; k < kPixelCount; ++k) {
    acc += cost(q[k] - load_lanes(a + static_cast<std::size_t>(k) * kLanes));
  }
  for (int l = 0; l < kLanes; ++l) out[static_cast<std::size_t>(l)] = acc[l];
}

double min_full_power_distance(const QueryImage& query, const ReferenceSet& references,
                               const Exponent& p) {
  if (references.empty()) throw ContractViolation("nearest-neighbour search over an empty class");
  double best = std::numeric_limits<double>::infinity();
  alignas(64) std::array<double, kLanes> lane{};
  for (const auto& block : references.blocks()) {
    full_power_distances(query, block, p, lane);
    for (double d : lane) best = std::min(best, d);
  }
  return best;
}

}  // namespace wnn
