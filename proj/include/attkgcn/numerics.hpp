#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "attkgcn/error.hpp"
#include "attkgcn/text_io.hpp"

namespace attkgcn {

/// Dense row-major matrix of doubles. Vectors are stored as a single row.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Tensor vector(std::size_t n, double fill = 0.0) { return Tensor(1, n, fill); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool same_shape(const Tensor& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// y = W[:, col0 : col0 + x.size()] * x  (accumulated into y when `accumulate`)
inline void matvec(const Tensor& w, std::span<const double> x, std::span<double> y, std::size_t col0 = 0,
                   bool accumulate = false) {
  assert(y.size() == w.rows() && col0 + x.size() <= w.cols());
  for (std::size_t r = 0; r < w.rows(); ++r) {
    auto wr = w.row(r).subspan(col0, x.size());
    double s = dot(wr, x);
    y[r] = accumulate ? y[r] + s : s;
  }
}

// x += W[:, col0 : col0 + x.size()]^T * y
inline void matvec_t_acc(const Tensor& w, std::span<const double> y, std::span<double> x, std::size_t col0 = 0) {
  assert(y.size() == w.rows() && col0 + x.size() <= w.cols());
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    auto wr = w.row(r).subspan(col0, x.size());
    for (std::size_t c = 0; c < x.size(); ++c) x[c] += wr[c] * yr;
  }
}

// G[:, col0 : col0 + x.size()] += y x^T
inline void outer_acc(Tensor& g, std::span<const double> y, std::span<const double> x, std::size_t col0 = 0) {
  assert(y.size() == g.rows() && col0 + x.size() <= g.cols());
  for (std::size_t r = 0; r < g.rows(); ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    auto gr = g.row(r).subspan(col0, x.size());
    for (std::size_t c = 0; c < x.size(); ++c) gr[c] += yr * x[c];
  }
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// -ln(sigmoid(x)) without overflow.
inline double neg_log_sigmoid(double x) {
  if (x >= 0) return std::log1p(std::exp(-x));
  return -x + std::log1p(std::exp(x));
}

inline std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw DomainError("softmax of an empty vector");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

/// Named trainable tensors with gradients and Adam moments.
///
/// Iteration order is by name, which fixes the update and checkpoint order.
class ParamStore {
 public:
  struct Slot {
    Tensor value;
    Tensor grad;
    Tensor m;
    Tensor v;
  };

  Tensor& add(const std::string& name, Tensor init) {
    if (slots_.contains(name)) throw DomainError("duplicate parameter '" + name + "'");
    Slot s;
    s.grad = Tensor(init.rows(), init.cols());
    s.m = Tensor(init.rows(), init.cols());
    s.v = Tensor(init.rows(), init.cols());
    s.value = std::move(init);
    return slots_.emplace(name, std::move(s)).first->second.value;
  }

  bool contains(const std::string& name) const { return slots_.contains(name); }

  Slot& slot(const std::string& name) {
    auto it = slots_.find(name);
    if (it == slots_.end()) throw DomainError("unknown parameter '" + name + "'");
    return it->second;
  }
  const Slot& slot(const std::string& name) const {
    auto it = slots_.find(name);
    if (it == slots_.end()) throw DomainError("unknown parameter '" + name + "'");
    return it->second;
  }

  Tensor& value(const std::string& name) { return slot(name).value; }
  const Tensor& value(const std::string& name) const { return slot(name).value; }
  Tensor& grad(const std::string& name) { return slot(name).grad; }
  const Tensor& grad(const std::string& name) const { return slot(name).grad; }

  std::map<std::string, Slot>& slots() noexcept { return slots_; }
  const std::map<std::string, Slot>& slots() const noexcept { return slots_; }

  long step() const noexcept { return step_; }

  void zero_grad() {
    for (auto& [_, s] : slots_) s.grad.fill(0.0);
  }

  double grad_norm() const {
    double s = 0.0;
    for (const auto& [_, slot] : slots_) s += dot(slot.grad.flat(), slot.grad.flat());
    return std::sqrt(s);
  }

  // Copies values only (moments and step are left untouched).
  void load_values_from(const ParamStore& other) {
    for (auto& [name, s] : slots_) {
      const Tensor& src = other.value(name);
      if (!src.same_shape(s.value)) throw DomainError("shape mismatch restoring '" + name + "'");
      s.value = src;
    }
  }

  void increment_step() noexcept { ++step_; }

 private:
  std::map<std::string, Slot> slots_;
  long step_ = 0;
};

struct AdamOptions {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update over every tensor, then zeroes gradients.
inline void adam_step(ParamStore& store, const AdamOptions& opt) {
  store.increment_step();
  const double t = static_cast<double>(store.step());
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (auto& [_, s] : store.slots()) {
    auto val = s.value.flat();
    auto g = s.grad.flat();
    auto m = s.m.flat();
    auto v = s.v.flat();
    for (std::size_t i = 0; i < val.size(); ++i) {
      m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
      v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      val[i] -= opt.learning_rate * mhat / (std::sqrt(vhat) + opt.epsilon);
    }
#ifdef ATTKGCN_CHECKED
    if (!s.value.all_finite()) throw DomainError("non-finite parameter after Adam step");
#endif
    s.grad.fill(0.0);
  }
}

inline void adam_step(ParamStore& store, double learning_rate) {
  adam_step(store, AdamOptions{.learning_rate = learning_rate});
}

/// Central-difference gradient of `f` with respect to every parameter entry.
/// Values are restored after each probe, so `store` is unchanged on return.
inline std::map<std::string, Tensor> finite_diff_grad(const std::function<double(const ParamStore&)>& f,
                                                      ParamStore& store, double eps = 1e-5) {
  std::map<std::string, Tensor> out;
  for (auto& [name, slot] : store.slots()) {
    Tensor g(slot.value.rows(), slot.value.cols());
    auto val = slot.value.flat();
    auto gf = g.flat();
    for (std::size_t i = 0; i < val.size(); ++i) {
      const double saved = val[i];
      val[i] = saved + eps;
      const double fp = f(store);
      val[i] = saved - eps;
      const double fm = f(store);
      val[i] = saved;
      gf[i] = (fp - fm) / (2.0 * eps);
    }
    out.emplace(name, std::move(g));
  }
  return out;
}

// Uniform in [-a, a] with a = sqrt(6 / (fan_in + fan_out)), fan_in = cols, fan_out = rows.
inline Tensor xavier_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  Tensor t(rows, cols);
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-a, a);
  for (double& x : t.flat()) x = dist(rng);
  return t;
}

// Checkpoint: per tensor a "name rows cols" line followed by `rows` lines of
// space-separated values in shortest round-trip form.
inline void write_checkpoint(std::ostream& out, const ParamStore& store) {
  for (const auto& [name, slot] : store.slots()) {
    const Tensor& t = slot.value;
    out << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
    for (std::size_t r = 0; r < t.rows(); ++r) {
      auto row = t.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out << ' ';
        out << detail::format_double(row[c]);
      }
      out << '\n';
    }
  }
}

inline std::map<std::string, Tensor> read_checkpoint(std::istream& in, const std::string& source = "checkpoint") {
  std::map<std::string, Tensor> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream header(line);
    std::string name;
    std::size_t rows = 0, cols = 0;
    if (!(header >> name >> rows >> cols)) throw ParseError(source, line_no, "expected 'name rows cols'");
    Tensor t(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      if (!std::getline(in, line)) throw ParseError(source, line_no, "truncated tensor '" + name + "'");
      ++line_no;
      std::size_t c = 0;
      std::size_t pos = 0;
      while (pos < line.size()) {
        std::size_t end = line.find(' ', pos);
        if (end == std::string::npos) end = line.size();
        double v = 0;
        if (c >= cols || !detail::parse_double(std::string_view(line).substr(pos, end - pos), v)) {
          throw ParseError(source, line_no, "bad value in tensor '" + name + "'");
        }
        t(r, c++) = v;
        pos = end + 1;
      }
      if (c != cols) throw ParseError(source, line_no, "expected " + std::to_string(cols) + " values");
    }
    out.emplace(name, std::move(t));
  }
  return out;
}

// Replaces values in `store` with those read from a checkpoint; every tensor must match.
inline void restore_checkpoint(ParamStore& store, const std::map<std::string, Tensor>& values) {
  if (values.size() != store.slots().size()) throw ValidationError("checkpoint tensor set does not match the model");
  for (auto& [name, slot] : store.slots()) {
    auto it = values.find(name);
    if (it == values.end()) throw ValidationError("checkpoint lacks tensor '" + name + "'");
    if (!it->second.same_shape(slot.value)) throw ValidationError("checkpoint shape mismatch for '" + name + "'");
    slot.value = it->second;
  }
}

}  // namespace attkgcn
