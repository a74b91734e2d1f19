#pragma once

// Minimal reverse-mode tape. Nodes are linear combinations of earlier nodes
// with constant weights; nonlinear operations record their local partials.

#include <cmath>
#include <vector>

namespace ddeopt::ad {

class Tape {
 public:
  int variable() {
    offsets_.push_back(static_cast<int>(parents_.size()));
    return static_cast<int>(offsets_.size()) - 2;
  }

  int record(const int* ids, const double* weights, int n) {
    parents_.insert(parents_.end(), ids, ids + n);
    weights_.insert(weights_.end(), weights, weights + n);
    offsets_.push_back(static_cast<int>(parents_.size()));
    return static_cast<int>(offsets_.size()) - 2;
  }

  int size() const { return static_cast<int>(offsets_.size()) - 1; }

  void clear() {
    offsets_.assign(1, 0);
    parents_.clear();
    weights_.clear();
  }

  // adjoints of every node with respect to node `output`
  std::vector<double> adjoint(int output) const {
    std::vector<double> bar(size(), 0.0);
    if (output < 0) return bar;
    bar[output] = 1.0;
    for (int i = output; i >= 0; --i) {
      const double b = bar[i];
      if (b == 0.0) continue;
      for (int e = offsets_[i]; e < offsets_[i + 1]; ++e) bar[parents_[e]] += b * weights_[e];
    }
    return bar;
  }

 private:
  std::vector<int> offsets_{0};
  std::vector<int> parents_;
  std::vector<double> weights_;
};

inline Tape*& active_tape() {
  thread_local Tape* tape = nullptr;
  return tape;
}

class TapeScope {
 public:
  explicit TapeScope(Tape& t) : prev_(active_tape()) { active_tape() = &t; }
  ~TapeScope() { active_tape() = prev_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* prev_;
};

struct Var {
  double v = 0.0;
  int id = -1;  // -1 marks a constant

  Var() = default;
  Var(double value) : v(value) {}  // NOLINT: constants convert implicitly
  Var(double value, int node) : v(value), id(node) {}

  static Var independent(double value) { return Var(value, active_tape()->variable()); }
};

inline Var unary(double value, const Var& a, double da) {
  if (a.id < 0) return Var(value);
  return Var(value, active_tape()->record(&a.id, &da, 1));
}

inline Var binary(double value, const Var& a, double da, const Var& b, double db) {
  if (a.id < 0) return unary(value, b, db);
  if (b.id < 0) return unary(value, a, da);
  const int ids[2] = {a.id, b.id};
  const double w[2] = {da, db};
  return Var(value, active_tape()->record(ids, w, 2));
}

inline Var operator+(const Var& a, const Var& b) { return binary(a.v + b.v, a, 1.0, b, 1.0); }
inline Var operator-(const Var& a, const Var& b) { return binary(a.v - b.v, a, 1.0, b, -1.0); }
inline Var operator*(const Var& a, const Var& b) { return binary(a.v * b.v, a, b.v, b, a.v); }
inline Var operator/(const Var& a, const Var& b) {
  const double q = a.v / b.v;
  return binary(q, a, 1.0 / b.v, b, -q / b.v);
}
inline Var operator-(const Var& a) { return unary(-a.v, a, -1.0); }
inline Var operator*(double s, const Var& a) { return unary(s * a.v, a, s); }
inline Var operator*(const Var& a, double s) { return unary(s * a.v, a, s); }
inline Var operator+(const Var& a, double s) { return unary(a.v + s, a, 1.0); }
inline Var operator+(double s, const Var& a) { return unary(a.v + s, a, 1.0); }
inline Var operator-(const Var& a, double s) { return unary(a.v - s, a, 1.0); }
inline Var operator-(double s, const Var& a) { return unary(s - a.v, a, -1.0); }
inline Var operator/(const Var& a, double s) { return unary(a.v / s, a, 1.0 / s); }

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.v; }

// Accumulates sum_i w_i * x_i as a single tape node.
template <class S>
class LinComb;

template <>
class LinComb<double> {
 public:
  void reset(double c = 0.0) { sum_ = c; }
  void add(double w, double x) { sum_ += w * x; }
  double result() const { return sum_; }

 private:
  double sum_ = 0.0;
};

template <>
class LinComb<Var> {
 public:
  void reset(double c = 0.0) {
    sum_ = c;
    ids_.clear();
    ws_.clear();
  }
  void add(double w, const Var& x) {
    sum_ += w * x.v;
    if (x.id >= 0 && w != 0.0) {
      ids_.push_back(x.id);
      ws_.push_back(w);
    }
  }
  Var result() const {
    if (ids_.empty()) return Var(sum_);
    return Var(sum_, active_tape()->record(ids_.data(), ws_.data(), static_cast<int>(ids_.size())));
  }

 private:
  double sum_ = 0.0;
  std::vector<int> ids_;
  std::vector<double> ws_;
};

}  // namespace ddeopt::ad
