#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "npnf/core.hpp"

namespace npnf {

// Reverse-mode tape over scalar nodes. Nodes are appended in topological
// order with eagerly computed values; backward() runs one reverse sweep.
// Sum/Dot operate on contiguous index ranges so dense layers do not pay
// per-scalar node overhead.
enum class Op : uint8_t {
  kLeaf,
  kConst,
  kCopy,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kAddC,   // x + aux
  kMulC,   // x * aux
  kRsubC,  // aux - x
  kRdivC,  // aux / x
  kExp,
  kLog,
  kSqrt,
  kSin,
  kCos,
  kSoftplus,
  kPow,   // x ^ aux
  kMinS,  // min-select, ties to first operand
  kMaxS,
  kAbs,
  kSum,  // range [a, a+b)
  kDot,  // ranges [a, a+len) . [b, b+len), len in aux
};

class Tape;

struct Var {
  Tape* tape = nullptr;
  uint32_t idx = 0;
  double val() const;
};

class Tape {
 public:
  struct Node {
    uint32_t a = 0, b = 0;
    double aux = 0.0;
    Op op = Op::kLeaf;
  };

  void clear() {
    nodes_.clear();
    val_.clear();
  }
  size_t size() const { return nodes_.size(); }
  void reserve(size_t n) {
    nodes_.reserve(n);
    val_.reserve(n);
  }

  double value(uint32_t i) const { return val_[i]; }
  double grad(uint32_t i) const { return adj_[i]; }

  Var leaf(double v) { return push(Op::kLeaf, 0, 0, 0.0, v); }
  Var constant(double v) { return push(Op::kConst, 0, 0, 0.0, v); }

  // contiguous block of leaves; returns index of the first
  uint32_t leaf_block(std::span<const double> vals) {
    uint32_t start = uint32_t(nodes_.size());
    for (double v : vals) leaf(v);
    return start;
  }

  Var copy(Var x) { return push(Op::kCopy, x.idx, 0, 0.0, val_[x.idx]); }

  Var add(Var x, Var y) {
    return push(Op::kAdd, x.idx, y.idx, 0.0, val_[x.idx] + val_[y.idx]);
  }
  Var sub(Var x, Var y) {
    return push(Op::kSub, x.idx, y.idx, 0.0, val_[x.idx] - val_[y.idx]);
  }
  Var mul(Var x, Var y) {
    return push(Op::kMul, x.idx, y.idx, 0.0, val_[x.idx] * val_[y.idx]);
  }
  Var div(Var x, Var y) {
    return push(Op::kDiv, x.idx, y.idx, 0.0, val_[x.idx] / val_[y.idx]);
  }
  Var neg(Var x) { return push(Op::kNeg, x.idx, 0, 0.0, -val_[x.idx]); }
  Var add_c(Var x, double c) {
    return push(Op::kAddC, x.idx, 0, c, val_[x.idx] + c);
  }
  Var mul_c(Var x, double c) {
    return push(Op::kMulC, x.idx, 0, c, val_[x.idx] * c);
  }
  Var rsub_c(double c, Var x) {
    return push(Op::kRsubC, x.idx, 0, c, c - val_[x.idx]);
  }
  Var rdiv_c(double c, Var x) {
    return push(Op::kRdivC, x.idx, 0, c, c / val_[x.idx]);
  }
  Var exp(Var x) { return push(Op::kExp, x.idx, 0, 0.0, std::exp(val_[x.idx])); }
  Var log(Var x) {
    if (val_[x.idx] <= 0.0) throw DomainError("log of non-positive value");
    return push(Op::kLog, x.idx, 0, 0.0, std::log(val_[x.idx]));
  }
  Var sqrt(Var x) {
    if (val_[x.idx] <= 0.0) throw DomainError("sqrt of non-positive value");
    return push(Op::kSqrt, x.idx, 0, 0.0, std::sqrt(val_[x.idx]));
  }
  Var sin(Var x) { return push(Op::kSin, x.idx, 0, 0.0, std::sin(val_[x.idx])); }
  Var cos(Var x) { return push(Op::kCos, x.idx, 0, 0.0, std::cos(val_[x.idx])); }
  Var softplus(Var x) {
    return push(Op::kSoftplus, x.idx, 0, 0.0, softplus_val(val_[x.idx]));
  }
  Var pow(Var x, double p) {
    return push(Op::kPow, x.idx, 0, p, std::pow(val_[x.idx], p));
  }
  Var min_select(Var x, Var y) {
    return push(Op::kMinS, x.idx, y.idx, 0.0,
                val_[x.idx] <= val_[y.idx] ? val_[x.idx] : val_[y.idx]);
  }
  Var max_select(Var x, Var y) {
    return push(Op::kMaxS, x.idx, y.idx, 0.0,
                val_[x.idx] >= val_[y.idx] ? val_[x.idx] : val_[y.idx]);
  }
  Var abs(Var x) {
    return push(Op::kAbs, x.idx, 0, 0.0, std::fabs(val_[x.idx]));
  }
  Var sum(uint32_t start, uint32_t len) {
    double s = 0.0;
    for (uint32_t k = 0; k < len; ++k) s += val_[start + k];
    return push(Op::kSum, start, len, 0.0, s);
  }
  Var dot(uint32_t a, uint32_t b, uint32_t len) {
    double s = 0.0;
    for (uint32_t k = 0; k < len; ++k) s += val_[a + k] * val_[b + k];
    return push(Op::kDot, a, b, double(len), s);
  }

  // Seeds root with adjoint 1 and sweeps once in reverse. Each call
  // resets adjoints; leaves unreachable from root get gradient 0.
  void backward(Var root);

  static double softplus_val(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  }
  static double sigmoid_val(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                    : std::exp(x) / (1.0 + std::exp(x));
  }

 private:
  Var push(Op op, uint32_t a, uint32_t b, double aux, double v) {
    nodes_.push_back(Node{a, b, aux, op});
    val_.push_back(v);
    return Var{this, uint32_t(nodes_.size() - 1)};
  }

  std::vector<Node> nodes_;
  std::vector<double> val_;
  std::vector<double> adj_;
};

inline double Var::val() const { return tape->value(idx); }

// ---- operator sugar (mixed Var/double) ----

inline Var operator+(Var x, Var y) { return x.tape->add(x, y); }
inline Var operator-(Var x, Var y) { return x.tape->sub(x, y); }
inline Var operator*(Var x, Var y) { return x.tape->mul(x, y); }
inline Var operator/(Var x, Var y) { return x.tape->div(x, y); }
inline Var operator-(Var x) { return x.tape->neg(x); }
inline Var operator+(Var x, double c) { return x.tape->add_c(x, c); }
inline Var operator+(double c, Var x) { return x.tape->add_c(x, c); }
inline Var operator-(Var x, double c) { return x.tape->add_c(x, -c); }
inline Var operator-(double c, Var x) { return x.tape->rsub_c(c, x); }
inline Var operator*(Var x, double c) { return x.tape->mul_c(x, c); }
inline Var operator*(double c, Var x) { return x.tape->mul_c(x, c); }
inline Var operator/(Var x, double c) { return x.tape->mul_c(x, 1.0 / c); }
inline Var operator/(double c, Var x) { return x.tape->rdiv_c(c, x); }

inline Var exp(Var x) { return x.tape->exp(x); }
inline Var log(Var x) { return x.tape->log(x); }
inline Var sqrt(Var x) { return x.tape->sqrt(x); }
inline Var sin(Var x) { return x.tape->sin(x); }
inline Var cos(Var x) { return x.tape->cos(x); }
inline Var softplus(Var x) { return x.tape->softplus(x); }
inline Var pow(Var x, double p) { return x.tape->pow(x, p); }
inline Var abs(Var x) { return x.tape->abs(x); }
inline Var min_select(Var x, Var y) { return x.tape->min_select(x, y); }
inline Var max_select(Var x, Var y) { return x.tape->max_select(x, y); }
inline Var sigmoid(Var x) { return 1.0 / (1.0 + exp(-x)); }

inline double value_of(const Var& v) { return v.val(); }

}  // namespace npnf
