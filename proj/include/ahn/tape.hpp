#pragma once

#include "ahn/tensor.hpp"

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace ahn {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = std::numeric_limits<std::size_t>::max();
  bool valid() const noexcept {
    return id != std::numeric_limits<std::size_t>::max();
  }
};

namespace debug {
/// Name of a primitive whose backward rule is deliberately scaled by 1.5.
/// Used only by the gradient checker's fault-injection fixture.
inline std::string &corrupted_backward() {
  static std::string name;
  return name;
}
template <typename Real> Real fault_scale(const char *op) {
  const auto &name = corrupted_backward();
  return (!name.empty() && name == op) ? Real(1.5) : Real(1);
}
} // namespace debug

/// Additive constant applied to masked logits. Large enough that exp()
/// underflows to exactly zero, finite so the tape never sees an infinity.
inline constexpr double kMaskedLogit = -1e9;

/// Records operations in execution order; backward() replays them in reverse.
/// A tape and everything recorded on it belongs to a single thread.
template <typename Real> class Tape {
public:
  using Backward = std::function<void(Tape &, const Tensor<Real> &)>;

  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  Var constant(Tensor<Real> value) {
    return push(Node{std::move(value), nullptr, {}, nullptr, false, false, {}});
  }

  /// A differentiable input whose gradient lives on the tape.
  Var leaf(Tensor<Real> value) {
    return push(Node{std::move(value), nullptr, {}, nullptr, true, false, {}});
  }

  /// A non-differentiable value read by reference; it must outlive the tape.
  Var view(const Tensor<Real> &value) {
    return push(Node{{}, &value, {}, nullptr, false, false, {}});
  }

  /// A parameter read by reference; gradients accumulate into `grad`, which
  /// must outlive the tape and have the parameter's shape.
  Var parameter(const Tensor<Real> &value, Tensor<Real> &grad) {
    require_same_shape(value, grad, "parameter gradient buffer");
    return push(Node{{}, &value, {}, &grad, true, true, {}});
  }

  Var record(Tensor<Real> value, bool requires_grad, Backward backward) {
    return push(Node{std::move(value), nullptr, {}, nullptr, requires_grad,
                     false, requires_grad ? std::move(backward) : Backward{}});
  }

  const Tensor<Real> &value(Var v) const {
    const Node &n = nodes_.at(v.id);
    return n.external_value ? *n.external_value : n.value;
  }

  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  /// Gradient of a node after backward(); a zero tensor if nothing flowed in.
  Tensor<Real> grad(Var v) const {
    const Node &n = nodes_.at(v.id);
    if (n.external_grad) return *n.external_grad;
    if (n.has_grad) return n.grad;
    return Tensor<Real>(value(v).shape());
  }

  /// Mutable gradient buffer of `v`, allocated on first use.
  Tensor<Real> &grad_buffer(Var v) {
    Node &n = nodes_.at(v.id);
    if (n.external_grad) return *n.external_grad;
    if (!n.has_grad) {
      n.grad = Tensor<Real>(value(v).shape());
      n.has_grad = true;
    }
    return n.grad;
  }

  void accumulate(Var v, const Tensor<Real> &g) {
    if (!requires_grad(v)) return;
    grad_buffer(v) += g;
  }

  std::size_t size() const noexcept { return nodes_.size(); }

  void backward(Var loss) {
    if (value(loss).size() != 1)
      throw RankError("backward requires a scalar loss, got shape " +
                      shape_str(value(loss).shape()));
    if (!requires_grad(loss)) return;
    Tensor<Real> seed(value(loss).shape(), Real(1));
    accumulate(loss, seed);
    for (std::size_t id = loss.id + 1; id-- > 0;) {
      Node &n = nodes_[id];
      if (!n.backward || !n.has_grad) continue;
      n.backward(*this, n.grad);
    }
  }

private:
  struct Node {
    Tensor<Real> value;
    const Tensor<Real> *external_value;
    Tensor<Real> grad;
    Tensor<Real> *external_grad;
    bool requires_grad;
    bool has_grad;
    Backward backward;
  };

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  std::deque<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Primitive operations. Every op validates shapes eagerly and records a
// backward rule only when at least one input requires a gradient.

template <typename Real> Var matmul(Tape<Real> &t, Var a, Var b) {
  const auto &A = t.value(a);
  const auto &B = t.value(b);
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows())
    throw DimensionError("matmul: inner dimensions disagree for " +
                         shape_str(A.shape()) + " and " + shape_str(B.shape()));
  Tensor<Real> C = Tensor<Real>::matrix(A.rows(), B.cols());
  gemm_accumulate(A, B, C);
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.record(std::move(C), rg, [a, b](Tape<Real> &tp, const Tensor<Real> &g) {
    const Real k = debug::fault_scale<Real>("matmul");
    if (tp.requires_grad(a)) {
      Tensor<Real> da = Tensor<Real>::matrix(tp.value(a).rows(), tp.value(a).cols());
      gemm_accumulate(g, transposed(tp.value(b)), da);
      if (k != Real(1)) for (auto &x : da.values()) x *= k;
      tp.accumulate(a, da);
    }
    if (tp.requires_grad(b)) {
      Tensor<Real> db = Tensor<Real>::matrix(tp.value(b).rows(), tp.value(b).cols());
      gemm_accumulate(transposed(tp.value(a)), g, db);
      tp.accumulate(b, db);
    }
  });
}

template <typename Real> Var transpose(Tape<Real> &t, Var a) {
  const bool rg = t.requires_grad(a);
  return t.record(transposed(t.value(a)), rg,
                  [a](Tape<Real> &tp, const Tensor<Real> &g) {
                    tp.accumulate(a, transposed(g));
                  });
}

template <typename Real> Var add(Tape<Real> &t, Var a, Var b) {
  require_same_shape(t.value(a), t.value(b), "add");
  Tensor<Real> out = t.value(a);
  out += t.value(b);
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.record(std::move(out), rg, [a, b](Tape<Real> &tp, const Tensor<Real> &g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

template <typename Real> Var sub(Tape<Real> &t, Var a, Var b) {
  require_same_shape(t.value(a), t.value(b), "sub");
  Tensor<Real> out = t.value(a);
  const auto &B = t.value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i];
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.record(std::move(out), rg, [a, b](Tape<Real> &tp, const Tensor<Real> &g) {
    tp.accumulate(a, g);
    if (tp.requires_grad(b)) {
      Tensor<Real> neg = g;
      for (auto &x : neg.values()) x = -x;
      tp.accumulate(b, neg);
    }
  });
}

template <typename Real> Var mul(Tape<Real> &t, Var a, Var b) {
  const auto &A = t.value(a);
  const auto &B = t.value(b);
  require_same_shape(A, B, "mul");
  Tensor<Real> out(A.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * B[i];
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.record(std::move(out), rg, [a, b](Tape<Real> &tp, const Tensor<Real> &g) {
    const Real k = debug::fault_scale<Real>("mul");
    if (tp.requires_grad(a)) {
      Tensor<Real> da(g.shape());
      const auto &B = tp.value(b);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] = k * g[i] * B[i];
      tp.accumulate(a, da);
    }
    if (tp.requires_grad(b)) {
      Tensor<Real> db(g.shape());
      const auto &A = tp.value(a);
      for (std::size_t i = 0; i < g.size(); ++i) db[i] = g[i] * A[i];
      tp.accumulate(b, db);
    }
  });
}

/// scalar * tensor, the only broadcast the library allows.
template <typename Real> Var scale(Tape<Real> &t, Var a, Real s) {
  Tensor<Real> out = t.value(a);
  for (auto &x : out.values()) x *= s;
  return t.record(std::move(out), t.requires_grad(a),
                  [a, s](Tape<Real> &tp, const Tensor<Real> &g) {
                    Tensor<Real> da = g;
                    for (auto &x : da.values()) x *= s;
                    tp.accumulate(a, da);
                  });
}

namespace detail {
template <typename Real, typename Fwd, typename Deriv>
Var unary(Tape<Real> &t, Var a, const char *name, Fwd fwd, Deriv deriv) {
  Tensor<Real> out = t.value(a);
  for (auto &x : out.values()) x = fwd(x);
  Var result;
  result = t.record(std::move(out), t.requires_grad(a),
                    [a, name, deriv](Tape<Real> &tp, const Tensor<Real> &g) {
                      const Real k = debug::fault_scale<Real>(name);
                      const auto &x = tp.value(a);
                      Tensor<Real> da(g.shape());
                      for (std::size_t i = 0; i < g.size(); ++i)
                        da[i] = k * g[i] * deriv(x[i]);
                      tp.accumulate(a, da);
                    });
  return result;
}

template <typename Real> Real sigmoid(Real x) {
  if (x >= Real(0)) return Real(1) / (Real(1) + std::exp(-x));
  const Real e = std::exp(x);
  return e / (Real(1) + e);
}
} // namespace detail

template <typename Real> Var tanh(Tape<Real> &t, Var a) {
  return detail::unary(
      t, a, "tanh", [](Real x) { return std::tanh(x); },
      [](Real x) {
        const Real y = std::tanh(x);
        return Real(1) - y * y;
      });
}

template <typename Real> Var sigmoid(Tape<Real> &t, Var a) {
  return detail::unary(
      t, a, "sigmoid", [](Real x) { return detail::sigmoid(x); },
      [](Real x) {
        const Real y = detail::sigmoid(x);
        return y * (Real(1) - y);
      });
}

template <typename Real> Var relu(Tape<Real> &t, Var a) {
  return detail::unary(
      t, a, "relu", [](Real x) { return x > Real(0) ? x : Real(0); },
      [](Real x) { return x > Real(0) ? Real(1) : Real(0); });
}

template <typename Real> Var sum(Tape<Real> &t, Var a) {
  Real s = 0;
  for (Real x : t.value(a).values()) s += x;
  const Shape shape = t.value(a).shape();
  return t.record(Tensor<Real>::scalar(s), t.requires_grad(a),
                  [a, shape](Tape<Real> &tp, const Tensor<Real> &g) {
                    tp.accumulate(a, Tensor<Real>(shape, g[0]));
                  });
}

/// out(r, c) = x(r, c) * w(0, c): scales every row of x by the row vector w.
template <typename Real> Var mul_rowwise(Tape<Real> &t, Var x, Var w) {
  const auto &X = t.value(x);
  const auto &W = t.value(w);
  if (X.rank() != 2 || W.size() != X.cols())
    throw DimensionError("mul_rowwise: " + shape_str(X.shape()) + " rows vs " +
                         shape_str(W.shape()));
  Tensor<Real> out = X;
  for (std::size_t r = 0; r < X.rows(); ++r)
    for (std::size_t c = 0; c < X.cols(); ++c) out(r, c) *= W[c];
  const bool rg = t.requires_grad(x) || t.requires_grad(w);
  return t.record(std::move(out), rg, [x, w](Tape<Real> &tp, const Tensor<Real> &g) {
    const auto &X = tp.value(x);
    const auto &W = tp.value(w);
    if (tp.requires_grad(x)) {
      Tensor<Real> dx(X.shape());
      for (std::size_t r = 0; r < X.rows(); ++r)
        for (std::size_t c = 0; c < X.cols(); ++c) dx(r, c) = g(r, c) * W[c];
      tp.accumulate(x, dx);
    }
    if (tp.requires_grad(w)) {
      Tensor<Real> dw(W.shape());
      for (std::size_t r = 0; r < X.rows(); ++r)
        for (std::size_t c = 0; c < X.cols(); ++c) dw[c] += g(r, c) * X(r, c);
      tp.accumulate(w, dw);
    }
  });
}

/// Softmax over the flattened entries of x restricted to `mask`. Masked
/// logits are shifted by kMaskedLogit and their outputs forced to exactly 0.
template <typename Real>
Var softmax_masked(Tape<Real> &t, Var x, const std::vector<bool> &mask) {
  const auto &X = t.value(x);
  if (mask.size() != X.size())
    throw DimensionError("softmax_masked: mask length " +
                         std::to_string(mask.size()) + " vs logits " +
                         shape_str(X.shape()));
  if (std::none_of(mask.begin(), mask.end(), [](bool m) { return m; }))
    throw EmptySupportError("softmax_masked: every entry is masked");
  Tensor<Real> y(X.shape());
  Real mx = -std::numeric_limits<Real>::max();
  for (std::size_t i = 0; i < X.size(); ++i)
    if (mask[i]) mx = std::max(mx, X[i]);
  Real z = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const Real logit = mask[i] ? X[i] : X[i] + Real(kMaskedLogit);
    y[i] = std::exp(logit - mx);
    z += y[i];
  }
  for (std::size_t i = 0; i < X.size(); ++i) y[i] = mask[i] ? y[i] / z : Real(0);
  Tensor<Real> saved = y;
  return t.record(std::move(y), t.requires_grad(x),
                  [x, saved = std::move(saved)](Tape<Real> &tp,
                                                const Tensor<Real> &g) {
                    const Real k = debug::fault_scale<Real>("softmax_masked");
                    Real dot = 0;
                    for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * saved[i];
                    Tensor<Real> dx(saved.shape());
                    for (std::size_t i = 0; i < g.size(); ++i)
                      dx[i] = k * saved[i] * (g[i] - dot);
                    tp.accumulate(x, dx);
                  });
}

template <typename Real> struct MaxResult {
  Var values;
  std::vector<std::size_t> argmax;
};

/// Maximum over `axis` of a 2-D tensor, ignoring entries whose index along
/// that axis is masked out. Ties go to the lowest index. The output is a row
/// vector (1 x slices).
template <typename Real>
MaxResult<Real> max_over_axis(Tape<Real> &t, Var x, std::size_t axis,
                              const std::vector<bool> &mask = {}) {
  const auto &X = t.value(x);
  if (X.rank() != 2 || axis > 1)
    throw DimensionError("max_over_axis: need a matrix and axis 0 or 1, got " +
                         shape_str(X.shape()));
  const std::size_t reduced = axis == 0 ? X.rows() : X.cols();
  const std::size_t slices = axis == 0 ? X.cols() : X.rows();
  if (!mask.empty() && mask.size() != reduced)
    throw DimensionError("max_over_axis: mask length " +
                         std::to_string(mask.size()) + " vs reduced extent " +
                         std::to_string(reduced));
  auto at = [&](std::size_t s, std::size_t j) -> Real {
    return axis == 0 ? X(j, s) : X(s, j);
  };
  Tensor<Real> out = Tensor<Real>::matrix(1, slices);
  std::vector<std::size_t> arg(slices);
  for (std::size_t s = 0; s < slices; ++s) {
    bool found = false;
    for (std::size_t j = 0; j < reduced; ++j) {
      if (!mask.empty() && !mask[j]) continue;
      if (!found || at(s, j) > out[s]) {
        out[s] = at(s, j);
        arg[s] = j;
        found = true;
      }
    }
    if (!found)
      throw EmptySupportError("max_over_axis: slice " + std::to_string(s) +
                              " has no unmasked entry");
  }
  const Shape xshape = X.shape();
  Var v = t.record(std::move(out), t.requires_grad(x),
                   [x, axis, arg, xshape](Tape<Real> &tp, const Tensor<Real> &g) {
                     const Real k = debug::fault_scale<Real>("max_over_axis");
                     Tensor<Real> dx(xshape);
                     for (std::size_t s = 0; s < arg.size(); ++s) {
                       if (axis == 0) dx(arg[s], s) += k * g[s];
                       else dx(s, arg[s]) += k * g[s];
                     }
                     tp.accumulate(x, dx);
                   });
  return {v, arg};
}

/// Treats x as `lengths.size()` consecutive blocks of `block` rows and takes
/// the column-wise maximum over the first lengths[b] rows of each block.
/// Empty blocks yield a zero row. Output: blocks x cols.
template <typename Real>
Var segment_max(Tape<Real> &t, Var x, std::size_t block,
                const std::vector<std::size_t> &lengths) {
  const auto &X = t.value(x);
  const std::size_t nb = lengths.size();
  if (X.rank() != 2 || X.rows() != nb * block)
    throw DimensionError("segment_max: " + shape_str(X.shape()) + " is not " +
                         std::to_string(nb) + " blocks of " + std::to_string(block));
  const std::size_t c = X.cols();
  Tensor<Real> out = Tensor<Real>::matrix(nb, c);
  std::vector<std::size_t> arg(nb * c, block);
  for (std::size_t b = 0; b < nb; ++b) {
    if (lengths[b] > block) throw DimensionError("segment_max: length exceeds block");
    for (std::size_t j = 0; j < c; ++j) {
      for (std::size_t r = 0; r < lengths[b]; ++r) {
        const Real v = X(b * block + r, j);
        if (r == 0 || v > out(b, j)) {
          out(b, j) = v;
          arg[b * c + j] = r;
        }
      }
    }
  }
  const Shape xshape = X.shape();
  return t.record(std::move(out), t.requires_grad(x),
                  [x, block, c, arg, xshape](Tape<Real> &tp, const Tensor<Real> &g) {
                    const Real k = debug::fault_scale<Real>("max_over_axis");
                    Tensor<Real> dx(xshape);
                    for (std::size_t i = 0; i < arg.size(); ++i) {
                      if (arg[i] == block) continue;
                      const std::size_t b = i / c, j = i % c;
                      dx(b * block + arg[i], j) += k * g[i];
                    }
                    tp.accumulate(x, dx);
                  });
}

template <typename Real>
Var slice_rows(Tape<Real> &t, Var x, std::size_t begin, std::size_t count) {
  const auto &X = t.value(x);
  if (X.rank() != 2 || begin + count > X.rows())
    throw DimensionError("slice_rows: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " +
                         shape_str(X.shape()));
  const std::size_t c = X.cols();
  Tensor<Real> out = Tensor<Real>::matrix(count, c);
  std::copy_n(X.data() + begin * c, count * c, out.data());
  const Shape xshape = X.shape();
  return t.record(std::move(out), t.requires_grad(x),
                  [x, begin, xshape](Tape<Real> &tp, const Tensor<Real> &g) {
                    Tensor<Real> &dx = tp.grad_buffer(x);
                    const std::size_t c = xshape[1];
                    for (std::size_t i = 0; i < g.size(); ++i)
                      dx[begin * c + i] += g[i];
                  });
}

template <typename Real>
Var slice_cols(Tape<Real> &t, Var x, std::size_t begin, std::size_t count) {
  const auto &X = t.value(x);
  if (X.rank() != 2 || begin + count > X.cols())
    throw DimensionError("slice_cols: out of range for " + shape_str(X.shape()));
  Tensor<Real> out = Tensor<Real>::matrix(X.rows(), count);
  for (std::size_t r = 0; r < X.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = X(r, begin + c);
  return t.record(std::move(out), t.requires_grad(x),
                  [x, begin](Tape<Real> &tp, const Tensor<Real> &g) {
                    Tensor<Real> &dx = tp.grad_buffer(x);
                    for (std::size_t r = 0; r < g.rows(); ++r)
                      for (std::size_t c = 0; c < g.cols(); ++c)
                        dx(r, begin + c) += g(r, c);
                  });
}

/// Horizontal concatenation of matrices with equal row counts.
template <typename Real> Var concat_cols(Tape<Real> &t, const std::vector<Var> &xs) {
  if (xs.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t rows = t.value(xs[0]).rows();
  std::size_t cols = 0;
  bool rg = false;
  for (Var v : xs) {
    if (t.value(v).rank() != 2 || t.value(v).rows() != rows)
      throw DimensionError("concat_cols: row mismatch " +
                           shape_str(t.value(xs[0]).shape()) + " vs " +
                           shape_str(t.value(v).shape()));
    cols += t.value(v).cols();
    rg = rg || t.requires_grad(v);
  }
  Tensor<Real> out = Tensor<Real>::matrix(rows, cols);
  std::size_t off = 0;
  for (Var v : xs) {
    const auto &X = t.value(v);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < X.cols(); ++c) out(r, off + c) = X(r, c);
    off += X.cols();
  }
  return t.record(std::move(out), rg, [xs](Tape<Real> &tp, const Tensor<Real> &g) {
    std::size_t off = 0;
    for (Var v : xs) {
      const std::size_t w = tp.value(v).cols();
      if (tp.requires_grad(v)) {
        Tensor<Real> &dx = tp.grad_buffer(v);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < w; ++c) dx(r, c) += g(r, off + c);
      }
      off += w;
    }
  });
}

/// Vertical concatenation of matrices with equal column counts.
template <typename Real> Var concat_rows(Tape<Real> &t, const std::vector<Var> &xs) {
  if (xs.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t cols = t.value(xs[0]).cols();
  std::size_t rows = 0;
  bool rg = false;
  for (Var v : xs) {
    if (t.value(v).rank() != 2 || t.value(v).cols() != cols)
      throw DimensionError("concat_rows: column mismatch " +
                           shape_str(t.value(xs[0]).shape()) + " vs " +
                           shape_str(t.value(v).shape()));
    rows += t.value(v).rows();
    rg = rg || t.requires_grad(v);
  }
  Tensor<Real> out = Tensor<Real>::matrix(rows, cols);
  std::size_t off = 0;
  for (Var v : xs) {
    const auto &X = t.value(v);
    std::copy(X.values().begin(), X.values().end(), out.data() + off);
    off += X.size();
  }
  return t.record(std::move(out), rg, [xs](Tape<Real> &tp, const Tensor<Real> &g) {
    std::size_t off = 0;
    for (Var v : xs) {
      const std::size_t n = tp.value(v).size();
      if (tp.requires_grad(v)) {
        Tensor<Real> &dx = tp.grad_buffer(v);
        for (std::size_t i = 0; i < n; ++i) dx[i] += g[off + i];
      }
      off += n;
    }
  });
}

/// Row t of the result is column indices[t] of the d x |V| table.
template <typename Real>
Var embedding_lookup(Tape<Real> &t, Var table,
                     const std::vector<std::size_t> &indices) {
  const auto &E = t.value(table);
  const std::size_t d = E.rows(), vocab = E.cols();
  Tensor<Real> out = Tensor<Real>::matrix(indices.size(), d);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= vocab)
      throw DimensionError("embedding_lookup: index " + std::to_string(indices[r]) +
                           " >= vocabulary size " + std::to_string(vocab));
    for (std::size_t i = 0; i < d; ++i) out(r, i) = E(i, indices[r]);
  }
  return t.record(std::move(out), t.requires_grad(table),
                  [table, indices](Tape<Real> &tp, const Tensor<Real> &g) {
                    Tensor<Real> &dE = tp.grad_buffer(table);
                    const std::size_t d = g.cols();
                    for (std::size_t r = 0; r < indices.size(); ++r)
                      for (std::size_t i = 0; i < d; ++i)
                        dE(i, indices[r]) += g(r, i);
                  });
}

/// Row `index` of a table, as a 1 x cols matrix.
template <typename Real> Var row_lookup(Tape<Real> &t, Var table, std::size_t index) {
  const auto &T = t.value(table);
  if (index >= T.rows())
    throw DimensionError("row_lookup: row " + std::to_string(index) + " of " +
                         shape_str(T.shape()));
  return slice_rows(t, table, index, 1);
}

} // namespace ahn
