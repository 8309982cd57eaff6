#pragma once

#include "ahn/lstm.hpp"
#include "ahn/tape.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace ahn {

/// Relative error between analytic and numeric gradients of one tensor:
/// ||a - n|| / max(||a||, ||n||). Tensors whose gradients are both below
/// 1e-10 in norm report the absolute difference instead.
inline double gradient_relative_error(const std::vector<double> &analytic,
                                      const std::vector<double> &numeric) {
  double diff = 0, na = 0, nn = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double d = analytic[i] - numeric[i];
    diff += d * d;
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  diff = std::sqrt(diff);
  const double scale = std::max(std::sqrt(na), std::sqrt(nn));
  return scale < 1e-10 ? diff : diff / scale;
}

/// Central finite differences of a scalar function with respect to every
/// entry of `x`, restoring each entry afterwards.
inline std::vector<double>
numeric_gradient(std::vector<double> &x, const std::function<double()> &f,
                 double eps = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = f();
    x[i] = saved - eps;
    const double down = f();
    x[i] = saved;
    g[i] = (up - down) / (2 * eps);
  }
  return g;
}

/// Builds a loss from leaf tensors via `build`, then compares the tape's
/// gradient of every leaf with central differences. Returns one relative
/// error per input.
inline std::vector<double> check_gradients(
    std::vector<Tensor<double>> inputs,
    const std::function<Var(Tape<double> &, const std::vector<Var> &)> &build,
    double eps = 1e-5) {
  auto evaluate = [&]() {
    Tape<double> tape;
    std::vector<Var> vars;
    for (const auto &x : inputs) vars.push_back(tape.constant(x));
    return tape.value(build(tape, vars)).item();
  };
  Tape<double> tape;
  std::vector<Var> vars;
  for (const auto &x : inputs) vars.push_back(tape.leaf(x));
  const Var loss = build(tape, vars);
  tape.backward(loss);
  std::vector<double> errors;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Tensor<double> analytic = tape.grad(vars[i]);
    const auto numeric = numeric_gradient(inputs[i].values(), evaluate, eps);
    errors.push_back(gradient_relative_error(analytic.values(), numeric));
  }
  return errors;
}

struct OpCheck {
  std::string op;
  double max_error;
};

namespace detail {
inline Tensor<double> random_tensor(std::mt19937_64 &rng, Shape shape,
                                    double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<double> t(std::move(shape));
  for (auto &x : t.values()) x = u(rng);
  return t;
}

/// Entries in [-1, -0.1] U [0.1, 1], away from the kink of relu.
inline Tensor<double> off_zero_tensor(std::mt19937_64 &rng, Shape shape) {
  Tensor<double> t = random_tensor(rng, std::move(shape), 0.1, 1);
  std::bernoulli_distribution sign(0.5);
  for (auto &x : t.values()) if (sign(rng)) x = -x;
  return t;
}

/// sum(y * R) for a fixed random R, so every output entry carries a
/// distinct upstream gradient.
inline Var weighted_sum(Tape<double> &t, Var y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Var r = t.constant(random_tensor(rng, t.value(y).shape()));
  return sum(t, mul(t, y, r));
}
} // namespace detail

/// Finite-difference check of every primitive on random f64 inputs.
inline std::vector<OpCheck> check_primitives(std::uint64_t seed = 7) {
  using detail::off_zero_tensor;
  using detail::random_tensor;
  using detail::weighted_sum;
  std::mt19937_64 rng(seed);
  std::vector<OpCheck> out;
  auto run = [&](const std::string &op, std::vector<Tensor<double>> inputs,
                 const std::function<Var(Tape<double> &, const std::vector<Var> &)> &f) {
    const auto errs = check_gradients(std::move(inputs), f);
    out.push_back({op, *std::max_element(errs.begin(), errs.end())});
  };
  run("matmul", {random_tensor(rng, {3, 4}), random_tensor(rng, {4, 2})},
      [](auto &t, const auto &v) { return weighted_sum(t, matmul(t, v[0], v[1]), 1); });
  run("transpose", {random_tensor(rng, {3, 2})},
      [](auto &t, const auto &v) { return weighted_sum(t, transpose(t, v[0]), 2); });
  run("add", {random_tensor(rng, {2, 3}), random_tensor(rng, {2, 3})},
      [](auto &t, const auto &v) { return weighted_sum(t, add(t, v[0], v[1]), 3); });
  run("sub", {random_tensor(rng, {2, 3}), random_tensor(rng, {2, 3})},
      [](auto &t, const auto &v) { return weighted_sum(t, sub(t, v[0], v[1]), 4); });
  run("mul", {random_tensor(rng, {2, 3}), random_tensor(rng, {2, 3})},
      [](auto &t, const auto &v) { return weighted_sum(t, mul(t, v[0], v[1]), 5); });
  run("scale", {random_tensor(rng, {1, 4})},
      [](auto &t, const auto &v) { return weighted_sum(t, scale(t, v[0], -2.5), 6); });
  run("tanh", {random_tensor(rng, {2, 4}, -2, 2)},
      [](auto &t, const auto &v) { return weighted_sum(t, tanh(t, v[0]), 7); });
  run("sigmoid", {random_tensor(rng, {2, 4}, -3, 3)},
      [](auto &t, const auto &v) { return weighted_sum(t, sigmoid(t, v[0]), 8); });
  run("relu", {off_zero_tensor(rng, {2, 4})},
      [](auto &t, const auto &v) { return weighted_sum(t, relu(t, v[0]), 9); });
  run("sum", {random_tensor(rng, {3, 3})},
      [](auto &t, const auto &v) { return sum(t, v[0]); });
  run("mul_rowwise", {random_tensor(rng, {3, 4}), random_tensor(rng, {1, 4})},
      [](auto &t, const auto &v) { return weighted_sum(t, mul_rowwise(t, v[0], v[1]), 10); });
  run("softmax_masked", {random_tensor(rng, {1, 5}, -2, 2)}, [](auto &t, const auto &v) {
    return weighted_sum(t, softmax_masked(t, v[0], {true, false, true, true, false}), 11);
  });
  run("max_over_axis", {random_tensor(rng, {4, 5})}, [](auto &t, const auto &v) {
    auto r0 = max_over_axis(t, v[0], 1, {true, true, false, true, true});
    auto r1 = max_over_axis(t, v[0], 0, {false, true, true, true});
    return add(t, weighted_sum(t, r0.values, 12), weighted_sum(t, r1.values, 13));
  });
  run("segment_max", {random_tensor(rng, {6, 3})}, [](auto &t, const auto &v) {
    return weighted_sum(t, segment_max(t, v[0], 3, {2, 0}), 14);
  });
  run("slice", {random_tensor(rng, {4, 3})}, [](auto &t, const auto &v) {
    return add(t, weighted_sum(t, slice_rows(t, v[0], 1, 2), 15),
               weighted_sum(t, slice_cols(t, v[0], 1, 2), 16));
  });
  run("concat", {random_tensor(rng, {2, 3}), random_tensor(rng, {2, 2})},
      [](auto &t, const auto &v) {
        const Var c = concat_cols(t, {v[0], v[1], v[0]});
        const Var r = concat_rows(t, {transpose(t, v[1]), transpose(t, v[1])});
        return add(t, weighted_sum(t, c, 17), weighted_sum(t, r, 18));
      });
  run("embedding_lookup", {random_tensor(rng, {3, 5})}, [](auto &t, const auto &v) {
    return weighted_sum(t, embedding_lookup(t, v[0], {4, 0, 4, 2}), 19);
  });
  run("lstm",
      {random_tensor(rng, {6, 3}), random_tensor(rng, {8, 3}, -0.5, 0.5),
       random_tensor(rng, {8, 2}, -0.5, 0.5), random_tensor(rng, {1, 8}, -0.5, 0.5),
       random_tensor(rng, {8, 3}, -0.5, 0.5), random_tensor(rng, {8, 2}, -0.5, 0.5),
       random_tensor(rng, {1, 8}, -0.5, 0.5)},
      [](auto &t, const auto &v) {
        const LstmVars<double> f{v[1], v[2], v[3]}, b{v[4], v[5], v[6]};
        return weighted_sum(t, bilstm(t, v[0], 3, {3, 2}, f, b), 20);
      });
  return out;
}

} // namespace ahn
