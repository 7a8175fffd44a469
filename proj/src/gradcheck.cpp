#include "stnet/gradcheck.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "stnet/errors.hpp"
#include "stnet/kernels.hpp"

namespace stnet {

namespace {

Tensor random_tensor(Shape shape, double lo, double hi, Rng& rng) {
  Tensor t(std::move(shape));
  for (float& v : t.data()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

double weighted_sum(std::span<const double> values, std::span<const double> coeffs) {
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) acc += values[i] * coeffs[i];
  return acc;
}

std::string dims(std::initializer_list<std::size_t> extents) {
  std::ostringstream os;
  bool first = true;
  for (auto e : extents) {
    os << (first ? "" : "x") << e;
    first = false;
  }
  return os.str();
}

}  // namespace

double gradient_check(const GradCheckTarget& target, double eps, std::uint64_t seed) {
  if (!(eps > 0.0)) throw ValidationError("gradient_check: eps must be positive");

  // Analytic side: float tape, loss = Σ r·y.
  std::vector<Tensor> leaves = target.inputs;
  Tape tape;
  std::vector<Var> vars;
  for (Tensor& leaf : leaves) {
    leaf.set_requires_grad(true);
    vars.push_back(tape.parameter(leaf));
  }
  Var out = target.build(tape, vars);
  const std::size_t out_size = tape.value(out).size();

  Rng rng(seed);
  std::vector<double> coeffs(out_size);
  for (double& c : coeffs) c = out_size == 1 ? 1.0 : rng.uniform(-1.0, 1.0);
  Tensor coeff_tensor(Shape{out_size});
  for (std::size_t i = 0; i < out_size; ++i) coeff_tensor[i] = static_cast<float>(coeffs[i]);
  // Round the coefficients once so both sides weight the outputs identically.
  for (std::size_t i = 0; i < out_size; ++i) coeffs[i] = coeff_tensor[i];

  tape.backward(tape.dot(out, coeff_tensor));

  // Numeric side: double-precision reference forward.
  std::vector<std::vector<double>> point;
  for (const Tensor& t : target.inputs) point.emplace_back(t.data().begin(), t.data().end());

  double worst = 0.0;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    std::vector<float> analytic(leaves[i].grad().begin(), leaves[i].grad().end());
    if (target.tamper) target.tamper(i, analytic);
    for (std::size_t e = 0; e < point[i].size(); ++e) {
      const double original = point[i][e];
      point[i][e] = original + eps;
      const double f_plus = weighted_sum(target.reference(point), coeffs);
      point[i][e] = original - eps;
      const double f_minus = weighted_sum(target.reference(point), coeffs);
      point[i][e] = original;
      const double numeric = (f_plus - f_minus) / (2.0 * eps);
      const double a = analytic[e];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

GradCheckTarget conv2d_target(std::size_t batch, std::size_t channels, std::size_t height,
                              std::size_t width, std::size_t filters, std::size_t kernel, Rng& rng) {
  kernels::ConvGeometry g{batch, channels, height, width, filters, kernel, kernel};
  GradCheckTarget t;
  t.name = "conv2d";
  t.inputs.push_back(random_tensor({batch, channels, height, width}, -1.0, 1.0, rng));
  t.inputs.push_back(random_tensor({filters, channels, kernel, kernel}, -1.0, 1.0, rng));
  t.inputs.push_back(random_tensor({filters}, -1.0, 1.0, rng));
  t.build = [](Tape& tape, std::span<const Var> v) { return tape.conv2d(v[0], v[1], v[2]); };
  t.reference = [g](const std::vector<std::vector<double>>& in) {
    std::vector<double> out(g.output_size());
    kernels::conv2d_forward<double>(g, in[0], in[1], in[2], out);
    return out;
  };
  return t;
}

GradCheckTarget maxpool2_target(std::size_t batch, std::size_t channels, std::size_t height,
                                std::size_t width, double gap, Rng& rng) {
  kernels::PoolGeometry g{batch, channels, height, width};
  const std::size_t count = batch * channels * height * width;
  // A shuffled arithmetic ladder guarantees pairwise separation of `gap`.
  auto order = permutation(count, rng);
  Tensor x({batch, channels, height, width});
  const double offset = rng.uniform(-1.0, 0.0);
  for (std::size_t i = 0; i < count; ++i) x[i] = static_cast<float>(offset + gap * static_cast<double>(order[i]));
  GradCheckTarget t;
  t.name = "maxpool2";
  t.inputs.push_back(std::move(x));
  t.build = [](Tape& tape, std::span<const Var> v) { return tape.maxpool2(v[0]); };
  t.reference = [g](const std::vector<std::vector<double>>& in) {
    std::vector<double> out(g.output_size());
    std::vector<std::uint32_t> argmax(out.size());
    kernels::maxpool2_forward<double>(g, in[0], out, argmax);
    return out;
  };
  return t;
}

GradCheckTarget relu_target(const Shape& shape, double margin, Rng& rng) {
  Tensor x(shape);
  for (float& v : x.data()) {
    const double mag = rng.uniform(margin, 1.0);
    v = static_cast<float>(rng.uniform() < 0.5 ? -mag : mag);
  }
  GradCheckTarget t;
  t.name = "relu";
  t.inputs.push_back(std::move(x));
  t.build = [](Tape& tape, std::span<const Var> v) { return tape.relu(v[0]); };
  t.reference = [](const std::vector<std::vector<double>>& in) {
    std::vector<double> out(in[0].size());
    kernels::relu_forward<double>(in[0], out);
    return out;
  };
  return t;
}

GradCheckTarget dense_target(std::size_t rows, std::size_t in_features, std::size_t out_features, Rng& rng) {
  kernels::DenseGeometry g{rows, in_features, out_features};
  GradCheckTarget t;
  t.name = "dense";
  t.inputs.push_back(random_tensor({rows, in_features}, -1.0, 1.0, rng));
  t.inputs.push_back(random_tensor({in_features, out_features}, -1.0, 1.0, rng));
  t.inputs.push_back(random_tensor({out_features}, -1.0, 1.0, rng));
  t.build = [](Tape& tape, std::span<const Var> v) { return tape.dense(v[0], v[1], v[2]); };
  t.reference = [g](const std::vector<std::vector<double>>& in) {
    std::vector<double> out(g.rows * g.out_features);
    kernels::dense_forward<double>(g, in[0], in[1], in[2], out);
    return out;
  };
  return t;
}

GradCheckTarget softmax_cross_entropy_target(std::size_t rows, std::size_t classes, Rng& rng) {
  std::vector<int> labels(rows);
  for (int& l : labels) l = static_cast<int>(rng.below(classes));
  GradCheckTarget t;
  t.name = "softmax_cross_entropy";
  t.inputs.push_back(random_tensor({rows, classes}, -2.0, 2.0, rng));
  t.build = [labels](Tape& tape, std::span<const Var> v) {
    return tape.softmax_cross_entropy(v[0], labels).loss;
  };
  t.reference = [labels, rows, classes](const std::vector<std::vector<double>>& in) {
    std::vector<double> probs(rows * classes);
    return std::vector<double>{
        kernels::softmax_cross_entropy_forward<double>(rows, classes, in[0], labels, probs)};
  };
  return t;
}

GradCheckTarget constant_relu_target(std::size_t rows, std::size_t in_features, std::size_t out_features,
                                     Rng& rng) {
  kernels::DenseGeometry g{rows, in_features, out_features};
  GradCheckTarget t;
  t.name = "constant_relu";
  t.inputs.push_back(random_tensor({rows, in_features}, -1.0, 1.0, rng));
  t.inputs.push_back(Tensor({in_features, out_features}, 0.0f));
  t.inputs.push_back(Tensor({out_features}, -1.0f));
  t.build = [](Tape& tape, std::span<const Var> v) { return tape.relu(tape.dense(v[0], v[1], v[2])); };
  t.reference = [g](const std::vector<std::vector<double>>& in) {
    std::vector<double> pre(g.rows * g.out_features), out(pre.size());
    kernels::dense_forward<double>(g, in[0], in[1], in[2], pre);
    kernels::relu_forward<double>(pre, out);
    return out;
  };
  return t;
}

std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed, std::size_t cases_per_primitive) {
  constexpr double eps = 1e-3;
  constexpr double threshold = 1e-3;
  Rng rng(seed);
  std::vector<GradCheckResult> results;
  auto record = [&](const GradCheckTarget& target, std::string shape) {
    const double err = gradient_check(target, eps, rng());
    results.push_back({target.name, std::move(shape), err, err < threshold});
  };
  auto pick = [&](std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(rng.below(hi - lo + 1)); };

  for (std::size_t i = 0; i < cases_per_primitive; ++i) {
    const std::size_t n = pick(1, 2), c = pick(1, 3), h = pick(3, 7), w = pick(3, 7), f = pick(1, 4);
    const std::size_t k = std::array<std::size_t, 3>{1, 3, 5}[rng.below(3)];
    record(conv2d_target(n, c, h, w, f, k, rng), dims({n, c, h, w}) + " * " + dims({f, c, k, k}));
  }
  for (std::size_t i = 0; i < cases_per_primitive; ++i) {
    const std::size_t n = pick(1, 2), c = pick(1, 3), h = pick(2, 7), w = pick(2, 7);
    record(maxpool2_target(n, c, h, w, 20.0 * eps, rng), dims({n, c, h, w}));
  }
  for (std::size_t i = 0; i < cases_per_primitive; ++i) {
    const Shape shape{pick(1, 3), pick(1, 4), pick(1, 6)};
    record(relu_target(shape, 10.0 * eps, rng), to_string(shape));
  }
  for (std::size_t i = 0; i < cases_per_primitive; ++i) {
    const std::size_t n = pick(1, 4), d = pick(1, 8), m = pick(1, 6);
    record(dense_target(n, d, m, rng), dims({n, d}) + " * " + dims({d, m}));
  }
  for (std::size_t i = 0; i < cases_per_primitive; ++i) {
    const std::size_t n = pick(1, 5), k = pick(2, 10);
    record(softmax_cross_entropy_target(n, k, rng), dims({n, k}));
  }
  return results;
}

}  // namespace stnet
