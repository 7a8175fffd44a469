#include "stnet/tape.hpp"

#include <algorithm>

#include "stnet/errors.hpp"

namespace stnet {

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw ValidationError("variable does not belong to this tape");
  return nodes_[v.id];
}

Var Tape::push(Tensor value, bool needs_grad) {
  Node n;
  n.owned = std::move(value);
  n.needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Tensor value) { return push(std::move(value), false); }

Var Tape::parameter(Tensor& param) {
  Node n;
  n.bound = &param;
  n.needs_grad = param.requires_grad();
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const Tensor& Tape::value(Var v) const { return node(v).value(); }

std::span<const float> Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.bound) return n.bound->grad();
  return n.grad;
}

Var Tape::conv2d(Var input, Var weight, Var bias) {
  const Tensor& x = value(input);
  const Tensor& w = value(weight);
  const Tensor& b = value(bias);
  if (x.rank() != 4 || w.rank() != 4) {
    throw ShapeError("conv2d expects N×C×H×W input and F×C×kh×kw weight, got input " +
                     to_string(x.shape()) + " and weight " + to_string(w.shape()));
  }
  if (x.dim(1) != w.dim(1)) {
    throw ShapeError("conv2d channel mismatch: input " + to_string(x.shape()) + " vs weight " +
                     to_string(w.shape()));
  }
  if (b.rank() != 1 || b.dim(0) != w.dim(0)) {
    throw ShapeError("conv2d bias " + to_string(b.shape()) + " does not match weight " +
                     to_string(w.shape()));
  }
  if (w.dim(2) % 2 == 0 || w.dim(3) % 2 == 0) {
    throw UnsupportedError("conv2d requires odd kernel extents for same padding, got " +
                           to_string(w.shape()));
  }
  Record rec{OpKind::Conv2d, {input.id, weight.id, bias.id}, 0};
  rec.conv = {x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(0), w.dim(2), w.dim(3)};
  Tensor out({rec.conv.batch, rec.conv.filters, rec.conv.height, rec.conv.width});
  kernels::conv2d_forward<float>(rec.conv, x.data(), w.data(), b.data(), out.data());
  const bool ng = node(input).needs_grad || node(weight).needs_grad || node(bias).needs_grad;
  Var v = push(std::move(out), ng);
  rec.output = v.id;
  records_.push_back(std::move(rec));
  return v;
}

Var Tape::maxpool2(Var input) {
  const Tensor& x = value(input);
  if (x.rank() != 4) throw ShapeError("maxpool2 expects N×C×H×W input, got " + to_string(x.shape()));
  if (x.dim(2) < 2 || x.dim(3) < 2) {
    throw UnsupportedError("maxpool2 needs spatial extent >= 2, got " + to_string(x.shape()));
  }
  Record rec{OpKind::MaxPool2, {input.id}, 0};
  rec.pool = {x.dim(0), x.dim(1), x.dim(2), x.dim(3)};
  Tensor out({rec.pool.batch, rec.pool.channels, rec.pool.out_height(), rec.pool.out_width()});
  rec.argmax.resize(out.size());
  kernels::maxpool2_forward<float>(rec.pool, x.data(), out.data(), rec.argmax);
  Var v = push(std::move(out), node(input).needs_grad);
  rec.output = v.id;
  records_.push_back(std::move(rec));
  return v;
}

Var Tape::relu(Var input) {
  const Tensor& x = value(input);
  Tensor out(x.shape());
  kernels::relu_forward<float>(x.data(), out.data());
  Var v = push(std::move(out), node(input).needs_grad);
  records_.push_back(Record{OpKind::Relu, {input.id}, v.id});
  return v;
}

Var Tape::dense(Var input, Var weight, Var bias) {
  const Tensor& x = value(input);
  const Tensor& w = value(weight);
  const Tensor& b = value(bias);
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0)) {
    throw ShapeError("dense dimension mismatch: input " + to_string(x.shape()) + " vs weight " +
                     to_string(w.shape()));
  }
  if (b.rank() != 1 || b.dim(0) != w.dim(1)) {
    throw ShapeError("dense bias " + to_string(b.shape()) + " does not match weight " +
                     to_string(w.shape()));
  }
  Record rec{OpKind::Dense, {input.id, weight.id, bias.id}, 0};
  rec.dense = {x.dim(0), x.dim(1), w.dim(1)};
  Tensor out({rec.dense.rows, rec.dense.out_features});
  kernels::dense_forward<float>(rec.dense, x.data(), w.data(), b.data(), out.data());
  const bool ng = node(input).needs_grad || node(weight).needs_grad || node(bias).needs_grad;
  Var v = push(std::move(out), ng);
  rec.output = v.id;
  records_.push_back(std::move(rec));
  return v;
}

Var Tape::flatten(Var input) {
  const Tensor& x = value(input);
  if (x.rank() < 1) throw ShapeError("flatten needs a batch axis, got a scalar");
  const std::size_t rows = x.dim(0);
  Tensor out = x.reshaped({rows, rows == 0 ? 0 : x.size() / rows});
  Var v = push(std::move(out), node(input).needs_grad);
  records_.push_back(Record{OpKind::Flatten, {input.id}, v.id});
  return v;
}

Var Tape::concat(std::span<const Var> parts) {
  if (parts.empty()) throw ValidationError("concat needs at least one input");
  const std::size_t rows = value(parts[0]).dim(0);
  std::size_t width = 0;
  bool ng = false;
  Record rec{OpKind::Concat, {}, 0};
  for (Var p : parts) {
    const Tensor& t = value(p);
    if (t.rank() != 2 || t.dim(0) != rows) {
      throw ShapeError("concat expects N×D blocks with N = " + std::to_string(rows) + ", got " +
                       to_string(t.shape()));
    }
    width += t.dim(1);
    ng = ng || node(p).needs_grad;
    rec.inputs.push_back(p.id);
  }
  Tensor out({rows, width});
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& t = value(p);
    const std::size_t d = t.dim(1);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(t.data().begin() + r * d, d, out.data().begin() + r * width + offset);
    }
    offset += d;
  }
  Var v = push(std::move(out), ng);
  rec.output = v.id;
  records_.push_back(std::move(rec));
  return v;
}

Var Tape::scale(Var input, float factor) {
  const Tensor& x = value(input);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * factor;
  Var v = push(std::move(out), node(input).needs_grad);
  Record rec{OpKind::Scale, {input.id}, v.id};
  rec.factor = factor;
  records_.push_back(std::move(rec));
  return v;
}

Var Tape::add(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (x.shape() != y.shape()) {
    throw ShapeError("add shape mismatch: " + to_string(x.shape()) + " vs " + to_string(y.shape()));
  }
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  Var v = push(std::move(out), node(a).needs_grad || node(b).needs_grad);
  records_.push_back(Record{OpKind::Add, {a.id, b.id}, v.id});
  return v;
}

Var Tape::sum(Var input) {
  const Tensor& x = value(input);
  double acc = 0.0;
  for (float f : x.data()) acc += f;
  Var v = push(Tensor::scalar(static_cast<float>(acc)), node(input).needs_grad);
  records_.push_back(Record{OpKind::Sum, {input.id}, v.id});
  return v;
}

Var Tape::dot(Var input, const Tensor& coeffs) {
  const Tensor& x = value(input);
  if (coeffs.size() != x.size()) {
    throw ShapeError("dot coefficient shape " + to_string(coeffs.shape()) + " does not match " +
                     to_string(x.shape()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += static_cast<double>(x[i]) * coeffs[i];
  Var v = push(Tensor::scalar(static_cast<float>(acc)), node(input).needs_grad);
  Record rec{OpKind::Dot, {input.id}, v.id};
  rec.saved.assign(coeffs.data().begin(), coeffs.data().end());
  records_.push_back(std::move(rec));
  return v;
}

Var Tape::half_sum_squares(Var input) {
  const Tensor& x = value(input);
  double acc = 0.0;
  for (float f : x.data()) acc += 0.5 * static_cast<double>(f) * f;
  Var v = push(Tensor::scalar(static_cast<float>(acc)), node(input).needs_grad);
  records_.push_back(Record{OpKind::HalfSumSquares, {input.id}, v.id});
  return v;
}

Tape::LossOutput Tape::softmax_cross_entropy(Var logits, std::span<const int> labels) {
  const Tensor& z = value(logits);
  if (z.rank() != 2) throw ShapeError("softmax_cross_entropy expects N×K logits, got " + to_string(z.shape()));
  const std::size_t rows = z.dim(0), classes = z.dim(1);
  if (rows == 0) throw ValidationError("softmax_cross_entropy needs at least one row");
  if (labels.size() != rows) {
    throw ValidationError("softmax_cross_entropy got " + std::to_string(labels.size()) +
                          " labels for " + std::to_string(rows) + " rows");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= classes) {
      throw ValidationError("label " + std::to_string(labels[r]) + " at row " + std::to_string(r) +
                            " outside [0, " + std::to_string(classes) + ")");
    }
  }
  Tensor probs({rows, classes});
  const double loss = kernels::softmax_cross_entropy_forward<float>(rows, classes, z.data(), labels, probs.data());
  Var v = push(Tensor::scalar(static_cast<float>(loss)), node(logits).needs_grad);
  Record rec{OpKind::SoftmaxCrossEntropy, {logits.id}, v.id};
  rec.labels.assign(labels.begin(), labels.end());
  rec.saved.assign(probs.data().begin(), probs.data().end());
  records_.push_back(std::move(rec));
  return {v, std::move(probs)};
}

std::span<float> Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.bound) return n.bound->grad();
  if (n.grad.size() != n.owned.size()) n.grad.assign(n.owned.size(), 0.0f);
  return n.grad;
}

void Tape::backward(Var loss) {
  const Node& root = node(loss);
  if (root.value().size() != 1) {
    throw ValidationError("backward needs a scalar loss, got shape " + to_string(root.value().shape()));
  }
  for (Node& n : nodes_) {
    if (n.bound) {
      if (n.needs_grad) n.bound->zero_grad();
    } else {
      n.grad.clear();
    }
  }
  last_visits_ = 0;
  if (!root.needs_grad) return;
  grad_buffer(loss.id)[0] = 1.0f;

  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (it->output > loss.id) continue;
    const Node& out = nodes_[it->output];
    if (!out.needs_grad || (!out.bound && out.grad.empty())) continue;
    backward_record(*it);
    ++last_visits_;
  }
}

void Tape::backward_record(const Record& rec) {
  auto wants = [&](std::size_t i) { return nodes_[rec.inputs[i]].needs_grad; };
  auto gin = [&](std::size_t i) -> std::span<float> {
    return wants(i) ? grad_buffer(rec.inputs[i]) : std::span<float>{};
  };
  auto in_value = [&](std::size_t i) -> const Tensor& { return nodes_[rec.inputs[i]].value(); };
  const std::span<const float> gout = nodes_[rec.output].grad;

  switch (rec.kind) {
    case OpKind::Conv2d:
      kernels::conv2d_backward<float>(rec.conv, in_value(0).data(), in_value(1).data(), gout, gin(0),
                                      gin(1), gin(2));
      break;
    case OpKind::MaxPool2:
      if (wants(0)) kernels::maxpool2_backward<float>(rec.argmax, gout, gin(0));
      break;
    case OpKind::Relu:
      if (wants(0)) kernels::relu_backward<float>(in_value(0).data(), gout, gin(0));
      break;
    case OpKind::Dense:
      kernels::dense_backward<float>(rec.dense, in_value(0).data(), in_value(1).data(), gout, gin(0),
                                     gin(1), gin(2));
      break;
    case OpKind::Flatten:
      if (wants(0)) {
        auto g = gin(0);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += gout[i];
      }
      break;
    case OpKind::Concat: {
      const std::size_t rows = nodes_[rec.output].value().dim(0);
      const std::size_t width = nodes_[rec.output].value().dim(1);
      std::size_t offset = 0;
      for (std::size_t i = 0; i < rec.inputs.size(); ++i) {
        const std::size_t d = in_value(i).dim(1);
        if (wants(i)) {
          auto g = gin(i);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t k = 0; k < d; ++k) g[r * d + k] += gout[r * width + offset + k];
          }
        }
        offset += d;
      }
      break;
    }
    case OpKind::Scale:
      if (wants(0)) {
        auto g = gin(0);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += rec.factor * gout[i];
      }
      break;
    case OpKind::Add:
      for (std::size_t k = 0; k < 2; ++k) {
        if (!wants(k)) continue;
        auto g = gin(k);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += gout[i];
      }
      break;
    case OpKind::Sum:
      if (wants(0)) {
        auto g = gin(0);
        for (float& e : g) e += gout[0];
      }
      break;
    case OpKind::Dot:
      if (wants(0)) {
        auto g = gin(0);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += gout[0] * rec.saved[i];
      }
      break;
    case OpKind::HalfSumSquares:
      if (wants(0)) {
        auto g = gin(0);
        const auto x = in_value(0).data();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += gout[0] * x[i];
      }
      break;
    case OpKind::SoftmaxCrossEntropy:
      if (wants(0)) {
        auto g = gin(0);
        const std::size_t rows = rec.labels.size();
        const std::size_t classes = rec.saved.size() / rows;
        const double scale = static_cast<double>(gout[0]) / static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t k = 0; k < classes; ++k) {
            double d = rec.saved[r * classes + k];
            if (static_cast<int>(k) == rec.labels[r]) d -= 1.0;
            g[r * classes + k] += static_cast<float>(d * scale);
          }
        }
      }
      break;
  }
}

}  // namespace stnet
