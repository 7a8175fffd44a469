#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "stnet/kernels.hpp"
#include "stnet/tensor.hpp"

namespace stnet {

/// Handle to a value recorded on a Tape.
struct Var {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::size_t id = npos;

  bool valid() const { return id != npos; }
};

enum class OpKind {
  Conv2d,
  MaxPool2,
  Relu,
  Dense,
  Flatten,
  Concat,
  Scale,
  Add,
  Sum,
  Dot,
  HalfSumSquares,
  SoftmaxCrossEntropy,
};

/// Reverse-mode recorder. Every operation appends one record in execution
/// order, so the record list is already topologically sorted and backward is
/// a single reverse sweep.
///
/// Parameters are bound by reference: their storage is read in place and
/// backward() writes their gradients directly into Tensor::grad(). A bound
/// tensor must outlive the tape and must not be resized while bound.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  /// A leaf that never receives gradient.
  Var constant(Tensor value);
  /// A leaf bound to `param`; participates in backward iff param.requires_grad().
  Var parameter(Tensor& param);

  const Tensor& value(Var v) const;
  /// Gradient of the last backward() target w.r.t. `v` (empty if none flowed).
  std::span<const float> grad(Var v) const;

  Var conv2d(Var input, Var weight, Var bias);
  Var maxpool2(Var input);
  Var relu(Var input);
  Var dense(Var input, Var weight, Var bias);
  /// N×... → N×D.
  Var flatten(Var input);
  /// Concatenates N×D_i blocks along the feature axis, in argument order.
  Var concat(std::span<const Var> parts);
  Var scale(Var input, float factor);
  Var add(Var a, Var b);
  Var sum(Var input);
  /// Σ coeffs·input as a scalar, accumulated in double.
  Var dot(Var input, const Tensor& coeffs);
  /// ½ Σ input².
  Var half_sum_squares(Var input);

  struct LossOutput {
    Var loss;
    Tensor probs;
  };
  LossOutput softmax_cross_entropy(Var logits, std::span<const int> labels);

  void backward(Var loss);

  std::size_t record_count() const { return records_.size(); }
  std::size_t node_count() const { return nodes_.size(); }
  /// Debug hook: number of records the last backward() processed.
  std::size_t last_backward_visits() const { return last_visits_; }

 private:
  struct Node {
    Tensor owned;
    Tensor* bound = nullptr;
    bool needs_grad = false;
    std::vector<float> grad;

    const Tensor& value() const { return bound ? *bound : owned; }
  };

  struct Record {
    OpKind kind;
    std::vector<std::size_t> inputs;
    std::size_t output;
    kernels::ConvGeometry conv{};
    kernels::PoolGeometry pool{};
    kernels::DenseGeometry dense{};
    std::vector<std::uint32_t> argmax{};
    std::vector<int> labels{};
    std::vector<float> saved{};
    float factor = 1.0f;
  };

  const Node& node(Var v) const;
  Var push(Tensor value, bool needs_grad);
  std::span<float> grad_buffer(std::size_t id);
  void backward_record(const Record& rec);

  std::vector<Node> nodes_;
  std::vector<Record> records_;
  std::size_t last_visits_ = 0;
};

}  // namespace stnet
