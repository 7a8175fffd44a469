#include "stnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stnet/errors.hpp"
#include "stnet/rng.hpp"
#include "stnet/tape.hpp"

namespace stnet {

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (runs < 1) throw ValidationError("runs must be >= 1");
  adam.validate();
}

double quantize_metric(double value) { return std::round(value * 1e6) / 1e6; }

std::vector<int> argmax_rows(const Tensor& probs) {
  const std::size_t rows = probs.dim(0), classes = probs.dim(1);
  std::vector<int> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* row = probs.data().data() + r * classes;
    out[r] = static_cast<int>(std::max_element(row, row + classes) - row);
  }
  return out;
}

double evaluate_accuracy(StreamingNetwork& model, const Dataset& data, std::size_t batch_size) {
  if (data.empty()) throw ValidationError("cannot evaluate accuracy on an empty dataset");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto predicted = argmax_rows(model.predict(data.gather_images(idx)));
    for (std::size_t i = 0; i < idx.size(); ++i) correct += predicted[i] == data.labels[idx[i]];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

RunMetrics train(StreamingNetwork& model, const Dataset& train_set, const Dataset& test_set,
                 const TrainConfig& config, std::uint64_t run_seed, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) throw ValidationError("training set is empty");
  if (test_set.empty()) throw ValidationError("test set is empty");
  if (train_set.image_shape() != model.spec().input) {
    throw ShapeError("training images are " + to_string(train_set.images.shape()) +
                     " but the model expects per-image shape " + to_string(model.spec().input.batch_shape(1)));
  }

  model.set_requires_grad(true);
  AdamOptimizer optimizer(model.parameters(), config.adam);
  RunMetrics metrics;
  metrics.seed = run_seed;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(mix_seed(run_seed, epoch));
    const auto order = permutation(train_set.size(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      std::vector<int> labels(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) labels[i] = train_set.labels[idx[i]];

      Tape tape;
      auto fwd = model.forward(tape, train_set.gather_images(idx));
      auto loss = tape.softmax_cross_entropy(fwd.logits, labels);
      tape.backward(loss.loss);
      optimizer.step();

      loss_sum += static_cast<double>(tape.value(loss.loss)[0]) * static_cast<double>(idx.size());
      const auto predicted = argmax_rows(loss.probs);
      for (std::size_t i = 0; i < idx.size(); ++i) correct += predicted[i] == labels[i];
    }

    const double n = static_cast<double>(train_set.size());
    EpochReport report{epoch + 1, quantize_metric(loss_sum / n), quantize_metric(static_cast<double>(correct) / n),
                       quantize_metric(evaluate_accuracy(model, test_set))};
    metrics.train_loss.push_back(report.train_loss);
    metrics.train_accuracy.push_back(report.train_accuracy);
    metrics.test_accuracy.push_back(report.test_accuracy);
    if (on_epoch) on_epoch(report);
  }
  return metrics;
}

}  // namespace stnet
