#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stnet/adam.hpp"
#include "stnet/dataset.hpp"
#include "stnet/models.hpp"

namespace stnet {

struct TrainConfig {
  std::size_t epochs = 100;
  AdamConfig adam;
  std::size_t batch_size = 32;
  std::size_t runs = 10;
  std::uint64_t base_seed = 0;
  /// Run r uses seed base_seed + r·seed_stride; 0 forces every run onto one seed.
  std::uint64_t seed_stride = 1;

  void validate() const;
  std::uint64_t run_seed(std::size_t run) const { return base_seed + run * seed_stride; }
};

/// Per-epoch curves of one seeded run. Values are stored at 1e-6 resolution,
/// the precision of the metrics CSV.
struct RunMetrics {
  std::uint64_t seed = 0;
  std::vector<double> train_loss;
  std::vector<double> train_accuracy;
  std::vector<double> test_accuracy;

  std::size_t epochs() const { return train_loss.size(); }
};

struct EpochReport {
  std::size_t epoch;
  double train_loss, train_accuracy, test_accuracy;
};

using EpochCallback = std::function<void(const EpochReport&)>;

/// Index of the largest entry in each row; ties go to the lowest index.
std::vector<int> argmax_rows(const Tensor& probs);

/// Fraction of samples whose argmax prediction equals the label.
double evaluate_accuracy(StreamingNetwork& model, const Dataset& data, std::size_t batch_size = 64);

/// Minibatch training: each epoch draws a permutation seeded by (run_seed,
/// epoch), runs forward/backward/Adam over every batch including the final
/// partial one, then scores the full test set. Train loss and accuracy are
/// sample-weighted averages over the epoch's batches.
RunMetrics train(StreamingNetwork& model, const Dataset& train_set, const Dataset& test_set,
                 const TrainConfig& config, std::uint64_t run_seed, const EpochCallback& on_epoch = {});

/// Rounds to the 6-decimal grid used for stored metrics.
double quantize_metric(double value);

}  // namespace stnet
