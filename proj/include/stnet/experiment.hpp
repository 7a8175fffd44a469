#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stnet/corruptions.hpp"
#include "stnet/dataset.hpp"
#include "stnet/models.hpp"
#include "stnet/report.hpp"
#include "stnet/trainer.hpp"

namespace stnet {

enum class DatasetKind { Cifar10, PpmDir, NpyPair };

struct DatasetSource {
  DatasetKind kind = DatasetKind::Cifar10;
  std::vector<std::filesystem::path> paths;  // cifar10 batch files, or the ppm_dir root
  std::filesystem::path images, labels;      // npy_pair
  bool nhwc = true;                          // npy_pair image layout
};

/// Parsed experiment JSON. Relative paths are resolved against the config
/// file's directory.
struct ExperimentConfig {
  DatasetSource dataset;
  std::optional<std::pair<std::size_t, std::size_t>> resize;  // (h, w)
  std::size_t n_train = 0, n_test = 0;
  std::uint64_t split_seed = 0;
  std::vector<StreamSpec> streams;
  std::size_t num_classes = 10;
  std::vector<CorruptionSpec> train_corruptions, test_corruptions;
  TrainConfig train;

  NetworkSpec network_spec(ImageShape input) const;
};

/// Throws ConfigError naming the offending field; unknown keys are errors.
ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct PreparedData {
  Dataset train, test;
};

/// Loads, resizes, splits and corrupts the data as the config describes.
PreparedData prepare_data(const ExperimentConfig& config);

struct ExperimentOptions {
  bool write_checkpoint = false;
  /// Called after every epoch of every run.
  std::function<void(std::size_t run, const EpochReport&)> on_epoch;
};

/// R seeded runs, aggregated. When out_dir is non-empty, writes metrics.csv,
/// train_loss.svg, train_acc.svg, test_acc.svg and optionally checkpoint.bin
/// (parameters of the last run).
ExperimentReport run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                const ExperimentOptions& options = {});

inline constexpr std::string_view kPlotMetrics[] = {"train_loss", "train_acc", "test_acc"};

}  // namespace stnet
