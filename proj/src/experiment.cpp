#include "stnet/experiment.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>
#include "stnet/checkpoint.hpp"
#include "stnet/data_io.hpp"
#include "stnet/errors.hpp"

namespace stnet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(where + "." + key + ": unknown key");
    }
  }
}

const json& require(const json& obj, const std::string& where, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(where + "." + key + ": required field missing");
  return *it;
}

std::size_t as_count(const json& v, const std::string& field) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw ConfigError(field + ": expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field + ": expected a number");
  return v.get<double>();
}

std::string as_string(const json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError(field + ": expected a string");
  return v.get<std::string>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

DatasetSource parse_dataset(const json& j, const fs::path& base) {
  const std::string where = "dataset";
  check_keys(j, where, {"kind", "path", "paths", "images", "labels", "layout"});
  DatasetSource src;
  const std::string kind = as_string(require(j, where, "kind"), where + ".kind");
  if (kind == "cifar10") {
    src.kind = DatasetKind::Cifar10;
    if (j.contains("paths")) {
      const json& paths = j.at("paths");
      if (!paths.is_array() || paths.empty()) throw ConfigError("dataset.paths: expected a non-empty array");
      for (const auto& p : paths) src.paths.push_back(resolve(base, as_string(p, "dataset.paths[]")));
    } else {
      src.paths.push_back(resolve(base, as_string(require(j, where, "path"), "dataset.path")));
    }
  } else if (kind == "ppm_dir") {
    src.kind = DatasetKind::PpmDir;
    src.paths.push_back(resolve(base, as_string(require(j, where, "path"), "dataset.path")));
  } else if (kind == "npy_pair") {
    src.kind = DatasetKind::NpyPair;
    src.images = resolve(base, as_string(require(j, where, "images"), "dataset.images"));
    src.labels = resolve(base, as_string(require(j, where, "labels"), "dataset.labels"));
    if (j.contains("layout")) {
      const std::string layout = as_string(j.at("layout"), "dataset.layout");
      if (layout != "nhwc" && layout != "nchw") throw ConfigError("dataset.layout: expected nhwc or nchw");
      src.nhwc = layout == "nhwc";
    }
  } else {
    throw ConfigError("dataset.kind: unknown dataset kind '" + kind + "' (cifar10, ppm_dir, npy_pair)");
  }
  return src;
}

std::vector<CorruptionSpec> parse_corruption_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of corruption specs");
  std::vector<CorruptionSpec> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string at = where + "[" + std::to_string(i) + "]";
    const json& item = j[i];
    if (!item.is_object()) throw ConfigError(at + ": expected an object");
    const std::string kind_name = as_string(require(item, at, "kind"), at + ".kind");
    auto kind = parse_corruption_kind(kind_name);
    if (!kind) throw ConfigError(at + ".kind: unknown corruption '" + kind_name + "'");
    const std::string param(parameter_name(*kind));
    for (const auto& [key, _] : item.items()) {
      if (key != "kind" && key != "seed" && key != param) {
        throw ConfigError(at + "." + key + ": unknown key for " + kind_name + " (expects '" + param + "')");
      }
    }
    CorruptionSpec spec;
    spec.kind = *kind;
    spec.value = as_number(require(item, at, param.c_str()), at + "." + param);
    if (item.contains("seed")) spec.seed = as_count(item.at("seed"), at + ".seed");
    try {
      spec.validate();
    } catch (const ValidationError& e) {
      throw ConfigError(at + "." + param + ": " + e.what());
    }
    out.push_back(spec);
  }
  return out;
}

TrainConfig parse_train(const json& j) {
  check_keys(j, "train", {"epochs", "lr", "beta1", "beta2", "eps", "batch_size", "runs", "base_seed", "seed_stride"});
  TrainConfig t;
  if (j.contains("epochs")) t.epochs = as_count(j.at("epochs"), "train.epochs");
  if (j.contains("lr")) t.adam.learning_rate = as_number(j.at("lr"), "train.lr");
  if (j.contains("beta1")) t.adam.beta1 = as_number(j.at("beta1"), "train.beta1");
  if (j.contains("beta2")) t.adam.beta2 = as_number(j.at("beta2"), "train.beta2");
  if (j.contains("eps")) t.adam.epsilon = as_number(j.at("eps"), "train.eps");
  if (j.contains("batch_size")) t.batch_size = as_count(j.at("batch_size"), "train.batch_size");
  if (j.contains("runs")) t.runs = as_count(j.at("runs"), "train.runs");
  if (j.contains("base_seed")) t.base_seed = as_count(j.at("base_seed"), "train.base_seed");
  if (j.contains("seed_stride")) t.seed_stride = as_count(j.at("seed_stride"), "train.seed_stride");
  try {
    t.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
  return t;
}

}  // namespace

NetworkSpec ExperimentConfig::network_spec(ImageShape input) const {
  NetworkSpec spec;
  spec.streams = streams;
  spec.slices = SliceSpec::uniform(streams.size());
  spec.num_classes = num_classes;
  spec.input = input;
  return spec;
}

ExperimentConfig parse_experiment_config(std::string_view json_text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  check_keys(root, "config", {"dataset", "resize", "split", "model", "corruption", "train"});

  ExperimentConfig cfg;
  cfg.dataset = parse_dataset(require(root, "config", "dataset"), base_dir);

  if (root.contains("resize")) {
    const json& r = root.at("resize");
    check_keys(r, "resize", {"h", "w"});
    const std::size_t h = as_count(require(r, "resize", "h"), "resize.h");
    const std::size_t w = as_count(require(r, "resize", "w"), "resize.w");
    if (h < 1 || w < 1) throw ConfigError("resize: h and w must be >= 1");
    cfg.resize = {h, w};
  }

  const json& s = require(root, "config", "split");
  check_keys(s, "split", {"n_train", "n_test", "seed"});
  cfg.n_train = as_count(require(s, "split", "n_train"), "split.n_train");
  cfg.n_test = as_count(require(s, "split", "n_test"), "split.n_test");
  if (s.contains("seed")) cfg.split_seed = as_count(s.at("seed"), "split.seed");

  const json& m = require(root, "config", "model");
  check_keys(m, "model", {"streams", "num_classes"});
  const json& streams = require(m, "model", "streams");
  if (!streams.is_array() || streams.empty()) throw ConfigError("model.streams: expected a non-empty array");
  for (std::size_t i = 0; i < streams.size(); ++i) {
    const std::string at = "model.streams[" + std::to_string(i) + "]";
    check_keys(streams[i], at, {"arch", "scale"});
    const std::string arch_name = as_string(require(streams[i], at, "arch"), at + ".arch");
    auto arch = parse_stream_arch(arch_name);
    if (!arch) throw ConfigError(at + ".arch: unknown architecture '" + arch_name + "'");
    StreamSpec spec{*arch, 1};
    if (streams[i].contains("scale")) spec.scale = as_count(streams[i].at("scale"), at + ".scale");
    if (spec.scale < 1) throw ConfigError(at + ".scale: must be >= 1");
    cfg.streams.push_back(spec);
  }
  cfg.num_classes = as_count(require(m, "model", "num_classes"), "model.num_classes");
  if (cfg.num_classes < 1) throw ConfigError("model.num_classes: must be >= 1");

  if (root.contains("corruption")) {
    const json& c = root.at("corruption");
    check_keys(c, "corruption", {"train", "test"});
    if (c.contains("train")) cfg.train_corruptions = parse_corruption_list(c.at("train"), "corruption.train");
    if (c.contains("test")) cfg.test_corruptions = parse_corruption_list(c.at("test"), "corruption.test");
  }

  cfg.train = parse_train(root.contains("train") ? root.at("train") : json::object());
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file_bytes(path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return parse_experiment_config(std::string(bytes.begin(), bytes.end()), path.parent_path());
}

PreparedData prepare_data(const ExperimentConfig& config) {
  auto must_exist = [](const fs::path& p, const char* field) {
    if (!fs::exists(p)) throw ConfigError(std::string(field) + ": path does not exist: " + p.string());
  };
  Dataset all;
  switch (config.dataset.kind) {
    case DatasetKind::Cifar10:
      for (const auto& p : config.dataset.paths) must_exist(p, "dataset.paths");
      all = load_cifar10_files(config.dataset.paths);
      break;
    case DatasetKind::PpmDir:
      must_exist(config.dataset.paths.front(), "dataset.path");
      all = load_ppm_dir(config.dataset.paths.front());
      break;
    case DatasetKind::NpyPair:
      must_exist(config.dataset.images, "dataset.images");
      must_exist(config.dataset.labels, "dataset.labels");
      all = dataset_from_npy(parse_npy(read_file_bytes(config.dataset.images)),
                             parse_npy(read_file_bytes(config.dataset.labels)), config.dataset.nhwc,
                             config.num_classes);
      break;
  }
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (static_cast<std::size_t>(all.labels[i]) >= config.num_classes) {
      throw ConfigError("model.num_classes: dataset label " + std::to_string(all.labels[i]) + " exceeds " +
                        std::to_string(config.num_classes) + " classes");
    }
  }
  while (all.class_names.size() < config.num_classes) all.class_names.push_back("class" + std::to_string(all.class_names.size()));

  if (config.n_train + config.n_test > all.size()) {
    throw ConfigError("split: needs " + std::to_string(config.n_train + config.n_test) + " samples, dataset has " +
                      std::to_string(all.size()));
  }
  auto [train_idx, test_idx] = split_indices(all.size(), config.n_train, config.n_test, config.split_seed);
  PreparedData data{all.subset(train_idx), all.subset(test_idx)};
  if (config.resize) {
    data.train = resize_dataset(data.train, config.resize->first, config.resize->second);
    data.test = resize_dataset(data.test, config.resize->first, config.resize->second);
  }
  apply_pipeline_batch(data.train.images, config.train_corruptions);
  apply_pipeline_batch(data.test.images, config.test_corruptions);
  return data;
}

ExperimentReport run_experiment(const ExperimentConfig& config, const fs::path& out_dir,
                                const ExperimentOptions& options) {
  PreparedData data = prepare_data(config);
  const NetworkSpec spec = config.network_spec(data.train.image_shape());

  std::vector<RunMetrics> runs;
  std::vector<NamedTensor> last_params;
  for (std::size_t r = 0; r < config.train.runs; ++r) {
    const std::uint64_t seed = config.train.run_seed(r);
    StreamingNetwork model = build_streaming_network(spec, seed);
    EpochCallback cb;
    if (options.on_epoch) cb = [&](const EpochReport& e) { options.on_epoch(r, e); };
    runs.push_back(train(model, data.train, data.test, config.train, seed, cb));
    if (r + 1 == config.train.runs && options.write_checkpoint) last_params = model.named_parameters();
  }
  ExperimentReport report = ExperimentReport::aggregate(std::move(runs));

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    emit_csv(report, out_dir / "metrics.csv");
    for (std::string_view metric : kPlotMetrics) {
      emit_svg_plot(report, metric, out_dir / (std::string(metric) + ".svg"));
    }
    if (options.write_checkpoint) save_checkpoint(out_dir / "checkpoint.bin", last_params);
  }
  return report;
}

}  // namespace stnet
