// stnet command-line front end.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stnet/checkpoint.hpp"
#include "stnet/corruptions.hpp"
#include "stnet/data_io.hpp"
#include "stnet/errors.hpp"
#include "stnet/experiment.hpp"
#include "stnet/gradcheck.hpp"
#include "stnet/report.hpp"
#include "stnet/slicing.hpp"

namespace fs = std::filesystem;
using namespace stnet;

namespace {

int cmd_train(const std::string& config_path, const std::string& out, bool checkpoint, bool quiet) {
  const ExperimentConfig config = load_experiment_config(config_path);
  ExperimentOptions options;
  options.write_checkpoint = checkpoint;
  if (!quiet) {
    options.on_epoch = [](std::size_t run, const EpochReport& e) {
      std::fprintf(stderr, "run %zu epoch %zu  loss %.6f  train_acc %.6f  test_acc %.6f\n", run, e.epoch,
                   e.train_loss, e.train_accuracy, e.test_accuracy);
    };
  }
  const ExperimentReport report = run_experiment(config, out, options);
  const std::size_t last = report.epochs() - 1;
  std::printf("final test_acc mean %.6f std %.6f over %zu runs\n", report.test_accuracy.mean[last],
              report.test_accuracy.std[last], report.runs.size());
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& config_path) {
  const ExperimentConfig config = load_experiment_config(config_path);
  const PreparedData data = prepare_data(config);
  StreamingNetwork model = build_streaming_network(config.network_spec(data.test.image_shape()), 0);
  model.load_parameters(load_checkpoint(checkpoint_path));
  std::printf("%.6f\n", evaluate_accuracy(model, data.test));
  return 0;
}

int cmd_slice(std::size_t n, const std::string& in, const std::string& out) {
  const Tensor image = read_ppm(in);
  const SliceStack stack = decompose(image, SliceSpec::uniform(n));
  fs::create_directories(out);
  for (std::size_t i = 0; i < stack.slices.size(); ++i) {
    write_ppm(fs::path(out) / ("slice_" + std::to_string(i) + ".ppm"), stack.slices[i]);
  }
  return 0;
}

int cmd_corrupt(const CorruptionSpec& spec, const std::string& in, const std::string& out) {
  spec.validate();
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(in)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("no .ppm files in " + in);
  fs::create_directories(out);
  const std::vector<CorruptionSpec> pipeline{spec};
  for (std::size_t i = 0; i < files.size(); ++i) {
    write_ppm(fs::path(out) / files[i].filename(), apply_pipeline(read_ppm(files[i]), pipeline, i));
  }
  return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
  bool ok = true;
  for (const auto& r : run_gradcheck_suite(seed)) {
    std::printf("%-22s %-20s max_rel_err %.3e  %s\n", r.primitive.c_str(), r.shape.c_str(), r.max_rel_error,
                r.passed ? "ok" : "FAIL");
    ok = ok && r.passed;
  }
  std::printf("%s\n", ok ? "gradcheck passed" : "gradcheck FAILED");
  return ok ? 0 : 1;
}

int cmd_report(const std::string& csv, const std::string& svg, const std::string& metric) {
  const auto bytes = read_file_bytes(csv);
  const ExperimentReport report = ExperimentReport::aggregate(parse_metrics_csv(std::string(bytes.begin(), bytes.end())));
  emit_svg_plot(report, metric, svg);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stnet: streaming CNN training and evaluation"};
  app.require_subcommand(1);

  std::string config, out, checkpoint_path, in, csv, svg, metric;
  bool write_checkpoint = false, quiet = false;
  std::size_t n = 1;
  std::uint64_t seed = 0;

  auto* train = app.add_subcommand("train", "run the experiment described by a JSON config");
  train->add_option("--config", config)->required()->check(CLI::ExistingFile);
  train->add_option("--out", out)->required();
  train->add_flag("--checkpoint", write_checkpoint, "write checkpoint.bin of the last run");
  train->add_flag("-q,--quiet", quiet, "suppress per-epoch progress");

  auto* eval = app.add_subcommand("eval", "test accuracy of a checkpoint");
  eval->add_option("--checkpoint", checkpoint_path)->required()->check(CLI::ExistingFile);
  eval->add_option("--config", config)->required()->check(CLI::ExistingFile);

  auto* slice = app.add_subcommand("slice", "write the intensity slices of a PPM image");
  slice->add_option("--n", n)->required()->check(CLI::Range(1, 256));
  slice->add_option("--in", in)->required()->check(CLI::ExistingFile);
  slice->add_option("--out", out)->required();

  auto* corrupt = app.add_subcommand("corrupt", "corrupt every PPM image in a directory");
  std::string kind_name;
  double p = -1, sigma = -1, amount = -1, gamma = -1;
  std::size_t k = 0;
  corrupt->add_option("--kind", kind_name)->required();
  corrupt->add_option("--p", p);
  corrupt->add_option("--sigma", sigma);
  corrupt->add_option("--amount", amount);
  corrupt->add_option("--k", k);
  corrupt->add_option("--gamma", gamma);
  corrupt->add_option("--seed", seed);
  corrupt->add_option("--in", in)->required()->check(CLI::ExistingDirectory);
  corrupt->add_option("--out", out)->required();

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every primitive");
  gradcheck->add_option("--seed", seed);

  auto* report = app.add_subcommand("report", "plot one metric of a metrics.csv");
  report->add_option("--csv", csv)->required()->check(CLI::ExistingFile);
  report->add_option("--svg", svg)->required();
  report->add_option("--metric", metric)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(config, out, write_checkpoint, quiet);
    if (*eval) return cmd_eval(checkpoint_path, config);
    if (*slice) return cmd_slice(n, in, out);
    if (*gradcheck) return cmd_gradcheck(seed);
    if (*report) return cmd_report(csv, svg, metric);
    if (*corrupt) {
      auto kind = parse_corruption_kind(kind_name);
      if (!kind) throw ValidationError("unknown corruption kind '" + kind_name + "'");
      const std::string param(parameter_name(*kind));
      auto* opt = corrupt->get_option("--" + param);
      if (opt->count() == 0) throw ValidationError(kind_name + " needs --" + param);
      CorruptionSpec spec{*kind, 0.0, seed};
      if (param == "p") spec.value = p;
      else if (param == "sigma") spec.value = sigma;
      else if (param == "amount") spec.value = amount;
      else if (param == "k") spec.value = static_cast<double>(k);
      else spec.value = gamma;
      return cmd_corrupt(spec, in, out);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "stnet: %s\n", e.what());
    return 2;
  }
  return 0;
}
