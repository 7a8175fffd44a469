#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include "helpers.hpp"
#include "stnet/adam.hpp"
#include "stnet/checkpoint.hpp"
#include "stnet/data_io.hpp"
#include "stnet/errors.hpp"
#include "stnet/experiment.hpp"
#include "stnet/report.hpp"
#include "stnet/trainer.hpp"

using namespace stnet;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunMetrics curve(std::vector<double> loss, std::vector<double> tr, std::vector<double> te) {
  RunMetrics m;
  m.train_loss = std::move(loss);
  m.train_accuracy = std::move(tr);
  m.test_accuracy = std::move(te);
  return m;
}

// Writes the quadrant fixture as a ppm_dir tree and returns a config using it.
std::string fixture_config(const fs::path& root, std::size_t epochs, std::size_t runs, const std::string& extra_train) {
  Dataset d = test::quadrant_dataset(6, 2, 16, 3);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const fs::path dir = root / "data" / d.class_names[d.labels[i]];
    fs::create_directories(dir);
    char name[32];
    std::snprintf(name, sizeof name, "img%03zu.ppm", i);
    write_ppm(dir / name, d.image(i));
  }
  return R"({
    "dataset": {"kind": "ppm_dir", "path": "data"},
    "split": {"n_train": 8, "n_test": 4, "seed": 1},
    "model": {"streams": [{"arch": "simple_cnn"}, {"arch": "simple_cnn"}], "num_classes": 2},
    "corruption": {"test": [{"kind": "zero_noise", "p": 0.1, "seed": 4}]},
    "train": {"epochs": )" +
         std::to_string(epochs) + R"(, "runs": )" + std::to_string(runs) + R"(, "batch_size": 4, "lr": 0.001)" +
         extra_train + "}\n}";
}

}  // namespace

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> theta{0.5, -1.0}, g{0.0, 0.0};
  AdamState<double> st;
  adam_step<double>(theta, g, st, AdamConfig{});
  EXPECT_EQ(theta, (std::vector<double>{0.5, -1.0}));
  EXPECT_EQ(st.m, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(st.v, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(st.t, 1u);
}

TEST(Adam, SingleStepMatchesHandEvaluation) {
  std::vector<double> theta{0.0}, g{1.0};
  AdamState<double> st;
  const AdamConfig c{};
  adam_step<double>(theta, g, st, c);
  const double m = (1 - c.beta1) * 1.0, v = (1 - c.beta2) * 1.0;
  const double mhat = m / (1 - c.beta1), vhat = v / (1 - c.beta2);
  EXPECT_NEAR(theta[0], -c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon), 1e-12);
  EXPECT_NEAR(theta[0], -1e-4 / (1 + 1e-8), 1e-12);
}

TEST(Adam, TwoStepsMatchRecurrence) {
  const AdamConfig c{0.01, 0.9, 0.999, 1e-8};
  std::vector<double> theta{1.0};
  AdamState<double> st;
  double m = 0, v = 0, ref = 1.0;
  for (int t = 1; t <= 2; ++t) {
    const double g = 2.0 * ref;  // d/dθ θ²
    std::vector<double> grad{2.0 * theta[0]};
    adam_step<double>(theta, grad, st, c);
    m = c.beta1 * m + (1 - c.beta1) * g;
    v = c.beta2 * v + (1 - c.beta2) * g * g;
    ref -= c.learning_rate * (m / (1 - std::pow(c.beta1, t))) / (std::sqrt(v / (1 - std::pow(c.beta2, t))) + c.epsilon);
    EXPECT_NEAR(theta[0], ref, 1e-12);
  }
}

TEST(Adam, DefaultsAndValidation) {
  const AdamConfig c{};
  EXPECT_EQ(c.learning_rate, 1e-4);
  EXPECT_EQ(c.beta1, 0.99);
  EXPECT_EQ(c.beta2, 0.9);
  EXPECT_EQ(c.epsilon, 1e-8);
  std::vector<double> theta{0.0, 1.0}, g{1.0};
  AdamState<double> st;
  EXPECT_THROW(adam_step<double>(theta, g, st, c), ShapeError);
  EXPECT_THROW((AdamConfig{1e-3, 1.0, 0.9, 1e-8}).validate(), ValidationError);
  EXPECT_THROW((AdamConfig{1e-3, 0.9, 0.9, 0.0}).validate(), ValidationError);
}

TEST(TrainConfig, DefaultsAndInvariants) {
  const TrainConfig t{};
  EXPECT_EQ(t.epochs, 100u);
  EXPECT_EQ(t.batch_size, 32u);
  EXPECT_EQ(t.runs, 10u);
  EXPECT_EQ(t.run_seed(3), t.base_seed + 3);
  TrainConfig bad = t;
  bad.epochs = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Evaluate, ArgmaxTiesGoToLowestIndex) {
  Tensor p({2, 3}, {0.4f, 0.4f, 0.2f, 0.1f, 0.45f, 0.45f});
  EXPECT_EQ(argmax_rows(p), (std::vector<int>{0, 1}));
}

TEST(Evaluate, FreshModelIsNearChance) {
  Rng rng(1);
  Dataset d;
  d.images = test::random_image({1000, 3, 16, 16}, rng);
  for (int i = 0; i < 1000; ++i) d.labels.push_back(i % 10);
  d.class_names.assign(10, "k");
  auto net = build_streaming_network(NetworkSpec::homogeneous({}, 1, 10, {3, 16, 16}), 2);
  const double acc = evaluate_accuracy(net, d, 128);
  EXPECT_NEAR(acc, 0.1, 0.05);
  EXPECT_EQ(evaluate_accuracy(net, d, 128), acc);
  EXPECT_EQ(evaluate_accuracy(net, d, 7), acc);  // batch-size invariant
  EXPECT_THROW(evaluate_accuracy(net, Dataset{}, 8), ValidationError);
}

TEST(Evaluate, PerfectPredictorScoresOne) {
  Rng rng(2);
  auto net = build_streaming_network(NetworkSpec::homogeneous({}, 1, 3, {3, 16, 16}), 3);
  Dataset d;
  d.images = test::random_image({30, 3, 16, 16}, rng);
  d.class_names.assign(3, "k");
  d.labels = argmax_rows(net.predict(d.images));
  EXPECT_EQ(evaluate_accuracy(net, d), 1.0);
}

TEST(Train, DeterministicAndLossFalls) {
  Dataset d = test::quadrant_dataset(10, 4, 16, 7);
  const NetworkSpec spec = NetworkSpec::homogeneous({}, 3, 4, {3, 16, 16});
  TrainConfig cfg;
  cfg.epochs = 12;
  cfg.batch_size = 8;
  auto run = [&] {
    auto net = build_streaming_network(spec, 11);
    return train(net, d, d, cfg, 5);
  };
  const RunMetrics a = run(), b = run();
  EXPECT_EQ(a.train_loss, b.train_loss);
  EXPECT_EQ(a.train_accuracy, b.train_accuracy);
  EXPECT_EQ(a.test_accuracy, b.test_accuracy);
  ASSERT_EQ(a.epochs(), 12u);
  double early = 0, late = 0;
  for (int e = 0; e < 3; ++e) early += a.train_loss[e];
  for (int e = 9; e < 12; ++e) late += a.train_loss[e];
  EXPECT_GT(early, 4 * late);
  for (double v : a.train_accuracy) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Train, RejectsEmptyOrMismatchedData) {
  Dataset d = test::quadrant_dataset(2, 2, 16, 1);
  auto net = build_streaming_network(NetworkSpec::homogeneous({}, 1, 2, {3, 16, 16}), 1);
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(train(net, Dataset{}, d, cfg, 0), ValidationError);
  EXPECT_THROW(train(net, d, Dataset{}, cfg, 0), ValidationError);
  Dataset big = test::quadrant_dataset(2, 2, 32, 1);
  EXPECT_THROW(train(net, big, big, cfg, 0), ShapeError);
}

TEST(Report, MeanAndSampleStd) {
  auto r = ExperimentReport::aggregate({curve({1, 2}, {0.5, 1}, {0, 1}), curve({3, 2}, {0.5, 0}, {1, 1})});
  EXPECT_EQ(r.train_loss.mean, (std::vector<double>{2, 2}));
  EXPECT_NEAR(r.train_loss.std[0], std::sqrt(2.0), 1e-15);
  EXPECT_EQ(r.train_loss.std[1], 0.0);
  EXPECT_EQ(r.epochs(), 2u);
  auto single = ExperimentReport::aggregate({curve({1}, {1}, {1})});
  EXPECT_EQ(single.test_accuracy.std, (std::vector<double>{0.0}));
  EXPECT_THROW(ExperimentReport::aggregate({curve({1}, {1}, {1}), curve({1, 2}, {1, 1}, {1, 1})}), ValidationError);
  EXPECT_THROW(r.summary("f1"), ValidationError);
}

TEST(Report, CsvSchema) {
  auto one = ExperimentReport::aggregate({curve({0.5}, {0.25}, {0.125})});
  EXPECT_EQ(format_csv(one), "run,epoch,train_loss,train_acc,test_acc\n0,1,0.500000,0.250000,0.125000\n");
  auto r = ExperimentReport::aggregate({curve({1, 2, 3}, {0, 0, 0}, {0, 0, 0}), curve({1, 2, 3}, {0, 0, 0}, {0, 0, 0})});
  const std::string csv = format_csv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 3);
  EXPECT_EQ(format_csv(r), csv);
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  auto runs = parse_metrics_csv(csv);
  ASSERT_EQ(runs.size(), 2u);
  EXPECT_EQ(runs[1].train_loss, (std::vector<double>{1, 2, 3}));
  test::TempDir dir("csv");
  EXPECT_THROW(emit_csv(r, dir.path() / "missing" / "x.csv"), IoError);
}

TEST(Report, SvgPlot) {
  auto r = ExperimentReport::aggregate(
      {curve({2, 1, 0.5, 0.25}, {0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}), curve({2, 1.5, 1, 0.5}, {0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0})});
  const std::string svg = render_svg_plot(r, "train_loss");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  std::smatch m;
  ASSERT_TRUE(std::regex_search(svg, m, std::regex("<polyline class=\"mean\"[^>]*points=\"([^\"]*)\"")));
  const std::string pts = m[1];
  EXPECT_EQ(std::count(pts.begin(), pts.end(), ','), 4);
  EXPECT_NE(svg.find("std-band"), std::string::npos);
  EXPECT_NE(svg.find(">epoch<"), std::string::npos);
  EXPECT_NE(svg.find("train loss"), std::string::npos);

  const std::string flat = render_svg_plot(r, "train_acc");
  ASSERT_TRUE(std::regex_search(flat, m, std::regex("<polyline class=\"mean\"[^>]*points=\"([^\"]*)\"")));
  std::set<std::string> ys;
  std::istringstream in(m[1].str());
  std::string pt;
  while (in >> pt) ys.insert(pt.substr(pt.find(',') + 1));
  EXPECT_EQ(ys.size(), 1u);
  EXPECT_THROW(render_svg_plot(r, "precision"), ValidationError);
}

TEST(Config, EmptyTrainSectionGivesDefaults) {
  auto c = parse_experiment_config(R"({"dataset": {"kind": "cifar10", "path": "x.bin"},
    "split": {"n_train": 1, "n_test": 1}, "model": {"streams": [{"arch": "simple_cnn"}], "num_classes": 10},
    "train": {}})");
  EXPECT_EQ(c.train.adam.learning_rate, 1e-4);
  EXPECT_EQ(c.train.adam.beta1, 0.99);
  EXPECT_EQ(c.train.adam.beta2, 0.9);
  EXPECT_EQ(c.train.adam.epsilon, 1e-8);
  EXPECT_EQ(c.train.epochs, 100u);
  EXPECT_EQ(c.train.runs, 10u);
}

TEST(Config, ErrorsNameTheField) {
  auto expect_field = [](const std::string& json, const std::string& field) {
    try {
      parse_experiment_config(json);
      ADD_FAILURE() << "accepted: " << json;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  const std::string ds = R"("dataset": {"kind": "cifar10", "path": "x"})";
  const std::string sp = R"("split": {"n_train": 1, "n_test": 1})";
  const std::string md = R"("model": {"streams": [{"arch": "simple_cnn"}], "num_classes": 10})";
  expect_field("{" + ds + "," + sp + "," + md + R"(, "optimizer": {}})", "config.optimizer");
  expect_field("{" + ds + "," + sp + "," + md + R"(, "train": {"epochs": 0}})", "train");
  expect_field("{" + ds + "," + sp + "," + md + R"(, "train": {"lr": "fast"}})", "train.lr");
  expect_field("{" + ds + "," + sp + R"(, "model": {"streams": [{"arch": "resnet50"}], "num_classes": 10}})",
               "model.streams[0].arch");
  expect_field("{" + ds + "," + md + "}", "config.split");
  expect_field("{" + ds + "," + sp + "," + md + R"(, "corruption": {"test": [{"kind": "zero_noise", "sigma": 1}]}})",
               "corruption.test[0].sigma");
  expect_field("{" + ds + "," + sp + "," + md + R"(, "corruption": {"test": [{"kind": "zero_noise", "p": 2}]}})",
               "corruption.test[0].p");
  expect_field(R"({"dataset": {"kind": "lmdb"},)" + sp + "," + md + "}", "dataset.kind");
  expect_field("{not json", "config");
}

TEST(Config, MissingDatasetPath) {
  auto c = parse_experiment_config(R"({"dataset": {"kind": "ppm_dir", "path": "nowhere"},
    "split": {"n_train": 1, "n_test": 1}, "model": {"streams": [{"arch": "simple_cnn"}], "num_classes": 2}})",
                                   "/definitely/not/here");
  try {
    prepare_data(c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("dataset.path"), std::string::npos) << e.what();
  }
}

TEST(Experiment, ArtifactsDeterminismAndAggregation) {
  test::TempDir dir("exp");
  const fs::path cfg_path = dir.path() / "exp.json";
  write_text_file(cfg_path, fixture_config(dir.path(), 3, 2, ""));
  const ExperimentConfig cfg = load_experiment_config(cfg_path);
  const ExperimentReport r = run_experiment(cfg, dir.path() / "out1", {true});
  run_experiment(cfg, dir.path() / "out2");

  ASSERT_EQ(r.runs.size(), 2u);
  EXPECT_EQ(r.runs[0].seed, 0u);
  EXPECT_EQ(r.runs[1].seed, 1u);
  const std::string csv = slurp(dir.path() / "out1" / "metrics.csv");
  EXPECT_EQ(csv, slurp(dir.path() / "out2" / "metrics.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 3);
  for (const char* f : {"train_loss.svg", "train_acc.svg", "test_acc.svg", "checkpoint.bin"}) {
    EXPECT_TRUE(fs::exists(dir.path() / "out1" / f)) << f;
  }
  EXPECT_FALSE(fs::exists(dir.path() / "out2" / "checkpoint.bin"));

  // Independent pass over the CSV.
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::map<int, std::vector<std::array<double, 3>>> byEpoch;
  while (std::getline(in, line)) {
    int run, epoch;
    double a, b, c;
    ASSERT_EQ(std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf", &run, &epoch, &a, &b, &c), 5);
    byEpoch[epoch].push_back({a, b, c});
  }
  for (auto& [epoch, rows] : byEpoch) {
    const MetricSummary* s[3] = {&r.train_loss, &r.train_accuracy, &r.test_accuracy};
    for (int k = 0; k < 3; ++k) {
      double mean = 0;
      for (auto& row : rows) mean += row[k];
      mean /= rows.size();
      double sq = 0;
      for (auto& row : rows) sq += (row[k] - mean) * (row[k] - mean);
      EXPECT_NEAR(mean, s[k]->mean[epoch - 1], 1e-9);
      EXPECT_NEAR(std::sqrt(sq / (rows.size() - 1)), s[k]->std[epoch - 1], 1e-9);
    }
  }
}

TEST(Experiment, EqualSeedsGiveZeroStd) {
  test::TempDir dir("seed");
  write_text_file(dir.path() / "exp.json", fixture_config(dir.path(), 2, 2, R"(, "seed_stride": 0, "base_seed": 9)"));
  const ExperimentReport r = run_experiment(load_experiment_config(dir.path() / "exp.json"), {});
  for (const auto* s : {&r.train_loss, &r.train_accuracy, &r.test_accuracy})
    for (double v : s->std) EXPECT_EQ(v, 0.0);
}

TEST(Experiment, CheckpointRestoresAccuracy) {
  test::TempDir dir("ckpt");
  write_text_file(dir.path() / "exp.json", fixture_config(dir.path(), 2, 1, ""));
  const ExperimentConfig cfg = load_experiment_config(dir.path() / "exp.json");
  const ExperimentReport r = run_experiment(cfg, dir.path() / "out", {true});
  const PreparedData data = prepare_data(cfg);
  auto net = build_streaming_network(cfg.network_spec(data.test.image_shape()), 12345);
  net.load_parameters(load_checkpoint(dir.path() / "out" / "checkpoint.bin"));
  EXPECT_EQ(quantize_metric(evaluate_accuracy(net, data.test)), r.runs[0].test_accuracy.back());
}
