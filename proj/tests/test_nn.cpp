#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "entdetect/error.hpp"
#include "entdetect/nn.hpp"
#include "entdetect/rng.hpp"
#include "nn_reference.hpp"

using namespace entdetect;
using namespace entdetect::nn;
using nn_reference::gradient_relative_error;
using nn_reference::reference_loss;

namespace {

using MatD = Eigen::MatrixXd;

MatD random_inputs(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  MatD x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
  return x;
}

LabeledData linear_task(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  LabeledData d;
  d.inputs = random_inputs(rng, 4, static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const auto c = static_cast<Eigen::Index>(j);
    d.labels.push_back(d.inputs(0, c) + 0.5 * d.inputs(1, c) - 0.3 * d.inputs(3, c) > 0 ? 1 : 0);
  }
  return d;
}

}  // namespace

TEST_CASE("topology parsing") {
  CHECK(parse_topology("16:8:1") == std::vector<std::size_t>{16, 8, 1});
  CHECK(format_topology(parse_topology("16:512:128:32:4")) == "16:512:128:32:4");
  CHECK(parameter_count(parse_topology("16:8:1")) == 16 * 8 + 8 + 8 + 1);
  CHECK_THROWS_AS(parse_topology("16"), ConfigError);
  CHECK_THROWS_AS(parse_topology("16:0:1"), ConfigError);
  CHECK_THROWS_AS(parse_topology("16:x:1"), ConfigError);
  CHECK_THROWS_AS(Mlp<double>({16, 8, 2}, OutputKind::sigmoid), ConfigError);
  CHECK_THROWS_AS(Mlp<double>({16, 8, 1}, OutputKind::softmax), ConfigError);
}

TEST_CASE("loss functions match analytic values") {
  CHECK(std::abs(bce(1.0, 0.5) - std::numbers::ln2) <= 1e-12);
  CHECK(std::abs(bce(0.0, 0.5) - std::numbers::ln2) <= 1e-12);
  CHECK(std::abs(bce(1.0, 0.1) - std::log(10.0)) <= 1e-12);
  CHECK(std::abs(bce(1.0, 0.0) + std::log(kLogClamp)) <= 1e-12);
  const std::vector<double> flat{0.3, 0.3, 0.3, 0.3};
  for (double s : softmax(flat)) CHECK(std::abs(s - 0.25) <= 1e-12);
  CHECK(std::abs(cce(flat, 2) - std::log(4.0)) <= 1e-12);
  const std::vector<double> big{1000.0, 0.0};
  CHECK(std::abs(softmax(big)[0] - 1.0) <= 1e-12);
  CHECK(cce(big, 1) == doctest::Approx(-std::log(kLogClamp)));
  const std::vector<double> a{1.0, 2.0, 3.0};
  const double lse = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
  CHECK(std::abs(cce(a, 0) - (lse - 1.0)) <= 1e-12);
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(relu(-1.0) == 0.0);
}

TEST_CASE("backprop matches central finite differences") {
  Rng rng(21);
  {
    auto m = glorot_uniform_init<double>({4, 3, 1}, OutputKind::sigmoid, 5);
    for (auto& b : m.params().biases) b.setConstant(0.05);
    const MatD x = random_inputs(rng, 4, 10);
    std::vector<int> y;
    for (int j = 0; j < 10; ++j) y.push_back(j % 2);
    CHECK(gradient_relative_error(m, x, y) <= 1e-5);
  }
  {
    auto m = glorot_uniform_init<double>({16, 8, 4}, OutputKind::softmax, 6);
    for (auto& b : m.params().biases) b.setConstant(0.05);
    const MatD x = random_inputs(rng, 16, 12);
    std::vector<int> y;
    for (int j = 0; j < 12; ++j) y.push_back(j % 4);
    CHECK(gradient_relative_error(m, x, y) <= 1e-5);
  }
  {
    auto m = glorot_uniform_init<double>({16, 32, 16, 1}, OutputKind::sigmoid, 7);
    const MatD x = random_inputs(rng, 16, 8);
    std::vector<int> y{0, 1, 1, 0, 1, 0, 0, 1};
    CHECK(gradient_relative_error(m, x, y) <= 1e-5);
  }
}

TEST_CASE("backward loss equals the reference loss") {
  Rng rng(22);
  auto m = glorot_uniform_init<double>({16, 8, 4}, OutputKind::softmax, 8);
  const MatD x = random_inputs(rng, 16, 20);
  std::vector<int> y(20, 3);
  CHECK(backward(m, x, y).loss == doctest::Approx(reference_loss(m, x, y)).epsilon(1e-12));
  LabeledData d{x, y};
  CHECK(evaluate_loss(m, d) == doctest::Approx(reference_loss(m, x, y)).epsilon(1e-12));
}

TEST_CASE("glorot initialization bounds and determinism") {
  const auto a = glorot_uniform_init<float>({16, 512, 128, 32, 4}, OutputKind::softmax, 3);
  const auto b = glorot_uniform_init<float>({16, 512, 128, 32, 4}, OutputKind::softmax, 3);
  const auto c = glorot_uniform_init<float>({16, 512, 128, 32, 4}, OutputKind::softmax, 4);
  CHECK(a == b);
  CHECK(!(a == c));
  for (std::size_t l = 0; l < a.num_weight_layers(); ++l) {
    const auto& w = a.params().weights[l];
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    CHECK(w.cwiseAbs().maxCoeff() <= limit);
    CHECK(w.cwiseAbs().maxCoeff() > 0.9 * limit);
    CHECK(std::abs(w.mean()) < 0.05 * limit);
    CHECK(a.params().biases[l].isZero());
  }
}

TEST_CASE("optimizer first steps") {
  Parameters<double> p;
  p.weights.push_back(MatD::Constant(2, 2, 1.0));
  p.biases.push_back(Eigen::VectorXd::Zero(2));
  auto g = p.zeros_like();
  g.weights[0] << 0.5, -2.0, 1e-3, 0.0;
  g.biases[0] << 4.0, -4.0;

  OptimizerConfig adam;
  adam.kind = OptimizerKind::adam;
  auto pa = p;
  auto sa = OptimizerState<double>::create(adam, pa);
  optimizer_step(sa, pa, g);
  // First Adam step: m_hat = g, v_hat = g^2, so the move is lr * g / (|g| + eps).
  CHECK(pa.weights[0](0, 0) == doctest::Approx(1.0 - 1e-3 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
  CHECK(pa.weights[0](0, 1) == doctest::Approx(1.0 + 1e-3 * 2.0 / (2.0 + 1e-8)).epsilon(1e-12));
  CHECK(pa.weights[0](1, 1) == 1.0);
  CHECK(pa.biases[0](1) == doctest::Approx(1e-3).epsilon(1e-9));

  OptimizerConfig rms;
  auto pr = p;
  auto sr = OptimizerState<double>::create(rms, pr);
  optimizer_step(sr, pr, g);
  // First RMSProp step: v = (1 - rho) g^2.
  CHECK(pr.weights[0](0, 0) == doctest::Approx(1.0 - 1e-3 * 0.5 / std::sqrt(0.1 * 0.25 + 1e-8)).epsilon(1e-12));
  CHECK(pr.biases[0](0) == doctest::Approx(-1e-3 * 4.0 / std::sqrt(0.1 * 16 + 1e-8)).epsilon(1e-12));
  CHECK(sr.step == 1);
}

TEST_CASE("training learns a separable task and counts updates") {
  const auto train = linear_task(31, 400);
  const auto test = linear_task(32, 200);
  TrainConfig cfg;
  cfg.batch_size = 40;
  cfg.max_epochs = 30;
  cfg.patience.reset();
  cfg.seed = 9;
  cfg.optimizer.kind = OptimizerKind::adam;
  cfg.optimizer.learning_rate = 1e-2;
  const auto untrained = glorot_uniform_init<float>({4, 8, 1}, OutputKind::sigmoid, 1);
  const auto r = fit(untrained, train, test, cfg);
  CHECK(r.metrics.epochs_run() == 30);
  CHECK(r.metrics.updates == 30 * 10);
  CHECK(r.metrics.final_asr >= 0.95);
  CHECK(asr(r.model, test) == doctest::Approx(r.metrics.final_asr));
  CHECK(evaluate_loss(r.model, test) == doctest::Approx(r.metrics.best_test_loss()).epsilon(1e-9));
  CHECK(r.metrics.best_test_loss() == *std::min_element(r.metrics.test_loss.begin(), r.metrics.test_loss.end()));

  cfg.batch_size = 150;
  cfg.max_epochs = 2;
  CHECK(fit(untrained, train, test, cfg).metrics.updates == 2 * 3);
}

TEST_CASE("early stopping and best-epoch restore") {
  const auto train = linear_task(33, 200);
  const auto test = linear_task(34, 100);
  TrainConfig cfg;
  cfg.batch_size = 10;
  cfg.max_epochs = 200;
  cfg.patience = 2;
  cfg.optimizer.learning_rate = 0.2;  // large enough to oscillate
  const auto r = fit(glorot_uniform_init<double>({4, 16, 1}, OutputKind::sigmoid, 2), train, test, cfg);
  CHECK(r.metrics.epochs_run() < 200);
  CHECK(r.metrics.epochs_run() - r.metrics.best_epoch == 2);
  CHECK(evaluate_loss(r.model, test) == doctest::Approx(r.metrics.best_test_loss()).epsilon(1e-12));
}

TEST_CASE("training is deterministic") {
  const auto train = linear_task(35, 300);
  const auto test = linear_task(36, 100);
  TrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.seed = 77;
  const auto init = glorot_uniform_init<float>({4, 8, 1}, OutputKind::sigmoid, 3);
  const auto a = fit(init, train, test, cfg);
  const auto b = fit(init, train, test, cfg);
  CHECK(a.model == b.model);
  CHECK(format_metrics_csv(a.metrics) == format_metrics_csv(b.metrics));
  CHECK(format_checkpoint(a.model) == format_checkpoint(b.model));
  cfg.seed = 78;
  CHECK(!(fit(init, train, test, cfg).model == a.model));
}

TEST_CASE("configuration and label validation") {
  const auto train = linear_task(37, 50);
  TrainConfig cfg;
  cfg.max_epochs = 0;
  const auto m = glorot_uniform_init<double>({4, 3, 1}, OutputKind::sigmoid, 1);
  CHECK_THROWS_AS(fit(m, train, train, cfg), ConfigError);
  cfg.max_epochs = 1;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(fit(m, train, train, cfg), ConfigError);
  auto bad = train;
  bad.labels[0] = 2;
  CHECK_THROWS_AS(asr(m, bad), HeadMismatch);
  const auto soft = glorot_uniform_init<double>({4, 3, 4}, OutputKind::softmax, 1);
  CHECK_NOTHROW(asr(soft, bad));
  LabeledData narrow{Eigen::MatrixXd::Zero(3, 2), {0, 1}};
  CHECK_THROWS_AS(asr(m, narrow), WidthMismatch);
}

TEST_CASE("prediction rules") {
  Mlp<double> zero({4, 3, 4}, OutputKind::softmax);
  const auto pred = predict(zero, Eigen::MatrixXd::Ones(4, 5));
  for (int p : pred) CHECK(p == 0);
  Mlp<double> sig({4, 1}, OutputKind::sigmoid);
  // Output 0.5 exactly counts as entangled.
  for (int p : predict(sig, Eigen::MatrixXd::Ones(4, 3))) CHECK(p == 1);
  LabeledData balanced{Eigen::MatrixXd::Ones(4, 4), {0, 1, 0, 1}};
  CHECK(asr(sig, balanced) == 0.5);
  const auto cm = confusion_matrix(sig, balanced);
  CHECK(cm[0][1] == 2);
  CHECK(cm[1][1] == 2);
}

TEST_CASE("checkpoints round-trip") {
  const auto m = glorot_uniform_init<float>({16, 8, 4}, OutputKind::softmax, 12);
  const auto text = format_checkpoint(m);
  CHECK(parse_checkpoint<float>(text) == m);
  const auto md = glorot_uniform_init<double>({16, 8, 1}, OutputKind::sigmoid, 12);
  CHECK(parse_checkpoint<double>(format_checkpoint(md)) == md);
  const auto path = (std::filesystem::temp_directory_path() / "entdetect_test_model.txt").string();
  write_checkpoint(path, m);
  CHECK(read_checkpoint<float>(path) == m);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(parse_checkpoint<float>("#entdetect-model v1; topology=4:1; head=sigmoid\n"), FormatError);
  CHECK_THROWS_AS(parse_checkpoint<float>("nope"), FormatError);
  auto broken = text;
  broken.replace(broken.find(",weight,"), 8, ",wieght,");
  CHECK_THROWS_AS(parse_checkpoint<float>(broken), FormatError);
}
