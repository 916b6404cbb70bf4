#include "entdetect/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "entdetect/error.hpp"
#include "entdetect/io.hpp"
#include "entdetect/rng.hpp"

namespace entdetect::nn {

namespace {

constexpr std::size_t kEvalChunk = 8192;
constexpr std::uint64_t kInitSalt = 0x696e6974ULL;     // "init"
constexpr std::uint64_t kShuffleSalt = 0x73687566ULL;  // "shuf"

/// Output-layer pre-activations (no head nonlinearity).
template <typename Scalar>
typename Mlp<Scalar>::Matrix logits(const Mlp<Scalar>& model, const typename Mlp<Scalar>::Matrix& x) {
  using Matrix = typename Mlp<Scalar>::Matrix;
  const auto& p = model.params();
  Matrix a = x;
  for (std::size_t l = 0; l < model.num_weight_layers(); ++l) {
    Matrix z = p.weights[l] * a;
    z.colwise() += p.biases[l];
    if (l + 1 < model.num_weight_layers()) {
      a = z.cwiseMax(Scalar(0));
    } else {
      return z;
    }
  }
  return a;
}

/// Loss of one sample from its logits column, and dL/dz for that column.
template <typename Derived>
double sample_loss(OutputKind head, const Eigen::MatrixBase<Derived>& z, int label, Eigen::VectorXd* dz) {
  if (head == OutputKind::sigmoid) {
    const double p = sigmoid(static_cast<double>(z(0)));
    const double a = static_cast<double>(label);
    if (dz != nullptr) {
      dz->resize(1);
      (*dz)(0) = (p > kLogClamp && p < 1.0 - kLogClamp) ? p - a : 0.0;
    }
    return bce(a, p);
  }
  std::vector<double> act(static_cast<std::size_t>(z.size()));
  for (std::size_t i = 0; i < act.size(); ++i) act[i] = static_cast<double>(z(static_cast<Eigen::Index>(i)));
  const auto s = softmax(act);
  const auto cls = static_cast<std::size_t>(label);
  if (dz != nullptr) {
    dz->resize(static_cast<Eigen::Index>(act.size()));
    const bool active = s[cls] > kLogClamp;
    for (std::size_t i = 0; i < act.size(); ++i) {
      (*dz)(static_cast<Eigen::Index>(i)) = active ? s[i] - (i == cls ? 1.0 : 0.0) : 0.0;
    }
  }
  return cce(act, cls);
}

template <typename Scalar>
typename Mlp<Scalar>::Matrix gather(const typename Mlp<Scalar>::Matrix& x, std::span<const std::size_t> idx) {
  typename Mlp<Scalar>::Matrix out(x.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(idx[j]));
  return out;
}

void require_width(std::size_t model_width, std::size_t data_width) {
  if (model_width != data_width) {
    throw WidthMismatch("model expects " + std::to_string(model_width) + " inputs, data has " +
                        std::to_string(data_width));
  }
}

}  // namespace

std::string_view to_string(OutputKind kind) { return kind == OutputKind::sigmoid ? "sigmoid" : "softmax"; }

OutputKind parse_output_kind(std::string_view s) {
  if (s == "sigmoid") return OutputKind::sigmoid;
  if (s == "softmax") return OutputKind::softmax;
  throw ConfigError("unknown output head '" + std::string(s) + "'");
}

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "rmsprop"; }

OptimizerKind parse_optimizer_kind(std::string_view s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "rmsprop") return OptimizerKind::rmsprop;
  throw ConfigError("unknown optimizer '" + std::string(s) + "'");
}

std::vector<std::size_t> parse_topology(std::string_view text) {
  std::vector<std::size_t> sizes;
  for (auto part : io::split(text, ':')) {
    std::size_t n = 0;
    try {
      n = io::parse_u64(part);
    } catch (const FormatError&) {
      throw ConfigError("malformed topology '" + std::string(text) + "'");
    }
    if (n == 0) throw ConfigError("topology layers must be nonzero");
    sizes.push_back(n);
  }
  if (sizes.size() < 2) throw ConfigError("topology needs at least an input and an output layer");
  return sizes;
}

std::string format_topology(std::span<const std::size_t> sizes) {
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i > 0) out += ':';
    out += std::to_string(sizes[i]);
  }
  return out;
}

std::size_t parameter_count(std::span<const std::size_t> sizes) {
  std::size_t n = 0;
  for (std::size_t l = 1; l < sizes.size(); ++l) n += sizes[l] * (sizes[l - 1] + 1);
  return n;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double relu(double z) { return z > 0.0 ? z : 0.0; }

double bce(double expected, double predicted) {
  const double p = std::clamp(predicted, kLogClamp, 1.0 - kLogClamp);
  return -(expected * std::log(p) + (1.0 - expected) * std::log(1.0 - p));
}

std::vector<double> softmax(std::span<const double> activations) {
  const double m = *std::max_element(activations.begin(), activations.end());
  std::vector<double> out(activations.size());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(activations[i] - m);
    total += out[i];
  }
  for (auto& x : out) x /= total;
  return out;
}

double cce(std::span<const double> activations, std::size_t true_class) {
  if (true_class >= activations.size()) throw ConfigError("class index out of range");
  const double m = *std::max_element(activations.begin(), activations.end());
  double total = 0.0;
  for (double a : activations) total += std::exp(a - m);
  const double log_p = activations[true_class] - m - std::log(total);
  return -std::max(log_p, std::log(kLogClamp));
}

template <typename Scalar>
Parameters<Scalar> Parameters<Scalar>::zeros_like() const {
  Parameters out;
  for (const auto& w : weights) out.weights.push_back(Matrix::Zero(w.rows(), w.cols()));
  for (const auto& b : biases) out.biases.push_back(Vector::Zero(b.size()));
  return out;
}

template <typename Scalar>
bool Parameters<Scalar>::all_finite() const {
  return std::all_of(weights.begin(), weights.end(), [](const Matrix& w) { return w.allFinite(); }) &&
         std::all_of(biases.begin(), biases.end(), [](const Vector& b) { return b.allFinite(); });
}

template <typename Scalar>
bool Parameters<Scalar>::operator==(const Parameters& other) const {
  if (weights.size() != other.weights.size() || biases.size() != other.biases.size()) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != other.weights[l].rows() || weights[l].cols() != other.weights[l].cols()) return false;
    if (weights[l] != other.weights[l] || biases[l] != other.biases[l]) return false;
  }
  return true;
}

template <typename Scalar>
Mlp<Scalar>::Mlp(std::vector<std::size_t> layer_sizes, OutputKind head) : sizes_(std::move(layer_sizes)), head_(head) {
  if (sizes_.size() < 2) throw ConfigError("an MLP needs at least two layers");
  if (std::find(sizes_.begin(), sizes_.end(), 0U) != sizes_.end()) throw ConfigError("layer widths must be nonzero");
  if (head_ == OutputKind::sigmoid && sizes_.back() != 1) throw ConfigError("a sigmoid head has exactly one output");
  if (head_ == OutputKind::softmax && sizes_.back() < 2) throw ConfigError("a softmax head needs at least two outputs");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    params_.weights.push_back(Matrix::Zero(static_cast<Eigen::Index>(sizes_[l + 1]), static_cast<Eigen::Index>(sizes_[l])));
    params_.biases.push_back(Vector::Zero(static_cast<Eigen::Index>(sizes_[l + 1])));
  }
}

template <typename Scalar>
typename Mlp<Scalar>::Matrix Mlp<Scalar>::forward(const Matrix& x) const {
  Matrix z = logits(*this, x);
  if (head_ == OutputKind::sigmoid) {
    return z.unaryExpr([](Scalar v) { return static_cast<Scalar>(sigmoid(static_cast<double>(v))); });
  }
  return z;
}

template <typename Scalar>
ForwardCache<Scalar> forward_cached(const Mlp<Scalar>& model, const typename Mlp<Scalar>::Matrix& x) {
  using Matrix = typename Mlp<Scalar>::Matrix;
  require_width(model.input_width(), static_cast<std::size_t>(x.rows()));
  ForwardCache<Scalar> cache;
  cache.activations.push_back(x);
  const auto& p = model.params();
  for (std::size_t l = 0; l < model.num_weight_layers(); ++l) {
    Matrix z = p.weights[l] * cache.activations.back();
    z.colwise() += p.biases[l];
    const bool last = l + 1 == model.num_weight_layers();
    if (!last) {
      cache.activations.push_back(z.cwiseMax(Scalar(0)));
    } else if (model.head() == OutputKind::sigmoid) {
      cache.activations.push_back(z.unaryExpr([](Scalar v) { return static_cast<Scalar>(sigmoid(static_cast<double>(v))); }));
    } else {
      cache.activations.push_back(z);
    }
    cache.pre_activations.push_back(std::move(z));
  }
  return cache;
}

template <typename Scalar>
Mlp<Scalar> glorot_uniform_init(std::vector<std::size_t> layer_sizes, OutputKind head, std::uint64_t seed) {
  Mlp<Scalar> model(std::move(layer_sizes), head);
  Rng rng(mix_seed(seed, kInitSalt));
  for (auto& w : model.params().weights) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<Scalar>(rng.uniform(-limit, limit));
  }
  return model;
}

template <typename Scalar>
Gradients<Scalar> backward(const Mlp<Scalar>& model, const typename Mlp<Scalar>::Matrix& x,
                           std::span<const int> labels) {
  using Matrix = typename Mlp<Scalar>::Matrix;
  const auto batch = static_cast<Eigen::Index>(labels.size());
  if (batch == 0 || x.cols() != batch) throw DimensionMismatch("batch inputs and labels differ in size");

  const ForwardCache<Scalar> cache = forward_cached(model, x);
  const Matrix& z_out = cache.pre_activations.back();
  const double inv_b = 1.0 / static_cast<double>(batch);

  Gradients<Scalar> g;
  g.grads = model.params().zeros_like();
  Matrix delta(z_out.rows(), batch);
  Eigen::VectorXd dz;
  double total = 0.0;
  for (Eigen::Index j = 0; j < batch; ++j) {
    total += sample_loss(model.head(), z_out.col(j), labels[static_cast<std::size_t>(j)], &dz);
    delta.col(j) = (dz * inv_b).template cast<Scalar>();
  }
  g.loss = total * inv_b;

  const auto& p = model.params();
  for (std::size_t l = model.num_weight_layers(); l-- > 0;) {
    g.grads.weights[l].noalias() = delta * cache.activations[l].transpose();
    g.grads.biases[l] = delta.rowwise().sum();
    if (l == 0) break;
    Matrix back = p.weights[l].transpose() * delta;
    const Matrix& z_prev = cache.pre_activations[l - 1];
    delta = back.cwiseProduct(z_prev.unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); }));
  }
  return g;
}

void check_labels(OutputKind head, std::size_t output_width, std::span<const int> labels) {
  const int classes = head == OutputKind::sigmoid ? 2 : static_cast<int>(output_width);
  for (int y : labels) {
    if (y < 0 || y >= classes) {
      throw HeadMismatch("label " + std::to_string(y) + " is not valid for a " + std::string(to_string(head)) +
                         " head with " + std::to_string(output_width) + " outputs");
    }
  }
}

template <typename Scalar>
double evaluate_loss(const Mlp<Scalar>& model, const LabeledData& data) {
  require_width(model.input_width(), data.width());
  check_labels(model.head(), model.output_width(), data.labels);
  const auto n = static_cast<Eigen::Index>(data.size());
  double total = 0.0;
  for (Eigen::Index start = 0; start < n; start += kEvalChunk) {
    const Eigen::Index len = std::min<Eigen::Index>(kEvalChunk, n - start);
    const auto z = logits(model, data.inputs.middleCols(start, len).template cast<Scalar>().eval());
    for (Eigen::Index j = 0; j < len; ++j) {
      total += sample_loss(model.head(), z.col(j), data.labels[static_cast<std::size_t>(start + j)], nullptr);
    }
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

template <typename Scalar>
std::vector<int> predict(const Mlp<Scalar>& model, const Eigen::MatrixXd& inputs) {
  require_width(model.input_width(), static_cast<std::size_t>(inputs.rows()));
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(inputs.cols()));
  for (Eigen::Index start = 0; start < inputs.cols(); start += kEvalChunk) {
    const Eigen::Index len = std::min<Eigen::Index>(kEvalChunk, inputs.cols() - start);
    const auto z = logits(model, inputs.middleCols(start, len).template cast<Scalar>().eval());
    for (Eigen::Index j = 0; j < len; ++j) {
      if (model.head() == OutputKind::sigmoid) {
        // sigmoid(z) >= 0.5 exactly when z >= 0.
        out.push_back(z(0, j) >= Scalar(0) ? 1 : 0);
      } else {
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < z.rows(); ++i)
          if (z(i, j) > z(best, j)) best = i;
        out.push_back(static_cast<int>(best));
      }
    }
  }
  return out;
}

template <typename Scalar>
double asr(const Mlp<Scalar>& model, const LabeledData& data) {
  check_labels(model.head(), model.output_width(), data.labels);
  if (data.size() == 0) return 0.0;
  const auto pred = predict(model, data.inputs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == data.labels[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

template <typename Scalar>
std::vector<std::vector<std::size_t>> confusion_matrix(const Mlp<Scalar>& model, const LabeledData& data) {
  check_labels(model.head(), model.output_width(), data.labels);
  const std::size_t k = model.head() == OutputKind::sigmoid ? 2 : model.output_width();
  std::vector<std::vector<std::size_t>> m(k, std::vector<std::size_t>(k, 0));
  const auto pred = predict(model, data.inputs);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++m[static_cast<std::size_t>(data.labels[i])][static_cast<std::size_t>(pred[i])];
  }
  return m;
}

template <typename Scalar>
OptimizerState<Scalar> OptimizerState<Scalar>::create(const OptimizerConfig& config, const Parameters<Scalar>& like) {
  OptimizerState s;
  s.config = config;
  s.first = like.zeros_like();
  s.second = like.zeros_like();
  return s;
}

namespace {

template <typename Scalar, typename Fn>
void for_each_tensor(Parameters<Scalar>& params, Parameters<Scalar>& m, Parameters<Scalar>& v,
                     const Parameters<Scalar>& grads, Fn&& fn) {
  if (params.weights.size() != grads.weights.size() || params.weights.size() != v.weights.size()) {
    throw DimensionMismatch("optimizer state does not match the parameters");
  }
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    fn(params.weights[l].array(), m.weights[l].array(), v.weights[l].array(), grads.weights[l].array());
    fn(params.biases[l].array(), m.biases[l].array(), v.biases[l].array(), grads.biases[l].array());
  }
}

}  // namespace

template <typename Scalar>
void adam_step(OptimizerState<Scalar>& state, Parameters<Scalar>& params, const Parameters<Scalar>& grads) {
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const auto b1 = static_cast<Scalar>(c.beta1);
  const auto b2 = static_cast<Scalar>(c.beta2);
  const auto corr1 = static_cast<Scalar>(1.0 - std::pow(c.beta1, t));
  const auto corr2 = static_cast<Scalar>(1.0 - std::pow(c.beta2, t));
  const auto lr = static_cast<Scalar>(c.learning_rate);
  const auto eps = static_cast<Scalar>(c.epsilon);
  for_each_tensor(params, state.first, state.second, grads, [&](auto p, auto m, auto v, auto g) {
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.square();
    p -= lr * (m / corr1) / ((v / corr2).sqrt() + eps);
  });
}

template <typename Scalar>
void rmsprop_step(OptimizerState<Scalar>& state, Parameters<Scalar>& params, const Parameters<Scalar>& grads) {
  const auto& c = state.config;
  ++state.step;
  const auto rho = static_cast<Scalar>(c.rho);
  const auto lr = static_cast<Scalar>(c.learning_rate);
  const auto eps = static_cast<Scalar>(c.epsilon);
  for_each_tensor(params, state.first, state.second, grads, [&](auto p, auto, auto v, auto g) {
    v = rho * v + (Scalar(1) - rho) * g.square();
    p -= lr * g / (v + eps).sqrt();
  });
}

template <typename Scalar>
void optimizer_step(OptimizerState<Scalar>& state, Parameters<Scalar>& params, const Parameters<Scalar>& grads) {
  if (state.config.kind == OptimizerKind::adam) {
    adam_step(state, params, grads);
  } else {
    rmsprop_step(state, params, grads);
  }
}

void validate(const TrainConfig& config) {
  if (config.max_epochs == 0) throw ConfigError("max epochs must be at least 1");
  if (config.batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0)) throw ConfigError("train fraction must lie in (0, 1)");
  if (!(config.optimizer.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
}

template <typename Scalar>
FitResult<Scalar> fit(Mlp<Scalar> model, const LabeledData& train, const LabeledData& test, const TrainConfig& config) {
  using Matrix = typename Mlp<Scalar>::Matrix;
  validate(config);
  if (train.size() == 0) throw ConfigError("empty training set");
  if (config.batch_size > train.size()) throw ConfigError("batch size exceeds the training set");
  require_width(model.input_width(), train.width());
  check_labels(model.head(), model.output_width(), train.labels);
  check_labels(model.head(), model.output_width(), test.labels);

  const Matrix x = train.inputs.template cast<Scalar>();
  const std::size_t n = train.size();
  auto opt = OptimizerState<Scalar>::create(config.optimizer, model.params());

  RunMetrics metrics;
  Parameters<Scalar> best = model.params();
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t streak = 0;
  std::vector<std::size_t> order(n);
  std::vector<int> batch_labels;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (config.reshuffle) {
      Rng rng(mix_seed(mix_seed(config.seed, kShuffleSalt), epoch));
      rng.shuffle(std::span<std::size_t>(order));
    }

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, n - start);
      const std::span<const std::size_t> idx(order.data() + start, len);
      batch_labels.resize(len);
      for (std::size_t j = 0; j < len; ++j) batch_labels[j] = train.labels[idx[j]];
      const auto g = backward(model, gather<Scalar>(x, idx), batch_labels);
      optimizer_step(opt, model.params(), g.grads);
      epoch_loss += g.loss * static_cast<double>(len);
      ++metrics.updates;
    }

    metrics.train_loss.push_back(epoch_loss / static_cast<double>(n));
    const double test_loss = test.size() > 0 ? evaluate_loss(model, test) : metrics.train_loss.back();
    metrics.test_loss.push_back(test_loss);
    metrics.test_asr.push_back(test.size() > 0 ? asr(model, test) : 0.0);

    if (test_loss < best_loss) {
      best_loss = test_loss;
      best = model.params();
      metrics.best_epoch = epoch;
      streak = 0;
    } else {
      ++streak;
    }
    if (metrics.best_epoch == 0) {
      // Non-finite first epoch: keep it so the result is well defined.
      best = model.params();
      metrics.best_epoch = epoch;
    }
    if (config.patience && streak > 0 && streak >= *config.patience) break;
  }

  model.params() = std::move(best);
  metrics.final_asr = metrics.test_asr[metrics.best_epoch - 1];
  return {std::move(model), std::move(metrics)};
}

std::string format_metrics_csv(const RunMetrics& metrics) {
  std::string out = "epoch,train_loss,test_loss,test_asr,best\n";
  for (std::size_t e = 0; e < metrics.epochs_run(); ++e) {
    out += std::to_string(e + 1) + ',' + io::format_double(metrics.train_loss[e]) + ',' +
           io::format_double(metrics.test_loss[e]) + ',' + io::format_double(metrics.test_asr[e]) + ',' +
           (e + 1 == metrics.best_epoch ? "1" : "0") + '\n';
  }
  return out;
}

template <typename Scalar>
std::string format_checkpoint(const Mlp<Scalar>& model) {
  std::string out = "#entdetect-model v1; topology=" + format_topology(model.layer_sizes()) +
                    "; head=" + std::string(to_string(model.head())) + '\n';
  const auto& p = model.params();
  for (std::size_t l = 0; l < model.num_weight_layers(); ++l) {
    const auto& w = p.weights[l];
    out += std::to_string(l) + ",weight," + std::to_string(w.rows()) + 'x' + std::to_string(w.cols());
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) out += ',' + io::format_double(static_cast<double>(w(r, c)));
    out += '\n';
    const auto& b = p.biases[l];
    out += std::to_string(l) + ",bias," + std::to_string(b.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) out += ',' + io::format_double(static_cast<double>(b(i)));
    out += '\n';
  }
  return out;
}

template <typename Scalar>
Mlp<Scalar> parse_checkpoint(std::string_view text) {
  constexpr std::string_view kMagic = "#entdetect-model v1; ";
  auto lines = io::split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || !lines[0].starts_with(kMagic)) throw FormatError("missing checkpoint header");

  std::optional<std::vector<std::size_t>> sizes;
  std::optional<OutputKind> head;
  for (auto field : io::split(lines[0].substr(kMagic.size()), ';')) {
    field = io::trim(field);
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) throw FormatError("malformed checkpoint header");
    const auto key = field.substr(0, eq);
    const auto value = field.substr(eq + 1);
    try {
      if (key == "topology") {
        sizes = parse_topology(value);
      } else if (key == "head") {
        head = parse_output_kind(value);
      } else {
        throw FormatError("unknown checkpoint header field '" + std::string(key) + "'");
      }
    } catch (const ConfigError& e) {
      throw FormatError(e.what());
    }
  }
  if (!sizes || !head) throw FormatError("incomplete checkpoint header");

  Mlp<Scalar> model = [&] {
    try {
      return Mlp<Scalar>(*sizes, *head);
    } catch (const ConfigError& e) {
      throw FormatError(e.what());
    }
  }();
  if (lines.size() != 1 + 2 * model.num_weight_layers()) throw FormatError("checkpoint has the wrong number of tensors");

  for (std::size_t l = 0; l < model.num_weight_layers(); ++l) {
    auto& w = model.params().weights[l];
    auto& b = model.params().biases[l];
    const auto wcols = io::split(lines[1 + 2 * l], ',');
    const std::string wshape = std::to_string(w.rows()) + 'x' + std::to_string(w.cols());
    if (wcols.size() != 3 + static_cast<std::size_t>(w.size()) || io::parse_u64(wcols[0]) != l ||
        wcols[1] != "weight" || wcols[2] != wshape) {
      throw FormatError("malformed weight tensor for layer " + std::to_string(l));
    }
    std::size_t k = 3;
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<Scalar>(io::parse_double(wcols[k++]));

    const auto bcols = io::split(lines[2 + 2 * l], ',');
    if (bcols.size() != 3 + static_cast<std::size_t>(b.size()) || io::parse_u64(bcols[0]) != l || bcols[1] != "bias" ||
        bcols[2] != std::to_string(b.size())) {
      throw FormatError("malformed bias tensor for layer " + std::to_string(l));
    }
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = static_cast<Scalar>(io::parse_double(bcols[3 + static_cast<std::size_t>(i)]));
  }
  if (!model.params().all_finite()) throw FormatError("checkpoint holds non-finite parameters");
  return model;
}

template <typename Scalar>
void write_checkpoint(const std::string& path, const Mlp<Scalar>& model) {
  io::write_file_atomic(path, format_checkpoint(model));
}

template <typename Scalar>
Mlp<Scalar> read_checkpoint(const std::string& path) {
  return parse_checkpoint<Scalar>(io::read_file(path));
}

#define ENTDETECT_NN_INSTANTIATE(T)                                                                            \
  template struct Parameters<T>;                                                                               \
  template class Mlp<T>;                                                                                       \
  template ForwardCache<T> forward_cached(const Mlp<T>&, const Mlp<T>::Matrix&);                               \
  template Mlp<T> glorot_uniform_init<T>(std::vector<std::size_t>, OutputKind, std::uint64_t);                 \
  template Gradients<T> backward(const Mlp<T>&, const Mlp<T>::Matrix&, std::span<const int>);                  \
  template double evaluate_loss(const Mlp<T>&, const LabeledData&);                                            \
  template std::vector<int> predict(const Mlp<T>&, const Eigen::MatrixXd&);                                    \
  template double asr(const Mlp<T>&, const LabeledData&);                                                      \
  template std::vector<std::vector<std::size_t>> confusion_matrix(const Mlp<T>&, const LabeledData&);          \
  template struct OptimizerState<T>;                                                                           \
  template void adam_step(OptimizerState<T>&, Parameters<T>&, const Parameters<T>&);                           \
  template void rmsprop_step(OptimizerState<T>&, Parameters<T>&, const Parameters<T>&);                        \
  template void optimizer_step(OptimizerState<T>&, Parameters<T>&, const Parameters<T>&);                      \
  template FitResult<T> fit(Mlp<T>, const LabeledData&, const LabeledData&, const TrainConfig&);               \
  template std::string format_checkpoint(const Mlp<T>&);                                                       \
  template Mlp<T> parse_checkpoint<T>(std::string_view);                                                       \
  template void write_checkpoint(const std::string&, const Mlp<T>&);                                           \
  template Mlp<T> read_checkpoint<T>(const std::string&);

ENTDETECT_NN_INSTANTIATE(float)
ENTDETECT_NN_INSTANTIATE(double)

#undef ENTDETECT_NN_INSTANTIATE

}  // namespace entdetect::nn
