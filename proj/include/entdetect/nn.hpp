#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace entdetect::nn {

enum class OutputKind { sigmoid, softmax };
enum class OptimizerKind { adam, rmsprop };

std::string_view to_string(OutputKind kind);
OutputKind parse_output_kind(std::string_view s);
std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view s);

/// Parses "n0:n1:...:nL". Throws ConfigError on fewer than two layers or a zero width.
std::vector<std::size_t> parse_topology(std::string_view text);
std::string format_topology(std::span<const std::size_t> sizes);
/// sum_l n_l (n_{l-1} + 1).
std::size_t parameter_count(std::span<const std::size_t> sizes);

/// Lower clamp applied to probabilities inside the cross-entropy losses.
inline constexpr double kLogClamp = 1e-12;

double sigmoid(double z);
double relu(double z);
/// -(a log p + (1 - a) log(1 - p)) with p clamped to [eta, 1 - eta].
double bce(double expected, double predicted);
/// Max-shifted exponential normalization.
std::vector<double> softmax(std::span<const double> activations);
/// -log softmax(a)_i, with the probability clamped below at eta.
double cce(std::span<const double> activations, std::size_t true_class);

/// Labeled samples, one column per sample.
struct LabeledData {
  Eigen::MatrixXd inputs;
  /// 0/1 for a sigmoid head, class index for a softmax head.
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t width() const { return static_cast<std::size_t>(inputs.rows()); }
};

template <typename Scalar>
struct Parameters {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  /// Same shapes, all zero.
  Parameters zeros_like() const;
  bool all_finite() const;
  bool operator==(const Parameters& other) const;
};

/// Fully connected network: ReLU hidden layers, sigmoid or softmax head.
/// Weight l has shape n_{l+1} x n_l.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = typename Parameters<Scalar>::Matrix;
  using Vector = typename Parameters<Scalar>::Vector;

  /// All parameters zero.
  Mlp(std::vector<std::size_t> layer_sizes, OutputKind head);

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  OutputKind head() const { return head_; }
  std::size_t input_width() const { return sizes_.front(); }
  std::size_t output_width() const { return sizes_.back(); }
  std::size_t num_weight_layers() const { return sizes_.size() - 1; }

  Parameters<Scalar>& params() { return params_; }
  const Parameters<Scalar>& params() const { return params_; }

  /// Output activations for a batch (one column per sample): sigmoid
  /// probabilities, or raw activations for a softmax head.
  Matrix forward(const Matrix& x) const;

  template <typename Other>
  Mlp<Other> cast() const {
    Mlp<Other> out(sizes_, head_);
    for (std::size_t l = 0; l < num_weight_layers(); ++l) {
      out.params().weights[l] = params_.weights[l].template cast<Other>();
      out.params().biases[l] = params_.biases[l].template cast<Other>();
    }
    return out;
  }

  bool operator==(const Mlp& other) const {
    return sizes_ == other.sizes_ && head_ == other.head_ && params_ == other.params_;
  }

 private:
  std::vector<std::size_t> sizes_;
  OutputKind head_;
  Parameters<Scalar> params_;
};

/// Per-layer pre-activations and activations; activations[0] is the input.
template <typename Scalar>
struct ForwardCache {
  std::vector<typename Mlp<Scalar>::Matrix> pre_activations;
  std::vector<typename Mlp<Scalar>::Matrix> activations;
};

template <typename Scalar>
ForwardCache<Scalar> forward_cached(const Mlp<Scalar>& model, const typename Mlp<Scalar>::Matrix& x);

/// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
template <typename Scalar>
Mlp<Scalar> glorot_uniform_init(std::vector<std::size_t> layer_sizes, OutputKind head, std::uint64_t seed);

template <typename Scalar>
struct Gradients {
  double loss = 0.0;
  Parameters<Scalar> grads;
};

/// Mean batch loss (BCE for a sigmoid head, CCE for softmax) and its
/// gradient with respect to every weight and bias.
template <typename Scalar>
Gradients<Scalar> backward(const Mlp<Scalar>& model, const typename Mlp<Scalar>::Matrix& x,
                           std::span<const int> labels);

/// Mean loss over `data`.
template <typename Scalar>
double evaluate_loss(const Mlp<Scalar>& model, const LabeledData& data);

/// Predicted labels: sigmoid >= 0.5 means entangled; softmax argmax with ties
/// going to the lowest index.
template <typename Scalar>
std::vector<int> predict(const Mlp<Scalar>& model, const Eigen::MatrixXd& inputs);

/// Fraction of correctly classified samples. Throws HeadMismatch when the
/// labels cannot belong to the model's head.
template <typename Scalar>
double asr(const Mlp<Scalar>& model, const LabeledData& data);

/// confusion[true][predicted].
template <typename Scalar>
std::vector<std::vector<std::size_t>> confusion_matrix(const Mlp<Scalar>& model, const LabeledData& data);

void check_labels(OutputKind head, std::size_t output_width, std::span<const int> labels);

// -- optimizers --------------------------------------------------------------

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::rmsprop;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double rho = 0.9;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct OptimizerState {
  OptimizerConfig config;
  std::uint64_t step = 0;
  /// Adam: first moment. Unused by RMSProp.
  Parameters<Scalar> first;
  /// Adam: second moment. RMSProp: running mean of squared gradients.
  Parameters<Scalar> second;

  static OptimizerState create(const OptimizerConfig& config, const Parameters<Scalar>& like);
};

/// Bias-corrected Adam: p -= lr * m_hat / (sqrt(v_hat) + eps).
template <typename Scalar>
void adam_step(OptimizerState<Scalar>& state, Parameters<Scalar>& params, const Parameters<Scalar>& grads);

/// v = rho v + (1 - rho) g^2; p -= lr * g / sqrt(v + eps).
template <typename Scalar>
void rmsprop_step(OptimizerState<Scalar>& state, Parameters<Scalar>& params, const Parameters<Scalar>& grads);

template <typename Scalar>
void optimizer_step(OptimizerState<Scalar>& state, Parameters<Scalar>& params, const Parameters<Scalar>& grads);

// -- training ----------------------------------------------------------------

struct TrainConfig {
  std::size_t batch_size = 40;
  double train_fraction = 0.8;
  std::size_t max_epochs = 200;
  /// Consecutive epochs without test-loss improvement before stopping.
  /// Empty disables stopping; the best epoch is restored either way.
  std::optional<std::size_t> patience = 10;
  std::uint64_t seed = 0;
  OptimizerConfig optimizer;
  /// Reshuffle the training order every epoch.
  bool reshuffle = true;
};

/// Throws ConfigError for max_epochs == 0, batch_size == 0 or f outside (0, 1).
void validate(const TrainConfig& config);

struct RunMetrics {
  std::vector<double> train_loss;
  std::vector<double> test_loss;
  std::vector<double> test_asr;
  /// 1-based epoch whose parameters were kept.
  std::size_t best_epoch = 0;
  double final_asr = 0.0;
  std::size_t updates = 0;

  std::size_t epochs_run() const { return test_loss.size(); }
  double best_test_loss() const { return test_loss.at(best_epoch - 1); }
};

template <typename Scalar>
struct FitResult {
  Mlp<Scalar> model;
  RunMetrics metrics;
};

/// Minibatch training. Each epoch visits every training sample once in
/// ceil(|train| / M) updates (last batch may be short); test loss and ASR
/// are recorded after every epoch; the best test-loss parameters are returned.
template <typename Scalar>
FitResult<Scalar> fit(Mlp<Scalar> model, const LabeledData& train, const LabeledData& test, const TrainConfig& config);

/// `epoch,train_loss,test_loss,test_asr,best` rows.
std::string format_metrics_csv(const RunMetrics& metrics);

// -- checkpoints -------------------------------------------------------------

template <typename Scalar>
std::string format_checkpoint(const Mlp<Scalar>& model);
template <typename Scalar>
Mlp<Scalar> parse_checkpoint(std::string_view text);
template <typename Scalar>
void write_checkpoint(const std::string& path, const Mlp<Scalar>& model);
template <typename Scalar>
Mlp<Scalar> read_checkpoint(const std::string& path);

}  // namespace entdetect::nn
