#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "entdetect/nn.hpp"
#include "entdetect/pipeline.hpp"
#include "entdetect/stategen.hpp"

namespace entdetect::experiments {

enum class ExperimentId {
  fig_sep_vs_bell,
  tw_to_grid,
  generalist,
  epsilon_sweep,
  werner_sweep,
  families_binary,
  cross_family,
  categorical_runs,
};

std::string_view to_string(ExperimentId id);
/// Throws ConfigError for an unknown id.
ExperimentId parse_experiment_id(std::string_view s);
const std::vector<ExperimentId>& all_experiments();

enum class Scale { full, desk };
std::string_view to_string(Scale scale);
Scale parse_scale(std::string_view s);

/// The five negativity bins (0, .1), ..., (.4, .5).
inline constexpr std::array<stategen::Interval, 5> kBins{{{0.0, 0.1}, {0.1, 0.2}, {0.2, 0.3}, {0.3, 0.4}, {0.4, 0.5}}};

struct ExperimentSpec {
  ExperimentId id = ExperimentId::fig_sep_vs_bell;
  /// Main network. For the sweeps this is the shallow variant.
  std::string topology;
  /// Deep variant of the sweeps.
  std::string deep_topology;
  /// Per-bin networks of the trained-with/tested-on grid, as listed in the
  /// figure caption; the input width 16 is prepended unless already present.
  std::vector<std::string> pure_topologies;
  std::vector<std::string> mixed_topologies;
  nn::OptimizerKind optimizer = nn::OptimizerKind::rmsprop;
  double learning_rate = 1e-3;
  /// Total dataset size S (all classes together).
  std::size_t dataset_size = 20000;
  std::size_t replicates = 10;
  std::size_t batch_size = 40;
  double train_fraction = 0.8;
  std::size_t max_epochs = 200;
  std::optional<std::size_t> patience = 10;
  /// Sweep grid spacing and evaluation states per grid point.
  double grid_step = 0.05;
  std::size_t states_per_point = 1000;
  std::pair<int, int> mix_terms_range{2, 7};
  /// Mixture term range used for the (0.4, 0.5) mixed bin.
  std::pair<int, int> top_bin_mix_terms{2, 4};
  std::size_t retry_cap = stategen::kDefaultRetryCap;
  std::uint64_t seed = 1;

  bool operator==(const ExperimentSpec&) const = default;
};

/// Caption defaults. Desk scale divides S and the sweep sample count by ten.
ExperimentSpec default_spec(ExperimentId id, Scale scale = Scale::full);
/// Throws ConfigError on inconsistent settings.
void validate(const ExperimentSpec& spec);
/// "256:128:16:1" -> {16, 256, 128, 16, 1}; "16:4:1" stays as is.
std::vector<std::size_t> caption_topology(std::string_view text);

struct Context {
  /// Output directory; empty disables all file output including the dataset cache.
  std::string out_dir;
  /// Parallel jobs for generation and replicates. Results do not depend on it.
  std::size_t jobs = 1;
  /// Progress messages; may be empty.
  std::function<void(std::string_view)> log;
};

/// One training run.
struct RunRecord {
  std::string label;
  std::uint64_t seed = 0;
  nn::RunMetrics metrics;
};

// -- results -----------------------------------------------------------------

struct SepVsBellResult {
  std::vector<RunRecord> runs;
  /// Text of summary_<id>.txt.
  std::string summary;
  double mean_final_asr = 0.0;
  double min_final_asr = 0.0;
  /// Per run, first epoch whose test ASR reached 0.99 (0 when never).
  std::vector<std::size_t> epochs_to_target;
  /// Mean test ASR of the untrained networks.
  double untrained_asr = 0.0;
};

/// asr[train purity][test purity][TW bin][TO bin], purity 0 = pure, 1 = mixed.
using Grid5 = std::array<std::array<double, 5>, 5>;
struct GridResult {
  std::vector<RunRecord> runs;
  /// Text of summary_<id>.txt.
  std::string summary;
  std::array<std::array<Grid5, 2>, 2> mean{};
  /// Per-replicate values in the same layout, indexed [replicate].
  std::vector<std::array<std::array<Grid5, 2>, 2>> per_replicate;
};

struct GeneralistResult {
  std::vector<RunRecord> runs;
  /// Text of summary_<id>.txt.
  std::string summary;
  /// [purity][bin] mean over replicates.
  std::array<std::array<double, 5>, 2> mean{};
  std::array<std::array<double, 5>, 2> min{};
  std::vector<std::array<std::array<double, 5>, 2>> per_replicate;
};

struct SweepCurve {
  std::string variant;  // shallow | deep
  std::string family;   // epsilon_pure | epsilon_mixed | werner
  std::vector<double> abscissa;
  /// Fraction of the evaluation states the oracle calls entangled.
  std::vector<double> oracle_entangled;
  std::vector<double> mean;
  /// [replicate][point] detection probability.
  std::vector<std::vector<double>> per_replicate;

  /// Mean detection at the grid point closest to x.
  double at(double x) const;
};

struct SweepResult {
  std::vector<RunRecord> runs;
  /// Text of summary_<id>.txt.
  std::string summary;
  std::vector<SweepCurve> curves;
  const SweepCurve& curve(std::string_view variant, std::string_view family) const;
};

struct FamiliesResult {
  std::vector<RunRecord> runs;
  /// Text of summary_<id>.txt.
  std::string summary;
  /// Order: be3, ghz3, w3.
  std::array<std::string, 3> families{"be3", "ghz3", "w3"};
  std::array<double, 3> mean_best_bce{};
  std::array<double, 3> mean_final_asr{};
  std::array<double, 3> mean_best_epoch{};
  /// cross[train][test]; the diagonal uses the held-out test split.
  std::array<std::array<double, 3>, 3> cross{};
};

struct CategoricalResult {
  std::vector<RunRecord> runs;
  /// Text of summary_<id>.txt.
  std::string summary;
  std::vector<double> final_asr;
  double mean_asr = 0.0;
  double best_asr = 0.0;
  double worst_asr = 0.0;
  double mean_best_epoch = 0.0;
  /// Summed confusion counts over runs, [true][predicted].
  std::vector<std::vector<std::size_t>> confusion;
};

SepVsBellResult run_sep_vs_bell(const ExperimentSpec& spec, const Context& ctx);
GridResult run_tw_to_grid(const ExperimentSpec& spec, const Context& ctx);
GeneralistResult run_generalist(const ExperimentSpec& spec, const Context& ctx);
SweepResult run_epsilon_sweep(const ExperimentSpec& spec, const Context& ctx);
SweepResult run_werner_sweep(const ExperimentSpec& spec, const Context& ctx);
/// Writes the per-family curves (families_binary) and the cross matrix
/// summary under `spec.id`.
FamiliesResult run_families_binary(const ExperimentSpec& spec, const Context& ctx);
CategoricalResult run_categorical(const ExperimentSpec& spec, const Context& ctx);

struct Report {
  std::vector<std::string> files;
  std::string summary;
};

/// Dispatches on spec.id and writes the experiment's files under ctx.out_dir.
Report run_experiment(const ExperimentSpec& spec, const Context& ctx);

/// Dataset for `gen`, read from ctx.out_dir/datasets when cached there, else
/// generated and cached. Cached files are re-verified against the oracle.
stategen::Dataset obtain_dataset(const stategen::GenSpec& gen, const Context& ctx);

}  // namespace entdetect::experiments
