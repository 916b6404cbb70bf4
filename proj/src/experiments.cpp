#include "entdetect/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <numeric>

#include "entdetect/error.hpp"
#include "entdetect/io.hpp"
#include "entdetect/parallel.hpp"
#include "entdetect/rng.hpp"

namespace entdetect::experiments {

using pipeline::LabelKind;
using pipeline::Source;
using stategen::Dataset;
using stategen::GenSpec;
using stategen::StateFamily;

namespace {

constexpr double kTargetAsr = 0.99;
const char* const kPurity[2] = {"pure", "mixed"};

void say(const Context& ctx, const std::string& msg) {
  if (ctx.log) ctx.log(msg);
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t derive(std::uint64_t seed, std::string_view tag) { return mix_seed(seed, io::fnv1a(tag)); }

std::uint64_t run_seed(const ExperimentSpec& spec, std::string_view tag, std::size_t replicate) {
  return mix_seed(derive(spec.seed, tag), replicate);
}

void write_out(const Context& ctx, const std::string& name, std::string_view content) {
  if (!ctx.out_dir.empty()) io::write_file_atomic(ctx.out_dir + "/" + name, content);
}

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

GenSpec gen_spec(StateFamily family, std::size_t count, std::uint64_t seed, const ExperimentSpec& spec) {
  GenSpec g;
  g.family = family;
  g.count = count;
  g.seed = seed;
  g.mix_terms_range = spec.mix_terms_range;
  g.retry_cap = spec.retry_cap;
  return g;
}

/// Entangled two-qubit states of one purity in negativity bin `bin`.
GenSpec bin_spec(int purity, std::size_t bin, std::size_t count, std::uint64_t seed, const ExperimentSpec& spec) {
  GenSpec g = gen_spec(purity == 0 ? StateFamily::random2_pure : StateFamily::random2_mixed, count, seed, spec);
  g.negativity_interval = kBins[bin];
  if (purity == 1 && bin == kBins.size() - 1) g.mix_terms_range = spec.top_bin_mix_terms;
  return g;
}

GenSpec sep_spec(int purity, std::size_t count, std::uint64_t seed, const ExperimentSpec& spec) {
  return gen_spec(purity == 0 ? StateFamily::sep2_pure : StateFamily::sep2_mixed, count, seed, spec);
}

/// Whole datasets stacked in order, without shuffling.
nn::LabeledData stack(std::span<const Source> sources, LabelKind kind) {
  std::vector<nn::LabeledData> parts;
  Eigen::Index cols = 0;
  for (const auto& s : sources) {
    parts.push_back(pipeline::to_labeled(*s.dataset, kind));
    for (int y : parts.back().labels) {
      if (y != s.label) throw InvalidState("stacked dataset label disagrees with the oracle");
    }
    cols += parts.back().inputs.cols();
  }
  nn::LabeledData out;
  out.inputs.resize(parts.front().inputs.rows(), cols);
  Eigen::Index at = 0;
  for (auto& p : parts) {
    out.inputs.middleCols(at, p.inputs.cols()) = p.inputs;
    at += p.inputs.cols();
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
  }
  return out;
}

struct Trained {
  nn::Mlp<float> model;
  nn::RunMetrics metrics;
  pipeline::SplitDataset split;
  double untrained_asr = 0.0;
};

Trained train_one(const ExperimentSpec& spec, const std::vector<std::size_t>& sizes, nn::OutputKind head,
                  std::span<const Source> sources, LabelKind kind, std::uint64_t seed) {
  auto split = pipeline::assemble(sources, kind, spec.train_fraction, mix_seed(seed, 1));
  auto init = nn::glorot_uniform_init<float>(sizes, head, mix_seed(seed, 2));
  const double untrained = nn::asr(init, split.test);
  nn::TrainConfig cfg;
  cfg.batch_size = spec.batch_size;
  cfg.train_fraction = spec.train_fraction;
  cfg.max_epochs = spec.max_epochs;
  cfg.patience = spec.patience;
  cfg.seed = mix_seed(seed, 3);
  cfg.optimizer.kind = spec.optimizer;
  cfg.optimizer.learning_rate = spec.learning_rate;
  auto fit = nn::fit(std::move(init), split.train, split.test, cfg);
  return {std::move(fit.model), std::move(fit.metrics), std::move(split), untrained};
}

std::string metrics_name(ExperimentId id, std::uint64_t seed) {
  return "metrics_" + std::string(to_string(id)) + "_" + std::to_string(seed) + ".csv";
}

void record_run(const Context& ctx, ExperimentId id, RunRecord& slot, std::string label, std::uint64_t seed,
                const nn::Mlp<float>& model, nn::RunMetrics metrics) {
  write_out(ctx, metrics_name(id, seed), nn::format_metrics_csv(metrics));
  if (!ctx.out_dir.empty()) {
    nn::write_checkpoint(ctx.out_dir + "/model_" + std::string(to_string(id)) + "_" + std::to_string(seed) + ".model",
                         model);
  }
  say(ctx, "[" + std::string(to_string(id)) + "] " + label + ": epochs=" + std::to_string(metrics.epochs_run()) +
               " best=" + std::to_string(metrics.best_epoch) + " asr=" + fixed(metrics.final_asr));
  slot = {std::move(label), seed, std::move(metrics)};
}

/// group,epoch,mean_test_loss,mean_test_asr,active,loss_0..loss_{k-1}
std::string learning_curves_csv(const std::vector<std::pair<std::string, std::vector<const RunRecord*>>>& groups) {
  std::size_t width = 0;
  for (const auto& g : groups) width = std::max(width, g.second.size());
  std::string out = "group,epoch,mean_test_loss,mean_test_asr,active";
  for (std::size_t r = 0; r < width; ++r) out += ",loss_" + std::to_string(r);
  out += '\n';
  for (const auto& [name, runs] : groups) {
    std::size_t epochs = 0;
    for (const auto* r : runs) epochs = std::max(epochs, r->metrics.epochs_run());
    for (std::size_t e = 0; e < epochs; ++e) {
      double loss = 0.0, acc = 0.0;
      std::size_t active = 0;
      std::string cols;
      for (std::size_t r = 0; r < width; ++r) {
        cols += ',';
        if (r < runs.size() && e < runs[r]->metrics.epochs_run()) {
          loss += runs[r]->metrics.test_loss[e];
          acc += runs[r]->metrics.test_asr[e];
          ++active;
          cols += io::format_double(runs[r]->metrics.test_loss[e]);
        }
      }
      out += name + ',' + std::to_string(e + 1) + ',' + io::format_double(loss / static_cast<double>(active)) + ',' +
             io::format_double(acc / static_cast<double>(active)) + ',' + std::to_string(active) + cols + '\n';
    }
  }
  return out;
}

std::string runs_section(const std::vector<RunRecord>& runs) {
  std::string out = "\nruns (label seed epochs best_epoch best_test_loss final_asr)\n";
  for (const auto& r : runs) {
    out += "  " + r.label + ' ' + std::to_string(r.seed) + ' ' + std::to_string(r.metrics.epochs_run()) + ' ' +
           std::to_string(r.metrics.best_epoch) + ' ' + fixed(r.metrics.best_test_loss(), 6) + ' ' +
           fixed(r.metrics.final_asr) + '\n';
  }
  return out;
}

std::string header(const ExperimentSpec& spec) {
  std::string out = "experiment " + std::string(to_string(spec.id)) + "\nseed " + std::to_string(spec.seed) +
                    "\ndataset_size " + std::to_string(spec.dataset_size) + "\nreplicates " +
                    std::to_string(spec.replicates) + "\noptimizer " + std::string(nn::to_string(spec.optimizer)) +
                    " lr=" + io::format_short(spec.learning_rate) + "\nbatch_size " + std::to_string(spec.batch_size) +
                    "\ntrain_fraction " + io::format_short(spec.train_fraction) + "\nmax_epochs " +
                    std::to_string(spec.max_epochs) + "\npatience " +
                    (spec.patience ? std::to_string(*spec.patience) : std::string("none")) + '\n';
  return out;
}

/// The pure and mixed trained-with/tested-on datasets of one bin, shared by
/// the grid and the generalist.
struct BinData {
  Dataset sep;
  Dataset ent;
};

std::array<std::array<BinData, 5>, 2> bin_datasets(const ExperimentSpec& spec, const Context& ctx, std::size_t half) {
  std::array<std::array<BinData, 5>, 2> out;
  for (int p = 0; p < 2; ++p) {
    for (std::size_t b = 0; b < kBins.size(); ++b) {
      const std::string tag = std::string(kPurity[p]) + "/" + std::to_string(b);
      say(ctx, "datasets: " + tag);
      out[p][b].sep = obtain_dataset(sep_spec(p, half, derive(spec.seed, "binsep/" + tag), spec), ctx);
      out[p][b].ent = obtain_dataset(bin_spec(p, b, half, derive(spec.seed, "bin/" + tag), spec), ctx);
    }
  }
  return out;
}

std::array<std::array<nn::LabeledData, 5>, 2> bin_eval_sets(const std::array<std::array<BinData, 5>, 2>& data) {
  std::array<std::array<nn::LabeledData, 5>, 2> out;
  for (int p = 0; p < 2; ++p) {
    for (std::size_t b = 0; b < 5; ++b) {
      const Source src[] = {{&data[p][b].sep, 0}, {&data[p][b].ent, 1}};
      out[p][b] = stack(src, LabelKind::binary);
    }
  }
  return out;
}

std::string bins_label(std::size_t b) {
  return "(" + io::format_short(kBins[b].lo) + "," + io::format_short(kBins[b].hi) + ")";
}

std::vector<double> sweep_grid(double step) {
  std::vector<double> x;
  const auto n = static_cast<std::size_t>(std::llround(1.0 / step));
  for (std::size_t k = 0; k <= n; ++k) x.push_back(std::min(1.0, static_cast<double>(k) * step));
  return x;
}

/// Trains the shallow and deep detectors on the arbitrary-negativity set.
/// Returns models indexed [variant * replicates + replicate].
std::vector<nn::Mlp<float>> train_detectors(const ExperimentSpec& spec, const Context& ctx,
                                            std::vector<RunRecord>& runs) {
  const std::size_t quarter = spec.dataset_size / 4;
  const std::size_t cell = spec.dataset_size / 20;
  std::vector<Dataset> data;
  data.reserve(12);
  std::vector<int> labels;
  for (int p = 0; p < 2; ++p) {
    data.push_back(obtain_dataset(sep_spec(p, quarter, derive(spec.seed, std::string("arb/sep/") + kPurity[p]), spec), ctx));
    labels.push_back(0);
  }
  for (int p = 0; p < 2; ++p) {
    for (std::size_t b = 0; b < kBins.size(); ++b) {
      const std::string tag = std::string("arb/ent/") + kPurity[p] + "/" + std::to_string(b);
      data.push_back(obtain_dataset(bin_spec(p, b, cell, derive(spec.seed, tag), spec), ctx));
      labels.push_back(1);
    }
  }
  std::vector<Source> sources;
  for (std::size_t i = 0; i < data.size(); ++i) sources.push_back({&data[i], labels[i]});

  const std::vector<std::size_t> sizes[2] = {caption_topology(spec.topology), caption_topology(spec.deep_topology)};
  const char* const names[2] = {"shallow", "deep"};
  const std::size_t n = 2 * spec.replicates;
  std::vector<std::optional<nn::Mlp<float>>> models(n);
  runs.assign(n, {});
  parallel_for(n, ctx.jobs, [&](std::size_t job) {
    const std::size_t v = job / spec.replicates, r = job % spec.replicates;
    const auto seed = run_seed(spec, std::string("detector/") + names[v], r);
    auto t = train_one(spec, sizes[v], nn::OutputKind::sigmoid, sources, LabelKind::binary, seed);
    record_run(ctx, spec.id, runs[job], std::string(names[v]) + "/" + std::to_string(r), seed, t.model,
               std::move(t.metrics));
    models[job] = std::move(t.model);
  });
  std::vector<nn::Mlp<float>> out;
  for (auto& m : models) out.push_back(std::move(*m));
  return out;
}

SweepResult run_sweep(const ExperimentSpec& spec, const Context& ctx, bool werner) {
  validate(spec);
  SweepResult res;
  const auto models = train_detectors(spec, ctx, res.runs);
  const auto grid = sweep_grid(spec.grid_step);
  const std::vector<StateFamily> families =
      werner ? std::vector<StateFamily>{StateFamily::werner}
             : std::vector<StateFamily>{StateFamily::epsilon_pure, StateFamily::epsilon_mixed};
  const char* const names[2] = {"shallow", "deep"};

  for (StateFamily fam : families) {
    std::vector<nn::LabeledData> sets;
    std::vector<double> oracle;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      GenSpec g = gen_spec(fam, spec.states_per_point,
                           derive(spec.seed, "sweep/" + std::string(stategen::to_string(fam)) + "/" + std::to_string(k)), spec);
      if (werner) {
        g.werner_p = grid[k];
      } else {
        g.epsilon = grid[k];
      }
      const Dataset ds = obtain_dataset(g, ctx);
      sets.push_back(pipeline::to_labeled(ds, LabelKind::binary));
      oracle.push_back(mean_of(std::vector<double>(sets.back().labels.begin(), sets.back().labels.end())));
    }
    for (std::size_t v = 0; v < 2; ++v) {
      SweepCurve c;
      c.variant = names[v];
      c.family = std::string(stategen::to_string(fam));
      c.abscissa = grid;
      c.oracle_entangled = oracle;
      c.per_replicate.assign(spec.replicates, std::vector<double>(grid.size(), 0.0));
      parallel_for(spec.replicates, ctx.jobs, [&](std::size_t r) {
        const auto& model = models[v * spec.replicates + r];
        for (std::size_t k = 0; k < grid.size(); ++k) {
          const auto pred = nn::predict(model, sets[k].inputs);
          c.per_replicate[r][k] = static_cast<double>(std::count(pred.begin(), pred.end(), 1)) /
                                  static_cast<double>(pred.size());
        }
      });
      for (std::size_t k = 0; k < grid.size(); ++k) {
        double s = 0.0;
        for (const auto& rep : c.per_replicate) s += rep[k];
        c.mean.push_back(s / static_cast<double>(spec.replicates));
      }
      res.curves.push_back(std::move(c));
    }
  }

  // curve_<id>.csv
  std::string csv = "variant,family,x,oracle_entangled,mean_detection";
  for (std::size_t r = 0; r < spec.replicates; ++r) csv += ",rep_" + std::to_string(r);
  csv += '\n';
  for (const auto& c : res.curves) {
    for (std::size_t k = 0; k < c.abscissa.size(); ++k) {
      csv += c.variant + ',' + c.family + ',' + io::format_short(c.abscissa[k]) + ',' +
             io::format_double(c.oracle_entangled[k]) + ',' + io::format_double(c.mean[k]);
      for (const auto& rep : c.per_replicate) csv += ',' + io::format_double(rep[k]);
      csv += '\n';
    }
  }
  write_out(ctx, "curve_" + std::string(to_string(spec.id)) + ".csv", csv);

  std::string s = header(spec);
  s += "shallow " + spec.topology + "\ndeep " + spec.deep_topology + "\nstates_per_point " +
       std::to_string(spec.states_per_point) + "\n\ndetection probability (mean over replicates)\n";
  for (const auto& c : res.curves) {
    s += "\n" + c.variant + " " + c.family + "\n  x      oracle  detected\n";
    for (std::size_t k = 0; k < c.abscissa.size(); ++k) {
      s += "  " + fixed(c.abscissa[k], 2) + "   " + fixed(c.oracle_entangled[k], 3) + "   " + fixed(c.mean[k]) + '\n';
    }
  }
  s += runs_section(res.runs);
  res.summary = s;
  write_out(ctx, "summary_" + std::string(to_string(spec.id)) + ".txt", s);
  return res;
}

}  // namespace

// -- ids and specs -------------------------------------------------------------

std::string_view to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::fig_sep_vs_bell: return "fig_sep_vs_bell";
    case ExperimentId::tw_to_grid: return "tw_to_grid";
    case ExperimentId::generalist: return "generalist";
    case ExperimentId::epsilon_sweep: return "epsilon_sweep";
    case ExperimentId::werner_sweep: return "werner_sweep";
    case ExperimentId::families_binary: return "families_binary";
    case ExperimentId::cross_family: return "cross_family";
    case ExperimentId::categorical_runs: return "categorical_runs";
  }
  return "?";
}

const std::vector<ExperimentId>& all_experiments() {
  static const std::vector<ExperimentId> ids{
      ExperimentId::fig_sep_vs_bell, ExperimentId::tw_to_grid,     ExperimentId::generalist,
      ExperimentId::epsilon_sweep,   ExperimentId::werner_sweep,   ExperimentId::families_binary,
      ExperimentId::cross_family,    ExperimentId::categorical_runs};
  return ids;
}

ExperimentId parse_experiment_id(std::string_view s) {
  for (auto id : all_experiments())
    if (to_string(id) == s) return id;
  throw ConfigError("unknown experiment id '" + std::string(s) + "'");
}

std::string_view to_string(Scale scale) { return scale == Scale::full ? "full" : "desk"; }

Scale parse_scale(std::string_view s) {
  if (s == "full") return Scale::full;
  if (s == "desk") return Scale::desk;
  throw ConfigError("scale must be 'full' or 'desk'");
}

std::vector<std::size_t> caption_topology(std::string_view text) {
  auto sizes = nn::parse_topology(text);
  if (sizes.front() != 16) sizes.insert(sizes.begin(), 16);
  return sizes;
}

ExperimentSpec default_spec(ExperimentId id, Scale scale) {
  ExperimentSpec s;
  s.id = id;
  switch (id) {
    case ExperimentId::fig_sep_vs_bell:
      s.topology = "16:8:1";
      s.dataset_size = 20000;
      s.replicates = 100;
      s.max_epochs = 30;
      break;
    case ExperimentId::tw_to_grid:
      s.pure_topologies = {"256:128:16:1", "128:16:1", "64:16:1", "32:4:1", "16:4:1"};
      s.mixed_topologies = {"256:128:16:1", "128:16:1", "64:8:1", "16:4:1", "16:1"};
      s.dataset_size = 20000;
      break;
    case ExperimentId::generalist:
      s.topology = "16:256:128:16:1";
      s.dataset_size = 40000;
      break;
    case ExperimentId::epsilon_sweep:
    case ExperimentId::werner_sweep:
      s.topology = "16:64:16:1";
      s.deep_topology = "16:256:128:64:16:1";
      s.dataset_size = 40000;
      break;
    case ExperimentId::families_binary:
    case ExperimentId::cross_family:
      s.topology = "16:512:128:32:1";
      s.optimizer = nn::OptimizerKind::adam;
      s.dataset_size = 200000;
      s.train_fraction = 0.75;
      break;
    case ExperimentId::categorical_runs:
      s.topology = "16:512:128:32:4";
      s.optimizer = nn::OptimizerKind::adam;
      s.dataset_size = 400000;
      s.train_fraction = 0.75;
      s.batch_size = 1000;
      break;
  }
  if (scale == Scale::desk) {
    s.dataset_size /= 10;
    s.states_per_point /= 10;
  }
  return s;
}

void validate(const ExperimentSpec& s) {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(s.replicates >= 1, "replicates must be at least 1");
  need(s.batch_size >= 1, "batch size must be at least 1");
  need(s.max_epochs >= 1, "max epochs must be at least 1");
  need(s.train_fraction > 0.0 && s.train_fraction < 1.0, "train fraction must lie in (0, 1)");
  need(s.learning_rate > 0.0, "learning rate must be positive");
  need(s.grid_step > 0.0 && s.grid_step <= 1.0, "grid step must lie in (0, 1]");
  need(s.states_per_point >= 1, "states per point must be at least 1");
  need(s.retry_cap >= 1, "retry cap must be at least 1");
  need(s.mix_terms_range.first >= 2 && s.mix_terms_range.first <= s.mix_terms_range.second,
       "mix terms range must satisfy 2 <= lo <= hi");
  need(s.top_bin_mix_terms.first >= 2 && s.top_bin_mix_terms.first <= s.top_bin_mix_terms.second,
       "top-bin mix terms range must satisfy 2 <= lo <= hi");

  const std::size_t min_size = s.id == ExperimentId::epsilon_sweep || s.id == ExperimentId::werner_sweep ? 20
                               : s.id == ExperimentId::generalist || s.id == ExperimentId::categorical_runs ? 4
                                                                                                          : 2;
  need(s.dataset_size >= min_size, "dataset size too small for " + std::string(to_string(s.id)));

  auto check_binary = [&](const std::string& topo, const char* what) {
    const auto sizes = caption_topology(topo);
    need(sizes.front() == 16, std::string(what) + " must take 16 inputs");
    need(sizes.back() == 1, std::string(what) + " must end in a single sigmoid output");
  };
  switch (s.id) {
    case ExperimentId::tw_to_grid:
      need(s.pure_topologies.size() == 5 && s.mixed_topologies.size() == 5, "the grid needs five topologies per purity");
      for (const auto& t : s.pure_topologies) check_binary(t, "grid topology");
      for (const auto& t : s.mixed_topologies) check_binary(t, "grid topology");
      break;
    case ExperimentId::epsilon_sweep:
    case ExperimentId::werner_sweep:
      check_binary(s.topology, "shallow topology");
      check_binary(s.deep_topology, "deep topology");
      break;
    case ExperimentId::categorical_runs: {
      const auto sizes = caption_topology(s.topology);
      need(sizes.front() == 16 && sizes.back() == 4, "categorical topology must be 16 -> ... -> 4");
      break;
    }
    default:
      check_binary(s.topology, "topology");
  }
}

// -- datasets ------------------------------------------------------------------

Dataset obtain_dataset(const GenSpec& gen, const Context& ctx) {
  std::string key = std::string(stategen::to_string(gen.family)) + ";" + std::to_string(gen.count) + ";" +
                    std::to_string(gen.seed);
  for (const auto& [k, v] : stategen::spec_extra(gen)) key += ";" + k + "=" + v;
  const std::string path = ctx.out_dir.empty()
                               ? std::string()
                               : ctx.out_dir + "/datasets/" + std::string(stategen::to_string(gen.family)) + "_" +
                                     std::to_string(gen.count) + "_" + hex(io::fnv1a(key)) + ".csv";
  if (!path.empty() && std::filesystem::exists(path)) {
    Dataset ds = stategen::read_dataset(path);
    if (ds.family != gen.family || ds.seed != gen.seed || ds.rows.size() != gen.count ||
        ds.extra != stategen::spec_extra(gen)) {
      throw FormatError("cached dataset " + path + " does not match its generation spec");
    }
    stategen::verify_dataset(ds);
    return ds;
  }
  Dataset ds = stategen::build_dataset(gen, ctx.jobs);
  if (!path.empty()) stategen::write_dataset(path, ds);
  return ds;
}

// -- experiments -----------------------------------------------------------------

double SweepCurve::at(double x) const {
  std::size_t best = 0;
  for (std::size_t k = 1; k < abscissa.size(); ++k)
    if (std::abs(abscissa[k] - x) < std::abs(abscissa[best] - x)) best = k;
  return mean.at(best);
}

const SweepCurve& SweepResult::curve(std::string_view variant, std::string_view family) const {
  for (const auto& c : curves)
    if (c.variant == variant && c.family == family) return c;
  throw ConfigError("no sweep curve " + std::string(variant) + "/" + std::string(family));
}

SepVsBellResult run_sep_vs_bell(const ExperimentSpec& spec, const Context& ctx) {
  validate(spec);
  const std::size_t half = spec.dataset_size / 2;
  const Dataset sep = obtain_dataset(gen_spec(StateFamily::sep2_pure, half, derive(spec.seed, "sep2_pure"), spec), ctx);
  const Dataset bell =
      obtain_dataset(gen_spec(StateFamily::bell_random, half, derive(spec.seed, "bell_random"), spec), ctx);
  const Source sources[] = {{&sep, 0}, {&bell, 1}};
  const auto sizes = caption_topology(spec.topology);

  SepVsBellResult res;
  res.runs.resize(spec.replicates);
  std::vector<double> untrained(spec.replicates);
  parallel_for(spec.replicates, ctx.jobs, [&](std::size_t r) {
    const auto seed = run_seed(spec, "sep_vs_bell", r);
    auto t = train_one(spec, sizes, nn::OutputKind::sigmoid, sources, LabelKind::binary, seed);
    untrained[r] = t.untrained_asr;
    record_run(ctx, spec.id, res.runs[r], "rep" + std::to_string(r), seed, t.model, std::move(t.metrics));
  });

  std::vector<double> finals;
  for (const auto& run : res.runs) {
    finals.push_back(run.metrics.final_asr);
    std::size_t hit = 0;
    for (std::size_t e = 0; e < run.metrics.epochs_run(); ++e) {
      if (run.metrics.test_asr[e] >= kTargetAsr) {
        hit = e + 1;
        break;
      }
    }
    res.epochs_to_target.push_back(hit);
  }
  res.mean_final_asr = mean_of(finals);
  res.min_final_asr = *std::min_element(finals.begin(), finals.end());
  res.untrained_asr = mean_of(untrained);

  std::vector<const RunRecord*> ptrs;
  for (const auto& r : res.runs) ptrs.push_back(&r);
  write_out(ctx, "curve_" + std::string(to_string(spec.id)) + ".csv", learning_curves_csv({{"sep_vs_bell", ptrs}}));

  const auto never = std::count(res.epochs_to_target.begin(), res.epochs_to_target.end(), 0U);
  std::size_t slowest = 0;
  for (auto e : res.epochs_to_target) slowest = std::max(slowest, e);
  std::string s = header(spec);
  s += "topology " + spec.topology + "\n\nmean_final_asr " + fixed(res.mean_final_asr) + "\nmin_final_asr " +
       fixed(res.min_final_asr) + "\nuntrained_asr " + fixed(res.untrained_asr) + "\nslowest_epoch_to_0.99 " +
       std::to_string(slowest) + "\nruns_never_reaching_0.99 " + std::to_string(never) + '\n';
  s += runs_section(res.runs);
  res.summary = s;
  write_out(ctx, "summary_" + std::string(to_string(spec.id)) + ".txt", s);
  return res;
}

GridResult run_tw_to_grid(const ExperimentSpec& spec, const Context& ctx) {
  validate(spec);
  const auto data = bin_datasets(spec, ctx, spec.dataset_size / 2);
  const auto eval = bin_eval_sets(data);

  GridResult res;
  const std::size_t cells = 2 * kBins.size();
  const std::size_t n = cells * spec.replicates;
  res.runs.resize(n);
  res.per_replicate.assign(spec.replicates, {});
  parallel_for(n, ctx.jobs, [&](std::size_t job) {
    const std::size_t cell = job / spec.replicates, r = job % spec.replicates;
    const int p = static_cast<int>(cell / kBins.size());
    const std::size_t b = cell % kBins.size();
    const auto& topo = p == 0 ? spec.pure_topologies[b] : spec.mixed_topologies[b];
    const Source src[] = {{&data[p][b].sep, 0}, {&data[p][b].ent, 1}};
    const std::string label = std::string(kPurity[p]) + bins_label(b) + "/" + std::to_string(r);
    const auto seed = run_seed(spec, std::string("grid/") + kPurity[p] + "/" + std::to_string(b), r);
    auto t = train_one(spec, caption_topology(topo), nn::OutputKind::sigmoid, src, LabelKind::binary, seed);
    for (int q = 0; q < 2; ++q) {
      for (std::size_t c = 0; c < kBins.size(); ++c) {
        res.per_replicate[r][p][q][b][c] = (p == q && b == c) ? t.metrics.final_asr : nn::asr(t.model, eval[q][c]);
      }
    }
    record_run(ctx, spec.id, res.runs[job], label, seed, t.model, std::move(t.metrics));
  });
  for (const auto& rep : res.per_replicate)
    for (int p = 0; p < 2; ++p)
      for (int q = 0; q < 2; ++q)
        for (std::size_t b = 0; b < 5; ++b)
          for (std::size_t c = 0; c < 5; ++c) res.mean[p][q][b][c] += rep[p][q][b][c] / static_cast<double>(spec.replicates);

  std::string csv = "train_purity,test_purity,tw_lo,tw_hi,to_lo,to_hi,mean_asr";
  for (std::size_t r = 0; r < spec.replicates; ++r) csv += ",rep_" + std::to_string(r);
  csv += '\n';
  std::string s = header(spec) + "\nmean ASR; rows = trained with (TW), columns = tested on (TO)\n";
  for (int p = 0; p < 2; ++p) {
    for (int q = 0; q < 2; ++q) {
      s += "\nTW " + std::string(kPurity[p]) + " -> TO " + kPurity[q] + "\n           ";
      for (std::size_t c = 0; c < 5; ++c) s += " " + bins_label(c);
      s += '\n';
      for (std::size_t b = 0; b < 5; ++b) {
        s += "  " + bins_label(b) + "  ";
        for (std::size_t c = 0; c < 5; ++c) {
          s += "  " + fixed(res.mean[p][q][b][c]);
          csv += std::string(kPurity[p]) + ',' + kPurity[q] + ',' + io::format_short(kBins[b].lo) + ',' +
                 io::format_short(kBins[b].hi) + ',' + io::format_short(kBins[c].lo) + ',' +
                 io::format_short(kBins[c].hi) + ',' + io::format_double(res.mean[p][q][b][c]);
          for (const auto& rep : res.per_replicate) csv += ',' + io::format_double(rep[p][q][b][c]);
          csv += '\n';
        }
        s += '\n';
      }
    }
  }
  s += "\ntopologies pure:";
  for (const auto& t : spec.pure_topologies) s += " " + nn::format_topology(caption_topology(t));
  s += "\ntopologies mixed:";
  for (const auto& t : spec.mixed_topologies) s += " " + nn::format_topology(caption_topology(t));
  s += '\n' + runs_section(res.runs);
  res.summary = s;
  write_out(ctx, "curve_" + std::string(to_string(spec.id)) + ".csv", csv);
  write_out(ctx, "summary_" + std::string(to_string(spec.id)) + ".txt", s);
  return res;
}

GeneralistResult run_generalist(const ExperimentSpec& spec, const Context& ctx) {
  validate(spec);
  const std::size_t quarter = spec.dataset_size / 4;
  std::vector<Dataset> train_data;
  for (int p = 0; p < 2; ++p) {
    train_data.push_back(
        obtain_dataset(sep_spec(p, quarter, derive(spec.seed, std::string("generalist/sep/") + kPurity[p]), spec), ctx));
    train_data.push_back(
        obtain_dataset(bin_spec(p, 0, quarter, derive(spec.seed, std::string("generalist/ent/") + kPurity[p]), spec), ctx));
  }
  const Source sources[] = {{&train_data[0], 0}, {&train_data[1], 1}, {&train_data[2], 0}, {&train_data[3], 1}};
  // Test sets: the whole trained-with/tested-on datasets, S/2 per class.
  const auto eval = bin_eval_sets(bin_datasets(spec, ctx, spec.dataset_size / 4));
  const auto sizes = caption_topology(spec.topology);

  GeneralistResult res;
  res.runs.resize(spec.replicates);
  res.per_replicate.assign(spec.replicates, {});
  parallel_for(spec.replicates, ctx.jobs, [&](std::size_t r) {
    const auto seed = run_seed(spec, "generalist", r);
    auto t = train_one(spec, sizes, nn::OutputKind::sigmoid, sources, LabelKind::binary, seed);
    for (int q = 0; q < 2; ++q)
      for (std::size_t c = 0; c < 5; ++c) res.per_replicate[r][q][c] = nn::asr(t.model, eval[q][c]);
    record_run(ctx, spec.id, res.runs[r], "rep" + std::to_string(r), seed, t.model, std::move(t.metrics));
  });
  for (int q = 0; q < 2; ++q) {
    for (std::size_t c = 0; c < 5; ++c) {
      double sum = 0.0, lo = 1.0;
      for (const auto& rep : res.per_replicate) {
        sum += rep[q][c];
        lo = std::min(lo, rep[q][c]);
      }
      res.mean[q][c] = sum / static_cast<double>(spec.replicates);
      res.min[q][c] = lo;
    }
  }

  std::string csv = "test_purity,to_lo,to_hi,mean_asr,min_asr";
  for (std::size_t r = 0; r < spec.replicates; ++r) csv += ",rep_" + std::to_string(r);
  csv += '\n';
  std::string s = header(spec) + "topology " + spec.topology + "\n\nASR on the tested-on datasets (mean / min over replicates)\n";
  for (int q = 0; q < 2; ++q) {
    for (std::size_t c = 0; c < 5; ++c) {
      s += "  " + std::string(kPurity[q]) + " " + bins_label(c) + "  " + fixed(res.mean[q][c]) + "  " +
           fixed(res.min[q][c]) + '\n';
      csv += std::string(kPurity[q]) + ',' + io::format_short(kBins[c].lo) + ',' + io::format_short(kBins[c].hi) + ',' +
             io::format_double(res.mean[q][c]) + ',' + io::format_double(res.min[q][c]);
      for (const auto& rep : res.per_replicate) csv += ',' + io::format_double(rep[q][c]);
      csv += '\n';
    }
  }
  s += runs_section(res.runs);
  res.summary = s;
  write_out(ctx, "curve_" + std::string(to_string(spec.id)) + ".csv", csv);
  write_out(ctx, "summary_" + std::string(to_string(spec.id)) + ".txt", s);
  return res;
}

SweepResult run_epsilon_sweep(const ExperimentSpec& spec, const Context& ctx) { return run_sweep(spec, ctx, false); }

SweepResult run_werner_sweep(const ExperimentSpec& spec, const Context& ctx) { return run_sweep(spec, ctx, true); }

FamiliesResult run_families_binary(const ExperimentSpec& spec, const Context& ctx) {
  validate(spec);
  const StateFamily fams[3] = {StateFamily::be3, StateFamily::ghz3, StateFamily::w3};
  const std::size_t half = spec.dataset_size / 2;
  std::array<Dataset, 3> sep, ent;
  std::array<nn::LabeledData, 3> whole;
  FamiliesResult res;
  for (std::size_t i = 0; i < 3; ++i) {
    say(ctx, "datasets: " + res.families[i]);
    sep[i] = obtain_dataset(gen_spec(StateFamily::sep3, half, derive(spec.seed, "fam/sep/" + res.families[i]), spec), ctx);
    ent[i] = obtain_dataset(gen_spec(fams[i], half, derive(spec.seed, "fam/" + res.families[i]), spec), ctx);
    const Source src[] = {{&sep[i], 0}, {&ent[i], 1}};
    whole[i] = stack(src, LabelKind::binary);
  }
  const auto sizes = caption_topology(spec.topology);

  const std::size_t n = 3 * spec.replicates;
  res.runs.resize(n);
  std::vector<std::array<double, 3>> cross(n);
  parallel_for(n, ctx.jobs, [&](std::size_t job) {
    const std::size_t i = job / spec.replicates, r = job % spec.replicates;
    const Source src[] = {{&sep[i], 0}, {&ent[i], 1}};
    const auto seed = run_seed(spec, "fam/" + res.families[i], r);
    auto t = train_one(spec, sizes, nn::OutputKind::sigmoid, src, LabelKind::binary, seed);
    for (std::size_t j = 0; j < 3; ++j) cross[job][j] = i == j ? t.metrics.final_asr : nn::asr(t.model, whole[j]);
    record_run(ctx, spec.id, res.runs[job], res.families[i] + "/" + std::to_string(r), seed, t.model,
               std::move(t.metrics));
  });

  std::vector<std::pair<std::string, std::vector<const RunRecord*>>> groups;
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<const RunRecord*> ptrs;
    double bce = 0.0, acc = 0.0, epoch = 0.0;
    for (std::size_t r = 0; r < spec.replicates; ++r) {
      const auto& run = res.runs[i * spec.replicates + r];
      ptrs.push_back(&run);
      bce += run.metrics.best_test_loss();
      acc += run.metrics.final_asr;
      epoch += static_cast<double>(run.metrics.best_epoch);
      for (std::size_t j = 0; j < 3; ++j) res.cross[i][j] += cross[i * spec.replicates + r][j];
    }
    const auto k = static_cast<double>(spec.replicates);
    res.mean_best_bce[i] = bce / k;
    res.mean_final_asr[i] = acc / k;
    res.mean_best_epoch[i] = epoch / k;
    for (std::size_t j = 0; j < 3; ++j) res.cross[i][j] /= k;
    groups.emplace_back(res.families[i], std::move(ptrs));
  }

  const std::string id(to_string(spec.id));
  std::string s = header(spec) + "topology " + spec.topology + "\n";
  if (spec.id == ExperimentId::cross_family) {
    std::string csv = "train_family,test_family,mean_asr\n";
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        csv += res.families[i] + ',' + res.families[j] + ',' + io::format_double(res.cross[i][j]) + '\n';
    write_out(ctx, "curve_" + id + ".csv", csv);
  } else {
    write_out(ctx, "curve_" + id + ".csv", learning_curves_csv(groups));
  }
  s += "\nper family vs separable (means over replicates)\n  family  best_test_bce  final_asr  best_epoch\n";
  for (std::size_t i = 0; i < 3; ++i) {
    s += "  " + res.families[i] + "     " + fixed(res.mean_best_bce[i]) + "        " + fixed(res.mean_final_asr[i]) +
         "     " + fixed(res.mean_best_epoch[i], 1) + '\n';
  }
  s += "\ncross-family ASR; rows = trained on, columns = tested on\n        ";
  for (const auto& f : res.families) s += "  " + f + "  ";
  s += '\n';
  for (std::size_t i = 0; i < 3; ++i) {
    s += "  " + res.families[i] + "  ";
    for (std::size_t j = 0; j < 3; ++j) s += "  " + fixed(res.cross[i][j]);
    s += '\n';
  }
  s += runs_section(res.runs);
  res.summary = s;
  write_out(ctx, "summary_" + id + ".txt", s);
  return res;
}

CategoricalResult run_categorical(const ExperimentSpec& spec, const Context& ctx) {
  validate(spec);
  const StateFamily fams[4] = {StateFamily::sep3, StateFamily::be3, StateFamily::ghz3, StateFamily::w3};
  const std::size_t quarter = spec.dataset_size / 4;
  std::array<Dataset, 4> data;
  std::vector<Source> sources;
  for (std::size_t c = 0; c < 4; ++c) {
    data[c] = obtain_dataset(gen_spec(fams[c], quarter, derive(spec.seed, "cat/" + std::string(stategen::to_string(fams[c]))), spec),
                             ctx);
    sources.push_back({&data[c], static_cast<int>(c)});
  }
  const auto sizes = caption_topology(spec.topology);

  CategoricalResult res;
  res.runs.resize(spec.replicates);
  std::vector<std::vector<std::vector<std::size_t>>> confusions(spec.replicates);
  parallel_for(spec.replicates, ctx.jobs, [&](std::size_t r) {
    const auto seed = run_seed(spec, "categorical", r);
    auto t = train_one(spec, sizes, nn::OutputKind::softmax, sources, LabelKind::categorical, seed);
    confusions[r] = nn::confusion_matrix(t.model, t.split.test);
    record_run(ctx, spec.id, res.runs[r], "run" + std::to_string(r), seed, t.model, std::move(t.metrics));
  });
  res.confusion.assign(4, std::vector<std::size_t>(4, 0));
  double epochs = 0.0;
  for (std::size_t r = 0; r < spec.replicates; ++r) {
    res.final_asr.push_back(res.runs[r].metrics.final_asr);
    epochs += static_cast<double>(res.runs[r].metrics.best_epoch);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) res.confusion[i][j] += confusions[r][i][j];
  }
  res.mean_asr = mean_of(res.final_asr);
  res.best_asr = *std::max_element(res.final_asr.begin(), res.final_asr.end());
  res.worst_asr = *std::min_element(res.final_asr.begin(), res.final_asr.end());
  res.mean_best_epoch = epochs / static_cast<double>(spec.replicates);

  const std::string id(to_string(spec.id));
  std::vector<const RunRecord*> ptrs;
  for (const auto& r : res.runs) ptrs.push_back(&r);
  write_out(ctx, "curve_" + id + ".csv", learning_curves_csv({{"categorical", ptrs}}));

  std::string hist = "bin_lo,bin_hi,count\n";
  for (int b = 0; b < 20; ++b) {
    const double lo = b * 0.05, hi = (b + 1) * 0.05;
    const auto count = std::count_if(res.final_asr.begin(), res.final_asr.end(),
                                     [&](double a) { return a >= lo && (a < hi || (b == 19 && a <= 1.0)); });
    hist += io::format_short(lo) + ',' + io::format_short(hi) + ',' + std::to_string(count) + '\n';
  }
  write_out(ctx, "histogram_" + id + ".csv", hist);

  std::string s = header(spec) + "topology " + spec.topology + "\n\nfinal ASR per run:";
  for (double a : res.final_asr) s += " " + fixed(a);
  s += "\nmean_asr " + fixed(res.mean_asr) + "\nbest_asr " + fixed(res.best_asr) + "\nworst_asr " + fixed(res.worst_asr) +
       "\nmean_best_epoch " + fixed(res.mean_best_epoch, 1) +
       "\n\nconfusion summed over runs (rows true, columns predicted; sep3 be3 ghz3 w3)\n";
  for (const auto& row : res.confusion) {
    s += " ";
    for (auto v : row) s += " " + std::to_string(v);
    s += '\n';
  }
  s += runs_section(res.runs);
  res.summary = s;
  write_out(ctx, "summary_" + id + ".txt", s);
  return res;
}

Report run_experiment(const ExperimentSpec& spec, const Context& ctx) {
  Report rep;
  const auto start = std::chrono::steady_clock::now();
  switch (spec.id) {
    case ExperimentId::fig_sep_vs_bell: rep.summary = run_sep_vs_bell(spec, ctx).summary; break;
    case ExperimentId::tw_to_grid: rep.summary = run_tw_to_grid(spec, ctx).summary; break;
    case ExperimentId::generalist: rep.summary = run_generalist(spec, ctx).summary; break;
    case ExperimentId::epsilon_sweep: rep.summary = run_epsilon_sweep(spec, ctx).summary; break;
    case ExperimentId::werner_sweep: rep.summary = run_werner_sweep(spec, ctx).summary; break;
    case ExperimentId::families_binary:
    case ExperimentId::cross_family: rep.summary = run_families_binary(spec, ctx).summary; break;
    case ExperimentId::categorical_runs: rep.summary = run_categorical(spec, ctx).summary; break;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  say(ctx, "[" + std::string(to_string(spec.id)) + "] finished in " + fixed(secs, 1) + " s");
  if (!ctx.out_dir.empty()) {
    const std::string id(to_string(spec.id));
    for (const auto& entry : std::filesystem::directory_iterator(ctx.out_dir)) {
      const auto name = entry.path().filename().string();
      if (name.starts_with("metrics_" + id + "_") || name.starts_with("model_" + id + "_") ||
          name == "curve_" + id + ".csv" || name == "summary_" + id + ".txt" ||
          name == "histogram_" + id + ".csv") {
        rep.files.push_back(entry.path().string());
      }
    }
    std::sort(rep.files.begin(), rep.files.end());
  }
  return rep;
}

}  // namespace entdetect::experiments
