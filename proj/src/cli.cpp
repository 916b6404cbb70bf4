#include "entdetect/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "entdetect/error.hpp"
#include "entdetect/io.hpp"
#include "entdetect/nn.hpp"
#include "entdetect/pipeline.hpp"
#include "entdetect/stategen.hpp"
#include "json.hpp"

namespace entdetect::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;
using experiments::ExperimentId;
using experiments::ExperimentSpec;
using experiments::Scale;

namespace {

const std::set<std::string> kTopKeys{"include", "seed", "out", "jobs", "gen", "train", "experiment"};
const std::set<std::string> kGenKeys{"family", "count", "seed", "interval", "epsilon", "p", "mix_terms", "retry_cap", "output"};
const std::set<std::string> kTrainKeys{"datasets",   "topology",       "head",       "optimizer", "learning_rate",
                                       "batch_size", "train_fraction", "max_epochs", "patience",  "seed",
                                       "reshuffle"};
const std::set<std::string> kExperimentKeys{
    "id",         "scale",         "topology",   "deep_topology", "pure_topologies", "mixed_topologies",
    "optimizer",  "learning_rate", "dataset_size", "replicates",  "batch_size",      "train_fraction",
    "max_epochs", "patience",      "grid_step",  "states_per_point", "mix_terms",   "top_bin_mix_terms",
    "retry_cap",  "seed"};

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

/// Objects merge key by key; anything else in `over` replaces `base`.
void deep_merge(json& base, const json& over) {
  for (const auto& [key, value] : over.items()) {
    if (value.is_object() && base.contains(key) && base[key].is_object()) {
      deep_merge(base[key], value);
    } else {
      base[key] = value;
    }
  }
}

json load_resolved(const fs::path& path, int depth) {
  if (depth > 16) throw ConfigError("config include chain is too deep");
  json doc;
  try {
    doc = json::parse(io::read_file(path.string()));
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  check_keys(doc, kTopKeys, path.string());
  json merged = json::object();
  if (doc.contains("include")) {
    const json inc = doc["include"];
    std::vector<std::string> list;
    if (inc.is_string()) {
      list.push_back(inc.get<std::string>());
    } else if (inc.is_array() && std::all_of(inc.begin(), inc.end(), [](const json& j) { return j.is_string(); })) {
      for (const auto& j : inc) list.push_back(j.get<std::string>());
    } else {
      throw ConfigError("include must be a path or a list of paths");
    }
    for (const auto& p : list) deep_merge(merged, load_resolved(path.parent_path() / p, depth + 1));
    doc.erase("include");
  }
  deep_merge(merged, doc);
  return merged;
}

json load_config(const std::string& path) {
  json doc = load_resolved(path, 0);
  if (doc.contains("gen")) check_keys(doc["gen"], kGenKeys, "gen");
  if (doc.contains("train")) check_keys(doc["train"], kTrainKeys, "train");
  if (doc.contains("experiment")) check_keys(doc["experiment"], kExperimentKeys, "experiment");
  return doc;
}

template <typename T>
T get(const json& obj, const std::string& key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + key + "' in " + where + ": " + e.what());
  }
}

template <typename T>
void maybe(const json& obj, const std::string& key, const std::string& where, T& dst) {
  if (obj.contains(key)) dst = get<T>(obj, key, where);
}

std::pair<int, int> int_pair(const json& obj, const std::string& key, const std::string& where) {
  const auto v = get<std::vector<int>>(obj, key, where);
  if (v.size() != 2) throw ConfigError("'" + key + "' in " + where + " must have two entries");
  return {v[0], v[1]};
}

void patience_from(const json& obj, const std::string& where, std::optional<std::size_t>& dst) {
  if (!obj.contains("patience")) return;
  if (obj["patience"].is_null()) {
    dst.reset();
  } else {
    dst = get<std::size_t>(obj, "patience", where);
  }
}

void apply_experiment(const json& e, ExperimentSpec& s) {
  const std::string w = "experiment";
  maybe(e, "topology", w, s.topology);
  maybe(e, "deep_topology", w, s.deep_topology);
  maybe(e, "pure_topologies", w, s.pure_topologies);
  maybe(e, "mixed_topologies", w, s.mixed_topologies);
  if (e.contains("optimizer")) s.optimizer = nn::parse_optimizer_kind(get<std::string>(e, "optimizer", w));
  maybe(e, "learning_rate", w, s.learning_rate);
  maybe(e, "dataset_size", w, s.dataset_size);
  maybe(e, "replicates", w, s.replicates);
  maybe(e, "batch_size", w, s.batch_size);
  maybe(e, "train_fraction", w, s.train_fraction);
  maybe(e, "max_epochs", w, s.max_epochs);
  patience_from(e, w, s.patience);
  maybe(e, "grid_step", w, s.grid_step);
  maybe(e, "states_per_point", w, s.states_per_point);
  if (e.contains("mix_terms")) s.mix_terms_range = int_pair(e, "mix_terms", w);
  if (e.contains("top_bin_mix_terms")) s.top_bin_mix_terms = int_pair(e, "top_bin_mix_terms", w);
  maybe(e, "retry_cap", w, s.retry_cap);
  maybe(e, "seed", w, s.seed);
}

ExperimentSpec spec_from_doc(const json& doc, std::optional<ExperimentId> id, Scale scale) {
  const json e = doc.contains("experiment") ? doc["experiment"] : json::object();
  if (!id) {
    if (!e.contains("id")) throw ConfigError("no experiment id given");
    id = experiments::parse_experiment_id(get<std::string>(e, "id", "experiment"));
  } else if (e.contains("id") && experiments::parse_experiment_id(get<std::string>(e, "id", "experiment")) != *id) {
    throw ConfigError("config is for experiment '" + get<std::string>(e, "id", "experiment") + "'");
  }
  ExperimentSpec s = experiments::default_spec(*id, Scale::full);
  if (doc.contains("seed")) s.seed = get<std::uint64_t>(doc, "seed", "config");
  apply_experiment(e, s);
  if (scale == Scale::desk) {
    s.dataset_size /= 10;
    s.states_per_point = std::max<std::size_t>(1, s.states_per_point / 10);
  }
  return s;
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t jobs = 1;
};

std::string output_dir(const Common& c, const json& doc) {
  if (!c.out.empty()) return c.out;
  if (doc.contains("out")) return get<std::string>(doc, "out", "config");
  if (const char* env = std::getenv("ENTDETECT_OUT"); env != nullptr && *env != '\0') return env;
  return "out";
}

std::size_t job_count(const Common& c, const json& doc, bool flag_given) {
  if (flag_given) return std::max<std::size_t>(1, c.jobs);
  if (doc.contains("jobs")) return std::max<std::size_t>(1, get<std::size_t>(doc, "jobs", "config"));
  return 1;
}

// -- gen -----------------------------------------------------------------------

struct GenArgs {
  std::string family;
  std::optional<std::size_t> count;
  std::optional<double> lo, hi, epsilon, p;
  std::string terms;
  std::optional<std::size_t> retry_cap;
  std::string output;
};

int cmd_gen(const Common& c, bool jobs_given, const GenArgs& a, std::ostream& out) {
  const json doc = c.config.empty() ? json::object() : load_config(c.config);
  const json g = doc.contains("gen") ? doc["gen"] : json::object();
  const std::string w = "gen";

  stategen::GenSpec spec;
  std::string family = a.family;
  if (family.empty() && g.contains("family")) family = get<std::string>(g, "family", w);
  if (family.empty()) throw ConfigError("gen needs --family");
  spec.family = stategen::parse_family(family);
  spec.count = a.count.value_or(g.contains("count") ? get<std::size_t>(g, "count", w) : 0);
  spec.seed = c.seed ? *c.seed
              : g.contains("seed") ? get<std::uint64_t>(g, "seed", w)
              : doc.contains("seed") ? get<std::uint64_t>(doc, "seed", "config")
                                     : 0;
  if (g.contains("interval")) {
    const auto v = get<std::vector<double>>(g, "interval", w);
    if (v.size() != 2) throw ConfigError("interval must be [lo, hi]");
    spec.negativity_interval = stategen::Interval{v[0], v[1]};
  }
  if (a.lo || a.hi) {
    if (!(a.lo && a.hi)) throw ConfigError("--lo and --hi go together");
    spec.negativity_interval = stategen::Interval{*a.lo, *a.hi};
  }
  if (g.contains("epsilon")) spec.epsilon = get<double>(g, "epsilon", w);
  if (a.epsilon) spec.epsilon = a.epsilon;
  if (g.contains("p")) spec.werner_p = get<double>(g, "p", w);
  if (a.p) spec.werner_p = a.p;
  if (g.contains("mix_terms")) spec.mix_terms_range = int_pair(g, "mix_terms", w);
  if (!a.terms.empty()) {
    const auto parts = io::split(a.terms, '-');
    if (parts.size() != 2) throw ConfigError("--terms takes lo-hi");
    try {
      spec.mix_terms_range = {static_cast<int>(io::parse_int(parts[0])), static_cast<int>(io::parse_int(parts[1]))};
    } catch (const FormatError&) {
      throw ConfigError("--terms takes lo-hi");
    }
  }
  if (g.contains("retry_cap")) spec.retry_cap = get<std::size_t>(g, "retry_cap", w);
  if (a.retry_cap) spec.retry_cap = *a.retry_cap;
  stategen::validate(spec);

  std::string path = a.output;
  if (path.empty() && g.contains("output")) path = get<std::string>(g, "output", w);
  if (path.empty()) {
    path = output_dir(c, doc) + "/" + std::string(stategen::to_string(spec.family)) + "_" + std::to_string(spec.count) +
           "_" + std::to_string(spec.seed) + ".csv";
  }

  const auto ds = stategen::build_dataset(spec, job_count(c, doc, jobs_given));
  stategen::write_dataset(path, ds);

  // Provenance sidecar: spec echo and oracle statistics.
  json meta;
  meta["family"] = std::string(stategen::to_string(spec.family));
  meta["count"] = spec.count;
  meta["seed"] = spec.seed;
  meta["retry_cap"] = spec.retry_cap;
  json extra = json::object();
  for (const auto& [k, v] : ds.extra) extra[k] = v;
  meta["extra"] = extra;
  const std::size_t cols = ds.rows.front().negativities.size();
  std::vector<double> lo(cols, 1.0), hi(cols, 0.0), mean(cols, 0.0);
  std::size_t entangled = 0;
  for (const auto& row : ds.rows) {
    for (std::size_t k = 0; k < cols; ++k) {
      lo[k] = std::min(lo[k], row.negativities[k]);
      hi[k] = std::max(hi[k], row.negativities[k]);
      mean[k] += row.negativities[k] / static_cast<double>(ds.rows.size());
    }
    entangled += static_cast<std::size_t>(row.binary_label);
  }
  meta["negativity"] = {{"min", lo}, {"mean", mean}, {"max", hi}};
  meta["entangled_fraction"] = static_cast<double>(entangled) / static_cast<double>(ds.rows.size());
  io::write_file_atomic(path + ".meta.json", meta.dump(2) + "\n");

  out << path << '\n';
  out << "negativity min/mean/max:";
  for (std::size_t k = 0; k < cols; ++k) {
    out << ' ' << io::format_short(lo[k]) << '/' << io::format_short(mean[k]) << '/' << io::format_short(hi[k]);
  }
  out << '\n';
  return kOk;
}

// -- train ---------------------------------------------------------------------

struct TrainArgs {
  std::vector<std::string> datasets;
  std::vector<int> labels;
  std::string topology, head, optimizer, name;
  std::optional<double> learning_rate, train_fraction;
  std::optional<std::size_t> batch_size, max_epochs, patience;
  bool no_patience = false;
};

int cmd_train(const Common& c, const TrainArgs& a, std::ostream& out) {
  const json doc = c.config.empty() ? json::object() : load_config(c.config);
  const json t = doc.contains("train") ? doc["train"] : json::object();
  const std::string w = "train";

  std::vector<std::string> paths = a.datasets;
  std::vector<std::optional<int>> labels;
  for (int l : a.labels) labels.emplace_back(l);
  if (paths.empty() && t.contains("datasets")) {
    for (const auto& d : t["datasets"]) {
      check_keys(d, {"path", "label"}, "train.datasets");
      paths.push_back(get<std::string>(d, "path", "train.datasets"));
      labels.push_back(d.contains("label") ? std::optional<int>(get<int>(d, "label", "train.datasets")) : std::nullopt);
    }
  }
  if (paths.empty()) throw ConfigError("train needs at least one --dataset");
  if (!labels.empty() && labels.size() != paths.size()) throw ConfigError("give one --label per --dataset or none");
  labels.resize(paths.size());

  std::string topology = a.topology;
  if (topology.empty()) topology = t.contains("topology") ? get<std::string>(t, "topology", w) : "16:8:1";
  const auto sizes = nn::parse_topology(topology);
  std::string head_name = a.head;
  if (head_name.empty()) head_name = t.contains("head") ? get<std::string>(t, "head", w) : (sizes.back() == 1 ? "sigmoid" : "softmax");
  const auto head = nn::parse_output_kind(head_name);

  nn::TrainConfig cfg;
  maybe(t, "batch_size", w, cfg.batch_size);
  maybe(t, "train_fraction", w, cfg.train_fraction);
  maybe(t, "max_epochs", w, cfg.max_epochs);
  patience_from(t, w, cfg.patience);
  maybe(t, "reshuffle", w, cfg.reshuffle);
  if (t.contains("optimizer")) cfg.optimizer.kind = nn::parse_optimizer_kind(get<std::string>(t, "optimizer", w));
  maybe(t, "learning_rate", w, cfg.optimizer.learning_rate);
  if (!a.optimizer.empty()) cfg.optimizer.kind = nn::parse_optimizer_kind(a.optimizer);
  if (a.learning_rate) cfg.optimizer.learning_rate = *a.learning_rate;
  if (a.batch_size) cfg.batch_size = *a.batch_size;
  if (a.train_fraction) cfg.train_fraction = *a.train_fraction;
  if (a.max_epochs) cfg.max_epochs = *a.max_epochs;
  if (a.patience) cfg.patience = *a.patience;
  if (a.no_patience) cfg.patience.reset();
  std::uint64_t seed = 0;
  if (doc.contains("seed")) seed = get<std::uint64_t>(doc, "seed", "config");
  maybe(t, "seed", w, seed);
  if (c.seed) seed = *c.seed;
  nn::validate(cfg);

  std::vector<stategen::Dataset> data;
  for (const auto& p : paths) data.push_back(stategen::read_dataset(p));
  const auto kind = head == nn::OutputKind::sigmoid ? pipeline::LabelKind::binary : pipeline::LabelKind::categorical;
  std::vector<pipeline::Source> sources;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].rows.empty()) throw FormatError(paths[i] + " has no rows");
    int label = 0;
    if (labels[i]) {
      label = *labels[i];
    } else if (kind == pipeline::LabelKind::binary) {
      label = data[i].rows.front().binary_label;
    } else if (data[i].rows.front().class_label) {
      label = *data[i].rows.front().class_label;
    } else {
      throw HeadMismatch(paths[i] + " has no class labels for a softmax head");
    }
    sources.push_back({&data[i], label});
  }
  std::vector<int> all_labels;
  for (const auto& s : sources) all_labels.push_back(s.label);
  nn::check_labels(head, sizes.back(), all_labels);

  const auto split = pipeline::assemble(sources, kind, cfg.train_fraction, mix_seed(seed, 1));
  cfg.seed = mix_seed(seed, 3);
  auto fit = nn::fit(nn::glorot_uniform_init<float>(sizes, head, mix_seed(seed, 2)), split.train, split.test, cfg);

  const std::string dir = output_dir(c, doc);
  const std::string stem = a.name.empty() ? "train_" + std::to_string(seed) : a.name;
  nn::write_checkpoint(dir + "/" + stem + ".model", fit.model);
  io::write_file_atomic(dir + "/metrics_" + stem + ".csv", nn::format_metrics_csv(fit.metrics));
  io::write_file_atomic(dir + "/split_" + stem + ".csv", pipeline::format_split_manifest(split));
  out << "model " << dir << "/" << stem << ".model\n";
  out << "epochs " << fit.metrics.epochs_run() << " best_epoch " << fit.metrics.best_epoch << '\n';
  out << "final test ASR " << io::format_short(fit.metrics.final_asr) << '\n';
  return kOk;
}

// -- eval ----------------------------------------------------------------------

int cmd_eval(const std::string& model_path, const std::vector<std::string>& paths, std::ostream& out) {
  const auto model = nn::read_checkpoint<float>(model_path);
  const auto kind =
      model.head() == nn::OutputKind::sigmoid ? pipeline::LabelKind::binary : pipeline::LabelKind::categorical;
  nn::LabeledData all;
  std::vector<nn::LabeledData> parts;
  Eigen::Index cols = 0;
  for (const auto& p : paths) {
    const auto ds = stategen::read_dataset(p);
    if (kind == pipeline::LabelKind::categorical &&
        std::any_of(ds.rows.begin(), ds.rows.end(), [](const auto& r) { return !r.class_label.has_value(); })) {
      throw HeadMismatch(p + " has no class labels for a softmax head");
    }
    parts.push_back(pipeline::to_labeled(ds, kind));
    cols += parts.back().inputs.cols();
  }
  if (parts.empty()) throw ConfigError("eval needs at least one --dataset");
  all.inputs.resize(parts.front().inputs.rows(), cols);
  Eigen::Index at = 0;
  for (auto& part : parts) {
    if (part.inputs.rows() != all.inputs.rows()) throw WidthMismatch("datasets differ in width");
    all.inputs.middleCols(at, part.inputs.cols()) = part.inputs;
    at += part.inputs.cols();
    all.labels.insert(all.labels.end(), part.labels.begin(), part.labels.end());
  }
  const auto cm = nn::confusion_matrix(model, all);
  out << "asr " << io::format_short(nn::asr(model, all)) << '\n';
  out << "samples " << all.size() << '\n';
  out << "confusion (rows true, columns predicted)\n";
  for (const auto& row : cm) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << row[j];
    out << '\n';
  }
  return kOk;
}

// -- repro ---------------------------------------------------------------------

int cmd_repro(const Common& c, bool jobs_given, const std::string& id_text, const std::string& scale_text,
              std::ostream& out, std::ostream& err) {
  const json doc = c.config.empty() ? json::object() : load_config(c.config);
  std::optional<ExperimentId> id;
  if (!id_text.empty()) id = experiments::parse_experiment_id(id_text);
  std::string scale_name = scale_text;
  if (scale_name.empty() && doc.contains("experiment") && doc["experiment"].contains("scale")) {
    scale_name = get<std::string>(doc["experiment"], "scale", "experiment");
  }
  const Scale scale = scale_name.empty() ? Scale::full : experiments::parse_scale(scale_name);
  ExperimentSpec spec = spec_from_doc(doc, id, scale);
  if (c.seed) spec.seed = *c.seed;
  experiments::validate(spec);

  experiments::Context ctx;
  ctx.out_dir = output_dir(c, doc);
  ctx.jobs = job_count(c, doc, jobs_given);
  ctx.log = [&err](std::string_view msg) { err << msg << std::endl; };
  const auto report = experiments::run_experiment(spec, ctx);
  out << report.summary;
  for (const auto& f : report.files) err << "wrote " << f << '\n';
  return kOk;
}

}  // namespace

std::string load_config_text(const std::string& path) { return load_config(path).dump(2); }

ExperimentSpec experiment_spec_from_config(const std::string& path, std::optional<ExperimentId> id, Scale scale) {
  return spec_from_doc(load_config(path), id, scale);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entanglement detection with multilayer perceptrons", "entdetect"};
  app.require_subcommand(1);
  app.fallthrough();

  Common c;
  std::uint64_t seed = 0;
  app.add_option("--config", c.config, "JSON run config");
  auto* seed_opt = app.add_option("--seed", seed, "Seed for all randomness");
  app.add_option("--out", c.out, "Output directory (default $ENTDETECT_OUT or ./out)");
  auto* jobs_opt = app.add_option("--jobs", c.jobs, "Parallel jobs")->check(CLI::PositiveNumber);

  GenArgs ga;
  auto* gen = app.add_subcommand("gen", "Generate a labeled dataset");
  gen->add_option("--family", ga.family, "State family tag");
  gen->add_option("--count", ga.count, "Number of states");
  gen->add_option("--lo", ga.lo, "Negativity bin lower end");
  gen->add_option("--hi", ga.hi, "Negativity bin upper end");
  gen->add_option("--epsilon", ga.epsilon, "Epsilon of the epsilon families");
  gen->add_option("--p", ga.p, "Werner parameter");
  gen->add_option("--terms", ga.terms, "Mixture term range lo-hi");
  gen->add_option("--retry-cap", ga.retry_cap, "Rejection attempts per state");
  gen->add_option("--output", ga.output, "Dataset path");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a detector on dataset files");
  train->add_option("--dataset", ta.datasets, "Dataset file (repeatable)");
  train->add_option("--label", ta.labels, "Label for each dataset (default: the oracle label)");
  train->add_option("--topology", ta.topology, "Layer widths, e.g. 16:8:1");
  train->add_option("--head", ta.head, "sigmoid or softmax");
  train->add_option("--optimizer", ta.optimizer, "adam or rmsprop");
  train->add_option("--lr", ta.learning_rate, "Learning rate");
  train->add_option("--batch-size", ta.batch_size, "Batch size M");
  train->add_option("--train-fraction", ta.train_fraction, "Training fraction f");
  train->add_option("--max-epochs", ta.max_epochs, "Epoch cap");
  train->add_option("--patience", ta.patience, "Early-stopping patience");
  train->add_flag("--no-early-stop", ta.no_patience, "Disable early stopping");
  train->add_option("--name", ta.name, "Output file stem");

  std::string model_path;
  std::vector<std::string> eval_sets;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on dataset files");
  eval->add_option("--model", model_path, "Checkpoint file")->required();
  eval->add_option("--dataset", eval_sets, "Dataset file (repeatable)")->required();

  std::string id_text, scale_text;
  auto* repro = app.add_subcommand("repro", "Reproduce an experiment");
  repro->add_option("id", id_text, "Experiment id");
  repro->add_option("--scale", scale_text, "full or desk");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  if (seed_opt->count() > 0) c.seed = seed;
  const bool jobs_given = jobs_opt->count() > 0;

  try {
    if (gen->parsed()) return cmd_gen(c, jobs_given, ga, out);
    if (train->parsed()) return cmd_train(c, ta, out);
    if (eval->parsed()) return cmd_eval(model_path, eval_sets, out);
    if (repro->parsed()) return cmd_repro(c, jobs_given, id_text, scale_text, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const GenerationExhausted& e) {
    err << "error: " << e.what() << '\n';
    return kExhausted;
  } catch (const HeadMismatch& e) {
    err << "error: " << e.what() << '\n';
    return kHeadMismatch;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kFileError;
  } catch (const WidthMismatch& e) {
    err << "error: " << e.what() << '\n';
    return kFileError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kFileError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  err << app.help();
  return kUsage;
}

}  // namespace entdetect::cli
