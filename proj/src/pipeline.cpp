#include "entdetect/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_set>

#include "entdetect/error.hpp"
#include "entdetect/io.hpp"
#include "entdetect/rng.hpp"

namespace entdetect::pipeline {

namespace {

constexpr std::uint64_t kSplitSalt = 0x73706c6974ULL;  // "split"

int oracle_label(const stategen::DatasetRow& row, LabelKind kind) {
  if (kind == LabelKind::binary) return row.binary_label;
  if (!row.class_label) throw InvalidState("row carries no class label for a categorical task");
  return *row.class_label;
}

}  // namespace

nn::LabeledData to_labeled(const stategen::Dataset& ds, LabelKind kind) {
  nn::LabeledData out;
  const std::size_t width = ds.rows.empty() ? 0 : ds.rows.front().features.size();
  out.inputs.resize(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(ds.rows.size()));
  out.labels.reserve(ds.rows.size());
  for (std::size_t j = 0; j < ds.rows.size(); ++j) {
    const auto& row = ds.rows[j];
    if (row.features.size() != width) throw WidthMismatch("dataset rows differ in width");
    for (std::size_t i = 0; i < width; ++i) {
      out.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row.features[i];
    }
    out.labels.push_back(oracle_label(row, kind));
  }
  return out;
}

SplitDataset assemble(std::span<const Source> sources, LabelKind kind, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must lie in (0, 1)");
  if (sources.empty()) throw ConfigError("no datasets to assemble");

  // Steps one and two: per-class arrays, stacked.
  const std::size_t qubits = sources.front().dataset->num_qubits;
  std::size_t width = 0;
  std::vector<const stategen::DatasetRow*> rows;
  std::vector<int> labels;
  for (const auto& src : sources) {
    if (src.dataset == nullptr) throw ConfigError("null dataset");
    if (src.dataset->num_qubits != qubits) throw WidthMismatch("datasets differ in qubit count");
    for (const auto& row : src.dataset->rows) {
      if (width == 0) width = row.features.size();
      if (row.features.size() != width) throw WidthMismatch("datasets differ in feature width");
      if (oracle_label(row, kind) != src.label) {
        throw InvalidState("label " + std::to_string(src.label) + " disagrees with the oracle for a " +
                           std::string(stategen::to_string(src.dataset->family)) + " row");
      }
      rows.push_back(&row);
      labels.push_back(src.label);
    }
  }
  if (rows.empty()) throw ConfigError("datasets are empty");

  // Step three: global shuffle.
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(seed, kSplitSalt));
  rng.shuffle(std::span<std::size_t>(order));

  // Steps four to six: split and separate inputs from labels.
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(rows.size())));
  SplitDataset out;
  out.train_fraction = train_fraction;
  out.seed = seed;
  auto fill = [&](nn::LabeledData& dst, std::size_t begin, std::size_t end) {
    dst.inputs.resize(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(end - begin));
    dst.labels.clear();
    for (std::size_t k = begin; k < end; ++k) {
      const auto& f = rows[order[k]]->features;
      for (std::size_t i = 0; i < width; ++i) {
        dst.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k - begin)) = f[i];
      }
      dst.labels.push_back(labels[order[k]]);
    }
  };
  fill(out.train, 0, n_train);
  fill(out.test, n_train, rows.size());
  return out;
}

SplitDataset assemble_files(std::span<const std::string> paths, std::span<const int> labels, LabelKind kind,
                            double train_fraction, std::uint64_t seed) {
  if (paths.size() != labels.size()) throw ConfigError("one label is required per dataset file");
  std::vector<stategen::Dataset> datasets;
  datasets.reserve(paths.size());
  for (const auto& p : paths) datasets.push_back(stategen::read_dataset(p));
  std::vector<Source> sources;
  for (std::size_t i = 0; i < paths.size(); ++i) sources.push_back({&datasets[i], labels[i]});
  return assemble(sources, kind, train_fraction, seed);
}

std::vector<std::vector<std::size_t>> batches(std::span<const std::size_t> order, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

std::uint64_t sample_hash(const nn::LabeledData& data, std::size_t column) {
  std::string bytes;
  for (Eigen::Index i = 0; i < data.inputs.rows(); ++i) {
    bytes += io::format_double(data.inputs(i, static_cast<Eigen::Index>(column)));
    bytes += ',';
  }
  return io::fnv1a(bytes);
}

std::string format_split_manifest(const SplitDataset& split) {
  std::string out = "split,row,hash\n";
  auto emit = [&](const char* name, const nn::LabeledData& d) {
    for (std::size_t j = 0; j < d.size(); ++j) {
      char hex[17];
      std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(sample_hash(d, j)));
      out += std::string(name) + ',' + std::to_string(j) + ',' + hex + '\n';
    }
  };
  emit("train", split.train);
  emit("test", split.test);
  return out;
}

bool splits_disjoint(const SplitDataset& split) {
  std::unordered_set<std::uint64_t> train;
  for (std::size_t j = 0; j < split.train.size(); ++j) train.insert(sample_hash(split.train, j));
  for (std::size_t j = 0; j < split.test.size(); ++j) {
    if (train.contains(sample_hash(split.test, j))) return false;
  }
  return true;
}

}  // namespace entdetect::pipeline
