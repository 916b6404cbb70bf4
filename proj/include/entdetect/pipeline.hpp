#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "entdetect/features.hpp"
#include "entdetect/nn.hpp"
#include "entdetect/stategen.hpp"

namespace entdetect::pipeline {

enum class LabelKind { binary, categorical };

/// One input dataset and the label every one of its rows is assigned.
struct Source {
  const stategen::Dataset* dataset = nullptr;
  int label = 0;
};

struct SplitDataset {
  nn::LabeledData train;
  nn::LabeledData test;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

/// Stacks the sources, shuffles globally with `seed`, and puts the first
/// round(f * S) rows in the training set. Each source label must agree with
/// the stored oracle label of every row (binary label, or class index for
/// categorical); a disagreement throws InvalidState. Sources of different
/// width or qubit count throw WidthMismatch.
SplitDataset assemble(std::span<const Source> sources, LabelKind kind, double train_fraction, std::uint64_t seed);

/// Reads the files and assembles them. Throws FormatError on malformed files.
SplitDataset assemble_files(std::span<const std::string> paths, std::span<const int> labels, LabelKind kind,
                            double train_fraction, std::uint64_t seed);

/// Unshuffled inputs and oracle labels of a whole dataset.
nn::LabeledData to_labeled(const stategen::Dataset& ds, LabelKind kind);

/// ceil(|order| / M) consecutive batches of `order`; the last may be short.
std::vector<std::vector<std::size_t>> batches(std::span<const std::size_t> order, std::size_t batch_size);

/// Content hash of one sample column.
std::uint64_t sample_hash(const nn::LabeledData& data, std::size_t column);

/// `split,row,hash` lines for every train and test row.
std::string format_split_manifest(const SplitDataset& split);

/// True when no train row has the same content hash as a test row.
bool splits_disjoint(const SplitDataset& split);

}  // namespace entdetect::pipeline
