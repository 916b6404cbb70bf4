#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "entdetect/qlinalg.hpp"
#include "entdetect/rng.hpp"

namespace entdetect::stategen {

using qlinalg::ComplexMatrix;
using qlinalg::DensityMatrix;
using qlinalg::PureState;

/// Negativity above this counts as entangled.
inline constexpr double kEntangledThreshold = 1e-9;
/// Attempts allowed per requested state before GenerationExhausted.
inline constexpr std::size_t kDefaultRetryCap = 1'000'000;

enum class StateFamily {
  sep2_pure,
  sep2_mixed,
  bell_random,
  random2_pure,
  random2_mixed,
  epsilon_pure,
  epsilon_mixed,
  werner,
  sep3,
  be3,
  ghz3,
  w3,
};

enum class PurityKind { pure, mixed };

std::string_view to_string(StateFamily family);
/// Accepts the snake_case tag or its CamelCase spelling, case-insensitively.
StateFamily parse_family(std::string_view tag);
std::size_t num_qubits(StateFamily family);
/// Class index for the four-way three-qubit task: sep3=0, be3=1, ghz3=2, w3=3.
std::optional<int> class_index(StateFamily family);

/// Half-open negativity interval (lo, hi), 0 <= lo < hi <= 0.5.
struct Interval {
  double lo = 0.0;
  double hi = 0.5;
  bool contains(double x) const { return x > lo && x < hi; }
  bool operator==(const Interval&) const = default;
};

struct GenSpec {
  StateFamily family = StateFamily::sep2_pure;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::optional<Interval> negativity_interval;
  std::optional<double> epsilon;
  std::optional<double> werner_p;
  std::pair<int, int> mix_terms_range{2, 7};
  std::size_t retry_cap = kDefaultRetryCap;
};

/// Throws ConfigError if a parameter is missing, out of range or irrelevant to the family.
void validate(const GenSpec& spec);

struct LabeledState {
  std::variant<DensityMatrix, PureState> payload;
  StateFamily family;
  /// One value for two qubits; one per qubit bipartition for three.
  std::vector<double> negativities;
  int binary_label = 0;
  std::optional<int> class_label;

  std::size_t num_qubits() const;
  DensityMatrix density() const;
};

/// Computes the oracle negativities and labels for a generated payload.
LabeledState label_state(std::variant<DensityMatrix, PureState> payload, StateFamily family);

// -- single-qubit unitaries --------------------------------------------------

/// Euler-angle unitary
///   [[e^{i(t1 - t2/2 - t3/2)} cos(t4/2), -e^{i(t1 - t2/2 + t3/2)} sin(t4/2)],
///    [e^{i(t1 + t2/2 - t3/2)} sin(t4/2),  e^{i(t1 + t2/2 + t3/2)} cos(t4/2)]].
ComplexMatrix unitary_1q(double t1, double t2, double t3, double t4);
/// All four angles uniform in [0, 2 pi).
ComplexMatrix random_unitary_1q(Rng& rng);

PureState bell_plus();
PureState bell_minus();

// -- two qubits --------------------------------------------------------------

PureState sep_pure_2q(const ComplexMatrix& u1, const ComplexMatrix& u2);
PureState gen_sep_pure_2q(Rng& rng);

/// sum_i w_i |a_i><a_i| (x) |b_i><b_i|.
DensityMatrix separable_mixture(std::span<const double> weights, std::span<const PureState> first,
                                std::span<const PureState> second);
/// `terms` product terms with single-qubit factors U|0>, weights uniform then normalized.
DensityMatrix gen_sep_mixed_2q(Rng& rng, int terms);

PureState bell_random_2q(const ComplexMatrix& u1, const ComplexMatrix& u2);
/// (U1 (x) U2)|psi+> with independent U1, U2.
PureState gen_bell_random_2q(Rng& rng);

/// sum_j r_j e^{i phi_j} |j>, normalized.
PureState pure_from_polar(const std::array<double, 4>& r, const std::array<double, 4>& phi);
/// r_j uniform in [0, 1], phi_j uniform in [0, 2 pi).
PureState gen_random_pure_2q(Rng& rng);

/// Mixture of `terms` random pure states, weights uniform then normalized.
DensityMatrix gen_random_mixed_2q(Rng& rng, int terms);

/// Rank a mixed sample at `index` is steered to. Ranks reachable with the
/// allowed term counts (capped at 4) are cycled: 2, 3, 4, 2, ... for [2, 7].
std::size_t target_rank(std::size_t index, std::pair<int, int> mix_terms_range);
/// Number of mixture terms for a target rank: the rank itself below four,
/// otherwise uniform in [4, range.second].
int terms_for_rank(Rng& rng, std::size_t rank, std::pair<int, int> range);

/// One state with lo < N < hi by rejection. Mixed states are additionally
/// required to have numerical rank `rank` (tol 1e-10). For lo >= 0 the state
/// must also be entangled (N above the 1e-9 threshold); a negative lo
/// disables the filter.
LabeledState gen_binned_state_2q(Rng& rng, Interval interval, PurityKind kind, std::size_t rank,
                                 std::pair<int, int> mix_terms_range, std::size_t retry_cap);
/// `count` binned states; state i uses stream (seed, i) and target_rank(i).
std::vector<LabeledState> gen_binned_2q(std::uint64_t seed, Interval interval, PurityKind kind, std::size_t count,
                                        std::pair<int, int> mix_terms_range = {2, 7},
                                        std::size_t retry_cap = kDefaultRetryCap);

/// Pure: (|sep> + eps|bell>) / sqrt(1 + eps^2 + 2 eps Re<sep|bell>).
PureState epsilon_pure(const PureState& sep, const PureState& bell, double epsilon);
/// Mixed: (1 - eps)|sep><sep| + eps |bell><bell|.
DensityMatrix epsilon_mixed(const PureState& sep, const PureState& bell, double epsilon);
LabeledState gen_epsilon_2q(Rng& rng, double epsilon, PurityKind kind);

/// (p/3) I + (1 - 4p/3) (U1 (x) U2)|psi-><psi-|(U1 (x) U2)^dagger, with I the 4x4 identity.
DensityMatrix werner_state(double p, const ComplexMatrix& u1, const ComplexMatrix& u2);
LabeledState gen_werner(Rng& rng, double p);

// -- three qubits ------------------------------------------------------------

PureState sep_3q(const ComplexMatrix& u1, const ComplexMatrix& u2, const ComplexMatrix& u3);
PureState gen_sep_3q(Rng& rng);

/// Qubit `separated` (0-based) in U|0>, the other two in (U (x) U)|psi+>,
/// with the unitaries listed in qubit order.
PureState be_3q(std::size_t separated, const ComplexMatrix& u1, const ComplexMatrix& u2, const ComplexMatrix& u3);
PureState gen_be_3q(Rng& rng, std::size_t* separated = nullptr);

struct GhzAngles {
  double delta;
  double alpha;
  double beta;
  double gamma;
  double phi;
};
/// cos(d)|000> + sin(d) e^{i phi} |a>|b>|c>, normalized exactly.
PureState ghz_3q(const GhzAngles& angles);
/// delta in (0, pi/4], alpha, beta, gamma in (0, pi/2], phi in [0, 2 pi).
PureState gen_ghz_3q(Rng& rng);

/// a|001> + b|010> + c|100> + d|000>, normalized.
PureState w_3q(double a, double b, double c, double d);
/// a, b, c, d uniform in (0, 1).
PureState gen_w_3q(Rng& rng);

// -- datasets ----------------------------------------------------------------

/// State `index` of the dataset described by `spec`, drawn from stream
/// (spec.seed, index). Checks the family's negativity pattern and throws
/// InvalidState when the oracle disagrees.
LabeledState generate_state(const GenSpec& spec, std::size_t index);

struct DatasetRow {
  std::vector<double> features;
  int binary_label = 0;
  std::optional<int> class_label;
  std::vector<double> negativities;

  bool operator==(const DatasetRow&) const = default;
};

struct Dataset {
  StateFamily family = StateFamily::sep2_pure;
  std::size_t num_qubits = 2;
  std::uint64_t seed = 0;
  /// Family parameters echoed into the header.
  std::vector<std::pair<std::string, std::string>> extra;
  std::vector<DatasetRow> rows;

  bool operator==(const Dataset&) const = default;
};

DatasetRow to_row(const LabeledState& state);
/// Header `extra` entries describing the family parameters of `spec`.
std::vector<std::pair<std::string, std::string>> spec_extra(const GenSpec& spec);

/// Generates all `spec.count` states; `jobs` workers split the indices.
/// Output order is by index regardless of `jobs`.
Dataset build_dataset(const GenSpec& spec, std::size_t jobs = 1);

/// Recomputes the oracle for every row from its features and checks the
/// stored negativities and labels. Throws InvalidState on disagreement.
void verify_dataset(const Dataset& ds);

std::string format_dataset(const Dataset& ds);
/// Throws FormatError on malformed text.
Dataset parse_dataset(std::string_view text);
void write_dataset(const std::string& path, const Dataset& ds);
Dataset read_dataset(const std::string& path);

}  // namespace entdetect::stategen
