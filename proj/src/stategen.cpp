#include "entdetect/stategen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

#include "entdetect/error.hpp"
#include "entdetect/features.hpp"
#include "entdetect/io.hpp"
#include "entdetect/parallel.hpp"

namespace entdetect::stategen {

using qlinalg::Complex;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kOracleTol = 1e-9;
constexpr double kRankTol = 1e-10;

struct FamilyInfo {
  StateFamily family;
  std::string_view tag;
};

constexpr FamilyInfo kFamilies[] = {
    {StateFamily::sep2_pure, "sep2_pure"},       {StateFamily::sep2_mixed, "sep2_mixed"},
    {StateFamily::bell_random, "bell_random"},   {StateFamily::random2_pure, "random2_pure"},
    {StateFamily::random2_mixed, "random2_mixed"}, {StateFamily::epsilon_pure, "epsilon_pure"},
    {StateFamily::epsilon_mixed, "epsilon_mixed"}, {StateFamily::werner, "werner"},
    {StateFamily::sep3, "sep3"},                 {StateFamily::be3, "be3"},
    {StateFamily::ghz3, "ghz3"},                 {StateFamily::w3, "w3"},
};

std::string squash(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '_' || c == '-') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

PureState zero_ket() { return PureState::basis(1, 0); }

std::vector<double> normalized_weights(Rng& rng, int terms) {
  std::vector<double> w(static_cast<std::size_t>(terms));
  double total = 0.0;
  for (auto& x : w) {
    x = rng.uniform();
    total += x;
  }
  // All-zero draws have probability ~2^-53 per term; fall back to equal weights.
  if (total == 0.0) {
    std::fill(w.begin(), w.end(), 1.0 / terms);
    return w;
  }
  for (auto& x : w) x /= total;
  return w;
}

bool is_mixed_family(StateFamily f) {
  return f == StateFamily::sep2_mixed || f == StateFamily::random2_mixed;
}

[[noreturn]] void oracle_failure(StateFamily family, std::string_view what) {
  throw InvalidState("oracle check failed for " + std::string(to_string(family)) + ": " + std::string(what));
}

std::size_t feature_width(std::size_t qubits) {
  return qubits == 2 ? 16 : (std::size_t{2} << qubits);
}

}  // namespace

std::string_view to_string(StateFamily family) {
  for (const auto& info : kFamilies)
    if (info.family == family) return info.tag;
  return "unknown";
}

StateFamily parse_family(std::string_view tag) {
  const std::string key = squash(tag);
  for (const auto& info : kFamilies)
    if (squash(info.tag) == key) return info.family;
  throw ConfigError("unknown state family '" + std::string(tag) + "'");
}

std::size_t num_qubits(StateFamily family) {
  switch (family) {
    case StateFamily::sep3:
    case StateFamily::be3:
    case StateFamily::ghz3:
    case StateFamily::w3:
      return 3;
    default:
      return 2;
  }
}

std::optional<int> class_index(StateFamily family) {
  switch (family) {
    case StateFamily::sep3:
      return 0;
    case StateFamily::be3:
      return 1;
    case StateFamily::ghz3:
      return 2;
    case StateFamily::w3:
      return 3;
    default:
      return std::nullopt;
  }
}

void validate(const GenSpec& spec) {
  const StateFamily f = spec.family;
  const bool wants_interval = f == StateFamily::random2_pure || f == StateFamily::random2_mixed;
  const bool wants_epsilon = f == StateFamily::epsilon_pure || f == StateFamily::epsilon_mixed;
  const bool wants_p = f == StateFamily::werner;
  const std::string name(to_string(f));

  if (spec.count == 0) throw ConfigError("count must be at least 1");
  if (spec.retry_cap == 0) throw ConfigError("retry cap must be at least 1");
  if (spec.negativity_interval && !wants_interval) throw ConfigError("negativity interval is not a parameter of " + name);
  if (spec.epsilon && !wants_epsilon) throw ConfigError("epsilon is not a parameter of " + name);
  if (spec.werner_p && !wants_p) throw ConfigError("p is not a parameter of " + name);
  if (wants_epsilon && !spec.epsilon) throw ConfigError(name + " requires epsilon");
  if (wants_p && !spec.werner_p) throw ConfigError(name + " requires p");
  if (spec.epsilon && !(*spec.epsilon >= 0.0 && *spec.epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  if (spec.werner_p && !(*spec.werner_p >= 0.0 && *spec.werner_p <= 1.0)) throw ConfigError("p must lie in [0, 1]");
  if (spec.negativity_interval) {
    const auto [lo, hi] = *spec.negativity_interval;
    if (!(lo >= 0.0 && lo < hi && hi <= 0.5)) throw ConfigError("negativity interval must satisfy 0 <= lo < hi <= 0.5");
  }
  const auto [tmin, tmax] = spec.mix_terms_range;
  if (is_mixed_family(f) && !(tmin >= 2 && tmin <= tmax)) throw ConfigError("mixture term range must satisfy 2 <= min <= max");
  if (!is_mixed_family(f) && spec.mix_terms_range != std::pair<int, int>{2, 7}) {
    throw ConfigError("mixture term range is not a parameter of " + name);
  }
}

std::size_t LabeledState::num_qubits() const {
  return std::visit([](const auto& s) { return s.num_qubits(); }, payload);
}

DensityMatrix LabeledState::density() const {
  if (const auto* psi = std::get_if<PureState>(&payload)) return qlinalg::projector(*psi);
  return std::get<DensityMatrix>(payload);
}

LabeledState label_state(std::variant<DensityMatrix, PureState> payload, StateFamily family) {
  LabeledState s{std::move(payload), family, {}, 0, class_index(family)};
  const DensityMatrix rho = s.density();
  if (rho.num_qubits() == 2) {
    s.negativities = {qlinalg::negativity(rho, 0)};
  } else {
    s.negativities = qlinalg::bipartition_negativities(rho);
  }
  s.binary_label =
      std::any_of(s.negativities.begin(), s.negativities.end(), [](double n) { return n > kEntangledThreshold; })
          ? 1
          : 0;
  return s;
}

ComplexMatrix unitary_1q(double t1, double t2, double t3, double t4) {
  const double c = std::cos(t4 / 2.0);
  const double s = std::sin(t4 / 2.0);
  auto phase = [](double angle) { return std::polar(1.0, angle); };
  return ComplexMatrix{
      {phase(t1 - t2 / 2.0 - t3 / 2.0) * c, -phase(t1 - t2 / 2.0 + t3 / 2.0) * s},
      {phase(t1 + t2 / 2.0 - t3 / 2.0) * s, phase(t1 + t2 / 2.0 + t3 / 2.0) * c},
  };
}

ComplexMatrix random_unitary_1q(Rng& rng) {
  const double t1 = rng.uniform(0.0, kTwoPi);
  const double t2 = rng.uniform(0.0, kTwoPi);
  const double t3 = rng.uniform(0.0, kTwoPi);
  const double t4 = rng.uniform(0.0, kTwoPi);
  return unitary_1q(t1, t2, t3, t4);
}

PureState bell_plus() {
  const double h = 1.0 / std::sqrt(2.0);
  const Complex amps[] = {h, 0.0, 0.0, h};
  return PureState::normalized(amps);
}

PureState bell_minus() {
  const double h = 1.0 / std::sqrt(2.0);
  const Complex amps[] = {0.0, h, -h, 0.0};
  return PureState::normalized(amps);
}

PureState sep_pure_2q(const ComplexMatrix& u1, const ComplexMatrix& u2) {
  return qlinalg::kron(qlinalg::apply(u1, zero_ket()), qlinalg::apply(u2, zero_ket()));
}

PureState gen_sep_pure_2q(Rng& rng) {
  const ComplexMatrix u1 = random_unitary_1q(rng);
  const ComplexMatrix u2 = random_unitary_1q(rng);
  return sep_pure_2q(u1, u2);
}

DensityMatrix separable_mixture(std::span<const double> weights, std::span<const PureState> first,
                                std::span<const PureState> second) {
  if (weights.size() != first.size() || weights.size() != second.size()) {
    throw DimensionMismatch("separable mixture needs one factor pair per weight");
  }
  std::vector<DensityMatrix> terms;
  terms.reserve(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) terms.push_back(qlinalg::projector(qlinalg::kron(first[i], second[i])));
  return qlinalg::mixture(weights, terms);
}

DensityMatrix gen_sep_mixed_2q(Rng& rng, int terms) {
  const std::vector<double> w = normalized_weights(rng, terms);
  std::vector<PureState> a;
  std::vector<PureState> b;
  for (int i = 0; i < terms; ++i) {
    a.push_back(qlinalg::apply(random_unitary_1q(rng), zero_ket()));
    b.push_back(qlinalg::apply(random_unitary_1q(rng), zero_ket()));
  }
  return separable_mixture(w, a, b);
}

PureState bell_random_2q(const ComplexMatrix& u1, const ComplexMatrix& u2) {
  return qlinalg::apply(qlinalg::kron(u1, u2), bell_plus());
}

PureState gen_bell_random_2q(Rng& rng) {
  const ComplexMatrix u1 = random_unitary_1q(rng);
  const ComplexMatrix u2 = random_unitary_1q(rng);
  return bell_random_2q(u1, u2);
}

PureState pure_from_polar(const std::array<double, 4>& r, const std::array<double, 4>& phi) {
  std::array<Complex, 4> amps;
  for (std::size_t j = 0; j < 4; ++j) amps[j] = std::polar(r[j], phi[j]);
  return PureState::normalized(amps);
}

PureState gen_random_pure_2q(Rng& rng) {
  while (true) {
    std::array<double, 4> r;
    std::array<double, 4> phi;
    for (auto& x : r) x = rng.uniform();
    for (auto& x : phi) x = rng.uniform(0.0, kTwoPi);
    // An all-zero radius draw cannot be normalized; redraw.
    if (r[0] + r[1] + r[2] + r[3] > 0.0) return pure_from_polar(r, phi);
  }
}

DensityMatrix gen_random_mixed_2q(Rng& rng, int terms) {
  const std::vector<double> w = normalized_weights(rng, terms);
  std::vector<DensityMatrix> states;
  states.reserve(w.size());
  for (int i = 0; i < terms; ++i) states.push_back(qlinalg::projector(gen_random_pure_2q(rng)));
  return qlinalg::mixture(w, states);
}

std::size_t target_rank(std::size_t index, std::pair<int, int> range) {
  const auto lo = static_cast<std::size_t>(std::clamp(range.first, 1, 4));
  const auto hi = static_cast<std::size_t>(std::clamp(range.second, 1, 4));
  return lo + index % (hi - lo + 1);
}

int terms_for_rank(Rng& rng, std::size_t rank, std::pair<int, int> range) {
  if (rank < 4) return static_cast<int>(rank);
  return rng.uniform_int(std::max(4, range.first), range.second);
}

LabeledState gen_binned_state_2q(Rng& rng, Interval interval, PurityKind kind, std::size_t rank,
                                 std::pair<int, int> mix_terms_range, std::size_t retry_cap) {
  // A bin starting at zero holds entangled states only; values in (0, 1e-9]
  // would carry the separable label.
  const auto accept = [&](double n) { return interval.contains(n) && (interval.lo < 0.0 || n > kEntangledThreshold); };
  for (std::size_t attempt = 0; attempt < retry_cap; ++attempt) {
    if (kind == PurityKind::pure) {
      PureState psi = gen_random_pure_2q(rng);
      const double n = qlinalg::negativity(qlinalg::projector(psi), 0);
      if (!accept(n)) continue;
      return label_state(std::move(psi), StateFamily::random2_pure);
    }
    const int terms = terms_for_rank(rng, rank, mix_terms_range);
    DensityMatrix rho = gen_random_mixed_2q(rng, terms);
    const double n = qlinalg::negativity(rho, 0);
    if (!accept(n)) continue;
    if (qlinalg::numerical_rank(rho, kRankTol) != rank) continue;
    return label_state(std::move(rho), StateFamily::random2_mixed);
  }
  std::ostringstream msg;
  msg << "no state with negativity in (" << interval.lo << ", " << interval.hi << ")"
      << (kind == PurityKind::mixed ? " and rank " + std::to_string(rank) : std::string()) << " after " << retry_cap
      << " attempts";
  throw GenerationExhausted(msg.str());
}

std::vector<LabeledState> gen_binned_2q(std::uint64_t seed, Interval interval, PurityKind kind, std::size_t count,
                                        std::pair<int, int> mix_terms_range, std::size_t retry_cap) {
  std::vector<LabeledState> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = Rng::stream(seed, i);
    out.push_back(gen_binned_state_2q(rng, interval, kind, target_rank(i, mix_terms_range), mix_terms_range, retry_cap));
  }
  return out;
}

PureState epsilon_pure(const PureState& sep, const PureState& bell, double epsilon) {
  const double norm2 = 1.0 + epsilon * epsilon + 2.0 * (epsilon * qlinalg::inner(sep, bell)).real();
  if (!(norm2 > 0.0)) throw InvalidState("epsilon superposition vanishes");
  const double scale = 1.0 / std::sqrt(norm2);
  std::vector<Complex> amps(sep.dim());
  for (std::size_t i = 0; i < sep.dim(); ++i) amps[i] = scale * (sep.amplitude(i) + epsilon * bell.amplitude(i));
  return PureState::normalized(amps);
}

DensityMatrix epsilon_mixed(const PureState& sep, const PureState& bell, double epsilon) {
  const double w[] = {1.0 - epsilon, epsilon};
  const DensityMatrix parts[] = {qlinalg::projector(sep), qlinalg::projector(bell)};
  return qlinalg::mixture(w, parts);
}

LabeledState gen_epsilon_2q(Rng& rng, double epsilon, PurityKind kind) {
  const PureState sep = gen_sep_pure_2q(rng);
  const PureState bell = gen_bell_random_2q(rng);
  if (kind == PurityKind::pure) return label_state(epsilon_pure(sep, bell, epsilon), StateFamily::epsilon_pure);
  return label_state(epsilon_mixed(sep, bell, epsilon), StateFamily::epsilon_mixed);
}

DensityMatrix werner_state(double p, const ComplexMatrix& u1, const ComplexMatrix& u2) {
  const PureState rotated = qlinalg::apply(qlinalg::kron(u1, u2), bell_minus());
  ComplexMatrix m = ComplexMatrix::identity(4) * Complex(p / 3.0);
  m += qlinalg::projector(rotated).mat() * Complex(1.0 - 4.0 * p / 3.0);
  return DensityMatrix(std::move(m));
}

LabeledState gen_werner(Rng& rng, double p) {
  const ComplexMatrix u1 = random_unitary_1q(rng);
  const ComplexMatrix u2 = random_unitary_1q(rng);
  return label_state(werner_state(p, u1, u2), StateFamily::werner);
}

PureState sep_3q(const ComplexMatrix& u1, const ComplexMatrix& u2, const ComplexMatrix& u3) {
  return qlinalg::kron(qlinalg::kron(qlinalg::apply(u1, zero_ket()), qlinalg::apply(u2, zero_ket())),
                       qlinalg::apply(u3, zero_ket()));
}

PureState gen_sep_3q(Rng& rng) {
  const ComplexMatrix u1 = random_unitary_1q(rng);
  const ComplexMatrix u2 = random_unitary_1q(rng);
  const ComplexMatrix u3 = random_unitary_1q(rng);
  return sep_3q(u1, u2, u3);
}

PureState be_3q(std::size_t separated, const ComplexMatrix& u1, const ComplexMatrix& u2, const ComplexMatrix& u3) {
  if (separated > 2) throw DimensionMismatch("separated qubit must be 0, 1 or 2");
  const ComplexMatrix* us[] = {&u1, &u2, &u3};
  std::size_t pair[2];
  std::size_t k = 0;
  for (std::size_t q = 0; q < 3; ++q)
    if (q != separated) pair[k++] = q;

  const PureState single = qlinalg::apply(*us[separated], zero_ket());
  const PureState bell = qlinalg::apply(qlinalg::kron(*us[pair[0]], *us[pair[1]]), bell_plus());

  // Basis index bits are (q0 q1 q2) with q0 most significant.
  std::vector<Complex> amps(8);
  for (std::size_t idx = 0; idx < 8; ++idx) {
    auto bit = [idx](std::size_t q) { return (idx >> (2 - q)) & 1U; };
    amps[idx] = single.amplitude(bit(separated)) * bell.amplitude(2 * bit(pair[0]) + bit(pair[1]));
  }
  return PureState::normalized(amps);
}

PureState gen_be_3q(Rng& rng, std::size_t* separated) {
  const auto sep = static_cast<std::size_t>(rng.below(3));
  if (separated != nullptr) *separated = sep;
  const ComplexMatrix u1 = random_unitary_1q(rng);
  const ComplexMatrix u2 = random_unitary_1q(rng);
  const ComplexMatrix u3 = random_unitary_1q(rng);
  return be_3q(sep, u1, u2, u3);
}

PureState ghz_3q(const GhzAngles& g) {
  const double a[] = {std::cos(g.alpha), std::sin(g.alpha)};
  const double b[] = {std::cos(g.beta), std::sin(g.beta)};
  const double c[] = {std::cos(g.gamma), std::sin(g.gamma)};
  const Complex tail = std::sin(g.delta) * std::polar(1.0, g.phi);
  std::vector<Complex> amps(8);
  for (std::size_t idx = 0; idx < 8; ++idx) {
    amps[idx] = tail * a[(idx >> 2) & 1U] * b[(idx >> 1) & 1U] * c[idx & 1U];
  }
  amps[0] += std::cos(g.delta);
  return PureState::normalized(amps);
}

PureState gen_ghz_3q(Rng& rng) {
  constexpr double kHalfPi = std::numbers::pi / 2.0;
  GhzAngles g{};
  g.delta = rng.uniform_left_open(std::numbers::pi / 4.0);
  g.alpha = rng.uniform_left_open(kHalfPi);
  g.beta = rng.uniform_left_open(kHalfPi);
  g.gamma = rng.uniform_left_open(kHalfPi);
  g.phi = rng.uniform(0.0, kTwoPi);
  return ghz_3q(g);
}

PureState w_3q(double a, double b, double c, double d) {
  const Complex amps[] = {d, a, b, 0.0, c, 0.0, 0.0, 0.0};
  return PureState::normalized(amps);
}

PureState gen_w_3q(Rng& rng) {
  const double a = rng.uniform_open();
  const double b = rng.uniform_open();
  const double c = rng.uniform_open();
  const double d = rng.uniform_open();
  return w_3q(a, b, c, d);
}

LabeledState generate_state(const GenSpec& spec, std::size_t index) {
  Rng rng = Rng::stream(spec.seed, index);
  const StateFamily f = spec.family;
  const auto all_below = [](const LabeledState& s) {
    return std::all_of(s.negativities.begin(), s.negativities.end(), [](double n) { return n < kOracleTol; });
  };

  switch (f) {
    case StateFamily::sep2_pure: {
      auto s = label_state(gen_sep_pure_2q(rng), f);
      if (!all_below(s)) oracle_failure(f, "separable state has nonzero negativity");
      return s;
    }
    case StateFamily::sep2_mixed: {
      const std::size_t rank = target_rank(index, spec.mix_terms_range);
      for (std::size_t attempt = 0; attempt < spec.retry_cap; ++attempt) {
        DensityMatrix rho = gen_sep_mixed_2q(rng, terms_for_rank(rng, rank, spec.mix_terms_range));
        if (qlinalg::numerical_rank(rho, kRankTol) != rank) continue;
        auto s = label_state(std::move(rho), f);
        if (!all_below(s)) oracle_failure(f, "separable mixture has nonzero negativity");
        return s;
      }
      throw GenerationExhausted("no separable mixture of rank " + std::to_string(rank));
    }
    case StateFamily::bell_random: {
      auto s = label_state(gen_bell_random_2q(rng), f);
      if (std::abs(s.negativities[0] - 0.5) > kOracleTol) oracle_failure(f, "Bell state negativity is not 0.5");
      return s;
    }
    case StateFamily::random2_pure: {
      if (spec.negativity_interval) {
        return gen_binned_state_2q(rng, *spec.negativity_interval, PurityKind::pure, 1, spec.mix_terms_range,
                                   spec.retry_cap);
      }
      return label_state(gen_random_pure_2q(rng), f);
    }
    case StateFamily::random2_mixed: {
      const std::size_t rank = target_rank(index, spec.mix_terms_range);
      const Interval interval = spec.negativity_interval.value_or(Interval{-1.0, 1.0});
      return gen_binned_state_2q(rng, interval, PurityKind::mixed, rank, spec.mix_terms_range, spec.retry_cap);
    }
    case StateFamily::epsilon_pure:
    case StateFamily::epsilon_mixed: {
      const double eps = spec.epsilon.value();
      const PurityKind kind = f == StateFamily::epsilon_pure ? PurityKind::pure : PurityKind::mixed;
      auto s = gen_epsilon_2q(rng, eps, kind);
      if (eps == 0.0 && !all_below(s)) oracle_failure(f, "epsilon = 0 state is entangled");
      if (eps == 1.0 && kind == PurityKind::mixed && std::abs(s.negativities[0] - 0.5) > kOracleTol) {
        oracle_failure(f, "epsilon = 1 mixture is not maximally entangled");
      }
      return s;
    }
    case StateFamily::werner: {
      const double p = spec.werner_p.value();
      auto s = gen_werner(rng, p);
      if (std::abs(s.negativities[0] - std::max(0.0, 0.5 - p)) > kOracleTol) {
        oracle_failure(f, "Werner negativity differs from max(0, 1/2 - p)");
      }
      return s;
    }
    case StateFamily::sep3: {
      auto s = label_state(gen_sep_3q(rng), f);
      if (!all_below(s)) oracle_failure(f, "separable state has nonzero negativity");
      return s;
    }
    case StateFamily::be3: {
      std::size_t separated = 0;
      auto s = label_state(gen_be_3q(rng, &separated), f);
      for (std::size_t q = 0; q < 3; ++q) {
        const double expected = q == separated ? 0.0 : 0.5;
        if (std::abs(s.negativities[q] - expected) > kOracleTol) oracle_failure(f, "bipartition pattern is not (0, .5, .5)");
      }
      return s;
    }
    case StateFamily::ghz3:
    case StateFamily::w3: {
      // Draws arbitrarily close to a product state (e.g. delta -> 0) would be
      // labeled separable; they are redrawn so every sample carries its class.
      for (std::size_t attempt = 0; attempt < spec.retry_cap; ++attempt) {
        auto s = label_state(f == StateFamily::ghz3 ? gen_ghz_3q(rng) : gen_w_3q(rng), f);
        if (std::all_of(s.negativities.begin(), s.negativities.end(), [](double n) { return n > kOracleTol; })) return s;
      }
      throw GenerationExhausted("no genuinely entangled " + std::string(to_string(f)) + " draw");
    }
  }
  throw ConfigError("unhandled family");
}

DatasetRow to_row(const LabeledState& state) {
  DatasetRow row;
  if (state.num_qubits() == 2) {
    row.features = pipeline::featurize_density(state.density()).values;
  } else {
    const auto* psi = std::get_if<PureState>(&state.payload);
    if (psi == nullptr) throw InvalidState("three-qubit datasets hold pure states only");
    row.features = pipeline::featurize_purevec(*psi).values;
  }
  row.binary_label = state.binary_label;
  row.class_label = state.class_label;
  row.negativities = state.negativities;
  return row;
}

std::vector<std::pair<std::string, std::string>> spec_extra(const GenSpec& spec) {
  std::vector<std::pair<std::string, std::string>> extra;
  if (spec.negativity_interval) {
    extra.emplace_back("lo", io::format_short(spec.negativity_interval->lo));
    extra.emplace_back("hi", io::format_short(spec.negativity_interval->hi));
  }
  if (spec.epsilon) extra.emplace_back("epsilon", io::format_short(*spec.epsilon));
  if (spec.werner_p) extra.emplace_back("p", io::format_short(*spec.werner_p));
  if (is_mixed_family(spec.family)) {
    extra.emplace_back("terms",
                       std::to_string(spec.mix_terms_range.first) + "-" + std::to_string(spec.mix_terms_range.second));
  }
  return extra;
}

Dataset build_dataset(const GenSpec& spec, std::size_t jobs) {
  validate(spec);
  Dataset ds;
  ds.family = spec.family;
  ds.num_qubits = num_qubits(spec.family);
  ds.seed = spec.seed;
  ds.extra = spec_extra(spec);
  ds.rows.resize(spec.count);
  parallel_for(spec.count, jobs, [&](std::size_t i) { ds.rows[i] = to_row(generate_state(spec, i)); });
  return ds;
}

void verify_dataset(const Dataset& ds) {
  const auto expected_class = class_index(ds.family);
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const auto& row = ds.rows[i];
    const DensityMatrix rho = ds.num_qubits == 2
                                  ? DensityMatrix(pipeline::defeaturize_density(row.features))
                                  : qlinalg::projector(PureState(pipeline::defeaturize_purevec(row.features)));
    const LabeledState s = label_state(rho, ds.family);
    const auto fail = [&](std::string_view what) {
      throw InvalidState("row " + std::to_string(i) + " of " + std::string(to_string(ds.family)) + ": " +
                         std::string(what));
    };
    if (s.negativities.size() != row.negativities.size()) fail("wrong number of negativities");
    for (std::size_t k = 0; k < s.negativities.size(); ++k) {
      if (std::abs(s.negativities[k] - row.negativities[k]) > kOracleTol) fail("stored negativity disagrees with oracle");
    }
    if (s.binary_label != row.binary_label) fail("binary label disagrees with oracle");
    if (row.class_label != expected_class) fail("class label disagrees with family");
  }
}

std::string format_dataset(const Dataset& ds) {
  std::string out = "#entdetect-dataset v1; family=" + std::string(to_string(ds.family)) +
                    "; N=" + std::to_string(ds.num_qubits) + "; S=" + std::to_string(ds.rows.size()) +
                    "; seed=" + std::to_string(ds.seed) + "; extra=";
  for (std::size_t i = 0; i < ds.extra.size(); ++i) {
    if (i > 0) out += ',';
    out += ds.extra[i].first + '=' + ds.extra[i].second;
  }
  out += '\n';
  for (const auto& row : ds.rows) {
    for (double x : row.features) {
      out += io::format_double(x);
      out += ',';
    }
    out += std::to_string(row.binary_label);
    if (row.class_label) out += ',' + std::to_string(*row.class_label);
    for (double n : row.negativities) {
      out += ',';
      out += io::format_double(n);
    }
    out += '\n';
  }
  return out;
}

Dataset parse_dataset(std::string_view text) {
  constexpr std::string_view kMagic = "#entdetect-dataset v1; ";
  auto lines = io::split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || !lines[0].starts_with(kMagic)) throw FormatError("missing dataset header");

  Dataset ds;
  std::optional<std::size_t> count;
  bool have_family = false;
  bool have_n = false;
  bool have_seed = false;
  bool have_extra = false;
  for (auto field : io::split(lines[0].substr(kMagic.size()), ';')) {
    field = io::trim(field);
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) throw FormatError("malformed header field '" + std::string(field) + "'");
    const auto key = field.substr(0, eq);
    const auto value = field.substr(eq + 1);
    if (key == "family") {
      try {
        ds.family = parse_family(value);
      } catch (const ConfigError& e) {
        throw FormatError(e.what());
      }
      have_family = true;
    } else if (key == "N") {
      ds.num_qubits = io::parse_u64(value);
      have_n = true;
    } else if (key == "S") {
      count = io::parse_u64(value);
    } else if (key == "seed") {
      ds.seed = io::parse_u64(value);
      have_seed = true;
    } else if (key == "extra") {
      have_extra = true;
      if (value.empty()) continue;
      for (auto kv : io::split(value, ',')) {
        const auto e2 = kv.find('=');
        if (e2 == std::string_view::npos) throw FormatError("malformed extra entry");
        ds.extra.emplace_back(std::string(kv.substr(0, e2)), std::string(kv.substr(e2 + 1)));
      }
    } else {
      throw FormatError("unknown header field '" + std::string(key) + "'");
    }
  }
  if (!have_family || !have_n || !count || !have_seed || !have_extra) throw FormatError("incomplete dataset header");
  if (ds.num_qubits != num_qubits(ds.family)) throw FormatError("qubit count does not match family");
  if (lines.size() - 1 != *count) throw FormatError("row count does not match header S");

  const std::size_t width = feature_width(ds.num_qubits);
  const bool has_class = class_index(ds.family).has_value();
  const std::size_t n_neg = ds.num_qubits == 2 ? 1 : ds.num_qubits;
  const std::size_t expected_cols = width + 1 + (has_class ? 1 : 0) + n_neg;

  ds.rows.reserve(*count);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto cols = io::split(lines[li], ',');
    if (cols.size() != expected_cols) {
      throw WidthMismatch("row " + std::to_string(li) + " has " + std::to_string(cols.size()) + " columns, expected " +
                          std::to_string(expected_cols));
    }
    DatasetRow row;
    row.features.reserve(width);
    std::size_t c = 0;
    for (; c < width; ++c) row.features.push_back(io::parse_double(cols[c]));
    row.binary_label = static_cast<int>(io::parse_int(cols[c++]));
    if (row.binary_label != 0 && row.binary_label != 1) throw FormatError("binary label must be 0 or 1");
    if (has_class) row.class_label = static_cast<int>(io::parse_int(cols[c++]));
    for (; c < cols.size(); ++c) row.negativities.push_back(io::parse_double(cols[c]));
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

void write_dataset(const std::string& path, const Dataset& ds) { io::write_file_atomic(path, format_dataset(ds)); }

Dataset read_dataset(const std::string& path) { return parse_dataset(io::read_file(path)); }

}  // namespace entdetect::stategen
