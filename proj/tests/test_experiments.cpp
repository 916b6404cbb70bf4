#include <filesystem>

#include "doctest.h"
#include "entdetect/error.hpp"
#include "entdetect/experiments.hpp"
#include "entdetect/io.hpp"

using namespace entdetect;
using namespace entdetect::experiments;
namespace fs = std::filesystem;

namespace {

ExperimentSpec tiny(ExperimentId id) {
  auto s = default_spec(id, Scale::desk);
  s.dataset_size = id == ExperimentId::epsilon_sweep || id == ExperimentId::werner_sweep ? 200 : 120;
  s.replicates = 2;
  s.max_epochs = 2;
  s.states_per_point = 20;
  s.grid_step = 0.25;
  s.batch_size = std::min<std::size_t>(s.batch_size, 20);
  s.retry_cap = 100000;
  return s;
}

std::string fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("entdetect_exp_" + name);
  fs::remove_all(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("ids and scales") {
  for (auto id : all_experiments()) CHECK(parse_experiment_id(to_string(id)) == id);
  CHECK_THROWS_AS(parse_experiment_id("fig9"), ConfigError);
  CHECK(parse_scale("desk") == Scale::desk);
  CHECK_THROWS_AS(parse_scale("huge"), ConfigError);
  CHECK(default_spec(ExperimentId::categorical_runs, Scale::desk).dataset_size == 40000);
  CHECK(default_spec(ExperimentId::fig_sep_vs_bell).replicates == 100);
}

TEST_CASE("caption topologies") {
  CHECK(caption_topology("256:128:16:1") == std::vector<std::size_t>{16, 256, 128, 16, 1});
  CHECK(caption_topology("16:4:1") == std::vector<std::size_t>{16, 4, 1});
  CHECK(caption_topology("16:1") == std::vector<std::size_t>{16, 1});
  for (auto id : all_experiments()) CHECK_NOTHROW(validate(default_spec(id)));
  auto bad = default_spec(ExperimentId::categorical_runs);
  bad.topology = "16:8:1";
  CHECK_THROWS_AS(validate(bad), ConfigError);
  auto zero = default_spec(ExperimentId::generalist);
  zero.replicates = 0;
  CHECK_THROWS_AS(validate(zero), ConfigError);
}

TEST_CASE("every experiment runs at toy scale and is reproducible") {
  for (auto id : all_experiments()) {
    CAPTURE(to_string(id));
    const auto spec = tiny(id);
    const auto dir_a = fresh_dir(std::string(to_string(id)) + "_a");
    const auto dir_b = fresh_dir(std::string(to_string(id)) + "_b");
    const auto a = run_experiment(spec, {dir_a, 1, {}});
    const auto b = run_experiment(spec, {dir_b, 2, {}});
    CHECK(!a.summary.empty());
    CHECK(a.summary == b.summary);
    REQUIRE(a.files.size() == b.files.size());
    bool has_metrics = false, has_model = false, has_curve = false, has_summary = false;
    for (std::size_t i = 0; i < a.files.size(); ++i) {
      const auto name = fs::path(a.files[i]).filename().string();
      CHECK(name == fs::path(b.files[i]).filename().string());
      CHECK(io::read_file(a.files[i]) == io::read_file(b.files[i]));
      has_metrics |= name.starts_with("metrics_");
      has_model |= name.starts_with("model_");
      has_curve |= name.starts_with("curve_");
      has_summary |= name.starts_with("summary_");
    }
    CHECK(has_metrics);
    CHECK(has_model);
    CHECK(has_curve);
    CHECK(has_summary);
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
  }
}

TEST_CASE("sweep labels follow the oracle") {
  auto spec = tiny(ExperimentId::werner_sweep);
  spec.grid_step = 0.05;
  const auto res = run_werner_sweep(spec, {});
  const auto& c = res.curve("deep", "werner");
  REQUIRE(c.abscissa.size() == 21);
  for (std::size_t k = 0; k < c.abscissa.size(); ++k) {
    CHECK(c.oracle_entangled[k] == (c.abscissa[k] < 0.5 - 1e-12 ? 1.0 : 0.0));
  }
  auto eps = tiny(ExperimentId::epsilon_sweep);
  const auto er = run_epsilon_sweep(eps, {});
  CHECK(er.curve("shallow", "epsilon_mixed").oracle_entangled.front() == 0.0);
  CHECK(er.curve("shallow", "epsilon_pure").oracle_entangled.back() == 1.0);
}

TEST_CASE("cached datasets are reused and verified") {
  const auto dir = fresh_dir("cache");
  stategen::GenSpec g;
  g.family = stategen::StateFamily::bell_random;
  g.count = 10;
  g.seed = 3;
  const Context ctx{dir, 1, {}};
  const auto first = obtain_dataset(g, ctx);
  const auto second = obtain_dataset(g, ctx);
  CHECK(first == second);
  std::string cached;
  for (const auto& e : fs::directory_iterator(dir + "/datasets")) cached = e.path().string();
  auto text = io::read_file(cached);
  text[text.find('\n') + 3] = text[text.find('\n') + 3] == '1' ? '2' : '1';
  io::write_file_atomic(cached, text);
  CHECK_THROWS(obtain_dataset(g, ctx));
  fs::remove_all(dir);
}
