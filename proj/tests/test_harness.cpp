#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "quantpool/harness.hpp"

using namespace quantpool;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("quantpool_harness_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

SynthRun small_run(std::uint64_t seed = 5, int crowd = 9) {
  SynthRun run;
  run.crowd.crowd_size = crowd;
  run.crowd.truth = {1000.0, 50.0};
  run.crowd.bias_scale = 30.0;
  run.crowd.seed = seed;
  run.crowd.first_week = 19;
  run.first_origin_week = 18;
  run.last_origin_week = 23;
  return run;
}

RunConfig two_method_config() {
  RunConfig config;
  config.methods = {{MethodKind::kSimpleAverage, 0.0},
                    {MethodKind::kMedian, 0.0}};
  return config;
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream content;
    content << in.rdbuf();
    files[fs::relative(entry.path(), dir).string()] = content.str();
  }
  return files;
}

}  // namespace

TEST_CASE("method specs have stable ids") {
  REQUIRE(MethodSpec{MethodKind::kSimpleAverage, 0.0}.id() == "simple_average");
  REQUIRE(MethodSpec{MethodKind::kSymTrim, 0.4}.id() == "sym_trim_40");
  REQUIRE(MethodSpec{MethodKind::kCaInteriorTrim, 0.8}.id() ==
          "ca_int_trim_80");
  REQUIRE(MethodSpec{MethodKind::kMaExteriorTrim, 0.15}.id() ==
          "ma_ext_trim_15");
  REQUIRE(parse_method_kind("envelope") == MethodKind::kEnvelope);
  REQUIRE_THROWS_AS(parse_method_kind("winkler"), std::invalid_argument);
}

TEST_CASE("config validation catches broken setups") {
  RunConfig config = two_method_config();
  REQUIRE_NOTHROW(config.validate());

  config.benchmark_id = "envelope";
  REQUIRE_THROWS_AS(config.validate(), std::invalid_argument);

  config = two_method_config();
  config.methods.push_back({MethodKind::kEnvelope, 0.0});
  config.benchmark_id = "envelope";  // interval-only benchmark is rejected
  REQUIRE_THROWS_AS(config.validate(), std::invalid_argument);

  config = two_method_config();
  config.methods.push_back({MethodKind::kMedian, 0.0});  // duplicate id
  REQUIRE_THROWS_AS(config.validate(), std::invalid_argument);

  config = two_method_config();
  config.alphas = {0.07};  // off-grid bounds
  REQUIRE_THROWS_AS(config.validate(), std::invalid_argument);

  config = two_method_config();
  config.methods.push_back({MethodKind::kSymTrim, 1.5});
  REQUIRE_THROWS_AS(config.validate(), std::invalid_argument);

  config = two_method_config();
  config.horizons = {5};
  REQUIRE_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("run config json round trip") {
  const auto j = nlohmann::json::parse(R"({
    "manifest": "corpus/manifest.json",
    "methods": [
      {"method": "simple_average"},
      {"method": "median"},
      {"method": "sym_trim", "beta": 0.4},
      {"method": "envelope"}
    ],
    "alphas": [0.05, 0.5],
    "horizons": [1, 2],
    "origin_weeks": {"first": 19, "last": 22},
    "category": "compartmental",
    "benchmark": "simple_average",
    "output_dir": "reports",
    "sort_repair": true
  })");
  const RunConfig config = parse_run_config(j);
  REQUIRE(config.manifest_path == "corpus/manifest.json");
  REQUIRE(config.methods.size() == 4);
  REQUIRE(config.methods[2].id() == "sym_trim_40");
  REQUIRE(config.horizons == std::vector<int>{1, 2});
  REQUIRE(config.first_origin_week == 19);
  REQUIRE(config.last_origin_week == 22);
  REQUIRE(config.category == CategoryFilter::kCompartmental);
  REQUIRE(config.output_dir == "reports");
  REQUIRE(config.sort_repair);
}

TEST_CASE("identical aggregates produce tied rank one and zero skill") {
  // An identity crowd makes every member equal, so the mean and median
  // aggregates coincide everywhere.
  SynthRun run = small_run();
  run.crowd.bias_scale = 0.0;
  Diagnostics diag;
  const EvalCorpus corpus = synthetic_eval_corpus(run, diag);
  const RunConfig config = two_method_config();
  const RunOutput output = run_evaluation(config, corpus);

  REQUIRE(!output.tables.empty());
  for (const auto& table : output.tables) {
    REQUIRE(!table.rows.empty());
    for (const auto& row : table.rows) {
      REQUIRE(row.rank == 1);
      REQUIRE(row.skill_pct == 0.0);
    }
  }
}

TEST_CASE("benchmark-only runs have single-row tables with zero skill") {
  SynthRun run = small_run();
  Diagnostics diag;
  const EvalCorpus corpus = synthetic_eval_corpus(run, diag);
  RunConfig config;
  config.methods = {{MethodKind::kSimpleAverage, 0.0}};
  const RunOutput output = run_evaluation(config, corpus);
  for (const auto& table : output.tables) {
    REQUIRE(table.rows.size() == 1);  // one group in this corpus
    REQUIRE(table.rows[0].rank == 1);
    REQUIRE(table.rows[0].skill_pct == 0.0);
  }
}

TEST_CASE("outlier-contaminated corpus ranks the median above the mean") {
  SynthRun run = small_run(7, 15);
  run.crowd.outlier_rate = 0.25;
  run.crowd.outlier_shift = 2000.0;
  Diagnostics diag;
  const EvalCorpus corpus = synthetic_eval_corpus(run, diag);
  const RunOutput output = run_evaluation(two_method_config(), corpus);

  const ScoreTable* crps_table = nullptr;
  for (const auto& table : output.tables) {
    if (table.id == "crps") crps_table = &table;
  }
  REQUIRE(crps_table != nullptr);
  std::map<std::string, int> rank;
  for (const auto& row : crps_table->rows) rank[row.method] = row.rank;
  REQUIRE(rank.at("median") < rank.at("simple_average"));
}

TEST_CASE("reports are byte-identical across runs") {
  SynthRun run = small_run(11, 10);
  run.crowd.outlier_rate = 0.1;
  RunConfig config = two_method_config();
  config.methods.push_back({MethodKind::kSymTrim, 0.4});
  config.methods.push_back({MethodKind::kCaExteriorTrim, 0.4});
  config.methods.push_back({MethodKind::kEnvelope, 0.0});

  TempDir a, b;
  for (const auto* dir : {&a.path, &b.path}) {
    Diagnostics diag;
    const EvalCorpus corpus = synthetic_eval_corpus(run, diag);
    const RunOutput output = run_evaluation(config, corpus);
    emit_reports(config, output, diag, *dir);
  }
  const auto tree_a = read_tree(a.path);
  const auto tree_b = read_tree(b.path);
  REQUIRE(tree_a.size() > 5);
  REQUIRE(tree_a == tree_b);
}

TEST_CASE("interval table matches between levelwise families") {
  // Symmetric bound trimming and CA exterior trimming with the same beta are
  // the same computation through two different module paths; their interval
  // tables must coincide row for row.
  SynthRun run = small_run(13, 12);
  run.crowd.outlier_rate = 0.1;
  Diagnostics diag;
  const EvalCorpus corpus = synthetic_eval_corpus(run, diag);

  RunConfig config = two_method_config();
  config.methods.push_back({MethodKind::kSymTrim, 0.6});
  config.methods.push_back({MethodKind::kCaExteriorTrim, 0.6});
  const RunOutput output = run_evaluation(config, corpus);

  for (const auto& table : output.tables) {
    if (table.id.rfind("interval_score_", 0) != 0) continue;
    std::map<std::string, const TableRow*> rows;
    for (const auto& row : table.rows) rows[row.method] = &row;
    REQUIRE(rows.at("sym_trim_60")->mean_score ==
            rows.at("ca_ext_trim_60")->mean_score);
    REQUIRE(rows.at("sym_trim_60")->rank == rows.at("ca_ext_trim_60")->rank);
  }

  // And the per-slot intervals themselves are identical.
  const auto& sym = output.interval_aggregates.at("sym_trim_60");
  const auto& ca = output.interval_aggregates.at("ca_ext_trim_60");
  REQUIRE(sym.size() == ca.size());
  for (const auto& [key, intervals] : sym) {
    const auto& other = ca.at(key);
    for (std::size_t i = 0; i < intervals.size(); ++i) {
      REQUIRE(intervals[i].lower == other[i].lower);
      REQUIRE(intervals[i].upper == other[i].upper);
    }
  }
}

TEST_CASE("emitted aggregate curves re-ingest to the in-memory aggregates") {
  SynthRun run = small_run(17, 8);
  Diagnostics diag;
  const EvalCorpus corpus = synthetic_eval_corpus(run, diag);
  const RunConfig config = two_method_config();
  const RunOutput output = run_evaluation(config, corpus);

  TempDir out;
  emit_reports(config, output, diag, out.path);

  for (const auto& method : {"simple_average", "median"}) {
    Diagnostics reparse_diag;
    const auto reparsed = parse_submission_file(
        (out.path / "aggregates" / (std::string(method) + ".csv")).string(),
        method, TeamCategory::kOther, reparse_diag);
    const auto& in_memory = output.curve_aggregates.at(method);
    REQUIRE(reparsed.size() == in_memory.size());
    for (const auto& s : reparsed) {
      const SlotKey key{s.location, s.origin_week, s.horizon};
      REQUIRE(s.curve == in_memory.at(key));
    }
  }
}

TEST_CASE("truth gaps skip slots with a warning") {
  SynthRun run = small_run(19, 6);
  Diagnostics diag;
  EvalCorpus corpus = synthetic_eval_corpus(run, diag);
  // Remove one target week from truth (not the final grouping week).
  auto& observations = corpus.truth.at(run.crowd.location).observations;
  observations.erase(run.first_origin_week + 2);

  const RunOutput output = run_evaluation(two_method_config(), corpus);
  REQUIRE(output.unscored_slots > 0);
  bool found = false;
  for (const auto& warning : output.warnings) {
    if (warning.find("no truth for target week") != std::string::npos) {
      found = true;
    }
  }
  REQUIRE(found);
}

TEST_CASE("degenerate interior trim aborts the run naming the slot") {
  SynthRun run = small_run(23, 3);  // pool of 3 members
  Diagnostics diag;
  const EvalCorpus corpus = synthetic_eval_corpus(run, diag);
  RunConfig config = two_method_config();
  config.methods.push_back({MethodKind::kCaInteriorTrim, 0.9});
  try {
    run_evaluation(config, corpus);
    FAIL("expected degenerate-trim failure");
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    REQUIRE(what.find("ca_int_trim_90") != std::string::npos);
    REQUIRE(what.find("origin") != std::string::npos);
  }
}

TEST_CASE("missing final-week truth excludes the location") {
  SynthRun run = small_run(29, 6);
  Diagnostics diag;
  EvalCorpus corpus = synthetic_eval_corpus(run, diag);
  auto& observations = corpus.truth.at(run.crowd.location).observations;
  observations.erase(run.last_origin_week + 4);  // the grouping week

  REQUIRE_THROWS_AS(run_evaluation(two_method_config(), corpus),
                    std::runtime_error);  // only location gone -> nothing scored
}

TEST_CASE("groups absent from the corpus are reported as empty") {
  SynthRun run = small_run(31, 6);
  run.crowd.truth = {500.0, 30.0};  // low-mortality corpus
  Diagnostics diag;
  const EvalCorpus corpus = synthetic_eval_corpus(run, diag);
  const RunOutput output = run_evaluation(two_method_config(), corpus);

  REQUIRE(output.group_of_location.at(run.crowd.location) == "Low");
  REQUIRE(output.empty_groups ==
          std::vector<std::string>{"Medium", "High"});
  for (const auto& table : output.tables) {
    for (const auto& row : table.rows) REQUIRE(row.group == "Low");
  }
}

namespace {

// Merges synthetic crowds for several locations into one corpus.
EvalCorpus multi_location_corpus(
    const std::vector<std::pair<std::string, double>>& locations,
    std::uint64_t seed) {
  EvalCorpus merged;
  int index = 0;
  for (const auto& [code, mortality] : locations) {
    SynthRun run = small_run(seed + static_cast<std::uint64_t>(index++), 7);
    run.crowd.location = code;
    run.crowd.truth = {mortality, mortality / 20.0};
    Diagnostics diag;
    EvalCorpus one = synthetic_eval_corpus(run, diag);
    merged.pools.merge(one.pools);
    merged.truth.merge(one.truth);
  }
  return merged;
}

}  // namespace

TEST_CASE("mortality groups partition a mixed corpus") {
  const EvalCorpus corpus = multi_location_corpus(
      {{"US", 50000.0}, {"36", 5000.0}, {"56", 500.0}, {"11", 700.0}}, 91);
  RunConfig config = two_method_config();
  const RunOutput output = run_evaluation(config, corpus);

  REQUIRE(output.group_of_location.at("US") == "High");
  REQUIRE(output.group_of_location.at("36") == "Medium");
  REQUIRE(output.group_of_location.at("56") == "Low");
  REQUIRE(output.group_of_location.at("11") == "Low");
  REQUIRE(output.empty_groups.empty());

  // Groups appear in the fixed order Low, Medium, High within each table.
  for (const auto& table : output.tables) {
    std::vector<std::string> group_sequence;
    for (const auto& row : table.rows) {
      if (group_sequence.empty() || group_sequence.back() != row.group) {
        group_sequence.push_back(row.group);
      }
    }
    REQUIRE(group_sequence == std::vector<std::string>{"Low", "Medium",
                                                       "High"});
  }
}

TEST_CASE("tables are internally consistent on a full 52-series corpus") {
  std::vector<std::pair<std::string, double>> locations;
  double mortality = 300.0;
  for (const auto& code : canonical_locations()) {
    locations.push_back({code, mortality});
    mortality *= 1.14;  // spreads the series across all three groups
  }
  const EvalCorpus corpus = multi_location_corpus(locations, 1234);
  REQUIRE(corpus.truth.size() == 52);

  RunConfig config = two_method_config();
  config.methods.push_back({MethodKind::kSymTrim, 0.4});
  config.methods.push_back({MethodKind::kEnvelope, 0.0});
  config.methods.push_back({MethodKind::kCaExteriorTrim, 0.6});
  const RunOutput output = run_evaluation(config, corpus);

  REQUIRE(output.group_of_location.size() == 52);
  REQUIRE(output.empty_groups.empty());

  for (const auto& table : output.tables) {
    std::map<std::string, std::vector<const TableRow*>> by_group;
    for (const auto& row : table.rows) by_group[row.group].push_back(&row);
    for (const auto& [group, rows] : by_group) {
      // The lowest mean score holds rank 1. Skill ordering may differ from
      // rank ordering (arithmetic mean across series vs geometric mean of
      // ratios), as it does in the source tables.
      const TableRow* best = rows.front();
      const TableRow* benchmark = nullptr;
      for (const auto* row : rows) {
        if (row->mean_score < best->mean_score) best = row;
        if (row->method == config.benchmark_id) benchmark = row;
      }
      REQUIRE(best->rank == 1);
      REQUIRE(benchmark != nullptr);
      REQUIRE(benchmark->skill_pct == 0.0);
      // Competition ranking: one plus the number of strictly better scores.
      for (const auto* row : rows) {
        int strictly_better = 0;
        for (const auto* other : rows) {
          if (other->mean_score < row->mean_score) ++strictly_better;
        }
        REQUIRE(row->rank == strictly_better + 1);
        REQUIRE(row->rank <= static_cast<int>(rows.size()));
      }
    }
  }
}

TEST_CASE("synthetic corpus export produces a runnable corpus") {
  TempDir dir;
  SynthRun run = small_run(37, 5);
  export_synthetic_corpus(run, dir.path);

  REQUIRE(fs::exists(dir.path / "manifest.json"));
  REQUIRE(fs::exists(dir.path / "truth.csv"));
  REQUIRE(fs::exists(dir.path / "run_config.json"));

  Diagnostics diag;
  const Corpus corpus =
      load_corpus((dir.path / "manifest.json").string(), diag);
  REQUIRE(corpus.submissions.size() ==
          static_cast<std::size_t>(5 * 4 * (run.last_origin_week -
                                            run.first_origin_week + 1)));
  const EvalCorpus eval = make_eval_corpus(corpus, diag, CategoryFilter::kAll);
  REQUIRE(!eval.pools.empty());
  for (const auto& [key, pool] : eval.pools) {
    REQUIRE(pool.size() == 5);
  }
}
