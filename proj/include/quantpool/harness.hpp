#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "quantpool/curve_agg.hpp"
#include "quantpool/ingest.hpp"
#include "quantpool/interval_agg.hpp"
#include "quantpool/scoring.hpp"
#include "quantpool/synthetic.hpp"
#include "quantpool/types.hpp"

namespace quantpool {

// ---------------------------------------------------------------------------
// Method registry

enum class MethodKind {
  kSimpleAverage,
  kMedian,
  kSymTrim,
  kAsymExteriorTrim,
  kAsymInteriorTrim,
  kEnvelope,
  kCaExteriorTrim,
  kCaInteriorTrim,
  kMaExteriorTrim,
  kMaInteriorTrim,
};

inline std::string method_kind_name(MethodKind kind) {
  switch (kind) {
    case MethodKind::kSimpleAverage: return "simple_average";
    case MethodKind::kMedian: return "median";
    case MethodKind::kSymTrim: return "sym_trim";
    case MethodKind::kAsymExteriorTrim: return "asym_ext_trim";
    case MethodKind::kAsymInteriorTrim: return "asym_int_trim";
    case MethodKind::kEnvelope: return "envelope";
    case MethodKind::kCaExteriorTrim: return "ca_ext_trim";
    case MethodKind::kCaInteriorTrim: return "ca_int_trim";
    case MethodKind::kMaExteriorTrim: return "ma_ext_trim";
    case MethodKind::kMaInteriorTrim: return "ma_int_trim";
  }
  throw std::logic_error("unknown method kind");
}

inline MethodKind parse_method_kind(const std::string& name) {
  static const std::map<std::string, MethodKind> kinds = {
      {"simple_average", MethodKind::kSimpleAverage},
      {"median", MethodKind::kMedian},
      {"sym_trim", MethodKind::kSymTrim},
      {"asym_ext_trim", MethodKind::kAsymExteriorTrim},
      {"asym_int_trim", MethodKind::kAsymInteriorTrim},
      {"envelope", MethodKind::kEnvelope},
      {"ca_ext_trim", MethodKind::kCaExteriorTrim},
      {"ca_int_trim", MethodKind::kCaInteriorTrim},
      {"ma_ext_trim", MethodKind::kMaExteriorTrim},
      {"ma_int_trim", MethodKind::kMaInteriorTrim},
  };
  auto it = kinds.find(name);
  if (it == kinds.end()) {
    throw std::invalid_argument("unknown aggregation method '" + name + "'");
  }
  return it->second;
}

inline bool method_needs_beta(MethodKind kind) {
  switch (kind) {
    case MethodKind::kSymTrim:
    case MethodKind::kAsymExteriorTrim:
    case MethodKind::kAsymInteriorTrim:
    case MethodKind::kCaExteriorTrim:
    case MethodKind::kCaInteriorTrim:
    case MethodKind::kMaExteriorTrim:
    case MethodKind::kMaInteriorTrim:
      return true;
    default:
      return false;
  }
}

// Distributional methods produce full aggregate curves (and intervals by
// extraction); the remaining methods act on extracted interval bounds only.
inline bool method_is_distributional(MethodKind kind) {
  switch (kind) {
    case MethodKind::kSimpleAverage:
    case MethodKind::kMedian:
    case MethodKind::kCaExteriorTrim:
    case MethodKind::kCaInteriorTrim:
    case MethodKind::kMaExteriorTrim:
    case MethodKind::kMaInteriorTrim:
      return true;
    default:
      return false;
  }
}

struct MethodSpec {
  MethodKind kind = MethodKind::kSimpleAverage;
  double beta = 0.0;

  bool distributional() const { return method_is_distributional(kind); }

  std::string id() const {
    std::string name = method_kind_name(kind);
    if (method_needs_beta(kind)) {
      char buf[24];
      std::snprintf(buf, sizeof(buf), "%.6g", beta * 100.0);
      name += "_";
      name += buf;
    }
    return name;
  }

  void validate() const {
    if (method_needs_beta(kind) && !(beta > 0.0 && beta < 1.0)) {
      throw std::invalid_argument("method " + method_kind_name(kind) +
                                  " needs a trim fraction in (0,1)");
    }
  }
};

inline QuantileCurve aggregate_curve(const MethodSpec& method,
                                     const CurvePool& pool) {
  switch (method.kind) {
    case MethodKind::kSimpleAverage: return agg_curve_mean(pool);
    case MethodKind::kMedian: return agg_curve_median(pool);
    case MethodKind::kCaExteriorTrim: return agg_ca_exterior(pool, method.beta);
    case MethodKind::kCaInteriorTrim: return agg_ca_interior(pool, method.beta);
    case MethodKind::kMaExteriorTrim: return agg_ma_exterior(pool, method.beta);
    case MethodKind::kMaInteriorTrim: return agg_ma_interior(pool, method.beta);
    default:
      throw std::logic_error(method.id() +
                             " does not produce a distributional aggregate");
  }
}

inline IntervalForecast aggregate_interval(const MethodSpec& method,
                                           const IntervalPool& pool) {
  switch (method.kind) {
    case MethodKind::kSimpleAverage: return agg_simple_average(pool);
    case MethodKind::kMedian: return agg_median(pool);
    case MethodKind::kSymTrim: return agg_symmetric_trim(pool, method.beta);
    case MethodKind::kAsymExteriorTrim:
      return agg_asym_exterior_trim(pool, method.beta);
    case MethodKind::kAsymInteriorTrim:
      return agg_asym_interior_trim(pool, method.beta);
    case MethodKind::kEnvelope: return agg_envelope(pool);
    default:
      throw std::logic_error(method.id() +
                             " aggregates whole curves, not interval bounds");
  }
}

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  std::string manifest_path;
  std::vector<MethodSpec> methods;
  std::vector<double> alphas = {0.05, 0.50};
  std::vector<int> horizons = {1, 2, 3, 4};
  std::optional<int> first_origin_week;
  std::optional<int> last_origin_week;
  CategoryFilter category = CategoryFilter::kAll;
  std::string benchmark_id = "simple_average";
  std::string output_dir = "out";
  bool sort_repair = false;

  void validate() const {
    if (methods.empty()) {
      throw std::invalid_argument("config lists no aggregation methods");
    }
    std::set<std::string> ids;
    for (const auto& m : methods) {
      m.validate();
      if (!ids.insert(m.id()).second) {
        throw std::invalid_argument("duplicate method " + m.id());
      }
    }
    const MethodSpec* benchmark = find_method(benchmark_id);
    if (benchmark == nullptr) {
      throw std::invalid_argument("benchmark method '" + benchmark_id +
                                  "' is not in the method list");
    }
    if (!benchmark->distributional()) {
      throw std::invalid_argument(
          "benchmark must be a distributional method so every table can "
          "compute skill against it");
    }
    if (alphas.empty()) throw std::invalid_argument("config lists no alphas");
    std::set<int> coverages;
    for (double a : alphas) {
      if (!coverages.insert(IntervalSpec{a}.coverage_percent()).second) {
        throw std::invalid_argument("duplicate interval alpha in config");
      }
    }
    if (horizons.empty()) {
      throw std::invalid_argument("config lists no horizons");
    }
    for (int h : horizons) validate_horizon(h);
  }

  const MethodSpec* find_method(const std::string& id) const {
    for (const auto& m : methods) {
      if (m.id() == id) return &m;
    }
    return nullptr;
  }
};

inline CategoryFilter parse_category_filter(const std::string& text) {
  if (text == "all") return CategoryFilter::kAll;
  if (text == "compartmental") return CategoryFilter::kCompartmental;
  if (text == "other") return CategoryFilter::kOther;
  throw std::invalid_argument(
      "category must be all, compartmental, or other; got '" + text + "'");
}

inline std::string category_filter_name(CategoryFilter f) {
  switch (f) {
    case CategoryFilter::kAll: return "all";
    case CategoryFilter::kCompartmental: return "compartmental";
    case CategoryFilter::kOther: return "other";
  }
  return "all";
}

inline RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig config;
  if (j.contains("manifest")) {
    config.manifest_path = j.at("manifest").get<std::string>();
  }
  for (const auto& entry : j.at("methods")) {
    MethodSpec m;
    m.kind = parse_method_kind(entry.at("method").get<std::string>());
    if (entry.contains("beta")) m.beta = entry.at("beta").get<double>();
    config.methods.push_back(m);
  }
  if (j.contains("alphas")) {
    config.alphas = j.at("alphas").get<std::vector<double>>();
  }
  if (j.contains("horizons")) {
    config.horizons = j.at("horizons").get<std::vector<int>>();
  }
  if (j.contains("origin_weeks")) {
    const auto& range = j.at("origin_weeks");
    if (range.contains("first")) config.first_origin_week = range.at("first");
    if (range.contains("last")) config.last_origin_week = range.at("last");
  }
  if (j.contains("category")) {
    config.category = parse_category_filter(j.at("category").get<std::string>());
  }
  if (j.contains("benchmark")) {
    config.benchmark_id = j.at("benchmark").get<std::string>();
  }
  if (j.contains("output_dir")) {
    config.output_dir = j.at("output_dir").get<std::string>();
  }
  if (j.contains("sort_repair")) {
    config.sort_repair = j.at("sort_repair").get<bool>();
  }
  config.validate();
  return config;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config " + path + ": " + e.what());
  }
  return parse_run_config(j);
}

// ---------------------------------------------------------------------------
// Evaluation

// The in-memory corpus the evaluation runs on; built from ingested files or
// from a synthetic crowd.
struct EvalCorpus {
  PoolSet pools;
  std::map<std::string, TruthSeries> truth;
};

inline EvalCorpus make_eval_corpus(const Corpus& corpus, Diagnostics& diag,
                                   CategoryFilter filter) {
  return EvalCorpus{build_pools(corpus.submissions, diag, filter),
                    corpus.truth};
}

struct TableRow {
  std::string method;
  std::string group;
  double mean_score = 0.0;
  int rank = 0;
  double skill_pct = 0.0;
};

struct ScoreTable {
  std::string id;  // e.g. "interval_score_95", "crps", "mae"
  std::vector<TableRow> rows;
};

struct CalibrationRow {
  std::string method;
  std::string group;
  double theta = 0.0;
  double hit_pct = 0.0;
};

struct RunOutput {
  std::vector<ScoreTable> tables;
  std::vector<CalibrationRow> calibration;
  // Per-method aggregates for every slot in range, including slots that
  // could not be scored for lack of truth.
  std::map<std::string, std::map<SlotKey, QuantileCurve>> curve_aggregates;
  std::map<std::string, std::map<SlotKey, std::vector<IntervalForecast>>>
      interval_aggregates;  // parallel to the config alpha list
  std::map<std::string, std::string> group_of_location;
  std::vector<std::string> empty_groups;
  std::vector<std::string> warnings;
  std::string corpus_fingerprint;
  std::size_t scored_slots = 0;
  std::size_t unscored_slots = 0;
};

namespace detail {

inline void fnv_mix(std::uint64_t& hash, std::string_view bytes) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
}

inline std::string corpus_fingerprint(const EvalCorpus& corpus) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (const auto& [key, pool] : corpus.pools) {
    fnv_mix(hash, key.location);
    fnv_mix(hash, std::to_string(key.origin_week));
    fnv_mix(hash, std::to_string(key.horizon));
    for (std::size_t i = 0; i < pool.teams.size(); ++i) {
      fnv_mix(hash, pool.teams[i]);
      for (double v : pool.curves[i].values()) {
        fnv_mix(hash, format_double(v));
      }
    }
  }
  for (const auto& [loc, series] : corpus.truth) {
    fnv_mix(hash, loc);
    for (const auto& [week, value] : series.observations) {
      fnv_mix(hash, std::to_string(week));
      fnv_mix(hash, format_double(value));
    }
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

// origin -> per-horizon samples for one (metric, method, location).
using OriginSamples = std::map<int, std::vector<double>>;

// Averaging order is fixed: across horizons within an origin, then across
// origins. With a complete grid this equals the pooled mean; with gaps it
// keeps every origin equally weighted.
inline double reduce_series(const OriginSamples& samples) {
  double origin_sum = 0.0;
  for (const auto& [origin, values] : samples) {
    double sum = 0.0;
    for (double v : values) sum += v;
    origin_sum += sum / static_cast<double>(values.size());
  }
  return origin_sum / static_cast<double>(samples.size());
}

}  // namespace detail

// Runs every configured method over every pool in range, then scores, groups,
// ranks, and computes skill. Deterministic for a fixed config and corpus.
// With score = false only the aggregation phase runs (the `aggregate`
// subcommand).
inline RunOutput run_evaluation(const RunConfig& config,
                                const EvalCorpus& corpus, bool score = true) {
  config.validate();

  RunOutput output;
  output.corpus_fingerprint = detail::corpus_fingerprint(corpus);

  const std::set<int> horizon_set(config.horizons.begin(),
                                  config.horizons.end());
  std::vector<std::pair<const SlotKey*, const SlotPool*>> slots;
  for (const auto& [key, pool] : corpus.pools) {
    if (!horizon_set.count(key.horizon)) continue;
    if (config.first_origin_week && key.origin_week < *config.first_origin_week)
      continue;
    if (config.last_origin_week && key.origin_week > *config.last_origin_week)
      continue;
    slots.push_back({&key, &pool});
  }
  if (slots.empty()) {
    throw std::runtime_error("no pools fall inside the configured origin "
                             "weeks and horizons");
  }

  // Aggregation phase: every method over every slot. A degenerate interior
  // trim (keep count zero) aborts the run with the offending slot named, so
  // comparison tables can never silently mix trim levels.
  std::vector<IntervalSpec> specs;
  for (double a : config.alphas) specs.emplace_back(a);

  for (const auto& [key, pool] : slots) {
    for (const auto& method : config.methods) {
      try {
        if (method.distributional()) {
          QuantileCurve curve = aggregate_curve(method, pool->curve_pool());
          std::vector<IntervalForecast> intervals;
          intervals.reserve(specs.size());
          for (const auto& spec : specs) {
            intervals.push_back(curve_to_interval(curve, spec));
          }
          output.curve_aggregates[method.id()].emplace(*key, std::move(curve));
          output.interval_aggregates[method.id()].emplace(*key,
                                                          std::move(intervals));
        } else {
          std::vector<IntervalForecast> intervals;
          intervals.reserve(specs.size());
          for (const auto& spec : specs) {
            intervals.push_back(aggregate_interval(
                method, IntervalPool::from_curves(pool->curves, spec)));
          }
          output.interval_aggregates[method.id()].emplace(*key,
                                                          std::move(intervals));
        }
      } catch (const std::invalid_argument& e) {
        throw std::runtime_error("method " + method.id() + " failed on slot (" +
                                 key->location + ", origin " +
                                 std::to_string(key->origin_week) +
                                 ", horizon " + std::to_string(key->horizon) +
                                 "): " + e.what());
      }
    }
  }

  if (!score) return output;

  // Series grouping uses the last target week of the run.
  int last_origin = slots.front().first->origin_week;
  for (const auto& [key, pool] : slots) {
    last_origin = std::max(last_origin, key->origin_week);
  }
  const int final_week =
      last_origin + *std::max_element(config.horizons.begin(),
                                      config.horizons.end());

  std::set<std::string> locations;
  for (const auto& [key, pool] : slots) locations.insert(key->location);

  std::map<std::string, MortalityGroup> groups;
  for (const auto& loc : locations) {
    auto truth_it = corpus.truth.find(loc);
    if (truth_it == corpus.truth.end() ||
        !truth_it->second.at(final_week).has_value()) {
      output.warnings.push_back(
          "location " + loc + " has no truth for final week " +
          std::to_string(final_week) + "; excluded from evaluation");
      continue;
    }
    groups[loc] = classify_group(truth_it->second, final_week);
    output.group_of_location[loc] = group_name(groups[loc]);
  }

  // Scoring phase: one ScoreSample per (metric, method, slot), gathered in
  // slot order and reduced afterwards.
  std::map<std::string, std::vector<ScoreSample>> samples;
  // method id -> grid level index -> location -> samples (of 0/100 hits).
  std::map<std::string,
           std::map<std::size_t, std::map<std::string, detail::OriginSamples>>>
      hit_acc;

  std::vector<std::string> interval_metric_ids;
  for (const auto& spec : specs) {
    interval_metric_ids.push_back(
        "interval_score_" + std::to_string(spec.coverage_percent()));
  }

  for (const auto& [key, pool] : slots) {
    auto group_it = groups.find(key->location);
    if (group_it == groups.end()) {
      ++output.unscored_slots;
      continue;
    }
    const auto truth_value =
        corpus.truth.at(key->location).at(key->target_week());
    if (!truth_value) {
      output.warnings.push_back(
          "slot (" + key->location + ", origin " +
          std::to_string(key->origin_week) + ", horizon " +
          std::to_string(key->horizon) + ") has no truth for target week " +
          std::to_string(key->target_week()) + "; slot skipped");
      ++output.unscored_slots;
      continue;
    }
    const double y = *truth_value;
    ++output.scored_slots;

    for (const auto& method : config.methods) {
      const std::string id = method.id();
      const auto record = [&](const std::string& metric, double value) {
        samples[metric].push_back(ScoreSample{value, key->location,
                                              key->origin_week, key->horizon,
                                              id});
      };
      const auto& intervals = output.interval_aggregates.at(id).at(*key);
      for (std::size_t a = 0; a < specs.size(); ++a) {
        record(interval_metric_ids[a],
               interval_score(specs[a].alpha(), intervals[a].lower,
                              intervals[a].upper, y));
      }
      if (method.distributional()) {
        const QuantileCurve& curve = output.curve_aggregates.at(id).at(*key);
        record("crps", crps_23(curve, y));
        record("mae", std::fabs(curve.median() - y));
        for (std::size_t level = 0; level < kNumLevels; ++level) {
          hit_acc[id][level][key->location][key->origin_week].push_back(
              y <= curve[level] ? 100.0 : 0.0);
        }
      } else {
        for (std::size_t a = 0; a < specs.size(); ++a) {
          hit_acc[id][specs[a].lower_index()][key->location][key->origin_week]
              .push_back(y <= intervals[a].lower ? 100.0 : 0.0);
          hit_acc[id][specs[a].upper_index()][key->location][key->origin_week]
              .push_back(y <= intervals[a].upper ? 100.0 : 0.0);
        }
      }
    }
  }
  if (output.scored_slots == 0) {
    throw std::runtime_error("no slot could be scored against truth");
  }

  // Regroup the sample stream for per-series reduction. Samples arrive in
  // slot order, so each origin's vector lists horizons ascending.
  std::map<std::string, std::map<std::string,
                                 std::map<std::string, detail::OriginSamples>>>
      metric_acc;
  for (const auto& [metric, list] : samples) {
    auto& per_method = metric_acc[metric];
    for (const auto& s : list) {
      per_method[s.method][s.location][s.origin_week].push_back(s.value);
    }
  }

  // Locations per group, in fixed (sorted) order.
  const std::array<MortalityGroup, 3> group_order = {
      MortalityGroup::kLow, MortalityGroup::kMedium, MortalityGroup::kHigh};
  std::map<MortalityGroup, std::vector<std::string>> group_locations;
  for (const auto& [loc, group] : groups) group_locations[group].push_back(loc);
  for (const auto& group : group_order) {
    if (group_locations[group].empty()) {
      output.empty_groups.push_back(group_name(group));
    }
  }

  // Reduce into tables.
  std::vector<std::string> metric_order = interval_metric_ids;
  metric_order.push_back("crps");
  metric_order.push_back("mae");

  for (const auto& metric : metric_order) {
    const bool distributional_only = metric == "crps" || metric == "mae";
    ScoreTable table;
    table.id = metric;
    const auto& per_method = metric_acc.at(metric);

    for (const auto& group : group_order) {
      // Series that actually got scored for this metric, benchmark's view;
      // coverage is identical across methods by construction.
      std::vector<std::string> series;
      const auto& bench_acc = per_method.at(config.benchmark_id);
      for (const auto& loc : group_locations[group]) {
        if (bench_acc.count(loc)) series.push_back(loc);
      }
      if (series.empty()) continue;

      std::map<std::string, double> mean_scores;
      std::map<std::string, std::vector<double>> series_scores;
      for (const auto& method : config.methods) {
        if (distributional_only && !method.distributional()) continue;
        const std::string id = method.id();
        double sum = 0.0;
        auto& per_series = series_scores[id];
        for (const auto& loc : series) {
          const double s = detail::reduce_series(per_method.at(id).at(loc));
          per_series.push_back(s);
          sum += s;
        }
        mean_scores[id] = sum / static_cast<double>(series.size());
      }

      const auto ranks = rank_methods(mean_scores);
      const auto& bench_series = series_scores.at(config.benchmark_id);
      for (const auto& method : config.methods) {
        if (distributional_only && !method.distributional()) continue;
        const std::string id = method.id();
        std::vector<ScorePair> pairs;
        pairs.reserve(series.size());
        for (std::size_t i = 0; i < series.size(); ++i) {
          pairs.push_back({series_scores.at(id)[i], bench_series[i]});
        }
        const SkillResult skill = skill_score(pairs);
        if (skill.excluded_series > 0) {
          output.warnings.push_back(
              "skill of " + id + " in group " + group_name(group) + " (" +
              metric + ") excluded " + std::to_string(skill.excluded_series) +
              " zero-score series");
        }
        table.rows.push_back(TableRow{id, group_name(group), mean_scores.at(id),
                                      ranks.at(id), skill.skill_pct});
      }
    }
    output.tables.push_back(std::move(table));
  }

  // Calibration rows: distributional methods report all 23 levels, interval
  // methods just the bound levels they produce.
  for (const auto& method : config.methods) {
    const std::string id = method.id();
    auto acc_it = hit_acc.find(id);
    if (acc_it == hit_acc.end()) continue;
    for (const auto& group : group_order) {
      if (group_locations[group].empty()) continue;
      for (const auto& [level, per_loc] : acc_it->second) {
        double sum = 0.0;
        int n = 0;
        for (const auto& loc : group_locations[group]) {
          auto it = per_loc.find(loc);
          if (it == per_loc.end()) continue;
          sum += detail::reduce_series(it->second);
          ++n;
        }
        if (n == 0) continue;
        output.calibration.push_back(
            CalibrationRow{id, group_name(group), kProbabilityLevels[level],
                           sum / static_cast<double>(n)});
      }
    }
  }

  return output;
}

// ---------------------------------------------------------------------------
// Report emission

namespace detail {

inline std::string format_skill(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", pct);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  return out;
}

inline nlohmann::json config_echo(const RunConfig& config) {
  nlohmann::json j;
  j["manifest"] = config.manifest_path;
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& m : config.methods) methods.push_back(m.id());
  j["methods"] = methods;
  j["alphas"] = config.alphas;
  j["horizons"] = config.horizons;
  if (config.first_origin_week) j["first_origin_week"] = *config.first_origin_week;
  if (config.last_origin_week) j["last_origin_week"] = *config.last_origin_week;
  j["category"] = category_filter_name(config.category);
  j["benchmark"] = config.benchmark_id;
  j["sort_repair"] = config.sort_repair;
  return j;
}

}  // namespace detail

// Writes the run's tables, calibration data, per-slot aggregates (in the same
// CSV format submissions arrive in, so they can be re-ingested), a JSON
// summary, and the diagnostics log. Output is byte-stable for a fixed config
// and corpus.
inline void emit_reports(const RunConfig& config, const RunOutput& output,
                         const Diagnostics& diag,
                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "aggregates");

  for (const auto& table : output.tables) {
    auto out = detail::open_output(dir / (table.id + ".csv"));
    out << "method,group,mean_score,rank,skill_pct\n";
    for (const auto& row : table.rows) {
      out << row.method << "," << row.group << ","
          << format_double(row.mean_score) << "," << row.rank << ","
          << detail::format_skill(row.skill_pct) << "\n";
    }
  }

  if (!output.calibration.empty()) {
    auto out = detail::open_output(dir / "calibration.csv");
    out << "method,group,theta,hit_pct\n";
    for (const auto& row : output.calibration) {
      out << row.method << "," << row.group << "," << format_double(row.theta)
          << "," << format_double(row.hit_pct) << "\n";
    }
  }

  for (const auto& [method, by_slot] : output.curve_aggregates) {
    std::vector<ForecastSubmission> rows;
    rows.reserve(by_slot.size());
    for (const auto& [key, curve] : by_slot) {
      rows.push_back(ForecastSubmission{method, TeamCategory::kOther,
                                        key.location, key.origin_week,
                                        key.horizon, Target::kCumulativeDeaths,
                                        curve, curve.median()});
    }
    auto out = detail::open_output(dir / "aggregates" / (method + ".csv"));
    write_submission_csv(out, std::move(rows));
  }

  {
    auto out = detail::open_output(dir / "aggregates" / "intervals.csv");
    out << "method,location,origin_week,horizon,alpha,lower,upper\n";
    for (const auto& [method, by_slot] : output.interval_aggregates) {
      for (const auto& [key, intervals] : by_slot) {
        for (std::size_t a = 0; a < intervals.size(); ++a) {
          out << method << "," << key.location << "," << key.origin_week << ","
              << key.horizon << "," << format_double(config.alphas[a]) << ","
              << format_double(intervals[a].lower) << ","
              << format_double(intervals[a].upper) << "\n";
        }
      }
    }
  }

  {
    nlohmann::json summary;
    summary["config"] = detail::config_echo(config);
    summary["corpus_fingerprint"] = output.corpus_fingerprint;
    summary["scored_slots"] = output.scored_slots;
    summary["unscored_slots"] = output.unscored_slots;
    summary["group_of_location"] = output.group_of_location;
    summary["empty_groups"] = output.empty_groups;
    summary["warnings"] = output.warnings;
    auto out = detail::open_output(dir / "summary.json");
    out << summary.dump(2) << "\n";
  }

  {
    auto out = detail::open_output(dir / "diagnostics.txt");
    for (const auto& entry : diag.entries) out << entry << "\n";
  }
}

// ---------------------------------------------------------------------------
// Synthetic corpora as runnable corpora

// Wraps a synthetic crowd into hub-style submissions: origin o at horizon h
// reads the pool generated for target week o+h, so different origins aiming
// at the same week share curves and the truth stays single-valued per week.
struct SynthRun {
  CrowdSpec crowd;
  int first_origin_week = 18;
  int last_origin_week = 29;
  std::string team_prefix = "crowd";

  int n_periods() const {
    return last_origin_week + 4 - first_origin_week;
  }

  void validate() const {
    crowd.validate();
    if (first_origin_week < 18 || last_origin_week < first_origin_week) {
      throw std::invalid_argument("synthetic origin-week range is invalid");
    }
    // Period p of the crowd is target week first_origin_week + 1 + p.
    if (crowd.first_week != first_origin_week + 1) {
      throw std::invalid_argument(
          "crowd first_week must be first_origin_week + 1");
    }
  }

  std::string team_name(int member) const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "-m%03d", member);
    return team_prefix + buf;
  }

  // Members alternate between the two model categories so category-filtered
  // runs have both sub-crowds available.
  TeamCategory team_category(int member) const {
    return member % 2 == 0 ? TeamCategory::kCompartmental
                           : TeamCategory::kOther;
  }
};

inline SynthRun parse_synth_config(const nlohmann::json& j) {
  SynthRun run;
  run.crowd.crowd_size = j.value("crowd_size", run.crowd.crowd_size);
  run.crowd.truth.location = j.value("truth_location", run.crowd.truth.location);
  run.crowd.truth.scale = j.value("truth_scale", run.crowd.truth.scale);
  run.crowd.bias_mean = j.value("bias_mean", run.crowd.bias_mean);
  run.crowd.bias_scale = j.value("bias_scale", run.crowd.bias_scale);
  run.crowd.confidence_center =
      j.value("confidence_center", run.crowd.confidence_center);
  run.crowd.confidence_log_scale =
      j.value("confidence_log_scale", run.crowd.confidence_log_scale);
  run.crowd.outlier_rate = j.value("outlier_rate", run.crowd.outlier_rate);
  run.crowd.outlier_shift = j.value("outlier_shift", run.crowd.outlier_shift);
  run.crowd.seed = j.value("seed", run.crowd.seed);
  run.crowd.location = j.value("location", run.crowd.location);
  run.first_origin_week = j.value("first_origin_week", run.first_origin_week);
  run.last_origin_week = j.value("last_origin_week", run.last_origin_week);
  run.team_prefix = j.value("team_prefix", run.team_prefix);
  run.crowd.first_week = run.first_origin_week + 1;
  run.validate();
  return run;
}

inline std::vector<ForecastSubmission> synthetic_submissions(
    const SynthRun& run, const SyntheticCrowd& crowd) {
  std::vector<ForecastSubmission> out;
  for (int m = 0; m < run.crowd.crowd_size; ++m) {
    const std::string team = run.team_name(m);
    const TeamCategory category = run.team_category(m);
    for (int origin = run.first_origin_week; origin <= run.last_origin_week;
         ++origin) {
      for (int h = 1; h <= 4; ++h) {
        const int period = origin + h - crowd.first_week;
        const auto& pool = crowd.pools.at(static_cast<std::size_t>(period));
        const QuantileCurve& curve =
            pool.members()[static_cast<std::size_t>(m)];
        out.push_back(ForecastSubmission{team, category, run.crowd.location,
                                         origin, h,
                                         Target::kCumulativeDeaths, curve,
                                         curve.median()});
      }
    }
  }
  return out;
}

inline EvalCorpus synthetic_eval_corpus(const SynthRun& run,
                                        Diagnostics& diag) {
  const SyntheticCrowd crowd = generate_crowd(run.crowd, run.n_periods());
  EvalCorpus corpus;
  corpus.pools = build_pools(synthetic_submissions(run, crowd), diag);
  corpus.truth[crowd.truth.location] = crowd.truth;
  return corpus;
}

// Writes a complete corpus directory: one submission CSV per synthetic team,
// the truth series, a manifest referencing them, and a ready-to-run
// evaluation config.
inline void export_synthetic_corpus(const SynthRun& run,
                                    const std::filesystem::path& dir) {
  run.validate();
  const SyntheticCrowd crowd = generate_crowd(run.crowd, run.n_periods());
  std::filesystem::create_directories(dir / "teams");

  const auto submissions = synthetic_submissions(run, crowd);
  std::map<std::string, std::vector<ForecastSubmission>> by_team;
  for (const auto& s : submissions) by_team[s.team].push_back(s);
  for (const auto& [team, subs] : by_team) {
    auto out = detail::open_output(dir / "teams" / (team + ".csv"));
    write_submission_csv(out, subs);
  }

  {
    auto out = detail::open_output(dir / "truth.csv");
    write_truth_csv(out, crowd.truth);
  }

  {
    nlohmann::json manifest;
    manifest["truth"] = "truth.csv";
    manifest["first_origin_week"] = run.first_origin_week;
    manifest["last_origin_week"] = run.last_origin_week;
    manifest["locations"] = std::vector<std::string>{run.crowd.location};
    nlohmann::json teams = nlohmann::json::array();
    for (const auto& [team, subs] : by_team) {
      nlohmann::json t;
      t["id"] = team;
      t["category"] =
          category_name(subs.front().category);
      t["files"] = "teams/" + team + ".csv";
      teams.push_back(t);
    }
    manifest["teams"] = teams;
    auto out = detail::open_output(dir / "manifest.json");
    out << manifest.dump(2) << "\n";
  }

  {
    nlohmann::json config;
    config["manifest"] = "manifest.json";
    nlohmann::json methods = nlohmann::json::array();
    methods.push_back({{"method", "simple_average"}});
    methods.push_back({{"method", "median"}});
    for (const std::string kind :
         {"sym_trim", "asym_ext_trim", "asym_int_trim", "ca_ext_trim",
          "ma_ext_trim"}) {
      methods.push_back({{"method", kind}, {"beta", 0.4}});
    }
    methods.push_back({{"method", "envelope"}});
    config["methods"] = methods;
    config["alphas"] = {0.05, 0.50};
    config["benchmark"] = "simple_average";
    config["output_dir"] = "out";
    auto out = detail::open_output(dir / "run_config.json");
    out << config.dump(2) << "\n";
  }
}

}  // namespace quantpool
