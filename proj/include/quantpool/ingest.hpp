#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "quantpool/csv.hpp"
#include "quantpool/curve_agg.hpp"
#include "quantpool/types.hpp"
#include "quantpool/weeks.hpp"

namespace quantpool {

// The 52 series of the study: the 50 states plus the District of Columbia
// (two-digit FIPS codes) and the national total "US".
inline const std::vector<std::string>& canonical_locations() {
  static const std::vector<std::string> codes = {
      "US", "01", "02", "04", "05", "06", "08", "09", "10", "11", "12", "13",
      "15", "16", "17", "18", "19", "20", "21", "22", "23", "24", "25", "26",
      "27", "28", "29", "30", "31", "32", "33", "34", "35", "36", "37", "38",
      "39", "40", "41", "42", "44", "45", "46", "47", "48", "49", "50", "51",
      "53", "54", "55", "56"};
  return codes;
}

inline bool is_canonical_location(const std::string& code) {
  const auto& codes = canonical_locations();
  return std::find(codes.begin(), codes.end(), code) != codes.end();
}

// Ingestion keeps an audit trail: every rejected row, slot, or submission
// gets exactly one entry saying why.
struct Diagnostics {
  std::vector<std::string> entries;

  void note(std::string message) { entries.push_back(std::move(message)); }
  std::size_t size() const { return entries.size(); }
};

// Ineligible (team, location) pairs per origin week, as published alongside
// the hub ensemble. Files exist only for origins >= 20.
class EligibilityList {
 public:
  void mark_ineligible(int origin_week, const std::string& team,
                       const std::string& location) {
    if (origin_week < 20) {
      throw std::invalid_argument(
          "eligibility data exists only for origin weeks >= 20, got week " +
          std::to_string(origin_week));
    }
    ineligible_[origin_week].insert({team, location});
  }

  bool is_ineligible(int origin_week, const std::string& team,
                     const std::string& location) const {
    auto it = ineligible_.find(origin_week);
    if (it == ineligible_.end()) return false;
    return it->second.count({team, location}) > 0;
  }

  bool empty() const { return ineligible_.empty(); }

 private:
  std::map<int, std::set<std::pair<std::string, std::string>>> ineligible_;
};

// CSV with header origin_week,team,location; one row per ineligible pair.
inline EligibilityList parse_eligibility_file(const std::string& path) {
  EligibilityList list;
  const CsvTable table = read_csv(path);
  const std::size_t week_col = column_index(table, "origin_week", path);
  const std::size_t team_col = column_index(table, "team", path);
  const std::size_t loc_col = column_index(table, "location", path);
  for (std::size_t r = 0; r < table.lines.size(); ++r) {
    const std::size_t line_no = table.first_data_line + r;
    const auto fields = split_csv_line(table.lines[r]);
    if (fields.size() < table.header.size()) {
      throw CsvError(path, line_no, "too few fields");
    }
    list.mark_ineligible(parse_int_field(fields[week_col], path, line_no),
                         std::string(fields[team_col]),
                         std::string(fields[loc_col]));
  }
  return list;
}

struct TeamEntry {
  std::string id;
  TeamCategory category = TeamCategory::kOther;
  std::vector<std::string> file_patterns;
};

struct CorpusManifest {
  std::filesystem::path base_dir;  // patterns and paths resolve against this
  std::vector<TeamEntry> teams;
  std::string truth_path;
  std::optional<std::string> eligibility_path;
  int first_origin_week = 18;
  int last_origin_week = 29;
  std::vector<std::string> locations;  // subset of the canonical 52

  void validate() const {
    if (first_origin_week < 18) {
      throw std::invalid_argument(
          "manifest first_origin_week must be >= 18, got " +
          std::to_string(first_origin_week));
    }
    if (last_origin_week < first_origin_week) {
      throw std::invalid_argument("manifest origin-week range is empty");
    }
    if (teams.empty()) {
      throw std::invalid_argument("manifest lists no teams");
    }
    for (const auto& loc : locations) {
      if (!is_canonical_location(loc)) {
        throw std::invalid_argument("manifest location '" + loc +
                                    "' is not one of the 52 series codes");
      }
    }
  }

  bool location_allowed(const std::string& code) const {
    const auto& allowed = locations.empty() ? canonical_locations() : locations;
    return std::find(allowed.begin(), allowed.end(), code) != allowed.end();
  }
};

inline TeamCategory parse_category(const std::string& text) {
  if (text == "compartmental") return TeamCategory::kCompartmental;
  if (text == "other") return TeamCategory::kOther;
  throw std::invalid_argument("team category must be 'compartmental' or "
                              "'other', got '" + text + "'");
}

inline std::string category_name(TeamCategory c) {
  return c == TeamCategory::kCompartmental ? "compartmental" : "other";
}

inline CorpusManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("manifest " + path + ": " + e.what());
  }

  CorpusManifest m;
  m.base_dir = std::filesystem::path(path).parent_path();
  m.truth_path = j.at("truth").get<std::string>();
  m.first_origin_week = j.value("first_origin_week", 18);
  m.last_origin_week = j.value("last_origin_week", 29);
  if (j.contains("eligibility")) {
    m.eligibility_path = j.at("eligibility").get<std::string>();
  }
  if (j.contains("locations")) {
    m.locations = j.at("locations").get<std::vector<std::string>>();
  }
  for (const auto& t : j.at("teams")) {
    TeamEntry entry;
    entry.id = t.at("id").get<std::string>();
    entry.category = parse_category(t.at("category").get<std::string>());
    const auto& files = t.at("files");
    if (files.is_string()) {
      entry.file_patterns.push_back(files.get<std::string>());
    } else {
      entry.file_patterns = files.get<std::vector<std::string>>();
    }
    m.teams.push_back(std::move(entry));
  }
  m.validate();
  return m;
}

namespace detail {

// '*'-only wildcard match, enough for hub-style file naming.
inline bool wildcard_match(std::string_view pattern, std::string_view text) {
  if (pattern.empty()) return text.empty();
  if (pattern[0] == '*') {
    for (std::size_t skip = 0; skip <= text.size(); ++skip) {
      if (wildcard_match(pattern.substr(1), text.substr(skip))) return true;
    }
    return false;
  }
  return !text.empty() && pattern[0] == text[0] &&
         wildcard_match(pattern.substr(1), text.substr(1));
}

}  // namespace detail

// Expands one pattern relative to base_dir; results are sorted so ingestion
// order never depends on directory enumeration order.
inline std::vector<std::filesystem::path> expand_pattern(
    const std::filesystem::path& base_dir, const std::string& pattern) {
  const std::filesystem::path full = base_dir / pattern;
  if (pattern.find('*') == std::string::npos) {
    if (!std::filesystem::exists(full)) {
      throw std::runtime_error("manifest file not found: " + full.string());
    }
    return {full};
  }
  const std::filesystem::path dir = full.parent_path();
  const std::string name_pattern = full.filename().string();
  if (name_pattern.find('*') == std::string::npos ||
      dir.string().find('*') != std::string::npos) {
    throw std::runtime_error(
        "wildcards are supported in the filename part only: " + pattern);
  }
  std::vector<std::filesystem::path> matches;
  if (std::filesystem::exists(dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      if (detail::wildcard_match(name_pattern, entry.path().filename().string())) {
        matches.push_back(entry.path());
      }
    }
  }
  std::sort(matches.begin(), matches.end());
  return matches;
}

enum class RowType { kPoint, kQuantile };

// One data row of a hub submission CSV, after field-level parsing but before
// any slot assembly. Quantile rows carry their probability level; point rows
// leave it empty.
struct RawSubmissionRow {
  int forecast_week = 0;     // week of forecast_date
  int horizon = 0;           // from the target string
  int target_week = 0;       // week of target_end_date
  std::string location;
  RowType row_type = RowType::kQuantile;
  std::optional<double> quantile;
  double value = 0.0;

  int origin_week() const { return target_week - horizon; }
};

namespace detail {

// "N wk ahead cum death" -> horizon N; anything else is out of scope.
inline std::optional<int> parse_cum_death_target(std::string_view target) {
  constexpr std::string_view suffix = " wk ahead cum death";
  if (target.size() != suffix.size() + 1) return std::nullopt;
  if (target.substr(1) != suffix) return std::nullopt;
  const char h = target[0];
  if (h < '1' || h > '4') return std::nullopt;
  return h - '0';
}

struct SlotAccumulator {
  std::map<std::size_t, double> level_values;
  std::optional<double> point;
  bool invalid = false;  // a rejection has already been logged
};

}  // namespace detail

struct SubmissionColumns {
  std::size_t forecast_date, target, target_end_date, location, type,
      quantile, value;

  static SubmissionColumns resolve(const CsvTable& table,
                                   const std::string& path) {
    return {column_index(table, "forecast_date", path),
            column_index(table, "target", path),
            column_index(table, "target_end_date", path),
            column_index(table, "location", path),
            column_index(table, "type", path),
            column_index(table, "quantile", path),
            column_index(table, "value", path)};
  }
};

// Field-level parse of one data line. Returns nothing for rows whose target
// is out of scope (incident deaths etc.); throws CsvError on anything
// structurally broken.
inline std::optional<RawSubmissionRow> parse_submission_row(
    const CsvTable& table, std::size_t row, const SubmissionColumns& cols,
    const std::string& path) {
  const std::size_t line_no = table.first_data_line + row;
  const auto fields = split_csv_line(table.lines[row]);
  if (fields.size() < table.header.size()) {
    throw CsvError(path, line_no, "too few fields");
  }

  const auto horizon = detail::parse_cum_death_target(fields[cols.target]);
  if (!horizon) return std::nullopt;

  RawSubmissionRow out;
  out.horizon = *horizon;
  out.forecast_week = week_of_date(fields[cols.forecast_date]);
  out.target_week = week_of_date(fields[cols.target_end_date]);
  out.location = std::string(fields[cols.location]);
  out.value = parse_double_field(fields[cols.value], path, line_no);

  const std::string_view row_type = fields[cols.type];
  if (row_type == "point") {
    out.row_type = RowType::kPoint;
  } else if (row_type == "quantile") {
    out.row_type = RowType::kQuantile;
    out.quantile = parse_double_field(fields[cols.quantile], path, line_no);
  } else {
    throw CsvError(path, line_no,
                   "unknown row type '" + std::string(row_type) + "'");
  }
  return out;
}

// Parses one hub-format submission file into per-slot submissions. Rows for
// targets other than cumulative deaths are skipped silently; malformed or
// off-grid rows reject the row; slots missing any of the 23 levels, carrying
// duplicate levels, or breaking monotonicity reject the whole slot (unless
// sort_repair is set, which sorts a non-monotone curve ascending instead).
inline std::vector<ForecastSubmission> parse_submission_file(
    const std::string& path, const std::string& team, TeamCategory category,
    Diagnostics& diag, bool sort_repair = false) {
  const CsvTable table = read_csv(path);
  const SubmissionColumns cols = SubmissionColumns::resolve(table, path);

  struct SlotId {
    std::string location;
    int origin;
    int horizon;
    auto operator<=>(const SlotId&) const = default;
  };
  std::map<SlotId, detail::SlotAccumulator> slots;

  for (std::size_t r = 0; r < table.lines.size(); ++r) {
    const std::size_t line_no = table.first_data_line + r;
    const auto parsed = parse_submission_row(table, r, cols, path);
    if (!parsed) continue;  // incident deaths and other targets: not ours
    const RawSubmissionRow& row = *parsed;

    const int origin = row.origin_week();
    // forecast_date is metadata; flag it when it disagrees with the slot.
    if (row.forecast_week != origin && row.forecast_week != origin + 1) {
      diag.note(path + ":" + std::to_string(line_no) +
                ": forecast_date week " + std::to_string(row.forecast_week) +
                " does not match origin week " + std::to_string(origin));
    }

    const SlotId slot{row.location, origin, row.horizon};
    if (row.value < 0.0) {
      diag.note(path + ":" + std::to_string(line_no) +
                ": rejected row with negative value");
      continue;
    }

    // Rejected rows never materialize a slot, so a slot only exists (and can
    // only be reported incomplete) once it has at least one accepted row.
    if (row.row_type == RowType::kPoint) {
      auto& acc = slots[slot];
      if (acc.point && *acc.point != row.value) {
        acc.invalid = true;
        diag.note(path + ": rejected slot (" + slot.location + ", origin " +
                  std::to_string(origin) + ", horizon " +
                  std::to_string(row.horizon) + "): conflicting point rows");
      } else {
        acc.point = row.value;
      }
    } else {
      const auto level = find_level(*row.quantile);
      if (!level) {
        diag.note(path + ":" + std::to_string(line_no) +
                  ": rejected row with off-grid quantile '" +
                  format_double(*row.quantile) + "'");
        continue;
      }
      auto& acc = slots[slot];
      auto [it, inserted] = acc.level_values.emplace(*level, row.value);
      if (!inserted && it->second != row.value) {
        acc.invalid = true;
        diag.note(path + ": rejected slot (" + slot.location + ", origin " +
                  std::to_string(origin) + ", horizon " +
                  std::to_string(row.horizon) +
                  "): conflicting duplicate level");
      }
    }
  }

  std::vector<ForecastSubmission> out;
  for (auto& [slot, acc] : slots) {
    if (acc.invalid) continue;
    const auto describe = [&slot]() {
      return "(" + slot.location + ", origin " + std::to_string(slot.origin) +
             ", horizon " + std::to_string(slot.horizon) + ")";
    };
    if (acc.level_values.size() != kNumLevels) {
      diag.note(path + ": rejected slot " + describe() +
                ": incomplete quantile set (" +
                std::to_string(acc.level_values.size()) + " of 23 levels)");
      continue;
    }
    QuantileCurve::Values values{};
    for (const auto& [level, value] : acc.level_values) values[level] = value;
    std::optional<QuantileCurve> curve;
    try {
      curve.emplace(values);
    } catch (const std::invalid_argument&) {
      if (sort_repair) {
        curve.emplace(QuantileCurve::sort_repair(values));
        diag.note(path + ": sort-repaired non-monotone curve for slot " +
                  describe());
      } else {
        diag.note(path + ": rejected slot " + describe() +
                  ": non-monotone quantile curve");
        continue;
      }
    }
    out.push_back(ForecastSubmission{team, category, slot.location,
                                     slot.origin, slot.horizon,
                                     Target::kCumulativeDeaths, *curve,
                                     acc.point});
  }
  return out;
}

// Applies the corpus inclusion criteria. Whole (team, location, origin)
// groups are kept or dropped together: a group must carry all four horizons,
// sit inside the manifest origin range, target an allowed location, and not
// be flagged ineligible (flags exist for origins >= 20 only; teams never
// assessed are retained). Each dropped submission gets one logged reason.
inline std::vector<ForecastSubmission> apply_inclusion_criteria(
    const std::vector<ForecastSubmission>& submissions,
    const EligibilityList& eligibility, const CorpusManifest& manifest,
    Diagnostics& diag) {
  std::map<std::tuple<std::string, std::string, int>, std::set<int>> horizons;
  for (const auto& s : submissions) {
    horizons[{s.team, s.location, s.origin_week}].insert(s.horizon);
  }

  std::vector<ForecastSubmission> kept;
  kept.reserve(submissions.size());
  for (const auto& s : submissions) {
    std::string reason;
    if (s.origin_week < manifest.first_origin_week ||
        s.origin_week > manifest.last_origin_week) {
      reason = "origin week outside corpus range";
    } else if (!manifest.location_allowed(s.location)) {
      reason = "location not in corpus whitelist";
    } else if (s.origin_week >= 20 &&
               eligibility.is_ineligible(s.origin_week, s.team, s.location)) {
      reason = "flagged ineligible for the ensemble";
    } else if (horizons[{s.team, s.location, s.origin_week}].size() < 4) {
      reason = "team did not report all four lead times for this slot";
    }
    if (reason.empty()) {
      kept.push_back(s);
    } else {
      diag.note("dropped " + s.team + " (" + s.location + ", origin " +
                std::to_string(s.origin_week) + ", horizon " +
                std::to_string(s.horizon) + "): " + reason);
    }
  }
  return kept;
}

// Truth CSV: date,location,value. Rows may arrive in any order; duplicate
// weeks must agree.
inline std::map<std::string, TruthSeries> parse_truth_file(
    const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::size_t date_col = column_index(table, "date", path);
  const std::size_t loc_col = column_index(table, "location", path);
  const std::size_t value_col = column_index(table, "value", path);

  std::map<std::string, TruthSeries> out;
  for (std::size_t r = 0; r < table.lines.size(); ++r) {
    const std::size_t line_no = table.first_data_line + r;
    const auto fields = split_csv_line(table.lines[r]);
    if (fields.size() < table.header.size()) {
      throw CsvError(path, line_no, "too few fields");
    }
    const std::string location(fields[loc_col]);
    const int week = week_of_date(fields[date_col]);
    const double value = parse_double_field(fields[value_col], path, line_no);
    auto& series = out[location];
    series.location = location;
    try {
      series.add(week, value);
    } catch (const std::invalid_argument& e) {
      throw CsvError(path, line_no, e.what());
    }
  }
  return out;
}

// One aggregation slot: every retained team's curve for a specific
// (location, origin week, horizon), with team ids kept for traceability.
struct SlotKey {
  std::string location;
  int origin_week = 0;
  int horizon = 0;

  int target_week() const { return origin_week + horizon; }
  auto operator<=>(const SlotKey&) const = default;
};

struct SlotPool {
  std::vector<std::string> teams;     // lexical order, parallel to curves
  std::vector<QuantileCurve> curves;

  CurvePool curve_pool() const { return CurvePool(curves); }
  int size() const { return static_cast<int>(curves.size()); }
};

using PoolSet = std::map<SlotKey, SlotPool>;

enum class CategoryFilter { kAll, kCompartmental, kOther };

inline bool category_matches(CategoryFilter filter, TeamCategory category) {
  switch (filter) {
    case CategoryFilter::kAll: return true;
    case CategoryFilter::kCompartmental:
      return category == TeamCategory::kCompartmental;
    case CategoryFilter::kOther: return category == TeamCategory::kOther;
  }
  return true;
}

// Materializes pools keyed by slot. Members are ordered by team id so pool
// contents never depend on file enumeration order; slots emptied by the
// category filter are skipped and logged.
inline PoolSet build_pools(const std::vector<ForecastSubmission>& submissions,
                           Diagnostics& diag,
                           CategoryFilter filter = CategoryFilter::kAll) {
  std::map<SlotKey, std::map<std::string, const ForecastSubmission*>> grouped;
  std::set<SlotKey> seen;
  for (const auto& s : submissions) {
    const SlotKey key{s.location, s.origin_week, s.horizon};
    seen.insert(key);
    if (!category_matches(filter, s.category)) continue;
    auto [it, inserted] = grouped[key].emplace(s.team, &s);
    if (!inserted) {
      throw std::invalid_argument("duplicate submission for team " + s.team +
                                  " at (" + s.location + ", " +
                                  std::to_string(s.origin_week) + ", " +
                                  std::to_string(s.horizon) + ")");
    }
  }

  PoolSet pools;
  for (const auto& key : seen) {
    auto it = grouped.find(key);
    if (it == grouped.end() || it->second.empty()) {
      diag.note("slot (" + key.location + ", origin " +
                std::to_string(key.origin_week) + ", horizon " +
                std::to_string(key.horizon) +
                ") has no members after category filtering; skipped");
      continue;
    }
    SlotPool pool;
    for (const auto& [team, submission] : it->second) {
      pool.teams.push_back(team);
      pool.curves.push_back(submission->curve);
    }
    pools.emplace(key, std::move(pool));
  }
  return pools;
}

// Serializes submissions back to the hub CSV layout: point row first, then
// the 23 quantile rows in level order, slots sorted by (location, origin,
// horizon). forecast_date is written as the origin week's Saturday.
inline void write_submission_csv(std::ostream& out,
                                 std::vector<ForecastSubmission> submissions) {
  std::sort(submissions.begin(), submissions.end(),
            [](const ForecastSubmission& a, const ForecastSubmission& b) {
              return std::tie(a.location, a.origin_week, a.horizon) <
                     std::tie(b.location, b.origin_week, b.horizon);
            });
  out << "forecast_date,target,target_end_date,location,type,quantile,value\n";
  for (const auto& s : submissions) {
    const std::string forecast_date = saturday_of_week(s.origin_week);
    const std::string end_date = saturday_of_week(s.target_week());
    const std::string target =
        std::to_string(s.horizon) + " wk ahead cum death";
    const std::string prefix =
        forecast_date + "," + target + "," + end_date + "," + s.location;
    if (s.point_forecast) {
      out << prefix << ",point,," << format_double(*s.point_forecast) << "\n";
    }
    for (std::size_t i = 0; i < kNumLevels; ++i) {
      out << prefix << ",quantile," << format_double(kProbabilityLevels[i])
          << "," << format_double(s.curve[i]) << "\n";
    }
  }
}

inline void write_truth_csv(std::ostream& out, const TruthSeries& truth) {
  out << "date,location,value\n";
  for (const auto& [week, value] : truth.observations) {
    out << saturday_of_week(week) << "," << truth.location << ","
        << format_double(value) << "\n";
  }
}

// Everything the harness needs from a corpus on disk.
struct Corpus {
  CorpusManifest manifest;
  std::vector<ForecastSubmission> submissions;  // retained after criteria
  std::map<std::string, TruthSeries> truth;
  std::size_t parsed_submissions = 0;  // before criteria
};

inline Corpus load_corpus(const std::string& manifest_path, Diagnostics& diag,
                          bool sort_repair = false) {
  Corpus corpus;
  corpus.manifest = load_manifest(manifest_path);
  const auto& manifest = corpus.manifest;

  EligibilityList eligibility;
  if (manifest.eligibility_path) {
    eligibility = parse_eligibility_file(
        (manifest.base_dir / *manifest.eligibility_path).string());
  }

  std::vector<ForecastSubmission> parsed;
  for (const auto& team : manifest.teams) {
    for (const auto& pattern : team.file_patterns) {
      for (const auto& file : expand_pattern(manifest.base_dir, pattern)) {
        auto subs = parse_submission_file(file.string(), team.id,
                                          team.category, diag, sort_repair);
        parsed.insert(parsed.end(), std::make_move_iterator(subs.begin()),
                      std::make_move_iterator(subs.end()));
      }
    }
  }
  corpus.parsed_submissions = parsed.size();
  corpus.submissions =
      apply_inclusion_criteria(parsed, eligibility, manifest, diag);
  corpus.truth =
      parse_truth_file((manifest.base_dir / manifest.truth_path).string());
  return corpus;
}

}  // namespace quantpool
