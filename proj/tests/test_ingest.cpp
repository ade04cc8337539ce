#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "quantpool/ingest.hpp"
#include "quantpool/weeks.hpp"

using namespace quantpool;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("quantpool_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// One submission slot: a point row plus the 23 quantile rows for the given
// location/origin/horizon, with curve values start, start+step, ...
std::string slot_rows(const std::string& location, int origin, int horizon,
                      double start, double step = 1.0) {
  std::ostringstream out;
  const std::string forecast_date = saturday_of_week(origin);
  const std::string end_date = saturday_of_week(origin + horizon);
  const std::string target = std::to_string(horizon) + " wk ahead cum death";
  out << forecast_date << "," << target << "," << end_date << "," << location
      << ",point,," << format_double(start + 11.0 * step) << "\n";
  for (std::size_t i = 0; i < kNumLevels; ++i) {
    out << forecast_date << "," << target << "," << end_date << ","
        << location << ",quantile," << format_double(kProbabilityLevels[i])
        << "," << format_double(start + step * static_cast<double>(i)) << "\n";
  }
  return out.str();
}

const std::string kHeader =
    "forecast_date,target,target_end_date,location,type,quantile,value\n";

std::string four_horizon_file(const std::string& location, int origin,
                              double start) {
  std::string content = kHeader;
  for (int h = 1; h <= 4; ++h) {
    content += slot_rows(location, origin, h, start + h);
  }
  return content;
}

}  // namespace

TEST_CASE("week and date conversions") {
  REQUIRE(week_of_date("2019-12-21") == 0);
  REQUIRE(week_of_date("2019-12-22") == 1);  // Sunday opens the next week
  REQUIRE(week_of_date("2019-12-27") == 1);  // Friday still closes week 1
  REQUIRE(week_of_date("2019-12-28") == 1);  // its Saturday
  REQUIRE(week_of_date("2020-07-18") == 30);
  REQUIRE(week_of_date("2020-04-25") == 18);
  REQUIRE(week_of_date("2019-12-20") == 0);  // Friday before week-0 Saturday
  REQUIRE(saturday_of_week(30) == "2020-07-18");
  REQUIRE(saturday_of_week(0) == "2019-12-21");
  REQUIRE(week_of_date(saturday_of_week(123)) == 123);
  REQUIRE_THROWS_AS(week_of_date("2020-13-01"), std::invalid_argument);
  REQUIRE_THROWS_AS(week_of_date("20-01-01"), std::invalid_argument);
}

TEST_CASE("parsing a minimal valid submission file") {
  TempDir tmp;
  const auto file = tmp.path / "team.csv";
  write_file(file, kHeader + slot_rows("US", 28, 1, 100.0));

  Diagnostics diag;
  const auto subs = parse_submission_file(file.string(), "alpha-team",
                                          TeamCategory::kCompartmental, diag);
  REQUIRE(subs.size() == 1);
  const auto& s = subs[0];
  REQUIRE(s.team == "alpha-team");
  REQUIRE(s.category == TeamCategory::kCompartmental);
  REQUIRE(s.location == "US");
  REQUIRE(s.origin_week == 28);
  REQUIRE(s.horizon == 1);
  REQUIRE(s.curve[0] == 100.0);
  REQUIRE(s.curve[22] == 122.0);
  REQUIRE(s.point_forecast == 111.0);
  REQUIRE(diag.size() == 0);
}

TEST_CASE("incident-death targets are skipped silently") {
  TempDir tmp;
  const auto file = tmp.path / "team.csv";
  write_file(file, kHeader +
                       "2020-07-11,2 wk ahead inc death,2020-07-25,US,"
                       "quantile,0.5,10\n");
  Diagnostics diag;
  const auto subs =
      parse_submission_file(file.string(), "t", TeamCategory::kOther, diag);
  REQUIRE(subs.empty());
  REQUIRE(diag.size() == 0);
}

TEST_CASE("a slot with 22 quantile rows is rejected with a reason") {
  TempDir tmp;
  const auto file = tmp.path / "team.csv";
  std::string content = kHeader;
  std::istringstream rows(slot_rows("US", 28, 1, 100.0));
  std::string line;
  int kept = 0;
  while (std::getline(rows, line)) {
    if (line.find(",quantile,0.35,") != std::string::npos) continue;  // drop one
    content += line + "\n";
    ++kept;
  }
  REQUIRE(kept == 23);  // point + 22 quantile rows
  write_file(file, content);

  Diagnostics diag;
  const auto subs =
      parse_submission_file(file.string(), "t", TeamCategory::kOther, diag);
  REQUIRE(subs.empty());
  REQUIRE(diag.size() == 1);
  REQUIRE(diag.entries[0].find("incomplete quantile set (22 of 23")
          != std::string::npos);
}

TEST_CASE("off-grid quantile rows are rejected and logged") {
  TempDir tmp;
  const auto file = tmp.path / "team.csv";
  write_file(file, kHeader + slot_rows("US", 28, 1, 100.0) +
                       "2020-07-11,1 wk ahead cum death,2020-07-18,US,"
                       "quantile,0.33,99\n");
  Diagnostics diag;
  const auto subs =
      parse_submission_file(file.string(), "t", TeamCategory::kOther, diag);
  REQUIRE(subs.size() == 1);  // the complete slot still parses
  REQUIRE(diag.size() == 1);
  REQUIRE(diag.entries[0].find("off-grid quantile") != std::string::npos);
}

TEST_CASE("non-monotone curves are rejected unless sort-repair is on") {
  TempDir tmp;
  const auto file = tmp.path / "team.csv";
  std::string content = kHeader + slot_rows("US", 28, 1, 100.0);
  // Swap the values at levels 0.01 and 0.99 to break monotonicity.
  auto swap_value = [&content](const std::string& from, const std::string& to) {
    const auto pos = content.find(from);
    REQUIRE(pos != std::string::npos);
    content.replace(pos, from.size(), to);
  };
  swap_value(",quantile,0.01,100", ",quantile,0.01,122");
  swap_value(",quantile,0.99,122", ",quantile,0.99,100");
  write_file(file, content);

  Diagnostics diag;
  const auto rejected =
      parse_submission_file(file.string(), "t", TeamCategory::kOther, diag);
  REQUIRE(rejected.empty());
  REQUIRE(diag.size() == 1);
  REQUIRE(diag.entries[0].find("non-monotone") != std::string::npos);

  Diagnostics diag2;
  const auto repaired = parse_submission_file(file.string(), "t",
                                              TeamCategory::kOther, diag2,
                                              /*sort_repair=*/true);
  REQUIRE(repaired.size() == 1);
  for (std::size_t i = 1; i < kNumLevels; ++i) {
    REQUIRE(repaired[0].curve[i] >= repaired[0].curve[i - 1]);
  }
  REQUIRE(diag2.size() == 1);
  REQUIRE(diag2.entries[0].find("sort-repaired") != std::string::npos);
}

TEST_CASE("negative values reject the row") {
  TempDir tmp;
  const auto file = tmp.path / "team.csv";
  write_file(file, kHeader + slot_rows("US", 28, 1, 100.0) +
                       "2020-07-11,2 wk ahead cum death,2020-07-25,US,"
                       "point,,-5\n");
  Diagnostics diag;
  const auto subs =
      parse_submission_file(file.string(), "t", TeamCategory::kOther, diag);
  REQUIRE(subs.size() == 1);
  REQUIRE(diag.size() == 1);
  REQUIRE(diag.entries[0].find("negative value") != std::string::npos);
}

TEST_CASE("malformed csv reports the line number") {
  TempDir tmp;
  const auto file = tmp.path / "team.csv";
  write_file(file, kHeader + "2020-07-11,1 wk ahead cum death\n");
  Diagnostics diag;
  try {
    parse_submission_file(file.string(), "t", TeamCategory::kOther, diag);
    FAIL("expected CsvError");
  } catch (const CsvError& e) {
    REQUIRE(std::string(e.what()).find(":2:") != std::string::npos);
  }
}

TEST_CASE("truth parsing") {
  TempDir tmp;
  const auto file = tmp.path / "truth.csv";
  write_file(file,
             "date,location,value\n"
             "2020-07-18,US,140119\n"
             "2020-07-11,US,135000\n"  // out of order on purpose
             "2020-07-18,36,32000\n");
  const auto truth = parse_truth_file(file.string());
  REQUIRE(truth.size() == 2);
  REQUIRE(truth.at("US").at(30) == 140119.0);
  REQUIRE(truth.at("US").at(29) == 135000.0);
  REQUIRE(truth.at("36").at(30) == 32000.0);

  const auto empty_file = tmp.path / "empty.csv";
  write_file(empty_file, "date,location,value\n");
  REQUIRE(parse_truth_file(empty_file.string()).empty());

  const auto dup = tmp.path / "dup.csv";
  write_file(dup,
             "date,location,value\n"
             "2020-07-18,US,140119\n"
             "2020-07-18,US,140120\n");
  REQUIRE_THROWS_AS(parse_truth_file(dup.string()), CsvError);

  const auto negative = tmp.path / "neg.csv";
  write_file(negative, "date,location,value\n2020-07-18,US,-3\n");
  REQUIRE_THROWS_AS(parse_truth_file(negative.string()), CsvError);
}

TEST_CASE("inclusion criteria drop and retain as specified") {
  // Build submissions directly: team "a" complete at origins 17 and 21 for
  // NY (36) and FL (12); team "b" misses horizon 4 at origin 21.
  std::vector<ForecastSubmission> subs;
  auto add = [&subs](const std::string& team, const std::string& loc,
                     int origin, int horizon) {
    QuantileCurve::Values v{};
    for (std::size_t i = 0; i < kNumLevels; ++i) {
      v[i] = 10.0 + static_cast<double>(i);
    }
    subs.push_back(ForecastSubmission{team, TeamCategory::kOther, loc, origin,
                                      horizon, Target::kCumulativeDeaths,
                                      QuantileCurve(v), std::nullopt});
  };
  for (int h = 1; h <= 4; ++h) {
    add("a", "36", 17, h);  // criterion (ii): origin before week 18
    add("a", "36", 21, h);  // criterion (iii): flagged ineligible below
    add("a", "12", 21, h);  // retained: flag applies per location
    add("c", "36", 21, h);  // criterion (iv): never assessed, retained
  }
  for (int h = 1; h <= 3; ++h) {
    add("b", "36", 21, h);  // criterion (i): missing horizon 4
  }

  EligibilityList eligibility;
  eligibility.mark_ineligible(21, "a", "36");

  CorpusManifest manifest;
  manifest.teams.push_back({"a", TeamCategory::kOther, {}});
  manifest.first_origin_week = 18;
  manifest.last_origin_week = 29;

  Diagnostics diag;
  const auto kept =
      apply_inclusion_criteria(subs, eligibility, manifest, diag);

  auto count_team_loc = [&kept](const std::string& team,
                                const std::string& loc, int origin) {
    int n = 0;
    for (const auto& s : kept) {
      if (s.team == team && s.location == loc && s.origin_week == origin) ++n;
    }
    return n;
  };
  REQUIRE(count_team_loc("a", "36", 17) == 0);
  REQUIRE(count_team_loc("a", "36", 21) == 0);
  REQUIRE(count_team_loc("a", "12", 21) == 4);
  REQUIRE(count_team_loc("c", "36", 21) == 4);
  REQUIRE(count_team_loc("b", "36", 21) == 0);

  // Accounting: every drop logged exactly once, retained + dropped = parsed.
  REQUIRE(kept.size() + diag.size() == subs.size());

  // Idempotence: filtering the filtered set changes nothing.
  Diagnostics diag2;
  const auto again =
      apply_inclusion_criteria(kept, eligibility, manifest, diag2);
  REQUIRE(again.size() == kept.size());
  REQUIRE(diag2.size() == 0);
}

TEST_CASE("eligibility below week 20 is rejected") {
  EligibilityList list;
  REQUIRE_THROWS_AS(list.mark_ineligible(19, "a", "36"),
                    std::invalid_argument);
  REQUIRE_NOTHROW(list.mark_ineligible(20, "a", "36"));
  REQUIRE(list.is_ineligible(20, "a", "36"));
  REQUIRE(!list.is_ineligible(21, "a", "36"));
  REQUIRE(!list.is_ineligible(20, "a", "12"));
}

TEST_CASE("pool building") {
  std::vector<ForecastSubmission> subs;
  for (int t = 0; t < 21; ++t) {
    QuantileCurve::Values v{};
    for (std::size_t i = 0; i < kNumLevels; ++i) {
      v[i] = 100.0 * t + static_cast<double>(i);
    }
    char name[16];
    std::snprintf(name, sizeof(name), "team%02d", t);
    subs.push_back(ForecastSubmission{
        name, t % 2 == 0 ? TeamCategory::kCompartmental : TeamCategory::kOther,
        "US", 28, 1, Target::kCumulativeDeaths, QuantileCurve(v),
        std::nullopt});
  }

  Diagnostics diag;
  const auto pools = build_pools(subs, diag);
  REQUIRE(pools.size() == 1);
  const auto& pool = pools.at(SlotKey{"US", 28, 1});
  REQUIRE(pool.size() == 21);
  REQUIRE(std::is_sorted(pool.teams.begin(), pool.teams.end()));

  const auto compartmental =
      build_pools(subs, diag, CategoryFilter::kCompartmental);
  REQUIRE(compartmental.at(SlotKey{"US", 28, 1}).size() == 11);
  const auto other = build_pools(subs, diag, CategoryFilter::kOther);
  REQUIRE(other.at(SlotKey{"US", 28, 1}).size() == 10);

  REQUIRE(pools.find(SlotKey{"56", 18, 4}) == pools.end());
}

TEST_CASE("category filter that empties a slot is logged") {
  QuantileCurve::Values v{};
  for (std::size_t i = 0; i < kNumLevels; ++i) v[i] = static_cast<double>(i);
  std::vector<ForecastSubmission> subs = {
      ForecastSubmission{"only", TeamCategory::kOther, "US", 20, 1,
                         Target::kCumulativeDeaths, QuantileCurve(v),
                         std::nullopt}};
  Diagnostics diag;
  const auto pools = build_pools(subs, diag, CategoryFilter::kCompartmental);
  REQUIRE(pools.empty());
  REQUIRE(diag.size() == 1);
  REQUIRE(diag.entries[0].find("no members after category filtering") !=
          std::string::npos);
}

TEST_CASE("submission round trip is identity") {
  TempDir tmp;
  const auto file = tmp.path / "multi.csv";
  write_file(file, four_horizon_file("36", 22, 500.0));
  Diagnostics diag;
  const auto original = parse_submission_file(file.string(), "team-x",
                                              TeamCategory::kOther, diag);
  REQUIRE(original.size() == 4);

  std::ostringstream buffer;
  write_submission_csv(buffer, original);
  const auto rewritten = tmp.path / "rewritten.csv";
  write_file(rewritten, buffer.str());

  Diagnostics diag2;
  const auto reparsed = parse_submission_file(rewritten.string(), "team-x",
                                              TeamCategory::kOther, diag2);
  REQUIRE(reparsed.size() == original.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    REQUIRE(reparsed[i].location == original[i].location);
    REQUIRE(reparsed[i].origin_week == original[i].origin_week);
    REQUIRE(reparsed[i].horizon == original[i].horizon);
    REQUIRE(reparsed[i].curve == original[i].curve);
    REQUIRE(reparsed[i].point_forecast == original[i].point_forecast);
  }
}

TEST_CASE("manifest loading and validation") {
  TempDir tmp;
  write_file(tmp.path / "truth.csv", "date,location,value\n");
  write_file(tmp.path / "m.json", R"({
    "truth": "truth.csv",
    "first_origin_week": 18,
    "last_origin_week": 29,
    "locations": ["US", "36"],
    "teams": [
      {"id": "a", "category": "compartmental", "files": "a/*.csv"},
      {"id": "b", "category": "other", "files": ["b1.csv", "b2.csv"]}
    ]
  })");
  const auto manifest = load_manifest((tmp.path / "m.json").string());
  REQUIRE(manifest.teams.size() == 2);
  REQUIRE(manifest.teams[0].category == TeamCategory::kCompartmental);
  REQUIRE(manifest.teams[1].file_patterns.size() == 2);
  REQUIRE(manifest.location_allowed("US"));
  REQUIRE(!manifest.location_allowed("12"));

  write_file(tmp.path / "bad_loc.json", R"({
    "truth": "truth.csv", "locations": ["XX"],
    "teams": [{"id": "a", "category": "other", "files": "x.csv"}]
  })");
  REQUIRE_THROWS_AS(load_manifest((tmp.path / "bad_loc.json").string()),
                    std::invalid_argument);

  write_file(tmp.path / "bad_week.json", R"({
    "truth": "truth.csv", "first_origin_week": 17,
    "teams": [{"id": "a", "category": "other", "files": "x.csv"}]
  })");
  REQUIRE_THROWS_AS(load_manifest((tmp.path / "bad_week.json").string()),
                    std::invalid_argument);
}

TEST_CASE("pattern expansion") {
  TempDir tmp;
  fs::create_directories(tmp.path / "sub");
  write_file(tmp.path / "sub" / "2020-05-02-team.csv", "");
  write_file(tmp.path / "sub" / "2020-05-09-team.csv", "");
  write_file(tmp.path / "sub" / "other.txt", "");

  const auto matches = expand_pattern(tmp.path, "sub/*-team.csv");
  REQUIRE(matches.size() == 2);
  REQUIRE(matches[0].filename() == "2020-05-02-team.csv");
  REQUIRE(matches[1].filename() == "2020-05-09-team.csv");

  REQUIRE_THROWS_AS(expand_pattern(tmp.path, "missing.csv"),
                    std::runtime_error);
  REQUIRE(expand_pattern(tmp.path, "sub/none-*.csv").empty());
}

TEST_CASE("canonical location list has the 52 series") {
  REQUIRE(canonical_locations().size() == 52);
  REQUIRE(is_canonical_location("US"));
  REQUIRE(is_canonical_location("11"));  // District of Columbia
  REQUIRE(!is_canonical_location("72"));  // Puerto Rico is out of scope
  REQUIRE(!is_canonical_location("03"));  // never a state code
}
