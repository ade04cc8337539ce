// Command-line front end: evaluate | aggregate | synth | validate.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "quantpool/quantpool.hpp"

namespace {

using namespace quantpool;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string category;
  bool sort_repair = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_filters) {
  cmd->add_option("--config", args.config_path, "run configuration (JSON)")
      ->required();
  cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
  if (with_filters) {
    cmd->add_option("--category", args.category,
                    "restrict pools to one model category: all, "
                    "compartmental, or other");
    cmd->add_flag("--sort-repair", args.sort_repair,
                  "sort non-monotone quantile curves instead of rejecting");
  }
}

RunConfig load_config_with_overrides(const CommonArgs& args) {
  RunConfig config = load_run_config(args.config_path);
  if (!args.out_dir.empty()) config.output_dir = args.out_dir;
  if (!args.category.empty()) {
    config.category = parse_category_filter(args.category);
  }
  if (args.sort_repair) config.sort_repair = true;
  config.validate();
  return config;
}

// Manifest paths in the config are relative to the config file itself.
std::filesystem::path resolve_manifest(const CommonArgs& args,
                                       const RunConfig& config) {
  if (config.manifest_path.empty()) {
    throw std::runtime_error("config has no manifest path");
  }
  const std::filesystem::path manifest(config.manifest_path);
  if (manifest.is_absolute()) return manifest;
  return std::filesystem::path(args.config_path).parent_path() / manifest;
}

int run_evaluate(const CommonArgs& args, bool aggregates_only) {
  const RunConfig config = load_config_with_overrides(args);
  Diagnostics diag;
  const Corpus corpus = load_corpus(resolve_manifest(args, config).string(),
                                    diag, config.sort_repair);
  const EvalCorpus eval = make_eval_corpus(corpus, diag, config.category);
  const RunOutput output = run_evaluation(config, eval, !aggregates_only);
  emit_reports(config, output, diag, config.output_dir);

  std::printf("corpus %s: %zu submissions, %zu pools\n",
              output.corpus_fingerprint.c_str(), corpus.submissions.size(),
              eval.pools.size());
  if (!aggregates_only) {
    std::printf("scored %zu slots (%zu unscored), %zu warnings\n",
                output.scored_slots, output.unscored_slots,
                output.warnings.size());
  }
  std::printf("reports written to %s\n", config.output_dir.c_str());
  return 0;
}

int run_synth(const CommonArgs& args, std::optional<std::uint64_t> seed) {
  std::ifstream in(args.config_path);
  if (!in) throw std::runtime_error("cannot open config " + args.config_path);
  nlohmann::json j;
  in >> j;
  if (!j.contains("synth")) {
    throw std::runtime_error("config has no \"synth\" section");
  }
  SynthRun run = parse_synth_config(j.at("synth"));
  if (seed) run.crowd.seed = *seed;
  if (args.out_dir.empty()) {
    throw std::runtime_error("synth needs --out <directory>");
  }
  export_synthetic_corpus(run, args.out_dir);
  std::printf("synthetic corpus (%d teams, origins %d..%d, seed %llu) "
              "written to %s\n",
              run.crowd.crowd_size, run.first_origin_week,
              run.last_origin_week,
              static_cast<unsigned long long>(run.crowd.seed),
              args.out_dir.c_str());
  return 0;
}

int run_validate(const CommonArgs& args) {
  const RunConfig config = load_config_with_overrides(args);
  Diagnostics diag;
  const Corpus corpus = load_corpus(resolve_manifest(args, config).string(),
                                    diag, config.sort_repair);
  EvalCorpus eval = make_eval_corpus(corpus, diag, config.category);

  std::printf("manifest: %zu teams, truth %s\n", corpus.manifest.teams.size(),
              corpus.manifest.truth_path.c_str());
  std::printf("parsed %zu submissions, retained %zu after inclusion "
              "criteria\n",
              corpus.parsed_submissions, corpus.submissions.size());
  std::printf("%zu pools across %zu truth series\n", eval.pools.size(),
              corpus.truth.size());
  for (const auto& entry : diag.entries) {
    std::printf("diagnostic: %s\n", entry.c_str());
  }
  std::printf("%zu diagnostics\n", diag.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aggregation and evaluation of quantile-format probabilistic "
               "forecasts"};
  app.require_subcommand(1);

  CommonArgs evaluate_args, aggregate_args, synth_args, validate_args;
  std::optional<std::uint64_t> synth_seed;

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "ingest, aggregate, score, and emit report tables");
  add_common(evaluate, evaluate_args, true);

  CLI::App* aggregate = app.add_subcommand(
      "aggregate", "emit per-slot aggregate forecasts without scoring");
  add_common(aggregate, aggregate_args, true);

  CLI::App* synth = app.add_subcommand(
      "synth", "generate a synthetic forecaster corpus in hub CSV format");
  synth->add_option("--config", synth_args.config_path,
                    "config with a \"synth\" section (JSON)")
      ->required();
  synth->add_option("--out", synth_args.out_dir, "corpus output directory")
      ->required();
  std::uint64_t seed_value = 0;
  CLI::Option* seed_opt =
      synth->add_option("--seed", seed_value, "override the config seed");

  CLI::App* validate = app.add_subcommand(
      "validate", "ingestion dry-run: parse, apply criteria, print "
                  "diagnostics");
  add_common(validate, validate_args, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (evaluate->parsed()) return run_evaluate(evaluate_args, false);
    if (aggregate->parsed()) return run_evaluate(aggregate_args, true);
    if (synth->parsed()) {
      if (seed_opt->count() > 0) synth_seed = seed_value;
      return run_synth(synth_args, synth_seed);
    }
    if (validate->parsed()) return run_validate(validate_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
