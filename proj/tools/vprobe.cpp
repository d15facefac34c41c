// vprobe: generate probe suites, run them against a backend, score, report.
#include <iostream>

#include <CLI11.hpp>

#include "vprobe/commands.hpp"
#include "vprobe/error.hpp"

using namespace vprobe;

int main(int argc, char** argv) {
  CLI::App app{"Controlled visual-perception probes for vision-language models"};
  app.require_subcommand(1);

  GenerateOptions gen;
  std::uint64_t seed = 0;
  std::string profile;
  int gen_parallelism = 0;
  auto* generate = app.add_subcommand("generate", "Render a suite spec into a manifest and PNGs");
  generate->add_option("--spec", gen.spec, "Suite spec (JSON)")->required()->check(CLI::ExistingFile);
  generate->add_option("--out", gen.out, "Output directory")->required();
  auto* seed_opt = generate->add_option("--seed", seed, "Override master_seed");
  auto* profile_opt = generate->add_option("--profile", profile, "Override every suite's profile");
  auto* gen_par_opt = generate->add_option("--parallelism", gen_parallelism, "Render threads")->check(CLI::PositiveNumber);
  generate->add_flag("--resume", gen.resume, "Keep images whose manifest entry is unchanged");

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Ask a backend about every trial in a manifest");
  run_cmd->add_option("--manifest", run.manifest, "manifest.jsonl from generate")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--backend", run.backend, "oracle | template_ocr | http")
      ->check(CLI::IsMember({"oracle", "template_ocr", "http"}));
  run_cmd->add_option("--out", run.out, "Results JSONL")->required();
  run_cmd->add_option("--endpoint-url", run.endpoint.base_url, "Chat-completions base URL");
  run_cmd->add_option("--model", run.endpoint.model_name, "Model name sent to the endpoint");
  run_cmd->add_option("--auth-env", run.endpoint.auth_token_source, "Env var holding the bearer token");
  run_cmd->add_option("--timeout", run.endpoint.timeout_s, "Per-attempt timeout (s)");
  run_cmd->add_option("--max-retries", run.endpoint.max_retries, "Retries after the first attempt");
  run_cmd->add_option("--max-tokens", run.endpoint.max_reply_tokens, "Reply token cap");
  run_cmd->add_option("--temperature", run.endpoint.temperature, "Sampling temperature");
  run_cmd->add_option("--parallelism", run.parallelism, "Requests in flight")->check(CLI::PositiveNumber);
  run_cmd->add_option("--rate-limit", run.rate_limit, "Requests per second, 0 = unlimited");
  run_cmd->add_option("--replay-log", run.replay_log, "Record raw HTTP exchanges here");
  run_cmd->add_flag("--resume", run.resume, "Skip trials that already have a successful result");

  ScoreOptions score;
  auto* score_cmd = app.add_subcommand("score", "Join results with the manifest and score every reply");
  score_cmd->add_option("--manifest", score.manifest)->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--results", score.results, "Results JSONL or replay log")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--out", score.out, "Scored JSONL")->required();

  ReportOptions report;
  std::string report_suite;
  auto* report_cmd = app.add_subcommand("report", "Curves, heatmaps and boundary tables from scored trials");
  report_cmd->add_option("--scored", report.scored)->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--out", report.out_dir, "Output directory")->required();
  auto* suite_opt = report_cmd->add_option("--suite", report_suite, "Only this suite kind")
                        ->check(CLI::IsMember({"quality", "size", "distractor", "location", "boundary_cut"}));
  report_cmd->add_option("--bin-width", report.bin_width, "Range-ratio bin width");

  SliceOptions slice;
  std::string slice_mode;
  std::string slice_key = "relative_size";
  auto* slice_cmd = app.add_subcommand("slice", "Quantile table of VQA accuracy by target size");
  slice_cmd->add_option("--annotations", slice.annotations, "Annotation JSONL")->required()->check(CLI::ExistingFile);
  auto* mode_opt = slice_cmd->add_option("--mode", slice_mode)->check(CLI::IsMember({"gqa", "textvqa"}));
  slice_cmd->add_option("--key", slice_key)->check(CLI::IsMember({"relative_size", "distractor_count"}));
  slice_cmd->add_option("-q,--quantiles", slice.q, "Number of buckets")->check(CLI::PositiveNumber);
  slice_cmd->add_option("--out", slice.out, "CSV")->required();

  ConvertOptions convert;
  std::string convert_mode;
  auto* convert_cmd = app.add_subcommand("convert", "Native GQA / TextVQA files to annotation JSONL");
  convert_cmd->add_option("--mode", convert_mode)->required()->check(CLI::IsMember({"gqa", "textvqa"}));
  convert_cmd->add_option("--questions", convert.questions)->required()->check(CLI::ExistingFile);
  convert_cmd->add_option("--boxes", convert.boxes, "GQA scene graphs or TextVQA OCR file")
      ->required()
      ->check(CLI::ExistingFile);
  convert_cmd->add_option("--predictions", convert.predictions)->check(CLI::ExistingFile);
  convert_cmd->add_option("--out", convert.out, "Annotation JSONL")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*generate) {
      if (*seed_opt) gen.overrides.seed = seed;
      if (*profile_opt) gen.overrides.profile = profile;
      if (*gen_par_opt) gen.overrides.parallelism = gen_parallelism;
      return cmd_generate(gen, std::cerr);
    }
    if (*run_cmd) return cmd_run(run, std::cerr);
    if (*score_cmd) return cmd_score(score, std::cerr);
    if (*report_cmd) {
      if (*suite_opt) report.suite = suite_kind_from_string(report_suite);
      return cmd_report(report, std::cerr);
    }
    if (*slice_cmd) {
      if (*mode_opt) slice.mode = dataset_mode_from_string(slice_mode);
      slice.key = slice_key_from_string(slice_key);
      return cmd_slice(slice, std::cerr);
    }
    if (*convert_cmd) {
      convert.mode = dataset_mode_from_string(convert_mode);
      return cmd_convert(convert, std::cerr);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
