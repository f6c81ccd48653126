// taskforge: turn a line-oriented sentence corpus into a curated pretraining
// dataset of LLM-written task examples with plans.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "taskforge/pipeline.hpp"

namespace {

int run_command(const taskforge::PipelineConfig& config) {
  const auto result = taskforge::run(config);
  if (result.exit_status != 0) {
    std::cerr << "taskforge: " << result.diagnostic << '\n';
    return result.exit_status;
  }
  std::cout << result.summary;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forge a curated pretraining dataset from a sentence corpus"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run (or resume) the full pipeline");
  std::string config_file;
  std::string input_dir;
  std::vector<std::string> inputs;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string backend;
  std::string model;
  std::string base_url;
  double threshold = 0;
  std::size_t plans_per_group = 0;
  std::size_t scores_per_plan = 0;
  std::size_t max_groups = 0;
  std::size_t concurrency = 0;
  std::string template_dir;
  bool resume = true;
  bool no_cache = false;

  run->add_option("--config", config_file, "JSON config file; flags override its values")->check(CLI::ExistingFile);
  auto* o_input_dir = run->add_option("--input-dir", input_dir, "Directory of UTF-8 text files, one sentence per line");
  auto* o_inputs = run->add_option("--input", inputs, "Input file (repeatable)");
  auto* o_out = run->add_option("--out", out_dir, "Output directory");
  auto* o_seed = run->add_option("--seed", seed, "Sampling seed");
  auto* o_backend = run->add_option("--backend", backend, "Chat backend")->check(CLI::IsMember({"remote", "mock"}));
  auto* o_model = run->add_option("--model", model, "Model identifier (default gpt-3.5-turbo)");
  auto* o_base_url = run->add_option("--base-url", base_url, "OpenAI-compatible API base URL");
  auto* o_threshold = run->add_option("--threshold", threshold, "Minimum mean coherence score (default 7.0)");
  auto* o_k = run->add_option("--plans-per-group", plans_per_group, "Plans generated per group (default 2)");
  auto* o_n = run->add_option("--scores-per-plan", scores_per_plan, "Coherence scores per plan (default 5)");
  auto* o_max_groups = run->add_option("--max-groups", max_groups, "Cap on the number of sample groups");
  auto* o_conc = run->add_option("--concurrency", concurrency, "Worker and in-flight request limit (default 4)");
  auto* o_tdir = run->add_option("--template-dir", template_dir, "Directory with generation.txt / scoring.txt overrides");
  auto* o_resume = run->add_flag("--resume,!--no-resume", resume, "Resume from checkpoints (default on)");
  run->add_flag("--no-cache", no_cache, "Disable the on-disk response cache");

  CLI11_PARSE(app, argc, argv);

  taskforge::PipelineConfig config;
  try {
    if (!config_file.empty()) config = taskforge::PipelineConfig::from_file(config_file);
    if (*o_input_dir) config.input_dir = input_dir;
    if (*o_inputs) config.inputs.assign(inputs.begin(), inputs.end());
    if (*o_out) config.out_dir = out_dir;
    if (*o_seed) config.seed = seed;
    if (*o_backend) config.gateway.backend = taskforge::backend_kind_from_string(backend);
    if (*o_model) config.gateway.model = model;
    if (*o_base_url) config.gateway.base_url = base_url;
    if (*o_threshold) config.curation.threshold = threshold;
    if (*o_k) config.curation.plans_per_group = plans_per_group;
    if (*o_n) config.curation.scores_per_plan = scores_per_plan;
    if (*o_max_groups) config.max_groups = max_groups;
    if (*o_conc) {
      config.concurrency = concurrency;
      config.gateway.max_in_flight = concurrency;
    }
    if (*o_tdir) config.template_dir = template_dir;
    if (*o_resume) config.resume = resume;
    if (no_cache) config.cache = false;
  } catch (const taskforge::Error& e) {
    std::cerr << "taskforge: [config] " << e.what() << '\n';
    return 2;
  }

  return run_command(config);
}
