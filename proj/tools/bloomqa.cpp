// Command-line driver for the guideline-to-exam pipeline. Subcommands run
// the stages in order (extract -> generate -> exam -> analyze -> report),
// each reading the previous stage's artifacts from the output directory
// unless the config points elsewhere.
//
// Exit codes: 0 success, 2 validation-gate failure, 3 missing input,
// 4 numerical failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bloomqa/corpus.hpp"
#include "bloomqa/exam.hpp"
#include "bloomqa/extraction.hpp"
#include "bloomqa/gateway.hpp"
#include "bloomqa/glmm.hpp"
#include "bloomqa/http_transport.hpp"
#include "bloomqa/item_factory.hpp"
#include "bloomqa/report.hpp"
#include "bloomqa/rng.hpp"
#include "bloomqa/screening.hpp"

namespace fs = std::filesystem;
using bloomqa::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitMissingInput = 3;
constexpr int kExitNumerical = 4;

struct RunConfig {
  std::string config_path;
  std::string config_text;
  ordered_json json;
  fs::path out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool force_replay = false;

  bloomqa::Domain domain() const {
    return bloomqa::parse_domain(json.value("domain", "other"));
  }

  std::uint64_t effective_seed() const {
    if (seed_set) return seed;
    if (!json.contains("seed"))
      throw bloomqa::ConfigError("seed required: set it in the config or pass --seed");
    return json.at("seed").get<std::uint64_t>();
  }

  ordered_json section(const std::string& name) const {
    return json.contains(name) ? json.at(name) : ordered_json::object();
  }

  // Stage artifacts default into the output directory so the subcommands
  // chain without per-file configuration.
  fs::path artifact(const ordered_json& sec, const std::string& key,
                    const std::string& default_name) const {
    std::string v = sec.value(key, "");
    return v.empty() ? out_dir / default_name : fs::path(v);
  }
};

RunConfig load_config(const std::string& path, const std::string& out_dir,
                      std::uint64_t seed, bool seed_set, bool replay) {
  RunConfig c;
  c.config_path = path;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw bloomqa::ConfigError("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  c.config_text = buf.str();
  c.json = ordered_json::parse(c.config_text);
  if (!out_dir.empty()) c.out_dir = out_dir;
  else c.out_dir = c.json.value("out_dir", "out");
  c.seed = seed;
  c.seed_set = seed_set;
  c.force_replay = replay;
  return c;
}

// Gateway wiring shared by the stages that talk to language models. Holds
// the transport/store so the Gateway's references stay valid.
struct GatewayBundle {
  bloomqa::FixtureStore store;
  std::unique_ptr<bloomqa::HttpTransport> transport;
  std::unique_ptr<bloomqa::Gateway> gateway;
};

GatewayBundle make_gateway(const RunConfig& config) {
  GatewayBundle b;
  ordered_json g = config.section("gateway");
  std::string mode = config.force_replay ? "replay" : g.value("mode", "replay");
  std::string fixtures = g.value("fixtures", "");
  if (mode == "replay") {
    if (fixtures.empty())
      throw bloomqa::ConfigError("replay mode requires gateway.fixtures");
    b.store = bloomqa::FixtureStore::load(fixtures);
    b.gateway = std::make_unique<bloomqa::Gateway>(b.store);
    return b;
  }
  if (mode != "live")
    throw bloomqa::ConfigError("gateway.mode must be 'live' or 'replay'");
  if (!g.contains("endpoint"))
    throw bloomqa::ConfigError("live mode requires gateway.endpoint");
  const auto& e = g.at("endpoint");
  bloomqa::EndpointConfig ec;
  ec.base_url = e.value("base_url", "");
  ec.path = e.value("path", ec.path);
  ec.model_name = e.value("model_name", "");
  ec.credential_env = e.value("credential_env", ec.credential_env);
  ec.timeout_seconds = e.value("timeout_seconds", ec.timeout_seconds);
  if (ec.base_url.empty())
    throw bloomqa::ConfigError("gateway.endpoint.base_url is required");
  b.transport = std::make_unique<bloomqa::HttpTransport>(ec);
  bloomqa::GatewayOptions options;
  if (g.value("record", false) && !fixtures.empty())
    options.record_store = &b.store;
  b.gateway = std::make_unique<bloomqa::Gateway>(*b.transport, options);
  return b;
}

void finish_gateway(const RunConfig& config, GatewayBundle& b) {
  ordered_json g = config.section("gateway");
  if (!config.force_replay && g.value("mode", "replay") == "live" &&
      g.value("record", false) && !g.value("fixtures", std::string()).empty())
    b.store.save(g.at("fixtures"));
}

std::string require_path(const fs::path& p) {
  if (!fs::exists(p))
    throw bloomqa::CorpusError("cannot open: " + p.string());
  return p.string();
}

// ------------------------------------------------------------------ stages

int cmd_extract(const RunConfig& config) {
  ordered_json sec = config.section("extract");
  fs::path raw_path = config.artifact(sec, "guideline_text", "guidelines.txt");
  std::ifstream in(require_path(raw_path), std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();

  GatewayBundle gw = make_gateway(config);
  bloomqa::ExtractionConfig ec;
  ec.domain = config.domain();
  ec.id_prefix = sec.value("id_prefix", "P");
  ec.generate_summaries = sec.value("summaries", true);
  auto result = bloomqa::extract_practices(buf.str(), *gw.gateway, ec);
  std::string review = sec.value("review_list", "");
  if (!review.empty())
    result.practices = bloomqa::apply_review_list(result.practices, review);
  finish_gateway(config, gw);

  fs::create_directories(config.out_dir);
  bloomqa::save_corpus(result.practices,
                       (config.out_dir / "practices.jsonl").string());
  bloomqa::save_goal_groups(result,
                            (config.out_dir / "goal_groups.jsonl").string());
  bloomqa::write_run_manifest(config.out_dir / "manifest_extract.json",
                              "extract", config.config_text,
                              config.effective_seed(), {raw_path});
  std::cerr << "extract: " << result.practices.size() << " practices kept\n";
  return kExitOk;
}

int cmd_generate(const RunConfig& config) {
  ordered_json sec = config.section("generate");
  fs::path practices_path = config.artifact(sec, "practices", "practices.jsonl");
  auto practices =
      bloomqa::load_corpus<bloomqa::Practice>(require_path(practices_path));
  auto n = sec.value("scenario_count", std::size_t{0});

  std::vector<std::string> keywords;
  std::string kw_path = sec.value("blocked_keywords", "");
  if (!kw_path.empty())
    keywords = bloomqa::load_blocked_keywords(require_path(kw_path));
  auto rules = bloomqa::ValidationRuleSet::for_domain(config.domain(),
                                                      std::move(keywords));
  bloomqa::GenerationOptions options;
  options.retry_cap = sec.value("retry_cap", options.retry_cap);
  options.max_failure_rate =
      sec.value("max_failure_rate", options.max_failure_rate);

  GatewayBundle gw = make_gateway(config);
  bloomqa::Rng rng(config.effective_seed());
  auto result =
      bloomqa::run_generation(practices, n, *gw.gateway, rng, rules, options);
  finish_gateway(config, gw);

  fs::create_directories(config.out_dir);
  auto corpus_rules = rules.corpus_rules();
  bloomqa::save_corpus(result.scenarios,
                       (config.out_dir / "scenarios.jsonl").string(),
                       corpus_rules);
  bloomqa::save_corpus(result.mcqs, (config.out_dir / "mcqs.jsonl").string(),
                       corpus_rules);
  bloomqa::save_corpus(result.dialogues,
                       (config.out_dir / "dialogues.jsonl").string(),
                       corpus_rules);
  bloomqa::save_failure_ledger(result.failures,
                               (config.out_dir / "failures.jsonl").string());
  bloomqa::write_run_manifest(config.out_dir / "manifest_generate.json",
                              "generate", config.config_text,
                              config.effective_seed(), {practices_path});
  std::cerr << "generate: " << result.scenarios.size() << " scenarios, "
            << result.mcqs.size() << " mcqs, " << result.failures.size()
            << " failures\n";
  return kExitOk;
}

int cmd_exam(const RunConfig& config) {
  ordered_json sec = config.section("exam");
  fs::path scenarios_path = config.artifact(sec, "scenarios", "scenarios.jsonl");
  fs::path mcqs_path = config.artifact(sec, "mcqs", "mcqs.jsonl");
  auto corpus_rules = bloomqa::default_rules(config.domain());
  auto scenarios = bloomqa::load_corpus<bloomqa::Scenario>(
      require_path(scenarios_path), corpus_rules);
  auto mcqs = bloomqa::load_corpus<bloomqa::McqItem>(require_path(mcqs_path),
                                                     corpus_rules);

  auto n = sec.value("sample_size", std::size_t{0});
  std::vector<std::string> models =
      sec.value("models", std::vector<std::string>{});
  if (models.empty())
    throw bloomqa::ConfigError("exam.models must list at least one model id");

  bloomqa::Rng rng(config.effective_seed());
  auto plan = bloomqa::sample_exam(mcqs, n, rng);
  plan.model_ids = models;

  std::string checkpoint_path = sec.value("checkpoint", "");
  bloomqa::ExamCheckpoint checkpoint;
  if (!checkpoint_path.empty())
    checkpoint = bloomqa::ExamCheckpoint(checkpoint_path);

  GatewayBundle gw = make_gateway(config);
  auto trials = bloomqa::administer(
      plan, mcqs, scenarios, *gw.gateway, config.domain(),
      checkpoint_path.empty() ? nullptr : &checkpoint);
  finish_gateway(config, gw);

  fs::create_directories(config.out_dir);
  bloomqa::save_corpus(trials, (config.out_dir / "trials.jsonl").string());
  bloomqa::write_run_manifest(config.out_dir / "manifest_exam.json", "exam",
                              config.config_text, config.effective_seed(),
                              {scenarios_path, mcqs_path});
  std::cerr << "exam: " << trials.size() << " trials\n";
  return kExitOk;
}

bloomqa::ModelSpec spec_from_config(const ordered_json& sec) {
  bloomqa::ModelSpec spec;
  spec.fixed_factors = sec.value(
      "fixed_factors", std::vector<std::string>{"model", "bloom"});
  spec.random_intercept_key = sec.value("random_intercept", "practice");
  if (sec.contains("reference_levels"))
    for (auto& [k, v] : sec.at("reference_levels").items())
      spec.reference_levels[k] = v;
  if (sec.contains("interactions"))
    for (const auto& pair : sec.at("interactions"))
      spec.interactions.emplace_back(pair.at(0), pair.at(1));
  return spec;
}

int cmd_analyze(const RunConfig& config) {
  ordered_json sec = config.section("analyze");
  fs::path trials_path = config.artifact(sec, "trials", "trials.jsonl");
  auto trials =
      bloomqa::load_corpus<bloomqa::TrialRecord>(require_path(trials_path));
  if (trials.empty()) throw bloomqa::CorpusError("no trials in " +
                                                 trials_path.string());

  bloomqa::ModelSpec spec = spec_from_config(sec);
  bloomqa::GlmmOptions options;
  options.quad_nodes = sec.value("quad_nodes", options.quad_nodes);
  auto fit = bloomqa::fit_glmm(trials, spec, options);

  bloomqa::ScreeningThresholds thresholds;
  thresholds.chance = sec.value("chance", bloomqa::chance_level(config.domain()));
  thresholds.model_cut = sec.value("model_cut", thresholds.model_cut);
  thresholds.model_strong = sec.value("model_strong", thresholds.model_strong);
  thresholds.bloom_cut = sec.value("bloom_cut", thresholds.bloom_cut);
  thresholds.bloom_negligible =
      sec.value("bloom_negligible", thresholds.bloom_negligible);
  if (sec.value("delta_aggregation", "cell_range") == "bloom_averaged")
    thresholds.aggregation = bloomqa::DeltaAggregation::BloomAveraged;
  auto screening = bloomqa::screen_practices(fit, trials, thresholds);

  auto grouping = sec.value("residual_grouping", "model_practice") ==
                          "model_practice_bloom"
                      ? bloomqa::ResidualGrouping::ModelPracticeBloom
                      : bloomqa::ResidualGrouping::ModelPractice;
  auto residuals = bloomqa::residual_cells(
      fit, trials, grouping, sec.value("bh_alpha", 0.05),
      !sec.value("bh_only", false));
  auto progression = bloomqa::bhpr(trials);

  fs::create_directories(config.out_dir);
  bloomqa::write_text_file(config.out_dir / "fit_summary.tsv",
                           bloomqa::render_fit_summary(fit));
  bloomqa::write_text_file(config.out_dir / "screening.tsv",
                           bloomqa::render_screening_report(screening));
  bloomqa::write_text_file(config.out_dir / "residuals.tsv",
                           bloomqa::render_residual_report(residuals));
  bloomqa::write_text_file(config.out_dir / "bhpr.tsv",
                           bloomqa::render_bhpr_report(progression));
  bloomqa::write_run_manifest(config.out_dir / "manifest_analyze.json",
                              "analyze", config.config_text,
                              config.effective_seed(), {trials_path});
  std::cerr << "analyze: loglik " << bloomqa::format_sig6(fit.loglik)
            << ", sigma " << bloomqa::format_sig6(fit.sigma) << ", "
            << screening.flagged.size() << " practices below chance, "
            << residuals.flagged_count << " residual cells flagged\n";
  return kExitOk;
}

// Parses the residual table written by the analyze stage back into cells
// so the report stage never refits the model.
bloomqa::ResidualReport load_residuals(const fs::path& path) {
  std::ifstream in(require_path(path));
  bloomqa::ResidualReport report;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    bloomqa::ResidualCell c;
    std::string bloom, flagged;
    ls >> c.model_id >> c.practice_id >> bloom >> c.observed >> c.expected >>
        c.variance >> c.z >> c.p_value >> flagged >> c.direction;
    if (bloom != "all") c.bloom = bloomqa::parse_bloom(bloom);
    c.flagged = flagged == "yes";
    if (c.direction == "-") c.direction.clear();
    if (c.flagged) {
      ++report.flagged_count;
      if (c.direction == "better") ++report.better_count;
      else ++report.worse_count;
    }
    report.cells.push_back(std::move(c));
  }
  return report;
}

int cmd_report(const RunConfig& config, bool svg) {
  ordered_json sec = config.section("report");
  fs::path trials_path = config.artifact(sec, "trials", "trials.jsonl");
  auto trials =
      bloomqa::load_corpus<bloomqa::TrialRecord>(require_path(trials_path));
  fs::path residuals_path = config.artifact(sec, "residuals", "residuals.tsv");
  auto residuals = load_residuals(residuals_path);

  fs::create_directories(config.out_dir);
  bloomqa::write_text_file(config.out_dir / "accuracy_table.tsv",
                           bloomqa::render_accuracy_table(trials));
  bloomqa::write_text_file(config.out_dir / "scatter.tsv",
                           bloomqa::render_scatter_data(residuals));
  if (svg || sec.value("svg", false))
    bloomqa::write_text_file(config.out_dir / "scatter.svg",
                             bloomqa::render_scatter_svg(residuals));
  bloomqa::write_run_manifest(config.out_dir / "manifest_report.json",
                              "report", config.config_text,
                              config.effective_seed(),
                              {trials_path, residuals_path});
  std::cerr << "report: " << residuals.cells.size() << " scatter points\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guideline-to-exam pipeline: practice extraction, scenario/MCQ "
               "generation, exam administration, and psychometric analysis"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  bool replay = false, svg = false;
  app.add_option("--config", config_path, "Run configuration (JSON)")
      ->required();
  auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
  app.add_flag("--replay", replay, "Force replay mode (no live endpoints)");
  app.add_option("--out-dir", out_dir, "Output directory (default: out)");

  auto* extract = app.add_subcommand("extract", "Guideline text -> practices");
  auto* generate =
      app.add_subcommand("generate", "Practices -> scenarios, MCQs, dialogues");
  auto* exam = app.add_subcommand("exam", "Administer sampled MCQs to models");
  auto* analyze =
      app.add_subcommand("analyze", "Fit the mixed model and screen items");
  auto* report = app.add_subcommand("report", "Render tables and plot data");
  report->add_flag("--svg", svg, "Also write a vector scatter image");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig config =
        load_config(config_path, out_dir, seed, seed_opt->count() > 0, replay);
    if (extract->parsed()) return cmd_extract(config);
    if (generate->parsed()) return cmd_generate(config);
    if (exam->parsed()) return cmd_exam(config);
    if (analyze->parsed()) return cmd_analyze(config);
    if (report->parsed()) return cmd_report(config, svg);
  } catch (const bloomqa::FixtureMissError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMissingInput;
  } catch (const bloomqa::GlmmError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const bloomqa::CorpusError& e) {
    std::string msg = e.what();
    std::cerr << "error: " << msg << '\n';
    return msg.rfind("cannot open", 0) == 0 ? kExitMissingInput
                                            : kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}
