#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bloomqa/report.hpp"
#include "support/simulate.hpp"

using namespace bloomqa;

namespace {

TrialRecord trial(const std::string& model, Bloom b, bool correct,
                  bool answered = true) {
  TrialRecord t;
  t.model_id = model;
  t.mcq_id = "M_S1_" + bloom_name(b);
  t.practice_id = "P_01";
  t.bloom = b;
  t.domain = Domain::Diet;
  t.correct = correct;
  if (answered) t.chosen_label = correct ? 'A' : 'B';
  return t;
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> lines;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("bloomqa_report_test_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("numeric formats are fixed-width and locale-independent") {
  CHECK(format_sig6(0.123456789) == "0.123457");
  CHECK(format_sig6(1234567.0) == "1.23457e+06");
  CHECK(format_sig6(0.0) == "0");
  CHECK(format_sig6(-3.5) == "-3.5");
  CHECK(format_acc3(0.5) == "0.500");
  CHECK(format_acc3(1.0) == "1.000");
  CHECK(format_acc3(0.12349) == "0.123");
}

TEST_CASE("accuracy table: hand-counted cells, starred column maxima") {
  std::vector<TrialRecord> trials;
  // m1: Remember 2/2, Understand 1/2, Apply 0/2, Analyze 2/2 -> avg 0.625.
  trials.push_back(trial("m1", Bloom::Remember, true));
  trials.push_back(trial("m1", Bloom::Remember, true));
  trials.push_back(trial("m1", Bloom::Understand, true));
  trials.push_back(trial("m1", Bloom::Understand, false));
  trials.push_back(trial("m1", Bloom::Apply, false));
  trials.push_back(trial("m1", Bloom::Apply, false));
  trials.push_back(trial("m1", Bloom::Analyze, true));
  trials.push_back(trial("m1", Bloom::Analyze, true));
  // m2: 1/2 at every level, one unanswered trial -> null_rate 1/8.
  for (Bloom b : kBloomLevels) {
    trials.push_back(trial("m2", b, true));
    trials.push_back(trial("m2", b, false, b != Bloom::Apply));
  }

  auto table = render_accuracy_table(trials);
  auto lines = split_lines(table);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] ==
        "model\tremember\tunderstand\tapply\tanalyze\tavg\tnull_rate");
  auto m1 = split_tabs(lines[1]);
  auto m2 = split_tabs(lines[2]);
  REQUIRE(m1.size() == 7);
  CHECK(m1[0] == "m1");
  CHECK(m1[1] == "1.000*");  // column max starred
  CHECK(m1[2] == "0.500*");  // tie with m2: both starred
  CHECK(m1[3] == "0.000");
  CHECK(m1[4] == "1.000*");
  CHECK(m1[5] == "0.625*");
  CHECK(m1[6] == "0.000");
  CHECK(m2[0] == "m2");
  CHECK(m2[1] == "0.500");
  CHECK(m2[2] == "0.500*");
  CHECK(m2[3] == "0.500*");
  CHECK(m2[4] == "0.500");
  CHECK(m2[5] == "0.500");
  CHECK(m2[6] == "0.125");

  CHECK_THROWS_AS(render_accuracy_table({}), std::runtime_error);
}

TEST_CASE("scatter data maps flags to better/worse and the rest to ok") {
  ResidualReport report;
  ResidualCell ok;
  ok.model_id = "m1";
  ok.practice_id = "P_01";
  ok.expected = 3.25;
  ok.observed = 3.0;
  report.cells.push_back(ok);
  ResidualCell worse = ok;
  worse.practice_id = "P_02";
  worse.flagged = true;
  worse.direction = "worse";
  worse.bloom = Bloom::Apply;
  report.cells.push_back(worse);

  auto lines = split_lines(render_scatter_data(report));
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "model\tpractice\tbloom\texpected\tobserved\tstatus");
  CHECK(lines[1] == "m1\tP_01\tall\t3.25\t3\tok");
  CHECK(lines[2] == "m1\tP_02\tApply\t3.25\t3\tworse");

  auto svg = render_scatter_svg(report);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("#cc3333") != std::string::npos);  // worse cell is red
  CHECK(svg.find("#3366cc") != std::string::npos);  // unflagged cell is blue
  CHECK(svg.rfind("</svg>\n") == svg.size() - 7);
}

TEST_CASE("fit summary lists intercept, coefficients, sigma and comments") {
  auto config = testsupport::SimConfig{};
  config.domain = Domain::Diet;
  config.intercept = 0.4;
  config.models = {{"m1", 0.0}, {"m2", 0.8}};
  config.bloom_coefs = {{"Analyze", 0.0},
                        {"Apply", 0.3},
                        {"Remember", 0.6},
                        {"Understand", -0.2}};
  config.sigma = 0.8;
  config.n_practices = 8;
  config.scenarios_per_practice = 10;
  config.seed = 99;
  auto trials = testsupport::simulate_trials(config);
  ModelSpec spec;
  spec.fixed_factors = {"model", "bloom"};
  spec.random_intercept_key = "practice";
  auto fit = fit_glmm(trials, spec);

  auto lines = split_lines(render_fit_summary(fit));
  CHECK(lines[0] == "term\testimate\tse\tz\tp");
  CHECK(split_tabs(lines[1])[0] == "(intercept)");
  // 1 header + intercept + 4 coefficients + sigma + >= 3 comment lines.
  REQUIRE(lines.size() >= 9);
  int coef_rows = 0, comment_rows = 0;
  bool saw_sigma = false;
  for (const auto& line : lines) {
    if (line.rfind("# ", 0) == 0) {
      ++comment_rows;
      continue;
    }
    auto fields = split_tabs(line);
    if (fields[0] == "sigma") {
      saw_sigma = true;
      CHECK(fields[1] == format_sig6(fit.sigma));
      CHECK(fields[2] == "NA");
    } else if (fields[0] != "term" && fields[0] != "(intercept)") {
      ++coef_rows;
      // estimate column re-renders the stored coefficient exactly
      CHECK(fields[1] == format_sig6(fit.coefficient(fields[0])));
      REQUIRE(fields.size() == 5);
    }
  }
  CHECK(coef_rows == 4);  // model:m2 + 3 bloom contrasts
  CHECK(saw_sigma);
  CHECK(comment_rows >= 3);  // loglik, converged, iterations
  CHECK(render_fit_summary(fit).find("# converged true") != std::string::npos);
}

TEST_CASE("screening and residual renderers round numbers at 6 significant digits") {
  ScreeningReport report;
  PracticeScreen s;
  s.practice_id = "P_01";
  s.marginal_prob = 0.123456789;
  s.delta_model = 0.714;
  s.delta_bloom = 0.25;
  s.below_chance = true;
  report.practices.push_back(s);
  report.flagged.push_back("P_01");
  report.median_delta_model = 0.714;
  SweepPoint pt;
  pt.threshold = 0.05;
  pt.model_sep_count = 1;
  report.sweep.push_back(pt);

  auto text = render_screening_report(report);
  CHECK(text.find("P_01\t0.123457\t0.714\t0.25\tyes\n") != std::string::npos);
  CHECK(text.find("# median_delta_model 0.714\n") != std::string::npos);
  CHECK(text.find("# flagged_below_chance 1\n") != std::string::npos);
  CHECK(text.find("# sweep 0.05\t1\t0\n") != std::string::npos);

  ResidualReport rr;
  ResidualCell c;
  c.model_id = "m1";
  c.practice_id = "P_01";
  c.observed = 10.0;
  c.expected = 4.321987654;
  c.variance = 2.0;
  c.z = 4.0155;
  c.p_value = 5.93e-05;
  c.flagged = true;
  c.direction = "better";
  rr.cells.push_back(c);
  rr.flagged_count = 1;
  rr.better_count = 1;
  auto rtext = render_residual_report(rr);
  CHECK(rtext.find("m1\tP_01\tall\t10\t4.32199\t2\t4.0155\t5.93e-05\tyes\t"
                   "better\n") != std::string::npos);
  CHECK(rtext.find("# flagged 1 (better 1, worse 0)\n") != std::string::npos);
}

TEST_CASE("bhpr renderer prints NA for undefined entries and n per ratio") {
  BhprResult r;
  r.sgs[0][1] = 0.875;
  r.sgs_pairs[0][1] = 8;
  r.sgf[0][1] = 0.25;
  r.sgf_pairs[0][1] = 4;
  r.sgs_lower_to_higher = 0.875;
  auto text = render_bhpr_report(r);
  CHECK(text.find("0.875 (n=8)") != std::string::npos);
  CHECK(text.find("0.25 (n=4)") != std::string::npos);
  CHECK(text.find("# sgs_lower_to_higher 0.875\n") != std::string::npos);
  CHECK(text.find("# sgf_higher_to_lower NA\n") != std::string::npos);
  // Diagonal renders NA.
  auto lines = split_lines(text);
  CHECK(split_tabs(lines[1])[2] == "NA");
}

TEST_CASE("manifest captures version, stage, seed and per-input digests") {
  TempDir dir;
  auto input = dir.path / "input.jsonl";
  write_text_file(input, "{\"id\":\"P_01\"}\n");
  auto manifest_path = dir.path / "manifest_extract.json";
  write_run_manifest(manifest_path, "extract", "{\"seed\":7}", 7, {input});

  std::ifstream in(manifest_path);
  REQUIRE(in.good());
  auto j = ordered_json::parse(in);
  CHECK(j["tool_version"] == kToolVersion);
  CHECK(j["stage"] == "extract");
  CHECK(j["seed"] == 7);
  CHECK(j["config_digest"] == content_hash("{\"seed\":7}"));
  CHECK(j["input_digests"][input.string()] ==
        content_hash("{\"id\":\"P_01\"}\n"));

  // The manifest itself is deterministic: rewriting yields identical bytes.
  auto second_path = dir.path / "manifest_extract_2.json";
  write_run_manifest(second_path, "extract", "{\"seed\":7}", 7, {input});
  std::ifstream a(manifest_path, std::ios::binary), b(second_path,
                                                      std::ios::binary);
  std::ostringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());

  CHECK_THROWS_AS(file_digest(dir.path / "missing.jsonl"), std::runtime_error);
}
