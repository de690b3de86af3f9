#ifndef BLOOMQA_TESTS_SIMULATE_HPP
#define BLOOMQA_TESTS_SIMULATE_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bloomqa/corpus.hpp"
#include "bloomqa/rng.hpp"
#include "bloomqa/text.hpp"

namespace bloomqa::testsupport {

inline double inv_logit(double eta) {
  return eta >= 0 ? 1.0 / (1.0 + std::exp(-eta))
                  : std::exp(eta) / (1.0 + std::exp(eta));
}

// Ground truth for a simulated exam: logit(p) = intercept + model effect +
// bloom effect + practice intercept (+ optional per-cell shift).
struct SimConfig {
  Domain domain = Domain::Teaching;
  double intercept = 0.0;
  std::vector<std::pair<std::string, double>> models;  // reference coef = 0
  std::map<std::string, double> bloom_coefs;           // reference coef = 0
  double sigma = 1.2;
  int n_practices = 36;
  int scenarios_per_practice = 17;
  std::uint64_t seed = 1;
  // When set, overrides the N(0, sigma^2) draw per practice.
  std::vector<double> planted_u;
  // Optional model-misspecification: extra logit shift per (model index,
  // practice index), used to plant residual outliers.
  std::function<double(int, int)> cell_shift;

  double u_of(int practice, Rng& rng) const {
    if (!planted_u.empty()) return planted_u[static_cast<std::size_t>(practice)];
    return sigma * rng.next_normal();
  }
};

// Published per-domain effect tables the fixtures are derived from.
inline SimConfig teaching_sim(std::uint64_t seed) {
  SimConfig c;
  c.domain = Domain::Teaching;
  c.intercept = 1.997;
  c.models = {{"DeepSeek-V3", 0.0},      {"GPT-4O", -0.345},
              {"GPT-4O-Mini", -0.131},   {"Kimi-K2", -0.098},
              {"Llama-33-70B", -1.900},  {"Mixtral-8x7B", -2.760},
              {"Qwen-25-72B", -0.024},   {"Qwen-3-80B", -0.299}};
  c.bloom_coefs = {{"Analyze", 0.0},
                   {"Apply", -1.385},
                   {"Remember", -0.728},
                   {"Understand", -1.064}};
  c.sigma = 1.2;
  c.n_practices = 36;
  c.scenarios_per_practice = 17;
  c.seed = seed;
  return c;
}

inline SimConfig diet_sim(std::uint64_t seed) {
  SimConfig c;
  c.domain = Domain::Diet;
  c.intercept = 0.372;
  c.models = {{"DeepSeek-V3", 0.0},      {"GPT-4O", 0.073},
              {"GPT-4O-Mini", 0.117},    {"Kimi-K2", 0.355},
              {"Llama-33-70B", -0.149},  {"Mixtral-8x7B", -0.297},
              {"Qwen-25-72B", -0.077},   {"Qwen-3-80B", 0.215}};
  c.bloom_coefs = {{"Analyze", 0.0},
                   {"Apply", 0.236},
                   {"Remember", 0.392},
                   {"Understand", -0.062}};
  c.sigma = 1.2;
  c.n_practices = 55;
  c.scenarios_per_practice = 11;
  c.seed = seed;
  return c;
}

inline SimConfig caregiving_sim(std::uint64_t seed) {
  SimConfig c;
  c.domain = Domain::Caregiving;
  c.intercept = 1.970;
  c.models = {{"DeepSeek-V3", 0.0},      {"GPT-4O", 0.222},
              {"GPT-4O-Mini", 0.373},    {"Kimi-K2", 0.095},
              {"Llama-33-70B", 0.183},   {"Mixtral-8x7B", -0.227},
              {"Qwen-25-72B", 0.183},    {"Qwen-3-80B", -0.051}};
  c.bloom_coefs = {{"Analyze", 0.0},
                   {"Apply", -0.701},
                   {"Remember", -0.966},
                   {"Understand", -0.603}};
  c.sigma = 1.2;
  c.n_practices = 30;
  c.scenarios_per_practice = 17;
  c.seed = seed;
  return c;
}

inline std::string sim_practice_id(int p) {
  std::string s = std::to_string(p + 1);
  return "P_" + std::string(2 - std::min<std::size_t>(2, s.size()), '0') + s;
}

// One trial per (practice, scenario, bloom, model). Mcq ids share a
// scenario prefix across Bloom levels so progression pairing works.
inline std::vector<TrialRecord> simulate_trials(const SimConfig& config) {
  Rng rng(config.seed);
  std::vector<double> u(static_cast<std::size_t>(config.n_practices));
  for (int p = 0; p < config.n_practices; ++p)
    u[static_cast<std::size_t>(p)] = config.u_of(p, rng);

  std::vector<TrialRecord> trials;
  trials.reserve(static_cast<std::size_t>(config.n_practices) *
                 config.scenarios_per_practice * 4 * config.models.size());
  for (int p = 0; p < config.n_practices; ++p) {
    for (int s = 0; s < config.scenarios_per_practice; ++s) {
      std::string scenario = "M_S" + std::to_string(p + 1) + "x" +
                             std::to_string(s + 1);
      for (Bloom b : kBloomLevels) {
        double bc = config.bloom_coefs.at(bloom_name(b));
        for (std::size_t m = 0; m < config.models.size(); ++m) {
          double eta = config.intercept + config.models[m].second + bc +
                       u[static_cast<std::size_t>(p)];
          if (config.cell_shift) eta += config.cell_shift(static_cast<int>(m), p);
          TrialRecord t;
          t.model_id = config.models[m].first;
          t.mcq_id = scenario + "_" + bloom_name(b);
          t.practice_id = sim_practice_id(p);
          t.bloom = b;
          t.domain = config.domain;
          t.correct = rng.next_double() < inv_logit(eta);
          t.chosen_label = t.correct ? 'A' : 'B';
          t.raw_response = "";
          trials.push_back(std::move(t));
        }
      }
    }
  }
  return trials;
}

}  // namespace bloomqa::testsupport

#endif  // BLOOMQA_TESTS_SIMULATE_HPP
