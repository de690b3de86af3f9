#ifndef BLOOMQA_EXAM_HPP
#define BLOOMQA_EXAM_HPP

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bloomqa/corpus.hpp"
#include "bloomqa/gateway.hpp"
#include "bloomqa/rng.hpp"

namespace bloomqa {

struct ExamPlan {
  std::vector<std::string> scenario_ids;  // S sampled scenarios
  std::vector<std::string> mcq_ids;       // 4S items, sorted
  std::vector<std::string> model_ids;
};

// Samples n scenarios uniformly without replacement and includes all four
// Bloom variants of each, so the Bloom mix is exactly 25% per level.
inline ExamPlan sample_exam(const std::vector<McqItem>& corpus,
                            std::size_t n_scenarios, Rng& rng) {
  std::map<std::string, std::set<Bloom>> levels_by_scenario;
  std::map<std::string, std::vector<std::string>> mcqs_by_scenario;
  for (const auto& m : corpus) {
    levels_by_scenario[m.scenario_id].insert(m.bloom);
    mcqs_by_scenario[m.scenario_id].push_back(m.id);
  }
  std::vector<std::string> eligible;
  for (const auto& [sid, levels] : levels_by_scenario)
    if (levels.size() == 4) eligible.push_back(sid);
  std::sort(eligible.begin(), eligible.end());
  if (eligible.size() < n_scenarios)
    throw CorpusError("corpus holds only " + std::to_string(eligible.size()) +
                      " complete scenarios, need " +
                      std::to_string(n_scenarios));

  ExamPlan plan;
  for (auto idx : rng.sample_indices(eligible.size(), n_scenarios))
    plan.scenario_ids.push_back(eligible[idx]);
  std::sort(plan.scenario_ids.begin(), plan.scenario_ids.end());
  for (const auto& sid : plan.scenario_ids)
    for (const auto& mid : mcqs_by_scenario[sid]) plan.mcq_ids.push_back(mid);
  std::sort(plan.mcq_ids.begin(), plan.mcq_ids.end());
  return plan;
}

// Extracts the chosen option letter. A lone letter (optionally followed by
// punctuation) wins; otherwise the first standalone in-range letter token
// (e.g. "Answer: C"). Null when nothing valid appears.
inline std::optional<char> parse_answer(const std::string& raw,
                                        int n_options) {
  auto in_range = [&](char c) {
    char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return u >= 'A' && u < static_cast<char>('A' + n_options) ? true : false;
  };
  std::string t = trim(raw);
  if (!t.empty()) {
    // Lone letter with optional trailing punctuation.
    bool lone = std::isalpha(static_cast<unsigned char>(t[0])) != 0;
    for (std::size_t i = 1; i < t.size() && lone; ++i)
      if (!std::ispunct(static_cast<unsigned char>(t[i]))) lone = false;
    if (lone && in_range(t[0]))
      return static_cast<char>(std::toupper(static_cast<unsigned char>(t[0])));
  }
  // Token scan: single-letter tokens bounded by non-alphanumerics.
  std::string token;
  for (std::size_t i = 0; i <= t.size(); ++i) {
    bool word = i < t.size() &&
                std::isalnum(static_cast<unsigned char>(t[i])) != 0;
    if (word) {
      token += t[i];
    } else if (!token.empty()) {
      if (token.size() == 1 &&
          std::isalpha(static_cast<unsigned char>(token[0])) &&
          in_range(token[0]))
        return static_cast<char>(
            std::toupper(static_cast<unsigned char>(token[0])));
      token.clear();
    }
  }
  return std::nullopt;
}

namespace prompts {

inline std::string evaluation_system(Domain d) {
  int k = option_count(d);
  std::string letters;
  for (int i = 0; i < k; ++i) {
    if (i) letters += i + 1 == k ? ", or " : ", ";
    letters += static_cast<char>('A' + i);
  }
  std::string field = d == Domain::Diet
                          ? "diet assessment"
                          : (d == Domain::Teaching ? "educational assessment"
                                                   : "caregiving assessment");
  return "You are an expert in " + field +
         ". Answer the multiple choice question by selecting the correct "
         "option (" +
         letters + "). Return only the letter of your choice.";
}

inline std::string evaluation_user(const Scenario& scenario,
                                   const McqItem& mcq) {
  std::ostringstream os;
  os << scenario.text << "\n\nQuestion: " << mcq.stem << "\n\nOptions:\n";
  for (const auto& o : mcq.options) os << o.label << ". " << o.text << "\n";
  os << "\nSelect the correct answer.";
  return os.str();
}

}  // namespace prompts

// Resumable checkpoint: one "model_id\tmcq_id" per completed trial.
class ExamCheckpoint {
public:
  ExamCheckpoint() = default;
  explicit ExamCheckpoint(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line))
      if (!trim(line).empty()) done_.insert(line);
  }

  bool contains(const std::string& model_id, const std::string& mcq_id) const {
    return done_.count(model_id + "\t" + mcq_id) > 0;
  }

  void mark(const std::string& model_id, const std::string& mcq_id) {
    std::string key = model_id + "\t" + mcq_id;
    if (!done_.insert(key).second || path_.empty()) return;
    std::ofstream out(path_, std::ios::app);
    out << key << '\n';
  }

private:
  std::string path_;
  std::set<std::string> done_;
};

// Administers every (model, item) pair in fixed sorted order. Gateway
// exhaustion records a null-choice trial flagged in raw_response rather
// than dropping the pair.
inline std::vector<TrialRecord> administer(
    const ExamPlan& plan, const std::vector<McqItem>& mcqs,
    const std::vector<Scenario>& scenarios, Gateway& gateway, Domain domain,
    ExamCheckpoint* checkpoint = nullptr) {
  std::map<std::string, const McqItem*> mcq_by_id;
  for (const auto& m : mcqs) mcq_by_id[m.id] = &m;
  std::map<std::string, const Scenario*> scenario_by_id;
  for (const auto& s : scenarios) scenario_by_id[s.id] = &s;

  std::vector<TrialRecord> trials;
  trials.reserve(plan.model_ids.size() * plan.mcq_ids.size());
  for (const auto& model_id : plan.model_ids) {
    for (const auto& mcq_id : plan.mcq_ids) {
      if (checkpoint && checkpoint->contains(model_id, mcq_id)) continue;
      auto mit = mcq_by_id.find(mcq_id);
      if (mit == mcq_by_id.end())
        throw CorpusError("plan references unknown mcq " + mcq_id);
      const McqItem& mcq = *mit->second;
      auto sit = scenario_by_id.find(mcq.scenario_id);
      if (sit == scenario_by_id.end())
        throw CorpusError("mcq references unknown scenario " +
                          mcq.scenario_id);

      TrialRecord trial;
      trial.model_id = model_id;
      trial.mcq_id = mcq.id;
      trial.practice_id = sit->second->practice_id;
      trial.bloom = mcq.bloom;
      trial.domain = domain;
      try {
        auto response = gateway.complete(
            ChatRequest::for_task(TaskTag::Evaluation,
                                  prompts::evaluation_system(domain),
                                  prompts::evaluation_user(*sit->second, mcq)),
            model_id);
        trial.raw_response = response.text;
        trial.chosen_label =
            parse_answer(response.text, static_cast<int>(mcq.options.size()));
      } catch (const GatewayError& e) {
        trial.raw_response = std::string("[gateway-error] ") + e.what();
        trial.chosen_label.reset();
      }
      trial.correct = trial.chosen_label.has_value() &&
                      *trial.chosen_label == mcq.correct_label;
      trials.push_back(std::move(trial));
      if (checkpoint) checkpoint->mark(model_id, mcq_id);
    }
  }
  return trials;
}

}  // namespace bloomqa

#endif  // BLOOMQA_EXAM_HPP
