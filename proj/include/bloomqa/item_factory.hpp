#ifndef BLOOMQA_ITEM_FACTORY_HPP
#define BLOOMQA_ITEM_FACTORY_HPP

#include <algorithm>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bloomqa/corpus.hpp"
#include "bloomqa/gateway.hpp"
#include "bloomqa/rng.hpp"
#include "bloomqa/text.hpp"

namespace bloomqa {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ----------------------------------------------------------- rule set

struct ValidationRuleSet {
  int word_min = 50;
  int word_max = 100;
  std::vector<std::string> blocked_keywords;
  bool forbid_question_mark = true;
  bool forbid_trait_mentions = false;  // teaching only
  std::set<std::string> dedup_store;   // content hashes seen so far

  static ValidationRuleSet for_domain(Domain d,
                                      std::vector<std::string> keywords) {
    ValidationRuleSet r;
    r.blocked_keywords = std::move(keywords);
    if (d == Domain::Teaching) {
      r.word_min = 40;
      r.word_max = 120;
      r.forbid_trait_mentions = true;
    }
    return r;
  }

  CorpusRules corpus_rules() const {
    CorpusRules c;
    c.word_min = word_min;
    c.word_max = word_max;
    return c;
  }
};

// One keyword or phrase per line; '#' starts a comment.
inline std::vector<std::string> load_blocked_keywords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open keyword list: " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    out.push_back(t);
  }
  return out;
}

// ------------------------------------------------------------- profiles

namespace pools {

inline const std::vector<std::string>& sexes() {
  static const std::vector<std::string> v{"female", "male"};
  return v;
}
inline const std::vector<std::string>& health_conditions() {
  static const std::vector<std::string> v{
      "type 2 diabetes", "high cholesterol",  "hypertension",
      "celiac disease",  "lactose intolerance", "osteoporosis"};
  return v;
}
inline const std::vector<std::string>& diet_goals() {
  static const std::vector<std::string> v{
      "manage blood sugar", "lower cholesterol", "reach a healthy weight",
      "strengthen bones",   "reduce sodium intake"};
  return v;
}
inline const std::vector<std::string>& cooking_habits() {
  static const std::vector<std::string> v{
      "cooks most meals at home", "relies on takeout during the week",
      "batch-cooks on weekends",  "shares cooking with a partner"};
  return v;
}
inline const std::vector<std::string>& food_avoidances() {
  static const std::vector<std::string> v{"gluten", "dairy", "shellfish",
                                          "red meat", "added sugar"};
  return v;
}
inline const std::vector<std::string>& person_traits() {
  static const std::vector<std::string> v{
      "budget conscious", "adventurous eater", "routine oriented",
      "social diner",     "label reader",      "sweet tooth"};
  return v;
}
inline const std::vector<std::string>& instructor_names() {
  static const std::vector<std::string> v{
      "Dr. Alvarez", "Dr. Chen",  "Prof. Okafor", "Dr. Rossi",
      "Prof. Kaur",  "Dr. Novak", "Prof. Dubois", "Dr. Tanaka"};
  return v;
}
inline const std::vector<std::string>& disciplines() {
  static const std::vector<std::string> v{
      "Introduction to Political Science", "Organic Chemistry",
      "Microeconomics", "World History", "Statistics", "Linear Algebra"};
  return v;
}
inline const std::vector<std::string>& class_formats() {
  static const std::vector<std::string> v{"lecture", "seminar", "hybrid",
                                          "lab section"};
  return v;
}
inline const std::vector<std::string>& caregiver_names() {
  static const std::vector<std::string> v{"Maria", "James", "Priya", "Tom",
                                          "Elena", "Akira"};
  return v;
}
inline const std::vector<std::string>& relationships() {
  static const std::vector<std::string> v{
      "adult daughter", "adult son", "spouse", "sibling", "hired aide"};
  return v;
}
inline const std::vector<std::string>& patient_conditions() {
  static const std::vector<std::string> v{
      "recovering from a stroke", "living with early dementia",
      "recovering from hip surgery", "managing Parkinson's disease"};
  return v;
}
inline const std::vector<std::string>& living_situations() {
  static const std::vector<std::string> v{
      "shares a home with the patient", "lives nearby and visits daily",
      "coordinates care remotely with weekend visits"};
  return v;
}
inline const std::vector<std::string>& caregiving_goals() {
  static const std::vector<std::string> v{
      "keep the patient mobile", "maintain a safe home routine",
      "balance caregiving with work"};
  return v;
}

}  // namespace pools

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& pool) {
  if (pool.empty()) throw ConfigError("empty attribute pool");
  return pool[static_cast<std::size_t>(rng.next_below(pool.size()))];
}

inline Profile generate_profile(Domain domain, Rng& rng) {
  Profile p;
  p.domain = domain;
  auto& a = p.attributes;
  switch (domain) {
    case Domain::Diet: {
      a["age"] = 25 + static_cast<int>(rng.next_below(51));
      a["sex"] = pick(rng, pools::sexes());
      a["health_condition"] = pick(rng, pools::health_conditions());
      a["primary_goal"] = pick(rng, pools::diet_goals());
      a["cooking_habits"] = pick(rng, pools::cooking_habits());
      a["food_avoidance"] = pick(rng, pools::food_avoidances());
      auto idx = rng.sample_indices(pools::person_traits().size(), 2);
      a["traits"] = {pools::person_traits()[idx[0]],
                     pools::person_traits()[idx[1]]};
      break;
    }
    case Domain::Teaching: {
      a["instructor_name"] = pick(rng, pools::instructor_names());
      a["discipline"] = pick(rng, pools::disciplines());
      int size = 15 + static_cast<int>(rng.next_below(236));
      a["class_size"] = size;
      a["format"] = pick(rng, pools::class_formats());
      int years = 1 + static_cast<int>(rng.next_below(30));
      a["years_experience"] = years;
      ordered_json ocean = ordered_json::array();
      for (int i = 0; i < 5; ++i)
        ocean.push_back(1 + static_cast<int>(rng.next_below(10)));
      a["ocean_scores"] = ocean;
      std::ostringstream sum;
      sum << std::string(a["instructor_name"]) << " teaches "
          << std::string(a["discipline"]) << " (" << size << " students, "
          << std::string(a["format"]) << ") with " << years
          << " years of experience.";
      a["narrative_summary"] = sum.str();
      break;
    }
    case Domain::Caregiving: {
      a["caregiver_name"] = pick(rng, pools::caregiver_names());
      a["relationship"] = pick(rng, pools::relationships());
      a["patient_condition"] = pick(rng, pools::patient_conditions());
      a["living_situation"] = pick(rng, pools::living_situations());
      a["primary_goal"] = pick(rng, pools::caregiving_goals());
      auto idx = rng.sample_indices(pools::person_traits().size(), 2);
      a["traits"] = {pools::person_traits()[idx[0]],
                     pools::person_traits()[idx[1]]};
      break;
    }
    default:
      throw ConfigError("no profile generator for domain 'other'");
  }
  return p;
}

// ----------------------------------------------------- scenario generation

namespace prompts {

inline std::string scenario_system(Domain d) {
  switch (d) {
    case Domain::Diet:
      return "You are a helpful assistant that creates realistic diet "
             "dilemmas based on structured dietary guideline practices.";
    case Domain::Teaching:
      return "You are an expert in teaching practices and educational "
             "analysis. You create realistic, detailed teaching dilemmas "
             "that reflect real classroom challenges.";
    default:
      return "You are an expert in caregiving routines. You create "
             "realistic caregiving dilemmas grounded in daily care.";
  }
}

inline std::string scenario_user(const Practice& practice,
                                 const Profile& profile,
                                 const ValidationRuleSet& rules,
                                 int attempt) {
  std::ostringstream os;
  os << "Based on this practice:\n"
     << "- Goal: " << practice.goal << "\n"
     << "- Context: " << practice.context << "\n"
     << "- Action: " << practice.action << "\n"
     << "- Timing: " << practice.timing << "\n"
     << "- Person Characteristic: " << practice.person << "\n\n"
     << "Profile:\n"
     << profile.attributes.dump() << "\n\n"
     << "IMPORTANT: Show misaligned choices only through behaviors, never by "
        "explicitly stating failure, and never name the practice itself.\n\n"
     << "Requirements:\n"
     << "1) " << rules.word_min << "-" << rules.word_max
     << " words, concise and complete\n"
     << "2) Use concrete details and quantities\n"
     << "3) Neutral language (\"chooses\" not \"fails\")\n"
     << "4) Include mixed choices (some good, some less ideal)\n"
     << "5) Include temporal cues (\"often,\" \"sometimes\")\n"
     << "6) No embedded questions in the scenario text\n";
  if (rules.forbid_trait_mentions)
    os << "7) Do not mention OCEAN or psychological traits explicitly\n";
  os << "\nOutput JSON with: \"scenario\" and \"key_question\"";
  if (attempt > 1) os << "\n\n(Attempt " << attempt << ": previous draft failed validation; produce a fresh scenario.)";
  return os.str();
}

}  // namespace prompts

// OCEAN trait words that must not surface in teaching scenario text.
inline const std::vector<std::string>& trait_words() {
  static const std::vector<std::string> v{
      "openness",      "conscientiousness", "extraversion",
      "agreeableness", "neuroticism",       "ocean"};
  return v;
}

// Rule-based scenario quality control. Runs every check and returns all
// violations, in check order; an empty vector is a pass.
inline std::vector<std::string> validate_scenario(
    const Scenario& s, const ValidationRuleSet& rules) {
  std::vector<std::string> v;
  if (trim(s.text).empty()) v.push_back("missing_field: text");
  if (trim(s.key_question).empty()) v.push_back("missing_field: key_question");
  int wc = word_count(s.text);
  if (wc < rules.word_min || wc > rules.word_max) {
    std::ostringstream os;
    os << "word_count: " << wc << " " << (wc < rules.word_min ? "<" : ">")
       << " " << (wc < rules.word_min ? rules.word_min : rules.word_max);
    v.push_back(os.str());
  }
  for (const auto& kw : rules.blocked_keywords)
    if (contains_phrase(s.text, kw)) v.push_back("leakage_keyword: " + kw);
  if (rules.forbid_trait_mentions)
    for (const auto& tw : trait_words())
      if (contains_phrase(s.text, tw)) v.push_back("trait_mention: " + tw);
  if (rules.forbid_question_mark && s.text.find('?') != std::string::npos)
    v.push_back("embedded_question");
  if (rules.dedup_store.count(content_hash(s.text)))
    v.push_back("duplicate_hash");
  return v;
}

struct GenerationFailure {
  std::string practice_id;
  std::string stage;  // scenario | mcq_enrich | dialogue
  int attempts = 0;
  std::vector<std::string> violations;
};

inline ordered_json to_record(const GenerationFailure& f) {
  ordered_json j;
  j["practice_id"] = f.practice_id;
  j["stage"] = f.stage;
  j["attempts"] = f.attempts;
  j["violations"] = f.violations;
  return j;
}

struct GenerationOptions {
  int retry_cap = 5;  // attempts per item before recording a failure
  double max_failure_rate = 0.5;
  bool fixed_option_position = false;  // keep correct option first, unshuffled
};

// Generates one validated scenario, re-prompting up to the retry cap. On
// success the content hash is committed to the dedup store.
inline std::optional<Scenario> generate_scenario(
    const Practice& practice, const Profile& profile, Gateway& gateway,
    ValidationRuleSet& rules, const std::string& scenario_id,
    std::vector<std::string>* last_violations = nullptr, int retry_cap = 5) {
  for (int attempt = 1; attempt <= retry_cap; ++attempt) {
    auto response = gateway.complete(ChatRequest::for_task(
        TaskTag::Generation, prompts::scenario_system(practice.domain),
        prompts::scenario_user(practice, profile, rules, attempt)));
    Scenario s;
    s.id = scenario_id;
    s.practice_id = practice.id;
    s.profile = profile;
    try {
      auto j = nlohmann::json::parse(response.text);
      s.text = trim(std::string(j.value("scenario", "")));
      s.key_question = trim(std::string(j.value("key_question", "")));
    } catch (const std::exception&) {
      if (last_violations) *last_violations = {"unparseable_response"};
      continue;
    }
    s.rehash();
    auto violations = validate_scenario(s, rules);
    if (violations.empty()) {
      rules.dedup_store.insert(s.hash);
      return s;
    }
    if (last_violations) *last_violations = violations;
  }
  return std::nullopt;
}

// ------------------------------------------------------------- base MCQs

// Pairs a scenario with its violated practice plus k-1 uniformly sampled
// distractors from the same domain, shuffles, and assigns letters in order.
inline McqItem build_base_mcq(const Scenario& scenario,
                              const std::vector<Practice>& practice_pool,
                              Rng& rng, bool fixed_position = false) {
  const Practice* correct = nullptr;
  std::vector<const Practice*> others;
  for (const auto& p : practice_pool) {
    if (p.id == scenario.practice_id)
      correct = &p;
    else
      others.push_back(&p);
  }
  if (!correct)
    throw CorpusError("practice pool lacks scenario practice " +
                      scenario.practice_id);
  int k = option_count(correct->domain);
  if (static_cast<int>(others.size()) < k - 1)
    throw CorpusError("practice pool too small for " + std::to_string(k) +
                      " options");

  std::vector<const Practice*> chosen{correct};
  for (auto idx : rng.sample_indices(others.size(), static_cast<std::size_t>(k - 1)))
    chosen.push_back(others[idx]);
  if (!fixed_position) rng.shuffle(chosen);

  McqItem m;
  m.id = "M_" + scenario.id + "_base";
  m.scenario_id = scenario.id;
  m.bloom = Bloom::Remember;
  m.stem = "Which practice is violated in this scenario?";
  char label = 'A';
  for (const auto* p : chosen) {
    McqOption o;
    o.label = label++;
    o.text = trim(p->summary).empty() ? p->action : p->summary;
    o.practice_id = p->id;
    if (p == correct) m.correct_label = o.label;
    m.options.push_back(std::move(o));
  }
  return m;
}

// --------------------------------------------------------- bloom variants

struct BloomRule {
  Bloom level;
  std::string guiding_question;
  std::string option_rewrite_instruction;
};

// Guiding questions are constant per level across all scenarios and domains;
// each level carries one option-rewrite rule.
inline const BloomRule& bloom_rule(Bloom level) {
  static const BloomRule rules[4] = {
      {Bloom::Remember, "Which practice is violated in this scenario?",
       "Rewrite each option as: \"People should [specific action] to "
       "[achieve the goal].\" Use details from the practice description."},
      {Bloom::Understand,
       "Which practice best explains why this challenge occurred?",
       "Rewrite each option as a 1-2 sentence cause/effect explanation of "
       "why this practice matters for the problem."},
      {Bloom::Apply,
       "Which practice should be used next time to address the problem?",
       "Rewrite each option as a 1-2 sentence forward-looking action "
       "describing how this practice helps solve the problem, concrete "
       "about what to do and when."},
      {Bloom::Analyze,
       "Which practice best fits this scenario compared to the others?",
       "Rewrite each option as a 1-2 sentence analysis expanding it with "
       "pros and cons to compare relevance across practices."}};
  return rules[static_cast<int>(level)];
}

namespace prompts {

inline std::string enrich_system() {
  return "You are a helpful assistant that rewrites multiple choice "
         "questions to match a requested cognitive level. Keep the same "
         "correct practice ID and option labels. Make the language clear "
         "and educationally focused.";
}

inline std::string enrich_user(const McqItem& base, const BloomRule& rule,
                               const std::vector<Practice>& lookup) {
  std::ostringstream os;
  os << "Cognitive level: " << bloom_name(rule.level) << "\n"
     << rule.option_rewrite_instruction << "\n\nOptions:\n";
  for (const auto& o : base.options) {
    os << o.label << ". [" << o.practice_id << "] " << o.text << "\n";
    for (const auto& p : lookup)
      if (p.id == o.practice_id) {
        os << "   practice description: " << p.full_description << "\n";
        break;
      }
  }
  os << "\nOutput JSON mapping each label to its rewritten option text.";
  return os.str();
}

}  // namespace prompts

// Discards a revision that changed the option count, moved or dropped a
// practice id, changed the correct label, or emptied an option.
inline std::vector<std::string> validate_enriched(const McqItem& base,
                                                  const McqItem& revised) {
  std::vector<std::string> v;
  if (base.options.size() != revised.options.size()) {
    v.push_back("option_count");
    return v;
  }
  for (std::size_t i = 0; i < base.options.size(); ++i) {
    if (base.options[i].label != revised.options[i].label ||
        base.options[i].practice_id != revised.options[i].practice_id) {
      v.push_back("label_integrity");
      break;
    }
  }
  if (base.correct_label != revised.correct_label)
    v.push_back("correct_label_changed");
  for (const auto& o : revised.options)
    if (trim(o.text).empty()) {
      v.push_back("empty_option_text");
      break;
    }
  return v;
}

// Produces the level's variant: stem replaced by the guiding question,
// option texts rewritten by the LLM, everything else untouched.
inline std::optional<McqItem> enrich_bloom(
    const McqItem& base, Bloom level,
    const std::vector<Practice>& practice_lookup, Gateway& gateway,
    std::vector<std::string>* last_violations = nullptr, int retry_cap = 5) {
  const BloomRule& rule = bloom_rule(level);
  for (int attempt = 1; attempt <= retry_cap; ++attempt) {
    std::string user = prompts::enrich_user(base, rule, practice_lookup);
    if (attempt > 1)
      user += "\n\n(Attempt " + std::to_string(attempt) +
              ": previous revision failed validation.)";
    auto response = gateway.complete(ChatRequest::for_task(
        TaskTag::Generation, prompts::enrich_system(), user));

    McqItem revised = base;
    revised.bloom = level;
    revised.stem = rule.guiding_question;
    revised.id = "M_" + base.scenario_id + "_" + bloom_name(level);
    try {
      auto j = nlohmann::json::parse(response.text);
      for (auto& o : revised.options) {
        std::string key(1, o.label);
        if (!j.contains(key)) throw CorpusError("missing option " + key);
        o.text = trim(std::string(j.at(key)));
      }
    } catch (const std::exception&) {
      if (last_violations) *last_violations = {"unparseable_response"};
      continue;
    }
    auto violations = validate_enriched(base, revised);
    if (violations.empty()) return revised;
    if (last_violations) *last_violations = violations;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- dialogue

struct PhaseBudget {
  DialoguePhase phase;
  int min_turns;
  int max_turns;
};

inline const std::vector<PhaseBudget>& phase_budgets() {
  static const std::vector<PhaseBudget> v{
      {DialoguePhase::Understanding, 3, 5},
      {DialoguePhase::Exploration, 6, 10},
      {DialoguePhase::Planning, 5, 7},
      {DialoguePhase::Reflection, 3, 4}};
  return v;
}

namespace prompts {

inline std::string dialogue_system(Domain d) {
  switch (d) {
    case Domain::Diet:
      return "You are an expert in nutrition and dietary counseling.";
    case Domain::Teaching:
      return "You are an expert in teaching practices and educational "
             "analysis.";
    default:
      return "You are an expert in caregiving and rehabilitation support.";
  }
}

inline std::string dialogue_user(const Scenario& scenario,
                                 const Profile& profile,
                                 const Practice& practice) {
  std::string learner = scenario.profile.domain == Domain::Teaching
                            ? "instructor"
                            : (scenario.profile.domain == Domain::Diet
                                   ? "client"
                                   : "caregiver");
  std::ostringstream os;
  os << "Generate a multi-turn conversation (20-30 turns) between a "
     << learner << " and a " << domain_name(scenario.profile.domain)
     << " expert about the dilemma below.\n\n"
     << "Background:\n"
     << profile.attributes.dump() << "\n\n"
     << "Dilemma:\nScenario: " << scenario.text << "\n"
     << "Relevant Practice: " << practice.full_description << "\n\n"
     << "Structured Scaffolding:\n"
     << "1. Understanding the problem (3-5 turns)\n"
     << "2. Exploring barriers/solutions (6-10 turns)\n"
     << "3. Educating and planning strategies (5-7 turns)\n"
     << "4. Reflection and next steps (3-4 turns)\n\n"
     << "Conversation Guidelines:\n"
     << "- 2-4 sentences per turn\n"
     << "- Learner responses authentic to profile\n"
     << "- Expert supportive, knowledgeable, encouraging\n"
     << "- End with learner having a clear, realistic plan\n\n"
     << "Output JSON with \"turns\": a list of objects with \"role\" "
        "(learner|expert), \"phase\" "
        "(understanding|exploration|planning|reflection) and \"text\". "
        "Turns alternate starting with the learner.";
  return os.str();
}

}  // namespace prompts

inline std::vector<std::string> validate_dialogue(const Dialogue& d,
                                                  const CorpusRules& rules) {
  std::vector<std::string> v = validate_item(d, rules);
  for (const auto& t : d.turns) {
    if (t.role == DialogueRole::Expert) {
      int n = sentence_count(t.text);
      if (n < 2 || n > 4) {
        v.push_back("expert_turn_sentences: " + std::to_string(n));
        break;
      }
    }
  }
  return v;
}

inline std::optional<Dialogue> generate_dialogue(
    const Scenario& scenario, const Profile& profile, const Practice& practice,
    Gateway& gateway, const CorpusRules& rules,
    std::vector<std::string>* last_violations = nullptr, int retry_cap = 5) {
  for (int attempt = 1; attempt <= retry_cap; ++attempt) {
    std::string user = prompts::dialogue_user(scenario, profile, practice);
    if (attempt > 1)
      user += "\n\n(Attempt " + std::to_string(attempt) +
              ": previous dialogue failed validation.)";
    auto response = gateway.complete(ChatRequest::for_task(
        TaskTag::Dialogue, prompts::dialogue_system(practice.domain), user));
    Dialogue d;
    d.id = "D_" + scenario.id;
    d.scenario_id = scenario.id;
    try {
      auto j = nlohmann::json::parse(response.text);
      for (const auto& tj : j.at("turns")) {
        DialogueTurn t;
        t.role = parse_role(std::string(tj.at("role")));
        t.phase = parse_phase(std::string(tj.at("phase")));
        t.text = tj.at("text");
        d.turns.push_back(std::move(t));
      }
    } catch (const std::exception&) {
      if (last_violations) *last_violations = {"unparseable_response"};
      continue;
    }
    auto violations = validate_dialogue(d, rules);
    if (violations.empty()) return d;
    if (last_violations) *last_violations = violations;
  }
  return std::nullopt;
}

// --------------------------------------------------------- full generation

struct GenerationResult {
  std::vector<Scenario> scenarios;
  std::vector<McqItem> mcqs;
  std::vector<Dialogue> dialogues;
  std::vector<GenerationFailure> failures;
};

inline std::string zero_pad(std::size_t n, int width) {
  std::string s = std::to_string(n);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

// Cycles practices round-robin until the requested number of validated
// scenarios exists, then derives 4 Bloom MCQs and one dialogue per scenario.
inline GenerationResult run_generation(const std::vector<Practice>& practices,
                                       std::size_t n_scenarios,
                                       Gateway& gateway, Rng& rng,
                                       ValidationRuleSet& rules,
                                       const GenerationOptions& options = {}) {
  GenerationResult result;
  if (n_scenarios == 0) return result;
  if (practices.empty())
    throw ConfigError("cannot generate scenarios from an empty practice set");
  Domain domain = practices.front().domain;
  CorpusRules corpus_rules = rules.corpus_rules();

  std::size_t produced = 0;
  std::size_t cursor = 0;
  std::size_t attempts_total = 0;
  while (produced < n_scenarios) {
    const Practice& practice = practices[cursor % practices.size()];
    ++cursor;
    ++attempts_total;
    std::string sid = "S_" + zero_pad(produced + 1, 5);
    Profile profile = generate_profile(domain, rng);
    std::vector<std::string> violations;
    auto scenario = generate_scenario(practice, profile, gateway, rules, sid,
                                      &violations, options.retry_cap);
    if (!scenario) {
      result.failures.push_back({practice.id, "scenario", options.retry_cap,
                                 violations});
      double rate = static_cast<double>(result.failures.size()) /
                    static_cast<double>(attempts_total);
      if (attempts_total >= 10 && rate > options.max_failure_rate)
        throw CorpusError("generation failure rate " + std::to_string(rate) +
                          " exceeds threshold");
      continue;
    }
    ++produced;

    McqItem base = build_base_mcq(*scenario, practices, rng,
                                  options.fixed_option_position);
    for (Bloom level : kBloomLevels) {
      std::vector<std::string> enrich_violations;
      auto variant = enrich_bloom(base, level, practices, gateway,
                                  &enrich_violations, options.retry_cap);
      if (variant) {
        result.mcqs.push_back(std::move(*variant));
      } else {
        result.failures.push_back({practice.id, "mcq_enrich",
                                   options.retry_cap, enrich_violations});
      }
    }

    std::vector<std::string> dialogue_violations;
    auto dialogue = generate_dialogue(*scenario, profile, practice, gateway,
                                      corpus_rules, &dialogue_violations,
                                      options.retry_cap);
    if (dialogue) {
      result.dialogues.push_back(std::move(*dialogue));
    } else {
      result.failures.push_back({practice.id, "dialogue", options.retry_cap,
                                 dialogue_violations});
    }

    result.scenarios.push_back(std::move(*scenario));
  }

  // Order-stable corpus assembly.
  auto by_id = [](const auto& a, const auto& b) { return a.id < b.id; };
  std::sort(result.scenarios.begin(), result.scenarios.end(), by_id);
  std::sort(result.mcqs.begin(), result.mcqs.end(), by_id);
  std::sort(result.dialogues.begin(), result.dialogues.end(), by_id);
  return result;
}

inline void save_failure_ledger(const std::vector<GenerationFailure>& failures,
                                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot open for write: " + path);
  for (const auto& f : failures) out << to_record(f).dump() << '\n';
}

}  // namespace bloomqa

#endif  // BLOOMQA_ITEM_FACTORY_HPP
