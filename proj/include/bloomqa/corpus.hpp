#ifndef BLOOMQA_CORPUS_HPP
#define BLOOMQA_CORPUS_HPP

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bloomqa/text.hpp"

namespace bloomqa {

using ordered_json = nlohmann::ordered_json;

struct CorpusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- domains

enum class Domain { Teaching, Diet, Caregiving, Other };

inline std::string domain_name(Domain d) {
  switch (d) {
    case Domain::Teaching: return "teaching";
    case Domain::Diet: return "diet";
    case Domain::Caregiving: return "caregiving";
    default: return "other";
  }
}

inline Domain parse_domain(std::string_view s) {
  if (s == "teaching") return Domain::Teaching;
  if (s == "diet") return Domain::Diet;
  if (s == "caregiving") return Domain::Caregiving;
  return Domain::Other;
}

// MCQ option count per domain. Diet uses four options; Teaching and
// Caregiving use five.
inline int option_count(Domain d) { return d == Domain::Diet ? 4 : 5; }

inline double chance_level(Domain d) { return 1.0 / option_count(d); }

// ------------------------------------------------------------------ bloom

enum class Bloom { Remember, Understand, Apply, Analyze };

inline constexpr Bloom kBloomLevels[] = {Bloom::Remember, Bloom::Understand,
                                         Bloom::Apply, Bloom::Analyze};

inline std::string bloom_name(Bloom b) {
  switch (b) {
    case Bloom::Remember: return "Remember";
    case Bloom::Understand: return "Understand";
    case Bloom::Apply: return "Apply";
    default: return "Analyze";
  }
}

inline Bloom parse_bloom(std::string_view s) {
  if (s == "Remember") return Bloom::Remember;
  if (s == "Understand") return Bloom::Understand;
  if (s == "Apply") return Bloom::Apply;
  if (s == "Analyze") return Bloom::Analyze;
  throw CorpusError("unknown bloom level: " + std::string(s));
}

// --------------------------------------------------------------- practice

struct Practice {
  std::string id;
  Domain domain = Domain::Other;
  std::string domain_other;  // name when domain == Other
  std::string goal;
  std::string context;
  std::string action;
  std::string timing;
  std::string person;
  std::string full_description;
  std::string summary;

  std::vector<std::string> five_w() const {
    return {goal, context, action, timing, person};
  }

  // Count of non-empty-after-trim 5W fields, 0..5.
  int clarity() const {
    int n = 0;
    for (const auto& f : five_w())
      if (!trim(f).empty()) ++n;
    return n;
  }

  bool operator==(const Practice&) const = default;
};

// ---------------------------------------------------------------- profile

struct Profile {
  Domain domain = Domain::Other;
  ordered_json attributes = ordered_json::object();

  bool operator==(const Profile& o) const {
    return domain == o.domain && attributes == o.attributes;
  }
};

inline std::vector<std::string> profile_required_fields(Domain d) {
  switch (d) {
    case Domain::Diet:
      return {"age", "sex", "health_condition", "primary_goal",
              "cooking_habits", "food_avoidance", "traits"};
    case Domain::Teaching:
      return {"instructor_name", "discipline", "class_size", "format",
              "years_experience", "ocean_scores", "narrative_summary"};
    case Domain::Caregiving:
      return {"caregiver_name", "relationship", "patient_condition",
              "living_situation", "primary_goal", "traits"};
    default:
      return {};
  }
}

inline std::vector<std::string> validate_profile(const Profile& p) {
  std::vector<std::string> v;
  for (const auto& f : profile_required_fields(p.domain))
    if (!p.attributes.contains(f)) v.push_back("missing_field: " + f);
  if ((p.domain == Domain::Diet || p.domain == Domain::Caregiving) &&
      p.attributes.contains("traits") && p.attributes["traits"].size() != 2)
    v.push_back("traits_count: expected 2");
  if (p.domain == Domain::Teaching && p.attributes.contains("ocean_scores") &&
      p.attributes["ocean_scores"].size() != 5)
    v.push_back("ocean_scores_count: expected 5");
  return v;
}

// --------------------------------------------------------------- scenario

struct Scenario {
  std::string id;
  std::string practice_id;
  Profile profile;
  std::string text;
  std::string key_question;
  std::string hash;  // content_hash of normalized text

  void rehash() { hash = content_hash(text); }

  bool operator==(const Scenario&) const = default;
};

// -------------------------------------------------------------------- mcq

struct McqOption {
  char label = 'A';
  std::string text;
  std::string practice_id;

  bool operator==(const McqOption&) const = default;
};

struct McqItem {
  std::string id;
  std::string scenario_id;
  Bloom bloom = Bloom::Remember;
  std::string stem;
  std::vector<McqOption> options;
  char correct_label = 'A';

  const McqOption* correct_option() const {
    for (const auto& o : options)
      if (o.label == correct_label) return &o;
    return nullptr;
  }

  bool operator==(const McqItem&) const = default;
};

// --------------------------------------------------------------- dialogue

enum class DialogueRole { Learner, Expert };
enum class DialoguePhase { Understanding, Exploration, Planning, Reflection };

inline std::string role_name(DialogueRole r) {
  return r == DialogueRole::Learner ? "learner" : "expert";
}
inline DialogueRole parse_role(std::string_view s) {
  if (s == "learner") return DialogueRole::Learner;
  if (s == "expert") return DialogueRole::Expert;
  throw CorpusError("unknown dialogue role: " + std::string(s));
}

inline std::string phase_name(DialoguePhase p) {
  switch (p) {
    case DialoguePhase::Understanding: return "understanding";
    case DialoguePhase::Exploration: return "exploration";
    case DialoguePhase::Planning: return "planning";
    default: return "reflection";
  }
}
inline DialoguePhase parse_phase(std::string_view s) {
  if (s == "understanding") return DialoguePhase::Understanding;
  if (s == "exploration") return DialoguePhase::Exploration;
  if (s == "planning") return DialoguePhase::Planning;
  if (s == "reflection") return DialoguePhase::Reflection;
  throw CorpusError("unknown dialogue phase: " + std::string(s));
}

struct DialogueTurn {
  DialogueRole role = DialogueRole::Learner;
  DialoguePhase phase = DialoguePhase::Understanding;
  std::string text;

  bool operator==(const DialogueTurn&) const = default;
};

struct Dialogue {
  std::string id;
  std::string scenario_id;
  std::vector<DialogueTurn> turns;

  bool operator==(const Dialogue&) const = default;
};

// ------------------------------------------------------------------ trial

struct TrialRecord {
  std::string model_id;
  std::string mcq_id;
  std::string practice_id;
  Bloom bloom = Bloom::Remember;
  Domain domain = Domain::Other;
  std::optional<char> chosen_label;
  bool correct = false;
  std::string raw_response;

  bool operator==(const TrialRecord&) const = default;
};

// ------------------------------------------------------- item validation

struct CorpusRules {
  int word_min = 50;
  int word_max = 100;
  int dialogue_turns_min = 20;
  int dialogue_turns_max = 30;
};

inline CorpusRules default_rules(Domain d) {
  CorpusRules r;
  if (d == Domain::Teaching) {
    r.word_min = 40;
    r.word_max = 120;
  }
  return r;
}

inline std::vector<std::string> validate_item(const Practice& p,
                                              const CorpusRules&) {
  std::vector<std::string> v;
  if (trim(p.id).empty()) v.push_back("missing_id");
  if (trim(p.full_description).empty()) v.push_back("missing_full_description");
  return v;
}

inline std::vector<std::string> validate_item(const Scenario& s,
                                              const CorpusRules& r) {
  std::vector<std::string> v;
  if (trim(s.id).empty()) v.push_back("missing_id");
  if (trim(s.practice_id).empty()) v.push_back("missing_practice_id");
  int wc = word_count(s.text);
  if (wc < r.word_min || wc > r.word_max) {
    std::ostringstream os;
    os << "word_count: " << wc << " outside " << r.word_min << "-" << r.word_max;
    v.push_back(os.str());
  }
  if (s.text.find('?') != std::string::npos) v.push_back("embedded_question");
  if (s.hash != content_hash(s.text)) v.push_back("hash_mismatch");
  for (const auto& pv : validate_profile(s.profile)) v.push_back("profile_" + pv);
  return v;
}

inline std::vector<std::string> validate_item(const McqItem& m,
                                              const CorpusRules&) {
  std::vector<std::string> v;
  if (trim(m.id).empty()) v.push_back("missing_id");
  std::set<std::string> pids;
  int correct_hits = 0;
  char expected = 'A';
  for (const auto& o : m.options) {
    if (o.label != expected) v.push_back("label_order");
    ++expected;
    if (!pids.insert(o.practice_id).second) v.push_back("duplicate_option_practice");
    if (o.label == m.correct_label) ++correct_hits;
    if (trim(o.text).empty()) v.push_back("empty_option_text");
  }
  if (correct_hits != 1) v.push_back("correct_label_missing");
  return v;
}

inline std::vector<std::string> validate_item(const Dialogue& d,
                                              const CorpusRules& r) {
  std::vector<std::string> v;
  if (trim(d.id).empty()) v.push_back("missing_id");
  int n = static_cast<int>(d.turns.size());
  if (n < r.dialogue_turns_min || n > r.dialogue_turns_max) {
    std::ostringstream os;
    os << "turn_count: " << n << " outside " << r.dialogue_turns_min << "-"
       << r.dialogue_turns_max;
    v.push_back(os.str());
  }
  DialogueRole want = DialogueRole::Learner;
  for (const auto& t : d.turns) {
    if (t.role != want) {
      v.push_back("role_alternation");
      break;
    }
    want = want == DialogueRole::Learner ? DialogueRole::Expert
                                         : DialogueRole::Learner;
  }
  // Phases must appear in fixed order, each non-empty.
  int last = -1;
  int seen[4] = {0, 0, 0, 0};
  bool order_ok = true;
  for (const auto& t : d.turns) {
    int ph = static_cast<int>(t.phase);
    if (ph < last) order_ok = false;
    last = std::max(last, ph);
    ++seen[ph];
  }
  if (!order_ok) v.push_back("phase_order");
  for (int i = 0; i < 4; ++i)
    if (seen[i] == 0) v.push_back("phase_empty: " + phase_name(static_cast<DialoguePhase>(i)));
  return v;
}

inline std::vector<std::string> validate_item(const TrialRecord& t,
                                              const CorpusRules&) {
  std::vector<std::string> v;
  if (trim(t.model_id).empty()) v.push_back("missing_model_id");
  if (trim(t.mcq_id).empty()) v.push_back("missing_mcq_id");
  if (!t.chosen_label.has_value() && t.correct) v.push_back("null_choice_marked_correct");
  return v;
}

// --------------------------------------------------------- serialization

inline ordered_json to_record(const Practice& p) {
  ordered_json j;
  j["id"] = p.id;
  j["domain"] = p.domain == Domain::Other ? p.domain_other : domain_name(p.domain);
  j["goal"] = p.goal;
  j["context"] = p.context;
  j["action"] = p.action;
  j["timing"] = p.timing;
  j["person"] = p.person;
  j["full_description"] = p.full_description;
  j["summary"] = p.summary;
  return j;
}

inline ordered_json to_record(const Profile& p) {
  ordered_json j;
  j["domain"] = domain_name(p.domain);
  j["attributes"] = p.attributes;
  return j;
}

inline ordered_json to_record(const Scenario& s) {
  ordered_json j;
  j["id"] = s.id;
  j["practice_id"] = s.practice_id;
  j["profile"] = to_record(s.profile);
  j["text"] = s.text;
  j["key_question"] = s.key_question;
  j["content_hash"] = s.hash;
  return j;
}

inline ordered_json to_record(const McqItem& m) {
  ordered_json j;
  j["id"] = m.id;
  j["scenario_id"] = m.scenario_id;
  j["bloom"] = bloom_name(m.bloom);
  j["stem"] = m.stem;
  ordered_json opts = ordered_json::array();
  for (const auto& o : m.options) {
    ordered_json oj;
    oj["label"] = std::string(1, o.label);
    oj["text"] = o.text;
    oj["practice_id"] = o.practice_id;
    opts.push_back(oj);
  }
  j["options"] = opts;
  j["correct_label"] = std::string(1, m.correct_label);
  return j;
}

inline ordered_json to_record(const Dialogue& d) {
  ordered_json j;
  j["id"] = d.id;
  j["scenario_id"] = d.scenario_id;
  ordered_json turns = ordered_json::array();
  for (const auto& t : d.turns) {
    ordered_json tj;
    tj["role"] = role_name(t.role);
    tj["phase"] = phase_name(t.phase);
    tj["text"] = t.text;
    turns.push_back(tj);
  }
  j["turns"] = turns;
  return j;
}

inline ordered_json to_record(const TrialRecord& t) {
  ordered_json j;
  j["model_id"] = t.model_id;
  j["mcq_id"] = t.mcq_id;
  j["practice_id"] = t.practice_id;
  j["bloom"] = bloom_name(t.bloom);
  j["domain"] = domain_name(t.domain);
  if (t.chosen_label.has_value())
    j["chosen_label"] = std::string(1, *t.chosen_label);
  else
    j["chosen_label"] = nullptr;
  j["correct"] = t.correct;
  j["raw_response"] = t.raw_response;
  return j;
}

inline void from_record(const ordered_json& j, Practice& p) {
  p.id = j.at("id");
  std::string d = j.at("domain");
  p.domain = parse_domain(d);
  p.domain_other = p.domain == Domain::Other ? d : "";
  p.goal = j.at("goal");
  p.context = j.at("context");
  p.action = j.at("action");
  p.timing = j.at("timing");
  p.person = j.at("person");
  p.full_description = j.at("full_description");
  p.summary = j.value("summary", "");
}

inline void from_record(const ordered_json& j, Profile& p) {
  p.domain = parse_domain(std::string(j.at("domain")));
  p.attributes = j.at("attributes");
}

inline void from_record(const ordered_json& j, Scenario& s) {
  s.id = j.at("id");
  s.practice_id = j.at("practice_id");
  from_record(j.at("profile"), s.profile);
  s.text = j.at("text");
  s.key_question = j.at("key_question");
  s.hash = j.at("content_hash");
}

inline void from_record(const ordered_json& j, McqItem& m) {
  m.id = j.at("id");
  m.scenario_id = j.at("scenario_id");
  m.bloom = parse_bloom(std::string(j.at("bloom")));
  m.stem = j.at("stem");
  m.options.clear();
  for (const auto& oj : j.at("options")) {
    McqOption o;
    o.label = std::string(oj.at("label"))[0];
    o.text = oj.at("text");
    o.practice_id = oj.at("practice_id");
    m.options.push_back(o);
  }
  m.correct_label = std::string(j.at("correct_label"))[0];
}

inline void from_record(const ordered_json& j, Dialogue& d) {
  d.id = j.at("id");
  d.scenario_id = j.at("scenario_id");
  d.turns.clear();
  for (const auto& tj : j.at("turns")) {
    DialogueTurn t;
    t.role = parse_role(std::string(tj.at("role")));
    t.phase = parse_phase(std::string(tj.at("phase")));
    t.text = tj.at("text");
    d.turns.push_back(t);
  }
}

inline void from_record(const ordered_json& j, TrialRecord& t) {
  t.model_id = j.at("model_id");
  t.mcq_id = j.at("mcq_id");
  t.practice_id = j.at("practice_id");
  t.bloom = parse_bloom(std::string(j.at("bloom")));
  t.domain = parse_domain(std::string(j.at("domain")));
  if (j.at("chosen_label").is_null())
    t.chosen_label.reset();
  else
    t.chosen_label = std::string(j.at("chosen_label"))[0];
  t.correct = j.at("correct");
  t.raw_response = j.at("raw_response");
}

// ------------------------------------------------------------- uniqueness

inline std::string record_id(const Practice& p) { return p.id; }
inline std::string record_id(const Scenario& s) { return s.id; }
inline std::string record_id(const McqItem& m) { return m.id; }
inline std::string record_id(const Dialogue& d) { return d.id; }
inline std::string record_id(const TrialRecord& t) {
  return t.model_id + "/" + t.mcq_id;
}

inline std::string dedup_key(const Scenario& s) { return s.hash; }
template <typename T>
inline std::string dedup_key(const T&) { return ""; }

// -------------------------------------------------------------- save/load

// One canonical-form record per line, UTF-8, LF terminators. Field order is
// fixed by to_record so identical inputs produce byte-identical files.
template <typename T>
void save_corpus(const std::vector<T>& items, const std::string& path,
                 const CorpusRules& rules = CorpusRules{}) {
  std::set<std::string> ids;
  std::set<std::string> hashes;
  for (const auto& item : items) {
    auto violations = validate_item(item, rules);
    if (!violations.empty())
      throw CorpusError("invariant violation for '" + record_id(item) +
                        "': " + violations.front());
    if (!ids.insert(record_id(item)).second)
      throw CorpusError("duplicate id: " + record_id(item));
    std::string key = dedup_key(item);
    if (!key.empty() && !hashes.insert(key).second)
      throw CorpusError("duplicate content hash for '" + record_id(item) + "'");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot open for write: " + path);
  for (const auto& item : items) out << to_record(item).dump() << '\n';
}

template <typename T>
std::vector<T> load_corpus(const std::string& path,
                           const CorpusRules& rules = CorpusRules{}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open: " + path);
  std::vector<T> items;
  std::set<std::string> ids;
  std::set<std::string> hashes;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw CorpusError(path + ":" + std::to_string(lineno) +
                        ": malformed record: " + e.what());
    }
    T item;
    try {
      from_record(j, item);
    } catch (const std::exception& e) {
      throw CorpusError(path + ":" + std::to_string(lineno) +
                        ": malformed record: " + e.what());
    }
    auto violations = validate_item(item, rules);
    if (!violations.empty())
      throw CorpusError("invariant violation for '" + record_id(item) +
                        "': " + violations.front());
    if (!ids.insert(record_id(item)).second)
      throw CorpusError("duplicate id: " + record_id(item));
    std::string key = dedup_key(item);
    if (!key.empty() && !hashes.insert(key).second)
      throw CorpusError("duplicate content hash for '" + record_id(item) + "'");
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace bloomqa

#endif  // BLOOMQA_CORPUS_HPP
