#ifndef BLOOMQA_EXTRACTION_HPP
#define BLOOMQA_EXTRACTION_HPP

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bloomqa/corpus.hpp"
#include "bloomqa/gateway.hpp"
#include "bloomqa/text.hpp"

namespace bloomqa {

struct ExtractionError : std::runtime_error {
  ExtractionError(const std::string& stage, int chunk_index,
                  const std::string& what)
      : std::runtime_error("extraction failed at stage '" + stage +
                           "', chunk " + std::to_string(chunk_index) + ": " +
                           what),
        stage(stage),
        chunk_index(chunk_index) {}
  std::string stage;
  int chunk_index;
};

struct ParagraphChunk {
  int index = 0;
  std::string text;
};

// Split on blank-line boundaries; consecutive blank lines collapse.
inline std::vector<ParagraphChunk> split_paragraphs(const std::string& raw) {
  std::vector<ParagraphChunk> chunks;
  std::istringstream in(raw);
  std::string line;
  std::string current;
  auto flush = [&]() {
    std::string t = trim(current);
    if (!t.empty())
      chunks.push_back({static_cast<int>(chunks.size()), t});
    current.clear();
  };
  while (std::getline(in, line)) {
    if (trim(line).empty()) {
      flush();
    } else {
      if (!current.empty()) current += '\n';
      current += line;
    }
  }
  flush();
  return chunks;
}

// ----------------------------------------------------------------- prompts

namespace prompts {

inline std::string filter_system() {
  return "You review guideline text for concrete, actionable practices.";
}

inline std::string filter_user(const ParagraphChunk& chunk) {
  return "Decide whether the paragraph below describes at least one concrete, "
         "actionable practice a person could follow. If it does not, reply "
         "with exactly SKIP. If it does, reply with ACTIONABLE: followed by a "
         "short tag.\n\nParagraph:\n" +
         chunk.text;
}

inline std::string structure_system() {
  return "You convert guideline paragraphs into structured practice records.";
}

inline std::string structure_user(const std::string& text) {
  return "Extract the practice described below into five fields. Output JSON "
         "with keys \"goal\", \"context\", \"action\", \"timing\", "
         "\"person\". Use an empty string for any field the text does not "
         "specify.\n\nText:\n" +
         text;
}

inline std::string multiplicity_system() {
  return "You detect whether a structured practice bundles several distinct "
         "practices.";
}

inline std::string multiplicity_user(const Practice& p) {
  return "Does the following practice combine more than one distinct "
         "practice? Reply NO if it is a single atomic practice. Otherwise "
         "reply YES on the first line, followed by one numbered line per "
         "distinct practice, each a self-contained description.\n\n"
         "Practice:\n" +
         p.full_description;
}

inline std::string summary_system() {
  return "You summarize structured practices.";
}

inline std::string summary_user(const Practice& p) {
  return "Summarize the following practice in one sentence.\n\nGoal: " +
         p.goal + "\nContext: " + p.context + "\nAction: " + p.action +
         "\nTiming: " + p.timing + "\nPerson: " + p.person;
}

}  // namespace prompts

// ----------------------------------------------------------- llm-backed ops

// True iff the filter response is not the SKIP sentinel (case-insensitive,
// trimmed exact match).
inline bool filter_actionable(const ParagraphChunk& chunk, Gateway& gateway) {
  auto response = gateway.complete(ChatRequest::for_task(
      TaskTag::Generation, prompts::filter_system(),
      prompts::filter_user(chunk)));
  return to_lower(trim(response.text)) != "skip";
}

inline Practice structure_practice(const ParagraphChunk& chunk,
                                   Gateway& gateway) {
  auto response = gateway.complete(ChatRequest::for_task(
      TaskTag::Generation, prompts::structure_system(),
      prompts::structure_user(chunk.text)));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(response.text);
  } catch (const std::exception& e) {
    throw ExtractionError("structure", chunk.index, e.what());
  }
  Practice p;
  p.goal = j.value("goal", "");
  p.context = j.value("context", "");
  p.action = j.value("action", "");
  p.timing = j.value("timing", "");
  p.person = j.value("person", "");
  p.full_description = chunk.text;
  return p;
}

// Probe for bundled practices. A multi-practice paragraph is replaced by its
// re-structured splits (ids suffixed); an atomic one passes through.
inline std::vector<Practice> split_multi(const Practice& practice,
                                         Gateway& gateway) {
  auto response = gateway.complete(ChatRequest::for_task(
      TaskTag::Generation, prompts::multiplicity_system(),
      prompts::multiplicity_user(practice)));
  std::istringstream in(response.text);
  std::string first;
  std::getline(in, first);
  if (to_lower(trim(first)) != "yes") return {practice};

  std::vector<std::string> parts;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    // Strip a leading "N." / "N)" marker.
    std::size_t i = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
    if (i > 0 && i < t.size() && (t[i] == '.' || t[i] == ')'))
      t = trim(t.substr(i + 1));
    if (!t.empty()) parts.push_back(t);
  }
  if (parts.size() < 2) return {practice};

  std::vector<Practice> out;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    ParagraphChunk chunk{0, parts[k]};
    Practice child = structure_practice(chunk, gateway);
    child.id = practice.id + "_" + std::to_string(k + 1);
    child.domain = practice.domain;
    child.domain_other = practice.domain_other;
    out.push_back(std::move(child));
  }
  return out;
}

inline std::string generate_summary(const Practice& p, Gateway& gateway) {
  return trim(gateway
                  .complete(ChatRequest::for_task(TaskTag::Generation,
                                                  prompts::summary_system(),
                                                  prompts::summary_user(p)))
                  .text);
}

// ------------------------------------------------------- deterministic ops

inline int clarity_score(const Practice& p) { return p.clarity(); }

// Shared-field count between two practices: 5W fields whose normalized text
// matches. Empty fields never count as shared.
inline int shared_field_count(const Practice& a, const Practice& b) {
  auto fa = a.five_w();
  auto fb = b.five_w();
  int n = 0;
  for (std::size_t i = 0; i < fa.size(); ++i) {
    std::string na = normalize_text(fa[i]);
    if (!na.empty() && na == normalize_text(fb[i])) ++n;
  }
  return n;
}

// Max shared-field count against every other practice in the corpus.
inline int similarity_score(const Practice& p,
                            const std::vector<Practice>& corpus) {
  int best = 0;
  for (const auto& other : corpus) best = std::max(best, shared_field_count(p, other));
  return best;
}

inline bool keep_decision(int clarity, int similarity) {
  return clarity >= 4 && similarity <= 2;
}

// ------------------------------------------------------------- review list

// Expert review is modeled as an allow/deny list: one "<id> allow|deny"
// per line. Deny removes the practice after extraction.
inline std::vector<Practice> apply_review_list(std::vector<Practice> practices,
                                               const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open review list: " + path);
  std::map<std::string, std::string> verdicts;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string id, verdict;
    if (ls >> id >> verdict) verdicts[id] = to_lower(verdict);
  }
  std::vector<Practice> out;
  for (auto& p : practices) {
    auto it = verdicts.find(p.id);
    if (it != verdicts.end() && it->second == "deny") continue;
    out.push_back(std::move(p));
  }
  return out;
}

// -------------------------------------------------------------- full stage

struct ExtractionConfig {
  Domain domain = Domain::Other;
  std::string id_prefix = "P";
  bool generate_summaries = true;
};

struct ExtractionResult {
  std::vector<Practice> practices;
  // Grouping metadata: goal text -> practice ids, in first-seen goal order.
  std::vector<std::pair<std::string, std::vector<std::string>>> by_goal;
};

inline ExtractionResult extract_practices(const std::string& raw_text,
                                          Gateway& gateway,
                                          const ExtractionConfig& config) {
  auto chunks = split_paragraphs(raw_text);

  std::vector<Practice> structured;
  for (const auto& chunk : chunks) {
    if (!filter_actionable(chunk, gateway)) continue;
    Practice p = structure_practice(chunk, gateway);
    p.id = config.id_prefix + "_" +
           (chunk.index < 9 ? "0" : "") + std::to_string(chunk.index + 1);
    p.domain = config.domain;
    for (auto& child : split_multi(p, gateway))
      structured.push_back(std::move(child));
  }

  // Keep-rule pass in corpus order; similarity is taken against the
  // already-kept set so the earlier practice wins ties.
  std::vector<Practice> kept;
  for (auto& p : structured) {
    if (keep_decision(clarity_score(p), similarity_score(p, kept)))
      kept.push_back(std::move(p));
  }

  ExtractionResult result;
  for (auto& p : kept) {
    if (config.generate_summaries && trim(p.summary).empty())
      p.summary = generate_summary(p, gateway);
    bool found = false;
    for (auto& [goal, ids] : result.by_goal) {
      if (normalize_text(goal) == normalize_text(p.goal)) {
        ids.push_back(p.id);
        found = true;
        break;
      }
    }
    if (!found) result.by_goal.push_back({p.goal, {p.id}});
    result.practices.push_back(std::move(p));
  }
  return result;
}

inline void save_goal_groups(const ExtractionResult& result,
                             const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot open for write: " + path);
  for (const auto& [goal, ids] : result.by_goal) {
    ordered_json j;
    j["goal"] = goal;
    j["practice_ids"] = ids;
    out << j.dump() << '\n';
  }
}

}  // namespace bloomqa

#endif  // BLOOMQA_EXTRACTION_HPP
