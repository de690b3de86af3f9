#include <doctest.h>

#include <cctype>
#include <sstream>

#include "bloomqa/exam.hpp"
#include "bloomqa/item_factory.hpp"

using namespace bloomqa;

namespace {

// Reference implementation of the answer parser: split into maximal
// alphanumeric runs and return the first run that is a single in-range
// letter.
std::optional<char> parse_answer_oracle(const std::string& raw, int k) {
  std::vector<std::string> tokens;
  std::string token;
  for (char c : raw) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      token += c;
    } else if (!token.empty()) {
      tokens.push_back(token);
      token.clear();
    }
  }
  if (!token.empty()) tokens.push_back(token);
  for (const auto& t : tokens) {
    if (t.size() != 1 || !std::isalpha(static_cast<unsigned char>(t[0])))
      continue;
    char u = static_cast<char>(std::toupper(static_cast<unsigned char>(t[0])));
    if (u >= 'A' && u < 'A' + k) return u;
  }
  return std::nullopt;
}

std::vector<McqItem> tiny_corpus(int n_scenarios) {
  std::vector<McqItem> mcqs;
  for (int s = 0; s < n_scenarios; ++s) {
    std::string sid = "S_" + zero_pad(static_cast<std::size_t>(s) + 1, 5);
    for (Bloom b : kBloomLevels) {
      McqItem m;
      m.id = "M_" + sid + "_" + bloom_name(b);
      m.scenario_id = sid;
      m.bloom = b;
      m.stem = bloom_rule(b).guiding_question;
      m.options = {{'A', "alpha", "P_1"},
                   {'B', "beta", "P_2"},
                   {'C', "gamma", "P_3"},
                   {'D', "delta", "P_4"}};
      m.correct_label = 'B';
      mcqs.push_back(std::move(m));
    }
  }
  return mcqs;
}

std::vector<Scenario> tiny_scenarios(int n) {
  std::vector<Scenario> out;
  for (int s = 0; s < n; ++s) {
    Scenario sc;
    sc.id = "S_" + zero_pad(static_cast<std::size_t>(s) + 1, 5);
    sc.practice_id = "P_2";
    sc.profile.domain = Domain::Diet;
    sc.text = "Scenario body " + std::to_string(s) + ".";
    sc.key_question = "Which habit drifts";
    sc.rehash();
    out.push_back(std::move(sc));
  }
  return out;
}

class FixedAnswerTransport : public Transport {
public:
  explicit FixedAnswerTransport(std::string answer)
      : answer_(std::move(answer)) {}
  std::string send(const ChatRequest& request, const std::string&) override {
    if (request.user_prompt.find(fail_marker) != std::string::npos)
      throw GatewayError("upstream 500");
    return answer_;
  }
  std::string fail_marker = "\x01never";

private:
  std::string answer_;
};

}  // namespace

TEST_CASE("parse_answer accepts letters with decoration, rejects noise") {
  CHECK(parse_answer("B", 4) == 'B');
  CHECK(parse_answer("b", 4) == 'B');
  CHECK(parse_answer("  C. ", 4) == 'C');
  CHECK(parse_answer("(A)", 4) == 'A');
  CHECK(parse_answer("The answer is D.", 4) == 'D');
  CHECK(parse_answer("I pick b because it fits", 4) == 'B');
  CHECK_FALSE(parse_answer("E", 4).has_value());   // out of range for 4 options
  CHECK(parse_answer("E", 5) == 'E');
  CHECK_FALSE(parse_answer("maybe", 4).has_value());
  CHECK_FALSE(parse_answer("", 4).has_value());
  CHECK_FALSE(parse_answer("AB", 4).has_value());
}

TEST_CASE("parse_answer agrees with the token-scan oracle on random strings") {
  Rng rng(99);
  const std::string alphabet = "ABCDEF abcdef ().,:irstu\n";
  for (int i = 0; i < 500; ++i) {
    std::string s;
    auto len = rng.next_below(30);
    for (std::uint64_t j = 0; j < len; ++j)
      s += alphabet[static_cast<std::size_t>(rng.next_below(alphabet.size()))];
    int k = 4 + static_cast<int>(rng.next_below(2));
    CHECK(parse_answer(s, k) == parse_answer_oracle(s, k));
  }
}

TEST_CASE("sample_exam keeps complete scenarios only and balances Bloom levels") {
  auto corpus = tiny_corpus(10);
  corpus.erase(corpus.begin());  // S_00001 loses its Remember variant
  Rng rng(4);
  auto plan = sample_exam(corpus, 5, rng);
  CHECK(plan.scenario_ids.size() == 5);
  CHECK(plan.mcq_ids.size() == 20);
  for (const auto& sid : plan.scenario_ids) CHECK(sid != "S_00001");
  std::map<Bloom, int> mix;
  for (const auto& mid : plan.mcq_ids) {
    auto pos = mid.find_last_of('_');
    mix[parse_bloom(mid.substr(pos + 1))]++;
  }
  for (Bloom b : kBloomLevels) CHECK(mix[b] == 5);
  CHECK(std::is_sorted(plan.mcq_ids.begin(), plan.mcq_ids.end()));

  Rng rng2(4);
  CHECK_THROWS_AS(sample_exam(corpus, 10, rng2), CorpusError);
}

TEST_CASE("administer scores answers against the correct label") {
  auto mcqs = tiny_corpus(3);
  auto scenarios = tiny_scenarios(3);
  Rng rng(8);
  auto plan = sample_exam(mcqs, 3, rng);
  plan.model_ids = {"model-a", "model-b"};

  FixedAnswerTransport transport("B.");
  GatewayOptions options;
  options.sleep_on_retry = false;
  Gateway gateway(transport, options);
  auto trials = administer(plan, mcqs, scenarios, gateway, Domain::Diet);
  REQUIRE(trials.size() == 24);
  for (const auto& t : trials) {
    CHECK(t.chosen_label == 'B');
    CHECK(t.correct);
    CHECK(t.raw_response == "B.");
    CHECK(t.domain == Domain::Diet);
    CHECK(t.practice_id == "P_2");
  }

  // Identical item multisets per model.
  std::multiset<std::string> a, b;
  for (const auto& t : trials)
    (t.model_id == "model-a" ? a : b).insert(t.mcq_id);
  CHECK(a == b);
}

TEST_CASE("gateway failures yield null-choice trials, never dropped ones") {
  auto mcqs = tiny_corpus(2);
  auto scenarios = tiny_scenarios(2);
  Rng rng(8);
  auto plan = sample_exam(mcqs, 2, rng);
  plan.model_ids = {"model-a"};

  FixedAnswerTransport transport("C");
  transport.fail_marker = "Scenario body 1.";  // all items of S_00002 fail
  GatewayOptions options;
  options.sleep_on_retry = false;
  Gateway gateway(transport, options);
  auto trials = administer(plan, mcqs, scenarios, gateway, Domain::Diet);
  REQUIRE(trials.size() == 8);
  int nulls = 0;
  for (const auto& t : trials) {
    if (!t.chosen_label.has_value()) {
      ++nulls;
      CHECK(t.raw_response.rfind("[gateway-error] ", 0) == 0);
      CHECK_FALSE(t.correct);
    } else {
      CHECK(t.chosen_label == 'C');
      CHECK_FALSE(t.correct);  // correct label is B
    }
  }
  CHECK(nulls == 4);
}

TEST_CASE("checkpoint skips already-administered items") {
  auto mcqs = tiny_corpus(2);
  auto scenarios = tiny_scenarios(2);
  Rng rng(8);
  auto plan = sample_exam(mcqs, 2, rng);
  plan.model_ids = {"model-a"};

  FixedAnswerTransport transport("B");
  GatewayOptions options;
  options.sleep_on_retry = false;
  Gateway gateway(transport, options);
  ExamCheckpoint checkpoint;  // in-memory only
  auto first = administer(plan, mcqs, scenarios, gateway, Domain::Diet,
                          &checkpoint);
  CHECK(first.size() == 8);
  auto second = administer(plan, mcqs, scenarios, gateway, Domain::Diet,
                           &checkpoint);
  CHECK(second.empty());
}
