#include <doctest.h>

#include <set>

#include "p2p/rag.hpp"

using namespace p2p;

namespace {

VectorIndex small_index() {
  VectorIndex index;
  index.add({0.0f, 0.0f}, "posts zero", "", parse_mbti("INFP"));
  index.add({1.0f, 0.0f}, "posts one", "", parse_mbti("ENTP"));
  index.add({0.0f, 2.0f}, "posts two", "", parse_mbti("INTJ"));
  index.add({3.0f, 3.0f}, "posts three", "", parse_mbti("ENFP"));
  index.add({4.0f, 0.0f}, "posts four", "", parse_mbti("INFJ"));
  index.add({5.0f, 5.0f}, "posts five", "", parse_mbti("ISTP"));
  index.freeze();
  return index;
}

UserVector query_vec(std::vector<float> values) {
  UserVector uv;
  uv.values = std::move(values);
  uv.post_part_dim = uv.values.size();
  return uv;
}

UserRecord user(const std::string& id, const std::string& text) {
  UserRecord rec;
  rec.id = id;
  rec.normalized_text = text;
  return rec;
}

}  // namespace

TEST_CASE("retrieve_demonstrations returns k ascending-distance demos") {
  const VectorIndex index = small_index();
  const auto demos = retrieve_demonstrations(index, query_vec({0, 0}), 5);
  REQUIRE(demos.size() == 5);
  CHECK(demos[0].posts_text == "posts zero");
  CHECK(demos[0].distance == doctest::Approx(0.0));
  for (std::size_t i = 1; i < demos.size(); ++i) {
    CHECK(demos[i - 1].distance <= demos[i].distance);
  }
}

TEST_CASE("retrieve_demonstrations clamps k to the index size") {
  const VectorIndex index = small_index();
  CHECK(retrieve_demonstrations(index, query_vec({0, 0}), 50).size() == 6);
}

TEST_CASE("stored vector retrieves itself first at distance zero") {
  const VectorIndex index = small_index();
  const auto demos = retrieve_demonstrations(index, query_vec({3, 3}), 1);
  REQUIRE(demos.size() == 1);
  CHECK(demos[0].posts_text == "posts three");
  CHECK(demos[0].distance == doctest::Approx(0.0));
}

TEST_CASE("render_prompt substitutes everything and keeps demo order") {
  const PromptTemplate tmpl = PromptTemplate::default_template();
  const std::vector<Demonstration> demos = {
      {"first demo posts", parse_mbti("INFP"), 0.1},
      {"second demo posts", parse_mbti("ENTP"), 0.4},
  };
  const std::string prompt = render_prompt("my posts", "my features", demos, tmpl);

  CHECK(prompt.find("return 4 uppercase letters only") != std::string::npos);
  CHECK(prompt.find("my posts") != std::string::npos);
  CHECK(prompt.find("my features") != std::string::npos);
  const std::size_t infp = prompt.find("INFP");
  const std::size_t entp = prompt.find("ENTP");
  REQUIRE(infp != std::string::npos);
  REQUIRE(entp != std::string::npos);
  CHECK(infp < entp);
  CHECK(prompt.find("<CONTENT>") == std::string::npos);
  CHECK(prompt.find("<FEATURE>") == std::string::npos);
  CHECK(prompt.find("<SIM-TEXTS>") == std::string::npos);
  CHECK(prompt.find("<POSTS>") == std::string::npos);
  CHECK(prompt.find("<LABEL>") == std::string::npos);
}

TEST_CASE("render_prompt with no demos drops the demonstration block") {
  const PromptTemplate tmpl = PromptTemplate::default_template();
  const std::string prompt = render_prompt("my posts", "my features", {}, tmpl);
  CHECK(prompt.find("<SIM-TEXTS>") == std::string::npos);
  CHECK(prompt.find("Reference users") == std::string::npos);  // header line elided
  CHECK(prompt.find("return 4 uppercase letters only") != std::string::npos);
}

TEST_CASE("render_prompt with empty features elides the feature line") {
  const PromptTemplate tmpl = PromptTemplate::default_template();
  const std::vector<Demonstration> demos = {{"demo", parse_mbti("INFP"), 0.1}};
  const std::string prompt = render_prompt("my posts", "", demos, tmpl);
  CHECK(prompt.find("<FEATURE>") == std::string::npos);
  CHECK(prompt.find("Psychological assessment") == std::string::npos);
  CHECK(prompt.find("my posts") != std::string::npos);
}

TEST_CASE("templates without required placeholders are rejected") {
  PromptTemplate tmpl = PromptTemplate::default_template();
  tmpl.body = "only <CONTENT> and <SIM-TEXTS>, return 4 uppercase letters only";
  CHECK_THROWS_AS(tmpl.validate(), MissingPlaceholderError);

  PromptTemplate dup = PromptTemplate::default_template();
  dup.body += "\n<FEATURE>";
  CHECK_THROWS_AS(dup.validate(), MissingPlaceholderError);

  PromptTemplate no_instruction = PromptTemplate::default_template();
  const std::size_t pos = no_instruction.body.find("return 4 uppercase");
  no_instruction.body.erase(pos);
  no_instruction.body += "<SIM-TEXTS>";  // keep the token count intact
  CHECK_THROWS_AS(no_instruction.validate(), MissingPlaceholderError);

  PromptTemplate bad_item = PromptTemplate::default_template();
  bad_item.demo_item = "<POSTS> only";
  CHECK_THROWS_AS(bad_item.validate(), MissingPlaceholderError);
}

TEST_CASE("rendered prompts are a pure function of their inputs") {
  const PromptTemplate tmpl = PromptTemplate::default_template();
  const std::vector<Demonstration> demos = {{"demo posts", parse_mbti("ISFJ"), 0.2}};
  CHECK(render_prompt("p", "f", demos, tmpl) == render_prompt("p", "f", demos, tmpl));
}

TEST_CASE("templates load from files and reject bad ones") {
  const std::string body_path = std::string(P2P_SOURCE_DIR) + "/data/templates/prompt.txt";
  const std::string item_path = std::string(P2P_SOURCE_DIR) + "/data/templates/demo_item.txt";
  const PromptTemplate tmpl = PromptTemplate::load(body_path, item_path);
  CHECK(tmpl.body == PromptTemplate::default_template().body);
  CHECK(tmpl.demo_item == PromptTemplate::default_template().demo_item);

  CHECK_THROWS_AS(PromptTemplate::load("/nonexistent/prompt.txt", item_path),
                  FileUnreadableError);
  // the stopword file is a valid text file but not a valid template
  const std::string not_a_template = std::string(P2P_SOURCE_DIR) + "/data/stopwords_en.txt";
  CHECK_THROWS_AS(PromptTemplate::load(not_a_template, item_path), MissingPlaceholderError);
}

TEST_CASE("predict_user: clean completion on the first attempt") {
  const VectorIndex index = small_index();
  const auto provider = mock_provider(3, 1, 1);
  const auto gen = mock_feature_generator();
  ScriptedLlmClient client({"ENTP"});
  PredictOptions options;
  options.k = 3;
  // width-2 index: post part + feature part from a dim-1 provider each
  const PredictionOutcome outcome = predict_user(user("u1", "hello world"), &index, *provider,
                                                 *gen, client, PromptTemplate::default_template(),
                                                 options);
  CHECK(outcome.predicted->str() == "ENTP");
  CHECK(outcome.attempts == 1);
  CHECK(!outcome.fallback_used);
  CHECK(outcome.demos.size() == 3);
  CHECK(outcome.demo_ids.size() == 3);
  CHECK(outcome.raw_response == "ENTP");
}

TEST_CASE("predict_user retries the identical prompt on parse failure") {
  const VectorIndex index = small_index();
  const auto provider = mock_provider(3, 1, 1);
  const auto gen = mock_feature_generator();
  ScriptedLlmClient client({"banana", "INTJ"});
  PredictOptions options;
  const PredictionOutcome outcome = predict_user(user("u2", "hello world"), &index, *provider,
                                                 *gen, client, PromptTemplate::default_template(),
                                                 options);
  CHECK(outcome.predicted->str() == "INTJ");
  CHECK(outcome.attempts == 2);
  CHECK(!outcome.fallback_used);
  const auto prompts = client.prompts();
  REQUIRE(prompts.size() == 2);
  CHECK(prompts[0] == prompts[1]);
}

TEST_CASE("predict_user falls back to the per-dimension majority vote") {
  // Demos with labels {INFP, INFP, INTJ, ENFP, INFJ}: I wins, N wins,
  // F wins 4-1, and J/P splits 2-3 toward P, so the vote says INFP.
  VectorIndex index;
  index.add({0.0f, 0.0f}, "d0", "", parse_mbti("INFP"));
  index.add({0.1f, 0.0f}, "d1", "", parse_mbti("INFP"));
  index.add({0.2f, 0.0f}, "d2", "", parse_mbti("INTJ"));
  index.add({0.3f, 0.0f}, "d3", "", parse_mbti("ENFP"));
  index.add({0.4f, 0.0f}, "d4", "", parse_mbti("INFJ"));
  index.freeze();

  const auto provider = mock_provider(3, 1, 1);
  const auto gen = mock_feature_generator();
  ScriptedLlmClient client({"not a type"});
  PredictOptions options;
  options.k = 5;
  options.retries = 3;
  const PredictionOutcome outcome = predict_user(user("u3", "hello world"), &index, *provider,
                                                 *gen, client, PromptTemplate::default_template(),
                                                 options);
  CHECK(outcome.fallback_used);
  CHECK(outcome.attempts == 3);
  CHECK(outcome.predicted->str() == "INFP");
  CHECK(client.calls() == 3);
}

TEST_CASE("fallback with no demos resolves ties to the first letters") {
  const auto provider = mock_provider(3, 1, 1);
  const auto gen = mock_feature_generator();
  ScriptedLlmClient client({"nope"});
  PredictOptions options;
  options.with_rag = false;
  options.retries = 2;
  const PredictionOutcome outcome = predict_user(user("u4", "hello world"), nullptr, *provider,
                                                 *gen, client, PromptTemplate::default_template(),
                                                 options);
  CHECK(outcome.fallback_used);
  CHECK(outcome.predicted->str() == "INTJ");
}

TEST_CASE("predict_user without rag renders a demo-free prompt") {
  const auto provider = mock_provider(3, 1, 1);
  const auto gen = mock_feature_generator();
  ScriptedLlmClient client({"ESFP"});
  PredictOptions options;
  options.with_rag = false;
  const PredictionOutcome outcome = predict_user(user("u5", "hello world"), nullptr, *provider,
                                                 *gen, client, PromptTemplate::default_template(),
                                                 options);
  CHECK(outcome.demos.empty());
  CHECK(outcome.prompt.find("Reference users") == std::string::npos);
  CHECK(outcome.predicted->str() == "ESFP");
}

TEST_CASE("content cap truncates the prompt content") {
  const auto provider = mock_provider(3, 1, 1);
  const auto gen = mock_feature_generator();
  ScriptedLlmClient client({"ESFP"});
  PredictOptions options;
  options.with_rag = false;
  options.with_features = false;  // the feature text would echo the full token
  options.content_max_chars = 5;
  const PredictionOutcome outcome =
      predict_user(user("u6", "abcdefghijklmnop"), nullptr, *provider, *gen, client,
                   PromptTemplate::default_template(), options);
  CHECK(outcome.prompt.find("abcde") != std::string::npos);
  CHECK(outcome.prompt.find("abcdef") == std::string::npos);
}

TEST_CASE("predict_batch keeps input order and isolates failures") {
  const VectorIndex index = small_index();
  const auto provider = mock_provider(3, 1, 1);
  const auto gen = mock_feature_generator();
  HashLlmClient client(99);
  PredictOptions options;
  options.k = 2;

  std::vector<UserRecord> users;
  for (int i = 0; i < 10; ++i) {
    users.push_back(user("u" + std::to_string(i), "text number " + std::to_string(i)));
  }
  users[4].normalized_text = "";  // provider rejects empty posts text

  const auto outcomes = predict_batch(users, &index, *provider, *gen, client,
                                      PromptTemplate::default_template(), options, 3);
  REQUIRE(outcomes.size() == 10);
  for (int i = 0; i < 10; ++i) {
    CHECK(outcomes[i].user_id == "u" + std::to_string(i));
    if (i == 4) {
      CHECK(!outcomes[i].ok);
      CHECK(!outcomes[i].error.empty());
    } else {
      CHECK(outcomes[i].ok);
      CHECK(outcomes[i].predicted.has_value());
    }
  }
}

TEST_CASE("predict_batch is independent of the concurrency level with pure clients") {
  const VectorIndex index = small_index();
  const auto provider = mock_provider(3, 1, 1);
  const auto gen = mock_feature_generator();
  HashLlmClient client(7);
  PredictOptions options;
  options.k = 3;

  std::vector<UserRecord> users;
  for (int i = 0; i < 12; ++i) {
    users.push_back(user("u" + std::to_string(i), "stable text " + std::to_string(i)));
  }
  const auto serial = predict_batch(users, &index, *provider, *gen, client,
                                    PromptTemplate::default_template(), options, 1);
  const auto parallel = predict_batch(users, &index, *provider, *gen, client,
                                      PromptTemplate::default_template(), options, 4);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].predicted->str() == parallel[i].predicted->str());
    CHECK(serial[i].prompt == parallel[i].prompt);
    CHECK(serial[i].demo_ids == parallel[i].demo_ids);
  }
}
