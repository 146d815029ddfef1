#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <httplib.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "oracles/direct_learners.hpp"
#include "pedteach/errors.hpp"
#include "pedteach/service.hpp"

using namespace pedteach;
using nlohmann::json;

namespace {

const std::filesystem::path kData = PEDTEACH_DATA_DIR;

ServiceConfig bundled_config() {
  ServiceConfig cfg;
  cfg.dataset = load_datasets({kData / "seed_corpora.jsonl", kData / "synthetic_corpora.jsonl"});
  return cfg;
}

// Runs a server on an ephemeral port for the lifetime of the object.
struct LiveServer {
  explicit LiveServer(SessionStore& store) {
    install_routes(server, store);
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~LiveServer() {
    server.stop();
    thread.join();
  }
  httplib::Server server;
  int port = 0;
  std::thread thread;
};

}  // namespace

TEST_CASE("create session returns hypotheses, priors and params") {
  SessionStore store(bundled_config());
  json s = store.create_session({{"rule_id", "3a"}, {"target", "^a{3,}$"}});
  CHECK(s["session_id"].get<std::string>().size() == 32);
  CHECK(s["hypotheses"] == json({"^a{3,}$", "^a{6,}$", "^[Aa]+$"}));
  CHECK(s["priors"][0].get<double>() == doctest::Approx(1.0 / 3));
  CHECK(s["params"]["alpha"] == 4.0);
  CHECK(s["target"] == "^a{3,}$");
  CHECK(store.size() == 1);
}

TEST_CASE("custom spaces and invalid requests") {
  SessionStore store(ServiceConfig{});
  json s = store.create_session({{"custom_space", {{"target", "^b+$"}, {"distractors", {"^b*$"}}}}});
  CHECK(s["hypotheses"] == json({"^b+$", "^b*$"}));
  CHECK_THROWS_AS(store.create_session({{"rule_id", "nope"}}), UnknownRule);
  CHECK_THROWS_AS(store.create_session({{"custom_space", {{"target", "b+"}}}}), SyntaxError);
  CHECK_THROWS_AS(store.create_session({{"rule_id", "3a"}, {"alpha", 0.5}}), InvalidParams);
  CHECK_THROWS_AS(store.create_session({{"rule_id", "3a"}, {"eta", 0.7}}), InvalidParams);
  CHECK_THROWS_AS(store.create_session({{"rule_id", "3a"}, {"target", "^b$"}}), InvalidParams);
  CHECK_THROWS_AS(store.create_session(json::array()), InvalidParams);
  std::string id = s["session_id"];
  CHECK_THROWS_AS(store.add_example(id, {{"text", std::string(65, 'b')}, {"label", "pos"}}), InvalidString);
  CHECK_THROWS_AS(store.add_example(id, {{"text", "b\n"}, {"label", "pos"}}), InvalidString);
  CHECK_THROWS_AS(store.add_example(id, {{"text", "b"}, {"label", "yes"}}), InvalidParams);
  CHECK_THROWS_AS(store.add_example("00", {{"text", "b"}, {"label", "pos"}}), UnknownSession);
}

TEST_CASE("adding examples updates posteriors like a batch learn") {
  ServiceConfig cfg = bundled_config();
  SessionStore store(cfg);
  std::string id = store.create_session({{"rule_id", "3a"}})["session_id"];
  json state = store.get_state(id);
  CHECK(state["l1"] == state["priors"]);

  json r1 = store.add_example(id, {{"text", "aaa"}, {"label", "pos"}});
  json r2 = store.add_example(id, {{"text", "aa"}, {"label", "-"}});
  CHECK(r2["example"]["position"] == 1);
  CHECK(r2["errors"] == json({0, 1, 1}));

  const RuleSpace& space = cfg.dataset->space("3a");
  Corpus c = make_corpus("3a", {{"aaa", Polarity::Positive}, {"aa", Polarity::Negative}});
  CorpusPool pool = pool_for_space(&*cfg.dataset, space, cfg.pool_policy, cfg.seed, cfg.synthesis);
  LearnResult batch = learn(space, c, pool, cfg.default_alpha, LearnerParams{cfg.default_beta, cfg.default_eta});
  CHECK(r2["l0"].get<std::vector<double>>() == batch.l0.probs);
  CHECK(r2["l1"].get<std::vector<double>>() == batch.l1.probs);

  state = store.get_state(id);
  CHECK(state["corpus"].size() == 2);
  CHECK(state["l1"] == r2["l1"]);
  CHECK(state["clusters"] == json({{0, 1}}));
}

TEST_CASE("state marks consistency with a declared target") {
  SessionStore store(bundled_config());
  std::string id = store.create_session({{"rule_id", "3a"}, {"target", "^a{3,}$"}})["session_id"];
  store.add_example(id, {{"text", "aaa"}, {"label", "pos"}});
  store.add_example(id, {{"text", "aa"}, {"label", "pos"}});
  json st = store.get_state(id);
  CHECK(st["corpus"][0]["consistent"] == true);
  CHECK(st["corpus"][1]["consistent"] == false);
}

TEST_CASE("suggestions follow the teacher score") {
  SessionStore store(bundled_config());
  std::string id = store.create_session({{"rule_id", "3a"}, {"target", "^a{3,}$"}})["session_id"];
  store.add_example(id, {{"text", "aaaa"}, {"label", "pos"}});
  json out = store.suggest_next(id, 5);
  auto suggestions = out["suggestions"];
  REQUIRE(suggestions.size() == 5);

  // Oracle: every string over {A, a} up to length 4, scored directly.
  RuleSpace space = *lookup_rule_space("3a");
  auto hs = oracle::hyps_of(space);
  std::vector<double> scores;
  std::vector<std::string> level{""};
  for (int len = 0; len <= 4; ++len) {
    std::vector<std::string> next;
    for (const auto& x : level) {
      oracle::Examples c{{"aaaa", true}, {x, hs[0].match(x)}};
      double l0 = oracle::l0(hs, c, std::exp(-1.0))[0];
      scores.push_back(std::pow(oracle::teacher_prior(hs[0], c, 0.0) * l0, 4.0));
      next.push_back(x + "A");
      next.push_back(x + "a");
    }
    level = next;
  }
  std::sort(scores.rbegin(), scores.rend());
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(suggestions[i]["score"].get<double>() == doctest::Approx(scores[i]).epsilon(1e-9));
    std::string x = suggestions[i]["text"];
    CHECK((suggestions[i]["label"] == "pos") == hs[0].match(x));
  }

  std::string no_target = store.create_session({{"rule_id", "3a"}})["session_id"];
  CHECK_THROWS_AS(store.suggest_next(no_target, 3), NoTargetDeclared);
}

TEST_CASE("suggestion on an empty corpus") {
  SessionStore store(bundled_config());
  std::string id = store.create_session({{"rule_id", "3a"}, {"target", "^a{3,}$"}})["session_id"];
  auto top = store.suggest_next(id, 1)["suggestions"][0];
  // The empty negative string costs one bit and leaves all hypotheses
  // equally consistent: (1/2 * 1/3)^4.
  CHECK(top["text"] == "");
  CHECK(top["label"] == "neg");
  CHECK(top["score"].get<double>() == doctest::Approx(std::pow(1.0 / 6, 4)));
}

TEST_CASE("concurrent additions to one session are serialized") {
  SessionStore store(bundled_config());
  std::string id = store.create_session({{"rule_id", "zip-code"}})["session_id"];
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&store, &id, t] {
      for (int i = 0; i < 5; ++i) {
        store.add_example(id, {{"text", std::to_string(10000 + t * 10 + i)}, {"label", "pos"}});
        store.get_state(id);
      }
    });
  }
  for (auto& th : threads) th.join();
  json st = store.get_state(id);
  REQUIRE(st["corpus"].size() == 40);
  for (std::size_t i = 0; i < 40; ++i) CHECK(st["corpus"][i]["position"] == i);
}

TEST_CASE("idle sessions expire") {
  ServiceConfig cfg;
  cfg.idle_timeout = std::chrono::seconds(60);
  SessionStore store(cfg);
  std::string id = store.create_session({{"rule_id", "3a"}})["session_id"];
  store.expire(std::chrono::steady_clock::now());
  CHECK(store.size() == 1);
  store.expire(std::chrono::steady_clock::now() + std::chrono::seconds(61));
  CHECK(store.size() == 0);
  CHECK_THROWS_AS(store.get_state(id), UnknownSession);
}

TEST_CASE("persistence log appends corpus snapshots") {
  auto path = std::filesystem::temp_directory_path() / "pedteach_sessions.jsonl";
  std::filesystem::remove(path);
  ServiceConfig cfg;
  cfg.persistence_path = path;
  SessionStore store(cfg);
  std::string id = store.create_session({{"rule_id", "3a"}})["session_id"];
  store.add_example(id, {{"text", "aaa"}, {"label", "pos"}});
  store.add_example(id, {{"text", "a"}, {"label", "neg"}});
  Dataset log = load_dataset(path);
  REQUIRE(log.corpora.size() == 2);
  CHECK(log.corpora[1].size() == 2);
  CHECK(log.corpora[1].teacher_id == id);
  CHECK(log.corpora[1].source == CorpusSource::Session);
  std::filesystem::remove(path);
}

TEST_CASE("HTTP interface") {
  SessionStore store(bundled_config());
  LiveServer live(store);
  httplib::Client cli("127.0.0.1", live.port);

  auto created = cli.Post("/sessions", R"({"rule_id":"3a","target":"^a{3,}$"})", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  CHECK(created->get_header_value("Access-Control-Allow-Origin") == "*");
  std::string id = json::parse(created->body)["session_id"];

  auto added = cli.Post("/sessions/" + id + "/examples", R"({"text":"aaa","label":"pos"})", "application/json");
  REQUIRE(added);
  CHECK(added->status == 200);
  CHECK(json::parse(added->body)["l1"].size() == 3);

  auto state = cli.Get("/sessions/" + id);
  REQUIRE(state);
  CHECK(state->status == 200);
  CHECK(json::parse(state->body)["corpus"].size() == 1);

  auto suggest = cli.Get("/sessions/" + id + "/suggest?n=3");
  REQUIRE(suggest);
  CHECK(suggest->status == 200);
  CHECK(json::parse(suggest->body)["suggestions"].size() == 3);

  auto bad_json = cli.Post("/sessions", "{", "application/json");
  CHECK(bad_json->status == 400);
  auto bad_regex = cli.Post("/sessions", R"j({"custom_space":{"target":"(a)"}})j", "application/json");
  CHECK(bad_regex->status == 400);
  CHECK(json::parse(bad_regex->body)["error"] == "ParseError");
  auto unknown_rule = cli.Post("/sessions", R"({"rule_id":"zzz"})", "application/json");
  CHECK(unknown_rule->status == 404);
  auto long_text = cli.Post("/sessions/" + id + "/examples",
                            json({{"text", std::string(100, 'a')}, {"label", "pos"}}).dump(), "application/json");
  CHECK(long_text->status == 400);
  CHECK(json::parse(long_text->body)["error"] == "InvalidString");

  auto plain = cli.Post("/sessions", R"({"rule_id":"3a"})", "application/json");
  std::string plain_id = json::parse(plain->body)["session_id"];
  CHECK(cli.Get("/sessions/" + plain_id + "/suggest")->status == 409);

  auto preflight = cli.Options("/sessions");
  REQUIRE(preflight);
  CHECK(preflight->status == 204);
  CHECK(preflight->has_header("Access-Control-Allow-Methods"));

  CHECK(cli.Delete("/sessions/" + id)->status == 204);
  CHECK(cli.Get("/sessions/" + id)->status == 404);
  CHECK(cli.Delete("/sessions/" + id)->status == 404);
}

TEST_CASE("interleaved sessions do not affect each other") {
  ServiceConfig cfg = bundled_config();
  SessionStore store(cfg);
  std::string a = store.create_session({{"rule_id", "3a"}})["session_id"];
  std::string b = store.create_session({{"rule_id", "3a"}})["session_id"];



  json before_b = store.get_state(b);
  store.add_example(a, {{"text", "aaa"}, {"label", "pos"}});
  json after_b = store.get_state(b);
  CHECK(after_b["corpus"] == before_b["corpus"]);
  CHECK(after_b["l1"] == before_b["l1"]);

  store.add_example(b, {{"text", "A"}, {"label", "neg"}});
  store.add_example(a, {{"text", "aa"}, {"label", "neg"}});
  store.add_example(b, {{"text", "aaaaaa"}, {"label", "pos"}});

  // Each interleaved session equals the same sequence replayed alone.
  SessionStore fresh(cfg);
  std::string ra = fresh.create_session({{"rule_id", "3a"}})["session_id"];
  fresh.add_example(ra, {{"text", "aaa"}, {"label", "pos"}});
  fresh.add_example(ra, {{"text", "aa"}, {"label", "neg"}});
  std::string rb = fresh.create_session({{"rule_id", "3a"}})["session_id"];
  fresh.add_example(rb, {{"text", "A"}, {"label", "neg"}});
  fresh.add_example(rb, {{"text", "aaaaaa"}, {"label", "pos"}});
  for (const char* key : {"l0", "l1", "corpus", "errors"}) {
    CHECK(store.get_state(a)[key] == fresh.get_state(ra)[key]);
    CHECK(store.get_state(b)[key] == fresh.get_state(rb)[key]);
  }
}

TEST_CASE("state views") {
  SessionStore store(bundled_config());
  std::string id = store.create_session({{"rule_id", "bracketed"}})["session_id"];
  json st = store.get_state(id);
  CHECK(st["corpus"].empty());
  CHECK(st["l0"] == st["priors"]);
  for (const auto& [text, label] : std::vector<std::pair<std::string, std::string>>{
           {"dog", "neg"}, {"[dog]", "pos"}, {"cat", "neg"}, {"[cat]", "pos"}}) {
    json r = store.add_example(id, {{"text", text}, {"label", label}});
    double s0 = 0, s1 = 0;
    for (double p : r["l0"]) s0 += p;
    for (double p : r["l1"]) s1 += p;
    CHECK(std::abs(s0 - 1) < 1e-9);
    CHECK(std::abs(s1 - 1) < 1e-9);
  }
  st = store.get_state(id);
  CHECK(st["clusters"] == json({{0, 1}, {2, 3}}));
  CHECK(store.suggest_next(store.create_session({{"rule_id", "3a"}, {"target", "^a{3,}$"}})["session_id"], 0)["suggestions"].empty());
}

TEST_CASE("empty string is a valid example") {
  SessionStore store(bundled_config());
  std::string id = store.create_session({{"rule_id", "3a"}})["session_id"];
  json r = store.add_example(id, {{"text", ""}, {"label", "pos"}});
  CHECK(r["errors"][0] == 1);
}
