#include "pedteach/service.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include <httplib.h>

#include "pedteach/analysis.hpp"
#include "pedteach/errors.hpp"
#include "pedteach/learners.hpp"
#include "pedteach/logmath.hpp"

namespace pedteach {

using json = nlohmann::json;

namespace {

std::string new_session_id() {
  static std::mutex mu;
  static std::random_device device;
  std::lock_guard lock(mu);
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (int i = 0; i < 4; ++i) os << std::setw(8) << device();
  return os.str();
}

std::string iso_time(std::chrono::system_clock::time_point t) {
  std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

double number_field(const json& body, const char* name, double fallback) {
  if (!body.contains(name) || body.at(name).is_null()) return fallback;
  if (!body.at(name).is_number()) throw InvalidParams(std::string("'") + name + "' must be a number");
  return body.at(name).get<double>();
}

json probs_json(const std::vector<double>& probs) { return json(probs); }

Alphabet hypothesis_alphabet(const RuleSpace& space) {
  std::string chars;
  for (const auto& h : space.hypotheses()) chars += Alphabet::chars_of(h.ast());
  return Alphabet(chars.empty() ? std::string("a") : chars);
}

}  // namespace

CorpusPool pool_for_space(const Dataset* dataset, const RuleSpace& space, PoolPolicy policy,
                          std::uint64_t seed, const SynthesisOptions& synthesis) {
  if (dataset) {
    auto it = dataset->rule_spaces.find(space.name());
    if (it != dataset->rule_spaces.end() && it->second == space) {
      try {
        return build_pool(*dataset, space.name(), policy, nullptr, seed, synthesis);
      } catch (const MissingDistractorCorpora&) {
        return build_pool(*dataset, space.name(), PoolPolicy::EmpiricalPlusSynthetic, nullptr, seed,
                          synthesis);
      }
    }
  }
  Alphabet alphabet = synthesis.alphabet.empty() ? hypothesis_alphabet(space) : Alphabet(synthesis.alphabet);
  return build_pool(space, {}, PoolPolicy::EmpiricalPlusSynthetic, nullptr, seed, synthesis, alphabet);
}

json learn_result_json(const LearnResult& r) {
  json hyps = json::array();
  for (const auto& h : r.l0.space.hypotheses()) hyps.push_back(h.canonical());
  return {{"hypotheses", hyps},
          {"l0", probs_json(r.l0.probs)},
          {"l1", probs_json(r.l1.probs)},
          {"fallback", r.l1.fallback},
          {"errors", r.errors}};
}

struct SessionStore::Session {
  std::string id;
  RuleSpace space;
  double alpha = 1.0;
  LearnerParams params;
  std::optional<std::size_t> target;
  Corpus corpus;
  CorpusPool pool;
  Alphabet alphabet{"a"};
  std::size_t suggest_max_len = 4;
  std::chrono::system_clock::time_point created_at, updated_at;
  std::atomic<std::chrono::steady_clock::rep> last_touch{0};  // read by expiry without the lock
  std::optional<LearnResult> latest;  // empty until the first example
  std::mutex mutex;

  explicit Session(RuleSpace s) : space(std::move(s)) {}

  json posteriors_json() const {
    if (latest) return learn_result_json(*latest);
    PosteriorDistribution prior = prior_distribution(space);
    json hyps = json::array();
    for (const auto& h : space.hypotheses()) hyps.push_back(h.canonical());
    return {{"hypotheses", hyps},
            {"l0", probs_json(prior.probs)},
            {"l1", probs_json(prior.probs)},
            {"fallback", false},
            {"errors", std::vector<std::size_t>(space.size(), 0)}};
  }
};

SessionStore::SessionStore(ServiceConfig config) : config_(std::move(config)) {}
SessionStore::~SessionStore() = default;

std::shared_ptr<SessionStore::Session> SessionStore::find(const std::string& id) {
  expire(std::chrono::steady_clock::now());
  std::shared_lock lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw UnknownSession(id);
  return it->second;
}

void SessionStore::expire(std::chrono::steady_clock::time_point now) {
  std::unique_lock lock(mutex_);
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    std::chrono::steady_clock::time_point touched{std::chrono::steady_clock::duration(it->second->last_touch.load())};
    bool stale = now - touched > config_.idle_timeout;
    it = stale ? sessions_.erase(it) : std::next(it);
  }
}

std::size_t SessionStore::size() {
  std::shared_lock lock(mutex_);
  return sessions_.size();
}

json SessionStore::create_session(const json& body) {
  if (!body.is_object()) throw InvalidParams("request body must be a JSON object");
  std::optional<RuleSpace> space;
  if (body.contains("rule_id")) {
    std::string rule_id = body.at("rule_id").get<std::string>();
    if (config_.dataset && config_.dataset->rule_spaces.count(rule_id)) {
      space = config_.dataset->rule_spaces.at(rule_id);
    } else {
      space = lookup_rule_space(rule_id);
    }
    if (!space) throw UnknownRule(rule_id);
  } else if (body.contains("custom_space")) {
    const json& cs = body.at("custom_space");
    if (!cs.is_object() || !cs.contains("target")) {
      throw InvalidParams("custom_space needs a target regex");
    }
    std::vector<Regex> distractors;
    for (const auto& d : cs.value("distractors", json::array())) {
      distractors.push_back(Regex::parse(d.get<std::string>()));
    }
    space.emplace(cs.value("name", std::string("custom")), Regex::parse(cs.at("target").get<std::string>()),
                  std::move(distractors));
  } else {
    throw InvalidParams("request needs rule_id or custom_space");
  }

  auto s = std::make_shared<Session>(*space);
  s->alpha = number_field(body, "alpha", config_.default_alpha);
  s->params.beta = number_field(body, "beta", config_.default_beta);
  s->params.eta = number_field(body, "eta", config_.default_eta);
  if (!(s->alpha >= 1.0) || !std::isfinite(s->alpha)) throw InvalidParams("alpha must be finite and >= 1");
  s->params.validate();
  if (body.contains("target") && !body.at("target").is_null()) {
    auto idx = s->space.index_of(body.at("target").get<std::string>());
    if (!idx) throw InvalidParams("target is not a hypothesis of the space");
    s->target = idx;
  }
  if (body.contains("alphabet")) {
    std::string chars = body.at("alphabet").get<std::string>();
    if (chars.empty() || !is_printable_ascii(chars)) throw InvalidParams("alphabet must be printable ASCII");
    s->alphabet = Alphabet(chars);
  } else {
    s->alphabet = hypothesis_alphabet(s->space);
  }
  s->suggest_max_len = body.value("suggest_max_len", config_.suggest_max_len);
  if (s->suggest_max_len > 8) throw InvalidParams("suggest_max_len must be <= 8");

  const Dataset* dataset = config_.dataset ? &*config_.dataset : nullptr;
  s->pool = pool_for_space(dataset, s->space, config_.pool_policy, config_.seed, config_.synthesis);
  s->id = new_session_id();
  s->corpus.rule_id = s->space.name();
  s->corpus.teacher_id = s->id;
  s->corpus.source = CorpusSource::Session;
  s->created_at = s->updated_at = std::chrono::system_clock::now();
  s->last_touch = std::chrono::steady_clock::now().time_since_epoch().count();

  json out;
  out["session_id"] = s->id;
  out["hypotheses"] = json::array();
  PosteriorDistribution prior = prior_distribution(s->space);
  for (const auto& h : s->space.hypotheses()) out["hypotheses"].push_back(h.canonical());
  out["priors"] = probs_json(prior.probs);
  out["params"] = {{"alpha", s->alpha}, {"beta", s->params.beta}, {"eta", s->params.eta}};
  out["target"] = s->target ? json(s->space.hypotheses()[*s->target].canonical()) : json(nullptr);

  std::unique_lock lock(mutex_);
  sessions_.emplace(s->id, s);
  return out;
}

json SessionStore::add_example(const std::string& id, const json& body) {
  auto s = find(id);
  if (!body.is_object() || !body.contains("text") || !body.contains("label")) {
    throw InvalidParams("example needs text and label");
  }
  std::string text = body.at("text").get<std::string>();
  if (text.size() > kMaxExampleLength || !is_printable_ascii(text)) {
    throw InvalidString("text must be printable ASCII of at most " + std::to_string(kMaxExampleLength) +
                        " characters");
  }
  Polarity label;
  try {
    label = parse_polarity(body.at("label").get<std::string>());
  } catch (const ValidationError& e) {
    throw InvalidParams(e.what());
  }

  std::lock_guard lock(s->mutex);
  s->corpus.add(text, label);
  s->latest = learn(s->space, s->corpus, s->pool, s->alpha, s->params);
  s->updated_at = std::chrono::system_clock::now();
  s->last_touch = std::chrono::steady_clock::now().time_since_epoch().count();

  if (config_.persistence_path) {
    std::lock_guard log_lock(log_mutex_);
    std::ofstream out(*config_.persistence_path, std::ios::app);
    out << corpus_to_json_line(s->corpus) << '\n';
  }

  json out = learn_result_json(*s->latest);
  const auto& e = s->corpus.examples.back();
  out["example"] = {{"text", e.text}, {"label", std::string(to_string(e.label))}, {"position", e.position}};
  return out;
}

json SessionStore::get_state(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  s->last_touch = std::chrono::steady_clock::now().time_since_epoch().count();
  json out = s->posteriors_json();
  out["session_id"] = s->id;
  out["rule_id"] = s->space.name();
  out["params"] = {{"alpha", s->alpha}, {"beta", s->params.beta}, {"eta", s->params.eta}};
  out["priors"] = probs_json(prior_distribution(s->space).probs);
  out["target"] = s->target ? json(s->space.hypotheses()[*s->target].canonical()) : json(nullptr);
  json corpus = json::array();
  for (const auto& e : s->corpus.examples) {
    json item = {{"text", e.text}, {"label", std::string(to_string(e.label))}, {"position", e.position}};
    if (s->target) {
      item["consistent"] = s->space.hypotheses()[*s->target].matches(e.text) == is_positive(e.label);
    }
    corpus.push_back(std::move(item));
  }
  out["corpus"] = std::move(corpus);
  json clusters = json::array();
  if (!s->corpus.examples.empty()) {
    for (const auto& cl : cluster_corpus(s->corpus, 2).clusters) clusters.push_back(cl);
  }
  out["clusters"] = std::move(clusters);
  out["created_at"] = iso_time(s->created_at);
  out["updated_at"] = iso_time(s->updated_at);
  return out;
}

json SessionStore::suggest_next(const std::string& id, std::size_t n) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  if (!s->target) throw NoTargetDeclared();
  const std::size_t t = *s->target;
  const Regex& target = s->space.hypotheses()[t];

  struct Candidate {
    std::string text;
    Polarity label;
    double log_score;
  };
  std::vector<Candidate> candidates;
  if (n > 0) {
    Corpus extended = s->corpus;
    StringEnumerator strings(s->alphabet, s->suggest_max_len);
    std::string text;
    while (strings.next(text)) {
      Polarity label = target.matches(text) ? Polarity::Positive : Polarity::Negative;
      extended.add(text, label);
      double prior = log_teacher_prior_score(extended, target, s->params.eta);
      double informativity = l0_posterior(s->space, extended, s->params).log_probs[t];
      candidates.push_back({text, label, s->alpha * (prior + informativity)});
      extended.examples.pop_back();
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.log_score > b.log_score; });
    if (candidates.size() > n) candidates.resize(n);
  }
  json out = json::array();
  for (const auto& c : candidates) {
    out.push_back({{"text", c.text},
                   {"label", std::string(to_string(c.label))},
                   {"score", std::exp(c.log_score)},
                   {"log_score", c.log_score}});
  }
  return {{"suggestions", out}};
}

void SessionStore::delete_session(const std::string& id) {
  std::unique_lock lock(mutex_);
  if (sessions_.erase(id) == 0) throw UnknownSession(id);
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  auto error = [&](int status, const char* kind, const std::exception& e) {
    send_json(res, status, {{"error", kind}, {"message", e.what()}});
  };
  try {
    fn();
  } catch (const UnknownSession& e) {
    error(404, "UnknownSession", e);
  } catch (const UnknownRule& e) {
    error(404, "UnknownRule", e);
  } catch (const NoTargetDeclared& e) {
    error(409, "NoTargetDeclared", e);
  } catch (const SyntaxError& e) {
    error(400, "ParseError", e);
  } catch (const InvalidString& e) {
    error(400, "InvalidString", e);
  } catch (const InvalidParams& e) {
    error(400, "InvalidParams", e);
  } catch (const json::exception& e) {
    error(400, "InvalidParams", e);
  } catch (const Error& e) {
    error(500, "Error", e);
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json::parse(req.body);
}

}  // namespace

void install_routes(httplib::Server& server, SessionStore& store) {
  const std::string origin = store.config().cors_origin;
  server.set_default_headers({{"Access-Control-Allow-Origin", origin},
                              {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Post("/sessions", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 201, store.create_session(parse_body(req))); });
  });
  server.Post(R"(/sessions/([0-9a-f]+)/examples)", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, store.add_example(req.matches[1], parse_body(req))); });
  });
  server.Get(R"(/sessions/([0-9a-f]+)/suggest)", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::size_t n = 5;
      if (req.has_param("n")) {
        try {
          n = std::stoul(req.get_param_value("n"));
        } catch (const std::exception&) {
          throw InvalidParams("n must be a nonnegative integer");
        }
      }
      send_json(res, 200, store.suggest_next(req.matches[1], n));
    });
  });
  server.Get(R"(/sessions/([0-9a-f]+))", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, store.get_state(req.matches[1])); });
  });
  server.Delete(R"(/sessions/([0-9a-f]+))", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      store.delete_session(req.matches[1]);
      res.status = 204;
    });
  });
}

void serve(SessionStore& store, const std::string& host, int port) {
  httplib::Server server;
  install_routes(server, store);
  if (!server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace pedteach
