#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "pedteach/corpus.hpp"
#include "pedteach/experiment.hpp"

namespace httplib {
class Server;
}

namespace pedteach {

struct ServiceConfig {
  std::chrono::seconds idle_timeout{24 * 60 * 60};
  std::optional<std::filesystem::path> persistence_path;
  std::size_t suggest_max_len = 4;
  std::optional<Dataset> dataset;  // source of empirical teacher pools
  PoolPolicy pool_policy = PoolPolicy::EmpiricalPlusObserved;
  std::uint64_t seed = 0;
  SynthesisOptions synthesis;
  std::string cors_origin = "*";
  double default_alpha = 4.0;
  double default_beta = 0.36787944117144233;  // e^-1
  double default_eta = 0.0;
};

inline constexpr std::size_t kMaxExampleLength = 64;

/// Teacher pool for a space: the dataset's empirical corpora when the
/// dataset covers the rule, synthetic corpora otherwise. The `learn` command
/// uses the same function so both front ends see identical pools.
CorpusPool pool_for_space(const Dataset* dataset, const RuleSpace& space, PoolPolicy policy,
                          std::uint64_t seed, const SynthesisOptions& synthesis);

/// JSON view of a learn result: hypotheses, l0, l1, fallback, errors.
nlohmann::json learn_result_json(const LearnResult& r);

/// In-memory teaching sessions. All methods are thread-safe; mutations of a
/// single session are applied in arrival order and readers see a consistent
/// snapshot. Methods take and return the JSON bodies of the HTTP API.
class SessionStore {
 public:
  explicit SessionStore(ServiceConfig config);
  ~SessionStore();

  /// {rule_id | custom_space:{name?, target, distractors}, alpha?, beta?,
  ///  eta?, target?, alphabet?, suggest_max_len?}
  nlohmann::json create_session(const nlohmann::json& body);
  /// {text, label} -> {l0, l1, fallback, example}
  nlohmann::json add_example(const std::string& id, const nlohmann::json& body);
  nlohmann::json get_state(const std::string& id);
  nlohmann::json suggest_next(const std::string& id, std::size_t n);
  void delete_session(const std::string& id);

  std::size_t size();

  /// Drops sessions idle for longer than the timeout as of `now`.
  void expire(std::chrono::steady_clock::time_point now);

  const ServiceConfig& config() const noexcept { return config_; }

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id);

  ServiceConfig config_;
  std::shared_mutex mutex_;
  std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex log_mutex_;
};

/// Registers the HTTP routes (and CORS handling) for `store` on `server`.
void install_routes(httplib::Server& server, SessionStore& store);

/// Blocks serving HTTP until the server is stopped.
void serve(SessionStore& store, const std::string& host, int port);

}  // namespace pedteach
