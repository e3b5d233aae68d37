#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

#include <httplib.h>

#include "obdlab/decisions.hpp"
#include "obdlab/domain.hpp"
#include "obdlab/protocol.hpp"
#include "obdlab/rng.hpp"
#include "obdlab/samplers.hpp"

// Live trial conduct: sessions hold the accrued records and the sticky
// decision state; every analysis goes through the same decide() step the
// simulator uses.
namespace obdlab::service {

struct ServiceError : std::runtime_error {
  int status;
  std::string code;
  ServiceError(int s, std::string c, const std::string& msg) : std::runtime_error(msg), status(s), code(std::move(c)) {}
};

inline json error_json(const std::string& code, const std::string& message) {
  return json{{"code", code}, {"message", message}};
}

inline json state_json(const decisions::TrialState& s) {
  json recs = json::array();
  for (const auto& r : s.recommendations) recs.push_back(r ? json(*r) : json(nullptr));
  return json{{"now", s.now},
              {"run_in", s.run_in},
              {"excluded_from", s.excluded_from ? json(*s.excluded_from) : json(nullptr)},
              {"admissible", s.admissible},
              {"recommendations", std::move(recs)},
              {"records", s.records}};
}

inline decisions::TrialState state_from_json(const json& j) {
  decisions::TrialState s;
  s.now = j.at("now").get<double>();
  s.run_in = j.at("run_in").get<bool>();
  if (!j.at("excluded_from").is_null()) s.excluded_from = j["excluded_from"].get<std::size_t>();
  j.at("admissible").get_to(s.admissible);
  for (const auto& r : j.at("recommendations"))
    s.recommendations.push_back(r.is_null() ? std::nullopt : std::optional<std::size_t>(r.get<std::size_t>()));
  j.at("records").get_to(s.records);
  return s;
}

struct Session {
  std::string id;
  Design design = Design::JTC;
  TrialConfig config;
  decisions::TrialState state;
  std::vector<json> history;  // analysis results, append-only
  bool stopped = false;
  std::optional<std::size_t> final_dose;
  mutable std::mutex mutex;

  [[nodiscard]] json to_json() const {
    return json{{"id", id},
                {"design", to_string(design)},
                {"config", config},
                {"state", state_json(state)},
                {"history", history},
                {"stopped", stopped},
                {"final_dose", final_dose ? json(*final_dose) : json(nullptr)}};
  }

  [[nodiscard]] json recommendation() const {
    if (history.empty())
      return json{{"next_dose", 0}, {"next_dose_value", config.grid[0]}, {"stop", false},
                  {"reason", "Continue"}, {"final_dose", nullptr}, {"analysis_index", 0}};
    const json& last = history.back();
    return json{{"next_dose", last["next_dose"]},
                {"next_dose_value", last["next_dose_value"]},
                {"stop", last["verdict"]["stop"]},
                {"reason", last["verdict"]["reason"]},
                {"final_dose", final_dose ? json(*final_dose) : json(nullptr)},
                {"analysis_index", history.size()}};
  }
};

/// Seed of the k-th analysis of a session.
inline StreamRng analysis_rng(const std::string& id, std::size_t index) {
  return StreamRng::keyed({hash_name(id), static_cast<std::uint64_t>(index)});
}

/// Applies an outcomes payload to a copy of the state. Items carrying
/// "patient" update that record; the rest are appended as new patients.
inline decisions::TrialState apply_outcomes(const Session& s, const json& body) {
  decisions::TrialState st = s.state;
  const json items = body.is_object() ? body.value("outcomes", json::array()) : body;
  if (!items.is_array()) throw ServiceError(400, "bad_request", "outcomes must be an array");
  const std::size_t J = s.config.grid.size();
  for (const auto& item : items) {
    PatientRecord r;
    try {
      r = item.get<PatientRecord>();
    } catch (const json::exception& e) {
      throw ServiceError(422, "validation_error", std::string("malformed outcome: ") + e.what());
    }
    try {
      validate_record(r, s.config.tau, J);
    } catch (const std::invalid_argument& e) {
      throw ServiceError(422, "validation_error", e.what());
    }
    if (item.contains("patient") && !item["patient"].is_null()) {
      const auto k = item["patient"].get<std::size_t>();
      if (k >= st.records.size()) throw ServiceError(422, "validation_error", "unknown patient index");
      if (st.records[k].dose_index != r.dose_index)
        throw ServiceError(422, "validation_error", "a patient's dose cannot change");
      if (r.followup + kProbTolerance < st.records[k].followup)
        throw ServiceError(422, "validation_error", "followup cannot decrease");
      st.records[k] = r;
    } else {
      if (st.excluded_from && r.dose_index >= *st.excluded_from)
        throw ServiceError(422, "validation_error", "dose is excluded by the hard-safety rule");
      st.records.push_back(r);
    }
  }
  if (body.is_object() && body.contains("now")) {
    st.now = body["now"].get<double>();
  } else {
    for (const auto& r : st.records) st.now = std::max(st.now, r.entry_time + r.followup);
  }
  return st;
}

class SessionStore {
 public:
  explicit SessionStore(mcmc::McmcConfig mc = mcmc::McmcConfig::from_env(),
                        std::optional<std::filesystem::path> journal_dir = std::nullopt, DesignPriors priors = {})
      : mc_(std::move(mc)), dir_(std::move(journal_dir)), priors_(std::move(priors)) {
    if (dir_) {
      std::filesystem::create_directories(*dir_);
      reload();
    }
  }

  json create(const json& body) {
    auto s = std::make_shared<Session>();
    try {
      s->design = design_from_string(body.value("design", std::string("jtc")));
      if (body.contains("config")) s->config = body["config"].get<TrialConfig>();
      s->config.validate();
    } catch (const json::exception& e) {
      throw ServiceError(422, "validation_error", e.what());
    } catch (const std::invalid_argument& e) {
      throw ServiceError(422, "validation_error", e.what());
    }
    {
      std::unique_lock lock(map_mutex_);
      do {
        s->id = new_id();
      } while (sessions_.count(s->id));
      sessions_[s->id] = s;
    }
    journal(*s, json{{"event", "create"}, {"id", s->id}, {"design", to_string(s->design)}, {"config", s->config}});
    return json{{"id", s->id}, {"recommendation", s->recommendation()}};
  }

  json get(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lock(s->mutex);
    return s->to_json();
  }

  json recommendation(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lock(s->mutex);
    return s->recommendation();
  }

  json posterior(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lock(s->mutex);
    if (s->history.empty()) return json{{"analysis_index", 0}, {"summary", nullptr}};
    return json{{"analysis_index", s->history.size()}, {"summary", s->history.back()["summary"]}};
  }

  json post_outcomes(const std::string& id, const json& body) {
    auto s = find(id);
    std::lock_guard lock(s->mutex);
    if (s->stopped) throw ServiceError(409, "trial_stopped", "the trial has already stopped");
    auto st = apply_outcomes(*s, body);
    auto [analysis, final_dose] = analyse(*s, st);
    s->state = std::move(st);
    s->history.push_back(analysis);
    if (analysis["verdict"]["stop"].get<bool>()) {
      s->stopped = true;
      s->final_dose = final_dose;
    }
    journal(*s, json{{"event", "analysis"},
                     {"state", state_json(s->state)},
                     {"analysis", analysis},
                     {"stopped", s->stopped},
                     {"final_dose", s->final_dose ? json(*s->final_dose) : json(nullptr)}});
    return analysis;
  }

  /// Same computation as post_outcomes on a copy; the session is untouched.
  json whatif(const std::string& id, const json& body) const {
    auto s = find(id);
    std::lock_guard lock(s->mutex);
    const json items = body.is_object() ? body.value("outcomes", json::array()) : body;
    if (items.empty() && !(body.is_object() && body.contains("now"))) {
      if (s->history.empty()) return s->recommendation();
      return s->history.back();
    }
    auto st = apply_outcomes(*s, body);
    return analyse(*s, st).first;
  }

  [[nodiscard]] std::vector<std::string> ids() const {
    std::shared_lock lock(map_mutex_);
    std::vector<std::string> out;
    for (const auto& [k, v] : sessions_) out.push_back(k);
    return out;
  }

  [[nodiscard]] const mcmc::McmcConfig& mcmc_config() const noexcept { return mc_; }

 private:
  std::pair<json, std::optional<std::size_t>> analyse(const Session& s, decisions::TrialState& st) const {
    if (st.records.empty()) throw ServiceError(422, "validation_error", "no patient records to analyse");
    Analysis a;
    try {
      a = decide(s.design, st, s.config, mc_, analysis_rng(s.id, s.history.size()), priors_);
    } catch (const std::exception& e) {
      throw ServiceError(500, "analysis_failed", e.what());
    }
    json j = analysis_json(a, s.config);
    j["analysis_index"] = s.history.size() + 1;
    std::optional<std::size_t> final_dose;
    if (a.verdict.stop && a.summary)
      final_dose = decisions::final_selection(a.verdict.reason, *a.summary, st.excluded_from, s.config);
    j["final_dose"] = final_dose ? json(*final_dose) : json(nullptr);
    return {std::move(j), final_dose};
  }

  std::shared_ptr<Session> find(const std::string& id) const {
    std::shared_lock lock(map_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ServiceError(404, "not_found", "unknown trial id: " + id);
    return it->second;
  }

  std::string new_id() {
    std::ostringstream os;
    os << std::hex << splitmix64(id_seed_ + ++id_counter_);
    return os.str();
  }

  void journal(const Session& s, const json& event) const {
    if (!dir_) return;
    std::ofstream out(*dir_ / (s.id + ".jsonl"), std::ios::app);
    out << event.dump() << '\n';
    if (!out) throw ServiceError(500, "journal_error", "cannot write journal for " + s.id);
  }

  void reload() {
    for (const auto& entry : std::filesystem::directory_iterator(*dir_)) {
      if (entry.path().extension() != ".jsonl") continue;
      std::ifstream in(entry.path());
      auto s = std::make_shared<Session>();
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json ev = json::parse(line);
        const auto kind = ev.at("event").get<std::string>();
        if (kind == "create") {
          s->id = ev.at("id").get<std::string>();
          s->design = design_from_string(ev.at("design").get<std::string>());
          s->config = ev.at("config").get<TrialConfig>();
        } else if (kind == "analysis") {
          s->state = state_from_json(ev.at("state"));
          s->history.push_back(ev.at("analysis"));
          s->stopped = ev.value("stopped", false);
          if (!ev.at("final_dose").is_null()) s->final_dose = ev["final_dose"].get<std::size_t>();
        }
      }
      if (!s->id.empty()) sessions_[s->id] = s;
    }
  }

  mcmc::McmcConfig mc_;
  std::optional<std::filesystem::path> dir_;
  DesignPriors priors_;
  mutable std::shared_mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t id_seed_ = std::random_device{}() ^ (static_cast<std::uint64_t>(std::random_device{}()) << 32);
  std::uint64_t id_counter_ = 0;
};

// ---- HTTP binding --------------------------------------------------------------

inline void register_routes(httplib::Server& server, SessionStore& store) {
  auto reply = [](httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  };
  auto guarded = [reply](auto fn) {
    return [reply, fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const ServiceError& e) {
        reply(res, e.status, error_json(e.code, e.what()));
      } catch (const json::exception& e) {
        reply(res, 400, error_json("bad_request", e.what()));
      } catch (const std::exception& e) {
        reply(res, 500, error_json("internal_error", e.what()));
      }
    };
  };
  auto body_of = [](const httplib::Request& req) { return req.body.empty() ? json::object() : json::parse(req.body); };

  server.Post("/trials", guarded([&, reply, body_of](const httplib::Request& req, httplib::Response& res) {
                reply(res, 201, store.create(body_of(req)));
              }));
  server.Get(R"(/trials/([^/]+))", guarded([&, reply](const httplib::Request& req, httplib::Response& res) {
               reply(res, 200, store.get(req.matches[1]));
             }));
  server.Post(R"(/trials/([^/]+)/outcomes)",
              guarded([&, reply, body_of](const httplib::Request& req, httplib::Response& res) {
                reply(res, 200, store.post_outcomes(req.matches[1], body_of(req)));
              }));
  server.Post(R"(/trials/([^/]+)/whatif)",
              guarded([&, reply, body_of](const httplib::Request& req, httplib::Response& res) {
                reply(res, 200, store.whatif(req.matches[1], body_of(req)));
              }));
  server.Get(R"(/trials/([^/]+)/recommendation)",
             guarded([&, reply](const httplib::Request& req, httplib::Response& res) {
               reply(res, 200, store.recommendation(req.matches[1]));
             }));
  server.Get(R"(/trials/([^/]+)/posterior)", guarded([&, reply](const httplib::Request& req, httplib::Response& res) {
               reply(res, 200, store.posterior(req.matches[1]));
             }));
}

}  // namespace obdlab::service
