#pragma once

// Append-only JSONL run logs. Line 1 is a header carrying the fully
// resolved run configuration; every following line is one trial, flushed
// before the next trial starts. See docs/jsonl_schema.md.

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tbaopt/errors.hpp"
#include "tbaopt/evaluator.hpp"
#include "tbaopt/hash.hpp"
#include "tbaopt/optimizers.hpp"
#include "tbaopt/run_config.hpp"

namespace tbaopt {

inline constexpr int kLogSchemaVersion = 1;

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

struct LogContext {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string optimizer, benchmark, scenario, hardware, constants_hash;
};

inline LogContext log_context(const RunConfig& cfg, const std::string& constants_hash) {
  return {cfg.run_id(), cfg.seed,     cfg.optimizer,  cfg.benchmark,
          cfg.scenario, cfg.hardware, constants_hash};
}

inline Json header_to_json(const RunConfig& cfg, const Scenario& scenario,
                           const std::string& constants_hash, const std::string& timestamp) {
  return {{"type", "header"},
          {"schema_version", kLogSchemaVersion},
          {"run_id", cfg.run_id()},
          {"config", to_json(cfg)},
          {"scenario", to_json(scenario)},
          {"constants_hash", constants_hash},
          {"timestamp", timestamp}};
}

inline Json trial_to_json(const TrialResult& t, const LogContext& ctx, const std::string& timestamp) {
  Json cv = Json::object();
  for (const auto& [k, v] : t.constraint_values) cv[k] = v;
  Json events = Json::array();
  for (const auto& e : t.events) events.push_back(e);
  return {{"type", "trial"},
          {"run_id", ctx.run_id},
          {"seed", ctx.seed},
          {"trial_index", t.trial_index},
          {"phase", to_string(t.phase)},
          {"optimizer", ctx.optimizer},
          {"benchmark", ctx.benchmark},
          {"scenario", ctx.scenario},
          {"hardware", ctx.hardware},
          {"params", to_json(t.config)},
          {"status", to_string(t.status)},
          {"objective", t.objective ? Json(*t.objective) : Json(nullptr)},
          {"constraints", cv},
          {"violation", std::isfinite(t.violation) ? Json(t.violation) : Json(nullptr)},
          {"feasible", t.feasible},
          {"cost_seconds", t.cost_seconds},
          {"events", events},
          {"constants_hash", ctx.constants_hash},
          {"timestamp", timestamp}};
}

inline TrialResult trial_from_json(const Json& j) {
  TrialResult t;
  t.trial_index = j.at("trial_index").get<std::int64_t>();
  t.phase = phase_from_string(j.at("phase").get<std::string>());
  t.config = configuration_from_json(j.at("params"));
  const auto status = trial_status_from_string(j.at("status").get<std::string>());
  if (!status) throw SpecError("unknown status '" + j.at("status").get<std::string>() + "'");
  t.status = *status;
  if (!j.at("objective").is_null()) t.objective = j["objective"].get<double>();
  t.constraint_values = j.at("constraints").get<std::map<std::string, double>>();
  t.violation = j.at("violation").is_null() ? std::numeric_limits<double>::infinity()
                                            : j["violation"].get<double>();
  t.feasible = j.at("feasible").get<bool>();
  t.cost_seconds = j.at("cost_seconds").get<double>();
  for (const auto& e : j.at("events")) t.events.push_back(e);
  return t;
}

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path) : path_(path), out_(path, std::ios::trunc) {
    if (!out_) throw StorageError("cannot open log " + path);
  }

  void header(const RunConfig& cfg, const Scenario& scenario, const std::string& constants_hash) {
    ctx_ = log_context(cfg, constants_hash);
    write(header_to_json(cfg, scenario, constants_hash, utc_timestamp()));
  }

  void trial(const TrialResult& t) { write(trial_to_json(t, ctx_, utc_timestamp())); }

  const std::string& path() const { return path_; }

 private:
  void write(const Json& j) {
    out_ << j.dump() << '\n';
    out_.flush();
    if (!out_) throw StorageError("write to " + path_ + " failed");
  }

  std::string path_;
  std::ofstream out_;
  LogContext ctx_;
};

// ---------------------------------------------------------------------------
// Replay

struct ReplayedRun {
  RunConfig config;
  RunRecord record;
  bool truncated = false;  // the final line was cut off mid-write
};

namespace detail {

inline std::vector<std::string> split_lines(const std::string& text, bool& ends_with_newline) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  ends_with_newline = cur.empty();
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

}  // namespace detail

inline ReplayedRun replay_text(const std::string& text) {
  bool newline_terminated = true;
  const auto lines = detail::split_lines(text, newline_terminated);
  if (lines.empty()) throw LogFormatError("missing header", 0);

  ReplayedRun out;
  auto parse = [&](std::size_t i) -> std::optional<Json> {
    try {
      return Json::parse(lines[i]);
    } catch (const Json::parse_error& e) {
      if (i + 1 == lines.size() && !newline_terminated) return std::nullopt;
      throw LogFormatError(std::string("malformed JSON: ") + e.what(), i + 1);
    }
  };

  const auto head = parse(0);
  if (!head || !head->is_object() || head->value("type", "") != "header")
    throw LogFormatError("missing header", 1);
  try {
    if (head->at("schema_version").get<int>() != kLogSchemaVersion)
      throw LogFormatError("unsupported schema_version", 1);
    out.config = run_config_from_json(head->at("config"));
    out.record.constants_hash = head->at("constants_hash").get<std::string>();
    out.record.scenario = scenario_from_json(head->at("scenario"));
  } catch (const LogFormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw LogFormatError(std::string("bad header: ") + e.what(), 1);
  }

  RunRecord& rec = out.record;
  rec.optimizer = out.config.optimizer;
  rec.benchmark = out.config.benchmark;
  rec.hardware = out.config.hardware;
  rec.seed = out.config.seed;
  rec.budget = out.config.budget.value_or(0);

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto j = parse(i);
    if (!j) {
      out.truncated = true;
      break;
    }
    try {
      if (j->value("type", "") != "trial") throw SpecError("expected a trial line");
      if (j->at("run_id").get<std::string>() != head->at("run_id").get<std::string>())
        throw SpecError("run_id differs from header");
      auto t = trial_from_json(*j);
      if (t.trial_index != static_cast<std::int64_t>(rec.history.size()) + 1)
        throw SpecError("trial_index " + std::to_string(t.trial_index) + " out of order");
      for (const auto& e : t.events)
        if (e.value("kind", "") == "handoff") rec.handoff_index = t.trial_index;
      rec.history.append(std::move(t));
    } catch (const std::exception& e) {
      throw LogFormatError(e.what(), i + 1);
    }
  }
  if (auto b = rec.history.best_feasible())
    rec.best_feasible = std::pair{rec.history[*b].config, *rec.history[*b].objective};
  rec.complete = !out.truncated && static_cast<std::int64_t>(rec.history.size()) == rec.budget;
  if (!rec.complete) rec.abort_reason = out.truncated ? "truncated log" : "short log";
  return out;
}

inline ReplayedRun replay(const std::string& path) { return replay_text(read_file(path)); }

// SHA-256 over the log with every "timestamp" field removed and each line
// re-serialized canonically (sorted keys, no whitespace).
inline std::string determinism_hash_text(const std::string& text) {
  bool newline_terminated = true;
  const auto lines = detail::split_lines(text, newline_terminated);
  std::string canon;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    Json j;
    try {
      j = Json::parse(lines[i]);
    } catch (const Json::parse_error& e) {
      throw LogFormatError(std::string("malformed JSON: ") + e.what(), i + 1);
    }
    if (j.is_object()) j.erase("timestamp");
    canon += j.dump();
    canon += '\n';
  }
  return sha256_hex(canon);
}

inline std::string determinism_hash(const std::string& path) {
  return determinism_hash_text(read_file(path));
}

}  // namespace tbaopt
