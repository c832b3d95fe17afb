#pragma once

// Line-delimited JSON protocol between the optimizer and an out-of-process
// evaluator. One request per line, one response per line, strictly
// alternating. See docs/wire_protocol.md for a transcript.

#include <cstdint>
#include <optional>
#include <string>

#include "tbaopt/benchmarks.hpp"
#include "tbaopt/errors.hpp"
#include "tbaopt/evaluator.hpp"
#include "tbaopt/value.hpp"

namespace tbaopt::protocol {

struct Request {
  std::int64_t id = 0;
  std::string benchmark;
  Configuration params;
  Scenario scenario;
  std::string hardware;
  std::optional<double> timeout_ms;  // absent when timeouts are disabled
  std::string constants_hash;

  bool operator==(const Request& o) const {
    return id == o.id && benchmark == o.benchmark && params == o.params &&
           to_json(scenario) == to_json(o.scenario) && hardware == o.hardware &&
           timeout_ms == o.timeout_ms && constants_hash == o.constants_hash;
  }
};

namespace detail {

inline std::size_t key_offset(const std::string& line, const std::string& key) {
  auto pos = line.find("\"" + key + "\"");
  return pos == std::string::npos ? 0 : pos;
}

inline Json parse_line(const std::string& line) {
  try {
    Json j = Json::parse(line);
    if (!j.is_object()) throw ProtocolError("message is not a JSON object", 0);
    return j;
  } catch (const Json::parse_error& e) {
    throw ProtocolError(std::string("malformed line: ") + e.what(), e.byte == 0 ? 0 : e.byte - 1);
  }
}

template <typename F>
auto field(const std::string& line, const std::string& key, F&& get) {
  try {
    return get();
  } catch (const Json::exception& e) {
    throw ProtocolError("bad field '" + key + "': " + e.what(), key_offset(line, key));
  }
}

}  // namespace detail

inline std::string encode_request(const Request& r) {
  Json scenario{{"name", r.scenario.name},
                {"objective_kind", to_string(r.scenario.objective_kind)},
                {"constraints", Json::array()}};
  for (const auto& c : r.scenario.constraints)
    scenario["constraints"].push_back({{"name", c.name}, {"threshold", c.threshold}});
  Json j{{"id", r.id},
         {"benchmark", r.benchmark},
         {"params", to_json(r.params)},
         {"scenario", scenario},
         {"hardware", r.hardware},
         {"timeout_ms", r.timeout_ms ? Json(*r.timeout_ms) : Json(nullptr)},
         {"constants_hash", r.constants_hash}};
  return j.dump();
}

inline Request decode_request(const std::string& line) {
  const Json j = detail::parse_line(line);
  Request r;
  r.id = detail::field(line, "id", [&] { return j.at("id").get<std::int64_t>(); });
  r.benchmark = detail::field(line, "benchmark", [&] { return j.at("benchmark").get<std::string>(); });
  r.params = detail::field(line, "params", [&] { return configuration_from_json(j.at("params")); });
  r.scenario = detail::field(line, "scenario", [&] {
    Json s = j.at("scenario");
    for (auto& c : s.at("constraints")) c["unit"] = "";
    return scenario_from_json(s);
  });
  r.hardware = detail::field(line, "hardware", [&] { return j.at("hardware").get<std::string>(); });
  r.timeout_ms = detail::field(line, "timeout_ms", [&]() -> std::optional<double> {
    const auto& t = j.at("timeout_ms");
    if (t.is_null()) return std::nullopt;
    return t.get<double>();
  });
  r.constants_hash =
      detail::field(line, "constants_hash", [&] { return j.at("constants_hash").get<std::string>(); });
  return r;
}

inline std::string encode_response(const EvalResponse& r) {
  Json cv = Json::object();
  for (const auto& [k, v] : r.constraint_values) cv[k] = v;
  Json j{{"id", r.id},
         {"status", to_string(r.status)},
         {"objective", r.objective ? Json(*r.objective) : Json(nullptr)},
         {"constraints", cv},
         {"cost_seconds", r.cost_seconds},
         {"error", r.error ? Json(*r.error) : Json(nullptr)}};
  return j.dump();
}

// Error reply for a request that could not be evaluated (id -1 when the
// request itself was unparseable).
inline std::string encode_error(std::int64_t id, const std::string& message) {
  return Json{{"id", id}, {"status", nullptr}, {"error", message}}.dump();
}

// Throws ProtocolError on malformed lines, unknown status tokens and id
// mismatches; TransportError when the worker reports that it could not
// evaluate the request.
inline EvalResponse decode_response(const std::string& line,
                                    std::optional<std::int64_t> expected_id = std::nullopt) {
  const Json j = detail::parse_line(line);
  EvalResponse r;
  r.id = detail::field(line, "id", [&] { return j.at("id").get<std::int64_t>(); });
  if (expected_id && r.id != *expected_id)
    throw ProtocolError("response id " + std::to_string(r.id) + " does not match request id " +
                            std::to_string(*expected_id),
                        detail::key_offset(line, "id"));
  const auto& status = detail::field(line, "status", [&]() -> const Json& { return j.at("status"); });
  if (status.is_null()) {
    const std::string msg = j.contains("error") && j["error"].is_string()
                                ? j["error"].get<std::string>()
                                : std::string("unspecified");
    throw TransportError("evaluator could not evaluate request " + std::to_string(r.id) + ": " + msg);
  }
  const auto token = detail::field(line, "status", [&] { return status.get<std::string>(); });
  const auto parsed = trial_status_from_string(token);
  if (!parsed)
    throw ProtocolError("unknown status '" + token + "'", detail::key_offset(line, "status"));
  r.status = *parsed;
  r.objective = detail::field(line, "objective", [&]() -> std::optional<double> {
    if (!j.contains("objective") || j["objective"].is_null()) return std::nullopt;
    return j["objective"].get<double>();
  });
  r.constraint_values = detail::field(line, "constraints", [&] {
    return j.value("constraints", Json::object()).get<std::map<std::string, double>>();
  });
  r.cost_seconds = detail::field(line, "cost_seconds", [&] { return j.at("cost_seconds").get<double>(); });
  r.error = detail::field(line, "error", [&]() -> std::optional<std::string> {
    if (!j.contains("error") || j["error"].is_null()) return std::nullopt;
    return j["error"].get<std::string>();
  });
  if (r.status == TrialStatus::ok && !r.objective)
    throw ProtocolError("ok response without objective", detail::key_offset(line, "objective"));
  if (r.status == TrialStatus::crash && r.objective)
    throw ProtocolError("crash response carries an objective", detail::key_offset(line, "objective"));
  return r;
}

// Reference server loop body: evaluates one request line in-process and
// returns the response line. Never throws on malformed input.
inline std::string serve_line(const std::string& line, const BenchmarkConstants& constants) {
  Request req;
  try {
    req = decode_request(line);
  } catch (const std::exception& e) {
    std::int64_t id = -1;
    try {
      auto j = Json::parse(line);
      if (j.is_object() && j.contains("id") && j["id"].is_number_integer()) id = j["id"].get<std::int64_t>();
    } catch (...) {
    }
    return encode_error(id, e.what());
  }
  if (req.constants_hash != constants.hash)
    return encode_error(req.id, "constants hash mismatch");
  try {
    auto bench = make_benchmark(req.benchmark, constants);
    const auto& hw = constants.profile(req.hardware);
    const auto policy = TimeoutPolicy::for_scenario(req.scenario);
    auto resp = apply_timeout_at(bench->evaluate(req.params, req.scenario, hw),
                                 policy.latency_metric, req.timeout_ms, policy.warmup_fraction);
    resp.id = req.id;
    return encode_response(resp);
  } catch (const std::exception& e) {
    return encode_error(req.id, e.what());
  }
}

}  // namespace tbaopt::protocol
