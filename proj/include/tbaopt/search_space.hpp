#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tbaopt/errors.hpp"
#include "tbaopt/hash.hpp"
#include "tbaopt/rng.hpp"
#include "tbaopt/value.hpp"

namespace tbaopt {

// `ordinal` is an ordered categorical with numeric payload (batch_size over
// {1,2,4,...}); it moves by index steps like an integer.
enum class VariableKind { categorical, ordinal, integer, continuous };

inline const char* to_string(VariableKind k) {
  switch (k) {
    case VariableKind::categorical: return "categorical";
    case VariableKind::ordinal: return "ordinal";
    case VariableKind::integer: return "integer";
    case VariableKind::continuous: return "continuous";
  }
  return "?";
}

inline VariableKind variable_kind_from_string(const std::string& s) {
  if (s == "categorical") return VariableKind::categorical;
  if (s == "ordinal") return VariableKind::ordinal;
  if (s == "integer") return VariableKind::integer;
  if (s == "continuous") return VariableKind::continuous;
  throw SpecError("unknown variable kind '" + s + "'");
}

// variable ∈ allowed
struct Condition {
  std::string variable;
  std::vector<Value> allowed;
};

struct VariableSpec {
  std::string name;
  VariableKind kind = VariableKind::continuous;
  std::vector<Value> values;  // categorical / ordinal
  double lo = 0.0;            // integer / continuous, inclusive
  double hi = 0.0;
  std::vector<Condition> activation;  // conjunction; empty = unconditional

  static VariableSpec categorical(std::string name, std::vector<Value> values,
                                  std::vector<Condition> when = {}) {
    return {std::move(name), VariableKind::categorical, std::move(values), 0, 0,
            std::move(when)};
  }
  static VariableSpec ordinal(std::string name, std::vector<Value> values,
                              std::vector<Condition> when = {}) {
    return {std::move(name), VariableKind::ordinal, std::move(values), 0, 0,
            std::move(when)};
  }
  static VariableSpec integer(std::string name, std::int64_t lo, std::int64_t hi,
                              std::vector<Condition> when = {}) {
    return {std::move(name), VariableKind::integer, {}, static_cast<double>(lo),
            static_cast<double>(hi), std::move(when)};
  }
  static VariableSpec continuous(std::string name, double lo, double hi,
                                 std::vector<Condition> when = {}) {
    return {std::move(name), VariableKind::continuous, {}, lo, hi, std::move(when)};
  }

  bool conditional() const { return !activation.empty(); }
  bool discrete() const { return kind != VariableKind::continuous; }
  bool structural() const { return kind == VariableKind::categorical; }

  // Number of distinct values for discrete kinds.
  std::size_t domain_size() const {
    switch (kind) {
      case VariableKind::categorical:
      case VariableKind::ordinal: return values.size();
      case VariableKind::integer: return static_cast<std::size_t>(hi - lo) + 1;
      case VariableKind::continuous: return 0;
    }
    return 0;
  }

  // Value at index `i` of a discrete domain.
  Value value_at(std::size_t i) const {
    if (kind == VariableKind::integer)
      return static_cast<std::int64_t>(lo) + static_cast<std::int64_t>(i);
    return values.at(i);
  }

  std::optional<std::size_t> index_of(const Value& v) const {
    if (kind == VariableKind::integer) {
      const auto* i = std::get_if<std::int64_t>(&v);
      if (!i || *i < lo || *i > hi) return std::nullopt;
      return static_cast<std::size_t>(*i - static_cast<std::int64_t>(lo));
    }
    auto it = std::find(values.begin(), values.end(), v);
    if (it == values.end()) return std::nullopt;
    return static_cast<std::size_t>(it - values.begin());
  }

  bool contains(const Value& v) const {
    if (kind == VariableKind::continuous) {
      const auto* d = std::get_if<double>(&v);
      return d && std::isfinite(*d) && *d >= lo && *d <= hi;
    }
    return index_of(v).has_value();
  }

  Value sample(Rng& rng) const {
    if (kind == VariableKind::continuous) return rng.uniform(lo, hi);
    return value_at(rng.below(domain_size()));
  }
};

class SearchSpace {
 public:
  SearchSpace() = default;

  SearchSpace(std::string name, std::vector<VariableSpec> variables)
      : name_(std::move(name)), variables_(std::move(variables)) {
    check();
  }

  const std::string& name() const { return name_; }
  const std::vector<VariableSpec>& variables() const { return variables_; }

  const VariableSpec* find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &variables_[it->second];
  }

  const VariableSpec& at(const std::string& name) const {
    const auto* v = find(name);
    if (!v) throw SpecError("unknown variable '" + name + "' in space " + name_);
    return *v;
  }

  bool operator==(const SearchSpace& other) const {
    return to_json_text() == other.to_json_text();
  }

  Json to_json() const;
  std::string to_json_text() const { return to_json().dump(); }

 private:
  void check() {
    if (variables_.empty()) throw SpecError("space " + name_ + " has no variables");
    bool any_unconditional = false;
    for (std::size_t i = 0; i < variables_.size(); ++i) {
      const auto& v = variables_[i];
      if (!index_.emplace(v.name, i).second)
        throw SpecError("duplicate variable '" + v.name + "'");
      switch (v.kind) {
        case VariableKind::categorical:
        case VariableKind::ordinal: {
          if (v.values.empty())
            throw SpecError("variable '" + v.name + "' has an empty domain");
          std::set<std::string> seen;
          for (const auto& x : v.values) {
            if (v.kind == VariableKind::ordinal && !is_numeric(x))
              throw SpecError("ordinal '" + v.name + "' needs numeric values");
            if (!seen.insert(Json(tbaopt::to_json(x)).dump()).second)
              throw SpecError("duplicate value in domain of '" + v.name + "'");
          }
          break;
        }
        case VariableKind::integer:
          if (v.lo != std::floor(v.lo) || v.hi != std::floor(v.hi))
            throw SpecError("integer bounds of '" + v.name + "' are not integral");
          [[fallthrough]];
        case VariableKind::continuous:
          if (!(v.lo <= v.hi) || !std::isfinite(v.lo) || !std::isfinite(v.hi))
            throw SpecError("variable '" + v.name + "' needs lo <= hi");
          break;
      }
      for (const auto& c : v.activation) {
        auto it = index_.find(c.variable);
        if (it == index_.end() || it->second >= i)
          throw SpecError("activation of '" + v.name +
                          "' references '" + c.variable +
                          "', which is not declared earlier");
        const auto& ref = variables_[it->second];
        if (!ref.discrete())
          throw SpecError("activation of '" + v.name + "' references continuous '" +
                          c.variable + "'");
        for (const auto& a : c.allowed)
          if (!ref.contains(a))
            throw SpecError("activation of '" + v.name + "' allows value " +
                            tbaopt::to_string(a) + " outside the domain of '" +
                            c.variable + "'");
      }
      any_unconditional = any_unconditional || !v.conditional();
    }
    if (!any_unconditional)
      throw SpecError("space " + name_ + " has no unconditional variable");
  }

  std::string name_;
  std::vector<VariableSpec> variables_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline bool condition_holds(const Condition& c, const Configuration& partial) {
  auto it = partial.find(c.variable);
  if (it == partial.end()) return false;
  return std::find(c.allowed.begin(), c.allowed.end(), it->second) != c.allowed.end();
}

inline bool is_active(const VariableSpec& v, const Configuration& partial) {
  return std::all_of(v.activation.begin(), v.activation.end(),
                     [&](const Condition& c) { return condition_holds(c, partial); });
}

// Names of the active variables, in space order.
inline std::vector<std::string> active_set(const SearchSpace& space,
                                           const Configuration& partial) {
  std::vector<std::string> out;
  for (const auto& v : space.variables()) {
    for (const auto& c : v.activation)
      if (!space.find(c.variable))
        throw SpecError("predicate of '" + v.name + "' references unknown '" +
                        c.variable + "'");
    if (is_active(v, partial)) out.push_back(v.name);
  }
  return out;
}

// Rebuilds `config` so that exactly the active variables are assigned:
// existing in-domain values are kept, newly active variables are drawn from
// `fill`, and inactive ones are dropped. Space order makes this a single pass.
template <typename Fill>
Configuration complete_configuration(const SearchSpace& space,
                                     const Configuration& config, Fill&& fill) {
  Configuration out;
  for (const auto& v : space.variables()) {
    if (!is_active(v, out)) continue;
    auto it = config.find(v.name);
    if (it != config.end() && v.contains(it->second))
      out.emplace(v.name, it->second);
    else
      out.emplace(v.name, fill(v));
  }
  return out;
}

inline Configuration sample_uniform(const SearchSpace& space, Rng& rng) {
  return complete_configuration(space, Configuration{},
                                [&](const VariableSpec& v) { return v.sample(rng); });
}

// nullopt when `config` is well-formed, otherwise a description naming the
// first offending variable in space order.
inline std::optional<std::string> validate(const SearchSpace& space,
                                           const Configuration& config) {
  for (const auto& [name, value] : config)
    if (!space.find(name)) return "unknown variable '" + name + "'";
  for (const auto& v : space.variables()) {
    const bool active = is_active(v, config);
    auto it = config.find(v.name);
    if (active && it == config.end()) return "'" + v.name + "' is active but unassigned";
    if (!active && it != config.end()) return "'" + v.name + "' is assigned but inactive";
    if (active && !v.contains(it->second))
      return "'" + v.name + "' = " + to_string(it->second) + " is outside its domain";
  }
  return std::nullopt;
}

inline void require_valid(const SearchSpace& space, const Configuration& config) {
  if (auto err = validate(space, config))
    throw SpecError("invalid configuration for " + space.name() + ": " + *err);
}

// Product of all discrete domain sizes, ignoring activation.
inline std::uint64_t structural_combinations(const SearchSpace& space) {
  std::uint64_t n = 1;
  for (const auto& v : space.variables())
    if (v.discrete()) n *= v.domain_size();
  return n;
}

// Visits every valid assignment of the discrete variables (continuous ones
// are left unassigned) in lexicographic space order.
inline void for_each_discrete(const SearchSpace& space,
                              const std::function<void(const Configuration&)>& visit) {
  const auto& vars = space.variables();
  Configuration partial;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == vars.size()) {
      visit(partial);
      return;
    }
    const auto& v = vars[i];
    if (!v.discrete() || !is_active(v, partial)) {
      rec(i + 1);
      return;
    }
    for (std::size_t k = 0; k < v.domain_size(); ++k) {
      partial[v.name] = v.value_at(k);
      rec(i + 1);
    }
    partial.erase(v.name);
  };
  rec(0);
}

// ---------------------------------------------------------------------------
// Declarative space documents (JSON).
//
//   {"name": "...", "variables": [
//      {"name": "backend", "kind": "categorical", "values": ["a", "b"]},
//      {"name": "threads", "kind": "integer", "low": 1, "high": 8,
//       "when": {"backend": ["a"]}}]}

inline Json SearchSpace::to_json() const {
  Json vars = Json::array();
  for (const auto& v : variables_) {
    Json j{{"name", v.name}, {"kind", tbaopt::to_string(v.kind)}};
    if (v.kind == VariableKind::categorical || v.kind == VariableKind::ordinal) {
      Json vals = Json::array();
      for (const auto& x : v.values) vals.push_back(tbaopt::to_json(x));
      j["values"] = vals;
    } else if (v.kind == VariableKind::integer) {
      j["low"] = static_cast<std::int64_t>(v.lo);
      j["high"] = static_cast<std::int64_t>(v.hi);
    } else {
      j["low"] = v.lo;
      j["high"] = v.hi;
    }
    if (v.conditional()) {
      Json when = Json::object();
      for (const auto& c : v.activation) {
        Json allowed = Json::array();
        for (const auto& a : c.allowed) allowed.push_back(tbaopt::to_json(a));
        when[c.variable] = allowed;
      }
      j["when"] = when;
    }
    vars.push_back(std::move(j));
  }
  return Json{{"name", name_}, {"variables", vars}};
}

inline SearchSpace space_from_json(const Json& doc) {
  try {
    std::vector<VariableSpec> vars;
    for (const auto& j : doc.at("variables")) {
      VariableSpec v;
      v.name = j.at("name").get<std::string>();
      v.kind = variable_kind_from_string(j.at("kind").get<std::string>());
      if (v.kind == VariableKind::categorical || v.kind == VariableKind::ordinal) {
        for (const auto& x : j.at("values")) v.values.push_back(value_from_json(x));
      } else {
        v.lo = j.at("low").get<double>();
        v.hi = j.at("high").get<double>();
      }
      if (j.contains("when")) {
        // Object keys iterate sorted; order of conjuncts does not matter.
        for (const auto& [ref, allowed] : j.at("when").items()) {
          Condition c{ref, {}};
          for (const auto& a : allowed) c.allowed.push_back(value_from_json(a));
          v.activation.push_back(std::move(c));
        }
      }
      vars.push_back(std::move(v));
    }
    return SearchSpace(doc.at("name").get<std::string>(), std::move(vars));
  } catch (const Json::exception& e) {
    throw SpecError(std::string("malformed space document: ") + e.what());
  }
}

inline SearchSpace load_space(const std::string& path) {
  Json doc;
  try {
    doc = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw SpecError(path + ": " + e.what());
  }
  return space_from_json(doc);
}

// ---------------------------------------------------------------------------
// Built-in spaces.

inline SearchSpace deployment_space() {
  using V = VariableSpec;
  return SearchSpace(
      "deployment",
      {V::categorical("model_name", {"resnet18", "resnet50", "mobilenet_v2",
                                     "efficientnet_b0", "vit_tiny"}),
       V::categorical("backend", {"pytorch_eager", "torch_compile", "onnxruntime"}),
       V::categorical("quantization", {"fp32", "fp16", "int8_dynamic"}),
       V::ordinal("batch_size", {std::int64_t{1}, std::int64_t{2}, std::int64_t{4},
                                 std::int64_t{8}, std::int64_t{16}, std::int64_t{32}}),
       V::integer("num_threads", 1, 8,
                  {{"backend", {"pytorch_eager", "onnxruntime"}}})});
}

inline SearchSpace crashy_branin_space() {
  using V = VariableSpec;
  return SearchSpace("crashy_branin",
                     {V::categorical("mode", {"A", "B", "C"}),
                      V::integer("resolution", 1, 5),
                      V::continuous("x1", -5.0, 10.0),
                      V::continuous("x2", 0.0, 15.0)});
}

inline SearchSpace hier_rosenbrock_space() {
  using V = VariableSpec;
  const std::vector<Condition> ge4{{"mode", {"m4", "m6"}}};
  const std::vector<Condition> ge6{{"mode", {"m6"}}};
  return SearchSpace("hier_rosenbrock",
                     {V::categorical("mode", {"m2", "m4", "m6"}),
                      V::continuous("x1", -2.0, 2.0), V::continuous("x2", -2.0, 2.0),
                      V::continuous("x3", -2.0, 2.0, ge4),
                      V::continuous("x4", -2.0, 2.0, ge4),
                      V::continuous("x5", -2.0, 2.0, ge6),
                      V::continuous("x6", -2.0, 2.0, ge6)});
}

inline SearchSpace quadratic_space() {
  return SearchSpace("quadratic", {VariableSpec::continuous("x", -1.0, 1.0)});
}

}  // namespace tbaopt
