#pragma once

// Aggregate tables and curve files computed from run records. Every cell is
// a pure function of the records, so a report built from replayed logs is
// byte-identical to one built from the live runs.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "tbaopt/benchmarks.hpp"
#include "tbaopt/errors.hpp"
#include "tbaopt/jsonl_log.hpp"
#include "tbaopt/metrics.hpp"
#include "tbaopt/optimizers.hpp"

namespace tbaopt {

struct Table {
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

enum class Format { markdown, text, csv, tsv };

inline Format format_from_string(const std::string& s) {
  if (s == "markdown" || s == "md") return Format::markdown;
  if (s == "text") return Format::text;
  if (s == "csv") return Format::csv;
  if (s == "tsv") return Format::tsv;
  throw SpecError("unknown format '" + s + "' (choose from: markdown, text, csv, tsv)");
}

namespace detail {

// Display width in code points (cells may hold a few non-ASCII symbols).
inline std::size_t display_width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

inline std::string pad(const std::string& s, std::size_t w) {
  return s + std::string(w - std::min(w, display_width(s)), ' ');
}

inline std::string csv_escape(const std::string& s, char sep) {
  if (s.find(sep) == std::string::npos && s.find('"') == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

}  // namespace detail

inline std::string render(const Table& t, Format f) {
  std::ostringstream out;
  const std::size_t cols = t.header.size();
  if (f == Format::csv || f == Format::tsv) {
    const char sep = f == Format::csv ? ',' : '\t';
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i)
        out << (i ? std::string(1, sep) : "") << detail::csv_escape(r[i], sep);
      out << '\n';
    };
    out << "# " << t.title << '\n';
    line(t.header);
    for (const auto& r : t.rows) line(r);
    return out.str();
  }
  std::vector<std::size_t> w(cols, 0);
  for (std::size_t i = 0; i < cols; ++i) w[i] = detail::display_width(t.header[i]);
  for (const auto& r : t.rows)
    for (std::size_t i = 0; i < cols; ++i) w[i] = std::max(w[i], detail::display_width(r[i]));
  if (f == Format::markdown) {
    out << "### " << t.title << "\n\n";
    auto line = [&](const std::vector<std::string>& r) {
      out << '|';
      for (std::size_t i = 0; i < cols; ++i) out << ' ' << detail::pad(r[i], w[i]) << " |";
      out << '\n';
    };
    line(t.header);
    out << '|';
    for (std::size_t i = 0; i < cols; ++i) out << std::string(w[i] + 2, '-') << '|';
    out << '\n';
    for (const auto& r : t.rows) line(r);
    return out.str();
  }
  out << t.title << '\n';
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < cols; ++i)
      out << (i ? "  " : "") << (i + 1 == cols ? r[i] : detail::pad(r[i], w[i]));
    out << '\n';
  };
  line(t.header);
  std::size_t total = 0;
  for (auto x : w) total += x;
  out << std::string(total + 2 * (cols - 1), '-') << '\n';
  for (const auto& r : t.rows) line(r);
  return out.str();
}

// ---------------------------------------------------------------------------

struct ReportOptions {
  bool allow_mixed = false;
  // Needed for regret curves; regret is omitted when absent or when its hash
  // differs from the logs'.
  const BenchmarkConstants* constants = nullptr;
};

struct Report {
  std::vector<Table> tables;
  std::vector<std::string> incomplete;               // run ids excluded from aggregates
  std::map<std::string, std::string> curve_files;    // file name -> CSV text
  std::vector<std::string> notes;
};

inline std::string run_id_of(const RunRecord& r) {
  return r.optimizer + "-" + r.benchmark + "-" + r.scenario.name + "-" + r.hardware + "-B" +
         std::to_string(r.budget) + "-s" + std::to_string(r.seed);
}

namespace detail {

inline std::vector<std::string> optimizer_order(const std::set<std::string>& present) {
  std::vector<std::string> out;
  for (const auto& o : optimizer_names())
    if (present.count(o)) out.push_back(o);
  for (const auto& o : present)
    if (std::find(out.begin(), out.end(), o) == out.end()) out.push_back(o);
  return out;
}

inline std::string mean_std(const std::vector<double>& xs, int digits) {
  if (xs.empty()) return "n/a";
  const auto s = summarize(xs);
  return fixed(s.mean, digits) + " ± " + fixed(s.std, digits);
}

inline std::string percent(const std::vector<double>& xs) {
  if (xs.empty()) return "n/a";
  return fixed(100.0 * summarize(xs).mean, 1) + "%";
}

inline std::string regret_cell(double r) { return std::isfinite(r) ? fixed(r, 6) : "inf"; }

}  // namespace detail

inline Report build_report(const std::vector<RunRecord>& runs, const ReportOptions& opts = {}) {
  if (runs.empty()) throw SpecError("no runs to report");
  std::set<std::string> hashes;
  for (const auto& r : runs) hashes.insert(r.constants_hash);
  if (hashes.size() > 1 && !opts.allow_mixed)
    throw SpecError("runs were produced with " + std::to_string(hashes.size()) +
                    " different constants files; their numbers are not comparable "
                    "(pass --allow-mixed to report anyway)");

  Report rep;
  std::vector<const RunRecord*> ok;
  for (const auto& r : runs) {
    if (r.complete)
      ok.push_back(&r);
    else
      rep.incomplete.push_back(run_id_of(r));
  }
  std::sort(rep.incomplete.begin(), rep.incomplete.end());

  // (benchmark, scenario, hardware) -> budget -> optimizer -> runs, ordered by seed
  using Env = std::tuple<std::string, std::string, std::string>;
  std::map<Env, std::map<std::int64_t, std::map<std::string, std::vector<const RunRecord*>>>> groups;
  for (const auto* r : ok) groups[{r->benchmark, r->scenario.name, r->hardware}][r->budget][r->optimizer].push_back(r);
  for (auto& [env, by_budget] : groups)
    for (auto& [b, by_opt] : by_budget)
      for (auto& [o, rs] : by_opt)
        std::stable_sort(rs.begin(), rs.end(), [](auto* a, auto* c) { return a->seed < c->seed; });

  for (const auto& [env, by_budget] : groups) {
    const auto& [bench, scen, hw] = env;
    const std::string where = bench + " / " + scen + " / " + hw;
    const SearchSpace space = benchmark_space(bench);
    std::set<std::string> present;
    for (const auto& [b, by_opt] : by_budget)
      for (const auto& [o, rs] : by_opt) present.insert(o);
    const auto order = detail::optimizer_order(present);

    // Objective and waste by budget.
    Table t3;
    t3.title = "Best objective and wasted budget by budget (" + where + ")";
    t3.header = {"Budget"};
    for (const auto& o : order) {
      t3.header.push_back(o + " objective");
      t3.header.push_back(o + " W");
    }
    for (const auto& [b, by_opt] : by_budget) {
      std::vector<std::string> row{std::to_string(b)};
      for (const auto& o : order) {
        std::vector<double> f, w;
        auto it = by_opt.find(o);
        if (it != by_opt.end())
          for (const auto* r : it->second) {
            if (r->best_feasible) f.push_back(r->best_feasible->second);
            w.push_back(wasted_curve(r->history).back());
          }
        row.push_back(detail::mean_std(f, 3));
        row.push_back(detail::percent(w));
      }
      t3.rows.push_back(row);
    }
    rep.tables.push_back(t3);

    for (const auto& [b, by_opt] : by_budget) {
      const std::string at = where + ", B = " + std::to_string(b);
      // Objective / waste / feasible seeds.
      Table t5;
      t5.title = "Summary (" + at + ")";
      t5.header = {"Optimizer", "Best objective", "W", "Feasible seeds"};
      for (const auto& o : order) {
        auto it = by_opt.find(o);
        if (it == by_opt.end()) continue;
        std::vector<double> f, w;
        for (const auto* r : it->second) {
          if (r->best_feasible) f.push_back(r->best_feasible->second);
          w.push_back(wasted_curve(r->history).back());
        }
        t5.rows.push_back({o, detail::mean_std(f, 3), detail::percent(w),
                           std::to_string(f.size()) + "/" + std::to_string(it->second.size())});
      }
      rep.tables.push_back(t5);

      const auto* fam = space.find(kFamilyVariable);
      if (!fam) continue;
      // Discovery counts per family.
      Table t6;
      t6.title = "Seeds discovering each model family (" + at + ")";
      t6.header = {"Optimizer"};
      for (const auto& v : fam->values) t6.header.push_back(to_string(v));
      // Best family per seed.
      Table t7;
      t7.title = "Best feasible model family per seed (" + at + ")";
      t7.header = {"Optimizer"};
      std::set<std::uint64_t> seeds;
      for (const auto& [o, rs] : by_opt)
        for (const auto* r : rs) seeds.insert(r->seed);
      for (auto s : seeds) t7.header.push_back("seed " + std::to_string(s));
      for (const auto& o : order) {
        auto it = by_opt.find(o);
        if (it == by_opt.end()) continue;
        std::vector<std::string> row6{o};
        for (const auto& v : fam->values) {
          int k = 0;
          for (const auto* r : it->second) k += discovery(r->history, space, v);
          row6.push_back(std::to_string(k) + " / " + std::to_string(it->second.size()));
        }
        t6.rows.push_back(row6);
        std::vector<std::string> row7{o};
        for (auto s : seeds) {
          std::string cell = "-";
          for (const auto* r : it->second)
            if (r->seed == s) cell = r->best_feasible ? to_string(r->best_feasible->first.at(kFamilyVariable)) : "none";
          row7.push_back(cell);
        }
        t7.rows.push_back(row7);
      }
      rep.tables.push_back(t6);
      rep.tables.push_back(t7);
    }

    // Per-run r(n) and W(n) series.
    std::optional<double> f_star;
    bool have_star = false;
    const RunRecord* any = by_budget.begin()->second.begin()->second.front();
    if (opts.constants && opts.constants->hash == any->constants_hash) {
      const auto b = make_benchmark(bench, *opts.constants);
      if (auto opt = global_optimum(*b, any->scenario, opts.constants->profile(hw))) {
        f_star = opt->value;
        have_star = true;
      }
    }
    if (!have_star) rep.notes.push_back("regret omitted for " + where + ": no matching constants file");
    for (const auto& [b, by_opt] : by_budget)
      for (const auto& [o, rs] : by_opt)
        for (const auto* r : rs) {
          std::ostringstream csv;
          csv << "n," << (have_star ? "regret," : "") << "waste\n";
          const auto waste = wasted_curve(r->history);
          const auto regret = have_star ? simple_regret(r->history, *f_star) : std::vector<double>{};
          for (std::size_t i = 0; i < waste.size(); ++i) {
            csv << (i + 1) << ',';
            if (have_star) csv << detail::regret_cell(regret[i]) << ',';
            csv << detail::fixed(waste[i], 6) << '\n';
          }
          rep.curve_files[run_id_of(*r) + ".csv"] = csv.str();
        }
  }
  return rep;
}

inline std::string render(const Report& rep, Format f) {
  std::string out;
  for (const auto& t : rep.tables) {
    if (!out.empty()) out += '\n';
    out += render(t, f);
  }
  if (!rep.incomplete.empty()) {
    Table inc{"Incomplete runs (excluded from aggregates)", {"Run"}, {}};
    for (const auto& id : rep.incomplete) inc.rows.push_back({id});
    out += '\n' + render(inc, f);
  }
  return out;
}

// Replays every *.jsonl file under `dir` in file-name order.
inline std::vector<RunRecord> load_logs(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw SpecError("not a directory: " + dir);
  std::vector<std::string> paths;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".jsonl") paths.push_back(e.path().string());
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw SpecError("no .jsonl logs in " + dir);
  std::vector<RunRecord> out;
  for (const auto& p : paths) {
    try {
      out.push_back(replay(p).record);
    } catch (const LogFormatError& e) {
      throw LogFormatError(p + ": " + e.what(), 0);
    }
  }
  return out;
}

}  // namespace tbaopt
