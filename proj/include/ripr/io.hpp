#pragma once
// Report serialization (CSV, line-delimited JSON, MANIFEST) and the
// key = value config reader.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "ripr/divergence.hpp"
#include "ripr/evalue.hpp"
#include "ripr/extended.hpp"
#include "ripr/measures.hpp"
#include "ripr/projection.hpp"

namespace ripr {

inline constexpr const char* kVersion = "0.1.0";

using Json = nlohmann::ordered_json;

// 10 significant digits; non-finite values as inf / -inf / undefined.
inline std::string fmt(double v) { return Extended(v).to_string(10); }
inline std::string fmt(const Extended& v) { return v.to_string(10); }

inline Json to_json(const Extended& v) {
  if (v.is_finite()) return v.value();
  return v.to_string();
}

inline Json to_json(const GainReport& g) {
  Json j;
  j["value"] = to_json(g.value);
  j["status"] = to_string(g.status);
  Json idx = Json::array(), ws = Json::array();
  if (g.attained_at) {
    for (std::size_t k = 0; k < g.attained_at->size(); ++k) {
      idx.push_back(g.attained_at->indices()[k]);
      ws.push_back(g.attained_at->weights()[k]);
    }
  }
  j["witness_indices"] = idx;
  j["witness_weights"] = ws;
  j["certified_upper"] = g.certified_upper ? to_json(Extended(*g.certified_upper)) : Json(nullptr);
  j["discretized"] = g.discretized;
  return j;
}

inline Json to_json(const EVerification& v) {
  Json j;
  j["passed"] = v.passed;
  j["sup_slack"] = to_json(Extended(v.sup_slack));
  j["worst_member"] = v.worst_member;
  return j;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os_ << ',';
      os_ << csv_escape(cells[i]);
    }
    os_ << '\n';
  }

 private:
  std::ostream& os_;
};

// point,weight,density
inline void write_measure_csv(std::ostream& os, const GridMeasure& m) {
  CsvWriter w(os);
  w.row({"point", "weight", "density"});
  for (std::size_t i = 0; i < m.size(); ++i)
    w.row({fmt(m.grid().points()[i]), fmt(m.grid().weights()[i]), fmt(m.density()[i])});
}

// k,alpha,theta_index,gain_value,gain_status,bound_over_k
inline void write_trace_csv(std::ostream& os, const ProjectionTrace& t) {
  CsvWriter w(os);
  w.row({"k", "alpha", "theta_index", "gain_value", "gain_status", "bound_over_k"});
  for (const auto& s : t.iterations) {
    const Extended b = s.bound_b.is_finite() ? Extended(s.bound_b.value() / s.k) : s.bound_b;
    w.row({std::to_string(s.k), fmt(s.alpha), std::to_string(s.theta_index), fmt(s.gain.value),
           to_string(s.gain.status), fmt(b)});
  }
}

// run,n,log_ratio_sum,mean_rate
inline void write_growth_csv(std::ostream& os, const GrowthReport& r) {
  CsvWriter w(os);
  w.row({"run", "n", "log_ratio_sum", "mean_rate"});
  for (std::size_t k = 0; k < r.log_ratio_sums.size(); ++k)
    w.row({std::to_string(k), std::to_string(r.n), fmt(r.log_ratio_sums[k]),
           fmt(r.log_ratio_sums[k] / static_cast<double>(r.n))});
}

// FNV-1a over the canonical config text.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---- config --------------------------------------------------------------

struct RunConfig {
  std::string command;
  std::string family;        // named family; empty means none given
  std::string alt;           // alternative P
  std::string query;         // Q for gain; empty means the uniform mixture
  std::string experiment;    // rate / epower / sequential variant
  GridSpec grid;
  int k_max = 500;
  double tol = 1e-7;
  double cauchy_tol = 1e-4;
  int max_iter = 5000;
  std::string out = ".";
  std::uint64_t seed = 1;
  // sequential
  std::size_t n = 10000;
  std::size_t runs = 100;
  std::size_t type1_runs = 2000;
  std::size_t n_batch = 20;
  double alpha = 0.05;
  // strength
  double scale = 0.5;
  // subprob
  long support_countable = 1000;
  long support_decay = 100000;
  double nu = 0.5;

  // Canonical key = value text; hashed into the MANIFEST.
  std::string canonical() const {
    std::ostringstream os;
    os << "command = " << command << "\nfamily = " << family << "\nalt = " << alt << "\nquery = " << query
       << "\nexperiment = " << experiment << "\ngrid.lo = " << fmt(grid.lo) << "\ngrid.hi = " << fmt(grid.hi)
       << "\ngrid.points = " << grid.points << "\ngrid.support = " << grid.support << "\nkmax = " << k_max
       << "\ntol = " << fmt(tol) << "\ncauchy_tol = " << fmt(cauchy_tol) << "\nmax_iter = " << max_iter
       << "\nseed = " << seed << "\nn = " << n << "\nruns = " << runs << "\ntype1_runs = " << type1_runs
       << "\nn_batch = " << n_batch << "\nalpha = " << fmt(alpha) << "\nscale = " << fmt(scale)
       << "\nsupport_countable = " << support_countable << "\nsupport_decay = " << support_decay
       << "\nnu = " << fmt(nu) << "\n";
    return os.str();
  }
};

class usage_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Parses LO:HI:NPTS.
inline void parse_grid_flag(const std::string& s, GridSpec& g) {
  const auto a = s.find(':');
  const auto b = a == std::string::npos ? a : s.find(':', a + 1);
  if (b == std::string::npos) throw usage_error("--grid expects LO:HI:NPTS, got '" + s + "'");
  try {
    g.lo = std::stod(s.substr(0, a));
    g.hi = std::stod(s.substr(a + 1, b - a - 1));
    g.points = std::stoul(s.substr(b + 1));
  } catch (const std::logic_error&) {
    throw usage_error("--grid expects LO:HI:NPTS, got '" + s + "'");
  }
}

// Top-level keys plus optional [grid], [family], [alt], [query] sections.
// A section may give `name`, or `kind` with `params` (a,b,c) or `range`
// (lo:hi:n).
inline RunConfig read_config(std::istream& is) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw usage_error(std::string("config: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  RunConfig c;
  // A present key must parse as its field type.
  auto get = [](const pt::ptree& t, const char* key, auto def) {
    const auto child = t.get_child_optional(key);
    return child ? child->template get_value<decltype(def)>() : def;
  };
  try {
    c.command = get(tree, "command", c.command);
    c.family = get(tree, "family", c.family);
    c.alt = get(tree, "alt", c.alt);
    c.query = get(tree, "query", c.query);
    c.experiment = get(tree, "experiment", c.experiment);
    c.k_max = get(tree, "kmax", c.k_max);
    c.tol = get(tree, "tol", c.tol);
    c.cauchy_tol = get(tree, "cauchy_tol", c.cauchy_tol);
    c.max_iter = get(tree, "max_iter", c.max_iter);
    c.out = get(tree, "out", c.out);
    c.seed = get(tree, "seed", c.seed);
    c.n = get(tree, "n", c.n);
    c.runs = get(tree, "runs", c.runs);
    c.type1_runs = get(tree, "type1_runs", c.type1_runs);
    c.n_batch = get(tree, "n_batch", c.n_batch);
    c.alpha = get(tree, "alpha", c.alpha);
    c.scale = get(tree, "scale", c.scale);
    c.support_countable = get(tree, "support_countable", c.support_countable);
    c.support_decay = get(tree, "support_decay", c.support_decay);
    c.nu = get(tree, "nu", c.nu);
    if (auto g = tree.get_child_optional("grid")) {
      c.grid.lo = get(*g, "lo", c.grid.lo);
      c.grid.hi = get(*g, "hi", c.grid.hi);
      c.grid.points = get(*g, "points", c.grid.points);
      c.grid.support = get(*g, "support", c.grid.support);
    }
    auto section_name = [&](const char* key, std::string& target) {
      auto s = tree.get_child_optional(key);
      if (!s) return;
      if (auto name = s->get_optional<std::string>("name")) {
        target = *name;
        return;
      }
      const std::string kind = s->get("kind", std::string());
      if (kind.empty()) throw usage_error(std::string("config: section [") + key + "] needs name or kind");
      if (auto r = s->get_optional<std::string>("range")) target = kind + ":" + *r;
      else target = kind + ":" + s->get("params", std::string());
    };
    section_name("family", c.family);
    section_name("alt", c.alt);
    section_name("query", c.query);
  } catch (const pt::ptree_bad_data& e) {
    throw usage_error(std::string("config: bad value: ") + e.what());
  }
  return c;
}

inline RunConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw usage_error("cannot open config file '" + path + "'");
  return read_config(in);
}

}  // namespace ripr
