#include "metakg/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "metakg/errors.hpp"
#include "metakg/rng.hpp"

namespace metakg {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

KvConfig KvConfig::parse(const std::string& text) {
  KvConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw DataError("config: line " + std::to_string(lineno) + " has no '='");
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw DataError("config: empty key at line " + std::to_string(lineno));
    cfg.entries_[key] = value;
  }
  return cfg;
}

KvConfig KvConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("config: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse(buf.str());
}

void KvConfig::set(const std::string& key, const std::string& value) { entries_[key] = value; }

bool KvConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string KvConfig::get_str(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw DataError("config: key '" + key + "' is not a number: " + it->second);
  }
}

int64_t KvConfig::get_int(const std::string& key, int64_t fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  int64_t v = 0;
  auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
  if (ec != std::errc() || p != it->second.data() + it->second.size()) {
    throw DataError("config: key '" + key + "' is not an integer: " + it->second);
  }
  return v;
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw DataError("config: key '" + key + "' is not a boolean: " + v);
}

std::string KvConfig::canonical_text() const {
  std::ostringstream os;
  for (const auto& [k, v] : entries_) os << k << " = " << v << "\n";
  return os.str();
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // prefer the shortest representation that round-trips
  for (int prec = 1; prec <= 16; ++prec) {
    char cand[64];
    std::snprintf(cand, sizeof(cand), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(cand, "%lf", &back);
    if (back == v) return cand;
  }
  return buf;
}

TrainConfig TrainConfig::from_kv(const KvConfig& kv) {
  TrainConfig c;
  c.k = kv.get_int("k", c.k);
  c.m = kv.get_int("m", c.m);
  c.candidate_size = kv.get_int("candidate_size", c.candidate_size);
  c.dim = kv.get_int("dim", c.dim);
  c.neighbor_cap = kv.get_int("neighbor_cap", c.neighbor_cap);
  c.outer_lr = kv.get_double("outer_lr", c.outer_lr);
  c.inner_lr = kv.get_double("inner_lr", c.inner_lr);
  c.lambda = kv.get_double("lambda", c.lambda);
  c.gamma = kv.get_double("gamma", c.gamma);
  c.tau = kv.get_double("tau", c.tau);
  c.n_false_contexts = kv.get_int("n_false_contexts", c.n_false_contexts);
  c.tasks_per_step = kv.get_int("tasks_per_step", c.tasks_per_step);
  c.max_steps = kv.get_int("max_steps", c.max_steps);
  c.eval_interval = kv.get_int("eval_interval", c.eval_interval);
  std::string order = kv.get_str("maml_order", "first");
  if (order == "first") {
    c.maml_order = MamlOrder::kFirst;
  } else if (order == "full") {
    c.maml_order = MamlOrder::kFull;
  } else {
    throw DataError("config: maml_order must be 'first' or 'full', got " + order);
  }
  c.drop_path = kv.get_double("drop_path", c.drop_path);
  c.no_mtransd = kv.get_bool("no_mtransd", c.no_mtransd);
  c.no_mrl = kv.get_bool("no_mrl", c.no_mrl);
  c.no_context = kv.get_bool("no_context", c.no_context);
  c.filtered_eval = kv.get_bool("filtered_eval", c.filtered_eval);
  c.seed = static_cast<uint64_t>(kv.get_int("seed", static_cast<int64_t>(c.seed)));
  c.validate();
  return c;
}

KvConfig TrainConfig::to_kv() const {
  KvConfig kv;
  kv.set("k", std::to_string(k));
  kv.set("m", std::to_string(m));
  kv.set("candidate_size", std::to_string(candidate_size));
  kv.set("dim", std::to_string(dim));
  kv.set("neighbor_cap", std::to_string(neighbor_cap));
  kv.set("outer_lr", format_double(outer_lr));
  kv.set("inner_lr", format_double(inner_lr));
  kv.set("lambda", format_double(lambda));
  kv.set("gamma", format_double(gamma));
  kv.set("tau", format_double(tau));
  kv.set("n_false_contexts", std::to_string(n_false_contexts));
  kv.set("tasks_per_step", std::to_string(tasks_per_step));
  kv.set("max_steps", std::to_string(max_steps));
  kv.set("eval_interval", std::to_string(eval_interval));
  kv.set("maml_order", maml_order == MamlOrder::kFirst ? "first" : "full");
  kv.set("drop_path", format_double(drop_path));
  kv.set("no_mtransd", no_mtransd ? "true" : "false");
  kv.set("no_mrl", no_mrl ? "true" : "false");
  kv.set("no_context", no_context ? "true" : "false");
  kv.set("filtered_eval", filtered_eval ? "true" : "false");
  kv.set("seed", std::to_string(seed));
  return kv;
}

void TrainConfig::validate() const {
  if (k < 1) throw DataError("config: k must be >= 1");
  if (m < 1) throw DataError("config: m must be >= 1");
  if (candidate_size < 2) throw DataError("config: candidate_size must be >= 2");
  if (dim < 1) throw DataError("config: dim must be >= 1");
  if (neighbor_cap < 1) throw DataError("config: neighbor_cap must be >= 1");
  if (outer_lr <= 0.0) throw DataError("config: outer_lr must be positive");
  if (inner_lr < 0.0) throw DataError("config: inner_lr must be >= 0");
  if (lambda < 0.0) throw DataError("config: lambda must be >= 0");
  if (gamma <= 0.0) throw DataError("config: gamma must be positive");
  if (tau <= 0.0) throw DataError("config: tau must be positive");
  if (n_false_contexts < 1) throw DataError("config: n_false_contexts must be >= 1");
  if (tasks_per_step < 1) throw DataError("config: tasks_per_step must be >= 1");
  if (max_steps < 1) throw DataError("config: max_steps must be >= 1");
  if (eval_interval < 1) throw DataError("config: eval_interval must be >= 1");
  if (drop_path < 0.0 || drop_path >= 1.0) throw DataError("config: drop_path must be in [0,1)");
}

std::string TrainConfig::fingerprint() const {
  uint64_t h = fnv1a64(to_kv().canonical_text());
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace metakg
