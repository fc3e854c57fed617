#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace metakg {

// Plain "key = value" config text. '#' starts a comment, blank lines are
// ignored. Serialization is canonical (sorted keys), so equal configs have
// equal fingerprints.
class KvConfig {
 public:
  static KvConfig parse(const std::string& text);
  static KvConfig load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_str(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  std::string canonical_text() const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

enum class MamlOrder { kFirst, kFull };

struct TrainConfig {
  int64_t k = 5;
  int64_t m = 10;
  int64_t candidate_size = 50;
  int64_t dim = 100;
  int64_t neighbor_cap = 50;
  double outer_lr = 0.001;
  double inner_lr = 1.0;
  double lambda = 0.05;
  double gamma = 1.0;
  double tau = 0.5;
  int64_t n_false_contexts = 1;
  int64_t tasks_per_step = 32;
  int64_t max_steps = 30000;
  int64_t eval_interval = 1000;
  MamlOrder maml_order = MamlOrder::kFirst;
  double drop_path = 0.2;
  bool no_mtransd = false;
  bool no_mrl = false;
  bool no_context = false;
  bool filtered_eval = true;
  uint64_t seed = 1;

  static TrainConfig from_kv(const KvConfig& kv);
  KvConfig to_kv() const;
  void validate() const;

  // FNV-1a of the canonical key=value text, hex encoded. Recorded in
  // checkpoints and metric reports.
  std::string fingerprint() const;
};

std::string format_double(double v);  // shortest round-trippable formatting

}  // namespace metakg
