#include "metakg/kg.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "metakg/errors.hpp"
#include "metakg/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace metakg {

namespace {

constexpr int64_t kMaxVocab = int64_t{1} << 21;  // id packing limit for the triplet set
constexpr const char* kInverseSuffix = "#inv";

struct Builder {
  KnowledgeGraph g;

  int64_t entity(const std::string& name) {
    auto it = g.entity_id_of.find(name);
    if (it != g.entity_id_of.end()) return it->second;
    int64_t id = g.entity_count();
    g.entity_names.push_back(name);
    g.entity_id_of.emplace(name, id);
    return id;
  }

  int64_t relation(const std::string& name) {
    auto it = g.relation_id_of.find(name);
    if (it != g.relation_id_of.end()) return it->second;
    if (name.size() > 4 && name.ends_with(kInverseSuffix)) {
      throw DataError("relation name uses reserved suffix '" + std::string(kInverseSuffix) +
                      "': " + name);
    }
    int64_t id = g.relation_count();
    g.relation_names.push_back(name);
    g.relation_id_of.emplace(name, id);
    return id;
  }
};

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return out;
}

void read_background_tsv(Builder& b, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open triplet file " + path);
  std::string line;
  int64_t lineno = 0;
  std::unordered_set<uint64_t> seen;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": malformed triplet line");
    }
    int64_t h = b.entity(fields[0]);
    int64_t r = b.relation(fields[1]);
    int64_t t = b.entity(fields[2]);
    if (b.g.entity_count() >= kMaxVocab || b.g.relation_count() >= kMaxVocab) {
      throw DataError("vocabulary exceeds the in-memory index limit");
    }
    uint64_t key = triplet_key(h, r, t);
    if (!seen.insert(key).second) {
      b.g.warnings.push_back(path + ":" + std::to_string(lineno) + ": duplicate triplet dropped");
      continue;
    }
    b.g.background.push_back({h, r, t});
  }
}

json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path);
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
  return j;
}

void read_task_file(Builder& b, const std::string& path, TaskSplit split) {
  json j = read_json_file(path);
  if (!j.is_object()) throw DataError(path + ": task file must be a JSON object");
  std::vector<int64_t>* bucket = nullptr;
  switch (split) {
    case TaskSplit::kTrain: bucket = &b.g.train_relations; break;
    case TaskSplit::kValid: bucket = &b.g.valid_relations; break;
    case TaskSplit::kTest: bucket = &b.g.test_relations; break;
  }
  for (const auto& [rel_name, arr] : j.items()) {
    int64_t rel = b.relation(rel_name);
    if (!arr.is_array()) throw DataError(path + ": relation " + rel_name + " is not an array");
    auto& pairs = b.g.task_pairs[rel];
    std::unordered_set<uint64_t> seen;
    for (const auto& triple : arr) {
      if (!triple.is_array() || triple.size() != 3) {
        throw DataError(path + ": malformed triple under " + rel_name);
      }
      std::string hs = triple[0].get<std::string>();
      std::string rs = triple[1].get<std::string>();
      std::string ts = triple[2].get<std::string>();
      if (rs != rel_name) {
        throw DataError(path + ": triple relation '" + rs + "' does not match key '" + rel_name +
                        "'");
      }
      int64_t h = b.entity(hs);
      int64_t t = b.entity(ts);
      uint64_t key = triplet_key(h, rel, t);
      if (!seen.insert(key).second) {
        b.g.warnings.push_back(path + ": duplicate task triplet dropped under " + rel_name);
        continue;
      }
      pairs.emplace_back(h, t);
    }
    bucket->push_back(rel);
  }
}

void read_candidates_file(Builder& b, const std::string& path) {
  json j = read_json_file(path);
  if (!j.is_object()) throw DataError(path + ": candidates file must be a JSON object");
  for (const auto& [key, arr] : j.items()) {
    size_t space = key.rfind(' ');
    if (space == std::string::npos) {
      throw DataError(path + ": candidate key '" + key + "' is not 'head relation'");
    }
    std::string head_name = key.substr(0, space);
    std::string rel_name = key.substr(space + 1);
    auto hit = b.g.entity_id_of.find(head_name);
    if (hit == b.g.entity_id_of.end()) {
      throw DataError(path + ": unknown entity in candidate file: " + head_name);
    }
    auto rit = b.g.relation_id_of.find(rel_name);
    if (rit == b.g.relation_id_of.end()) {
      throw DataError(path + ": unknown relation in candidate file: " + rel_name);
    }
    if (!arr.is_array()) throw DataError(path + ": candidates for '" + key + "' not an array");
    std::vector<int64_t> ids;
    ids.reserve(arr.size());
    for (const auto& ent : arr) {
      auto eit = b.g.entity_id_of.find(ent.get<std::string>());
      if (eit == b.g.entity_id_of.end()) {
        throw DataError(path + ": unknown entity in candidate file: " + ent.get<std::string>());
      }
      ids.push_back(eit->second);
    }
    b.g.candidate_lists[{hit->second, rit->second}] = std::move(ids);
  }
}

}  // namespace

void finalize_kg(KnowledgeGraph& g) {
  if (g.background.empty()) throw DataError("empty graph");

  int64_t base_count = g.relation_count();
  g.relation_is_few_shot.assign(static_cast<size_t>(base_count), 0);
  for (const auto& [rel, pairs] : g.task_pairs) {
    g.relation_is_few_shot[static_cast<size_t>(rel)] = 1;
  }
  for (const Triplet& tp : g.background) {
    if (g.relation_is_few_shot[static_cast<size_t>(tp.r)]) {
      throw DataError("few-shot relation '" + g.relation_names[static_cast<size_t>(tp.r)] +
                      "' appears in the background graph");
    }
  }

  g.inverse_relation.assign(static_cast<size_t>(base_count), -1);
  g.relation_is_inverse.assign(static_cast<size_t>(base_count), 0);
  for (int64_t r = 0; r < base_count; ++r) {
    if (g.relation_is_few_shot[static_cast<size_t>(r)]) continue;
    std::string inv_name = g.relation_names[static_cast<size_t>(r)] + kInverseSuffix;
    int64_t inv = g.relation_count();
    g.relation_names.push_back(inv_name);
    g.relation_id_of.emplace(inv_name, inv);
    g.relation_is_few_shot.push_back(0);
    g.relation_is_inverse.push_back(1);
    g.inverse_relation.push_back(r);
    g.inverse_relation[static_cast<size_t>(r)] = inv;
  }
  if (g.relation_count() >= kMaxVocab) {
    throw DataError("vocabulary exceeds the in-memory index limit");
  }

  g.neighbor_index.assign(static_cast<size_t>(g.entity_count()), {});
  for (const Triplet& tp : g.background) {
    g.neighbor_index[static_cast<size_t>(tp.h)].emplace_back(tp.r, tp.t);
    g.neighbor_index[static_cast<size_t>(tp.t)].emplace_back(
        g.inverse_relation[static_cast<size_t>(tp.r)], tp.h);
  }
  for (auto& tuples : g.neighbor_index) std::sort(tuples.begin(), tuples.end());

  g.context_relation_pool.clear();
  for (int64_t r = 0; r < g.relation_count(); ++r) {
    if (!g.relation_is_few_shot[static_cast<size_t>(r)]) g.context_relation_pool.push_back(r);
  }

  g.triplet_keys.clear();
  for (const Triplet& tp : g.background) g.triplet_keys.insert(triplet_key(tp.h, tp.r, tp.t));
  for (const auto& [rel, pairs] : g.task_pairs) {
    for (const auto& [h, t] : pairs) g.triplet_keys.insert(triplet_key(h, rel, t));
  }
}

namespace {

std::string find_existing(const fs::path& dir, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    fs::path p = dir / n;
    if (fs::exists(p)) return p.string();
  }
  return "";
}

}  // namespace

uint64_t triplet_key(int64_t h, int64_t r, int64_t t) {
  return (static_cast<uint64_t>(h) << 42) | (static_cast<uint64_t>(r) << 21) |
         static_cast<uint64_t>(t);
}

bool KnowledgeGraph::contains(int64_t h, int64_t r, int64_t t) const {
  return triplet_keys.count(triplet_key(h, r, t)) > 0;
}

const std::vector<int64_t>* KnowledgeGraph::candidates_for(int64_t head, int64_t relation) const {
  auto it = candidate_lists.find({head, relation});
  return it == candidate_lists.end() ? nullptr : &it->second;
}

const std::vector<int64_t>& KnowledgeGraph::split_relations(TaskSplit split) const {
  switch (split) {
    case TaskSplit::kTrain: return train_relations;
    case TaskSplit::kValid: return valid_relations;
    case TaskSplit::kTest: return test_relations;
  }
  throw std::invalid_argument("bad split");
}

KnowledgeGraph load_kg(const std::string& path, KgFormat format) {
  Builder b;
  if (format == KgFormat::kTsv) {
    read_background_tsv(b, path);
    finalize_kg(b.g);
    return std::move(b.g);
  }

  fs::path dir(path);
  if (!fs::is_directory(dir)) {
    throw DataError("gmatching-json dataset must be a directory: " + path);
  }
  std::string bg = find_existing(dir, {"background.tsv", "path_graph"});
  if (bg.empty()) throw DataError("no background.tsv or path_graph in " + path);
  read_background_tsv(b, bg);

  if (std::string p = find_existing(dir, {"train_tasks.json"}); !p.empty()) {
    read_task_file(b, p, TaskSplit::kTrain);
  }
  if (std::string p = find_existing(dir, {"valid_tasks.json", "dev_tasks.json"}); !p.empty()) {
    read_task_file(b, p, TaskSplit::kValid);
  }
  if (std::string p = find_existing(dir, {"test_tasks.json"}); !p.empty()) {
    read_task_file(b, p, TaskSplit::kTest);
  }
  if (std::string p = find_existing(dir, {"candidates.json", "rel2candidates.json"}); !p.empty()) {
    read_candidates_file(b, p);
  }
  finalize_kg(b.g);
  return std::move(b.g);
}

void serialize_kg(const KnowledgeGraph& g, const std::string& dir) {
  fs::create_directories(dir);
  {
    std::ofstream os(fs::path(dir) / "background.tsv");
    if (!os) throw DataError("cannot write background.tsv under " + dir);
    for (const Triplet& tp : g.background) {
      os << g.entity_names[static_cast<size_t>(tp.h)] << '\t'
         << g.relation_names[static_cast<size_t>(tp.r)] << '\t'
         << g.entity_names[static_cast<size_t>(tp.t)] << '\n';
    }
  }

  auto write_tasks = [&](const std::vector<int64_t>& rels, const char* filename) {
    if (rels.empty()) return;
    json j = json::object();
    for (int64_t rel : rels) {
      const std::string& rel_name = g.relation_names[static_cast<size_t>(rel)];
      json arr = json::array();
      for (const auto& [h, t] : g.task_pairs.at(rel)) {
        arr.push_back({g.entity_names[static_cast<size_t>(h)], rel_name,
                       g.entity_names[static_cast<size_t>(t)]});
      }
      j[rel_name] = std::move(arr);
    }
    std::ofstream os(fs::path(dir) / filename);
    os << j.dump(1) << '\n';
  };
  write_tasks(g.train_relations, "train_tasks.json");
  write_tasks(g.valid_relations, "valid_tasks.json");
  write_tasks(g.test_relations, "test_tasks.json");

  if (!g.candidate_lists.empty()) {
    json j = json::object();
    for (const auto& [key, ents] : g.candidate_lists) {
      std::string k = g.entity_names[static_cast<size_t>(key.first)] + " " +
                      g.relation_names[static_cast<size_t>(key.second)];
      json arr = json::array();
      for (int64_t e : ents) arr.push_back(g.entity_names[static_cast<size_t>(e)]);
      j[k] = std::move(arr);
    }
    std::ofstream os(fs::path(dir) / "candidates.json");
    os << j.dump(1) << '\n';
  }
}

namespace {

using NameTriple = std::array<std::string, 3>;

std::vector<NameTriple> named_background(const KnowledgeGraph& g) {
  std::vector<NameTriple> out;
  out.reserve(g.background.size());
  for (const Triplet& tp : g.background) {
    out.push_back({g.entity_names[static_cast<size_t>(tp.h)],
                   g.relation_names[static_cast<size_t>(tp.r)],
                   g.entity_names[static_cast<size_t>(tp.t)]});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::map<std::string, std::vector<std::pair<std::string, std::string>>> named_tasks(
    const KnowledgeGraph& g) {
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> out;
  for (const auto& [rel, pairs] : g.task_pairs) {
    auto& v = out[g.relation_names[static_cast<size_t>(rel)]];
    for (const auto& [h, t] : pairs) {
      v.emplace_back(g.entity_names[static_cast<size_t>(h)],
                     g.entity_names[static_cast<size_t>(t)]);
    }
    std::sort(v.begin(), v.end());
  }
  return out;
}

std::set<std::string> name_set(const std::vector<std::string>& names, const std::vector<char>* keep,
                               const std::vector<char>& is_inverse) {
  std::set<std::string> out;
  for (size_t i = 0; i < names.size(); ++i) {
    if (is_inverse[i]) continue;  // derived entries are not part of equality
    if (keep == nullptr || (*keep)[i]) out.insert(names[i]);
  }
  return out;
}

std::set<std::string> split_names(const KnowledgeGraph& g, const std::vector<int64_t>& rels) {
  std::set<std::string> out;
  for (int64_t r : rels) out.insert(g.relation_names[static_cast<size_t>(r)]);
  return out;
}

std::map<std::string, std::vector<std::string>> named_candidates(const KnowledgeGraph& g) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [key, ents] : g.candidate_lists) {
    std::string k = g.entity_names[static_cast<size_t>(key.first)] + " " +
                    g.relation_names[static_cast<size_t>(key.second)];
    std::vector<std::string> v;
    for (int64_t e : ents) v.push_back(g.entity_names[static_cast<size_t>(e)]);
    out[k] = std::move(v);
  }
  return out;
}

}  // namespace

bool kg_equal(const KnowledgeGraph& a, const KnowledgeGraph& b) {
  if (std::set<std::string>(a.entity_names.begin(), a.entity_names.end()) !=
      std::set<std::string>(b.entity_names.begin(), b.entity_names.end())) {
    return false;
  }
  if (name_set(a.relation_names, nullptr, a.relation_is_inverse) !=
      name_set(b.relation_names, nullptr, b.relation_is_inverse)) {
    return false;
  }
  if (named_background(a) != named_background(b)) return false;
  if (named_tasks(a) != named_tasks(b)) return false;
  if (split_names(a, a.train_relations) != split_names(b, b.train_relations)) return false;
  if (split_names(a, a.valid_relations) != split_names(b, b.valid_relations)) return false;
  if (split_names(a, a.test_relations) != split_names(b, b.test_relations)) return false;
  if (named_candidates(a) != named_candidates(b)) return false;
  return true;
}

std::vector<RelEnt> neighbors(const KnowledgeGraph& g, int64_t e, int64_t cap, uint64_t seed) {
  if (e < 0 || e >= g.entity_count()) {
    throw std::invalid_argument("neighbors: unknown entity id " + std::to_string(e));
  }
  if (cap < 1) throw std::invalid_argument("neighbors: cap must be >= 1");
  const auto& all = g.neighbor_index[static_cast<size_t>(e)];
  if (static_cast<int64_t>(all.size()) <= cap) return all;
  RngStream rng = derive_stream(seed, "neighbors", static_cast<uint64_t>(e));
  auto picks = rng.sample_without_replacement(static_cast<int64_t>(all.size()), cap);
  std::sort(picks.begin(), picks.end());
  std::vector<RelEnt> out;
  out.reserve(picks.size());
  for (int64_t i : picks) out.push_back(all[static_cast<size_t>(i)]);
  return out;
}

}  // namespace metakg
