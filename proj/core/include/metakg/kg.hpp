#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace metakg {

struct Triplet {
  int64_t h = -1;
  int64_t r = -1;
  int64_t t = -1;
  bool operator==(const Triplet&) const = default;
};

using RelEnt = std::pair<int64_t, int64_t>;      // (relation id, entity id)
using EntityPair = std::pair<int64_t, int64_t>;  // (head id, tail id)

enum class KgFormat { kTsv, kGmatchingJson };
enum class TaskSplit { kTrain, kValid, kTest };

// Immutable after load. Background triplets drive the neighbor index; task
// (few-shot) relations live in a separate store and are excluded from the
// index so their triplets cannot leak into contexts. Tail incidence is
// indexed under a derived inverse relation ("<name>#inv"), a distinct
// vocabulary entry.
struct KnowledgeGraph {
  std::vector<std::string> entity_names;
  std::vector<std::string> relation_names;
  std::unordered_map<std::string, int64_t> entity_id_of;
  std::unordered_map<std::string, int64_t> relation_id_of;

  std::vector<Triplet> background;

  std::vector<char> relation_is_few_shot;  // indexed by relation id
  std::vector<char> relation_is_inverse;
  std::vector<int64_t> inverse_relation;  // base <-> inverse, -1 for few-shot relations

  std::map<int64_t, std::vector<EntityPair>> task_pairs;  // few-shot relation -> pairs
  std::vector<int64_t> train_relations;
  std::vector<int64_t> valid_relations;
  std::vector<int64_t> test_relations;

  // per entity, sorted by (relation id, entity id)
  std::vector<std::vector<RelEnt>> neighbor_index;
  // sorted non-few-shot relation ids (base and inverse), the legal alphabet
  // for context tuples and their corruptions
  std::vector<int64_t> context_relation_pool;

  std::map<std::pair<int64_t, int64_t>, std::vector<int64_t>> candidate_lists;

  std::unordered_set<uint64_t> triplet_keys;  // background + task triplets

  std::vector<std::string> warnings;  // load diagnostics; not part of equality

  int64_t entity_count() const { return static_cast<int64_t>(entity_names.size()); }
  int64_t relation_count() const { return static_cast<int64_t>(relation_names.size()); }
  bool contains(int64_t h, int64_t r, int64_t t) const;
  const std::vector<int64_t>* candidates_for(int64_t head, int64_t relation) const;
  const std::vector<int64_t>& split_relations(TaskSplit split) const;
};

uint64_t triplet_key(int64_t h, int64_t r, int64_t t);

// For building graphs programmatically (the synthetic generator, tests):
// fill vocabularies, background, task_pairs and split lists, then call this
// to derive inverse relations, the neighbor index, the context relation pool
// and the membership set. Validates the few-shot / background separation.
void finalize_kg(KnowledgeGraph& g);

// TSV: path names a file of tab-separated head/relation/tail lines.
// gmatching-json: path names a directory holding background.tsv (or
// path_graph), {train,valid,test}_tasks.json (dev_tasks.json accepted for
// valid) and optionally candidates.json keyed "head relation".
KnowledgeGraph load_kg(const std::string& path, KgFormat format);

// Writes the canonical dataset directory (background.tsv, per-split task
// files, candidates.json when present). load_kg(dir, kGmatchingJson) of the
// result reproduces the graph up to kg_equal.
void serialize_kg(const KnowledgeGraph& g, const std::string& dir);

// Name-level equality: vocabularies as sets, triplets, split flags and
// candidate lists. Intentionally independent of id assignment order.
bool kg_equal(const KnowledgeGraph& a, const KnowledgeGraph& b);

// Up to cap neighbor tuples of e. When the index holds more, a deterministic
// uniform sample without replacement drawn from the (seed, e) stream; output
// is sorted by (relation id, entity id).
std::vector<RelEnt> neighbors(const KnowledgeGraph& g, int64_t e, int64_t cap, uint64_t seed);

}  // namespace metakg
