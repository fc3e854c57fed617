#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metakg/config.hpp"
#include "metakg/kg.hpp"

namespace metakg {

// A planted target relation defined as the composition of two background
// relations: target(x, y) holds iff some z has bg1(x, z) and bg2(z, y).
struct PlantedRule {
  std::string name;
  TaskSplit split = TaskSplit::kTrain;
  int64_t bg1 = 0;
  int64_t bg2 = 0;
};

struct SyntheticSpec {
  int64_t entities = 200;
  int64_t background_relations = 2;
  double density = 0.004;  // background triplets per relation = density * entities^2
  int64_t train_tasks = 10;
  int64_t valid_tasks = 2;
  int64_t test_tasks = 3;
  int64_t min_instances = 15;   // >= K+M needed downstream
  int64_t max_instances = 500;  // mirrors the long-tail triplet-count window
  int64_t candidate_size = 50;
  int64_t retries = 20;
  uint64_t seed = 7;
  std::vector<PlantedRule> rules;  // drawn from the seed when left empty

  static SyntheticSpec from_kv(const KvConfig& kv);
  KvConfig to_kv() const;
  void validate() const;
};

// Deterministic in the spec. Every planted relation's task triplets equal the
// rule closure over the sampled background; candidate lists contain all true
// tails for (head, relation) plus type-consistent distractors. Throws
// DataError when the retry budget is exhausted without meeting the
// min/max instance window.
KnowledgeGraph generate_synthetic(const SyntheticSpec& spec);

}  // namespace metakg
