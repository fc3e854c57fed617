#include "metakg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "metakg/errors.hpp"
#include "metakg/rng.hpp"
#include "metakg/sampler.hpp"

namespace metakg {

SyntheticSpec SyntheticSpec::from_kv(const KvConfig& kv) {
  SyntheticSpec s;
  s.entities = kv.get_int("entities", s.entities);
  s.background_relations = kv.get_int("background_relations", s.background_relations);
  s.density = kv.get_double("density", s.density);
  s.train_tasks = kv.get_int("train_tasks", s.train_tasks);
  s.valid_tasks = kv.get_int("valid_tasks", s.valid_tasks);
  s.test_tasks = kv.get_int("test_tasks", s.test_tasks);
  s.min_instances = kv.get_int("min_instances", s.min_instances);
  s.max_instances = kv.get_int("max_instances", s.max_instances);
  s.candidate_size = kv.get_int("candidate_size", s.candidate_size);
  s.retries = kv.get_int("retries", s.retries);
  s.seed = static_cast<uint64_t>(kv.get_int("seed", static_cast<int64_t>(s.seed)));
  s.validate();
  return s;
}

KvConfig SyntheticSpec::to_kv() const {
  KvConfig kv;
  kv.set("entities", std::to_string(entities));
  kv.set("background_relations", std::to_string(background_relations));
  kv.set("density", format_double(density));
  kv.set("train_tasks", std::to_string(train_tasks));
  kv.set("valid_tasks", std::to_string(valid_tasks));
  kv.set("test_tasks", std::to_string(test_tasks));
  kv.set("min_instances", std::to_string(min_instances));
  kv.set("max_instances", std::to_string(max_instances));
  kv.set("candidate_size", std::to_string(candidate_size));
  kv.set("retries", std::to_string(retries));
  kv.set("seed", std::to_string(seed));
  return kv;
}

void SyntheticSpec::validate() const {
  if (entities < 2) throw DataError("synthetic: entities must be >= 2");
  if (background_relations < 1) throw DataError("synthetic: background_relations must be >= 1");
  if (density <= 0.0 || density > 1.0) throw DataError("synthetic: density must be in (0,1]");
  if (train_tasks < 0 || valid_tasks < 0 || test_tasks < 0 ||
      train_tasks + valid_tasks + test_tasks < 1) {
    throw DataError("synthetic: need at least one planted task");
  }
  if (min_instances < 1) throw DataError("synthetic: min_instances must be >= 1");
  if (max_instances < min_instances) throw DataError("synthetic: max_instances < min_instances");
  if (candidate_size < 2) throw DataError("synthetic: candidate_size must be >= 2");
  if (retries < 1) throw DataError("synthetic: retries must be >= 1");
}

namespace {

struct Attempt {
  // background edges per relation, as (h, t) pairs
  std::vector<std::vector<EntityPair>> edges;
  std::vector<PlantedRule> rules;
  std::vector<std::vector<EntityPair>> closures;
};

std::vector<EntityPair> rule_closure(const std::vector<EntityPair>& e1,
                                     const std::vector<EntityPair>& e2, int64_t entities) {
  std::vector<std::vector<int64_t>> out2(static_cast<size_t>(entities));
  for (const auto& [z, y] : e2) out2[static_cast<size_t>(z)].push_back(y);
  std::set<EntityPair> pairs;
  for (const auto& [x, z] : e1) {
    for (int64_t y : out2[static_cast<size_t>(z)]) pairs.insert({x, y});
  }
  return {pairs.begin(), pairs.end()};
}

bool try_attempt(const SyntheticSpec& spec, uint64_t attempt_index, Attempt& out) {
  RngStream edge_rng = derive_stream(spec.seed, "synthetic/background", attempt_index);
  int64_t per_relation =
      std::max<int64_t>(1, std::llround(spec.density * static_cast<double>(spec.entities) *
                                        static_cast<double>(spec.entities)));
  per_relation = std::min(per_relation, spec.entities * spec.entities);

  out.edges.assign(static_cast<size_t>(spec.background_relations), {});
  for (auto& edge_list : out.edges) {
    std::unordered_set<uint64_t> seen;
    while (static_cast<int64_t>(edge_list.size()) < per_relation) {
      int64_t h = edge_rng.uniform_int(spec.entities);
      int64_t t = edge_rng.uniform_int(spec.entities);
      uint64_t key = static_cast<uint64_t>(h) * static_cast<uint64_t>(spec.entities) +
                     static_cast<uint64_t>(t);
      if (seen.insert(key).second) edge_list.emplace_back(h, t);
    }
  }

  out.rules = spec.rules;
  if (out.rules.empty()) {
    RngStream rule_rng = derive_stream(spec.seed, "synthetic/rules", attempt_index);
    int64_t total = spec.train_tasks + spec.valid_tasks + spec.test_tasks;
    for (int64_t i = 0; i < total; ++i) {
      PlantedRule rule;
      rule.name = "t" + std::to_string(i);
      rule.split = i < spec.train_tasks                    ? TaskSplit::kTrain
                   : i < spec.train_tasks + spec.valid_tasks ? TaskSplit::kValid
                                                             : TaskSplit::kTest;
      rule.bg1 = rule_rng.uniform_int(spec.background_relations);
      rule.bg2 = rule_rng.uniform_int(spec.background_relations);
      out.rules.push_back(std::move(rule));
    }
  }

  out.closures.clear();
  for (const PlantedRule& rule : out.rules) {
    if (rule.bg1 < 0 || rule.bg1 >= spec.background_relations || rule.bg2 < 0 ||
        rule.bg2 >= spec.background_relations) {
      throw DataError("synthetic: rule references unknown background relation");
    }
    auto closure = rule_closure(out.edges[static_cast<size_t>(rule.bg1)],
                                out.edges[static_cast<size_t>(rule.bg2)], spec.entities);
    int64_t n = static_cast<int64_t>(closure.size());
    if (n < spec.min_instances || n > spec.max_instances) return false;
    out.closures.push_back(std::move(closure));
  }
  return true;
}

}  // namespace

KnowledgeGraph generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();

  Attempt attempt;
  bool ok = false;
  for (int64_t i = 0; i < spec.retries && !ok; ++i) {
    ok = try_attempt(spec, static_cast<uint64_t>(i), attempt);
  }
  if (!ok) {
    throw DataError("synthetic: retry budget exhausted; closures missed the [" +
                    std::to_string(spec.min_instances) + ", " +
                    std::to_string(spec.max_instances) +
                    "] instance window (adjust density or entity count)");
  }

  KnowledgeGraph g;
  for (int64_t e = 0; e < spec.entities; ++e) {
    std::string name = "e" + std::to_string(e);
    g.entity_id_of.emplace(name, e);
    g.entity_names.push_back(std::move(name));
  }
  for (int64_t r = 0; r < spec.background_relations; ++r) {
    std::string name = "r" + std::to_string(r);
    g.relation_id_of.emplace(name, r);
    g.relation_names.push_back(std::move(name));
  }
  for (int64_t r = 0; r < spec.background_relations; ++r) {
    for (const auto& [h, t] : attempt.edges[static_cast<size_t>(r)]) {
      g.background.push_back({h, r, t});
    }
  }
  for (size_t i = 0; i < attempt.rules.size(); ++i) {
    const PlantedRule& rule = attempt.rules[i];
    if (g.relation_id_of.count(rule.name)) {
      throw DataError("synthetic: duplicate rule name " + rule.name);
    }
    int64_t rel = g.relation_count();
    g.relation_id_of.emplace(rule.name, rel);
    g.relation_names.push_back(rule.name);
    g.task_pairs[rel] = attempt.closures[i];
    switch (rule.split) {
      case TaskSplit::kTrain: g.train_relations.push_back(rel); break;
      case TaskSplit::kValid: g.valid_relations.push_back(rel); break;
      case TaskSplit::kTest: g.test_relations.push_back(rel); break;
    }
  }
  finalize_kg(g);

  // Candidate lists for every (head, task relation), shared across the
  // relation's tails for that head.
  for (const auto& [rel, pairs] : g.task_pairs) {
    std::map<int64_t, std::vector<int64_t>> tails_by_head;
    for (const auto& [h, t] : pairs) tails_by_head[h].push_back(t);
    for (const auto& [h, tails] : tails_by_head) {
      g.candidate_lists[{h, rel}] =
          build_candidate_list(g, h, rel, tails, spec.candidate_size, spec.seed);
    }
  }
  return g;
}

}  // namespace metakg
