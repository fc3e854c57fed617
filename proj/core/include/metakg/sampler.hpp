#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "metakg/kg.hpp"

namespace metakg {

// Anchor triplet plus the capped union of its head/tail neighborhoods.
struct TripletContext {
  int64_t h = -1;
  int64_t r = -1;
  int64_t t = -1;
  std::vector<RelEnt> tuples;
  bool corrupted = false;
};

struct QueryInstance {
  int64_t head = -1;
  int64_t true_tail = -1;
  std::vector<int64_t> candidates;  // always contains true_tail
};

struct FewShotTask {
  int64_t relation = -1;
  std::vector<EntityPair> references;   // K support pairs
  std::vector<QueryInstance> queries;   // M query pairs
  std::vector<int64_t> ref_negatives;   // one per reference
  std::vector<int64_t> query_negatives; // one per query
};

// Disjoint uniform K/M split of the relation's task triplets, deterministic
// in seed. m == 0 uses every triplet left after the K references. Negatives
// are filled from the task's candidate pools (see sample_negative).
FewShotTask build_task(const KnowledgeGraph& g, int64_t relation, int64_t k, int64_t m,
                       int64_t candidate_size, uint64_t seed);

// Uniform over candidates t' with (h, r, t') not a known triplet. Throws
// DataError when every candidate is a true tail.
int64_t sample_negative(const KnowledgeGraph& g, int64_t h, int64_t r,
                        std::span<const int64_t> candidates, uint64_t seed);

// Context of an anchor triplet: neighbors(h) followed by neighbors(t), each
// capped independently. May be empty for isolated endpoints.
TripletContext build_context(const KnowledgeGraph& g, int64_t h, int64_t r, int64_t t, int64_t cap,
                             uint64_t seed);

// n independent corruptions of ctx. Every tuple is corrupted: with
// probability 1/2 its relation is replaced, otherwise its entity, by a
// uniform draw that differs from the original and avoids the anchor's own
// h, r, t. Tuple counts are preserved.
std::vector<TripletContext> synthesize_false_contexts(const KnowledgeGraph& g,
                                                      const TripletContext& ctx, int64_t n,
                                                      uint64_t seed);

// Candidate list for (head, relation): all supplied true tails plus
// distractors drawn from entities that share a background tail-relation
// signature with a true tail, padded with uniform entities; deterministically
// shuffled. Used by the synthetic generator and as the fallback when a
// dataset ships no candidate file.
std::vector<int64_t> build_candidate_list(const KnowledgeGraph& g, int64_t head, int64_t relation,
                                          const std::vector<int64_t>& true_tails, int64_t size,
                                          uint64_t seed);

}  // namespace metakg
