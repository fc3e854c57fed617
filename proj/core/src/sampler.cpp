#include "metakg/sampler.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "metakg/errors.hpp"
#include "metakg/rng.hpp"

namespace metakg {

namespace {

uint64_t pair_salt(int64_t a, int64_t b) {
  return (static_cast<uint64_t>(a) << 32) ^ static_cast<uint64_t>(b & 0xffffffff);
}

}  // namespace

FewShotTask build_task(const KnowledgeGraph& g, int64_t relation, int64_t k, int64_t m,
                       int64_t candidate_size, uint64_t seed) {
  if (k < 1) throw std::invalid_argument("build_task: k must be >= 1");
  if (m < 0) throw std::invalid_argument("build_task: m must be >= 0");
  if (candidate_size < 2) throw std::invalid_argument("build_task: candidate_size must be >= 2");
  auto it = g.task_pairs.find(relation);
  if (it == g.task_pairs.end()) {
    throw DataError("build_task: relation id " + std::to_string(relation) +
                    " is not a few-shot task relation");
  }
  const auto& pairs = it->second;
  int64_t total = static_cast<int64_t>(pairs.size());
  int64_t want_m = m == 0 ? total - k : m;
  if (total < k + want_m || want_m < 1) {
    throw DataError("build_task: relation '" + g.relation_names[static_cast<size_t>(relation)] +
                    "' has " + std::to_string(total) + " triplets, needs >= " +
                    std::to_string(k + std::max<int64_t>(want_m, 1)));
  }

  RngStream split_rng = derive_stream(seed, "task/split", static_cast<uint64_t>(relation));
  std::vector<int64_t> order(pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);
  split_rng.shuffle(order);

  FewShotTask task;
  task.relation = relation;
  for (int64_t i = 0; i < k; ++i) task.references.push_back(pairs[static_cast<size_t>(order[i])]);

  // all true tails per head, needed to keep constructed candidate pools honest
  std::map<int64_t, std::vector<int64_t>> tails_by_head;
  for (const auto& [h, t] : pairs) tails_by_head[h].push_back(t);

  for (int64_t i = k; i < k + want_m; ++i) {
    const EntityPair& p = pairs[static_cast<size_t>(order[i])];
    QueryInstance q;
    q.head = p.first;
    q.true_tail = p.second;
    if (const std::vector<int64_t>* released = g.candidates_for(q.head, relation)) {
      q.candidates = *released;
      if (std::find(q.candidates.begin(), q.candidates.end(), q.true_tail) ==
          q.candidates.end()) {
        q.candidates.push_back(q.true_tail);
      }
    } else {
      q.candidates = build_candidate_list(g, q.head, relation, tails_by_head.at(q.head),
                                          candidate_size, seed);
    }
    task.queries.push_back(std::move(q));
  }

  for (size_t i = 0; i < task.references.size(); ++i) {
    const auto& [h, t] = task.references[i];
    std::vector<int64_t> pool;
    if (const std::vector<int64_t>* released = g.candidates_for(h, relation)) {
      pool = *released;
    } else {
      pool = build_candidate_list(g, h, relation, tails_by_head.at(h), candidate_size, seed);
    }
    task.ref_negatives.push_back(
        sample_negative(g, h, relation, pool, seed ^ pair_salt(relation, static_cast<int64_t>(i))));
  }
  for (size_t j = 0; j < task.queries.size(); ++j) {
    const QueryInstance& q = task.queries[j];
    task.query_negatives.push_back(sample_negative(
        g, q.head, relation, q.candidates,
        seed ^ pair_salt(relation, static_cast<int64_t>(task.references.size() + j))));
  }
  return task;
}

int64_t sample_negative(const KnowledgeGraph& g, int64_t h, int64_t r,
                        std::span<const int64_t> candidates, uint64_t seed) {
  std::vector<int64_t> eligible;
  for (int64_t c : candidates) {
    if (!g.contains(h, r, c)) eligible.push_back(c);
  }
  if (eligible.empty()) {
    throw DataError("sample_negative: every candidate forms a true triplet for head " +
                    g.entity_names[static_cast<size_t>(h)]);
  }
  RngStream rng = derive_stream(seed, "negative", pair_salt(h, r));
  return eligible[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(eligible.size())))];
}

TripletContext build_context(const KnowledgeGraph& g, int64_t h, int64_t r, int64_t t, int64_t cap,
                             uint64_t seed) {
  TripletContext ctx;
  ctx.h = h;
  ctx.r = r;
  ctx.t = t;
  ctx.tuples = neighbors(g, h, cap, seed);
  if (t != h) {
    auto tail_side = neighbors(g, t, cap, seed);
    ctx.tuples.insert(ctx.tuples.end(), tail_side.begin(), tail_side.end());
  }
  return ctx;
}

std::vector<TripletContext> synthesize_false_contexts(const KnowledgeGraph& g,
                                                      const TripletContext& ctx, int64_t n,
                                                      uint64_t seed) {
  if (ctx.corrupted) throw std::invalid_argument("synthesize_false_contexts: already corrupted");
  if (n < 1) throw std::invalid_argument("synthesize_false_contexts: n must be >= 1");
  if (ctx.tuples.empty()) throw std::invalid_argument("synthesize_false_contexts: empty context");
  if (g.entity_count() < 2) throw DataError("cannot corrupt entities in a vocabulary of size 1");

  // legal replacement alphabets, anchor's own ids excluded
  std::vector<int64_t> rel_pool;
  for (int64_t rel : g.context_relation_pool) {
    if (rel != ctx.r) rel_pool.push_back(rel);
  }

  std::vector<TripletContext> out;
  out.reserve(static_cast<size_t>(n));
  for (int64_t j = 0; j < n; ++j) {
    RngStream rng = derive_stream(seed, "false_context", static_cast<uint64_t>(j));
    TripletContext fake = ctx;
    fake.corrupted = true;
    for (auto& [rel, ent] : fake.tuples) {
      bool corrupt_relation = rng.uniform() < 0.5;
      if (corrupt_relation && rel_pool.size() < 2) corrupt_relation = false;
      if (corrupt_relation) {
        int64_t pick;
        do {
          pick = rel_pool[static_cast<size_t>(
              rng.uniform_int(static_cast<int64_t>(rel_pool.size())))];
        } while (pick == rel);
        rel = pick;
      } else {
        int64_t pick;
        int64_t guard = 0;
        do {
          pick = rng.uniform_int(g.entity_count());
          if (++guard > 1000000) {
            throw DataError("cannot corrupt entities in a vocabulary of size 1");
          }
        } while (pick == ent || pick == ctx.h || pick == ctx.t);
        ent = pick;
      }
    }
    out.push_back(std::move(fake));
  }
  return out;
}

std::vector<int64_t> build_candidate_list(const KnowledgeGraph& g, int64_t head, int64_t relation,
                                          const std::vector<int64_t>& true_tails, int64_t size,
                                          uint64_t seed) {
  if (size < 2) throw std::invalid_argument("build_candidate_list: size must be >= 2");
  if (true_tails.empty()) throw std::invalid_argument("build_candidate_list: no true tails");

  // tail signature: base relations under which the entity occurs as a tail,
  // read off the inverse-marked tuples of its neighborhood
  auto tail_signature = [&](int64_t e) {
    std::set<int64_t> sig;
    for (const auto& [rel, other] : g.neighbor_index[static_cast<size_t>(e)]) {
      if (g.relation_is_inverse[static_cast<size_t>(rel)]) {
        sig.insert(g.inverse_relation[static_cast<size_t>(rel)]);
      }
    }
    return sig;
  };

  std::set<int64_t> wanted;
  for (int64_t t : true_tails) {
    for (int64_t rel : tail_signature(t)) wanted.insert(rel);
  }

  std::vector<int64_t> pool;
  std::unordered_set<int64_t> in_list(true_tails.begin(), true_tails.end());
  for (int64_t e = 0; e < g.entity_count(); ++e) {
    if (in_list.count(e)) continue;
    auto sig = tail_signature(e);
    bool shares = false;
    for (int64_t rel : sig) {
      if (wanted.count(rel)) {
        shares = true;
        break;
      }
    }
    if (shares) pool.push_back(e);
  }

  RngStream rng = derive_stream(seed, "candidates", pair_salt(head, relation));
  std::vector<int64_t> list(true_tails.begin(), true_tails.end());
  std::sort(list.begin(), list.end());
  list.erase(std::unique(list.begin(), list.end()), list.end());
  in_list = {list.begin(), list.end()};

  rng.shuffle(pool);
  for (int64_t e : pool) {
    if (static_cast<int64_t>(list.size()) >= size) break;
    list.push_back(e);
    in_list.insert(e);
  }
  // pad with uniform entities when the typed pool runs short
  int64_t guard = 0;
  while (static_cast<int64_t>(list.size()) < size &&
         static_cast<int64_t>(in_list.size()) < g.entity_count()) {
    int64_t e = rng.uniform_int(g.entity_count());
    if (in_list.insert(e).second) list.push_back(e);
    if (++guard > 100 * g.entity_count() + 1000) break;
  }
  rng.shuffle(list);
  return list;
}

}  // namespace metakg
