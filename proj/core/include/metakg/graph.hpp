#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "metakg/tensor.hpp"

namespace metakg {

// Reverse-mode autodiff over a closed op set.
//
// Nodes are evaluated eagerly at construction; the graph records the DAG for
// the backward pass. backward() builds gradient *nodes* out of the same op
// set, so gradients are themselves differentiable: inner-loop updates can be
// differentiated through (full second-order mode) or detached (first-order).
// Node ids are assigned in construction order, which is a topological order;
// gradient accumulation follows ids, so backward is deterministic.

enum class Op : uint8_t {
  kLeaf,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kScale,      // c * x, c compile-time constant
  kAddConst,   // x + c
  kMatmul,
  kTranspose,
  kConcat,     // 1-D variadic
  kSlice1d,    // i0 = offset, i1 = length
  kPad1d,      // i0 = offset, i1 = total length
  kStackRows,  // K rank-1 inputs -> [K x C]
  kSliceRow,   // i0 = row
  kPadRow,     // i0 = row, i1 = total rows
  kGatherRows,   // table [V x C], ids -> [n x C]
  kScatterRows,  // grad [n x C], ids, i0 = V -> [V x C], duplicate ids add
  kSumRows,        // [K x C] -> [C]
  kBroadcastRows,  // [C], i0 = K -> [K x C]
  kRowsDot,        // per-row dot of two [K x C] -> [K]
  kBcastCols,      // [K], i0 = C -> [K x C], row i filled with v_i
  kDot,   // flattened inner product of same-shape tensors -> scalar
  kSmul,  // scalar node * tensor
  kSoftmax1d,
  kSoftmaxRows,
  kExp,
  kLog,
  kSqrt,
  kTanh,
  kRelu,
  kL2Norm,  // rank-1 -> scalar
};

const char* op_name(Op op);

struct Node {
  Op op = Op::kConstant;
  bool requires_grad = false;
  Tensor value;
  std::vector<int32_t> inputs;
  double c = 0.0;
  int64_t i0 = 0;
  int64_t i1 = 0;
  std::shared_ptr<const std::vector<int64_t>> ids;  // gather/scatter row ids
};

class Graph;

struct Var {
  Graph* g = nullptr;
  int32_t id = -1;

  bool defined() const { return g != nullptr && id >= 0; }
  const Tensor& value() const;
  const std::vector<int64_t>& shape() const;
  bool requires_grad() const;
};

class Graph {
 public:
  // When set, every computed value is scanned and a NumericError naming the
  // originating node is thrown on NaN/Inf.
  bool check_finite = true;

  Var leaf(Tensor t, bool requires_grad = true);
  Var constant(Tensor t);

  size_t size() const { return nodes_.size(); }
  const Node& node(int32_t id) const { return nodes_[static_cast<size_t>(id)]; }

  Var emit(Node n);

 private:
  std::deque<Node> nodes_;
};

// ---- primitive ops ----
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var x, double c);
Var add_const(Var x, double c);
Var matmul(Var a, Var b);
Var transpose(Var a);
Var concat(std::span<const Var> parts);
Var concat(Var a, Var b);
Var slice1d(Var x, int64_t offset, int64_t len);
Var stack_rows(std::span<const Var> rows);
Var slice_row(Var m, int64_t row);
Var gather_rows(Var table, std::vector<int64_t> ids);
Var scatter_rows(Var grad, std::vector<int64_t> ids, int64_t table_rows);
Var sum_rows(Var m);
Var broadcast_rows(Var v, int64_t k);
Var rows_dot(Var a, Var b);
Var bcast_cols(Var v, int64_t c);
Var dot(Var a, Var b);
Var smul(Var s, Var x);
Var softmax(Var v);
Var softmax_rows(Var m);
Var exp(Var x);
Var log(Var x);
Var sqrt(Var x);
Var tanh(Var x);
Var relu(Var x);
Var l2norm(Var v);

// ---- composites ----
Var neg(Var x);
Var mean_rows(Var m);
Var matvec(Var m, Var v);
Var vecmat(Var v, Var m);
Var linear(Var x, Var w, Var b);      // rank-2 x: x*w + b per row
Var vec_linear(Var x, Var w, Var b);  // rank-1 x
Var layer_norm_rows(Var x, Var gain, Var bias, double eps = 1e-5);
Var cosine(Var a, Var b);  // errors on zero-norm input
Var logsumexp(Var v);

Var detach(Var x);

// Inverted dropout / drop-path mask: entries are 0 with probability rate and
// 1/(1-rate) otherwise. Enters a graph as a constant.
class RngStream;
Tensor dropout_mask(std::vector<int64_t> shape, double rate, RngStream& rng);

// Gradient of a scalar loss with respect to each entry of wrt. Entries
// unreachable from the loss get a zero tensor. Returned Vars live in the same
// graph and may be differentiated again.
std::vector<Var> backward(Var loss, std::span<const Var> wrt);

}  // namespace metakg
