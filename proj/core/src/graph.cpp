#include "metakg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "metakg/errors.hpp"
#include "metakg/rng.hpp"

namespace metakg {

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kConstant: return "constant";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kScale: return "scale";
    case Op::kAddConst: return "add_const";
    case Op::kMatmul: return "matmul";
    case Op::kTranspose: return "transpose";
    case Op::kConcat: return "concat";
    case Op::kSlice1d: return "slice1d";
    case Op::kPad1d: return "pad1d";
    case Op::kStackRows: return "stack_rows";
    case Op::kSliceRow: return "slice_row";
    case Op::kPadRow: return "pad_row";
    case Op::kGatherRows: return "gather_rows";
    case Op::kScatterRows: return "scatter_rows";
    case Op::kSumRows: return "sum_rows";
    case Op::kBroadcastRows: return "broadcast_rows";
    case Op::kRowsDot: return "rows_dot";
    case Op::kBcastCols: return "bcast_cols";
    case Op::kDot: return "dot";
    case Op::kSmul: return "smul";
    case Op::kSoftmax1d: return "softmax";
    case Op::kSoftmaxRows: return "softmax_rows";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSqrt: return "sqrt";
    case Op::kTanh: return "tanh";
    case Op::kRelu: return "relu";
    case Op::kL2Norm: return "l2norm";
  }
  return "?";
}

const Tensor& Var::value() const { return g->node(id).value; }
const std::vector<int64_t>& Var::shape() const { return g->node(id).value.shape(); }
bool Var::requires_grad() const { return g->node(id).requires_grad; }

namespace {

[[noreturn]] void shape_error(const char* what, const Tensor& a) {
  throw std::invalid_argument(std::string(what) + ": got " + a.shape_str());
}

void require_same_shape(const char* what, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " +
                                b.shape_str());
  }
}

void require_rank(const char* what, const Tensor& a, int64_t rank) {
  if (a.rank() != rank) shape_error(what, a);
}

void softmax_into(const double* in, double* out, int64_t n) {
  double m = in[0];
  for (int64_t i = 1; i < n; ++i) m = std::max(m, in[i]);
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    out[i] = std::exp(in[i] - m);
    s += out[i];
  }
  for (int64_t i = 0; i < n; ++i) out[i] /= s;
}

Tensor eval_node(const Graph& g, const Node& n) {
  auto in = [&](size_t i) -> const Tensor& { return g.node(n.inputs[i]).value; };
  switch (n.op) {
    case Op::kLeaf:
    case Op::kConstant:
      return n.value;
    case Op::kAdd: {
      require_same_shape("add", in(0), in(1));
      Tensor out(in(0).shape());
      auto a = in(0).span(), b = in(1).span();
      auto o = out.span();
      for (size_t i = 0; i < o.size(); ++i) o[i] = a[i] + b[i];
      return out;
    }
    case Op::kSub: {
      require_same_shape("sub", in(0), in(1));
      Tensor out(in(0).shape());
      auto a = in(0).span(), b = in(1).span();
      auto o = out.span();
      for (size_t i = 0; i < o.size(); ++i) o[i] = a[i] - b[i];
      return out;
    }
    case Op::kMul: {
      require_same_shape("mul", in(0), in(1));
      Tensor out(in(0).shape());
      auto a = in(0).span(), b = in(1).span();
      auto o = out.span();
      for (size_t i = 0; i < o.size(); ++i) o[i] = a[i] * b[i];
      return out;
    }
    case Op::kDiv: {
      require_same_shape("div", in(0), in(1));
      Tensor out(in(0).shape());
      auto a = in(0).span(), b = in(1).span();
      auto o = out.span();
      for (size_t i = 0; i < o.size(); ++i) o[i] = a[i] / b[i];
      return out;
    }
    case Op::kScale: {
      Tensor out(in(0).shape());
      auto a = in(0).span();
      auto o = out.span();
      for (size_t i = 0; i < o.size(); ++i) o[i] = a[i] * n.c;
      return out;
    }
    case Op::kAddConst: {
      Tensor out(in(0).shape());
      auto a = in(0).span();
      auto o = out.span();
      for (size_t i = 0; i < o.size(); ++i) o[i] = a[i] + n.c;
      return out;
    }
    case Op::kMatmul: {
      require_rank("matmul lhs", in(0), 2);
      require_rank("matmul rhs", in(1), 2);
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: inner extents differ " + a.shape_str() + " * " +
                                    b.shape_str());
      }
      int64_t m = a.rows(), k = a.cols(), p = b.cols();
      Tensor out({m, p});
      const double* ad = a.data();
      const double* bd = b.data();
      double* od = out.data();
      for (int64_t i = 0; i < m; ++i) {
        for (int64_t kk = 0; kk < k; ++kk) {
          double av = ad[i * k + kk];
          if (av == 0.0) continue;
          const double* brow = bd + kk * p;
          double* orow = od + i * p;
          for (int64_t j = 0; j < p; ++j) orow[j] += av * brow[j];
        }
      }
      return out;
    }
    case Op::kTranspose: {
      require_rank("transpose", in(0), 2);
      const Tensor& a = in(0);
      Tensor out({a.cols(), a.rows()});
      for (int64_t i = 0; i < a.rows(); ++i)
        for (int64_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
      return out;
    }
    case Op::kConcat: {
      int64_t total = 0;
      for (int32_t id : n.inputs) {
        const Tensor& t = g.node(id).value;
        require_rank("concat", t, 1);
        total += t.numel();
      }
      Tensor out({total});
      int64_t off = 0;
      for (int32_t id : n.inputs) {
        const Tensor& t = g.node(id).value;
        std::copy(t.data(), t.data() + t.numel(), out.data() + off);
        off += t.numel();
      }
      return out;
    }
    case Op::kSlice1d: {
      require_rank("slice1d", in(0), 1);
      if (n.i0 < 0 || n.i1 < 0 || n.i0 + n.i1 > in(0).numel()) {
        throw std::invalid_argument("slice1d: range out of bounds");
      }
      Tensor out({n.i1});
      std::copy(in(0).data() + n.i0, in(0).data() + n.i0 + n.i1, out.data());
      return out;
    }
    case Op::kPad1d: {
      require_rank("pad1d", in(0), 1);
      Tensor out({n.i1});
      std::copy(in(0).data(), in(0).data() + in(0).numel(), out.data() + n.i0);
      return out;
    }
    case Op::kStackRows: {
      int64_t cols = g.node(n.inputs[0]).value.numel();
      Tensor out({static_cast<int64_t>(n.inputs.size()), cols});
      for (size_t i = 0; i < n.inputs.size(); ++i) {
        const Tensor& r = g.node(n.inputs[i]).value;
        require_rank("stack_rows", r, 1);
        if (r.numel() != cols) throw std::invalid_argument("stack_rows: ragged rows");
        std::copy(r.data(), r.data() + cols, out.data() + static_cast<int64_t>(i) * cols);
      }
      return out;
    }
    case Op::kSliceRow: {
      require_rank("slice_row", in(0), 2);
      const Tensor& m = in(0);
      if (n.i0 < 0 || n.i0 >= m.rows()) throw std::invalid_argument("slice_row: row out of range");
      Tensor out({m.cols()});
      std::copy(m.data() + n.i0 * m.cols(), m.data() + (n.i0 + 1) * m.cols(), out.data());
      return out;
    }
    case Op::kPadRow: {
      require_rank("pad_row", in(0), 1);
      Tensor out({n.i1, in(0).numel()});
      std::copy(in(0).data(), in(0).data() + in(0).numel(), out.data() + n.i0 * in(0).numel());
      return out;
    }
    case Op::kGatherRows: {
      require_rank("gather_rows", in(0), 2);
      const Tensor& t = in(0);
      Tensor out({static_cast<int64_t>(n.ids->size()), t.cols()});
      for (size_t i = 0; i < n.ids->size(); ++i) {
        int64_t r = (*n.ids)[i];
        if (r < 0 || r >= t.rows()) throw std::invalid_argument("gather_rows: id out of range");
        std::copy(t.data() + r * t.cols(), t.data() + (r + 1) * t.cols(),
                  out.data() + static_cast<int64_t>(i) * t.cols());
      }
      return out;
    }
    case Op::kScatterRows: {
      require_rank("scatter_rows", in(0), 2);
      const Tensor& gsrc = in(0);
      if (gsrc.rows() != static_cast<int64_t>(n.ids->size())) {
        throw std::invalid_argument("scatter_rows: ids/rows mismatch");
      }
      Tensor out({n.i0, gsrc.cols()});
      for (size_t i = 0; i < n.ids->size(); ++i) {
        int64_t r = (*n.ids)[i];
        if (r < 0 || r >= n.i0) throw std::invalid_argument("scatter_rows: id out of range");
        const double* src = gsrc.data() + static_cast<int64_t>(i) * gsrc.cols();
        double* dst = out.data() + r * gsrc.cols();
        for (int64_t j = 0; j < gsrc.cols(); ++j) dst[j] += src[j];
      }
      return out;
    }
    case Op::kSumRows: {
      require_rank("sum_rows", in(0), 2);
      const Tensor& m = in(0);
      Tensor out({m.cols()});
      for (int64_t i = 0; i < m.rows(); ++i)
        for (int64_t j = 0; j < m.cols(); ++j) out.at(j) += m.at(i, j);
      return out;
    }
    case Op::kBroadcastRows: {
      require_rank("broadcast_rows", in(0), 1);
      const Tensor& v = in(0);
      Tensor out({n.i0, v.numel()});
      for (int64_t i = 0; i < n.i0; ++i)
        std::copy(v.data(), v.data() + v.numel(), out.data() + i * v.numel());
      return out;
    }
    case Op::kRowsDot: {
      require_rank("rows_dot", in(0), 2);
      require_same_shape("rows_dot", in(0), in(1));
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      Tensor out({a.rows()});
      for (int64_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (int64_t j = 0; j < a.cols(); ++j) s += a.at(i, j) * b.at(i, j);
        out.at(i) = s;
      }
      return out;
    }
    case Op::kBcastCols: {
      require_rank("bcast_cols", in(0), 1);
      const Tensor& v = in(0);
      Tensor out({v.numel(), n.i0});
      for (int64_t i = 0; i < v.numel(); ++i)
        for (int64_t j = 0; j < n.i0; ++j) out.at(i, j) = v.at(i);
      return out;
    }
    case Op::kDot: {
      require_same_shape("dot", in(0), in(1));
      auto a = in(0).span(), b = in(1).span();
      double s = 0.0;
      for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
      return Tensor::scalar(s);
    }
    case Op::kSmul: {
      if (in(0).numel() != 1) shape_error("smul: scalar operand", in(0));
      double s = in(0).at(0);
      Tensor out(in(1).shape());
      auto x = in(1).span();
      auto o = out.span();
      for (size_t i = 0; i < o.size(); ++i) o[i] = s * x[i];
      return out;
    }
    case Op::kSoftmax1d: {
      require_rank("softmax", in(0), 1);
      if (in(0).numel() == 0) throw std::invalid_argument("softmax: empty input");
      Tensor out(in(0).shape());
      softmax_into(in(0).data(), out.data(), in(0).numel());
      return out;
    }
    case Op::kSoftmaxRows: {
      require_rank("softmax_rows", in(0), 2);
      const Tensor& m = in(0);
      Tensor out(m.shape());
      for (int64_t i = 0; i < m.rows(); ++i)
        softmax_into(m.data() + i * m.cols(), out.data() + i * m.cols(), m.cols());
      return out;
    }
    case Op::kExp: {
      Tensor out(in(0).shape());
      auto a = in(0).span();
      auto o = out.span();
      for (size_t i = 0; i < o.size(); ++i) o[i] = std::exp(a[i]);
      return out;
    }
    case Op::kLog: {
      Tensor out(in(0).shape());
      auto a = in(0).span();
      auto o = out.span();
      for (size_t i = 0; i < o.size(); ++i) o[i] = std::log(a[i]);
      return out;
    }
    case Op::kSqrt: {
      Tensor out(in(0).shape());
      auto a = in(0).span();
      auto o = out.span();
      for (size_t i = 0; i < o.size(); ++i) o[i] = std::sqrt(a[i]);
      return out;
    }
    case Op::kTanh: {
      Tensor out(in(0).shape());
      auto a = in(0).span();
      auto o = out.span();
      for (size_t i = 0; i < o.size(); ++i) o[i] = std::tanh(a[i]);
      return out;
    }
    case Op::kRelu: {
      Tensor out(in(0).shape());
      auto a = in(0).span();
      auto o = out.span();
      for (size_t i = 0; i < o.size(); ++i) o[i] = a[i] > 0.0 ? a[i] : 0.0;
      return out;
    }
    case Op::kL2Norm: {
      require_rank("l2norm", in(0), 1);
      auto a = in(0).span();
      double s = 0.0;
      for (double v : a) s += v * v;
      return Tensor::scalar(std::sqrt(s));
    }
  }
  throw std::logic_error("eval_node: unhandled op");
}

}  // namespace

Var Graph::leaf(Tensor t, bool requires_grad) {
  Node n;
  n.op = Op::kLeaf;
  n.requires_grad = requires_grad;
  n.value = std::move(t);
  return emit(std::move(n));
}

Var Graph::constant(Tensor t) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(t);
  return emit(std::move(n));
}

Var Graph::emit(Node n) {
  if (n.op != Op::kLeaf && n.op != Op::kConstant) {
    bool rg = false;
    for (int32_t id : n.inputs) rg = rg || nodes_[static_cast<size_t>(id)].requires_grad;
    n.requires_grad = rg;
    n.value = eval_node(*this, n);
  }
  if (check_finite && !n.value.all_finite()) {
    throw NumericError(std::string("non-finite value at node #") + std::to_string(nodes_.size()) +
                       " (" + op_name(n.op) + ")");
  }
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int32_t>(nodes_.size() - 1)};
}

namespace {

Graph* same_graph(std::initializer_list<Var> vs) {
  Graph* g = nullptr;
  for (const Var& v : vs) {
    if (!v.defined()) throw std::invalid_argument("op on undefined Var");
    if (g == nullptr) g = v.g;
    if (v.g != g) throw std::invalid_argument("op on Vars from different graphs");
  }
  return g;
}

Var emit2(Op op, Var a, Var b) {
  Graph* g = same_graph({a, b});
  Node n;
  n.op = op;
  n.inputs = {a.id, b.id};
  return g->emit(std::move(n));
}

Var emit1(Op op, Var a, double c = 0.0, int64_t i0 = 0, int64_t i1 = 0) {
  Graph* g = same_graph({a});
  Node n;
  n.op = op;
  n.inputs = {a.id};
  n.c = c;
  n.i0 = i0;
  n.i1 = i1;
  return g->emit(std::move(n));
}

}  // namespace

Var add(Var a, Var b) { return emit2(Op::kAdd, a, b); }
Var sub(Var a, Var b) { return emit2(Op::kSub, a, b); }
Var mul(Var a, Var b) { return emit2(Op::kMul, a, b); }
Var div(Var a, Var b) { return emit2(Op::kDiv, a, b); }
Var scale(Var x, double c) { return emit1(Op::kScale, x, c); }
Var add_const(Var x, double c) { return emit1(Op::kAddConst, x, c); }
Var matmul(Var a, Var b) { return emit2(Op::kMatmul, a, b); }
Var transpose(Var a) { return emit1(Op::kTranspose, a); }

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  Graph* g = parts[0].g;
  Node n;
  n.op = Op::kConcat;
  for (const Var& v : parts) {
    same_graph({parts[0], v});
    n.inputs.push_back(v.id);
  }
  return g->emit(std::move(n));
}

Var concat(Var a, Var b) {
  const Var parts[2] = {a, b};
  return concat(std::span<const Var>(parts, 2));
}

Var slice1d(Var x, int64_t offset, int64_t len) { return emit1(Op::kSlice1d, x, 0.0, offset, len); }

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: no inputs");
  Graph* g = rows[0].g;
  Node n;
  n.op = Op::kStackRows;
  for (const Var& v : rows) {
    same_graph({rows[0], v});
    n.inputs.push_back(v.id);
  }
  return g->emit(std::move(n));
}

Var slice_row(Var m, int64_t row) { return emit1(Op::kSliceRow, m, 0.0, row); }

Var gather_rows(Var table, std::vector<int64_t> ids) {
  Graph* g = same_graph({table});
  Node n;
  n.op = Op::kGatherRows;
  n.inputs = {table.id};
  n.ids = std::make_shared<const std::vector<int64_t>>(std::move(ids));
  return g->emit(std::move(n));
}

Var scatter_rows(Var grad, std::vector<int64_t> ids, int64_t table_rows) {
  Graph* g = same_graph({grad});
  Node n;
  n.op = Op::kScatterRows;
  n.inputs = {grad.id};
  n.i0 = table_rows;
  n.ids = std::make_shared<const std::vector<int64_t>>(std::move(ids));
  return g->emit(std::move(n));
}

Var sum_rows(Var m) { return emit1(Op::kSumRows, m); }
Var broadcast_rows(Var v, int64_t k) { return emit1(Op::kBroadcastRows, v, 0.0, k); }
Var rows_dot(Var a, Var b) { return emit2(Op::kRowsDot, a, b); }
Var bcast_cols(Var v, int64_t c) { return emit1(Op::kBcastCols, v, 0.0, c); }
Var dot(Var a, Var b) { return emit2(Op::kDot, a, b); }
Var smul(Var s, Var x) { return emit2(Op::kSmul, s, x); }
Var softmax(Var v) { return emit1(Op::kSoftmax1d, v); }
Var softmax_rows(Var m) { return emit1(Op::kSoftmaxRows, m); }
Var exp(Var x) { return emit1(Op::kExp, x); }
Var log(Var x) { return emit1(Op::kLog, x); }
Var sqrt(Var x) { return emit1(Op::kSqrt, x); }
Var tanh(Var x) { return emit1(Op::kTanh, x); }
Var relu(Var x) { return emit1(Op::kRelu, x); }
Var l2norm(Var v) { return emit1(Op::kL2Norm, v); }

Var neg(Var x) { return scale(x, -1.0); }

Var mean_rows(Var m) {
  int64_t k = m.value().rows();
  if (k == 0) throw std::invalid_argument("mean_rows: empty matrix");
  return scale(sum_rows(m), 1.0 / static_cast<double>(k));
}

Var matvec(Var m, Var v) { return rows_dot(m, broadcast_rows(v, m.value().rows())); }

Var vecmat(Var v, Var m) {
  const Var rows[1] = {v};
  return slice_row(matmul(stack_rows(std::span<const Var>(rows, 1)), m), 0);
}

Var linear(Var x, Var w, Var b) {
  Var y = matmul(x, w);
  return add(y, broadcast_rows(b, y.value().rows()));
}

Var vec_linear(Var x, Var w, Var b) { return add(vecmat(x, w), b); }

Var layer_norm_rows(Var x, Var gain, Var bias, double eps) {
  const Tensor& xv = x.value();
  int64_t k = xv.rows();
  int64_t c = xv.cols();
  Var ones_kc = x.g->constant(Tensor::ones({k, c}));
  Var mu = scale(rows_dot(x, ones_kc), 1.0 / static_cast<double>(c));
  Var centered = sub(x, bcast_cols(mu, c));
  Var var = scale(rows_dot(centered, centered), 1.0 / static_cast<double>(c));
  Var inv = div(x.g->constant(Tensor::ones({k})), sqrt(add_const(var, eps)));
  Var normed = mul(bcast_cols(inv, c), centered);
  return add(mul(broadcast_rows(gain, k), normed), broadcast_rows(bias, k));
}

Var cosine(Var a, Var b) {
  Var na = l2norm(a);
  Var nb = l2norm(b);
  if (na.value().item() < 1e-15 || nb.value().item() < 1e-15) {
    throw NumericError("cosine similarity of zero-norm vector");
  }
  return div(dot(a, b), mul(na, nb));
}

Var logsumexp(Var v) {
  const Tensor& t = v.value();
  double m = t.at(0);
  for (int64_t i = 1; i < t.numel(); ++i) m = std::max(m, t.at(i));
  Var e = exp(add_const(v, -m));
  Var s = dot(e, v.g->constant(Tensor::ones(t.shape())));
  return add_const(log(s), m);
}

Var detach(Var x) { return x.g->constant(x.value()); }

Tensor dropout_mask(std::vector<int64_t> shape, double rate, RngStream& rng) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout_mask: rate must be in [0,1)");
  Tensor mask(std::move(shape));
  double keep = 1.0 / (1.0 - rate);
  for (int64_t i = 0; i < mask.numel(); ++i) {
    mask.at(i) = rng.uniform() < rate ? 0.0 : keep;
  }
  return mask;
}

namespace {

// Gradient construction for one node. g is dL/d(node output); emits dL/d(input)
// contributions via the accumulate callback (input slot -> grad Var).
template <typename Acc>
void backprop_node(Graph& gr, int32_t nid, Var g, Acc&& accumulate) {
  const Node& n = gr.node(nid);
  auto inv = [&](size_t i) { return Var{&gr, n.inputs[i]}; };
  auto needs = [&](size_t i) { return gr.node(n.inputs[i]).requires_grad; };
  switch (n.op) {
    case Op::kLeaf:
    case Op::kConstant:
      return;
    case Op::kAdd:
      if (needs(0)) accumulate(0, g);
      if (needs(1)) accumulate(1, g);
      return;
    case Op::kSub:
      if (needs(0)) accumulate(0, g);
      if (needs(1)) accumulate(1, neg(g));
      return;
    case Op::kMul:
      if (needs(0)) accumulate(0, mul(g, inv(1)));
      if (needs(1)) accumulate(1, mul(g, inv(0)));
      return;
    case Op::kDiv: {
      Var y{&gr, nid};
      if (needs(0)) accumulate(0, div(g, inv(1)));
      if (needs(1)) accumulate(1, neg(div(mul(g, y), inv(1))));
      return;
    }
    case Op::kScale:
      if (needs(0)) accumulate(0, scale(g, n.c));
      return;
    case Op::kAddConst:
      if (needs(0)) accumulate(0, g);
      return;
    case Op::kMatmul:
      if (needs(0)) accumulate(0, matmul(g, transpose(inv(1))));
      if (needs(1)) accumulate(1, matmul(transpose(inv(0)), g));
      return;
    case Op::kTranspose:
      if (needs(0)) accumulate(0, transpose(g));
      return;
    case Op::kConcat: {
      int64_t off = 0;
      for (size_t i = 0; i < n.inputs.size(); ++i) {
        int64_t len = gr.node(n.inputs[i]).value.numel();
        if (needs(i)) accumulate(i, slice1d(g, off, len));
        off += len;
      }
      return;
    }
    case Op::kSlice1d:
      if (needs(0)) {
        Node pad;
        pad.op = Op::kPad1d;
        pad.inputs = {g.id};
        pad.i0 = n.i0;
        pad.i1 = gr.node(n.inputs[0]).value.numel();
        accumulate(0, gr.emit(std::move(pad)));
      }
      return;
    case Op::kPad1d:
      if (needs(0)) accumulate(0, slice1d(g, n.i0, gr.node(n.inputs[0]).value.numel()));
      return;
    case Op::kStackRows:
      for (size_t i = 0; i < n.inputs.size(); ++i) {
        if (needs(i)) accumulate(i, slice_row(g, static_cast<int64_t>(i)));
      }
      return;
    case Op::kSliceRow:
      if (needs(0)) {
        Node pad;
        pad.op = Op::kPadRow;
        pad.inputs = {g.id};
        pad.i0 = n.i0;
        pad.i1 = gr.node(n.inputs[0]).value.rows();
        accumulate(0, gr.emit(std::move(pad)));
      }
      return;
    case Op::kPadRow:
      if (needs(0)) accumulate(0, slice_row(g, n.i0));
      return;
    case Op::kGatherRows:
      if (needs(0)) {
        Node sc;
        sc.op = Op::kScatterRows;
        sc.inputs = {g.id};
        sc.i0 = gr.node(n.inputs[0]).value.rows();
        sc.ids = n.ids;
        accumulate(0, gr.emit(std::move(sc)));
      }
      return;
    case Op::kScatterRows:
      if (needs(0)) {
        Node ga;
        ga.op = Op::kGatherRows;
        ga.inputs = {g.id};
        ga.ids = n.ids;
        accumulate(0, gr.emit(std::move(ga)));
      }
      return;
    case Op::kSumRows:
      if (needs(0)) accumulate(0, broadcast_rows(g, gr.node(n.inputs[0]).value.rows()));
      return;
    case Op::kBroadcastRows:
      if (needs(0)) accumulate(0, sum_rows(g));
      return;
    case Op::kRowsDot: {
      int64_t c = gr.node(n.inputs[0]).value.cols();
      if (needs(0)) accumulate(0, mul(bcast_cols(g, c), inv(1)));
      if (needs(1)) accumulate(1, mul(bcast_cols(g, c), inv(0)));
      return;
    }
    case Op::kBcastCols:
      if (needs(0)) {
        Var ones = gr.constant(Tensor::ones(n.value.shape()));
        accumulate(0, rows_dot(g, ones));
      }
      return;
    case Op::kDot:
      if (needs(0)) accumulate(0, smul(g, inv(1)));
      if (needs(1)) accumulate(1, smul(g, inv(0)));
      return;
    case Op::kSmul:
      if (needs(0)) accumulate(0, dot(g, inv(1)));
      if (needs(1)) accumulate(1, smul(inv(0), g));
      return;
    case Op::kSoftmax1d: {
      if (!needs(0)) return;
      Var y{&gr, nid};
      Var gy = dot(g, y);
      Var ones = gr.constant(Tensor::ones(n.value.shape()));
      accumulate(0, mul(y, sub(g, smul(gy, ones))));
      return;
    }
    case Op::kSoftmaxRows: {
      if (!needs(0)) return;
      Var y{&gr, nid};
      Var r = rows_dot(g, y);
      accumulate(0, mul(y, sub(g, bcast_cols(r, n.value.cols()))));
      return;
    }
    case Op::kExp:
      if (needs(0)) accumulate(0, mul(g, Var{&gr, nid}));
      return;
    case Op::kLog:
      if (needs(0)) accumulate(0, div(g, inv(0)));
      return;
    case Op::kSqrt:
      // d sqrt = g / (2 sqrt(x)); denominator clamped away from zero
      if (needs(0)) accumulate(0, div(g, add_const(scale(Var{&gr, nid}, 2.0), 1e-300)));
      return;
    case Op::kTanh: {
      if (!needs(0)) return;
      Var y{&gr, nid};
      accumulate(0, mul(g, add_const(neg(mul(y, y)), 1.0)));
      return;
    }
    case Op::kRelu: {
      if (!needs(0)) return;
      // 0/1 mask captured as a constant; exact almost everywhere
      const Tensor& x = gr.node(n.inputs[0]).value;
      Tensor mask(x.shape());
      for (int64_t i = 0; i < x.numel(); ++i) mask.at(i) = x.at(i) > 0.0 ? 1.0 : 0.0;
      accumulate(0, mul(g, gr.constant(std::move(mask))));
      return;
    }
    case Op::kL2Norm: {
      if (!needs(0)) return;
      Var y{&gr, nid};
      accumulate(0, smul(div(g, add_const(y, 1e-300)), inv(0)));
      return;
    }
  }
}

}  // namespace

std::vector<Var> backward(Var loss, std::span<const Var> wrt) {
  if (!loss.defined()) throw std::invalid_argument("backward: undefined loss");
  Graph& gr = *loss.g;
  if (loss.value().numel() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar, got " +
                                loss.value().shape_str());
  }
  for (const Var& w : wrt) {
    if (w.g != &gr) throw std::invalid_argument("backward: wrt Var from another graph");
  }

  // grad node id per node, -1 when no gradient has reached it
  std::vector<int32_t> grad_of(static_cast<size_t>(loss.id) + 1, -1);
  grad_of[static_cast<size_t>(loss.id)] = gr.constant(Tensor::ones({1})).id;

  for (int32_t id = loss.id; id >= 0; --id) {
    int32_t gid = grad_of[static_cast<size_t>(id)];
    if (gid < 0 || !gr.node(id).requires_grad) continue;
    Var g{&gr, gid};
    if (!g.value().same_shape(gr.node(id).value)) {
      throw std::logic_error(std::string("backward: gradient shape mismatch at node ") +
                             op_name(gr.node(id).op));
    }
    backprop_node(gr, id, g, [&](size_t slot, Var contribution) {
      int32_t in_id = gr.node(id).inputs[slot];
      int32_t& cur = grad_of[static_cast<size_t>(in_id)];
      if (cur < 0) {
        cur = contribution.id;
      } else {
        cur = add(Var{&gr, cur}, contribution).id;
      }
    });
  }

  std::vector<Var> out;
  out.reserve(wrt.size());
  for (const Var& w : wrt) {
    int32_t gid = w.id <= loss.id ? grad_of[static_cast<size_t>(w.id)] : -1;
    if (gid < 0) {
      out.push_back(gr.constant(Tensor::zeros(w.value().shape())));
    } else {
      out.push_back(Var{&gr, gid});
    }
  }
  return out;
}

}  // namespace metakg
