#include "lsan/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lsan/error.hpp"

namespace lsan {
namespace {

struct Dims {
  std::size_t rows;
  std::size_t cols;
};

Dims dims_of(const Tensor& t) { return {t.rows(), t.cols()}; }

// C[m×n] += A[m×k] · B[k×n]. Every entry accumulates over p in increasing
// order whichever path computes it, so results do not depend on the tiling.
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
  constexpr std::size_t kRows = 4;
  constexpr std::size_t kCols = 8;
  std::size_t i = 0;
  for (; i + kRows <= m; i += kRows) {
    std::size_t j = 0;
    for (; j + kCols <= n; j += kCols) {
      double acc[kRows][kCols];
      for (std::size_t r = 0; r < kRows; ++r) {
        for (std::size_t q = 0; q < kCols; ++q) acc[r][q] = c[(i + r) * n + j + q];
      }
      for (std::size_t p = 0; p < k; ++p) {
        const double* bp = b + p * n + j;
        for (std::size_t r = 0; r < kRows; ++r) {
          const double ar = a[(i + r) * k + p];
          for (std::size_t q = 0; q < kCols; ++q) acc[r][q] += ar * bp[q];
        }
      }
      for (std::size_t r = 0; r < kRows; ++r) {
        for (std::size_t q = 0; q < kCols; ++q) c[(i + r) * n + j + q] = acc[r][q];
      }
    }
    for (; j < n; ++j) {
      for (std::size_t r = 0; r < kRows; ++r) {
        double acc = c[(i + r) * n + j];
        for (std::size_t p = 0; p < k; ++p) acc += a[(i + r) * k + p] * b[p * n + j];
        c[(i + r) * n + j] = acc;
      }
    }
  }
  for (; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void transpose(std::size_t rows, std::size_t cols, const double* in, std::vector<double>& out) {
  out.resize(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t q = 0; q < cols; ++q) out[q * rows + r] = in[r * cols + q];
  }
}

// C[m×n] += A[m×k] · B[n×k]ᵀ
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
  thread_local std::vector<double> bt;
  transpose(n, k, b, bt);
  gemm_nn(m, k, n, a, bt.data(), c);
}

// C[k×n] += A[m×k]ᵀ · B[m×n]
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
  thread_local std::vector<double> at;
  transpose(m, k, a, at);
  gemm_nn(k, m, n, at.data(), b, c);
}

Dims broadcast_dims(const Tensor& a, const Tensor& b, Op op) {
  const Dims da = dims_of(a);
  const Dims db = dims_of(b);
  auto merge = [&](std::size_t x, std::size_t y) {
    if (x == y || y == 1) return x;
    if (x == 1) return y;
    throw DimensionError(std::string(op_name(op)) + ": operand shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " do not broadcast");
  };
  return {merge(da.rows, db.rows), merge(da.cols, db.cols)};
}

Shape broadcast_shape(const Tensor& a, const Tensor& b, Dims out) {
  const Dims da = dims_of(a);
  if (da.rows == out.rows && da.cols == out.cols) return a.shape();
  const Dims db = dims_of(b);
  if (db.rows == out.rows && db.cols == out.cols) return b.shape();
  return {out.rows, out.cols};
}

// Flat offset into an operand of dims `d` for output position (r, c).
inline std::size_t bidx(const Dims& d, std::size_t r, std::size_t c) {
  return (d.rows == 1 ? 0 : r) * d.cols + (d.cols == 1 ? 0 : c);
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const char* op_name(Op op) noexcept {
  switch (op) {
    case Op::kConstant: return "constant";
    case Op::kParameter: return "parameter";
    case Op::kMatMul: return "matmul";
    case Op::kMatMulNT: return "matmul_nt";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kExp: return "exp";
    case Op::kAffine: return "scalar_mul";
    case Op::kSoftmax: return "softmax";
    case Op::kReduceSum: return "reduce_sum";
    case Op::kReduceMax: return "reduce_max";
    case Op::kReduceMean: return "reduce_mean";
    case Op::kConcatCols: return "concat_cols";
    case Op::kSliceCols: return "slice_cols";
    case Op::kGatherRows: return "gather_rows";
    case Op::kBce: return "bce";
  }
  return "unknown";
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) throw std::out_of_range("Var does not belong to this tape");
  return nodes_[v.id];
}

const Tensor& Tape::value(Var v) const {
  const Node& n = node(v);
  return n.param ? *n.param : n.value;
}

std::span<const double> Tape::adjoint(Var v) const { return node(v).adj; }

Var Tape::push(Node n) {
  if (n.op != Op::kParameter && n.op != Op::kConstant) require_finite(n.value.data(), op_name(n.op));
  if (n.op != Op::kParameter && n.op != Op::kConstant) {
    for (std::uint32_t in : n.inputs) {
      if (nodes_[in].requires_grad) {
        n.requires_grad = true;
        break;
      }
    }
  }
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Tensor value) {
  require_finite(value.data(), "constant");
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::parameter(Tensor& param) {
  if (auto it = param_ids_.find(&param); it != param_ids_.end()) return Var{it->second};
  require_finite(param.data(), "parameter");
  Node n;
  n.op = Op::kParameter;
  n.param = &param;
  n.requires_grad = true;
  const Var v = push(std::move(n));
  param_ids_.emplace(&param, v.id);
  return v;
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  const Dims da = dims_of(va);
  const Dims db = dims_of(vb);
  if (da.cols != db.rows) {
    throw DimensionError("matmul: inner dimensions disagree, " + shape_string(va.shape()) + " · " +
                         shape_string(vb.shape()));
  }
  Node n;
  n.op = Op::kMatMul;
  n.inputs = {a.id, b.id};
  n.value = Tensor({da.rows, db.cols});
  gemm_nn(da.rows, da.cols, db.cols, va.data().data(), vb.data().data(), n.value.data().data());
  return push(std::move(n));
}

Var Tape::matmul_nt(Var a, Var b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  const Dims da = dims_of(va);
  const Dims db = dims_of(vb);
  if (da.cols != db.cols) {
    throw DimensionError("matmul_nt: inner dimensions disagree, " + shape_string(va.shape()) + " · " +
                         shape_string(vb.shape()) + "ᵀ");
  }
  Node n;
  n.op = Op::kMatMulNT;
  n.inputs = {a.id, b.id};
  n.value = Tensor({da.rows, db.rows});
  Node& bn = nodes_[b.id];
  if (bn.op == Op::kParameter) {
    // Parameters are reused every time step; transpose them once per tape.
    if (bn.aux.empty()) transpose(db.rows, db.cols, vb.data().data(), bn.aux);
    gemm_nn(da.rows, da.cols, db.rows, va.data().data(), bn.aux.data(), n.value.data().data());
  } else {
    gemm_nt(da.rows, da.cols, db.rows, va.data().data(), vb.data().data(), n.value.data().data());
  }
  return push(std::move(n));
}

Var Tape::binary(Op op, Var a, Var b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  const Dims out = broadcast_dims(va, vb, op);
  Node n;
  n.op = op;
  n.inputs = {a.id, b.id};
  n.value = Tensor(broadcast_shape(va, vb, out));
  double* o = n.value.data().data();
  const double* pa = va.data().data();
  const double* pb = vb.data().data();

  if (op == Op::kDiv) {
    for (double d : vb.data()) {
      if (d == 0.0) throw NumericError("div: zero entry in denominator");
    }
  }
  auto apply = [op](double x, double y) {
    switch (op) {
      case Op::kAdd: return x + y;
      case Op::kSub: return x - y;
      case Op::kMul: return x * y;
      default: return x / y;
    }
  };
  if (va.size() == vb.size() && va.size() == n.value.size()) {
    for (std::size_t i = 0; i < n.value.size(); ++i) o[i] = apply(pa[i], pb[i]);
  } else {
    const Dims da = dims_of(va);
    const Dims db = dims_of(vb);
    for (std::size_t r = 0; r < out.rows; ++r) {
      for (std::size_t c = 0; c < out.cols; ++c) o[r * out.cols + c] = apply(pa[bidx(da, r, c)], pb[bidx(db, r, c)]);
    }
  }
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) { return binary(Op::kAdd, a, b); }
Var Tape::sub(Var a, Var b) { return binary(Op::kSub, a, b); }
Var Tape::mul(Var a, Var b) { return binary(Op::kMul, a, b); }
Var Tape::div(Var a, Var b) { return binary(Op::kDiv, a, b); }

Var Tape::unary(Op op, Var x) {
  const Tensor& vx = value(x);
  Node n;
  n.op = op;
  n.inputs = {x.id};
  n.value = Tensor(vx.shape());
  auto in = vx.data();
  auto out = n.value.data();
  switch (op) {
    case Op::kTanh:
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::tanh(in[i]);
      break;
    case Op::kSigmoid:
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = sigmoid_scalar(in[i]);
      break;
    case Op::kExp:
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::exp(in[i]);
      break;
    default:
      throw std::logic_error("not a unary op");
  }
  return push(std::move(n));
}

Var Tape::tanh(Var x) { return unary(Op::kTanh, x); }
Var Tape::sigmoid(Var x) { return unary(Op::kSigmoid, x); }
Var Tape::exp(Var x) { return unary(Op::kExp, x); }

Var Tape::affine(Var x, double scale, double shift) {
  const Tensor& vx = value(x);
  Node n;
  n.op = Op::kAffine;
  n.inputs = {x.id};
  n.scale = scale;
  n.shift = shift;
  n.value = Tensor(vx.shape());
  auto in = vx.data();
  auto out = n.value.data();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = scale * in[i] + shift;
  return push(std::move(n));
}

Var Tape::softmax(Var logits, const Mask& mask) {
  const Tensor& vx = value(logits);
  const Dims d = dims_of(vx);
  if (!mask.empty() && mask.size() != vx.size()) {
    throw DimensionError("softmax: mask length " + std::to_string(mask.size()) + " does not match logits " +
                         shape_string(vx.shape()));
  }
  Node n;
  n.op = Op::kSoftmax;
  n.inputs = {logits.id};
  n.mask = mask;
  n.value = Tensor(vx.shape());
  auto in = vx.data();
  auto out = n.value.data();
  auto masked = [&](std::size_t i) { return !mask.empty() && mask[i] != 0; };
  for (std::size_t r = 0; r < d.rows; ++r) {
    const std::size_t base = r * d.cols;
    double hi = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t c = 0; c < d.cols; ++c) {
      if (masked(base + c)) continue;
      hi = std::max(hi, in[base + c]);
      any = true;
    }
    if (!any) throw EmptyAttentionError("softmax: every position in row " + std::to_string(r) + " is masked");
    double total = 0.0;
    for (std::size_t c = 0; c < d.cols; ++c) {
      const std::size_t i = base + c;
      out[i] = masked(i) ? 0.0 : std::exp(in[i] - hi);
      total += out[i];
    }
    for (std::size_t c = 0; c < d.cols; ++c) out[base + c] /= total;
  }
  return push(std::move(n));
}

Var Tape::reduce(ReduceKind kind, Var x, std::size_t axis) {
  const Tensor& vx = value(x);
  Dims d = dims_of(vx);
  Shape out_shape;
  // Normalize to "reduce along columns of a d.rows × d.cols view".
  std::size_t groups = 0;
  std::size_t extent = 0;
  std::size_t group_stride = 0;
  std::size_t elem_stride = 0;
  if (axis == kAllAxes || (vx.rank() == 1 && axis == 0)) {
    groups = 1;
    extent = vx.size();
    group_stride = 0;
    elem_stride = 1;
    out_shape = {1};
  } else if (vx.rank() == 2 && axis == 1) {
    groups = d.rows;
    extent = d.cols;
    group_stride = d.cols;
    elem_stride = 1;
    out_shape = {d.rows, 1};
  } else if (vx.rank() == 2 && axis == 0) {
    groups = d.cols;
    extent = d.rows;
    group_stride = 1;
    elem_stride = d.cols;
    out_shape = {1, d.cols};
  } else {
    throw DimensionError("reduce: axis " + std::to_string(axis) + " invalid for shape " + shape_string(vx.shape()));
  }
  if (extent == 0) throw DimensionError("reduce: empty axis");

  Node n;
  n.op = kind == ReduceKind::kSum ? Op::kReduceSum : kind == ReduceKind::kMax ? Op::kReduceMax : Op::kReduceMean;
  n.inputs = {x.id};
  n.axis = axis;
  n.value = Tensor(out_shape);
  auto in = vx.data();
  auto out = n.value.data();
  if (kind == ReduceKind::kMax) n.index.resize(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t base = g * group_stride;
    if (kind == ReduceKind::kMax) {
      std::size_t best = base;
      for (std::size_t e = 1; e < extent; ++e) {
        const std::size_t i = base + e * elem_stride;
        if (in[i] > in[best]) best = i;
      }
      out[g] = in[best];
      n.index[g] = best;
    } else {
      double acc = 0.0;
      for (std::size_t e = 0; e < extent; ++e) acc += in[base + e * elem_stride];
      out[g] = kind == ReduceKind::kMean ? acc / static_cast<double>(extent) : acc;
    }
  }
  // Remember the traversal for backward.
  n.aux = {static_cast<double>(groups), static_cast<double>(extent), static_cast<double>(group_stride),
           static_cast<double>(elem_stride)};
  return push(std::move(n));
}

Var Tape::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  const std::size_t rows = value(parts[0]).rows();
  std::size_t cols = 0;
  for (Var p : parts) {
    const Tensor& v = value(p);
    if (v.rows() != rows) throw DimensionError("concat_cols: row counts disagree");
    cols += v.cols();
  }
  Node n;
  n.op = Op::kConcatCols;
  n.value = Tensor({rows, cols});
  n.inputs.reserve(parts.size());
  double* out = n.value.data().data();
  std::size_t offset = 0;
  for (Var p : parts) {
    n.inputs.push_back(p.id);
    const Tensor& v = value(p);
    const std::size_t pc = v.cols();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(v.data().data() + r * pc, pc, out + r * cols + offset);
    }
    offset += pc;
  }
  return push(std::move(n));
}

Var Tape::slice_cols(Var x, std::size_t begin, std::size_t count) {
  const Tensor& vx = value(x);
  const Dims d = dims_of(vx);
  if (count == 0 || begin + count > d.cols) {
    throw DimensionError("slice_cols: columns [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") out of range for " + shape_string(vx.shape()));
  }
  Node n;
  n.op = Op::kSliceCols;
  n.inputs = {x.id};
  n.axis = begin;
  n.value = Tensor({d.rows, count});
  for (std::size_t r = 0; r < d.rows; ++r) {
    std::copy_n(vx.data().data() + r * d.cols + begin, count, n.value.data().data() + r * count);
  }
  return push(std::move(n));
}

Var Tape::gather_rows(Var table, std::span<const std::size_t> indices) {
  const Tensor& vt = value(table);
  const Dims d = dims_of(vt);
  if (indices.empty()) throw DimensionError("gather_rows: no indices");
  Node n;
  n.op = Op::kGatherRows;
  n.inputs = {table.id};
  n.index.assign(indices.begin(), indices.end());
  n.value = Tensor({indices.size(), d.cols});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= d.rows) {
      throw DimensionError("gather_rows: index " + std::to_string(indices[i]) + " out of range for table with " +
                           std::to_string(d.rows) + " rows");
    }
    std::copy_n(vt.data().data() + indices[i] * d.cols, d.cols, n.value.data().data() + i * d.cols);
  }
  return push(std::move(n));
}

Var Tape::bce(Var probs, const Tensor& targets) {
  const Tensor& vp = value(probs);
  if (vp.size() != targets.size()) {
    throw DimensionError("bce: predictions " + shape_string(vp.shape()) + " vs targets " +
                         shape_string(targets.shape()));
  }
  Node n;
  n.op = Op::kBce;
  n.inputs = {probs.id};
  n.aux.assign(targets.data().begin(), targets.data().end());
  double total = 0.0;
  for (std::size_t i = 0; i < vp.size(); ++i) {
    const double p = std::clamp(vp[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    const double y = targets[i];
    total += y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  n.value = Tensor({1}, {-total / static_cast<double>(vp.size())});
  return push(std::move(n));
}

void Tape::backward(Var loss) {
  const Node& ln = node(loss);
  if (ln.value.size() != 1 || ln.param) {
    throw DimensionError("backward: loss must be a scalar op output, got " + shape_string(value(loss).shape()));
  }
  for (std::size_t i = 0; i <= loss.id; ++i) {
    Node& n = nodes_[i];
    if (n.requires_grad) {
      n.adj.assign(value(Var{static_cast<std::uint32_t>(i)}).size(), 0.0);
    } else {
      n.adj.clear();
    }
  }
  for (std::size_t i = loss.id + 1; i < nodes_.size(); ++i) nodes_[i].adj.clear();
  if (!nodes_[loss.id].requires_grad) {
    // Loss does not depend on any parameter: every gradient is zero.
    for (auto& [param, id] : param_ids_) {
      param->enable_grad();
      param->zero_grad();
    }
    return;
  }
  nodes_[loss.id].adj[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    if (nodes_[i].requires_grad) backprop(i);
  }
  for (auto& [param, id] : param_ids_) {
    Tensor* p = nodes_[id].param;
    p->enable_grad();
    auto g = p->grad();
    const auto& adj = nodes_[id].adj;
    if (adj.empty()) {
      std::fill(g.begin(), g.end(), 0.0);
    } else {
      std::copy(adj.begin(), adj.end(), g.begin());
    }
  }
}

void Tape::backprop(std::size_t i) {
  Node& n = nodes_[i];
  if (n.op == Op::kConstant || n.op == Op::kParameter) return;
  const std::vector<double>& g = n.adj;

  auto input_node = [&](std::size_t k) -> Node& { return nodes_[n.inputs[k]]; };
  auto input_value = [&](std::size_t k) -> const Tensor& { return value(Var{n.inputs[k]}); };
  auto wants = [&](std::size_t k) { return input_node(k).requires_grad; };

  switch (n.op) {
    case Op::kMatMul: {
      const Tensor& a = input_value(0);
      const Tensor& b = input_value(1);
      const std::size_t m = a.rows(), k = a.cols(), cols = b.cols();
      if (wants(0)) gemm_nt(m, cols, k, g.data(), b.data().data(), input_node(0).adj.data());
      if (wants(1)) gemm_tn(m, k, cols, a.data().data(), g.data(), input_node(1).adj.data());
      break;
    }
    case Op::kMatMulNT: {
      const Tensor& a = input_value(0);
      const Tensor& b = input_value(1);
      const std::size_t m = a.rows(), k = a.cols(), rows_b = b.rows();
      // gA[m×k] += g[m×n] · B[n×k]
      if (wants(0)) gemm_nn(m, rows_b, k, g.data(), b.data().data(), input_node(0).adj.data());
      // gB[n×k] += gᵀ[n×m] · A[m×k]
      if (wants(1)) gemm_tn(m, rows_b, k, g.data(), a.data().data(), input_node(1).adj.data());
      break;
    }
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv: {
      const Tensor& a = input_value(0);
      const Tensor& b = input_value(1);
      const Dims da = dims_of(a), db = dims_of(b), dout = dims_of(n.value);
      const bool wa = wants(0), wb = wants(1);
      double* ga = wa ? input_node(0).adj.data() : nullptr;
      double* gb = wb ? input_node(1).adj.data() : nullptr;
      const double* pa = a.data().data();
      const double* pb = b.data().data();
      for (std::size_t r = 0; r < dout.rows; ++r) {
        for (std::size_t c = 0; c < dout.cols; ++c) {
          const double gi = g[r * dout.cols + c];
          const std::size_t ia = bidx(da, r, c), ib = bidx(db, r, c);
          switch (n.op) {
            case Op::kAdd:
              if (wa) ga[ia] += gi;
              if (wb) gb[ib] += gi;
              break;
            case Op::kSub:
              if (wa) ga[ia] += gi;
              if (wb) gb[ib] -= gi;
              break;
            case Op::kMul:
              if (wa) ga[ia] += gi * pb[ib];
              if (wb) gb[ib] += gi * pa[ia];
              break;
            default:
              if (wa) ga[ia] += gi / pb[ib];
              if (wb) gb[ib] -= gi * pa[ia] / (pb[ib] * pb[ib]);
              break;
          }
        }
      }
      break;
    }
    case Op::kTanh:
    case Op::kSigmoid:
    case Op::kExp: {
      if (!wants(0)) break;
      double* gx = input_node(0).adj.data();
      auto y = n.value.data();
      for (std::size_t j = 0; j < g.size(); ++j) {
        const double yj = y[j];
        const double d = n.op == Op::kTanh ? 1.0 - yj * yj : n.op == Op::kSigmoid ? yj * (1.0 - yj) : yj;
        gx[j] += g[j] * d;
      }
      break;
    }
    case Op::kAffine: {
      if (!wants(0)) break;
      double* gx = input_node(0).adj.data();
      for (std::size_t j = 0; j < g.size(); ++j) gx[j] += g[j] * n.scale;
      break;
    }
    case Op::kSoftmax: {
      if (!wants(0)) break;
      double* gx = input_node(0).adj.data();
      const Dims d = dims_of(n.value);
      auto y = n.value.data();
      for (std::size_t r = 0; r < d.rows; ++r) {
        const std::size_t base = r * d.cols;
        double dot = 0.0;
        for (std::size_t c = 0; c < d.cols; ++c) dot += g[base + c] * y[base + c];
        for (std::size_t c = 0; c < d.cols; ++c) {
          const std::size_t j = base + c;
          if (!n.mask.empty() && n.mask[j]) continue;
          gx[j] += y[j] * (g[j] - dot);
        }
      }
      break;
    }
    case Op::kReduceSum:
    case Op::kReduceMean:
    case Op::kReduceMax: {
      if (!wants(0)) break;
      double* gx = input_node(0).adj.data();
      const auto groups = static_cast<std::size_t>(n.aux[0]);
      const auto extent = static_cast<std::size_t>(n.aux[1]);
      const auto group_stride = static_cast<std::size_t>(n.aux[2]);
      const auto elem_stride = static_cast<std::size_t>(n.aux[3]);
      for (std::size_t gi = 0; gi < groups; ++gi) {
        if (n.op == Op::kReduceMax) {
          gx[n.index[gi]] += g[gi];
          continue;
        }
        const double share = n.op == Op::kReduceMean ? g[gi] / static_cast<double>(extent) : g[gi];
        const std::size_t base = gi * group_stride;
        for (std::size_t e = 0; e < extent; ++e) gx[base + e * elem_stride] += share;
      }
      break;
    }
    case Op::kConcatCols: {
      const std::size_t rows = n.value.rows(), cols = n.value.cols();
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const std::size_t pc = input_value(k).cols();
        if (wants(k)) {
          double* gx = input_node(k).adj.data();
          for (std::size_t r = 0; r < rows; ++r) {
            const double* src = g.data() + r * cols + offset;
            double* dst = gx + r * pc;
            for (std::size_t c = 0; c < pc; ++c) dst[c] += src[c];
          }
        }
        offset += pc;
      }
      break;
    }
    case Op::kSliceCols: {
      if (!wants(0)) break;
      double* gx = input_node(0).adj.data();
      const std::size_t rows = n.value.rows(), count = n.value.cols(), src_cols = input_value(0).cols();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < count; ++c) gx[r * src_cols + n.axis + c] += g[r * count + c];
      }
      break;
    }
    case Op::kGatherRows: {
      if (!wants(0)) break;
      double* gx = input_node(0).adj.data();
      const std::size_t cols = n.value.cols();
      for (std::size_t r = 0; r < n.index.size(); ++r) {
        double* dst = gx + n.index[r] * cols;
        const double* src = g.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
      }
      break;
    }
    case Op::kBce: {
      if (!wants(0)) break;
      double* gx = input_node(0).adj.data();
      const Tensor& p = input_value(0);
      const double scale = g[0] / static_cast<double>(p.size());
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double pj = std::clamp(p[j], kProbabilityClamp, 1.0 - kProbabilityClamp);
        const double y = n.aux[j];
        gx[j] += scale * (-y / pj + (1.0 - y) / (1.0 - pj));
      }
      break;
    }
    case Op::kConstant:
    case Op::kParameter:
      break;
  }
}

}  // namespace lsan
