#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "lsan/tensor.hpp"

namespace lsan {

/// Handle to a value recorded on a Tape. Only meaningful for the tape that
/// produced it.
struct Var {
  static constexpr std::uint32_t kInvalid = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t id = kInvalid;

  bool valid() const noexcept { return id != kInvalid; }
  friend bool operator==(Var, Var) = default;
};

enum class Op : std::uint8_t {
  kConstant,
  kParameter,
  kMatMul,
  kMatMulNT,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kTanh,
  kSigmoid,
  kExp,
  kAffine,
  kSoftmax,
  kReduceSum,
  kReduceMax,
  kReduceMean,
  kConcatCols,
  kSliceCols,
  kGatherRows,
  kBce,
};

const char* op_name(Op op) noexcept;

enum class ReduceKind { kSum, kMax, kMean };

/// Per-entry exclusion flags; nonzero means "masked out".
using Mask = std::vector<std::uint8_t>;

/// Reduce over every entry rather than one axis.
inline constexpr std::size_t kAllAxes = std::numeric_limits<std::size_t>::max();

/// Lower/upper clamp applied to probabilities inside the BCE op.
inline constexpr double kProbabilityClamp = 1e-12;

/// Reverse-mode autodiff tape.
///
/// Every op evaluates eagerly, appends one node, and returns its handle, so
/// nodes are stored in topological order by construction. `backward` walks
/// the nodes once in reverse. Parameters are referenced, not copied: their
/// gradient buffers receive d(loss)/d(param) after each backward pass and
/// must outlive the tape.
///
/// Binary elementwise ops broadcast in the matrix view: a dimension of
/// extent 1 stretches to match the other operand.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Var constant(Tensor value);
  /// Registers `param` as a differentiable leaf. Registering the same tensor
  /// twice returns the same handle.
  Var parameter(Tensor& param);

  const Tensor& value(Var v) const;
  std::span<const double> adjoint(Var v) const;
  Op op(Var v) const { return node(v).op; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Var matmul(Var a, Var b);
  /// a · bᵀ, with b stored row-major as [n×k].
  Var matmul_nt(Var a, Var b);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var tanh(Var x);
  Var sigmoid(Var x);
  Var exp(Var x);
  /// scale · x + shift.
  Var affine(Var x, double scale, double shift);
  Var scalar_mul(Var x, double s) { return affine(x, s, 0.0); }

  /// Row-wise softmax with max-logit subtraction. Masked entries come out as
  /// exactly zero; a row with every entry masked throws EmptyAttentionError.
  Var softmax(Var logits, const Mask& mask = {});

  /// Reduction along `axis` of the matrix view (0 = down columns, 1 = along
  /// rows), or over everything with kAllAxes. Max routes its adjoint to the
  /// first maximal entry.
  Var reduce(ReduceKind kind, Var x, std::size_t axis);
  Var sum_all(Var x) { return reduce(ReduceKind::kSum, x, kAllAxes); }

  Var concat_cols(std::span<const Var> parts);
  Var slice_cols(Var x, std::size_t begin, std::size_t count);
  /// Row lookup: out[i] = table[indices[i]].
  Var gather_rows(Var table, std::span<const std::size_t> indices);

  /// Mean binary cross-entropy of `probs` against a same-shaped 0/1 target,
  /// with probabilities clamped to [1e-12, 1 - 1e-12].
  Var bce(Var probs, const Tensor& targets);

  /// Populates the gradient buffer of every parameter on the tape with
  /// d(loss)/d(param). Parameters the loss does not reach get zeros.
  /// Can be called repeatedly; each call starts from clean adjoints.
  void backward(Var loss);

 private:
  struct Node {
    Op op = Op::kConstant;
    bool requires_grad = false;
    std::vector<std::uint32_t> inputs;
    Tensor value;
    Tensor* param = nullptr;
    std::vector<double> adj;
    double scale = 0.0;
    double shift = 0.0;
    std::size_t axis = 0;
    std::vector<std::size_t> index;
    Mask mask;
    std::vector<double> aux;
  };

  const Node& node(Var v) const;
  Var push(Node n);
  Var binary(Op op, Var a, Var b);
  Var unary(Op op, Var x);
  void backprop(std::size_t i);

  // A deque keeps references returned by value() valid as the tape grows.
  std::deque<Node> nodes_;
  std::unordered_map<Tensor*, std::uint32_t> param_ids_;
};

}  // namespace lsan
