#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "seqmark/tensor.hpp"

namespace seqmark {

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// Graph node on the reverse-mode tape. `grad` stays empty until something
/// flows into it; gradients accumulate additively.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward;

  Tensor& grad_buffer();
};

/// Handle to a tape node. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  static Var parameter(Tensor value) { return Var(std::move(value), true); }

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  /// Accumulated gradient; a zero tensor when nothing has flowed in yet.
  Tensor grad() const;
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad() { node_->grad = Tensor(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  const Shape& shape() const { return node_->value.shape(); }
  /// Value of a 1×1 result.
  double item() const;

  /// Reverse sweep from this scalar, seeding d(self)/d(self) = 1.
  void backward() const;

  const NodePtr& node() const { return node_; }

 private:
  explicit Var(NodePtr node) : node_(std::move(node)) {}
  NodePtr node_;

  friend Var make_result(Tensor value, std::vector<Var> inputs,
                         std::function<void(Node&)> backward, const char* op);
};

/// Creates the output node of an op. `backward` receives the output node and
/// must add into the grad buffers of whichever parents require grad. When
/// grad recording is disabled or no input requires grad, no edge is stored.
Var make_result(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward,
                const char* op);

/// RAII switch that disables tape recording on the current thread.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// ---- differentiable ops ---------------------------------------------------

Var matmul(const Var& a, const Var& b);
/// a·bᵀ without materializing the transpose.
Var matmul_nt(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
/// x + 1·b, with b a 1×cols row broadcast over every row of x.
Var add_row(const Var& x, const Var& b);
/// x·w + 1·b.
Var linear(const Var& x, const Var& w, const Var& b);
Var linear(const Var& x, const Var& w);

Var silu(const Var& x);
Var relu(const Var& x);
Var sigmoid(const Var& x);
Var tanh(const Var& x);
Var softplus(const Var& x);
Var softmax_rows(const Var& x);
Var rmsnorm_rows(const Var& x, const Var& gain, double eps = kRmsNormEps);

Var concat_cols(const Var& a, const Var& b);
Var slice_cols(const Var& x, std::size_t begin, std::size_t count);
Var row(const Var& x, std::size_t r);
Var stack_rows(std::span<const Var> rows);
/// Reverses the row (time) order.
Var flip_rows(const Var& x);
/// out[i] = table[ids[i]]; throws LookupError on an out-of-range id.
Var gather_rows(const Var& table, std::span<const std::size_t> ids);
Var sum(const Var& x);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }

}  // namespace seqmark
