#include "seqmark/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace seqmark {

namespace {

thread_local bool g_grad_enabled = true;

Tensor& gbuf(const NodePtr& n) { return n->grad_buffer(); }

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

// c += a · bᵀ   (a: m×k, b: n×k, c: m×n)
void gemm_nt_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a.data() + i * k;
    double* ci = c.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b.data() + j * k;
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) s += ai[l] * bj[l];
      ci[j] += s;
    }
  }
}

// c += aᵀ · b   (a: k×m, b: k×n, c: m×n)
void gemm_tn_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  for (std::size_t l = 0; l < k; ++l) {
    const double* al = a.data() + l * m;
    const double* bl = b.data() + l * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = al[i];
      if (av == 0.0) continue;
      double* ci = c.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

// c += a · b
void gemm_nn_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a.data() + i * k;
    double* ci = c.data() + i * n;
    for (std::size_t l = 0; l < k; ++l) {
      const double av = ai[l];
      const double* bl = b.data() + l * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

template <typename Fwd, typename Deriv>
Var unary(const Var& x, Fwd fwd, Deriv deriv, const char* op) {
  Tensor y = x.value();
  for (double& v : y.values()) v = fwd(v);
  return make_result(
      std::move(y), {x},
      [deriv](Node& out) {
        const auto& in = out.parents[0];
        Tensor& g = gbuf(in);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] * deriv(in->value[i], out.value[i]);
      },
      op);
}

}  // namespace

Tensor& Node::grad_buffer() {
  if (grad.empty()) grad = Tensor(value.shape(), std::vector<double>(value.size(), 0.0));
  return grad;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Tensor Var::grad() const {
  if (node_->grad.empty()) return Tensor(value().shape(), std::vector<double>(value().size(), 0.0));
  return node_->grad;
}

double Var::item() const {
  if (value().size() != 1) throw DimensionError("item() on non-scalar " + shape_string(shape()));
  return value()[0];
}

void Var::backward() const {
  if (value().size() != 1) throw DimensionError("backward() needs a scalar, got " + shape_string(shape()));
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, idx] = stack.back();
    if (idx < n->parents.size()) {
      Node* p = n->parents[idx++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

Var make_result(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward,
                const char* op) {
  if (!value.all_finite()) throw NumericError(std::string("non-finite output from ") + op);
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (g_grad_enabled) {
    bool any = std::any_of(inputs.begin(), inputs.end(), [](const Var& v) { return v.requires_grad(); });
    if (any) {
      node->requires_grad = true;
      node->parents.reserve(inputs.size());
      for (auto& in : inputs) node->parents.push_back(in.node());
      node->backward = std::move(backward);
    }
  }
  return Var(std::move(node));
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

// ---------------------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  Tensor c = seqmark::matmul(a.value(), b.value());
  return make_result(
      std::move(c), {a, b},
      [](Node& out) {
        const auto& pa = out.parents[0];
        const auto& pb = out.parents[1];
        if (pa->requires_grad) gemm_nt_acc(out.grad, pb->value, gbuf(pa));
        if (pb->requires_grad) gemm_tn_acc(pa->value, out.grad, gbuf(pb));
      },
      "matmul");
}

Var matmul_nt(const Var& a, const Var& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: inner extents differ, " + shape_string(a.shape()) + " · " +
                         shape_string(b.shape()) + "ᵀ");
  }
  Tensor c(a.rows(), b.rows());
  gemm_nt_acc(a.value(), b.value(), c);
  return make_result(
      std::move(c), {a, b},
      [](Node& out) {
        const auto& pa = out.parents[0];
        const auto& pb = out.parents[1];
        if (pa->requires_grad) gemm_nn_acc(out.grad, pb->value, gbuf(pa));
        if (pb->requires_grad) gemm_tn_acc(out.grad, pa->value, gbuf(pb));
      },
      "matmul_nt");
}

Var transpose(const Var& a) {
  return make_result(
      seqmark::transpose(a.value()), {a},
      [](Node& out) {
        Tensor& g = gbuf(out.parents[0]);
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) += out.grad(j, i);
      },
      "transpose");
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  Tensor c = a.value();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b.value()[i];
  return make_result(
      std::move(c), {a, b},
      [](Node& out) {
        for (auto& p : out.parents) {
          if (!p->requires_grad) continue;
          Tensor& g = gbuf(p);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i];
        }
      },
      "add");
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  Tensor c = a.value();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b.value()[i];
  return make_result(
      std::move(c), {a, b},
      [](Node& out) {
        if (out.parents[0]->requires_grad) {
          Tensor& g = gbuf(out.parents[0]);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i];
        }
        if (out.parents[1]->requires_grad) {
          Tensor& g = gbuf(out.parents[1]);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] -= out.grad[i];
        }
      },
      "sub");
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  Tensor c = a.value();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= b.value()[i];
  return make_result(
      std::move(c), {a, b},
      [](Node& out) {
        const auto& pa = out.parents[0];
        const auto& pb = out.parents[1];
        if (pa->requires_grad) {
          Tensor& g = gbuf(pa);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] * pb->value[i];
        }
        if (pb->requires_grad) {
          Tensor& g = gbuf(pb);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] * pa->value[i];
        }
      },
      "mul");
}

Var scale(const Var& a, double s) {
  Tensor c = a.value();
  for (double& v : c.values()) v *= s;
  return make_result(
      std::move(c), {a},
      [s](Node& out) {
        Tensor& g = gbuf(out.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * out.grad[i];
      },
      "scale");
}

Var add_row(const Var& x, const Var& b) {
  if (b.rows() != 1 || b.cols() != x.cols()) {
    throw DimensionError("add_row: bias " + shape_string(b.shape()) + " vs input " +
                         shape_string(x.shape()));
  }
  Tensor c = x.value();
  const std::size_t n = c.cols();
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j) c(i, j) += b.value()[j];
  return make_result(
      std::move(c), {x, b},
      [](Node& out) {
        const auto& px = out.parents[0];
        const auto& pb = out.parents[1];
        if (px->requires_grad) {
          Tensor& g = gbuf(px);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i];
        }
        if (pb->requires_grad) {
          Tensor& g = gbuf(pb);
          const std::size_t n = g.cols();
          for (std::size_t i = 0; i < out.grad.rows(); ++i)
            for (std::size_t j = 0; j < n; ++j) g[j] += out.grad(i, j);
        }
      },
      "add_row");
}

Var linear(const Var& x, const Var& w, const Var& b) { return add_row(matmul(x, w), b); }
Var linear(const Var& x, const Var& w) { return matmul(x, w); }

Var silu(const Var& x) {
  return unary(
      x, [](double v) { return seqmark::silu(v); },
      [](double in, double) {
        const double s = seqmark::sigmoid(in);
        return s * (1.0 + in * (1.0 - s));
      },
      "silu");
}

Var relu(const Var& x) {
  return unary(
      x, [](double v) { return v > 0 ? v : 0.0; }, [](double in, double) { return in > 0 ? 1.0 : 0.0; },
      "relu");
}

Var sigmoid(const Var& x) {
  return unary(
      x, [](double v) { return seqmark::sigmoid(v); }, [](double, double y) { return y * (1.0 - y); },
      "sigmoid");
}

Var tanh(const Var& x) {
  return unary(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; }, "tanh");
}

Var softplus(const Var& x) {
  return unary(
      x, [](double v) { return seqmark::softplus(v); },
      [](double in, double) { return seqmark::sigmoid(in); }, "softplus");
}

Var softmax_rows(const Var& x) {
  return make_result(
      seqmark::softmax_rows(x.value()), {x},
      [](Node& out) {
        Tensor& g = gbuf(out.parents[0]);
        const std::size_t n = out.value.cols();
        for (std::size_t i = 0; i < out.value.rows(); ++i) {
          auto y = out.value.row(i);
          auto gy = out.grad.row(i);
          double dot = 0.0;
          for (std::size_t j = 0; j < n; ++j) dot += y[j] * gy[j];
          auto gx = g.row(i);
          for (std::size_t j = 0; j < n; ++j) gx[j] += y[j] * (gy[j] - dot);
        }
      },
      "softmax_rows");
}

Var rmsnorm_rows(const Var& x, const Var& gain, double eps) {
  return make_result(
      seqmark::rmsnorm_rows(x.value(), gain.value(), eps), {x, gain},
      [eps](Node& out) {
        const auto& px = out.parents[0];
        const auto& pg = out.parents[1];
        const Tensor& xv = px->value;
        const Tensor& gv = pg->value;
        const std::size_t n = xv.cols();
        const double d = static_cast<double>(n);
        for (std::size_t i = 0; i < xv.rows(); ++i) {
          auto xi = xv.row(i);
          auto gy = out.grad.row(i);
          double ms = 0.0;
          for (double v : xi) ms += v * v;
          const double inv = 1.0 / std::sqrt(ms / d + eps);
          if (pg->requires_grad) {
            Tensor& gg = gbuf(pg);
            for (std::size_t j = 0; j < n; ++j) gg[j] += gy[j] * xi[j] * inv;
          }
          if (px->requires_grad) {
            // y_j = g_j x_j inv; d inv / d x_k = -inv³ x_k / d
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += gy[j] * gv[j] * xi[j];
            const double c = s * inv * inv * inv / d;
            auto gx = gbuf(px).row(i);
            for (std::size_t k = 0; k < n; ++k) gx[k] += gy[k] * gv[k] * inv - c * xi[k];
          }
        }
      },
      "rmsnorm_rows");
}

Var concat_cols(const Var& a, const Var& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("concat_cols: row counts differ, " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
  const std::size_t ca = a.cols(), cb = b.cols();
  Tensor c(a.rows(), ca + cb);
  for (std::size_t i = 0; i < c.rows(); ++i) {
    std::copy_n(a.value().row(i).data(), ca, c.row(i).data());
    std::copy_n(b.value().row(i).data(), cb, c.row(i).data() + ca);
  }
  return make_result(
      std::move(c), {a, b},
      [ca, cb](Node& out) {
        for (std::size_t i = 0; i < out.grad.rows(); ++i) {
          auto gy = out.grad.row(i);
          if (out.parents[0]->requires_grad) {
            auto g = gbuf(out.parents[0]).row(i);
            for (std::size_t j = 0; j < ca; ++j) g[j] += gy[j];
          }
          if (out.parents[1]->requires_grad) {
            auto g = gbuf(out.parents[1]).row(i);
            for (std::size_t j = 0; j < cb; ++j) g[j] += gy[ca + j];
          }
        }
      },
      "concat_cols");
}

Var slice_cols(const Var& x, std::size_t begin, std::size_t count) {
  if (count == 0 || begin + count > x.cols()) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " + shape_string(x.shape()));
  }
  Tensor c(x.rows(), count);
  for (std::size_t i = 0; i < c.rows(); ++i)
    std::copy_n(x.value().row(i).data() + begin, count, c.row(i).data());
  return make_result(
      std::move(c), {x},
      [begin, count](Node& out) {
        Tensor& g = gbuf(out.parents[0]);
        for (std::size_t i = 0; i < out.grad.rows(); ++i)
          for (std::size_t j = 0; j < count; ++j) g(i, begin + j) += out.grad(i, j);
      },
      "slice_cols");
}

Var row(const Var& x, std::size_t r) {
  if (r >= x.rows()) throw DimensionError("row: index " + std::to_string(r) + " outside " + shape_string(x.shape()));
  return make_result(
      Tensor::row_vector(x.value().row(r)), {x},
      [r](Node& out) {
        auto g = gbuf(out.parents[0]).row(r);
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += out.grad[j];
      },
      "row");
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw DimensionError("stack_rows: no rows");
  const std::size_t n = rows.front().cols();
  Tensor c(rows.size(), n);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].rows() != 1 || rows[i].cols() != n) {
      throw DimensionError("stack_rows: row " + std::to_string(i) + " has shape " +
                           shape_string(rows[i].shape()));
    }
    std::copy_n(rows[i].value().data(), n, c.row(i).data());
  }
  return make_result(
      std::move(c), std::vector<Var>(rows.begin(), rows.end()),
      [](Node& out) {
        for (std::size_t i = 0; i < out.parents.size(); ++i) {
          if (!out.parents[i]->requires_grad) continue;
          Tensor& g = gbuf(out.parents[i]);
          auto gy = out.grad.row(i);
          for (std::size_t j = 0; j < gy.size(); ++j) g[j] += gy[j];
        }
      },
      "stack_rows");
}

Var flip_rows(const Var& x) {
  const std::size_t n = x.rows();
  Tensor c(n, x.cols());
  for (std::size_t i = 0; i < n; ++i) std::ranges::copy(x.value().row(n - 1 - i), c.row(i).begin());
  return make_result(
      std::move(c), {x},
      [n](Node& out) {
        Tensor& g = gbuf(out.parents[0]);
        for (std::size_t i = 0; i < n; ++i) {
          auto gi = g.row(n - 1 - i);
          auto gy = out.grad.row(i);
          for (std::size_t j = 0; j < gi.size(); ++j) gi[j] += gy[j];
        }
      },
      "flip_rows");
}

Var gather_rows(const Var& table, std::span<const std::size_t> ids) {
  if (ids.empty()) throw DimensionError("gather_rows: empty id list");
  const std::size_t n = table.cols();
  Tensor c(ids.size(), n);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= table.rows()) {
      throw LookupError("row id " + std::to_string(ids[i]) + " at index " + std::to_string(i) +
                        " outside table of " + std::to_string(table.rows()) + " rows");
    }
    std::ranges::copy(table.value().row(ids[i]), c.row(i).begin());
  }
  return make_result(
      std::move(c), {table},
      [ids = std::vector<std::size_t>(ids.begin(), ids.end())](Node& out) {
        Tensor& g = gbuf(out.parents[0]);
        for (std::size_t i = 0; i < ids.size(); ++i) {
          auto gi = g.row(ids[i]);
          auto gy = out.grad.row(i);
          for (std::size_t j = 0; j < gi.size(); ++j) gi[j] += gy[j];
        }
      },
      "gather_rows");
}

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return make_result(
      Tensor(1, 1, s), {x},
      [](Node& out) {
        Tensor& g = gbuf(out.parents[0]);
        const double gy = out.grad[0];
        for (double& v : g.values()) v += gy;
      },
      "sum");
}

}  // namespace seqmark
