#include "mabicap/tensor.hpp"

#include <cmath>
#include <cstddef>
#include <utility>

#include "mabicap/errors.hpp"
#include "mabicap/kernels.hpp"

namespace mabicap {

namespace {

constexpr double kLogFloor = 1e-12;

std::string shape_to_str(const std::vector<int>& shape) {
  if (shape.empty()) return "scalar";
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s;
}

long long product(const std::vector<int>& shape) {
  long long n = 1;
  for (int e : shape) n *= e;
  return n;
}

void check_shape(const std::vector<int>& shape) {
  for (int e : shape) {
    if (e <= 0)
      throw DimensionError("tensor: nonpositive extent in shape " +
                           shape_to_str(shape));
  }
}

}  // namespace

Tensor::Tensor(std::vector<int> shape_in, double fill, bool rg)
    : shape(std::move(shape_in)),
      data(static_cast<std::size_t>(product(shape)), fill),
      requires_grad(rg) {
  check_shape(shape);
}

TensorPtr Tensor::zeros(std::vector<int> shape, bool rg) {
  return std::make_shared<Tensor>(std::move(shape), 0.0, rg);
}

TensorPtr Tensor::full(std::vector<int> shape, double v, bool rg) {
  return std::make_shared<Tensor>(std::move(shape), v, rg);
}

TensorPtr Tensor::scalar(double v, bool rg) {
  return full({1}, v, rg);
}

TensorPtr Tensor::from(std::vector<int> shape, std::vector<double> values,
                       bool rg) {
  check_shape(shape);
  if (product(shape) != static_cast<long long>(values.size()))
    throw DimensionError("tensor: shape " + shape_to_str(shape) +
                         " does not hold " + std::to_string(values.size()) +
                         " values");
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->data = std::move(values);
  t->requires_grad = rg;
  return t;
}

TensorPtr Tensor::uniform(Rng& rng, std::vector<int> shape, double lo,
                          double hi, bool rg) {
  auto t = zeros(std::move(shape), rg);
  for (double& v : t->data) v = rng.uniform(lo, hi);
  return t;
}

int Tensor::numel() const { return static_cast<int>(data.size()); }

int Tensor::rows() const {
  if (ndim() != 2)
    throw DimensionError("tensor: rows() on " + shape_str());
  return shape[0];
}

int Tensor::cols() const {
  if (ndim() != 2)
    throw DimensionError("tensor: cols() on " + shape_str());
  return shape[1];
}

double Tensor::value() const {
  if (!is_scalar())
    throw ContractError("tensor: value() on non-scalar " + shape_str());
  return data[0];
}

void Tensor::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
  for (double& g : grad) g = 0.0;
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const { return shape_to_str(shape); }

void Tape::record(const char* name, std::vector<TensorPtr> inputs,
                  TensorPtr output, std::function<void()> backward) {
  if (!recording) return;
  ops.push_back(TapeOp{name, std::move(inputs), std::move(output),
                       std::move(backward)});
}

std::size_t Tape::run_backward() {
  std::size_t visited = 0;
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    it->backward();
    ++visited;
  }
  return visited;
}

namespace ops {

namespace {

// Output of a differentiable op: tracks grad whenever any input does.
TensorPtr make_output(std::vector<int> shape, const std::vector<TensorPtr>& ins) {
  bool rg = false;
  for (const auto& t : ins) rg = rg || t->requires_grad;
  return Tensor::zeros(std::move(shape), rg);
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

void require_vector(const TensorPtr& v, const char* who) {
  if (v->ndim() != 1)
    throw DimensionError(std::string(who) + ": expected a vector, got " +
                         v->shape_str());
}

void require_matrix(const TensorPtr& a, const char* who) {
  if (a->ndim() != 2)
    throw DimensionError(std::string(who) + ": expected a matrix, got " +
                         a->shape_str());
}

}  // namespace

TensorPtr matmul(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a->shape[1] != b->shape[0])
    throw DimensionError("matmul: inner extents mismatch: " + a->shape_str() +
                         " vs " + b->shape_str());
  const int m = a->shape[0], k = a->shape[1], n = b->shape[1];
  auto out = make_output({m, n}, {a, b});
  kernels::gemm_nn(a->data.data(), b->data.data(), out->data.data(), m, k, n,
                   false);
  tape.record("matmul", {a, b}, out, [a, b, out, m, k, n]() {
    if (out->grad.empty()) return;
    if (a->requires_grad) {
      a->ensure_grad();
      kernels::gemm_nt(out->grad.data(), b->data.data(), a->grad.data(), m, n,
                       k, true);
    }
    if (b->requires_grad) {
      b->ensure_grad();
      kernels::gemm_tn(a->data.data(), out->grad.data(), b->grad.data(), m, k,
                       n, true);
    }
  });
  return out;
}

TensorPtr matvec(Tape& tape, const TensorPtr& a, const TensorPtr& x) {
  require_matrix(a, "matvec");
  require_vector(x, "matvec");
  if (a->shape[1] != x->shape[0])
    throw DimensionError("matvec: extents mismatch: " + a->shape_str() +
                         " vs " + x->shape_str());
  const int m = a->shape[0], k = a->shape[1];
  auto out = make_output({m}, {a, x});
  kernels::gemm_nn(a->data.data(), x->data.data(), out->data.data(), m, k, 1,
                   false);
  tape.record("matvec", {a, x}, out, [a, x, out, m, k]() {
    if (out->grad.empty()) return;
    if (a->requires_grad) {
      a->ensure_grad();
      // dA[i,j] += dy[i] * x[j]
      kernels::gemm_nn(out->grad.data(), x->data.data(), a->grad.data(), m, 1,
                       k, true);
    }
    if (x->requires_grad) {
      x->ensure_grad();
      kernels::gemm_tn(a->data.data(), out->grad.data(), x->grad.data(), m, k,
                       1, true);
    }
  });
  return out;
}

TensorPtr matvec_t(Tape& tape, const TensorPtr& a, const TensorPtr& x) {
  require_matrix(a, "matvec_t");
  require_vector(x, "matvec_t");
  if (a->shape[0] != x->shape[0])
    throw DimensionError("matvec_t: extents mismatch: " + a->shape_str() +
                         " vs " + x->shape_str());
  const int n = a->shape[0], d = a->shape[1];
  auto out = make_output({d}, {a, x});
  kernels::gemm_tn(a->data.data(), x->data.data(), out->data.data(), n, d, 1,
                   false);
  tape.record("matvec_t", {a, x}, out, [a, x, out, n, d]() {
    if (out->grad.empty()) return;
    if (a->requires_grad) {
      a->ensure_grad();
      // dA[i,j] += x[i] * dz[j]
      kernels::gemm_nn(x->data.data(), out->grad.data(), a->grad.data(), n, 1,
                       d, true);
    }
    if (x->requires_grad) {
      x->ensure_grad();
      kernels::gemm_nn(a->data.data(), out->grad.data(), x->grad.data(), n, d,
                       1, true);
    }
  });
  return out;
}

TensorPtr softmax(Tape& tape, const TensorPtr& v) {
  require_vector(v, "softmax");
  const int n = v->shape[0];
  auto out = make_output({n}, {v});
  double mx = v->data[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, v->data[i]);
  double denom = 0.0;
  for (int i = 0; i < n; ++i) {
    out->data[i] = std::exp(v->data[i] - mx);
    denom += out->data[i];
  }
  for (int i = 0; i < n; ++i) out->data[i] /= denom;
  tape.record("softmax", {v}, out, [v, out, n]() {
    if (out->grad.empty() || !v->requires_grad) return;
    v->ensure_grad();
    double inner = 0.0;
    for (int i = 0; i < n; ++i) inner += out->grad[i] * out->data[i];
    for (int i = 0; i < n; ++i)
      v->grad[i] += out->data[i] * (out->grad[i] - inner);
  });
  return out;
}

namespace {

template <typename F, typename DF>
TensorPtr unary_op(Tape& tape, const char* name, const TensorPtr& x, F f,
                   DF df) {
  auto out = make_output(x->shape, {x});
  kernels::map(x->data.data(), out->data.data(), x->data.size(), f);
  tape.record(name, {x}, out, [x, out, df]() {
    if (out->grad.empty() || !x->requires_grad) return;
    x->ensure_grad();
    const std::size_t n = x->data.size();
    for (std::size_t i = 0; i < n; ++i)
      x->grad[i] += df(x->data[i], out->data[i]) * out->grad[i];
  });
  return out;
}

enum class BinKind { Add, Sub, Mul };

TensorPtr binary_op(Tape& tape, BinKind kind, const TensorPtr& a,
                    const TensorPtr& b) {
  const char* name = kind == BinKind::Add ? "add"
                     : kind == BinKind::Sub ? "sub"
                                            : "mul";
  const bool a_scalar = a->is_scalar();
  const bool b_scalar = b->is_scalar();
  if (!same_shape(*a, *b) && !a_scalar && !b_scalar)
    throw DimensionError(std::string(name) + ": incompatible shapes " +
                         a->shape_str() + " vs " + b->shape_str());
  const TensorPtr& big = (a_scalar && !b_scalar) ? b : a;
  auto out = make_output(big->shape, {a, b});
  const std::size_t n = out->data.size();
  auto va = [&](std::size_t i) { return a_scalar ? a->data[0] : a->data[i]; };
  auto vb = [&](std::size_t i) { return b_scalar ? b->data[0] : b->data[i]; };
  switch (kind) {
    case BinKind::Add:
      for (std::size_t i = 0; i < n; ++i) out->data[i] = va(i) + vb(i);
      break;
    case BinKind::Sub:
      for (std::size_t i = 0; i < n; ++i) out->data[i] = va(i) - vb(i);
      break;
    case BinKind::Mul:
      for (std::size_t i = 0; i < n; ++i) out->data[i] = va(i) * vb(i);
      break;
  }
  tape.record(name, {a, b}, out, [a, b, out, kind, a_scalar, b_scalar, n]() {
    if (out->grad.empty()) return;
    if (a->requires_grad) {
      a->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        double g = out->grad[i];
        if (kind == BinKind::Mul) g *= b_scalar ? b->data[0] : b->data[i];
        a->grad[a_scalar ? 0 : i] += g;
      }
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        double g = out->grad[i];
        if (kind == BinKind::Sub) g = -g;
        if (kind == BinKind::Mul)
          g = out->grad[i] * (a_scalar ? a->data[0] : a->data[i]);
        b->grad[b_scalar ? 0 : i] += g;
      }
    }
  });
  return out;
}

}  // namespace

TensorPtr sigmoid(Tape& tape, const TensorPtr& x) {
  return unary_op(
      tape, "sigmoid", x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

TensorPtr tanh(Tape& tape, const TensorPtr& x) {
  return unary_op(
      tape, "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

TensorPtr add(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
  return binary_op(tape, BinKind::Add, a, b);
}

TensorPtr sub(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
  return binary_op(tape, BinKind::Sub, a, b);
}

TensorPtr mul(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
  return binary_op(tape, BinKind::Mul, a, b);
}

TensorPtr scale(Tape& tape, const TensorPtr& x, double c) {
  auto out = make_output(x->shape, {x});
  const std::size_t n = x->data.size();
  for (std::size_t i = 0; i < n; ++i) out->data[i] = x->data[i] * c;
  tape.record("scale", {x}, out, [x, out, c, n]() {
    if (out->grad.empty() || !x->requires_grad) return;
    x->ensure_grad();
    kernels::axpy(c, out->grad.data(), x->grad.data(), n);
  });
  return out;
}

TensorPtr concat(Tape& tape, const std::vector<TensorPtr>& parts, int axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const int nd = parts[0]->ndim();
  if (axis < 0 || axis >= nd)
    throw DimensionError("concat: axis " + std::to_string(axis) +
                         " out of range for " + parts[0]->shape_str());
  std::vector<int> out_shape = parts[0]->shape;
  for (std::size_t p = 1; p < parts.size(); ++p) {
    if (parts[p]->ndim() != nd)
      throw DimensionError("concat: rank mismatch: " + parts[0]->shape_str() +
                           " vs " + parts[p]->shape_str());
    for (int d = 0; d < nd; ++d) {
      if (d == axis) continue;
      if (parts[p]->shape[d] != out_shape[d])
        throw DimensionError("concat: extent mismatch off axis: " +
                             parts[0]->shape_str() + " vs " +
                             parts[p]->shape_str());
    }
    out_shape[axis] += parts[p]->shape[axis];
  }
  auto out = make_output(out_shape, parts);

  // Destination index of element src of part p; shared by the forward copy
  // and the backward scatter.
  auto dst_index = [nd, axis, out_shape](const Tensor& part, int offset,
                                         int src) {
    if (nd == 1) return offset + src;
    const int cols = out_shape[1];
    const int pcols = part.shape[1];
    const int i = src / pcols, j = src % pcols;
    return axis == 0 ? (offset + i) * cols + j : i * cols + offset + j;
  };
  int offset = 0;
  for (const auto& part : parts) {
    for (int src = 0; src < part->numel(); ++src)
      out->data[dst_index(*part, offset, src)] = part->data[src];
    offset += part->shape[axis];
  }
  tape.record("concat", parts, out, [parts, out, axis, dst_index]() {
    if (out->grad.empty()) return;
    int off = 0;
    for (const auto& part : parts) {
      if (part->requires_grad) {
        part->ensure_grad();
        for (int src = 0; src < part->numel(); ++src)
          part->grad[src] += out->grad[dst_index(*part, off, src)];
      }
      off += part->shape[axis];
    }
  });
  return out;
}

TensorPtr slice(Tape& tape, const TensorPtr& v, int start, int len) {
  require_vector(v, "slice");
  if (start < 0 || len < 1 || start + len > v->shape[0])
    throw IndexError("slice: [" + std::to_string(start) + ", " +
                     std::to_string(start + len) + ") out of range for " +
                     v->shape_str());
  auto out = make_output({len}, {v});
  for (int i = 0; i < len; ++i) out->data[i] = v->data[start + i];
  tape.record("slice", {v}, out, [v, out, start, len]() {
    if (out->grad.empty() || !v->requires_grad) return;
    v->ensure_grad();
    for (int i = 0; i < len; ++i) v->grad[start + i] += out->grad[i];
  });
  return out;
}

TensorPtr row(Tape& tape, const TensorPtr& a, int i) {
  require_matrix(a, "row");
  if (i < 0 || i >= a->shape[0])
    throw IndexError("row: index " + std::to_string(i) + " out of range for " +
                     a->shape_str());
  const int cols = a->shape[1];
  auto out = make_output({cols}, {a});
  for (int j = 0; j < cols; ++j) out->data[j] = a->at(i, j);
  tape.record("row", {a}, out, [a, out, i, cols]() {
    if (out->grad.empty() || !a->requires_grad) return;
    a->ensure_grad();
    for (int j = 0; j < cols; ++j) a->grad[i * cols + j] += out->grad[j];
  });
  return out;
}

TensorPtr stack_rows(Tape& tape, const std::vector<TensorPtr>& rows) {
  if (rows.empty()) throw DimensionError("stack_rows: no inputs");
  const int cols = rows[0]->numel();
  for (const auto& r : rows) {
    if (r->ndim() != 1 || r->numel() != cols)
      throw DimensionError("stack_rows: row shape mismatch: " +
                           rows[0]->shape_str() + " vs " + r->shape_str());
  }
  const int n = static_cast<int>(rows.size());
  auto out = make_output({n, cols}, rows);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < cols; ++j) out->data[i * cols + j] = rows[i]->data[j];
  tape.record("stack_rows", rows, out, [rows, out, n, cols]() {
    if (out->grad.empty()) return;
    for (int i = 0; i < n; ++i) {
      if (!rows[i]->requires_grad) continue;
      rows[i]->ensure_grad();
      for (int j = 0; j < cols; ++j)
        rows[i]->grad[j] += out->grad[i * cols + j];
    }
  });
  return out;
}

TensorPtr select_col(Tape& tape, const TensorPtr& a, int j) {
  require_matrix(a, "select_col");
  if (j < 0 || j >= a->shape[1])
    throw IndexError("select_col: index " + std::to_string(j) +
                     " out of range for " + a->shape_str());
  const int rows = a->shape[0], cols = a->shape[1];
  auto out = make_output({rows}, {a});
  for (int i = 0; i < rows; ++i) out->data[i] = a->data[i * cols + j];
  tape.record("select_col", {a}, out, [a, out, j, rows, cols]() {
    if (out->grad.empty() || !a->requires_grad) return;
    a->ensure_grad();
    for (int i = 0; i < rows; ++i) a->grad[i * cols + j] += out->grad[i];
  });
  return out;
}

TensorPtr dot(Tape& tape, const TensorPtr& u, const TensorPtr& v) {
  require_vector(u, "dot");
  require_vector(v, "dot");
  if (u->shape[0] != v->shape[0])
    throw DimensionError("dot: extents mismatch: " + u->shape_str() + " vs " +
                         v->shape_str());
  const int n = u->shape[0];
  auto out = make_output({1}, {u, v});
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += u->data[i] * v->data[i];
  out->data[0] = acc;
  tape.record("dot", {u, v}, out, [u, v, out, n]() {
    if (out->grad.empty()) return;
    const double g = out->grad[0];
    if (u->requires_grad) {
      u->ensure_grad();
      kernels::axpy(g, v->data.data(), u->grad.data(), n);
    }
    if (v->requires_grad) {
      v->ensure_grad();
      kernels::axpy(g, u->data.data(), v->grad.data(), n);
    }
  });
  return out;
}

TensorPtr nll_loss(Tape& tape, const TensorPtr& p, int target) {
  require_vector(p, "nll_loss");
  if (target < 0 || target >= p->shape[0])
    throw IndexError("nll_loss: target " + std::to_string(target) +
                     " out of range for " + p->shape_str());
  auto out = make_output({1}, {p});
  out->data[0] = -std::log(p->data[target] + kLogFloor);
  tape.record("nll_loss", {p}, out, [p, out, target]() {
    if (out->grad.empty() || !p->requires_grad) return;
    p->ensure_grad();
    p->grad[target] += -out->grad[0] / (p->data[target] + kLogFloor);
  });
  return out;
}

TensorPtr squared_error(Tape& tape, const TensorPtr& u, const TensorPtr& v) {
  if (!same_shape(*u, *v))
    throw DimensionError("squared_error: shape mismatch: " + u->shape_str() +
                         " vs " + v->shape_str());
  const std::size_t n = u->data.size();
  auto out = make_output({1}, {u, v});
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = u->data[i] - v->data[i];
    acc += d * d;
  }
  out->data[0] = acc;
  tape.record("squared_error", {u, v}, out, [u, v, out, n]() {
    if (out->grad.empty()) return;
    const double g = out->grad[0];
    if (u->requires_grad) {
      u->ensure_grad();
      for (std::size_t i = 0; i < n; ++i)
        u->grad[i] += 2.0 * (u->data[i] - v->data[i]) * g;
    }
    if (v->requires_grad) {
      v->ensure_grad();
      for (std::size_t i = 0; i < n; ++i)
        v->grad[i] -= 2.0 * (u->data[i] - v->data[i]) * g;
    }
  });
  return out;
}

TensorPtr detach(const TensorPtr& x) {
  auto out = Tensor::zeros(x->shape, false);
  out->data = x->data;
  return out;
}

std::size_t backward(Tape& tape, const TensorPtr& loss) {
  if (!loss->is_scalar())
    throw ContractError("backward: loss must be scalar, got " +
                        loss->shape_str());
  loss->ensure_grad();
  loss->grad[0] = 1.0;
  return tape.run_backward();
}

void sgd_update(const std::vector<TensorPtr>& params, double lr) {
  if (lr <= 0.0)
    throw ConfigError("sgd_update: learning rate must be positive, got " +
                      std::to_string(lr));
  for (const auto& p : params) {
    if (!p->grad.empty())
      kernels::axpy(-lr, p->grad.data(), p->data.data(), p->data.size());
    p->zero_grad();
  }
}

}  // namespace ops
}  // namespace mabicap
