#ifndef MABICAP_TENSOR_HPP_
#define MABICAP_TENSOR_HPP_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mabicap/rng.hpp"

namespace mabicap {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense row-major tensor of 64-bit reals, rank 1 or 2 in practice. The grad
// buffer stays empty until backward touches it; gradients accumulate
// additively so fan-out follows the chain rule.
class Tensor {
 public:
  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;

  Tensor() = default;
  Tensor(std::vector<int> shape_in, double fill, bool rg);

  static TensorPtr zeros(std::vector<int> shape, bool rg = false);
  static TensorPtr full(std::vector<int> shape, double v, bool rg = false);
  static TensorPtr scalar(double v, bool rg = false);
  static TensorPtr from(std::vector<int> shape, std::vector<double> values,
                        bool rg = false);
  static TensorPtr uniform(Rng& rng, std::vector<int> shape, double lo,
                           double hi, bool rg = false);

  int numel() const;
  int ndim() const { return static_cast<int>(shape.size()); }
  int rows() const;
  int cols() const;
  bool is_scalar() const { return numel() == 1; }
  double value() const;  // scalar accessor

  double& at(int i) { return data[static_cast<std::size_t>(i)]; }
  double at(int i) const { return data[static_cast<std::size_t>(i)]; }
  double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols() + j]; }
  double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols() + j]; }

  void ensure_grad();  // allocate a zero grad buffer if absent
  void zero_grad();    // zero in place (keeps allocation)
  bool all_finite() const;

  std::string shape_str() const;  // "3x4" for error messages
};

// One recorded primitive: inputs/output for inspection, a closure that
// pushes the output gradient back to the inputs.
struct TapeOp {
  const char* name;
  std::vector<TensorPtr> inputs;
  TensorPtr output;
  std::function<void()> backward;
};

// The computation record: ops appended in execution order, so the list is
// topologically sorted by construction and a single reverse sweep implements
// backpropagation.
class Tape {
 public:
  std::vector<TapeOp> ops;
  bool recording = true;

  void record(const char* name, std::vector<TensorPtr> inputs, TensorPtr output,
              std::function<void()> backward);
  void clear() { ops.clear(); }

  // Runs every op's backward exactly once, newest to oldest; returns the
  // number of ops visited.
  std::size_t run_backward();
};

namespace ops {

// C[m x n] = A[m x k] * B[k x n]
TensorPtr matmul(Tape& tape, const TensorPtr& a, const TensorPtr& b);
// y[m] = A[m x k] * x[k]
TensorPtr matvec(Tape& tape, const TensorPtr& a, const TensorPtr& x);
// z[d] = A^T x  for A[n x d], x[n]; the weighted sum of A's rows.
TensorPtr matvec_t(Tape& tape, const TensorPtr& a, const TensorPtr& x);

TensorPtr softmax(Tape& tape, const TensorPtr& v);
TensorPtr sigmoid(Tape& tape, const TensorPtr& x);
TensorPtr tanh(Tape& tape, const TensorPtr& x);

// Binary elementwise; operands must have identical shapes, or one of them
// may be a scalar (the only supported broadcast).
TensorPtr add(Tape& tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(Tape& tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(Tape& tape, const TensorPtr& a, const TensorPtr& b);
// x * c for a plain constant c.
TensorPtr scale(Tape& tape, const TensorPtr& x, double c);

TensorPtr concat(Tape& tape, const std::vector<TensorPtr>& parts, int axis);
TensorPtr slice(Tape& tape, const TensorPtr& v, int start, int len);
TensorPtr row(Tape& tape, const TensorPtr& a, int i);
TensorPtr stack_rows(Tape& tape, const std::vector<TensorPtr>& rows);
TensorPtr select_col(Tape& tape, const TensorPtr& a, int j);
TensorPtr dot(Tape& tape, const TensorPtr& u, const TensorPtr& v);

// -log(p[target] + 1e-12)
TensorPtr nll_loss(Tape& tape, const TensorPtr& p, int target);
// sum_i (u[i] - v[i])^2
TensorPtr squared_error(Tape& tape, const TensorPtr& u, const TensorPtr& v);

// Copy with no gradient link; used for stop-gradient ablations.
TensorPtr detach(const TensorPtr& x);

// Seeds d(loss)/d(loss) = 1 and replays the tape in reverse. The loss must
// be scalar. Returns the number of ops visited.
std::size_t backward(Tape& tape, const TensorPtr& loss);

// p <- p - lr * g for every parameter with a populated grad, then clears
// all grads.
void sgd_update(const std::vector<TensorPtr>& params, double lr);

}  // namespace ops
}  // namespace mabicap

#endif  // MABICAP_TENSOR_HPP_
