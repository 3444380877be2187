#pragma once
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "scmil/error.hpp"
#include "scmil/matrix.hpp"
#include "scmil/rng.hpp"
#include "scmil/special.hpp"

namespace scmil {

// A learnable tensor plus its accumulated gradient and Adam moments.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix m;  // first moment
  Matrix v;  // second moment
  bool trainable = true;

  Parameter(std::string n, Matrix val, bool train)
      : name(std::move(n)),
        value(std::move(val)),
        grad(value.rows(), value.cols()),
        m(value.rows(), value.cols()),
        v(value.rows(), value.cols()),
        trainable(train) {}
};

// Owns parameters in registration order; that order is the checkpoint order.
class ParamStore {
public:
  Parameter& add(const std::string& name, Matrix value, bool trainable = true) {
    if (find(name) != nullptr)
      throw ConfigError("parameter registered twice: " + name);
    params_.push_back(std::make_unique<Parameter>(name, std::move(value), trainable));
    return *params_.back();
  }

  Parameter* find(const std::string& name) {
    for (auto& p : params_)
      if (p->name == name) return p.get();
    return nullptr;
  }

  std::vector<Parameter*> all() {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
  }

  size_t total_values() const {
    size_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p->grad = Matrix(p->value.rows(), p->value.cols());
    grads_ready_ = false;
  }

  bool grads_ready() const { return grads_ready_; }
  void mark_grads_ready() { grads_ready_ = true; }

private:
  std::vector<std::unique_ptr<Parameter>> params_;
  bool grads_ready_ = false;
};

// Reverse-mode tape over matrix-level primitives. One tape per forward pass;
// backward() may run once and replays the op record in reverse.
class Tape {
public:
  explicit Tape(ParamStore* store = nullptr) : store_(store) {}

  int constant(Matrix v) { return push(std::move(v), false, "const", nullptr, {}); }

  int input(Matrix v, bool needs_grad = false) {
    return push(std::move(v), needs_grad, "input", nullptr, {});
  }

  int param(Parameter& p) {
    const int id = push(p.value, p.trainable, "param", nullptr, {});
    nodes_[id].bound = &p;
    return id;
  }

  const Matrix& value(int id) const { return nodes_[id].value; }

  // Gradient of the last backward() wrt node id (zeros if it never flowed).
  Matrix grad_of(int id) const {
    const Node& n = nodes_[id];
    if (n.grad.empty()) return Matrix(n.value.rows(), n.value.cols());
    return n.grad;
  }

  size_t node_count() const { return nodes_.size(); }
  const char* tag(int id) const { return nodes_[id].tag; }
  int num_rows(int id) const { return nodes_[id].value.rows(); }
  int num_cols(int id) const { return nodes_[id].value.cols(); }

  // ---- arithmetic ----

  int matmul(int a, int b) {
    Matrix out = scmil::matmul(val(a), val(b));
    return push(std::move(out), needs(a) || needs(b), "matmul",
                [a, b](Tape& t, int self) {
                  const Matrix& g = t.nodes_[self].grad;
                  if (t.needs(a)) add_matmul_nt(t.grad_buf(a), g, t.val(b));
                  if (t.needs(b)) add_matmul_tn(t.grad_buf(b), t.val(a), g);
                },
                {a, b});
  }

  int transpose(int a) {
    return push(scmil::transpose(val(a)), needs(a), "transpose",
                [a](Tape& t, int self) {
                  if (!t.needs(a)) return;
                  const Matrix gt = scmil::transpose(t.nodes_[self].grad);
                  accumulate(t.grad_buf(a), gt);
                },
                {a});
  }

  int add(int a, int b) { return binary(a, b, "add", 1.0); }
  int sub(int a, int b) { return binary(a, b, "sub", -1.0); }

  int mul(int a, int b) {
    require_same_shape(val(a), val(b), "mul");
    Matrix out = val(a);
    const Matrix& vb = val(b);
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] *= vb.data()[i];
    return push(std::move(out), needs(a) || needs(b), "mul",
                [a, b](Tape& t, int self) {
                  const Matrix& g = t.nodes_[self].grad;
                  if (t.needs(a)) {
                    Matrix& da = t.grad_buf(a);
                    const Matrix& vb = t.val(b);
                    for (size_t i = 0; i < g.size(); ++i)
                      da.data()[i] += g.data()[i] * vb.data()[i];
                  }
                  if (t.needs(b)) {
                    Matrix& db = t.grad_buf(b);
                    const Matrix& va = t.val(a);
                    for (size_t i = 0; i < g.size(); ++i)
                      db.data()[i] += g.data()[i] * va.data()[i];
                  }
                },
                {a, b});
  }

  int divide(int a, int b) {
    require_same_shape(val(a), val(b), "divide");
    Matrix out = val(a);
    const Matrix& vb = val(b);
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] /= vb.data()[i];
    return push(std::move(out), needs(a) || needs(b), "divide",
                [a, b](Tape& t, int self) {
                  const Matrix& g = t.nodes_[self].grad;
                  const Matrix& y = t.nodes_[self].value;
                  const Matrix& vb = t.val(b);
                  if (t.needs(a)) {
                    Matrix& da = t.grad_buf(a);
                    for (size_t i = 0; i < g.size(); ++i)
                      da.data()[i] += g.data()[i] / vb.data()[i];
                  }
                  if (t.needs(b)) {
                    Matrix& db = t.grad_buf(b);
                    for (size_t i = 0; i < g.size(); ++i)
                      db.data()[i] -= g.data()[i] * y.data()[i] / vb.data()[i];
                  }
                },
                {a, b});
  }

  // (n x d) + (1 x d) broadcast over rows.
  int add_rowvec(int a, int v) {
    const Matrix& va = val(a);
    const Matrix& vv = val(v);
    if (vv.rows() != 1 || vv.cols() != va.cols())
      throw ShapeError("add_rowvec: a is " + va.shape_str() + ", v is " +
                       vv.shape_str());
    Matrix out = va;
    for (int i = 0; i < out.rows(); ++i) {
      double* r = out.row_ptr(i);
      for (int j = 0; j < out.cols(); ++j) r[j] += vv.at(0, j);
    }
    return push(std::move(out), needs(a) || needs(v), "add_rowvec",
                [a, v](Tape& t, int self) {
                  const Matrix& g = t.nodes_[self].grad;
                  if (t.needs(a)) accumulate(t.grad_buf(a), g);
                  if (t.needs(v)) {
                    Matrix& dv = t.grad_buf(v);
                    for (int i = 0; i < g.rows(); ++i)
                      for (int j = 0; j < g.cols(); ++j) dv.at(0, j) += g.at(i, j);
                  }
                },
                {a, v});
  }

  // (n x d) scaled row-wise by (n x 1).
  int scale_rows(int a, int s) {
    const Matrix& va = val(a);
    const Matrix& vs = val(s);
    if (vs.cols() != 1 || vs.rows() != va.rows())
      throw ShapeError("scale_rows: a is " + va.shape_str() + ", s is " +
                       vs.shape_str());
    Matrix out = va;
    for (int i = 0; i < out.rows(); ++i) {
      const double si = vs.at(i, 0);
      double* r = out.row_ptr(i);
      for (int j = 0; j < out.cols(); ++j) r[j] *= si;
    }
    return push(std::move(out), needs(a) || needs(s), "scale_rows",
                [a, s](Tape& t, int self) {
                  const Matrix& g = t.nodes_[self].grad;
                  const Matrix& va = t.val(a);
                  const Matrix& vs = t.val(s);
                  if (t.needs(a)) {
                    Matrix& da = t.grad_buf(a);
                    for (int i = 0; i < g.rows(); ++i) {
                      const double si = vs.at(i, 0);
                      for (int j = 0; j < g.cols(); ++j) da.at(i, j) += g.at(i, j) * si;
                    }
                  }
                  if (t.needs(s)) {
                    Matrix& ds = t.grad_buf(s);
                    for (int i = 0; i < g.rows(); ++i) {
                      double acc = 0.0;
                      for (int j = 0; j < g.cols(); ++j) acc += g.at(i, j) * va.at(i, j);
                      ds.at(i, 0) += acc;
                    }
                  }
                },
                {a, s});
  }

  int scale(int a, double c) {
    Matrix out = val(a);
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] *= c;
    return push(std::move(out), needs(a), "scale",
                [a, c](Tape& t, int self) {
                  if (!t.needs(a)) return;
                  const Matrix& g = t.nodes_[self].grad;
                  Matrix& da = t.grad_buf(a);
                  for (size_t i = 0; i < g.size(); ++i) da.data()[i] += c * g.data()[i];
                },
                {a});
  }

  int add_scalar(int a, double c) {
    Matrix out = val(a);
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] += c;
    return push(std::move(out), needs(a), "add_scalar",
                [a](Tape& t, int self) {
                  if (t.needs(a)) accumulate(t.grad_buf(a), t.nodes_[self].grad);
                },
                {a});
  }

  int neg(int a) { return scale(a, -1.0); }

  // ---- elementwise nonlinearities ----

  int sigmoid(int a) {
    Matrix out = val(a);
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] = sigmoid_scalar(out.data()[i]);
    return push(std::move(out), needs(a), "sigmoid",
                [a](Tape& t, int self) {
                  if (!t.needs(a)) return;
                  const Matrix& g = t.nodes_[self].grad;
                  const Matrix& y = t.nodes_[self].value;
                  Matrix& da = t.grad_buf(a);
                  for (size_t i = 0; i < g.size(); ++i) {
                    const double yi = y.data()[i];
                    da.data()[i] += g.data()[i] * yi * (1.0 - yi);
                  }
                },
                {a});
  }

  int tanh_act(int a) {
    Matrix out = val(a);
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] = std::tanh(out.data()[i]);
    return push(std::move(out), needs(a), "tanh",
                [a](Tape& t, int self) {
                  if (!t.needs(a)) return;
                  const Matrix& g = t.nodes_[self].grad;
                  const Matrix& y = t.nodes_[self].value;
                  Matrix& da = t.grad_buf(a);
                  for (size_t i = 0; i < g.size(); ++i)
                    da.data()[i] += g.data()[i] * (1.0 - y.data()[i] * y.data()[i]);
                },
                {a});
  }

  int softplus(int a) {
    Matrix out = val(a);
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] = softplus_scalar(out.data()[i]);
    return push(std::move(out), needs(a), "softplus",
                [a](Tape& t, int self) {
                  if (!t.needs(a)) return;
                  const Matrix& g = t.nodes_[self].grad;
                  const Matrix& x = t.val(a);
                  Matrix& da = t.grad_buf(a);
                  for (size_t i = 0; i < g.size(); ++i)
                    da.data()[i] += g.data()[i] * sigmoid_scalar(x.data()[i]);
                },
                {a});
  }

  int exp_(int a) {
    Matrix out = val(a);
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] = std::exp(out.data()[i]);
    return push(std::move(out), needs(a), "exp",
                [a](Tape& t, int self) {
                  if (!t.needs(a)) return;
                  const Matrix& g = t.nodes_[self].grad;
                  const Matrix& y = t.nodes_[self].value;
                  Matrix& da = t.grad_buf(a);
                  for (size_t i = 0; i < g.size(); ++i)
                    da.data()[i] += g.data()[i] * y.data()[i];
                },
                {a});
  }

  int log_(int a) {
    Matrix out = val(a);
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] = std::log(out.data()[i]);
    return push(std::move(out), needs(a), "log",
                [a](Tape& t, int self) {
                  if (!t.needs(a)) return;
                  const Matrix& g = t.nodes_[self].grad;
                  const Matrix& x = t.val(a);
                  Matrix& da = t.grad_buf(a);
                  for (size_t i = 0; i < g.size(); ++i)
                    da.data()[i] += g.data()[i] / x.data()[i];
                },
                {a});
  }

  int erf_(int a) {
    Matrix out = val(a);
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] = erf_scalar(out.data()[i]);
    return push(std::move(out), needs(a), "erf",
                [a](Tape& t, int self) {
                  if (!t.needs(a)) return;
                  const Matrix& g = t.nodes_[self].grad;
                  const Matrix& x = t.val(a);
                  Matrix& da = t.grad_buf(a);
                  for (size_t i = 0; i < g.size(); ++i) {
                    const double xi = x.data()[i];
                    da.data()[i] += g.data()[i] * detail::kTwoOverSqrtPi * std::exp(-xi * xi);
                  }
                },
                {a});
  }

  // log(clamp(x, lo, 1)); gradient passes only through unclamped entries.
  int log_clamped(int a, double lo) {
    Matrix out = val(a);
    for (size_t i = 0; i < out.size(); ++i)
      out.data()[i] = std::log(std::fmin(std::fmax(out.data()[i], lo), 1.0));
    return push(std::move(out), needs(a), "log_clamped",
                [a, lo](Tape& t, int self) {
                  if (!t.needs(a)) return;
                  const Matrix& g = t.nodes_[self].grad;
                  const Matrix& x = t.val(a);
                  Matrix& da = t.grad_buf(a);
                  for (size_t i = 0; i < g.size(); ++i) {
                    const double xi = x.data()[i];
                    if (xi > lo && xi < 1.0) da.data()[i] += g.data()[i] / xi;
                  }
                },
                {a});
  }

  // ---- softmax family (max-shifted) ----

  int softmax_rows(int a) { return softmax_impl(a, "softmax_rows"); }

  // Same kernel, distinct tag so tests can audit attention widths.
  int attn_softmax(int a) { return softmax_impl(a, "attn_softmax"); }

  int log_softmax_rows(int a) {
    const Matrix& x = val(a);
    Matrix out(x.rows(), x.cols());
    for (int i = 0; i < x.rows(); ++i) {
      double mx = x.at(i, 0);
      for (int j = 1; j < x.cols(); ++j) mx = std::fmax(mx, x.at(i, j));
      double sum = 0.0;
      for (int j = 0; j < x.cols(); ++j) sum += std::exp(x.at(i, j) - mx);
      const double lse = mx + std::log(sum);
      for (int j = 0; j < x.cols(); ++j) out.at(i, j) = x.at(i, j) - lse;
    }
    return push(std::move(out), needs(a), "log_softmax_rows",
                [a](Tape& t, int self) {
                  if (!t.needs(a)) return;
                  const Matrix& g = t.nodes_[self].grad;
                  const Matrix& y = t.nodes_[self].value;
                  Matrix& da = t.grad_buf(a);
                  for (int i = 0; i < g.rows(); ++i) {
                    double gsum = 0.0;
                    for (int j = 0; j < g.cols(); ++j) gsum += g.at(i, j);
                    for (int j = 0; j < g.cols(); ++j)
                      da.at(i, j) += g.at(i, j) - std::exp(y.at(i, j)) * gsum;
                  }
                },
                {a});
  }

  // log(sum(exp(x))) over all entries -> 1x1.
  int logsumexp(int a) {
    const Matrix& x = val(a);
    if (x.size() == 0) throw ShapeError("logsumexp: empty input");
    double mx = x.data()[0];
    for (size_t i = 1; i < x.size(); ++i) mx = std::fmax(mx, x.data()[i]);
    double sum = 0.0;
    for (size_t i = 0; i < x.size(); ++i) sum += std::exp(x.data()[i] - mx);
    Matrix out(1, 1);
    out.at(0, 0) = mx + std::log(sum);
    return push(std::move(out), needs(a), "logsumexp",
                [a](Tape& t, int self) {
                  if (!t.needs(a)) return;
                  const double g = t.nodes_[self].grad.at(0, 0);
                  const double lse = t.nodes_[self].value.at(0, 0);
                  const Matrix& x = t.val(a);
                  Matrix& da = t.grad_buf(a);
                  for (size_t i = 0; i < x.size(); ++i)
                    da.data()[i] += g * std::exp(x.data()[i] - lse);
                },
                {a});
  }

  int sum(int a) {
    const Matrix& x = val(a);
    Matrix out(1, 1);
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += x.data()[i];
    out.at(0, 0) = s;
    return push(std::move(out), needs(a), "sum",
                [a](Tape& t, int self) {
                  if (!t.needs(a)) return;
                  const double g = t.nodes_[self].grad.at(0, 0);
                  Matrix& da = t.grad_buf(a);
                  for (size_t i = 0; i < da.size(); ++i) da.data()[i] += g;
                },
                {a});
  }

  // ---- structural ops ----

  int select_rows(int a, std::vector<int> idx) {
    const Matrix& x = val(a);
    for (const int i : idx)
      if (i < 0 || i >= x.rows())
        throw ShapeError("select_rows: index " + std::to_string(i) +
                         " out of range for " + x.shape_str());
    Matrix out(static_cast<int>(idx.size()), x.cols());
    for (size_t r = 0; r < idx.size(); ++r)
      for (int j = 0; j < x.cols(); ++j) out.at(static_cast<int>(r), j) = x.at(idx[r], j);
    return push(std::move(out), needs(a), "select_rows",
                [a, idx = std::move(idx)](Tape& t, int self) {
                  if (!t.needs(a)) return;
                  const Matrix& g = t.nodes_[self].grad;
                  Matrix& da = t.grad_buf(a);
                  for (size_t r = 0; r < idx.size(); ++r)
                    for (int j = 0; j < g.cols(); ++j)
                      da.at(idx[r], j) += g.at(static_cast<int>(r), j);
                },
                {a});
  }

  int concat_rows(const std::vector<int>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no parts");
    const int cols = val(parts[0]).cols();
    int rows = 0;
    bool ng = false;
    for (const int p : parts) {
      if (val(p).cols() != cols)
        throw ShapeError("concat_rows: column mismatch, " + val(p).shape_str() +
                         " vs " + std::to_string(cols) + " cols");
      rows += val(p).rows();
      ng = ng || needs(p);
    }
    Matrix out(rows, cols);
    int at = 0;
    for (const int p : parts) {
      const Matrix& x = val(p);
      for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < cols; ++j) out.at(at + i, j) = x.at(i, j);
      at += x.rows();
    }
    return push(std::move(out), ng, "concat_rows",
                [parts](Tape& t, int self) {
                  const Matrix& g = t.nodes_[self].grad;
                  int at = 0;
                  for (const int p : parts) {
                    const int r = t.val(p).rows();
                    if (t.needs(p)) {
                      Matrix& dp = t.grad_buf(p);
                      for (int i = 0; i < r; ++i)
                        for (int j = 0; j < g.cols(); ++j) dp.at(i, j) += g.at(at + i, j);
                    }
                    at += r;
                  }
                },
                parts);
  }

  int slice_cols(int a, int c0, int c1) {
    const Matrix& x = val(a);
    if (c0 < 0 || c1 > x.cols() || c0 >= c1)
      throw ShapeError("slice_cols: [" + std::to_string(c0) + "," +
                       std::to_string(c1) + ") invalid for " + x.shape_str());
    Matrix out(x.rows(), c1 - c0);
    for (int i = 0; i < x.rows(); ++i)
      for (int j = c0; j < c1; ++j) out.at(i, j - c0) = x.at(i, j);
    return push(std::move(out), needs(a), "slice_cols",
                [a, c0](Tape& t, int self) {
                  if (!t.needs(a)) return;
                  const Matrix& g = t.nodes_[self].grad;
                  Matrix& da = t.grad_buf(a);
                  for (int i = 0; i < g.rows(); ++i)
                    for (int j = 0; j < g.cols(); ++j) da.at(i, c0 + j) += g.at(i, j);
                },
                {a});
  }

  int concat_cols(const std::vector<int>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no parts");
    const int rows = val(parts[0]).rows();
    int cols = 0;
    bool ng = false;
    for (const int p : parts) {
      if (val(p).rows() != rows)
        throw ShapeError("concat_cols: row mismatch, " + val(p).shape_str() +
                         " vs " + std::to_string(rows) + " rows");
      cols += val(p).cols();
      ng = ng || needs(p);
    }
    Matrix out(rows, cols);
    int at = 0;
    for (const int p : parts) {
      const Matrix& x = val(p);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < x.cols(); ++j) out.at(i, at + j) = x.at(i, j);
      at += x.cols();
    }
    return push(std::move(out), ng, "concat_cols",
                [parts](Tape& t, int self) {
                  const Matrix& g = t.nodes_[self].grad;
                  int at = 0;
                  for (const int p : parts) {
                    const int c = t.val(p).cols();
                    if (t.needs(p)) {
                      Matrix& dp = t.grad_buf(p);
                      for (int i = 0; i < g.rows(); ++i)
                        for (int j = 0; j < c; ++j) dp.at(i, j) += g.at(i, at + j);
                    }
                    at += c;
                  }
                },
                parts);
  }

  // Inverted dropout; identity at inference or rate 0.
  int dropout(int a, double rate, bool training, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0)
      throw ConfigError("dropout rate must lie in [0,1), got " + std::to_string(rate));
    if (!training || rate == 0.0) return a;
    const Matrix& x = val(a);
    Matrix mask(x.rows(), x.cols());
    const double keep_scale = 1.0 / (1.0 - rate);
    for (size_t i = 0; i < mask.size(); ++i)
      mask.data()[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    Matrix out = x;
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] *= mask.data()[i];
    return push(std::move(out), needs(a), "dropout",
                [a, mask = std::move(mask)](Tape& t, int self) {
                  if (!t.needs(a)) return;
                  const Matrix& g = t.nodes_[self].grad;
                  Matrix& da = t.grad_buf(a);
                  for (size_t i = 0; i < g.size(); ++i)
                    da.data()[i] += g.data()[i] * mask.data()[i];
                },
                {a});
  }

  // Row-wise standardization (no affine part).
  int row_layernorm(int a, double eps = 1e-5) {
    const Matrix& x = val(a);
    Matrix out(x.rows(), x.cols());
    Matrix inv_sd(x.rows(), 1);
    const int d = x.cols();
    for (int i = 0; i < x.rows(); ++i) {
      double mean = 0.0;
      for (int j = 0; j < d; ++j) mean += x.at(i, j);
      mean /= d;
      double var = 0.0;
      for (int j = 0; j < d; ++j) {
        const double c = x.at(i, j) - mean;
        var += c * c;
      }
      var /= d;
      const double isd = 1.0 / std::sqrt(var + eps);
      inv_sd.at(i, 0) = isd;
      for (int j = 0; j < d; ++j) out.at(i, j) = (x.at(i, j) - mean) * isd;
    }
    return push(std::move(out), needs(a), "row_layernorm",
                [a, inv_sd = std::move(inv_sd)](Tape& t, int self) {
                  if (!t.needs(a)) return;
                  const Matrix& g = t.nodes_[self].grad;
                  const Matrix& y = t.nodes_[self].value;
                  Matrix& da = t.grad_buf(a);
                  const int d = g.cols();
                  for (int i = 0; i < g.rows(); ++i) {
                    double gmean = 0.0, gymean = 0.0;
                    for (int j = 0; j < d; ++j) {
                      gmean += g.at(i, j);
                      gymean += g.at(i, j) * y.at(i, j);
                    }
                    gmean /= d;
                    gymean /= d;
                    for (int j = 0; j < d; ++j)
                      da.at(i, j) += inv_sd.at(i, 0) *
                                     (g.at(i, j) - gmean - y.at(i, j) * gymean);
                  }
                },
                {a});
  }

  // ---- backward ----

  void backward(int root) {
    if (backward_done_)
      throw StateError("backward already ran on this tape");
    const Matrix& r = val(root);
    if (r.rows() != 1 || r.cols() != 1)
      throw ShapeError("backward root must be 1x1, got " + r.shape_str());
    backward_done_ = true;
    grad_buf(root).at(0, 0) = 1.0;
    for (int i = root; i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.needs_grad || n.grad.empty() || !n.backward) continue;
      n.backward(*this, i);
    }
    for (Node& n : nodes_) {
      if (n.bound == nullptr || n.grad.empty()) continue;
      Matrix& pg = n.bound->grad;
      for (size_t i = 0; i < pg.size(); ++i) pg.data()[i] += n.grad.data()[i];
    }
    if (store_ != nullptr) store_->mark_grads_ready();
  }

private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    Parameter* bound = nullptr;
    const char* tag = "";
    std::function<void(Tape&, int)> backward;
  };

  const Matrix& val(int id) const { return nodes_[id].value; }
  bool needs(int id) const { return nodes_[id].needs_grad; }

  Matrix& grad_buf(int id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
    return n.grad;
  }

  int binary(int a, int b, const char* tag, double bsign) {
    require_same_shape(val(a), val(b), tag);
    Matrix out = val(a);
    const Matrix& vb = val(b);
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] += bsign * vb.data()[i];
    return push(std::move(out), needs(a) || needs(b), tag,
                [a, b, bsign](Tape& t, int self) {
                  const Matrix& g = t.nodes_[self].grad;
                  if (t.needs(a)) accumulate(t.grad_buf(a), g);
                  if (t.needs(b)) {
                    Matrix& db = t.grad_buf(b);
                    for (size_t i = 0; i < g.size(); ++i)
                      db.data()[i] += bsign * g.data()[i];
                  }
                },
                {a, b});
  }

  int softmax_impl(int a, const char* tag) {
    const Matrix& x = val(a);
    Matrix out(x.rows(), x.cols());
    for (int i = 0; i < x.rows(); ++i) {
      double mx = x.at(i, 0);
      for (int j = 1; j < x.cols(); ++j) mx = std::fmax(mx, x.at(i, j));
      double sum = 0.0;
      for (int j = 0; j < x.cols(); ++j) {
        const double e = std::exp(x.at(i, j) - mx);
        out.at(i, j) = e;
        sum += e;
      }
      for (int j = 0; j < x.cols(); ++j) out.at(i, j) /= sum;
    }
    return push(std::move(out), needs(a), tag,
                [a](Tape& t, int self) {
                  if (!t.needs(a)) return;
                  const Matrix& g = t.nodes_[self].grad;
                  const Matrix& y = t.nodes_[self].value;
                  Matrix& da = t.grad_buf(a);
                  for (int i = 0; i < g.rows(); ++i) {
                    double dot = 0.0;
                    for (int j = 0; j < g.cols(); ++j) dot += g.at(i, j) * y.at(i, j);
                    for (int j = 0; j < g.cols(); ++j)
                      da.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
                  }
                },
                {a});
  }

  int push(Matrix value, bool needs_grad, const char* tag,
           std::function<void(Tape&, int)> back, const std::vector<int>&) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    n.tag = tag;
    if (needs_grad) n.backward = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  // dst (m x p) += g (m x n) * b^T (n x p view of b: p x n? no, b is (p x n))
  static void add_matmul_nt(Matrix& dst, const Matrix& g, const Matrix& b) {
    // dst_ik += sum_j g_ij * b_kj  where b is (k_dim x n)
    for (int i = 0; i < dst.rows(); ++i) {
      const double* gi = g.row_ptr(i);
      double* di = dst.row_ptr(i);
      for (int k = 0; k < dst.cols(); ++k) {
        const double* bk = b.row_ptr(k);
        double s = 0.0;
        for (int j = 0; j < g.cols(); ++j) s += gi[j] * bk[j];
        di[k] += s;
      }
    }
  }

  // dst (p x n) += a^T (p x m view of a: m x p) * g (m x n)
  static void add_matmul_tn(Matrix& dst, const Matrix& a, const Matrix& g) {
    for (int i = 0; i < a.rows(); ++i) {
      const double* gi = g.row_ptr(i);
      for (int k = 0; k < a.cols(); ++k) {
        const double aik = a.at(i, k);
        if (aik == 0.0) continue;
        double* dk = dst.row_ptr(k);
        for (int j = 0; j < g.cols(); ++j) dk[j] += aik * gi[j];
      }
    }
  }

  static void accumulate(Matrix& dst, const Matrix& src) {
    for (size_t i = 0; i < dst.size(); ++i) dst.data()[i] += src.data()[i];
  }

  std::vector<Node> nodes_;
  ParamStore* store_;
  bool backward_done_ = false;
};

}  // namespace scmil
