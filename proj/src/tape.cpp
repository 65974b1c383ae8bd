#include "purechat/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "purechat/kernels.hpp"

namespace purechat::ad {

namespace {

void check_finite(const Array& a, const char* op) {
  if (!a.all_finite())
    throw NumericError(std::string(op) + ": non-finite output");
}

void require_same_shape(const Array& a, const Array& b, const char* op) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         a.shape_string() + " vs " + b.shape_string());
}

}  // namespace

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size())
    throw ContractError("Tape: variable does not belong to this tape");
  return nodes_[static_cast<std::size_t>(v.id)];
}

Var Tape::push(Array value, std::vector<int> parents,
               std::function<void(Tape&, int)> back, const char* op) {
  check_finite(value, op);
  nodes_.push_back(Node{std::move(value), std::move(parents), std::move(back),
                        /*trainable=*/false});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(Array value) {
  check_finite(value, "input");
  nodes_.push_back(Node{std::move(value), {}, {}, false});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(Array value) {
  check_finite(value, "param");
  nodes_.push_back(Node{std::move(value), {}, {}, true});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::matmul(Var a, Var b) {
  const Array& A = value(a);
  const Array& B = value(b);
  if (A.ndim() != 2 || B.ndim() != 2 || A.cols() != B.rows())
    throw DimensionError("matmul: incompatible shapes " + A.shape_string() +
                         " and " + B.shape_string());
  std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  Array C({m, n});
  kernels::matmul(A.raw(), B.raw(), C.raw(), m, k, n);
  auto back = [m, k, n](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Array& g = t.grad_ref(self);
    const Array& A2 = t.nodes_[static_cast<std::size_t>(nd.parents[0])].value;
    const Array& B2 = t.nodes_[static_cast<std::size_t>(nd.parents[1])].value;
    Array dA({m, k}), dB({k, n});
    kernels::matmul_nt(g.raw(), B2.raw(), dA.raw(), m, n, k);  // g * B^T
    kernels::matmul_tn(A2.raw(), g.raw(), dB.raw(), k, m, n);  // A^T * g
    Array& ga = t.grad_ref(nd.parents[0]);
    Array& gb = t.grad_ref(nd.parents[1]);
    for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += dA[i];
    for (std::size_t i = 0; i < gb.numel(); ++i) gb[i] += dB[i];
  };
  return push(std::move(C), {a.id, b.id}, back, "matmul");
}

Var Tape::matvec(Var w, Var x) {
  const Array& W = value(w);
  const Array& X = value(x);
  if (W.ndim() != 2 || X.ndim() != 1 || W.cols() != X.numel())
    throw DimensionError("matvec: incompatible shapes " + W.shape_string() +
                         " and " + X.shape_string());
  std::size_t m = W.rows(), k = W.cols();
  Array Y({m});
  kernels::matvec(W.raw(), X.raw(), Y.raw(), m, k);
  auto back = [m, k](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Array& g = t.grad_ref(self);
    const Array& W2 = t.nodes_[static_cast<std::size_t>(nd.parents[0])].value;
    const Array& X2 = t.nodes_[static_cast<std::size_t>(nd.parents[1])].value;
    Array& gw = t.grad_ref(nd.parents[0]);
    Array& gx = t.grad_ref(nd.parents[1]);
    // dW += g (outer) x ; dx += W^T g
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) gw[i * k + p] += g[i] * X2[p];
    Array dx({k});
    kernels::matvec_t(W2.raw(), g.raw(), dx.raw(), m, k);
    for (std::size_t p = 0; p < k; ++p) gx[p] += dx[p];
  };
  return push(std::move(Y), {w.id, x.id}, back, "matvec");
}

Var Tape::add(Var a, Var b) {
  const Array& A = value(a);
  const Array& B = value(b);
  require_same_shape(A, B, "add");
  Array C = A;
  for (std::size_t i = 0; i < C.numel(); ++i) C[i] += B[i];
  auto back = [](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Array& g = t.grad_ref(self);
    Array& ga = t.grad_ref(nd.parents[0]);
    Array& gb = t.grad_ref(nd.parents[1]);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  };
  return push(std::move(C), {a.id, b.id}, back, "add");
}

Var Tape::sub(Var a, Var b) {
  const Array& A = value(a);
  const Array& B = value(b);
  require_same_shape(A, B, "sub");
  Array C = A;
  for (std::size_t i = 0; i < C.numel(); ++i) C[i] -= B[i];
  auto back = [](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Array& g = t.grad_ref(self);
    Array& ga = t.grad_ref(nd.parents[0]);
    Array& gb = t.grad_ref(nd.parents[1]);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      ga[i] += g[i];
      gb[i] -= g[i];
    }
  };
  return push(std::move(C), {a.id, b.id}, back, "sub");
}

Var Tape::mul(Var a, Var b) {
  const Array& A = value(a);
  const Array& B = value(b);
  require_same_shape(A, B, "mul");
  Array C = A;
  for (std::size_t i = 0; i < C.numel(); ++i) C[i] *= B[i];
  auto back = [](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Array& g = t.grad_ref(self);
    const Array& A2 = t.nodes_[static_cast<std::size_t>(nd.parents[0])].value;
    const Array& B2 = t.nodes_[static_cast<std::size_t>(nd.parents[1])].value;
    Array& ga = t.grad_ref(nd.parents[0]);
    Array& gb = t.grad_ref(nd.parents[1]);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      ga[i] += g[i] * B2[i];
      gb[i] += g[i] * A2[i];
    }
  };
  return push(std::move(C), {a.id, b.id}, back, "mul");
}

Var Tape::smul(Var s, Var x) {
  const Array& S = value(s);
  const Array& X = value(x);
  if (!S.is_scalar()) throw DimensionError("smul: first operand must be scalar");
  Array C = X;
  for (std::size_t i = 0; i < C.numel(); ++i) C[i] *= S[0];
  auto back = [](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Array& g = t.grad_ref(self);
    const Array& S2 = t.nodes_[static_cast<std::size_t>(nd.parents[0])].value;
    const Array& X2 = t.nodes_[static_cast<std::size_t>(nd.parents[1])].value;
    Array& gs = t.grad_ref(nd.parents[0]);
    Array& gx = t.grad_ref(nd.parents[1]);
    double acc = 0.0;
    for (std::size_t i = 0; i < g.numel(); ++i) {
      acc += g[i] * X2[i];
      gx[i] += g[i] * S2[0];
    }
    gs[0] += acc;
  };
  return push(std::move(C), {s.id, x.id}, back, "smul");
}

Var Tape::affine(Var x, double a, double b) {
  Array C = value(x);
  for (std::size_t i = 0; i < C.numel(); ++i) C[i] = a * C[i] + b;
  auto back = [a](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Array& g = t.grad_ref(self);
    Array& gx = t.grad_ref(nd.parents[0]);
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += a * g[i];
  };
  return push(std::move(C), {x.id}, back, "affine");
}

Var Tape::concat(const std::vector<Var>& xs) {
  if (xs.empty()) throw ContractError("concat: no operands");
  std::size_t total = 0;
  std::vector<int> parents;
  for (Var v : xs) {
    const Array& a = value(v);
    if (a.ndim() != 1)
      throw DimensionError("concat: operands must be 1-D, got " +
                           a.shape_string());
    total += a.numel();
    parents.push_back(v.id);
  }
  Array C({total});
  std::size_t off = 0;
  for (Var v : xs) {
    const Array& a = value(v);
    for (std::size_t i = 0; i < a.numel(); ++i) C[off + i] = a[i];
    off += a.numel();
  }
  auto back = [](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Array& g = t.grad_ref(self);
    std::size_t off2 = 0;
    for (int p : nd.parents) {
      Array& gp = t.grad_ref(p);
      for (std::size_t i = 0; i < gp.numel(); ++i) gp[i] += g[off2 + i];
      off2 += gp.numel();
    }
  };
  return push(std::move(C), std::move(parents), back, "concat");
}

Var Tape::sigmoid(Var x) {
  Array C = value(x);
  for (std::size_t i = 0; i < C.numel(); ++i) C[i] = 1.0 / (1.0 + std::exp(-C[i]));
  auto back = [](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Array& y = nd.value;
    const Array& g = t.grad_ref(self);
    Array& gx = t.grad_ref(nd.parents[0]);
    for (std::size_t i = 0; i < g.numel(); ++i)
      gx[i] += g[i] * y[i] * (1.0 - y[i]);
  };
  return push(std::move(C), {x.id}, back, "sigmoid");
}

Var Tape::tanh_act(Var x) {
  Array C = value(x);
  for (std::size_t i = 0; i < C.numel(); ++i) C[i] = std::tanh(C[i]);
  auto back = [](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Array& y = nd.value;
    const Array& g = t.grad_ref(self);
    Array& gx = t.grad_ref(nd.parents[0]);
    for (std::size_t i = 0; i < g.numel(); ++i)
      gx[i] += g[i] * (1.0 - y[i] * y[i]);
  };
  return push(std::move(C), {x.id}, back, "tanh");
}

Var Tape::softmax(Var x) {
  const Array& X = value(x);
  if (X.ndim() != 1 || X.numel() == 0)
    throw DimensionError("softmax: expects a non-empty 1-D input");
  Array C = X;
  double mx = C[0];
  for (std::size_t i = 1; i < C.numel(); ++i) mx = std::max(mx, C[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < C.numel(); ++i) {
    C[i] = std::exp(C[i] - mx);
    z += C[i];
  }
  for (std::size_t i = 0; i < C.numel(); ++i) C[i] /= z;
  auto back = [](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Array& y = nd.value;
    const Array& g = t.grad_ref(self);
    Array& gx = t.grad_ref(nd.parents[0]);
    double dot = 0.0;
    for (std::size_t i = 0; i < g.numel(); ++i) dot += g[i] * y[i];
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += y[i] * (g[i] - dot);
  };
  return push(std::move(C), {x.id}, back, "softmax");
}

Var Tape::log_softmax(Var x) {
  const Array& X = value(x);
  if (X.ndim() != 1 || X.numel() == 0)
    throw DimensionError("log_softmax: expects a non-empty 1-D input");
  Array C = X;
  double mx = C[0];
  for (std::size_t i = 1; i < C.numel(); ++i) mx = std::max(mx, C[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < C.numel(); ++i) z += std::exp(C[i] - mx);
  double lz = mx + std::log(z);
  for (std::size_t i = 0; i < C.numel(); ++i) C[i] -= lz;
  auto back = [](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Array& y = nd.value;
    const Array& g = t.grad_ref(self);
    Array& gx = t.grad_ref(nd.parents[0]);
    double gsum = 0.0;
    for (std::size_t i = 0; i < g.numel(); ++i) gsum += g[i];
    for (std::size_t i = 0; i < g.numel(); ++i)
      gx[i] += g[i] - std::exp(y[i]) * gsum;
  };
  return push(std::move(C), {x.id}, back, "log_softmax");
}

Var Tape::log(Var x) {
  Array C = value(x);
  for (std::size_t i = 0; i < C.numel(); ++i) C[i] = std::log(C[i]);
  auto back = [](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Array& X2 = t.nodes_[static_cast<std::size_t>(nd.parents[0])].value;
    const Array& g = t.grad_ref(self);
    Array& gx = t.grad_ref(nd.parents[0]);
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i] / X2[i];
  };
  return push(std::move(C), {x.id}, back, "log");
}

Var Tape::clamp(Var x, double lo, double hi) {
  if (!(lo < hi)) throw ContractError("clamp: lo must be below hi");
  Array C = value(x);
  for (std::size_t i = 0; i < C.numel(); ++i)
    C[i] = std::min(std::max(C[i], lo), hi);
  auto back = [lo, hi](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Array& X2 = t.nodes_[static_cast<std::size_t>(nd.parents[0])].value;
    const Array& g = t.grad_ref(self);
    Array& gx = t.grad_ref(nd.parents[0]);
    for (std::size_t i = 0; i < g.numel(); ++i)
      if (X2[i] > lo && X2[i] < hi) gx[i] += g[i];
  };
  return push(std::move(C), {x.id}, back, "clamp");
}

Var Tape::sum(Var x) {
  const Array& X = value(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < X.numel(); ++i) acc += X[i];
  auto back = [](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Array& g = t.grad_ref(self);
    Array& gx = t.grad_ref(nd.parents[0]);
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += g[0];
  };
  return push(Array::scalar(acc), {x.id}, back, "sum");
}

Var Tape::mean(Var x) {
  const Array& X = value(x);
  if (X.numel() == 0) throw ContractError("mean: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < X.numel(); ++i) acc += X[i];
  double n = static_cast<double>(X.numel());
  auto back = [n](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Array& g = t.grad_ref(self);
    Array& gx = t.grad_ref(nd.parents[0]);
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += g[0] / n;
  };
  return push(Array::scalar(acc / n), {x.id}, back, "mean");
}

Var Tape::gather_row(Var table, std::size_t row) {
  const Array& T = value(table);
  if (T.ndim() != 2 || row >= T.rows())
    throw DimensionError("gather_row: row " + std::to_string(row) +
                         " out of range for " + T.shape_string());
  std::size_t n = T.cols();
  Array C({n});
  for (std::size_t i = 0; i < n; ++i) C[i] = T.at(row, i);
  auto back = [row, n](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Array& g = t.grad_ref(self);
    Array& gt = t.grad_ref(nd.parents[0]);
    for (std::size_t i = 0; i < n; ++i) gt[row * n + i] += g[i];
  };
  return push(std::move(C), {table.id}, back, "gather_row");
}

Var Tape::pick(Var v, std::size_t i) {
  const Array& X = value(v);
  if (X.ndim() != 1 || i >= X.numel())
    throw DimensionError("pick: index " + std::to_string(i) +
                         " out of range for " + X.shape_string());
  auto back = [i](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Array& g = t.grad_ref(self);
    t.grad_ref(nd.parents[0])[i] += g[0];
  };
  return push(Array::scalar(X[i]), {v.id}, back, "pick");
}

Var Tape::stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw ContractError("stack_rows: no rows");
  std::size_t n = value(rows[0]).numel();
  std::vector<int> parents;
  for (Var r : rows) {
    const Array& a = value(r);
    if (a.ndim() != 1 || a.numel() != n)
      throw DimensionError("stack_rows: rows must be equal-length 1-D");
    parents.push_back(r.id);
  }
  Array C({rows.size(), n});
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const Array& a = value(rows[t]);
    for (std::size_t i = 0; i < n; ++i) C.at(t, i) = a[i];
  }
  auto back = [n](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Array& g = t.grad_ref(self);
    for (std::size_t r = 0; r < nd.parents.size(); ++r) {
      Array& gp = t.grad_ref(nd.parents[r]);
      for (std::size_t i = 0; i < n; ++i) gp[i] += g[r * n + i];
    }
  };
  return push(std::move(C), std::move(parents), back, "stack_rows");
}

Var Tape::stack_scalars(const std::vector<Var>& xs) {
  if (xs.empty()) throw ContractError("stack_scalars: no operands");
  std::vector<int> parents;
  Array C({xs.size()});
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Array& a = value(xs[i]);
    if (!a.is_scalar())
      throw DimensionError("stack_scalars: operands must be scalar");
    C[i] = a[0];
    parents.push_back(xs[i].id);
  }
  auto back = [](Tape& t, int self) {
    const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
    const Array& g = t.grad_ref(self);
    for (std::size_t i = 0; i < nd.parents.size(); ++i)
      t.grad_ref(nd.parents[i])[0] += g[i];
  };
  return push(std::move(C), std::move(parents), back, "stack_scalars");
}

void Tape::backward(Var loss) {
  const Node& ln = node(loss);
  if (!ln.value.is_scalar())
    throw ContractError("backward: loss must be a scalar, got " +
                        ln.value.shape_string());
  grads_.clear();
  for (const Node& n : nodes_) grads_.push_back(Array(n.value.shape()));
  grads_[static_cast<std::size_t>(loss.id)][0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.back) continue;
    const Array& g = grads_[static_cast<std::size_t>(id)];
    bool any = false;
    for (std::size_t i = 0; i < g.numel() && !any; ++i) any = g[i] != 0.0;
    if (any) n.back(*this, id);
  }
  ran_backward_ = true;
}

const Array& Tape::grad(Var v) const {
  if (!ran_backward_) throw ContractError("grad: backward() has not run");
  node(v);  // range check
  return grads_[static_cast<std::size_t>(v.id)];
}

}  // namespace purechat::ad
