#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "purechat/array.hpp"

namespace purechat::ad {

class Tape;

// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Ops append nodes; backward() replays the local rules in
// reverse registration order. A Tape is single-threaded; independent Tapes
// may run concurrently. Node values are immutable once written.
//
// Every op checks its output for NaN/Inf and throws NumericError naming the
// op, so a finite graph can only fail loudly.
class Tape {
 public:
  // Leaves. input() is a constant, param() is a trainable leaf whose
  // gradient is retained by backward().
  Var input(Array value);
  Var param(Array value);

  const Array& value(Var v) const { return node(v).value; }
  std::size_t size() const { return nodes_.size(); }

  // --- ops -------------------------------------------------------------
  Var matmul(Var a, Var b);                  // [m x k] * [k x n]
  Var matvec(Var w, Var x);                  // [m x k] * [k]
  Var add(Var a, Var b);                     // same shape
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);                     // elementwise
  Var smul(Var s, Var x);                    // scalar Var times tensor
  Var affine(Var x, double a, double b);     // a*x + b elementwise
  Var concat(const std::vector<Var>& xs);    // 1-D concat
  Var sigmoid(Var x);
  Var tanh_act(Var x);
  Var softmax(Var x);                        // 1-D, max-subtracted
  Var log_softmax(Var x);                    // 1-D
  Var log(Var x);
  Var clamp(Var x, double lo, double hi);
  Var sum(Var x);                            // -> scalar
  Var mean(Var x);                           // -> scalar
  Var gather_row(Var table, std::size_t row);  // 2-D -> 1-D row copy
  Var pick(Var v, std::size_t i);            // 1-D element -> scalar
  Var stack_rows(const std::vector<Var>& rows);     // T equal-length 1-D -> [T x n]
  Var stack_scalars(const std::vector<Var>& xs);    // scalars -> 1-D

  // --- gradients ---------------------------------------------------------
  // loss must be a scalar recorded on this tape. After backward(), grad(v)
  // is valid for every node; leaves the loss never touched report zeros.
  void backward(Var loss);
  const Array& grad(Var v) const;
  bool ran_backward() const { return ran_backward_; }

 private:
  struct Node {
    Array value;
    std::vector<int> parents;
    std::function<void(Tape&, int self)> back;  // empty for leaves
    bool trainable = false;
  };

  const Node& node(Var v) const;
  Var push(Array value, std::vector<int> parents,
           std::function<void(Tape&, int)> back, const char* op);
  Array& grad_ref(int id) { return grads_[static_cast<std::size_t>(id)]; }

  // deques: references returned by value()/grad() stay valid as ops append
  std::deque<Node> nodes_;
  std::deque<Array> grads_;
  bool ran_backward_ = false;
};

}  // namespace purechat::ad
