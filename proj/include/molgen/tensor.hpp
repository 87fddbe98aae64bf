// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "molgen/rng.hpp"

namespace molgen {

// Dense row-major 2-D tensor. Scalars are 1x1, biases 1xm.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {}

  static Tensor zeros(int r, int c) { return Tensor(r, c); }
  static Tensor full(int r, int c, double x);
  static Tensor row(const std::vector<double>& values);
  static Tensor scalar(double x);

  double& at(int i, int j) { return v[static_cast<size_t>(i) * cols + j]; }
  double at(int i, int j) const { return v[static_cast<size_t>(i) * cols + j]; }
  int numel() const { return rows * cols; }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
  std::string shape_str() const;
};

// Named trainable tensor. Frozen parameters never receive optimizer updates,
// but gradients still flow through them during backward.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool frozen = false;

  Parameter() = default;
  Parameter(std::string n, Tensor t)
      : name(std::move(n)), value(std::move(t)), grad(value.rows, value.cols) {}

  void zero_grad() { std::fill(grad.v.begin(), grad.v.end(), 0.0); }
};

// Xavier-uniform matrix in [-sqrt(6/(fan_in+fan_out)), +...] for x[.. x rows] * W.
Parameter make_matrix_param(const std::string& name, int rows, int cols, Rng& rng);
Parameter make_bias_param(const std::string& name, int cols);

// Reverse-mode autodiff tape over 2-D tensors. Nodes are identified by the int
// returned at creation; every op validates shapes and rejects non-finite
// outputs. One tape per logical thread; build a graph, call backward once,
// then discard or clear.
class Tape {
 public:
  // Leaves. leaf() is cached per tape: repeated calls for the same Parameter
  // return the same node, so weights reused across timesteps or layers are
  // recorded once.
  int constant(Tensor t);
  int leaf(Parameter& p);  // backward adds this node's gradient into p.grad

  // Forward ops (each returns the id of the freshly appended node).
  int matmul(int a, int b);
  int transpose(int a);
  int add(int a, int b);  // same shape, or b is a 1xm bias broadcast over rows
  int add_scalar(int a, double c);
  int mul(int a, int b);
  int scale(int a, double c);
  int concat(const std::vector<int>& parts, int axis);
  int slice(int a, int axis, int start, int len);
  int embedding_lookup(int table, const std::vector<int>& ids);
  int gather_cols(int a, const std::vector<int>& col_ids);  // out[i,0] = a[i, col_ids[i]]
  int softmax(int a);      // rowwise
  int log_softmax(int a);  // rowwise
  int log(int a);
  int clip(int a, double lo, double hi);
  int sigmoid(int a);
  int tanh(int a);
  int layer_norm(int a, double eps = 1e-6);  // rowwise, no affine
  int sum(int a, int axis);                  // axis 0: [1xm]; axis 1: [nx1]
  int mean(int a, int axis);
  int sum_all(int a);   // [1x1]
  int mean_all(int a);  // [1x1]

  const Tensor& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  const Tensor& grad(int id) const;

  // Seeds d(loss)/d(loss)=1, sweeps the tape in reverse, then accumulates
  // leaf gradients into their Parameters. Callable once per built graph.
  void backward(int loss_id);

  size_t size() const { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    Tensor value;
    std::function<void(Tape&, int)> back;  // nullptr for leaves/constant subgraphs
    Parameter* param = nullptr;
    bool needs_grad = false;
  };

  int push(Tensor value, bool needs_grad, std::function<void(Tape&, int)> back,
           const char* op_name);
  bool wants(int id) const { return nodes_[static_cast<size_t>(id)].needs_grad; }
  Tensor& grad_ref(int id) { return grads_[static_cast<size_t>(id)]; }
  void check_id(int id, const char* op_name) const;

  // Deque keeps value() references stable while later ops are appended.
  std::deque<Node> nodes_;
  std::vector<Tensor> grads_;  // populated during backward
  std::map<const Parameter*, int> leaf_cache_;
  bool swept_ = false;
};

// Plain SGD: p -= lr * grad.
struct SgdOptimizer {
  double lr = 1e-3;
  void step(const std::vector<Parameter*>& params);
};

// Adam with bias correction; moment state keyed by parameter name.
struct AdamOptimizer {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void step(const std::vector<Parameter*>& params);
  void reset() {
    t_ = 0;
    m_.clear();
    v_.clear();
  }

 private:
  int64_t t_ = 0;
  std::map<std::string, std::vector<double>> m_;
  std::map<std::string, std::vector<double>> v_;
};

void zero_grads(const std::vector<Parameter*>& params);

}  // namespace molgen
