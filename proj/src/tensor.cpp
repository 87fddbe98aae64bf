// SPDX-License-Identifier: Apache-2.0

#include "molgen/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "molgen/errors.hpp"
#include "molgen/kernels.hpp"

namespace molgen {

Tensor Tensor::full(int r, int c, double x) {
  Tensor t(r, c);
  std::fill(t.v.begin(), t.v.end(), x);
  return t;
}

Tensor Tensor::row(const std::vector<double>& values) {
  Tensor t(1, static_cast<int>(values.size()));
  t.v = values;
  return t;
}

Tensor Tensor::scalar(double x) {
  Tensor t(1, 1);
  t.v[0] = x;
  return t;
}

std::string Tensor::shape_str() const {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

Parameter make_matrix_param(const std::string& name, int rows, int cols, Rng& rng) {
  Tensor t(rows, cols);
  const double limit = std::sqrt(6.0 / (rows + cols));
  for (double& x : t.v) x = rng.uniform(-limit, limit);
  return Parameter(name, std::move(t));
}

Parameter make_bias_param(const std::string& name, int cols) {
  return Parameter(name, Tensor(1, cols));
}

namespace {

void add_into(Tensor& dst, const Tensor& src) {
  for (size_t i = 0; i < dst.v.size(); ++i) dst.v[i] += src.v[i];
}

std::string shapes(const Tensor& a, const Tensor& b) {
  return a.shape_str() + " vs " + b.shape_str();
}

}  // namespace

void Tape::check_id(int id, const char* op_name) const {
  if (id < 0 || static_cast<size_t>(id) >= nodes_.size()) {
    throw Error(std::string(op_name) + ": bad node id " + std::to_string(id));
  }
}

int Tape::push(Tensor value, bool needs_grad, std::function<void(Tape&, int)> back,
               const char* op_name) {
  for (double x : value.v) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string(op_name) + " produced a non-finite value");
    }
  }
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::constant(Tensor t) { return push(std::move(t), false, nullptr, "constant"); }

int Tape::leaf(Parameter& p) {
  const auto it = leaf_cache_.find(&p);
  if (it != leaf_cache_.end()) return it->second;
  if (!p.value.same_shape(p.grad)) p.grad = Tensor(p.value.rows, p.value.cols);
  const int id = push(p.value, true, nullptr, "leaf");
  nodes_.back().param = &p;
  leaf_cache_[&p] = id;
  return id;
}

int Tape::matmul(int a, int b) {
  check_id(a, "matmul");
  check_id(b, "matmul");
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.cols != tb.rows) throw ShapeMismatch("matmul: " + shapes(ta, tb));
  Tensor out(ta.rows, tb.cols);
  matmul_nn(ta.v.data(), tb.v.data(), out.v.data(), ta.rows, ta.cols, tb.cols);
  const int n = ta.rows, k = ta.cols, m = tb.cols;
  auto back = [a, b, n, k, m](Tape& t, int self) {
    const Tensor& g = t.grad_ref(self);
    if (t.wants(a)) {
      Tensor tmp(n, k);
      matmul_nt(g.v.data(), t.value(b).v.data(), tmp.v.data(), n, m, k);
      add_into(t.grad_ref(a), tmp);
    }
    if (t.wants(b)) {
      Tensor tmp(k, m);
      matmul_tn(t.value(a).v.data(), g.v.data(), tmp.v.data(), k, n, m);
      add_into(t.grad_ref(b), tmp);
    }
  };
  return push(std::move(out), wants(a) || wants(b), std::move(back), "matmul");
}

int Tape::transpose(int a) {
  check_id(a, "transpose");
  const Tensor& ta = value(a);
  Tensor out(ta.cols, ta.rows);
  for (int i = 0; i < ta.rows; ++i)
    for (int j = 0; j < ta.cols; ++j) out.at(j, i) = ta.at(i, j);
  auto back = [a](Tape& t, int self) {
    if (!t.wants(a)) return;
    const Tensor& g = t.grad_ref(self);
    Tensor& da = t.grad_ref(a);
    for (int i = 0; i < g.rows; ++i)
      for (int j = 0; j < g.cols; ++j) da.at(j, i) += g.at(i, j);
  };
  return push(std::move(out), wants(a), std::move(back), "transpose");
}

int Tape::add(int a, int b) {
  check_id(a, "add");
  check_id(b, "add");
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  const bool broadcast = tb.rows == 1 && ta.cols == tb.cols && ta.rows != 1;
  if (!broadcast && !ta.same_shape(tb)) throw ShapeMismatch("add: " + shapes(ta, tb));
  Tensor out = ta;
  if (broadcast) {
    for (int i = 0; i < out.rows; ++i)
      for (int j = 0; j < out.cols; ++j) out.at(i, j) += tb.at(0, j);
  } else {
    add_into(out, tb);
  }
  auto back = [a, b, broadcast](Tape& t, int self) {
    const Tensor& g = t.grad_ref(self);
    if (t.wants(a)) add_into(t.grad_ref(a), g);
    if (t.wants(b)) {
      Tensor& db = t.grad_ref(b);
      if (broadcast) {
        for (int i = 0; i < g.rows; ++i)
          for (int j = 0; j < g.cols; ++j) db.at(0, j) += g.at(i, j);
      } else {
        add_into(db, g);
      }
    }
  };
  return push(std::move(out), wants(a) || wants(b), std::move(back), "add");
}

int Tape::add_scalar(int a, double c) {
  check_id(a, "add_scalar");
  Tensor out = value(a);
  for (double& x : out.v) x += c;
  auto back = [a](Tape& t, int self) {
    if (t.wants(a)) add_into(t.grad_ref(a), t.grad_ref(self));
  };
  return push(std::move(out), wants(a), std::move(back), "add_scalar");
}

int Tape::mul(int a, int b) {
  check_id(a, "mul");
  check_id(b, "mul");
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) throw ShapeMismatch("mul: " + shapes(ta, tb));
  Tensor out = ta;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= tb.v[i];
  auto back = [a, b](Tape& t, int self) {
    const Tensor& g = t.grad_ref(self);
    if (t.wants(a)) {
      Tensor& da = t.grad_ref(a);
      const Tensor& vb = t.value(b);
      for (size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i] * vb.v[i];
    }
    if (t.wants(b)) {
      Tensor& db = t.grad_ref(b);
      const Tensor& va = t.value(a);
      for (size_t i = 0; i < g.v.size(); ++i) db.v[i] += g.v[i] * va.v[i];
    }
  };
  return push(std::move(out), wants(a) || wants(b), std::move(back), "mul");
}

int Tape::scale(int a, double c) {
  check_id(a, "scale");
  Tensor out = value(a);
  for (double& x : out.v) x *= c;
  auto back = [a, c](Tape& t, int self) {
    if (!t.wants(a)) return;
    const Tensor& g = t.grad_ref(self);
    Tensor& da = t.grad_ref(a);
    for (size_t i = 0; i < g.v.size(); ++i) da.v[i] += c * g.v[i];
  };
  return push(std::move(out), wants(a), std::move(back), "scale");
}

int Tape::concat(const std::vector<int>& parts, int axis) {
  if (parts.empty()) throw Error("concat: no inputs");
  if (axis != 0 && axis != 1) throw Error("concat: axis must be 0 or 1");
  for (int p : parts) check_id(p, "concat");
  const Tensor& first = value(parts[0]);
  int rows = first.rows, cols = first.cols;
  bool needs = false;
  for (size_t i = 1; i < parts.size(); ++i) {
    const Tensor& tp = value(parts[i]);
    if (axis == 0) {
      if (tp.cols != cols) throw ShapeMismatch("concat axis 0: " + shapes(first, tp));
      rows += tp.rows;
    } else {
      if (tp.rows != rows) throw ShapeMismatch("concat axis 1: " + shapes(first, tp));
      cols += tp.cols;
    }
  }
  for (int p : parts) needs = needs || wants(p);
  Tensor out(rows, cols);
  if (axis == 0) {
    int r0 = 0;
    for (int p : parts) {
      const Tensor& tp = value(p);
      std::memcpy(&out.v[static_cast<size_t>(r0) * cols], tp.v.data(), tp.v.size() * sizeof(double));
      r0 += tp.rows;
    }
  } else {
    int c0 = 0;
    for (int p : parts) {
      const Tensor& tp = value(p);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < tp.cols; ++j) out.at(i, c0 + j) = tp.at(i, j);
      c0 += tp.cols;
    }
  }
  auto back = [parts, axis](Tape& t, int self) {
    const Tensor& g = t.grad_ref(self);
    int off = 0;
    for (int p : parts) {
      const Tensor& tp = t.value(p);
      if (t.wants(p)) {
        Tensor& dp = t.grad_ref(p);
        if (axis == 0) {
          for (int i = 0; i < tp.rows; ++i)
            for (int j = 0; j < tp.cols; ++j) dp.at(i, j) += g.at(off + i, j);
        } else {
          for (int i = 0; i < tp.rows; ++i)
            for (int j = 0; j < tp.cols; ++j) dp.at(i, j) += g.at(i, off + j);
        }
      }
      off += axis == 0 ? tp.rows : tp.cols;
    }
  };
  return push(std::move(out), needs, std::move(back), "concat");
}

int Tape::slice(int a, int axis, int start, int len) {
  check_id(a, "slice");
  if (axis != 0 && axis != 1) throw Error("slice: axis must be 0 or 1");
  const Tensor& ta = value(a);
  const int extent = axis == 0 ? ta.rows : ta.cols;
  if (start < 0 || len <= 0 || start + len > extent) {
    throw RangeError("slice: [" + std::to_string(start) + "," + std::to_string(start + len) +
                     ") out of " + ta.shape_str());
  }
  Tensor out(axis == 0 ? len : ta.rows, axis == 0 ? ta.cols : len);
  for (int i = 0; i < out.rows; ++i)
    for (int j = 0; j < out.cols; ++j)
      out.at(i, j) = axis == 0 ? ta.at(start + i, j) : ta.at(i, start + j);
  auto back = [a, axis, start](Tape& t, int self) {
    if (!t.wants(a)) return;
    const Tensor& g = t.grad_ref(self);
    Tensor& da = t.grad_ref(a);
    for (int i = 0; i < g.rows; ++i)
      for (int j = 0; j < g.cols; ++j) {
        if (axis == 0)
          da.at(start + i, j) += g.at(i, j);
        else
          da.at(i, start + j) += g.at(i, j);
      }
  };
  return push(std::move(out), wants(a), std::move(back), "slice");
}

int Tape::embedding_lookup(int table, const std::vector<int>& ids) {
  check_id(table, "embedding_lookup");
  const Tensor& tt = value(table);
  if (ids.empty()) throw EmptySequence("embedding_lookup: empty id list");
  for (int id : ids) {
    if (id < 0 || id >= tt.rows) {
      throw RangeError("embedding_lookup: id " + std::to_string(id) + " outside table " +
                       tt.shape_str());
    }
  }
  Tensor out(static_cast<int>(ids.size()), tt.cols);
  for (size_t i = 0; i < ids.size(); ++i) {
    std::memcpy(&out.v[i * tt.cols], &tt.v[static_cast<size_t>(ids[i]) * tt.cols],
                static_cast<size_t>(tt.cols) * sizeof(double));
  }
  auto back = [table, ids](Tape& t, int self) {
    if (!t.wants(table)) return;
    const Tensor& g = t.grad_ref(self);
    Tensor& dt = t.grad_ref(table);
    for (size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < g.cols; ++j) dt.at(ids[i], j) += g.at(static_cast<int>(i), j);
  };
  return push(std::move(out), wants(table), std::move(back), "embedding_lookup");
}

int Tape::gather_cols(int a, const std::vector<int>& col_ids) {
  check_id(a, "gather_cols");
  const Tensor& ta = value(a);
  if (static_cast<int>(col_ids.size()) != ta.rows) {
    throw ShapeMismatch("gather_cols: " + std::to_string(col_ids.size()) + " indices vs " +
                        ta.shape_str());
  }
  for (int c : col_ids) {
    if (c < 0 || c >= ta.cols) throw RangeError("gather_cols: column " + std::to_string(c));
  }
  Tensor out(ta.rows, 1);
  for (int i = 0; i < ta.rows; ++i) out.at(i, 0) = ta.at(i, col_ids[i]);
  auto back = [a, col_ids](Tape& t, int self) {
    if (!t.wants(a)) return;
    const Tensor& g = t.grad_ref(self);
    Tensor& da = t.grad_ref(a);
    for (int i = 0; i < g.rows; ++i) da.at(i, col_ids[i]) += g.at(i, 0);
  };
  return push(std::move(out), wants(a), std::move(back), "gather_cols");
}

int Tape::softmax(int a) {
  check_id(a, "softmax");
  const Tensor& ta = value(a);
  Tensor out(ta.rows, ta.cols);
  for (int i = 0; i < ta.rows; ++i) {
    double mx = ta.at(i, 0);
    for (int j = 1; j < ta.cols; ++j) mx = std::max(mx, ta.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < ta.cols; ++j) {
      out.at(i, j) = std::exp(ta.at(i, j) - mx);
      sum += out.at(i, j);
    }
    for (int j = 0; j < ta.cols; ++j) out.at(i, j) /= sum;
  }
  auto back = [a](Tape& t, int self) {
    if (!t.wants(a)) return;
    const Tensor& g = t.grad_ref(self);
    const Tensor& y = t.value(self);
    Tensor& da = t.grad_ref(a);
    for (int i = 0; i < g.rows; ++i) {
      double dot = 0.0;
      for (int j = 0; j < g.cols; ++j) dot += g.at(i, j) * y.at(i, j);
      for (int j = 0; j < g.cols; ++j) da.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
    }
  };
  return push(std::move(out), wants(a), std::move(back), "softmax");
}

int Tape::log_softmax(int a) {
  check_id(a, "log_softmax");
  const Tensor& ta = value(a);
  Tensor out(ta.rows, ta.cols);
  for (int i = 0; i < ta.rows; ++i) {
    double mx = ta.at(i, 0);
    for (int j = 1; j < ta.cols; ++j) mx = std::max(mx, ta.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < ta.cols; ++j) sum += std::exp(ta.at(i, j) - mx);
    const double lse = mx + std::log(sum);
    for (int j = 0; j < ta.cols; ++j) out.at(i, j) = ta.at(i, j) - lse;
  }
  auto back = [a](Tape& t, int self) {
    if (!t.wants(a)) return;
    const Tensor& g = t.grad_ref(self);
    const Tensor& y = t.value(self);
    Tensor& da = t.grad_ref(a);
    for (int i = 0; i < g.rows; ++i) {
      double total = 0.0;
      for (int j = 0; j < g.cols; ++j) total += g.at(i, j);
      for (int j = 0; j < g.cols; ++j) da.at(i, j) += g.at(i, j) - std::exp(y.at(i, j)) * total;
    }
  };
  return push(std::move(out), wants(a), std::move(back), "log_softmax");
}

int Tape::log(int a) {
  check_id(a, "log");
  Tensor out = value(a);
  for (double& x : out.v) x = std::log(x);
  auto back = [a](Tape& t, int self) {
    if (!t.wants(a)) return;
    const Tensor& g = t.grad_ref(self);
    const Tensor& va = t.value(a);
    Tensor& da = t.grad_ref(a);
    for (size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i] / va.v[i];
  };
  return push(std::move(out), wants(a), std::move(back), "log");
}

int Tape::clip(int a, double lo, double hi) {
  check_id(a, "clip");
  if (!(lo < hi)) throw RangeError("clip: lo must be < hi");
  Tensor out = value(a);
  for (double& x : out.v) x = std::clamp(x, lo, hi);
  auto back = [a, lo, hi](Tape& t, int self) {
    if (!t.wants(a)) return;
    const Tensor& g = t.grad_ref(self);
    const Tensor& va = t.value(a);
    Tensor& da = t.grad_ref(a);
    for (size_t i = 0; i < g.v.size(); ++i) {
      if (va.v[i] > lo && va.v[i] < hi) da.v[i] += g.v[i];
    }
  };
  return push(std::move(out), wants(a), std::move(back), "clip");
}

int Tape::sigmoid(int a) {
  check_id(a, "sigmoid");
  Tensor out = value(a);
  for (double& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
  auto back = [a](Tape& t, int self) {
    if (!t.wants(a)) return;
    const Tensor& g = t.grad_ref(self);
    const Tensor& y = t.value(self);
    Tensor& da = t.grad_ref(a);
    for (size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i] * y.v[i] * (1.0 - y.v[i]);
  };
  return push(std::move(out), wants(a), std::move(back), "sigmoid");
}

int Tape::tanh(int a) {
  check_id(a, "tanh");
  Tensor out = value(a);
  for (double& x : out.v) x = std::tanh(x);
  auto back = [a](Tape& t, int self) {
    if (!t.wants(a)) return;
    const Tensor& g = t.grad_ref(self);
    const Tensor& y = t.value(self);
    Tensor& da = t.grad_ref(a);
    for (size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i] * (1.0 - y.v[i] * y.v[i]);
  };
  return push(std::move(out), wants(a), std::move(back), "tanh");
}

int Tape::layer_norm(int a, double eps) {
  check_id(a, "layer_norm");
  const Tensor& ta = value(a);
  Tensor out(ta.rows, ta.cols);
  std::vector<double> inv(static_cast<size_t>(ta.rows));
  const double n = static_cast<double>(ta.cols);
  for (int i = 0; i < ta.rows; ++i) {
    double mean = 0.0;
    for (int j = 0; j < ta.cols; ++j) mean += ta.at(i, j);
    mean /= n;
    double var = 0.0;
    for (int j = 0; j < ta.cols; ++j) {
      const double d = ta.at(i, j) - mean;
      var += d * d;
    }
    var /= n;
    inv[static_cast<size_t>(i)] = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < ta.cols; ++j)
      out.at(i, j) = (ta.at(i, j) - mean) * inv[static_cast<size_t>(i)];
  }
  auto back = [a, inv](Tape& t, int self) {
    if (!t.wants(a)) return;
    const Tensor& g = t.grad_ref(self);
    const Tensor& y = t.value(self);
    Tensor& da = t.grad_ref(a);
    const double n = static_cast<double>(g.cols);
    for (int i = 0; i < g.rows; ++i) {
      double gsum = 0.0, gysum = 0.0;
      for (int j = 0; j < g.cols; ++j) {
        gsum += g.at(i, j);
        gysum += g.at(i, j) * y.at(i, j);
      }
      for (int j = 0; j < g.cols; ++j) {
        da.at(i, j) += inv[static_cast<size_t>(i)] *
                       (g.at(i, j) - gsum / n - y.at(i, j) * gysum / n);
      }
    }
  };
  return push(std::move(out), wants(a), std::move(back), "layer_norm");
}

int Tape::sum(int a, int axis) {
  check_id(a, "sum");
  if (axis != 0 && axis != 1) throw Error("sum: axis must be 0 or 1");
  const Tensor& ta = value(a);
  Tensor out(axis == 0 ? 1 : ta.rows, axis == 0 ? ta.cols : 1);
  for (int i = 0; i < ta.rows; ++i)
    for (int j = 0; j < ta.cols; ++j) {
      if (axis == 0)
        out.at(0, j) += ta.at(i, j);
      else
        out.at(i, 0) += ta.at(i, j);
    }
  auto back = [a, axis](Tape& t, int self) {
    if (!t.wants(a)) return;
    const Tensor& g = t.grad_ref(self);
    Tensor& da = t.grad_ref(a);
    for (int i = 0; i < da.rows; ++i)
      for (int j = 0; j < da.cols; ++j) da.at(i, j) += axis == 0 ? g.at(0, j) : g.at(i, 0);
  };
  return push(std::move(out), wants(a), std::move(back), "sum");
}

int Tape::mean(int a, int axis) {
  check_id(a, "mean");
  const Tensor& ta = value(a);
  const double denom = axis == 0 ? ta.rows : ta.cols;
  return scale(sum(a, axis), 1.0 / denom);
}

int Tape::sum_all(int a) {
  check_id(a, "sum_all");
  const Tensor& ta = value(a);
  double total = 0.0;
  for (double x : ta.v) total += x;
  auto back = [a](Tape& t, int self) {
    if (!t.wants(a)) return;
    const double g = t.grad_ref(self).v[0];
    Tensor& da = t.grad_ref(a);
    for (double& x : da.v) x += g;
  };
  return push(Tensor::scalar(total), wants(a), std::move(back), "sum_all");
}

int Tape::mean_all(int a) {
  check_id(a, "mean_all");
  const int n = value(a).numel();
  return scale(sum_all(a), 1.0 / n);
}

const Tensor& Tape::grad(int id) const {
  check_id(id, "grad");
  if (!swept_ || grads_[static_cast<size_t>(id)].numel() == 0) {
    throw Error("no gradient recorded for node " + std::to_string(id));
  }
  return grads_[static_cast<size_t>(id)];
}

void Tape::backward(int loss_id) {
  check_id(loss_id, "backward");
  if (nodes_.empty()) throw Error("backward on empty tape");
  if (swept_) throw Error("backward already run; clear the tape first");
  const Tensor& loss = value(loss_id);
  if (loss.numel() != 1) {
    throw NonScalarLoss("backward needs a scalar loss, got " + loss.shape_str());
  }
  swept_ = true;
  grads_.assign(nodes_.size(), Tensor());
  if (!nodes_[static_cast<size_t>(loss_id)].needs_grad) return;  // no parameters reachable
  for (int i = 0; i <= loss_id; ++i) {
    const Node& n = nodes_[static_cast<size_t>(i)];
    if (n.needs_grad) grads_[static_cast<size_t>(i)] = Tensor(n.value.rows, n.value.cols);
  }
  grads_[static_cast<size_t>(loss_id)].v[0] = 1.0;
  for (int i = loss_id; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.back) n.back(*this, i);
  }
  for (int i = 0; i <= loss_id; ++i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.param) add_into(n.param->grad, grads_[static_cast<size_t>(i)]);
  }
}

void Tape::clear() {
  nodes_.clear();
  grads_.clear();
  leaf_cache_.clear();
  swept_ = false;
}

void SgdOptimizer::step(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) {
    if (p->frozen) continue;
    for (size_t i = 0; i < p->value.v.size(); ++i) p->value.v[i] -= lr * p->grad.v[i];
  }
}

void AdamOptimizer::step(const std::vector<Parameter*>& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (Parameter* p : params) {
    if (p->frozen) continue;
    auto& m = m_[p->name];
    auto& v = v_[p->name];
    if (m.empty()) {
      m.assign(p->value.v.size(), 0.0);
      v.assign(p->value.v.size(), 0.0);
    }
    if (m.size() != p->value.v.size()) {
      throw ShapeMismatch("adam state size changed for parameter " + p->name);
    }
    for (size_t i = 0; i < p->value.v.size(); ++i) {
      const double g = p->grad.v[i];
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p->value.v[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

void zero_grads(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->zero_grad();
}

}  // namespace molgen
