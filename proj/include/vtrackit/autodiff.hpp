#pragma once

#include <Eigen/Core>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "vtrackit/rng.hpp"

// Reverse-mode automatic differentiation on dense double matrices. The graph
// is built dynamically; columns act as the batch dimension so one op covers a
// whole minibatch. Deliberately small: affine layers, pointwise
// nonlinearities, LSTM cells and the few losses the models need.
namespace vtrackit::autodiff {

using Mat = Eigen::MatrixXd;

struct NonFinite : std::runtime_error {
  explicit NonFinite(const std::string& what) : std::runtime_error(what) {}
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Mat value;
  Mat grad;  // sized on first accumulation
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward;  // scatters node.grad into parents

  void ensure_grad() {
    if (grad.size() == 0) grad = Mat::Zero(value.rows(), value.cols());
  }
};

// Value-semantic handle to a graph node.
class Var {
 public:
  Var() = default;
  explicit Var(NodePtr n) : node_(std::move(n)) {}

  bool valid() const { return node_ != nullptr; }
  const Mat& value() const { return node_->value; }
  Mat& value() { return node_->value; }
  const Mat& grad() const { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  NodePtr node() const { return node_; }

  double scalar() const { return node_->value(0, 0); }

 private:
  NodePtr node_;
};

// While a guard is alive, ops do not record backward closures.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};
bool grad_enabled();

Var constant(Mat value);
Var parameter(Mat value);

// ---- ops ----
Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var cmul(const Var& a, const Var& b);  // elementwise
Var add_bias(const Var& a, const Var& bias);  // bias: column, broadcast over cols
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var tanh_op(const Var& a);
Var concat_rows(const Var& a, const Var& b);
Var slice_rows(const Var& a, int row0, int nrows);
Var sum_all(const Var& a);
Var mean_all(const Var& a);
Var mse(const Var& pred, const Var& target);           // mean squared error
Var sq_norm_cols(const Var& a);                        // 1 x B, sum of squares per column
Var l1_norm_cols(const Var& a);                        // 1 x B, sum of |x| per column
Var reciprocal(const Var& a);                          // elementwise 1/x
// -[t*log(sigmoid(l)) + (1-t)*log(1-sigmoid(l))], mean over all entries.
Var bce_with_logits(const Var& logits, const Var& targets);

// Runs backward from a scalar loss, accumulating into parameter grads.
void backward(const Var& loss);

void check_finite(const Mat& m, const char* where);

// ---- parameters ----

// Named parameter set; iteration order is the sorted name order, which keeps
// optimizer updates and checkpoints deterministic.
class ParamStore {
 public:
  Var create(const std::string& name, int rows, int cols, double init_bound,
             Rng& rng);
  Var create_zeros(const std::string& name, int rows, int cols);
  Var get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) > 0; }

  const std::map<std::string, Var>& all() const { return params_; }
  void zero_grads();

  void save(const std::string& path, const std::map<std::string, std::string>& meta = {}) const;
  // Loads tensors into this store (creating entries); returns the meta map.
  std::map<std::string, std::string> load(const std::string& path);

 private:
  friend void save_stores(const std::vector<const ParamStore*>&, const std::string&,
                          const std::map<std::string, std::string>&);
  friend std::map<std::string, std::string> load_stores(
      const std::vector<std::pair<std::string, ParamStore*>>&, const std::string&);

  std::map<std::string, Var> params_;
};

// Multi-store checkpoints: tensors from every store in one file; on load,
// names are routed to the store whose prefix they carry.
void save_stores(const std::vector<const ParamStore*>& stores, const std::string& path,
                 const std::map<std::string, std::string>& meta = {});
std::map<std::string, std::string> load_stores(
    const std::vector<std::pair<std::string, ParamStore*>>& routes,
    const std::string& path);

// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
double fan_in_bound(int fan_in);

// ---- LSTM ----

struct LstmParams {
  int input_dim = 0;
  int hidden_dim = 0;
  Var Wi, Ui, bi;  // input gate
  Var Wf, Uf, bf;  // forget gate
  Var Wo, Uo, bo;  // output gate
  Var Wg, Ug, bg;  // candidate

  static LstmParams create(ParamStore& store, const std::string& prefix,
                           int input_dim, int hidden_dim, Rng& rng);
  static LstmParams from_store(const ParamStore& store, const std::string& prefix,
                               int input_dim, int hidden_dim);
};

struct LstmState {
  Var h;
  Var c;
};

// One LSTM step: standard gate equations, columns are the batch.
LstmState lstm_step(const LstmParams& p, const Var& x, const LstmState& prev);
LstmState lstm_zero_state(const LstmParams& p, int batch);

// ---- Adam ----

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;  // global-norm gradient clip; <= 0 disables
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Applies one update to every parameter in `params` that has a gradient.
  void step(ParamStore& params);
  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }
  std::int64_t steps() const { return step_count_; }

 private:
  struct Moments {
    Mat m;
    Mat v;
  };
  AdamConfig cfg_;
  std::map<std::string, Moments> moments_;
  std::int64_t step_count_ = 0;
};

// ---- finite differences ----

// Central-difference check of d(loss)/d(params). `build_loss` must rebuild
// the graph from the current parameter values. Returns the worst guarded
// relative error max(|a - n|) / max(|a|, |n|, 1).
double grad_check(const std::function<Var()>& build_loss,
                  const std::vector<Var>& params, double h = 1e-5);

}  // namespace vtrackit::autodiff
