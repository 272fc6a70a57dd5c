#include "vtrackit/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "json.hpp"

namespace vtrackit::autodiff {

namespace {

thread_local int g_no_grad_depth = 0;

NodePtr make_node(Mat value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return n;
}

bool any_requires_grad(std::initializer_list<const Var*> vars) {
  for (const Var* v : vars) {
    if (v->requires_grad()) return true;
  }
  return false;
}

// Wires up a unary/binary op node. When grads are disabled or no input needs
// them, the closure is dropped and the node is a plain value.
Var wire(Mat value, std::initializer_list<const Var*> inputs,
         std::function<void(Node&)> backward) {
  auto n = make_node(std::move(value));
  if (grad_enabled() && any_requires_grad(inputs)) {
    n->requires_grad = true;
    for (const Var* v : inputs) n->parents.push_back(v->node());
    n->backward = std::move(backward);
  }
  return Var(n);
}

void accum(const NodePtr& p, const Mat& g) {
  p->ensure_grad();
  p->grad += g;
}

}  // namespace

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }
bool grad_enabled() { return g_no_grad_depth == 0; }

void check_finite(const Mat& m, const char* where) {
  if (!m.allFinite()) throw NonFinite(std::string("non-finite values in ") + where);
}

Var constant(Mat value) { return Var(make_node(std::move(value))); }

Var parameter(Mat value) {
  auto n = make_node(std::move(value));
  n->requires_grad = true;
  return Var(n);
}

Var matmul(const Var& a, const Var& b) {
  Mat out = a.value() * b.value();
  auto an = a.node();
  auto bn = b.node();
  return wire(std::move(out), {&a, &b}, [an, bn](Node& self) {
    if (an->requires_grad) accum(an, self.grad * bn->value.transpose());
    if (bn->requires_grad) accum(bn, an->value.transpose() * self.grad);
  });
}

Var add(const Var& a, const Var& b) {
  auto an = a.node();
  auto bn = b.node();
  return wire(a.value() + b.value(), {&a, &b}, [an, bn](Node& self) {
    if (an->requires_grad) accum(an, self.grad);
    if (bn->requires_grad) accum(bn, self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  auto an = a.node();
  auto bn = b.node();
  return wire(a.value() - b.value(), {&a, &b}, [an, bn](Node& self) {
    if (an->requires_grad) accum(an, self.grad);
    if (bn->requires_grad) accum(bn, -self.grad);
  });
}

Var cmul(const Var& a, const Var& b) {
  auto an = a.node();
  auto bn = b.node();
  return wire(a.value().cwiseProduct(b.value()), {&a, &b}, [an, bn](Node& self) {
    if (an->requires_grad) accum(an, self.grad.cwiseProduct(bn->value));
    if (bn->requires_grad) accum(bn, self.grad.cwiseProduct(an->value));
  });
}

Var add_bias(const Var& a, const Var& bias) {
  Mat out = a.value().colwise() + Eigen::VectorXd(bias.value().col(0));
  auto an = a.node();
  auto bn = bias.node();
  return wire(std::move(out), {&a, &bias}, [an, bn](Node& self) {
    if (an->requires_grad) accum(an, self.grad);
    if (bn->requires_grad) accum(bn, self.grad.rowwise().sum());
  });
}

Var scale(const Var& a, double s) {
  auto an = a.node();
  return wire(a.value() * s, {&a}, [an, s](Node& self) {
    if (an->requires_grad) accum(an, self.grad * s);
  });
}

Var add_scalar(const Var& a, double s) {
  auto an = a.node();
  return wire(a.value().array() + s, {&a}, [an](Node& self) {
    if (an->requires_grad) accum(an, self.grad);
  });
}

Var relu(const Var& a) {
  Mat out = a.value().cwiseMax(0.0);
  auto an = a.node();
  return wire(std::move(out), {&a}, [an](Node& self) {
    if (an->requires_grad) {
      Mat mask = (an->value.array() > 0.0).cast<double>();
      accum(an, self.grad.cwiseProduct(mask));
    }
  });
}

Var sigmoid(const Var& a) {
  Mat out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  auto an = a.node();
  auto on = out;  // copy for the closure
  return wire(std::move(out), {&a}, [an, on](Node& self) {
    if (an->requires_grad) {
      Mat d = on.array() * (1.0 - on.array());
      accum(an, self.grad.cwiseProduct(d));
    }
  });
}

Var tanh_op(const Var& a) {
  Mat out = a.value().array().tanh().matrix();
  auto an = a.node();
  auto on = out;
  return wire(std::move(out), {&a}, [an, on](Node& self) {
    if (an->requires_grad) {
      Mat d = 1.0 - on.array().square();
      accum(an, self.grad.cwiseProduct(d));
    }
  });
}

Var concat_rows(const Var& a, const Var& b) {
  const int ra = static_cast<int>(a.value().rows());
  const int rb = static_cast<int>(b.value().rows());
  Mat out(ra + rb, a.value().cols());
  out.topRows(ra) = a.value();
  out.bottomRows(rb) = b.value();
  auto an = a.node();
  auto bn = b.node();
  return wire(std::move(out), {&a, &b}, [an, bn, ra, rb](Node& self) {
    if (an->requires_grad) accum(an, self.grad.topRows(ra));
    if (bn->requires_grad) accum(bn, self.grad.bottomRows(rb));
  });
}

Var slice_rows(const Var& a, int row0, int nrows) {
  Mat out = a.value().middleRows(row0, nrows);
  auto an = a.node();
  return wire(std::move(out), {&a}, [an, row0, nrows](Node& self) {
    if (an->requires_grad) {
      Mat g = Mat::Zero(an->value.rows(), an->value.cols());
      g.middleRows(row0, nrows) = self.grad;
      accum(an, g);
    }
  });
}

Var sum_all(const Var& a) {
  Mat out(1, 1);
  out(0, 0) = a.value().sum();
  auto an = a.node();
  return wire(std::move(out), {&a}, [an](Node& self) {
    if (an->requires_grad)
      accum(an, Mat::Constant(an->value.rows(), an->value.cols(), self.grad(0, 0)));
  });
}

Var mean_all(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum_all(a), 1.0 / n);
}

Var mse(const Var& pred, const Var& target) {
  Var d = sub(pred, target);
  return mean_all(cmul(d, d));
}

Var sq_norm_cols(const Var& a) {
  Mat out = a.value().array().square().colwise().sum();
  auto an = a.node();
  return wire(std::move(out), {&a}, [an](Node& self) {
    if (an->requires_grad) {
      Mat g = 2.0 * an->value;
      for (int c = 0; c < g.cols(); ++c) g.col(c) *= self.grad(0, c);
      accum(an, g);
    }
  });
}

Var l1_norm_cols(const Var& a) {
  Mat out = a.value().array().abs().colwise().sum();
  auto an = a.node();
  return wire(std::move(out), {&a}, [an](Node& self) {
    if (an->requires_grad) {
      Mat g = an->value.array().sign();
      for (int c = 0; c < g.cols(); ++c) g.col(c) *= self.grad(0, c);
      accum(an, g);
    }
  });
}

Var reciprocal(const Var& a) {
  Mat out = a.value().array().inverse();
  auto an = a.node();
  auto on = out;
  return wire(std::move(out), {&a}, [an, on](Node& self) {
    if (an->requires_grad) {
      Mat d = -on.array().square();
      accum(an, self.grad.cwiseProduct(d));
    }
  });
}

Var bce_with_logits(const Var& logits, const Var& targets) {
  // softplus(l) - t*l, stable for both signs of l
  const auto& l = logits.value().array();
  const auto& t = targets.value().array();
  Mat loss = (l.max(0.0) - l * t + (1.0 + (-l.abs()).exp()).log()).matrix();
  Mat out(1, 1);
  out(0, 0) = loss.sum() / static_cast<double>(loss.size());
  auto ln = logits.node();
  auto tn = targets.node();
  const double inv_n = 1.0 / static_cast<double>(loss.size());
  return wire(std::move(out), {&logits, &targets}, [ln, tn, inv_n](Node& self) {
    if (ln->requires_grad) {
      Mat sig = (1.0 / (1.0 + (-ln->value.array()).exp())).matrix();
      Mat g = (sig - tn->value) * (self.grad(0, 0) * inv_n);
      accum(ln, g);
    }
  });
}

void backward(const Var& loss) {
  if (loss.value().size() != 1)
    throw std::invalid_argument("backward expects a scalar loss");
  if (!loss.node()->requires_grad) return;

  // Post-order DFS to get a reverse topological order.
  std::vector<NodePtr> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<NodePtr, std::size_t>> stack;
  stack.emplace_back(loss.node(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      NodePtr next = node->parents[idx++];
      if (next->requires_grad && visited.insert(next.get()).second)
        stack.emplace_back(next, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->ensure_grad();
  loss.node()->grad(0, 0) = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node& n = **it;
    if (n.backward) {
      n.ensure_grad();
      n.backward(n);
    }
  }
}

double fan_in_bound(int fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

Var ParamStore::create(const std::string& name, int rows, int cols,
                       double init_bound, Rng& rng) {
  Mat m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = rng.uniform(-init_bound, init_bound);
  Var v = parameter(std::move(m));
  params_[name] = v;
  return v;
}

Var ParamStore::create_zeros(const std::string& name, int rows, int cols) {
  Var v = parameter(Mat::Zero(rows, cols));
  params_[name] = v;
  return v;
}

Var ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end())
    throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

void ParamStore::zero_grads() {
  for (auto& [name, v] : params_) {
    (void)name;
    v.node()->grad.setZero();
    if (v.node()->grad.size() == 0) v.node()->ensure_grad();
  }
}

namespace {

void tensors_to_json(const std::map<std::string, Var>& params, nlohmann::json& jt) {
  for (const auto& [name, var] : params) {
    const Mat& m = var.value();
    nlohmann::json entry;
    entry["rows"] = m.rows();
    entry["cols"] = m.cols();
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (int c = 0; c < m.cols(); ++c)
      for (int r = 0; r < m.rows(); ++r) data.push_back(m(r, c));
    entry["data"] = data;
    jt[name] = entry;
  }
}

Mat tensor_from_json(const nlohmann::json& entry, const std::string& name) {
  const int rows = entry.at("rows").get<int>();
  const int cols = entry.at("cols").get<int>();
  const auto data = entry.at("data").get<std::vector<double>>();
  if (static_cast<int>(data.size()) != rows * cols)
    throw std::runtime_error("bad tensor size for " + name);
  Mat m(rows, cols);
  std::size_t i = 0;
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = data[i++];
  return m;
}

nlohmann::json checkpoint_shell(const std::map<std::string, std::string>& meta) {
  nlohmann::json j;
  j["format"] = "vtrackit-ckpt-v1";
  nlohmann::json jm = nlohmann::json::object();
  for (const auto& [k, v] : meta) jm[k] = v;
  j["meta"] = jm;
  return j;
}

void write_checkpoint(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump() << "\n";
}

nlohmann::json read_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "vtrackit-ckpt-v1")
    throw std::runtime_error("unsupported checkpoint format in " + path);
  return j;
}

std::map<std::string, std::string> meta_from_json(const nlohmann::json& j) {
  std::map<std::string, std::string> meta;
  if (j.contains("meta")) {
    for (auto& [k, v] : j.at("meta").items()) meta[k] = v.get<std::string>();
  }
  return meta;
}

}  // namespace

void ParamStore::save(const std::string& path,
                      const std::map<std::string, std::string>& meta) const {
  nlohmann::json j = checkpoint_shell(meta);
  nlohmann::json jt = nlohmann::json::object();
  tensors_to_json(params_, jt);
  j["tensors"] = jt;
  write_checkpoint(j, path);
}

std::map<std::string, std::string> ParamStore::load(const std::string& path) {
  nlohmann::json j = read_checkpoint(path);
  for (auto& [name, entry] : j.at("tensors").items()) {
    Mat m = tensor_from_json(entry, name);
    auto it = params_.find(name);
    if (it != params_.end()) {
      it->second.value() = std::move(m);
    } else {
      params_[name] = parameter(std::move(m));
    }
  }
  return meta_from_json(j);
}

void save_stores(const std::vector<const ParamStore*>& stores, const std::string& path,
                 const std::map<std::string, std::string>& meta) {
  nlohmann::json j = checkpoint_shell(meta);
  nlohmann::json jt = nlohmann::json::object();
  for (const ParamStore* s : stores) tensors_to_json(s->params_, jt);
  j["tensors"] = jt;
  write_checkpoint(j, path);
}

std::map<std::string, std::string> load_stores(
    const std::vector<std::pair<std::string, ParamStore*>>& routes,
    const std::string& path) {
  nlohmann::json j = read_checkpoint(path);
  for (auto& [name, entry] : j.at("tensors").items()) {
    ParamStore* target = nullptr;
    for (const auto& [prefix, store] : routes) {
      if (name.rfind(prefix, 0) == 0) {
        target = store;
        break;
      }
    }
    if (!target) throw std::runtime_error("unrouted tensor in checkpoint: " + name);
    Mat m = tensor_from_json(entry, name);
    auto it = target->params_.find(name);
    if (it != target->params_.end()) {
      it->second.value() = std::move(m);
    } else {
      target->params_[name] = parameter(std::move(m));
    }
  }
  return meta_from_json(j);
}

LstmParams LstmParams::create(ParamStore& store, const std::string& prefix,
                              int input_dim, int hidden_dim, Rng& rng) {
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  const double bx = fan_in_bound(input_dim);
  const double bh = fan_in_bound(hidden_dim);
  auto mk = [&](const char* gate, Var LstmParams::*W, Var LstmParams::*U,
                Var LstmParams::*b) {
    p.*W = store.create(prefix + ".W" + gate, hidden_dim, input_dim, bx, rng);
    p.*U = store.create(prefix + ".U" + gate, hidden_dim, hidden_dim, bh, rng);
    p.*b = store.create_zeros(prefix + ".b" + gate, hidden_dim, 1);
  };
  mk("i", &LstmParams::Wi, &LstmParams::Ui, &LstmParams::bi);
  mk("f", &LstmParams::Wf, &LstmParams::Uf, &LstmParams::bf);
  mk("o", &LstmParams::Wo, &LstmParams::Uo, &LstmParams::bo);
  mk("g", &LstmParams::Wg, &LstmParams::Ug, &LstmParams::bg);
  p.bf.node()->value.setConstant(1.0);  // open forget gates at the start
  return p;
}

LstmParams LstmParams::from_store(const ParamStore& store, const std::string& prefix,
                                  int input_dim, int hidden_dim) {
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.Wi = store.get(prefix + ".Wi");
  p.Ui = store.get(prefix + ".Ui");
  p.bi = store.get(prefix + ".bi");
  p.Wf = store.get(prefix + ".Wf");
  p.Uf = store.get(prefix + ".Uf");
  p.bf = store.get(prefix + ".bf");
  p.Wo = store.get(prefix + ".Wo");
  p.Uo = store.get(prefix + ".Uo");
  p.bo = store.get(prefix + ".bo");
  p.Wg = store.get(prefix + ".Wg");
  p.Ug = store.get(prefix + ".Ug");
  p.bg = store.get(prefix + ".bg");
  return p;
}

LstmState lstm_zero_state(const LstmParams& p, int batch) {
  return {constant(Mat::Zero(p.hidden_dim, batch)),
          constant(Mat::Zero(p.hidden_dim, batch))};
}

LstmState lstm_step(const LstmParams& p, const Var& x, const LstmState& prev) {
  if (x.value().rows() != p.input_dim)
    throw std::invalid_argument("lstm_step: input dim mismatch");
  auto gate = [&](const Var& W, const Var& U, const Var& b) {
    return add_bias(add(matmul(W, x), matmul(U, prev.h)), b);
  };
  Var i = sigmoid(gate(p.Wi, p.Ui, p.bi));
  Var f = sigmoid(gate(p.Wf, p.Uf, p.bf));
  Var o = sigmoid(gate(p.Wo, p.Uo, p.bo));
  Var g = tanh_op(gate(p.Wg, p.Ug, p.bg));
  Var c = add(cmul(f, prev.c), cmul(i, g));
  Var h = cmul(o, tanh_op(c));
  check_finite(h.value(), "lstm_step");
  return {h, c};
}

void Adam::step(ParamStore& params) {
  ++step_count_;

  double sq_sum = 0.0;
  for (const auto& [name, var] : params.all()) {
    (void)name;
    if (var.node()->grad.size() > 0) sq_sum += var.node()->grad.squaredNorm();
  }
  const double gnorm = std::sqrt(sq_sum);
  double clip_scale = 1.0;
  if (cfg_.clip_norm > 0.0 && gnorm > cfg_.clip_norm) clip_scale = cfg_.clip_norm / gnorm;

  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));

  for (auto& [name, var] : params.all()) {
    Node& n = *var.node();
    if (n.grad.size() == 0) continue;
    Mat g = n.grad * clip_scale;
    if (!g.allFinite()) throw NonFinite("adam: non-finite gradient for " + name);
    auto& mom = moments_[name];
    if (mom.m.size() == 0) {
      mom.m = Mat::Zero(g.rows(), g.cols());
      mom.v = Mat::Zero(g.rows(), g.cols());
    }
    mom.m = cfg_.beta1 * mom.m + (1.0 - cfg_.beta1) * g;
    mom.v = (cfg_.beta2 * mom.v.array() + (1.0 - cfg_.beta2) * g.array().square()).matrix();
    Mat mhat = mom.m / bc1;
    Mat vhat = mom.v / bc2;
    var.node()->value.array() -= cfg_.lr * mhat.array() / (vhat.array().sqrt() + cfg_.eps);
  }
}

double grad_check(const std::function<Var()>& build_loss,
                  const std::vector<Var>& params, double h) {
  // analytic pass
  for (const Var& p : params) {
    p.node()->ensure_grad();
    p.node()->grad.setZero();
  }
  Var loss = build_loss();
  backward(loss);
  std::vector<Mat> analytic;
  analytic.reserve(params.size());
  for (const Var& p : params) {
    p.node()->ensure_grad();
    analytic.push_back(p.node()->grad);
  }

  double worst = 0.0;
  NoGradGuard ng;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Mat& value = params[pi].node()->value;
    for (int c = 0; c < value.cols(); ++c) {
      for (int r = 0; r < value.rows(); ++r) {
        const double orig = value(r, c);
        value(r, c) = orig + h;
        const double fp = build_loss().scalar();
        value(r, c) = orig - h;
        const double fm = build_loss().scalar();
        value(r, c) = orig;
        const double numeric = (fp - fm) / (2.0 * h);
        const double a = analytic[pi](r, c);
        const double denom = std::max({std::abs(a), std::abs(numeric), 1.0});
        worst = std::max(worst, std::abs(a - numeric) / denom);
      }
    }
  }
  return worst;
}

}  // namespace vtrackit::autodiff
