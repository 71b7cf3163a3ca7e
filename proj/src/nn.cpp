#include "opfv/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "opfv/util.hpp"

namespace opfv::nn {

void MlpModel::check_shapes() const {
  if (layers.empty()) throw ShapeMismatch("model has no layers");
  int prev = input_dim;
  for (size_t k = 0; k < layers.size(); ++k) {
    if (layers[k].W.cols() != prev || layers[k].W.rows() != layers[k].b.size())
      throw ShapeMismatch("layer " + std::to_string(k) + " shape chain broken");
    prev = static_cast<int>(layers[k].W.rows());
  }
  if (prev != output_dim) throw ShapeMismatch("output layer width mismatch");
  if (clip_lo.size() != output_dim || clip_hi.size() != output_dim)
    throw ShapeMismatch("clip limit length mismatch");
  if (!clip_lo.allFinite() || !clip_hi.allFinite())
    throw ShapeMismatch("clip limits must be finite");
}

MlpModel init_model(int input_dim, const std::vector<int>& hidden,
                    const Eigen::VectorXd& clip_lo, const Eigen::VectorXd& clip_hi,
                    uint64_t seed) {
  MlpModel m;
  m.input_dim = input_dim;
  m.hidden = hidden;
  m.output_dim = static_cast<int>(clip_lo.size());
  m.clip_lo = clip_lo;
  m.clip_hi = clip_hi;
  m.seed = seed;
  std::mt19937_64 rng(seed);
  int prev = input_dim;
  std::vector<int> widths = hidden;
  widths.push_back(m.output_dim);
  for (int w : widths) {
    double bound = std::sqrt(6.0 / (prev + w));
    std::uniform_real_distribution<double> dist(-bound, bound);
    AffineLayer layer;
    layer.W.resize(w, prev);
    for (int i = 0; i < w; ++i)
      for (int j = 0; j < prev; ++j) layer.W(i, j) = dist(rng);
    layer.b = Eigen::VectorXd::Zero(w);
    m.layers.push_back(std::move(layer));
    prev = w;
  }
  // Start the output head at the middle of the clip range; a head born in
  // the clip-saturated region never receives a gradient.
  m.layers.back().b = 0.5 * (clip_lo + clip_hi);
  m.check_shapes();
  return m;
}

ReluNetwork flatten(const MlpModel& model) {
  model.check_shapes();
  ReluNetwork net;
  net.input_dim = model.input_dim;
  net.output_dim = model.output_dim;
  int nh = static_cast<int>(model.hidden.size());
  for (int k = 0; k < nh; ++k) net.stages.push_back(model.layers[k]);
  // Lower clip folded into the output affine: zhat = W_out z + (b_out - lo).
  AffineLayer lower{model.layers[nh].W, model.layers[nh].b - model.clip_lo};
  net.stages.push_back(std::move(lower));
  // Upper clip: zhat = (hi - lo) - z.
  int g = model.output_dim;
  AffineLayer upper{-Eigen::MatrixXd::Identity(g, g), model.clip_hi - model.clip_lo};
  net.stages.push_back(std::move(upper));
  // Output: phat = hi - z.
  net.out = {-Eigen::MatrixXd::Identity(g, g), model.clip_hi};
  net.trainable_stages = nh + 1;
  return net;
}

void unflatten_into(const ReluNetwork& net, MlpModel& model) {
  int nh = static_cast<int>(model.hidden.size());
  for (int k = 0; k < nh; ++k) model.layers[k] = net.stages[k];
  model.layers[nh].W = net.stages[nh].W;
  model.layers[nh].b = net.stages[nh].b + model.clip_lo;
}

Eigen::VectorXd forward(const ReluNetwork& net, const Eigen::VectorXd& x,
                        ForwardTrace* trace) {
  if (x.size() != net.input_dim) throw ShapeMismatch("input dimension mismatch");
  if (trace) {
    trace->pre.clear();
    trace->post.clear();
  }
  Eigen::VectorXd z = x;
  for (const auto& s : net.stages) {
    Eigen::VectorXd pre = s.W * z + s.b;
    z = pre.cwiseMax(0.0);
    if (trace) {
      trace->pre.push_back(pre);
      trace->post.push_back(z);
    }
  }
  Eigen::VectorXd y = net.out.W * z + net.out.b;
  if (trace) trace->output = y;
  return y;
}

Eigen::VectorXd forward(const MlpModel& model, const Eigen::VectorXd& x,
                        ForwardTrace* trace) {
  return forward(flatten(model), x, trace);
}

double loss_l0(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& labels) {
  if (predictions.cols() == 0) throw EmptyBatch("loss over empty batch");
  if (predictions.rows() != labels.rows() || predictions.cols() != labels.cols())
    throw ShapeMismatch("prediction/label shape mismatch");
  return (predictions - labels).cwiseAbs().colwise().sum().mean();
}

namespace {
// sign with the kink convention sign(0) = 0
inline double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }
}  // namespace

double backward(const ReluNetwork& net, const Eigen::MatrixXd& inputs,
                const Eigen::MatrixXd& labels, Gradients& grads) {
  int batch = static_cast<int>(inputs.cols());
  if (batch == 0) throw EmptyBatch("backward over empty batch");
  if (inputs.rows() != net.input_dim) throw ShapeMismatch("input dimension mismatch");

  int n_stages = net.num_layers();
  std::vector<Eigen::MatrixXd> pre(n_stages), post(n_stages);
  Eigen::MatrixXd z = inputs;
  for (int k = 0; k < n_stages; ++k) {
    pre[k] = (net.stages[k].W * z).colwise() + net.stages[k].b;
    post[k] = pre[k].cwiseMax(0.0);
    z = post[k];
  }
  Eigen::MatrixXd y = (net.out.W * z).colwise() + net.out.b;
  double loss = loss_l0(y, labels);

  grads.stages.assign(n_stages, AffineLayer{});
  for (int k = 0; k < net.trainable_stages; ++k) {
    grads.stages[k].W = Eigen::MatrixXd::Zero(net.stages[k].W.rows(), net.stages[k].W.cols());
    grads.stages[k].b = Eigen::VectorXd::Zero(net.stages[k].b.size());
  }

  Eigen::MatrixXd g = (y - labels).unaryExpr([](double v) { return sgn(v); }) / batch;
  g = net.out.W.transpose() * g;
  for (int k = n_stages - 1; k >= 0; --k) {
    Eigen::MatrixXd gate =
        pre[k].unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    Eigen::MatrixXd gpre = g.cwiseProduct(gate);
    if (k < net.trainable_stages) {
      const Eigen::MatrixXd& in = (k == 0) ? inputs : post[k - 1];
      grads.stages[k].W = gpre * in.transpose();
      grads.stages[k].b = gpre.rowwise().sum();
    }
    g = net.stages[k].W.transpose() * gpre;
  }
  return loss;
}

Eigen::VectorXd input_gradient(const ReluNetwork& net, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& output_cotangent) {
  ForwardTrace trace;
  forward(net, x, &trace);
  Eigen::VectorXd g = net.out.W.transpose() * output_cotangent;
  for (int k = net.num_layers() - 1; k >= 0; --k) {
    Eigen::VectorXd gate =
        trace.pre[k].unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    g = net.stages[k].W.transpose() * g.cwiseProduct(gate).eval();
  }
  return g;
}

AdamState init_adam(const ReluNetwork& net) {
  AdamState st;
  st.m.resize(net.trainable_stages);
  st.v.resize(net.trainable_stages);
  for (int k = 0; k < net.trainable_stages; ++k) {
    st.m[k].W = Eigen::MatrixXd::Zero(net.stages[k].W.rows(), net.stages[k].W.cols());
    st.m[k].b = Eigen::VectorXd::Zero(net.stages[k].b.size());
    st.v[k] = st.m[k];
  }
  return st;
}

void adam_step(ReluNetwork& net, const Gradients& grads, AdamState& st,
               const TrainConfig& cfg) {
  ++st.t;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    p.array() -= cfg.learning_rate * (m.array() / bc1) /
                 ((v.array() / bc2).sqrt() + cfg.eps);
  };
  for (int k = 0; k < net.trainable_stages; ++k) {
    update(net.stages[k].W, grads.stages[k].W, st.m[k].W, st.v[k].W);
    update(net.stages[k].b, grads.stages[k].b, st.m[k].b, st.v[k].b);
  }
}

TrainHistory train(MlpModel& model, const data::Dataset& dataset, const TrainConfig& cfg) {
  auto train_idx = dataset.split_indices(data::Split::Train);
  auto val_idx = dataset.split_indices(data::Split::Val);
  if (train_idx.empty()) throw EmptySplit("train split is empty");
  if (val_idx.empty()) throw EmptySplit("val split is empty");

  auto gather = [&](const std::vector<int>& idx, Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
    x.resize(model.input_dim, idx.size());
    y.resize(model.output_dim, idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
      x.col(i) = dataset.samples[idx[i]].pd;
      y.col(i) = dataset.samples[idx[i]].pg;
    }
  };
  Eigen::MatrixXd val_x, val_y;
  gather(val_idx, val_x, val_y);

  ReluNetwork net = flatten(model);
  AdamState adam = init_adam(net);
  std::mt19937_64 rng(cfg.seed);
  TrainHistory hist;
  double best_val = std::numeric_limits<double>::infinity();
  ReluNetwork best_net = net;
  int since_best = 0;

  auto eval_loss = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    Eigen::MatrixXd z = x;
    for (const auto& s : net.stages) z = ((s.W * z).colwise() + s.b).cwiseMax(0.0);
    return loss_l0((net.out.W * z).colwise() + net.out.b, y);
  };

  std::vector<int> order = train_idx;
  Gradients grads;
  TrainConfig step_cfg = cfg;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<int> batch_idx(order.begin() + start, order.begin() + stop);
      Eigen::MatrixXd bx, by;
      gather(batch_idx, bx, by);
      epoch_loss += backward(net, bx, by, grads);
      adam_step(net, grads, adam, step_cfg);
      ++batches;
    }
    step_cfg.learning_rate *= cfg.lr_decay;
    hist.train_loss.push_back(epoch_loss / std::max(1, batches));
    double vloss = eval_loss(val_x, val_y);
    hist.val_loss.push_back(vloss);
    if (vloss < best_val - 1e-12) {
      best_val = vloss;
      best_net = net;
      hist.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  unflatten_into(best_net, model);
  return hist;
}

void save_model(const MlpModel& model, const std::string& path) {
  nlohmann::json doc;
  doc["arch"] = {{"input", model.input_dim},
                 {"hidden", model.hidden},
                 {"output", model.output_dim}};
  doc["clip"] = {{"lo", to_std(model.clip_lo)}, {"hi", to_std(model.clip_hi)}};
  doc["layers"] = nlohmann::json::array();
  for (const auto& l : model.layers) {
    nlohmann::json w = nlohmann::json::array();
    for (int i = 0; i < l.W.rows(); ++i) {
      std::vector<double> row(l.W.cols());
      for (int j = 0; j < l.W.cols(); ++j) row[j] = l.W(i, j);
      w.push_back(row);
    }
    doc["layers"].push_back({{"w", w}, {"b", to_std(l.b)}});
  }
  doc["seed"] = model.seed;
  doc["train_meta"] = model.train_meta;
  save_json_file(path, doc);
}

MlpModel load_model(const std::string& path) {
  nlohmann::json doc = load_json_file(path);
  MlpModel m;
  m.input_dim = doc.at("arch").at("input").get<int>();
  m.hidden = doc.at("arch").at("hidden").get<std::vector<int>>();
  m.output_dim = doc.at("arch").at("output").get<int>();
  m.clip_lo = to_eigen(doc.at("clip").at("lo").get<std::vector<double>>());
  m.clip_hi = to_eigen(doc.at("clip").at("hi").get<std::vector<double>>());
  for (const auto& l : doc.at("layers")) {
    AffineLayer layer;
    auto rows = l.at("w").get<std::vector<std::vector<double>>>();
    layer.b = to_eigen(l.at("b").get<std::vector<double>>());
    layer.W.resize(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (size_t i = 0; i < rows.size(); ++i)
      for (size_t j = 0; j < rows[i].size(); ++j) layer.W(i, j) = rows[i][j];
    m.layers.push_back(std::move(layer));
  }
  m.seed = doc.value("seed", 0ULL);
  m.train_meta = doc.value("train_meta", nlohmann::json::object());
  m.check_shapes();
  return m;
}

}  // namespace opfv::nn
