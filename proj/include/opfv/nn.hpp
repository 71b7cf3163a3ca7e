#pragma once
// Feedforward ReLU proxy mapping demand to dispatch. The output clip
// min(max(z, pmin), pmax) is materialized as two extra ReLU layers so that
// training, bound propagation and the MILP encoding all see one layer list.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "opfv/dataset.hpp"

namespace opfv::nn {

struct ShapeMismatch : std::runtime_error {
  explicit ShapeMismatch(const std::string& what) : std::runtime_error(what) {}
};
struct EmptyBatch : std::runtime_error {
  explicit EmptyBatch(const std::string& what) : std::runtime_error(what) {}
};
struct EmptySplit : std::runtime_error {
  explicit EmptySplit(const std::string& what) : std::runtime_error(what) {}
};

struct AffineLayer {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
};

struct MlpModel {
  int input_dim = 0;
  std::vector<int> hidden;
  int output_dim = 0;
  Eigen::VectorXd clip_lo, clip_hi;      // generator limits
  std::vector<AffineLayer> layers;       // hidden affines + output affine
  uint64_t seed = 0;
  nlohmann::json train_meta;

  void check_shapes() const;  // throws ShapeMismatch
};

// Glorot-uniform initialization.
MlpModel init_model(int input_dim, const std::vector<int>& hidden,
                    const Eigen::VectorXd& clip_lo, const Eigen::VectorXd& clip_hi,
                    uint64_t seed);

// Flattened view: ReLU after every stage, then one final affine map.
// Stages 0..K-1 are the hidden layers; stage K folds the output affine with
// the lower clip; stage K+1 is the upper clip.
struct ReluNetwork {
  std::vector<AffineLayer> stages;
  AffineLayer out;
  int input_dim = 0;
  int output_dim = 0;
  int trainable_stages = 0;  // stages whose parameters came from the model

  int num_layers() const { return static_cast<int>(stages.size()); }
  int width(int k) const { return static_cast<int>(stages[k].b.size()); }
};

ReluNetwork flatten(const MlpModel& model);
// Writes stage parameters back into the model (inverse of flatten for the
// trainable part).
void unflatten_into(const ReluNetwork& net, MlpModel& model);

struct ForwardTrace {
  std::vector<Eigen::VectorXd> pre;   // per stage
  std::vector<Eigen::VectorXd> post;  // relu(pre)
  Eigen::VectorXd output;
};

Eigen::VectorXd forward(const ReluNetwork& net, const Eigen::VectorXd& x,
                        ForwardTrace* trace = nullptr);
Eigen::VectorXd forward(const MlpModel& model, const Eigen::VectorXd& x,
                        ForwardTrace* trace = nullptr);

// Mean over samples of the L1 prediction error.
double loss_l0(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& labels);

struct Gradients {
  std::vector<AffineLayer> stages;  // aligned with net.stages, trainable only
};

// Batched forward + backprop of the L1 loss; columns are samples.
// Subgradient convention: ReLU'(0) = 0 and d|0| = 0.
double backward(const ReluNetwork& net, const Eigen::MatrixXd& inputs,
                const Eigen::MatrixXd& labels, Gradients& grads);

// Gradient of cotangent'output with respect to the input at x.
Eigen::VectorXd input_gradient(const ReluNetwork& net, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& output_cotangent);

struct TrainConfig {
  double learning_rate = 0.001;
  double lr_decay = 1.0;  // multiplicative per-epoch factor
  int batch_size = 32;
  int max_epochs = 500;
  int patience = 20;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  uint64_t seed = 0;
};

struct AdamState {
  std::vector<AffineLayer> m, v;  // first/second moments per stage
  long t = 0;
};

AdamState init_adam(const ReluNetwork& net);
void adam_step(ReluNetwork& net, const Gradients& grads, AdamState& state,
               const TrainConfig& cfg);

struct TrainHistory {
  std::vector<double> train_loss, val_loss;
  int best_epoch = 0;
};

TrainHistory train(MlpModel& model, const data::Dataset& dataset, const TrainConfig& cfg);

void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace opfv::nn
