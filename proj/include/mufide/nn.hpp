#pragma once

#include <string>
#include <vector>

#include "mufide/linalg.hpp"
#include "mufide/rng.hpp"

namespace mufide::nn {

enum class Activation { kTanh, kLinear };
enum class Initializer { kUniform, kNormal, kGlorotUniform, kGlorotNormal };
enum class OptimizerKind { kSgd, kAdam, kAdaMax };

std::string to_string(Activation a);
std::string to_string(Initializer i);
std::string to_string(OptimizerKind o);
Activation activation_from_string(const std::string& s);
Initializer initializer_from_string(const std::string& s);
OptimizerKind optimizer_from_string(const std::string& s);

struct LayerSpec {
  int width = 1;
  Activation activation = Activation::kTanh;
};

// Feed-forward architecture: hidden layers followed by a linear output layer
// of output_dim units. hidden may be empty (pure affine map).
struct NetworkSpec {
  int input_dim = 1;
  std::vector<LayerSpec> hidden;
  int output_dim = 1;
  Initializer initializer = Initializer::kGlorotUniform;
};

// One affine layer. w is (out x in), b is (out). Parameters are stored and
// serialized row-major.
struct Dense {
  Matrix w;
  Vector b;
  Activation activation = Activation::kTanh;

  int in_dim() const { return static_cast<int>(w.cols()); }
  int out_dim() const { return static_cast<int>(w.rows()); }
};

class Network {
 public:
  Network() = default;
  Network(int input_dim, std::vector<Dense> layers);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return layers_.empty() ? input_dim_ : layers_.back().out_dim(); }
  const std::vector<Dense>& layers() const { return layers_; }
  std::vector<Dense>& layers() { return layers_; }

  Vector forward(const Vector& x) const;
  // Rows of x are samples; returns (N x output_dim).
  Matrix forward_batch(const Matrix& x) const;

  std::size_t parameter_count() const;

 private:
  int input_dim_ = 0;
  std::vector<Dense> layers_;
};

// Weight initialization. Biases start at zero; weights are drawn layer by
// layer in storage (row-major) order from rng:
//   uniform        U(-0.05, 0.05)
//   normal         N(0, 0.05^2)
//   glorot_uniform U(+-sqrt(6 / (fan_in + fan_out)))
//   glorot_normal  N(0, 2 / (fan_in + fan_out))
// with fan_in = layer input width, fan_out = layer output width.
Network init_network(const NetworkSpec& spec, Rng& rng);
Matrix init_weight(int out_dim, int in_dim, Initializer init, Rng& rng);

// Layer primitives shared with the composite multi-fidelity networks.
// layer_forward returns act(a_prev * w^T + b^T).
Matrix layer_forward(const Dense& layer, const Matrix& a_prev);
// Backward through one layer: da_out is dLoss/dA_out, a_out the activated
// output from the forward pass. Writes parameter gradients (without any
// regularization term) and returns dLoss/dA_prev.
Matrix layer_backward(const Dense& layer, const Matrix& a_prev, const Matrix& a_out,
                      Matrix da_out, Matrix& dw, Vector& db);

struct Gradients {
  std::vector<Matrix> dw;
  std::vector<Vector> db;
};

struct LossGrad {
  double loss = 0.0;  // mse + l2 * sum of squared weights
  double mse = 0.0;
  Gradients grad;
};

// Full-batch loss and gradient of mse(y, f(x)) + l2 * sum_l ||w_l||^2.
// Biases carry no penalty. Row blocks of fixed size are processed as separate
// partial reductions combined in block order, so the result is bitwise
// reproducible for any thread count.
LossGrad loss_and_grad(const Network& net, const Matrix& x, const Matrix& y, double l2);

// Serial per-sample reference of the same quantity, kept for testing the
// blocked path and as the baseline in the kernel benchmark. No batched
// products: plain loops over samples and units.
LossGrad loss_and_grad_reference(const Network& net, const Matrix& x, const Matrix& y,
                                 double l2);

// Update rules. p/g/m/v/u are flat views over one parameter tensor; t is the
// 1-based step count.
void sgd_step(Eigen::Ref<Eigen::ArrayXd> p, const Eigen::Ref<const Eigen::ArrayXd>& g,
              double lr);
void adam_step(Eigen::Ref<Eigen::ArrayXd> p, const Eigen::Ref<const Eigen::ArrayXd>& g,
               Eigen::Ref<Eigen::ArrayXd> m, Eigen::Ref<Eigen::ArrayXd> v, int t, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
// AdaMax: infinity-norm variant; no epsilon, entries with u == 0 are skipped.
void adamax_step(Eigen::Ref<Eigen::ArrayXd> p, const Eigen::Ref<const Eigen::ArrayXd>& g,
                 Eigen::Ref<Eigen::ArrayXd> m, Eigen::Ref<Eigen::ArrayXd> u, int t, double lr,
                 double beta1 = 0.9, double beta2 = 0.999);

// Optimizer state shaped like a network's parameter list.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr, const std::vector<Dense>& shapes);
  void step(std::vector<Dense>& layers, const Gradients& grad);
  int steps_taken() const { return t_; }

 private:
  OptimizerKind kind_;
  double lr_;
  int t_ = 0;
  std::vector<Matrix> mw_, vw_;
  std::vector<Vector> mb_, vb_;
};

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double l2_penalty = 0.0;
  int max_epochs = 20000;
  int patience = 500;       // epochs without min_delta improvement before stop
  double min_delta = 1e-9;
};

struct TrainResult {
  Network network;  // parameters from the best epoch, not the last one
  std::vector<double> history;
  double best_loss = 0.0;
  int best_epoch = -1;
};

// Full-batch training. Loss is recorded before each update; training stops
// early after cfg.patience consecutive epochs without an improvement of at
// least cfg.min_delta over the best loss. Throws DivergedTraining when the
// loss leaves the finite range.
TrainResult train(Network net, const Matrix& x, const Matrix& y, const TrainConfig& cfg);

}  // namespace mufide::nn
