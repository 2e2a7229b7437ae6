#include "mufide/nn.hpp"

#include <cmath>
#include <cstddef>
#include <utility>

#include "mufide/errors.hpp"
#include "mufide/parallel.hpp"

namespace mufide::nn {

namespace {

// Row-block size for the partial-reduction gradient path. Fixed so the
// reduction tree depends only on the batch size, never on the thread count.
constexpr Eigen::Index kRowBlock = 512;

double square(double v) { return v * v; }

}  // namespace

std::string to_string(Activation a) {
  return a == Activation::kTanh ? "tanh" : "linear";
}

std::string to_string(Initializer i) {
  switch (i) {
    case Initializer::kUniform: return "uniform";
    case Initializer::kNormal: return "normal";
    case Initializer::kGlorotUniform: return "glorot_uniform";
    case Initializer::kGlorotNormal: return "glorot_normal";
  }
  return "glorot_uniform";
}

std::string to_string(OptimizerKind o) {
  switch (o) {
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kAdam: return "adam";
    case OptimizerKind::kAdaMax: return "adamax";
  }
  return "adam";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "linear") return Activation::kLinear;
  throw ConfigError("unknown activation: " + s);
}

Initializer initializer_from_string(const std::string& s) {
  if (s == "uniform") return Initializer::kUniform;
  if (s == "normal") return Initializer::kNormal;
  if (s == "glorot_uniform") return Initializer::kGlorotUniform;
  if (s == "glorot_normal") return Initializer::kGlorotNormal;
  throw ConfigError("unknown initializer: " + s);
}

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam") return OptimizerKind::kAdam;
  if (s == "adamax") return OptimizerKind::kAdaMax;
  throw ConfigError("unknown optimizer: " + s);
}

Network::Network(int input_dim, std::vector<Dense> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
  int prev = input_dim_;
  for (const Dense& l : layers_) {
    if (l.in_dim() != prev)
      throw DimensionMismatch("Network: layer expects " + std::to_string(l.in_dim()) +
                              " inputs, previous width is " + std::to_string(prev));
    if (l.b.size() != l.out_dim())
      throw DimensionMismatch("Network: bias width does not match layer output");
    prev = l.out_dim();
  }
}

Vector Network::forward(const Vector& x) const {
  Matrix row(1, x.size());
  row.row(0) = x.transpose();
  return forward_batch(row).row(0).transpose();
}

Matrix Network::forward_batch(const Matrix& x) const {
  if (x.cols() != input_dim_)
    throw DimensionMismatch("forward: input has " + std::to_string(x.cols()) +
                            " columns, network expects " + std::to_string(input_dim_));
  Matrix a = x;
  for (const Dense& l : layers_) a = layer_forward(l, a);
  return a;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const Dense& l : layers_) n += static_cast<std::size_t>(l.w.size() + l.b.size());
  return n;
}

Matrix init_weight(int out_dim, int in_dim, Initializer init, Rng& rng) {
  Matrix w(out_dim, in_dim);
  const double fan_sum = static_cast<double>(in_dim + out_dim);
  double* data = w.data();  // row-major contiguous
  const Eigen::Index n = w.size();
  switch (init) {
    case Initializer::kUniform:
      for (Eigen::Index i = 0; i < n; ++i) data[i] = rng.uniform(-0.05, 0.05);
      break;
    case Initializer::kNormal:
      for (Eigen::Index i = 0; i < n; ++i) data[i] = rng.normal(0.0, 0.05);
      break;
    case Initializer::kGlorotUniform: {
      const double limit = std::sqrt(6.0 / fan_sum);
      for (Eigen::Index i = 0; i < n; ++i) data[i] = rng.uniform(-limit, limit);
      break;
    }
    case Initializer::kGlorotNormal: {
      const double stddev = std::sqrt(2.0 / fan_sum);
      for (Eigen::Index i = 0; i < n; ++i) data[i] = rng.normal(0.0, stddev);
      break;
    }
  }
  return w;
}

Network init_network(const NetworkSpec& spec, Rng& rng) {
  if (spec.input_dim < 1 || spec.output_dim < 1)
    throw ConfigError("init_network: input_dim and output_dim must be >= 1");
  std::vector<Dense> layers;
  int prev = spec.input_dim;
  for (const LayerSpec& h : spec.hidden) {
    if (h.width < 1) throw ConfigError("init_network: hidden width must be >= 1");
    Dense l;
    l.w = init_weight(h.width, prev, spec.initializer, rng);
    l.b = Vector::Zero(h.width);
    l.activation = h.activation;
    layers.push_back(std::move(l));
    prev = h.width;
  }
  Dense out;
  out.w = init_weight(spec.output_dim, prev, spec.initializer, rng);
  out.b = Vector::Zero(spec.output_dim);
  out.activation = Activation::kLinear;
  layers.push_back(std::move(out));
  return Network(spec.input_dim, std::move(layers));
}

Matrix layer_forward(const Dense& layer, const Matrix& a_prev) {
  Matrix z(a_prev.rows(), layer.out_dim());
  z.noalias() = a_prev * layer.w.transpose();
  z.rowwise() += layer.b.transpose();
  if (layer.activation == Activation::kTanh) z = z.array().tanh();
  return z;
}

Matrix layer_backward(const Dense& layer, const Matrix& a_prev, const Matrix& a_out,
                      Matrix da_out, Matrix& dw, Vector& db) {
  Matrix dz = std::move(da_out);
  if (layer.activation == Activation::kTanh)
    dz.array() *= 1.0 - a_out.array().square();
  dw.noalias() = dz.transpose() * a_prev;
  db = dz.colwise().sum().transpose();
  Matrix da_prev(dz.rows(), layer.in_dim());
  da_prev.noalias() = dz * layer.w;
  return da_prev;
}

namespace {

Gradients zero_gradients(const std::vector<Dense>& layers) {
  Gradients g;
  g.dw.reserve(layers.size());
  g.db.reserve(layers.size());
  for (const Dense& l : layers) {
    g.dw.push_back(Matrix::Zero(l.out_dim(), l.in_dim()));
    g.db.push_back(Vector::Zero(l.out_dim()));
  }
  return g;
}

// Loss/grad contribution of one contiguous row block, scaled by the global
// sample count n_total.
void block_loss_grad(const Network& net, const Matrix& x, const Matrix& y,
                     Eigen::Index row0, Eigen::Index rows, Eigen::Index n_total,
                     Gradients& out, double& sse) {
  const auto& layers = net.layers();
  const Eigen::Index nl = static_cast<Eigen::Index>(layers.size());

  std::vector<Matrix> acts(static_cast<std::size_t>(nl) + 1);
  acts[0] = x.middleRows(row0, rows);
  for (Eigen::Index l = 0; l < nl; ++l)
    acts[l + 1] = layer_forward(layers[l], acts[l]);

  const Matrix resid = acts.back() - y.middleRows(row0, rows);
  sse = resid.squaredNorm();

  Matrix da = (2.0 / static_cast<double>(n_total)) * resid;
  for (Eigen::Index l = nl - 1; l >= 0; --l)
    da = layer_backward(layers[l], acts[l], acts[l + 1], std::move(da), out.dw[l],
                        out.db[l]);
}

}  // namespace

LossGrad loss_and_grad(const Network& net, const Matrix& x, const Matrix& y, double l2) {
  if (x.rows() == 0) throw EmptyData("loss_and_grad: empty batch");
  if (x.rows() != y.rows())
    throw DimensionMismatch("loss_and_grad: batch size mismatch between inputs and targets");
  if (y.cols() != net.output_dim())
    throw DimensionMismatch("loss_and_grad: target width does not match network output");

  const Eigen::Index n = x.rows();
  const Eigen::Index blocks = (n + kRowBlock - 1) / kRowBlock;

  std::vector<Gradients> partial(static_cast<std::size_t>(blocks));
  std::vector<double> sse(static_cast<std::size_t>(blocks), 0.0);

  par::parallel_for(blocks, [&](std::int64_t bi) {
    const Eigen::Index row0 = static_cast<Eigen::Index>(bi) * kRowBlock;
    const Eigen::Index rows = std::min<Eigen::Index>(kRowBlock, n - row0);
    auto& g = partial[static_cast<std::size_t>(bi)];
    g = zero_gradients(net.layers());
    block_loss_grad(net, x, y, row0, rows, n, g, sse[static_cast<std::size_t>(bi)]);
  });

  LossGrad result;
  result.grad = std::move(partial[0]);
  double total_sse = sse[0];
  for (Eigen::Index bi = 1; bi < blocks; ++bi) {
    auto& g = partial[static_cast<std::size_t>(bi)];
    for (std::size_t l = 0; l < result.grad.dw.size(); ++l) {
      result.grad.dw[l] += g.dw[l];
      result.grad.db[l] += g.db[l];
    }
    total_sse += sse[static_cast<std::size_t>(bi)];
  }

  result.mse = total_sse / static_cast<double>(n);
  double reg = 0.0;
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (l2 != 0.0) {
      reg += l2 * layers[l].w.squaredNorm();
      result.grad.dw[l] += 2.0 * l2 * layers[l].w;
    }
  }
  result.loss = result.mse + reg;
  return result;
}

LossGrad loss_and_grad_reference(const Network& net, const Matrix& x, const Matrix& y,
                                 double l2) {
  if (x.rows() == 0) throw EmptyData("loss_and_grad_reference: empty batch");
  const auto& layers = net.layers();
  const std::size_t nl = layers.size();
  const Eigen::Index n = x.rows();

  LossGrad result;
  result.grad = zero_gradients(layers);

  // Per-sample activations and deltas, plain loops throughout.
  std::vector<std::vector<double>> act(nl + 1);
  std::vector<std::vector<double>> delta(nl + 1);
  double total_sse = 0.0;

  for (Eigen::Index s = 0; s < n; ++s) {
    act[0].assign(x.row(s).begin(), x.row(s).end());
    for (std::size_t l = 0; l < nl; ++l) {
      const Dense& lay = layers[l];
      act[l + 1].assign(static_cast<std::size_t>(lay.out_dim()), 0.0);
      for (int r = 0; r < lay.out_dim(); ++r) {
        double z = lay.b[r];
        for (int c = 0; c < lay.in_dim(); ++c)
          z += lay.w(r, c) * act[l][static_cast<std::size_t>(c)];
        act[l + 1][static_cast<std::size_t>(r)] =
            lay.activation == Activation::kTanh ? std::tanh(z) : z;
      }
    }

    delta[nl].assign(act[nl].size(), 0.0);
    for (std::size_t r = 0; r < act[nl].size(); ++r) {
      const double resid = act[nl][r] - y(s, static_cast<Eigen::Index>(r));
      total_sse += square(resid);
      delta[nl][r] = 2.0 * resid / static_cast<double>(n);
    }

    for (std::size_t l = nl; l-- > 0;) {
      const Dense& lay = layers[l];
      for (int r = 0; r < lay.out_dim(); ++r) {
        double dz = delta[l + 1][static_cast<std::size_t>(r)];
        if (lay.activation == Activation::kTanh)
          dz *= 1.0 - square(act[l + 1][static_cast<std::size_t>(r)]);
        delta[l + 1][static_cast<std::size_t>(r)] = dz;
        for (int c = 0; c < lay.in_dim(); ++c)
          result.grad.dw[l](r, c) += dz * act[l][static_cast<std::size_t>(c)];
        result.grad.db[l][r] += dz;
      }
      delta[l].assign(act[l].size(), 0.0);
      for (int c = 0; c < lay.in_dim(); ++c) {
        double acc = 0.0;
        for (int r = 0; r < lay.out_dim(); ++r)
          acc += delta[l + 1][static_cast<std::size_t>(r)] * lay.w(r, c);
        delta[l][static_cast<std::size_t>(c)] = acc;
      }
    }
  }

  result.mse = total_sse / static_cast<double>(n);
  double reg = 0.0;
  for (std::size_t l = 0; l < nl; ++l) {
    if (l2 != 0.0) {
      double w2 = 0.0;
      for (int r = 0; r < layers[l].out_dim(); ++r)
        for (int c = 0; c < layers[l].in_dim(); ++c) w2 += square(layers[l].w(r, c));
      reg += l2 * w2;
      for (int r = 0; r < layers[l].out_dim(); ++r)
        for (int c = 0; c < layers[l].in_dim(); ++c)
          result.grad.dw[l](r, c) += 2.0 * l2 * layers[l].w(r, c);
    }
  }
  result.loss = result.mse + reg;
  return result;
}

void sgd_step(Eigen::Ref<Eigen::ArrayXd> p, const Eigen::Ref<const Eigen::ArrayXd>& g,
              double lr) {
  p -= lr * g;
}

void adam_step(Eigen::Ref<Eigen::ArrayXd> p, const Eigen::Ref<const Eigen::ArrayXd>& g,
               Eigen::Ref<Eigen::ArrayXd> m, Eigen::Ref<Eigen::ArrayXd> v, int t, double lr,
               double beta1, double beta2, double eps) {
  m = beta1 * m + (1.0 - beta1) * g;
  v = beta2 * v + (1.0 - beta2) * g.square();
  const double bc1 = 1.0 - std::pow(beta1, t);
  const double bc2 = 1.0 - std::pow(beta2, t);
  p -= lr * (m / bc1) / ((v / bc2).sqrt() + eps);
}

void adamax_step(Eigen::Ref<Eigen::ArrayXd> p, const Eigen::Ref<const Eigen::ArrayXd>& g,
                 Eigen::Ref<Eigen::ArrayXd> m, Eigen::Ref<Eigen::ArrayXd> u, int t, double lr,
                 double beta1, double beta2) {
  m = beta1 * m + (1.0 - beta1) * g;
  u = (beta2 * u).max(g.abs());
  const double scale = lr / (1.0 - std::pow(beta1, t));
  p -= (u > 0.0).select(scale * m / u, 0.0);
}

namespace {

Eigen::Map<Eigen::ArrayXd> flat(Matrix& m) { return {m.data(), m.size()}; }
Eigen::Map<const Eigen::ArrayXd> flat(const Matrix& m) { return {m.data(), m.size()}; }
Eigen::Map<Eigen::ArrayXd> flat(Vector& v) { return {v.data(), v.size()}; }
Eigen::Map<const Eigen::ArrayXd> flat(const Vector& v) { return {v.data(), v.size()}; }

}  // namespace

Optimizer::Optimizer(OptimizerKind kind, double lr, const std::vector<Dense>& shapes)
    : kind_(kind), lr_(lr) {
  if (kind_ == OptimizerKind::kSgd) return;
  for (const Dense& l : shapes) {
    mw_.push_back(Matrix::Zero(l.out_dim(), l.in_dim()));
    vw_.push_back(Matrix::Zero(l.out_dim(), l.in_dim()));
    mb_.push_back(Vector::Zero(l.out_dim()));
    vb_.push_back(Vector::Zero(l.out_dim()));
  }
}

void Optimizer::step(std::vector<Dense>& layers, const Gradients& grad) {
  ++t_;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    switch (kind_) {
      case OptimizerKind::kSgd:
        sgd_step(flat(layers[l].w), flat(grad.dw[l]), lr_);
        sgd_step(flat(layers[l].b), flat(grad.db[l]), lr_);
        break;
      case OptimizerKind::kAdam:
        adam_step(flat(layers[l].w), flat(grad.dw[l]), flat(mw_[l]), flat(vw_[l]), t_, lr_);
        adam_step(flat(layers[l].b), flat(grad.db[l]), flat(mb_[l]), flat(vb_[l]), t_, lr_);
        break;
      case OptimizerKind::kAdaMax:
        adamax_step(flat(layers[l].w), flat(grad.dw[l]), flat(mw_[l]), flat(vw_[l]), t_, lr_);
        adamax_step(flat(layers[l].b), flat(grad.db[l]), flat(mb_[l]), flat(vb_[l]), t_, lr_);
        break;
    }
  }
}

TrainResult train(Network net, const Matrix& x, const Matrix& y, const TrainConfig& cfg) {
  if (cfg.max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
  Optimizer opt(cfg.optimizer, cfg.learning_rate, net.layers());

  TrainResult result;
  result.history.reserve(static_cast<std::size_t>(cfg.max_epochs));
  std::vector<Dense> best = net.layers();
  double best_loss = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int stall = 0;
  bool stopped_early = false;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    LossGrad lg = loss_and_grad(net, x, y, cfg.l2_penalty);
    if (!std::isfinite(lg.loss))
      throw DivergedTraining("train: non-finite loss at epoch " + std::to_string(epoch));
    result.history.push_back(lg.loss);

    if (lg.loss < best_loss) {
      if (best_loss - lg.loss > cfg.min_delta) stall = 0; else ++stall;
      best_loss = lg.loss;
      best_epoch = epoch;
      for (std::size_t l = 0; l < best.size(); ++l) {
        best[l].w = net.layers()[l].w;
        best[l].b = net.layers()[l].b;
      }
    } else {
      ++stall;
    }
    if (stall >= cfg.patience) {
      stopped_early = true;
      break;
    }
    opt.step(net.layers(), lg.grad);
  }

  if (!stopped_early) {
    // The final update was applied but never scored; give it the same chance.
    LossGrad lg = loss_and_grad(net, x, y, cfg.l2_penalty);
    if (std::isfinite(lg.loss) && lg.loss < best_loss) {
      best_loss = lg.loss;
      best_epoch = static_cast<int>(result.history.size());
      best = net.layers();
    }
  }

  result.network = Network(net.input_dim(), std::move(best));
  result.best_loss = best_loss;
  result.best_epoch = best_epoch;
  return result;
}

}  // namespace mufide::nn
