#include "mufide/mfnn.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace mufide::mfnn {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kIntermediate: return "intermediate";
    case Variant::kGpmimic: return "gpmimic";
    case Variant::kTwoStep: return "two_step";
    case Variant::kThreeStep: return "three_step";
    case Variant::kSingleFidelity: return "single_fidelity";
  }
  throw ConfigError("unknown model variant");
}

Variant variant_from_string(const std::string& s) {
  if (s == "intermediate") return Variant::kIntermediate;
  if (s == "gpmimic") return Variant::kGpmimic;
  if (s == "two_step") return Variant::kTwoStep;
  if (s == "three_step") return Variant::kThreeStep;
  if (s == "single_fidelity") return Variant::kSingleFidelity;
  throw ConfigError("unknown model variant '" + s + "'");
}

namespace {

void check_chain(const nn::Dense& layer, int expect_in, const char* what) {
  if (layer.in_dim() != expect_in)
    throw DimensionMismatch(std::string("all-in-one net: ") + what + " expects input " +
                            std::to_string(expect_in) + ", layer has " +
                            std::to_string(layer.in_dim()));
}

}  // namespace

AllInOneNet::AllInOneNet(Variant variant, int input_dim, std::vector<nn::Dense> layers)
    : variant_(variant), input_dim_(input_dim), layers_(std::move(layers)) {
  if (variant_ == Variant::kIntermediate) {
    if (layers_.size() < 5)
      throw DimensionMismatch("intermediate net needs trunk(3) + readout + output layers");
    int prev = input_dim_;
    for (int i = 0; i < 3; ++i) {
      check_chain(layers_[static_cast<std::size_t>(i)], prev, "trunk layer");
      prev = layers_[static_cast<std::size_t>(i)].out_dim();
    }
    check_chain(layers_[3], prev, "low-fidelity readout");
    if (layers_[3].out_dim() != 1 || layers_[3].activation != nn::Activation::kLinear)
      throw DimensionMismatch("low-fidelity readout must be a 1-unit linear layer");
    int post = prev + 1;  // trunk activations plus the readout value
    for (std::size_t l = 4; l + 1 < layers_.size(); ++l) {
      check_chain(layers_[l], post, "post-readout layer");
      post = layers_[l].out_dim();
    }
    check_chain(layers_.back(), post, "high-fidelity output");
    if (layers_.back().out_dim() != 1 || layers_.back().activation != nn::Activation::kLinear)
      throw DimensionMismatch("high-fidelity output must be a 1-unit linear layer");
  } else if (variant_ == Variant::kGpmimic) {
    if (layers_.size() < 3)
      throw DimensionMismatch("gpmimic net needs trunk + latent pair + head");
    int prev = input_dim_;
    for (std::size_t l = 0; l + 2 < layers_.size(); ++l) {
      check_chain(layers_[l], prev, "trunk layer");
      prev = layers_[l].out_dim();
    }
    const nn::Dense& u = layers_[layers_.size() - 2];
    check_chain(u, prev, "latent pair layer");
    if (u.out_dim() != 2 || u.activation != nn::Activation::kLinear)
      throw DimensionMismatch("latent pair layer must be a 2-unit linear layer");
    const nn::Dense& head = layers_.back();
    check_chain(head, 2, "head");
    if (head.out_dim() != 2 || head.activation != nn::Activation::kLinear)
      throw DimensionMismatch("head must be a 2x2 linear layer");
  } else {
    throw ConfigError("all-in-one net variant must be intermediate or gpmimic");
  }
}

int AllInOneNet::trunk_count() const {
  return variant_ == Variant::kIntermediate ? 3 : static_cast<int>(layers_.size()) - 2;
}

AllInOneNet::Outputs AllInOneNet::forward(const Matrix& x) const {
  if (x.cols() != input_dim_)
    throw DimensionMismatch("all-in-one forward: input width " + std::to_string(x.cols()) +
                            ", expected " + std::to_string(input_dim_));
  const std::size_t n = layers_.size();
  Outputs out;
  if (variant_ == Variant::kIntermediate) {
    Matrix a = x;
    for (int i = 0; i < 3; ++i) a = nn::layer_forward(layers_[static_cast<std::size_t>(i)], a);
    const Matrix ylf = nn::layer_forward(layers_[3], a);
    Matrix z(a.rows(), a.cols() + 1);
    z.leftCols(a.cols()) = a;
    z.col(a.cols()) = ylf.col(0);
    for (std::size_t l = 4; l + 1 < n; ++l) z = nn::layer_forward(layers_[l], z);
    const Matrix yhf = nn::layer_forward(layers_[n - 1], z);
    out.hf = yhf.col(0);
    out.lf = ylf.col(0);
  } else {
    Matrix a = x;
    for (std::size_t l = 0; l + 2 < n; ++l) a = nn::layer_forward(layers_[l], a);
    const Matrix u = nn::layer_forward(layers_[n - 2], a);
    const Matrix o = nn::layer_forward(layers_[n - 1], u);
    out.hf = o.col(0);
    out.lf = o.col(1);
  }
  return out;
}

AllInOneNet make_all_in_one_net(Variant variant, int input_dim, const AllInOneConfig& cfg,
                                Rng& rng) {
  if (cfg.depth < 1) throw ConfigError("all-in-one config: depth must be >= 1");
  if (cfg.width < 1) throw ConfigError("all-in-one config: width must be >= 1");
  std::vector<nn::Dense> layers;
  auto push = [&](int out_dim, int in_dim, nn::Activation act) {
    nn::Dense d;
    d.w = nn::init_weight(out_dim, in_dim, cfg.initializer, rng);
    d.b = Vector::Zero(out_dim);
    d.activation = act;
    layers.push_back(std::move(d));
  };
  if (variant == Variant::kIntermediate) {
    push(64, input_dim, nn::Activation::kTanh);
    push(64, 64, nn::Activation::kTanh);
    push(64, 64, nn::Activation::kTanh);
    push(1, 64, nn::Activation::kLinear);  // low-fidelity readout
    int prev = 65;
    for (int k = 0; k < cfg.depth; ++k) {
      push(cfg.width, prev, nn::Activation::kTanh);
      prev = cfg.width;
    }
    push(1, prev, nn::Activation::kLinear);
  } else if (variant == Variant::kGpmimic) {
    int prev = input_dim;
    for (int k = 0; k < cfg.depth; ++k) {
      push(cfg.width, prev, nn::Activation::kTanh);
      prev = cfg.width;
    }
    push(2, prev, nn::Activation::kLinear);
    push(2, 2, nn::Activation::kLinear);
  } else {
    throw ConfigError("all-in-one net variant must be intermediate or gpmimic");
  }
  return AllInOneNet(variant, input_dim, std::move(layers));
}

namespace {

nn::Gradients zero_like(const std::vector<nn::Dense>& layers) {
  nn::Gradients g;
  g.dw.reserve(layers.size());
  g.db.reserve(layers.size());
  for (const nn::Dense& l : layers) {
    g.dw.push_back(Matrix::Zero(l.out_dim(), l.in_dim()));
    g.db.push_back(Vector::Zero(l.out_dim()));
  }
  return g;
}

// Backward through one layer into an accumulator, using pre-sized scratch.
Matrix backward_into(const nn::Dense& layer, const Matrix& a_prev, const Matrix& a_out,
                     Matrix da_out, nn::Gradients& acc, nn::Gradients& scratch,
                     std::size_t l) {
  Matrix da_prev = nn::layer_backward(layer, a_prev, a_out, std::move(da_out),
                                      scratch.dw[l], scratch.db[l]);
  acc.dw[l] += scratch.dw[l];
  acc.db[l] += scratch.db[l];
  return da_prev;
}

// One fidelity branch of the intermediate wiring. col_target selects which
// head the residual is taken on: the full net for the high-fidelity branch,
// the readout only for the low-fidelity branch.
double intermediate_branch(const AllInOneNet& net, const Matrix& x, const Vector& y,
                           double coeff, bool hf_branch, nn::Gradients& acc,
                           nn::Gradients& scratch) {
  const auto& L = net.layers();
  const std::size_t n = L.size();
  const Eigen::Index rows = x.rows();

  std::vector<Matrix> tacts(4);
  tacts[0] = x;
  for (int i = 0; i < 3; ++i)
    tacts[static_cast<std::size_t>(i) + 1] =
        nn::layer_forward(L[static_cast<std::size_t>(i)], tacts[static_cast<std::size_t>(i)]);
  const Matrix ylf = nn::layer_forward(L[3], tacts[3]);

  double mse = 0.0;
  Matrix da3;
  if (hf_branch) {
    const std::size_t n_post = n - 5;
    std::vector<Matrix> pacts(n_post + 1);
    pacts[0].resize(rows, tacts[3].cols() + 1);
    pacts[0].leftCols(tacts[3].cols()) = tacts[3];
    pacts[0].col(tacts[3].cols()) = ylf.col(0);
    for (std::size_t k = 0; k < n_post; ++k)
      pacts[k + 1] = nn::layer_forward(L[4 + k], pacts[k]);
    const Matrix yhf = nn::layer_forward(L[n - 1], pacts[n_post]);

    const Matrix resid = yhf.col(0) - y;
    mse = resid.squaredNorm() / static_cast<double>(rows);

    Matrix da = (coeff * 2.0 / static_cast<double>(rows)) * resid;
    da = backward_into(L[n - 1], pacts[n_post], yhf, std::move(da), acc, scratch, n - 1);
    for (std::size_t k = n_post; k-- > 0;)
      da = backward_into(L[4 + k], pacts[k], pacts[k + 1], std::move(da), acc, scratch, 4 + k);

    da3 = da.leftCols(tacts[3].cols());
    Matrix dylf = da.rightCols(1);
    da3 += backward_into(L[3], tacts[3], ylf, std::move(dylf), acc, scratch, 3);
  } else {
    const Matrix resid = ylf.col(0) - y;
    mse = resid.squaredNorm() / static_cast<double>(rows);
    Matrix dylf = (coeff * 2.0 / static_cast<double>(rows)) * resid;
    da3 = backward_into(L[3], tacts[3], ylf, std::move(dylf), acc, scratch, 3);
  }
  for (std::size_t i = 3; i-- > 0;)
    da3 = backward_into(L[i], tacts[i], tacts[i + 1], std::move(da3), acc, scratch, i);
  return mse;
}

// One fidelity branch of the gpmimic wiring; head_col 0 reads the
// high-fidelity output, 1 the low-fidelity one.
double gpmimic_branch(const AllInOneNet& net, const Matrix& x, const Vector& y, double coeff,
                      int head_col, nn::Gradients& acc, nn::Gradients& scratch) {
  const auto& L = net.layers();
  const std::size_t n = L.size();
  const std::size_t trunk = n - 2;
  const Eigen::Index rows = x.rows();

  std::vector<Matrix> acts(trunk + 1);
  acts[0] = x;
  for (std::size_t l = 0; l < trunk; ++l) acts[l + 1] = nn::layer_forward(L[l], acts[l]);
  const Matrix u = nn::layer_forward(L[n - 2], acts[trunk]);
  const Matrix o = nn::layer_forward(L[n - 1], u);

  const Matrix resid = o.col(head_col) - y;
  const double mse = resid.squaredNorm() / static_cast<double>(rows);

  Matrix dout = Matrix::Zero(rows, 2);
  dout.col(head_col) = (coeff * 2.0 / static_cast<double>(rows)) * resid;
  Matrix da = backward_into(L[n - 1], u, o, std::move(dout), acc, scratch, n - 1);
  da = backward_into(L[n - 2], acts[trunk], u, std::move(da), acc, scratch, n - 2);
  for (std::size_t l = trunk; l-- > 0;)
    da = backward_into(L[l], acts[l], acts[l + 1], std::move(da), acc, scratch, l);
  return mse;
}

}  // namespace

CompositeLossGrad all_in_one_loss_grad(const AllInOneNet& net, const Matrix& x_hf,
                                       const Vector& y_hf, const Matrix& x_lf,
                                       const Vector& y_lf, double alpha, double l2,
                                       bool include_hf, bool include_lf) {
  if (alpha < 0.0 || alpha > 1.0)
    throw ConfigError("all_in_one_loss_grad: alpha must lie in [0, 1]");
  if (include_hf) {
    if (x_hf.rows() == 0) throw EmptyData("all_in_one_loss_grad: empty high-fidelity batch");
    if (x_hf.rows() != y_hf.size())
      throw DimensionMismatch("all_in_one_loss_grad: high-fidelity batch size mismatch");
  }
  if (include_lf) {
    if (x_lf.rows() == 0) throw EmptyData("all_in_one_loss_grad: empty low-fidelity batch");
    if (x_lf.rows() != y_lf.size())
      throw DimensionMismatch("all_in_one_loss_grad: low-fidelity batch size mismatch");
  }

  CompositeLossGrad out;
  out.grad = zero_like(net.layers());
  nn::Gradients scratch = zero_like(net.layers());

  const bool inter = net.variant() == Variant::kIntermediate;
  if (include_hf) {
    out.mse_hf = inter ? intermediate_branch(net, x_hf, y_hf, alpha, true, out.grad, scratch)
                       : gpmimic_branch(net, x_hf, y_hf, alpha, 0, out.grad, scratch);
    out.loss += alpha * out.mse_hf;
  }
  if (include_lf) {
    out.mse_lf = inter
                     ? intermediate_branch(net, x_lf, y_lf, 1.0 - alpha, false, out.grad, scratch)
                     : gpmimic_branch(net, x_lf, y_lf, 1.0 - alpha, 1, out.grad, scratch);
    out.loss += (1.0 - alpha) * out.mse_lf;
  }
  if (l2 != 0.0) {
    const auto& L = net.layers();
    for (std::size_t l = 0; l < L.size(); ++l) {
      out.loss += l2 * L[l].w.squaredNorm();
      out.grad.dw[l] += (2.0 * l2) * L[l].w;
    }
  }
  return out;
}

AllInOneTrainResult train_all_in_one(AllInOneNet net, const Matrix& x_hf, const Vector& y_hf,
                                     const Matrix& x_lf, const Vector& y_lf,
                                     const AllInOneConfig& cfg, bool include_hf,
                                     bool include_lf) {
  if (cfg.train.max_epochs < 1) throw ConfigError("train_all_in_one: max_epochs must be >= 1");
  nn::Optimizer opt(cfg.train.optimizer, cfg.train.learning_rate, net.layers());

  AllInOneTrainResult result;
  result.history.reserve(static_cast<std::size_t>(cfg.train.max_epochs));
  std::vector<nn::Dense> best = net.layers();
  double best_loss = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int stall = 0;
  bool stopped_early = false;

  auto eval = [&] {
    return all_in_one_loss_grad(net, x_hf, y_hf, x_lf, y_lf, cfg.alpha,
                                cfg.train.l2_penalty, include_hf, include_lf);
  };

  for (int epoch = 0; epoch < cfg.train.max_epochs; ++epoch) {
    CompositeLossGrad lg = eval();
    if (!std::isfinite(lg.loss))
      throw DivergedTraining("train_all_in_one: non-finite loss at epoch " +
                             std::to_string(epoch));
    result.history.push_back(lg.loss);

    if (lg.loss < best_loss) {
      if (best_loss - lg.loss > cfg.train.min_delta) stall = 0; else ++stall;
      best_loss = lg.loss;
      best_epoch = epoch;
      for (std::size_t l = 0; l < best.size(); ++l) {
        best[l].w = net.layers()[l].w;
        best[l].b = net.layers()[l].b;
      }
    } else {
      ++stall;
    }
    if (stall >= cfg.train.patience) {
      stopped_early = true;
      break;
    }
    opt.step(net.layers(), lg.grad);
  }

  if (!stopped_early) {
    CompositeLossGrad lg = eval();
    if (std::isfinite(lg.loss) && lg.loss < best_loss) {
      best_loss = lg.loss;
      best_epoch = static_cast<int>(result.history.size());
      best = net.layers();
    }
  }

  result.net = AllInOneNet(net.variant(), net.input_dim(), std::move(best));
  result.best_loss = best_loss;
  result.best_epoch = best_epoch;
  return result;
}

namespace {

Matrix as_column(const Vector& v) {
  Matrix m(v.size(), 1);
  m.col(0) = v;
  return m;
}

nn::TrainResult train_stage(nn::Network net, const Matrix& x, const Matrix& y,
                            const nn::TrainConfig& cfg, const char* stage) {
  try {
    return nn::train(std::move(net), x, y, cfg);
  } catch (const DivergedTraining& e) {
    throw DivergedTraining(std::string(stage) + ": " + e.what());
  }
}

// Ridge fit of the composed affine map x -> a.x + c (mean squared error plus
// l2 |a|^2, intercept unpenalized) embedded into the hidden-layer shape: the
// first hidden unit carries the fit, the rest are zero.
nn::Network closed_form_affine(const Matrix& x, const Vector& y, int hidden_width, double l2) {
  const Eigen::Index n = x.rows(), d = x.cols();
  Matrix a(n, d + 1);
  a.leftCols(d) = x;
  a.col(d).setOnes();
  Matrix normal = (a.transpose() * a) / static_cast<double>(n);
  for (Eigen::Index j = 0; j < d; ++j) normal(j, j) += l2;
  const Vector rhs = a.transpose() * y / static_cast<double>(n);
  const Matrix chol = cholesky_with_escalation(normal);
  const Vector theta = solve_cholesky(chol, rhs);

  std::vector<nn::Dense> layers(2);
  layers[0].w = Matrix::Zero(hidden_width, d);
  layers[0].w.row(0) = theta.head(d).transpose();
  layers[0].b = Vector::Zero(hidden_width);
  layers[0].activation = nn::Activation::kLinear;
  layers[1].w = Matrix::Zero(1, hidden_width);
  layers[1].w(0, 0) = 1.0;
  layers[1].b = Vector::Constant(1, theta[d]);
  layers[1].activation = nn::Activation::kLinear;
  return nn::Network(static_cast<int>(d), std::move(layers));
}

}  // namespace

LfStage train_lf_stage(const MfDataset& data, const MultilevelConfig& cfg, std::uint64_t seed) {
  data.validate();
  LfStage stage;
  stage.x_scaler = MinMaxScaler::fit(data.lf_inputs);
  stage.y_scaler = MinMaxScaler::fit(data.lf_outputs);
  const Matrix xs = stage.x_scaler.transform(data.lf_inputs);
  const Matrix ys = as_column(stage.y_scaler.transform1(data.lf_outputs));

  nn::NetworkSpec spec;
  spec.input_dim = data.input_dim();
  spec.hidden = cfg.lf_hidden;
  spec.output_dim = 1;
  spec.initializer = cfg.initializer;
  Rng rng = Rng(seed).derive(1);
  nn::Network net = nn::init_network(spec, rng);
  stage.net = train_stage(std::move(net), xs, ys, cfg.lf_train, "low-fidelity stage").network;
  return stage;
}

namespace {

MfModel build_staged(Variant variant, const MfDataset& data, const MultilevelConfig& cfg,
                     std::uint64_t seed, const LfStage* pretrained_lf) {
  data.validate();
  if (cfg.hf_width < 1) throw ConfigError("staged config: hf_width must be >= 1");
  if (variant == Variant::kThreeStep && cfg.lin_width < 1)
    throw ConfigError("staged config: lin_width must be >= 1");

  MfModel model;
  model.variant = variant;
  model.ml_cfg = cfg;

  LfStage stage = pretrained_lf ? *pretrained_lf : train_lf_stage(data, cfg, seed);
  if (stage.x_scaler.dim() != data.input_dim())
    throw DimensionMismatch("pretrained low-fidelity stage dimension does not match data");
  model.lf_net = stage.net;
  model.x_scaler = stage.x_scaler;
  model.lf_y_scaler = stage.y_scaler;
  model.hf_y_scaler = MinMaxScaler::fit(data.hf_outputs);

  const Matrix xs_hf = model.x_scaler.transform(data.hf_inputs);
  const Matrix ys_hf = as_column(model.hf_y_scaler.transform1(data.hf_outputs));
  const Matrix ylf = model.lf_net.forward_batch(xs_hf);

  Matrix z(xs_hf.rows(), xs_hf.cols() + 1);
  z.leftCols(xs_hf.cols()) = xs_hf;
  z.col(xs_hf.cols()) = ylf.col(0);

  Matrix hf_in = z;
  if (variant == Variant::kThreeStep) {
    if (cfg.lin_closed_form) {
      model.lin_net = closed_form_affine(z, ys_hf.col(0), cfg.lin_width,
                                         cfg.lin_train.l2_penalty);
    } else {
      nn::NetworkSpec lin_spec;
      lin_spec.input_dim = static_cast<int>(z.cols());
      lin_spec.hidden = {{cfg.lin_width, nn::Activation::kLinear}};
      lin_spec.output_dim = 1;
      lin_spec.initializer = cfg.initializer;
      Rng rng = Rng(seed).derive(2);
      nn::Network net = nn::init_network(lin_spec, rng);
      model.lin_net =
          train_stage(std::move(net), z, ys_hf, cfg.lin_train, "affine stage").network;
    }
    const Matrix ylin = model.lin_net.forward_batch(z);
    hf_in.resize(z.rows(), z.cols() + 1);
    hf_in.leftCols(z.cols()) = z;
    hf_in.col(z.cols()) = ylin.col(0);
  }

  nn::NetworkSpec hf_spec;
  hf_spec.input_dim = static_cast<int>(hf_in.cols());
  hf_spec.hidden = {{cfg.hf_width, nn::Activation::kTanh}};
  hf_spec.output_dim = 1;
  hf_spec.initializer = cfg.initializer;
  Rng rng = Rng(seed).derive(variant == Variant::kThreeStep ? 3 : 2);
  nn::Network net = nn::init_network(hf_spec, rng);
  model.hf_net =
      train_stage(std::move(net), hf_in, ys_hf, cfg.hf_train, "high-fidelity stage").network;
  return model;
}

MfModel build_all_in_one(Variant variant, const MfDataset& data, const AllInOneConfig& cfg,
                         std::uint64_t seed) {
  data.validate();
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0)
    throw ConfigError("all-in-one config: alpha must lie in [0, 1]");

  MfModel model;
  model.variant = variant;
  model.aio_cfg = cfg;

  Matrix all(data.n_hf() + data.n_lf(), data.input_dim());
  all.topRows(data.n_hf()) = data.hf_inputs;
  all.bottomRows(data.n_lf()) = data.lf_inputs;
  model.x_scaler = MinMaxScaler::fit(all);
  model.hf_y_scaler = MinMaxScaler::fit(data.hf_outputs);
  model.lf_y_scaler = MinMaxScaler::fit(data.lf_outputs);

  const Matrix xs_hf = model.x_scaler.transform(data.hf_inputs);
  const Matrix xs_lf = model.x_scaler.transform(data.lf_inputs);
  const Vector ys_hf = model.hf_y_scaler.transform1(data.hf_outputs);
  const Vector ys_lf = model.lf_y_scaler.transform1(data.lf_outputs);

  Rng rng = Rng(seed).derive(1);
  AllInOneNet net = make_all_in_one_net(variant, data.input_dim(), cfg, rng);
  model.composite =
      train_all_in_one(std::move(net), xs_hf, ys_hf, xs_lf, ys_lf, cfg).net;
  return model;
}

}  // namespace

MfModel build_intermediate(const MfDataset& data, const AllInOneConfig& cfg,
                           std::uint64_t seed) {
  return build_all_in_one(Variant::kIntermediate, data, cfg, seed);
}

MfModel build_gpmimic(const MfDataset& data, const AllInOneConfig& cfg, std::uint64_t seed) {
  return build_all_in_one(Variant::kGpmimic, data, cfg, seed);
}

MfModel build_two_step(const MfDataset& data, const MultilevelConfig& cfg, std::uint64_t seed,
                       const LfStage* pretrained_lf) {
  return build_staged(Variant::kTwoStep, data, cfg, seed, pretrained_lf);
}

MfModel build_three_step(const MfDataset& data, const MultilevelConfig& cfg,
                         std::uint64_t seed, const LfStage* pretrained_lf) {
  return build_staged(Variant::kThreeStep, data, cfg, seed, pretrained_lf);
}

MfModel build_single_fidelity(const Matrix& inputs, const Vector& outputs,
                              const SingleFidelityConfig& cfg, std::uint64_t seed) {
  if (inputs.rows() == 0) throw EmptyData("single-fidelity build: no training points");
  if (inputs.rows() != outputs.size())
    throw DimensionMismatch("single-fidelity build: input/output count mismatch");
  if (!all_finite(inputs) || !all_finite(outputs))
    throw DataError("single-fidelity build: non-finite entries");
  if (cfg.depth < 1 || cfg.width < 1)
    throw ConfigError("single-fidelity config: depth and width must be >= 1");

  MfModel model;
  model.variant = Variant::kSingleFidelity;
  model.sf_cfg = cfg;
  model.x_scaler = MinMaxScaler::fit(inputs);
  model.hf_y_scaler = MinMaxScaler::fit(outputs);

  const Matrix xs = model.x_scaler.transform(inputs);
  const Matrix ys = as_column(model.hf_y_scaler.transform1(outputs));

  nn::NetworkSpec spec;
  spec.input_dim = static_cast<int>(inputs.cols());
  spec.hidden.assign(static_cast<std::size_t>(cfg.depth),
                     {cfg.width, nn::Activation::kTanh});
  spec.output_dim = 1;
  spec.initializer = cfg.initializer;
  Rng rng = Rng(seed).derive(1);
  nn::Network net = nn::init_network(spec, rng);
  model.hf_net = train_stage(std::move(net), xs, ys, cfg.train, "single-fidelity net").network;
  return model;
}

Vector MfModel::predict_hf_many(const Matrix& x) const {
  const Matrix xs = x_scaler.transform(x);
  Vector scaled;
  switch (variant) {
    case Variant::kIntermediate:
    case Variant::kGpmimic:
      scaled = composite.forward(xs).hf;
      break;
    case Variant::kTwoStep:
    case Variant::kThreeStep: {
      const Matrix ylf = lf_net.forward_batch(xs);
      Matrix z(xs.rows(), xs.cols() + 1);
      z.leftCols(xs.cols()) = xs;
      z.col(xs.cols()) = ylf.col(0);
      if (variant == Variant::kThreeStep) {
        const Matrix ylin = lin_net.forward_batch(z);
        Matrix z3(z.rows(), z.cols() + 1);
        z3.leftCols(z.cols()) = z;
        z3.col(z.cols()) = ylin.col(0);
        scaled = hf_net.forward_batch(z3).col(0);
      } else {
        scaled = hf_net.forward_batch(z).col(0);
      }
      break;
    }
    case Variant::kSingleFidelity:
      scaled = hf_net.forward_batch(xs).col(0);
      break;
  }
  return hf_y_scaler.inverse1(scaled);
}

double MfModel::predict_hf(const Vector& x) const {
  if (x.size() != input_dim())
    throw DimensionMismatch("predict_hf: input length " + std::to_string(x.size()) +
                            ", model expects " + std::to_string(input_dim()));
  Matrix row(1, x.size());
  row.row(0) = x.transpose();
  return predict_hf_many(row)[0];
}

}  // namespace mufide::mfnn
