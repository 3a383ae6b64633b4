#include "fq/surrogate/regressor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fq/sampling/rng.hpp"

namespace fq::surrogate {

const char* to_string(RegressorKind kind) {
  switch (kind) {
    case RegressorKind::mlp:
      return "mlp";
    case RegressorKind::krr:
      return "krr";
    case RegressorKind::delta:
      return "delta";
  }
  return "?";
}

RegressorKind parse_regressor_kind(const std::string& name) {
  if (name == "mlp") return RegressorKind::mlp;
  if (name == "krr") return RegressorKind::krr;
  throw ValidationError("unknown regressor family '" + name + "'");
}

std::unique_ptr<Regressor> Regressor::read(BinaryReader& in) {
  const auto tag = in.pod<std::uint32_t>();
  switch (static_cast<RegressorKind>(tag)) {
    case RegressorKind::mlp:
      return Mlp::read_body(in);
    case RegressorKind::krr:
      return Krr::read_body(in);
    case RegressorKind::delta: {
      auto base = read(in);
      auto corr = read(in);
      return std::make_unique<DeltaRegressor>(std::move(base), std::move(corr));
    }
  }
  throw ParseError("unknown regressor tag in model file", 0);
}

// ---------------------------------------------------------------------------
// MLP

Mlp::Mlp(std::size_t input, const std::vector<std::size_t>& hidden, std::uint64_t seed) {
  if (input == 0) throw ValidationError("network input size must be positive");
  sampling::Philox4x32 rng(seed, 0x6d6c70ULL);
  std::size_t fan_in = input;
  auto layer = [&](std::size_t fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Eigen::MatrixXd w(static_cast<Eigen::Index>(fan_out), static_cast<Eigen::Index>(fan_in));
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = bound * (2.0 * sampling::uniform01(rng) - 1.0);
    }
    weights_.push_back(std::move(w));
    biases_.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fan_out)));
    fan_in = fan_out;
  };
  for (auto h : hidden) {
    if (h == 0) throw ValidationError("hidden layer width must be positive");
    layer(h);
  }
  layer(1);
}

Mlp::Mlp(std::vector<Eigen::MatrixXd> weights, std::vector<Eigen::VectorXd> biases)
    : weights_(std::move(weights)), biases_(std::move(biases)) {
  if (weights_.empty() || weights_.size() != biases_.size() || weights_.back().rows() != 1) {
    throw ValidationError("malformed network parameters");
  }
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (biases_[l].size() != weights_[l].rows() || (l > 0 && weights_[l].cols() != weights_[l - 1].rows())) {
      throw ValidationError("network layer shapes do not chain");
    }
  }
}

double Mlp::evaluate(std::span<const double> x, std::span<double> grad) const {
  const std::size_t L = weights_.size();
  std::vector<Eigen::VectorXd> a(L);
  a[0] = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  for (std::size_t l = 0; l + 1 < L; ++l) a[l + 1] = (weights_[l] * a[l] + biases_[l]).array().tanh();
  const double y = (weights_[L - 1] * a[L - 1])(0) + biases_[L - 1](0);
  if (!grad.empty()) {
    Eigen::VectorXd g = weights_[L - 1].transpose();
    for (std::size_t l = L - 1; l-- > 0;) {
      g = weights_[l].transpose() * (g.array() * (1.0 - a[l + 1].array().square())).matrix();
    }
    std::copy(g.data(), g.data() + g.size(), grad.begin());
  }
  return y;
}

void Mlp::write(BinaryWriter& out) const {
  out.pod(static_cast<std::uint32_t>(RegressorKind::mlp));
  out.pod<std::uint64_t>(weights_.size());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.matrix(weights_[l]);
    out.matrix(biases_[l]);
  }
}

std::unique_ptr<Mlp> Mlp::read_body(BinaryReader& in) {
  const auto n = in.pod<std::uint64_t>();
  if (n == 0 || n > 64) throw ParseError("corrupt model file: bad layer count", 0);
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
  for (std::uint64_t l = 0; l < n; ++l) {
    w.push_back(in.matrix());
    b.push_back(in.matrix());
  }
  return std::make_unique<Mlp>(std::move(w), std::move(b));
}

namespace {

struct Adam {
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;
  std::size_t t = 0;

  explicit Adam(const Mlp& net) {
    for (const auto& w : net.weights()) {
      mw.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
      vw.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
      mb.push_back(Eigen::VectorXd::Zero(w.rows()));
      vb.push_back(Eigen::VectorXd::Zero(w.rows()));
    }
  }

  void step(Mlp& net, const std::vector<Eigen::MatrixXd>& gw, const std::vector<Eigen::VectorXd>& gb, double lr,
            std::size_t frozen) {
    constexpr double b1 = 0.9;
    constexpr double b2 = 0.999;
    constexpr double eps = 1e-8;
    ++t;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t l = frozen; l < gw.size(); ++l) {
      mw[l] = b1 * mw[l] + (1.0 - b1) * gw[l];
      vw[l] = b2 * vw[l] + (1.0 - b2) * gw[l].cwiseProduct(gw[l]);
      mb[l] = b1 * mb[l] + (1.0 - b1) * gb[l];
      vb[l] = b2 * vb[l] + (1.0 - b2) * gb[l].cwiseProduct(gb[l]);
      net.weights()[l].array() -= lr * (mw[l].array() / c1) / ((vw[l].array() / c2).sqrt() + eps);
      net.biases()[l].array() -= lr * (mb[l].array() / c1) / ((vb[l].array() / c2).sqrt() + eps);
    }
  }
};

// Batched forward pass; a[l] holds layer activations column-wise.
Eigen::RowVectorXd forward(const Mlp& net, const Eigen::MatrixXd& x, std::vector<Eigen::MatrixXd>& a) {
  const auto& w = net.weights();
  const auto& b = net.biases();
  const std::size_t L = w.size();
  a.resize(L);
  a[0] = x;
  for (std::size_t l = 0; l + 1 < L; ++l) a[l + 1] = ((w[l] * a[l]).colwise() + b[l]).array().tanh();
  return (w[L - 1] * a[L - 1]).array() + b[L - 1](0);
}

double rmse(const Mlp& net, const std::vector<Sample>& samples) {
  if (samples.empty()) return 0.0;
  Eigen::MatrixXd x(samples.front().x.size(), static_cast<Eigen::Index>(samples.size()));
  for (std::size_t n = 0; n < samples.size(); ++n) x.col(static_cast<Eigen::Index>(n)) = samples[n].x;
  std::vector<Eigen::MatrixXd> a;
  const Eigen::RowVectorXd y = forward(net, x, a);
  double s = 0.0;
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const double d = y(static_cast<Eigen::Index>(n)) - samples[n].y;
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(samples.size()));
}

}  // namespace

double mlp_loss(const Mlp& net, std::span<const Sample* const> batch, double force_weight,
                std::vector<Eigen::MatrixXd>* gw, std::vector<Eigen::VectorXd>* gb, std::size_t frozen_layers) {
  const auto& w = net.weights();
  const std::size_t L = w.size();
  const auto D = static_cast<Eigen::Index>(net.input_size());
  const auto B = static_cast<Eigen::Index>(batch.size());
  if (B == 0) throw ValidationError("empty batch");
  Eigen::MatrixXd x(D, B);
  Eigen::RowVectorXd t(B);
  bool any_forces = false;
  for (Eigen::Index n = 0; n < B; ++n) {
    x.col(n) = batch[static_cast<std::size_t>(n)]->x;
    t(n) = batch[static_cast<std::size_t>(n)]->y;
    any_forces = any_forces || (batch[static_cast<std::size_t>(n)]->has_forces && force_weight > 0.0);
  }
  std::vector<Eigen::MatrixXd> a;
  const Eigen::RowVectorXd y = forward(net, x, a);
  double loss = (y - t).squaredNorm() / static_cast<double>(B);
  const Eigen::RowVectorXd c_e = 2.0 * (y - t) / static_cast<double>(B);
  Eigen::RowVectorXd c_t = Eigen::RowVectorXd::Zero(B);

  std::vector<Eigen::MatrixXd> ad(L);
  std::vector<Eigen::MatrixXd> zd(L);
  if (any_forces) {
    // Input gradients g_x per column.
    Eigen::MatrixXd g = w[L - 1].transpose().replicate(1, B);
    for (std::size_t l = L - 1; l-- > 0;) {
      g = w[l].transpose() * (g.array() * (1.0 - a[l + 1].array().square())).matrix();
    }
    // Predicted normalized forces are −Jᵀg; the tangent direction is v = J r.
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(D, B);
    for (Eigen::Index n = 0; n < B; ++n) {
      const auto& s = *batch[static_cast<std::size_t>(n)];
      if (!s.has_forces) continue;
      const Eigen::VectorXd r = -s.jacobian.transpose() * g.col(n) - s.forces;
      const double nc = static_cast<double>(s.forces.size());
      loss += force_weight * r.squaredNorm() / (nc * static_cast<double>(B));
      v.col(n) = s.jacobian * r;
      c_t(n) = -2.0 * force_weight / (static_cast<double>(B) * nc);
    }
    ad[0] = v;
    for (std::size_t l = 0; l + 1 < L; ++l) {
      zd[l + 1] = w[l] * ad[l];
      ad[l + 1] = (1.0 - a[l + 1].array().square()) * zd[l + 1].array();
    }
  }
  if (!gw) return loss;

  gw->resize(L);
  gb->resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    (*gw)[l] = Eigen::MatrixXd::Zero(w[l].rows(), w[l].cols());
    (*gb)[l] = Eigen::VectorXd::Zero(w[l].rows());
  }
  (*gw)[L - 1] = c_e * a[L - 1].transpose();
  (*gb)[L - 1] = Eigen::VectorXd::Constant(1, c_e.sum());
  Eigen::MatrixXd p = w[L - 1].transpose() * c_e;
  Eigen::MatrixXd q;
  if (any_forces) {
    (*gw)[L - 1] += c_t * ad[L - 1].transpose();
    q = w[L - 1].transpose() * c_t;
  }
  for (std::size_t l = L - 1; l-- > frozen_layers;) {
    const Eigen::ArrayXXd s = 1.0 - a[l + 1].array().square();
    Eigen::MatrixXd pz = p.array() * s;
    Eigen::MatrixXd qz;
    if (any_forces) {
      pz.array() += q.array() * zd[l + 1].array() * (-2.0 * a[l + 1].array() * s);
      qz = q.array() * s;
    }
    (*gw)[l] = pz * a[l].transpose();
    (*gb)[l] = pz.rowwise().sum();
    if (any_forces) (*gw)[l] += qz * ad[l].transpose();
    if (l == frozen_layers) break;
    p = w[l].transpose() * pz;
    if (any_forces) q = w[l].transpose() * qz;
  }
  return loss;
}

FitStats fit_mlp(Mlp& net, const std::vector<Sample>& train, const std::vector<Sample>& validation,
                 const MlpConfig& config, std::uint64_t seed) {
  if (train.empty()) throw ValidationError("network training needs at least one sample");
  if (config.batch_size == 0) throw ValidationError("batch size must be positive");
  if (config.frozen_layers >= net.weights().size()) throw ValidationError("cannot freeze every layer");

  sampling::Philox4x32 rng(seed, 0x666974ULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  Adam adam(net);
  std::vector<Eigen::MatrixXd> gw;
  std::vector<Eigen::VectorXd> gb;
  std::vector<const Sample*> batch;

  const auto& monitor = validation.empty() ? train : validation;
  Mlp best = net;
  double best_rmse = rmse(net, monitor);
  double ref_rmse = best_rmse;
  std::size_t since = 0;
  FitStats stats;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(&train[order[i]]);
      mlp_loss(net, batch, config.force_weight, &gw, &gb, config.frozen_layers);
      adam.step(net, gw, gb, config.learning_rate, config.frozen_layers);
    }

    ++stats.epochs;
    const double r = rmse(net, monitor);
    if (!std::isfinite(r)) break;
    if (r < best_rmse) {
      best_rmse = r;
      best = net;
    }
    if (r < ref_rmse - config.min_delta) {
      ref_rmse = r;
      since = 0;
    } else if (++since >= config.patience) {
      break;
    }
  }
  net = best;
  stats.train_rmse = rmse(net, train);
  stats.val_rmse = validation.empty() ? stats.train_rmse : rmse(net, validation);
  return stats;
}

// ---------------------------------------------------------------------------
// Kernel ridge

Krr::Krr(Eigen::MatrixXd centers, Eigen::VectorXd alpha, double length_scale, double linear_weight, double ridge)
    : centers_(std::move(centers)),
      alpha_(std::move(alpha)),
      length_(length_scale),
      linear_weight_(linear_weight),
      ridge_(ridge) {
  if (centers_.cols() != alpha_.size() || centers_.cols() == 0) throw ValidationError("malformed kernel model");
  if (!(length_ > 0.0)) throw ValidationError("kernel length scale must be positive");
  const double d = static_cast<double>(centers_.rows());
  linear_dir_ = linear_weight_ * (centers_ * alpha_) / d;
  linear_bias_ = linear_weight_ * alpha_.sum();
}

double Krr::evaluate(std::span<const double> x, std::span<double> grad) const {
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::MatrixXd diff = centers_.colwise() - xv;
  const double inv_l2 = 1.0 / (length_ * length_);
  const Eigen::VectorXd k = (-0.5 * inv_l2 * diff.colwise().squaredNorm().transpose()).array().exp();
  const Eigen::VectorXd ak = alpha_.cwiseProduct(k);
  const double y = ak.sum() + linear_bias_ + linear_dir_.dot(xv);
  if (!grad.empty()) {
    const Eigen::VectorXd g = inv_l2 * (diff * ak) + linear_dir_;
    std::copy(g.data(), g.data() + g.size(), grad.begin());
  }
  return y;
}

void Krr::write(BinaryWriter& out) const {
  out.pod(static_cast<std::uint32_t>(RegressorKind::krr));
  out.pod(length_);
  out.pod(linear_weight_);
  out.pod(ridge_);
  out.matrix(centers_);
  out.matrix(alpha_);
}

std::unique_ptr<Krr> Krr::read_body(BinaryReader& in) {
  const double length = in.pod<double>();
  const double lw = in.pod<double>();
  const double ridge = in.pod<double>();
  Eigen::MatrixXd centers = in.matrix();
  Eigen::MatrixXd alpha = in.matrix();
  if (alpha.cols() != 1) throw ParseError("corrupt model file: kernel weights", 0);
  return std::make_unique<Krr>(std::move(centers), Eigen::VectorXd(alpha.col(0)), length, lw, ridge);
}

std::unique_ptr<Krr> fit_krr(const std::vector<Sample>& train, const std::vector<Sample>& validation,
                             const KrrConfig& config, std::uint64_t seed, FitStats* stats) {
  if (train.empty()) throw ValidationError("kernel training needs at least one sample");
  if (!(config.subsample > 0.0 && config.subsample <= 1.0)) throw ValidationError("subsample must be in (0, 1]");
  if (config.ridge_grid.empty()) throw ValidationError("ridge grid is empty");

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  sampling::Philox4x32 rng(seed, 0x6b7272ULL);
  std::shuffle(order.begin(), order.end(), rng);
  const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.subsample * static_cast<double>(train.size()))));
  std::vector<std::size_t> held(order.begin() + static_cast<std::ptrdiff_t>(m), order.end());
  order.resize(m);

  const auto D = train.front().x.size();
  const auto M = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd centers(D, M);
  Eigen::VectorXd y(M);
  for (Eigen::Index i = 0; i < M; ++i) {
    centers.col(i) = train[order[static_cast<std::size_t>(i)]].x;
    y(i) = train[order[static_cast<std::size_t>(i)]].y;
  }

  double length = config.length_scale;
  if (!(length > 0.0)) {
    const Eigen::Index cap = std::min<Eigen::Index>(M, 300);
    std::vector<double> d;
    for (Eigen::Index i = 0; i < cap; ++i) {
      for (Eigen::Index j = i + 1; j < cap; ++j) d.push_back((centers.col(i) - centers.col(j)).norm());
    }
    if (d.empty()) {
      length = 1.0;
    } else {
      std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2), d.end());
      length = d[d.size() / 2] > 0.0 ? d[d.size() / 2] : 1.0;
    }
  }

  const double inv_l2 = 1.0 / (length * length);
  const double lw = config.linear_weight;
  const double dd = static_cast<double>(D);
  auto kernel_block = [&](const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb) {
    const Eigen::MatrixXd dot = xa.transpose() * xb;
    const Eigen::VectorXd na = xa.colwise().squaredNorm().transpose();
    const Eigen::RowVectorXd nb = xb.colwise().squaredNorm();
    Eigen::MatrixXd d2 = (-2.0 * dot).colwise() + na;
    d2.rowwise() += nb;
    return Eigen::MatrixXd((-0.5 * inv_l2 * d2.array().max(0.0)).exp() + lw * (1.0 + dot.array() / dd));
  };
  const Eigen::MatrixXd K = kernel_block(centers, centers);

  // Ridge selection on validation plus the training points this member left out.
  std::vector<const Sample*> monitor;
  for (const auto& s : validation) monitor.push_back(&s);
  for (auto i : held) monitor.push_back(&train[i]);
  Eigen::MatrixXd kv;
  Eigen::VectorXd yv;
  if (!monitor.empty()) {
    Eigen::MatrixXd xv(D, static_cast<Eigen::Index>(monitor.size()));
    yv.resize(static_cast<Eigen::Index>(monitor.size()));
    for (std::size_t i = 0; i < monitor.size(); ++i) {
      xv.col(static_cast<Eigen::Index>(i)) = monitor[i]->x;
      yv(static_cast<Eigen::Index>(i)) = monitor[i]->y;
    }
    kv = kernel_block(xv, centers);
  }

  // k-fold error over the member's own points, folds interleaved in shuffled order.
  const bool use_cv = config.cv_folds >= 2 && M >= static_cast<Eigen::Index>(config.cv_folds);
  auto cv_rmse = [&](double ridge) {
    const auto folds = static_cast<Eigen::Index>(config.cv_folds);
    double sse = 0.0;
    for (Eigen::Index f = 0; f < folds; ++f) {
      std::vector<Eigen::Index> in, out;
      for (Eigen::Index i = 0; i < M; ++i) (i % folds == f ? out : in).push_back(i);
      if (in.empty()) continue;
      const auto ni = static_cast<Eigen::Index>(in.size());
      const auto no = static_cast<Eigen::Index>(out.size());
      Eigen::MatrixXd kin(ni, ni);
      Eigen::MatrixXd kout(no, ni);
      Eigen::VectorXd yin(ni);
      for (Eigen::Index a = 0; a < ni; ++a) {
        yin(a) = y(in[static_cast<std::size_t>(a)]);
        for (Eigen::Index b = 0; b < ni; ++b) kin(a, b) = K(in[static_cast<std::size_t>(a)], in[static_cast<std::size_t>(b)]);
        for (Eigen::Index b = 0; b < no; ++b) kout(b, a) = K(out[static_cast<std::size_t>(b)], in[static_cast<std::size_t>(a)]);
      }
      kin.diagonal().array() += ridge;
      Eigen::LLT<Eigen::MatrixXd> llt(kin);
      if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
      const Eigen::VectorXd pred = kout * llt.solve(yin);
      for (Eigen::Index b = 0; b < no; ++b) {
        const double d = pred(b) - y(out[static_cast<std::size_t>(b)]);
        sse += d * d;
      }
    }
    return std::sqrt(sse / static_cast<double>(M));
  };

  double best_err = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_alpha;
  double best_ridge = 0.0;
  for (double ridge : config.ridge_grid) {
    Eigen::MatrixXd reg = K;
    reg.diagonal().array() += ridge;
    Eigen::LLT<Eigen::MatrixXd> llt(reg);
    if (llt.info() != Eigen::Success) continue;
    Eigen::VectorXd alpha = llt.solve(y);
    if (!alpha.allFinite()) continue;
    double err = 0.0;
    if (config.cv_folds >= 2 && M >= static_cast<Eigen::Index>(config.cv_folds)) {
      err = cv_rmse(ridge);
      if (!std::isfinite(err)) continue;
    } else if (monitor.empty()) {
      // Nothing held out: prefer the middle of the grid.
      err = std::abs(std::log10(ridge) + 6.0);
    } else {
      err = std::sqrt((kv * alpha - yv).squaredNorm() / static_cast<double>(yv.size()));
    }
    if (err < best_err) {
      best_err = err;
      best_alpha = std::move(alpha);
      best_ridge = ridge;
    }
  }
  if (best_alpha.size() == 0) throw DomainError("kernel system is singular for every ridge value");
  // The infinite-ridge limit (y ≡ 0) competes too, so a fit never loses to predicting nothing.
  const double zero_err = use_cv ? std::sqrt(y.squaredNorm() / static_cast<double>(M))
                         : monitor.empty() ? std::numeric_limits<double>::infinity()
                                           : std::sqrt(yv.squaredNorm() / static_cast<double>(yv.size()));
  if (zero_err <= best_err) {
    best_err = zero_err;
    best_alpha.setZero();
    best_ridge = std::numeric_limits<double>::infinity();
  }

  auto model = std::make_unique<Krr>(std::move(centers), std::move(best_alpha), length, lw, best_ridge);
  if (stats) {
    double s = 0.0;
    for (const auto& t : train) {
      const double d = model->evaluate(std::span<const double>(t.x.data(), static_cast<std::size_t>(D)), {}) - t.y;
      s += d * d;
    }
    stats->epochs = 1;
    stats->train_rmse = std::sqrt(s / static_cast<double>(train.size()));
    stats->val_rmse = (monitor.empty() && !use_cv) ? stats->train_rmse : best_err;
  }
  return model;
}

// ---------------------------------------------------------------------------

DeltaRegressor::DeltaRegressor(std::unique_ptr<Regressor> base, std::unique_ptr<Regressor> correction)
    : base_(std::move(base)), correction_(std::move(correction)) {
  if (!base_ || !correction_ || base_->input_size() != correction_->input_size()) {
    throw ValidationError("delta model parts must share the input size");
  }
}

DeltaRegressor::DeltaRegressor(const DeltaRegressor& other)
    : base_(other.base_->clone()), correction_(other.correction_->clone()) {}

double DeltaRegressor::evaluate(std::span<const double> x, std::span<double> grad) const {
  if (grad.empty()) return base_->evaluate(x, {}) + correction_->evaluate(x, {});
  std::vector<double> g2(grad.size());
  const double y = base_->evaluate(x, grad) + correction_->evaluate(x, g2);
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g2[i];
  return y;
}

void DeltaRegressor::write(BinaryWriter& out) const {
  out.pod(static_cast<std::uint32_t>(RegressorKind::delta));
  base_->write(out);
  correction_->write(out);
}

}  // namespace fq::surrogate
