#include "formulab/mlp.hpp"

#include <cmath>

#include "formulab/errors.hpp"

namespace formulab {

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw ConfigError("Mlp needs at least two layer sizes");
  for (int s : sizes_) {
    if (s < 1) throw ConfigError("Mlp layer sizes must be positive");
  }
  for (int l = 0; l < num_layers(); ++l) {
    offsets_.push_back(param_count_);
    param_count_ += rows(l) * cols(l) + rows(l);
  }
}

int Mlp::bias_offset(int layer) const {
  return offsets_[layer] + rows(layer) * cols(layer);
}

namespace {

// Orthogonal matrix from the QR decomposition of a Gaussian draw, columns
// sign-fixed by the R diagonal so the result is unique.
Eigen::MatrixXd orthogonal_matrix(int out, int in, Rng& rng) {
  const int r = std::max(out, in);
  const int c = std::min(out, in);
  Eigen::MatrixXd g(r, c);
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < r; ++i) g(i, j) = rng.gaussian();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(r, c);
  const Eigen::VectorXd diag = qr.matrixQR().diagonal();
  for (int j = 0; j < c; ++j) {
    if (diag(j) < 0.0) q.col(j) = -q.col(j);
  }
  if (out < in) return q.transpose();
  return q;
}

}  // namespace

void Mlp::init_orthogonal(Eigen::Ref<Eigen::VectorXd> theta, Rng& rng,
                          double hidden_gain, double out_gain) const {
  if (theta.size() != param_count_) {
    throw ContractViolation("theta size mismatch in init_orthogonal");
  }
  for (int l = 0; l < num_layers(); ++l) {
    const double gain = (l == num_layers() - 1) ? out_gain : hidden_gain;
    Eigen::Map<Eigen::MatrixXd> w(theta.data() + weight_offset(l), rows(l),
                                  cols(l));
    w = gain * orthogonal_matrix(rows(l), cols(l), rng);
    theta.segment(bias_offset(l), rows(l)).setZero();
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::Ref<const Eigen::VectorXd>& theta,
                             const Eigen::Ref<const Eigen::MatrixXd>& x,
                             Cache* cache) const {
  if (theta.size() != param_count_) {
    throw ContractViolation("theta size mismatch in forward");
  }
  if (x.cols() != input_dim()) {
    throw ContractViolation("observation dimension mismatch in forward");
  }
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(x);
  }
  Eigen::MatrixXd a = x;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::Map<const Eigen::MatrixXd> w(theta.data() + weight_offset(l),
                                        rows(l), cols(l));
    Eigen::Map<const Eigen::VectorXd> b(theta.data() + bias_offset(l), rows(l));
    Eigen::MatrixXd z = a * w.transpose();
    z.rowwise() += b.transpose();
    if (l < num_layers() - 1) {
      a = z.array().tanh().matrix();
    } else {
      a = std::move(z);
    }
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

void Mlp::backward(const Eigen::Ref<const Eigen::VectorXd>& theta,
                   const Cache& cache, const Eigen::MatrixXd& d_output,
                   Eigen::Ref<Eigen::VectorXd> grad) const {
  if (grad.size() != param_count_) {
    throw ContractViolation("grad size mismatch in backward");
  }
  Eigen::MatrixXd dz = d_output;  // head is linear
  for (int l = num_layers() - 1; l >= 0; --l) {
    const Eigen::MatrixXd& input = cache.activations[l];
    Eigen::Map<const Eigen::MatrixXd> w(theta.data() + weight_offset(l),
                                        rows(l), cols(l));
    Eigen::Map<Eigen::MatrixXd> dw(grad.data() + weight_offset(l), rows(l),
                                   cols(l));
    dw.noalias() += dz.transpose() * input;
    grad.segment(bias_offset(l), rows(l)) += dz.colwise().sum();
    if (l > 0) {
      // activations[l] is this layer's input, i.e. tanh output of layer l-1
      const Eigen::MatrixXd& a = cache.activations[l];
      const Eigen::MatrixXd da = dz * w;
      dz = (da.array() * (1.0 - a.array().square())).matrix();
    }
  }
}

double Mlp::lipschitz_bound(
    const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  double bound = 1.0;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::Map<const Eigen::MatrixXd> w(theta.data() + weight_offset(l),
                                        rows(l), cols(l));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(w);
    bound *= svd.singularValues()(0);
  }
  return bound;
}

Adam::Adam(int param_count, double learning_rate, double beta1, double beta2,
           double epsilon)
    : lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(epsilon),
      m_(Eigen::VectorXd::Zero(param_count)),
      v_(Eigen::VectorXd::Zero(param_count)) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw ContractViolation("Adam size mismatch");
  }
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_.array() = beta2_ * v_.array() + (1.0 - beta2_) * grad.array().square();
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -=
      lr_ * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
}

}  // namespace formulab
