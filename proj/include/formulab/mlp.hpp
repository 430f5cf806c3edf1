#ifndef FORMULAB_MLP_HPP_
#define FORMULAB_MLP_HPP_

#include <Eigen/Dense>
#include <vector>

#include "formulab/rng.hpp"

namespace formulab {

// Fully-connected net, tanh hidden activations, linear head. The class holds
// only the layer shapes; parameters live in a caller-owned flat vector
// laid out [W0, b0, W1, b1, ...] (column-major weights), so optimizers and
// finite differencing can treat the whole model as one parameter array.
class Mlp {
 public:
  explicit Mlp(std::vector<int> layer_sizes);

  int param_count() const { return param_count_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }

  // Orthogonal init (QR of a Gaussian matrix, sign-fixed), biases zero.
  // hidden_gain on all but the last layer, out_gain on the head.
  void init_orthogonal(Eigen::Ref<Eigen::VectorXd> theta, Rng& rng,
                       double hidden_gain, double out_gain) const;

  struct Cache {
    // activations[0] is the input batch, activations[l] the output of
    // layer l-1 after its nonlinearity (n x dim each).
    std::vector<Eigen::MatrixXd> activations;
  };

  // x is (n x input_dim); returns (n x output_dim).
  Eigen::MatrixXd forward(const Eigen::Ref<const Eigen::VectorXd>& theta,
                          const Eigen::Ref<const Eigen::MatrixXd>& x,
                          Cache* cache = nullptr) const;

  // Accumulates d loss / d theta into `grad` given d loss / d output.
  void backward(const Eigen::Ref<const Eigen::VectorXd>& theta,
                const Cache& cache, const Eigen::MatrixXd& d_output,
                Eigen::Ref<Eigen::VectorXd> grad) const;

  // Spectral-norm product upper bound on the net's Lipschitz constant
  // (tanh is 1-Lipschitz).
  double lipschitz_bound(const Eigen::Ref<const Eigen::VectorXd>& theta) const;

 private:
  int weight_offset(int layer) const { return offsets_[layer]; }
  int bias_offset(int layer) const;
  int rows(int layer) const { return sizes_[layer + 1]; }
  int cols(int layer) const { return sizes_[layer]; }

  std::vector<int> sizes_;
  std::vector<int> offsets_;  // start of each layer's [W, b] block
  int param_count_ = 0;
};

// Plain Adam over a flat parameter vector.
class Adam {
 public:
  Adam(int param_count, double learning_rate, double beta1 = 0.9,
       double beta2 = 0.999, double epsilon = 1e-8);

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

  long steps_taken() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  Eigen::VectorXd m_, v_;
};

}  // namespace formulab

#endif  // FORMULAB_MLP_HPP_
