#ifndef CONLE_CORE_MLP_HPP
#define CONLE_CORE_MLP_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/matrix.hpp"

namespace conle {

enum class OutputHead { linear, softmax };

/// Feed-forward network with LeakyReLU hidden layers. weights[i] maps layer i
/// to layer i+1 and has shape layer_dims[i+1] x layer_dims[i].
struct Mlp {
    std::vector<std::size_t> layer_dims;
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
    double leaky_slope = 0.01;
    OutputHead head = OutputHead::linear;

    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t output_dim() const { return layer_dims.back(); }
    std::size_t num_layers() const { return weights.size(); }
};

/// Everything backward needs: act[0] is the input batch, act[i] the output of
/// layer i, pre[i] the pre-activation of layer i.
struct ForwardTrace {
    std::vector<Matrix> pre;
    std::vector<Matrix> act;

    const Matrix& outputs() const { return act.back(); }
};

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
};

inline double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }

/// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases,
/// deterministic from the seed.
Mlp init_mlp(const std::vector<std::size_t>& layer_dims, double slope, OutputHead head,
             std::uint64_t seed);

ForwardTrace forward(const Mlp& mlp, const Matrix& batch);

/// Exact reverse-mode gradients of whatever scalar loss produced
/// `output_grad` = dloss/doutputs. The softmax head Jacobian is applied
/// analytically; the LeakyReLU subgradient at 0 takes the positive branch.
/// When `input_grad` is non-null it receives dloss/dinputs.
Gradients backward(const Mlp& mlp, const ForwardTrace& trace, const Matrix& output_grad,
                   Matrix* input_grad = nullptr);

/// p <- p - lr * g. Throws Error{diverged} on non-finite gradients.
void sgd_step(Mlp& mlp, const Gradients& grads, double lr);

void accumulate(Gradients& into, const Gradients& other);

/// Scalar loss of the network outputs. Returns the loss value; when grad_out
/// is non-null it must be filled with dloss/doutputs (same shape as outputs).
using ScalarLoss = std::function<double(const Matrix& outputs, Matrix* grad_out)>;

/// Central-difference check of backward against the supplied loss. Returns
/// max over parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double grad_check(const Mlp& mlp, const ScalarLoss& loss, const Matrix& batch, double h);

/// Checkpoint round trip. Parameters are stored as row-major JSON numbers in
/// shortest exact form, so save followed by load is bit-exact.
std::string checkpoint_to_json(const Mlp& mlp);
Mlp checkpoint_from_json(const std::string& text);
void save_checkpoint(const Mlp& mlp, const std::string& path);
Mlp load_checkpoint(const std::string& path);

}  // namespace conle

#endif
