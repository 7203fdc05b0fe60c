#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "gridadv/loss.hpp"
#include "gridadv/random.hpp"
#include "gridadv/tensor.hpp"

namespace gridadv {

enum class Mode { train, eval };

/// Fully connected layer computing y = x W + b for x[batch x in].
struct DenseLayer {
    Tensor weight;  // [in x out]
    Tensor bias;    // [out]

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct MlpArchitecture {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden;
    std::size_t classes = 0;
    /// Inverted-dropout rate applied after every hidden ReLU in train mode.
    double dropout = 0.1;

    friend bool operator==(const MlpArchitecture&, const MlpArchitecture&) = default;
};

struct RnnArchitecture {
    std::size_t features = 0;
    std::size_t hidden = 0;
    /// Widths of the ReLU readout layers applied to the last hidden state.
    /// A linear projection to a single output follows them.
    std::vector<std::size_t> readout;
    /// Memory length: the number of timesteps consumed per prediction.
    std::size_t steps = 1;

    friend bool operator==(const RnnArchitecture&, const RnnArchitecture&) = default;
};

/// Feed-forward classifier: ReLU hidden layers, identity output (logits).
struct MlpModel {
    MlpArchitecture arch;
    std::vector<DenseLayer> layers;

    friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

/// Elman recurrent regressor with weights shared across timesteps:
///
///   h_0     = 0
///   h_{t+1} = tanh(W_in x_t + W_hh h_t + b)
///   y       = readout(h_T)
struct RnnModel {
    RnnArchitecture arch;
    Tensor input_weights;   // [H x F]
    Tensor hidden_weights;  // [H x H]
    Tensor hidden_bias;     // [H]
    std::vector<DenseLayer> readout;

    friend bool operator==(const RnnModel&, const RnnModel&) = default;
};

using Model = std::variant<MlpModel, RnnModel>;
using Architecture = std::variant<MlpArchitecture, RnnArchitecture>;

/// Everything recorded by a forward pass that the backward pass needs.
struct ForwardCache {
    Tensor input;
    /// Pre-activations of the dense stack (MLP layers or RNN readout).
    std::vector<Tensor> pre;
    /// Outputs of each hidden dense layer after ReLU and dropout.
    std::vector<Tensor> post;
    /// Dropout multipliers (0 or 1/(1-p)); empty in eval mode.
    std::vector<Tensor> masks;
    /// RNN hidden states h_0..h_T, each [batch x H].
    std::vector<Tensor> hidden_states;
    Tensor output;
    std::uint64_t parameter_digest = 0;
};

/// Parameter gradients in the order of parameters() plus the input gradient.
struct Gradients {
    std::vector<Tensor> params;
    Tensor input;
};

/// Mutable views of every parameter tensor.
///
/// MLP order: W_0, b_0, W_1, b_1, ...
/// RNN order: W_in, W_hh, b, then readout W_0, b_0, W_1, b_1, ...
std::vector<Tensor*> parameters(MlpModel& model);
std::vector<Tensor*> parameters(RnnModel& model);
std::vector<const Tensor*> parameters(const MlpModel& model);
std::vector<const Tensor*> parameters(const RnnModel& model);
std::vector<const Tensor*> parameters(const Model& model);
std::vector<Tensor*> parameters(Model& model);

std::size_t parameter_count(const Model& model);

/// Hash over parameter bit patterns, used to tie caches to the model state.
std::uint64_t parameter_digest(const MlpModel& model);
std::uint64_t parameter_digest(const RnnModel& model);
std::uint64_t parameter_digest(const Model& model);

void validate(const MlpArchitecture& arch);
void validate(const RnnArchitecture& arch);

/// Glorot-uniform weights, zero biases.
MlpModel init_params(const MlpArchitecture& arch, RandomSource& rng);
RnnModel init_params(const RnnArchitecture& arch, RandomSource& rng);
Model init_model(const Architecture& arch, RandomSource& rng);

Architecture architecture_of(const Model& model);

/// x[batch x F] -> logits[batch x C]. Train mode draws dropout masks from `rng`,
/// which must then be non-null.
Tensor mlp_forward(const MlpModel& model, const Tensor& x, Mode mode, RandomSource* rng,
                   ForwardCache& cache);
Gradients mlp_backward(const MlpModel& model, const ForwardCache& cache, const Tensor& dlogits);

/// x[T x F] (one sequence) or x[batch x T x F] -> predictions[batch].
Tensor rnn_forward(const RnnModel& model, const Tensor& x, Mode mode, RandomSource* rng,
                   ForwardCache& cache);
Gradients rnn_backward(const RnnModel& model, const ForwardCache& cache, const Tensor& dy);

Tensor forward(const Model& model, const Tensor& x, Mode mode, RandomSource* rng,
               ForwardCache& cache);
Gradients backward(const Model& model, const ForwardCache& cache, const Tensor& dout);

/// Eval-mode output without keeping the cache.
Tensor predict(const Model& model, const Tensor& x);

LossKind default_loss(const Model& model);

struct LossAndGradients {
    double loss = 0.0;
    Gradients grads;
};

LossAndGradients loss_and_gradients(const Model& model, const Tensor& x, const Tensor& y,
                                    LossKind loss, Mode mode = Mode::eval,
                                    RandomSource* rng = nullptr);

/// Eval-mode loss only.
double evaluate_loss(const Model& model, const Tensor& x, const Tensor& y, LossKind loss);

/// Max over every parameter and input coordinate of
/// |analytic - numeric| / max(1, |analytic|), numeric by central differences.
double grad_check(const Model& model, const Tensor& x, const Tensor& y, LossKind loss,
                  double step = 1e-5);

}  // namespace gridadv
