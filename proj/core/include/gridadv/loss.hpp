#pragma once

#include <string_view>

#include "gridadv/tensor.hpp"

namespace gridadv {

enum class LossKind { cross_entropy, mse };

std::string_view to_string(LossKind kind);
LossKind loss_kind_from_string(std::string_view name);

/// Mean loss over the batch and its gradient with respect to the model output.
struct LossResult {
    double loss = 0.0;
    Tensor grad;
};

/// Mean over rows of -log softmax(logits)[true class]; grad = (softmax - y) / m.
/// `onehot` rows must each hold exactly one 1 and zeros elsewhere.
LossResult cross_entropy(const Tensor& logits, const Tensor& onehot);

/// Mean of (pred - y)^2; grad = 2 (pred - y) / m.
LossResult mse(const Tensor& pred, const Tensor& y);

LossResult compute_loss(LossKind kind, const Tensor& output, const Tensor& target);

}  // namespace gridadv
