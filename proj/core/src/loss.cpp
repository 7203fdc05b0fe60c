#include "gridadv/loss.hpp"

#include <cmath>
#include <string>

#include "gridadv/error.hpp"

namespace gridadv {

std::string_view to_string(LossKind kind) {
    return kind == LossKind::cross_entropy ? "cross-entropy" : "mse";
}

LossKind loss_kind_from_string(std::string_view name) {
    if (name == "cross-entropy" || name == "cross_entropy") return LossKind::cross_entropy;
    if (name == "mse") return LossKind::mse;
    throw ConfigError("unknown loss '" + std::string(name) + "'");
}

LossResult cross_entropy(const Tensor& logits, const Tensor& onehot) {
    require_same_shape(logits, onehot, "cross_entropy");
    if (logits.rank() != 2) throw ShapeError("cross_entropy: logits must be [m x C]");
    const std::size_t m = logits.dim(0), c = logits.dim(1);
    if (m == 0) throw ContractError("cross_entropy: empty batch");

    LossResult out{0.0, softmax_rows(logits)};
    for (std::size_t i = 0; i < m; ++i) {
        auto y = onehot.row(i);
        auto lr = logits.row(i);
        std::size_t ones = 0, label = 0;
        for (std::size_t j = 0; j < c; ++j) {
            if (y[j] == 1.0) {
                ++ones;
                label = j;
            } else if (y[j] != 0.0) {
                ones = 2;
                break;
            }
        }
        if (ones != 1) {
            throw ContractError("cross_entropy: target row " + std::to_string(i) +
                                " is not one-hot");
        }
        // log-softmax via log-sum-exp keeps confident predictions exact.
        double mx = lr[0];
        for (double v : lr) mx = std::max(mx, v);
        double sum = 0.0;
        for (double v : lr) sum += std::exp(v - mx);
        out.loss += (mx + std::log(sum)) - lr[label];

        auto g = out.grad.row(i);
        for (std::size_t j = 0; j < c; ++j) g[j] = (g[j] - y[j]) / static_cast<double>(m);
    }
    out.loss /= static_cast<double>(m);
    return out;
}

LossResult mse(const Tensor& pred, const Tensor& y) {
    if (pred.size() != y.size() || pred.rank() != y.rank()) {
        throw ShapeError("mse: shape mismatch " + shape_string(pred.shape()) + " vs " +
                         shape_string(y.shape()));
    }
    const std::size_t m = pred.size();
    if (m == 0) throw ContractError("mse: empty batch");
    LossResult out{0.0, Tensor(pred.shape())};
    for (std::size_t i = 0; i < m; ++i) {
        const double d = pred[i] - y[i];
        out.loss += d * d;
        out.grad[i] = 2.0 * d / static_cast<double>(m);
    }
    out.loss /= static_cast<double>(m);
    return out;
}

LossResult compute_loss(LossKind kind, const Tensor& output, const Tensor& target) {
    return kind == LossKind::cross_entropy ? cross_entropy(output, target) : mse(output, target);
}

}  // namespace gridadv
