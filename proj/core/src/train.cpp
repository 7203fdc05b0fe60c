#include "gridadv/train.hpp"

#include <cmath>
#include <ostream>

#include "gridadv/csv.hpp"
#include "gridadv/error.hpp"

namespace gridadv {

void validate(const Hyperparams& hyper) {
    if (!(hyper.learning_rate > 0.0) || !std::isfinite(hyper.learning_rate)) {
        throw ConfigError("learning rate must be positive");
    }
    if (hyper.batch_size == 0) throw ConfigError("batch size must be at least 1");
}

void validate(const Dataset& ds) {
    if (ds.inputs.rank() == 0 || ds.targets.rank() == 0) {
        throw ContractError("dataset tensors must have a sample axis");
    }
    if (ds.inputs.dim(0) != ds.targets.dim(0)) {
        throw ContractError("dataset has " + std::to_string(ds.inputs.dim(0)) + " inputs but " +
                            std::to_string(ds.targets.dim(0)) + " targets");
    }
    if (ds.is_classification()) labels_of(ds);
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
    return {take_rows(ds.inputs, indices), take_rows(ds.targets, indices), ds.label_names};
}

std::vector<std::size_t> labels_of(const Dataset& ds) {
    if (!ds.is_classification()) throw ContractError("labels_of: targets are not one-hot rows");
    std::vector<std::size_t> out(ds.targets.dim(0));
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto row = ds.targets.row(i);
        std::size_t ones = 0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (row[j] == 1.0) {
                ++ones;
                out[i] = j;
            } else if (row[j] != 0.0) {
                ones = 2;
            }
        }
        if (ones != 1) {
            throw ContractError("target row " + std::to_string(i) + " is not one-hot");
        }
    }
    return out;
}

void write_history_csv(std::ostream& out, const TrainHistory& history) {
    out << "epoch,loss\n";
    for (std::size_t e = 0; e < history.epoch_loss.size(); ++e) {
        out << e << ',' << format_double(history.epoch_loss[e]) << '\n';
    }
}

void sgd_step(Model& model, const Gradients& grads, double learning_rate) {
    auto params = parameters(model);
    if (grads.params.size() != params.size()) {
        throw ContractError("sgd_step: " + std::to_string(grads.params.size()) +
                            " gradient tensors for " + std::to_string(params.size()) +
                            " parameters");
    }
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& t = *params[p];
        const Tensor& g = grads.params[p];
        if (t.shape() != g.shape()) {
            throw ContractError("sgd_step: gradient " + shape_string(g.shape()) +
                                " for parameter " + shape_string(t.shape()));
        }
        double* pt = t.data().data();
        const double* pg = g.data().data();
        for (std::size_t i = 0; i < t.size(); ++i) pt[i] -= learning_rate * pg[i];
    }
}

TrainHistory fit(Model& model, const Dataset& train, const Hyperparams& hyper) {
    validate(hyper);
    validate(train);
    const std::size_t n = train.size();
    if (n == 0) throw ConfigError("cannot fit on an empty dataset");

    RandomSource rng(hyper.seed);
    RandomSource shuffle_rng = rng.child("shuffle");
    RandomSource dropout_rng = rng.child("dropout");

    TrainHistory history;
    history.epoch_loss.reserve(hyper.epochs);
    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        const auto order = seeded_shuffle(n, shuffle_rng);
        double total = 0.0;
        for (std::size_t start = 0; start < n; start += hyper.batch_size) {
            const std::size_t stop = std::min(n, start + hyper.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, stop - start);
            const Tensor x = take_rows(train.inputs, idx);
            const Tensor y = take_rows(train.targets, idx);
            auto step = loss_and_gradients(model, x, y, hyper.loss, Mode::train, &dropout_rng);
            if (!std::isfinite(step.loss)) {
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                                    ", batch starting at " + std::to_string(start));
            }
            total += step.loss * static_cast<double>(idx.size());
            sgd_step(model, step.grads, hyper.learning_rate);
        }
        history.epoch_loss.push_back(total / static_cast<double>(n));
    }
    return history;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double test_fraction, RandomSource& rng) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("test fraction must lie strictly between 0 and 1");
    }
    const auto perm = seeded_shuffle(n, rng);
    const auto n_test =
        static_cast<std::size_t>(std::floor(static_cast<double>(n) * test_fraction + 1e-9));
    std::vector<std::size_t> test(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
    return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double test_fraction,
                                          RandomSource& rng) {
    const auto [train, test] = split_indices(ds.size(), test_fraction, rng);
    return {subset(ds, train), subset(ds, test)};
}

TrainedModel train_model(const Architecture& arch, const Dataset& train, const Hyperparams& hyper) {
    RandomSource init_rng = RandomSource(hyper.seed).child("init");
    TrainedModel out{init_model(arch, init_rng), {}};
    Hyperparams fit_hyper = hyper;
    fit_hyper.seed = derive_seed(hyper.seed, "fit");
    out.history = fit(out.model, train, fit_hyper);
    return out;
}

}  // namespace gridadv
