#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gridadv/loss.hpp"
#include "gridadv/nn.hpp"
#include "gridadv/random.hpp"
#include "gridadv/tensor.hpp"

namespace gridadv {

struct Hyperparams {
    double learning_rate = 0.05;
    std::size_t batch_size = 32;
    std::size_t epochs = 150;
    LossKind loss = LossKind::cross_entropy;
    std::uint64_t seed = 0;
};

void validate(const Hyperparams& hyper);

/// Paired samples. `inputs` is [N x F] for vectors or [N x T x F] for
/// sequences; `targets` is [N x C] one-hot or [N] scalar.
struct Dataset {
    Tensor inputs;
    Tensor targets;
    std::vector<std::string> label_names;

    std::size_t size() const { return inputs.rank() ? inputs.dim(0) : 0; }
    bool is_classification() const { return targets.rank() == 2; }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Throws ContractError on a count mismatch or a non one-hot target row.
void validate(const Dataset& ds);

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices);

/// Class index of every one-hot target row.
std::vector<std::size_t> labels_of(const Dataset& ds);

struct TrainHistory {
    std::vector<double> epoch_loss;
    std::map<std::string, double> final_metrics;
};

void write_history_csv(std::ostream& out, const TrainHistory& history);

/// p <- p - lr * g for every parameter.
void sgd_step(Model& model, const Gradients& grads, double learning_rate);

/// Mini-batch SGD: reshuffle every epoch, then forward (train mode), loss,
/// backward and sgd_step per batch. Deterministic in hyper.seed.
/// Throws TrainingError as soon as a batch loss is not finite.
TrainHistory fit(Model& model, const Dataset& train, const Hyperparams& hyper);

struct TrainedModel {
    Model model;
    TrainHistory history;
};

/// Initialises from the "init" child of hyper.seed, then fits with a seed
/// derived from hyper.seed and "fit".
TrainedModel train_model(const Architecture& arch, const Dataset& train, const Hyperparams& hyper);

/// Shuffle with seeded_shuffle, then take floor(N * test_fraction) samples as
/// the test split and the rest as the train split. Returns {train, test}.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double test_fraction,
                                          RandomSource& rng);

/// Index form of split_dataset: {train indices, test indices}.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double test_fraction, RandomSource& rng);

}  // namespace gridadv
