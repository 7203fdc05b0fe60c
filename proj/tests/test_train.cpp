#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "gridadv/error.hpp"
#include "gridadv/metrics.hpp"
#include "gridadv/train.hpp"

using namespace gridadv;

namespace {

// Two classes split by x0 + x1 > 0 with a margin, 20 points.
Dataset separable_toy() {
    RandomSource rng(10);
    Dataset ds{Tensor({20, 2}), Tensor({20, 2}), {"neg", "pos"}};
    for (std::size_t i = 0; i < 20; ++i) {
        const bool pos = i % 2 == 0;
        const double a = rng.uniform(0.5, 2.0), b = rng.uniform(-1.0, 1.0);
        const double s = pos ? 1.0 : -1.0;
        ds.inputs.at(i, 0) = s * a + b * 0.3;
        ds.inputs.at(i, 1) = s * a - b * 0.3;
        ds.targets.at(i, pos ? 1 : 0) = 1.0;
    }
    return ds;
}

Dataset indexed(std::size_t n) {
    Dataset ds{Tensor({n, 1}), Tensor({n, 2}), {}};
    for (std::size_t i = 0; i < n; ++i) {
        ds.inputs[i] = static_cast<double>(i);
        ds.targets.at(i, i % 2) = 1.0;
    }
    return ds;
}

}  // namespace

TEST(SgdStep, Arithmetic) {
    Model m = MlpModel{{1, {}, 1, 0.0}, {{Tensor::matrix({{1.0}}), Tensor::vector({0.0})}}};
    Gradients g{{Tensor::matrix({{0.5}}), Tensor::vector({0.0})}, {}};
    sgd_step(m, g, 0.1);
    EXPECT_DOUBLE_EQ(std::get<MlpModel>(m).layers[0].weight[0], 0.95);
}

TEST(SgdStep, ZeroRateOrZeroGradientIsIdentity) {
    RandomSource rng(1);
    const Model before = init_params(MlpArchitecture{3, {4}, 2, 0.0}, rng);
    Model m = before;
    const auto r = loss_and_gradients(m, Tensor({2, 3}, 0.5), Tensor::matrix({{1, 0}, {0, 1}}),
                                      LossKind::cross_entropy);
    sgd_step(m, r.grads, 0.0);
    EXPECT_EQ(m, before);
    Gradients zero = r.grads;
    for (auto& p : zero.params) std::fill(p.data().begin(), p.data().end(), 0.0);
    sgd_step(m, zero, 0.5);
    EXPECT_EQ(m, before);
}

TEST(SgdStep, ShapeMismatchIsContractError) {
    RandomSource rng(1);
    Model m = init_params(MlpArchitecture{3, {4}, 2, 0.0}, rng);
    EXPECT_THROW(sgd_step(m, Gradients{{Tensor({1})}, {}}, 0.1), ContractError);
}

TEST(SgdStep, SmallStepDoesNotIncreaseBatchLoss) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        RandomSource rng(seed);
        Model m = init_params(MlpArchitecture{5, {6}, 3, 0.0}, rng);
        Tensor x({4, 5});
        for (double& v : x.data()) v = rng.uniform(-1, 1);
        Tensor y({4, 3});
        for (std::size_t r = 0; r < 4; ++r) y.at(r, rng.below(3)) = 1.0;
        const auto before = loss_and_gradients(m, x, y, LossKind::cross_entropy);
        sgd_step(m, before.grads, 1e-4);
        EXPECT_LE(evaluate_loss(m, x, y, LossKind::cross_entropy), before.loss + 1e-9);
    }
}

TEST(Fit, ZeroEpochsLeavesModelUnchanged) {
    RandomSource rng(2);
    const Model before = init_params(MlpArchitecture{2, {4}, 2, 0.1}, rng);
    Model m = before;
    const auto history = fit(m, separable_toy(), Hyperparams{0.1, 4, 0, LossKind::cross_entropy, 1});
    EXPECT_EQ(m, before);
    EXPECT_TRUE(history.epoch_loss.empty());
}

TEST(Fit, SeparableToyReachesFullTrainingAccuracy) {
    const Dataset ds = separable_toy();
    RandomSource rng(3);
    Model m = init_params(MlpArchitecture{2, {8}, 2, 0.0}, rng);
    const auto history = fit(m, ds, Hyperparams{0.1, 4, 200, LossKind::cross_entropy, 4});
    EXPECT_EQ(history.epoch_loss.size(), 200u);
    EXPECT_DOUBLE_EQ(accuracy(argmax_rows(predict(m, ds.inputs)), labels_of(ds)), 100.0);
}

TEST(Fit, DeterministicGivenSeed) {
    const Dataset ds = separable_toy();
    auto run = [&] {
        RandomSource rng(5);
        Model m = init_params(MlpArchitecture{2, {8}, 2, 0.2}, rng);
        fit(m, ds, Hyperparams{0.05, 3, 20, LossKind::cross_entropy, 6});
        return m;
    };
    EXPECT_EQ(run(), run());
}

TEST(Fit, EmptyDatasetIsConfigError) {
    RandomSource rng(5);
    Model m = init_params(MlpArchitecture{2, {8}, 2, 0.0}, rng);
    const Dataset empty{Tensor({0, 2}), Tensor({0, 2}), {}};
    EXPECT_THROW(fit(m, empty, Hyperparams{}), ConfigError);
}

TEST(Fit, DivergenceIsTrainingError) {
    RandomSource rng(5);
    Model m = init_params(RnnArchitecture{2, 4, {4}, 3}, rng);
    Dataset ds{Tensor({4, 3, 2}, 1e150), Tensor({4}, 1e150), {}};
    EXPECT_THROW(fit(m, ds, Hyperparams{10.0, 2, 5, LossKind::mse, 1}), TrainingError);
}

TEST(Hyperparams, Validation) {
    EXPECT_THROW(validate(Hyperparams{0.0, 32, 1, LossKind::mse, 0}), ConfigError);
    EXPECT_THROW(validate(Hyperparams{0.1, 0, 1, LossKind::mse, 0}), ConfigError);
    EXPECT_NO_THROW(validate(Hyperparams{0.1, 1, 0, LossKind::mse, 0}));
}

TEST(History, CsvRows) {
    TrainHistory h{{0.5, 0.25}, {}};
    std::ostringstream out;
    write_history_csv(out, h);
    EXPECT_EQ(out.str(), "epoch,loss\n0,0.5\n1,0.25\n");
}

TEST(Split, FullYearSizes) {
    RandomSource rng(1);
    const auto [train, test] = split_dataset(indexed(800), 0.25, rng);
    EXPECT_EQ(train.size(), 600u);
    EXPECT_EQ(test.size(), 200u);
}

TEST(Split, DeterministicGivenSeed) {
    RandomSource a(9), b(9);
    EXPECT_EQ(split_dataset(indexed(50), 0.3, a), split_dataset(indexed(50), 0.3, b));
}

TEST(Split, IsPartitionForManySizes) {
    RandomSource rng(2);
    for (std::size_t n : {2u, 3u, 10u, 99u, 800u}) {
        for (double f : {0.1, 0.25, 1.0 / 6.0, 0.5, 0.9}) {
            const auto [train_idx, test_idx] = split_indices(n, f, rng);
            EXPECT_EQ(test_idx.size(), static_cast<std::size_t>(std::floor(n * f + 1e-9)));
            std::set<std::size_t> all(train_idx.begin(), train_idx.end());
            all.insert(test_idx.begin(), test_idx.end());
            EXPECT_EQ(all.size(), n);
            EXPECT_EQ(train_idx.size() + test_idx.size(), n);
            EXPECT_EQ(*all.rbegin(), n - 1);
        }
    }
}

TEST(Split, FractionOutOfRange) {
    RandomSource rng(2);
    EXPECT_THROW(split_dataset(indexed(10), 0.0, rng), ConfigError);
    EXPECT_THROW(split_dataset(indexed(10), 1.0, rng), ConfigError);
}

TEST(Dataset, ValidateRejectsBadOneHot) {
    Dataset ds = indexed(4);
    ds.targets.at(0, 1) = 1.0;
    EXPECT_THROW(validate(ds), ContractError);
    Dataset mismatch{Tensor({3, 1}), Tensor({2, 2}), {}};
    EXPECT_THROW(validate(mismatch), ContractError);
}

TEST(TrainModel, MatchesManualInitAndFit) {
    const Dataset ds = separable_toy();
    const Architecture arch = MlpArchitecture{2, {4}, 2, 0.1};
    const Hyperparams hyper{0.05, 4, 10, LossKind::cross_entropy, 31};
    RandomSource init = RandomSource(31).child("init");
    Model manual = init_model(arch, init);
    Hyperparams h = hyper;
    h.seed = derive_seed(31, "fit");
    fit(manual, ds, h);
    EXPECT_EQ(train_model(arch, ds, hyper).model, manual);
}
