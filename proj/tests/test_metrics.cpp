#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <sstream>

#include "gridadv/error.hpp"
#include "gridadv/metrics.hpp"

using namespace gridadv;

namespace {

// Identity-like classifier over 2 features: logits = x.
Model identity_classifier() {
    return MlpModel{{2, {}, 2, 0.0}, {{Tensor::matrix({{1, 0}, {0, 1}}), Tensor::vector({0, 0})}}};
}

Dataset two_class(std::initializer_list<std::pair<double, double>> points,
                  std::initializer_list<std::size_t> labels) {
    Dataset ds{Tensor({points.size(), 2}), Tensor({labels.size(), 2}), {}};
    std::size_t i = 0;
    for (auto [a, b] : points) {
        ds.inputs.at(i, 0) = a;
        ds.inputs.at(i++, 1) = b;
    }
    i = 0;
    for (std::size_t l : labels) ds.targets.at(i++, l) = 1.0;
    return ds;
}

}  // namespace

TEST(Accuracy, Arithmetic) {
    const std::vector<std::size_t> pred{0, 1, 2, 2}, truth{0, 1, 1, 2};
    EXPECT_DOUBLE_EQ(accuracy(pred, truth), 75.0);
    EXPECT_DOUBLE_EQ(accuracy(truth, truth), 100.0);
}

TEST(Accuracy, ContractViolations) {
    const std::vector<std::size_t> a{0, 1}, b{0}, none;
    EXPECT_THROW(accuracy(a, b), ContractError);
    EXPECT_THROW(accuracy(none, none), ContractError);
}

TEST(Mape, Arithmetic) {
    const std::vector<double> star{110, 90}, ref{100, 100};
    const auto r = mape(star, ref);
    EXPECT_DOUBLE_EQ(r.percent, 10.0);
    EXPECT_EQ(r.used, 2u);
    EXPECT_EQ(r.skipped, 0u);
}

TEST(Mape, SkipsNearZeroReferences) {
    const std::vector<double> star{5, 1.5}, ref{0, 1};
    const auto r = mape(star, ref);
    EXPECT_DOUBLE_EQ(r.percent, 50.0);
    EXPECT_EQ(r.used, 1u);
    EXPECT_EQ(r.skipped, 1u);
}

TEST(Mape, AllBelowThresholdIsDegenerate) {
    const std::vector<double> star{1, 2}, ref{0, 1e-9};
    EXPECT_THROW(mape(star, ref), DegenerateInputError);
}

TEST(Mape, PropertiesIdentityAndScale) {
    RandomSource rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> ref(20), star(20);
        for (std::size_t i = 0; i < 20; ++i) {
            ref[i] = rng.uniform(1.0, 10.0) * (rng.uniform() < 0.5 ? -1 : 1);
            star[i] = ref[i] + rng.normal(0.0, 1.0);
        }
        EXPECT_EQ(mape(ref, ref).percent, 0.0);
        const double base = mape(star, ref).percent;
        EXPECT_GE(base, 0.0);
        // Scale invariance.
        std::vector<double> ref3(ref), star3(star);
        for (auto& v : ref3) v *= 3.0;
        for (auto& v : star3) v *= 3.0;
        EXPECT_NEAR(mape(star3, ref3).percent, base, 1e-9 * std::max(1.0, base));
    }
}

TEST(EvaluateMetric, AccuracyForClassification) {
    const Dataset test = two_class({{1, 0}, {0, 1}, {2, 1}, {0, 3}}, {0, 1, 1, 1});
    EXPECT_DOUBLE_EQ(evaluate_metric(identity_classifier(), test.inputs, test), 75.0);
}

TEST(EvaluateMetric, MapeInPhysicalUnits) {
    // f(x) = x on a scalar regressor; targets scaled by [100, 200].
    const Model reg = MlpModel{{1, {}, 1, 0.0}, {{Tensor::matrix({{1.0}}), Tensor::vector({0.0})}}};
    const Dataset test{Tensor::matrix({{0.6}, {0.4}}), Tensor::vector({0.5, 0.5}), {}};
    // Predictions 160 and 140 against 150: 1/15 relative error each.
    EXPECT_NEAR(evaluate_metric(reg, test.inputs, test, MinMax{100, 200}), 100.0 / 15.0, 1e-12);
    // Without scaling: 0.1/0.5 each.
    EXPECT_NEAR(evaluate_metric(reg, test.inputs, test), 20.0, 1e-12);
}

TEST(FeatureDeviation, OnlyGroupColumnsCount) {
    const Tensor clean = Tensor::matrix({{1, 10, 100}, {2, 20, 200}});
    Tensor adv = clean;
    adv.at(0, 1) = 11;   // 10% on column 1
    adv.at(1, 2) = 300;  // column 2 is outside the group
    const auto r = feature_deviation(adv, clean, {"g", {0, 1}}, nullptr);
    EXPECT_DOUBLE_EQ(r.percent, 2.5);
    EXPECT_EQ(r.used, 4u);
}

TEST(FeatureDeviation, UsesPhysicalScale) {
    const Tensor clean = Tensor::matrix({{0.5}});
    const Tensor adv = Tensor::matrix({{0.6}});
    const std::vector<MinMax> scale{{10.0, 20.0}};
    EXPECT_NEAR(feature_deviation(adv, clean, {"g", {0}}, &scale).percent, 100.0 / 15.0, 1e-12);
}

TEST(FeatureDeviation, BadColumnIsConfigError) {
    const Tensor t = Tensor::matrix({{1, 2}});
    EXPECT_THROW(feature_deviation(t, t, {"g", {2}}, nullptr), ConfigError);
}

class Sweep : public ::testing::Test {
protected:
    Model victim = identity_classifier();
    Dataset test = two_class({{1, 0}, {0, 1}, {0.25, 0.1}, {0.1, 0.25}}, {0, 1, 0, 1});

    // Pushes every input towards the wrong class by epsilon on both features.
    CraftFn craft = [this](const AttackSpec& spec, std::uint64_t) {
        Tensor adv = test.inputs;
        const auto labels = labels_of(test);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const double dir = labels[i] == 0 ? 1.0 : -1.0;
            adv.at(i, 0) -= dir * spec.epsilon * spec.gamma;
            adv.at(i, 1) += dir * spec.epsilon * spec.gamma;
        }
        return adv;
    };

    SweepConfig config() const {
        SweepConfig c;
        c.task = "toy";
        c.epsilons = {0.0, 0.1};
        c.gammas = {0.5, 1.0};
        c.seeds = {1, 2, 3};
        return c;
    }
};

TEST_F(Sweep, GridLayoutAndValues) {
    const SweepResult r = run_sweep(victim, craft, test, config());
    EXPECT_EQ(r.metric_name, "accuracy_percent");
    EXPECT_EQ(r.clean_metric, 100.0);
    ASSERT_EQ(r.cells.size(), 4u);
    EXPECT_EQ(r.at(0, 0).metric, 100.0);
    EXPECT_EQ(r.at(0, 1).metric, 100.0);
    // Near-boundary samples have margin 0.15: a 0.05 shift keeps them, 0.1 flips them.
    EXPECT_EQ(r.at(1, 0).metric, 100.0);
    EXPECT_EQ(r.at(1, 1).metric, 50.0);
    EXPECT_EQ(r.at(1, 0).epsilon, 0.1);
    EXPECT_EQ(r.at(1, 0).gamma, 0.5);
    EXPECT_EQ(r.at(1, 1).per_seed.size(), 3u);
}

TEST_F(Sweep, ZeroEpsilonRowEqualsClean) {
    const SweepResult r = run_sweep(victim, craft, test, config());
    for (std::size_t g = 0; g < 2; ++g) EXPECT_EQ(r.at(0, g).metric, r.clean_metric);
}

TEST_F(Sweep, ThreadCountDoesNotChangeResults) {
    SweepConfig a = config(), b = config();
    b.threads = 8;
    const SweepResult ra = run_sweep(victim, craft, test, a);
    const SweepResult rb = run_sweep(victim, craft, test, b);
    std::ostringstream sa, sb;
    write_sweep_csv(sa, ra);
    write_sweep_csv(sb, rb);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(sweep_to_json(ra, {}).dump(), sweep_to_json(rb, {}).dump());
}

TEST_F(Sweep, EveryCellAndSeedIsCrafted) {
    std::atomic<int> calls{0};
    CraftFn counting = [&](const AttackSpec& spec, std::uint64_t seed) {
        ++calls;
        return craft(spec, seed);
    };
    SweepConfig c = config();
    c.threads = 4;
    run_sweep(victim, counting, test, c);
    EXPECT_EQ(calls.load(), 12);
}

TEST_F(Sweep, CellErrorsCarryCoordinates) {
    CraftFn failing = [](const AttackSpec& spec, std::uint64_t) -> Tensor {
        if (spec.epsilon > 0.0) throw ShapeError("boom");
        return {};
    };
    SweepConfig c = config();
    c.epsilons = {0.1};
    c.gammas = {1.0};
    c.seeds = {7};
    try {
        run_sweep(victim, failing, test, c);
        FAIL();
    } catch (const Error& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("epsilon=0.1"), std::string::npos) << msg;
        EXPECT_NE(msg.find("seed=7"), std::string::npos) << msg;
        EXPECT_NE(msg.find("boom"), std::string::npos) << msg;
    }
}

TEST_F(Sweep, EmptyListsAreConfigErrors) {
    SweepConfig c = config();
    c.seeds.clear();
    EXPECT_THROW(run_sweep(victim, craft, test, c), ConfigError);
}

TEST_F(Sweep, MatrixLayout) {
    const SweepResult r = run_sweep(victim, craft, test, config());
    std::ostringstream out;
    write_sweep_matrix(out, r);
    std::istringstream in(out.str());
    std::string first;
    std::getline(in, first);
    EXPECT_EQ(first[0], '#');
    std::getline(in, first);
    EXPECT_EQ(first.rfind("2 ", 0), 0u) << first;
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) rows += !line.empty();
    EXPECT_EQ(rows, 2);
}
