#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gridadv/attack.hpp"
#include "gridadv/error.hpp"
#include "gridadv/random.hpp"

using namespace gridadv;

namespace {

AttackSpec spec_of(double eps, double gamma, Kernel kernel = Kernel::gradient_sign) {
    AttackSpec s;
    s.epsilon = eps;
    s.gamma = gamma;
    s.kernel = kernel;
    return s;
}

Tensor random_tensor(Shape shape, RandomSource& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

// Small classification task: class = argmax of the first 3 features.
Dataset toy_classification(std::size_t n, std::uint64_t seed) {
    RandomSource rng(seed);
    Dataset ds{random_tensor({n, 6}, rng), Tensor({n, 3}), {}};
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < 3; ++c) {
            if (ds.inputs.at(i, c) > ds.inputs.at(i, best)) best = c;
        }
        ds.targets.at(i, best) = 1.0;
    }
    return ds;
}

std::size_t changed(const Tensor& a, const Tensor& b) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) n += a[i] != b[i];
    return n;
}

}  // namespace

TEST(InputGradient, ScalarHandDifferentiation) {
    const Model m = MlpModel{{1, {}, 1, 0.0}, {{Tensor::matrix({{2.0}}), Tensor::vector({0.0})}}};
    const Tensor g = input_gradient(m, Tensor::vector({1.0}), Tensor::vector({0.0}), LossKind::mse);
    EXPECT_DOUBLE_EQ(g[0], 8.0);
}

TEST(InputGradient, StationaryPointHasZeroGradient) {
    const Model m = MlpModel{{1, {}, 1, 0.0}, {{Tensor::matrix({{2.0}}), Tensor::vector({0.0})}}};
    const Tensor g = input_gradient(m, Tensor::vector({0.0}), Tensor::vector({0.0}), LossKind::mse);
    EXPECT_EQ(g[0], 0.0);
}

TEST(InputGradient, MatchesFiniteDifferencesForBothFamilies) {
    RandomSource rng(4);
    const Model mlp = init_params(MlpArchitecture{6, {8}, 3, 0.1}, rng);
    const Model rnn = init_params(RnnArchitecture{3, 4, {5}, 4}, rng);
    const Tensor xm = random_tensor({6}, rng), ym = Tensor::vector({0, 1, 0});
    const Tensor xr = random_tensor({4, 3}, rng), yr = Tensor::vector({0.4});
    auto check = [](const Model& m, const Tensor& x, const Tensor& y, LossKind loss) {
        const Tensor g = input_gradient(m, x, y, loss);
        ASSERT_EQ(g.shape(), x.shape());
        for (std::size_t i = 0; i < x.size(); ++i) {
            Tensor up = x, down = x;
            up[i] += 1e-5;
            down[i] -= 1e-5;
            auto loss_at = [&](const Tensor& v) {
                const Tensor batch = std::holds_alternative<MlpModel>(m) ? v.reshaped({1, v.size()})
                                                                         : v.reshaped({1, 4, 3});
                const Tensor yb = std::holds_alternative<MlpModel>(m) ? y.reshaped({1, y.size()}) : y;
                return evaluate_loss(m, batch, yb, loss);
            };
            const double numeric = (loss_at(up) - loss_at(down)) / 2e-5;
            EXPECT_LE(std::abs(g[i] - numeric) / std::max(1.0, std::abs(g[i])), 1e-4);
        }
    };
    check(mlp, xm, ym, LossKind::cross_entropy);
    check(rnn, xr, yr, LossKind::mse);
}

TEST(CraftDense, ScaledGradientArithmetic) {
    const Tensor out = craft_dense(Tensor::vector({1, 2}), Tensor::vector({0.5, -0.5}),
                                   spec_of(0.1, 1.0, Kernel::scaled_gradient));
    EXPECT_DOUBLE_EQ(out[0], 1.05);
    EXPECT_DOUBLE_EQ(out[1], 1.95);
}

TEST(CraftDense, SignArithmetic) {
    const Tensor out = craft_dense(Tensor::vector({0.2, 0.8}), Tensor::vector({-3, 0.4}), spec_of(0.03, 1.0));
    EXPECT_DOUBLE_EQ(out[0], 0.17);
    EXPECT_DOUBLE_EQ(out[1], 0.83);
}

TEST(CraftDense, ZeroEpsilonIsBitIdentity) {
    RandomSource rng(1);
    const Tensor x = random_tensor({20}, rng), g = random_tensor({20}, rng);
    for (Kernel k : {Kernel::gradient_sign, Kernel::scaled_gradient}) {
        EXPECT_EQ(craft_dense(x, g, spec_of(0.0, 1.0, k)), x);
    }
}

TEST(CraftDense, SignOfZeroIsZero) {
    const Tensor x = Tensor::vector({0.3, 0.4});
    EXPECT_EQ(craft_dense(x, Tensor::vector({0.0, -0.0}), spec_of(0.5, 1.0)), x);
}

TEST(CraftDense, ClipsToBoundsButNeverPastTheOriginal) {
    AttackSpec s = spec_of(0.5, 1.0);
    s.clip = ClipBounds::uniform(3, 0.0, 1.0);
    // Entry 2 starts outside the box: the box widens to include it.
    const Tensor out = craft_dense(Tensor::vector({0.9, 0.2, 1.2}), Tensor::vector({1, -1, 1}), s);
    EXPECT_EQ(out, Tensor::vector({1.0, 0.0, 1.2}));
}

TEST(SelectEntries, Examples) {
    const Tensor g = Tensor::vector({0.1, -0.9, 0.4});
    EXPECT_EQ(select_entries(g, 1.0 / 3.0, std::nullopt), (std::vector<std::size_t>{1}));
    EXPECT_EQ(select_entries(g, 1.0, std::nullopt), (std::vector<std::size_t>{0, 1, 2}));
    const std::vector<std::size_t> mask{0, 2};
    EXPECT_EQ(select_entries(g, 1.0 / 3.0, mask), (std::vector<std::size_t>{2}));
    EXPECT_EQ(select_entries(g, 1.0, mask), (std::vector<std::size_t>{0, 2}));
}

TEST(SelectionSize, CeilingWithoutRoundingCreep) {
    EXPECT_EQ(selection_size(30, 0.1, 30), 3u);
    EXPECT_EQ(selection_size(3, 1.0 / 3.0, 3), 1u);
    EXPECT_EQ(selection_size(10, 0.01, 10), 1u);
    EXPECT_EQ(selection_size(10, 0.0, 10), 0u);
    EXPECT_EQ(selection_size(256, 0.4, 256), 103u);
    EXPECT_EQ(selection_size(108, 0.1, 60), 11u);
    EXPECT_EQ(selection_size(108, 0.9, 60), 60u);
}

TEST(CraftSparse, TopOneUpdate) {
    const Tensor out = craft_sparse(Tensor::vector({1, 2, 3}), Tensor::vector({0.1, -0.9, 0.4}),
                                    spec_of(0.1, 1.0 / 3.0));
    EXPECT_EQ(out[0], 1.0);
    EXPECT_DOUBLE_EQ(out[1], 1.9);
    EXPECT_EQ(out[2], 3.0);
}

TEST(CraftSparse, FullGammaEqualsDense) {
    RandomSource rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const Tensor x = random_tensor({17}, rng), g = random_tensor({17}, rng);
        for (Kernel k : {Kernel::gradient_sign, Kernel::scaled_gradient}) {
            const AttackSpec s = spec_of(rng.uniform(0.0, 0.2), 1.0, k);
            EXPECT_EQ(craft_sparse(x, g, s), craft_dense(x, g, s));
        }
    }
}

TEST(CraftSparse, ZeroGradientLeavesInputUnchanged) {
    RandomSource rng(3);
    const Tensor x = random_tensor({9}, rng);
    EXPECT_EQ(craft_sparse(x, Tensor({9}), spec_of(0.3, 0.5)), x);
}

TEST(CraftSparse, PropertySparsityBudgetAndMask) {
    RandomSource rng(8);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + rng.below(60);
        const Tensor x = random_tensor({n}, rng, -3.0, 3.0);
        Tensor g = random_tensor({n}, rng);
        for (double& v : g.data()) {
            if (rng.uniform() < 0.1) v = 0.0;
        }
        AttackSpec s = spec_of(rng.uniform(0.0, 0.5), rng.uniform());
        std::vector<bool> allowed(n, true);
        if (rng.uniform() < 0.5) {
            std::vector<std::size_t> mask;
            std::fill(allowed.begin(), allowed.end(), false);
            for (std::size_t i = 0; i < n; ++i) {
                if (rng.uniform() < 0.5) {
                    mask.push_back(i);
                    allowed[i] = true;
                }
            }
            s.mask = mask;
        }
        const Tensor out = craft_sparse(x, g, s);
        const std::size_t budget = static_cast<std::size_t>(std::ceil(s.gamma * n - 1e-9));
        EXPECT_LE(changed(x, out), budget);
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_LE(std::abs(out[i] - x[i]), s.epsilon);
            if (!allowed[i]) EXPECT_EQ(out[i], x[i]);
        }
        // All selected gradients nonzero and no clipping: the budget is used exactly.
        const auto picked = select_entries(g, s.gamma, s.mask);
        bool all_nonzero = s.epsilon > 0.0;
        for (std::size_t i : picked) all_nonzero = all_nonzero && g[i] != 0.0;
        if (all_nonzero) {
            std::size_t expected = 0;
            for (std::size_t i : picked) expected += (x[i] + (g[i] > 0 ? s.epsilon : -s.epsilon)) != x[i];
            EXPECT_EQ(changed(x, out), expected);
        }
    }
}

TEST(AttackSpec, Validation) {
    EXPECT_THROW(validate(spec_of(-0.1, 0.5), 3), ConfigError);
    EXPECT_THROW(validate(spec_of(0.1, 1.5), 3), ConfigError);
    EXPECT_THROW(validate(spec_of(std::nan(""), 0.5), 3), ConfigError);
    AttackSpec s = spec_of(0.1, 0.5);
    s.mask = std::vector<std::size_t>{0, 3};
    EXPECT_THROW(validate(s, 3), ConfigError);
    AttackSpec c = spec_of(0.1, 0.5);
    c.clip = ClipBounds{{0.0, 1.0}, {1.0, 0.5}};
    EXPECT_THROW(validate(c, 2), ConfigError);
    c.clip = ClipBounds::uniform(3, 0.0, 1.0);
    EXPECT_THROW(validate(c, 2), ConfigError);
}

TEST(Kernel, NamesRoundTrip) {
    for (Kernel k : {Kernel::gradient_sign, Kernel::scaled_gradient}) {
        EXPECT_EQ(kernel_from_string(to_string(k)), k);
    }
    EXPECT_THROW(kernel_from_string("pgd"), ConfigError);
}

class SurrogatePipeline : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        train_ = new Dataset(toy_classification(120, 1));
        clean_ = new Dataset(toy_classification(40, 2));
        surrogate_ = new SurrogateSpec{MlpArchitecture{6, {12}, 3, 0.0},
                                       Hyperparams{0.1, 16, 30, LossKind::cross_entropy, 5}};
    }
    static void TearDownTestSuite() {
        delete train_;
        delete clean_;
        delete surrogate_;
    }
    static Dataset* train_;
    static Dataset* clean_;
    static SurrogateSpec* surrogate_;
};

Dataset* SurrogatePipeline::train_ = nullptr;
Dataset* SurrogatePipeline::clean_ = nullptr;
SurrogateSpec* SurrogatePipeline::surrogate_ = nullptr;

TEST_F(SurrogatePipeline, ZeroEpsilonPropagatesIdentity) {
    const auto set = craft_adversarial_set(*train_, *clean_, *surrogate_, spec_of(0.0, 0.5), 40);
    ASSERT_EQ(set.records.size(), 40u);
    for (const auto& r : set.records) EXPECT_EQ(r.adversarial, r.original);
}

TEST_F(SurrogatePipeline, ExactSparsityCount) {
    const AttackSpec s = spec_of(0.05, 0.3);
    const Model sur = train_surrogate(*train_, *surrogate_);
    const auto set = craft_with_surrogate(sur, *clean_, s, 25);
    for (const auto& r : set.records) {
        const Tensor g = input_gradient(sur, r.original, r.target, LossKind::cross_entropy);
        std::size_t nnz = 0;
        for (double v : g.data()) nnz += v != 0.0;
        EXPECT_EQ(changed(r.original, r.adversarial), std::min<std::size_t>(2, nnz));
    }
}

TEST_F(SurrogatePipeline, FirstOrderAscentOnSurrogate) {
    const Model sur = train_surrogate(*train_, *surrogate_);
    const auto set = craft_with_surrogate(sur, *clean_, spec_of(1e-6, 1.0), 40);
    for (const auto& r : set.records) EXPECT_GE(r.loss_after, r.loss_before - 1e-9);
}

TEST_F(SurrogatePipeline, ParallelCraftingMatchesSerial) {
    const Model sur = train_surrogate(*train_, *surrogate_);
    const auto a = craft_with_surrogate(sur, *clean_, spec_of(0.1, 0.5), 40, 1);
    const auto b = craft_with_surrogate(sur, *clean_, spec_of(0.1, 0.5), 40, 8);
    EXPECT_EQ(a.adversarial_inputs(), b.adversarial_inputs());
    EXPECT_EQ(a.surrogate_fingerprint, b.surrogate_fingerprint);
}

TEST_F(SurrogatePipeline, TooManySamplesIsConfigError) {
    const Model sur = train_surrogate(*train_, *surrogate_);
    EXPECT_THROW(craft_with_surrogate(sur, *clean_, spec_of(0.1, 0.5), 41), ConfigError);
}

TEST_F(SurrogatePipeline, CsvRoundTrip) {
    const auto set = craft_adversarial_set(*train_, *clean_, *surrogate_, spec_of(0.07, 0.4), 10);
    std::ostringstream out;
    write_adversarial_csv(out, set);
    const Dataset back = read_adversarial_csv(out.str());
    EXPECT_EQ(back.inputs, set.adversarial_inputs());
    EXPECT_EQ(back.targets, set.targets());
    EXPECT_EQ(out.str().rfind("# gridadv-adv v1 shape=[6] targets=3\nsample_id,orig_0", 0), 0u);
}

TEST_F(SurrogatePipeline, SummaryReportsBudget) {
    const auto set = craft_adversarial_set(*train_, *clean_, *surrogate_, spec_of(0.07, 0.4), 10);
    const auto j = adversarial_summary(set);
    EXPECT_LE(j.at("max_abs_delta").get<double>(), 0.07);
    EXPECT_LE(j.at("max_modified_entries").get<std::size_t>(), 3u);
    EXPECT_EQ(j.at("surrogate_fingerprint"), set.surrogate_fingerprint);
}

TEST(AdversarialCsv, MalformedRowNamesLine) {
    const std::string text = "# gridadv-adv v1 shape=[2] targets=1\nsample_id,orig_0,orig_1,adv_0,adv_1,target_0\n0,1,2,3\n";
    try {
        read_adversarial_csv(text);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}
