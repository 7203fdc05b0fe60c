#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "gridadv/error.hpp"
#include "gridadv/random.hpp"
#include "gridadv/tensor.hpp"

using namespace gridadv;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, RandomSource& rng) {
    Tensor t({r, c});
    for (double& v : t.data()) v = rng.uniform(-2.0, 2.0);
    return t;
}

}  // namespace

TEST(Tensor, ConstructionChecksElementCount) {
    EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), ShapeError);
    EXPECT_THROW(Tensor({2, 0}), ShapeError);
    EXPECT_NO_THROW(Tensor({0, 3}));
    const Tensor s(Shape{}, 4.0);
    EXPECT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0], 4.0);
}

TEST(Tensor, MatrixRejectsRaggedRows) {
    EXPECT_THROW(Tensor::matrix({{1, 2}, {3}}), ShapeError);
}

TEST(Tensor, ReshapeKeepsData) {
    const Tensor t = Tensor::vector({1, 2, 3, 4, 5, 6});
    const Tensor m = t.reshaped({2, 3});
    EXPECT_EQ(m.at(1, 0), 4.0);
    EXPECT_THROW(t.reshaped({4, 2}), ShapeError);
}

TEST(Matmul, IdentityCase) {
    const Tensor a = Tensor::matrix({{1, 2}, {3, 4}});
    const Tensor i = Tensor::matrix({{1, 0}, {0, 1}});
    EXPECT_EQ(matmul(a, i), a);
}

TEST(Matmul, HandArithmetic) {
    EXPECT_EQ(matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}})), Tensor::matrix({{11}}));
}

TEST(Matmul, MatchesTripleLoopOracle) {
    RandomSource rng(11);
    const Tensor a = random_matrix(5, 7, rng);
    const Tensor b = random_matrix(7, 3, rng);
    const Tensor c = matmul(a, b);
    ASSERT_EQ(c.shape(), (Shape{5, 3}));
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 7; ++k) s += a.at(i, k) * b.at(k, j);
            EXPECT_NEAR(c.at(i, j), s, 1e-12);
        }
    }
}

TEST(Matmul, ExactIdentityIsExact) {
    RandomSource rng(3);
    const Tensor a = random_matrix(6, 4, rng);
    Tensor id({4, 4});
    for (std::size_t i = 0; i < 4; ++i) id.at(i, i) = 1.0;
    EXPECT_EQ(matmul(a, id), a);
}

TEST(Matmul, MismatchNamesBothShapes) {
    try {
        matmul(Tensor({2, 3}), Tensor({4, 2}));
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
        EXPECT_NE(msg.find("[4x2]"), std::string::npos) << msg;
    }
}

TEST(Matmul, TransposedVariantsAgreeWithExplicitTranspose) {
    RandomSource rng(5);
    const Tensor a = random_matrix(4, 6, rng);
    const Tensor b = random_matrix(3, 6, rng);
    const Tensor c = random_matrix(4, 3, rng);
    const Tensor ab = matmul_transposed_b(a, b);
    const Tensor ref = matmul(a, transpose(b));
    for (std::size_t i = 0; i < ab.size(); ++i) EXPECT_NEAR(ab[i], ref[i], 1e-12);
    const Tensor ac = matmul_transposed_a(a, c);
    const Tensor ref2 = matmul(transpose(a), c);
    for (std::size_t i = 0; i < ac.size(); ++i) EXPECT_NEAR(ac[i], ref2[i], 1e-12);
}

TEST(Relu, Definition) {
    EXPECT_EQ(relu(Tensor::vector({-1, 0, 2})), Tensor::vector({0, 0, 2}));
}

TEST(Relu, BackwardGate) {
    EXPECT_EQ(relu_backward(Tensor::vector({-1, 2}), Tensor::vector({5, 5})), Tensor::vector({0, 5}));
    EXPECT_THROW(relu_backward(Tensor::vector({1}), Tensor::vector({1, 2})), ShapeError);
}

TEST(Relu, BackwardMatchesFiniteDifference) {
    const double x = 3.0, h = 1e-5;
    const double numeric = (relu(Tensor::vector({x + h}))[0] - relu(Tensor::vector({x - h}))[0]) / (2 * h);
    const double analytic = relu_backward(Tensor::vector({x}), Tensor::vector({1.0}))[0];
    EXPECT_NEAR(analytic, numeric, 1e-8);
}

TEST(Softmax, Symmetry) {
    const Tensor s = softmax_rows(Tensor::matrix({{0, 0}}));
    EXPECT_DOUBLE_EQ(s[0], 0.5);
    EXPECT_DOUBLE_EQ(s[1], 0.5);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
    const Tensor s = softmax_rows(Tensor::matrix({{1000, 0}}));
    EXPECT_TRUE(s.all_finite());
    EXPECT_NEAR(s[0], 1.0, 1e-12);
    EXPECT_NEAR(s[1], 0.0, 1e-12);
}

TEST(Softmax, RowsSumToOne) {
    RandomSource rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor logits = random_matrix(3, 4, rng);
        for (double& v : logits.data()) v *= 30.0;
        const Tensor s = softmax_rows(logits);
        for (std::size_t r = 0; r < 3; ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < 4; ++c) {
                EXPECT_GE(s.at(r, c), 0.0);
                sum += s.at(r, c);
            }
            EXPECT_NEAR(sum, 1.0, 1e-12);
        }
    }
}

TEST(Argmax, LowestIndexWinsTies) {
    EXPECT_EQ(argmax_rows(Tensor::matrix({{1, 3, 3}, {2, 2, 1}})), (std::vector<std::size_t>{1, 0}));
}

TEST(TopK, RanksByAbsoluteValue) {
    const std::vector<double> v{0.1, -0.9, 0.4};
    EXPECT_EQ(top_k_indices(v, 2), (std::vector<std::size_t>{1, 2}));
}

TEST(TopK, TieGoesToLowestIndex) {
    const std::vector<double> v{0.5, 0.5, 0.1};
    EXPECT_EQ(top_k_indices(v, 1), (std::vector<std::size_t>{0}));
}

TEST(TopK, EmptyAndFull) {
    const std::vector<double> v{0.3, -0.2, 0.7, 0.0};
    EXPECT_TRUE(top_k_indices(v, 0).empty());
    EXPECT_EQ(top_k_indices(v, 4), (std::vector<std::size_t>{0, 1, 2, 3}));
    EXPECT_THROW(top_k_indices(v, 5), BoundsError);
}

TEST(TopK, SignedRanking) {
    const std::vector<double> v{0.1, -0.9, 0.4};
    EXPECT_EQ(top_k_indices(v, 1, RankBy::signed_value), (std::vector<std::size_t>{2}));
}

TEST(TopK, PropertyNegationInvariantAndMatchesSortOracle) {
    RandomSource rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.below(40);
        std::vector<double> v(n), neg(n);
        for (std::size_t i = 0; i < n; ++i) {
            // Coarse values force plenty of ties.
            v[i] = static_cast<double>(rng.between(-5, 5));
            neg[i] = -v[i];
        }
        const std::size_t k = rng.below(n + 1);
        const auto got = top_k_indices(v, k);
        EXPECT_EQ(got, top_k_indices(neg, k));

        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return std::abs(v[a]) > std::abs(v[b]); });
        order.resize(k);
        std::sort(order.begin(), order.end());
        EXPECT_EQ(got, order);
    }
}

TEST(TakeRows, GathersInOrder) {
    const Tensor t = Tensor::matrix({{1, 2}, {3, 4}, {5, 6}});
    const std::vector<std::size_t> idx{2, 0};
    EXPECT_EQ(take_rows(t, idx), Tensor::matrix({{5, 6}, {1, 2}}));
}
