#include <gtest/gtest.h>

#include <numbers>

#include "support.hpp"

using namespace crossgan;
using namespace testing_support;

TEST(L1Loss, Identity) {
    const auto y = random_tensor(3, 8, 8, 1);
    EXPECT_EQ(l1_loss(y, y), 0.0);
}

TEST(L1Loss, ConstantDifference) {
    EXPECT_DOUBLE_EQ(l1_loss(Tensor<float>(3, 4, 4, 1.0f), Tensor<float>(3, 4, 4, 0.0f)), 1.0);
}

TEST(L1Loss, MatchesDirectScan) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto y = random_tensor(3, 6, 5, 2 * s), r = random_tensor(3, 6, 5, 2 * s + 1);
        double sum = 0;
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 5; ++j) sum += std::fabs(double(y(c, i, j)) - double(r(c, i, j)));
        ASSERT_NEAR(l1_loss(y, r), sum / 90.0, 1e-7);
    }
}

TEST(L1Loss, ShapeMismatchRejected) {
    EXPECT_THROW(l1_loss(Tensor<float>(3, 4, 4), Tensor<float>(3, 4, 5)), InputError);
}

TEST(DiscriminatorLoss, ClosedForms) {
    EXPECT_NEAR(discriminator_loss(0.5, 0.5), 2 * std::numbers::ln2, 1e-9);
    EXPECT_NEAR(discriminator_loss(1.0, 0.0), 0.0, 1e-6);
    EXPECT_NEAR(discriminator_loss(0.9, 0.1), -(std::log(0.9) + std::log(0.9)), 1e-12);
    EXPECT_NEAR(discriminator_loss(0.9, 0.1), 0.2107, 1e-4);
    EXPECT_TRUE(std::isfinite(discriminator_loss(0.0, 1.0)));
}

TEST(GeneratorAdversarialLoss, ClosedForms) {
    EXPECT_NEAR(generator_adversarial_loss(1.0), 0.0, 1e-6);
    EXPECT_NEAR(generator_adversarial_loss(0.5), std::numbers::ln2, 1e-12);
    EXPECT_TRUE(std::isfinite(generator_adversarial_loss(0.0)));
}

TEST(GeneratorAdversarialLoss, MonotoneDecreasing) {
    Rng rng(3);
    std::vector<double> p(100);
    for (auto& v : p) v = rng.uniform(0.001, 0.999);
    std::sort(p.begin(), p.end());
    for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[i - 1]) EXPECT_LT(generator_adversarial_loss(p[i]), generator_adversarial_loss(p[i - 1]));
}

TEST(GeneratorGradients, ZeroLambdaIsPureAdversarial) {
    auto g = init_generator<double>(1, 8, 4, 2);
    auto d = init_discriminator<double>(2, 8, 4, 1);
    d.params().set_zero();  // sigmoid(0) = 0.5 in every cell
    const auto x = random_tensor<double>(3, 8, 8, 3), y = random_tensor<double>(3, 8, 8, 4);
    const auto gg = generator_gradients(g, d, x, y, std::nullopt);
    EXPECT_DOUBLE_EQ(gg.d_fake, 0.5);
    EXPECT_EQ(gg.total(0.0), gg.adversarial);
}

TEST(GeneratorGradients, FullObjectiveMatchesFiniteDifferences) {
    auto g = init_generator<double>(11, 8, 4, 2);
    const auto d = init_discriminator<double>(12, 8, 4, 1);
    const auto x = random_tensor<double>(3, 8, 8, 13), y = random_tensor<double>(3, 8, 8, 14);
    for (double lambda : {0.0, 1.0, 100.0}) {
        const auto analytic = generator_gradients(g, d, x, y, std::nullopt).total(lambda);
        auto objective = [&] {
            const auto fake = g.forward(x);
            return generator_adversarial_loss(d.score_scalar(x, fake)) + lambda * l1_loss(y, fake);
        };
        for (std::size_t k = 0; k < g.params().size(); ++k) {
            auto& vals = g.params()[k].values;
            const auto numeric = numeric_gradient(vals, objective);
            EXPECT_LE(relative_error(std::vector<double>(analytic[k].values.begin(), analytic[k].values.end()), numeric),
                      1e-3)
                << g.params()[k].name << " lambda " << lambda;
        }
    }
}

TEST(DiscriminatorUpdate, LossGradientMatchesFiniteDifferences) {
    auto d = init_discriminator<double>(21, 8, 4, 1);
    const auto x = random_tensor<double>(3, 8, 8, 1), real = random_tensor<double>(3, 8, 8, 2);
    const auto fake = random_tensor<double>(3, 8, 8, 3);
    DiscriminatorTape<double> rt, ft;
    const double dr = d.score_scalar(x, real, &rt), df = d.score_scalar(x, fake, &ft);
    auto grads = d.params().zeros_like();
    d.backward_scalar(rt, discriminator_loss_grad_real(dr), &grads);
    d.backward_scalar(ft, discriminator_loss_grad_fake(df), &grads);
    auto loss = [&] { return discriminator_loss(d.score_scalar(x, real), d.score_scalar(x, fake)); };
    for (std::size_t k = 0; k < d.params().size(); ++k) {
        auto& vals = d.params()[k].values;
        const auto numeric = numeric_gradient(vals, loss);
        EXPECT_LE(relative_error(std::vector<double>(grads[k].values.begin(), grads[k].values.end()), numeric), 1e-3);
    }
}

namespace {

std::vector<PairedSample> random_pairs(int n, int res, Direction dir = Direction::FrameToFlow) {
    std::vector<PairedSample> out;
    for (int i = 0; i < n; ++i)
        out.push_back({random_tensor(3, res, res, 10 + i), random_tensor(3, res, res, 50 + i), dir, "p", i});
    return out;
}

TrainConfig small_config() {
    TrainConfig c;
    c.resolution = 32;
    c.base_filters = 4;
    c.epochs = 1;
    c.seed = 8;
    return c;
}

}  // namespace

TEST(TrainStep, SameSeedSameHistory) {
    const auto pairs = random_pairs(10, 32);
    const auto a = train_task(pairs, small_config());
    const auto b = train_task(pairs, small_config());
    ASSERT_EQ(a.loss_history.size(), 10u);
    EXPECT_EQ(a.loss_history, b.loss_history);
    EXPECT_EQ(a.generator.params(), b.generator.params());
    EXPECT_EQ(a.discriminator.params(), b.discriminator.params());
}

TEST(TrainStep, ChangesBothNetworks) {
    const auto cfg = small_config();
    TaskTrainer trainer(init_task(Direction::FrameToFlow, cfg), cfg);
    const auto g0 = trainer.task().generator.params();
    const auto d0 = trainer.task().discriminator.params();
    const auto pairs = random_pairs(1, 32);
    const auto rec = trainer.train_step(pairs);
    ASSERT_EQ(rec.size(), 1u);
    EXPECT_FALSE(trainer.task().generator.params() == g0);
    EXPECT_FALSE(trainer.task().discriminator.params() == d0);
    EXPECT_EQ(trainer.steps(), 1u);
}

TEST(TrainStep, DirectionMismatchRejected) {
    const auto cfg = small_config();
    TaskTrainer trainer(init_task(Direction::FrameToFlow, cfg), cfg);
    EXPECT_THROW(trainer.train_step(random_pairs(1, 32, Direction::FlowToFrame)), InputError);
}

TEST(TrainTask, StepCount) {
    TrainConfig cfg;
    EXPECT_EQ(train_step_count(6800, cfg), 68000u);
    auto small = small_config();
    const auto one = train_task(random_pairs(1, 32), small);
    EXPECT_EQ(one.loss_history.size(), 1u);

    small.epochs = 3;
    small.batch_size = 2;
    std::size_t calls = 0;
    const auto t = train_task(random_pairs(5, 32), small, [&](int, std::size_t, const LossRecord&) { ++calls; });
    EXPECT_EQ(calls, 15u);
    EXPECT_EQ(train_step_count(5, small), 9u);
}

TEST(TrainTask, RejectsBadInput) {
    EXPECT_THROW(train_task({}, small_config()), InputError);
    EXPECT_THROW(train_task(random_pairs(1, 16), small_config()), InputError);
    auto mixed = random_pairs(2, 32);
    mixed[1].direction = Direction::FlowToFrame;
    EXPECT_THROW(train_task(mixed, small_config()), InputError);
    auto bad = small_config();
    bad.epochs = 0;
    EXPECT_THROW(train_task(random_pairs(1, 32), bad), ConfigError);
}

TEST(Optimizer, Parse) {
    EXPECT_EQ(nn::parse_optimizer("momentum"), nn::OptimizerKind::Momentum);
    EXPECT_EQ(nn::parse_optimizer("adam"), nn::OptimizerKind::Adam);
    EXPECT_THROW(nn::parse_optimizer("rmsprop"), ConfigError);
}

TEST(Optimizer, MomentumMatchesHandComputation) {
    nn::ParamSet<float> p;
    p.add("w", {1}, 1.0f);
    auto g = p.zeros_like();
    g[0].values[0] = 2.0f;
    nn::Optimizer<float> opt(nn::OptimizerKind::Momentum, 0.1, 0.5);
    opt.step(p, g);  // v = 2, w = 1 - 0.2
    EXPECT_NEAR(p[0].values[0], 0.8f, 1e-7);
    opt.step(p, g);  // v = 0.5*2 + 2 = 3, w = 0.8 - 0.3
    EXPECT_NEAR(p[0].values[0], 0.5f, 1e-7);
}
