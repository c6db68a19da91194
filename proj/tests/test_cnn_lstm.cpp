#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lcpred/cnn_lstm.hpp"
#include "lcpred/common.hpp"
#include "lcpred/synth.hpp"

using namespace lcpred;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

NetworkConfig small(int d = 3, int f = 4, int h = 4) {
    NetworkConfig c;
    c.input_size = d;
    c.conv_filters = f;
    c.hidden_size = h;
    c.kernel_size = 3;
    c.pool_size = 2;
    c.dropout = 0.0;
    c.seed = 21;
    return c;
}

void randomize(Network& net, std::uint64_t seed, double scale = 0.5) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    for (auto* t : net.params.tensors())
        for (Eigen::Index i = 0; i < t->size(); ++i) t->data()[i] = u(rng);
}

Sequence random_sequence(int t, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Sequence s(static_cast<std::size_t>(t), std::vector<double>(static_cast<std::size_t>(d)));
    for (auto& r : s)
        for (auto& v : r) v = g(rng);
    return s;
}

// Plain loops: same-padded stride-1 conv, ReLU, max-pool, LSTM with gates [f; i; o; c].
double naive_forward(const Network& net, const Sequence& x) {
    const auto& p = net.params;
    const int d = net.config.input_size, k = net.config.kernel_size, f = net.config.conv_filters;
    const int h = net.config.hidden_size, pool = net.config.pool_size;
    const int t = static_cast<int>(x.size());
    const int pad = (k - 1) / 2;
    std::vector<std::vector<double>> conv(t, std::vector<double>(f));
    for (int s = 0; s < t; ++s)
        for (int o = 0; o < f; ++o) {
            double z = p.conv_b(o, 0);
            for (int tap = 0; tap < k; ++tap) {
                const int src = s - pad + tap;
                if (src < 0 || src >= t) continue;
                for (int j = 0; j < d; ++j) z += p.conv_w(o, tap * d + j) * x[src][j];
            }
            conv[s][o] = std::max(z, 0.0);
        }
    std::vector<double> hs(h, 0.0), cs(h, 0.0);
    for (int q = 0; q < t / pool; ++q) {
        std::vector<double> in(f);
        for (int o = 0; o < f; ++o) {
            in[o] = conv[q * pool][o];
            for (int r = 1; r < pool; ++r) in[o] = std::max(in[o], conv[q * pool + r][o]);
        }
        std::vector<double> a(4 * h);
        for (int r = 0; r < 4 * h; ++r) {
            a[r] = p.lstm.b(r, 0);
            for (int j = 0; j < f; ++j) a[r] += p.lstm.wx(r, j) * in[j];
            for (int j = 0; j < h; ++j) a[r] += p.lstm.wh(r, j) * hs[j];
        }
        for (int u = 0; u < h; ++u) {
            cs[u] = sig(a[u]) * cs[u] + sig(a[h + u]) * std::tanh(a[3 * h + u]);
            hs[u] = sig(a[2 * h + u]) * std::tanh(cs[u]);
        }
    }
    double logit = p.dense_b(0, 0);
    for (int u = 0; u < h; ++u) logit += p.dense_w(0, u) * hs[u];
    return sig(logit);
}

LstmParams scalar_lstm(double f, double i, double o, double c) {
    LstmParams p;
    p.wx = MatrixXd(4, 1);
    p.wh = MatrixXd(4, 1);
    p.b = MatrixXd(4, 1);
    p.wx << f, i, o, c;
    p.wh << 0.3, -0.2, 0.1, 0.4;
    p.b << 0.05, -0.1, 0.2, 0.0;
    return p;
}

}  // namespace

TEST(LstmCell, ZeroWeightsGiveZeroState) {
    LstmParams p{MatrixXd::Zero(8, 3), MatrixXd::Zero(8, 2), MatrixXd::Zero(8, 1)};
    const auto s = lstm_cell_forward(p, VectorXd::Ones(3), VectorXd::Zero(2), VectorXd::Zero(2));
    EXPECT_EQ(s.h, VectorXd::Zero(2));
    EXPECT_EQ(s.c, VectorXd::Zero(2));
}

TEST(LstmCell, ForgetGateIrrelevantWithoutMemory) {
    VectorXd x(1), h(1);
    x << 0.7;
    h << -0.4;
    const auto a = lstm_cell_forward(scalar_lstm(0.9, 0.5, -0.3, 1.1), x, h, VectorXd::Zero(1));
    const auto b = lstm_cell_forward(scalar_lstm(-5.0, 0.5, -0.3, 1.1), x, h, VectorXd::Zero(1));
    EXPECT_EQ(a.h, b.h);
    EXPECT_EQ(a.c, b.c);
}

TEST(LstmCell, ScalarOracle) {
    VectorXd x(1), h(1), c(1);
    x << 0.7;
    h << -0.4;
    c << 0.25;
    const auto s = lstm_cell_forward(scalar_lstm(0.9, 0.5, -0.3, 1.1), x, h, c);
    const double fg = sig(0.9 * 0.7 + 0.3 * -0.4 + 0.05);
    const double ig = sig(0.5 * 0.7 - 0.2 * -0.4 - 0.1);
    const double og = sig(-0.3 * 0.7 + 0.1 * -0.4 + 0.2);
    const double cg = std::tanh(1.1 * 0.7 + 0.4 * -0.4);
    const double c1 = fg * 0.25 + ig * cg;
    EXPECT_NEAR(s.c(0), c1, 1e-15);
    EXPECT_NEAR(s.h(0), og * std::tanh(c1), 1e-15);
}

TEST(Network, InitialOutputIsHalfAndStaysInRange) {
    auto net = make_network(small());
    const auto x = random_sequence(10, 3, 1);
    EXPECT_EQ(network_forward(net, x), 0.5);
    randomize(net, 4, 3.0);
    for (std::uint64_t s = 0; s < 20; ++s) {
        const double p = network_forward(net, random_sequence(10, 3, s));
        EXPECT_GT(p, 0.0);
        EXPECT_LT(p, 1.0);
    }
}

TEST(Network, MatchesNaiveForward) {
    for (int t : {5, 10, 11}) {
        auto net = make_network(small());
        randomize(net, 8 + t);
        const auto x = random_sequence(t, 3, 30 + t);
        EXPECT_NEAR(network_forward(net, x), naive_forward(net, x), 1e-13) << t;
    }
}

TEST(Network, ZeroInputUsesConvBiasOnly) {
    auto a = make_network(small());
    randomize(a, 2);
    auto b = a;
    b.params.conv_w.setRandom();
    const Sequence zero(10, std::vector<double>(3, 0.0));
    EXPECT_EQ(network_forward(a, zero), network_forward(b, zero));
    // All-negative biases zero the conv output, so LSTM input weights drop out too.
    a.params.conv_b.setConstant(-1.0);
    b.params.conv_b.setConstant(-1.0);
    b.params.lstm.wx.setRandom();
    EXPECT_EQ(network_forward(a, zero), network_forward(b, zero));
}

TEST(Network, DropoutOnlyInTraining) {
    auto c = small();
    c.dropout = 0.5;
    auto net = make_network(c);
    randomize(net, 6);
    const auto x = random_sequence(10, 3, 2);
    EXPECT_EQ(network_forward(net, x), network_forward(net, x));
    std::mt19937_64 rng(1);
    const double t1 = network_forward(net, x, true, &rng);
    const double t2 = network_forward(net, x, true, &rng);
    EXPECT_NE(t1, t2);
    EXPECT_NE(t1, network_forward(net, x));
}

TEST(Network, FirstLossIsLn2) {
    const auto data = trend_sequences(16, 3, 10);
    auto c = small(16);
    const auto net = make_network(c);
    std::vector<std::size_t> batch(16);
    std::iota(batch.begin(), batch.end(), 0);
    const auto r = loss_and_gradient(net, data, batch, false, nullptr);
    EXPECT_NEAR(r.loss, std::log(2.0), 1e-12);
}

TEST(Network, ZeroLearningRateLeavesParameters) {
    const auto train = trend_sequences(32, 5, 10);
    const auto val = trend_sequences(16, 6, 10);
    auto c = small(16);
    c.learning_rate = 0.0;
    c.max_epochs = 3;
    c.batch_size = 8;
    auto net = make_network(c);
    const auto before = net.params;
    const auto hist = train_network(net, train, val);
    EXPECT_EQ(hist.epochs.size(), 3u);
    for (std::size_t i = 0; i < NetworkParams::kTensorCount; ++i)
        EXPECT_EQ(*net.params.tensors()[i], *before.tensors()[i]) << NetworkParams::tensor_names()[i];
}

TEST(Network, LearnsTrendAndHistoryCsv) {
    const auto train = trend_sequences(200, 7, 20);
    const auto val = trend_sequences(60, 8, 20);
    auto c = small(16, 8, 8);
    c.learning_rate = 1e-2;
    c.max_epochs = 30;
    c.batch_size = 16;
    auto net = make_network(c);
    const auto hist = train_network(net, train, val);
    EXPECT_FALSE(hist.diverged);
    EXPECT_GE(hist.epochs.at(static_cast<std::size_t>(hist.best_epoch - 1)).val_accuracy, 0.9);
    const auto csv = history_csv(hist);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(hist.epochs.size()) + 1);
}

TEST(GradientCheck, AnalyticMatchesNumeric) {
    auto net = make_network(small(3, 4, 4));
    randomize(net, 13);
    const auto x = random_sequence(5, 3, 14);
    for (int label : {0, 1}) {
        const auto r = gradient_check(net, x, label);
        EXPECT_LT(r.max_relative_error, 1e-5) << r.worst_tensor << "[" << r.worst_index << "]";
        EXPECT_EQ(r.checked, static_cast<std::size_t>(4 * 9 + 4 + 16 * 4 + 16 * 4 + 16 + 4 + 1));
    }
}

TEST(GradientCheck, CorruptedGradientIsCaught) {
    auto net = make_network(small(3, 4, 4));
    randomize(net, 13);
    const auto x = random_sequence(5, 3, 14);
    const auto r = gradient_check(net, x, 1, 1e-5, [](NetworkParams& g) { g.lstm.wh(3, 1) *= 1.1; });
    EXPECT_GT(r.max_relative_error, 1e-3);
    EXPECT_EQ(r.worst_tensor, "lstm_wh");
}

TEST(Tensors, NetworkRoundTrip) {
    auto net = make_network(small());
    randomize(net, 3);
    const auto file = decode_tensors(encode_tensors(network_tensors(net, "seed=1")));
    EXPECT_EQ(file.metadata.find("seed=1") != std::string::npos, true);
    const auto back = network_from_tensors(file);
    const auto x = random_sequence(10, 3, 9);
    EXPECT_EQ(network_forward(back, x), network_forward(net, x));
    EXPECT_EQ(back.config.hidden_size, 4);
}

TEST(Network, ShortOrMismatchedInputs) {
    const auto net = make_network(small());
    EXPECT_THROW(network_forward(net, random_sequence(1, 3, 0)), DataError);
    EXPECT_THROW(network_forward(net, random_sequence(10, 4, 0)), DataError);
    auto c = small();
    c.dropout = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
}
