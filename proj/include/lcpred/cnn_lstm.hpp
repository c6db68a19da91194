#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lcpred/tensor_io.hpp"

namespace lcpred {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Single-layer LSTM. Gate blocks are stacked row-wise as [f; i; o; c], so
// W_xf = wx.topRows(H), W_xi = wx.middleRows(H, H) and so on.
struct LstmParams {
    MatrixXd wx;  // 4H x D
    MatrixXd wh;  // 4H x H
    MatrixXd b;   // 4H x 1

    int hidden() const noexcept { return static_cast<int>(wh.cols()); }
    int input() const noexcept { return static_cast<int>(wx.cols()); }
    void validate() const;  // throws std::invalid_argument on inconsistent shapes
};

struct LstmState {
    VectorXd h;
    VectorXd c;
};

LstmState lstm_cell_forward(const LstmParams& p, const VectorXd& x, const VectorXd& h_prev, const VectorXd& c_prev);

struct NetworkConfig {
    int input_size = 16;
    int conv_filters = 32;
    int kernel_size = 3;
    int conv_stride = 1;
    int pool_size = 2;
    double dropout = 0.1;
    int hidden_size = 64;
    double learning_rate = 1e-3;
    int batch_size = 64;
    int max_epochs = 200;
    int patience = 20;  // epochs without validation improvement; 0 disables early stop
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError
};

// Conv (same padding) -> ReLU -> max-pool -> dropout -> LSTM -> dense -> sigmoid.
struct NetworkParams {
    MatrixXd conv_w;  // F x (K*D): column block k holds the weights of tap k
    MatrixXd conv_b;  // F x 1
    LstmParams lstm;  // input F
    MatrixXd dense_w;  // 1 x H
    MatrixXd dense_b;  // 1 x 1

    static constexpr std::size_t kTensorCount = 7;
    std::array<MatrixXd*, kTensorCount> tensors();
    std::array<const MatrixXd*, kTensorCount> tensors() const;
    static const std::array<std::string, kTensorCount>& tensor_names();

    NetworkParams zeros_like() const;
};

struct Network {
    NetworkConfig config;
    NetworkParams params;
};

// Glorot-uniform weights, zero biases, zero dense layer (first output exactly 0.5).
Network make_network(const NetworkConfig& config);

// A sequence is T rows of input_size features.
using Sequence = std::vector<std::vector<double>>;

struct SequenceSet {
    std::vector<Sequence> inputs;
    std::vector<int> labels;  // 0/1

    std::size_t size() const noexcept { return inputs.size(); }
};

// Probability of a lane change. With training = true, dropout is drawn from rng.
double network_forward(const Network& net, const Sequence& sample, bool training = false,
                       std::mt19937_64* rng = nullptr);
std::vector<double> predict_proba(const Network& net, const std::vector<Sequence>& samples);

// Mean binary cross-entropy of a batch and its gradient. `hook`, when set, may edit
// the analytic gradient before it is returned.
using GradientHook = std::function<void(NetworkParams& grads)>;

struct BatchResult {
    double loss = 0.0;
    std::size_t correct = 0;
    NetworkParams grads;
};

BatchResult loss_and_gradient(const Network& net, const SequenceSet& data, std::span<const std::size_t> batch,
                              bool training, std::mt19937_64* rng, const GradientHook& hook = {});

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;  // running, with dropout active
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    bool diverged = false;
    bool early_stopped = false;
};

// Adam on mini-batches, reshuffled each epoch. Keeps the parameters of the epoch
// with the best validation accuracy. A non-finite loss stops training and keeps
// the last good parameters.
TrainHistory train_network(Network& net, const SequenceSet& train, const SequenceSet& validation);

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::string worst_tensor;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
    std::array<double, NetworkParams::kTensorCount> per_tensor{};
};

// |analytic - numeric| / max(|analytic| + |numeric|, floor) over every parameter
// (or `max_per_tensor` random coordinates of larger tensors), central differences,
// dropout disabled.
GradientCheckResult gradient_check(const Network& net, const Sequence& sample, int label, double eps = 1e-5,
                                   const GradientHook& hook = {}, std::size_t max_per_tensor = 0,
                                   std::uint64_t seed = 0);

inline constexpr double kGradientCheckFloor = 1e-6;

TensorFile network_tensors(const Network& net, const std::string& provenance = "");
Network network_from_tensors(const TensorFile& file);

std::string history_csv(const TrainHistory& history);

}  // namespace lcpred
