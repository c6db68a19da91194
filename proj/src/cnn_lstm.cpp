#include "lcpred/cnn_lstm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lcpred/common.hpp"
#include "lcpred/csv.hpp"

namespace lcpred {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

MatrixXd sigmoid(const MatrixXd& m) { return m.unaryExpr([](double v) { return sigmoid(v); }); }

struct Shape {
    int t_in = 0;
    int t_conv = 0;
    int t_pool = 0;
    int pad_left = 0;
};

Shape shape_for(const NetworkConfig& c, int t_in) {
    Shape s;
    s.t_in = t_in;
    s.t_conv = (t_in + c.conv_stride - 1) / c.conv_stride;
    const int pad_total = std::max((s.t_conv - 1) * c.conv_stride + c.kernel_size - t_in, 0);
    s.pad_left = pad_total / 2;
    s.t_pool = s.t_conv / c.pool_size;
    return s;
}

struct Cache {
    Shape shape;
    int batch = 0;
    std::vector<MatrixXd> patches;  // t_conv x (K*D x B)
    std::vector<MatrixXd> conv;     // post-ReLU, F x B
    std::vector<Eigen::MatrixXi> argmax;  // t_pool x (F x B), conv step of the max
    std::vector<MatrixXd> masks;    // dropout scale per pooled step; empty when inactive
    std::vector<MatrixXd> x;        // LSTM inputs, F x B
    std::vector<MatrixXd> gates;    // activated [f; i; o; g], 4H x B
    std::vector<MatrixXd> h;        // t_pool + 1 states, h[0] = 0
    std::vector<MatrixXd> c;
    MatrixXd logits;                // 1 x B
};

// Inputs per time step as D x B.
std::vector<MatrixXd> gather(const std::vector<Sequence>& inputs, std::span<const std::size_t> batch, int d) {
    if (batch.empty()) throw std::invalid_argument("network: empty batch");
    const auto t = inputs[batch[0]].size();
    std::vector<MatrixXd> out(t, MatrixXd(d, static_cast<Eigen::Index>(batch.size())));
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& seq = inputs[batch[b]];
        if (seq.size() != t) throw DataError("network: sequences in a batch differ in length");
        for (std::size_t s = 0; s < t; ++s) {
            if (seq[s].size() != static_cast<std::size_t>(d)) {
                throw DataError("network: sample row has " + std::to_string(seq[s].size()) + " features, expected " +
                                std::to_string(d));
            }
            for (int j = 0; j < d; ++j) out[s](j, static_cast<Eigen::Index>(b)) = seq[s][static_cast<std::size_t>(j)];
        }
    }
    return out;
}

void forward(const Network& net, const std::vector<MatrixXd>& in, bool training, std::mt19937_64* rng, Cache& cache) {
    const auto& cfg = net.config;
    const auto& p = net.params;
    const int d = cfg.input_size;
    const int k = cfg.kernel_size;
    const int f = cfg.conv_filters;
    const int hsz = cfg.hidden_size;
    const int t_in = static_cast<int>(in.size());
    const Shape s = shape_for(cfg, t_in);
    if (s.t_pool < 1) throw DataError("network: sequence of " + std::to_string(t_in) + " steps too short");
    const auto b = in.front().cols();
    cache.shape = s;
    cache.batch = static_cast<int>(b);

    cache.patches.assign(static_cast<std::size_t>(s.t_conv), MatrixXd::Zero(k * d, b));
    cache.conv.resize(static_cast<std::size_t>(s.t_conv));
    for (int tc = 0; tc < s.t_conv; ++tc) {
        auto& patch = cache.patches[static_cast<std::size_t>(tc)];
        for (int tap = 0; tap < k; ++tap) {
            const int src = tc * cfg.conv_stride - s.pad_left + tap;
            if (src >= 0 && src < t_in) patch.middleRows(tap * d, d) = in[static_cast<std::size_t>(src)];
        }
        MatrixXd z = p.conv_w * patch;
        z.colwise() += p.conv_b.col(0);
        cache.conv[static_cast<std::size_t>(tc)] = z.cwiseMax(0.0);
    }

    const bool drop = training && cfg.dropout > 0.0;
    if (drop && rng == nullptr) throw std::invalid_argument("network: training mode needs a random generator");
    const double keep = 1.0 - cfg.dropout;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    cache.argmax.assign(static_cast<std::size_t>(s.t_pool), Eigen::MatrixXi(f, b));
    cache.x.assign(static_cast<std::size_t>(s.t_pool), MatrixXd(f, b));
    cache.masks.clear();
    for (int tp = 0; tp < s.t_pool; ++tp) {
        auto& am = cache.argmax[static_cast<std::size_t>(tp)];
        auto& x = cache.x[static_cast<std::size_t>(tp)];
        for (Eigen::Index col = 0; col < b; ++col) {
            for (int r = 0; r < f; ++r) {
                int best = tp * cfg.pool_size;
                double v = cache.conv[static_cast<std::size_t>(best)](r, col);
                for (int q = 1; q < cfg.pool_size; ++q) {
                    const int tc = tp * cfg.pool_size + q;
                    const double cand = cache.conv[static_cast<std::size_t>(tc)](r, col);
                    if (cand > v) {
                        v = cand;
                        best = tc;
                    }
                }
                am(r, col) = best;
                x(r, col) = v;
            }
        }
        if (drop) {
            MatrixXd mask(f, b);
            for (Eigen::Index col = 0; col < b; ++col) {
                for (int r = 0; r < f; ++r) mask(r, col) = unit(*rng) < keep ? 1.0 / keep : 0.0;
            }
            x = x.cwiseProduct(mask);
            cache.masks.push_back(std::move(mask));
        }
    }

    const auto& l = p.lstm;
    cache.gates.resize(static_cast<std::size_t>(s.t_pool));
    cache.h.assign(static_cast<std::size_t>(s.t_pool) + 1, MatrixXd::Zero(hsz, b));
    cache.c.assign(static_cast<std::size_t>(s.t_pool) + 1, MatrixXd::Zero(hsz, b));
    for (int t = 0; t < s.t_pool; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        MatrixXd a = l.wx * cache.x[ti] + l.wh * cache.h[ti];
        a.colwise() += l.b.col(0);
        MatrixXd g(4 * hsz, b);
        g.topRows(3 * hsz) = sigmoid(a.topRows(3 * hsz));
        g.bottomRows(hsz) = a.bottomRows(hsz).array().tanh().matrix();
        const auto fg = g.topRows(hsz);
        const auto ig = g.middleRows(hsz, hsz);
        const auto og = g.middleRows(2 * hsz, hsz);
        const auto cg = g.bottomRows(hsz);
        cache.c[ti + 1] = fg.cwiseProduct(cache.c[ti]) + ig.cwiseProduct(cg);
        cache.h[ti + 1] = og.cwiseProduct(cache.c[ti + 1].array().tanh().matrix());
        cache.gates[ti] = std::move(g);
    }
    cache.logits = p.dense_w * cache.h.back();
    cache.logits.array() += p.dense_b(0, 0);
}

// dlogits: 1 x B, derivative of the loss with respect to each logit.
void backward(const Network& net, const Cache& cache, const MatrixXd& dlogits, NetworkParams& g) {
    const auto& cfg = net.config;
    const auto& p = net.params;
    const int hsz = cfg.hidden_size;
    const auto& s = cache.shape;
    const auto b = static_cast<Eigen::Index>(cache.batch);

    g = p.zeros_like();
    g.dense_w = dlogits * cache.h.back().transpose();
    g.dense_b(0, 0) = dlogits.sum();

    MatrixXd dh = p.dense_w.transpose() * dlogits;  // H x B
    MatrixXd dc = MatrixXd::Zero(hsz, b);
    std::vector<MatrixXd> dx(static_cast<std::size_t>(s.t_pool));
    for (int t = s.t_pool - 1; t >= 0; --t) {
        const auto ti = static_cast<std::size_t>(t);
        const auto& gt = cache.gates[ti];
        const auto fg = gt.topRows(hsz).array();
        const auto ig = gt.middleRows(hsz, hsz).array();
        const auto og = gt.middleRows(2 * hsz, hsz).array();
        const auto cg = gt.bottomRows(hsz).array();
        const Eigen::ArrayXXd tc = cache.c[ti + 1].array().tanh();
        dc.array() += dh.array() * og * (1.0 - tc.square());
        MatrixXd da(4 * hsz, b);
        da.topRows(hsz) = (dc.array() * cache.c[ti].array() * fg * (1.0 - fg)).matrix();
        da.middleRows(hsz, hsz) = (dc.array() * cg * ig * (1.0 - ig)).matrix();
        da.middleRows(2 * hsz, hsz) = (dh.array() * tc * og * (1.0 - og)).matrix();
        da.bottomRows(hsz) = (dc.array() * ig * (1.0 - cg.square())).matrix();
        dc = (dc.array() * fg).matrix();

        g.lstm.wx.noalias() += da * cache.x[ti].transpose();
        g.lstm.wh.noalias() += da * cache.h[ti].transpose();
        g.lstm.b += da.rowwise().sum();
        dx[ti] = p.lstm.wx.transpose() * da;
        dh = p.lstm.wh.transpose() * da;
    }

    std::vector<MatrixXd> dconv(static_cast<std::size_t>(s.t_conv), MatrixXd::Zero(cfg.conv_filters, b));
    for (int tp = 0; tp < s.t_pool; ++tp) {
        const auto ti = static_cast<std::size_t>(tp);
        MatrixXd dpool = dx[ti];
        if (!cache.masks.empty()) dpool = dpool.cwiseProduct(cache.masks[ti]);
        const auto& am = cache.argmax[ti];
        for (Eigen::Index col = 0; col < b; ++col) {
            for (int r = 0; r < cfg.conv_filters; ++r) {
                dconv[static_cast<std::size_t>(am(r, col))](r, col) += dpool(r, col);
            }
        }
    }
    for (int tc = 0; tc < s.t_conv; ++tc) {
        const auto ti = static_cast<std::size_t>(tc);
        const MatrixXd dz = (cache.conv[ti].array() > 0.0).select(dconv[ti], 0.0);
        g.conv_w.noalias() += dz * cache.patches[ti].transpose();
        g.conv_b += dz.rowwise().sum();
    }
}

MatrixXd glorot(int rows, int cols, double fan_in, double fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
    }
    return m;
}

struct EvalResult {
    double loss = 0.0;
    std::size_t correct = 0;
};

EvalResult evaluate(const Network& net, const SequenceSet& data) {
    EvalResult r;
    if (data.size() == 0) return r;
    constexpr std::size_t chunk = 256;
    std::vector<std::size_t> idx;
    Cache cache;
    for (std::size_t start = 0; start < data.size(); start += chunk) {
        idx.resize(std::min(chunk, data.size() - start));
        std::iota(idx.begin(), idx.end(), start);
        forward(net, gather(data.inputs, idx, net.config.input_size), false, nullptr, cache);
        for (std::size_t j = 0; j < idx.size(); ++j) {
            const double z = cache.logits(0, static_cast<Eigen::Index>(j));
            const int y = data.labels[idx[j]];
            r.loss += softplus(z) - y * z;
            r.correct += static_cast<std::size_t>((z >= 0.0 ? 1 : 0) == y);
        }
    }
    r.loss /= static_cast<double>(data.size());
    return r;
}

bool finite(const NetworkParams& p) {
    for (const auto* t : p.tensors()) {
        if (!t->allFinite()) return false;
    }
    return true;
}

}  // namespace

void LstmParams::validate() const {
    const auto h = wh.cols();
    if (wh.rows() != 4 * h || wx.rows() != 4 * h || b.rows() != 4 * h || b.cols() != 1 || h < 1) {
        throw std::invalid_argument("lstm: inconsistent parameter shapes");
    }
}

LstmState lstm_cell_forward(const LstmParams& p, const VectorXd& x, const VectorXd& h_prev, const VectorXd& c_prev) {
    p.validate();
    const auto h = p.wh.cols();
    if (x.size() != p.wx.cols() || h_prev.size() != h || c_prev.size() != h) {
        throw std::invalid_argument("lstm: input/state size mismatch");
    }
    const VectorXd a = p.wx * x + p.wh * h_prev + p.b.col(0);
    const VectorXd f = a.head(h).unaryExpr([](double v) { return sigmoid(v); });
    const VectorXd i = a.segment(h, h).unaryExpr([](double v) { return sigmoid(v); });
    const VectorXd o = a.segment(2 * h, h).unaryExpr([](double v) { return sigmoid(v); });
    const VectorXd g = a.tail(h).array().tanh().matrix();
    LstmState s;
    s.c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
    s.h = o.cwiseProduct(s.c.array().tanh().matrix());
    return s;
}

void NetworkConfig::validate() const {
    if (input_size < 1 || conv_filters < 1 || kernel_size < 1 || conv_stride < 1 || pool_size < 1 ||
        hidden_size < 1) {
        throw ConfigError("network: layer sizes must be positive");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("network: dropout must lie in [0, 1)");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("network: bad learning rate");
    if (batch_size < 1 || max_epochs < 0 || patience < 0) throw ConfigError("network: bad training schedule");
}

std::array<MatrixXd*, NetworkParams::kTensorCount> NetworkParams::tensors() {
    return {&conv_w, &conv_b, &lstm.wx, &lstm.wh, &lstm.b, &dense_w, &dense_b};
}

std::array<const MatrixXd*, NetworkParams::kTensorCount> NetworkParams::tensors() const {
    return {&conv_w, &conv_b, &lstm.wx, &lstm.wh, &lstm.b, &dense_w, &dense_b};
}

const std::array<std::string, NetworkParams::kTensorCount>& NetworkParams::tensor_names() {
    static const std::array<std::string, kTensorCount> names = {"conv_w", "conv_b", "lstm_wx", "lstm_wh",
                                                                 "lstm_b", "dense_w", "dense_b"};
    return names;
}

NetworkParams NetworkParams::zeros_like() const {
    NetworkParams z;
    auto dst = z.tensors();
    auto src = tensors();
    for (std::size_t i = 0; i < kTensorCount; ++i) *dst[i] = MatrixXd::Zero(src[i]->rows(), src[i]->cols());
    return z;
}

Network make_network(const NetworkConfig& config) {
    config.validate();
    Network net;
    net.config = config;
    std::mt19937_64 rng(derive_seed(config.seed, "init"));
    const int d = config.input_size;
    const int k = config.kernel_size;
    const int f = config.conv_filters;
    const int h = config.hidden_size;
    auto& p = net.params;
    p.conv_w = glorot(f, k * d, k * d, f, rng);
    p.conv_b = MatrixXd::Zero(f, 1);
    p.lstm.wx = glorot(4 * h, f, f, h, rng);
    p.lstm.wh = glorot(4 * h, h, h, h, rng);
    p.lstm.b = MatrixXd::Zero(4 * h, 1);
    p.dense_w = MatrixXd::Zero(1, h);
    p.dense_b = MatrixXd::Zero(1, 1);
    return net;
}

double network_forward(const Network& net, const Sequence& sample, bool training, std::mt19937_64* rng) {
    if (sample.empty()) throw DataError("network: empty sample");
    const std::vector<Sequence> one{sample};
    const std::size_t idx = 0;
    Cache cache;
    forward(net, gather(one, std::span<const std::size_t>(&idx, 1), net.config.input_size), training, rng, cache);
    return sigmoid(cache.logits(0, 0));
}

std::vector<double> predict_proba(const Network& net, const std::vector<Sequence>& samples) {
    std::vector<double> out;
    out.reserve(samples.size());
    constexpr std::size_t chunk = 256;
    std::vector<std::size_t> idx;
    Cache cache;
    for (std::size_t start = 0; start < samples.size(); start += chunk) {
        idx.resize(std::min(chunk, samples.size() - start));
        std::iota(idx.begin(), idx.end(), start);
        forward(net, gather(samples, idx, net.config.input_size), false, nullptr, cache);
        for (Eigen::Index j = 0; j < cache.logits.cols(); ++j) out.push_back(sigmoid(cache.logits(0, j)));
    }
    return out;
}

BatchResult loss_and_gradient(const Network& net, const SequenceSet& data, std::span<const std::size_t> batch,
                              bool training, std::mt19937_64* rng, const GradientHook& hook) {
    Cache cache;
    forward(net, gather(data.inputs, batch, net.config.input_size), training, rng, cache);
    const auto n = static_cast<double>(batch.size());
    BatchResult r;
    MatrixXd dlogits(1, static_cast<Eigen::Index>(batch.size()));
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const double z = cache.logits(0, static_cast<Eigen::Index>(j));
        const int y = data.labels[batch[j]];
        r.loss += softplus(z) - y * z;
        r.correct += static_cast<std::size_t>((z >= 0.0 ? 1 : 0) == y);
        dlogits(0, static_cast<Eigen::Index>(j)) = (sigmoid(z) - y) / n;
    }
    r.loss /= n;
    backward(net, cache, dlogits, r.grads);
    if (hook) hook(r.grads);
    return r;
}

TrainHistory train_network(Network& net, const SequenceSet& train, const SequenceSet& validation) {
    const auto& cfg = net.config;
    cfg.validate();
    if (train.size() == 0) throw DataError("network: empty training set");
    if (train.labels.size() != train.size() || validation.labels.size() != validation.size()) {
        throw DataError("network: label count does not match samples");
    }

    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double adam_eps = 1e-8;
    NetworkParams m = net.params.zeros_like();
    NetworkParams v = net.params.zeros_like();
    long long step = 0;

    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, "shuffle"));
    std::mt19937_64 dropout_rng(derive_seed(cfg.seed, "dropout"));
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    TrainHistory history;
    NetworkParams best = net.params;
    double best_val = -1.0;
    int since_best = 0;
    const bool has_val = validation.size() > 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t len = std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
            const std::span<const std::size_t> batch(order.data() + start, len);
            auto r = loss_and_gradient(net, train, batch, true, &dropout_rng);
            if (!std::isfinite(r.loss) || !finite(r.grads)) {
                history.diverged = true;
                break;
            }
            loss_sum += r.loss * static_cast<double>(len);
            correct += r.correct;

            ++step;
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            auto pt = net.params.tensors();
            auto gt = r.grads.tensors();
            auto mt = m.tensors();
            auto vt = v.tensors();
            const NetworkParams before = net.params;
            for (std::size_t i = 0; i < NetworkParams::kTensorCount; ++i) {
                *mt[i] = beta1 * *mt[i] + (1.0 - beta1) * *gt[i];
                *vt[i] = beta2 * *vt[i] + (1.0 - beta2) * gt[i]->cwiseProduct(*gt[i]);
                pt[i]->array() -= cfg.learning_rate * (mt[i]->array() / c1) /
                                  ((vt[i]->array() / c2).sqrt() + adam_eps);
            }
            if (!finite(net.params)) {
                net.params = before;
                history.diverged = true;
                break;
            }
        }
        if (history.diverged) break;

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(train.size());
        rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
        if (has_val) {
            const auto e = evaluate(net, validation);
            rec.val_loss = e.loss;
            rec.val_accuracy = static_cast<double>(e.correct) / static_cast<double>(validation.size());
        }
        history.epochs.push_back(rec);

        if (!has_val) continue;
        if (rec.val_accuracy > best_val) {
            best_val = rec.val_accuracy;
            best = net.params;
            history.best_epoch = epoch;
            since_best = 0;
        } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
            history.early_stopped = true;
            break;
        }
    }
    if (has_val && history.best_epoch > 0) net.params = best;
    if (!has_val) history.best_epoch = static_cast<int>(history.epochs.size());
    return history;
}

GradientCheckResult gradient_check(const Network& net, const Sequence& sample, int label, double eps,
                                   const GradientHook& hook, std::size_t max_per_tensor, std::uint64_t seed) {
    SequenceSet one;
    one.inputs.push_back(sample);
    one.labels.push_back(label);
    const std::size_t idx = 0;
    const std::span<const std::size_t> batch(&idx, 1);
    const auto analytic = loss_and_gradient(net, one, batch, false, nullptr, hook).grads;

    auto loss_at = [&](const Network& n) {
        Cache cache;
        forward(n, gather(one.inputs, batch, n.config.input_size), false, nullptr, cache);
        const double z = cache.logits(0, 0);
        return softplus(z) - label * z;
    };

    GradientCheckResult out;
    Network probe = net;
    auto probe_t = probe.params.tensors();
    const auto grad_t = analytic.tensors();
    std::mt19937_64 rng(seed);
    for (std::size_t ti = 0; ti < NetworkParams::kTensorCount; ++ti) {
        MatrixXd& w = *probe_t[ti];
        const auto n = static_cast<std::size_t>(w.size());
        std::vector<std::size_t> coords(n);
        std::iota(coords.begin(), coords.end(), 0);
        if (max_per_tensor > 0 && n > max_per_tensor) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(max_per_tensor);
            std::sort(coords.begin(), coords.end());
        }
        for (std::size_t c : coords) {
            double* slot = w.data() + c;
            const double orig = *slot;
            *slot = orig + eps;
            const double up = loss_at(probe);
            *slot = orig - eps;
            const double down = loss_at(probe);
            *slot = orig;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = grad_t[ti]->data()[c];
            const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), kGradientCheckFloor);
            out.per_tensor[ti] = std::max(out.per_tensor[ti], rel);
            if (rel > out.max_relative_error || out.checked == 0) {
                out.max_relative_error = rel;
                out.worst_tensor = NetworkParams::tensor_names()[ti];
                out.worst_index = c;
            }
            ++out.checked;
        }
    }
    return out;
}

TensorFile network_tensors(const Network& net, const std::string& provenance) {
    const auto& c = net.config;
    nlohmann::json meta = {{"format", "lcpred.cnn_lstm"},
                           {"version", 1},
                           {"input_size", c.input_size},
                           {"conv_filters", c.conv_filters},
                           {"kernel_size", c.kernel_size},
                           {"conv_stride", c.conv_stride},
                           {"pool_size", c.pool_size},
                           {"dropout", c.dropout},
                           {"hidden_size", c.hidden_size},
                           {"learning_rate", c.learning_rate},
                           {"batch_size", c.batch_size},
                           {"max_epochs", c.max_epochs},
                           {"patience", c.patience},
                           {"seed", c.seed}};
    if (!provenance.empty()) meta["provenance"] = provenance;
    TensorFile file;
    file.metadata = meta.dump();
    const auto ts = net.params.tensors();
    for (std::size_t i = 0; i < NetworkParams::kTensorCount; ++i) {
        const MatrixXd& m = *ts[i];
        Tensor t;
        t.name = NetworkParams::tensor_names()[i];
        t.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
        t.values.reserve(static_cast<std::size_t>(m.size()));
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index col = 0; col < m.cols(); ++col) t.values.push_back(m(r, col));
        }
        file.tensors.push_back(std::move(t));
    }
    return file;
}

Network network_from_tensors(const TensorFile& file) {
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(file.metadata);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("network metadata is not json: ") + e.what());
    }
    if (meta.value("format", "") != "lcpred.cnn_lstm") throw DataError("not a cnn_lstm tensor file");
    NetworkConfig c;
    try {
        c.input_size = meta.at("input_size").get<int>();
        c.conv_filters = meta.at("conv_filters").get<int>();
        c.kernel_size = meta.at("kernel_size").get<int>();
        c.conv_stride = meta.at("conv_stride").get<int>();
        c.pool_size = meta.at("pool_size").get<int>();
        c.dropout = meta.at("dropout").get<double>();
        c.hidden_size = meta.at("hidden_size").get<int>();
        c.learning_rate = meta.at("learning_rate").get<double>();
        c.batch_size = meta.at("batch_size").get<int>();
        c.max_epochs = meta.at("max_epochs").get<int>();
        c.patience = meta.at("patience").get<int>();
        c.seed = meta.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("network metadata incomplete: ") + e.what());
    }
    Network net = make_network(c);
    const auto ts = net.params.tensors();
    for (std::size_t i = 0; i < NetworkParams::kTensorCount; ++i) {
        const Tensor& t = file.get(NetworkParams::tensor_names()[i]);
        MatrixXd& m = *ts[i];
        if (t.dims.size() != 2 || t.dims[0] != static_cast<std::uint64_t>(m.rows()) ||
            t.dims[1] != static_cast<std::uint64_t>(m.cols())) {
            throw DataError("tensor '" + t.name + "' has the wrong shape");
        }
        std::size_t k = 0;
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index col = 0; col < m.cols(); ++col) m(r, col) = t.values[k++];
        }
    }
    return net;
}

std::string history_csv(const TrainHistory& history) {
    CsvWriter w;
    w.row({"epoch", "train_loss", "train_accuracy", "val_loss", "val_accuracy"});
    for (const auto& e : history.epochs) {
        w.cell(e.epoch).cell(e.train_loss).cell(e.train_accuracy).cell(e.val_loss).cell(e.val_accuracy).end_row();
    }
    return w.str();
}

}  // namespace lcpred
