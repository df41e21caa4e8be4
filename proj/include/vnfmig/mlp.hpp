#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "vnfmig/errors.hpp"
#include "vnfmig/rng.hpp"

namespace vnfmig::mlp {

struct ModelSpec {
    int input_dim = 0;
    int output_dim = 0;
    std::vector<int> hidden = {512, 512, 256};
    bool batch_norm = true;
    double bn_epsilon = 1e-5;
    double bn_momentum = 0.99;

    void validate() const {
        if (input_dim < 1) throw ConfigError("model input_dim must be positive");
        if (output_dim < 1) throw ConfigError("model output_dim must be positive");
        for (int width : hidden)
            if (width < 1) throw ConfigError("hidden layer widths must be positive");
        if (!(bn_epsilon > 0.0)) throw ConfigError("bn_epsilon must be positive");
        if (!(bn_momentum >= 0.0 && bn_momentum < 1.0))
            throw ConfigError("bn_momentum must lie in [0, 1)");
    }
};

struct AdamConfig {
    double learning_rate = 0.002318;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
            throw ConfigError("learning_rate must be finite and non-negative");
        if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in [0, 1)");
        if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in [0, 1)");
        if (!(epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
    }
};

struct TrainConfig {
    int epochs = 100;
    int batch_size = 256;
    bool shuffle = true;
    std::uint64_t seed = 1;
    AdamConfig adam;

    void validate() const {
        if (epochs < 1) throw ConfigError("epochs must be positive");
        if (batch_size < 1) throw ConfigError("batch_size must be positive");
        adam.validate();
    }
};

struct EpochStats {
    int epoch = 0; // 1-based
    double loss = 0.0;
    double accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
    double seconds = 0.0;
};

struct TrainingHistory {
    std::vector<EpochStats> epochs;
    bool has_validation = false;
};

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gather_rows(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m, const std::vector<int>& rows) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(
        static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t k = 0; k < rows.size(); ++k)
        out.row(static_cast<Eigen::Index>(k)) = m.row(rows[k]);
    return out;
}

/// Mean binary cross entropy over every matrix element, probabilities
/// clipped to [1e-7, 1 - 1e-7].
template <typename Scalar>
Scalar bce_loss(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& probs,
                const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& targets) {
    if (probs.rows() != targets.rows() || probs.cols() != targets.cols())
        throw SchemaMismatch("bce operands differ in shape");
    const Scalar lo = Scalar(1e-7);
    const Scalar hi = Scalar(1) - lo;
    const auto p = probs.array().min(hi).max(lo);
    const auto y = targets.array();
    const Scalar total = -(y * p.log() + (Scalar(1) - y) * (Scalar(1) - p).log()).sum();
    return total / static_cast<Scalar>(probs.size());
}

/// Per-instance first maximum over each server block of a probability row.
inline Eigen::VectorXi decode_placement(const Eigen::VectorXf& probabilities, int n_instances,
                                        int n_servers) {
    if (probabilities.size() != static_cast<Eigen::Index>(n_instances) * n_servers)
        throw SchemaMismatch("probability row does not match instance/server shape");
    Eigen::VectorXi placement(n_instances);
    for (int i = 0; i < n_instances; ++i) {
        int arg = 0;
        float best = probabilities(i * n_servers);
        for (int s = 1; s < n_servers; ++s) {
            const float v = probabilities(i * n_servers + s);
            if (v > best) {
                best = v;
                arg = s;
            }
        }
        placement(i) = arg;
    }
    return placement;
}

template <typename Scalar>
class MlpModel {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

    struct Gradients {
        std::vector<Vector> g; // aligned with tensor indices
    };

    MlpModel(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
        spec_.validate();
        Rng rng(seed);
        int fan_in = spec_.input_dim;
        for (int width : spec_.hidden) {
            dense_.push_back(make_dense(fan_in, width, rng));
            if (spec_.batch_norm) bn_.push_back(make_bn(width));
            fan_in = width;
        }
        dense_.push_back(make_dense(fan_in, spec_.output_dim, rng));
        build_registry();
        adam_m_.resize(registry_.size());
        adam_v_.resize(registry_.size());
        for (std::size_t k = 0; k < registry_.size(); ++k) {
            adam_m_[k] = Vector::Zero(tensor_size(static_cast<int>(k)));
            adam_v_[k] = Vector::Zero(tensor_size(static_cast<int>(k)));
        }
    }

    const ModelSpec& spec() const { return spec_; }
    std::int64_t adam_steps() const { return adam_t_; }

    int tensor_count() const { return static_cast<int>(registry_.size()); }

    const std::string& tensor_name(int k) const { return registry_[check_tensor(k)].name; }

    Eigen::Index tensor_size(int k) const {
        Scalar* data = nullptr;
        Eigen::Index size = 0;
        const_cast<MlpModel*>(this)->resolve(check_tensor(k), data, size);
        return size;
    }

    Eigen::Map<Vector> tensor(int k) {
        Scalar* data = nullptr;
        Eigen::Index size = 0;
        resolve(check_tensor(k), data, size);
        return Eigen::Map<Vector>(data, size);
    }

    Eigen::Map<const Vector> tensor(int k) const {
        Scalar* data = nullptr;
        Eigen::Index size = 0;
        const_cast<MlpModel*>(this)->resolve(check_tensor(k), data, size);
        return Eigen::Map<const Vector>(data, size);
    }

    std::int64_t parameter_count() const {
        std::int64_t total = 0;
        for (int k = 0; k < tensor_count(); ++k) total += tensor_size(k);
        return total;
    }

    /// Batch-norm running statistics; not touched by the optimizer.
    std::int64_t non_trainable_count() const {
        std::int64_t total = 0;
        for (const BnLayer& bn : bn_) total += bn.running_mean.size() + bn.running_var.size();
        return total;
    }

    std::uint64_t train_seed() const { return train_seed_; }

    /// Inference pass using running batch-norm statistics.
    Matrix predict(const Matrix& x) const {
        check_input(x);
        Matrix a = x;
        for (std::size_t layer = 0; layer < spec_.hidden.size(); ++layer) {
            Matrix z = dense_forward(dense_[layer], a);
            if (spec_.batch_norm) {
                const BnLayer& bn = bn_[layer];
                const RowVector rstd =
                    (bn.running_var.array() + Scalar(spec_.bn_epsilon)).sqrt().inverse().matrix().transpose();
                z = ((((z.rowwise() - bn.running_mean.transpose()).array().rowwise() *
                       rstd.array())
                          .rowwise() *
                      bn.gamma.transpose().array())
                         .rowwise() +
                     bn.beta.transpose().array())
                        .matrix();
            }
            a = z.cwiseMax(Scalar(0));
        }
        Matrix logits = dense_forward(dense_.back(), a);
        return sigmoid(logits);
    }

    Scalar loss_eval(const Matrix& x, const Matrix& y) const { return bce_loss<Scalar>(predict(x), y); }

    /// Training-mode forward pass without touching running statistics.
    Scalar loss_train(const Matrix& x, const Matrix& y) {
        Cache cache;
        forward_train(x, cache, false);
        return bce_loss<Scalar>(cache.probs, y);
    }

    /// Per-layer batch-normalized activations (before scale and shift) of a
    /// training-mode pass; running statistics stay untouched.
    std::vector<Matrix> bn_normalized(const Matrix& x) {
        Cache cache;
        forward_train(x, cache, false);
        return cache.bn_xhat;
    }

    /// Training-mode forward and backward pass; fills per-tensor gradients of
    /// the mean clipped BCE and returns the loss. When requested, also counts
    /// output components matching the targets at threshold 0.5.
    Scalar forward_backward(const Matrix& x, const Matrix& y, Gradients& grads,
                            bool update_running, std::int64_t* correct = nullptr) {
        Cache cache;
        forward_train(x, cache, update_running);
        if (cache.probs.rows() != y.rows() || cache.probs.cols() != y.cols())
            throw SchemaMismatch("target shape does not match model output");
        const Scalar loss = bce_loss<Scalar>(cache.probs, y);
        if (correct)
            *correct = ((cache.probs.array() >= Scalar(0.5)) == (y.array() >= Scalar(0.5))).count();

        grads.g.assign(registry_.size(), Vector());
        const Scalar lo = Scalar(1e-7);
        const Scalar hi = Scalar(1) - lo;
        const Scalar inv_n = Scalar(1) / static_cast<Scalar>(cache.probs.size());
        // Clipped probabilities sit on a flat stretch of the loss surface.
        Matrix delta = ((cache.probs.array() > lo && cache.probs.array() < hi)
                            .select((cache.probs.array() - y.array()) * inv_n, Scalar(0)))
                           .matrix();

        const int n_hidden = static_cast<int>(spec_.hidden.size());
        dense_backward(static_cast<int>(dense_.size()) - 1, cache.dense_in.back(), delta, grads);
        Matrix upstream = delta * dense_.back().w.transpose();
        for (int layer = n_hidden - 1; layer >= 0; --layer) {
            Matrix dh =
                (upstream.array() * (cache.relu_pre[static_cast<std::size_t>(layer)].array() > Scalar(0))
                                        .template cast<Scalar>())
                    .matrix();
            Matrix dz;
            if (spec_.batch_norm) {
                const BnLayer& bn = bn_[static_cast<std::size_t>(layer)];
                const Matrix& xhat = cache.bn_xhat[static_cast<std::size_t>(layer)];
                const Vector& rstd = cache.bn_rstd[static_cast<std::size_t>(layer)];
                const RowVector dh_mean = dh.colwise().mean();
                const RowVector dhx_mean = (dh.array() * xhat.array()).colwise().mean().matrix();
                grads.g[bn_tensor_index(layer, 0)] =
                    (dh.array() * xhat.array()).colwise().sum().matrix().transpose();
                grads.g[bn_tensor_index(layer, 1)] = dh.colwise().sum().transpose();
                const RowVector scale =
                    (bn.gamma.array() * rstd.array()).matrix().transpose();
                dz = (((dh.rowwise() - dh_mean).array() -
                       xhat.array().rowwise() * dhx_mean.array())
                          .rowwise() *
                      scale.array())
                         .matrix();
            } else {
                dz = std::move(dh);
            }
            dense_backward(layer, cache.dense_in[static_cast<std::size_t>(layer)], dz, grads);
            if (layer > 0) upstream = dz * dense_[static_cast<std::size_t>(layer)].w.transpose();
        }
        return loss;
    }

    void adam_step(const Gradients& grads, const AdamConfig& cfg) {
        if (grads.g.size() != registry_.size())
            throw SchemaMismatch("gradient tensor count does not match model");
        ++adam_t_;
        const Scalar b1 = Scalar(cfg.beta1);
        const Scalar b2 = Scalar(cfg.beta2);
        const Scalar correction1 = Scalar(1) - std::pow(b1, Scalar(adam_t_));
        const Scalar correction2 = Scalar(1) - std::pow(b2, Scalar(adam_t_));
        const Scalar lr = Scalar(cfg.learning_rate);
        const Scalar eps = Scalar(cfg.epsilon);
        for (int k = 0; k < tensor_count(); ++k) {
            const Vector& g = grads.g[static_cast<std::size_t>(k)];
            Vector& m = adam_m_[static_cast<std::size_t>(k)];
            Vector& v = adam_v_[static_cast<std::size_t>(k)];
            m = b1 * m + (Scalar(1) - b1) * g;
            v = (b2 * v.array() + (Scalar(1) - b2) * g.array().square()).matrix();
            auto params = tensor(k);
            params.array() -=
                lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
        }
    }

    /// Mini-batch training over the given rows of x/y. Per-epoch loss and
    /// accuracy are accumulated over training batches; validation metrics use
    /// inference mode on val_rows when given.
    TrainingHistory train(const Matrix& x, const Matrix& y, const std::vector<int>& rows,
                          const TrainConfig& cfg, const std::vector<int>& val_rows = {},
                          const std::function<void(const EpochStats&)>& on_epoch = {}) {
        cfg.validate();
        check_input(x);
        if (y.rows() != x.rows() || y.cols() != spec_.output_dim)
            throw SchemaMismatch("target matrix does not match model output");
        if (rows.empty()) throw DegenerateDataset("training row set is empty");
        for (int r : rows)
            if (r < 0 || r >= x.rows()) throw SchemaMismatch("training row index out of range");
        for (int r : val_rows)
            if (r < 0 || r >= x.rows()) throw SchemaMismatch("validation row index out of range");
        train_seed_ = cfg.seed;

        Matrix vx;
        Matrix vy;
        if (!val_rows.empty()) {
            vx = gather_rows<Scalar>(x, val_rows);
            vy = gather_rows<Scalar>(y, val_rows);
        }

        std::vector<int> order = rows;
        Rng rng(cfg.seed);
        TrainingHistory history;
        history.has_validation = !val_rows.empty();
        history.epochs.reserve(static_cast<std::size_t>(cfg.epochs));
        Gradients grads;
        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            const auto started = std::chrono::steady_clock::now();
            if (cfg.shuffle) rng.shuffle(order);
            double weighted = 0.0;
            std::int64_t correct = 0;
            int batch_index = 0;
            for (std::size_t start = 0; start < order.size();
                 start += static_cast<std::size_t>(cfg.batch_size), ++batch_index) {
                const std::size_t stop =
                    std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
                const std::vector<int> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                             order.begin() + static_cast<std::ptrdiff_t>(stop));
                const Matrix bx = gather_rows<Scalar>(x, batch);
                const Matrix by = gather_rows<Scalar>(y, batch);
                std::int64_t batch_correct = 0;
                const Scalar loss = forward_backward(bx, by, grads, true, &batch_correct);
                if (!std::isfinite(static_cast<double>(loss)))
                    throw NonFiniteLoss("training loss is not finite at epoch " +
                                            std::to_string(epoch) + ", batch " +
                                            std::to_string(batch_index),
                                        epoch, batch_index);
                weighted += static_cast<double>(loss) * static_cast<double>(batch.size());
                correct += batch_correct;
                adam_step(grads, cfg.adam);
            }
            EpochStats stats;
            stats.epoch = epoch + 1;
            stats.loss = weighted / static_cast<double>(order.size());
            stats.accuracy = static_cast<double>(correct) /
                             (static_cast<double>(order.size()) * spec_.output_dim);
            if (history.has_validation) {
                const Matrix vp = predict(vx);
                stats.val_loss = static_cast<double>(bce_loss<Scalar>(vp, vy));
                stats.val_accuracy =
                    static_cast<double>(
                        ((vp.array() >= Scalar(0.5)) == (vy.array() >= Scalar(0.5))).count()) /
                    static_cast<double>(vp.size());
            }
            stats.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
            history.epochs.push_back(stats);
            if (on_epoch) on_epoch(stats);
        }
        return history;
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path);
        nlohmann::json header;
        header["format"] = "vnfmig-mlp";
        header["version"] = 1;
        header["scalar"] = scalar_tag();
        header["input_dim"] = spec_.input_dim;
        header["output_dim"] = spec_.output_dim;
        header["hidden"] = spec_.hidden;
        header["batch_norm"] = spec_.batch_norm;
        header["bn_epsilon"] = spec_.bn_epsilon;
        header["bn_momentum"] = spec_.bn_momentum;
        header["adam_steps"] = adam_t_;
        header["train_seed"] = train_seed_;
        out << header.dump() << '\n';
        for (int k = 0; k < tensor_count(); ++k) {
            const auto view = tensor(k);
            write_block(out, view.data(), view.size());
        }
        for (const BnLayer& bn : bn_) {
            write_block(out, bn.running_mean.data(), bn.running_mean.size());
            write_block(out, bn.running_var.data(), bn.running_var.size());
        }
        if (!out) throw std::runtime_error("write failed for " + path);
    }

    static MlpModel load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw MissingArtifact("missing model file: " + path);
        std::string line;
        if (!std::getline(in, line)) throw SchemaMismatch("model file has no header: " + path);
        nlohmann::json header;
        try {
            header = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& err) {
            throw SchemaMismatch(std::string("model header parse failure: ") + err.what());
        }
        try {
            if (header.at("format").get<std::string>() != "vnfmig-mlp" ||
                header.at("version").get<int>() != 1)
                throw SchemaMismatch("unsupported model format in " + path);
            if (header.at("scalar").get<std::string>() != scalar_tag())
                throw SchemaMismatch("model scalar type mismatch in " + path);
            ModelSpec spec;
            spec.input_dim = header.at("input_dim").get<int>();
            spec.output_dim = header.at("output_dim").get<int>();
            spec.hidden = header.at("hidden").get<std::vector<int>>();
            spec.batch_norm = header.at("batch_norm").get<bool>();
            spec.bn_epsilon = header.at("bn_epsilon").get<double>();
            spec.bn_momentum = header.at("bn_momentum").get<double>();
            MlpModel model(spec, 0);
            model.adam_t_ = header.at("adam_steps").get<std::int64_t>();
            model.train_seed_ = header.at("train_seed").get<std::uint64_t>();
            for (int k = 0; k < model.tensor_count(); ++k) {
                auto view = model.tensor(k);
                read_block(in, view.data(), view.size(), path);
            }
            for (BnLayer& bn : model.bn_) {
                read_block(in, bn.running_mean.data(), bn.running_mean.size(), path);
                read_block(in, bn.running_var.data(), bn.running_var.size(), path);
            }
            return model;
        } catch (const nlohmann::json::exception& err) {
            throw SchemaMismatch(std::string("model header field failure: ") + err.what());
        }
    }

private:
    struct DenseLayer {
        Matrix w; // fan_in x fan_out
        Vector b;
    };
    struct BnLayer {
        Vector gamma;
        Vector beta;
        Vector running_mean;
        Vector running_var;
    };
    struct TensorRef {
        int layer = 0;
        int item = 0; // 0 weight, 1 bias, 2 gamma, 3 beta
        std::string name;
    };
    struct Cache {
        std::vector<Matrix> dense_in;
        std::vector<Matrix> bn_xhat;
        std::vector<Vector> bn_rstd;
        std::vector<Matrix> relu_pre;
        Matrix probs;
    };

    static const char* scalar_tag() { return sizeof(Scalar) == 4 ? "f32" : "f64"; }

    static DenseLayer make_dense(int fan_in, int fan_out, Rng& rng) {
        DenseLayer layer;
        layer.w.resize(fan_in, fan_out);
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (Eigen::Index k = 0; k < layer.w.size(); ++k)
            layer.w.data()[k] = static_cast<Scalar>(rng.uniform_real(-limit, limit));
        layer.b = Vector::Zero(fan_out);
        return layer;
    }

    static BnLayer make_bn(int width) {
        BnLayer bn;
        bn.gamma = Vector::Ones(width);
        bn.beta = Vector::Zero(width);
        bn.running_mean = Vector::Zero(width);
        bn.running_var = Vector::Ones(width);
        return bn;
    }

    void build_registry() {
        registry_.clear();
        const int n_hidden = static_cast<int>(spec_.hidden.size());
        for (int layer = 0; layer < n_hidden; ++layer) {
            const std::string tag = std::to_string(layer);
            registry_.push_back({layer, 0, "dense" + tag + ".weight"});
            registry_.push_back({layer, 1, "dense" + tag + ".bias"});
            if (spec_.batch_norm) {
                registry_.push_back({layer, 2, "bn" + tag + ".gamma"});
                registry_.push_back({layer, 3, "bn" + tag + ".beta"});
            }
        }
        registry_.push_back({n_hidden, 0, "out.weight"});
        registry_.push_back({n_hidden, 1, "out.bias"});
    }

    std::size_t bn_tensor_index(int layer, int which) const {
        const int per_layer = spec_.batch_norm ? 4 : 2;
        return static_cast<std::size_t>(layer * per_layer + 2 + which);
    }

    int check_tensor(int k) const {
        if (k < 0 || k >= static_cast<int>(registry_.size()))
            throw SchemaMismatch("tensor index out of range");
        return k;
    }

    void resolve(int k, Scalar*& data, Eigen::Index& size) {
        const TensorRef& ref = registry_[static_cast<std::size_t>(k)];
        switch (ref.item) {
            case 0:
                data = dense_[static_cast<std::size_t>(ref.layer)].w.data();
                size = dense_[static_cast<std::size_t>(ref.layer)].w.size();
                return;
            case 1:
                data = dense_[static_cast<std::size_t>(ref.layer)].b.data();
                size = dense_[static_cast<std::size_t>(ref.layer)].b.size();
                return;
            case 2:
                data = bn_[static_cast<std::size_t>(ref.layer)].gamma.data();
                size = bn_[static_cast<std::size_t>(ref.layer)].gamma.size();
                return;
            default:
                data = bn_[static_cast<std::size_t>(ref.layer)].beta.data();
                size = bn_[static_cast<std::size_t>(ref.layer)].beta.size();
                return;
        }
    }

    void check_input(const Matrix& x) const {
        if (x.cols() != spec_.input_dim)
            throw SchemaMismatch("input width " + std::to_string(x.cols()) +
                                 " does not match model input_dim " +
                                 std::to_string(spec_.input_dim));
        if (x.rows() < 1) throw SchemaMismatch("input batch is empty");
    }

    static Matrix dense_forward(const DenseLayer& layer, const Matrix& x) {
        return (x * layer.w).rowwise() + layer.b.transpose();
    }

    void dense_backward(int layer, const Matrix& input, const Matrix& delta, Gradients& grads) {
        const int per_layer = spec_.batch_norm ? 4 : 2;
        const std::size_t base = static_cast<std::size_t>(
            layer < static_cast<int>(spec_.hidden.size()) ? layer * per_layer
                                                          : static_cast<int>(registry_.size()) - 2);
        Matrix gw = input.transpose() * delta;
        grads.g[base] = Eigen::Map<Vector>(gw.data(), gw.size());
        grads.g[base + 1] = delta.colwise().sum().transpose();
    }

    static Matrix sigmoid(const Matrix& z) {
        return (Scalar(1) / (Scalar(1) + (-z.array()).exp())).matrix();
    }

    void forward_train(const Matrix& x, Cache& cache, bool update_running) {
        check_input(x);
        const std::size_t n_hidden = spec_.hidden.size();
        cache.dense_in.clear();
        cache.bn_xhat.assign(spec_.batch_norm ? n_hidden : 0, Matrix());
        cache.bn_rstd.assign(spec_.batch_norm ? n_hidden : 0, Vector());
        cache.relu_pre.assign(n_hidden, Matrix());

        Matrix a = x;
        for (std::size_t layer = 0; layer < n_hidden; ++layer) {
            cache.dense_in.push_back(a);
            Matrix z = dense_forward(dense_[layer], a);
            if (spec_.batch_norm) {
                BnLayer& bn = bn_[layer];
                const RowVector mu = z.colwise().mean();
                const Matrix centered = z.rowwise() - mu;
                const RowVector var = centered.array().square().colwise().mean().matrix();
                const RowVector rstd =
                    (var.array() + Scalar(spec_.bn_epsilon)).sqrt().inverse().matrix();
                const Matrix xhat = (centered.array().rowwise() * rstd.array()).matrix();
                z = ((xhat.array().rowwise() * bn.gamma.transpose().array()).rowwise() +
                     bn.beta.transpose().array())
                        .matrix();
                cache.bn_xhat[layer] = xhat;
                cache.bn_rstd[layer] = rstd.transpose();
                if (update_running) {
                    const Scalar momentum = Scalar(spec_.bn_momentum);
                    bn.running_mean =
                        momentum * bn.running_mean + (Scalar(1) - momentum) * mu.transpose();
                    bn.running_var =
                        momentum * bn.running_var + (Scalar(1) - momentum) * var.transpose();
                }
            }
            cache.relu_pre[layer] = z;
            a = z.cwiseMax(Scalar(0));
        }
        cache.dense_in.push_back(a);
        cache.probs = sigmoid(dense_forward(dense_.back(), a));
    }

    static void write_block(std::ofstream& out, const Scalar* data, Eigen::Index size) {
        out.write(reinterpret_cast<const char*>(data),
                  static_cast<std::streamsize>(size * static_cast<Eigen::Index>(sizeof(Scalar))));
    }

    static void read_block(std::ifstream& in, Scalar* data, Eigen::Index size,
                           const std::string& path) {
        in.read(reinterpret_cast<char*>(data),
                static_cast<std::streamsize>(size * static_cast<Eigen::Index>(sizeof(Scalar))));
        if (in.gcount() != static_cast<std::streamsize>(size * static_cast<Eigen::Index>(sizeof(Scalar))))
            throw SchemaMismatch("model payload truncated in " + path);
    }

    ModelSpec spec_;
    std::vector<DenseLayer> dense_;
    std::vector<BnLayer> bn_;
    std::vector<TensorRef> registry_;
    std::vector<Vector> adam_m_;
    std::vector<Vector> adam_v_;
    std::int64_t adam_t_ = 0;
    std::uint64_t train_seed_ = 0;
};

struct GradientCheckReport {
    double max_rel_error = 0.0;
    double mean_rel_error = 0.0;
    std::int64_t checked = 0;
};

/// Central-difference check of analytic gradients on every parameter of a
/// small model. Runs in training mode without running-stat updates; meant
/// for double-precision models.
template <typename Scalar>
GradientCheckReport gradient_check(MlpModel<Scalar>& model,
                                   const typename MlpModel<Scalar>::Matrix& x,
                                   const typename MlpModel<Scalar>::Matrix& y,
                                   double step = 1e-5) {
    if (model.parameter_count() > 10000)
        throw ConfigError("gradient check sweeps every parameter; use a model under 1e4");
    typename MlpModel<Scalar>::Gradients grads;
    model.forward_backward(x, y, grads, false);

    GradientCheckReport report;
    for (int k = 0; k < model.tensor_count(); ++k) {
        auto view = model.tensor(k);
        for (Eigen::Index local = 0; local < view.size(); ++local) {
            const Scalar original = view(local);
            view(local) = original + Scalar(step);
            const double loss_plus = static_cast<double>(model.loss_train(x, y));
            view(local) = original - Scalar(step);
            const double loss_minus = static_cast<double>(model.loss_train(x, y));
            view(local) = original;
            const double fd = (loss_plus - loss_minus) / (2.0 * step);
            const double analytic = static_cast<double>(grads.g[static_cast<std::size_t>(k)](local));
            const double denom = std::max({std::fabs(fd), std::fabs(analytic), 1e-4});
            const double rel = std::fabs(fd - analytic) / denom;
            report.max_rel_error = std::max(report.max_rel_error, rel);
            report.mean_rel_error += rel;
            ++report.checked;
        }
    }
    if (report.checked > 0) report.mean_rel_error /= static_cast<double>(report.checked);
    return report;
}

} // namespace vnfmig::mlp
