#include "activehne/dhne.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <json.hpp>

namespace ahne {

namespace {

using nlohmann::json;

std::uint64_t mix64(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

DenseMatrix glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseMatrix w(rows, cols);
    for (double& v : w.data) v = dist(rng);
    return w;
}

// Inverted-dropout mask: entries are 0 or 1/(1-rate).
DenseMatrix dropout_mask(std::size_t rows, std::size_t cols, double rate,
                         std::uint64_t seed) {
    DenseMatrix m(rows, cols, 1.0);
    if (rate <= 0.0) return m;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double scale = 1.0 / (1.0 - rate);
    for (double& v : m.data) v = unit(rng) < rate ? 0.0 : scale;
    return m;
}

DenseMatrix gather_rows(const DenseMatrix& x, const std::vector<std::uint32_t>& rows) {
    DenseMatrix out(rows.size(), x.cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy_n(x.data.data() + rows[i] * x.cols, x.cols, out.data.data() + i * x.cols);
    return out;
}

DenseMatrix gather_block(const DenseMatrix& x, const std::vector<std::uint32_t>& rows,
                         std::size_t col_begin, std::size_t width) {
    DenseMatrix out(rows.size(), width);
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy_n(x.data.data() + rows[i] * x.cols + col_begin, width,
                    out.data.data() + i * width);
    return out;
}

void hadamard_inplace(DenseMatrix& a, const DenseMatrix& b) {
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] *= b.data[i];
}

// sum_{k=1..K} P^k Z computed iteratively.
DenseMatrix propagate(const SparseMatrix& p, const DenseMatrix& z, std::size_t k) {
    DenseMatrix acc(z.rows, z.cols);
    DenseMatrix cur = z;
    for (std::size_t step = 0; step < k; ++step) {
        cur = spmm(p, cur);
        for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += cur.data[i];
    }
    return acc;
}

}  // namespace

void DhneConfig::validate() const {
    if (k < 1) throw ConfigError("DhneConfig: k must be >= 1");
    if (hidden < 1) throw ConfigError("DhneConfig: hidden width must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("DhneConfig: dropout must be in [0,1)");
    if (learning_rate <= 0.0) throw ConfigError("DhneConfig: learning rate must be positive");
    if (l2 < 0.0) throw ConfigError("DhneConfig: l2 must be nonnegative");
}

DhneModel init_model(const DhneConfig& cfg, const std::vector<SubNetwork>& subnets,
                     std::size_t feature_dim, std::size_t num_classes) {
    cfg.validate();
    if (subnets.empty()) throw ConfigError("init_model: no sub-networks");
    if (num_classes < 2) throw ConfigError("init_model: need at least two classes");
    DhneModel m;
    m.cfg = cfg;
    m.num_subnets = subnets.size();
    m.feature_dim = feature_dim;
    m.num_classes = num_classes;
    m.d1 = cfg.hidden;
    m.d2 = cfg.out_width == 0 ? num_classes : cfg.out_width;
    std::mt19937_64 rng(cfg.seed);
    const std::size_t t = m.num_subnets;
    for (std::size_t i = 0; i < t; ++i) {
        m.theta0.push_back(glorot(feature_dim, m.d1, rng));
        m.adam0.emplace_back(feature_dim, m.d1, cfg.learning_rate);
    }
    for (std::size_t i = 0; i < t; ++i) {
        m.theta1.push_back(glorot(t * m.d1, m.d2, rng));
        m.adam1.emplace_back(t * m.d1, m.d2, cfg.learning_rate);
    }
    m.theta_pre = glorot(t * m.d2, num_classes, rng);
    m.adam_pre = AdamState(t * m.d2, num_classes, cfg.learning_rate);
    return m;
}

DenseMatrix conv_layer_forward(const SubNetwork& s, const DenseMatrix& z,
                               const DenseMatrix& theta, std::size_t k) {
    if (z.rows != s.size())
        throw Error("conv_layer_forward: signal rows do not match sub-network size");
    return relu(dense_matmul(propagate(s.transition, z, k), theta));
}

DenseMatrix concat_signals(const std::vector<SubNetwork>& subnets,
                           const std::vector<DenseMatrix>& outputs,
                           std::size_t num_nodes, std::size_t width) {
    if (subnets.size() != outputs.size())
        throw Error("concat_signals: sub-network/output count mismatch");
    DenseMatrix z(num_nodes, subnets.size() * width);
    for (std::size_t t = 0; t < subnets.size(); ++t) {
        const DenseMatrix& h = outputs[t];
        if (h.cols != width)
            throw Error("concat_signals: width mismatch across sub-networks");
        if (h.rows != subnets[t].size())
            throw Error("concat_signals: row count does not match sub-network size");
        for (std::size_t i = 0; i < h.rows; ++i)
            std::copy_n(h.data.data() + i * width, width,
                        z.data.data() + subnets[t].members[i] * z.cols + t * width);
    }
    return z;
}

ForwardResult forward(const DhneModel& model, const HinGraph& g,
                      const std::vector<SubNetwork>& subnets, bool training,
                      std::uint64_t dropout_seed, ForwardCache* cache) {
    const std::size_t n = g.num_nodes;
    const std::size_t t_count = subnets.size();
    if (t_count != model.num_subnets || g.feature_dim() != model.feature_dim)
        throw Error("forward: model shapes do not match graph");
    const std::size_t k = model.cfg.k;
    const double rate = training ? model.cfg.dropout : 0.0;

    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c = ForwardCache{};
    c.propagated0.resize(t_count);
    c.mask0.resize(t_count);
    c.propagated1.resize(t_count);
    c.mask1.resize(t_count);

    // Layer 0: input features with dropout.
    DenseMatrix x = g.features;
    if (rate > 0.0)
        hadamard_inplace(x, dropout_mask(n, x.cols, rate, mix64(dropout_seed ^ 0x10)));
    std::vector<DenseMatrix> h0(t_count);
    for (std::size_t t = 0; t < t_count; ++t) {
        DenseMatrix zt = gather_rows(x, subnets[t].members);
        c.propagated0[t] = propagate(subnets[t].transition, zt, k);
        DenseMatrix pre = dense_matmul(c.propagated0[t], model.theta0[t]);
        c.mask0[t] = relu_mask(pre);
        h0[t] = relu(pre);
    }
    DenseMatrix z1 = concat_signals(subnets, h0, n, model.d1);

    // Layer 1.
    c.drop1 = dropout_mask(n, z1.cols, rate, mix64(dropout_seed ^ 0x20));
    DenseMatrix z1d = z1;
    if (rate > 0.0) hadamard_inplace(z1d, c.drop1);
    std::vector<DenseMatrix> h1(t_count);
    for (std::size_t t = 0; t < t_count; ++t) {
        DenseMatrix zt = gather_rows(z1d, subnets[t].members);
        c.propagated1[t] = propagate(subnets[t].transition, zt, k);
        DenseMatrix pre = dense_matmul(c.propagated1[t], model.theta1[t]);
        c.mask1[t] = relu_mask(pre);
        h1[t] = relu(pre);
    }
    DenseMatrix embedding = concat_signals(subnets, h1, n, model.d2);

    // Prediction head.
    c.drop2 = dropout_mask(n, embedding.cols, rate, mix64(dropout_seed ^ 0x30));
    c.head_input = embedding;
    if (rate > 0.0) hadamard_inplace(c.head_input, c.drop2);
    DenseMatrix probs = softmax_rows(dense_matmul(c.head_input, model.theta_pre));
    c.probs = probs;
    c.valid = true;
    return {std::move(embedding), std::move(probs)};
}

double loss(const DenseMatrix& probs, const std::vector<int>& labels,
            const std::vector<std::uint32_t>& labeled, const DhneModel& model,
            double l2) {
    if (labeled.empty())
        throw Error("loss: empty labeled set");
    double data_term = 0.0;
    for (std::uint32_t v : labeled) {
        if (labels[v] < 0)
            throw Error("loss: unlabeled node in labeled set");
        data_term -= std::log(std::max(probs(v, static_cast<std::size_t>(labels[v])), 1e-12));
    }
    double reg = 0.0;
    for (const auto& w : model.theta0) reg += frobenius_norm_sq(w);
    for (const auto& w : model.theta1) reg += frobenius_norm_sq(w);
    reg += frobenius_norm_sq(model.theta_pre);
    return data_term + l2 * reg;
}

Gradients backward(ForwardCache& cache, const std::vector<int>& labels,
                   const std::vector<std::uint32_t>& labeled, const DhneModel& model,
                   const std::vector<SubNetwork>& subnets) {
    if (!cache.valid)
        throw Error("backward: stale forward cache");
    cache.valid = false;
    const std::size_t n = cache.probs.rows;
    const std::size_t t_count = subnets.size();
    const double l2 = model.cfg.l2;

    // Softmax + cross-entropy delta on labeled rows.
    DenseMatrix d_logits(n, model.num_classes);
    for (std::uint32_t v : labeled) {
        if (labels[v] < 0)
            throw Error("backward: unlabeled node in labeled set");
        for (std::size_t c = 0; c < model.num_classes; ++c)
            d_logits(v, c) = cache.probs(v, c);
        d_logits(v, static_cast<std::size_t>(labels[v])) -= 1.0;
    }

    Gradients grads;
    grads.theta_pre = dense_matmul(transpose(cache.head_input), d_logits);
    for (std::size_t i = 0; i < grads.theta_pre.data.size(); ++i)
        grads.theta_pre.data[i] += 2.0 * l2 * model.theta_pre.data[i];

    DenseMatrix d_embedding = dense_matmul(d_logits, transpose(model.theta_pre));
    hadamard_inplace(d_embedding, cache.drop2);

    // Layer 1 backward; accumulate gradient w.r.t. the dropped layer-1 input.
    grads.theta1.resize(t_count);
    DenseMatrix d_z1d(n, t_count * model.d1);
    for (std::size_t t = 0; t < t_count; ++t) {
        DenseMatrix d_h = gather_block(d_embedding, subnets[t].members, t * model.d2, model.d2);
        hadamard_inplace(d_h, cache.mask1[t]);
        grads.theta1[t] = dense_matmul(transpose(cache.propagated1[t]), d_h);
        for (std::size_t i = 0; i < grads.theta1[t].data.size(); ++i)
            grads.theta1[t].data[i] += 2.0 * l2 * model.theta1[t].data[i];
        DenseMatrix d_prop = dense_matmul(d_h, transpose(model.theta1[t]));
        DenseMatrix d_local = propagate(subnets[t].transition_t, d_prop, model.cfg.k);
        for (std::size_t i = 0; i < subnets[t].members.size(); ++i) {
            double* dst = d_z1d.data.data() + subnets[t].members[i] * d_z1d.cols;
            const double* src = d_local.data.data() + i * d_local.cols;
            for (std::size_t j = 0; j < d_local.cols; ++j) dst[j] += src[j];
        }
    }
    hadamard_inplace(d_z1d, cache.drop1);

    // Layer 0 weights; no gradient flows into the raw features.
    grads.theta0.resize(t_count);
    for (std::size_t t = 0; t < t_count; ++t) {
        DenseMatrix d_h = gather_block(d_z1d, subnets[t].members, t * model.d1, model.d1);
        hadamard_inplace(d_h, cache.mask0[t]);
        grads.theta0[t] = dense_matmul(transpose(cache.propagated0[t]), d_h);
        for (std::size_t i = 0; i < grads.theta0[t].data.size(); ++i)
            grads.theta0[t].data[i] += 2.0 * l2 * model.theta0[t].data[i];
    }
    return grads;
}

TrainResult train(DhneModel& model, const HinGraph& g,
                  const std::vector<SubNetwork>& subnets,
                  const std::vector<std::uint32_t>& labeled,
                  const std::vector<std::uint32_t>& validation,
                  std::size_t epochs_override) {
    if (labeled.empty())
        throw Error("train: empty labeled set");
    const std::size_t epochs =
        epochs_override == static_cast<std::size_t>(-1) ? model.cfg.epochs : epochs_override;

    TrainResult result;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        ForwardCache cache;
        std::uint64_t drop_seed =
            mix64(model.cfg.seed ^ (static_cast<std::uint64_t>(model.adam_pre.step) << 17));
        ForwardResult out = forward(model, g, subnets, true, drop_seed, &cache);
        double l = loss(out.probs, g.label, labeled, model, model.cfg.l2);
        if (!std::isfinite(l))
            throw NumericError("training diverged at epoch " + std::to_string(epoch + 1));
        result.loss_trace.push_back(l);
        Gradients grads = backward(cache, g.label, labeled, model, subnets);
        for (std::size_t t = 0; t < model.num_subnets; ++t) {
            adam_step(model.theta0[t], grads.theta0[t], model.adam0[t]);
            adam_step(model.theta1[t], grads.theta1[t], model.adam1[t]);
        }
        adam_step(model.theta_pre, grads.theta_pre, model.adam_pre);

        if (model.cfg.early_stopping > 0 && !validation.empty()) {
            ForwardResult val_out = forward(model, g, subnets, false, 0);
            double val_loss = loss(val_out.probs, g.label, validation, model, 0.0);
            if (val_loss < best_val) {
                best_val = val_loss;
                since_best = 0;
            } else if (++since_best >= model.cfg.early_stopping) {
                break;
            }
        }
    }
    result.output = forward(model, g, subnets, false, 0);
    return result;
}

std::vector<int> predict(const DenseMatrix& probs) {
    std::vector<int> labels(probs.rows);
    for (std::size_t i = 0; i < probs.rows; ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < probs.cols; ++c)
            if (probs(i, c) > probs(i, best)) best = c;  // ties keep smallest index
        labels[i] = static_cast<int>(best);
    }
    return labels;
}

std::uint64_t subnet_fingerprint(const std::vector<SubNetwork>& subnets) {
    std::uint64_t h = 1469598103934665603ULL;
    auto feed = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (i * 8)) & 0xFF;
            h *= 1099511628211ULL;
        }
    };
    feed(subnets.size());
    for (const auto& s : subnets) {
        feed(static_cast<std::uint64_t>(s.type_a));
        feed(static_cast<std::uint64_t>(s.type_b));
        feed(s.size());
        feed(s.adjacency.nnz());
    }
    return h;
}

namespace {

json matrix_to_json(const DenseMatrix& m) {
    return json{{"rows", m.rows}, {"cols", m.cols}, {"values", m.data}};
}

DenseMatrix matrix_from_json(const json& j) {
    DenseMatrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.data = j.at("values").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols)
        throw DataError("checkpoint: matrix size mismatch");
    return m;
}

}  // namespace

void save_checkpoint(const DhneModel& model, const std::vector<SubNetwork>& subnets,
                     const std::string& path) {
    json j;
    j["format"] = "activehne-checkpoint-v1";
    j["fingerprint"] = subnet_fingerprint(subnets);
    j["config"] = {{"k", model.cfg.k},
                   {"hidden", model.cfg.hidden},
                   {"out_width", model.cfg.out_width},
                   {"l2", model.cfg.l2},
                   {"dropout", model.cfg.dropout},
                   {"epochs", model.cfg.epochs},
                   {"learning_rate", model.cfg.learning_rate},
                   {"early_stopping", model.cfg.early_stopping},
                   {"add_self_loops", model.cfg.add_self_loops},
                   {"seed", model.cfg.seed}};
    j["feature_dim"] = model.feature_dim;
    j["num_classes"] = model.num_classes;
    json t0 = json::array(), t1 = json::array();
    for (const auto& w : model.theta0) t0.push_back(matrix_to_json(w));
    for (const auto& w : model.theta1) t1.push_back(matrix_to_json(w));
    j["theta0"] = std::move(t0);
    j["theta1"] = std::move(t1);
    j["theta_pre"] = matrix_to_json(model.theta_pre);
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot write checkpoint: " + path);
    out << j.dump();
}

DhneModel load_checkpoint(const std::string& path, const std::vector<SubNetwork>& subnets) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open checkpoint: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("checkpoint parse error: " + std::string(e.what()));
    }
    if (j.value("format", "") != "activehne-checkpoint-v1")
        throw DataError("not an activehne checkpoint: " + path);
    if (j.at("fingerprint").get<std::uint64_t>() != subnet_fingerprint(subnets))
        throw DataError("checkpoint fingerprint does not match the graph decomposition");
    DhneConfig cfg;
    const json& c = j.at("config");
    cfg.k = c.at("k").get<std::size_t>();
    cfg.hidden = c.at("hidden").get<std::size_t>();
    cfg.out_width = c.at("out_width").get<std::size_t>();
    cfg.l2 = c.at("l2").get<double>();
    cfg.dropout = c.at("dropout").get<double>();
    cfg.epochs = c.at("epochs").get<std::size_t>();
    cfg.learning_rate = c.at("learning_rate").get<double>();
    cfg.early_stopping = c.at("early_stopping").get<std::size_t>();
    cfg.add_self_loops = c.at("add_self_loops").get<bool>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    DhneModel m = init_model(cfg, subnets, j.at("feature_dim").get<std::size_t>(),
                             j.at("num_classes").get<std::size_t>());
    if (j.at("theta0").size() != m.theta0.size() || j.at("theta1").size() != m.theta1.size())
        throw DataError("checkpoint: sub-network count mismatch");
    for (std::size_t t = 0; t < m.theta0.size(); ++t) {
        DenseMatrix w = matrix_from_json(j.at("theta0")[t]);
        if (!w.same_shape(m.theta0[t])) throw DataError("checkpoint: weight shape mismatch");
        m.theta0[t] = std::move(w);
    }
    for (std::size_t t = 0; t < m.theta1.size(); ++t) {
        DenseMatrix w = matrix_from_json(j.at("theta1")[t]);
        if (!w.same_shape(m.theta1[t])) throw DataError("checkpoint: weight shape mismatch");
        m.theta1[t] = std::move(w);
    }
    DenseMatrix pre = matrix_from_json(j.at("theta_pre"));
    if (!pre.same_shape(m.theta_pre)) throw DataError("checkpoint: weight shape mismatch");
    m.theta_pre = std::move(pre);
    return m;
}

}  // namespace ahne
