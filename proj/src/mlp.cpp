#include "fibcast/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "fibcast/common.hpp"
#include "fibcast/leakage.hpp"
#include "fibcast/parallel.hpp"
#include "fibcast/rng.hpp"

namespace fibcast::mlp {

using json = nlohmann::ordered_json;

void Config::validate() const {
    if (hidden.empty()) throw DomainError("mlp: at least one hidden layer required");
    for (const int h : hidden) {
        if (h < 1) throw DomainError("mlp: layer widths must be >= 1");
    }
    if (!(learning_rate > 0.0)) throw DomainError("mlp: learning_rate must be > 0");
    if (batch_size < 1) throw DomainError("mlp: batch_size must be >= 1");
    if (max_epochs < 0) throw DomainError("mlp: max_epochs must be >= 0");
}

namespace {

struct Workspace {
    // per layer: pre-activations z[l] and activations a[l] (a[0] = input)
    std::vector<std::vector<double>> a;
    std::vector<std::vector<double>> z;
    std::vector<std::vector<double>> delta;

    explicit Workspace(const std::vector<int>& sizes) {
        a.resize(sizes.size());
        z.resize(sizes.size());
        delta.resize(sizes.size());
        for (std::size_t l = 0; l < sizes.size(); ++l) {
            a[l].resize(static_cast<std::size_t>(sizes[l]));
            z[l].resize(static_cast<std::size_t>(sizes[l]));
            delta[l].resize(static_cast<std::size_t>(sizes[l]));
        }
    }
};

double forward(const Model& m, std::span<const double> x, Workspace& ws) {
    const std::size_t layers = m.weights.size();
    std::copy(x.begin(), x.end(), ws.a[0].begin());
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t n_out = ws.a[l + 1].size();
        const std::size_t n_in = ws.a[l].size();
        const double* w = m.weights[l].data();
        const bool output_layer = (l == layers - 1);
        for (std::size_t o = 0; o < n_out; ++o) {
            double acc = m.biases[l][o];
            const double* wr = w + o * n_in;
            for (std::size_t i = 0; i < n_in; ++i) acc += wr[i] * ws.a[l][i];
            ws.z[l + 1][o] = acc;
            ws.a[l + 1][o] = output_layer ? acc : std::max(0.0, acc);
        }
    }
    return ws.a[layers][0];
}

// Accumulates gradients for one row given dL/dpred.
void backward(const Model& m, Workspace& ws, double dpred,
              std::vector<std::vector<double>>& grad_w,
              std::vector<std::vector<double>>& grad_b) {
    const std::size_t layers = m.weights.size();
    ws.delta[layers][0] = dpred;
    for (std::size_t l = layers; l-- > 0;) {
        const std::size_t n_out = ws.a[l + 1].size();
        const std::size_t n_in = ws.a[l].size();
        for (std::size_t o = 0; o < n_out; ++o) {
            const double d = ws.delta[l + 1][o];
            grad_b[l][o] += d;
            double* gw = grad_w[l].data() + o * n_in;
            for (std::size_t i = 0; i < n_in; ++i) gw[i] += d * ws.a[l][i];
        }
        if (l == 0) break;
        for (std::size_t i = 0; i < n_in; ++i) {
            double acc = 0.0;
            for (std::size_t o = 0; o < n_out; ++o) {
                acc += m.weights[l][o * n_in + i] * ws.delta[l + 1][o];
            }
            ws.delta[l][i] = ws.z[l][i] > 0.0 ? acc : 0.0;
        }
    }
}

std::vector<std::vector<double>> zeros_like(const std::vector<std::vector<double>>& shape) {
    std::vector<std::vector<double>> out(shape.size());
    for (std::size_t i = 0; i < shape.size(); ++i) out[i].assign(shape[i].size(), 0.0);
    return out;
}

double full_mse(const Model& m, const data::FeatureMatrix& X, std::span<const double> y,
                Workspace& ws) {
    double acc = 0.0;
    for (std::size_t r = 0; r < X.n_rows; ++r) {
        const double e = forward(m, X.row(r), ws) - y[r];
        acc += e * e;
    }
    return acc / static_cast<double>(X.n_rows);
}

} // namespace

Model init_model(int n_inputs, const Config& cfg) {
    cfg.validate();
    if (n_inputs < 1) throw DomainError("mlp: need at least one input feature");
    Model m;
    m.layer_sizes.push_back(n_inputs);
    for (const int h : cfg.hidden) m.layer_sizes.push_back(h);
    m.layer_sizes.push_back(1);

    rng::Rng rng(rng::derive_seed(cfg.seed, 0xA11C0DE));
    for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
        const int fan_in = m.layer_sizes[l];
        const int fan_out = m.layer_sizes[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::vector<double> w(static_cast<std::size_t>(fan_in) * static_cast<std::size_t>(fan_out));
        for (auto& v : w) v = rng.uniform(-bound, bound);
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(static_cast<std::size_t>(fan_out), 0.0);
    }
    return m;
}

Model fit_mlp(const data::FeatureMatrix& X, std::span<const double> y, const Config& cfg,
              std::vector<double>* epoch_loss) {
    cfg.validate();
    leakage::check(X.row_ids, "fit_mlp");
    if (!X.standardized) throw PipelineError("fit_mlp: features must be standardized first");
    if (X.n_rows == 0) throw DomainError("fit_mlp: empty data");
    if (X.n_rows != y.size()) throw ShapeError("fit_mlp: |y| must equal rows(X)");

    Model m = init_model(static_cast<int>(X.n_cols), cfg);
    Workspace ws(m.layer_sizes);

    auto grad_w = zeros_like(m.weights);
    auto grad_b = zeros_like(m.biases);
    auto m_w = zeros_like(m.weights);
    auto m_b = zeros_like(m.biases);
    auto v_w = zeros_like(m.weights);
    auto v_b = zeros_like(m.biases);

    rng::Rng shuffle_rng(rng::derive_seed(cfg.seed, 0x5B0F));
    std::vector<std::size_t> order(X.n_rows);
    std::iota(order.begin(), order.end(), std::size_t{0});

    if (epoch_loss) epoch_loss->clear();
    long long t = 0;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < X.n_rows;
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(X.n_rows, start + static_cast<std::size_t>(cfg.batch_size));
            const double inv_n = 1.0 / static_cast<double>(end - start);
            for (auto& g : grad_w) std::fill(g.begin(), g.end(), 0.0);
            for (auto& g : grad_b) std::fill(g.begin(), g.end(), 0.0);

            double batch_loss = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t r = order[k];
                const double pred = forward(m, X.row(r), ws);
                const double err = pred - y[r];
                batch_loss += err * err;
                backward(m, ws, 2.0 * err * inv_n, grad_w, grad_b);
            }
            if (!std::isfinite(batch_loss)) {
                throw ConvergenceError("fit_mlp: training loss diverged at epoch " +
                                       std::to_string(epoch));
            }

            ++t;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
            for (std::size_t l = 0; l < m.weights.size(); ++l) {
                for (std::size_t i = 0; i < m.weights[l].size(); ++i) {
                    const double g = grad_w[l][i];
                    m_w[l][i] = cfg.beta1 * m_w[l][i] + (1.0 - cfg.beta1) * g;
                    v_w[l][i] = cfg.beta2 * v_w[l][i] + (1.0 - cfg.beta2) * g * g;
                    m.weights[l][i] -= cfg.learning_rate * (m_w[l][i] / bc1) /
                                       (std::sqrt(v_w[l][i] / bc2) + cfg.adam_eps);
                }
                for (std::size_t i = 0; i < m.biases[l].size(); ++i) {
                    const double g = grad_b[l][i];
                    m_b[l][i] = cfg.beta1 * m_b[l][i] + (1.0 - cfg.beta1) * g;
                    v_b[l][i] = cfg.beta2 * v_b[l][i] + (1.0 - cfg.beta2) * g * g;
                    m.biases[l][i] -= cfg.learning_rate * (m_b[l][i] / bc1) /
                                      (std::sqrt(v_b[l][i] / bc2) + cfg.adam_eps);
                }
            }
        }
        if (epoch_loss) epoch_loss->push_back(full_mse(m, X, y, ws));
    }
    return m;
}

double predict_mlp(const Model& m, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(m.layer_sizes.front())) {
        throw ShapeError("predict_mlp: feature count mismatch");
    }
    Workspace ws(m.layer_sizes);
    return forward(m, x, ws);
}

std::vector<double> predict_batch_serial(const Model& m, const data::FeatureMatrix& X) {
    Workspace ws(m.layer_sizes);
    std::vector<double> out(X.n_rows);
    for (std::size_t r = 0; r < X.n_rows; ++r) out[r] = forward(m, X.row(r), ws);
    return out;
}

std::vector<double> predict_batch(const Model& m, const data::FeatureMatrix& X) {
    if (!par::enabled() || X.n_rows < 64) return predict_batch_serial(m, X);
    std::vector<double> out(X.n_rows);
    const std::int64_t n = static_cast<std::int64_t>(X.n_rows);
#pragma omp parallel
    {
        Workspace ws(m.layer_sizes);
#pragma omp for schedule(static)
        for (std::int64_t r = 0; r < n; ++r) {
            out[static_cast<std::size_t>(r)] = forward(m, X.row(static_cast<std::size_t>(r)), ws);
        }
    }
    return out;
}

double loss_and_gradient(const Model& m, const data::FeatureMatrix& X, std::span<const double> y,
                         std::vector<std::vector<double>>& grad_w,
                         std::vector<std::vector<double>>& grad_b) {
    grad_w = zeros_like(m.weights);
    grad_b = zeros_like(m.biases);
    Workspace ws(m.layer_sizes);
    const double inv_n = 1.0 / static_cast<double>(X.n_rows);
    double loss = 0.0;
    for (std::size_t r = 0; r < X.n_rows; ++r) {
        const double pred = forward(m, X.row(r), ws);
        const double err = pred - y[r];
        loss += err * err * inv_n;
        backward(m, ws, 2.0 * err * inv_n, grad_w, grad_b);
    }
    return loss;
}

std::string Model::to_json() const {
    json doc;
    doc["format"] = "fibcast-mlp";
    doc["version"] = 1;
    doc["layer_sizes"] = layer_sizes;
    doc["weights"] = weights;
    doc["biases"] = biases;
    return doc.dump() + "\n";
}

Model Model::from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ModelFormatError(std::string("mlp model: corrupt file: ") + e.what());
    }
    if (doc.value("format", "") != "fibcast-mlp") {
        throw ModelFormatError("mlp model: missing format tag");
    }
    if (doc.value("version", 0) != 1) throw ModelFormatError("mlp model: unsupported version");
    Model m;
    m.layer_sizes = doc.at("layer_sizes").get<std::vector<int>>();
    m.weights = doc.at("weights").get<std::vector<std::vector<double>>>();
    m.biases = doc.at("biases").get<std::vector<std::vector<double>>>();
    if (m.layer_sizes.size() < 2 || m.weights.size() != m.layer_sizes.size() - 1 ||
        m.biases.size() != m.weights.size()) {
        throw ModelFormatError("mlp model: inconsistent layer arrays");
    }
    return m;
}

void Model::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << to_json();
}

Model Model::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

} // namespace fibcast::mlp
