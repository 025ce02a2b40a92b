#include "fibcast/svr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "fibcast/common.hpp"
#include "fibcast/leakage.hpp"
#include "fibcast/parallel.hpp"

namespace fibcast::svr {

using json = nlohmann::ordered_json;

void Config::validate() const {
    if (!(epsilon > 0.0)) throw DomainError("svr: epsilon must be > 0");
    if (!(c > 0.0)) throw DomainError("svr: C must be > 0");
    if (gamma < 0.0) throw DomainError("svr: gamma must be >= 0");
    if (!(tol > 0.0)) throw DomainError("svr: tol must be > 0");
    if (max_passes < 1) throw DomainError("svr: max_passes must be >= 1");
}

double rbf_kernel(std::span<const double> x, std::span<const double> z, double gamma) {
    if (x.size() != z.size()) throw ShapeError("rbf_kernel: dimension mismatch");
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - z[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

double resolve_gamma(const data::FeatureMatrix& X, double gamma) {
    if (gamma > 0.0) return gamma;
    // pooled variance of all matrix entries
    const std::size_t n = X.values.size();
    if (n == 0 || X.n_cols == 0) throw DomainError("resolve_gamma: empty matrix");
    double mean = 0.0;
    for (const double v : X.values) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const double v : X.values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    if (var <= 0.0) return 1.0 / static_cast<double>(X.n_cols);
    return 1.0 / (static_cast<double>(X.n_cols) * var);
}

std::vector<double> rbf_kernel_matrix_serial(const data::FeatureMatrix& X, double gamma) {
    const std::size_t n = X.n_rows;
    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        K[i * n + i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double k = rbf_kernel(X.row(i), X.row(j), gamma);
            K[i * n + j] = k;
            K[j * n + i] = k;
        }
    }
    return K;
}

std::vector<double> rbf_kernel_matrix(const data::FeatureMatrix& X, double gamma) {
    const std::size_t n = X.n_rows;
    if (!par::enabled() || n < 64) return rbf_kernel_matrix_serial(X, gamma);
    std::vector<double> K(n * n);
    const std::int64_t ni = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t i = 0; i < ni; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        K[ui * n + ui] = 1.0;
        for (std::size_t j = ui + 1; j < n; ++j) {
            const double k = rbf_kernel(X.row(ui), X.row(j), gamma);
            K[ui * n + j] = k;
            K[j * n + ui] = k;
        }
    }
    return K;
}

double dual_objective(const std::vector<double>& K, std::span<const double> y, double epsilon,
                      std::span<const double> beta) {
    const std::size_t n = y.size();
    double quad = 0.0, lin = 0.0, reg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double ki = 0.0;
        for (std::size_t j = 0; j < n; ++j) ki += K[i * n + j] * beta[j];
        quad += beta[i] * ki;
        lin += y[i] * beta[i];
        reg += std::abs(beta[i]);
    }
    return -0.5 * quad + lin - epsilon * reg;
}

namespace {

constexpr double kZeroBeta = 1e-12;

struct WorkState {
    std::vector<double> beta;
    std::vector<double> g; // K * beta, no bias
    const std::vector<double>* K = nullptr;
    std::span<const double> y;
    double epsilon = 0.0;
    double c = 0.0;
    std::size_t n = 0;

    double k(std::size_t i, std::size_t j) const { return (*K)[i * n + j]; }
};

bool at_upper(const WorkState& s, std::size_t i) { return s.beta[i] >= s.c * (1.0 - 1e-9); }
bool at_lower(const WorkState& s, std::size_t i) { return s.beta[i] <= -s.c * (1.0 - 1e-9); }
bool is_zero(const WorkState& s, std::size_t i) { return std::abs(s.beta[i]) < kZeroBeta; }

// Each point's KKT conditions admit a bias interval [lb_i, ub_i]. The
// iterate is optimal (to tolerance) when the intervals still intersect:
// max_i lb_i - min_i ub_i <= tol. This is the standard first-order
// optimality measure for the one-equality-constraint dual.
struct BiasBounds {
    double max_lb = -std::numeric_limits<double>::infinity();
    double min_ub = std::numeric_limits<double>::infinity();
    std::size_t arg_lb = 0;
    std::size_t arg_ub = 0;

    double gap() const { return max_lb - min_ub; }
};

void point_bias_interval(const WorkState& s, std::size_t i, double& lb, double& ub) {
    const double u = s.y[i] - s.g[i];
    lb = -std::numeric_limits<double>::infinity();
    ub = std::numeric_limits<double>::infinity();
    if (is_zero(s, i)) {
        lb = u - s.epsilon;
        ub = u + s.epsilon;
    } else if (at_upper(s, i)) {
        ub = u - s.epsilon;
    } else if (at_lower(s, i)) {
        lb = u + s.epsilon;
    } else if (s.beta[i] > 0.0) {
        lb = ub = u - s.epsilon;
    } else {
        lb = ub = u + s.epsilon;
    }
}

BiasBounds bias_bounds(const WorkState& s) {
    BiasBounds b;
    for (std::size_t i = 0; i < s.n; ++i) {
        double lb, ub;
        point_bias_interval(s, i, lb, ub);
        if (lb > b.max_lb) {
            b.max_lb = lb;
            b.arg_lb = i;
        }
        if (ub < b.min_ub) {
            b.min_ub = ub;
            b.arg_ub = i;
        }
    }
    return b;
}

// Bias from KKT: averaged over free coefficients when any exist, otherwise
// the midpoint of the interval the bound/zero constraints admit.
double compute_bias(const WorkState& s) {
    double acc = 0.0;
    int free_count = 0;
    for (std::size_t i = 0; i < s.n; ++i) {
        if (is_zero(s, i) || at_upper(s, i) || at_lower(s, i)) continue;
        const double sign = s.beta[i] > 0.0 ? 1.0 : -1.0;
        acc += s.y[i] - s.g[i] - s.epsilon * sign;
        ++free_count;
    }
    if (free_count > 0) return acc / free_count;

    const BiasBounds b = bias_bounds(s);
    if (!std::isfinite(b.max_lb) && !std::isfinite(b.min_ub)) return 0.0;
    if (!std::isfinite(b.max_lb)) return b.min_ub;
    if (!std::isfinite(b.min_ub)) return b.max_lb;
    return 0.5 * (b.max_lb + b.min_ub);
}

// Change in -dual when moving (beta_i += d, beta_j -= d); lower is better.
double pair_phi(const WorkState& s, std::size_t i, std::size_t j, double eta, double rdiff,
                double d) {
    return 0.5 * eta * d * d - rdiff * d +
           s.epsilon * (std::abs(s.beta[i] + d) - std::abs(s.beta[i])) +
           s.epsilon * (std::abs(s.beta[j] - d) - std::abs(s.beta[j]));
}

struct PairStep {
    double delta = 0.0;
    double gain = 0.0; // dual improvement
};

PairStep best_pair_step(const WorkState& s, std::size_t i, std::size_t j) {
    PairStep step;
    const double lo = std::max(-s.c - s.beta[i], s.beta[j] - s.c);
    const double hi = std::min(s.c - s.beta[i], s.beta[j] + s.c);
    if (hi - lo < 1e-15) return step;

    const double eta = s.k(i, i) + s.k(j, j) - 2.0 * s.k(i, j);
    const double rdiff = (s.y[i] - s.g[i]) - (s.y[j] - s.g[j]);

    double cands[8];
    int nc = 0;
    cands[nc++] = lo;
    cands[nc++] = hi;
    cands[nc++] = std::clamp(-s.beta[i], lo, hi);
    cands[nc++] = std::clamp(s.beta[j], lo, hi);
    if (eta > 1e-14) {
        for (const double si : {-1.0, 1.0}) {
            for (const double sj : {-1.0, 1.0}) {
                cands[nc++] = std::clamp((rdiff - s.epsilon * si + s.epsilon * sj) / eta, lo, hi);
            }
        }
    }
    double best_phi = 0.0; // phi(0) = 0 by construction
    for (int k = 0; k < nc; ++k) {
        const double phi = pair_phi(s, i, j, eta, rdiff, cands[k]);
        if (phi < best_phi) {
            best_phi = phi;
            step.delta = cands[k];
        }
    }
    step.gain = -best_phi;
    return step;
}

} // namespace

Model fit_svr(const data::FeatureMatrix& X, std::span<const double> y, const Config& cfg,
              FitReport* report) {
    cfg.validate();
    leakage::check(X.row_ids, "fit_svr");
    if (!X.standardized) {
        throw PipelineError("fit_svr: features must be standardized first");
    }
    if (X.n_rows < 2) throw DomainError("fit_svr: need at least 2 rows");
    if (X.n_rows != y.size()) throw ShapeError("fit_svr: |y| must equal rows(X)");

    const double gamma = resolve_gamma(X, cfg.gamma);
    const std::vector<double> K = rbf_kernel_matrix(X, gamma);

    WorkState s;
    s.n = X.n_rows;
    s.beta.assign(s.n, 0.0);
    s.g.assign(s.n, 0.0);
    s.K = &K;
    s.y = y;
    s.epsilon = cfg.epsilon;
    s.c = cfg.c;

    double y_inf = 0.0;
    for (const double v : y) y_inf = std::max(y_inf, std::abs(v));
    // Gains below double-precision resolution of the objective cannot be
    // realized; violations at that level count as converged.
    const double stall_floor = std::max(cfg.tol, 1e-6 * (1.0 + y_inf));

    int updates = 0;
    double gap = 0.0;
    while (true) {
        const BiasBounds bounds = bias_bounds(s);
        gap = bounds.gap();
        if (gap <= cfg.tol) break;
        if (updates >= cfg.max_passes) {
            throw ConvergenceError("fit_svr: KKT violation " + std::to_string(gap) + " after " +
                                   std::to_string(updates) + " pair updates");
        }

        // anchor on either end of the violated bias interval, best gain wins
        PairStep best;
        std::size_t wi = bounds.arg_lb, wj = bounds.arg_lb;
        for (const std::size_t anchor : {bounds.arg_lb, bounds.arg_ub}) {
            for (std::size_t j = 0; j < s.n; ++j) {
                if (j == anchor) continue;
                const PairStep st = best_pair_step(s, anchor, j);
                if (st.gain > best.gain) {
                    best = st;
                    wi = anchor;
                    wj = j;
                }
            }
            if (bounds.arg_lb == bounds.arg_ub) break;
        }
        if (wj == wi || best.gain <= 0.0) {
            if (gap <= stall_floor) break;
            throw ConvergenceError("fit_svr: stalled with KKT violation " + std::to_string(gap));
        }
        s.beta[wi] += best.delta;
        s.beta[wj] -= best.delta;
        for (std::size_t k = 0; k < s.n; ++k) {
            s.g[k] += best.delta * (s.k(wi, k) - s.k(wj, k));
        }
        ++updates;
    }
    const double bias = compute_bias(s);

    if (report) {
        report->pair_updates = updates;
        report->kkt_violation = std::max(0.0, gap);
        report->dual = dual_objective(K, y, cfg.epsilon, s.beta);
    }

    Model m;
    m.gamma = gamma;
    m.bias = bias;
    for (std::size_t i = 0; i < s.n; ++i) {
        if (std::abs(s.beta[i]) > kZeroBeta) {
            const auto row = X.row(i);
            m.support.emplace_back(row.begin(), row.end());
            m.beta.push_back(s.beta[i]);
        }
    }
    return m;
}

double predict_svr(const Model& m, std::span<const double> x) {
    double acc = m.bias;
    for (std::size_t i = 0; i < m.support.size(); ++i) {
        acc += m.beta[i] * rbf_kernel(m.support[i], x, m.gamma);
    }
    return acc;
}

std::vector<double> predict_batch_serial(const Model& m, const data::FeatureMatrix& X) {
    std::vector<double> out(X.n_rows);
    for (std::size_t r = 0; r < X.n_rows; ++r) out[r] = predict_svr(m, X.row(r));
    return out;
}

std::vector<double> predict_batch(const Model& m, const data::FeatureMatrix& X) {
    if (!par::enabled() || X.n_rows < 64) return predict_batch_serial(m, X);
    std::vector<double> out(X.n_rows);
    const std::int64_t n = static_cast<std::int64_t>(X.n_rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < n; ++r) {
        out[static_cast<std::size_t>(r)] = predict_svr(m, X.row(static_cast<std::size_t>(r)));
    }
    return out;
}

std::string Model::to_json() const {
    json doc;
    doc["format"] = "fibcast-svr";
    doc["version"] = 1;
    doc["gamma"] = gamma;
    doc["bias"] = bias;
    doc["beta"] = beta;
    doc["support"] = support;
    return doc.dump() + "\n";
}

Model Model::from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ModelFormatError(std::string("svr model: corrupt file: ") + e.what());
    }
    if (doc.value("format", "") != "fibcast-svr") {
        throw ModelFormatError("svr model: missing format tag");
    }
    if (doc.value("version", 0) != 1) throw ModelFormatError("svr model: unsupported version");
    Model m;
    m.gamma = doc.at("gamma").get<double>();
    m.bias = doc.at("bias").get<double>();
    m.beta = doc.at("beta").get<std::vector<double>>();
    m.support = doc.at("support").get<std::vector<std::vector<double>>>();
    if (m.beta.size() != m.support.size()) {
        throw ModelFormatError("svr model: beta/support size mismatch");
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

} // namespace fibcast::svr
