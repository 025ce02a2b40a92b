#include "fibcast/fwa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fibcast/common.hpp"
#include "fibcast/rng.hpp"
#include "fibcast/table.hpp"

namespace fibcast::fwa {

void SearchSpace::validate() const {
    if (dims.empty()) throw ConfigError("search space: no dimensions");
    for (const auto& d : dims) {
        if (!(d.lo < d.hi) || !std::isfinite(d.lo) || !std::isfinite(d.hi)) {
            throw ConfigError("search space: dimension '" + d.name +
                              "' needs finite lo < hi");
        }
    }
}

void Config::validate() const {
    if (n_fireworks < 1) throw ConfigError("fwa: n_fireworks must be >= 1");
    if (total_sparks < 1) throw ConfigError("fwa: total_sparks must be >= 1");
    if (!(amplitude_frac > 0.0)) throw ConfigError("fwa: amplitude_frac must be > 0");
    if (n_gaussian < 0) throw ConfigError("fwa: n_gaussian must be >= 0");
    if (spark_min < 1 || spark_max < spark_min) {
        throw ConfigError("fwa: need 1 <= spark_min <= spark_max");
    }
    if (eval_budget < n_fireworks) {
        throw ConfigError("fwa: eval_budget must cover the initial fireworks");
    }
}

namespace {

constexpr double kEps = 1e-12;
constexpr double kAmplitudeFloorFrac = 1e-6;

struct Candidate {
    std::vector<double> x;
    double value = 0.0;
};

// Integer dimensions are rounded before the objective sees the point.
void snap(const SearchSpace& space, std::vector<double>& x) {
    for (std::size_t d = 0; d < space.dims.size(); ++d) {
        if (space.dims[d].integer) x[d] = std::llround(x[d]);
        x[d] = std::clamp(x[d], space.dims[d].lo, space.dims[d].hi);
    }
}

// Canonical mapping rule: out-of-bounds coordinates fold back as
// lo + |x| mod range.
void map_into_bounds(const SearchSpace& space, std::vector<double>& x) {
    for (std::size_t d = 0; d < space.dims.size(); ++d) {
        const auto& dim = space.dims[d];
        if (x[d] < dim.lo || x[d] > dim.hi) {
            const double range = dim.hi - dim.lo;
            x[d] = dim.lo + std::fmod(std::abs(x[d]), range);
        }
    }
}

std::string format_point(std::span<const double> x) {
    std::string s = "(";
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) s += ", ";
        s += table::format_double(x[i]);
    }
    return s + ")";
}

} // namespace

Result fwa_minimize(const Objective& objective, const SearchSpace& space, const Config& cfg) {
    space.validate();
    cfg.validate();
    const std::size_t dims = space.dims.size();
    rng::Rng rng(cfg.seed);

    Result result;
    result.best_value = std::numeric_limits<double>::infinity();

    auto evaluate = [&](std::vector<double> x) -> Candidate {
        snap(space, x);
        const double v = objective(x);
        if (!std::isfinite(v)) {
            throw Error("fwa: objective returned a non-finite value at " + format_point(x));
        }
        ++result.evaluations;
        if (v < result.best_value) {
            result.best_value = v;
            result.best_point = x;
        }
        result.history.push_back({result.evaluations, x, v, result.best_value});
        return {std::move(x), v};
    };

    std::vector<Candidate> fireworks;
    fireworks.reserve(static_cast<std::size_t>(cfg.n_fireworks));
    for (int i = 0; i < cfg.n_fireworks; ++i) {
        std::vector<double> x(dims);
        if (static_cast<std::size_t>(i) < cfg.init_points.size()) {
            if (cfg.init_points[static_cast<std::size_t>(i)].size() != dims) {
                throw ConfigError("fwa: warm-start point has wrong dimension");
            }
            x = cfg.init_points[static_cast<std::size_t>(i)];
        } else {
            for (std::size_t d = 0; d < dims; ++d) {
                x[d] = rng.uniform(space.dims[d].lo, space.dims[d].hi);
            }
        }
        fireworks.push_back(evaluate(std::move(x)));
    }

    while (result.evaluations < cfg.eval_budget) {
        double y_min = std::numeric_limits<double>::infinity();
        double y_max = -std::numeric_limits<double>::infinity();
        for (const auto& fw : fireworks) {
            y_min = std::min(y_min, fw.value);
            y_max = std::max(y_max, fw.value);
        }

        double count_denom = 0.0;
        for (const auto& fw : fireworks) {
            count_denom += y_max - fw.value;
        }
        count_denom += static_cast<double>(fireworks.size()) * kEps;
        // Amplitudes are proportional to the fitness gap, scaled so the
        // worst firework explodes at full amplitude_max. The best firework
        // collapses onto the floor, and runners-up shrink as the
        // population tightens, which is what refines the optimum.
        const double amp_denom = y_max - y_min + kEps;

        std::vector<Candidate> pool = fireworks;
        bool budget_done = false;

        for (const auto& fw : fireworks) {
            // worse fitness -> fewer sparks, larger amplitude
            const double share = (y_max - fw.value + kEps) / count_denom;
            int n_sparks = static_cast<int>(
                std::llround(static_cast<double>(cfg.total_sparks) * share));
            n_sparks = std::clamp(n_sparks, cfg.spark_min, cfg.spark_max);
            const double amp_share = (fw.value - y_min + kEps) / amp_denom;

            for (int s = 0; s < n_sparks && !budget_done; ++s) {
                std::vector<double> x = fw.x;
                const std::size_t z = rng.index(dims) + 1; // 1..dims coordinates
                const auto chosen = rng.sample_without_replacement(dims, z);
                const double u = rng.uniform(-1.0, 1.0);
                for (const std::size_t d : chosen) {
                    const double range = space.dims[d].hi - space.dims[d].lo;
                    const double amp = std::max(cfg.amplitude_frac * range * amp_share,
                                                kAmplitudeFloorFrac * range);
                    x[d] += amp * u;
                }
                map_into_bounds(space, x);
                pool.push_back(evaluate(std::move(x)));
                budget_done = result.evaluations >= cfg.eval_budget;
            }
            if (budget_done) break;
        }

        for (int gsp = 0; gsp < cfg.n_gaussian && !budget_done; ++gsp) {
            const auto& fw = fireworks[rng.index(fireworks.size())];
            std::vector<double> x = fw.x;
            const std::size_t z = rng.index(dims) + 1;
            const auto chosen = rng.sample_without_replacement(dims, z);
            const double g = 1.0 + rng.normal();
            for (const std::size_t d : chosen) x[d] *= g;
            map_into_bounds(space, x);
            pool.push_back(evaluate(std::move(x)));
            budget_done = result.evaluations >= cfg.eval_budget;
        }

        // selection: the best survives; the rest are drawn by
        // distance-proportional roulette over the candidate pool
        std::size_t best_idx = 0;
        for (std::size_t i = 1; i < pool.size(); ++i) {
            if (pool[i].value < pool[best_idx].value) best_idx = i;
        }
        std::vector<Candidate> next;
        next.reserve(fireworks.size());
        next.push_back(pool[best_idx]);

        if (fireworks.size() > 1) {
            std::vector<double> distance(pool.size(), 0.0);
            for (std::size_t i = 0; i < pool.size(); ++i) {
                for (std::size_t j = 0; j < pool.size(); ++j) {
                    double d2 = 0.0;
                    for (std::size_t d = 0; d < dims; ++d) {
                        const double diff = pool[i].x[d] - pool[j].x[d];
                        d2 += diff * diff;
                    }
                    distance[i] += std::sqrt(d2);
                }
            }
            std::vector<bool> taken(pool.size(), false);
            taken[best_idx] = true;
            for (std::size_t pick = 1; pick < fireworks.size(); ++pick) {
                double total = 0.0;
                for (std::size_t i = 0; i < pool.size(); ++i) {
                    if (!taken[i]) total += distance[i];
                }
                std::size_t chosen = pool.size();
                if (total <= 0.0) {
                    for (std::size_t i = 0; i < pool.size(); ++i) {
                        if (!taken[i]) {
                            chosen = i;
                            break;
                        }
                    }
                } else {
                    const double ticket = rng.uniform01() * total;
                    double acc = 0.0;
                    for (std::size_t i = 0; i < pool.size(); ++i) {
                        if (taken[i]) continue;
                        acc += distance[i];
                        if (acc >= ticket) {
                            chosen = i;
                            break;
                        }
                    }
                }
                if (chosen == pool.size()) {
                    for (std::size_t i = pool.size(); i-- > 0;) {
                        if (!taken[i]) {
                            chosen = i;
                            break;
                        }
                    }
                }
                taken[chosen] = true;
                next.push_back(pool[chosen]);
            }
        }
        fireworks = std::move(next);
    }
    return result;
}

void write_history_csv(const std::filesystem::path& path, const Result& r,
                       const SearchSpace& space) {
    table::Table t;
    t.header = {"eval", "value", "best_so_far"};
    for (const auto& d : space.dims) t.header.push_back(d.name);
    for (const auto& h : r.history) {
        std::vector<std::string> row = {std::to_string(h.eval_index),
                                        table::format_double(h.value),
                                        table::format_double(h.best_so_far)};
        for (const double v : h.point) row.push_back(table::format_double(v));
        t.rows.push_back(std::move(row));
    }
    table::write_delimited(path, t);
}

namespace {

pipeline::ModelSpec spec_from_point(pipeline::Family family, const SearchSpace& space,
                                    std::span<const double> x, std::uint64_t seed) {
    pipeline::ModelSpec spec = pipeline::ModelSpec::preset(family, seed);
    int layers = -1, neurons = -1;
    for (std::size_t d = 0; d < space.dims.size(); ++d) {
        const std::string& name = space.dims[d].name;
        if (family == pipeline::Family::Svr) {
            if (name == "epsilon") {
                spec.svr.epsilon = x[d];
            } else if (name == "c") {
                spec.svr.c = x[d];
            } else if (name == "gamma") {
                spec.svr.gamma = x[d];
            } else {
                throw ConfigError("tune_model(svr): unknown dimension '" + name + "'");
            }
        } else if (family == pipeline::Family::Mlp) {
            if (name == "layers") {
                layers = static_cast<int>(std::llround(x[d]));
            } else if (name == "neurons") {
                neurons = static_cast<int>(std::llround(x[d]));
            } else if (name == "learning_rate") {
                spec.mlp.learning_rate = x[d];
            } else {
                throw ConfigError("tune_model(mlp): unknown dimension '" + name + "'");
            }
        } else {
            throw ConfigError("tune_model: only svr and mlp are tunable");
        }
    }
    if (family == pipeline::Family::Mlp && (layers > 0 || neurons > 0)) {
        const int L = layers > 0 ? layers : static_cast<int>(spec.mlp.hidden.size());
        const int N = neurons > 0 ? neurons : spec.mlp.hidden.front();
        spec.mlp.hidden.assign(static_cast<std::size_t>(L), N);
    }
    return spec;
}

std::vector<double> default_point(pipeline::Family family, const SearchSpace& space) {
    const pipeline::ModelSpec def = pipeline::ModelSpec::preset(family, 0);
    std::vector<double> x(space.dims.size());
    for (std::size_t d = 0; d < space.dims.size(); ++d) {
        const std::string& name = space.dims[d].name;
        double v = 0.5 * (space.dims[d].lo + space.dims[d].hi);
        if (name == "epsilon") v = def.svr.epsilon;
        if (name == "c") v = def.svr.c;
        if (name == "gamma") v = def.svr.gamma;
        if (name == "layers") v = static_cast<double>(def.mlp.hidden.size());
        if (name == "neurons") v = def.mlp.hidden.front();
        if (name == "learning_rate") v = def.mlp.learning_rate;
        x[d] = std::clamp(v, space.dims[d].lo, space.dims[d].hi);
    }
    return x;
}

} // namespace

TuneResult tune_model(pipeline::Family family, const data::FeatureMatrix& X,
                      std::span<const double> y, const SearchSpace& space, const Config& cfg) {
    space.validate();
    if (!(family == pipeline::Family::Svr || family == pipeline::Family::Mlp)) {
        throw ConfigError("tune_model: only svr and mlp are tunable");
    }

    eval::Dataset ds;
    ds.X = X;
    ds.y.assign(y.begin(), y.end());
    const std::uint64_t cv_seed = rng::derive_seed(cfg.seed, 0xF01D);
    const std::uint64_t fit_seed = rng::derive_seed(cfg.seed, 0xF17);

    const Objective objective = [&](std::span<const double> x) {
        const pipeline::ModelSpec spec = spec_from_point(family, space, x, fit_seed);
        const eval::EvalReport report =
            eval::kfold_cv(pipeline::make_pipeline(spec), ds, 5, cv_seed);
        return report.mean.rmse;
    };

    Config search_cfg = cfg;
    if (search_cfg.init_points.empty()) {
        // warm start at the published defaults so the tuned result can
        // never fall behind them
        search_cfg.init_points.push_back(default_point(family, space));
    }

    TuneResult out;
    out.search = fwa_minimize(objective, space, search_cfg);
    out.best_point = out.search.best_point;
    out.cv_rmse = out.search.best_value;
    for (const auto& d : space.dims) out.names.push_back(d.name);
    return out;
}

} // namespace fibcast::fwa
