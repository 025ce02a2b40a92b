#include "fibcast/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "fibcast/common.hpp"
#include "fibcast/eval.hpp"
#include "fibcast/features.hpp"
#include "fibcast/fwa.hpp"
#include "fibcast/parallel.hpp"
#include "fibcast/pipeline.hpp"
#include "fibcast/preprocess.hpp"
#include "fibcast/samples.hpp"
#include "fibcast/shap.hpp"
#include "fibcast/synth.hpp"
#include "fibcast/table.hpp"

namespace fibcast::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// ------------------------------------------------------------------
// run-file handling
// ------------------------------------------------------------------

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) {
        throw ConfigError("config: '" + where + "' must be an object");
    }
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) {
            throw ConfigError("config: unknown key '" + key + "' in " + where);
        }
    }
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
    check_keys(doc, {"seed", "out_dir", "threads", "data", "model", "protocol", "synth", "tune"},
               "top level");
    return doc;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

struct Common {
    json config;
    fs::path out_dir = ".";
    std::uint64_t seed = 0;
};

// ------------------------------------------------------------------
// dataset loading
// ------------------------------------------------------------------

struct DataConfig {
    std::string samples;
    std::string env_dir;
    std::string registry; // optional manifest path
    std::string target = "ec";
};

DataConfig data_config(const json& cfg) {
    if (!cfg.contains("data")) throw ConfigError("config: missing 'data' section");
    const json& d = cfg.at("data");
    check_keys(d, {"samples", "env_dir", "registry", "target"}, "data");
    DataConfig out;
    out.samples = d.value("samples", "");
    out.env_dir = d.value("env_dir", "");
    if (d.contains("registry") && !d.at("registry").is_null()) {
        out.registry = d.at("registry").get<std::string>();
    }
    out.target = d.value("target", "ec");
    if (out.samples.empty() || out.env_dir.empty()) {
        throw ConfigError("config: data.samples and data.env_dir are required");
    }
    if (out.target != "ec" && out.target != "ent") {
        throw ConfigError("config: data.target must be 'ec' or 'ent'");
    }
    return out;
}

data::FeatureRegistry load_registry(const std::string& path) {
    if (path.empty()) return data::FeatureRegistry::standard();
    return data::FeatureRegistry::load_manifest(path);
}

std::vector<data::SampleRecord> load_samples_strict(const fs::path& path) {
    const data::ParseResult parsed = data::parse_samples(path);
    if (!parsed.errors.empty()) {
        std::string msg = path.string() + ": " + std::to_string(parsed.errors.size()) +
                          " invalid row(s):";
        for (std::size_t i = 0; i < parsed.errors.size() && i < 10; ++i) {
            msg += "\n  line " + std::to_string(parsed.errors[i].line) + ": " +
                   parsed.errors[i].message;
        }
        throw DataError(msg);
    }
    if (parsed.records.empty()) {
        throw DataError(path.string() + ": no valid sample rows");
    }
    return parsed.records;
}

data::EnvMap load_env(const fs::path& dir, const data::FeatureRegistry& registry) {
    data::EnvMap env;
    for (const auto& col : registry.columns()) {
        if (col.kind == data::ColumnSpec::Kind::SampleField) continue;
        if (env.count(col.source)) continue;
        const fs::path file = dir / (col.source + ".csv");
        env.emplace(col.source, data::read_series_csv(file, col.source));
    }
    return env;
}

struct LoadedData {
    std::vector<data::SampleRecord> samples;
    data::FeatureRegistry registry = data::FeatureRegistry::standard();
    eval::Dataset dataset;
};

LoadedData load_dataset(const DataConfig& dc) {
    LoadedData out;
    out.registry = load_registry(dc.registry);
    out.samples = load_samples_strict(dc.samples);
    const data::EnvMap env = load_env(dc.env_dir, out.registry);
    out.dataset.samples = out.samples;
    out.dataset.X = data::build_features(out.samples, env, out.registry);
    out.dataset.y.reserve(out.samples.size());
    for (const auto& s : out.samples) {
        out.dataset.y.push_back(
            preprocess::log10p(static_cast<double>(dc.target == "ec" ? s.ec : s.ent)));
    }
    return out;
}

// ------------------------------------------------------------------
// model spec from config
// ------------------------------------------------------------------

pipeline::ModelSpec model_spec(const json& cfg, std::uint64_t seed) {
    if (!cfg.contains("model")) throw ConfigError("config: missing 'model' section");
    const json& m = cfg.at("model");
    check_keys(m, {"family", "params"}, "model");
    const std::string family = m.value("family", "");
    pipeline::ModelSpec spec = pipeline::ModelSpec::preset(family, seed);
    if (!m.contains("params")) return spec;
    const json& p = m.at("params");
    if (pipeline::is_tree(spec.family)) {
        check_keys(p,
                   {"n_estimators", "max_depth", "learning_rate", "min_samples_leaf",
                    "feature_subsample", "row_subsample", "bootstrap"},
                   "model.params");
        spec.tree.n_estimators = p.value("n_estimators", spec.tree.n_estimators);
        spec.tree.max_depth = p.value("max_depth", spec.tree.max_depth);
        spec.tree.learning_rate = p.value("learning_rate", spec.tree.learning_rate);
        spec.tree.min_samples_leaf = p.value("min_samples_leaf", spec.tree.min_samples_leaf);
        spec.tree.feature_subsample = p.value("feature_subsample", spec.tree.feature_subsample);
        spec.tree.row_subsample = p.value("row_subsample", spec.tree.row_subsample);
        spec.tree.bootstrap = p.value("bootstrap", spec.tree.bootstrap);
        spec.tree.validate();
    } else if (spec.family == pipeline::Family::Svr) {
        check_keys(p, {"epsilon", "c", "gamma", "tol", "max_passes"}, "model.params");
        spec.svr.epsilon = p.value("epsilon", spec.svr.epsilon);
        spec.svr.c = p.value("c", spec.svr.c);
        spec.svr.gamma = p.value("gamma", spec.svr.gamma);
        spec.svr.tol = p.value("tol", spec.svr.tol);
        spec.svr.max_passes = p.value("max_passes", spec.svr.max_passes);
        spec.svr.validate();
    } else {
        check_keys(p, {"hidden", "learning_rate", "batch_size", "max_epochs"}, "model.params");
        if (p.contains("hidden")) spec.mlp.hidden = p.at("hidden").get<std::vector<int>>();
        spec.mlp.learning_rate = p.value("learning_rate", spec.mlp.learning_rate);
        spec.mlp.batch_size = p.value("batch_size", spec.mlp.batch_size);
        spec.mlp.max_epochs = p.value("max_epochs", spec.mlp.max_epochs);
        spec.mlp.validate();
    }
    return spec;
}

// ------------------------------------------------------------------
// synth config from config file
// ------------------------------------------------------------------

synth::SynthConfig synth_config(const json& cfg, std::uint64_t seed) {
    synth::SynthConfig sc;
    sc.seed = seed;
    if (!cfg.contains("synth")) return sc;
    const json& s = cfg.at("synth");
    check_keys(s,
               {"n_sites", "seasons", "samples_per_season_per_site", "site_gradient",
                "signal_scale", "noise_sigma", "salinity_knee", "zero_inflation",
                "short_history"},
               "synth");
    sc.n_sites = s.value("n_sites", sc.n_sites);
    if (s.contains("seasons")) sc.seasons = s.at("seasons").get<std::vector<int>>();
    sc.samples_per_season_per_site =
        s.value("samples_per_season_per_site", sc.samples_per_season_per_site);
    sc.site_gradient = s.value("site_gradient", sc.site_gradient);
    sc.signal_scale = s.value("signal_scale", sc.signal_scale);
    sc.noise_sigma = s.value("noise_sigma", sc.noise_sigma);
    sc.salinity_knee = s.value("salinity_knee", sc.salinity_knee);
    sc.zero_inflation = s.value("zero_inflation", sc.zero_inflation);
    if (s.contains("short_history")) {
        sc.short_history.clear();
        for (const auto& pair : s.at("short_history")) {
            sc.short_history.push_back({pair.at(0).get<int>(), pair.at(1).get<int>()});
        }
    }
    sc.validate();
    return sc;
}

// ------------------------------------------------------------------
// commands
// ------------------------------------------------------------------

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

int cmd_synth(const Common& c) {
    const synth::SynthConfig sc = synth_config(c.config, c.seed);
    const synth::Output out = synth::generate(sc);
    fs::create_directories(c.out_dir / "env");
    data::write_samples_csv(c.out_dir / "samples.csv", out.samples);
    for (const auto& [name, series] : out.env) {
        data::write_series_csv(c.out_dir / "env" / (name + ".csv"), series);
    }
    write_text(c.out_dir / "truth.json", out.truth.to_json());

    // per-site summary, analogous to the monitoring statistics table
    std::map<std::string, std::vector<long long>> ec, ent;
    for (const auto& s : out.samples) {
        ec[s.site_id].push_back(s.ec);
        ent[s.site_id].push_back(s.ent);
    }
    auto stats = [](std::vector<long long>& v) {
        std::sort(v.begin(), v.end());
        double mean = 0.0;
        for (const long long x : v) mean += static_cast<double>(x);
        mean /= static_cast<double>(v.size());
        double sd = 0.0;
        for (const long long x : v) sd += (x - mean) * (x - mean);
        sd = std::sqrt(sd / static_cast<double>(v.size()));
        return std::tuple<long long, double, double, long long>(v[v.size() / 2], mean, sd,
                                                                v.back());
    };
    std::printf("%-6s %5s  %26s  %26s\n", "site", "n", "EC med/avg/std/max",
                "ENT med/avg/std/max");
    for (auto& [site, v] : ec) {
        const auto [med_ec, avg_ec, sd_ec, max_ec] = stats(v);
        const auto [med_ent, avg_ent, sd_ent, max_ent] = stats(ent[site]);
        std::printf("%-6s %5zu  %6lld %7.1f %7.1f %6lld  %6lld %7.1f %7.1f %6lld\n",
                    site.c_str(), v.size(), med_ec, avg_ec, sd_ec, max_ec, med_ent, avg_ent,
                    sd_ent, max_ent);
    }
    std::printf("wrote %zu samples, %zu series -> %s\n", out.samples.size(), out.env.size(),
                c.out_dir.string().c_str());
    return 0;
}

int cmd_features(const Common& c, std::string samples_path, std::string env_dir,
                 std::string registry_path) {
    DataConfig dc;
    if (c.config.contains("data")) {
        dc = data_config(c.config);
    }
    if (!samples_path.empty()) dc.samples = samples_path;
    if (!env_dir.empty()) dc.env_dir = env_dir;
    if (!registry_path.empty()) dc.registry = registry_path;
    if (dc.samples.empty() || dc.env_dir.empty()) {
        throw ConfigError("features: --samples and --env-dir (or a data config) are required");
    }
    const LoadedData loaded = load_dataset(dc);
    fs::create_directories(c.out_dir);
    data::write_matrix_csv(c.out_dir / "features.csv", loaded.dataset.X);
    loaded.registry.save_manifest(c.out_dir / "features.manifest.json");
    std::printf("wrote %zu x %zu matrix -> %s\n", loaded.dataset.X.n_rows,
                loaded.dataset.X.n_cols, (c.out_dir / "features.csv").string().c_str());
    return 0;
}

json effective_config(const Common& c) {
    json doc = c.config;
    doc["seed"] = c.seed;
    return doc;
}

int cmd_train(const Common& c) {
    const DataConfig dc = data_config(c.config);
    const pipeline::ModelSpec spec = model_spec(c.config, c.seed);
    const LoadedData loaded = load_dataset(dc);

    const auto t0 = std::chrono::steady_clock::now();
    const pipeline::TrainedModel model = pipeline::fit(spec, loaded.dataset.X, loaded.dataset.y);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    fs::create_directories(c.out_dir);
    model.save(c.out_dir / "model.json");

    const std::vector<double> pred = model.predict(loaded.dataset.X);
    json report;
    report["format"] = "fibcast-train-report";
    report["version"] = 1;
    report["family"] = pipeline::to_string(spec.family);
    report["target"] = dc.target;
    report["seed"] = c.seed;
    report["config_hash"] = fnv1a(effective_config(c).dump());
    report["n_rows"] = loaded.dataset.X.n_rows;
    report["n_features"] = loaded.dataset.X.n_cols;
    report["train_r2"] = eval::r_squared(loaded.dataset.y, pred);
    report["train_rmse"] = eval::rmse(loaded.dataset.y, pred);
    // wall-clock details live in the meta block, which reruns may differ in
    report["meta"] = {{"elapsed_seconds", elapsed}};
    write_text(c.out_dir / "train_report.json", report.dump(2) + "\n");
    std::printf("trained %s on %zu rows (train R2 %.3f) -> %s\n",
                pipeline::to_string(spec.family), loaded.dataset.X.n_rows,
                report["train_r2"].get<double>(), (c.out_dir / "model.json").string().c_str());
    return 0;
}

int cmd_eval(const Common& c) {
    const DataConfig dc = data_config(c.config);
    const pipeline::ModelSpec spec = model_spec(c.config, c.seed);
    if (!c.config.contains("protocol")) throw ConfigError("config: missing 'protocol' section");
    const json& p = c.config.at("protocol");
    check_keys(p, {"type", "k", "holdout_site", "cutoff_year", "test_sites", "test_year"},
               "protocol");
    const LoadedData loaded = load_dataset(dc);
    const eval::Pipeline pipe = pipeline::make_pipeline(spec);

    eval::EvalReport report;
    const std::string type = p.value("type", "");
    if (type == "kfold") {
        report = eval::kfold_cv(pipe, loaded.dataset, p.value("k", 10), c.seed);
    } else if (type == "spatial") {
        if (!p.contains("holdout_site")) {
            throw ConfigError("protocol: spatial needs 'holdout_site'");
        }
        report = eval::spatial_holdout(pipe, loaded.dataset,
                                       p.at("holdout_site").get<std::string>());
    } else if (type == "temporal") {
        if (!p.contains("cutoff_year") || !p.contains("test_sites") ||
            !p.contains("test_year")) {
            throw ConfigError("protocol: temporal needs cutoff_year, test_sites, test_year");
        }
        report = eval::temporal_holdout(pipe, loaded.dataset, p.at("cutoff_year").get<int>(),
                                        p.at("test_sites").get<std::vector<std::string>>(),
                                        p.at("test_year").get<int>());
    } else {
        throw ConfigError("protocol.type must be kfold | spatial | temporal");
    }

    fs::create_directories(c.out_dir);
    write_text(c.out_dir / "eval_report.json", report.to_json());
    table::Table preds;
    preds.header = {"row", "fold", "y_true", "y_pred"};
    for (const auto& r : report.predictions) {
        preds.rows.push_back({std::to_string(r.row_id), std::to_string(r.fold),
                              table::format_double(r.y_true), table::format_double(r.y_pred)});
    }
    table::write_delimited(c.out_dir / "predictions.csv", preds);
    if (!report.notes.empty()) std::printf("note: %s\n", report.notes.c_str());
    std::printf("%s: R2 %.3f", report.protocol.c_str(), report.mean.r2);
    if (report.stddev) std::printf(" +- %.3f", report.stddev->r2);
    std::printf(", RMSE %.3f", report.mean.rmse);
    if (report.stddev) std::printf(" +- %.3f", report.stddev->rmse);
    std::printf(", rho %.3f\n", report.mean.spearman);
    return 0;
}

int cmd_explain(const Common& c, const std::string& model_path, const std::string& matrix_path,
                const std::string& dependence, const std::string& color) {
    const pipeline::TrainedModel model = pipeline::TrainedModel::load(model_path);
    if (!pipeline::is_tree(model.family) || !model.ensemble) {
        throw InputError("explain: attribution supports tree models only");
    }
    const data::FeatureMatrix X = data::read_matrix_csv(matrix_path);
    if (X.n_rows == 0) throw DataError("explain: matrix has no rows");

    const auto attributions = shap::tree_shap_batch(*model.ensemble, X);
    fs::create_directories(c.out_dir);

    table::Table longtab;
    longtab.header = {"instance", "feature", "phi"};
    for (std::size_t r = 0; r < attributions.size(); ++r) {
        for (std::size_t f = 0; f < X.n_cols; ++f) {
            longtab.rows.push_back({std::to_string(r), X.names[f],
                                    table::format_double(attributions[r].phi[f])});
        }
    }
    table::write_delimited(c.out_dir / "attributions.csv", longtab);

    const auto ranking = shap::mean_abs_shap(attributions, X.names);
    table::Table ranktab;
    ranktab.header = {"feature", "mean_abs_shap", "share"};
    double total = 0.0;
    for (const auto& [name, value] : ranking.entries) total += value;
    for (const auto& [name, value] : ranking.entries) {
        ranktab.rows.push_back({name, table::format_double(value),
                                table::format_double(total > 0 ? value / total : 0.0)});
    }
    table::write_delimited(c.out_dir / "ranking.csv", ranktab);

    if (!dependence.empty()) {
        const std::string color_feature = color.empty() ? dependence : color;
        const auto dep = shap::dependence_export(dependence, color_feature, X, attributions);
        table::Table deptab;
        deptab.header = {dep.feature, "phi_" + dep.feature, dep.color_feature};
        for (const auto& row : dep.rows) {
            deptab.rows.push_back({table::format_double(row[0]), table::format_double(row[1]),
                                   table::format_double(row[2])});
        }
        table::write_delimited(c.out_dir / "dependence.csv", deptab);
    }
    std::printf("top feature: %s (mean |phi| %.4f)\n", ranking.entries.front().first.c_str(),
                ranking.entries.front().second);
    return 0;
}

int cmd_predict(const Common& c, const std::string& model_path, const std::string& ec_path,
                const std::string& ent_path, const std::string& matrix_path) {
    const data::FeatureMatrix X = data::read_matrix_csv(matrix_path);
    if (X.n_rows == 0) throw DataError("predict: matrix has no rows");
    fs::create_directories(c.out_dir);
    table::Table t;

    if (!model_path.empty()) {
        const pipeline::TrainedModel model = pipeline::TrainedModel::load(model_path);
        const auto pred = model.predict(X);
        t.header = {"row", "log10_pred", "count_pred"};
        for (std::size_t r = 0; r < pred.size(); ++r) {
            const double count = preprocess::inv_log10p(std::max(0.0, pred[r]));
            t.rows.push_back({std::to_string(r), table::format_double(pred[r]),
                              table::format_double(count)});
        }
    } else {
        const pipeline::TrainedModel ec_model = pipeline::TrainedModel::load(ec_path);
        const pipeline::TrainedModel ent_model = pipeline::TrainedModel::load(ent_path);
        const auto ec_pred = ec_model.predict(X);
        const auto ent_pred = ent_model.predict(X);
        t.header = {"row", "ec_log10", "ec_count", "ent_log10", "ent_count", "class"};
        for (std::size_t r = 0; r < ec_pred.size(); ++r) {
            const double ec_count = preprocess::inv_log10p(std::max(0.0, ec_pred[r]));
            const double ent_count = preprocess::inv_log10p(std::max(0.0, ent_pred[r]));
            const auto cls = data::classify_quality(std::llround(ec_count),
                                                    std::llround(ent_count));
            t.rows.push_back({std::to_string(r), table::format_double(ec_pred[r]),
                              table::format_double(ec_count), table::format_double(ent_pred[r]),
                              table::format_double(ent_count), data::to_string(cls)});
        }
    }
    table::write_delimited(c.out_dir / "predictions.csv", t);
    std::printf("wrote %zu predictions -> %s\n", t.rows.size(),
                (c.out_dir / "predictions.csv").string().c_str());
    return 0;
}

int cmd_tune(const Common& c) {
    if (!c.config.contains("tune")) throw ConfigError("config: missing 'tune' section");
    const json& t = c.config.at("tune");
    check_keys(t, {"family", "budget", "space", "fwa"}, "tune");
    const std::string family_name = t.value("family", "");
    const pipeline::Family family = pipeline::family_from_string(family_name);

    fwa::SearchSpace space;
    if (!t.contains("space")) throw ConfigError("tune: missing 'space'");
    for (const auto& d : t.at("space")) {
        check_keys(d, {"name", "lo", "hi", "integer"}, "tune.space[]");
        space.dims.push_back({d.at("name").get<std::string>(), d.at("lo").get<double>(),
                              d.at("hi").get<double>(), d.value("integer", false)});
    }

    fwa::Config fc;
    fc.seed = c.seed;
    fc.eval_budget = t.value("budget", 0);
    if (t.contains("fwa")) {
        const json& f = t.at("fwa");
        check_keys(f,
                   {"n_fireworks", "total_sparks", "amplitude_frac", "n_gaussian", "spark_min",
                    "spark_max"},
                   "tune.fwa");
        fc.n_fireworks = f.value("n_fireworks", fc.n_fireworks);
        fc.total_sparks = f.value("total_sparks", fc.total_sparks);
        fc.amplitude_frac = f.value("amplitude_frac", fc.amplitude_frac);
        fc.n_gaussian = f.value("n_gaussian", fc.n_gaussian);
        fc.spark_min = f.value("spark_min", fc.spark_min);
        fc.spark_max = f.value("spark_max", fc.spark_max);
    }

    const DataConfig dc = data_config(c.config);
    const LoadedData loaded = load_dataset(dc);
    const fwa::TuneResult result =
        fwa::tune_model(family, loaded.dataset.X, loaded.dataset.y, space, fc);

    fs::create_directories(c.out_dir);
    json best;
    best["format"] = "fibcast-tune-result";
    best["version"] = 1;
    best["family"] = family_name;
    best["cv_rmse"] = result.cv_rmse;
    best["evaluations"] = result.search.evaluations;
    best["best"] = json::object();
    for (std::size_t i = 0; i < result.names.size(); ++i) {
        best["best"][result.names[i]] = result.best_point[i];
    }
    write_text(c.out_dir / "best.json", best.dump(2) + "\n");
    fwa::write_history_csv(c.out_dir / "history.csv", result.search, space);
    std::printf("best cv rmse %.4f after %d evaluations -> %s\n", result.cv_rmse,
                result.search.evaluations, (c.out_dir / "best.json").string().c_str());
    return 0;
}

} // namespace

int run(int argc, char** argv) {
    CLI::App app{"fibcast: coastal fecal-indicator-bacteria prediction toolkit"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags are accepted after the subcommand too

    std::string config_path, out_dir, samples_path, env_dir, registry_path;
    std::string model_path, matrix_path, ec_model, ent_model, dependence, color;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = -1;

    app.add_option("--config", config_path, "run configuration file (JSON)");
    app.add_option("--seed", seed, "master seed (overrides the config file)")
        ->each([&](const std::string&) { seed_given = true; });
    app.add_option("--out", out_dir, "output directory (overrides the config file)");
    app.add_option("--threads", threads, "worker threads (0 = runtime default)");

    CLI::App* c_synth = app.add_subcommand("synth", "generate a synthetic monitoring cluster");
    CLI::App* c_features = app.add_subcommand("features", "build the engineered feature matrix");
    c_features->add_option("--samples", samples_path, "samples csv");
    c_features->add_option("--env-dir", env_dir, "directory of environmental series");
    c_features->add_option("--registry", registry_path, "feature registry manifest");
    CLI::App* c_train = app.add_subcommand("train", "fit a model per the run config");
    CLI::App* c_eval = app.add_subcommand("eval", "run an evaluation protocol");
    CLI::App* c_explain = app.add_subcommand("explain", "attribute tree-model predictions");
    c_explain->add_option("--model", model_path, "model file")->required();
    c_explain->add_option("--matrix", matrix_path, "feature matrix csv")->required();
    c_explain->add_option("--dependence", dependence, "feature for a dependence export");
    c_explain->add_option("--color", color, "colouring feature for the dependence export");
    CLI::App* c_predict = app.add_subcommand("predict", "predict counts for a feature matrix");
    c_predict->add_option("--model", model_path, "single model file");
    c_predict->add_option("--ec-model", ec_model, "EC model (paired with --ent-model)");
    c_predict->add_option("--ent-model", ent_model, "ENT model (paired with --ec-model)");
    c_predict->add_option("--matrix", matrix_path, "feature matrix csv")->required();
    CLI::App* c_tune = app.add_subcommand("tune", "hyperparameter search per the run config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        Common common;
        common.config = load_config(config_path);
        common.seed = seed_given ? seed : common.config.value("seed", std::uint64_t{0});
        std::string dir = common.config.value("out_dir", ".");
        if (!out_dir.empty()) dir = out_dir;
        common.out_dir = dir;
        int effective_threads = common.config.value("threads", 0);
        if (threads >= 0) effective_threads = threads;
        par::set_threads(effective_threads);

        if (c_synth->parsed()) return cmd_synth(common);
        if (c_features->parsed()) {
            return cmd_features(common, samples_path, env_dir, registry_path);
        }
        if (c_train->parsed()) return cmd_train(common);
        if (c_eval->parsed()) return cmd_eval(common);
        if (c_explain->parsed()) {
            return cmd_explain(common, model_path, matrix_path, dependence, color);
        }
        if (c_predict->parsed()) {
            const bool single = !model_path.empty();
            const bool paired = !ec_model.empty() && !ent_model.empty();
            if (single == paired) {
                throw ConfigError(
                    "predict: give either --model or the --ec-model/--ent-model pair");
            }
            return cmd_predict(common, model_path, ec_model, ent_model, matrix_path);
        }
        if (c_tune->parsed()) return cmd_tune(common);
        throw ConfigError("no subcommand given");
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace fibcast::cli
