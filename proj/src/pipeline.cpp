#include "fibcast/pipeline.hpp"

#include <fstream>
#include <memory>

#include <json.hpp>

#include "fibcast/common.hpp"

namespace fibcast::pipeline {

using json = nlohmann::ordered_json;

Family family_from_string(const std::string& s) {
    if (s == "cb-like") return Family::CbLike;
    if (s == "xgb-like") return Family::XgbLike;
    if (s == "rf") return Family::Rf;
    if (s == "svr") return Family::Svr;
    if (s == "mlp") return Family::Mlp;
    throw ConfigError("unknown model family '" + s +
                      "' (expected cb-like | xgb-like | rf | svr | mlp)");
}

const char* to_string(Family f) {
    switch (f) {
    case Family::CbLike: return "cb-like";
    case Family::XgbLike: return "xgb-like";
    case Family::Rf: return "rf";
    case Family::Svr: return "svr";
    case Family::Mlp: return "mlp";
    }
    return "?";
}

bool is_tree(Family f) {
    return f == Family::CbLike || f == Family::XgbLike || f == Family::Rf;
}

bool needs_standardization(Family f) { return f == Family::Svr || f == Family::Mlp; }

ModelSpec ModelSpec::preset(Family family, std::uint64_t seed) {
    ModelSpec s;
    s.family = family;
    s.seed = seed;
    s.tree.n_estimators = 550;
    s.tree.seed = seed;
    s.mlp.seed = seed;
    switch (family) {
    case Family::CbLike:
        s.tree.max_depth = 6;
        s.tree.learning_rate = 0.05;
        s.tree.min_samples_leaf = 16;
        break;
    case Family::XgbLike:
        s.tree.max_depth = 6;
        s.tree.learning_rate = 0.3;
        s.tree.min_samples_leaf = 16;
        break;
    case Family::Rf:
        s.tree.bootstrap = true;
        s.tree.feature_subsample = 1.0 / 3.0;
        s.tree.max_depth = 64;
        break;
    case Family::Svr:
    case Family::Mlp:
        break;
    }
    return s;
}

ModelSpec ModelSpec::preset(const std::string& family, std::uint64_t seed) {
    return preset(family_from_string(family), seed);
}

TrainedModel fit(const ModelSpec& spec, const data::FeatureMatrix& X, std::span<const double> y) {
    TrainedModel m;
    m.family = spec.family;
    if (needs_standardization(spec.family)) {
        m.scaler = preprocess::fit_standardizer(X);
        const data::FeatureMatrix Z = preprocess::apply_standardizer(*m.scaler, X);
        if (spec.family == Family::Svr) {
            m.svr_model = svr::fit_svr(Z, y, spec.svr);
        } else {
            m.mlp_model = mlp::fit_mlp(Z, y, spec.mlp);
        }
        return m;
    }
    switch (spec.family) {
    case Family::Rf:
        m.ensemble = tree::fit_random_forest(X, y, spec.tree);
        break;
    case Family::CbLike:
    case Family::XgbLike:
        m.ensemble = tree::fit_gbrt(X, y, spec.tree);
        break;
    default:
        throw Error("pipeline::fit: unhandled family");
    }
    return m;
}

std::vector<double> TrainedModel::predict(const data::FeatureMatrix& X) const {
    if (scaler) {
        const data::FeatureMatrix Z = preprocess::apply_standardizer(*scaler, X);
        if (svr_model) return svr::predict_batch(*svr_model, Z);
        if (mlp_model) return mlp::predict_batch(*mlp_model, Z);
        throw Error("trained model: scaler without a model");
    }
    if (ensemble) return tree::predict_batch(*ensemble, X);
    throw Error("trained model: nothing fitted");
}

double TrainedModel::predict_one(std::span<const double> x,
                                 const std::vector<std::string>& names) const {
    data::FeatureMatrix m;
    m.names = names;
    m.n_rows = 1;
    m.n_cols = x.size();
    m.values.assign(x.begin(), x.end());
    m.row_ids = {0};
    return predict(m).front();
}

std::string TrainedModel::to_json() const {
    json doc;
    doc["format"] = "fibcast-model";
    doc["version"] = 1;
    doc["family"] = to_string(family);
    doc["standardizer"] = scaler ? json::parse(scaler->to_json()) : json(nullptr);
    if (ensemble) {
        doc["model"] = json::parse(tree::to_json(*ensemble));
    } else if (svr_model) {
        doc["model"] = json::parse(svr_model->to_json());
    } else if (mlp_model) {
        doc["model"] = json::parse(mlp_model->to_json());
    } else {
        throw Error("trained model: nothing to serialize");
    }
    return doc.dump() + "\n";
}

TrainedModel TrainedModel::from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ModelFormatError(std::string("model file: corrupt: ") + e.what());
    }
    if (doc.value("format", "") != "fibcast-model") {
        throw ModelFormatError("model file: missing format tag");
    }
    if (doc.value("version", 0) != 1) throw ModelFormatError("model file: unsupported version");
    TrainedModel m;
    m.family = family_from_string(doc.at("family").get<std::string>());
    if (!doc.at("standardizer").is_null()) {
        m.scaler = preprocess::Standardizer::from_json(doc.at("standardizer").dump());
    }
    const std::string inner = doc.at("model").dump();
    if (is_tree(m.family)) {
        m.ensemble = tree::from_json(inner);
    } else if (m.family == Family::Svr) {
        m.svr_model = svr::Model::from_json(inner);
    } else {
        m.mlp_model = mlp::Model::from_json(inner);
    }
    return m;
}

void TrainedModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << to_json();
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

TrainedModel TrainedModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

eval::Pipeline make_pipeline(const ModelSpec& spec) {
    eval::Pipeline p;
    p.name = to_string(spec.family);
    p.fit = [spec](const data::FeatureMatrix& X, std::span<const double> y) -> eval::Predictor {
        auto model = std::make_shared<TrainedModel>(fit(spec, X, y));
        return [model](const data::FeatureMatrix& X_test) { return model->predict(X_test); };
    };
    return p;
}

} // namespace fibcast::pipeline
