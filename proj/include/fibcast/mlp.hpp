#ifndef FIBCAST_MLP_HPP
#define FIBCAST_MLP_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fibcast/features.hpp"

namespace fibcast::mlp {

struct Config {
    std::vector<int> hidden = {100, 100};
    double learning_rate = 1e-3; // adam step size
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 32;
    int max_epochs = 500;
    std::uint64_t seed = 0;

    void validate() const;
};

// Fully connected net with ReLU hidden layers and a linear scalar output.
// weights[l] is (layer_sizes[l+1] x layer_sizes[l]) row-major.
struct Model {
    std::vector<int> layer_sizes;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    std::string to_json() const;
    static Model from_json(const std::string& text);
    void save(const std::filesystem::path& path) const;
    static Model load(const std::filesystem::path& path);
};

// Glorot-uniform initialized net, before any training.
Model init_model(int n_inputs, const Config& cfg);

// Mini-batch adam on mean squared error. Requires standardized features.
// epoch_loss, when given, receives the full-data MSE after each epoch.
Model fit_mlp(const data::FeatureMatrix& X, std::span<const double> y, const Config& cfg,
              std::vector<double>* epoch_loss = nullptr);

double predict_mlp(const Model& m, std::span<const double> x);
std::vector<double> predict_batch(const Model& m, const data::FeatureMatrix& X);
std::vector<double> predict_batch_serial(const Model& m, const data::FeatureMatrix& X);

// Full-batch MSE and its gradient in the model's parameter layout; the
// quantity the finite-difference check differentiates.
double loss_and_gradient(const Model& m, const data::FeatureMatrix& X, std::span<const double> y,
                         std::vector<std::vector<double>>& grad_w,
                         std::vector<std::vector<double>>& grad_b);

} // namespace fibcast::mlp

#endif
