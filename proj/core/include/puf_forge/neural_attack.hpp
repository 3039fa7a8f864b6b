#pragma once

#include "puf_forge/challenge.hpp"
#include "puf_forge/crp.hpp"
#include "puf_forge/image.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace puf_forge {

enum class Activation { leaky_relu, identity };
inline constexpr double kLeakySlope = 0.2;

struct DenseLayer {
    Eigen::MatrixXd weights;  // out x in
    Eigen::VectorXd bias;
    Activation activation = Activation::leaky_relu;
};

/// Fully connected generator: challenge bits -> r x r intensity image.
struct GeneratorModel {
    std::size_t input_width = 0;
    std::size_t resolution = 0;
    std::uint64_t seed = 0;
    std::vector<DenseLayer> layers;

    std::size_t output_width() const { return resolution * resolution; }
    std::size_t parameter_count() const;
};

/// 1280 (= 20 * 32 * 32 / 16) and 4096.
std::vector<std::size_t> default_hidden_widths();

/// Hidden layers use LeakyReLU(0.2), the output layer is linear. The first
/// layer starts at zero so inputs that never fire keep zero weight; deeper
/// layers get He-scaled normal weights from `seed`. Biases start at zero.
GeneratorModel build_generator(std::size_t input_width, std::span<const std::size_t> hidden_widths,
                               std::size_t resolution, std::uint64_t seed);

/// Column-per-sample batch.
struct Batch {
    Eigen::MatrixXd inputs;   // input_width x B
    Eigen::MatrixXd targets;  // r^2 x B
};

/// Output activations, one column per input column.
Eigen::MatrixXd forward(const GeneratorModel& model, const Eigen::MatrixXd& inputs);

/// Mean squared error over every element of the batch.
double batch_loss(const GeneratorModel& model, const Batch& batch);

struct LayerGradient {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
};
using Gradients = std::vector<LayerGradient>;

/// Reverse-mode gradients of batch_loss. If `loss` is non-null it receives the loss value.
Gradients gradients(const GeneratorModel& model, const Batch& batch, double* loss = nullptr);

struct AdamParams {
    double learning_rate = 0.01;
    double beta1 = 0.8;
    double beta2 = 0.9;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamParams params;
    std::uint64_t step = 0;
    Gradients first_moment;
    Gradients second_moment;

    static AdamState for_model(const GeneratorModel& model, AdamParams params);
    /// One bias-corrected update of every parameter.
    void apply(GeneratorModel& model, const Gradients& grads);
};

/// Generic ADAM step on a flat parameter vector (same update rule as AdamState).
struct VectorAdam {
    AdamParams params;
    std::uint64_t step = 0;
    Eigen::VectorXd first_moment;
    Eigen::VectorXd second_moment;

    void apply(Eigen::VectorXd& x, const Eigen::VectorXd& grad);
};

struct TrainOptions {
    std::size_t epochs = 300;
    std::size_t batch_size = 16;
    AdamParams adam;
    std::uint64_t seed = 0;
};

struct TrainResult {
    GeneratorModel model;
    std::vector<double> loss_curve;  // mean training loss per epoch
};

/// Cropped response box-downsampled to r x r and scaled to unit max.
ResponseImage generator_target(const ResponseImage& cropped, std::size_t resolution);

Eigen::VectorXd challenge_input(const Challenge& challenge);

Batch make_training_set(std::span<const Crp> crps, std::size_t resolution);

/// Mini-batch ADAM on MSE with a per-epoch reshuffle drawn from `options.seed`.
/// Throws std::runtime_error if the loss becomes non-finite.
TrainResult train(GeneratorModel model, const Batch& data, const TrainOptions& options);
TrainResult train(GeneratorModel model, std::span<const Crp> crps, const TrainOptions& options);

/// r x r prediction with negatives clamped to 0.
ResponseImage predict_image(const GeneratorModel& model, const Challenge& challenge);

/// `<stem>.json` header plus `<stem>.f64` parameters (per layer: weights row-major, then bias).
void save_generator(const GeneratorModel& model, const std::filesystem::path& stem);
GeneratorModel load_generator(const std::filesystem::path& stem);

void write_loss_curve(std::span<const double> curve, const std::filesystem::path& csv);

}  // namespace puf_forge
