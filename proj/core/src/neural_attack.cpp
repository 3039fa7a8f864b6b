#include "puf_forge/neural_attack.hpp"

#include "binary_io.hpp"
#include "puf_forge/rng.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace puf_forge {

std::size_t GeneratorModel::parameter_count() const {
    std::size_t total = 0;
    for (const DenseLayer& l : layers) total += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return total;
}

std::vector<std::size_t> default_hidden_widths() { return {20 * 32 * 32 / 16, 4096}; }

GeneratorModel build_generator(std::size_t input_width, std::span<const std::size_t> hidden_widths,
                               std::size_t resolution, std::uint64_t seed) {
    if (input_width == 0) throw std::invalid_argument("generator input width must be >= 1");
    if (resolution < 8) throw std::invalid_argument("generator resolution must be >= 8");
    for (std::size_t w : hidden_widths)
        if (w == 0) throw std::invalid_argument("generator hidden widths must be positive");

    GeneratorModel model;
    model.input_width = input_width;
    model.resolution = resolution;
    model.seed = seed;
    std::vector<std::size_t> widths{input_width};
    widths.insert(widths.end(), hidden_widths.begin(), hidden_widths.end());
    widths.push_back(resolution * resolution);

    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const auto in = static_cast<Eigen::Index>(widths[i]);
        const auto out = static_cast<Eigen::Index>(widths[i + 1]);
        DenseLayer layer;
        layer.activation = i + 2 == widths.size() ? Activation::identity : Activation::leaky_relu;
        layer.weights = Eigen::MatrixXd::Zero(out, in);
        layer.bias = Eigen::VectorXd::Zero(out);
        if (i > 0) {
            Rng rng(seed, i);
            const double scale = std::sqrt(2.0 / static_cast<double>(in));
            for (Eigen::Index r = 0; r < out; ++r)
                for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = scale * rng.normal();
        }
        model.layers.push_back(std::move(layer));
    }
    return model;
}

namespace {

void activate(Eigen::MatrixXd& z, Activation a) {
    if (a == Activation::leaky_relu) z = z.cwiseMax(kLeakySlope * z);
}

void check_batch(const GeneratorModel& model, const Batch& batch) {
    if (batch.inputs.cols() == 0) throw std::invalid_argument("empty batch");
    if (static_cast<std::size_t>(batch.inputs.rows()) != model.input_width)
        throw std::invalid_argument("batch input width " + std::to_string(batch.inputs.rows()) +
                                    " does not match model input " + std::to_string(model.input_width));
    if (static_cast<std::size_t>(batch.targets.rows()) != model.output_width() ||
        batch.targets.cols() != batch.inputs.cols())
        throw std::invalid_argument("batch targets do not match model output");
}

}  // namespace

Eigen::MatrixXd forward(const GeneratorModel& model, const Eigen::MatrixXd& inputs) {
    if (static_cast<std::size_t>(inputs.rows()) != model.input_width)
        throw std::invalid_argument("generator input width " + std::to_string(inputs.rows()) +
                                    " does not match model input " + std::to_string(model.input_width));
    Eigen::MatrixXd a = inputs;
    for (const DenseLayer& layer : model.layers) {
        Eigen::MatrixXd z = layer.weights * a;
        z.colwise() += layer.bias;
        activate(z, layer.activation);
        a = std::move(z);
    }
    return a;
}

double batch_loss(const GeneratorModel& model, const Batch& batch) {
    check_batch(model, batch);
    const Eigen::MatrixXd out = forward(model, batch.inputs);
    return (out - batch.targets).squaredNorm() / static_cast<double>(out.size());
}

Gradients gradients(const GeneratorModel& model, const Batch& batch, double* loss) {
    check_batch(model, batch);
    const std::size_t depth = model.layers.size();
    // activations[k] is the input of layer k; pre[k] its pre-activation
    std::vector<Eigen::MatrixXd> activations(depth + 1);
    std::vector<Eigen::MatrixXd> pre(depth);
    activations[0] = batch.inputs;
    for (std::size_t k = 0; k < depth; ++k) {
        const DenseLayer& layer = model.layers[k];
        pre[k] = layer.weights * activations[k];
        pre[k].colwise() += layer.bias;
        activations[k + 1] = pre[k];
        activate(activations[k + 1], layer.activation);
    }
    Eigen::MatrixXd delta = activations[depth] - batch.targets;
    const auto elements = static_cast<double>(delta.size());
    if (loss) *loss = delta.squaredNorm() / elements;
    delta *= 2.0 / elements;

    Gradients grads(depth);
    for (std::size_t k = depth; k-- > 0;) {
        const DenseLayer& layer = model.layers[k];
        if (layer.activation == Activation::leaky_relu)
            delta = delta.cwiseProduct(
                (pre[k].array() >= 0.0).select(Eigen::MatrixXd::Ones(delta.rows(), delta.cols()), kLeakySlope)
                    .matrix());
        grads[k].weights.noalias() = delta * activations[k].transpose();
        grads[k].bias = delta.rowwise().sum();
        if (k > 0) {
            Eigen::MatrixXd next = layer.weights.transpose() * delta;
            delta = std::move(next);
        }
    }
    return grads;
}

AdamState AdamState::for_model(const GeneratorModel& model, AdamParams params) {
    AdamState s;
    s.params = params;
    for (const DenseLayer& l : model.layers) {
        s.first_moment.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                                  Eigen::VectorXd::Zero(l.bias.size())});
        s.second_moment.push_back(s.first_moment.back());
    }
    return s;
}

namespace {

template <typename Param, typename Moment>
void adam_update(Param& p, const Moment& g, Moment& m, Moment& v, const AdamParams& h,
                 double correction1, double correction2) {
    m = h.beta1 * m + (1.0 - h.beta1) * g;
    v.array() = h.beta2 * v.array() + (1.0 - h.beta2) * g.array().square();
    p.array() -= h.learning_rate * (m.array() / correction1) /
                 ((v.array() / correction2).sqrt() + h.epsilon);
}

}  // namespace

void AdamState::apply(GeneratorModel& model, const Gradients& grads) {
    if (grads.size() != model.layers.size() || first_moment.size() != model.layers.size())
        throw std::invalid_argument("ADAM state does not match the model");
    ++step;
    const double c1 = 1.0 - std::pow(params.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(params.beta2, static_cast<double>(step));
    for (std::size_t k = 0; k < grads.size(); ++k) {
        adam_update(model.layers[k].weights, grads[k].weights, first_moment[k].weights,
                    second_moment[k].weights, params, c1, c2);
        adam_update(model.layers[k].bias, grads[k].bias, first_moment[k].bias, second_moment[k].bias,
                    params, c1, c2);
    }
}

void VectorAdam::apply(Eigen::VectorXd& x, const Eigen::VectorXd& grad) {
    if (first_moment.size() != x.size()) {
        first_moment = Eigen::VectorXd::Zero(x.size());
        second_moment = Eigen::VectorXd::Zero(x.size());
    }
    ++step;
    const double c1 = 1.0 - std::pow(params.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(params.beta2, static_cast<double>(step));
    adam_update(x, grad, first_moment, second_moment, params, c1, c2);
}

ResponseImage generator_target(const ResponseImage& cropped, std::size_t resolution) {
    if (resolution == 0 || cropped.rows % resolution != 0 || cropped.rows != cropped.cols)
        throw std::invalid_argument("generator resolution " + std::to_string(resolution) +
                                    " must divide the square crop side " + std::to_string(cropped.rows));
    return unit_max(box_downsample(cropped, cropped.rows / resolution));
}

Eigen::VectorXd challenge_input(const Challenge& challenge) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(challenge.size()));
    for (std::size_t i = 0; i < challenge.size(); ++i) x(static_cast<Eigen::Index>(i)) = challenge[i];
    return x;
}

Batch make_training_set(std::span<const Crp> crps, std::size_t resolution) {
    if (crps.empty()) throw std::invalid_argument("generator training set is empty");
    const std::size_t n = crps.front().challenge.size();
    Batch b;
    b.inputs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(crps.size()));
    b.targets.resize(static_cast<Eigen::Index>(resolution * resolution), static_cast<Eigen::Index>(crps.size()));
    for (std::size_t i = 0; i < crps.size(); ++i) {
        if (crps[i].challenge.size() != n)
            throw std::invalid_argument("training CRP " + std::to_string(i) + " has a different challenge length");
        const auto col = static_cast<Eigen::Index>(i);
        b.inputs.col(col) = challenge_input(crps[i].challenge);
        const ResponseImage t = generator_target(crps[i].cropped, resolution);
        b.targets.col(col) = Eigen::Map<const Eigen::VectorXd>(t.pixels.data(), b.targets.rows());
    }
    return b;
}

TrainResult train(GeneratorModel model, const Batch& data, const TrainOptions& options) {
    check_batch(model, data);
    if (options.batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
    const auto samples = static_cast<std::size_t>(data.inputs.cols());
    AdamState adam = AdamState::for_model(model, options.adam);
    TrainResult result;
    std::vector<Eigen::Index> order(samples);
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    Batch batch;
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        Rng rng(options.seed, epoch);
        for (std::size_t i = samples - 1; i > 0; --i)
            std::swap(order[i], order[static_cast<std::size_t>(rng.below(i + 1))]);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < samples; start += options.batch_size) {
            const std::size_t size = std::min(options.batch_size, samples - start);
            batch.inputs.resize(data.inputs.rows(), static_cast<Eigen::Index>(size));
            batch.targets.resize(data.targets.rows(), static_cast<Eigen::Index>(size));
            for (std::size_t j = 0; j < size; ++j) {
                batch.inputs.col(static_cast<Eigen::Index>(j)) = data.inputs.col(order[start + j]);
                batch.targets.col(static_cast<Eigen::Index>(j)) = data.targets.col(order[start + j]);
            }
            double loss = 0.0;
            const Gradients grads = gradients(model, batch, &loss);
            if (!std::isfinite(loss))
                throw std::runtime_error("generator training diverged at epoch " + std::to_string(epoch));
            epoch_loss += loss * static_cast<double>(size);
            adam.apply(model, grads);
        }
        result.loss_curve.push_back(epoch_loss / static_cast<double>(samples));
    }
    result.model = std::move(model);
    return result;
}

TrainResult train(GeneratorModel model, std::span<const Crp> crps, const TrainOptions& options) {
    const std::size_t resolution = model.resolution;
    return train(std::move(model), make_training_set(crps, resolution), options);
}

ResponseImage predict_image(const GeneratorModel& model, const Challenge& challenge) {
    if (challenge.size() != model.input_width)
        throw std::invalid_argument("challenge length " + std::to_string(challenge.size()) +
                                    " does not match generator input " + std::to_string(model.input_width));
    const Eigen::MatrixXd out = forward(model, challenge_input(challenge));
    ResponseImage img(model.resolution, model.resolution);
    Eigen::Map<Eigen::VectorXd>(img.pixels.data(), out.rows()) = out.col(0);
    clamp_nonnegative(img);
    return img;
}

void save_generator(const GeneratorModel& model, const std::filesystem::path& stem) {
    nlohmann::json layers = nlohmann::json::array();
    for (const DenseLayer& l : model.layers)
        layers.push_back({{"in", l.weights.cols()},
                          {"out", l.weights.rows()},
                          {"activation", l.activation == Activation::leaky_relu ? "leaky_relu" : "identity"}});
    const nlohmann::json header{{"type", "generator"},
                                {"input_width", model.input_width},
                                {"resolution", model.resolution},
                                {"seed", model.seed},
                                {"leaky_slope", kLeakySlope},
                                {"layers", layers},
                                {"layout", "per layer: weights row-major (out x in), then bias; little-endian float64"}};
    {
        std::ofstream out(stem.string() + ".json");
        if (!out) throw std::runtime_error("cannot write " + stem.string() + ".json");
        out << header.dump(2) << '\n';
    }
    auto out = detail::open_out(stem.string() + ".f64");
    for (const DenseLayer& l : model.layers) {
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) detail::write_le(out, l.weights(r, c));
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) detail::write_le(out, l.bias(r));
    }
}

GeneratorModel load_generator(const std::filesystem::path& stem) {
    std::ifstream in(stem.string() + ".json");
    if (!in) throw std::runtime_error("cannot open " + stem.string() + ".json");
    const nlohmann::json header = nlohmann::json::parse(in);
    GeneratorModel model;
    model.input_width = header.at("input_width").get<std::size_t>();
    model.resolution = header.at("resolution").get<std::size_t>();
    model.seed = header.at("seed").get<std::uint64_t>();
    auto blob = detail::open_in(stem.string() + ".f64");
    Eigen::Index expected_in = static_cast<Eigen::Index>(model.input_width);
    for (const auto& spec : header.at("layers")) {
        DenseLayer l;
        const auto rows = spec.at("out").get<Eigen::Index>();
        const auto cols = spec.at("in").get<Eigen::Index>();
        if (cols != expected_in) throw std::runtime_error(stem.string() + ".json: layer widths do not chain");
        l.activation = spec.at("activation").get<std::string>() == "identity" ? Activation::identity
                                                                              : Activation::leaky_relu;
        l.weights.resize(rows, cols);
        l.bias.resize(rows);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) l.weights(r, c) = detail::read_le<double>(blob);
        for (Eigen::Index r = 0; r < rows; ++r) l.bias(r) = detail::read_le<double>(blob);
        expected_in = rows;
        model.layers.push_back(std::move(l));
    }
    if (static_cast<std::size_t>(expected_in) != model.output_width())
        throw std::runtime_error(stem.string() + ".json: final layer width does not match resolution");
    return model;
}

void write_loss_curve(std::span<const double> curve, const std::filesystem::path& csv) {
    std::ofstream out(csv);
    if (!out) throw std::runtime_error("cannot write " + csv.string());
    out << "epoch,loss\n";
    out.precision(17);
    for (std::size_t i = 0; i < curve.size(); ++i) out << i << ',' << curve[i] << '\n';
}

}  // namespace puf_forge
