#include "core/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace conle {

Mlp init_mlp(const std::vector<std::size_t>& layer_dims, double slope, OutputHead head,
             std::uint64_t seed) {
    if (layer_dims.size() < 2)
        fail(ErrorCode::invalid_argument, "need at least two layer dims");
    for (std::size_t d : layer_dims)
        if (d < 1) fail(ErrorCode::invalid_argument, "layer dims must be >= 1");
    if (slope <= 0.0 || slope >= 1.0)
        fail(ErrorCode::invalid_argument, "leaky slope must be in (0, 1)");

    Mlp mlp;
    mlp.layer_dims = layer_dims;
    mlp.leaky_slope = slope;
    mlp.head = head;
    Rng rng(mix_seed(seed, 0x316d));
    for (std::size_t i = 0; i + 1 < layer_dims.size(); ++i) {
        const std::size_t fan_in = layer_dims[i];
        const std::size_t fan_out = layer_dims[i + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (std::size_t r = 0; r < fan_out; ++r)
            for (std::size_t c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-bound, bound);
        mlp.weights.push_back(std::move(w));
        mlp.biases.emplace_back(fan_out, 0.0);
    }
    return mlp;
}

namespace {

void softmax_rows(Matrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double& v : row) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (double& v : row) v /= sum;
    }
}

}  // namespace

ForwardTrace forward(const Mlp& mlp, const Matrix& batch) {
    if (batch.cols() != mlp.input_dim())
        fail(ErrorCode::dimension, "forward: batch width " + std::to_string(batch.cols()) +
                                       " does not match input dim " +
                                       std::to_string(mlp.input_dim()));
    ForwardTrace trace;
    trace.act.reserve(mlp.num_layers() + 1);
    trace.pre.reserve(mlp.num_layers());
    trace.act.push_back(batch);

    const std::size_t b = batch.rows();
    for (std::size_t layer = 0; layer < mlp.num_layers(); ++layer) {
        const Matrix& w = mlp.weights[layer];
        const std::vector<double>& bias = mlp.biases[layer];
        const Matrix& in = trace.act.back();
        Matrix pre(b, w.rows());
        for (std::size_t r = 0; r < b; ++r) {
            for (std::size_t o = 0; o < w.rows(); ++o) {
                double z = bias[o];
                for (std::size_t i = 0; i < w.cols(); ++i) z += w(o, i) * in(r, i);
                pre(r, o) = z;
            }
        }
        Matrix act = pre;
        const bool last = layer + 1 == mlp.num_layers();
        if (!last) {
            for (double& v : act.storage()) v = leaky_relu(v, mlp.leaky_slope);
        } else if (mlp.head == OutputHead::softmax) {
            softmax_rows(act);
        }
        trace.pre.push_back(std::move(pre));
        trace.act.push_back(std::move(act));
    }
    return trace;
}

Gradients backward(const Mlp& mlp, const ForwardTrace& trace, const Matrix& output_grad,
                   Matrix* input_grad) {
    const std::size_t layers = mlp.num_layers();
    if (!output_grad.same_shape(trace.outputs()))
        fail(ErrorCode::dimension, "backward: output_grad shape mismatch");

    Gradients grads;
    grads.weights.resize(layers);
    grads.biases.resize(layers);

    const std::size_t b = output_grad.rows();
    Matrix delta;  // dloss/dpre for the current layer

    // Output head.
    if (mlp.head == OutputHead::softmax) {
        const Matrix& y = trace.outputs();
        delta = Matrix(b, y.cols());
        for (std::size_t r = 0; r < b; ++r) {
            double dot = 0.0;
            for (std::size_t j = 0; j < y.cols(); ++j) dot += output_grad(r, j) * y(r, j);
            for (std::size_t j = 0; j < y.cols(); ++j)
                delta(r, j) = y(r, j) * (output_grad(r, j) - dot);
        }
    } else {
        delta = output_grad;
    }

    for (std::size_t layer = layers; layer-- > 0;) {
        const Matrix& in = trace.act[layer];
        const Matrix& w = mlp.weights[layer];

        Matrix dw(w.rows(), w.cols());
        std::vector<double> db(w.rows(), 0.0);
        for (std::size_t r = 0; r < b; ++r) {
            for (std::size_t o = 0; o < w.rows(); ++o) {
                const double d = delta(r, o);
                db[o] += d;
                for (std::size_t i = 0; i < w.cols(); ++i) dw(o, i) += d * in(r, i);
            }
        }
        grads.weights[layer] = std::move(dw);
        grads.biases[layer] = std::move(db);

        const bool need_input = layer > 0 || input_grad != nullptr;
        if (!need_input) break;

        Matrix prev(b, w.cols());
        for (std::size_t r = 0; r < b; ++r)
            for (std::size_t o = 0; o < w.rows(); ++o) {
                const double d = delta(r, o);
                for (std::size_t i = 0; i < w.cols(); ++i) prev(r, i) += d * w(o, i);
            }
        if (layer > 0) {
            // Through the LeakyReLU of the previous layer; slope 1 at exactly 0.
            const Matrix& pre = trace.pre[layer - 1];
            for (std::size_t r = 0; r < b; ++r)
                for (std::size_t i = 0; i < w.cols(); ++i)
                    if (pre(r, i) < 0.0) prev(r, i) *= mlp.leaky_slope;
        }
        if (layer == 0 && input_grad) *input_grad = std::move(prev);
        else delta = std::move(prev);
    }
    return grads;
}

void sgd_step(Mlp& mlp, const Gradients& grads, double lr) {
    if (lr < 0.0) fail(ErrorCode::invalid_argument, "learning rate must be nonnegative");
    if (grads.weights.size() != mlp.num_layers())
        fail(ErrorCode::dimension, "sgd_step: gradient layer count mismatch");
    for (std::size_t layer = 0; layer < mlp.num_layers(); ++layer) {
        const Matrix& dw = grads.weights[layer];
        if (!dw.same_shape(mlp.weights[layer]))
            fail(ErrorCode::dimension, "sgd_step: weight gradient shape mismatch");
        if (!dw.all_finite())
            fail(ErrorCode::diverged, "non-finite weight gradient in layer " + std::to_string(layer));
        for (std::size_t i = 0; i < dw.storage().size(); ++i)
            mlp.weights[layer].storage()[i] -= lr * dw.storage()[i];
        for (std::size_t i = 0; i < grads.biases[layer].size(); ++i) {
            const double g = grads.biases[layer][i];
            if (!std::isfinite(g))
                fail(ErrorCode::diverged, "non-finite bias gradient in layer " + std::to_string(layer));
            mlp.biases[layer][i] -= lr * g;
        }
    }
}

void accumulate(Gradients& into, const Gradients& other) {
    if (into.weights.empty()) {
        into = other;
        return;
    }
    for (std::size_t layer = 0; layer < other.weights.size(); ++layer) {
        for (std::size_t i = 0; i < other.weights[layer].storage().size(); ++i)
            into.weights[layer].storage()[i] += other.weights[layer].storage()[i];
        for (std::size_t i = 0; i < other.biases[layer].size(); ++i)
            into.biases[layer][i] += other.biases[layer][i];
    }
}

double grad_check(const Mlp& mlp, const ScalarLoss& loss, const Matrix& batch, double h) {
    if (h <= 0.0) fail(ErrorCode::invalid_argument, "grad_check step must be positive");

    ForwardTrace trace = forward(mlp, batch);
    Matrix output_grad(trace.outputs().rows(), trace.outputs().cols());
    loss(trace.outputs(), &output_grad);
    const Gradients analytic = backward(mlp, trace, output_grad);

    Mlp probe = mlp;
    const auto eval = [&]() { return loss(forward(probe, batch).outputs(), nullptr); };

    double max_err = 0.0;
    const auto check_param = [&](double& p, double a) {
        const double saved = p;
        p = saved + h;
        const double up = eval();
        p = saved - h;
        const double down = eval();
        p = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
        max_err = std::max(max_err, std::abs(a - numeric) / denom);
    };

    for (std::size_t layer = 0; layer < probe.num_layers(); ++layer) {
        for (std::size_t i = 0; i < probe.weights[layer].storage().size(); ++i)
            check_param(probe.weights[layer].storage()[i], analytic.weights[layer].storage()[i]);
        for (std::size_t i = 0; i < probe.biases[layer].size(); ++i)
            check_param(probe.biases[layer][i], analytic.biases[layer][i]);
    }
    return max_err;
}

std::string checkpoint_to_json(const Mlp& mlp) {
    nlohmann::ordered_json j;
    j["layer_dims"] = mlp.layer_dims;
    j["leaky_slope"] = mlp.leaky_slope;
    j["output_head"] = mlp.head == OutputHead::softmax ? "softmax" : "linear";
    auto& weights = j["weights"] = nlohmann::ordered_json::array();
    for (const Matrix& w : mlp.weights) weights.push_back(w.storage());
    auto& biases = j["biases"] = nlohmann::ordered_json::array();
    for (const auto& b : mlp.biases) biases.push_back(b);
    return j.dump(2);
}

Mlp checkpoint_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) fail(ErrorCode::parse, "checkpoint: invalid JSON");
    try {
        Mlp mlp;
        mlp.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
        mlp.leaky_slope = j.at("leaky_slope").get<double>();
        const std::string head = j.at("output_head").get<std::string>();
        if (head == "softmax") mlp.head = OutputHead::softmax;
        else if (head == "linear") mlp.head = OutputHead::linear;
        else fail(ErrorCode::parse, "checkpoint: unknown output head '" + head + "'");
        if (mlp.layer_dims.size() < 2) fail(ErrorCode::parse, "checkpoint: need two layer dims");

        const auto& weights = j.at("weights");
        const auto& biases = j.at("biases");
        for (std::size_t layer = 0; layer + 1 < mlp.layer_dims.size(); ++layer) {
            Matrix w(mlp.layer_dims[layer + 1], mlp.layer_dims[layer]);
            auto flat = weights.at(layer).get<std::vector<double>>();
            if (flat.size() != w.storage().size())
                fail(ErrorCode::parse, "checkpoint: weight array size mismatch in layer " +
                                           std::to_string(layer));
            w.storage() = std::move(flat);
            mlp.weights.push_back(std::move(w));
            auto b = biases.at(layer).get<std::vector<double>>();
            if (b.size() != mlp.layer_dims[layer + 1])
                fail(ErrorCode::parse, "checkpoint: bias array size mismatch in layer " +
                                           std::to_string(layer));
            mlp.biases.push_back(std::move(b));
        }
        return mlp;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::parse, std::string("checkpoint: ") + e.what());
    }
}

void save_checkpoint(const Mlp& mlp, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot write '" + path + "'");
    out << checkpoint_to_json(mlp) << '\n';
}

Mlp load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return checkpoint_from_json(text);
}

}  // namespace conle
