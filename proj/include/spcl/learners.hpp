#pragma once

// Small predictors with hand-written backpropagation: linear regression,
// softmax/sigmoid logistic regression and a one-hidden-layer tanh perceptron.
// Parameters are a flat vector; every loss comes with an exact gradient.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "spcl/errors.hpp"

namespace spcl {

enum class PredictorKind { LinearRegression, LogisticRegression, MLP };

inline const char* to_string(PredictorKind kind) {
    switch (kind) {
        case PredictorKind::LinearRegression: return "linear";
        case PredictorKind::LogisticRegression: return "logistic";
        case PredictorKind::MLP: return "mlp";
    }
    return "?";
}

struct PredictorSpec {
    PredictorKind kind = PredictorKind::LinearRegression;
    std::size_t input_dim = 1;
    std::size_t hidden_dim = 0;  // MLP only
    std::size_t output_dim = 1;

    static PredictorSpec linear_regression(std::size_t input_dim) {
        return {PredictorKind::LinearRegression, input_dim, 0, 1};
    }
    /// classes == 1 gives a sigmoid binary classifier, otherwise softmax.
    static PredictorSpec logistic_regression(std::size_t input_dim, std::size_t classes) {
        return {PredictorKind::LogisticRegression, input_dim, 0, classes};
    }
    static PredictorSpec mlp(std::size_t input_dim, std::size_t hidden_dim,
                             std::size_t output_dim) {
        return {PredictorKind::MLP, input_dim, hidden_dim, output_dim};
    }

    void validate() const {
        detail::require(input_dim > 0 && output_dim > 0, "predictor: dimensions must be positive");
        detail::require((kind == PredictorKind::MLP) == (hidden_dim > 0),
                        "predictor: hidden_dim is required for (and only for) MLP");
    }

    std::size_t parameter_count() const {
        if (kind == PredictorKind::MLP)
            return input_dim * hidden_dim + hidden_dim + hidden_dim * output_dim + output_dim;
        return input_dim * output_dim + output_dim;
    }

    bool operator==(const PredictorSpec&) const = default;
};

using ParameterVector = std::vector<double>;

/// One imitation trajectory: per-step features and the expert action.
struct ActionSequence {
    std::vector<std::vector<double>> step_features;
    std::vector<std::size_t> actions;

    bool operator==(const ActionSequence&) const = default;
};

/// Regression value, class index, or an action sequence.
using Target = std::variant<double, std::size_t, ActionSequence>;

struct LabeledExample {
    std::vector<double> x;  // unused for action sequences
    Target y;
    int round = 1;

    bool operator==(const LabeledExample&) const = default;
};

struct EvalMetrics {
    double mean_loss = 0.0;
    double accuracy = 0.0;
};

namespace detail {

inline void check_theta(const PredictorSpec& spec, std::span<const double> theta) {
    require(theta.size() == spec.parameter_count(),
            "predictor: expected " + std::to_string(spec.parameter_count()) +
                " parameters, got " + std::to_string(theta.size()));
}

inline void check_features(const PredictorSpec& spec, std::span<const double> x) {
    require(x.size() == spec.input_dim, "predictor: expected " + std::to_string(spec.input_dim) +
                                            " features, got " + std::to_string(x.size()));
}

struct Activations {
    std::vector<double> hidden;  // tanh outputs, MLP only
    std::vector<double> output;
};

inline Activations forward(const PredictorSpec& spec, std::span<const double> theta,
                           std::span<const double> x) {
    Activations act;
    const std::size_t d = spec.input_dim;
    const std::size_t o = spec.output_dim;
    std::span<const double> head_in = x;
    std::size_t head_off = 0;
    if (spec.kind == PredictorKind::MLP) {
        const std::size_t h = spec.hidden_dim;
        act.hidden.resize(h);
        for (std::size_t k = 0; k < h; ++k) {
            double s = theta[d * h + k];
            const double* row = theta.data() + k * d;
            for (std::size_t j = 0; j < d; ++j) s += row[j] * x[j];
            act.hidden[k] = std::tanh(s);
        }
        head_in = act.hidden;
        head_off = d * h + h;
    }
    const std::size_t in = head_in.size();
    act.output.resize(o);
    for (std::size_t r = 0; r < o; ++r) {
        double s = theta[head_off + in * o + r];
        const double* row = theta.data() + head_off + r * in;
        for (std::size_t j = 0; j < in; ++j) s += row[j] * head_in[j];
        act.output[r] = s;
    }
    return act;
}

/// Accumulates scale * d(loss)/d(theta) given d(loss)/d(output).
inline void backward(const PredictorSpec& spec, std::span<const double> theta,
                     std::span<const double> x, const Activations& act,
                     std::span<const double> d_out, double scale, std::span<double> grad) {
    const std::size_t d = spec.input_dim;
    const std::size_t o = spec.output_dim;
    if (spec.kind != PredictorKind::MLP) {
        for (std::size_t r = 0; r < o; ++r) {
            const double g = scale * d_out[r];
            double* row = grad.data() + r * d;
            for (std::size_t j = 0; j < d; ++j) row[j] += g * x[j];
            grad[d * o + r] += g;
        }
        return;
    }
    const std::size_t h = spec.hidden_dim;
    const std::size_t off = d * h + h;
    std::vector<double> d_hidden(h, 0.0);
    for (std::size_t r = 0; r < o; ++r) {
        const double g = scale * d_out[r];
        double* grow = grad.data() + off + r * h;
        const double* wrow = theta.data() + off + r * h;
        for (std::size_t k = 0; k < h; ++k) {
            grow[k] += g * act.hidden[k];
            d_hidden[k] += g * wrow[k];
        }
        grad[off + h * o + r] += g;
    }
    for (std::size_t k = 0; k < h; ++k) {
        const double g = d_hidden[k] * (1.0 - act.hidden[k] * act.hidden[k]);
        double* row = grad.data() + k * d;
        for (std::size_t j = 0; j < d; ++j) row[j] += g * x[j];
        grad[d * h + k] += g;
    }
}

inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// Cross-entropy of class y under the head's output, filling d(loss)/d(output).
inline double cross_entropy(std::span<const double> z, std::size_t y, std::vector<double>& d_out) {
    d_out.assign(z.size(), 0.0);
    if (z.size() == 1) {
        require(y <= 1, "binary classifier: label must be 0 or 1");
        const double t = static_cast<double>(y);
        d_out[0] = sigmoid(z[0]) - t;
        return softplus(z[0]) - t * z[0];
    }
    require(y < z.size(), "classifier: label " + std::to_string(y) + " out of range");
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t r = 0; r < z.size(); ++r) {
        d_out[r] = std::exp(z[r] - zmax);
        sum += d_out[r];
    }
    for (double& p : d_out) p /= sum;
    d_out[y] -= 1.0;
    return std::max(0.0, std::log(sum) + zmax - z[y]);
}

inline std::size_t predicted_class(std::span<const double> z) {
    if (z.size() == 1) return z[0] >= 0.0 ? 1 : 0;
    return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

/// Loss of one example; accumulates scale * gradient into grad when non-empty.
inline double loss_and_gradient(const PredictorSpec& spec, std::span<const double> theta,
                                const LabeledExample& ex, double scale, std::span<double> grad) {
    const bool want_grad = !grad.empty();
    std::vector<double> d_out;
    if (const double* y = std::get_if<double>(&ex.y)) {
        require(spec.kind != PredictorKind::LogisticRegression,
                "logistic regression needs a class or action target");
        require(spec.output_dim == 1, "regression needs a single output");
        check_features(spec, ex.x);
        const Activations act = forward(spec, theta, ex.x);
        const double r = act.output[0] - *y;
        if (want_grad) {
            d_out = {r};
            backward(spec, theta, ex.x, act, d_out, scale, grad);
        }
        return 0.5 * r * r;
    }
    require(spec.kind != PredictorKind::LinearRegression,
            "linear regression needs a real-valued target");
    if (const std::size_t* y = std::get_if<std::size_t>(&ex.y)) {
        check_features(spec, ex.x);
        const Activations act = forward(spec, theta, ex.x);
        const double loss = cross_entropy(act.output, *y, d_out);
        if (want_grad) backward(spec, theta, ex.x, act, d_out, scale, grad);
        return loss;
    }
    const auto& seq = std::get<ActionSequence>(ex.y);
    require(!seq.actions.empty() && seq.actions.size() == seq.step_features.size(),
            "action sequence: need one feature row per action");
    const double inv_len = 1.0 / static_cast<double>(seq.actions.size());
    double total = 0.0;
    for (std::size_t t = 0; t < seq.actions.size(); ++t) {
        check_features(spec, seq.step_features[t]);
        const Activations act = forward(spec, theta, seq.step_features[t]);
        total += cross_entropy(act.output, seq.actions[t], d_out);
        if (want_grad) backward(spec, theta, seq.step_features[t], act, d_out, scale * inv_len, grad);
    }
    return total * inv_len;
}

}  // namespace detail

/// Uniform(-0.1, 0.1) weights, zero biases; deterministic in seed.
inline ParameterVector init_parameters(const PredictorSpec& spec, std::uint64_t seed) {
    spec.validate();
    ParameterVector theta(spec.parameter_count(), 0.0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-0.1, 0.1);
    const std::size_t d = spec.input_dim;
    const std::size_t o = spec.output_dim;
    if (spec.kind == PredictorKind::MLP) {
        const std::size_t h = spec.hidden_dim;
        for (std::size_t i = 0; i < d * h; ++i) theta[i] = dist(rng);
        const std::size_t off = d * h + h;
        for (std::size_t i = 0; i < h * o; ++i) theta[off + i] = dist(rng);
    } else {
        for (std::size_t i = 0; i < d * o; ++i) theta[i] = dist(rng);
    }
    return theta;
}

/// Indices of the bias entries within the flat parameter vector.
inline std::vector<std::size_t> bias_indices(const PredictorSpec& spec) {
    std::vector<std::size_t> idx;
    const std::size_t d = spec.input_dim;
    const std::size_t o = spec.output_dim;
    if (spec.kind == PredictorKind::MLP) {
        const std::size_t h = spec.hidden_dim;
        for (std::size_t k = 0; k < h; ++k) idx.push_back(d * h + k);
        for (std::size_t r = 0; r < o; ++r) idx.push_back(d * h + h + h * o + r);
    } else {
        for (std::size_t r = 0; r < o; ++r) idx.push_back(d * o + r);
    }
    return idx;
}

/// Raw outputs (regression value or logits) for one feature vector.
inline std::vector<double> predict(const PredictorSpec& spec, std::span<const double> theta,
                                   std::span<const double> x) {
    detail::check_theta(spec, theta);
    detail::check_features(spec, x);
    return detail::forward(spec, theta, x).output;
}

/// 1/2 (f(x) - y)^2 for regression, -log p(y|x) for classification, mean
/// per-step cross-entropy for action sequences.
inline double per_sample_loss(const PredictorSpec& spec, std::span<const double> theta,
                              const LabeledExample& ex) {
    detail::check_theta(spec, theta);
    return detail::loss_and_gradient(spec, theta, ex, 1.0, {});
}

inline std::vector<double> per_sample_gradient(const PredictorSpec& spec,
                                               std::span<const double> theta,
                                               const LabeledExample& ex) {
    detail::check_theta(spec, theta);
    std::vector<double> grad(theta.size(), 0.0);
    detail::loss_and_gradient(spec, theta, ex, 1.0, grad);
    return grad;
}

struct StepResult {
    ParameterVector theta;
    double weighted_loss = 0.0;  // (1/|batch|) sum w_i l_i at the pre-step parameters
};

/// theta - lr * (1/|batch|) * sum_i w_i grad l_i(theta), over data[indices].
inline StepResult weighted_sgd_step_indexed(const PredictorSpec& spec,
                                            std::span<const double> theta,
                                            std::span<const LabeledExample> data,
                                            std::span<const std::size_t> indices,
                                            std::span<const double> weights, double lr) {
    detail::check_theta(spec, theta);
    detail::require(!indices.empty(), "sgd step: empty batch");
    detail::require(weights.size() == indices.size(),
                    "sgd step: " + std::to_string(weights.size()) + " weights for a batch of " +
                        std::to_string(indices.size()));
    detail::require(std::isfinite(lr) && lr >= 0.0, "sgd step: learning rate must be >= 0");
    std::vector<double> grad(theta.size(), 0.0);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < indices.size(); ++b) {
        detail::require(indices[b] < data.size(), "sgd step: sample index out of range");
        const double w = weights[b];
        detail::require(std::isfinite(w) && w >= 0.0 && w <= 1.0,
                        "sgd step: weights must lie in [0,1]");
        const auto& ex = data[indices[b]];
        if (w == 0.0) continue;
        loss_sum += w * detail::loss_and_gradient(spec, theta, ex, w, grad);
    }
    const double n = static_cast<double>(indices.size());
    const double scale = lr / n;
    StepResult result{ParameterVector(theta.begin(), theta.end()), loss_sum / n};
    for (std::size_t j = 0; j < grad.size(); ++j) result.theta[j] -= scale * grad[j];
    return result;
}

inline ParameterVector weighted_sgd_step(const PredictorSpec& spec, std::span<const double> theta,
                                         std::span<const LabeledExample> batch,
                                         std::span<const double> weights, double lr) {
    std::vector<std::size_t> indices(batch.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    return weighted_sgd_step_indexed(spec, theta, batch, indices, weights, lr).theta;
}

/// Mean loss plus accuracy: argmax-correct predictions (per step for action
/// sequences) or regression predictions within 0.1 of the target.
inline EvalMetrics evaluate(const PredictorSpec& spec, std::span<const double> theta,
                            std::span<const LabeledExample> dataset) {
    detail::check_theta(spec, theta);
    detail::require(!dataset.empty(), "evaluate: empty dataset");
    double loss = 0.0;
    std::size_t correct = 0;
    std::size_t predictions = 0;
    for (const auto& ex : dataset) {
        loss += detail::loss_and_gradient(spec, theta, ex, 1.0, {});
        if (const double* y = std::get_if<double>(&ex.y)) {
            correct += std::abs(detail::forward(spec, theta, ex.x).output[0] - *y) <= 0.1;
            ++predictions;
        } else if (const std::size_t* c = std::get_if<std::size_t>(&ex.y)) {
            correct += detail::predicted_class(detail::forward(spec, theta, ex.x).output) == *c;
            ++predictions;
        } else {
            const auto& seq = std::get<ActionSequence>(ex.y);
            for (std::size_t t = 0; t < seq.actions.size(); ++t)
                correct += detail::predicted_class(
                               detail::forward(spec, theta, seq.step_features[t]).output) ==
                           seq.actions[t];
            predictions += seq.actions.size();
        }
    }
    return {loss / static_cast<double>(dataset.size()),
            static_cast<double>(correct) / static_cast<double>(predictions)};
}

}  // namespace spcl
