#include "gridadv/nn.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "gridadv/error.hpp"

namespace gridadv {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

DenseLayer glorot_layer(std::size_t in, std::size_t out, RandomSource& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseLayer layer{Tensor({in, out}), Tensor({out})};
    for (double& w : layer.weight.data()) w = rng.uniform(-limit, limit);
    return layer;
}

void glorot_fill(Tensor& w, std::size_t fan_in, std::size_t fan_out, RandomSource& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : w.data()) v = rng.uniform(-limit, limit);
}

// out[B x n] = x[B x k] W[k x n] + b[n]
Tensor affine(const Tensor& x, const DenseLayer& layer) {
    Tensor out = matmul(x, layer.weight);
    const std::size_t n = layer.bias.size();
    double* po = out.data().data();
    const double* pb = layer.bias.data().data();
    for (std::size_t i = 0; i < out.dim(0); ++i)
        for (std::size_t j = 0; j < n; ++j) po[i * n + j] += pb[j];
    return out;
}

Tensor column_sums(const Tensor& m) {
    const std::size_t rows = m.dim(0), cols = m.dim(1);
    Tensor out({cols});
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) out[j] += m.at(i, j);
    return out;
}

void add_into(Tensor& acc, const Tensor& v) {
    double* pa = acc.data().data();
    const double* pv = v.data().data();
    for (std::size_t i = 0; i < acc.size(); ++i) pa[i] += pv[i];
}

// Dense stack shared by the MLP and the RNN readout. Hidden layers use ReLU
// followed by optional inverted dropout; the last layer is linear.
Tensor dense_forward(const std::vector<DenseLayer>& layers, const Tensor& input, double dropout,
                     Mode mode, RandomSource* rng, ForwardCache& cache) {
    const bool drop = mode == Mode::train && dropout > 0.0;
    if (drop && rng == nullptr) throw ContractError("train-mode forward needs a RandomSource");
    const double keep_scale = 1.0 / (1.0 - dropout);

    cache.pre.clear();
    cache.post.clear();
    cache.masks.clear();
    Tensor x = input;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Tensor z = affine(x, layers[l]);
        if (l + 1 == layers.size()) {
            cache.pre.push_back(z);
            return z;
        }
        Tensor a = relu(z);
        if (drop) {
            Tensor mask(a.shape());
            for (std::size_t i = 0; i < mask.size(); ++i) {
                mask[i] = rng->uniform() < dropout ? 0.0 : keep_scale;
                a[i] *= mask[i];
            }
            cache.masks.push_back(std::move(mask));
        }
        cache.pre.push_back(std::move(z));
        cache.post.push_back(a);
        x = std::move(a);
    }
    throw ConfigError("dense stack has no layers");
}

// Writes W/b gradients into grads[offset..] and returns d(loss)/d(input).
Tensor dense_backward(const std::vector<DenseLayer>& layers, const Tensor& input,
                      const ForwardCache& cache, const Tensor& dout, std::vector<Tensor>& grads,
                      std::size_t offset) {
    Tensor d = dout;
    for (std::size_t l = layers.size(); l-- > 0;) {
        const Tensor& in = l == 0 ? input : cache.post[l - 1];
        grads[offset + 2 * l] = matmul_transposed_a(in, d);
        grads[offset + 2 * l + 1] = column_sums(d);
        Tensor dprev = matmul_transposed_b(d, layers[l].weight);
        if (l > 0) {
            if (!cache.masks.empty()) {
                const Tensor& mask = cache.masks[l - 1];
                for (std::size_t i = 0; i < dprev.size(); ++i) dprev[i] *= mask[i];
            }
            dprev = relu_backward(cache.pre[l - 1], dprev);
        }
        d = std::move(dprev);
    }
    return d;
}

void check_cache(std::uint64_t digest, const ForwardCache& cache, const Tensor& dout) {
    if (cache.parameter_digest != digest) {
        throw ContractError("forward cache does not belong to this model state");
    }
    if (dout.size() != cache.output.size()) {
        throw ContractError("upstream gradient " + shape_string(dout.shape()) +
                            " does not match recorded output " +
                            shape_string(cache.output.shape()));
    }
}

}  // namespace

std::vector<Tensor*> parameters(MlpModel& model) {
    std::vector<Tensor*> out;
    for (auto& layer : model.layers) {
        out.push_back(&layer.weight);
        out.push_back(&layer.bias);
    }
    return out;
}

std::vector<Tensor*> parameters(RnnModel& model) {
    std::vector<Tensor*> out{&model.input_weights, &model.hidden_weights, &model.hidden_bias};
    for (auto& layer : model.readout) {
        out.push_back(&layer.weight);
        out.push_back(&layer.bias);
    }
    return out;
}

std::vector<const Tensor*> parameters(const MlpModel& model) {
    std::vector<const Tensor*> out;
    for (const auto& layer : model.layers) {
        out.push_back(&layer.weight);
        out.push_back(&layer.bias);
    }
    return out;
}

std::vector<const Tensor*> parameters(const RnnModel& model) {
    std::vector<const Tensor*> out{&model.input_weights, &model.hidden_weights,
                                   &model.hidden_bias};
    for (const auto& layer : model.readout) {
        out.push_back(&layer.weight);
        out.push_back(&layer.bias);
    }
    return out;
}

std::vector<const Tensor*> parameters(const Model& model) {
    return std::visit([](const auto& m) { return parameters(m); }, model);
}

std::vector<Tensor*> parameters(Model& model) {
    return std::visit([](auto& m) { return parameters(m); }, model);
}

std::size_t parameter_count(const Model& model) {
    std::size_t n = 0;
    for (const Tensor* p : parameters(model)) n += p->size();
    return n;
}

namespace {

std::uint64_t digest_of(const std::vector<const Tensor*>& params, std::uint64_t family) {
    std::uint64_t h = family;
    for (const Tensor* p : params) {
        h = mix64(h ^ p->size());
        for (double v : p->data()) h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
    }
    return h;
}

}  // namespace

std::uint64_t parameter_digest(const MlpModel& model) { return digest_of(parameters(model), 0); }
std::uint64_t parameter_digest(const RnnModel& model) { return digest_of(parameters(model), 1); }

std::uint64_t parameter_digest(const Model& model) {
    return std::visit([](const auto& m) { return parameter_digest(m); }, model);
}

void validate(const MlpArchitecture& arch) {
    if (arch.input_dim == 0) throw ConfigError("MLP input dimension is zero");
    if (arch.classes == 0) throw ConfigError("MLP class count is zero");
    for (std::size_t i = 0; i < arch.hidden.size(); ++i) {
        if (arch.hidden[i] == 0) {
            throw ConfigError("MLP hidden layer " + std::to_string(i) + " has zero width");
        }
    }
    if (!(arch.dropout >= 0.0 && arch.dropout < 1.0)) {
        throw ConfigError("dropout rate must lie in [0, 1)");
    }
}

void validate(const RnnArchitecture& arch) {
    if (arch.features == 0) throw ConfigError("RNN feature dimension is zero");
    if (arch.hidden == 0) throw ConfigError("RNN hidden width is zero");
    if (arch.steps == 0) throw ConfigError("RNN memory length must be at least 1");
    for (std::size_t i = 0; i < arch.readout.size(); ++i) {
        if (arch.readout[i] == 0) {
            throw ConfigError("RNN readout layer " + std::to_string(i) + " has zero width");
        }
    }
}

MlpModel init_params(const MlpArchitecture& arch, RandomSource& rng) {
    validate(arch);
    MlpModel model{arch, {}};
    std::size_t in = arch.input_dim;
    for (std::size_t width : arch.hidden) {
        model.layers.push_back(glorot_layer(in, width, rng));
        in = width;
    }
    model.layers.push_back(glorot_layer(in, arch.classes, rng));
    return model;
}

RnnModel init_params(const RnnArchitecture& arch, RandomSource& rng) {
    validate(arch);
    RnnModel model;
    model.arch = arch;
    model.input_weights = Tensor({arch.hidden, arch.features});
    model.hidden_weights = Tensor({arch.hidden, arch.hidden});
    model.hidden_bias = Tensor({arch.hidden});
    glorot_fill(model.input_weights, arch.features, arch.hidden, rng);
    glorot_fill(model.hidden_weights, arch.hidden, arch.hidden, rng);
    std::size_t in = arch.hidden;
    for (std::size_t width : arch.readout) {
        model.readout.push_back(glorot_layer(in, width, rng));
        in = width;
    }
    model.readout.push_back(glorot_layer(in, 1, rng));
    return model;
}

Model init_model(const Architecture& arch, RandomSource& rng) {
    return std::visit([&](const auto& a) -> Model { return init_params(a, rng); }, arch);
}

Architecture architecture_of(const Model& model) {
    return std::visit([](const auto& m) -> Architecture { return m.arch; }, model);
}

Tensor mlp_forward(const MlpModel& model, const Tensor& x, Mode mode, RandomSource* rng,
                   ForwardCache& cache) {
    if (x.rank() != 2 || x.dim(1) != model.arch.input_dim) {
        throw ShapeError("mlp_forward: expected [batch x " +
                         std::to_string(model.arch.input_dim) + "] input, got " +
                         shape_string(x.shape()));
    }
    cache = ForwardCache{};
    cache.input = x;
    cache.output = dense_forward(model.layers, x, model.arch.dropout, mode, rng, cache);
    cache.parameter_digest = parameter_digest(model);
    return cache.output;
}

Gradients mlp_backward(const MlpModel& model, const ForwardCache& cache, const Tensor& dlogits) {
    check_cache(parameter_digest(model), cache, dlogits);
    Gradients g;
    g.params.resize(2 * model.layers.size());
    g.input = dense_backward(model.layers, cache.input, cache,
                             dlogits.reshaped(cache.output.shape()), g.params, 0);
    return g;
}

Tensor rnn_forward(const RnnModel& model, const Tensor& x, Mode mode, RandomSource* rng,
                   ForwardCache& cache) {
    const auto& arch = model.arch;
    const bool single = x.rank() == 2;
    const std::size_t batch = single ? 1 : (x.rank() == 3 ? x.dim(0) : 0);
    const std::size_t steps = single ? x.dim(0) : (x.rank() == 3 ? x.dim(1) : 0);
    const std::size_t feats = x.rank() >= 2 ? x.shape().back() : 0;
    if (!(x.rank() == 2 || x.rank() == 3) || steps != arch.steps || feats != arch.features) {
        throw ShapeError("rnn_forward: expected [" + std::to_string(arch.steps) + " x " +
                         std::to_string(arch.features) + "] sequences, got " +
                         shape_string(x.shape()));
    }
    const std::size_t hidden = arch.hidden;

    cache = ForwardCache{};
    cache.input = x;
    cache.hidden_states.reserve(steps + 1);
    cache.hidden_states.emplace_back(Shape{batch, hidden});
    Tensor xt({batch, feats});
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t f = 0; f < feats; ++f)
                xt.at(b, f) = x[(b * steps + t) * feats + f];
        Tensor a = matmul_transposed_b(xt, model.input_weights);
        add_into(a, matmul_transposed_b(cache.hidden_states.back(), model.hidden_weights));
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t h = 0; h < hidden; ++h)
                a.at(b, h) = std::tanh(a.at(b, h) + model.hidden_bias[h]);
        cache.hidden_states.push_back(std::move(a));
    }
    // Readout dropout is not part of the RNN family.
    Tensor out = dense_forward(model.readout, cache.hidden_states.back(), 0.0, mode, rng, cache);
    cache.output = out.reshaped({batch});
    cache.parameter_digest = parameter_digest(model);
    return cache.output;
}

Gradients rnn_backward(const RnnModel& model, const ForwardCache& cache, const Tensor& dy) {
    check_cache(parameter_digest(model), cache, dy);
    const std::size_t batch = cache.output.size();
    const std::size_t steps = model.arch.steps;
    const std::size_t feats = model.arch.features;
    const std::size_t hidden = model.arch.hidden;

    Gradients g;
    g.params.resize(3 + 2 * model.readout.size());
    Tensor dh = dense_backward(model.readout, cache.hidden_states.back(), cache,
                               dy.reshaped({batch, 1}), g.params, 3);

    Tensor dw_in({hidden, feats});
    Tensor dw_hh({hidden, hidden});
    Tensor db({hidden});
    g.input = Tensor(cache.input.shape());
    Tensor xt({batch, feats});
    for (std::size_t t = steps; t-- > 0;) {
        const Tensor& h_next = cache.hidden_states[t + 1];
        Tensor da = dh;
        for (std::size_t i = 0; i < da.size(); ++i) da[i] *= 1.0 - h_next[i] * h_next[i];
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t f = 0; f < feats; ++f)
                xt.at(b, f) = cache.input[(b * steps + t) * feats + f];
        add_into(dw_in, matmul_transposed_a(da, xt));
        add_into(dw_hh, matmul_transposed_a(da, cache.hidden_states[t]));
        add_into(db, column_sums(da));
        Tensor dx = matmul(da, model.input_weights);
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t f = 0; f < feats; ++f)
                g.input[(b * steps + t) * feats + f] = dx.at(b, f);
        dh = matmul(da, model.hidden_weights);
    }
    g.params[0] = std::move(dw_in);
    g.params[1] = std::move(dw_hh);
    g.params[2] = std::move(db);
    return g;
}

Tensor forward(const Model& model, const Tensor& x, Mode mode, RandomSource* rng,
               ForwardCache& cache) {
    return std::visit(overloaded{
                          [&](const MlpModel& m) { return mlp_forward(m, x, mode, rng, cache); },
                          [&](const RnnModel& m) { return rnn_forward(m, x, mode, rng, cache); },
                      },
                      model);
}

Gradients backward(const Model& model, const ForwardCache& cache, const Tensor& dout) {
    return std::visit(overloaded{
                          [&](const MlpModel& m) { return mlp_backward(m, cache, dout); },
                          [&](const RnnModel& m) { return rnn_backward(m, cache, dout); },
                      },
                      model);
}

Tensor predict(const Model& model, const Tensor& x) {
    ForwardCache cache;
    return forward(model, x, Mode::eval, nullptr, cache);
}

LossKind default_loss(const Model& model) {
    return std::holds_alternative<MlpModel>(model) ? LossKind::cross_entropy : LossKind::mse;
}

LossAndGradients loss_and_gradients(const Model& model, const Tensor& x, const Tensor& y,
                                    LossKind loss, Mode mode, RandomSource* rng) {
    ForwardCache cache;
    const Tensor out = forward(model, x, mode, rng, cache);
    LossResult l = compute_loss(loss, out, y);
    return {l.loss, backward(model, cache, l.grad)};
}

double evaluate_loss(const Model& model, const Tensor& x, const Tensor& y, LossKind loss) {
    return compute_loss(loss, predict(model, x), y).loss;
}

double grad_check(const Model& model, const Tensor& x, const Tensor& y, LossKind loss,
                  double step) {
    const LossAndGradients analytic = loss_and_gradients(model, x, y, loss);
    double worst = 0.0;
    auto compare = [&](double a, double numeric) {
        worst = std::max(worst, std::abs(a - numeric) / std::max(1.0, std::abs(a)));
    };

    Model probe = model;
    auto params = parameters(probe);
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& t = *params[p];
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double saved = t[i];
            t[i] = saved + step;
            const double up = evaluate_loss(probe, x, y, loss);
            t[i] = saved - step;
            const double down = evaluate_loss(probe, x, y, loss);
            t[i] = saved;
            compare(analytic.grads.params[p][i], (up - down) / (2.0 * step));
        }
    }

    Tensor xp = x;
    for (std::size_t i = 0; i < xp.size(); ++i) {
        const double saved = xp[i];
        xp[i] = saved + step;
        const double up = evaluate_loss(model, xp, y, loss);
        xp[i] = saved - step;
        const double down = evaluate_loss(model, xp, y, loss);
        xp[i] = saved;
        compare(analytic.grads.input[i], (up - down) / (2.0 * step));
    }
    return worst;
}

}  // namespace gridadv
