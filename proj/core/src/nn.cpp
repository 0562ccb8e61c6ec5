#include "mtag/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "mtag/hash.hpp"

namespace mtag {

void ModelConfig::validate() const {
    auto positive = [](std::size_t v, const char* name) {
        if (v == 0) {
            throw InvalidConfig(std::string(name) + " must be positive");
        }
    };
    positive(input_vocab_size, "input_vocab_size");
    positive(output_vocab_size, "output_vocab_size");
    positive(embedding_dim, "embedding_dim");
    positive(recurrent_layers, "recurrent_layers");
    positive(hidden_per_direction, "hidden_per_direction");
    positive(fc_units, "fc_units");
    auto probability = [](double v, const char* name) {
        if (!(v >= 0.0 && v < 1.0)) {
            throw InvalidConfig(std::string(name) + " must lie in [0, 1)");
        }
    };
    probability(dropout_recurrent, "dropout_recurrent");
    probability(dropout_fc, "dropout_fc");
    if (!(weight_decay >= 0.0)) {
        throw InvalidConfig("weight_decay must be non-negative");
    }
}

namespace {

template <class Ref, class P>
std::vector<Ref> enumerate_tensors(P& p) {
    std::vector<Ref> out;
    auto add = [&out](std::string name, auto& m) {
        out.push_back(Ref{std::move(name), m.data(), m.rows(), m.cols()});
    };
    add("embedding", p.embedding);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto do_dir = [&](const char* dname, auto& dir) {
            auto do_gate = [&](const char* gname, auto& gate) {
                std::string base = "layer" + std::to_string(l) + "." + dname + "." + gname;
                add(base + ".w_in", gate.w_in);
                add(base + ".w_rec", gate.w_rec);
                add(base + ".bias", gate.bias);
            };
            do_gate("input", dir.input);
            do_gate("forget", dir.forget);
            do_gate("cell", dir.cell);
            do_gate("output", dir.output);
        };
        do_dir("fwd", p.layers[l].fwd);
        do_dir("bwd", p.layers[l].bwd);
    }
    add("fc_weights", p.fc_weights);
    add("fc_bias", p.fc_bias);
    add("out_weights", p.out_weights);
    add("out_bias", p.out_bias);
    return out;
}

}  // namespace

std::vector<TensorRef> ModelParams::tensors() {
    return enumerate_tensors<TensorRef>(*this);
}

std::vector<TensorCRef> ModelParams::tensors() const {
    return enumerate_tensors<TensorCRef>(*this);
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors()) {
        n += static_cast<std::size_t>(t.size());
    }
    return n;
}

ModelParams zeros_like(const ModelConfig& config) {
    config.validate();
    const auto V_in = static_cast<Eigen::Index>(config.input_vocab_size);
    const auto V_out = static_cast<Eigen::Index>(config.output_vocab_size);
    const auto E = static_cast<Eigen::Index>(config.embedding_dim);
    const auto H = static_cast<Eigen::Index>(config.hidden_per_direction);
    const auto F = static_cast<Eigen::Index>(config.fc_units);

    ModelParams p;
    p.embedding = Matrix::Zero(V_in, E);
    p.layers.resize(config.recurrent_layers);
    for (std::size_t l = 0; l < config.recurrent_layers; ++l) {
        const auto in = static_cast<Eigen::Index>(config.layer_input(l));
        for (DirectionParams* dir : {&p.layers[l].fwd, &p.layers[l].bwd}) {
            for (GateParams* gate : {&dir->input, &dir->forget, &dir->cell, &dir->output}) {
                gate->w_in = Matrix::Zero(in, H);
                gate->w_rec = Matrix::Zero(H, H);
                gate->bias = Vector::Zero(H);
            }
        }
    }
    p.fc_weights = Matrix::Zero(2 * H, F);
    p.fc_bias = Vector::Zero(F);
    p.out_weights = Matrix::Zero(F, V_out);
    p.out_bias = Vector::Zero(V_out);
    return p;
}

ModelParams init_params(const ModelConfig& config) {
    ModelParams p = zeros_like(config);
    Rng rng(config.seed);
    // Glorot-uniform, filled in enumeration order, column-major within each
    // matrix; biases stay zero except the forget gates.
    auto fill = [&rng](Matrix& m) {
        const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
        double* data = m.data();
        for (Eigen::Index k = 0; k < m.size(); ++k) {
            data[k] = rng.uniform(-bound, bound);
        }
    };
    fill(p.embedding);
    for (auto& layer : p.layers) {
        for (DirectionParams* dir : {&layer.fwd, &layer.bwd}) {
            for (GateParams* gate : {&dir->input, &dir->forget, &dir->cell, &dir->output}) {
                fill(gate->w_in);
                fill(gate->w_rec);
            }
            dir->forget.bias.setOnes();
        }
    }
    fill(p.fc_weights);
    fill(p.out_weights);
    return p;
}

std::size_t parameter_count(const ModelConfig& config) {
    config.validate();
    const std::size_t H = config.hidden_per_direction;
    std::size_t n = config.input_vocab_size * config.embedding_dim;
    for (std::size_t l = 0; l < config.recurrent_layers; ++l) {
        n += 2 * 4 * (config.layer_input(l) * H + H * H + H);
    }
    n += 2 * H * config.fc_units + config.fc_units;
    n += config.fc_units * config.output_vocab_size + config.output_vocab_size;
    return n;
}

namespace {

Vector sigmoid(const Vector& z) {
    return (1.0 + (-z.array()).exp()).inverse().matrix();
}

void run_direction(const DirectionParams& dp, const std::vector<Vector>& xs, bool reversed,
                   detail::DirectionCache& dc) {
    const std::size_t T = xs.size();
    const Eigen::Index H = dp.input.bias.size();
    dc.steps.assign(T, detail::StepCache{});
    Vector h = Vector::Zero(H);
    Vector c = Vector::Zero(H);
    for (std::size_t s = 0; s < T; ++s) {
        const std::size_t pos = reversed ? T - 1 - s : s;
        const Vector& x = xs[pos];
        auto pre = [&](const GateParams& g) -> Vector {
            return g.w_in.transpose() * x + g.w_rec.transpose() * h + g.bias;
        };
        detail::StepCache st;
        st.i = sigmoid(pre(dp.input));
        st.f = sigmoid(pre(dp.forget));
        st.g = pre(dp.cell).array().tanh().matrix();
        st.o = sigmoid(pre(dp.output));
        st.c = st.f.cwiseProduct(c) + st.i.cwiseProduct(st.g);
        st.tanh_c = st.c.array().tanh().matrix();
        st.h = st.o.cwiseProduct(st.tanh_c);
        h = st.h;
        c = st.c;
        dc.steps[pos] = std::move(st);
    }
}

Vector softmax(const Vector& logits) {
    const double m = logits.maxCoeff();
    Vector e = (logits.array() - m).exp().matrix();
    return e / e.sum();
}

}  // namespace

Vector forward(const ModelParams& params, const ModelConfig& config,
               std::span<const std::size_t> input, RunMode mode, Rng* rng, ForwardCache* cache,
               const DropoutMasks* fixed_masks) {
    config.validate();
    if (input.empty()) {
        throw EmptySequence("forward needs a non-empty index sequence");
    }
    for (std::size_t idx : input) {
        if (idx >= config.input_vocab_size) {
            throw IndexOutOfVocab("input index " + std::to_string(idx) +
                                  " outside vocabulary of size " +
                                  std::to_string(config.input_vocab_size));
        }
    }
    const bool train = mode == RunMode::train;
    if (train && fixed_masks == nullptr && rng == nullptr &&
        (config.dropout_recurrent > 0.0 || config.dropout_fc > 0.0)) {
        throw Error("train-mode forward needs an rng or fixed dropout masks");
    }

    const std::size_t T = input.size();
    const std::size_t L = config.recurrent_layers;
    const Eigen::Index H = static_cast<Eigen::Index>(config.hidden_per_direction);

    if (fixed_masks != nullptr) {
        if (fixed_masks->recurrent.size() != L) {
            throw ShapeMismatch("fixed dropout masks cover the wrong layer count");
        }
        for (std::size_t l = 0; l + 1 < L; ++l) {
            if (fixed_masks->recurrent[l].size() != T) {
                throw ShapeMismatch("fixed dropout masks cover the wrong sequence length");
            }
        }
        if (fixed_masks->recurrent[L - 1].size() != 1) {
            throw ShapeMismatch("last-layer fixed mask must be the single summary mask");
        }
    }

    ForwardCache local;
    ForwardCache& c = cache != nullptr ? *cache : local;
    c = ForwardCache{};
    c.config = config;
    c.mode = mode;
    c.params = &params;
    c.params_revision = params.revision;
    c.input.assign(input.begin(), input.end());
    c.layers.resize(L);

    auto make_mask = [&](Eigen::Index n, double p, const Vector* fixed) -> Vector {
        if (fixed != nullptr) {
            if (fixed->size() != n) {
                throw ShapeMismatch("fixed dropout mask has the wrong width");
            }
            return *fixed;
        }
        Vector mask = Vector::Ones(n);
        if (p > 0.0) {
            const double scale = 1.0 / (1.0 - p);
            for (Eigen::Index k = 0; k < n; ++k) {
                mask[k] = rng->uniform() >= p ? scale : 0.0;
            }
        }
        return mask;
    };

    std::vector<Vector> layer_input(T);
    for (std::size_t t = 0; t < T; ++t) {
        layer_input[t] = params.embedding.row(static_cast<Eigen::Index>(input[t])).transpose();
    }

    for (std::size_t l = 0; l < L; ++l) {
        auto& lc = c.layers[l];
        lc.inputs = std::move(layer_input);
        run_direction(params.layers[l].fwd, lc.inputs, false, lc.fwd);
        run_direction(params.layers[l].bwd, lc.inputs, true, lc.bwd);
        if (l + 1 < L) {
            layer_input.assign(T, Vector());
            for (std::size_t t = 0; t < T; ++t) {
                Vector concat(2 * H);
                concat.head(H) = lc.fwd.steps[t].h;
                concat.tail(H) = lc.bwd.steps[t].h;
                if (train) {
                    Vector mask = make_mask(2 * H, config.dropout_recurrent,
                                            fixed_masks != nullptr ? &fixed_masks->recurrent[l][t]
                                                                   : nullptr);
                    concat = concat.cwiseProduct(mask);
                    lc.drop_masks.push_back(std::move(mask));
                }
                layer_input[t] = std::move(concat);
            }
        }
    }

    // Each direction's final computation: forward after the last position,
    // backward after the first, together a whole-sentence summary.
    const auto& last = c.layers[L - 1];
    c.summary.resize(2 * H);
    c.summary.head(H) = last.fwd.steps[T - 1].h;
    c.summary.tail(H) = last.bwd.steps[0].h;

    if (train) {
        c.summary_mask = make_mask(2 * H, config.dropout_recurrent,
                                   fixed_masks != nullptr ? &fixed_masks->recurrent[L - 1][0]
                                                          : nullptr);
    } else {
        c.summary_mask = Vector::Ones(2 * H);
    }
    c.summary_dropped = c.summary.cwiseProduct(c.summary_mask);

    c.fc_pre = params.fc_weights.transpose() * c.summary_dropped + params.fc_bias;
    c.fc_relu = c.fc_pre.cwiseMax(0.0);
    if (train) {
        c.fc_mask = make_mask(static_cast<Eigen::Index>(config.fc_units), config.dropout_fc,
                              fixed_masks != nullptr ? &fixed_masks->fc : nullptr);
    } else {
        c.fc_mask = Vector::Ones(static_cast<Eigen::Index>(config.fc_units));
    }
    c.fc_dropped = c.fc_relu.cwiseProduct(c.fc_mask);

    c.logits = params.out_weights.transpose() * c.fc_dropped + params.out_bias;
    c.probs = softmax(c.logits);
    return c.probs;
}

double l2_penalty(const ModelParams& params, const ModelConfig& config) {
    if (config.weight_decay == 0.0) {
        return 0.0;
    }
    return 0.5 * config.weight_decay *
           (params.fc_weights.squaredNorm() + params.out_weights.squaredNorm());
}

double loss(const Vector& probabilities, std::size_t target_index, const ModelParams& params,
            const ModelConfig& config) {
    if (target_index >= static_cast<std::size_t>(probabilities.size())) {
        throw IndexOutOfVocab("target index outside the distribution");
    }
    return -std::log(probabilities[static_cast<Eigen::Index>(target_index)]) +
           l2_penalty(params, config);
}

namespace {

void backward_direction(const DirectionParams& dp, DirectionParams& dg,
                        const detail::DirectionCache& dc, const std::vector<Vector>& xs,
                        const std::vector<Vector>& dh_ext, bool reversed,
                        std::vector<Vector>& dx) {
    const std::size_t T = xs.size();
    const Eigen::Index H = dp.input.bias.size();
    const Vector zero = Vector::Zero(H);
    Vector dh_carry = Vector::Zero(H);
    Vector dc_carry = Vector::Zero(H);
    for (std::size_t s = T; s-- > 0;) {
        const std::size_t pos = reversed ? T - 1 - s : s;
        const auto& st = dc.steps[pos];
        const std::size_t prev_pos = reversed ? pos + 1 : pos - 1;
        const Vector& c_prev = s == 0 ? zero : dc.steps[prev_pos].c;
        const Vector& h_prev = s == 0 ? zero : dc.steps[prev_pos].h;

        const Vector dh = dh_ext[pos] + dh_carry;
        const Vector do_ = dh.cwiseProduct(st.tanh_c);
        const Vector dc_total =
            dc_carry + (dh.array() * st.o.array() * (1.0 - st.tanh_c.array().square())).matrix();

        const Vector dpre_i =
            (dc_total.array() * st.g.array() * st.i.array() * (1.0 - st.i.array())).matrix();
        const Vector dpre_f =
            (dc_total.array() * c_prev.array() * st.f.array() * (1.0 - st.f.array())).matrix();
        const Vector dpre_g =
            (dc_total.array() * st.i.array() * (1.0 - st.g.array().square())).matrix();
        const Vector dpre_o = (do_.array() * st.o.array() * (1.0 - st.o.array())).matrix();

        const Vector& x = xs[pos];
        dg.input.w_in.noalias() += x * dpre_i.transpose();
        dg.forget.w_in.noalias() += x * dpre_f.transpose();
        dg.cell.w_in.noalias() += x * dpre_g.transpose();
        dg.output.w_in.noalias() += x * dpre_o.transpose();
        dg.input.w_rec.noalias() += h_prev * dpre_i.transpose();
        dg.forget.w_rec.noalias() += h_prev * dpre_f.transpose();
        dg.cell.w_rec.noalias() += h_prev * dpre_g.transpose();
        dg.output.w_rec.noalias() += h_prev * dpre_o.transpose();
        dg.input.bias += dpre_i;
        dg.forget.bias += dpre_f;
        dg.cell.bias += dpre_g;
        dg.output.bias += dpre_o;

        dx[pos].noalias() += dp.input.w_in * dpre_i + dp.forget.w_in * dpre_f +
                             dp.cell.w_in * dpre_g + dp.output.w_in * dpre_o;
        dh_carry = dp.input.w_rec * dpre_i + dp.forget.w_rec * dpre_f + dp.cell.w_rec * dpre_g +
                   dp.output.w_rec * dpre_o;
        dc_carry = dc_total.cwiseProduct(st.f);
    }
}

}  // namespace

ModelParams backward(const ForwardCache& cache, std::size_t target_index) {
    if (cache.params == nullptr || cache.mode != RunMode::train) {
        throw StaleCache("backward needs a cache from a train-mode forward");
    }
    if (cache.params->revision != cache.params_revision) {
        throw StaleCache("parameters changed since the forward pass");
    }
    const ModelConfig& config = cache.config;
    if (target_index >= config.output_vocab_size) {
        throw IndexOutOfVocab("target index outside the output vocabulary");
    }
    const ModelParams& params = *cache.params;
    ModelParams grads = zeros_like(config);

    const std::size_t T = cache.input.size();
    const std::size_t L = config.recurrent_layers;
    const Eigen::Index H = static_cast<Eigen::Index>(config.hidden_per_direction);

    // classifier
    Vector dlogits = cache.probs;
    dlogits[static_cast<Eigen::Index>(target_index)] -= 1.0;
    grads.out_weights.noalias() = cache.fc_dropped * dlogits.transpose();
    grads.out_bias = dlogits;
    Vector dfc_dropped = params.out_weights * dlogits;
    Vector dfc_relu = dfc_dropped.cwiseProduct(cache.fc_mask);
    Vector dfc_pre =
        (dfc_relu.array() * (cache.fc_pre.array() > 0.0).cast<double>()).matrix();
    grads.fc_weights.noalias() = cache.summary_dropped * dfc_pre.transpose();
    grads.fc_bias = dfc_pre;
    if (config.weight_decay > 0.0) {
        grads.out_weights += config.weight_decay * params.out_weights;
        grads.fc_weights += config.weight_decay * params.fc_weights;
    }
    Vector dsummary_dropped = params.fc_weights * dfc_pre;
    Vector dsummary = dsummary_dropped.cwiseProduct(cache.summary_mask);

    // recurrent stack, top down
    std::vector<Vector> dinput;  // gradient w.r.t. the current layer's inputs
    for (std::size_t li = L; li-- > 0;) {
        const auto& lc = cache.layers[li];
        std::vector<Vector> dh_fwd(T, Vector::Zero(H));
        std::vector<Vector> dh_bwd(T, Vector::Zero(H));
        if (li == L - 1) {
            dh_fwd[T - 1] = dsummary.head(H);
            dh_bwd[0] = dsummary.tail(H);
        } else {
            for (std::size_t t = 0; t < T; ++t) {
                const Vector dout = dinput[t].cwiseProduct(lc.drop_masks[t]);
                dh_fwd[t] = dout.head(H);
                dh_bwd[t] = dout.tail(H);
            }
        }
        std::vector<Vector> dx(
            T, Vector::Zero(static_cast<Eigen::Index>(config.layer_input(li))));
        backward_direction(params.layers[li].fwd, grads.layers[li].fwd, lc.fwd, lc.inputs, dh_fwd,
                           false, dx);
        backward_direction(params.layers[li].bwd, grads.layers[li].bwd, lc.bwd, lc.inputs, dh_bwd,
                           true, dx);
        dinput = std::move(dx);
    }

    for (std::size_t t = 0; t < T; ++t) {
        grads.embedding.row(static_cast<Eigen::Index>(cache.input[t])) += dinput[t].transpose();
    }
    return grads;
}

DropoutMasks masks_from_cache(const ForwardCache& cache) {
    if (cache.mode != RunMode::train) {
        throw StaleCache("dropout masks exist only in train-mode caches");
    }
    DropoutMasks masks;
    masks.recurrent.resize(cache.layers.size());
    for (std::size_t l = 0; l + 1 < cache.layers.size(); ++l) {
        masks.recurrent[l] = cache.layers[l].drop_masks;
    }
    masks.recurrent.back() = {cache.summary_mask};
    masks.fc = cache.fc_mask;
    return masks;
}

AdamState init_adam(const ModelConfig& config) {
    return AdamState{zeros_like(config), zeros_like(config), 0};
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               double learning_rate, double beta1, double beta2, double epsilon) {
    auto pt = params.tensors();
    auto gt = grads.tensors();
    auto mt = state.m.tensors();
    auto vt = state.v.tensors();
    if (pt.size() != gt.size() || pt.size() != mt.size() || pt.size() != vt.size()) {
        throw ShapeMismatch("parameter/gradient/moment tensor counts differ");
    }
    for (std::size_t k = 0; k < pt.size(); ++k) {
        if (pt[k].rows != gt[k].rows || pt[k].cols != gt[k].cols || pt[k].rows != mt[k].rows ||
            pt[k].cols != mt[k].cols || pt[k].rows != vt[k].rows || pt[k].cols != vt[k].cols) {
            throw ShapeMismatch("tensor '" + pt[k].name + "' shape mismatch");
        }
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    for (std::size_t k = 0; k < pt.size(); ++k) {
        Eigen::Map<Eigen::ArrayXd> p(pt[k].data, pt[k].size());
        Eigen::Map<const Eigen::ArrayXd> g(gt[k].data, gt[k].size());
        Eigen::Map<Eigen::ArrayXd> m(mt[k].data, mt[k].size());
        Eigen::Map<Eigen::ArrayXd> v(vt[k].data, vt[k].size());
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g.square();
        p -= learning_rate * (m / bc1) / ((v / bc2).sqrt() + epsilon);
    }
    params.revision += 1;
}

Prediction predict(const ModelParams& params, const ModelConfig& config,
                   std::span<const std::size_t> input) {
    Prediction out;
    out.probabilities = forward(params, config, input, RunMode::infer);
    out.index = 0;
    for (Eigen::Index k = 1; k < out.probabilities.size(); ++k) {
        if (out.probabilities[k] > out.probabilities[static_cast<Eigen::Index>(out.index)]) {
            out.index = static_cast<std::size_t>(k);
        }
    }
    return out;
}

namespace {

constexpr char kMagic[4] = {'M', 'T', 'A', 'G'};

struct HashingWriter {
    std::ostream& out;
    Fnv1a64 hash;

    void bytes(const void* p, std::size_t n) {
        out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        hash.update(p, n);
    }
    void u16(std::uint16_t v) {
        unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>(v >> 8)};
        bytes(b, 2);
    }
    void u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) {
            b[i] = static_cast<unsigned char>(v >> (8 * i));
        }
        bytes(b, 8);
    }
    void f64(double d) {
        std::uint64_t v;
        static_assert(sizeof(v) == sizeof(d));
        std::memcpy(&v, &d, sizeof(v));
        u64(v);
    }
};

struct HashingReader {
    std::istream& in;
    Fnv1a64 hash;

    void bytes(void* p, std::size_t n) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n) {
            throw ChecksumFailure("truncated model container");
        }
        hash.update(p, n);
    }
    std::uint16_t u16() {
        unsigned char b[2];
        bytes(b, 2);
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }
    std::uint64_t u64() {
        unsigned char b[8];
        bytes(b, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        }
        return v;
    }
    double f64() {
        std::uint64_t v = u64();
        double d;
        std::memcpy(&d, &v, sizeof(d));
        return d;
    }
    std::uint64_t raw_u64() {  // not folded into the running hash
        unsigned char b[8];
        in.read(reinterpret_cast<char*>(b), 8);
        if (in.gcount() != 8) {
            throw ChecksumFailure("truncated model container");
        }
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        }
        return v;
    }
};

}  // namespace

void save_model(std::ostream& out, const ModelParams& params, const ModelConfig& config,
                std::uint64_t input_vocab_fingerprint, std::uint64_t output_vocab_fingerprint) {
    config.validate();
    auto ct = params.tensors();
    for (const auto& t : ct) {
        for (Eigen::Index k = 0; k < t.size(); ++k) {
            if (!std::isfinite(t.data[k])) {
                throw Error("non-finite value in tensor '" + t.name + "'");
            }
        }
    }
    HashingWriter w{out, {}};
    w.bytes(kMagic, 4);
    w.u16(kModelFormatVersion);
    w.u64(config.input_vocab_size);
    w.u64(config.output_vocab_size);
    w.u64(config.embedding_dim);
    w.u64(config.recurrent_layers);
    w.u64(config.hidden_per_direction);
    w.u64(config.fc_units);
    w.f64(config.dropout_recurrent);
    w.f64(config.dropout_fc);
    w.f64(config.weight_decay);
    w.u64(config.seed);
    w.u64(input_vocab_fingerprint);
    w.u64(output_vocab_fingerprint);
    w.u64(ct.size());
    for (const auto& t : ct) {
        w.u64(static_cast<std::uint64_t>(t.rows));
        w.u64(static_cast<std::uint64_t>(t.cols));
        for (Eigen::Index k = 0; k < t.size(); ++k) {
            w.f64(t.data[k]);
        }
    }
    // trailing checksum, itself unhashed
    const std::uint64_t checksum = w.hash.value;
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<unsigned char>(checksum >> (8 * i));
    }
    out.write(reinterpret_cast<const char*>(b), 8);
    if (!out) {
        throw IoError("failed writing model container");
    }
}

ModelFile load_model(std::istream& in) {
    HashingReader r{in, {}};
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw BadMagic("not a model container");
    }
    const std::uint16_t version = r.u16();
    if (version != kModelFormatVersion) {
        throw VersionMismatch("unsupported container version " + std::to_string(version));
    }
    ModelFile file;
    file.config.input_vocab_size = r.u64();
    file.config.output_vocab_size = r.u64();
    file.config.embedding_dim = r.u64();
    file.config.recurrent_layers = r.u64();
    file.config.hidden_per_direction = r.u64();
    file.config.fc_units = r.u64();
    file.config.dropout_recurrent = r.f64();
    file.config.dropout_fc = r.f64();
    file.config.weight_decay = r.f64();
    file.config.seed = r.u64();
    try {
        file.config.validate();
    } catch (const Error&) {
        throw ChecksumFailure("corrupt config block");
    }
    file.input_vocab_fingerprint = r.u64();
    file.output_vocab_fingerprint = r.u64();

    file.params = zeros_like(file.config);
    auto tensors = file.params.tensors();
    if (r.u64() != tensors.size()) {
        throw ChecksumFailure("unexpected tensor count");
    }
    for (auto& t : tensors) {
        const auto rows = static_cast<Eigen::Index>(r.u64());
        const auto cols = static_cast<Eigen::Index>(r.u64());
        if (rows != t.rows || cols != t.cols) {
            throw ChecksumFailure("tensor '" + t.name + "' shape does not match the config");
        }
        for (Eigen::Index k = 0; k < t.size(); ++k) {
            t.data[k] = r.f64();
        }
    }
    const std::uint64_t computed = r.hash.value;
    const std::uint64_t stored = r.raw_u64();
    if (computed != stored) {
        throw ChecksumFailure("container checksum mismatch");
    }
    return file;
}

void require_vocab_match(const ModelFile& file, std::uint64_t input_vocab_fingerprint,
                         std::uint64_t output_vocab_fingerprint) {
    if (file.input_vocab_fingerprint != input_vocab_fingerprint ||
        file.output_vocab_fingerprint != output_vocab_fingerprint) {
        throw VocabMismatch("model was trained against different vocabularies");
    }
}

GradCheckResult gradient_check(const ModelConfig& config, std::span<const std::size_t> input,
                               std::size_t target, std::uint64_t seed, double fd_epsilon) {
    ModelParams params = init_params(config);
    Rng dropout_rng(derive_seed(seed, 1));
    ForwardCache cache;
    forward(params, config, input, RunMode::train, &dropout_rng, &cache);
    const ModelParams analytic = backward(cache, target);
    const DropoutMasks masks = masks_from_cache(cache);

    GradCheckResult result;
    auto pt = params.tensors();
    auto gt = analytic.tensors();
    for (std::size_t k = 0; k < pt.size(); ++k) {
        for (Eigen::Index e = 0; e < pt[k].size(); ++e) {
            const double original = pt[k].data[e];
            pt[k].data[e] = original + fd_epsilon;
            const double up = loss(
                forward(params, config, input, RunMode::train, nullptr, nullptr, &masks), target,
                params, config);
            pt[k].data[e] = original - fd_epsilon;
            const double down = loss(
                forward(params, config, input, RunMode::train, nullptr, nullptr, &masks), target,
                params, config);
            pt[k].data[e] = original;
            const double numeric = (up - down) / (2.0 * fd_epsilon);
            const double a = gt[k].data[e];
            const double rel =
                std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-3);
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_tensor = pt[k].name;
                result.worst_index = e;
                result.analytic = a;
                result.numeric = numeric;
            }
        }
    }
    return result;
}

std::vector<GradCheckResult> gradcheck_suite(std::size_t n_configs, std::uint64_t seed,
                                             double fd_epsilon) {
    std::vector<GradCheckResult> results;
    results.reserve(n_configs);
    for (std::size_t i = 0; i < n_configs; ++i) {
        Rng rng(derive_seed(seed, 1000 + i));
        ModelConfig config;
        config.input_vocab_size = 5 + rng.below(6);
        config.output_vocab_size = 3 + rng.below(5);
        config.embedding_dim = 2 + rng.below(3);
        config.recurrent_layers = 1 + rng.below(2);
        config.hidden_per_direction = 2 + rng.below(4);
        config.fc_units = 2 + rng.below(5);
        config.dropout_recurrent = rng.below(2) == 0 ? 0.0 : 0.2;
        config.dropout_fc = rng.below(2) == 0 ? 0.0 : 0.5;
        config.weight_decay = rng.below(2) == 0 ? 0.0 : 0.0005;
        config.seed = derive_seed(seed, 2000 + i);

        const std::size_t T = 1 + rng.below(8);
        std::vector<std::size_t> input(T);
        for (auto& idx : input) {
            idx = rng.below(config.input_vocab_size);
        }
        input[rng.below(T)] = 0;  // the mask slot
        const std::size_t target = rng.below(config.output_vocab_size);
        results.push_back(
            gradient_check(config, input, target, derive_seed(seed, 3000 + i), fd_epsilon));
    }
    return results;
}

}  // namespace mtag
