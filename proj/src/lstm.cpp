#include "twinfuse/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace twinfuse {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw std::invalid_argument("softmax of empty vector");
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

LstmParams LstmParams::zeros(std::size_t hidden, std::size_t input) {
    LstmParams p;
    p.hidden_size = hidden;
    p.input_size = input;
    const std::size_t z = hidden + input;
    p.w_f = p.w_i = p.w_c = p.w_o = Matrix(hidden, z, 0.0);
    p.b_f = p.b_i = p.b_c = p.b_o = std::vector<double>(hidden, 0.0);
    return p;
}

LstmParams LstmParams::random_init(std::size_t hidden, std::size_t input, Rng& rng, double range) {
    LstmParams p = zeros(hidden, input);
    for (Matrix* w : {&p.w_f, &p.w_i, &p.w_c, &p.w_o})
        for (double& v : w->data()) v = rng.uniform(-range, range);
    for (std::vector<double>* b : {&p.b_f, &p.b_i, &p.b_c, &p.b_o})
        for (double& v : *b) v = rng.uniform(-range, range);
    return p;
}

namespace {

void check_dims(const LstmParams& p) {
    const std::size_t z = p.hidden_size + p.input_size;
    for (const Matrix* w : {&p.w_f, &p.w_i, &p.w_c, &p.w_o})
        if (w->rows() != p.hidden_size || w->cols() != z)
            throw std::invalid_argument("lstm weight shape mismatch");
    for (const std::vector<double>* b : {&p.b_f, &p.b_i, &p.b_c, &p.b_o})
        if (b->size() != p.hidden_size) throw std::invalid_argument("lstm bias shape mismatch");
}

// One step's activations, kept for the backward pass.
struct StepCache {
    std::vector<double> z;       // [h_{t-1}, x_t]
    std::vector<double> f, i, g, o; // gate outputs; g is the tanh candidate
    std::vector<double> c;       // new cell state
    std::vector<double> tanh_c;
    std::vector<double> c_prev;
};

void gate_preact(const Matrix& w, const std::vector<double>& b, const std::vector<double>& z,
                 std::vector<double>& out) {
    const std::size_t rows = w.rows(), cols = w.cols();
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = b[r];
        const auto row = w.row(r);
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * z[c];
        out[r] = acc;
    }
}

StepCache step_forward(std::span<const double> x, const LstmState& s, const LstmParams& p) {
    const std::size_t h = p.hidden_size;
    StepCache cache;
    cache.z.resize(h + p.input_size);
    std::copy(s.h.begin(), s.h.end(), cache.z.begin());
    std::copy(x.begin(), x.end(), cache.z.begin() + h);
    cache.c_prev = s.c;

    cache.f.resize(h);
    cache.i.resize(h);
    cache.g.resize(h);
    cache.o.resize(h);
    cache.c.resize(h);
    cache.tanh_c.resize(h);

    std::vector<double> pre(h);
    gate_preact(p.w_f, p.b_f, cache.z, pre);
    for (std::size_t k = 0; k < h; ++k) cache.f[k] = sigmoid(pre[k]);
    gate_preact(p.w_i, p.b_i, cache.z, pre);
    for (std::size_t k = 0; k < h; ++k) cache.i[k] = sigmoid(pre[k]);
    gate_preact(p.w_c, p.b_c, cache.z, pre);
    for (std::size_t k = 0; k < h; ++k) cache.g[k] = std::tanh(pre[k]);
    gate_preact(p.w_o, p.b_o, cache.z, pre);
    for (std::size_t k = 0; k < h; ++k) cache.o[k] = sigmoid(pre[k]);

    for (std::size_t k = 0; k < h; ++k) {
        cache.c[k] = cache.f[k] * s.c[k] + cache.i[k] * cache.g[k];
        cache.tanh_c[k] = std::tanh(cache.c[k]);
    }
    return cache;
}

LstmState state_of(const StepCache& cache) {
    LstmState s;
    s.c = cache.c;
    s.h.resize(cache.c.size());
    for (std::size_t k = 0; k < s.h.size(); ++k) s.h[k] = cache.o[k] * cache.tanh_c[k];
    return s;
}

// Gradient accumulators matching LstmParams + ClassifierHead.
struct Grads {
    Matrix w_f, w_i, w_c, w_o;
    std::vector<double> b_f, b_i, b_c, b_o;
    Matrix w_out;
    std::vector<double> b_out;

    static Grads zeros(const LstmParams& p, const ClassifierHead& head) {
        Grads g;
        const std::size_t z = p.hidden_size + p.input_size;
        g.w_f = g.w_i = g.w_c = g.w_o = Matrix(p.hidden_size, z, 0.0);
        g.b_f = g.b_i = g.b_c = g.b_o = std::vector<double>(p.hidden_size, 0.0);
        g.w_out = Matrix(head.w_out.rows(), head.w_out.cols(), 0.0);
        g.b_out = std::vector<double>(head.b_out.size(), 0.0);
        return g;
    }

    void scale(double s) {
        for (Matrix* m : {&w_f, &w_i, &w_c, &w_o, &w_out})
            for (double& v : m->data()) v *= s;
        for (std::vector<double>* b : {&b_f, &b_i, &b_c, &b_o, &b_out})
            for (double& v : *b) v *= s;
    }
};

// Forward with caches, then cross-entropy loss and full BPTT. Gradients are
// accumulated into `grads`; returns the loss.
double forward_backward(const LstmParams& p, const ClassifierHead& head, const Matrix& seq,
                        std::size_t label, Grads& grads) {
    const std::size_t h = p.hidden_size;
    const std::size_t steps = seq.rows();
    if (steps == 0) throw std::invalid_argument("empty sequence");
    if (seq.cols() != p.input_size) throw std::invalid_argument("sequence dimension mismatch");
    if (label >= head.classes.size()) throw std::invalid_argument("label out of range");

    std::vector<StepCache> caches;
    caches.reserve(steps);
    LstmState state = LstmState::zeros(h);
    for (std::size_t t = 0; t < steps; ++t) {
        caches.push_back(step_forward(seq.row(t), state, p));
        state = state_of(caches.back());
    }

    const std::size_t n_classes = head.classes.size();
    std::vector<double> logits(n_classes);
    for (std::size_t r = 0; r < n_classes; ++r) {
        double acc = head.b_out[r];
        for (std::size_t c = 0; c < h; ++c) acc += head.w_out(r, c) * state.h[c];
        logits[r] = acc;
    }
    const std::vector<double> probs = softmax(logits);
    const double loss = -std::log(std::max(probs[label], 1e-300));

    // head gradients and dL/dh_T
    std::vector<double> dh(h, 0.0), dc(h, 0.0);
    for (std::size_t r = 0; r < n_classes; ++r) {
        const double dlogit = probs[r] - (r == label ? 1.0 : 0.0);
        grads.b_out[r] += dlogit;
        for (std::size_t c = 0; c < h; ++c) {
            grads.w_out(r, c) += dlogit * state.h[c];
            dh[c] += dlogit * head.w_out(r, c);
        }
    }

    std::vector<double> dpre_f(h), dpre_i(h), dpre_c(h), dpre_o(h);
    for (std::size_t t = steps; t-- > 0;) {
        const StepCache& cc = caches[t];
        for (std::size_t k = 0; k < h; ++k) {
            const double do_ = dh[k] * cc.tanh_c[k];
            dpre_o[k] = do_ * cc.o[k] * (1.0 - cc.o[k]);
            const double dck = dc[k] + dh[k] * cc.o[k] * (1.0 - cc.tanh_c[k] * cc.tanh_c[k]);
            const double df = dck * cc.c_prev[k];
            dpre_f[k] = df * cc.f[k] * (1.0 - cc.f[k]);
            const double di = dck * cc.g[k];
            dpre_i[k] = di * cc.i[k] * (1.0 - cc.i[k]);
            const double dg = dck * cc.i[k];
            dpre_c[k] = dg * (1.0 - cc.g[k] * cc.g[k]);
            dc[k] = dck * cc.f[k];
        }

        const std::size_t zlen = cc.z.size();
        std::fill(dh.begin(), dh.end(), 0.0);
        struct GatePair { const std::vector<double>* dpre; Matrix* gw; std::vector<double>* gb; const Matrix* w; };
        const GatePair gates[] = {
            {&dpre_f, &grads.w_f, &grads.b_f, &p.w_f},
            {&dpre_i, &grads.w_i, &grads.b_i, &p.w_i},
            {&dpre_c, &grads.w_c, &grads.b_c, &p.w_c},
            {&dpre_o, &grads.w_o, &grads.b_o, &p.w_o},
        };
        for (const auto& gate : gates) {
            for (std::size_t r = 0; r < h; ++r) {
                const double d = (*gate.dpre)[r];
                (*gate.gb)[r] += d;
                auto grow = gate.gw->row(r);
                const auto wrow = gate.w->row(r);
                for (std::size_t c = 0; c < zlen; ++c) grow[c] += d * cc.z[c];
                for (std::size_t c = 0; c < h; ++c) dh[c] += d * wrow[c];
            }
        }
    }
    return loss;
}

} // namespace

LstmState cell_forward(std::span<const double> x, const LstmState& s, const LstmParams& p) {
    check_dims(p);
    if (x.size() != p.input_size) throw std::invalid_argument("input dimension mismatch");
    if (s.h.size() != p.hidden_size || s.c.size() != p.hidden_size)
        throw std::invalid_argument("state dimension mismatch");
    return state_of(step_forward(x, s, p));
}

LstmState sequence_forward(const Matrix& seq, const LstmParams& p) {
    check_dims(p);
    if (seq.rows() == 0) throw std::invalid_argument("empty sequence");
    if (seq.cols() != p.input_size) throw std::invalid_argument("sequence dimension mismatch");
    LstmState state = LstmState::zeros(p.hidden_size);
    for (std::size_t t = 0; t < seq.rows(); ++t)
        state = state_of(step_forward(seq.row(t), state, p));
    return state;
}

LstmState sequence_forward(const FeatureSequence& seq, const LstmParams& p) {
    return sequence_forward(seq.frames, p);
}

Matrix fit_sequence_length(const Matrix& frames, std::size_t max_frames) {
    if (max_frames == 0) throw std::invalid_argument("max_frames must be positive");
    if (frames.rows() == max_frames) return frames;
    Matrix out(max_frames, frames.cols(), 0.0);
    const std::size_t keep = std::min(frames.rows(), max_frames);
    for (std::size_t r = 0; r < keep; ++r)
        for (std::size_t c = 0; c < frames.cols(); ++c) out(r, c) = frames(r, c);
    return out;
}

double sequence_loss(const LstmParams& p, const ClassifierHead& head, const Matrix& seq,
                     std::size_t label) {
    const LstmState state = sequence_forward(seq, p);
    std::vector<double> logits(head.classes.size());
    for (std::size_t r = 0; r < logits.size(); ++r) {
        double acc = head.b_out[r];
        for (std::size_t c = 0; c < p.hidden_size; ++c) acc += head.w_out(r, c) * state.h[c];
        logits[r] = acc;
    }
    const std::vector<double> probs = softmax(logits);
    return -std::log(std::max(probs[label], 1e-300));
}

LstmModel train_classifier(const std::vector<LabeledSequence>& gallery, const LstmHyper& hyper) {
    if (gallery.empty()) throw std::invalid_argument("empty gallery");

    std::set<std::string> class_set;
    for (const auto& g : gallery) class_set.insert(g.subject);
    if (class_set.size() < 2) throw std::invalid_argument("need at least 2 classes");

    LstmModel model;
    model.hyper = hyper;
    model.head.classes.assign(class_set.begin(), class_set.end());

    std::map<std::string, std::size_t> class_index;
    for (std::size_t i = 0; i < model.head.classes.size(); ++i)
        class_index[model.head.classes[i]] = i;

    const std::size_t input_size = gallery.front().features.dim();
    for (const auto& g : gallery)
        if (g.features.dim() != input_size)
            throw std::invalid_argument("gallery sequences disagree on dimension");

    Rng rng(hyper.seed);
    model.params = LstmParams::random_init(hyper.hidden_size, input_size, rng);
    model.head.w_out = Matrix(model.head.classes.size(), hyper.hidden_size);
    model.head.b_out.assign(model.head.classes.size(), 0.0);
    for (double& v : model.head.w_out.data()) v = rng.uniform(-0.1, 0.1);
    for (double& v : model.head.b_out) v = rng.uniform(-0.1, 0.1);

    std::vector<Matrix> seqs;
    std::vector<std::size_t> labels;
    seqs.reserve(gallery.size());
    for (const auto& g : gallery) {
        seqs.push_back(fit_sequence_length(g.features.frames, hyper.max_frames));
        labels.push_back(class_index[g.subject]);
    }

    const double inv_n = 1.0 / static_cast<double>(seqs.size());
    model.loss_trace.reserve(hyper.epochs);
    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        Grads grads = Grads::zeros(model.params, model.head);
        double loss_sum = 0.0;
        for (std::size_t s = 0; s < seqs.size(); ++s)
            loss_sum += forward_backward(model.params, model.head, seqs[s], labels[s], grads);
        const double mean_loss = loss_sum * inv_n;
        if (!std::isfinite(mean_loss))
            throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch));
        model.loss_trace.push_back(mean_loss);

        grads.scale(inv_n);
        const double lr = hyper.learning_rate;
        auto apply = [lr](Matrix& w, const Matrix& g) {
            for (std::size_t i = 0; i < w.data().size(); ++i) w.data()[i] -= lr * g.data()[i];
        };
        auto apply_b = [lr](std::vector<double>& b, const std::vector<double>& g) {
            for (std::size_t i = 0; i < b.size(); ++i) b[i] -= lr * g[i];
        };
        apply(model.params.w_f, grads.w_f);
        apply(model.params.w_i, grads.w_i);
        apply(model.params.w_c, grads.w_c);
        apply(model.params.w_o, grads.w_o);
        apply_b(model.params.b_f, grads.b_f);
        apply_b(model.params.b_i, grads.b_i);
        apply_b(model.params.b_c, grads.b_c);
        apply_b(model.params.b_o, grads.b_o);
        apply(model.head.w_out, grads.w_out);
        apply_b(model.head.b_out, grads.b_out);
    }
    return model;
}

double gradient_check(const LstmParams& p, const ClassifierHead& head, const Matrix& seq,
                      std::size_t label, double step) {
    if (step <= 0.0) throw std::invalid_argument("step must be positive");

    Grads analytic = Grads::zeros(p, head);
    forward_backward(p, head, seq, label, analytic);

    LstmParams pw = p;
    ClassifierHead hw = head;

    double max_rel = 0.0;
    auto probe = [&](double& theta, double analytic_grad) {
        const double saved = theta;
        theta = saved + step;
        const double up = sequence_loss(pw, hw, seq, label);
        theta = saved - step;
        const double down = sequence_loss(pw, hw, seq, label);
        theta = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double rel = std::abs(analytic_grad - numeric)
            / std::max(1e-8, std::abs(analytic_grad) + std::abs(numeric));
        max_rel = std::max(max_rel, rel);
    };

    const std::pair<Matrix*, const Matrix*> mats[] = {
        {&pw.w_f, &analytic.w_f}, {&pw.w_i, &analytic.w_i}, {&pw.w_c, &analytic.w_c},
        {&pw.w_o, &analytic.w_o}, {&hw.w_out, &analytic.w_out},
    };
    for (const auto& [w, g] : mats)
        for (std::size_t i = 0; i < w->data().size(); ++i) probe(w->data()[i], g->data()[i]);

    const std::pair<std::vector<double>*, const std::vector<double>*> vecs[] = {
        {&pw.b_f, &analytic.b_f}, {&pw.b_i, &analytic.b_i}, {&pw.b_c, &analytic.b_c},
        {&pw.b_o, &analytic.b_o}, {&hw.b_out, &analytic.b_out},
    };
    for (const auto& [b, g] : vecs)
        for (std::size_t i = 0; i < b->size(); ++i) probe((*b)[i], (*g)[i]);

    return max_rel;
}

ScoreMatrix lstm_scores(const std::vector<LabeledSequence>& probes, const LstmModel& model) {
    if (probes.empty()) throw std::invalid_argument("empty probe set");
    if (model.head.classes.empty()) throw std::invalid_argument("untrained model");

    ScoreMatrix m;
    m.subject_ids = model.head.classes;
    m.values = Matrix(probes.size(), model.head.classes.size());
    for (const auto& p : probes) m.probe_ids.push_back(p.id);

    for (std::size_t pi = 0; pi < probes.size(); ++pi) {
        const Matrix seq = fit_sequence_length(probes[pi].features.frames, model.hyper.max_frames);
        const LstmState state = sequence_forward(seq, model.params);
        std::vector<double> logits(model.head.classes.size());
        for (std::size_t r = 0; r < logits.size(); ++r) {
            double acc = model.head.b_out[r];
            for (std::size_t c = 0; c < model.params.hidden_size; ++c)
                acc += model.head.w_out(r, c) * state.h[c];
            logits[r] = acc;
        }
        const std::vector<double> probs = softmax(logits);
        for (std::size_t c = 0; c < probs.size(); ++c) m.values(pi, c) = 1.0 - probs[c];
    }
    m.validate();
    return m;
}

namespace {

nlohmann::ordered_json matrix_to_json(const Matrix& m) {
    nlohmann::ordered_json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    j["data"] = m.data();
    return j;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != m.data().size()) throw std::runtime_error("model matrix size mismatch");
    m.data() = data;
    return m;
}

} // namespace

void save_model(const LstmModel& model, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["hidden_size"] = model.params.hidden_size;
    j["input_size"] = model.params.input_size;
    j["w_f"] = matrix_to_json(model.params.w_f);
    j["w_i"] = matrix_to_json(model.params.w_i);
    j["w_c"] = matrix_to_json(model.params.w_c);
    j["w_o"] = matrix_to_json(model.params.w_o);
    j["b_f"] = model.params.b_f;
    j["b_i"] = model.params.b_i;
    j["b_c"] = model.params.b_c;
    j["b_o"] = model.params.b_o;
    j["classes"] = model.head.classes;
    j["w_out"] = matrix_to_json(model.head.w_out);
    j["b_out"] = model.head.b_out;
    j["hyper"] = {{"hidden_size", model.hyper.hidden_size},
                  {"learning_rate", model.hyper.learning_rate},
                  {"epochs", model.hyper.epochs},
                  {"seed", model.hyper.seed},
                  {"max_frames", model.hyper.max_frames}};
    j["loss_trace"] = model.loss_trace;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model: " + path.string());
    out << j.dump(2) << "\n";
}

LstmModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model: " + path.string());
    nlohmann::json j;
    in >> j;

    LstmModel model;
    model.params.hidden_size = j.at("hidden_size").get<std::size_t>();
    model.params.input_size = j.at("input_size").get<std::size_t>();
    model.params.w_f = matrix_from_json(j.at("w_f"));
    model.params.w_i = matrix_from_json(j.at("w_i"));
    model.params.w_c = matrix_from_json(j.at("w_c"));
    model.params.w_o = matrix_from_json(j.at("w_o"));
    model.params.b_f = j.at("b_f").get<std::vector<double>>();
    model.params.b_i = j.at("b_i").get<std::vector<double>>();
    model.params.b_c = j.at("b_c").get<std::vector<double>>();
    model.params.b_o = j.at("b_o").get<std::vector<double>>();
    model.head.classes = j.at("classes").get<std::vector<std::string>>();
    model.head.w_out = matrix_from_json(j.at("w_out"));
    model.head.b_out = j.at("b_out").get<std::vector<double>>();
    const auto& h = j.at("hyper");
    model.hyper.hidden_size = h.at("hidden_size").get<std::size_t>();
    model.hyper.learning_rate = h.at("learning_rate").get<double>();
    model.hyper.epochs = h.at("epochs").get<std::size_t>();
    model.hyper.seed = h.at("seed").get<std::uint64_t>();
    model.hyper.max_frames = h.at("max_frames").get<std::size_t>();
    model.loss_trace = j.at("loss_trace").get<std::vector<double>>();
    check_dims(model.params);
    return model;
}

} // namespace twinfuse
