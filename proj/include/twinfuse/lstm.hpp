#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "twinfuse/labeled.hpp"
#include "twinfuse/matrix.hpp"
#include "twinfuse/rng.hpp"
#include "twinfuse/score_matrix.hpp"

namespace twinfuse {

// Gate weights over the concatenated [h_{t-1}, x_t], each hidden x (hidden+input).
struct LstmParams {
    std::size_t hidden_size = 0;
    std::size_t input_size = 0;
    Matrix w_f, w_i, w_c, w_o;
    std::vector<double> b_f, b_i, b_c, b_o;

    static LstmParams zeros(std::size_t hidden, std::size_t input);
    static LstmParams random_init(std::size_t hidden, std::size_t input, Rng& rng,
                                  double range = 0.1);
};

struct LstmState {
    std::vector<double> h;
    std::vector<double> c;

    static LstmState zeros(std::size_t hidden) { return {std::vector<double>(hidden, 0.0),
                                                         std::vector<double>(hidden, 0.0)}; }
};

// Softmax output layer over enrolled subjects.
struct ClassifierHead {
    Matrix w_out; // n_classes x hidden
    std::vector<double> b_out;
    std::vector<std::string> classes;
};

struct LstmHyper {
    std::size_t hidden_size = 32;
    double learning_rate = 0.05;
    std::size_t epochs = 200;
    std::uint64_t seed = 1;
    std::size_t max_frames = 100; // sequences are truncated / zero-padded to this
};

struct LstmModel {
    LstmParams params;
    ClassifierHead head;
    LstmHyper hyper;
    std::vector<double> loss_trace; // mean cross-entropy per epoch
};

double sigmoid(double x);
std::vector<double> softmax(std::span<const double> logits);

// f = sig(Wf.[h,x]+bf); i = sig(Wi.[h,x]+bi); c~ = tanh(Wc.[h,x]+bc);
// c' = f*c + i*c~; o = sig(Wo.[h,x]+bo); h' = o*tanh(c')
LstmState cell_forward(std::span<const double> x, const LstmState& s, const LstmParams& p);

// Fold cell_forward over the rows of seq from a zero initial state.
LstmState sequence_forward(const Matrix& seq, const LstmParams& p);
LstmState sequence_forward(const FeatureSequence& seq, const LstmParams& p);

// Truncate to max_frames rows or zero-pad up to them.
Matrix fit_sequence_length(const Matrix& frames, std::size_t max_frames);

// Cross-entropy of softmax(w_out . h_final + b_out) against the label.
double sequence_loss(const LstmParams& p, const ClassifierHead& head, const Matrix& seq,
                     std::size_t label);

// Full-batch gradient descent through time; deterministic given hyper.seed.
LstmModel train_classifier(const std::vector<LabeledSequence>& gallery, const LstmHyper& hyper);

// Max relative error between analytic gradients and central differences over
// every parameter of the cell and the head.
double gradient_check(const LstmParams& p, const ClassifierHead& head, const Matrix& seq,
                      std::size_t label, double step);

// matrix[probe][class] = 1 - softmax probability; lower-better orientation.
ScoreMatrix lstm_scores(const std::vector<LabeledSequence>& probes, const LstmModel& model);

void save_model(const LstmModel& model, const std::filesystem::path& path);
LstmModel load_model(const std::filesystem::path& path);

} // namespace twinfuse
