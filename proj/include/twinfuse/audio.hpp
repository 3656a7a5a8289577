#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "twinfuse/matrix.hpp"

namespace twinfuse {

struct Signal {
    std::vector<double> samples; // in [-1, 1)
    double sample_rate = 0.0;
};

struct MfccConfig {
    double pre_emphasis_alpha = 0.97;
    double frame_len_ms = 25.0;
    double hop_ms = 10.0;
    std::size_t fft_size = 512;
    std::size_t n_mel_filters = 26;
    std::size_t n_coefficients = 13;
    double fmin_hz = 0.0;
    double fmax_hz = 0.0; // 0 means sample_rate / 2
    double log_floor = 1e-10;

    double effective_fmax(double sample_rate) const {
        return fmax_hz > 0.0 ? fmax_hz : sample_rate / 2.0;
    }
    std::size_t frame_samples(double sample_rate) const;
    std::size_t hop_samples(double sample_rate) const;
    void validate(double sample_rate) const; // throws std::invalid_argument
};

// Time-ordered MFCC frames, n_frames x n_coefficients.
struct FeatureSequence {
    Matrix frames;
    MfccConfig config;

    std::size_t n_frames() const { return frames.rows(); }
    std::size_t dim() const { return frames.cols(); }
};

// RIFF PCM 16-bit mono only; samples scaled by 1/32768.
Signal read_wav(const std::filesystem::path& path);
void write_wav16(const Signal& sig, const std::filesystem::path& path);

Signal pre_emphasis(const Signal& x, double alpha);

// w[k] = 0.54 - 0.46 cos(2 pi k / (n-1)), n >= 2
std::vector<double> hamming_window(std::size_t n);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filters, n_mel_filters x (fft_size/2 + 1), centers equally
// spaced on the mel scale.
Matrix mel_filterbank(const MfccConfig& cfg, double sample_rate);

// In-place radix-2 Cooley-Tukey; size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a);

// Orthonormal DCT-II, first n_out coefficients.
std::vector<double> dct2_orthonormal(const std::vector<double>& x, std::size_t n_out);

// pre-emphasis -> framing -> hamming -> |FFT|^2 -> mel -> log -> DCT-II
FeatureSequence mfcc(const Signal& x, const MfccConfig& cfg);

// Feature dump: one row per frame, comma-separated coefficients, no header.
void write_feature_csv(const FeatureSequence& fs, const std::filesystem::path& path);
Matrix read_feature_csv(const std::filesystem::path& path);

} // namespace twinfuse
