#include "twinfuse/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace twinfuse {

std::size_t MfccConfig::frame_samples(double sample_rate) const {
    return static_cast<std::size_t>(std::lround(frame_len_ms * sample_rate / 1000.0));
}

std::size_t MfccConfig::hop_samples(double sample_rate) const {
    return static_cast<std::size_t>(std::lround(hop_ms * sample_rate / 1000.0));
}

void MfccConfig::validate(double sample_rate) const {
    if (sample_rate <= 0.0) throw std::invalid_argument("sample_rate must be positive");
    if (pre_emphasis_alpha < 0.0 || pre_emphasis_alpha >= 1.0)
        throw std::invalid_argument("pre_emphasis_alpha must be in [0,1)");
    if (hop_ms <= 0.0 || hop_ms > frame_len_ms)
        throw std::invalid_argument("hop must be positive and <= frame length");
    if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0)
        throw std::invalid_argument("fft_size must be a power of two");
    if (fft_size < frame_samples(sample_rate))
        throw std::invalid_argument("fft_size smaller than frame length");
    if (n_mel_filters < 1) throw std::invalid_argument("n_mel_filters must be >= 1");
    if (n_coefficients < 1 || n_coefficients > n_mel_filters)
        throw std::invalid_argument("n_coefficients must be in 1..n_mel_filters");
    const double fmax = effective_fmax(sample_rate);
    if (fmin_hz < 0.0 || fmin_hz >= fmax || fmax > sample_rate / 2.0)
        throw std::invalid_argument("need 0 <= fmin < fmax <= sample_rate/2");
    if (log_floor <= 0.0) throw std::invalid_argument("log_floor must be positive");
}

namespace {

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (b[1] << 8) | (b[2] << 16)
        | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16(std::istream& in) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

void write_u16(std::ostream& out, std::uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    out.write(b, 2);
}

} // namespace

Signal read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open wav: " + path.string());

    char tag[4];
    in.read(tag, 4);
    if (!in || std::memcmp(tag, "RIFF", 4) != 0)
        throw std::runtime_error("not a RIFF file: " + path.string());
    read_u32(in); // riff size
    in.read(tag, 4);
    if (!in || std::memcmp(tag, "WAVE", 4) != 0)
        throw std::runtime_error("not a WAVE file: " + path.string());

    Signal sig;
    bool have_fmt = false;
    std::uint16_t channels = 0, bits = 0;

    while (in.read(tag, 4)) {
        std::uint32_t chunk_size = read_u32(in);
        if (!in) throw std::runtime_error("truncated wav: " + path.string());
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (chunk_size < 16) throw std::runtime_error("malformed fmt chunk");
            const std::uint16_t format = read_u16(in);
            channels = read_u16(in);
            sig.sample_rate = read_u32(in);
            read_u32(in); // byte rate
            read_u16(in); // block align
            bits = read_u16(in);
            in.ignore(chunk_size - 16);
            if (format != 1) throw std::runtime_error("unsupported encoding (PCM only)");
            if (channels != 1) throw std::runtime_error("unsupported-channels: mono only");
            if (bits != 16) throw std::runtime_error("unsupported bit depth (16-bit only)");
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            if (!have_fmt) throw std::runtime_error("data chunk before fmt chunk");
            const std::size_t n = chunk_size / 2;
            sig.samples.resize(n);
            std::vector<char> raw(chunk_size);
            in.read(raw.data(), chunk_size);
            if (static_cast<std::uint32_t>(in.gcount()) != chunk_size)
                throw std::runtime_error("truncated wav data: " + path.string());
            for (std::size_t i = 0; i < n; ++i) {
                const std::int16_t s = static_cast<std::int16_t>(
                    static_cast<unsigned char>(raw[2 * i])
                    | (static_cast<unsigned char>(raw[2 * i + 1]) << 8));
                sig.samples[i] = s / 32768.0;
            }
            return sig;
        } else {
            in.ignore(chunk_size + (chunk_size & 1));
        }
    }
    throw std::runtime_error("no data chunk in wav: " + path.string());
}

void write_wav16(const Signal& sig, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write wav: " + path.string());

    const std::uint32_t sr = static_cast<std::uint32_t>(sig.sample_rate);
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(sig.samples.size() * 2);

    out.write("RIFF", 4);
    write_u32(out, 36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    write_u32(out, 16);
    write_u16(out, 1); // PCM
    write_u16(out, 1); // mono
    write_u32(out, sr);
    write_u32(out, sr * 2);
    write_u16(out, 2);
    write_u16(out, 16);
    out.write("data", 4);
    write_u32(out, data_bytes);
    for (double x : sig.samples) {
        long v = std::lround(x * 32768.0);
        v = std::clamp(v, -32768L, 32767L);
        write_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
    }
}

Signal pre_emphasis(const Signal& x, double alpha) {
    if (alpha < 0.0 || alpha >= 1.0) throw std::invalid_argument("alpha must be in [0,1)");
    Signal y;
    y.sample_rate = x.sample_rate;
    y.samples.resize(x.samples.size());
    if (x.samples.empty()) return y;
    y.samples[0] = x.samples[0];
    for (std::size_t n = 1; n < x.samples.size(); ++n)
        y.samples[n] = x.samples[n] - alpha * x.samples[n - 1];
    return y;
}

std::vector<double> hamming_window(std::size_t n) {
    if (n < 2) throw std::invalid_argument("hamming window needs n >= 2");
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k)
        w[k] = 0.54 - 0.46 * std::cos(2.0 * M_PI * k / static_cast<double>(n - 1));
    return w;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Matrix mel_filterbank(const MfccConfig& cfg, double sample_rate) {
    cfg.validate(sample_rate);
    const std::size_t n_bins = cfg.fft_size / 2 + 1;
    const double fmax = cfg.effective_fmax(sample_rate);

    // n_mel_filters + 2 edge points, equally spaced in mel.
    std::vector<double> edges_hz(cfg.n_mel_filters + 2);
    const double mel_lo = hz_to_mel(cfg.fmin_hz);
    const double mel_hi = hz_to_mel(fmax);
    for (std::size_t i = 0; i < edges_hz.size(); ++i)
        edges_hz[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg.n_mel_filters + 1.0));

    Matrix fb(cfg.n_mel_filters, n_bins, 0.0);
    for (std::size_t m = 0; m < cfg.n_mel_filters; ++m) {
        const double lo = edges_hz[m], mid = edges_hz[m + 1], hi = edges_hz[m + 2];
        for (std::size_t k = 0; k < n_bins; ++k) {
            const double f = k * sample_rate / static_cast<double>(cfg.fft_size);
            double w = 0.0;
            if (f > lo && f < mid) w = (f - lo) / (mid - lo);
            else if (f == mid) w = 1.0;
            else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
            fb(m, k) = w;
        }
    }
    return fb;
}

void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft size must be a nonzero power of two");

    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * M_PI / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

std::vector<double> dct2_orthonormal(const std::vector<double>& x, std::size_t n_out) {
    const std::size_t n = x.size();
    if (n == 0) throw std::invalid_argument("dct of empty vector");
    if (n_out > n) throw std::invalid_argument("n_out exceeds input length");
    std::vector<double> out(n_out, 0.0);
    for (std::size_t k = 0; k < n_out; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += x[i] * std::cos(M_PI * (2.0 * i + 1.0) * k / (2.0 * n));
        const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
        out[k] = scale * acc;
    }
    return out;
}

FeatureSequence mfcc(const Signal& x, const MfccConfig& cfg) {
    cfg.validate(x.sample_rate);
    const std::size_t frame = cfg.frame_samples(x.sample_rate);
    const std::size_t hop = cfg.hop_samples(x.sample_rate);
    if (x.samples.size() < frame)
        throw std::invalid_argument("signal shorter than one frame");

    const std::size_t n_frames = (x.samples.size() - frame) / hop + 1;
    const std::size_t n_bins = cfg.fft_size / 2 + 1;

    const Signal emphasized = pre_emphasis(x, cfg.pre_emphasis_alpha);
    const std::vector<double> window = hamming_window(frame);
    const Matrix fb = mel_filterbank(cfg, x.sample_rate);

    FeatureSequence fs;
    fs.config = cfg;
    fs.frames = Matrix(n_frames, cfg.n_coefficients, 0.0);

    std::vector<std::complex<double>> buf(cfg.fft_size);
    std::vector<double> power(n_bins), mel_log(cfg.n_mel_filters);

    for (std::size_t f = 0; f < n_frames; ++f) {
        const std::size_t start = f * hop;
        for (std::size_t i = 0; i < cfg.fft_size; ++i)
            buf[i] = i < frame ? emphasized.samples[start + i] * window[i] : 0.0;
        fft_radix2(buf);
        for (std::size_t k = 0; k < n_bins; ++k) power[k] = std::norm(buf[k]);

        for (std::size_t m = 0; m < cfg.n_mel_filters; ++m) {
            double e = 0.0;
            for (std::size_t k = 0; k < n_bins; ++k) e += fb(m, k) * power[k];
            mel_log[m] = std::log(std::max(e, cfg.log_floor));
        }
        const std::vector<double> coeffs = dct2_orthonormal(mel_log, cfg.n_coefficients);
        for (std::size_t c = 0; c < cfg.n_coefficients; ++c) fs.frames(f, c) = coeffs[c];
    }
    return fs;
}

void write_feature_csv(const FeatureSequence& fs, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write features: " + path.string());
    char cell[64];
    for (std::size_t r = 0; r < fs.frames.rows(); ++r) {
        for (std::size_t c = 0; c < fs.frames.cols(); ++c) {
            std::snprintf(cell, sizeof cell, "%.17g", fs.frames(r, c));
            out << (c ? "," : "") << cell;
        }
        out << "\n";
    }
}

Matrix read_feature_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read features: " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("ragged feature table: " + path.string());
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("empty feature table: " + path.string());
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    return m;
}

} // namespace twinfuse
