#include "twinfuse/hog.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace twinfuse {

void HogConfig::validate() const {
    if (cell_px < 2) throw std::invalid_argument("cell_px must be >= 2");
    if (block_cells < 1) throw std::invalid_argument("block_cells must be >= 1");
    if (n_bins < 2) throw std::invalid_argument("n_bins must be >= 2");
    if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
    if (block_stride_px == 0 || block_stride_px % cell_px != 0)
        throw std::invalid_argument("block_stride_px must be a positive multiple of cell_px");
}

namespace {

// Skips whitespace and '#' comment lines, then reads one ASCII integer.
int read_pgm_int(std::istream& in) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF) throw std::runtime_error("truncated PGM header");
    int value = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any) throw std::runtime_error("malformed PGM header");
    return value;
}

} // namespace

GrayImage parse_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open image: " + path.string());

    char magic[2];
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5')
        throw std::runtime_error("not a P5 PGM: " + path.string());

    const int width = read_pgm_int(in);
    const int height = read_pgm_int(in);
    const int maxval = read_pgm_int(in);
    if (width < 1 || height < 1) throw std::runtime_error("bad PGM dimensions");
    if (maxval != 255) throw std::runtime_error("unsupported-maxval: PGM maxval must be 255");
    // read_pgm_int consumed the single whitespace after maxval

    std::vector<char> raw(static_cast<std::size_t>(width) * height);
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw std::runtime_error("truncated PGM payload: " + path.string());

    GrayImage img;
    img.pixels = Matrix(height, width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            img.pixels(y, x) = static_cast<unsigned char>(raw[y * width + x]) / 255.0;
    return img;
}

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write image: " + path.string());
    out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
    for (std::size_t y = 0; y < img.height(); ++y)
        for (std::size_t x = 0; x < img.width(); ++x) {
            const double v = std::clamp(img.pixels(y, x), 0.0, 1.0);
            out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
        }
}

GrayImage resize_nearest(const GrayImage& img, std::size_t width, std::size_t height) {
    if (width < 1 || height < 1) throw std::invalid_argument("resize target must be >= 1");
    GrayImage out;
    out.pixels = Matrix(height, width);
    for (std::size_t y = 0; y < height; ++y) {
        const std::size_t sy = std::min(img.height() - 1,
                                        static_cast<std::size_t>(y * img.height() / height));
        for (std::size_t x = 0; x < width; ++x) {
            const std::size_t sx = std::min(img.width() - 1,
                                            static_cast<std::size_t>(x * img.width() / width));
            out.pixels(y, x) = img.pixels(sy, sx);
        }
    }
    return out;
}

GrayImage load_image_gray(const std::filesystem::path& path, const HogConfig& cfg) {
    GrayImage img = parse_pgm(path);
    if (cfg.resize_width > 0 && cfg.resize_height > 0
        && (img.width() != cfg.resize_width || img.height() != cfg.resize_height))
        img = resize_nearest(img, cfg.resize_width, cfg.resize_height);
    if (img.width() < 3 || img.height() < 3)
        throw std::runtime_error("too-small: image must be at least 3x3");
    return img;
}

std::pair<Matrix, Matrix> gradient_maps(const GrayImage& img, bool signed_orientation) {
    const std::size_t w = img.width(), h = img.height();
    if (w < 3 || h < 3) throw std::invalid_argument("image must be at least 3x3");

    Matrix mag(h, w), ori(h, w);
    const double period = signed_orientation ? 360.0 : 180.0;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t xl = x == 0 ? 0 : x - 1;
            const std::size_t xr = x == w - 1 ? w - 1 : x + 1;
            const std::size_t yu = y == 0 ? 0 : y - 1;
            const std::size_t yd = y == h - 1 ? h - 1 : y + 1;
            const double gx = img.pixels(y, xr) - img.pixels(y, xl);
            const double gy = img.pixels(yd, x) - img.pixels(yu, x);
            mag(y, x) = std::sqrt(gx * gx + gy * gy);
            double deg = std::atan2(gy, gx) * 180.0 / M_PI;
            if (deg < 0.0) deg += period;
            if (deg >= period) deg -= period;
            ori(y, x) = deg;
        }
    }
    return {std::move(mag), std::move(ori)};
}

std::size_t hog_descriptor_length(std::size_t width, std::size_t height, const HogConfig& cfg) {
    cfg.validate();
    const std::size_t block_px = cfg.block_cells * cfg.cell_px;
    if (width < block_px || height < block_px) return 0;
    const std::size_t blocks_x = (width - block_px) / cfg.block_stride_px + 1;
    const std::size_t blocks_y = (height - block_px) / cfg.block_stride_px + 1;
    return blocks_x * blocks_y * cfg.block_cells * cfg.block_cells * cfg.n_bins;
}

std::vector<double> hog_descriptor(const GrayImage& img, const HogConfig& cfg) {
    cfg.validate();
    const std::size_t w = img.width(), h = img.height();
    const std::size_t block_px = cfg.block_cells * cfg.cell_px;
    if (w < block_px || h < block_px)
        throw std::invalid_argument("image smaller than one block");

    const auto [mag, ori] = gradient_maps(img, cfg.signed_orientation);

    const std::size_t cells_x = w / cfg.cell_px;
    const std::size_t cells_y = h / cfg.cell_px;
    const double period = cfg.signed_orientation ? 360.0 : 180.0;
    const double bin_width = period / static_cast<double>(cfg.n_bins);

    // Per-cell histograms; pixels beyond the last full cell are ignored.
    Matrix hist(cells_y * cells_x, cfg.n_bins, 0.0);
    for (std::size_t y = 0; y < cells_y * cfg.cell_px; ++y) {
        for (std::size_t x = 0; x < cells_x * cfg.cell_px; ++x) {
            const double m = mag(y, x);
            if (m == 0.0) continue;
            const std::size_t cell = (y / cfg.cell_px) * cells_x + (x / cfg.cell_px);
            // Split the vote between the two nearest bin centers (circular).
            const double pos = ori(y, x) / bin_width - 0.5;
            const double lo_f = std::floor(pos);
            const double frac = pos - lo_f;
            const long lo = static_cast<long>(lo_f);
            const std::size_t n = cfg.n_bins;
            const std::size_t b0 = static_cast<std::size_t>(((lo % static_cast<long>(n)) + n) % n);
            const std::size_t b1 = (b0 + 1) % n;
            hist(cell, b0) += m * (1.0 - frac);
            hist(cell, b1) += m * frac;
        }
    }

    const std::size_t stride_cells = cfg.block_stride_px / cfg.cell_px;
    const std::size_t blocks_x = (cells_x - cfg.block_cells) / stride_cells + 1;
    const std::size_t blocks_y = (cells_y - cfg.block_cells) / stride_cells + 1;
    const std::size_t block_len = cfg.block_cells * cfg.block_cells * cfg.n_bins;

    std::vector<double> descriptor;
    descriptor.reserve(blocks_x * blocks_y * block_len);
    std::vector<double> block(block_len);
    for (std::size_t by = 0; by < blocks_y; ++by) {
        for (std::size_t bx = 0; bx < blocks_x; ++bx) {
            std::size_t k = 0;
            for (std::size_t cy = 0; cy < cfg.block_cells; ++cy)
                for (std::size_t cx = 0; cx < cfg.block_cells; ++cx) {
                    const std::size_t cell =
                        (by * stride_cells + cy) * cells_x + (bx * stride_cells + cx);
                    for (std::size_t b = 0; b < cfg.n_bins; ++b) block[k++] = hist(cell, b);
                }
            double norm_sq = 0.0;
            for (double v : block) norm_sq += v * v;
            const double inv = 1.0 / std::sqrt(norm_sq + cfg.epsilon * cfg.epsilon);
            for (double v : block) descriptor.push_back(v * inv);
        }
    }
    return descriptor;
}

} // namespace twinfuse
