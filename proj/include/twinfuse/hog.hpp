#pragma once

#include <cstddef>
#include <filesystem>
#include <utility>
#include <vector>

#include "twinfuse/matrix.hpp"

namespace twinfuse {

// Grayscale image, pixels in [0,1], stored height x width.
struct GrayImage {
    Matrix pixels;

    std::size_t width() const { return pixels.cols(); }
    std::size_t height() const { return pixels.rows(); }
};

struct HogConfig {
    std::size_t cell_px = 8;
    std::size_t block_cells = 2;       // block is block_cells x block_cells cells
    std::size_t block_stride_px = 8;   // must be a multiple of cell_px
    std::size_t n_bins = 9;
    bool signed_orientation = false;   // false: fold to [0, 180)
    double epsilon = 1e-5;
    std::size_t resize_width = 64;     // 0 disables resizing at load
    std::size_t resize_height = 128;

    void validate() const; // throws std::invalid_argument
};

// Raw PGM parse (P5, maxval 255), bytes scaled by 1/255, no size check.
GrayImage parse_pgm(const std::filesystem::path& path);
void write_pgm(const GrayImage& img, const std::filesystem::path& path);

GrayImage resize_nearest(const GrayImage& img, std::size_t width, std::size_t height);

// parse_pgm + optional nearest-neighbor resize to cfg target; the result
// must be at least 3x3.
GrayImage load_image_gray(const std::filesystem::path& path, const HogConfig& cfg = {});

// Central differences [-1,0,1] with replicated borders. Returns
// (magnitude, orientation in degrees, folded to [0,180) when unsigned).
std::pair<Matrix, Matrix> gradient_maps(const GrayImage& img, bool signed_orientation = false);

// Magnitude-weighted cell histograms with linear interpolation between the
// two nearest orientation bins; blocks L2-normalized as v/sqrt(|v|^2+eps^2)
// and concatenated in row-major block order.
std::vector<double> hog_descriptor(const GrayImage& img, const HogConfig& cfg = {});

std::size_t hog_descriptor_length(std::size_t width, std::size_t height, const HogConfig& cfg);

} // namespace twinfuse
