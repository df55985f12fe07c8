#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "flowtrack/core.hpp"

namespace flowtrack {

/// 8-bit grayscale image, row-major. x = column, y = row, origin top-left.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    static GrayImage filled(int width, int height, std::uint8_t value);

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Row-major {0,1} mask.
struct BinaryImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    static BinaryImage filled(int width, int height, std::uint8_t value);

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

    friend bool operator==(const BinaryImage&, const BinaryImage&) = default;
};

/// Connected region of foreground pixels. The centroid is the arithmetic mean
/// of the member pixel coordinates, pixel centers at integer coordinates.
struct Blob {
    std::int64_t pixel_count = 0;
    Point centroid;
    int min_x = 0;
    int min_y = 0;
    int max_x = 0;
    int max_y = 0;
};

enum class Connectivity {
    Four = 4,
    Eight = 8,
};

/// Reads a P5 (binary) or P2 (ASCII) PGM file, maxval up to 255. Header
/// comments are tolerated. Throws ParseError on bad magic, truncated payload,
/// or maxval over 255.
GrayImage read_pgm(const std::filesystem::path& path);

/// Writes a PGM file with maxval 255; P5 by default, P2 when ascii is set.
void write_pgm(const GrayImage& img, const std::filesystem::path& path, bool ascii = false);

/// Per-pixel absolute difference |frame - background|. Dimensions must match.
GrayImage background_difference(const GrayImage& frame, const GrayImage& background);

/// pixel = 1 exactly when intensity >= threshold.
BinaryImage binarize(const GrayImage& img, int threshold);

/// Labels maximal connected regions of 1-pixels. Returns a row-major label
/// image: 0 for background, components numbered from 1 in order of first
/// (row-major) appearance.
std::vector<std::int32_t> label_components(const BinaryImage& img, Connectivity connectivity);

/// Extracts blobs from the labeling, discards those under min_area pixels,
/// and orders the survivors by (min_y, min_x) of their bounding boxes.
std::vector<Blob> connected_components(const BinaryImage& img, Connectivity connectivity,
                                       int min_area);

/// Full detection front-end: per frame, background difference, binarize,
/// connected components; blob centroids become that slice's points in blob
/// order. All frames must share the background's dimensions.
std::vector<DetectionSlice> detect_stack(std::span<const GrayImage> frames,
                                         const GrayImage& background, int threshold,
                                         Connectivity connectivity, int min_area);

/// Per-pixel median across frames; stand-in background when no empty frame
/// is available. Even counts take the lower middle value.
GrayImage median_background(std::span<const GrayImage> frames);

}  // namespace flowtrack
