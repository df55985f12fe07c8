#include "flowtrack/imaging.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

namespace flowtrack {

namespace {

void check_dimensions(int width, int height, const char* who) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument(std::string(who) + ": dimensions must be positive");
}

// Reads the next header token, skipping whitespace and # comments.
std::string next_header_token(std::istream& in) {
    std::string token;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!token.empty()) break;
            continue;
        }
        token.push_back(static_cast<char>(c));
    }
    return token;
}

int parse_header_int(std::istream& in, const std::filesystem::path& path, const char* field) {
    const std::string token = next_header_token(in);
    if (token.empty())
        throw ParseError(path.string(), 0, std::string("missing ") + field + " in PGM header");
    try {
        std::size_t used = 0;
        const int value = std::stoi(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        return value;
    } catch (const std::exception&) {
        throw ParseError(path.string(), 0,
                         std::string("bad ") + field + " in PGM header: '" + token + "'");
    }
}

}  // namespace

GrayImage GrayImage::filled(int width, int height, std::uint8_t value) {
    check_dimensions(width, height, "GrayImage");
    return {width, height,
            std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, value)};
}

BinaryImage BinaryImage::filled(int width, int height, std::uint8_t value) {
    check_dimensions(width, height, "BinaryImage");
    return {width, height,
            std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, value)};
}

GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());

    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (in.gcount() != 2 || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '2'))
        throw ParseError(path.string(), 0, "not a PGM file (expected P5 or P2 magic)");
    const bool binary = magic[1] == '5';

    const int width = parse_header_int(in, path, "width");
    const int height = parse_header_int(in, path, "height");
    const int maxval = parse_header_int(in, path, "maxval");
    if (width <= 0 || height <= 0)
        throw ParseError(path.string(), 0, "non-positive PGM dimensions");
    if (maxval <= 0 || maxval > 255)
        throw ParseError(path.string(), 0, "PGM maxval out of range (want 1..255), got " +
                                               std::to_string(maxval));

    GrayImage img;
    img.width = width;
    img.height = height;
    const std::size_t count = static_cast<std::size_t>(width) * height;
    img.pixels.resize(count);

    if (binary) {
        // The single whitespace byte after maxval was consumed by the tokenizer.
        in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(count));
        if (static_cast<std::size_t>(in.gcount()) != count)
            throw ParseError(path.string(), 0, "truncated PGM payload");
    } else {
        for (std::size_t k = 0; k < count; ++k) {
            const std::string token = next_header_token(in);
            if (token.empty()) throw ParseError(path.string(), 0, "truncated PGM payload");
            int value = 0;
            try {
                std::size_t used = 0;
                value = std::stoi(token, &used);
                if (used != token.size()) throw std::invalid_argument(token);
            } catch (const std::exception&) {
                throw ParseError(path.string(), 0, "bad PGM sample '" + token + "'");
            }
            if (value < 0 || value > maxval)
                throw ParseError(path.string(), 0,
                                 "PGM sample " + std::to_string(value) + " exceeds maxval");
            img.pixels[k] = static_cast<std::uint8_t>(value);
        }
    }
    return img;
}

void write_pgm(const GrayImage& img, const std::filesystem::path& path, bool ascii) {
    check_dimensions(img.width, img.height, "write_pgm");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");

    out << (ascii ? "P2" : "P5") << "\n" << img.width << " " << img.height << "\n255\n";
    if (ascii) {
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                out << static_cast<int>(img.at(x, y)) << (x + 1 == img.width ? '\n' : ' ');
            }
        }
    } else {
        out.write(reinterpret_cast<const char*>(img.pixels.data()),
                  static_cast<std::streamsize>(img.pixels.size()));
    }
    if (!out) throw IoError("write failed for " + path.string());
}

GrayImage background_difference(const GrayImage& frame, const GrayImage& background) {
    if (frame.width != background.width || frame.height != background.height)
        throw std::invalid_argument("background_difference: dimension mismatch");
    GrayImage out;
    out.width = frame.width;
    out.height = frame.height;
    out.pixels.resize(frame.pixels.size());
    for (std::size_t k = 0; k < frame.pixels.size(); ++k) {
        const int d = static_cast<int>(frame.pixels[k]) - static_cast<int>(background.pixels[k]);
        out.pixels[k] = static_cast<std::uint8_t>(d < 0 ? -d : d);
    }
    return out;
}

BinaryImage binarize(const GrayImage& img, int threshold) {
    BinaryImage out;
    out.width = img.width;
    out.height = img.height;
    out.pixels.resize(img.pixels.size());
    for (std::size_t k = 0; k < img.pixels.size(); ++k)
        out.pixels[k] = img.pixels[k] >= threshold ? 1 : 0;
    return out;
}

namespace {

// Union-find over provisional labels.
std::int32_t uf_find(std::vector<std::int32_t>& parent, std::int32_t a) {
    while (parent[a] != a) {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    return a;
}

void uf_union(std::vector<std::int32_t>& parent, std::int32_t a, std::int32_t b) {
    a = uf_find(parent, a);
    b = uf_find(parent, b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
}

}  // namespace

std::vector<std::int32_t> label_components(const BinaryImage& img, Connectivity connectivity) {
    const int w = img.width;
    const int h = img.height;
    std::vector<std::int32_t> labels(img.pixels.size(), 0);
    std::vector<std::int32_t> parent(1, 0);  // parent[0] reserved for background

    const bool diag = connectivity == Connectivity::Eight;
    // First pass: provisional labels from already-visited neighbors.
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t k = static_cast<std::size_t>(y) * w + x;
            if (!img.pixels[k]) continue;

            std::int32_t neighbor = 0;
            auto consider = [&](int nx, int ny) {
                if (nx < 0 || ny < 0 || nx >= w) return;
                const std::int32_t lab = labels[static_cast<std::size_t>(ny) * w + nx];
                if (!lab) return;
                if (!neighbor)
                    neighbor = lab;
                else if (lab != neighbor)
                    uf_union(parent, neighbor, lab);
            };
            consider(x - 1, y);
            consider(x, y - 1);
            if (diag) {
                consider(x - 1, y - 1);
                consider(x + 1, y - 1);
            }

            if (neighbor) {
                labels[k] = neighbor;
            } else {
                const std::int32_t fresh = static_cast<std::int32_t>(parent.size());
                parent.push_back(fresh);
                labels[k] = fresh;
            }
        }
    }

    // Second pass: resolve and renumber by first row-major appearance.
    std::vector<std::int32_t> compact(parent.size(), 0);
    std::int32_t next_label = 0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (!labels[k]) continue;
        const std::int32_t root = uf_find(parent, labels[k]);
        if (!compact[root]) compact[root] = ++next_label;
        labels[k] = compact[root];
    }
    return labels;
}

std::vector<Blob> connected_components(const BinaryImage& img, Connectivity connectivity,
                                       int min_area) {
    const std::vector<std::int32_t> labels = label_components(img, connectivity);
    const std::int32_t n =
        labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());

    struct Accum {
        std::int64_t count = 0;
        double sum_x = 0, sum_y = 0;
        int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
    };
    std::vector<Accum> acc(static_cast<std::size_t>(n));
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const std::int32_t lab = labels[static_cast<std::size_t>(y) * img.width + x];
            if (!lab) continue;
            Accum& a = acc[static_cast<std::size_t>(lab - 1)];
            if (a.count == 0) {
                a.min_x = a.max_x = x;
                a.min_y = a.max_y = y;
            } else {
                a.min_x = std::min(a.min_x, x);
                a.min_y = std::min(a.min_y, y);
                a.max_x = std::max(a.max_x, x);
                a.max_y = std::max(a.max_y, y);
            }
            ++a.count;
            a.sum_x += x;
            a.sum_y += y;
        }
    }

    std::vector<Blob> blobs;
    blobs.reserve(acc.size());
    for (const Accum& a : acc) {
        if (a.count < min_area) continue;
        Blob b;
        b.pixel_count = a.count;
        b.centroid = {a.sum_x / static_cast<double>(a.count),
                      a.sum_y / static_cast<double>(a.count)};
        b.min_x = a.min_x;
        b.min_y = a.min_y;
        b.max_x = a.max_x;
        b.max_y = a.max_y;
        blobs.push_back(b);
    }
    // Labels are already in first-appearance order, so equal keys stay stable.
    std::stable_sort(blobs.begin(), blobs.end(), [](const Blob& a, const Blob& b) {
        return std::pair(a.min_y, a.min_x) < std::pair(b.min_y, b.min_x);
    });
    return blobs;
}

std::vector<DetectionSlice> detect_stack(std::span<const GrayImage> frames,
                                         const GrayImage& background, int threshold,
                                         Connectivity connectivity, int min_area) {
    std::vector<DetectionSlice> slices;
    slices.reserve(frames.size());
    for (std::size_t s = 0; s < frames.size(); ++s) {
        const GrayImage diff = background_difference(frames[s], background);
        const std::vector<Blob> blobs =
            connected_components(binarize(diff, threshold), connectivity, min_area);
        DetectionSlice slice;
        slice.index = static_cast<std::int64_t>(s);
        slice.points.reserve(blobs.size());
        for (const Blob& b : blobs) slice.points.push_back(b.centroid);
        slices.push_back(std::move(slice));
    }
    return slices;
}

GrayImage median_background(std::span<const GrayImage> frames) {
    if (frames.empty()) throw std::invalid_argument("median_background: no frames");
    for (const GrayImage& f : frames) {
        if (f.width != frames[0].width || f.height != frames[0].height)
            throw std::invalid_argument("median_background: dimension mismatch");
    }
    GrayImage out;
    out.width = frames[0].width;
    out.height = frames[0].height;
    out.pixels.resize(frames[0].pixels.size());
    std::vector<std::uint8_t> column(frames.size());
    for (std::size_t k = 0; k < out.pixels.size(); ++k) {
        for (std::size_t f = 0; f < frames.size(); ++f) column[f] = frames[f].pixels[k];
        const std::size_t mid = (column.size() - 1) / 2;
        std::nth_element(column.begin(), column.begin() + mid, column.end());
        out.pixels[k] = column[mid];
    }
    return out;
}

}  // namespace flowtrack
