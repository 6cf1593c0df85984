#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "digitriad/errors.hpp"
#include "digitriad/tensor.hpp"

namespace digitriad {

// IDX container, bit-exact: big-endian u32 magic (0x00000803 images,
// 0x00000801 labels), big-endian u32 dimension sizes, unsigned-byte payload.

constexpr std::uint32_t kIdxImagesMagic = 0x00000803u;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801u;

struct IdxImages {
    index_t count = 0;
    index_t rows = 0;
    index_t cols = 0;
    std::vector<std::uint8_t> pixels;  // count*rows*cols, row-major
};

namespace detail {

inline std::uint32_t read_be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

inline void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(std::uint8_t(v >> 24));
    out.push_back(std::uint8_t(v >> 16));
    out.push_back(std::uint8_t(v >> 8));
    out.push_back(std::uint8_t(v));
}

}  // namespace detail

inline IdxImages parse_idx_images(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 16) throw format_error("image stream shorter than IDX header");
    const std::uint32_t magic = detail::read_be32(bytes.data());
    if (magic != kIdxImagesMagic) {
        throw format_error("bad image magic " + std::to_string(magic));
    }
    IdxImages idx;
    idx.count = detail::read_be32(bytes.data() + 4);
    idx.rows = detail::read_be32(bytes.data() + 8);
    idx.cols = detail::read_be32(bytes.data() + 12);
    const std::size_t expected = 16 + std::size_t(idx.count) * std::size_t(idx.rows) * std::size_t(idx.cols);
    if (bytes.size() != expected) {
        throw format_error("image payload length " + std::to_string(bytes.size()) + " != expected " +
                           std::to_string(expected));
    }
    idx.pixels.assign(bytes.begin() + 16, bytes.end());
    return idx;
}

inline std::vector<std::uint8_t> parse_idx_labels(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8) throw format_error("label stream shorter than IDX header");
    const std::uint32_t magic = detail::read_be32(bytes.data());
    if (magic != kIdxLabelsMagic) {
        throw format_error("bad label magic " + std::to_string(magic));
    }
    const std::size_t count = detail::read_be32(bytes.data() + 4);
    if (bytes.size() != 8 + count) {
        throw format_error("label payload length " + std::to_string(bytes.size() - 8) + " != declared " +
                           std::to_string(count));
    }
    std::vector<std::uint8_t> labels(bytes.begin() + 8, bytes.end());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] > 9) {
            throw format_error("label " + std::to_string(int(labels[i])) + " at index " + std::to_string(i) +
                               " outside 0..9");
        }
    }
    return labels;
}

inline std::vector<std::uint8_t> serialize_idx_images(const IdxImages& idx) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + idx.pixels.size());
    detail::write_be32(out, kIdxImagesMagic);
    detail::write_be32(out, std::uint32_t(idx.count));
    detail::write_be32(out, std::uint32_t(idx.rows));
    detail::write_be32(out, std::uint32_t(idx.cols));
    out.insert(out.end(), idx.pixels.begin(), idx.pixels.end());
    return out;
}

inline std::vector<std::uint8_t> serialize_idx_labels(const std::vector<std::uint8_t>& labels) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + labels.size());
    detail::write_be32(out, kIdxLabelsMagic);
    detail::write_be32(out, std::uint32_t(labels.size()));
    out.insert(out.end(), labels.begin(), labels.end());
    return out;
}

// Raw pixel tensor [n,rows,cols,1] with integer values 0..255.
template <class T>
Tensor<T> idx_to_tensor(const IdxImages& idx) {
    Tensor<T> t{Shape{idx.count, idx.rows, idx.cols, 1}};
    T* out = t.data();
    for (std::size_t i = 0; i < idx.pixels.size(); ++i) out[i] = static_cast<T>(idx.pixels[i]);
    return t;
}

inline std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in) {
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw io_error("inflateInit2 failed");
    std::vector<std::uint8_t> out;
    out.reserve(in.size() * 4);
    std::uint8_t buf[1 << 16];
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    int rc = Z_OK;
    do {
        zs.next_out = buf;
        zs.avail_out = sizeof(buf);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw format_error("gzip stream corrupt (zlib rc " + std::to_string(rc) + ")");
        }
        out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
    } while (rc != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return bytes;
}

// Reads a file that may be gzip-compressed, sniffing the 2-byte gzip magic.
inline std::vector<std::uint8_t> read_maybe_gzip(const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes = read_file(path);
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) {
        return gunzip(bytes);
    }
    return bytes;
}

template <class T>
Tensor<T> load_idx_images(const std::vector<std::uint8_t>& bytes) {
    return idx_to_tensor<T>(parse_idx_images(bytes));
}

inline std::vector<int> load_idx_labels(const std::vector<std::uint8_t>& bytes) {
    std::vector<std::uint8_t> raw = parse_idx_labels(bytes);
    return std::vector<int>(raw.begin(), raw.end());
}

}  // namespace digitriad
