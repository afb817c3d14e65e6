#pragma once

// File formats: PGM (16-bit big-endian millimeters), PFM (32-bit float,
// scale sign = endianness), the RAW "DGBN" container (64-bit values plus
// mask bytes), PPM color images, the named-tensor container used for
// weights and precomputed features, and the error heatmap renderer.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "depthbin/types.hpp"
#include "json.hpp"

namespace depthbin {

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline bool is_little_endian() {
    const std::uint16_t probe = 1;
    return *reinterpret_cast<const std::uint8_t*>(&probe) == 1;
}

template <typename T>
inline T byteswap(T v) {
    std::array<std::uint8_t, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &v, sizeof(T));
    std::reverse(bytes.begin(), bytes.end());
    std::memcpy(&v, bytes.data(), sizeof(T));
    return v;
}

inline std::uint32_t read_u32_le(std::istream& in, const std::string& what) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), 4)) throw IoError("truncated-file: " + what);
    if (!is_little_endian()) v = byteswap(v);
    return v;
}

inline void write_u32_le(std::ostream& out, std::uint32_t v) {
    if (!is_little_endian()) v = byteswap(v);
    out.write(reinterpret_cast<const char*>(&v), 4);
}

inline std::uint64_t read_u64_le(std::istream& in, const std::string& what) {
    std::uint64_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), 8)) throw IoError("truncated-file: " + what);
    if (!is_little_endian()) v = byteswap(v);
    return v;
}

inline void write_u64_le(std::ostream& out, std::uint64_t v) {
    if (!is_little_endian()) v = byteswap(v);
    out.write(reinterpret_cast<const char*>(&v), 8);
}

// Netpbm header token reader; skips whitespace and '#' comments.
inline std::string next_pnm_token(std::istream& in) {
    std::string token;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!token.empty()) return token;
            continue;
        }
        token.push_back(static_cast<char>(c));
    }
    if (token.empty()) throw IoError("truncated-file: missing header token");
    return token;
}

inline long parse_long(const std::string& token, const std::string& what) {
    try {
        return std::stol(token);
    } catch (const std::exception&) {
        throw IoError("bad header value for " + what + ": " + token);
    }
}

inline double parse_double(const std::string& token, const std::string& what) {
    try {
        return std::stod(token);
    } catch (const std::exception&) {
        throw IoError("bad header value for " + what + ": " + token);
    }
}

inline int parse_dim(const std::string& token, const std::string& what) {
    const long v = parse_long(token, what);
    if (v < 1 || v > (1 << 20)) throw IoError("dimension-overflow: " + what + " = " + token);
    return static_cast<int>(v);
}

inline std::string extension_of(const std::string& path) {
    const std::size_t dot = path.rfind('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    return in;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// PGM: 16-bit big-endian, integer millimeters, /10 to centimeters on load.
// Value 0 marks an invalid pixel (the usual hole encoding of depth sensors).
// ---------------------------------------------------------------------------

inline DepthMap read_pgm_depth(const std::string& path) {
    std::ifstream in = detail::open_input(path);
    if (detail::next_pnm_token(in) != "P5") throw IoError("bad-magic: expected P5 in " + path);
    const int w = detail::parse_dim(detail::next_pnm_token(in), "width");
    const int h = detail::parse_dim(detail::next_pnm_token(in), "height");
    const long maxval = detail::parse_long(detail::next_pnm_token(in), "maxval");
    if (maxval != 65535) throw IoError("unsupported PGM maxval (expected 65535): " + path);
    Grid<double> values(h, w, 0.0);
    Grid<std::uint8_t> mask(h, w, 0);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * 2);
    for (int y = 0; y < h; ++y) {
        if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size())))
            throw IoError("truncated-file: " + path);
        for (int x = 0; x < w; ++x) {
            const std::uint16_t mm = static_cast<std::uint16_t>((row[2 * x] << 8) | row[2 * x + 1]);
            values.at(y, x) = mm / 10.0;
            mask.at(y, x) = mm > 0 ? 1 : 0;
        }
    }
    return DepthMap(std::move(values), std::move(mask));
}

inline void write_pgm_depth(const DepthMap& depth, const std::string& path) {
    std::ofstream out = detail::open_output(path);
    out << "P5\n" << depth.width() << " " << depth.height() << "\n65535\n";
    std::vector<std::uint8_t> row(static_cast<std::size_t>(depth.width()) * 2);
    for (int y = 0; y < depth.height(); ++y) {
        for (int x = 0; x < depth.width(); ++x) {
            const double mm = depth.valid(y, x) ? std::round(depth.value(y, x) * 10.0) : 0.0;
            const std::uint16_t q = static_cast<std::uint16_t>(std::clamp(mm, 0.0, 65535.0));
            row[2 * x] = static_cast<std::uint8_t>(q >> 8);
            row[2 * x + 1] = static_cast<std::uint8_t>(q & 0xff);
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// PFM: 32-bit float grayscale, rows stored bottom-up, negative scale field
// means little-endian. Values are centimeters; non-finite samples mark
// invalid pixels and are written back as NaN.
// ---------------------------------------------------------------------------

inline DepthMap read_pfm_depth(const std::string& path) {
    std::ifstream in = detail::open_input(path);
    const std::string magic = detail::next_pnm_token(in);
    if (magic != "Pf") throw IoError("bad-magic: expected Pf in " + path);
    const int w = detail::parse_dim(detail::next_pnm_token(in), "width");
    const int h = detail::parse_dim(detail::next_pnm_token(in), "height");
    const double scale = detail::parse_double(detail::next_pnm_token(in), "scale");
    const bool file_little = scale < 0.0;
    Grid<double> values(h, w, 0.0);
    Grid<std::uint8_t> mask(h, w, 0);
    std::vector<float> row(static_cast<std::size_t>(w));
    for (int yy = 0; yy < h; ++yy) {
        const int y = h - 1 - yy;  // bottom-up raster
        if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(w) * 4))
            throw IoError("truncated-file: " + path);
        for (int x = 0; x < w; ++x) {
            float f = row[x];
            if (file_little != detail::is_little_endian()) f = detail::byteswap(f);
            if (std::isfinite(f) && f >= 0.0f) {
                values.at(y, x) = static_cast<double>(f);
                mask.at(y, x) = 1;
            }
        }
    }
    return DepthMap(std::move(values), std::move(mask));
}

inline void write_pfm_depth(const DepthMap& depth, const std::string& path) {
    std::ofstream out = detail::open_output(path);
    out << "Pf\n" << depth.width() << " " << depth.height() << "\n-1.0\n";  // little-endian payload
    std::vector<float> row(static_cast<std::size_t>(depth.width()));
    for (int yy = depth.height() - 1; yy >= 0; --yy) {
        for (int x = 0; x < depth.width(); ++x) {
            float f = depth.valid(yy, x) ? static_cast<float>(depth.value(yy, x))
                                         : std::numeric_limits<float>::quiet_NaN();
            if (!detail::is_little_endian()) f = detail::byteswap(f);
            row[x] = f;
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size()) * 4);
    }
    if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// RAW "DGBN": magic, version u32, height u32, width u32 (little-endian),
// row-major f64 values, then row-major mask bytes. Lossless round-trip.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kRawVersion = 1;

inline DepthMap read_raw_depth(const std::string& path) {
    std::ifstream in = detail::open_input(path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "DGBN", 4) != 0)
        throw IoError("bad-magic: expected DGBN in " + path);
    const std::uint32_t version = detail::read_u32_le(in, path);
    if (version != kRawVersion) throw IoError("unsupported DGBN version in " + path);
    const std::uint32_t h = detail::read_u32_le(in, path);
    const std::uint32_t w = detail::read_u32_le(in, path);
    if (h < 1 || w < 1 || h > (1u << 20) || w > (1u << 20))
        throw IoError("dimension-overflow: " + path);
    const std::size_t count = static_cast<std::size_t>(h) * w;
    std::vector<double> values(count);
    if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * 8)))
        throw IoError("truncated-file: " + path);
    if (!detail::is_little_endian())
        for (double& v : values) v = detail::byteswap(v);
    std::vector<std::uint8_t> mask(count);
    if (!in.read(reinterpret_cast<char*>(mask.data()), static_cast<std::streamsize>(count)))
        throw IoError("truncated-file: " + path);
    for (std::uint8_t& b : mask) b = b ? 1 : 0;
    return DepthMap(Grid<double>(static_cast<int>(h), static_cast<int>(w), std::move(values)),
                    Grid<std::uint8_t>(static_cast<int>(h), static_cast<int>(w), std::move(mask)));
}

inline void write_raw_depth(const DepthMap& depth, const std::string& path) {
    std::ofstream out = detail::open_output(path);
    out.write("DGBN", 4);
    detail::write_u32_le(out, kRawVersion);
    detail::write_u32_le(out, static_cast<std::uint32_t>(depth.height()));
    detail::write_u32_le(out, static_cast<std::uint32_t>(depth.width()));
    if (detail::is_little_endian()) {
        out.write(reinterpret_cast<const char*>(depth.values().data()),
                  static_cast<std::streamsize>(depth.values().size() * 8));
    } else {
        for (std::size_t i = 0; i < depth.values().size(); ++i) {
            const double v = detail::byteswap(depth.values()[i]);
            out.write(reinterpret_cast<const char*>(&v), 8);
        }
    }
    out.write(reinterpret_cast<const char*>(depth.valid_mask().data()),
              static_cast<std::streamsize>(depth.valid_mask().size()));
    if (!out) throw IoError("write failed: " + path);
}

/// Dispatch by extension: .pgm, .pfm, or .raw/.dgbn.
inline DepthMap read_depth(const std::string& path) {
    const std::string ext = detail::extension_of(path);
    if (ext == "pgm") return read_pgm_depth(path);
    if (ext == "pfm") return read_pfm_depth(path);
    if (ext == "raw" || ext == "dgbn") return read_raw_depth(path);
    throw IoError("unknown-format: " + path);
}

inline void write_depth(const DepthMap& depth, const std::string& path) {
    const std::string ext = detail::extension_of(path);
    if (ext == "pgm") return write_pgm_depth(depth, path);
    if (ext == "pfm") return write_pfm_depth(depth, path);
    if (ext == "raw" || ext == "dgbn") return write_raw_depth(depth, path);
    throw IoError("unknown-format: " + path);
}

// ---------------------------------------------------------------------------
// PPM color images <-> 3-channel feature maps in [0, 1].
// ---------------------------------------------------------------------------

inline FeatureMap read_ppm_color(const std::string& path) {
    std::ifstream in = detail::open_input(path);
    if (detail::next_pnm_token(in) != "P6") throw IoError("bad-magic: expected P6 in " + path);
    const int w = detail::parse_dim(detail::next_pnm_token(in), "width");
    const int h = detail::parse_dim(detail::next_pnm_token(in), "height");
    const long maxval = detail::parse_long(detail::next_pnm_token(in), "maxval");
    if (maxval < 1 || maxval > 65535) throw IoError("unsupported PPM maxval: " + path);
    const int bytes_per_sample = maxval > 255 ? 2 : 1;
    Volume<double> rgb(3, h, w);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * 3 * bytes_per_sample);
    for (int y = 0; y < h; ++y) {
        if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size())))
            throw IoError("truncated-file: " + path);
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                const std::size_t base = (static_cast<std::size_t>(x) * 3 + c) * bytes_per_sample;
                const int v = bytes_per_sample == 2 ? (row[base] << 8) | row[base + 1] : row[base];
                rgb.at(c, y, x) = static_cast<double>(v) / static_cast<double>(maxval);
            }
        }
    }
    return FeatureMap(std::move(rgb));
}

inline void write_ppm_rgb(const Volume<std::uint8_t>& rgb, const std::string& path) {
    if (rgb.channels() != 3) throw IoError("PPM writer expects 3 channels");
    std::ofstream out = detail::open_output(path);
    out << "P6\n" << rgb.width() << " " << rgb.height() << "\n255\n";
    std::vector<std::uint8_t> row(static_cast<std::size_t>(rgb.width()) * 3);
    for (int y = 0; y < rgb.height(); ++y) {
        for (int x = 0; x < rgb.width(); ++x)
            for (int c = 0; c < 3; ++c) row[3 * x + c] = rgb.at(c, y, x);
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Error heatmap: |pred - gt| normalized by the 99th-percentile error,
// mapped through a fixed 256-entry blue-to-red colormap. Invalid pixels
// render black.
// ---------------------------------------------------------------------------

/// Fixed 256-entry blue -> red ramp (piecewise-linear jet), index in [0, 255].
inline std::array<std::uint8_t, 3> heat_color(int index) {
    const double t = std::clamp(index, 0, 255) / 255.0;
    const auto ramp = [](double v) {
        return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
    };
    return {ramp(1.5 - std::abs(4.0 * t - 3.0)), ramp(1.5 - std::abs(4.0 * t - 2.0)),
            ramp(1.5 - std::abs(4.0 * t - 1.0))};
}

inline void write_error_heatmap(const DepthMap& pred, const DepthMap& gt, const std::string& path) {
    if (!pred.same_shape(gt))
        throw ValidationFailure(ValidationError::shape_mismatch, "prediction and GT shapes differ");
    std::vector<double> errors;
    errors.reserve(pred.values().size());
    Grid<double> err(pred.height(), pred.width(), -1.0);  // -1 marks invalid
    for (int y = 0; y < pred.height(); ++y) {
        for (int x = 0; x < pred.width(); ++x) {
            if (!pred.valid(y, x) || !gt.valid(y, x)) continue;
            const double e = std::abs(pred.value(y, x) - gt.value(y, x));
            err.at(y, x) = e;
            errors.push_back(e);
        }
    }
    double p99 = 0.0;
    if (!errors.empty()) {
        std::sort(errors.begin(), errors.end());
        // Nearest-rank percentile: the ceil(0.99 * n)-th smallest error.
        const std::size_t rank =
            static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(errors.size()))) - 1;
        p99 = errors[std::min(rank, errors.size() - 1)];
    }
    Volume<std::uint8_t> rgb(3, pred.height(), pred.width(), 0);
    for (int y = 0; y < pred.height(); ++y) {
        for (int x = 0; x < pred.width(); ++x) {
            const double e = err.at(y, x);
            if (e < 0.0) continue;  // invalid: stays black
            int index = 0;
            if (e > 0.0)
                index = p99 > 0.0 ? static_cast<int>(std::lround(std::clamp(e / p99, 0.0, 1.0) * 255.0))
                                  : 255;  // everything above a zero percentile saturates
            const std::array<std::uint8_t, 3> c = heat_color(index);
            rgb.at(0, y, x) = c[0];
            rgb.at(1, y, x) = c[1];
            rgb.at(2, y, x) = c[2];
        }
    }
    write_ppm_rgb(rgb, path);
}

// ---------------------------------------------------------------------------
// Named-tensor container: magic "DBTC", version u32 LE, header length u64 LE,
// JSON header {"tensors": [{"name", "shape", "offset"}...]}, then a flat
// little-endian f64 payload. Offsets are element offsets into the payload.
// ---------------------------------------------------------------------------

struct NamedTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<double> data;
};

inline constexpr std::uint32_t kTensorContainerVersion = 1;

inline void write_tensor_container(const std::vector<NamedTensor>& tensors, const std::string& path) {
    nlohmann::json header;
    header["tensors"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const NamedTensor& t : tensors) {
        std::size_t expected = 1;
        for (int d : t.shape) {
            if (d < 0) throw IoError("negative tensor dimension for " + t.name);
            expected *= static_cast<std::size_t>(d);
        }
        if (expected != t.data.size()) throw IoError("tensor shape/data mismatch for " + t.name);
        header["tensors"].push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}});
        offset += t.data.size();
    }
    const std::string header_str = header.dump();
    std::ofstream out = detail::open_output(path);
    out.write("DBTC", 4);
    detail::write_u32_le(out, kTensorContainerVersion);
    detail::write_u64_le(out, header_str.size());
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    for (const NamedTensor& t : tensors) {
        if (detail::is_little_endian()) {
            out.write(reinterpret_cast<const char*>(t.data.data()),
                      static_cast<std::streamsize>(t.data.size() * 8));
        } else {
            for (double v : t.data) {
                const double swapped = detail::byteswap(v);
                out.write(reinterpret_cast<const char*>(&swapped), 8);
            }
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

inline std::vector<NamedTensor> read_tensor_container(const std::string& path) {
    std::ifstream in = detail::open_input(path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "DBTC", 4) != 0)
        throw IoError("bad-magic: expected DBTC in " + path);
    const std::uint32_t version = detail::read_u32_le(in, path);
    if (version != kTensorContainerVersion) throw IoError("unsupported DBTC version in " + path);
    const std::uint64_t header_len = detail::read_u64_le(in, path);
    if (header_len > (1u << 26)) throw IoError("dimension-overflow: header length in " + path);
    std::string header_str(header_len, '\0');
    if (!in.read(header_str.data(), static_cast<std::streamsize>(header_len)))
        throw IoError("truncated-file: " + path);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_str);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("bad container header: ") + e.what());
    }
    std::vector<NamedTensor> tensors;
    for (const auto& entry : header.at("tensors")) {
        NamedTensor t;
        t.name = entry.at("name").get<std::string>();
        t.shape = entry.at("shape").get<std::vector<int>>();
        std::size_t count = 1;
        for (int d : t.shape) count *= static_cast<std::size_t>(std::max(d, 0));
        t.data.resize(count);
        tensors.push_back(std::move(t));
    }
    for (NamedTensor& t : tensors) {
        if (!in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * 8)))
            throw IoError("truncated-file: " + path);
        if (!detail::is_little_endian())
            for (double& v : t.data) v = detail::byteswap(v);
    }
    return tensors;
}

}  // namespace depthbin
