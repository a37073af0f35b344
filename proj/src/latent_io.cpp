#include "infedit/latent_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace infedit {
namespace {

constexpr char kMagic[4] = {'D', 'L', 'T', '1'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kDtypeFloat64 = 1;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error("latent file '" + path + "': " + what);
}

void append_u32_le(std::string& out, std::uint32_t value) {
    for (int shift = 0; shift < 32; shift += 8) {
        out.push_back(static_cast<char>((value >> shift) & 0xffu));
    }
}

void append_f64_le(std::string& out, double value) {
    std::uint64_t bits = 0;
    static_assert(sizeof(bits) == sizeof(value));
    std::memcpy(&bits, &value, sizeof(bits));
    for (int shift = 0; shift < 64; shift += 8) {
        out.push_back(static_cast<char>((bits >> shift) & 0xffu));
    }
}

std::uint32_t load_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

double load_f64_le(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) {
        bits = (bits << 8) | static_cast<std::uint64_t>(p[i]);
    }
    double value = 0.0;
    std::memcpy(&value, &bits, sizeof(value));
    return value;
}

}  // namespace

Latent read_latent(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(path, "cannot open for reading");
    }
    std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (!in.good() && !in.eof()) {
        fail(path, "read error");
    }
    const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());
    const std::size_t size = raw.size();

    if (size < 4 || std::memcmp(raw.data(), kMagic, 4) != 0) {
        fail(path, "bad magic, expected \"DLT1\"");
    }
    if (size < 7) {
        fail(path, "truncated header");
    }
    const std::uint8_t version = bytes[4];
    if (version != kVersion) {
        std::ostringstream msg;
        msg << "unsupported version " << static_cast<int>(version) << ", expected "
            << static_cast<int>(kVersion);
        fail(path, msg.str());
    }
    const std::uint8_t dtype = bytes[5];
    if (dtype != kDtypeFloat64) {
        std::ostringstream msg;
        msg << "unsupported dtype code " << static_cast<int>(dtype) << ", expected "
            << static_cast<int>(kDtypeFloat64) << " (float64)";
        fail(path, msg.str());
    }
    const std::size_t ndim = bytes[6];
    if (ndim == 0) {
        fail(path, "ndim must be at least 1");
    }
    const std::size_t dims_end = 7 + 4 * ndim;
    if (size < dims_end) {
        fail(path, "truncated dimension list");
    }

    Shape shape(ndim);
    std::size_t numel = 1;
    for (std::size_t i = 0; i < ndim; ++i) {
        const std::uint32_t dim = load_u32_le(bytes + 7 + 4 * i);
        if (dim == 0) {
            fail(path, "zero-sized dimension");
        }
        shape[i] = dim;
        numel *= dim;
    }

    const std::size_t expected = dims_end + 8 * numel;
    if (size != expected) {
        std::ostringstream msg;
        msg << "payload size mismatch, expected " << expected << " bytes total but file has "
            << size;
        fail(path, msg.str());
    }

    Latent latent = Latent::zeros(shape);
    for (std::size_t i = 0; i < numel; ++i) {
        latent.data[i] = load_f64_le(bytes + dims_end + 8 * i);
    }
    return latent;
}

void write_latent(const std::string& path, const Latent& latent) {
    require_positive_shape(latent.shape, "write_latent");
    if (latent.data.size() != shape_numel(latent.shape)) {
        fail(path, "latent data size does not match its shape");
    }
    std::string out;
    out.reserve(7 + 4 * latent.shape.size() + 8 * latent.data.size());
    out.append(kMagic, 4);
    out.push_back(static_cast<char>(kVersion));
    out.push_back(static_cast<char>(kDtypeFloat64));
    if (latent.shape.size() > 255) {
        fail(path, "more than 255 dimensions");
    }
    out.push_back(static_cast<char>(latent.shape.size()));
    for (const std::size_t dim : latent.shape) {
        if (dim > 0xffffffffull) {
            fail(path, "dimension exceeds uint32 range");
        }
        append_u32_le(out, static_cast<std::uint32_t>(dim));
    }
    for (const double value : latent.data) {
        append_f64_le(out, value);
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) {
        fail(path, "cannot open for writing");
    }
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file.good()) {
        fail(path, "write error");
    }
}

}  // namespace infedit
