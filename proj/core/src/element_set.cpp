#include "sinbad/element_set.hpp"

#include "sinbad/io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <vector>

namespace sinbad {

namespace {

template <typename UInt>
void put_le(std::vector<char>& buf, UInt value) {
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
        buf.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
    }
}

template <typename UInt>
UInt get_le(const unsigned char* bytes) {
    UInt value = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
        value |= static_cast<UInt>(bytes[i]) << (8 * i);
    }
    return value;
}

}  // namespace

const char* to_string(ContainerFault fault) {
    switch (fault) {
        case ContainerFault::io: return "i/o error";
        case ContainerFault::bad_magic: return "bad magic";
        case ContainerFault::bad_version: return "unsupported version";
        case ContainerFault::bad_flags: return "unsupported flags";
        case ContainerFault::empty_shape: return "empty shape";
        case ContainerFault::truncated: return "truncated";
        case ContainerFault::length_mismatch: return "payload length mismatch";
        case ContainerFault::non_finite: return "non-finite value";
    }
    return "unknown container fault";
}

void validate_elements(const ElementMatrix& elements) {
    if (elements.rows() < 1 || elements.cols() < 1) {
        throw ContainerError(ContainerFault::empty_shape,
                             std::to_string(elements.rows()) + "x" + std::to_string(elements.cols()));
    }
    if (!elements.allFinite()) {
        throw ContainerError(ContainerFault::non_finite, "");
    }
}

void write_elements(std::ostream& out, const ElementMatrix& elements) {
    validate_elements(elements);
    if (elements.rows() > std::numeric_limits<std::uint32_t>::max() ||
        elements.cols() > std::numeric_limits<std::uint32_t>::max()) {
        throw DataError("element matrix too large for container");
    }
    std::vector<char> buf;
    buf.reserve(kContainerHeaderSize + 4 * std::size_t(elements.size()));
    buf.insert(buf.end(), std::begin(kContainerMagic), std::end(kContainerMagic));
    put_le<std::uint16_t>(buf, kContainerVersion);
    put_le<std::uint16_t>(buf, 0);
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(elements.rows()));
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(elements.cols()));
    // Row-major storage: data() is already in payload order.
    const float* values = elements.data();
    for (Eigen::Index i = 0; i < elements.size(); ++i) {
        put_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(values[i]));
    }
    out.write(buf.data(), std::streamsize(buf.size()));
    if (!out) {
        throw ContainerError(ContainerFault::io, "write failed");
    }
}

ElementMatrix read_elements(std::istream& in, std::uintmax_t byte_count) {
    std::array<unsigned char, kContainerHeaderSize> header{};
    if (byte_count < kContainerHeaderSize) {
        // A short file whose first bytes are not even the magic is reported as such.
        in.read(reinterpret_cast<char*>(header.data()), std::streamsize(byte_count));
        if (byte_count >= 4 && std::memcmp(header.data(), kContainerMagic, 4) != 0) {
            throw ContainerError(ContainerFault::bad_magic, "");
        }
        throw ContainerError(ContainerFault::truncated, "header");
    }
    in.read(reinterpret_cast<char*>(header.data()), kContainerHeaderSize);
    if (!in) {
        throw ContainerError(ContainerFault::io, "header read failed");
    }
    if (std::memcmp(header.data(), kContainerMagic, 4) != 0) {
        throw ContainerError(ContainerFault::bad_magic, "");
    }
    const auto version = get_le<std::uint16_t>(header.data() + 4);
    if (version != kContainerVersion) {
        throw ContainerError(ContainerFault::bad_version, std::to_string(version));
    }
    const auto flags = get_le<std::uint16_t>(header.data() + 6);
    if (flags != 0) {
        throw ContainerError(ContainerFault::bad_flags, std::to_string(flags));
    }
    const auto n_elements = get_le<std::uint32_t>(header.data() + 8);
    const auto n_dims = get_le<std::uint32_t>(header.data() + 12);
    if (n_elements == 0 || n_dims == 0) {
        throw ContainerError(ContainerFault::empty_shape,
                             std::to_string(n_elements) + "x" + std::to_string(n_dims));
    }
    const std::uintmax_t expected = std::uintmax_t(n_elements) * n_dims * 4;
    const std::uintmax_t payload = byte_count - kContainerHeaderSize;
    if (payload < expected) {
        throw ContainerError(ContainerFault::truncated, "expected " + std::to_string(expected) +
                                                            " payload bytes, found " + std::to_string(payload));
    }
    if (payload > expected) {
        throw ContainerError(ContainerFault::length_mismatch,
                             "expected " + std::to_string(expected) + " payload bytes, found " +
                                 std::to_string(payload));
    }

    std::vector<unsigned char> raw(expected);
    in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(expected));
    if (!in) {
        throw ContainerError(ContainerFault::io, "payload read failed");
    }
    ElementMatrix elements(n_elements, n_dims);
    float* values = elements.data();
    for (std::size_t i = 0; i < std::size_t(elements.size()); ++i) {
        values[i] = std::bit_cast<float>(get_le<std::uint32_t>(raw.data() + 4 * i));
    }
    if (!elements.allFinite()) {
        throw ContainerError(ContainerFault::non_finite, "");
    }
    return elements;
}

void write_element_set(const ElementSet& set, const std::filesystem::path& path) {
    validate_elements(set.elements);
    atomic_write(path, [&](std::ostream& out) { write_elements(out, set.elements); });
}

ElementSet read_element_set(const std::filesystem::path& path) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    if (ec) {
        throw ContainerError(ContainerFault::io, path.string() + ": " + ec.message());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ContainerError(ContainerFault::io, "cannot open " + path.string());
    }
    ElementSet set;
    set.elements = read_elements(in, size);
    return set;
}

}  // namespace sinbad
