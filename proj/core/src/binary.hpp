#pragma once

// Little-endian byte packing for the binary blobs.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "sinbad/error.hpp"

namespace sinbad::detail {

class ByteWriter {
public:
    template <typename UInt>
    void put(UInt value) {
        for (std::size_t i = 0; i < sizeof(UInt); ++i) {
            bytes_.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
        }
    }
    void put_f64(double value) { put(std::bit_cast<std::uint64_t>(value)); }
    void put_raw(const char* data, std::size_t n) { bytes_.insert(bytes_.end(), data, data + n); }

    const std::vector<char>& bytes() const { return bytes_; }

private:
    std::vector<char> bytes_;
};

class ByteReader {
public:
    ByteReader(const std::string& bytes, std::string context)
        : bytes_(bytes), context_(std::move(context)) {}

    template <typename UInt>
    UInt get() {
        need(sizeof(UInt));
        UInt value = 0;
        for (std::size_t i = 0; i < sizeof(UInt); ++i) {
            value |= static_cast<UInt>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(UInt);
        return value;
    }
    double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
    bool get_magic(const char (&magic)[4]) {
        need(4);
        const bool ok = std::memcmp(bytes_.data() + pos_, magic, 4) == 0;
        pos_ += 4;
        return ok;
    }
    bool at_end() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) {
            throw DataError(context_ + ": truncated");
        }
    }

    const std::string& bytes_;
    std::string context_;
    std::size_t pos_ = 0;
};

}  // namespace sinbad::detail
