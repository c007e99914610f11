#pragma once

#include "sinbad/error.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace sinbad {

/// Row-major float matrix: one row per element, one column per feature dimension.
using ElementMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using GroupKeys = std::map<std::string, std::string>;

/**
 * One sample viewed as an unordered set of element feature vectors.
 *
 * Row order carries no meaning; every consumer downstream must be invariant
 * to permutations of the rows.
 */
struct ElementSet {
    ElementMatrix elements;
    std::string sample_id;
    GroupKeys group_keys;

    Eigen::Index n_elements() const { return elements.rows(); }
    Eigen::Index n_dims() const { return elements.cols(); }
};

/// Throws DataError unless the matrix is non-empty and every value is finite.
void validate_elements(const ElementMatrix& elements);

// Binary element-set container.
//
//   offset  size  field
//   0       4     magic "SINB"
//   4       2     version (u16, = 1)
//   6       2     flags   (u16, = 0)
//   8       4     N_E     (u32)
//   12      4     N_D     (u32)
//   16      4*N   payload: N_E*N_D float32, row-major
//
// All integers and floats are little-endian.

inline constexpr char kContainerMagic[4] = {'S', 'I', 'N', 'B'};
inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderSize = 16;

enum class ContainerFault {
    io,
    bad_magic,
    bad_version,
    bad_flags,
    empty_shape,
    truncated,
    length_mismatch,
    non_finite,
};

const char* to_string(ContainerFault fault);

class ContainerError : public DataError {
public:
    ContainerError(ContainerFault fault, const std::string& context)
        : DataError(std::string(to_string(fault)) + (context.empty() ? "" : ": " + context)),
          fault_(fault) {}

    ContainerFault fault() const noexcept { return fault_; }

private:
    ContainerFault fault_;
};

void write_elements(std::ostream& out, const ElementMatrix& elements);
ElementMatrix read_elements(std::istream& in, std::uintmax_t byte_count);

/// Writes the container atomically (temporary file + rename).
void write_element_set(const ElementSet& set, const std::filesystem::path& path);

/// Reads a container. Only the element matrix is stored on disk, so the
/// returned set has an empty sample_id and no group keys.
ElementSet read_element_set(const std::filesystem::path& path);

}  // namespace sinbad
