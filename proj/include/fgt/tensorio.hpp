#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgt/matrix.hpp"

namespace fgt {

// Errors raised by the .fgt container codec.
struct DuplicateName : std::runtime_error { explicit DuplicateName(const std::string& m) : std::runtime_error(m) {} };
struct ShapePayloadMismatch : std::runtime_error { explicit ShapePayloadMismatch(const std::string& m) : std::runtime_error(m) {} };
struct BadMagic : std::runtime_error { explicit BadMagic(const std::string& m) : std::runtime_error(m) {} };
struct UnsupportedVersion : std::runtime_error { explicit UnsupportedVersion(const std::string& m) : std::runtime_error(m) {} };
struct TruncatedPayload : std::runtime_error { explicit TruncatedPayload(const std::string& m) : std::runtime_error(m) {} };
struct MalformedHeader : std::runtime_error { explicit MalformedHeader(const std::string& m) : std::runtime_error(m) {} };
struct IoError : std::runtime_error { explicit IoError(const std::string& m) : std::runtime_error(m) {} };

enum class Dtype { f32, f64 };

inline std::size_t dtype_size(Dtype d) { return d == Dtype::f32 ? 4 : 8; }
const char* dtype_name(Dtype d);

struct Tensor {
    std::string name;
    Dtype dtype = Dtype::f64;
    std::vector<std::uint64_t> shape;
    std::vector<std::byte> payload;  // little-endian, row-major

    std::uint64_t element_count() const;

    static Tensor f64_matrix(std::string name, const Mat& m);
    static Tensor f64_vector(std::string name, std::span<const double> v);
    static Tensor f32_vector(std::string name, std::span<const float> v,
                             std::vector<std::uint64_t> shape);

    /// Rank-1 tensors come back as 1×n, rank-2 as rows×cols. f64 only.
    Mat as_matrix() const;
    std::vector<double> as_f64_vector() const;
};

/// Ordered collection of named tensors; insertion order is the file order.
struct TensorContainer {
    std::vector<Tensor> entries;

    void add(Tensor t);
    const Tensor* find(const std::string& name) const;
    const Tensor& at(const std::string& name) const;
};

/// Layout: magic "FGTW", u32 version (=1), u64 header length, UTF-8 JSON
/// header [{dtype,name,offset,shape}...], payloads at 64-byte-aligned
/// offsets. Equal containers serialize to identical bytes.
std::vector<std::byte> write_container(const TensorContainer& c);
TensorContainer read_container(std::span<const std::byte> bytes);

void write_container_file(const std::string& path, const TensorContainer& c);
TensorContainer read_container_file(const std::string& path);

}  // namespace fgt
