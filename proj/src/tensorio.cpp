#include "fgt/tensorio.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_set>

#include <nlohmann/json.hpp>

static_assert(std::endian::native == std::endian::little,
              "the .fgt codec is little-endian and this build memcpys host floats");

namespace fgt {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'F', 'G', 'T', 'W'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint64_t kAlign = 64;
constexpr std::size_t kPreambleSize = 4 + 4 + 8;

std::uint64_t align_up(std::uint64_t x) { return (x + kAlign - 1) / kAlign * kAlign; }

void append_u32(std::vector<std::byte>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
}

void append_u64(std::vector<std::byte>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
}

std::uint32_t load_u32(const std::byte* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(std::to_integer<unsigned>(p[i])) << (8 * i);
    return v;
}

std::uint64_t load_u64(const std::byte* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(std::to_integer<unsigned>(p[i])) << (8 * i);
    return v;
}

bool valid_name(const std::string& name) {
    if (name.empty()) return false;
    return std::all_of(name.begin(), name.end(),
                       [](unsigned char c) { return c >= 0x20 && c < 0x7f; });
}

std::uint64_t payload_size_of(const Tensor& t) {
    std::uint64_t n = t.element_count();
    std::uint64_t sz = dtype_size(t.dtype);
    if (n > std::numeric_limits<std::uint64_t>::max() / sz)
        throw ShapePayloadMismatch("tensor '" + t.name + "': payload size overflows");
    return n * sz;
}

std::string render_header(const TensorContainer& c, const std::vector<std::uint64_t>& offsets) {
    json arr = json::array();
    for (std::size_t i = 0; i < c.entries.size(); ++i) {
        const Tensor& t = c.entries[i];
        json e;
        e["name"] = t.name;
        e["dtype"] = dtype_name(t.dtype);
        e["shape"] = t.shape;
        e["offset"] = offsets[i];
        arr.push_back(std::move(e));
    }
    return arr.dump();  // compact, keys sorted: canonical
}

std::vector<std::uint64_t> offsets_for(const TensorContainer& c, std::uint64_t data_start) {
    std::vector<std::uint64_t> offsets(c.entries.size());
    std::uint64_t cursor = data_start;
    for (std::size_t i = 0; i < c.entries.size(); ++i) {
        offsets[i] = cursor;
        cursor = align_up(cursor + c.entries[i].payload.size());
    }
    return offsets;
}

}  // namespace

const char* dtype_name(Dtype d) { return d == Dtype::f32 ? "f32" : "f64"; }

std::uint64_t Tensor::element_count() const {
    std::uint64_t n = 1;
    for (std::uint64_t d : shape) {
        if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d)
            throw ShapePayloadMismatch("tensor '" + name + "': shape product overflows");
        n *= d;
    }
    return n;
}

Tensor Tensor::f64_matrix(std::string name, const Mat& m) {
    Tensor t;
    t.name = std::move(name);
    t.dtype = Dtype::f64;
    t.shape = {m.rows(), m.cols()};
    t.payload.resize(m.size() * sizeof(double));
    std::memcpy(t.payload.data(), m.data(), t.payload.size());
    return t;
}

Tensor Tensor::f64_vector(std::string name, std::span<const double> v) {
    Tensor t;
    t.name = std::move(name);
    t.dtype = Dtype::f64;
    t.shape = {v.size()};
    t.payload.resize(v.size() * sizeof(double));
    std::memcpy(t.payload.data(), v.data(), t.payload.size());
    return t;
}

Tensor Tensor::f32_vector(std::string name, std::span<const float> v,
                          std::vector<std::uint64_t> shape) {
    Tensor t;
    t.name = std::move(name);
    t.dtype = Dtype::f32;
    t.shape = std::move(shape);
    t.payload.resize(v.size() * sizeof(float));
    std::memcpy(t.payload.data(), v.data(), t.payload.size());
    if (t.payload.size() != t.element_count() * sizeof(float))
        throw ShapePayloadMismatch("tensor '" + t.name + "': data does not match shape");
    return t;
}

Mat Tensor::as_matrix() const {
    if (dtype != Dtype::f64) throw ShapePayloadMismatch("tensor '" + name + "': expected f64");
    std::size_t r, c;
    if (shape.size() == 1) {
        r = 1;
        c = shape[0];
    } else if (shape.size() == 2) {
        r = shape[0];
        c = shape[1];
    } else {
        throw ShapePayloadMismatch("tensor '" + name + "': rank " + std::to_string(shape.size()) +
                                   " not viewable as matrix");
    }
    Mat m(r, c);
    std::memcpy(m.data(), payload.data(), payload.size());
    return m;
}

std::vector<double> Tensor::as_f64_vector() const {
    if (dtype != Dtype::f64) throw ShapePayloadMismatch("tensor '" + name + "': expected f64");
    std::vector<double> v(payload.size() / sizeof(double));
    std::memcpy(v.data(), payload.data(), payload.size());
    return v;
}

void TensorContainer::add(Tensor t) {
    if (find(t.name)) throw DuplicateName("duplicate tensor name '" + t.name + "'");
    entries.push_back(std::move(t));
}

const Tensor* TensorContainer::find(const std::string& name) const {
    for (const Tensor& t : entries)
        if (t.name == name) return &t;
    return nullptr;
}

const Tensor& TensorContainer::at(const std::string& name) const {
    const Tensor* t = find(name);
    if (!t) throw MalformedHeader("missing tensor '" + name + "'");
    return *t;
}

std::vector<std::byte> write_container(const TensorContainer& c) {
    std::unordered_set<std::string> seen;
    for (const Tensor& t : c.entries) {
        if (!valid_name(t.name))
            throw MalformedHeader("tensor name must be non-empty printable ASCII");
        if (!seen.insert(t.name).second) throw DuplicateName("duplicate tensor name '" + t.name + "'");
        if (t.payload.size() != payload_size_of(t))
            throw ShapePayloadMismatch("tensor '" + t.name + "': payload length " +
                                       std::to_string(t.payload.size()) + " does not match shape");
    }

    // Offsets appear inside the header, and the header length shifts the
    // offsets; iterate to the fixed point (monotone, terminates).
    std::uint64_t header_len = render_header(c, offsets_for(c, align_up(kPreambleSize))).size();
    std::string header;
    std::vector<std::uint64_t> offsets;
    for (int iter = 0; iter < 64; ++iter) {
        offsets = offsets_for(c, align_up(kPreambleSize + header_len));
        header = render_header(c, offsets);
        if (header.size() == header_len) break;
        header_len = header.size();
    }
    if (header.size() != header_len) throw MalformedHeader("header layout did not converge");

    std::vector<std::byte> out;
    out.reserve(kPreambleSize + header.size());
    out.insert(out.end(), reinterpret_cast<const std::byte*>(kMagic),
               reinterpret_cast<const std::byte*>(kMagic) + 4);
    append_u32(out, kVersion);
    append_u64(out, header_len);
    out.insert(out.end(), reinterpret_cast<const std::byte*>(header.data()),
               reinterpret_cast<const std::byte*>(header.data()) + header.size());
    for (std::size_t i = 0; i < c.entries.size(); ++i) {
        out.resize(offsets[i], std::byte{0});  // zero padding up to the aligned offset
        out.insert(out.end(), c.entries[i].payload.begin(), c.entries[i].payload.end());
    }
    return out;
}

TensorContainer read_container(std::span<const std::byte> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw BadMagic("not a FGTW container");
    if (bytes.size() < kPreambleSize) throw MalformedHeader("file shorter than preamble");
    std::uint32_t version = load_u32(bytes.data() + 4);
    if (version != kVersion)
        throw UnsupportedVersion("container version " + std::to_string(version));
    std::uint64_t header_len = load_u64(bytes.data() + 8);
    if (header_len > bytes.size() - kPreambleSize)
        throw MalformedHeader("header length exceeds file size");

    json arr;
    try {
        arr = json::parse(bytes.begin() + kPreambleSize, bytes.begin() + kPreambleSize + header_len);
    } catch (const json::exception& e) {
        throw MalformedHeader(std::string("header is not valid JSON: ") + e.what());
    }
    if (!arr.is_array()) throw MalformedHeader("header must be a JSON array");

    TensorContainer c;
    std::unordered_set<std::string> seen;
    for (const json& e : arr) {
        if (!e.is_object() || !e.contains("name") || !e.contains("dtype") || !e.contains("shape") ||
            !e.contains("offset"))
            throw MalformedHeader("header entry missing required field");
        Tensor t;
        if (!e["name"].is_string()) throw MalformedHeader("tensor name must be a string");
        t.name = e["name"].get<std::string>();
        if (!valid_name(t.name)) throw MalformedHeader("tensor name must be printable ASCII");
        if (!seen.insert(t.name).second) throw MalformedHeader("duplicate tensor name '" + t.name + "'");

        std::string dt = e["dtype"].is_string() ? e["dtype"].get<std::string>() : "";
        if (dt == "f32")
            t.dtype = Dtype::f32;
        else if (dt == "f64")
            t.dtype = Dtype::f64;
        else
            throw MalformedHeader("tensor '" + t.name + "': unknown dtype '" + dt + "'");

        if (!e["shape"].is_array()) throw MalformedHeader("tensor '" + t.name + "': shape must be an array");
        for (const json& d : e["shape"]) {
            if (!d.is_number_unsigned()) throw MalformedHeader("tensor '" + t.name + "': bad dimension");
            t.shape.push_back(d.get<std::uint64_t>());
        }
        if (!e["offset"].is_number_unsigned())
            throw MalformedHeader("tensor '" + t.name + "': bad offset");
        std::uint64_t offset = e["offset"].get<std::uint64_t>();
        if (offset % kAlign != 0) throw MalformedHeader("tensor '" + t.name + "': offset not 64-byte aligned");

        std::uint64_t payload_len = payload_size_of(t);
        if (offset > bytes.size() || payload_len > bytes.size() - offset)
            throw TruncatedPayload("tensor '" + t.name + "': payload extends past end of file");
        t.payload.assign(bytes.begin() + offset, bytes.begin() + offset + payload_len);
        c.entries.push_back(std::move(t));
    }
    return c;
}

void write_container_file(const std::string& path, const TensorContainer& c) {
    std::vector<std::byte> bytes = write_container(c);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write to '" + path + "' failed");
}

TensorContainer read_container_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<std::byte> bytes(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in) throw IoError("read from '" + path + "' failed");
    return read_container(bytes);
}

}  // namespace fgt
