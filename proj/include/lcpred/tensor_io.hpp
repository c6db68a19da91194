#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lcpred {

// Framed binary tensor container, all integers and floats little-endian:
//   "LCTF" | u32 version (1) | u32 metadata length | metadata bytes (UTF-8)
//   u32 tensor count, then per tensor:
//   u32 name length | name | u32 rank | u64 dims[rank] | f64 values[prod(dims)]
struct Tensor {
    std::string name;
    std::vector<std::uint64_t> dims;
    std::vector<double> values;

    std::uint64_t element_count() const;
    friend bool operator==(const Tensor&, const Tensor&) = default;
};

struct TensorFile {
    std::string metadata;
    std::vector<Tensor> tensors;

    const Tensor& get(const std::string& name) const;  // throws DataError when absent
    friend bool operator==(const TensorFile&, const TensorFile&) = default;
};

std::string encode_tensors(const TensorFile& file);
TensorFile decode_tensors(const std::string& bytes);

void save_tensors(const std::filesystem::path& path, const TensorFile& file);
TensorFile load_tensors(const std::filesystem::path& path);

}  // namespace lcpred
