#include "lcpred/tensor_io.hpp"

#include <bit>
#include <cstring>

#include "lcpred/common.hpp"
#include "lcpred/csv.hpp"

namespace lcpred {

namespace {

constexpr char kMagic[4] = {'L', 'C', 'T', 'F'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "tensor files assume a little-endian host");

template <class T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <class T>
    T get() {
        need(sizeof(T));
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::string get_string(std::size_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw DataError("tensor file truncated");
    }

    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t Tensor::element_count() const {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

const Tensor& TensorFile::get(const std::string& name) const {
    for (const auto& t : tensors) {
        if (t.name == name) return t;
    }
    throw DataError("tensor '" + name + "' not found");
}

std::string encode_tensors(const TensorFile& file) {
    std::string out(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(file.metadata.size()));
    out += file.metadata;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(file.tensors.size()));
    for (const auto& t : file.tensors) {
        if (t.element_count() != t.values.size()) throw Error("tensor '" + t.name + "': dims do not match data");
        put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
        out += t.name;
        put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
        for (auto d : t.dims) put<std::uint64_t>(out, d);
        for (double v : t.values) put<double>(out, v);
    }
    return out;
}

TensorFile decode_tensors(const std::string& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw DataError("not a tensor file (bad magic)");
    Reader r(bytes);
    r.get_string(4);
    const auto version = r.get<std::uint32_t>();
    if (version != kVersion) throw DataError("unsupported tensor file version " + std::to_string(version));
    TensorFile file;
    file.metadata = r.get_string(r.get<std::uint32_t>());
    const auto count = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
        Tensor t;
        t.name = r.get_string(r.get<std::uint32_t>());
        const auto rank = r.get<std::uint32_t>();
        for (std::uint32_t k = 0; k < rank; ++k) t.dims.push_back(r.get<std::uint64_t>());
        const auto n = t.element_count();
        if (n > bytes.size() / sizeof(double)) throw DataError("tensor '" + t.name + "' larger than file");
        t.values.resize(n);
        for (auto& v : t.values) v = r.get<double>();
        file.tensors.push_back(std::move(t));
    }
    if (!r.done()) throw DataError("trailing bytes after tensor data");
    return file;
}

void save_tensors(const std::filesystem::path& path, const TensorFile& file) {
    write_file_atomic(path, encode_tensors(file));
}

TensorFile load_tensors(const std::filesystem::path& path) { return decode_tensors(read_file(path)); }

}  // namespace lcpred
