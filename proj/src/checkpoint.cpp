#include "smsge/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "archive format assumes a little-endian host");

namespace smsge {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
        throw std::runtime_error(path + ": truncated file");
    return v;
}
std::uint64_t get_u64(std::istream& in, const std::string& path) {
    std::uint64_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
        throw std::runtime_error(path + ": truncated file");
    return v;
}

}  // namespace

void write_archive(const std::string& path, const std::string& magic,
                   const nlohmann::json& header,
                   const std::vector<std::pair<std::string, const Matrix*>>& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
    put_u32(out, kArchiveVersion);
    const std::string head = header.dump();
    put_u64(out, head.size());
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    put_u64(out, tensors.size());
    for (const auto& [name, m] : tensors) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u64(out, m->rows());
        put_u64(out, m->cols());
        out.write(reinterpret_cast<const char*>(m->data()),
                  static_cast<std::streamsize>(m->size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

Archive read_archive(const std::string& path, const std::string& magic) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::string got(magic.size(), '\0');
    if (!in.read(got.data(), static_cast<std::streamsize>(got.size())) || got != magic)
        throw std::runtime_error(path + ": wrong magic bytes (expected " + magic + ")");
    const std::uint32_t version = get_u32(in, path);
    if (version != kArchiveVersion)
        throw std::runtime_error(path + ": unsupported format version " +
                                 std::to_string(version));
    Archive a;
    const std::uint64_t head_len = get_u64(in, path);
    std::string head(head_len, '\0');
    if (!in.read(head.data(), static_cast<std::streamsize>(head_len)))
        throw std::runtime_error(path + ": truncated file");
    try {
        a.header = nlohmann::json::parse(head);
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": corrupt header: " + e.what());
    }
    const std::uint64_t count = get_u64(in, path);
    a.tensors.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = get_u32(in, path);
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) throw std::runtime_error(path + ": truncated file");
        const std::uint64_t rows = get_u64(in, path);
        const std::uint64_t cols = get_u64(in, path);
        Matrix m(rows, cols);
        if (!in.read(reinterpret_cast<char*>(m.data()),
                     static_cast<std::streamsize>(m.size() * sizeof(double))))
            throw std::runtime_error(path + ": truncated file");
        a.tensors.emplace_back(std::move(name), std::move(m));
    }
    return a;
}

const Matrix& Archive::find(const std::string& name) const {
    for (const auto& [n, m] : tensors)
        if (n == name) return m;
    throw std::runtime_error("archive: missing tensor '" + name + "'");
}

}  // namespace smsge
