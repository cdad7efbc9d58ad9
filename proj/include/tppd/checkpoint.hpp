#pragma once

// Versioned binary container for named parameter tensors.
//
// Layout (little-endian):
//   bytes 0-7   magic "TPPDCKPT"
//   u32         format version (currently 1)
//   u32         note length, followed by that many note bytes (free-form)
//   u64         tensor count
//   per tensor: u32 name length, name bytes, u64 rows, u64 cols,
//               rows*cols doubles in column-major order
//
// Round trips are bit-exact in double precision.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <tppd/error.hpp>
#include <tppd/nn.hpp>

namespace tppd {

struct named_tensor {
    std::string name;
    matd value;
};

struct checkpoint {
    std::string note;
    std::vector<named_tensor> tensors;

    const matd& find(const std::string& name) const {
        for (const auto& t : tensors)
            if (t.name == name) return t.value;
        throw error("checkpoint: missing tensor '" + name + "'");
    }
};

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    out.write(b, 4);
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    std::memcpy(b, &v, 8);
    out.write(b, 8);
}

inline std::uint32_t get_u32(std::istream& in) {
    char b[4];
    in.read(b, 4);
    if (!in) throw error("checkpoint: truncated file");
    std::uint32_t v;
    std::memcpy(&v, b, 4);
    return v;
}

inline std::uint64_t get_u64(std::istream& in) {
    char b[8];
    in.read(b, 8);
    if (!in) throw error("checkpoint: truncated file");
    std::uint64_t v;
    std::memcpy(&v, b, 8);
    return v;
}

inline constexpr char ckpt_magic[8] = {'T', 'P', 'P', 'D', 'C', 'K', 'P', 'T'};

} // namespace detail

inline void save_checkpoint(const std::string& path, const checkpoint& ck) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw error("checkpoint: cannot open '" + path + "' for writing");
    out.write(detail::ckpt_magic, 8);
    detail::put_u32(out, 1);
    detail::put_u32(out, static_cast<std::uint32_t>(ck.note.size()));
    out.write(ck.note.data(), static_cast<std::streamsize>(ck.note.size()));
    detail::put_u64(out, ck.tensors.size());
    for (const auto& t : ck.tensors) {
        detail::put_u32(out, static_cast<std::uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        detail::put_u64(out, static_cast<std::uint64_t>(t.value.rows()));
        detail::put_u64(out, static_cast<std::uint64_t>(t.value.cols()));
        out.write(reinterpret_cast<const char*>(t.value.data()),
                  static_cast<std::streamsize>(sizeof(double)) * t.value.size());
    }
    if (!out) throw error("checkpoint: write to '" + path + "' failed");
}

inline checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("checkpoint: cannot open '" + path + "'");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, detail::ckpt_magic, 8) != 0)
        throw error("checkpoint: '" + path + "' is not a checkpoint file");
    const std::uint32_t version = detail::get_u32(in);
    if (version != 1)
        throw error("checkpoint: unsupported version " + std::to_string(version));

    checkpoint ck;
    const std::uint32_t note_len = detail::get_u32(in);
    ck.note.resize(note_len);
    in.read(ck.note.data(), note_len);
    if (!in) throw error("checkpoint: truncated file");

    const std::uint64_t count = detail::get_u64(in);
    ck.tensors.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) {
        named_tensor t;
        const std::uint32_t name_len = detail::get_u32(in);
        t.name.resize(name_len);
        in.read(t.name.data(), name_len);
        const std::uint64_t rows = detail::get_u64(in);
        const std::uint64_t cols = detail::get_u64(in);
        t.value.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        in.read(reinterpret_cast<char*>(t.value.data()),
                static_cast<std::streamsize>(sizeof(double)) * t.value.size());
        if (!in) throw error("checkpoint: truncated file");
        ck.tensors.push_back(std::move(t));
    }
    return ck;
}

/// Snapshot a parameter list (values only; gradients are not persisted).
template <class T>
checkpoint snapshot_tensors(const std::vector<tensor_view<T>>& ts, std::string note) {
    checkpoint ck;
    ck.note = std::move(note);
    ck.tensors.reserve(ts.size());
    for (const auto& tv : ts)
        ck.tensors.push_back({tv.name, tv.value->template cast<double>()});
    return ck;
}

/// Restore values into an existing parameter list by name, validating shapes.
template <class T>
void restore_tensors(const checkpoint& ck, const std::vector<tensor_view<T>>& ts) {
    for (const auto& tv : ts) {
        const matd& src = ck.find(tv.name);
        require(src.rows() == tv.value->rows() && src.cols() == tv.value->cols(),
                "checkpoint: shape mismatch for '" + tv.name + "'");
        *tv.value = src.cast<T>();
    }
}

} // namespace tppd
