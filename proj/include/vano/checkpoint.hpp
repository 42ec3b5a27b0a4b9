#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "vano/adam.hpp"
#include "vano/errors.hpp"
#include "vano/params.hpp"

namespace vano {

// Checkpoint layout:
//   magic "VANOCKP1"
//   u32 count of parameter tensors
//   per tensor: u32 name length, name bytes, u32 rank, u32 dims..., f64 data row-major
//   AdamState in the same per-tensor encoding: adam.m, adam.v,
//     adam.scalars = [step, base_lr, decay_rate, decay_every, beta1, beta2, eps]
//   u32 config length, config bytes (key = value lines)
// All integers little-endian.

namespace ckptio {

inline void put_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_f64(std::ostream& os, const double* p, size_t n) {
    os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

struct Reader {
    std::ifstream in;
    size_t at = 0;
    explicit Reader(const std::string& path) : in(path, std::ios::binary) {}
    void need(void* dst, size_t n, const char* what) {
        in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<size_t>(in.gcount()) != n)
            throw FormatError(std::string("truncated file while reading ") + what, at);
        at += n;
    }
    uint32_t u32(const char* what) {
        unsigned char b[4];
        need(b, 4, what);
        return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
               (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
    }
    std::string str(size_t n, const char* what) {
        std::string s(n, '\0');
        need(s.data(), n, what);
        return s;
    }
    void f64(double* p, size_t n, const char* what) { need(p, n * sizeof(double), what); }
};

inline void put_tensor(std::ostream& os, const std::string& name, const std::vector<int>& shape,
                       const double* data, size_t len) {
    put_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<uint32_t>(shape.size()));
    for (int d : shape) put_u32(os, static_cast<uint32_t>(d));
    put_f64(os, data, len);
}

struct NamedTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<double> data;
};

inline NamedTensor get_tensor(Reader& r) {
    NamedTensor t;
    const uint32_t nlen = r.u32("tensor name length");
    if (nlen > 4096) throw FormatError("implausible tensor name length", r.at - 4);
    t.name = r.str(nlen, "tensor name");
    const uint32_t rank = r.u32("tensor rank");
    if (rank > 8) throw FormatError("implausible tensor rank", r.at - 4);
    size_t len = 1;
    for (uint32_t i = 0; i < rank; ++i) {
        const uint32_t d = r.u32("tensor dim");
        t.shape.push_back(static_cast<int>(d));
        len *= d;
    }
    t.data.resize(len);
    r.f64(t.data.data(), len, "tensor data");
    return t;
}

} // namespace ckptio

inline void save_checkpoint(const std::string& path, const ParamStore& ps, const AdamState& adam,
                            const std::string& config_text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open checkpoint for writing: " + path, 0);
    os.write("VANOCKP1", 8);
    ckptio::put_u32(os, static_cast<uint32_t>(ps.records().size()));
    for (const auto& r : ps.records())
        ckptio::put_tensor(os, r.name, r.shape, ps.values.data() + r.offset, r.len);
    ckptio::put_tensor(os, "adam.m", {static_cast<int>(adam.m.size())}, adam.m.data(),
                       adam.m.size());
    ckptio::put_tensor(os, "adam.v", {static_cast<int>(adam.v.size())}, adam.v.data(),
                       adam.v.size());
    const double scalars[7] = {static_cast<double>(adam.step), adam.base_lr, adam.decay_rate,
                               static_cast<double>(adam.decay_every), adam.beta1, adam.beta2,
                               adam.eps};
    ckptio::put_tensor(os, "adam.scalars", {7}, scalars, 7);
    ckptio::put_u32(os, static_cast<uint32_t>(config_text.size()));
    os.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));
    if (!os) throw FormatError("write failure on checkpoint: " + path, 0);
}

struct Checkpoint {
    ParamStore params;
    AdamState adam;
    std::string config_text;
};

inline Checkpoint load_checkpoint(const std::string& path) {
    ckptio::Reader r(path);
    if (!r.in) throw FormatError("cannot open checkpoint: " + path, 0);
    char magic[8];
    r.need(magic, 8, "magic");
    if (std::memcmp(magic, "VANOCKP1", 8) != 0)
        throw FormatError("bad magic, expected \"VANOCKP1\"", 0);
    Checkpoint ck;
    const uint32_t count = r.u32("tensor count");
    for (uint32_t i = 0; i < count; ++i) {
        auto t = ckptio::get_tensor(r);
        ck.params.add(t.name, t.shape);
        auto dst = ck.params.tensor(t.name);
        std::copy(t.data.begin(), t.data.end(), dst.begin());
    }
    auto m = ckptio::get_tensor(r);
    auto v = ckptio::get_tensor(r);
    auto sc = ckptio::get_tensor(r);
    if (m.name != "adam.m" || v.name != "adam.v" || sc.name != "adam.scalars" ||
        sc.data.size() != 7)
        throw FormatError("malformed optimizer section", r.at);
    ck.adam.m = std::move(m.data);
    ck.adam.v = std::move(v.data);
    ck.adam.step = static_cast<int64_t>(sc.data[0]);
    ck.adam.base_lr = sc.data[1];
    ck.adam.decay_rate = sc.data[2];
    ck.adam.decay_every = static_cast<int64_t>(sc.data[3]);
    ck.adam.beta1 = sc.data[4];
    ck.adam.beta2 = sc.data[5];
    ck.adam.eps = sc.data[6];
    const uint32_t clen = r.u32("config length");
    ck.config_text = r.str(clen, "config text");
    return ck;
}

} // namespace vano
