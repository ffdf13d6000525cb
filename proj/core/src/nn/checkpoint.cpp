#include "plasma/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "plasma/util/error.hpp"

namespace plasma::nn {

namespace {

constexpr char kMagic[8] = {'P', 'L', 'A', 'S', 'M', 'A', 'C', 'K'};
constexpr std::uint64_t kMaxString = 1ULL << 30;

void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
    out.write(b, 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
    out.write(b, 4);
}

void put_str(std::ostream& out, const std::string& s) {
    put_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw IoError("checkpoint truncated");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError("checkpoint truncated");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

std::string get_str(std::istream& in) {
    const auto n = get_u64(in);
    if (n > kMaxString) throw IoError("checkpoint string too long");
    std::string s(n, '\0');
    if (n && !in.read(s.data(), static_cast<std::streamsize>(n))) throw IoError("checkpoint truncated");
    return s;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
    out.write(kMagic, 8);
    put_u32(out, kCheckpointVersion);
    put_str(out, ckpt.kind);
    put_str(out, ckpt.metadata);
    put_u64(out, ckpt.params.size());
    for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
        const Tensor& t = ckpt.params.at(i);
        put_str(out, ckpt.params.names()[i]);
        put_u64(out, t.rank());
        for (auto e : t.shape()) put_u64(out, e);
        for (double x : t.values()) put_u64(out, std::bit_cast<std::uint64_t>(x));
    }
    put_u64(out, ckpt.params.hash());
    if (!out) throw IoError("checkpoint write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw IoError("not a checkpoint file");
    const auto version = get_u32(in);
    if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
    Checkpoint c;
    c.kind = get_str(in);
    c.metadata = get_str(in);
    const auto groups = get_u64(in);
    for (std::uint64_t g = 0; g < groups; ++g) {
        std::string name = get_str(in);
        const auto rank = get_u64(in);
        if (rank == 0 || rank > 8) throw IoError("bad rank for group " + name);
        std::vector<std::size_t> shape(rank);
        std::uint64_t count = 1;
        for (auto& e : shape) {
            e = get_u64(in);
            count *= e;
            if (count > (1ULL << 32)) throw IoError("group " + name + " too large");
        }
        Tensor t(shape);
        for (auto& x : t.values()) x = std::bit_cast<double>(get_u64(in));
        c.params.add(std::move(name), std::move(t));
    }
    const auto stored = get_u64(in);
    if (stored != c.params.hash()) throw IoError("checkpoint hash mismatch");
    return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    return read_checkpoint(in);
}

std::uint64_t checkpoint_hash(const std::string& path) { return load_checkpoint(path).params.hash(); }

}  // namespace plasma::nn
