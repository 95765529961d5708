#include "id3/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "id3/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

namespace id3 {

namespace {

constexpr char kMagic[4] = {'I', 'D', '3', 'W'};

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    out.write(b, 4);
}

void put_f64s(std::ostream& out, const Vec& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::uint32_t get_u32(std::istream& in) {
    char b[4];
    in.read(b, 4);
    if (!in) throw FormatError("checkpoint: truncated header", 0);
    std::uint32_t v;
    std::memcpy(&v, b, 4);
    return v;
}

Vec get_f64s(std::istream& in, std::size_t count) {
    Vec v(count);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw FormatError("checkpoint: truncated payload", 0);
    return v;
}

}  // namespace

void write_checkpoint(const std::string& path, const ToyWorld& world,
                      const DiffusionSchedule& schedule, const DenoiserParams& params) {
    if (params.n != world.n || params.d != world.d || params.m_a != world.m_a)
        throw DimensionMismatchError("write_checkpoint: world/denoiser dimension mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("write_checkpoint: cannot open " + path);
    out.write(kMagic, 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(world.n));
    put_u32(out, static_cast<std::uint32_t>(world.d));
    put_u32(out, static_cast<std::uint32_t>(world.m_a));
    put_u32(out, static_cast<std::uint32_t>(params.k_time));
    put_u32(out, static_cast<std::uint32_t>(params.hidden1));
    put_u32(out, static_cast<std::uint32_t>(params.hidden2));
    put_u32(out, static_cast<std::uint32_t>(schedule.T));
    put_f64s(out, schedule.alpha);
    put_f64s(out, world.A.data);
    put_f64s(out, world.B.data);
    put_f64s(out, world.W.data);
    put_f64s(out, world.V.data);
    put_f64s(out, params.theta);
    if (!out)
        throw IoError("write_checkpoint: write failed for " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("read_checkpoint: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("checkpoint: bad magic bytes", 0);
    std::uint32_t version = get_u32(in);
    if (version != kCheckpointVersion)
        throw FormatError("checkpoint: unsupported version " + std::to_string(version), 0);

    Checkpoint cp;
    std::uint32_t n = get_u32(in);
    std::uint32_t d = get_u32(in);
    std::uint32_t m_a = get_u32(in);
    std::uint32_t k_time = get_u32(in);
    std::uint32_t h1 = get_u32(in);
    std::uint32_t h2 = get_u32(in);
    std::uint32_t T = get_u32(in);
    if (n == 0 || d < 2 || m_a == 0 || T < 2 || h1 == 0 || h2 == 0)
        throw FormatError("checkpoint: invalid dimensions", 0);

    cp.alpha = get_f64s(in, T);

    cp.world.n = n;
    cp.world.d = d;
    cp.world.m_a = m_a;
    cp.world.A = Matrix(n, d);
    cp.world.A.data = get_f64s(in, std::size_t{n} * d);
    cp.world.B = Matrix(n, m_a);
    cp.world.B.data = get_f64s(in, std::size_t{n} * m_a);
    cp.world.W = Matrix(d, n);
    cp.world.W.data = get_f64s(in, std::size_t{d} * n);
    cp.world.V = Matrix(m_a, n);
    cp.world.V.data = get_f64s(in, std::size_t{m_a} * n);

    cp.params.n = n;
    cp.params.d = d;
    cp.params.m_a = m_a;
    cp.params.k_time = k_time;
    cp.params.hidden1 = h1;
    cp.params.hidden2 = h2;
    cp.params.theta = get_f64s(in, cp.params.param_count());

    char extra;
    if (in.read(&extra, 1))
        throw FormatError("checkpoint: trailing bytes", 0);
    return cp;
}

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("fnv1a64_file: cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    return h;
}

std::string to_hex(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return s;
}

}  // namespace id3
