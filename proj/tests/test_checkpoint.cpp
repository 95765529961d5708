#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "id3/checkpoint.hpp"
#include "id3/errors.hpp"

using namespace id3;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("id3_ckpt_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string read_bytes(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_bytes(const std::string& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("checkpoint round trip is lossless and byte stable") {
    TempDir tmp;
    ToyWorld world = build_toy_world(5, 2, 4, 0.1, 33);
    DiffusionSchedule schedule = build_schedule(12, 0.9, 0.99);
    DenoiserParams params = init_denoiser(5, 2, 4, 8, 16, 12, 77);

    std::string p1 = tmp.file("a.id3w");
    write_checkpoint(p1, world, schedule, params);

    Checkpoint cp = read_checkpoint(p1);
    CHECK(cp.world.n == 5);
    CHECK(cp.world.d == 2);
    CHECK(cp.world.m_a == 4);
    CHECK(cp.world.A.data == world.A.data);
    CHECK(cp.world.B.data == world.B.data);
    CHECK(cp.world.W.data == world.W.data);
    CHECK(cp.world.V.data == world.V.data);
    CHECK(cp.alpha == schedule.alpha);
    CHECK(cp.params.theta == params.theta);
    CHECK(cp.params.hidden1 == 16);
    CHECK(cp.params.hidden2 == 12);
    CHECK(cp.params.k_time == 8);

    std::string p2 = tmp.file("b.id3w");
    write_checkpoint(p2, cp.world, cp.schedule(), cp.params);
    CHECK(read_bytes(p1) == read_bytes(p2));

    DiffusionSchedule rebuilt = cp.schedule();
    CHECK(rebuilt.T == schedule.T);
    CHECK(rebuilt.mu == schedule.mu);
    CHECK(rebuilt.guidance_weight == schedule.guidance_weight);
}

TEST_CASE("checkpoint header starts with the magic bytes") {
    TempDir tmp;
    ToyWorld world = build_toy_world(4, 2, 4, 0.0, 1);
    DiffusionSchedule schedule = build_schedule(4, 0.9, 0.99);
    DenoiserParams params = zero_denoiser(4, 2, 4);
    std::string p = tmp.file("m.id3w");
    write_checkpoint(p, world, schedule, params);
    std::string bytes = read_bytes(p);
    REQUIRE(bytes.size() > 8);
    CHECK(bytes.substr(0, 4) == "ID3W");
    // version u32 little-endian
    CHECK(static_cast<unsigned char>(bytes[4]) == 1);
    CHECK(static_cast<unsigned char>(bytes[5]) == 0);
}

TEST_CASE("checkpoint reader rejects corrupt input") {
    TempDir tmp;
    std::string p = tmp.file("bad.id3w");

    write_bytes(p, "NOPE");
    CHECK_THROWS_AS(read_checkpoint(p), FormatError);

    ToyWorld world = build_toy_world(4, 2, 4, 0.0, 2);
    DiffusionSchedule schedule = build_schedule(4, 0.9, 0.99);
    DenoiserParams params = zero_denoiser(4, 2, 4);
    std::string good = tmp.file("good.id3w");
    write_checkpoint(good, world, schedule, params);
    std::string bytes = read_bytes(good);

    write_bytes(p, bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(read_checkpoint(p), FormatError);

    write_bytes(p, bytes + "x");
    CHECK_THROWS_AS(read_checkpoint(p), FormatError);

    CHECK_THROWS_AS(read_checkpoint(tmp.file("missing.id3w")), IoError);
}

TEST_CASE("fnv1a64 matches reference digests") {
    TempDir tmp;
    std::string p = tmp.file("h.bin");
    write_bytes(p, "");
    CHECK(fnv1a64_file(p) == 0xcbf29ce484222325ULL);
    write_bytes(p, "a");
    CHECK(fnv1a64_file(p) == 0xaf63dc4c8601ec8cULL);
    write_bytes(p, "hello");
    CHECK(to_hex(fnv1a64_file(p)) == "a430d84680aabd0b");
}
