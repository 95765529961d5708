#include "id3/datagen.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace id3 {

namespace {

void validate(const DatasetConfig& cfg, const ToyWorld& world) {
    if (cfg.N < 1 || cfg.m < 1)
        throw ConfigError("generate_dataset: N and m must be >= 1");
    if (!(cfg.lb >= 0.0) || !(cfg.lb < cfg.ub) || !(cfg.ub <= 1.0))
        throw ConfigError("generate_dataset: need 0 <= lb < ub <= 1");
    const AttrRanges& r = cfg.attr_ranges;
    if (r.age_lo < 0.0 || r.age_hi > 100.0 || r.age_lo > r.age_hi)
        throw ConfigError("generate_dataset: age range must lie inside [0, 100]");
    for (int k = 0; k < 3; ++k)
        if (r.pose_lo[k] < -90.0 || r.pose_hi[k] > 90.0 || r.pose_lo[k] > r.pose_hi[k])
            throw ConfigError("generate_dataset: pose ranges must lie inside [-90, 90]");
    if (world.m_a != 4)
        throw ConfigError("generate_dataset: dataset records persist age + 3 pose angles; "
                          "the world must have m_a = 4");
}

AttributeVector draw_attributes(const AttrRanges& r, RngStream& rng) {
    double age = rng.uniform(r.age_lo, r.age_hi);
    double yaw = rng.uniform(r.pose_lo[0], r.pose_hi[0]);
    double pitch = rng.uniform(r.pose_lo[1], r.pose_hi[1]);
    double roll = rng.uniform(r.pose_lo[2], r.pose_hi[2]);
    return AttributeVector(age, yaw, pitch, roll);
}

}  // namespace

SyntheticDataset generate_dataset(const DenoiserParams& params, const DiffusionSchedule& schedule,
                                  const ToyWorld& world, const DatasetConfig& config,
                                  const std::string& checkpoint_hash) {
    validate(config, world);

    TammesConfig tammes = config.tammes;
    // Anchors must not depend on worker scheduling either.
    tammes.seed = substream_seed(config.master_seed, 0x7A33ULL);
    AnchorSet anchors;
    if (config.N == 1) {
        // A single identity needs no separation problem; place the anchor
        // uniformly at random (the solver requires N >= 2).
        RngStream rng(tammes.seed);
        anchors.anchors.push_back(sample_uniform_sphere(world.d, rng));
        anchors.max_pairwise_cosine = -1.0;
    } else {
        anchors = solve_tammes(config.N, world.d, tammes);
    }

    SyntheticDataset out;
    out.n = world.n;
    out.d = world.d;
    out.records.resize(config.N * config.m);
    out.provenance = {anchors.max_pairwise_cosine, config.N,    config.m,
                      config.lb,                   config.ub,   config.master_seed,
                      checkpoint_hash};

    std::atomic<std::size_t> next_identity{0};
    std::mutex error_mutex;
    std::string first_error;
    std::vector<char> identity_done(config.N, 0);

    auto run_identity = [&](std::size_t i) {
        RngStream id_rng(substream_seed(config.master_seed, i));
        std::vector<double> nus(config.m);
        for (auto& nu : nus) nu = id_rng.uniform(config.lb, config.ub);
        PerturbationResult pert =
            solve_perturbation_closed_form(anchors.anchors[i], nus, id_rng);

        for (std::size_t j = 0; j < config.m; ++j) {
            RngStream s_rng(substream_seed(config.master_seed, i, j + 1));
            AttributeVector s = draw_attributes(config.attr_ranges, s_rng);
            SamplerConfig chain = config.sampler;
            chain.seed = s_rng.next_u64();
            chain.record_trajectory = false;
            SampleResult sr = sample(params, schedule, world, pert.embeddings[j], s, chain);
            DatasetRecord& rec = out.records[i * config.m + j];
            rec.identity_index = i;
            rec.sample_index = j;
            rec.x0 = std::move(sr.x0);
            rec.y = pert.embeddings[j];
            rec.s = s;
            rec.nu = nus[j];
        }
        identity_done[i] = 1;
    };

    auto worker = [&]() {
        for (;;) {
            std::size_t i = next_identity.fetch_add(1);
            if (i >= config.N) return;
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error.empty()) return;
            }
            try {
                run_identity(i);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error.empty()) first_error = e.what();
            }
        }
    };

    std::size_t workers = std::max<std::size_t>(1, config.workers);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t k = 0; k < workers; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    if (!first_error.empty()) {
        SyntheticDataset partial;
        partial.n = out.n;
        partial.d = out.d;
        partial.provenance = out.provenance;
        for (std::size_t i = 0; i < config.N; ++i)
            if (identity_done[i])
                for (std::size_t j = 0; j < config.m; ++j)
                    partial.records.push_back(out.records[i * config.m + j]);
        throw PartialResultError("generate_dataset: " + first_error, std::move(partial));
    }
    return out;
}

namespace {

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_dataset(const SyntheticDataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("write_dataset: cannot open " + path);

    out << "id,sample,age,pose_yaw,pose_pitch,pose_roll,nu";
    for (std::size_t k = 0; k < dataset.d; ++k) out << ",y_" << k;
    for (std::size_t k = 0; k < dataset.n; ++k) out << ",x_" << k;
    out << '\n';

    for (const auto& rec : dataset.records) {
        out << rec.identity_index << ',' << rec.sample_index << ',' << fmt17(rec.s.age) << ','
            << fmt17(rec.s.pose[0]) << ',' << fmt17(rec.s.pose[1]) << ',' << fmt17(rec.s.pose[2])
            << ',' << fmt17(rec.nu);
        for (double v : rec.y.components) out << ',' << fmt17(v);
        for (double v : rec.x0) out << ',' << fmt17(v);
        out << '\n';
    }
    if (!out)
        throw IoError("write_dataset: write failed for " + path);

    nlohmann::json meta;
    meta["config"] = {{"N", dataset.provenance.N},
                      {"m", dataset.provenance.m},
                      {"lb", dataset.provenance.lb},
                      {"ub", dataset.provenance.ub},
                      {"master_seed", dataset.provenance.master_seed}};
    meta["anchors"] = {{"max_pairwise_cosine", dataset.provenance.anchor_max_pairwise_cosine}};
    meta["checkpoint_hash"] = dataset.provenance.checkpoint_hash;
    meta["records"] = dataset.records.size();
    std::ofstream meta_out(path + ".meta.json");
    if (!meta_out)
        throw IoError("write_dataset: cannot open " + path + ".meta.json");
    meta_out << meta.dump(2) << '\n';
}

SyntheticDataset read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("read_dataset: cannot open " + path);

    std::string header;
    if (!std::getline(in, header))
        throw FormatError("read_dataset: missing header", 1);

    std::vector<std::string> cols;
    {
        std::stringstream ss(header);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    const char* fixed[] = {"id", "sample", "age", "pose_yaw", "pose_pitch", "pose_roll", "nu"};
    if (cols.size() < 7)
        throw FormatError("read_dataset: header too short", 1);
    for (std::size_t k = 0; k < 7; ++k)
        if (cols[k] != fixed[k])
            throw FormatError("read_dataset: unexpected header column '" + cols[k] + "'", 1);
    std::size_t d = 0;
    std::size_t k = 7;
    while (k < cols.size() && cols[k] == "y_" + std::to_string(d)) {
        ++d;
        ++k;
    }
    std::size_t n = 0;
    while (k < cols.size() && cols[k] == "x_" + std::to_string(n)) {
        ++n;
        ++k;
    }
    if (k != cols.size() || d < 2 || n == 0)
        throw FormatError("read_dataset: malformed y_/x_ header columns", 1);

    SyntheticDataset ds;
    ds.n = n;
    ds.d = d;

    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::vector<std::string> fields;
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (fields.size() != 7 + d + n)
            throw FormatError("read_dataset: expected " + std::to_string(7 + d + n) +
                                  " fields, got " + std::to_string(fields.size()),
                              line_no);
        try {
            DatasetRecord rec;
            rec.identity_index = std::stoul(fields[0]);
            rec.sample_index = std::stoul(fields[1]);
            rec.s = AttributeVector(std::stod(fields[2]), std::stod(fields[3]),
                                    std::stod(fields[4]), std::stod(fields[5]));
            rec.nu = std::stod(fields[6]);
            Vec y(d);
            for (std::size_t i = 0; i < d; ++i) y[i] = std::stod(fields[7 + i]);
            rec.y = UnitVector(std::move(y));
            rec.x0.resize(n);
            for (std::size_t i = 0; i < n; ++i) rec.x0[i] = std::stod(fields[7 + d + i]);
            ds.records.push_back(std::move(rec));
        } catch (const std::exception& e) {
            throw FormatError(std::string("read_dataset: ") + e.what(), line_no);
        }
    }
    return ds;
}

}  // namespace id3
