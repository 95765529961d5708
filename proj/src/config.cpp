#include "id3/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "id3/errors.hpp"

namespace id3 {

using nlohmann::json;

namespace {

json to_json(const RunConfig& c) {
    json j;
    j["world"] = {{"n", c.world.n},
                  {"d", c.world.d},
                  {"m_a", c.world.m_a},
                  {"noise_sigma", c.world.noise_sigma},
                  {"seed", c.world.seed}};
    j["schedule"] = {{"T", c.schedule.T},
                     {"alpha_min", c.schedule.alpha_min},
                     {"alpha_max", c.schedule.alpha_max}};
    j["train"] = {{"steps", c.train.steps},
                  {"batch", c.train.batch},
                  {"lr", c.train.lr},
                  {"betas", {c.train.beta1, c.train.beta2}},
                  {"eps", c.train.eps},
                  {"seed", c.train.seed},
                  {"w_attr", c.train.w_attr},
                  {"hidden1", c.train.hidden1},
                  {"hidden2", c.train.hidden2},
                  {"k_time", c.train.k_time}};
    j["sampler"] = {{"gamma", c.sampler.gamma},
                    {"gamma_mode", c.sampler.gamma_mode},
                    {"kappa", c.sampler.kappa},
                    {"guidance_weight_override",
                     c.sampler.guidance_weight_override
                         ? json(*c.sampler.guidance_weight_override)
                         : json(nullptr)},
                    {"attr_guidance", c.sampler.attr_guidance},
                    {"seed", c.sampler.seed}};
    j["datagen"] = {{"N", c.datagen.N},
                    {"m", c.datagen.m},
                    {"lb", c.datagen.lb},
                    {"ub", c.datagen.ub},
                    {"attr_ranges",
                     {{"age", {c.datagen.attr_ranges.age_lo, c.datagen.attr_ranges.age_hi}},
                      {"pose",
                       {{c.datagen.attr_ranges.pose_lo[0], c.datagen.attr_ranges.pose_hi[0]},
                        {c.datagen.attr_ranges.pose_lo[1], c.datagen.attr_ranges.pose_hi[1]},
                        {c.datagen.attr_ranges.pose_lo[2], c.datagen.attr_ranges.pose_hi[2]}}}}},
                    {"master_seed", c.datagen.master_seed},
                    {"workers", c.datagen.workers}};
    j["paths"] = {{"checkpoint", c.paths.checkpoint},
                  {"dataset", c.paths.dataset},
                  {"reports", c.paths.reports}};
    return j;
}

void reject_unknown_keys(const json& given, const json& expected, const std::string& path) {
    if (!given.is_object()) return;
    for (auto it = given.begin(); it != given.end(); ++it) {
        std::string key_path = path.empty() ? it.key() : path + "." + it.key();
        if (!expected.contains(it.key()))
            throw ConfigError("config: unknown key '" + key_path + "'");
        if (it.value().is_object())
            reject_unknown_keys(it.value(), expected.at(it.key()), key_path);
    }
}

template <typename T>
void read_to(const json& j, const char* key, T& out, const std::string& path) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config: bad value for '" + path + "." + key + "': " + e.what());
    }
}

RunConfig from_json(const json& j) {
    RunConfig c;
    reject_unknown_keys(j, to_json(c), "");

    if (j.contains("world")) {
        const json& w = j["world"];
        read_to(w, "n", c.world.n, "world");
        read_to(w, "d", c.world.d, "world");
        read_to(w, "m_a", c.world.m_a, "world");
        read_to(w, "noise_sigma", c.world.noise_sigma, "world");
        read_to(w, "seed", c.world.seed, "world");
    }
    if (j.contains("schedule")) {
        const json& s = j["schedule"];
        read_to(s, "T", c.schedule.T, "schedule");
        read_to(s, "alpha_min", c.schedule.alpha_min, "schedule");
        read_to(s, "alpha_max", c.schedule.alpha_max, "schedule");
    }
    if (j.contains("train")) {
        const json& t = j["train"];
        read_to(t, "steps", c.train.steps, "train");
        read_to(t, "batch", c.train.batch, "train");
        read_to(t, "lr", c.train.lr, "train");
        if (t.contains("betas")) {
            auto betas = t.at("betas");
            if (!betas.is_array() || betas.size() != 2)
                throw ConfigError("config: 'train.betas' must be a 2-element array");
            c.train.beta1 = betas[0].get<double>();
            c.train.beta2 = betas[1].get<double>();
        }
        read_to(t, "eps", c.train.eps, "train");
        read_to(t, "seed", c.train.seed, "train");
        read_to(t, "w_attr", c.train.w_attr, "train");
        read_to(t, "hidden1", c.train.hidden1, "train");
        read_to(t, "hidden2", c.train.hidden2, "train");
        read_to(t, "k_time", c.train.k_time, "train");
    }
    if (j.contains("sampler")) {
        const json& s = j["sampler"];
        read_to(s, "gamma", c.sampler.gamma, "sampler");
        read_to(s, "gamma_mode", c.sampler.gamma_mode, "sampler");
        read_to(s, "kappa", c.sampler.kappa, "sampler");
        if (s.contains("guidance_weight_override") && !s["guidance_weight_override"].is_null())
            c.sampler.guidance_weight_override = s["guidance_weight_override"].get<double>();
        read_to(s, "attr_guidance", c.sampler.attr_guidance, "sampler");
        read_to(s, "seed", c.sampler.seed, "sampler");
    }
    if (j.contains("datagen")) {
        const json& d = j["datagen"];
        read_to(d, "N", c.datagen.N, "datagen");
        read_to(d, "m", c.datagen.m, "datagen");
        read_to(d, "lb", c.datagen.lb, "datagen");
        read_to(d, "ub", c.datagen.ub, "datagen");
        if (d.contains("attr_ranges")) {
            const json& r = d["attr_ranges"];
            if (r.contains("age")) {
                auto age = r.at("age");
                if (!age.is_array() || age.size() != 2)
                    throw ConfigError("config: 'datagen.attr_ranges.age' must be [lo, hi]");
                c.datagen.attr_ranges.age_lo = age[0].get<double>();
                c.datagen.attr_ranges.age_hi = age[1].get<double>();
            }
            if (r.contains("pose")) {
                auto pose = r.at("pose");
                if (!pose.is_array() || pose.size() != 3)
                    throw ConfigError("config: 'datagen.attr_ranges.pose' must hold 3 ranges");
                for (int k = 0; k < 3; ++k) {
                    if (!pose[k].is_array() || pose[k].size() != 2)
                        throw ConfigError("config: 'datagen.attr_ranges.pose' entries are [lo, hi]");
                    c.datagen.attr_ranges.pose_lo[k] = pose[k][0].get<double>();
                    c.datagen.attr_ranges.pose_hi[k] = pose[k][1].get<double>();
                }
            }
        }
        read_to(d, "master_seed", c.datagen.master_seed, "datagen");
        read_to(d, "workers", c.datagen.workers, "datagen");
    }
    if (j.contains("paths")) {
        const json& p = j["paths"];
        read_to(p, "checkpoint", c.paths.checkpoint, "paths");
        read_to(p, "dataset", c.paths.dataset, "paths");
        read_to(p, "reports", c.paths.reports, "paths");
    }
    return c;
}

void validate(const RunConfig& c) {
    if (c.world.d < 2 || c.world.n < c.world.d)
        throw ConfigError("config: world needs n >= d >= 2");
    if (c.world.m_a < 1)
        throw ConfigError("config: world.m_a must be >= 1");
    if (c.world.noise_sigma < 0.0)
        throw ConfigError("config: world.noise_sigma must be >= 0");
    if (c.schedule.T < 2)
        throw ConfigError("config: schedule.T must be >= 2");
    if (!(c.schedule.alpha_min > 0.0) || !(c.schedule.alpha_min <= c.schedule.alpha_max) ||
        !(c.schedule.alpha_max < 1.0))
        throw ConfigError("config: schedule alphas must satisfy 0 < alpha_min <= alpha_max < 1");
    if (!std::isfinite(c.train.lr) || c.train.lr < 0.0)
        throw ConfigError("config: train.lr must be finite and >= 0");
    if (c.train.batch == 0)
        throw ConfigError("config: train.batch must be positive");
    if (!(c.train.beta1 >= 0.0 && c.train.beta1 < 1.0) ||
        !(c.train.beta2 >= 0.0 && c.train.beta2 < 1.0))
        throw ConfigError("config: train.betas must lie in [0, 1)");
    if (!(c.train.eps > 0.0))
        throw ConfigError("config: train.eps must be positive");
    if (c.train.k_time == 0 || c.train.k_time % 2 != 0)
        throw ConfigError("config: train.k_time must be a positive even count");
    if (c.train.hidden1 == 0 || c.train.hidden2 == 0)
        throw ConfigError("config: train hidden sizes must be positive");
    if (!(c.sampler.gamma > 0.0))
        throw ConfigError("config: sampler.gamma must be positive");
    if (c.sampler.gamma_mode != "constant" && c.sampler.gamma_mode != "snr_scaled")
        throw ConfigError("config: sampler.gamma_mode must be 'constant' or 'snr_scaled'");
    if (!(c.sampler.kappa > 0.0))
        throw ConfigError("config: sampler.kappa must be positive");
    if (c.datagen.N < 1 || c.datagen.m < 1)
        throw ConfigError("config: datagen.N and datagen.m must be >= 1");
    if (!(c.datagen.lb >= 0.0) || !(c.datagen.lb < c.datagen.ub) || !(c.datagen.ub <= 1.0))
        throw ConfigError("config: datagen nu bounds must satisfy 0 <= lb < ub <= 1");
    const AttrRanges& r = c.datagen.attr_ranges;
    if (r.age_lo < 0.0 || r.age_hi > 100.0 || r.age_lo > r.age_hi)
        throw ConfigError("config: datagen age range must lie inside [0, 100]");
    for (int k = 0; k < 3; ++k)
        if (r.pose_lo[k] < -90.0 || r.pose_hi[k] > 90.0 || r.pose_lo[k] > r.pose_hi[k])
            throw ConfigError("config: datagen pose ranges must lie inside [-90, 90]");
    if (c.datagen.workers == 0)
        throw ConfigError("config: datagen.workers must be >= 1");
}

// "section.key=value" onto a JSON tree; values parsed as JSON when
// possible, else taken as strings.
void apply_override(json& j, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("config: --set expects section.key=value, got '" + assignment + "'");
    std::string path = assignment.substr(0, eq);
    std::string value = assignment.substr(eq + 1);

    json* node = &j;
    std::size_t start = 0;
    for (;;) {
        auto dot = path.find('.', start);
        std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
        if (key.empty())
            throw ConfigError("config: empty key segment in '" + path + "'");
        if (dot == std::string::npos) {
            json parsed = json::parse(value, nullptr, false);
            (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
            break;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

}  // namespace

TrainConfig RunConfig::train_config() const {
    TrainConfig t;
    t.steps = train.steps;
    t.batch = train.batch;
    t.adam = {train.lr, train.beta1, train.beta2, train.eps};
    t.seed = train.seed;
    t.w_attr = train.w_attr;
    return t;
}

SamplerConfig RunConfig::sampler_config() const {
    SamplerConfig s;
    s.gamma = sampler.gamma;
    s.gamma_mode = sampler.gamma_mode == "snr_scaled" ? GammaMode::snr_scaled
                                                      : GammaMode::constant;
    s.kappa = sampler.kappa;
    s.guidance_weight_override = sampler.guidance_weight_override;
    s.attr_guidance = sampler.attr_guidance;
    s.seed = sampler.seed;
    return s;
}

DatasetConfig RunConfig::dataset_config() const {
    DatasetConfig d;
    d.N = datagen.N;
    d.m = datagen.m;
    d.lb = datagen.lb;
    d.ub = datagen.ub;
    d.attr_ranges = datagen.attr_ranges;
    d.master_seed = datagen.master_seed;
    d.workers = datagen.workers;
    d.sampler = sampler_config();
    return d;
}

RunConfig default_config() { return RunConfig{}; }

RunConfig load_config(const std::string& file, const std::vector<std::string>& overrides) {
    json j = to_json(RunConfig{});
    if (!file.empty()) {
        std::ifstream in(file);
        if (!in)
            throw ConfigError("config: cannot open '" + file + "'");
        json from_file = json::parse(in, nullptr, false);
        if (from_file.is_discarded())
            throw ConfigError("config: '" + file + "' is not valid JSON");
        reject_unknown_keys(from_file, j, "");
        j.merge_patch(from_file);
    }
    for (const auto& o : overrides) apply_override(j, o);

    RunConfig c = from_json(j);

    if (const char* env = std::getenv("ID3_SEED")) {
        char* end = nullptr;
        std::uint64_t seed = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0')
            throw ConfigError("config: ID3_SEED must be an unsigned integer");
        c.world.seed = seed;
        c.train.seed = seed;
        c.sampler.seed = seed;
        c.datagen.master_seed = seed;
        c.seed_env_applied = true;
    }

    validate(c);
    return c;
}

std::string dump_config(const RunConfig& config) { return to_json(config).dump(2); }

}  // namespace id3
