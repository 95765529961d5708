#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "id3/checkpoint.hpp"
#include "id3/config.hpp"
#include "id3/datagen.hpp"
#include "id3/eval.hpp"
#include "id3/verify.hpp"

namespace fs = std::filesystem;
using namespace id3;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

void ensure_parent_dir(const std::string& path) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::string report_path(const RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.paths.reports);
    return (fs::path(cfg.paths.reports) / name).string();
}

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used != text.size())
            throw ConfigError(what + ": trailing characters in '" + text + "'");
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError(what + ": '" + text + "' is not a number");
    }
}

int cmd_anchors(const RunConfig& cfg) {
    TammesConfig tcfg;
    tcfg.seed = substream_seed(cfg.datagen.master_seed, 0x7A33ULL);
    AnchorSet anchors = solve_tammes(cfg.datagen.N, cfg.world.d, tcfg);

    std::string path = report_path(cfg, "anchors.csv");
    std::ofstream out(path);
    if (!out) throw IoError("anchors: cannot open " + path);
    out << "anchor";
    for (std::size_t k = 0; k < cfg.world.d; ++k) out << ",w_" << k;
    out << '\n';
    for (std::size_t i = 0; i < anchors.anchors.size(); ++i) {
        out << i;
        for (double v : anchors.anchors[i].components) out << ',' << fmt17(v);
        out << '\n';
    }

    std::cout << "N=" << cfg.datagen.N << " d=" << cfg.world.d
              << " max_pairwise_cosine=" << fmt17(anchors.max_pairwise_cosine) << '\n'
              << "anchors written to " << path << '\n';
    return kExitOk;
}

int cmd_train(const RunConfig& cfg) {
    ToyWorld world = build_toy_world(cfg.world.n, cfg.world.d, cfg.world.m_a,
                                     cfg.world.noise_sigma, cfg.world.seed);
    DiffusionSchedule schedule = build_schedule(cfg.schedule.T, cfg.schedule.alpha_min,
                                                cfg.schedule.alpha_max, cfg.sampler.kappa);
    DenoiserParams init = init_denoiser(cfg.world.n, cfg.world.d, cfg.world.m_a,
                                        cfg.train.k_time, cfg.train.hidden1, cfg.train.hidden2,
                                        cfg.train.seed);
    TrainResult result = train(init, schedule, world, cfg.train_config());

    ensure_parent_dir(cfg.paths.checkpoint);
    write_checkpoint(cfg.paths.checkpoint, world, schedule, result.params);

    std::string loss_path = report_path(cfg, "train_loss.csv");
    std::ofstream out(loss_path);
    if (!out) throw IoError("train: cannot open " + loss_path);
    out << "step,denoising,inner_product,one_step,total\n";
    for (const auto& row : result.log)
        out << row.step << ',' << fmt17(row.mean.denoising) << ','
            << fmt17(row.mean.inner_product) << ',' << fmt17(row.mean.one_step) << ','
            << fmt17(row.mean.total) << '\n';

    if (result.aborted) {
        std::cerr << "train: aborted on non-finite update; last good checkpoint written\n";
        return kExitRuntime;
    }
    std::cout << "checkpoint written to " << cfg.paths.checkpoint << " ("
              << result.log.size() << " steps logged)\n";
    if (!result.log.empty()) {
        double first = result.log.front().mean.total;
        double last = result.log.back().mean.total;
        std::cout << "loss " << fmt17(first) << " -> " << fmt17(last) << '\n';
        if (!std::isfinite(last) || last >= first) {
            std::cerr << "train: final loss did not improve on initial loss\n";
            return kExitRuntime;
        }
    }
    return kExitOk;
}

int cmd_gendata(const RunConfig& cfg) {
    Checkpoint cp = read_checkpoint(cfg.paths.checkpoint);
    DiffusionSchedule schedule = cp.schedule(cfg.sampler.kappa);
    DatasetConfig dcfg = cfg.dataset_config();
    std::string hash = to_hex(fnv1a64_file(cfg.paths.checkpoint));
    SyntheticDataset ds = generate_dataset(cp.params, schedule, cp.world, dcfg, hash);
    ensure_parent_dir(cfg.paths.dataset);
    write_dataset(ds, cfg.paths.dataset);
    std::cout << "dataset with " << ds.records.size() << " records written to "
              << cfg.paths.dataset << '\n';
    return kExitOk;
}

int cmd_sample(const RunConfig& cfg, const std::string& id_vector, const std::string& nu_flag,
               const std::string& attrs, const std::string& trace_path) {
    Checkpoint cp = read_checkpoint(cfg.paths.checkpoint);
    DiffusionSchedule schedule = cp.schedule(cfg.sampler.kappa);

    if (!id_vector.empty() && !nu_flag.empty())
        throw ConfigError("sample: --id-vector and --nu are mutually exclusive");

    RngStream rng(cfg.sampler.seed);
    UnitVector y;
    double nu_used = 1.0;
    if (!id_vector.empty()) {
        Vec v;
        std::stringstream ss(id_vector);
        std::string tok;
        while (std::getline(ss, tok, ',')) v.push_back(parse_double(tok, "sample: --id-vector"));
        y = normalize(v);
        if (y.dim() != cp.world.d)
            throw ConfigError("sample: --id-vector must have dimension " +
                              std::to_string(cp.world.d));
    } else if (!nu_flag.empty()) {
        nu_used = parse_double(nu_flag, "sample: --nu");
        UnitVector anchor = sample_uniform_sphere(cp.world.d, rng);
        PerturbationResult pert = solve_perturbation_closed_form(anchor, {nu_used}, rng);
        y = pert.embeddings[0];
    } else {
        y = sample_uniform_sphere(cp.world.d, rng);
    }

    AttributeVector s;
    if (!attrs.empty()) {
        double age = 50.0, yaw = 0.0, pitch = 0.0, roll = 0.0;
        std::stringstream ss(attrs);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            auto eq = tok.find('=');
            if (eq == std::string::npos)
                throw ConfigError("sample: --attrs expects key=value pairs");
            std::string key = tok.substr(0, eq);
            double val = parse_double(tok.substr(eq + 1), "sample: --attrs");
            if (key == "age")
                age = val;
            else if (key == "yaw")
                yaw = val;
            else if (key == "pitch")
                pitch = val;
            else if (key == "roll")
                roll = val;
            else
                throw ConfigError("sample: unknown attribute '" + key + "'");
        }
        s = AttributeVector(age, yaw, pitch, roll);
    }

    SamplerConfig scfg = cfg.sampler_config();
    scfg.record_trajectory = !trace_path.empty();

    SampleResult result;
    try {
        result = sample(cp.params, schedule, cp.world, y, s, scfg);
    } catch (const SamplingError& e) {
        if (!trace_path.empty()) {
            ensure_parent_dir(trace_path);
            write_trajectory_csv(e.trajectory, trace_path);
            std::cerr << "sample: " << e.what() << "; trajectory dumped to " << trace_path
                      << '\n';
        } else {
            std::cerr << "sample: " << e.what() << '\n';
        }
        return kExitRuntime;
    }

    std::cout << "id,sample,age,pose_yaw,pose_pitch,pose_roll,nu";
    for (std::size_t k = 0; k < cp.world.d; ++k) std::cout << ",y_" << k;
    for (std::size_t k = 0; k < cp.world.n; ++k) std::cout << ",x_" << k;
    std::cout << "\n0,0," << fmt17(s.age) << ',' << fmt17(s.pose[0]) << ',' << fmt17(s.pose[1])
              << ',' << fmt17(s.pose[2]) << ',' << fmt17(nu_used);
    for (double v : y.components) std::cout << ',' << fmt17(v);
    for (double v : result.x0) std::cout << ',' << fmt17(v);
    std::cout << '\n';

    if (!trace_path.empty()) {
        ensure_parent_dir(trace_path);
        write_trajectory_csv(result.trajectory, trace_path);
        std::cerr << "trajectory written to " << trace_path << '\n';
    }
    return kExitOk;
}

int cmd_eval(const RunConfig& cfg, const std::string& dataset_arg, bool with_guidance) {
    std::string dataset_path = dataset_arg.empty() ? cfg.paths.dataset : dataset_arg;
    Checkpoint cp = read_checkpoint(cfg.paths.checkpoint);
    SyntheticDataset ds = read_dataset(dataset_path);

    SimilarityStats stats = compute_similarity_stats(cp.world, ds);
    std::string json_path = report_path(cfg, "eval_stats.json");
    std::ofstream out(json_path);
    if (!out) throw IoError("eval: cannot open " + json_path);
    out << stats_json(stats) << '\n';
    export_histograms(stats, report_path(cfg, "similarity_histogram.csv"));

    std::cout << stats_json(stats) << '\n';

    if (with_guidance) {
        DiffusionSchedule schedule = cp.schedule(cfg.sampler.kappa);
        GuidancePairConfig gcfg;
        gcfg.arm_original = cfg.sampler_config();
        gcfg.arm_original.guidance_weight_override = 0.0;
        gcfg.arm_adjusted = cfg.sampler_config();
        gcfg.attr_ranges = cfg.datagen.attr_ranges;
        gcfg.seed = cfg.sampler.seed;
        GuidanceReport rep = compare_guidance(cp.params, schedule, cp.world, gcfg);
        std::string gpath = report_path(cfg, "guidance_report.json");
        std::ofstream gout(gpath);
        if (!gout) throw IoError("eval: cannot open " + gpath);
        gout << guidance_json(rep) << '\n';
        std::cout << guidance_json(rep) << '\n';
    }
    return kExitOk;
}

int cmd_verify(const RunConfig& cfg) {
    std::vector<VerificationReport> reports;

    AnalyticToy pair;
    pair.density_id = DensityId::gaussian_pair;
    pair.w = 1.0;
    reports.push_back(verify_lemma_a1(pair));
    reports.push_back(verify_score_decomposition(pair));

    DiffusionSchedule tweedie_schedule = build_schedule(10, 0.99, 0.99);
    VerificationReport tweedie = verify_tweedie(tweedie_schedule, 0.7, 5);
    for (std::size_t t = 1; t <= tweedie_schedule.T; ++t) {
        VerificationReport r = verify_tweedie(tweedie_schedule, 0.7, t);
        if (r.max_abs_error > tweedie.max_abs_error) tweedie = r;
    }
    reports.push_back(tweedie);

    LossBoundConfig bound;
    reports.push_back(verify_loss_bound(bound));

    std::string path = report_path(cfg, "verify.jsonl");
    std::ofstream out(path);
    if (!out) throw IoError("verify: cannot open " + path);
    bool all_passed = true;
    for (const auto& r : reports) {
        std::string line = report_json_line(r);
        out << line << '\n';
        std::cout << line << '\n';
        all_passed = all_passed && r.passed;
    }
    return all_passed ? kExitOk : kExitRuntime;
}

int cmd_config_dump(const RunConfig& cfg) {
    std::cout << dump_config(cfg) << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"identity-preserving diffusion toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_file;
    std::vector<std::string> overrides;
    app.add_option("--config", config_file, "JSON config file");
    app.add_option("--set", overrides, "override config entries as section.key=value");

    auto* sc_anchors = app.add_subcommand("anchors", "solve for maximally separated anchors");
    auto* sc_train = app.add_subcommand("train", "train the conditional denoiser");
    auto* sc_sample = app.add_subcommand("sample", "draw one conditioned sample");
    auto* sc_gendata = app.add_subcommand("gendata", "generate a labeled synthetic dataset");
    auto* sc_eval = app.add_subcommand("eval", "similarity statistics over a dataset");
    auto* sc_verify = app.add_subcommand("verify", "run the numerical oracle checks");
    auto* sc_config = app.add_subcommand("config", "configuration tools");
    auto* sc_config_dump = sc_config->add_subcommand("dump", "print the effective config");
    sc_config->require_subcommand(1);

    std::string id_vector, nu_flag, attrs, trace_path;
    sc_sample->add_option("--id-vector", id_vector, "identity embedding, comma separated");
    sc_sample->add_option("--nu", nu_flag, "similarity target to a random anchor");
    sc_sample->add_option("--attrs", attrs, "age=..,yaw=..,pitch=..,roll=..");
    sc_sample->add_option("--trace", trace_path, "write the chain trajectory CSV here");

    std::size_t workers_flag = 0;
    sc_gendata->add_option("--workers", workers_flag, "identity-level worker threads");

    std::string dataset_arg;
    bool with_guidance = false;
    sc_eval->add_option("dataset", dataset_arg, "dataset CSV (defaults to paths.dataset)");
    sc_eval->add_flag("--guidance", with_guidance, "also compare guided vs unguided sampling");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        RunConfig cfg = load_config(config_file, overrides);
        if (cfg.seed_env_applied)
            std::cerr << "ID3_SEED set: overriding every configured seed\n";
        if (workers_flag > 0) cfg.datagen.workers = workers_flag;

        if (sc_anchors->parsed()) return cmd_anchors(cfg);
        if (sc_train->parsed()) return cmd_train(cfg);
        if (sc_sample->parsed()) return cmd_sample(cfg, id_vector, nu_flag, attrs, trace_path);
        if (sc_gendata->parsed()) return cmd_gendata(cfg);
        if (sc_eval->parsed()) return cmd_eval(cfg, dataset_arg, with_guidance);
        if (sc_verify->parsed()) return cmd_verify(cfg);
        if (sc_config_dump->parsed()) return cmd_config_dump(cfg);
        std::cerr << "no subcommand selected\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
