#include "neuroprobe/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "neuroprobe/ablation.hpp"
#include "neuroprobe/detect.hpp"
#include "neuroprobe/error.hpp"
#include "neuroprobe/gwf.hpp"
#include "neuroprobe/image.hpp"
#include "neuroprobe/latents.hpp"
#include "neuroprobe/metrics.hpp"
#include "neuroprobe/parallel.hpp"
#include "neuroprobe/rates.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace neuroprobe::cli {

namespace {

bool writes_directory(const std::string& command) {
    return command == "repair" || command == "heatmap" || command == "grid";
}

std::string require_string(const json& p, const char* key) {
    if (!p.contains(key) || !p[key].is_string() || p[key].get<std::string>().empty()) {
        throw ContractError(std::string("missing required option --") + key);
    }
    return p[key].get<std::string>();
}

std::string file_digest(const fs::path& path) { return to_hex(sha256(read_file(path))); }

/// Collects output files and builds the run manifest.
class Run {
public:
    Run(std::string command, json params) : command_(std::move(command)), params_(std::move(params)) {
        out_ = require_string(params_, "out");
        if (writes_directory(command_)) fs::create_directories(out_);
        manifest_ = {{"tool", kToolVersion}, {"command", command_}, {"params", params_}};
        manifest_["inputs"] = json::object();
        manifest_["outputs"] = json::array();
    }

    const json& params() const { return params_; }

    void input(const char* role, const fs::path& path, const std::string& digest) {
        manifest_["inputs"][role] = {{"path", path.string()}, {"sha256", digest}};
    }
    void note(const char* key, json value) { manifest_[key] = std::move(value); }

    // `name` is relative to the output directory; file commands use the
    // basename of --out.
    void emit(const std::string& name, std::span<const std::uint8_t> bytes) {
        const fs::path target = writes_directory(command_) ? out_ / name : out_;
        write_file(target, bytes);
        manifest_["outputs"].push_back({{"file", name}, {"sha256", to_hex(sha256(bytes))}});
    }
    void emit_text(const std::string& name, const std::string& text) {
        emit(name, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
    }
    std::string out_name() const { return out_.filename().string(); }

    json finish() {
        const fs::path path = writes_directory(command_) ? out_ / "manifest.json" : fs::path(out_.string() + ".manifest.json");
        const std::string text = manifest_.dump(2) + "\n";
        write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
        return manifest_;
    }

private:
    std::string command_;
    json params_;
    fs::path out_;
    json manifest_;
};

Generator load_model(Run& run) {
    const fs::path path = require_string(run.params(), "model");
    const Bytes bytes = read_file(path);
    Generator g = load_gwf(bytes, path.string());
    run.input("model", path, to_hex(g.digest()));
    run.note("model_digest", to_hex(g.digest()));
    return g;
}

RateTable load_rates(Run& run, const Generator& g) {
    const fs::path path = require_string(run.params(), "rates");
    const Bytes bytes = read_file(path);
    RateTable t = read_grt(bytes, path.string());
    check_compatible(t, g);
    const std::string digest = to_hex(sha256(bytes));
    run.input("rates", path, digest);
    run.note("rates_digest", digest);
    return t;
}

LatentBatch load_latents(Run& run, std::size_t dim) {
    const json& p = run.params();
    if (p.contains("latents")) {
        const fs::path path = p["latents"].get<std::string>();
        const Bytes bytes = read_file(path);
        LatentBatch b = read_glz(bytes, path.string());
        if (b.dim != dim) {
            throw ShapeError(path.string() + ": latent dim " + std::to_string(b.dim) + " does not match model latent_dim " +
                             std::to_string(dim));
        }
        run.input("latents", path, to_hex(sha256(bytes)));
        return b;
    }
    if (!p.contains("count") || !p.contains("seed")) {
        throw ContractError("latents required: pass --latents FILE or --count N --seed S");
    }
    const auto count = p["count"].get<std::size_t>();
    if (count == 0) throw ContractError("--count must be >= 1");
    const auto seed = p["seed"].get<std::uint64_t>();
    run.note("sampler", {{"name", kSamplerName}, {"seed", seed}, {"count", count}});
    return LatentBatch::sample(seed, count, dim);
}

std::vector<std::size_t> selection(const json& p, std::size_t count) {
    std::vector<std::size_t> sel;
    if (p.contains("select")) {
        for (const auto& v : p["select"]) {
            const auto i = v.get<std::size_t>();
            if (i >= count) {
                throw ContractError("selected latent " + std::to_string(i) + " out of range (batch has " +
                                    std::to_string(count) + ")");
            }
            sel.push_back(i);
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) sel.push_back(i);
    }
    return sel;
}

AblationConfig resolve_ablation(const json& p, const GeneratorSpec& spec) {
    AblationConfig cfg;
    AblationPreset preset = default_preset_for(spec);
    if (p.contains("preset")) {
        const auto name = p["preset"].get<std::string>();
        auto found = find_preset(name);
        if (!found) throw ContractError("unknown preset \"" + name + "\" (expected pggan-early or style2-early)");
        preset = *found;
    }
    cfg.target_layers = preset.layers;
    cfg.threshold = preset.threshold;
    if (p.contains("layers")) cfg.target_layers = p["layers"].get<std::vector<std::size_t>>();
    if (p.contains("threshold")) cfg.threshold = p["threshold"].get<double>();
    if (!(cfg.threshold >= 0.0 && cfg.threshold <= 1.0)) throw ContractError("--threshold must be in [0,1]");
    cfg.mode = parse_mode(p.value("mode", std::string("lr")), &cfg.random_p);
    cfg.random_seed = p.value("random_seed", std::uint64_t{0});
    for (std::size_t l : cfg.target_layers) {
        if (l >= spec.num_layers()) {
            throw ContractError("layer " + std::to_string(l) + " out of range (model has " +
                                std::to_string(spec.num_layers()) + " layers)");
        }
    }
    return cfg;
}

json ablation_json(const AblationConfig& cfg) {
    return {{"layers", cfg.target_layers}, {"threshold", cfg.threshold}, {"mode", mode_name(cfg)},
            {"random_seed", cfg.random_seed}};
}

std::string padded(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%05zu", i);
    return buf;
}

std::vector<ArtifactScore> score_all(const Generator& g, const LatentBatch& latents, const ArtifactScorer& scorer) {
    std::vector<ArtifactScore> scores(latents.count);
    parallel_chunks(latents.count, default_thread_count(), [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t i = begin; i < end; ++i) scores[i] = scorer.score(g.forward(latents.row(i)), i);
    });
    return scores;
}

void cmd_profile(Run& run) {
    const Generator g = load_model(run);
    const json& p = run.params();
    RateTable table;
    if (p.contains("latents")) {
        table = estimate_rates(g, load_latents(run, g.spec().latent_dim));
    } else {
        if (!p.contains("count")) throw ContractError("missing --samples/--count");
        const auto n = p["count"].get<std::size_t>();
        if (n == 0) throw ContractError("--samples must be >= 1");
        const auto seed = p.value("seed", std::uint64_t{0});
        run.note("sampler", {{"name", kSamplerName}, {"seed", seed}, {"count", n}});
        table = estimate_rates(g, n, seed);
    }
    run.emit(run.out_name(), write_grt(table));
}

void cmd_latents(Run& run) {
    const json& p = run.params();
    std::size_t dim = 0;
    if (p.contains("model")) {
        dim = load_model(run).spec().latent_dim;
    } else if (p.contains("dim")) {
        dim = p["dim"].get<std::size_t>();
    }
    if (dim == 0) throw ContractError("latents needs --model or --dim");
    run.emit(run.out_name(), write_glz(load_latents(run, dim)));
}

void cmd_score(Run& run) {
    const Generator g = load_model(run);
    const RateTable rates = load_rates(run, g);
    const LatentBatch latents = load_latents(run, g.spec().latent_dim);
    const AblationConfig cfg = resolve_ablation(run.params(), g.spec());
    run.note("scoring", {{"layers", cfg.target_layers}, {"threshold", cfg.threshold}});
    const ArtifactScorer scorer(rates, cfg.target_layers, cfg.threshold);
    run.emit_text(run.out_name(), scores_to_csv(score_all(g, latents, scorer)));
}

void cmd_repair(Run& run) {
    const Generator g = load_model(run);
    const AblationConfig cfg = resolve_ablation(run.params(), g.spec());
    std::optional<RateTable> rates;
    if (cfg.mode != AblationMode::Random || run.params().contains("rates")) rates = load_rates(run, g);
    const LatentBatch latents = load_latents(run, g.spec().latent_dim);
    const auto sel = selection(run.params(), latents.count);
    run.note("ablation", ablation_json(cfg));

    const AblationPlan plan(g, rates ? &*rates : nullptr, cfg);
    std::vector<Bytes> before(sel.size()), after(sel.size());
    parallel_chunks(sel.size(), default_thread_count(), [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t s = begin; s < end; ++s) {
            const auto z = latents.row(sel[s]);
            before[s] = encode_png(to_rgb8(g.forward(z).image));
            after[s] = encode_png(to_rgb8(plan.run(z, sel[s]).image));
        }
    });
    for (std::size_t s = 0; s < sel.size(); ++s) {
        run.emit(padded(sel[s]) + "_before.png", before[s]);
        run.emit(padded(sel[s]) + "_after.png", after[s]);
    }
}

void cmd_heatmap(Run& run) {
    const Generator g = load_model(run);
    const RateTable rates = load_rates(run, g);
    const LatentBatch latents = load_latents(run, g.spec().latent_dim);
    const auto sel = selection(run.params(), latents.count);
    const AblationConfig cfg = resolve_ablation(run.params(), g.spec());
    run.note("heatmap", {{"layers", cfg.target_layers}, {"threshold", cfg.threshold}});
    for (std::size_t i : sel) {
        const LayerTrace trace = g.forward(latents.row(i));
        for (std::size_t layer : cfg.target_layers) {
            const Heatmap map = heatmap(trace, rates, layer, cfg.threshold);
            run.emit(padded(i) + "_layer" + std::to_string(layer) + ".png", encode_png(render_overlay(trace.image, map)));
        }
    }
}

void cmd_grid(Run& run) {
    const Generator g = load_model(run);
    const RateTable rates = load_rates(run, g);
    const LatentBatch latents = load_latents(run, g.spec().latent_dim);
    const json& p = run.params();
    const AblationConfig cfg = resolve_ablation(p, g.spec());
    const auto top_k = p.value("top", std::size_t{8});
    const auto bottom_k = p.value("bottom", std::size_t{8});
    const auto cols = p.value("cols", std::size_t{8});
    const auto pad = p.value("pad", std::size_t{2});
    run.note("scoring", {{"layers", cfg.target_layers}, {"threshold", cfg.threshold}});

    const ArtifactScorer scorer(rates, cfg.target_layers, cfg.threshold);
    const auto scores = score_all(g, latents, scorer);
    const Ranking ranking = rank_images(scores, top_k, bottom_k);
    auto render = [&](const std::vector<std::size_t>& order) {
        std::vector<RgbImage> tiles;
        for (std::size_t pos : order) tiles.push_back(to_rgb8(g.forward(latents.row(scores[pos].index)).image));
        return encode_png(make_grid(tiles, cols, pad));
    };
    if (top_k > 0) run.emit("top.png", render(ranking.top));
    if (bottom_k > 0) run.emit("bottom.png", render(ranking.bottom));
    run.emit_text("scores.csv", scores_to_csv(scores));
}

void cmd_features(Run& run) {
    const Generator g = load_model(run);
    const LatentBatch latents = load_latents(run, g.spec().latent_dim);
    const json& p = run.params();
    const auto side = p.value("side", std::size_t{8});
    std::optional<RateTable> rates;
    std::optional<AblationPlan> plan;
    AblationConfig cfg;
    if (p.value("ablate", false)) {
        cfg = resolve_ablation(p, g.spec());
        if (cfg.mode != AblationMode::Random || p.contains("rates")) rates = load_rates(run, g);
        plan.emplace(g, rates ? &*rates : nullptr, cfg);
        run.note("ablation", ablation_json(cfg));
    }
    std::vector<Tensor3> images(latents.count);
    parallel_chunks(latents.count, default_thread_count(), [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t i = begin; i < end; ++i) {
            images[i] = plan ? plan->run(latents.row(i), i).image : g.forward(latents.row(i)).image;
        }
    });
    FeatureSet f = pixel_features(images, side);
    f.source = p.value("source", f.source);
    run.emit(run.out_name(), write_fts(f));
}

void cmd_metrics(Run& run) {
    const json& p = run.params();
    auto load = [&](const char* role) {
        const fs::path path = require_string(p, role);
        const Bytes bytes = read_file(path);
        FeatureSet f = read_fts(bytes, path.string());
        f.validate();
        run.input(role, path, to_hex(sha256(bytes)));
        return f;
    };
    const FeatureSet real = load("real");
    const FeatureSet fake = load("fake");
    MetricReport report;
    report.k = p.value("k", std::size_t{3});
    if (p.value("fid", true)) report.fid = fid(real, fake);
    report.pr = precision_recall(real, fake, report.k);
    report.realism = realism_score(real, fake, report.k);
    run.emit_text(run.out_name(), report.to_json().dump(2) + "\n");
}

fs::path absolute_path(const std::string& s) { return fs::absolute(fs::path(s)).lexically_normal(); }

// Input paths are stored absolute so a manifest replays from any directory.
json canonical_params(json params) {
    for (const char* key : {"model", "rates", "latents", "real", "fake", "out"}) {
        if (params.contains(key) && params[key].is_string() && !params[key].get<std::string>().empty()) {
            params[key] = absolute_path(params[key].get<std::string>()).string();
        }
    }
    return params;
}

std::vector<std::size_t> parse_index_list(const std::string& text) {
    std::vector<std::size_t> out;
    if (text.empty() || text == "none") return out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &used);
        } catch (...) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw ContractError("bad index list \"" + text + "\"");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

}  // namespace

json execute(const std::string& command, const json& raw_params) {
    Run run(command, canonical_params(raw_params));
    if (command == "profile") {
        cmd_profile(run);
    } else if (command == "latents") {
        cmd_latents(run);
    } else if (command == "score") {
        cmd_score(run);
    } else if (command == "repair") {
        cmd_repair(run);
    } else if (command == "heatmap") {
        cmd_heatmap(run);
    } else if (command == "grid") {
        cmd_grid(run);
    } else if (command == "features") {
        cmd_features(run);
    } else if (command == "metrics") {
        cmd_metrics(run);
    } else {
        throw ContractError("unknown command \"" + command + "\"");
    }
    return run.finish();
}

json replay(const std::string& manifest_path, const std::string& out) {
    const Bytes bytes = read_file(manifest_path);
    const json manifest = json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (manifest.is_discarded() || !manifest.contains("command") || !manifest.contains("params")) {
        throw FormatError(manifest_path + ": not a run manifest", 0);
    }
    if (manifest.contains("inputs")) {
        for (const auto& [role, input] : manifest["inputs"].items()) {
            const std::string path = input.at("path").get<std::string>();
            if (file_digest(path) != input.at("sha256").get<std::string>()) {
                throw DigestError("replay input " + role + " (" + path + ") changed since the recorded run");
            }
        }
    }
    json params = manifest["params"];
    if (!out.empty()) params["out"] = out;
    const json fresh = execute(manifest["command"].get<std::string>(), params);

    const json& expected = manifest["outputs"];
    const json& got = fresh["outputs"];
    if (expected.size() != got.size()) {
        throw DigestError("replay produced " + std::to_string(got.size()) + " outputs, manifest lists " +
                          std::to_string(expected.size()));
    }
    // File commands name their single output after --out, which replay may change.
    const bool compare_names = writes_directory(manifest["command"].get<std::string>());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (expected[i]["sha256"] != got[i]["sha256"] || (compare_names && expected[i]["file"] != got[i]["file"])) {
            throw DigestError("replay output " + got[i]["file"].get<std::string>() + " differs from the manifest");
        }
    }
    return fresh;
}

int run(const std::vector<std::string>& args) {
    CLI::App app{"Activation-rate profiling, artifact scoring and ablation repair for convolutional generators",
                 "neuroprobe"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    struct Opts {
        std::string model, rates, latents, out, preset, mode, layers, select, real, fake, manifest, source;
        std::optional<std::size_t> count, k, side, top, bottom, cols, pad, dim;
        std::optional<std::uint64_t> seed, random_seed;
        std::optional<double> threshold;
        bool ablate = false, no_fid = false;
    } o;

    auto model_opt = [&](CLI::App* c, bool required = true) {
        auto* opt = c->add_option("--model", o.model, "generator weight file (GWF1)");
        if (required) opt->required();
    };
    auto latent_opts = [&](CLI::App* c) {
        auto* file = c->add_option("--latents", o.latents, "latent batch file (GLZ1)");
        auto* count = c->add_option("--count", o.count, "number of latents to sample");
        c->add_option("--seed", o.seed, "sampler seed");
        file->excludes(count);
    };
    auto ablation_opts = [&](CLI::App* c) {
        c->add_option("--preset", o.preset, "pggan-early | style2-early");
        c->add_option("--layers", o.layers, "comma-separated target layers; 'none' for no layers");
        c->add_option("--threshold", o.threshold, "rate threshold R in [0,1]");
    };

    auto* profile = app.add_subcommand("profile", "estimate per-neuron activation rates (GRT1)");
    model_opt(profile);
    latent_opts(profile);
    profile->add_option("--samples", o.count, "alias of --count");
    profile->add_option("--out", o.out)->required();

    auto* latents = app.add_subcommand("latents", "sample a latent batch into a GLZ1 file");
    model_opt(latents, false);
    latents->add_option("--dim", o.dim, "latent dimension when no --model is given");
    latents->add_option("--count", o.count)->required();
    latents->add_option("--seed", o.seed)->required();
    latents->add_option("--out", o.out)->required();

    auto* score = app.add_subcommand("score", "count activated low-rate neurons per latent (CSV)");
    model_opt(score);
    score->add_option("--rates", o.rates)->required();
    latent_opts(score);
    ablation_opts(score);
    score->add_option("--out", o.out)->required();

    auto* repair = app.add_subcommand("repair", "write before/after images of ablation repair");
    model_opt(repair);
    repair->add_option("--rates", o.rates);
    latent_opts(repair);
    ablation_opts(repair);
    repair->add_option("--mode", o.mode, "lr | hr | random:<p>");
    repair->add_option("--random-seed", o.random_seed);
    repair->add_option("--select", o.select, "comma-separated latent indices (default: all)");
    repair->add_option("--out", o.out, "output directory")->required();

    auto* heat = app.add_subcommand("heatmap", "render low-rate neuron ratio overlays");
    model_opt(heat);
    heat->add_option("--rates", o.rates)->required();
    latent_opts(heat);
    ablation_opts(heat);
    heat->add_option("--select", o.select);
    heat->add_option("--out", o.out, "output directory")->required();

    auto* grid = app.add_subcommand("grid", "top/bottom ranked image grids");
    model_opt(grid);
    grid->add_option("--rates", o.rates)->required();
    latent_opts(grid);
    ablation_opts(grid);
    grid->add_option("--top", o.top);
    grid->add_option("--bottom", o.bottom);
    grid->add_option("--cols", o.cols);
    grid->add_option("--pad", o.pad);
    grid->add_option("--out", o.out, "output directory")->required();

    auto* features = app.add_subcommand("features", "pixel features of generated images (FTS1)");
    model_opt(features);
    features->add_option("--rates", o.rates);
    latent_opts(features);
    ablation_opts(features);
    features->add_option("--mode", o.mode);
    features->add_option("--random-seed", o.random_seed);
    features->add_flag("--ablate", o.ablate, "generate with ablation applied");
    features->add_option("--side", o.side, "feature grid side (d = side^2)");
    features->add_option("--source", o.source);
    features->add_option("--out", o.out)->required();

    auto* metrics = app.add_subcommand("metrics", "FID, precision/recall and realism between feature files");
    metrics->add_option("--real", o.real)->required();
    metrics->add_option("--fake", o.fake)->required();
    metrics->add_option("--k", o.k, "neighbourhood size (default 3)");
    metrics->add_flag("--no-fid", o.no_fid);
    metrics->add_option("--out", o.out)->required();

    auto* replay_cmd = app.add_subcommand("replay", "re-run a manifest and verify byte-identical outputs");
    replay_cmd->add_option("--manifest", o.manifest)->required();
    replay_cmd->add_option("--out", o.out, "alternative output location");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        json manifest;
        if (replay_cmd->parsed()) {
            manifest = replay(o.manifest, o.out);
        } else {
            const std::string command = app.get_subcommands().front()->get_name();
            json p;
            auto put_str = [&](const char* key, const std::string& v) {
                if (!v.empty()) p[key] = v;
            };
            put_str("model", o.model);
            put_str("rates", o.rates);
            put_str("latents", o.latents);
            put_str("preset", o.preset);
            put_str("mode", o.mode);
            put_str("real", o.real);
            put_str("fake", o.fake);
            put_str("source", o.source);
            p["out"] = o.out;
            if (o.count) p["count"] = *o.count;
            if (o.seed) p["seed"] = *o.seed;
            if (o.random_seed) p["random_seed"] = *o.random_seed;
            if (o.threshold) p["threshold"] = *o.threshold;
            if (o.k) p["k"] = *o.k;
            if (o.side) p["side"] = *o.side;
            if (o.top) p["top"] = *o.top;
            if (o.bottom) p["bottom"] = *o.bottom;
            if (o.cols) p["cols"] = *o.cols;
            if (o.pad) p["pad"] = *o.pad;
            if (o.dim) p["dim"] = *o.dim;
            if (o.ablate) p["ablate"] = true;
            if (o.no_fid) p["fid"] = false;
            for (CLI::App* sub : app.get_subcommands()) {
                auto* layers_opt = sub->get_option_no_throw("--layers");
                auto* select_opt = sub->get_option_no_throw("--select");
                if (layers_opt && layers_opt->count()) p["layers"] = parse_index_list(o.layers);
                if (select_opt && select_opt->count()) p["select"] = parse_index_list(o.select);
            }
            manifest = execute(command, p);
        }
        std::cout << manifest.dump(2) << "\n";
        return kOk;
    } catch (const ContractError& e) {
        std::cerr << "neuroprobe: " << e.what() << "\n";
        return kUsage;
    } catch (const NumericError& e) {
        std::cerr << "neuroprobe: numeric failure: " << e.what() << "\n";
        return kNumeric;
    } catch (const Error& e) {
        // Format, digest, shape and I/O errors.
        std::cerr << "neuroprobe: " << e.what() << "\n";
        return kFormat;
    } catch (const std::exception& e) {
        std::cerr << "neuroprobe: internal error: " << e.what() << "\n";
        return kInternal;
    }
}

}  // namespace neuroprobe::cli
