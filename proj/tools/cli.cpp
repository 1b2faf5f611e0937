#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "lusd/engine.hpp"
#include "lusd/error.hpp"
#include "lusd/gmm_backend.hpp"
#include "lusd/image_io.hpp"
#include "lusd/metrics.hpp"
#include "lusd/protocol.hpp"
#include "lusd/remote_backend.hpp"
#include "lusd/wire_server.hpp"

namespace lusd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  2  invalid flags, config file or config value\n"
    "  3  backend unreachable (transport failure)\n"
    "  4  protocol error or protocol version mismatch\n"
    "  5  backend returned an error payload\n"
    "  6  runtime failure (prompt diffing, shapes, file IO)";

std::string dashed(std::string s) {
    for (char& c : s) {
        if (c == '_') c = '-';
    }
    return s;
}

/// Registers one string-valued flag per config key (dashed and underscore
/// spellings) plus --config. Values land in `overrides` in key order.
struct ConfigFlags {
    std::string config_file;
    std::map<std::string, std::string> values;

    void attach(CLI::App& app) {
        app.add_option("--config", config_file, "Config file (flat key = value); CLI flags override it")
            ->check(CLI::ExistingFile);
        for (const std::string& key : config_keys()) {
            std::string names = "--" + key;
            if (key.find('_') != std::string::npos) names = "--" + dashed(key) + "," + names;
            app.add_option_function<std::string>(
                   names, [this, key](const std::string& v) { values[key] = v; },
                   "Config key '" + key + "' (default " + get_config_value(EngineConfig{}, key) + ")")
                ->group("Engine configuration");
        }
    }

    EngineConfig resolve() const {
        std::vector<std::pair<std::string, std::string>> ov(values.begin(), values.end());
        std::optional<fs::path> file;
        if (!config_file.empty()) file = config_file;
        return resolve_config(file, ov);
    }
};

struct BackendFlags {
    std::string spec = "analytic";
    std::string world;
    int retries = 2;

    void attach(CLI::App& app) {
        app.add_option("--backend", spec, "'analytic' or the URL of a wire-protocol service")
            ->capture_default_str();
        app.add_option("--world", world, "World file for the analytic backend (default: built-in demo world)");
        app.add_option("--retries", retries, "Retries on transport failure")->capture_default_str();
    }

    std::unique_ptr<DenoiserBackend> make() const { return make_backend(spec, world, retries); }
};

std::vector<std::string> split_nouns(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != ' ' || !cur.empty()) {
            cur += c;
        }
    }
    while (!cur.empty() && cur.back() == ' ') cur.pop_back();
    if (!cur.empty()) out.push_back(cur);
    return out;
}

/// Writes via a sibling temp file so a failed run never leaves a partial
/// output behind.
void commit_file(const fs::path& tmp, const fs::path& dst) {
    std::error_code ec;
    fs::rename(tmp, dst, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " to " + dst.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw IoError("cannot write " + path.string());
}

fs::path tmp_sibling(const fs::path& p) { return p.parent_path() / ("." + p.stem().string() + ".tmp" + p.extension().string()); }

std::string fmt(const std::optional<double>& v, int prec = 4) {
    if (!v) return "-";
    std::ostringstream s;
    s << std::fixed << std::setprecision(prec) << *v;
    return s.str();
}

// ---- subcommands ----------------------------------------------------------

struct EditArgs {
    std::string image;
    std::string src_prompt;
    std::string tgt_prompt;
    std::string nouns;
    std::string out = "edited.png";
    std::string telemetry;
    bool quiet = false;
};

int cmd_edit(const EditArgs& a, const ConfigFlags& cf, const BackendFlags& bf, std::ostream& out) {
    const EngineConfig cfg = cf.resolve();
    if (a.tgt_prompt.empty()) throw ConfigError("--tgt-prompt must not be empty");
    if (a.src_prompt.empty()) throw ConfigError("--src-prompt must not be empty");

    const fs::path out_png = a.out;
    const fs::path out_json = a.telemetry.empty() ? fs::path(out_png).replace_extension(".json") : fs::path(a.telemetry);

    EditRequest req;
    req.source_image = read_image(a.image);
    req.y_src = a.src_prompt;
    req.y_tgt = a.tgt_prompt;
    req.nouns = split_nouns(a.nouns);
    req.config = cfg;

    auto backend = bf.make();
    const EditResult res = run_edit(req, *backend);

    if (!out_png.parent_path().empty()) fs::create_directories(out_png.parent_path());
    if (!out_json.parent_path().empty()) fs::create_directories(out_json.parent_path());
    const fs::path tmp_png = tmp_sibling(out_png);
    const fs::path tmp_json = tmp_sibling(out_json);
    try {
        write_image(tmp_png, res.image);
        write_text(tmp_json, telemetry_json(res, cfg).dump(2) + "\n");
        commit_file(tmp_png, out_png);
        commit_file(tmp_json, out_json);
    } catch (...) {
        std::error_code ec;
        fs::remove(tmp_png, ec);
        fs::remove(tmp_json, ec);
        throw;
    }

    if (!a.quiet) {
        int accepted = 0;
        for (const StepRecord& r : res.telemetry) accepted += r.accepted ? 1 : 0;
        out << "edit tokens: " << (res.diff.noun_words.empty() ? "(none)" : "");
        for (std::size_t i = 0; i < res.diff.noun_words.size(); ++i) {
            out << (i ? ", " : "") << res.diff.noun_words[i];
        }
        out << "\naccepted steps: " << accepted << "/" << res.telemetry.size() << "\n"
            << "wrote " << out_png.string() << " and " << out_json.string() << "\n";
    }
    return kOk;
}

struct EvalArgs {
    std::string manifest;
    std::string out_dir = "eval_out";
    int workers = 1;
    std::size_t min_count = 30;
    bool save_images = false;
};

int cmd_eval(const EvalArgs& a, const ConfigFlags& cf, const BackendFlags& bf, std::ostream& out) {
    const EngineConfig cfg = cf.resolve();
    if (a.workers < 1) throw ConfigError("--workers must be >= 1");
    const auto manifest = load_manifest(a.manifest);
    auto backend = bf.make();

    BenchmarkOptions opts;
    opts.workers = a.workers;
    opts.min_count = a.min_count;
    if (a.save_images) opts.image_dir = fs::path(a.out_dir) / "images";
    const EvalReport report = run_benchmark(manifest, cfg, *backend, opts);
    write_report(report, a.out_dir);

    out << std::left << std::setw(24) << "id" << std::setw(8) << "ok" << std::setw(10) << "clip_r"
        << std::setw(10) << "clip_t" << std::setw(10) << "l1_gt" << "accepted\n";
    std::size_t failed = 0;
    for (const ExampleResult& r : report.examples) {
        failed += r.ok ? 0 : 1;
        out << std::left << std::setw(24) << r.id << std::setw(8) << (r.ok ? "yes" : "FAIL") << std::setw(10)
            << fmt(r.clip_r) << std::setw(10) << fmt(r.clip_t) << std::setw(10) << fmt(r.l1_vs_gt)
            << r.accepted_steps << "\n";
        if (!r.ok) out << "    " << r.error << "\n";
    }
    out << "\nexamples: " << report.examples.size() << " (" << failed << " failed)\n"
        << "CLIP-AUC: " << fmt(report.clip_auc) << "\n"
        << "mean CLIP-T: " << fmt(report.mean_clip_t) << "\n"
        << "mean L1: " << fmt(report.mean_l1) << "\n"
        << "L1*: " << (report.l1_star ? fmt(report.l1_star->value, 5) : std::string("-")) << "\n"
        << "CLIP-I*: " << (report.clip_i_star ? fmt(report.clip_i_star->value, 5) : std::string("-")) << "\n";
    for (const std::string& w : report.warnings) out << "warning: " << w << "\n";
    out << "report written to " << a.out_dir << "\n";
    return kOk;
}

int cmd_handshake(const BackendFlags& bf, bool full, std::ostream& out) {
    auto backend = bf.make();
    const BackendHandshake h = backend->handshake();
    if (h.protocol_version != kProtocolVersion) {
        throw ProtocolError("backend speaks '" + h.protocol_version + "', expected '" + kProtocolVersion + "'");
    }
    h.validate();
    json j = wire::encode_handshake(h);
    if (!full) {
        const auto& ab = h.schedule.values();
        j["schedule"] = {{"steps", ab.size()},
                         {"alpha_bar_first", ab.empty() ? 0.0 : ab.front()},
                         {"alpha_bar_last", ab.empty() ? 0.0 : ab.back()}};
    }
    out << j.dump(2) << "\n";
    return kOk;
}

int cmd_demo_world(const std::string& out_dir, std::ostream& out) {
    const fs::path dir = out_dir;
    fs::create_directories(dir);
    const GmmWorld world = make_demo_world();
    save_world(dir / "world.json", world);

    GmmBackend backend(world);
    auto mean_of = [&](const std::string& cls) -> const GridTensor& {
        for (const GmmComponent& c : world.components) {
            if (c.class_label == cls) return c.mean;
        }
        throw Error("demo world has no class " + cls);
    };
    write_image(dir / "source.png", backend.decode(mean_of("meadow")));
    write_image(dir / "gt_cat.png", backend.decode(mean_of("cat")));
    write_image(dir / "gt_dog.png", backend.decode(mean_of("dog")));

    std::ofstream m(dir / "manifest.jsonl");
    if (!m) throw IoError("cannot write " + (dir / "manifest.jsonl").string());
    m << json{{"id", "cat"},          {"source_image", "source.png"}, {"y_src", kDemoSourcePrompt},
              {"y_tgt", kDemoCatPrompt}, {"y_local", "cat"},           {"ground_truth", "gt_cat.png"},
              {"instruction", "add a cat"}}
             .dump()
      << "\n"
      << json{{"id", "dog"},          {"source_image", "source.png"}, {"y_src", kDemoSourcePrompt},
              {"y_tgt", kDemoDogPrompt}, {"y_local", "dog"},           {"ground_truth", "gt_dog.png"},
              {"instruction", "put a dog in the meadow"}}
             .dump()
      << "\n";

    out << "wrote world.json, source.png, gt_cat.png, gt_dog.png, manifest.jsonl to " << dir.string() << "\n"
        << "try:\n  lusd edit " << (dir / "source.png").string() << " --world " << (dir / "world.json").string()
        << " --src-prompt \"" << kDemoSourcePrompt << "\" --tgt-prompt \"" << kDemoCatPrompt
        << "\" --steps 100 --out cat.png\n";
    return kOk;
}

int cmd_serve(const BackendFlags& bf, const std::string& host, int port, std::ostream& out) {
    if (bf.spec != "analytic") throw ConfigError("serve only hosts the analytic backend");
    WireServer server(bf.make());
    out << "serving " << kProtocolVersion << " on http://" << host << ":" << port << std::endl;
    server.listen(host, port);
    return kOk;
}

}  // namespace

int exit_code_for_current_exception(std::ostream& err) {
    try {
        throw;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const TransportError& e) {
        err << "transport error: " << e.what() << "\n";
        return kTransport;
    } catch (const ProtocolError& e) {
        err << "protocol error: " << e.what() << "\n";
        return kProtocol;
    } catch (const BackendError& e) {
        err << "backend error: " << e.what() << "\n";
        return kBackend;
    } catch (const PromptError& e) {
        err << "prompt error: " << e.what() << "\n";
        return kRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kRuntime;
    }
}

EngineConfig resolve_config(const std::optional<fs::path>& file,
                            const std::vector<std::pair<std::string, std::string>>& overrides) {
    EngineConfig cfg;
    if (file) apply_config_file(cfg, *file);
    for (const auto& [k, v] : overrides) set_config_value(cfg, k, v);
    cfg.validate();
    return cfg;
}

std::unique_ptr<DenoiserBackend> make_backend(const std::string& spec, const std::string& world_path, int retries) {
    if (spec == "analytic") {
        return std::make_unique<GmmBackend>(world_path.empty() ? make_demo_world() : load_world(world_path));
    }
    if (!world_path.empty()) throw ConfigError("--world only applies to the analytic backend");
    RemoteOptions opts;
    opts.url = spec;
    opts.retries = retries;
    return std::make_unique<RemoteBackend>(opts);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Localized score-distillation image editing"};
    app.name("lusd");
    app.footer(kExitCodes);
    app.require_subcommand(1);
    app.allow_extras(false);

    ConfigFlags edit_cfg, eval_cfg;
    BackendFlags edit_be, eval_be, hs_be, serve_be;

    EditArgs ea;
    CLI::App* edit = app.add_subcommand("edit", "Edit one image toward a target prompt");
    edit->add_option("image", ea.image, "Source image (PNG or PPM)")->required()->check(CLI::ExistingFile);
    edit->add_option("--src-prompt", ea.src_prompt, "Prompt describing the source image")->required();
    edit->add_option("--tgt-prompt", ea.tgt_prompt, "Prompt describing the desired edit")->required();
    edit->add_option("--nouns", ea.nouns, "Comma-separated edit nouns; skips prompt diffing");
    edit->add_option("--out", ea.out, "Output image (.png or .ppm)")->capture_default_str();
    edit->add_option("--telemetry", ea.telemetry, "Telemetry JSON (default: output path with .json)");
    edit->add_flag("--quiet", ea.quiet, "Print nothing on success");
    edit_be.attach(*edit);
    edit_cfg.attach(*edit);

    EvalArgs va;
    CLI::App* eval = app.add_subcommand("eval", "Run a benchmark manifest and write a report");
    eval->add_option("manifest", va.manifest, "JSON Lines manifest")->required()->check(CLI::ExistingFile);
    eval->add_option("--out-dir", va.out_dir, "Report directory")->capture_default_str();
    eval->add_option("--workers", va.workers, "Parallel examples")->capture_default_str();
    eval->add_option("--min-count", va.min_count, "Minimum survivors per threshold in L1*/CLIP-I*")
        ->capture_default_str();
    eval->add_flag("--save-images", va.save_images, "Also write edited images to <out-dir>/images");
    eval_be.attach(*eval);
    eval_cfg.attach(*eval);

    bool full = false;
    CLI::App* hs = app.add_subcommand("handshake", "Print the backend handshake");
    hs->add_flag("--full", full, "Include the whole alpha_bar schedule");
    hs_be.attach(*hs);

    std::string demo_dir = "demo";
    CLI::App* demo = app.add_subcommand("demo-world", "Write the analytic demo world, images and a manifest");
    demo->add_option("--out-dir", demo_dir, "Output directory")->capture_default_str();

    std::string host = "127.0.0.1";
    int port = 8765;
    CLI::App* serve = app.add_subcommand("serve", "Serve the analytic backend over the wire protocol");
    serve->add_option("--host", host)->capture_default_str();
    serve->add_option("--port", port)->capture_default_str();
    serve_be.attach(*serve);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*edit) return cmd_edit(ea, edit_cfg, edit_be, out);
        if (*eval) return cmd_eval(va, eval_cfg, eval_be, out);
        if (*hs) return cmd_handshake(hs_be, full, out);
        if (*demo) return cmd_demo_world(demo_dir, out);
        if (*serve) return cmd_serve(serve_be, host, port, out);
    } catch (...) {
        return exit_code_for_current_exception(err);
    }
    return kConfig;
}

}  // namespace lusd::cli
