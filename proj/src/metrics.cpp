#include "lusd/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "lusd/engine.hpp"
#include "lusd/error.hpp"
#include "lusd/image_io.hpp"

namespace lusd {

namespace {

using nlohmann::json;

std::vector<std::string> lower_words(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || ch == '\'') {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool contains_phrase(const std::vector<std::string>& words, const std::string& phrase) {
    const auto p = lower_words(phrase);
    if (p.empty() || p.size() > words.size()) return false;
    for (std::size_t i = 0; i + p.size() <= words.size(); ++i) {
        if (std::equal(p.begin(), p.end(), words.begin() + static_cast<std::ptrdiff_t>(i))) return true;
    }
    return false;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
    double area = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) area += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    return area;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string csv_opt(const std::optional<double>& v) {
    if (!v) return "";
    std::ostringstream os;
    os.precision(17);
    os << *v;
    return os.str();
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

json thresholded_json(const std::optional<ThresholdedAuc>& t) {
    if (!t) return nullptr;
    return json{{"value", t->value}, {"k_lo", t->k_lo}, {"k_hi", t->k_hi}, {"points", t->points}};
}

ExampleResult evaluate_one(const EvalExample& ex, const EngineConfig& cfg, DenoiserBackend& backend,
                           const BenchmarkOptions& opts) {
    ExampleResult r;
    r.id = ex.id;
    if (ex.instruction) r.instruction_kind = classify_instruction(*ex.instruction);
    try {
        EditRequest req;
        req.source_image = read_image(ex.source_image);
        req.y_src = ex.y_src;
        req.y_tgt = ex.y_tgt;
        req.nouns = ex.nouns;
        req.config = cfg;
        const EditResult res = run_edit(req, backend);
        for (const StepRecord& s : res.telemetry) r.accepted_steps += s.accepted ? 1 : 0;
        if (!opts.image_dir.empty()) write_image(opts.image_dir / (ex.id + ".png"), res.image);

        r.clip_r = clip_r(res.image, req.source_image, ex.y_tgt, backend);
        r.y_local_fallback = !ex.y_local.has_value();
        r.clip_t = clip_t(res.image, ex.y_local.value_or(ex.y_tgt), backend);
        if (ex.ground_truth) {
            const GridTensor gt = read_image(*ex.ground_truth);
            r.l1_vs_gt = l1_distance(res.image, gt);
            r.clip_i_vs_gt = clip_i(res.image, gt, backend);
        }
        r.ok = true;
        if (!r.clip_r) r.error = "clip_r undefined (zero denominator); excluded from curves";
    } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
    }
    return r;
}

}  // namespace

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size() || a.empty()) throw ShapeError("cosine: vectors differ in length or are empty");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw ShapeError("cosine: zero vector");
    return dot / std::sqrt(na * nb);
}

std::optional<double> clip_r_from_embeddings(const std::vector<float>& e_x, const std::vector<float>& e_src,
                                             const std::vector<float>& e_y) {
    const double den = cosine(e_src, e_y);
    if (den == 0.0) return std::nullopt;
    return cosine(e_x, e_y) / den;
}

std::optional<double> clip_r(const GridTensor& x, const GridTensor& x_src, const std::string& y_tgt,
                             DenoiserBackend& provider) {
    const auto e_y = provider.embed_text(y_tgt);
    const auto e_src = provider.embed_image(x_src);
    return clip_r_from_embeddings(provider.embed_image(x), e_src, e_y);
}

double clip_t(const GridTensor& x, const std::string& y_local, DenoiserBackend& provider) {
    return cosine(provider.embed_image(x), provider.embed_text(y_local));
}

double clip_i(const GridTensor& x, const GridTensor& x_ref, DenoiserBackend& provider) {
    return cosine(provider.embed_image(x), provider.embed_image(x_ref));
}

double l1_distance(const GridTensor& x, const GridTensor& x_ref) {
    require_same_shape(x, x_ref, "l1_distance");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += std::abs(static_cast<double>(x[i]) - x_ref[i]);
    return acc / static_cast<double>(x.size());
}

std::vector<double> KGrid::points() const {
    if (!(step > 0.0) || hi < lo) throw ConfigError("k grid needs step > 0 and hi >= lo");
    const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
    if (std::abs(lo + static_cast<double>(n) * step - hi) > 1e-9) {
        throw ConfigError("k grid: range is not a whole number of steps");
    }
    std::vector<double> out(n + 1);
    for (std::size_t i = 0; i <= n; ++i) out[i] = i == n ? hi : lo + static_cast<double>(i) * step;
    return out;
}

std::vector<CurvePoint> success_curve(const std::vector<double>& scores, const std::vector<double>& k_grid) {
    if (scores.empty()) throw Error("success_curve: no scores");
    if (!std::is_sorted(k_grid.begin(), k_grid.end())) throw ConfigError("success_curve: k grid must be ascending");
    std::vector<CurvePoint> out;
    out.reserve(k_grid.size());
    for (double k : k_grid) {
        const auto above = std::count_if(scores.begin(), scores.end(), [k](double s) { return s > k; });
        out.push_back({k, static_cast<double>(above) / static_cast<double>(scores.size())});
    }
    return out;
}

double clip_auc(const std::vector<CurvePoint>& curve) {
    if (curve.size() < 2) throw ConfigError("clip_auc: need at least two curve points");
    std::vector<double> x, y;
    for (const CurvePoint& p : curve) {
        x.push_back(p.k);
        y.push_back(p.fraction);
    }
    if (!(x.back() > x.front())) throw ConfigError("clip_auc: degenerate k grid");
    return trapezoid(x, y);
}

ThresholdedAuc thresholded_auc(const std::vector<double>& metric, const std::vector<double>& clip_r,
                               const std::vector<double>& k_grid, std::size_t min_count) {
    if (metric.size() != clip_r.size()) throw ShapeError("thresholded_auc: metric and clip_r lengths differ");
    std::vector<double> x, y;
    for (double k : k_grid) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < metric.size(); ++i) {
            if (clip_r[i] > k) {
                sum += metric[i];
                ++n;
            }
        }
        if (n == 0 || n < min_count) continue;
        x.push_back(k);
        y.push_back(sum / static_cast<double>(n));
    }
    if (x.empty()) throw Error("thresholded_auc: no grid point has enough surviving examples");
    return ThresholdedAuc{trapezoid(x, y), x.front(), x.back(), x.size()};
}

const char* to_string(InstructionKind kind) {
    switch (kind) {
        case InstructionKind::Add: return "add";
        case InstructionKind::Other: return "other";
        case InstructionKind::Unknown: return "unknown";
    }
    return "unknown";
}

const std::vector<std::string>& add_keywords() {
    static const std::vector<std::string> k = {"add", "put", "let there be"};
    return k;
}

const std::vector<std::string>& other_keywords() {
    static const std::vector<std::string> k = {"remove", "erase",   "delete",  "replace", "swap",
                                               "make",   "change",  "turn",    "smaller", "bigger",
                                               "larger", "smile",   "cry",     "look"};
    return k;
}

InstructionKind classify_instruction(const std::string& text) {
    const auto words = lower_words(text);
    for (const std::string& k : add_keywords()) {
        if (contains_phrase(words, k)) return InstructionKind::Add;
    }
    for (const std::string& k : other_keywords()) {
        if (contains_phrase(words, k)) return InstructionKind::Other;
    }
    return InstructionKind::Unknown;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    const std::filesystem::path base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };
    std::vector<ManifestEntry> out;
    std::string line;
    std::size_t line_no = 0;
    std::set<std::string> ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
        ManifestEntry entry;
        entry.line = line_no;
        try {
            const json j = json::parse(line);
            EvalExample ex;
            ex.id = j.at("id").get<std::string>();
            if (ex.id.empty()) throw Error("empty id");
            ex.source_image = resolve(j.at("source_image").get<std::string>());
            ex.y_src = j.at("y_src").get<std::string>();
            ex.y_tgt = j.at("y_tgt").get<std::string>();
            if (j.contains("y_local") && !j["y_local"].is_null()) ex.y_local = j["y_local"].get<std::string>();
            if (j.contains("ground_truth") && !j["ground_truth"].is_null()) {
                ex.ground_truth = resolve(j["ground_truth"].get<std::string>());
            }
            if (j.contains("instruction") && !j["instruction"].is_null()) {
                ex.instruction = j["instruction"].get<std::string>();
            }
            if (j.contains("nouns")) ex.nouns = j["nouns"].get<std::vector<std::string>>();
            if (!ids.insert(ex.id).second) throw Error("duplicate id '" + ex.id + "'");
            entry.example = std::move(ex);
        } catch (const std::exception& e) {
            entry.error = e.what();
        }
        out.push_back(std::move(entry));
    }
    return out;
}

EvalReport run_benchmark(const std::vector<ManifestEntry>& manifest, const EngineConfig& cfg,
                         const DenoiserBackend& prototype, const BenchmarkOptions& opts) {
    EvalReport report;
    report.config = cfg;
    const std::vector<double> grid = opts.grid.points();
    if (!opts.image_dir.empty()) std::filesystem::create_directories(opts.image_dir);

    std::vector<const EvalExample*> jobs;
    for (const ManifestEntry& m : manifest) {
        if (m.example) {
            jobs.push_back(&*m.example);
        } else {
            ExampleResult bad;
            bad.id = "line-" + std::to_string(m.line);
            bad.error = "malformed manifest line: " + m.error;
            report.examples.push_back(std::move(bad));
        }
    }
    if (manifest.empty()) report.warnings.push_back("manifest is empty");

    std::vector<ExampleResult> results(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        const std::unique_ptr<DenoiserBackend> backend = prototype.clone();
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            results[i] = evaluate_one(*jobs[i], cfg, *backend, opts);
        }
    };
    const int n_workers = std::max(1, std::min<int>(opts.workers, static_cast<int>(jobs.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    for (ExampleResult& r : results) report.examples.push_back(std::move(r));
    std::sort(report.examples.begin(), report.examples.end(),
              [](const ExampleResult& a, const ExampleResult& b) { return a.id < b.id; });

    std::vector<double> scores, l1, l1_r, ci, ci_r, clip_ts;
    for (const ExampleResult& r : report.examples) {
        if (!r.ok) continue;
        if (r.clip_t) clip_ts.push_back(*r.clip_t);
        if (!r.clip_r) continue;
        scores.push_back(*r.clip_r);
        if (r.l1_vs_gt) {
            l1.push_back(*r.l1_vs_gt);
            l1_r.push_back(*r.clip_r);
        }
        if (r.clip_i_vs_gt) {
            ci.push_back(*r.clip_i_vs_gt);
            ci_r.push_back(*r.clip_r);
        }
    }
    if (!scores.empty()) {
        report.curve = success_curve(scores, grid);
        if (report.curve.size() >= 2) report.clip_auc = clip_auc(report.curve);
    } else if (!manifest.empty()) {
        report.warnings.push_back("no example produced a CLIP-R score");
    }
    if (!clip_ts.empty()) {
        double s = 0.0;
        for (double v : clip_ts) s += v;
        report.mean_clip_t = s / static_cast<double>(clip_ts.size());
    }
    if (!l1.empty()) {
        double s = 0.0;
        for (double v : l1) s += v;
        report.mean_l1 = s / static_cast<double>(l1.size());
    }
    auto thresholded = [&](const std::vector<double>& m, const std::vector<double>& r,
                           const char* name) -> std::optional<ThresholdedAuc> {
        if (m.empty()) return std::nullopt;
        try {
            return thresholded_auc(m, r, grid, opts.min_count);
        } catch (const Error&) {
            report.warnings.push_back(std::string(name) + ": fewer than " + std::to_string(opts.min_count) +
                                      " surviving examples at every threshold");
            return std::nullopt;
        }
    };
    report.l1_star = thresholded(l1, l1_r, "l1_star");
    report.clip_i_star = thresholded(ci, ci_r, "clip_i_star");
    for (const ExampleResult& r : report.examples) {
        if (r.ok && r.y_local_fallback) {
            report.warnings.push_back("some examples lack y_local; clip_t uses y_tgt for them");
            break;
        }
    }
    return report;
}

json report_json(const EvalReport& report) {
    json examples = json::array();
    for (const ExampleResult& r : report.examples) {
        json e{{"id", r.id},
               {"ok", r.ok},
               {"clip_r", opt_json(r.clip_r)},
               {"clip_t", opt_json(r.clip_t)},
               {"y_local_fallback", r.y_local_fallback},
               {"l1_vs_gt", opt_json(r.l1_vs_gt)},
               {"clip_i_vs_gt", opt_json(r.clip_i_vs_gt)},
               {"accepted_steps", r.accepted_steps}};
        e["instruction_kind"] = r.instruction_kind ? json(to_string(*r.instruction_kind)) : json(nullptr);
        if (!r.error.empty()) e["error"] = r.error;
        examples.push_back(std::move(e));
    }
    json curve = json::array();
    for (const CurvePoint& p : report.curve) curve.push_back({{"k", p.k}, {"fraction", p.fraction}});
    json config = json::object();
    for (const std::string& key : config_keys()) config[key] = get_config_value(report.config, key);
    return json{{"schema", "lusd-eval-report/1"},
                {"config", std::move(config)},
                {"aggregate",
                 {{"clip_auc", opt_json(report.clip_auc)},
                  {"l1_star", thresholded_json(report.l1_star)},
                  {"clip_i_star", thresholded_json(report.clip_i_star)},
                  {"mean_clip_t", opt_json(report.mean_clip_t)},
                  {"mean_l1", opt_json(report.mean_l1)},
                  {"curve", std::move(curve)}}},
                {"warnings", report.warnings},
                {"examples", std::move(examples)}};
}

void write_report(const EvalReport& report, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream f(out_dir / "report.json");
        if (!f) throw IoError("cannot write " + (out_dir / "report.json").string());
        f << report_json(report).dump(2) << '\n';
    }
    {
        std::ofstream f(out_dir / "report.csv");
        if (!f) throw IoError("cannot write " + (out_dir / "report.csv").string());
        f << "id,ok,clip_r,clip_t,y_local_fallback,l1_vs_gt,clip_i_vs_gt,instruction_kind,accepted_steps,error\n";
        for (const ExampleResult& r : report.examples) {
            f << csv_field(r.id) << ',' << (r.ok ? 1 : 0) << ',' << csv_opt(r.clip_r) << ',' << csv_opt(r.clip_t)
              << ',' << (r.y_local_fallback ? 1 : 0) << ',' << csv_opt(r.l1_vs_gt) << ','
              << csv_opt(r.clip_i_vs_gt) << ',' << (r.instruction_kind ? to_string(*r.instruction_kind) : "")
              << ',' << r.accepted_steps << ',' << csv_field(r.error) << '\n';
        }
    }
    {
        std::ofstream f(out_dir / "curve.csv");
        if (!f) throw IoError("cannot write " + (out_dir / "curve.csv").string());
        f << "k,fraction\n";
        f.precision(17);
        for (const CurvePoint& p : report.curve) f << p.k << ',' << p.fraction << '\n';
    }
}

}  // namespace lusd
