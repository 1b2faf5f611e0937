#include "lusd/gmm_backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>

#include "lusd/error.hpp"
#include "lusd/protocol.hpp"

namespace lusd {

namespace {

using nlohmann::json;

constexpr double kEmbedTemperature = 0.25;
constexpr double kUnknownFloor = 1e-3;
constexpr double kSelfBandwidth = 1.0;  // self-attention cells, grows 0.5 per extra layer

bool word_names_class(const std::string& word, const std::string& label) {
    if (word == label) return true;
    if (word.size() == label.size() + 1 && word.back() == 's' && word.compare(0, label.size(), label) == 0) return true;
    return word.size() == label.size() + 2 && word.compare(word.size() - 2, 2, "es") == 0 &&
           word.compare(0, label.size(), label) == 0;
}

struct Word {
    std::string text;
    std::size_t begin = 0;
    std::size_t end = 0;
};

std::vector<Word> split_words(const std::string& text) {
    std::vector<Word> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        std::size_t b = i, e = j;
        while (b < e && !std::isalnum(static_cast<unsigned char>(text[b]))) ++b;
        while (e > b && !std::isalnum(static_cast<unsigned char>(text[e - 1]))) --e;
        if (b < e) {
            Word w{text.substr(b, e - b), b, e};
            for (char& c : w.text) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            out.push_back(std::move(w));
        }
        i = j;
    }
    return out;
}

double log_sum_exp(const std::vector<double>& v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

// Squared distance between z and scale * mu, accumulated in double.
double sq_dist(const GridTensor& z, const GridTensor& mu, double scale) {
    double acc = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double d = static_cast<double>(z[i]) - scale * mu[i];
        acc += d * d;
    }
    return acc;
}

void check_latent(const GmmWorld& world, const GridTensor& z, const char* what) {
    if (z.shape() != world.latent_shape) {
        throw BackendError("bad_shape", std::string(what) + " has shape " + z.shape().str() + ", world expects " +
                                            world.latent_shape.str());
    }
}

// Distance in latent pixels from a point to a region (0 inside).
double region_distance(const Region& r, double y, double x) {
    const double dy = std::max({static_cast<double>(r.y0) - y, 0.0, y - static_cast<double>(r.y1)});
    const double dx = std::max({static_cast<double>(r.x0) - x, 0.0, x - static_cast<double>(r.x1)});
    return std::hypot(dy, dx);
}

}  // namespace

std::string normalize_label(const std::string& text) {
    std::string out;
    bool pending_space = false;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

void GmmWorld::validate() const {
    const Shape& s = latent_shape;
    if (s.numel() == 0) throw ConfigError("world: empty latent shape");
    if (image_scale == 0 || image_scale % 2 != 0) throw ConfigError("world: image_scale must be a positive even number");
    BackendHandshake h;
    h.latent_shape = s;
    h.image_shape = Shape{3, s.height * image_scale, s.width * image_scale};
    h.attention = attention;
    h.validate();
    if (components.empty()) throw ConfigError("world: no components");
    for (std::size_t i = 0; i < components.size(); ++i) {
        const GmmComponent& c = components[i];
        const std::string at = "world: component " + std::to_string(i) + ": ";
        if (c.mean.shape() != s) throw ConfigError(at + "mean shape " + c.mean.shape().str() + " != " + s.str());
        if (!all_finite(c.mean)) throw ConfigError(at + "non-finite mean");
        if (!(c.sigma >= 0.0) || !std::isfinite(c.sigma)) throw ConfigError(at + "sigma must be >= 0");
        if (!(c.weight > 0.0) || !std::isfinite(c.weight)) throw ConfigError(at + "weight must be > 0");
        const Region& r = c.region;
        if (r.y0 >= r.y1 || r.x0 >= r.x1 || r.y1 > s.height || r.x1 > s.width) {
            throw ConfigError(at + "region outside the latent grid or empty");
        }
        if (c.class_label.empty()) throw ConfigError(at + "empty class label");
    }
    if (conditionals.empty()) throw ConfigError("world: no conditionals");
    for (const auto& [label, entries] : conditionals) {
        const std::string at = "world: conditional '" + label + "': ";
        if (label.empty() || normalize_label(label) != label) throw ConfigError(at + "label is not in normalized form");
        if (entries.empty()) throw ConfigError(at + "no components");
        double total = 0.0;
        std::set<std::size_t> seen;
        for (const ConditionalEntry& e : entries) {
            if (e.component >= components.size()) throw ConfigError(at + "component index out of range");
            if (!seen.insert(e.component).second) throw ConfigError(at + "duplicate component");
            if (!(e.weight > 0.0)) throw ConfigError(at + "weights must be > 0");
            total += e.weight;
        }
        if (std::abs(total - 1.0) > 1e-9) throw ConfigError(at + "weights sum to " + std::to_string(total));
    }
}

std::vector<ConditionalEntry> GmmWorld::conditional(const std::string& label) const {
    const std::string key = normalize_label(label);
    if (key.empty()) return unconditional();
    const auto it = conditionals.find(key);
    if (it == conditionals.end()) throw BackendError("unknown_label", "prompt '" + label + "' is not known to the world");
    return it->second;
}

std::vector<ConditionalEntry> GmmWorld::unconditional() const {
    double total = 0.0;
    for (const GmmComponent& c : components) total += c.weight;
    std::vector<ConditionalEntry> out;
    for (std::size_t i = 0; i < components.size(); ++i) out.push_back({i, components[i].weight / total});
    return out;
}

std::vector<std::string> GmmWorld::class_labels() const {
    std::set<std::string> s;
    for (const GmmComponent& c : components) s.insert(c.class_label);
    return {s.begin(), s.end()};
}

std::vector<double> normalize_log_weights(const std::vector<double>& log_w) {
    const double lse = log_sum_exp(log_w);
    std::vector<double> out(log_w.size());
    for (std::size_t i = 0; i < log_w.size(); ++i) out[i] = std::exp(log_w[i] - lse);
    return out;
}

std::vector<double> gmm_responsibilities(const GmmWorld& world, const GridTensor& z_t, double alpha_bar,
                                         const std::string& label) {
    check_latent(world, z_t, "z_t");
    const auto entries = world.conditional(label);
    const double sa = std::sqrt(alpha_bar);
    const double d = static_cast<double>(z_t.size());
    std::vector<double> log_w;
    log_w.reserve(entries.size());
    for (const ConditionalEntry& e : entries) {
        const GmmComponent& c = world.components[e.component];
        const double v = alpha_bar * c.sigma * c.sigma + 1.0 - alpha_bar;
        log_w.push_back(std::log(e.weight) - sq_dist(z_t, c.mean, sa) / (2.0 * v) -
                        0.5 * d * std::log(2.0 * std::numbers::pi * v));
    }
    return normalize_log_weights(log_w);
}

GridTensor gmm_predict(const GmmWorld& world, const GridTensor& z_t, double alpha_bar, const std::string& label) {
    if (!(alpha_bar > 0.0 && alpha_bar < 1.0)) throw ConfigError("gmm_predict: alpha_bar must lie in (0, 1)");
    const auto entries = world.conditional(label);
    const auto r = gmm_responsibilities(world, z_t, alpha_bar, label);
    const double sa = std::sqrt(alpha_bar);
    const double sn = std::sqrt(1.0 - alpha_bar);

    std::vector<double> post(z_t.size(), 0.0);  // sum_i r_i m_i
    for (std::size_t k = 0; k < entries.size(); ++k) {
        if (r[k] == 0.0) continue;
        const GmmComponent& c = world.components[entries[k].component];
        const double s2 = c.sigma * c.sigma;
        const double v = alpha_bar * s2 + 1.0 - alpha_bar;
        const double a = r[k] * sa * s2 / v;
        const double b = r[k] * (1.0 - alpha_bar) / v;
        for (std::size_t i = 0; i < post.size(); ++i) post[i] += a * z_t[i] + b * c.mean[i];
    }
    GridTensor eps(z_t.shape());
    for (std::size_t i = 0; i < post.size(); ++i) {
        eps[i] = static_cast<float>((static_cast<double>(z_t[i]) - sa * post[i]) / sn);
    }
    return eps;
}

GridTensor smoothing_self_map(std::size_t side, double bandwidth) {
    if (side == 0 || !(bandwidth > 0.0)) throw ConfigError("smoothing_self_map: side and bandwidth must be positive");
    static std::mutex mu;
    static std::map<std::pair<std::size_t, double>, GridTensor> cache;
    {
        std::lock_guard lock(mu);
        const auto it = cache.find({side, bandwidth});
        if (it != cache.end()) return it->second;
    }
    const std::size_t n = side * side;
    GridTensor m(Shape{1, n, n});
    std::vector<double> row(n);
    const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
    for (std::size_t p = 0; p < n; ++p) {
        const double py = static_cast<double>(p / side), px = static_cast<double>(p % side);
        double total = 0.0;
        for (std::size_t q = 0; q < n; ++q) {
            const double dy = py - static_cast<double>(q / side), dx = px - static_cast<double>(q % side);
            row[q] = std::exp(-(dy * dy + dx * dx) * inv);
            total += row[q];
        }
        for (std::size_t q = 0; q < n; ++q) m.at(0, p, q) = static_cast<float>(row[q] / total);
    }
    std::lock_guard lock(mu);
    return cache.emplace(std::make_pair(side, bandwidth), std::move(m)).first->second;
}

AttentionBundle gmm_attention(const GmmWorld& world, const GridTensor& z_t, double alpha_bar, const std::string& label,
                              const std::vector<Token>& tokens, bool strict) {
    const auto entries = world.conditional(label);
    const auto r = gmm_responsibilities(world, z_t, alpha_bar, label);
    const AttentionSpec& spec = world.attention;
    const std::size_t s = spec.cross_resolution;
    const double cell_h = static_cast<double>(world.latent_shape.height) / static_cast<double>(s);
    const double cell_w = static_cast<double>(world.latent_shape.width) / static_cast<double>(s);

    AttentionBundle bundle;
    for (int l = 0; l < spec.self_layers; ++l) {
        bundle.self_maps.push_back(smoothing_self_map(spec.self_resolution, kSelfBandwidth + 0.5 * l));
    }
    for (const Token& tok : tokens) {
        if (tok.index <= 0) continue;  // BOS
        // Components naming this token, with their responsibility (0 outside the mixture).
        std::vector<std::pair<const GmmComponent*, double>> hits;
        for (std::size_t i = 0; i < world.components.size(); ++i) {
            if (!word_names_class(normalize_label(tok.text), world.components[i].class_label)) continue;
            double ri = 0.0;
            for (std::size_t k = 0; k < entries.size(); ++k) {
                if (entries[k].component == i) ri = r[k];
            }
            hits.emplace_back(&world.components[i], ri);
        }
        if (hits.empty() && strict) {
            throw BackendError("token_without_region", "token '" + tok.text + "' names no world region");
        }
        auto& layers = bundle.cross_maps[tok.index];
        for (int l = 0; l < spec.cross_layers; ++l) {
            GridTensor m(Shape{1, s, s}, hits.empty() ? 1.0f / static_cast<float>(s * s) : 0.0f);
            for (const auto& [c, ri] : hits) {
                const Region& reg = c->region;
                const double width = 0.25 * static_cast<double>(std::max(reg.y1 - reg.y0, reg.x1 - reg.x0)) *
                                     (1.0 + 0.25 * l);
                for (std::size_t y = 0; y < s; ++y) {
                    for (std::size_t x = 0; x < s; ++x) {
                        const double d = region_distance(reg, (y + 0.5) * cell_h, (x + 0.5) * cell_w);
                        m.at(0, y, x) += static_cast<float>((1.0 + ri) * std::exp(-d * d / (2.0 * width * width)));
                    }
                }
            }
            layers.push_back(std::move(m));
        }
    }
    return bundle;
}

double class_log_posterior(const GmmWorld& world, const GridTensor& z, const std::string& label,
                           const std::string& class_label) {
    check_latent(world, z, "z");
    const auto entries = world.conditional(label);
    const double d = static_cast<double>(z.size());
    std::vector<double> all, hit;
    for (const ConditionalEntry& e : entries) {
        const GmmComponent& c = world.components[e.component];
        const double v = std::max(c.sigma * c.sigma, 1e-6);
        const double lp = std::log(e.weight) - sq_dist(z, c.mean, 1.0) / (2.0 * v) -
                          0.5 * d * std::log(2.0 * std::numbers::pi * v);
        all.push_back(lp);
        if (c.class_label == class_label) hit.push_back(lp);
    }
    if (hit.empty()) return -std::numeric_limits<double>::infinity();
    return log_sum_exp(hit) - log_sum_exp(all);
}

GmmWorld make_demo_world() {
    GmmWorld w;
    const Shape s = w.latent_shape;
    const Region whole{0, 0, s.height, s.width};
    const Region cat{16, 8, 32, 24};
    const Region dog{36, 40, 52, 56};

    GridTensor bg(s);
    for (std::size_t c = 0; c < s.channels; ++c) {
        for (std::size_t y = 0; y < s.height; ++y) {
            for (std::size_t x = 0; x < s.width; ++x) {
                const double u = (x + 0.5) / static_cast<double>(s.width);
                const double v = (y + 0.5) / static_cast<double>(s.height);
                const double val = 0.45 * std::sin(2.0 * std::numbers::pi * u * (1.0 + c % 2) + 0.7 * c) *
                                       std::cos(2.0 * std::numbers::pi * v + 0.3 * c) +
                                   0.1 * std::cos(6.0 * std::numbers::pi * (u + v));
                bg.at(c, y, x) = static_cast<float>(val);
            }
        }
    }
    auto with_object = [&](const Region& r, const double (&delta)[4]) {
        GridTensor m = bg;
        for (std::size_t c = 0; c < s.channels; ++c) {
            for (std::size_t y = r.y0; y < r.y1; ++y) {
                for (std::size_t x = r.x0; x < r.x1; ++x) m.at(c, y, x) += static_cast<float>(delta[c]);
            }
        }
        return m;
    };
    const double cat_delta[4] = {0.9, -0.7, 0.8, 0.6};
    const double dog_delta[4] = {-0.8, 0.9, -0.6, -0.7};

    w.components.push_back({bg, 0.3, 0.8, whole, "meadow"});
    w.components.push_back({with_object(cat, cat_delta), 0.6, 0.1, cat, "cat"});
    w.components.push_back({with_object(dog, dog_delta), 0.6, 0.1, dog, "dog"});
    w.conditionals[kDemoSourcePrompt] = {{0, 0.8}, {1, 0.1}, {2, 0.1}};
    w.conditionals[kDemoCatPrompt] = {{1, 0.9}, {0, 0.1}};
    w.conditionals[kDemoDogPrompt] = {{2, 0.9}, {0, 0.1}};
    w.validate();
    return w;
}

json world_to_json(const GmmWorld& world) {
    json comps = json::array();
    for (const GmmComponent& c : world.components) {
        comps.push_back({{"class_label", c.class_label},
                         {"sigma", c.sigma},
                         {"weight", c.weight},
                         {"region", {c.region.y0, c.region.x0, c.region.y1, c.region.x1}},
                         {"mean", wire::encode_tensor(c.mean)}});
    }
    json conds = json::object();
    for (const auto& [label, entries] : world.conditionals) {
        json arr = json::array();
        for (const ConditionalEntry& e : entries) arr.push_back({{"component", e.component}, {"weight", e.weight}});
        conds[label] = std::move(arr);
    }
    const Shape& s = world.latent_shape;
    return json{{"format", "lusd-gmm-world/1"},
                {"latent_shape", {s.channels, s.height, s.width}},
                {"image_scale", world.image_scale},
                {"attention",
                 {{"self_resolution", world.attention.self_resolution},
                  {"cross_resolution", world.attention.cross_resolution},
                  {"self_layers", world.attention.self_layers},
                  {"cross_layers", world.attention.cross_layers}}},
                {"components", std::move(comps)},
                {"conditionals", std::move(conds)}};
}

GmmWorld world_from_json(const json& j) {
    GmmWorld w;
    try {
        if (j.value("format", "") != "lusd-gmm-world/1") throw ConfigError("world: unsupported format tag");
        const auto ls = j.at("latent_shape").get<std::vector<std::size_t>>();
        if (ls.size() != 3) throw ConfigError("world: latent_shape must have three entries");
        w.latent_shape = Shape{ls[0], ls[1], ls[2]};
        w.image_scale = j.value("image_scale", std::size_t{8});
        if (j.contains("attention")) {
            const json& a = j["attention"];
            w.attention.self_resolution = a.at("self_resolution").get<std::size_t>();
            w.attention.cross_resolution = a.at("cross_resolution").get<std::size_t>();
            w.attention.self_layers = a.value("self_layers", 1);
            w.attention.cross_layers = a.value("cross_layers", 1);
        }
        for (const json& c : j.at("components")) {
            GmmComponent comp;
            comp.class_label = normalize_label(c.at("class_label").get<std::string>());
            comp.sigma = c.at("sigma").get<double>();
            comp.weight = c.value("weight", 1.0);
            const auto r = c.at("region").get<std::vector<std::size_t>>();
            if (r.size() != 4) throw ConfigError("world: region must be [y0, x0, y1, x1]");
            comp.region = Region{r[0], r[1], r[2], r[3]};
            comp.mean = wire::decode_tensor(c.at("mean"));
            w.components.push_back(std::move(comp));
        }
        for (const auto& [label, arr] : j.at("conditionals").items()) {
            auto& entries = w.conditionals[normalize_label(label)];
            for (const json& e : arr) {
                entries.push_back({e.at("component").get<std::size_t>(), e.at("weight").get<double>()});
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("world: ") + e.what());
    } catch (const ProtocolError& e) {
        throw ConfigError(std::string("world: ") + e.what());
    }
    w.validate();
    return w;
}

GmmWorld load_world(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open world file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return world_from_json(j);
}

void save_world(const std::filesystem::path& path, const GmmWorld& world) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write world file " + path.string());
    out << world_to_json(world).dump(1) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

GmmBackend::GmmBackend(GmmWorld world) {
    world.validate();
    world_ = std::make_shared<const GmmWorld>(std::move(world));
}

BackendHandshake GmmBackend::handshake() {
    BackendHandshake h;
    h.backend_name = "analytic-gmm";
    h.latent_shape = world_->latent_shape;
    h.image_shape = Shape{3, world_->latent_shape.height * world_->image_scale,
                          world_->latent_shape.width * world_->image_scale};
    h.schedule = schedule_;
    h.attention = world_->attention;
    return h;
}

GridTensor GmmBackend::encode(const GridTensor& image) {
    const Shape& l = world_->latent_shape;
    const std::size_t f = world_->image_scale;
    const Shape expect{3, l.height * f, l.width * f};
    if (image.shape() != expect) {
        throw BackendError("bad_shape", "image shape " + image.shape().str() + ", expected " + expect.str());
    }
    if (l.channels != 4) throw BackendError("unsupported", "analytic VAE needs 4 latent channels");
    GridTensor z(l);
    const double half = static_cast<double>(f * f / 2);
    for (std::size_t y = 0; y < l.height; ++y) {
        for (std::size_t x = 0; x < l.width; ++x) {
            double diff = 0.0;
            for (std::size_t c = 0; c < 3; ++c) {
                double left = 0.0, right = 0.0;
                for (std::size_t dy = 0; dy < f; ++dy) {
                    for (std::size_t dx = 0; dx < f; ++dx) {
                        const double p = image.at(c, y * f + dy, x * f + dx);
                        (dx < f / 2 ? left : right) += p;
                    }
                }
                z.at(c, y, x) = static_cast<float>(4.0 * ((left + right) / (2.0 * half) - 0.5));
                diff += (left - right) / half;
            }
            z.at(3, y, x) = static_cast<float>(4.0 * diff / 3.0);
        }
    }
    return z;
}

GridTensor GmmBackend::decode(const GridTensor& latent) {
    check_latent(*world_, latent, "latent");
    if (latent.shape().channels != 4) throw BackendError("unsupported", "analytic VAE needs 4 latent channels");
    const Shape& l = latent.shape();
    const std::size_t f = world_->image_scale;
    GridTensor img(Shape{3, l.height * f, l.width * f});
    for (std::size_t y = 0; y < l.height; ++y) {
        for (std::size_t x = 0; x < l.width; ++x) {
            const double t = latent.at(3, y, x) / 8.0;
            for (std::size_t c = 0; c < 3; ++c) {
                const double base = 0.5 + latent.at(c, y, x) / 4.0;
                for (std::size_t dy = 0; dy < f; ++dy) {
                    for (std::size_t dx = 0; dx < f; ++dx) {
                        const double p = base + (dx < f / 2 ? t : -t);
                        img.at(c, y * f + dy, x * f + dx) = static_cast<float>(std::clamp(p, 0.0, 1.0));
                    }
                }
            }
        }
    }
    return img;
}

void GmmBackend::begin_session(const GridTensor& z_src) {
    check_latent(*world_, z_src, "z_src");
    z_src_ = z_src;
}

PredictResponse GmmBackend::predict(const PredictRequest& req) {
    const GmmWorld& w = *world_;
    check_latent(w, req.z_t, "z_t");
    if (req.t < 0 || req.t >= NoiseSchedule::kTimesteps) {
        throw BackendError("bad_timestep", "t = " + std::to_string(req.t) + " outside [0, 999]");
    }
    if (req.mode != LossMode::SBP) {
        if (!req.eps) throw BackendError("missing_eps", "eps is required in dds and sds modes");
        check_latent(w, *req.eps, "eps");
    }
    const double ab = schedule_.alpha_bar(req.t);

    auto branch = [&](const GridTensor& input, const std::string& label) {
        GridTensor cond = gmm_predict(w, input, ab, label);
        if (req.omega == 0.0) return cond;  // unconditional pass skipped
        return apply_cfg(cond, gmm_predict(w, input, ab, ""), req.omega);
    };

    PredictResponse resp;
    resp.pair.eps_target = branch(req.z_t, req.y_tgt);
    switch (req.mode) {
        case LossMode::SBP:
            resp.pair.eps_source = branch(req.z_t, req.y_src);
            break;
        case LossMode::DDS:
            if (!z_src_) throw BackendError("no_session", "dds mode needs begin_session(z_src) first");
            resp.pair.eps_source = branch(add_noise(*z_src_, *req.eps, ab), req.y_src);
            break;
        case LossMode::SDS:
            resp.pair.eps_source = *req.eps;
            break;
    }
    if (req.want_attention) {
        resp.attention = gmm_attention(w, req.z_t, ab, req.y_tgt, tokenize(req.y_tgt), false);
    }
    return resp;
}

std::vector<Token> GmmBackend::tokenize(const std::string& text) {
    std::vector<Token> out{{"<bos>", 0, 0, 0}};
    int index = 1;
    for (Word& w : split_words(text)) out.push_back({std::move(w.text), w.begin, w.end, index++});
    return out;
}

std::vector<float> GmmBackend::embed_text(const std::string& text) {
    const auto labels = world_->class_labels();
    std::vector<double> e(labels.size() + 1, 0.0);
    bool any = false;
    const auto words = split_words(text);
    for (std::size_t k = 0; k < labels.size(); ++k) {
        for (const Word& w : words) {
            if (word_names_class(w.text, labels[k])) {
                e[k] = 1.0;
                any = true;
                break;
            }
        }
    }
    if (!any) e.back() = 1.0;
    double n = 0.0;
    for (double v : e) n += v * v;
    n = std::sqrt(n);
    std::vector<float> out;
    for (double v : e) out.push_back(static_cast<float>(v / n));
    return out;
}

std::vector<float> GmmBackend::embed_image(const GridTensor& image) {
    const GridTensor z = encode(image);
    const auto labels = world_->class_labels();
    std::vector<double> e(labels.size() + 1, 0.0);
    e.back() = kUnknownFloor;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        for (const GmmComponent& c : world_->components) {
            if (c.class_label != labels[k]) continue;
            const Region& r = c.region;
            double acc = 0.0;
            for (std::size_t ch = 0; ch < z.shape().channels; ++ch) {
                for (std::size_t y = r.y0; y < r.y1; ++y) {
                    for (std::size_t x = r.x0; x < r.x1; ++x) {
                        const double d = static_cast<double>(z.at(ch, y, x)) - c.mean.at(ch, y, x);
                        acc += d * d;
                    }
                }
            }
            const double mse = acc / static_cast<double>(r.area() * z.shape().channels);
            e[k] = std::max(e[k], std::exp(-mse / kEmbedTemperature));
        }
    }
    double n = 0.0;
    for (double v : e) n += v * v;
    n = std::sqrt(n);
    std::vector<float> out;
    for (double v : e) out.push_back(static_cast<float>(v / n));
    return out;
}

std::unique_ptr<DenoiserBackend> GmmBackend::clone() const {
    auto b = std::make_unique<GmmBackend>(*this);
    b->z_src_.reset();
    return b;
}

}  // namespace lusd
