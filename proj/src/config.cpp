#include "lusd/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "lusd/error.hpp"

namespace lusd {

std::string_view to_string(LossMode mode) {
    switch (mode) {
        case LossMode::SBP: return "sbp";
        case LossMode::DDS: return "dds";
        case LossMode::SDS: return "sds";
    }
    return "sbp";
}

LossMode parse_loss_mode(std::string_view text) {
    if (text == "sbp" || text == "SBP") return LossMode::SBP;
    if (text == "dds" || text == "DDS") return LossMode::DDS;
    if (text == "sds" || text == "SDS") return LossMode::SDS;
    throw ConfigError("unknown loss mode '" + std::string(text) + "' (expected sbp|dds|sds)");
}

std::string_view to_string(GradReduction r) {
    return r == GradReduction::Sum ? "sum" : "spatial_mean";
}

GradReduction parse_grad_reduction(std::string_view text) {
    if (text == "sum") return GradReduction::Sum;
    if (text == "spatial_mean") return GradReduction::SpatialMean;
    throw ConfigError("unknown grad reduction '" + std::string(text) +
                      "' (expected spatial_mean|sum)");
}

namespace {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

double parse_double(std::string_view key, std::string_view v) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
        throw ConfigError("config key '" + std::string(key) + "': not a number: '" +
                          std::string(v) + "'");
    }
    return out;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view v) {
    Int out{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw ConfigError("config key '" + std::string(key) + "': not an integer: '" +
                          std::string(v) + "'");
    }
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ConfigError("config key '" + std::string(key) + "': not a boolean: '" +
                      std::string(v) + "'");
}

struct Field {
    std::string name;
    std::function<void(EngineConfig&, std::string_view)> set;
    std::function<std::string(const EngineConfig&)> get;
    bool quoted = false;
};

template <typename M>
Field double_field(std::string name, M member) {
    return {name,
            [name, member](EngineConfig& c, std::string_view v) { c.*member = parse_double(name, v); },
            [member](const EngineConfig& c) { return format_double(c.*member); }};
}

template <typename M>
Field int_field(std::string name, M member) {
    return {name,
            [name, member](EngineConfig& c, std::string_view v) {
                c.*member = parse_int<std::remove_reference_t<decltype(c.*member)>>(name, v);
            },
            [member](const EngineConfig& c) { return std::to_string(c.*member); }};
}

Field bool_field(std::string name, bool EngineConfig::*member) {
    return {name,
            [name, member](EngineConfig& c, std::string_view v) { c.*member = parse_bool(name, v); },
            [member](const EngineConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back(int_field("steps", &EngineConfig::steps));
        f.push_back(double_field("lr", &EngineConfig::lr));
        f.push_back(double_field("lambda", &EngineConfig::lambda));
        f.push_back(double_field("ema_alpha", &EngineConfig::ema_alpha));
        f.push_back(double_field("eta0", &EngineConfig::eta0));
        f.push_back(double_field("eta_decay", &EngineConfig::eta_decay));
        f.push_back(double_field("gamma_lo", &EngineConfig::gamma_lo));
        f.push_back(double_field("gamma_hi", &EngineConfig::gamma_hi));
        f.push_back(double_field("gamma_span", &EngineConfig::gamma_span));
        f.push_back(int_field("t_min", &EngineConfig::t_min));
        f.push_back(int_field("t_max", &EngineConfig::t_max));
        f.push_back(double_field("cfg_omega", &EngineConfig::cfg_omega));
        f.push_back({"loss_mode",
                     [](EngineConfig& c, std::string_view v) { c.loss_mode = parse_loss_mode(v); },
                     [](const EngineConfig& c) { return std::string(to_string(c.loss_mode)); },
                     true});
        f.push_back(int_field("max_resamples", &EngineConfig::max_resamples));
        f.push_back(int_field("seed", &EngineConfig::seed));
        f.push_back(bool_field("use_mask", &EngineConfig::use_mask));
        f.push_back(bool_field("use_ema", &EngineConfig::use_ema));
        f.push_back(bool_field("use_filter", &EngineConfig::use_filter));
        f.push_back(bool_field("use_normalize", &EngineConfig::use_normalize));
        f.push_back(bool_field("use_anneal", &EngineConfig::use_anneal));
        f.push_back({"grad_reduction",
                     [](EngineConfig& c, std::string_view v) {
                         c.grad_reduction = parse_grad_reduction(v);
                     },
                     [](const EngineConfig& c) { return std::string(to_string(c.grad_reduction)); },
                     true});
        // Empty string / "ramp" restores the linear ramp.
        f.push_back({"beta_fixed",
                     [](EngineConfig& c, std::string_view v) {
                         if (v.empty() || v == "ramp") {
                             c.beta_fixed.reset();
                         } else {
                             c.beta_fixed = parse_double("beta_fixed", v);
                         }
                     },
                     [](const EngineConfig& c) {
                         return c.beta_fixed ? format_double(*c.beta_fixed) : std::string("ramp");
                     },
                     false});
        f.push_back(int_field("mask_dump_every", &EngineConfig::mask_dump_every));
        f.push_back({"mask_dump_dir",
                     [](EngineConfig& c, std::string_view v) { c.mask_dump_dir = std::string(v); },
                     [](const EngineConfig& c) { return c.mask_dump_dir; },
                     true});
        return f;
    }();
    return table;
}

const Field& find_field(std::string_view key) {
    for (const Field& f : fields()) {
        if (f.name == key) return f;
    }
    throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

}  // namespace

void EngineConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (steps < 1) fail("steps must be >= 1");
    if (!(lr > 0.0)) fail("lr must be > 0");
    if (lambda < 0.0 || lambda > 1.0) fail("lambda must lie in [0, 1]");
    if (!(ema_alpha > 0.0 && ema_alpha <= 1.0)) fail("ema_alpha must lie in (0, 1]");
    if (eta0 < 0.0) fail("eta0 must be >= 0");
    if (!(eta_decay > 0.0 && eta_decay < 1.0)) fail("eta_decay must lie in (0, 1)");
    if (gamma_lo > gamma_hi) fail("gamma_lo must be <= gamma_hi");
    if (gamma_span < 0.0) fail("gamma_span must be >= 0");
    if (t_min < 0 || t_max > 999 || t_min > t_max) fail("need 0 <= t_min <= t_max <= 999");
    if (max_resamples < 1) fail("max_resamples must be >= 1");
    if (beta_fixed && (*beta_fixed < 0.0 || *beta_fixed > 1.0)) fail("beta_fixed must lie in [0, 1]");
    if (mask_dump_every < 0) fail("mask_dump_every must be >= 0");
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const Field& f : fields()) k.push_back(f.name);
        return k;
    }();
    return keys;
}

void set_config_value(EngineConfig& cfg, std::string_view key, std::string_view value) {
    find_field(key).set(cfg, value);
}

std::string get_config_value(const EngineConfig& cfg, std::string_view key) {
    return find_field(key).get(cfg);
}

void apply_config_text(EngineConfig& cfg, std::string_view text) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        std::string_view body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string_view key = trim(body.substr(0, eq));
        std::string_view value = trim(body.substr(eq + 1));
        if (!value.empty() && value.front() == '"') {
            const auto close = value.find('"', 1);
            if (close == std::string_view::npos) {
                throw ConfigError("config line " + std::to_string(line_no) + ": unterminated string");
            }
            const std::string_view rest = trim(value.substr(close + 1));
            if (!rest.empty() && rest.front() != '#') {
                throw ConfigError("config line " + std::to_string(line_no) + ": trailing characters");
            }
            value = value.substr(1, close - 1);
        } else {
            const auto hash = value.find('#');
            if (hash != std::string_view::npos) value = trim(value.substr(0, hash));
        }
        try {
            set_config_value(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void apply_config_file(EngineConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    apply_config_text(cfg, ss.str());
}

std::string to_config_text(const EngineConfig& cfg) {
    std::string out;
    for (const Field& f : fields()) {
        const std::string v = f.get(cfg);
        const bool quote = f.quoted || (f.name == "beta_fixed" && v == "ramp");
        out += f.name + " = " + (quote ? "\"" + v + "\"" : v) + "\n";
    }
    return out;
}

}  // namespace lusd
