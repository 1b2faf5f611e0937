#include "lusd/protocol.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>

#include "lusd/error.hpp"

namespace lusd::wire {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

constexpr std::array<int, 256> make_reverse() {
    std::array<int, 256> r{};
    for (int& v : r) v = -1;
    for (int i = 0; i < 64; ++i) r[static_cast<unsigned char>(kAlphabet[i])] = i;
    return r;
}
constexpr auto kReverse = make_reverse();

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::uint32_t to_le(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

std::size_t as_size(const json& v, const char* what) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
        throw ProtocolError(std::string(what) + " must be an integer");
    }
    const auto n = v.get<std::int64_t>();
    if (n <= 0) throw ProtocolError(std::string(what) + " must be positive");
    return static_cast<std::size_t>(n);
}

Shape decode_shape3(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw ProtocolError(std::string(what) + " must be [c, h, w]");
    return Shape{as_size(j[0], what), as_size(j[1], what), as_size(j[2], what)};
}

json shape_json(const Shape& s) { return json::array({s.channels, s.height, s.width}); }

bool get_bool(const json& j, const char* key, bool fallback) {
    const auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_boolean()) throw ProtocolError(std::string(key) + " must be a boolean");
    return it->get<bool>();
}

std::string get_string(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_string()) throw ProtocolError(std::string(key) + " must be a string");
    return v.get<std::string>();
}

double get_number(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_number()) throw ProtocolError(std::string(key) + " must be a number");
    return v.get<double>();
}

}  // namespace

const json& require(const json& j, const char* key) {
    if (!j.is_object()) throw ProtocolError(std::string("expected an object holding '") + key + "'");
    const auto it = j.find(key);
    if (it == j.end()) throw ProtocolError(std::string("missing field '") + key + "'");
    return *it;
}

std::string base64_encode(std::string_view bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= bytes.size(); i += 3) {
        const std::uint32_t n = (static_cast<unsigned char>(bytes[i]) << 16) |
                                (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                                static_cast<unsigned char>(bytes[i + 2]);
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += kAlphabet[(n >> 6) & 63];
        out += kAlphabet[n & 63];
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        const std::uint32_t n = static_cast<unsigned char>(bytes[i]) << 16;
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += "==";
    } else if (rest == 2) {
        const std::uint32_t n = (static_cast<unsigned char>(bytes[i]) << 16) |
                                (static_cast<unsigned char>(bytes[i + 1]) << 8);
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += kAlphabet[(n >> 6) & 63];
        out += '=';
    }
    return out;
}

std::string base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw ProtocolError("base64 length is not a multiple of 4");
    std::string out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        const bool last = i + 4 == text.size();
        int v[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = text[i + k];
            if (c == '=' && last && k >= 2) {
                v[k] = 0;
                ++pad;
                continue;
            }
            if (pad > 0) throw ProtocolError("base64 padding in the middle of a quantum");
            v[k] = kReverse[static_cast<unsigned char>(c)];
            if (v[k] < 0) throw ProtocolError("invalid base64 character");
        }
        const std::uint32_t n = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
        out += static_cast<char>((n >> 16) & 0xff);
        if (pad < 2) out += static_cast<char>((n >> 8) & 0xff);
        if (pad < 1) out += static_cast<char>(n & 0xff);
    }
    return out;
}

json encode_tensor(const GridTensor& t) {
    const Shape& s = t.shape();
    return encode_tensor(t, {s.channels, s.height, s.width});
}

json encode_tensor(const GridTensor& t, const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    if (n != t.size()) throw ShapeError("encode_tensor: shape does not match element count");
    std::string bytes(t.size() * 4, '\0');
    for (std::size_t i = 0; i < t.size(); ++i) {
        const std::uint32_t le = to_le(std::bit_cast<std::uint32_t>(t[i]));
        std::memcpy(bytes.data() + i * 4, &le, 4);
    }
    return json{{"shape", shape}, {"dtype", "f32"}, {"data", base64_encode(bytes)}};
}

GridTensor decode_tensor(const json& j) {
    const json& shape = require(j, "shape");
    if (!shape.is_array() || shape.empty() || shape.size() > 3) {
        throw ProtocolError("tensor shape must be an array of rank 1 to 3");
    }
    std::vector<std::size_t> dims;
    for (const json& d : shape) dims.push_back(as_size(d, "tensor dimension"));
    while (dims.size() < 3) dims.insert(dims.begin(), 1);
    const Shape s{dims[0], dims[1], dims[2]};

    if (get_string(j, "dtype") != "f32") throw ProtocolError("unsupported tensor dtype");
    const json& data = require(j, "data");
    if (!data.is_string()) throw ProtocolError("tensor data must be a base64 string");
    const std::string bytes = base64_decode(data.get_ref<const std::string&>());
    if (bytes.size() != s.numel() * 4) {
        throw ProtocolError("tensor payload has " + std::to_string(bytes.size()) +
                            " bytes, shape " + s.str() + " needs " + std::to_string(s.numel() * 4));
    }
    std::vector<float> values(s.numel());
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint32_t le;
        std::memcpy(&le, bytes.data() + i * 4, 4);
        values[i] = std::bit_cast<float>(to_le(le));
    }
    try {
        return GridTensor::from_external(s, std::move(values));
    } catch (const ShapeError& e) {
        throw ProtocolError(e.what());
    }
}

json encode_handshake(const BackendHandshake& h) {
    const AttentionSpec& a = h.attention;
    const Capabilities& c = h.capabilities;
    return json{{"protocol_version", h.protocol_version},
                {"backend", h.backend_name},
                {"latent_shape", shape_json(h.latent_shape)},
                {"image_shape", shape_json(h.image_shape)},
                {"schedule", {{"alpha_bar", h.schedule.values()}}},
                {"attention",
                 {{"self_resolution", a.self_resolution},
                  {"cross_resolution", a.cross_resolution},
                  {"self_layers", a.self_layers},
                  {"cross_layers", a.cross_layers}}},
                {"capabilities",
                 {{"encode", c.encode},
                  {"decode", c.decode},
                  {"attention", c.attention},
                  {"embeddings", c.embeddings},
                  {"tokenize", c.tokenize}}}};
}

BackendHandshake decode_handshake(const json& j) {
    BackendHandshake h;
    h.protocol_version = get_string(j, "protocol_version");
    if (h.protocol_version != kProtocolVersion) {
        throw ProtocolError("protocol version mismatch: backend speaks '" + h.protocol_version +
                            "', client expects '" + kProtocolVersion + "'");
    }
    if (j.contains("backend") && j["backend"].is_string()) h.backend_name = j["backend"].get<std::string>();
    h.latent_shape = decode_shape3(require(j, "latent_shape"), "latent_shape");
    h.image_shape = decode_shape3(require(j, "image_shape"), "image_shape");

    const json& ab = require(require(j, "schedule"), "alpha_bar");
    if (!ab.is_array()) throw ProtocolError("schedule.alpha_bar must be an array");
    std::vector<double> values;
    for (const json& v : ab) {
        if (!v.is_number()) throw ProtocolError("schedule.alpha_bar must hold numbers");
        values.push_back(v.get<double>());
    }
    try {
        h.schedule = NoiseSchedule(std::move(values));
    } catch (const ConfigError& e) {
        throw ProtocolError(std::string("invalid schedule: ") + e.what());
    }

    const json& a = require(j, "attention");
    h.attention.self_resolution = as_size(require(a, "self_resolution"), "self_resolution");
    h.attention.cross_resolution = as_size(require(a, "cross_resolution"), "cross_resolution");
    h.attention.self_layers = static_cast<int>(as_size(require(a, "self_layers"), "self_layers"));
    h.attention.cross_layers = static_cast<int>(as_size(require(a, "cross_layers"), "cross_layers"));

    const json& c = require(j, "capabilities");
    h.capabilities.encode = get_bool(c, "encode", false);
    h.capabilities.decode = get_bool(c, "decode", false);
    h.capabilities.attention = get_bool(c, "attention", false);
    h.capabilities.embeddings = get_bool(c, "embeddings", false);
    h.capabilities.tokenize = get_bool(c, "tokenize", false);
    try {
        h.validate();
    } catch (const Error& e) {
        throw ProtocolError(e.what());
    }
    return h;
}

json encode_predict_request(const PredictRequest& r) {
    json j{{"z_t", encode_tensor(r.z_t)},
           {"t", r.t},
           {"y_tgt", r.y_tgt},
           {"y_src", r.y_src},
           {"omega", r.omega},
           {"want_attention", r.want_attention},
           {"mode", std::string(to_string(r.mode))}};
    if (r.eps) j["eps"] = encode_tensor(*r.eps);
    return j;
}

PredictRequest decode_predict_request(const json& j) {
    PredictRequest r;
    r.z_t = decode_tensor(require(j, "z_t"));
    const json& t = require(j, "t");
    if (!t.is_number_integer()) throw ProtocolError("t must be an integer");
    r.t = t.get<int>();
    r.y_tgt = get_string(j, "y_tgt");
    r.y_src = get_string(j, "y_src");
    r.omega = get_number(j, "omega");
    r.want_attention = get_bool(j, "want_attention", false);
    try {
        r.mode = parse_loss_mode(get_string(j, "mode"));
    } catch (const ConfigError& e) {
        throw ProtocolError(e.what());
    }
    if (j.contains("eps")) r.eps = decode_tensor(j["eps"]);
    if (r.mode != LossMode::SBP && !r.eps) throw ProtocolError("eps is required in dds and sds modes");
    if (r.eps && r.eps->shape() != r.z_t.shape()) throw ProtocolError("eps shape differs from z_t");
    return r;
}

json encode_predict_response(const PredictResponse& r) {
    json j{{"eps_target", encode_tensor(r.pair.eps_target)},
           {"eps_source", encode_tensor(r.pair.eps_source)}};
    if (r.attention) {
        json self = json::array();
        for (const GridTensor& m : r.attention->self_maps) self.push_back(encode_tensor(m));
        json cross = json::object();
        for (const auto& [token, layers] : r.attention->cross_maps) {
            json arr = json::array();
            for (const GridTensor& m : layers) arr.push_back(encode_tensor(m));
            cross[std::to_string(token)] = std::move(arr);
        }
        j["attention"] = {{"self", std::move(self)}, {"cross", std::move(cross)}};
    }
    return j;
}

PredictResponse decode_predict_response(const json& j) {
    PredictResponse r;
    r.pair.eps_target = decode_tensor(require(j, "eps_target"));
    r.pair.eps_source = decode_tensor(require(j, "eps_source"));
    if (r.pair.eps_target.shape() != r.pair.eps_source.shape()) {
        throw ProtocolError("eps_target and eps_source differ in shape");
    }
    if (j.contains("attention")) {
        const json& a = j["attention"];
        AttentionBundle bundle;
        const json& self = require(a, "self");
        if (!self.is_array()) throw ProtocolError("attention.self must be an array");
        for (const json& m : self) bundle.self_maps.push_back(decode_tensor(m));
        const json& cross = require(a, "cross");
        if (!cross.is_object()) throw ProtocolError("attention.cross must be an object");
        for (const auto& [key, layers] : cross.items()) {
            int token = 0;
            try {
                std::size_t used = 0;
                token = std::stoi(key, &used);
                if (used != key.size()) throw std::invalid_argument(key);
            } catch (const std::exception&) {
                throw ProtocolError("attention.cross key '" + key + "' is not a token index");
            }
            if (!layers.is_array()) throw ProtocolError("attention.cross entries must be arrays");
            auto& dst = bundle.cross_maps[token];
            for (const json& m : layers) dst.push_back(decode_tensor(m));
        }
        try {
            bundle.validate();
        } catch (const ShapeError& e) {
            throw ProtocolError(std::string("invalid attention payload: ") + e.what());
        }
        r.attention = std::move(bundle);
    }
    return r;
}

json encode_tokens(const std::vector<Token>& tokens) {
    json arr = json::array();
    for (const Token& t : tokens) {
        arr.push_back({{"text", t.text}, {"begin", t.begin}, {"end", t.end}, {"index", t.index}});
    }
    return json{{"tokens", std::move(arr)}};
}

std::vector<Token> decode_tokens(const json& j) {
    const json& arr = require(j, "tokens");
    if (!arr.is_array()) throw ProtocolError("tokens must be an array");
    std::vector<Token> out;
    for (const json& t : arr) {
        Token tok;
        tok.text = get_string(t, "text");
        const json& b = require(t, "begin");
        const json& e = require(t, "end");
        const json& i = require(t, "index");
        if (!b.is_number_unsigned() && !b.is_number_integer()) throw ProtocolError("token begin must be an integer");
        if (!e.is_number_unsigned() && !e.is_number_integer()) throw ProtocolError("token end must be an integer");
        if (!i.is_number_integer()) throw ProtocolError("token index must be an integer");
        if (b.get<std::int64_t>() < 0 || e.get<std::int64_t>() < b.get<std::int64_t>()) {
            throw ProtocolError("token span is invalid");
        }
        tok.begin = b.get<std::size_t>();
        tok.end = e.get<std::size_t>();
        tok.index = i.get<int>();
        out.push_back(std::move(tok));
    }
    return out;
}

json encode_embedding(const std::vector<float>& e) { return json{{"embedding", e}}; }

std::vector<float> decode_embedding(const json& j) {
    const json& arr = require(j, "embedding");
    if (!arr.is_array() || arr.empty()) throw ProtocolError("embedding must be a non-empty array");
    std::vector<float> out;
    for (const json& v : arr) {
        if (!v.is_number()) throw ProtocolError("embedding must hold numbers");
        out.push_back(v.get<float>());
    }
    return out;
}

json error_body(std::string_view code, std::string_view message) {
    return json{{"error", {{"code", code}, {"message", message}}}};
}

}  // namespace lusd::wire
