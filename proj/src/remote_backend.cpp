#include "lusd/remote_backend.hpp"

#include <httplib.h>

#include <thread>

#include "lusd/error.hpp"
#include "lusd/protocol.hpp"

namespace lusd {

using nlohmann::json;

RemoteBackend::RemoteBackend(RemoteOptions opts) : opts_(std::move(opts)) {
    if (opts_.url.rfind("http://", 0) != 0) {
        throw ConfigError("backend url must start with http:// (got '" + opts_.url + "')");
    }
    while (!opts_.url.empty() && opts_.url.back() == '/') opts_.url.pop_back();
    client_ = std::make_unique<httplib::Client>(opts_.url);
    if (!client_->is_valid()) throw ConfigError("invalid backend url '" + opts_.url + "'");
    client_->set_connection_timeout(std::chrono::seconds(5));
    client_->set_read_timeout(opts_.timeout);
    client_->set_write_timeout(opts_.timeout);
    client_->set_keep_alive(true);
}

RemoteBackend::~RemoteBackend() = default;

json RemoteBackend::call(const char* method, const std::string& path, const json* body) {
    std::lock_guard lock(mu_);
    httplib::Headers headers;
    if (session_) headers.emplace(kSessionHeader, *session_);
    const std::string payload = body ? body->dump() : std::string();

    httplib::Result res;
    for (int attempt = 0;; ++attempt) {
        res = std::string_view(method) == "GET" ? client_->Get(path, headers)
                                                : client_->Post(path, headers, payload, "application/json");
        if (res) break;
        if (attempt >= opts_.retries) {
            throw TransportError(std::string(method) + " " + opts_.url + path + ": " + httplib::to_string(res.error()));
        }
        std::this_thread::sleep_for(opts_.retry_backoff * (attempt + 1));
    }

    json doc;
    try {
        doc = json::parse(res->body);
    } catch (const json::exception&) {
        if (res->status < 200 || res->status >= 300) {
            throw BackendError("http_" + std::to_string(res->status), "non-JSON error response from " + path);
        }
        throw ProtocolError(path + ": response is not valid JSON");
    }
    if (res->status < 200 || res->status >= 300) {
        const auto err = doc.find("error");
        if (err == doc.end() || !err->is_object()) {
            throw ProtocolError(path + ": HTTP " + std::to_string(res->status) + " without an error payload");
        }
        throw BackendError(err->value("code", "unknown"), err->value("message", ""));
    }
    return doc;
}

const BackendHandshake& RemoteBackend::cached_handshake() {
    if (!handshake_) handshake();
    return *handshake_;
}

BackendHandshake RemoteBackend::handshake() {
    BackendHandshake h = wire::decode_handshake(call("GET", "/handshake", nullptr));
    handshake_ = h;
    return h;
}

GridTensor RemoteBackend::encode(const GridTensor& image) {
    const json body{{"image", wire::encode_tensor(image)}};
    GridTensor z = wire::decode_tensor(wire::require(call("POST", "/encode", &body), "latent"));
    if (z.shape() != cached_handshake().latent_shape) {
        throw ProtocolError("/encode returned " + z.shape().str() + ", handshake declared " +
                            cached_handshake().latent_shape.str());
    }
    return z;
}

GridTensor RemoteBackend::decode(const GridTensor& latent) {
    const json body{{"latent", wire::encode_tensor(latent)}};
    GridTensor img = wire::decode_tensor(wire::require(call("POST", "/decode", &body), "image"));
    if (img.shape() != cached_handshake().image_shape) {
        throw ProtocolError("/decode returned " + img.shape().str() + ", handshake declared " +
                            cached_handshake().image_shape.str());
    }
    return img;
}

void RemoteBackend::begin_session(const GridTensor& z_src) {
    const json body{{"z_src", wire::encode_tensor(z_src)}};
    const json res = call("POST", "/session", &body);
    const json& id = wire::require(res, "session");
    if (!id.is_string() || id.get_ref<const std::string&>().empty()) {
        throw ProtocolError("/session: session id must be a non-empty string");
    }
    std::lock_guard lock(mu_);
    session_ = id.get<std::string>();
}

PredictResponse RemoteBackend::predict(const PredictRequest& request) {
    const Shape expect = cached_handshake().latent_shape;
    const json body = wire::encode_predict_request(request);
    PredictResponse resp = wire::decode_predict_response(call("POST", "/predict", &body));
    if (resp.pair.eps_target.shape() != expect || resp.pair.eps_source.shape() != expect) {
        throw ProtocolError("/predict returned " + resp.pair.eps_target.shape().str() + ", handshake declared " +
                            expect.str());
    }
    if (request.want_attention && !resp.attention) throw ProtocolError("/predict omitted requested attention");
    if (!request.want_attention && resp.attention) throw ProtocolError("/predict sent attention nobody asked for");
    return resp;
}

std::vector<Token> RemoteBackend::tokenize(const std::string& text) {
    const json body{{"text", text}};
    return wire::decode_tokens(call("POST", "/tokenize", &body));
}

std::vector<float> RemoteBackend::embed_text(const std::string& text) {
    const json body{{"text", text}};
    return wire::decode_embedding(call("POST", "/embed_text", &body));
}

std::vector<float> RemoteBackend::embed_image(const GridTensor& image) {
    const json body{{"image", wire::encode_tensor(image)}};
    return wire::decode_embedding(call("POST", "/embed_image", &body));
}

std::unique_ptr<DenoiserBackend> RemoteBackend::clone() const { return std::make_unique<RemoteBackend>(opts_); }

}  // namespace lusd
