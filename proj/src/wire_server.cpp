#include "lusd/wire_server.hpp"

#include <httplib.h>

#include "lusd/error.hpp"
#include "lusd/protocol.hpp"
#include "lusd/remote_backend.hpp"

namespace lusd {

using nlohmann::json;

namespace {

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

std::string text_field(const json& j) {
    const json& t = wire::require(j, "text");
    if (!t.is_string()) throw ProtocolError("text must be a string");
    return t.get<std::string>();
}

}  // namespace

WireServer::WireServer(std::unique_ptr<DenoiserBackend> backend)
    : backend_(std::move(backend)), server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

WireServer::~WireServer() { stop(); }

void WireServer::install_routes() {
    // Runs fn on the shared backend under the server lock, mapping errors
    // onto the protocol's error payload.
    auto handle = [this](auto fn) {
        return [this, fn](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mu_);
            ++served_;
            try {
                const json body = req.body.empty() ? json::object() : json::parse(req.body);
                reply(res, 200, fn(req, body));
            } catch (const json::exception& e) {
                reply(res, 400, wire::error_body("bad_request", e.what()));
            } catch (const ProtocolError& e) {
                reply(res, 400, wire::error_body("bad_request", e.what()));
            } catch (const BackendError& e) {
                reply(res, 422, wire::error_body(e.code(), e.what()));
            } catch (const std::exception& e) {
                reply(res, 500, wire::error_body("internal", e.what()));
            }
        };
    };

    server_->Get("/handshake", handle([this](const httplib::Request&, const json&) {
        return wire::encode_handshake(backend_->handshake());
    }));
    server_->Post("/encode", handle([this](const httplib::Request&, const json& b) {
        return json{{"latent", wire::encode_tensor(backend_->encode(wire::decode_tensor(wire::require(b, "image"))))}};
    }));
    server_->Post("/decode", handle([this](const httplib::Request&, const json& b) {
        return json{{"image", wire::encode_tensor(backend_->decode(wire::decode_tensor(wire::require(b, "latent"))))}};
    }));
    server_->Post("/session", handle([this](const httplib::Request&, const json& b) {
        const GridTensor z_src = wire::decode_tensor(wire::require(b, "z_src"));
        auto session = backend_->clone();
        session->begin_session(z_src);
        const std::string id = "s" + std::to_string(next_session_++);
        sessions_[id] = std::move(session);
        return json{{"session", id}};
    }));
    server_->Post("/predict", handle([this](const httplib::Request& req, const json& b) {
        const PredictRequest pr = wire::decode_predict_request(b);
        DenoiserBackend* target = backend_.get();
        if (req.has_header(kSessionHeader)) {
            const auto it = sessions_.find(req.get_header_value(kSessionHeader));
            if (it == sessions_.end()) throw BackendError("unknown_session", "session is not registered");
            target = it->second.get();
        }
        return wire::encode_predict_response(target->predict(pr));
    }));
    server_->Post("/tokenize", handle([this](const httplib::Request&, const json& b) {
        return wire::encode_tokens(backend_->tokenize(text_field(b)));
    }));
    server_->Post("/embed_text", handle([this](const httplib::Request&, const json& b) {
        return wire::encode_embedding(backend_->embed_text(text_field(b)));
    }));
    server_->Post("/embed_image", handle([this](const httplib::Request&, const json& b) {
        return wire::encode_embedding(backend_->embed_image(wire::decode_tensor(wire::require(b, "image"))));
    }));
}

int WireServer::start(const std::string& host, int port) {
    host_ = host;
    port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (port_ <= 0) throw TransportError("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void WireServer::listen(const std::string& host, int port) {
    host_ = host;
    port_ = port;
    if (!server_->listen(host, port)) throw TransportError("cannot listen on " + host + ":" + std::to_string(port));
}

void WireServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string WireServer::url() const { return "http://" + host_ + ":" + std::to_string(port_); }

std::size_t WireServer::requests_served() const {
    std::lock_guard lock(mu_);
    return served_;
}

}  // namespace lusd
