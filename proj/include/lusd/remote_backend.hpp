#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "lusd/backend.hpp"

namespace httplib {
class Client;
}

namespace lusd {

inline constexpr const char* kSessionHeader = "X-Lusd-Session";

struct RemoteOptions {
    std::string url;  // http://host:port
    /// Extra attempts after a transport failure. Protocol and backend
    /// errors are never retried.
    int retries = 2;
    std::chrono::milliseconds retry_backoff{200};
    std::chrono::seconds timeout{120};
};

/// Client side of the wire protocol. Requests on one instance are
/// serialized; clone() opens an independent connection with its own session.
///
/// Beyond the six documented endpoints the client uses POST /session
/// {"z_src": tensor} -> {"session": id} to register the DDS source latent;
/// later /predict calls carry the id in the X-Lusd-Session header.
class RemoteBackend final : public DenoiserBackend {
public:
    explicit RemoteBackend(RemoteOptions opts);
    ~RemoteBackend() override;

    BackendHandshake handshake() override;
    GridTensor encode(const GridTensor& image) override;
    GridTensor decode(const GridTensor& latent) override;
    void begin_session(const GridTensor& z_src) override;
    PredictResponse predict(const PredictRequest& request) override;
    std::vector<Token> tokenize(const std::string& text) override;
    std::vector<float> embed_text(const std::string& text) override;
    std::vector<float> embed_image(const GridTensor& image) override;
    std::unique_ptr<DenoiserBackend> clone() const override;

    const std::optional<std::string>& session() const noexcept { return session_; }

private:
    nlohmann::json call(const char* method, const std::string& path, const nlohmann::json* body);
    const BackendHandshake& cached_handshake();

    RemoteOptions opts_;
    std::unique_ptr<httplib::Client> client_;
    std::mutex mu_;
    std::optional<BackendHandshake> handshake_;
    std::optional<std::string> session_;
};

}  // namespace lusd
