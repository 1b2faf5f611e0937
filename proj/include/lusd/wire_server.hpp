#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "lusd/backend.hpp"

namespace httplib {
class Server;
}

namespace lusd {

/// Serves any DenoiserBackend over the wire protocol. Used to run the
/// analytic backend out of process and to exercise the remote client.
/// Each /session gets its own clone of the backend.
class WireServer {
public:
    explicit WireServer(std::unique_ptr<DenoiserBackend> backend);
    ~WireServer();

    WireServer(const WireServer&) = delete;
    WireServer& operator=(const WireServer&) = delete;

    /// Binds and serves on a background thread; port 0 picks a free port.
    /// Returns the bound port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Serves on the calling thread until stop().
    void listen(const std::string& host, int port);
    void stop();

    std::string url() const;
    std::size_t requests_served() const;

private:
    void install_routes();

    std::unique_ptr<DenoiserBackend> backend_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::string host_;
    int port_ = 0;
    mutable std::mutex mu_;
    std::map<std::string, std::unique_ptr<DenoiserBackend>> sessions_;
    std::size_t next_session_ = 1;
    std::size_t served_ = 0;
};

}  // namespace lusd
