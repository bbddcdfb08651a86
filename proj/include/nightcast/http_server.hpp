#pragma once

#include <memory>
#include <string>

#include "nightcast/liveservice.hpp"

namespace nightcast {

// JSON-over-HTTP front end for a LiveService, with a server-sent event
// stream per session.
class HttpServer {
public:
    explicit HttpServer(LiveService& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    // Serves until stop(); call after bind().
    void listen();
    // bind + listen on a background thread.
    int start(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace nightcast
