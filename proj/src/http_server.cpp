#include "nightcast/http_server.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>

namespace nightcast {

using json = nlohmann::ordered_json;

namespace {

void send_json(httplib::Response& res, int status, const json& doc) {
    res.status = status;
    res.set_content(doc.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw ServiceError(400, "bad_request", "request body is not valid JSON", e.what());
    }
}

template <typename F>
httplib::Server::Handler guarded(F f, int ok_status = 200) {
    return [f, ok_status](const httplib::Request& req, httplib::Response& res) {
        try {
            send_json(res, ok_status, f(req));
        } catch (const ServiceError& e) {
            send_json(res, e.status(), e.body());
        } catch (const std::exception& e) {
            send_json(res, 500, json{{"code", "internal"}, {"message", e.what()}, {"detail", ""}});
        }
    };
}

std::string sse_frame(const SessionEvent& ev) {
    const json data{{"revision", ev.revision},
                    {"forecast_digest", ev.forecast_digest.empty() ? json(nullptr) : json(ev.forecast_digest)}};
    return "id: " + std::to_string(ev.revision) + "\nevent: revision\ndata: " + data.dump() + "\n\n";
}

}  // namespace

struct HttpServer::Impl {
    LiveService& svc;
    httplib::Server server;
    std::jthread thread;

    explicit Impl(LiveService& s) : svc(s) { routes(); }

    void routes() {
        server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
        server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type, Last-Event-ID");
            res.status = 204;
        });

        server.Post("/api/sessions",
                    guarded([this](const httplib::Request& r) { return svc.create_session(parse_body(r)); }, 201));
        server.Get(R"(/api/sessions/([^/]+))",
                   guarded([this](const httplib::Request& r) { return svc.get_session(r.matches[1]); }));
        server.Post(R"(/api/sessions/([^/]+)/declarations)", guarded([this](const httplib::Request& r) {
                        return svc.declare(r.matches[1], parse_body(r));
                    }));
        server.Get(R"(/api/sessions/([^/]+)/forecast)", guarded([this](const httplib::Request& r) {
                       const std::string metric = r.has_param("metric") ? r.get_param_value("metric") : "abs";
                       return svc.forecast(r.matches[1], metric);
                   }));
        server.Get(R"(/api/sessions/([^/]+)/groups)",
                   guarded([this](const httplib::Request& r) { return svc.groups(r.matches[1]); }));
        server.Post(R"(/api/sessions/([^/]+)/optimize)", guarded(
                        [this](const httplib::Request& r) { return svc.start_optimize(r.matches[1], parse_body(r)); },
                        202));
        server.Get(R"(/api/jobs/([^/]+))",
                   guarded([this](const httplib::Request& r) { return svc.get_job(r.matches[1]); }));
        server.Post(R"(/api/sessions/([^/]+)/apply/([^/]+))", guarded([this](const httplib::Request& r) {
                        return svc.apply_job(r.matches[1], r.matches[2]);
                    }));
        server.Get(R"(/api/sessions/([^/]+)/events)", [this](const httplib::Request& r, httplib::Response& res) {
            events(r, res);
        });

        server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
            if (!res.body.empty()) return;
            send_json(res, res.status,
                      json{{"code", res.status == 404 ? "not_found" : "http_error"},
                           {"message", "no route for " + req.method + " " + req.path},
                           {"detail", ""}});
        });
    }

    void events(const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        SessionEvent first;
        try {
            first = svc.current_event(id);
        } catch (const ServiceError& e) {
            send_json(res, e.status(), e.body());
            return;
        }
        // resume after Last-Event-ID; otherwise start with the current state
        std::optional<std::uint64_t> last;
        const auto header = req.get_header_value("Last-Event-ID");
        if (!header.empty()) {
            try {
                last = std::stoull(header);
            } catch (const std::exception&) {
            }
        }
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream",
            [this, id, last, first, sent_first = false](std::size_t, httplib::DataSink& sink) mutable {
                if (svc.stopping()) {
                    sink.done();
                    return false;
                }
                if (!sent_first) {
                    sent_first = true;
                    if (!last || first.revision > *last) {
                        last = first.revision;
                        const auto frame = sse_frame(first);
                        return sink.write(frame.data(), frame.size());
                    }
                }
                std::optional<SessionEvent> ev;
                try {
                    ev = svc.wait_event(id, *last, std::chrono::seconds(10));
                } catch (const ServiceError&) {
                    sink.done();
                    return false;
                }
                if (!ev) {
                    if (svc.stopping()) {
                        sink.done();
                        return false;
                    }
                    static const std::string keepalive = ": keepalive\n\n";
                    return sink.write(keepalive.data(), keepalive.size());
                }
                last = ev->revision;
                const auto frame = sse_frame(*ev);
                return sink.write(frame.data(), frame.size());
            });
    }
};

HttpServer::HttpServer(LiveService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int p = impl_->server.bind_to_any_port(host);
        if (p < 0) throw std::runtime_error("cannot bind to " + host);
        return p;
    }
    if (!impl_->server.bind_to_port(host, port))
        throw std::runtime_error("cannot bind to " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

int HttpServer::start(const std::string& host, int port) {
    const int bound = bind(host, port);
    impl_->thread = std::jthread([this] { listen(); });
    impl_->server.wait_until_ready();
    return bound;
}

void HttpServer::stop() {
    if (!impl_) return;
    impl_->svc.shutdown();
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace nightcast
