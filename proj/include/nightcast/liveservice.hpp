#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "nightcast/electiondata.hpp"
#include "nightcast/gaopt.hpp"
#include "nightcast/regression.hpp"

namespace nightcast {

// Maps onto an HTTP status and the `{code, message, detail}` error body.
class ServiceError : public std::runtime_error {
public:
    ServiceError(int status, std::string code, const std::string& message, std::string detail = {})
        : std::runtime_error(message), status_(status), code_(std::move(code)), detail_(std::move(detail)) {}

    int status() const { return status_; }
    const std::string& code() const { return code_; }
    const std::string& detail() const { return detail_; }
    nlohmann::ordered_json body() const;

private:
    int status_;
    std::string code_;
    std::string detail_;
};

// Live-mode objective for when the true totals are unknown. A fixed 20% of
// the declared stations is held out, forecast from the remaining declared
// stations, and scored by RMSE against the held-out declared votes. Genes
// cover declared stations only (dataset order); the labels of undeclared
// stations are taken from `base_grouping`.
class LeaveOutObjective : public Objective {
public:
    LeaveOutObjective(const Dataset& ds, const DeclarationState& decl, std::vector<int> base_grouping,
                      Metric metric, std::uint64_t seed, double holdout_fraction = 0.2);

    std::size_t gene_count() const override { return declared_index_.size(); }
    bool counts_as_declared(std::size_t) const override { return true; }
    double raw(std::span<const int> genes) const override;
    std::size_t default_min_declared() const override { return min_declared_; }

    // Full grouping with `genes` written into the declared positions.
    std::vector<int> expand(std::span<const int> genes) const;
    std::vector<int> compress(std::span<const int> grouping) const;
    const std::vector<std::size_t>& holdout() const { return holdout_; }

private:
    std::vector<int> base_;
    std::vector<std::size_t> declared_index_;
    std::vector<std::size_t> holdout_;
    std::vector<std::vector<double>> holdout_votes_;
    std::unique_ptr<ForecastEngine> engine_;
    Metric metric_;
    std::size_t min_declared_;
};

enum class JobStatus { queued, running, done, failed };
std::string_view to_string(JobStatus s);

struct SessionEvent {
    std::uint64_t revision = 0;
    std::string forecast_digest;  // empty before the first declaration
};

// Election-night sessions with an append-only event log. All public methods
// are thread safe; mutations of one session are serialized.
class LiveService {
public:
    // With a data directory, `events.jsonl` in it is replayed and appended to.
    explicit LiveService(std::optional<std::filesystem::path> data_dir = std::nullopt);
    ~LiveService();
    LiveService(const LiveService&) = delete;
    LiveService& operator=(const LiveService&) = delete;

    // Body is a dataset document, or {"dataset", "grouping"?, "n_groups"?}.
    nlohmann::ordered_json create_session(const nlohmann::ordered_json& body);
    nlohmann::ordered_json get_session(const std::string& id) const;
    nlohmann::ordered_json declare(const std::string& id, const nlohmann::ordered_json& body);
    nlohmann::ordered_json forecast(const std::string& id, std::string_view metric) const;
    nlohmann::ordered_json groups(const std::string& id) const;
    // Body: GaConfig overrides plus an optional "mode" of "live" or "simulation".
    nlohmann::ordered_json start_optimize(const std::string& id, const nlohmann::ordered_json& body);
    nlohmann::ordered_json get_job(const std::string& job_id) const;
    nlohmann::ordered_json apply_job(const std::string& id, const std::string& job_id);

    // Everything replay must reproduce: dataset, grouping, declarations,
    // revision and forecast.
    nlohmann::ordered_json session_state(const std::string& id) const;
    std::vector<std::string> session_ids() const;

    SessionEvent current_event(const std::string& id) const;
    // Blocks until the revision exceeds `after` or the timeout passes.
    std::optional<SessionEvent> wait_event(const std::string& id, std::uint64_t after,
                                           std::chrono::milliseconds timeout) const;
    // Blocks until the job leaves queued/running.
    void wait_job(const std::string& job_id) const;

    // Wakes waiters and cancels jobs; later calls to wait_event return nullopt.
    void shutdown();
    bool stopping() const;

private:
    struct Session;
    struct Job;

    std::shared_ptr<Session> find_session(const std::string& id) const;
    std::shared_ptr<Job> find_job(const std::string& id) const;
    void append_log(const nlohmann::ordered_json& event);
    void replay(const std::filesystem::path& log);
    void insert_session(std::shared_ptr<Session> s);
    void apply_declaration(Session& s, const std::string& station, const VoteVector& votes);
    void apply_grouping(Session& s, std::vector<int> labels);

    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::map<std::string, std::shared_ptr<Job>> jobs_;
    std::uint64_t next_session_ = 1;
    std::uint64_t next_job_ = 1;

    std::mutex log_mutex_;
    std::optional<std::ofstream> log_;
    std::atomic<bool> stopping_{false};
};

}  // namespace nightcast
