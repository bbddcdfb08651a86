#include "nightcast/liveservice.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "nightcast/digest.hpp"
#include "nightcast/evaluation.hpp"

namespace nightcast {

using json = nlohmann::ordered_json;

json ServiceError::body() const {
    return json{{"code", code_}, {"message", what()}, {"detail", detail_}};
}

std::string_view to_string(JobStatus s) {
    switch (s) {
        case JobStatus::queued: return "queued";
        case JobStatus::running: return "running";
        case JobStatus::done: return "done";
        case JobStatus::failed: return "failed";
    }
    return "failed";
}

// ---------------------------------------------------------------------------

LeaveOutObjective::LeaveOutObjective(const Dataset& ds, const DeclarationState& decl,
                                     std::vector<int> base_grouping, Metric metric, std::uint64_t seed,
                                     double holdout_fraction)
    : base_(std::move(base_grouping)), metric_(metric), min_declared_(ds.parties().ref_size() - 1 + 2) {
    if (base_.size() != ds.size()) throw std::invalid_argument("base grouping has the wrong length");
    for (std::size_t k = 0; k < ds.size(); ++k)
        if (decl.is_declared(ds.stations()[k].id)) declared_index_.push_back(k);
    const std::size_t n = declared_index_.size();
    if (n < 2) throw NoDeclaredStations("leave-out fitness needs at least 2 declared stations");

    auto n_out = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(n)));
    n_out = std::clamp<std::size_t>(n_out, 1, n - 1);
    std::vector<std::size_t> order = declared_index_;
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    holdout_.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_out));
    std::sort(holdout_.begin(), holdout_.end());

    DeclarationState fit;
    for (std::size_t k : declared_index_) {
        if (std::binary_search(holdout_.begin(), holdout_.end(), k)) continue;
        const auto& c = ds.stations()[k];
        const auto& v = decl.votes(c.id);
        fit.declare(ds, c.id, std::span<const Count>(v.data(), v.size() - 1));
    }
    for (std::size_t k : holdout_) {
        const auto& v = decl.votes(ds.stations()[k].id);
        holdout_votes_.emplace_back(v.begin(), v.end());
    }
    engine_ = std::make_unique<ForecastEngine>(ds, fit);
}

std::vector<int> LeaveOutObjective::expand(std::span<const int> genes) const {
    if (genes.size() != declared_index_.size()) throw std::invalid_argument("gene vector has the wrong length");
    std::vector<int> full = base_;
    for (std::size_t i = 0; i < genes.size(); ++i) full[declared_index_[i]] = genes[i];
    return full;
}

std::vector<int> LeaveOutObjective::compress(std::span<const int> grouping) const {
    std::vector<int> genes;
    genes.reserve(declared_index_.size());
    for (std::size_t k : declared_index_) genes.push_back(grouping[k]);
    return genes;
}

double LeaveOutObjective::raw(std::span<const int> genes) const {
    const auto out = engine_->run(expand(genes));
    double ss = 0.0;
    std::size_t used = 0;
    for (std::size_t h = 0; h < holdout_.size(); ++h) {
        const auto row = out.station_votes.row(static_cast<Eigen::Index>(holdout_[h]));
        std::vector<double> projected(row.begin(), row.end());
        try {
            const double e = rmse(projected, holdout_votes_[h], metric_);
            ss += e * e;
            ++used;
        } catch (const std::invalid_argument&) {
            // shares are undefined for a station without valid votes
        }
    }
    return used == 0 ? 0.0 : std::sqrt(ss / static_cast<double>(used));
}

// ---------------------------------------------------------------------------

struct LiveService::Session {
    std::string id;
    mutable std::mutex m;
    mutable std::condition_variable cv;

    Dataset ds;
    Dataset declared_only;  // dataset without current votes, for group profiles
    std::vector<int> grouping;
    DeclarationState decl;
    std::vector<std::pair<std::string, std::uint64_t>> history;  // station id, revision
    std::uint64_t revision = 0;
    std::optional<ForecastResult> forecast;
    json forecast_doc;
    std::string digest;
    std::string active_job;
};

struct LiveService::Job {
    std::string id;
    std::string session;
    std::string mode;
    GaConfig config;
    std::uint64_t based_on_revision = 0;

    mutable std::mutex m;
    mutable std::condition_variable cv;
    JobStatus status = JobStatus::queued;
    std::size_t generation = 0;
    std::optional<double> best;
    std::vector<double> history;
    std::vector<int> labels;
    std::string error;
    std::string cancel_reason;

    std::jthread thread;
};

namespace {

int group_count(std::span<const int> labels) {
    int top = -1;
    for (int g : labels) top = std::max(top, g);
    return top + 1;
}

std::string forecast_digest(const json& doc) { return sha256_hex(doc.dump()).substr(0, 16); }

std::vector<int> parse_labels(const json& doc, std::size_t n) {
    if (!doc.is_array() || doc.size() != n)
        throw ServiceError(400, "bad_request", "grouping must be an array with one label per station");
    std::vector<int> labels;
    for (const auto& v : doc) {
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw ServiceError(400, "bad_request", "group labels must be nonnegative integers");
        labels.push_back(v.get<int>());
    }
    return labels;
}

}  // namespace

LiveService::LiveService(std::optional<std::filesystem::path> data_dir) {
    if (!data_dir) return;
    std::filesystem::create_directories(*data_dir);
    const auto log = *data_dir / "events.jsonl";
    if (std::filesystem::exists(log)) replay(log);
    log_.emplace(log, std::ios::app);
    if (!*log_) throw std::runtime_error("cannot open event log " + log.string());
}

LiveService::~LiveService() { shutdown(); }

void LiveService::shutdown() {
    stopping_ = true;
    std::vector<std::shared_ptr<Job>> jobs;
    std::vector<std::shared_ptr<Session>> sessions;
    {
        std::lock_guard lock(mutex_);
        for (auto& [id, j] : jobs_) jobs.push_back(j);
        for (auto& [id, s] : sessions_) sessions.push_back(s);
    }
    for (auto& j : jobs) {
        {
            std::lock_guard lock(j->m);
            if (j->cancel_reason.empty()) j->cancel_reason = "service shutting down";
        }
        j->thread.request_stop();
    }
    for (auto& j : jobs)
        if (j->thread.joinable()) j->thread.join();
    for (auto& s : sessions) {
        std::lock_guard lock(s->m);
        s->cv.notify_all();
    }
}

bool LiveService::stopping() const { return stopping_; }

std::shared_ptr<LiveService::Session> LiveService::find_session(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ServiceError(404, "not_found", "unknown session '" + id + "'");
    return it->second;
}

std::shared_ptr<LiveService::Job> LiveService::find_job(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw ServiceError(404, "not_found", "unknown job '" + id + "'");
    return it->second;
}

void LiveService::append_log(const json& event) {
    if (!log_) return;
    std::lock_guard lock(log_mutex_);
    *log_ << event.dump() << '\n';
    log_->flush();
    if (!*log_) throw std::runtime_error("writing the event log failed");
}

void LiveService::replay(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) lines.push_back(line);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        json ev;
        try {
            ev = json::parse(lines[i]);
        } catch (const json::parse_error&) {
            // a torn final line means the process died mid-append
            if (i + 1 == lines.size()) break;
            throw std::runtime_error(path.string() + ": line " + std::to_string(i + 1) + " is not JSON");
        }
        const auto type = ev.at("type").get<std::string>();
        const auto sid = ev.at("session").get<std::string>();
        if (type == "session_created") {
            auto s = std::make_shared<Session>();
            s->id = sid;
            s->ds = dataset_from_json(ev.at("dataset"));
            s->grouping = ev.at("grouping").get<std::vector<int>>();
            insert_session(s);
        } else if (type == "declaration") {
            auto s = find_session(sid);
            apply_declaration(*s, ev.at("station_id").get<std::string>(), ev.at("votes").get<VoteVector>());
        } else if (type == "grouping_applied") {
            auto s = find_session(sid);
            apply_grouping(*s, ev.at("labels").get<std::vector<int>>());
            const auto job = ev.value("job", std::string{});
            if (job.rfind("job-", 0) == 0)
                next_job_ = std::max<std::uint64_t>(next_job_, std::stoull(job.substr(4)) + 1);
        } else {
            throw std::runtime_error(path.string() + ": unknown event type '" + type + "'");
        }
    }
}

void LiveService::insert_session(std::shared_ptr<Session> s) {
    std::vector<Constituency> stripped = s->ds.stations();
    for (auto& c : stripped) c.cur_votes.reset();
    s->declared_only = Dataset(s->ds.parties(), std::move(stripped), s->ds.meta());
    std::lock_guard lock(mutex_);
    if (s->id.rfind("sess-", 0) == 0)
        next_session_ = std::max<std::uint64_t>(next_session_, std::stoull(s->id.substr(5)) + 1);
    sessions_[s->id] = std::move(s);
}

json LiveService::create_session(const json& body) {
    if (!body.is_object()) throw ServiceError(400, "bad_request", "request body must be a JSON object");
    const bool wrapped = body.contains("dataset");
    const json& doc = wrapped ? body["dataset"] : body;

    auto s = std::make_shared<Session>();
    try {
        s->ds = dataset_from_json(doc);
    } catch (const ParseError& e) {
        throw ServiceError(400, "invalid_dataset", e.what());
    } catch (const ValidationError& e) {
        throw ServiceError(400, "invalid_dataset", e.what());
    }
    if (s->ds.size() == 0) throw ServiceError(400, "invalid_dataset", "dataset has no stations");

    if (wrapped && body.contains("grouping")) {
        s->grouping = parse_labels(body["grouping"], s->ds.size());
    } else {
        std::size_t k = std::min<std::size_t>(10, s->ds.size());
        if (wrapped && body.contains("n_groups")) {
            if (!body["n_groups"].is_number_integer() || body["n_groups"].get<long long>() < 1)
                throw ServiceError(400, "bad_request", "n_groups must be a positive integer");
            k = std::min(body["n_groups"].get<std::size_t>(), s->ds.size());
        }
        s->grouping = kmeans_baseline(s->ds, k, 1).genes;
    }

    {
        std::lock_guard lock(mutex_);
        s->id = "sess-" + std::to_string(next_session_++);
    }
    append_log(json{{"type", "session_created"},
                    {"session", s->id},
                    {"dataset", dataset_to_json(s->ds)},
                    {"grouping", s->grouping}});
    const auto n = s->ds.size();
    const auto g = group_count(s->grouping);
    const auto id = s->id;
    insert_session(std::move(s));
    return json{{"id", id}, {"revision", 0}, {"station_count", n}, {"n_groups", g}};
}

void LiveService::apply_declaration(Session& s, const std::string& station, const VoteVector& votes) {
    s.decl.declare(s.ds, station, votes);
    s.forecast = assemble_forecast(s.ds, s.decl, s.grouping);
    s.forecast_doc = forecast_to_json(s.ds, *s.forecast);
    s.digest = forecast_digest(s.forecast_doc);
    ++s.revision;
    s.history.emplace_back(station, s.revision);
    s.cv.notify_all();
}

void LiveService::apply_grouping(Session& s, std::vector<int> labels) {
    if (labels.size() != s.ds.size()) throw std::invalid_argument("grouping has the wrong length");
    s.grouping = std::move(labels);
    if (!s.decl.empty()) {
        s.forecast = assemble_forecast(s.ds, s.decl, s.grouping);
        s.forecast_doc = forecast_to_json(s.ds, *s.forecast);
        s.digest = forecast_digest(s.forecast_doc);
    }
    ++s.revision;
    s.cv.notify_all();
}

json LiveService::get_session(const std::string& id) const {
    auto s = find_session(id);
    std::lock_guard lock(s->m);
    json decls = json::array();
    for (const auto& [station, rev] : s->history) {
        const auto& v = s->decl.votes(station);
        decls.push_back(json{{"station_id", station},
                             {"votes", VoteVector(v.begin(), v.end() - 1)},
                             {"revision", rev}});
    }
    const auto& p = s->ds.parties();
    return json{{"id", s->id},
                {"revision", s->revision},
                {"station_count", s->ds.size()},
                {"declared_count", s->decl.size()},
                {"parties",
                 {{"reference", std::vector<std::string>(p.ref().begin(), p.ref().end() - 1)},
                  {"current", std::vector<std::string>(p.cur().begin(), p.cur().end() - 1)}}},
                {"stations", [&] {
                     json st = json::array();
                     for (const auto& c : s->ds.stations())
                         st.push_back(json{{"id", c.id}, {"name", c.name}, {"electorate", c.electorate_cur}});
                     return st;
                 }()},
                {"n_groups", group_count(s->grouping)},
                {"grouping", s->grouping},
                {"declarations", std::move(decls)},
                {"active_job", s->active_job.empty() ? json(nullptr) : json(s->active_job)},
                {"forecast_digest", s->digest.empty() ? json(nullptr) : json(s->digest)}};
}

json LiveService::declare(const std::string& id, const json& body) {
    auto s = find_session(id);
    if (!body.is_object() || !body.contains("station_id") || !body["station_id"].is_string() ||
        !body.contains("votes") || !body["votes"].is_array())
        throw ServiceError(400, "bad_request", "expected {\"station_id\": string, \"votes\": [integers]}");
    const auto station = body["station_id"].get<std::string>();
    VoteVector votes;
    for (const auto& v : body["votes"]) {
        if (!v.is_number_integer()) throw ServiceError(400, "bad_request", "votes must be integers");
        votes.push_back(v.get<Count>());
    }

    std::lock_guard lock(s->m);
    const auto idx = s->ds.find(station);
    if (!idx) throw ServiceError(404, "unknown_station", "unknown station '" + station + "'");
    const auto& c = s->ds.stations()[*idx];
    const std::size_t n_party = s->ds.parties().cur_size() - 1;
    if (votes.size() != n_party)
        throw ServiceError(400, "bad_request",
                           "station " + station + ": expected " + std::to_string(n_party) + " vote counts, got " +
                               std::to_string(votes.size()));

    auto response = [&](bool unchanged) {
        return json{{"session", s->id},
                    {"revision", s->revision},
                    {"unchanged", unchanged},
                    {"forecast_digest", s->digest},
                    {"forecast", s->forecast_doc}};
    };
    if (s->decl.is_declared(station)) {
        const auto& prev = s->decl.votes(station);
        if (std::equal(votes.begin(), votes.end(), prev.begin())) return response(true);
        throw ServiceError(409, "conflict", "station " + station + " is already declared with different votes");
    }

    Count sum = 0;
    for (Count v : votes) {
        if (v < 0) throw ServiceError(422, "vote_bounds", "station " + station + ": negative vote count");
        sum += v;
    }
    if (sum > c.electorate_cur)
        throw ServiceError(422, "vote_bounds",
                           "station " + station + ": valid votes " + std::to_string(sum) + " exceed electorate " +
                               std::to_string(c.electorate_cur));

    append_log(json{{"type", "declaration"}, {"session", s->id}, {"station_id", station}, {"votes", votes}});
    apply_declaration(*s, station, votes);
    return response(false);
}

json LiveService::forecast(const std::string& id, std::string_view metric_name) const {
    auto s = find_session(id);
    Metric metric;
    try {
        metric = parse_metric(metric_name);
    } catch (const std::invalid_argument& e) {
        throw ServiceError(400, "bad_request", e.what());
    }
    std::lock_guard lock(s->m);
    if (!s->forecast) throw ServiceError(409, "no_declarations", "no station has declared yet");
    const auto& f = *s->forecast;
    const auto& cur = s->ds.parties().cur();
    json parties, values;
    switch (metric) {
        case Metric::abs:
            parties = cur;
            values = f.party_totals;
            break;
        case Metric::elec:
            parties = cur;
            values = f.pct_elec();
            break;
        case Metric::vald: {
            parties = std::vector<std::string>(cur.begin(), cur.end() - 1);
            auto v = f.pct_vald();
            values = v ? json(*v) : json(nullptr);
            break;
        }
    }
    return json{{"session", s->id},
                {"revision", s->revision},
                {"metric", to_string(metric)},
                {"parties", std::move(parties)},
                {"values", std::move(values)},
                {"forecast_digest", s->digest},
                {"forecast", s->forecast_doc}};
}

json LiveService::groups(const std::string& id) const {
    auto s = find_session(id);
    std::lock_guard lock(s->m);
    json doc = group_profile_to_json(group_profile(s->declared_only, s->grouping, &s->decl));
    doc["session"] = s->id;
    doc["revision"] = s->revision;
    doc["grouping"] = s->grouping;
    return doc;
}

json LiveService::start_optimize(const std::string& id, const json& body) {
    auto s = find_session(id);
    if (!body.is_object() && !body.is_null())
        throw ServiceError(400, "bad_request", "request body must be a JSON object");
    json overrides = body.is_null() ? json::object() : body;

    auto job = std::make_shared<Job>();
    std::shared_ptr<Job> previous;
    Dataset ds;
    DeclarationState decl;
    std::vector<int> base;
    {
        std::lock_guard lock(s->m);
        ds = s->ds;
        decl = s->decl;
        base = s->grouping;
        job->based_on_revision = s->revision;

        job->mode = s->ds.has_all_current() ? "simulation" : "live";
        if (overrides.contains("mode")) {
            if (!overrides["mode"].is_string()) throw ServiceError(400, "bad_request", "mode must be a string");
            job->mode = overrides["mode"].get<std::string>();
            overrides.erase("mode");
        }
        if (job->mode != "live" && job->mode != "simulation")
            throw ServiceError(400, "bad_request", "mode must be 'live' or 'simulation'");
        if (job->mode == "simulation" && !s->ds.has_all_current())
            throw ServiceError(409, "no_outcome", "simulation mode needs current votes for every station");
        const std::size_t needed = job->mode == "live" ? 2 : 1;
        if (s->decl.size() < needed)
            throw ServiceError(409, "insufficient_declarations",
                               "optimization needs at least " + std::to_string(needed) + " declared stations");

        GaConfig defaults;
        defaults.n_groups = static_cast<std::size_t>(std::max(1, group_count(base)));
        try {
            job->config = config_from_json(overrides, defaults);
        } catch (const ParseError& e) {
            throw ServiceError(400, "bad_request", e.what());
        } catch (const ValidationError& e) {
            throw ServiceError(400, "bad_request", e.what());
        }

        {
            std::lock_guard glock(mutex_);
            job->id = "job-" + std::to_string(next_job_++);
            job->session = s->id;
            if (!s->active_job.empty()) {
                auto it = jobs_.find(s->active_job);
                if (it != jobs_.end()) previous = it->second;
            }
        }
        s->active_job = job->id;
    }

    if (previous) {
        {
            std::lock_guard lock(previous->m);
            if (previous->cancel_reason.empty()) previous->cancel_reason = "superseded by " + job->id;
        }
        previous->thread.request_stop();
    }

    Job* raw_job = job.get();
    job->thread = std::jthread([raw_job, ds = std::move(ds), decl = std::move(decl),
                                base = std::move(base)](std::stop_token stop) {
        Job& j = *raw_job;
        auto set_status = [&](JobStatus st) {
            std::lock_guard lock(j.m);
            j.status = st;
            j.cv.notify_all();
        };
        set_status(JobStatus::running);
        try {
            const GaConfig& c = j.config;
            std::unique_ptr<Objective> obj;
            std::function<std::vector<int>(const std::vector<int>&)> expand;
            std::vector<std::vector<int>> seeds;
            const bool seedable = group_count(base) <= static_cast<int>(c.n_groups);
            if (j.mode == "live") {
                auto lo = std::make_unique<LeaveOutObjective>(ds, decl, base, c.metric, c.seed);
                if (seedable) seeds.push_back(lo->compress(base));
                const LeaveOutObjective* p = lo.get();
                expand = [p](const std::vector<int>& g) { return p->expand(g); };
                obj = std::move(lo);
            } else {
                obj = std::make_unique<ScenarioObjective>(ds, decl, c.metric);
                if (seedable) seeds.push_back(base);
                expand = [](const std::vector<int>& g) { return g; };
            }
            auto result = run(
                *obj, c,
                [&](const GenerationRecord& rec, const Chromosome& best) {
                    std::lock_guard lock(j.m);
                    j.generation = rec.generation;
                    j.best = *best.fitness;
                    j.history.push_back(*best.fitness);
                    j.cv.notify_all();
                },
                stop, seeds);
            std::lock_guard lock(j.m);
            if (stop.stop_requested()) {
                j.status = JobStatus::failed;
                j.error = j.cancel_reason.empty() ? "cancelled" : j.cancel_reason;
            } else {
                j.labels = expand(result.best.genes);
                j.status = JobStatus::done;
            }
            j.cv.notify_all();
        } catch (const std::exception& e) {
            std::lock_guard lock(j.m);
            j.status = JobStatus::failed;
            j.error = e.what();
            j.cv.notify_all();
        }
    });
    {
        std::lock_guard lock(mutex_);
        jobs_[job->id] = job;
    }
    return get_job(job->id);
}

json LiveService::get_job(const std::string& job_id) const {
    auto j = find_job(job_id);
    std::lock_guard lock(j->m);
    json doc{{"id", j->id},
             {"session", j->session},
             {"status", to_string(j->status)},
             {"mode", j->mode},
             {"config", config_to_json(j->config)},
             {"based_on_revision", j->based_on_revision},
             {"generation", j->generation},
             {"generations", j->config.generations},
             {"best_fitness", j->best ? json(*j->best) : json(nullptr)},
             {"history", j->history}};
    if (j->status == JobStatus::done) doc["labels"] = j->labels;
    if (j->status == JobStatus::failed) doc["error"] = j->error;
    return doc;
}

void LiveService::wait_job(const std::string& job_id) const {
    auto j = find_job(job_id);
    std::unique_lock lock(j->m);
    j->cv.wait(lock, [&] { return j->status == JobStatus::done || j->status == JobStatus::failed; });
}

json LiveService::apply_job(const std::string& id, const std::string& job_id) {
    auto s = find_session(id);
    auto j = find_job(job_id);
    if (j->session != s->id)
        throw ServiceError(404, "not_found", "job '" + job_id + "' belongs to another session");
    std::vector<int> labels;
    {
        std::lock_guard lock(j->m);
        if (j->status != JobStatus::done)
            throw ServiceError(409, "job_not_done",
                               "job '" + job_id + "' is " + std::string(to_string(j->status)));
        labels = j->labels;
    }
    std::lock_guard lock(s->m);
    append_log(json{{"type", "grouping_applied"}, {"session", s->id}, {"job", job_id}, {"labels", labels}});
    apply_grouping(*s, std::move(labels));
    return json{{"session", s->id},
                {"revision", s->revision},
                {"n_groups", group_count(s->grouping)},
                {"grouping", s->grouping},
                {"forecast_digest", s->digest.empty() ? json(nullptr) : json(s->digest)}};
}

json LiveService::session_state(const std::string& id) const {
    auto s = find_session(id);
    std::lock_guard lock(s->m);
    json order = json::array();
    for (const auto& [station, rev] : s->history) order.push_back(json{{"station_id", station}, {"revision", rev}});
    return json{{"id", s->id},
                {"revision", s->revision},
                {"dataset", dataset_to_json(s->ds)},
                {"grouping", s->grouping},
                {"declarations", declarations_to_json(s->ds, s->decl)},
                {"history", std::move(order)},
                {"forecast", s->forecast_doc}};
}

std::vector<std::string> LiveService::session_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, s] : sessions_) ids.push_back(id);
    return ids;
}

SessionEvent LiveService::current_event(const std::string& id) const {
    auto s = find_session(id);
    std::lock_guard lock(s->m);
    return SessionEvent{s->revision, s->digest};
}

std::optional<SessionEvent> LiveService::wait_event(const std::string& id, std::uint64_t after,
                                                    std::chrono::milliseconds timeout) const {
    auto s = find_session(id);
    std::unique_lock lock(s->m);
    s->cv.wait_for(lock, timeout, [&] { return stopping_.load() || s->revision > after; });
    if (stopping_ || s->revision <= after) return std::nullopt;
    return SessionEvent{s->revision, s->digest};
}

}  // namespace nightcast
