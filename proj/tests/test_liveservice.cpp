#include <numeric>
#include <thread>

#include "doctest.h"
#include "fixtures.hpp"
#include "nightcast/http_server.hpp"
#include "nightcast/liveservice.hpp"

// after Eigen: <resolv.h> defines a `_res` macro
#include <httplib.h>

using namespace nightcast;
using json = nlohmann::ordered_json;

namespace {

SyntheticElection synth() { return generate_synthetic(fixtures::small_spec(2.0)); }

json declaration(const Dataset& ds, std::size_t k) {
    const auto& c = ds.stations()[k];
    return json{{"station_id", c.id}, {"votes", VoteVector(c.cur_votes->begin(), c.cur_votes->end() - 1)}};
}

int status_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ServiceError& e) {
        return e.status();
    }
    return 200;
}

json body(const json& dataset, int n_groups) { return json{{"dataset", dataset}, {"n_groups", n_groups}}; }

}  // namespace

TEST_CASE("create sessions") {
    auto syn = synth();
    LiveService svc;
    auto a = svc.create_session(dataset_to_json(syn.dataset));
    auto b = svc.create_session(body(dataset_to_json(syn.dataset), 3));
    CHECK(a["id"] == "sess-1");
    CHECK(b["id"] == "sess-2");
    CHECK(a["revision"] == 0);
    CHECK(a["n_groups"] == 10);
    CHECK(b["n_groups"] == 3);
    CHECK(svc.get_session("sess-1")["declared_count"] == 0);

    auto bad = dataset_to_json(syn.dataset);
    bad["stations"][4]["cur_votes"][0] = 1000000;
    try {
        svc.create_session(bad);
        FAIL("expected rejection");
    } catch (const ServiceError& e) {
        CHECK(e.status() == 400);
        CHECK(std::string(e.what()).find(syn.dataset.stations()[4].id) != std::string::npos);
    }
    CHECK(status_of([&] { svc.get_session("sess-9"); }) == 404);
}

TEST_CASE("declarations, conflicts and forecasts") {
    auto syn = synth();
    const auto& ds = syn.dataset;
    LiveService svc;
    const std::string id = svc.create_session(body(dataset_to_json(ds), 3))["id"];

    CHECK(status_of([&] { svc.forecast(id, "abs"); }) == 409);

    auto r1 = svc.declare(id, declaration(ds, 0));
    CHECK(r1["revision"] == 1);
    CHECK(r1["unchanged"] == false);
    // a single declaration already defines the forecast through the pooled fit
    auto f1 = svc.forecast(id, "abs");
    CHECK(f1["revision"] == 1);
    CHECK(f1["values"].size() == 4);

    auto again = svc.declare(id, declaration(ds, 0));
    CHECK(again["revision"] == 1);
    CHECK(again["unchanged"] == true);

    auto conflict = declaration(ds, 0);
    conflict["votes"][0] = conflict["votes"][0].get<Count>() + 1;
    CHECK(status_of([&] { svc.declare(id, conflict); }) == 409);
    CHECK(svc.forecast(id, "abs") == f1);

    CHECK(status_of([&] { svc.declare(id, json{{"station_id", "nope"}, {"votes", {1, 2, 3}}}); }) == 404);
    auto too_many = declaration(ds, 1);
    too_many["votes"][0] = ds.stations()[1].electorate_cur;
    CHECK(status_of([&] { svc.declare(id, too_many); }) == 422);
    auto negative = declaration(ds, 1);
    negative["votes"][1] = -1;
    CHECK(status_of([&] { svc.declare(id, negative); }) == 422);
    CHECK(status_of([&] { svc.declare(id, json{{"station_id", ds.stations()[1].id}, {"votes", {1}}}); }) == 400);
    CHECK(svc.get_session(id)["revision"] == 1);

    svc.declare(id, declaration(ds, 1));
    auto f2 = svc.forecast(id, "abs");
    CHECK(f2["revision"].get<int>() > f1["revision"].get<int>());
    CHECK(svc.forecast(id, "abs") == f2);

    auto vald = svc.forecast(id, "vald");
    CHECK(vald["parties"].size() == 3);
    double sum = 0.0;
    for (double v : vald["values"]) sum += v;
    CHECK(sum == doctest::Approx(100.0).epsilon(1e-8));
    CHECK(status_of([&] { svc.forecast(id, "share"); }) == 400);

    // totals add up to the electorate
    double total = 0.0;
    for (double v : f2["values"]) total += v;
    CHECK(total == doctest::Approx(static_cast<double>(ds.total_electorate_cur())).epsilon(1e-9));
}

TEST_CASE("declaring every station reproduces the actual totals") {
    auto syn = synth();
    const auto& ds = syn.dataset;
    LiveService svc;
    const std::string id = svc.create_session(dataset_to_json(ds))["id"];
    for (std::size_t k = 0; k < ds.size(); ++k) svc.declare(id, declaration(ds, k));
    auto f = svc.forecast(id, "abs");
    const auto truth = ds.true_current_totals();
    for (std::size_t i = 0; i < truth.size(); ++i) CHECK(f["values"][i].get<double>() == truth[i]);
}

TEST_CASE("group profiles of a session") {
    auto syn = synth();
    const auto& ds = syn.dataset;
    LiveService svc;
    const std::string one = svc.create_session(json{{"dataset", dataset_to_json(ds)},
                                                    {"grouping", std::vector<int>(ds.size(), 0)}})["id"];
    for (std::size_t k = 0; k < 5; ++k) svc.declare(one, declaration(ds, k));
    auto g = svc.groups(one);
    REQUIRE(g["groups"].size() == 1);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(g["groups"][0]["mean_pct_vald"][i].get<double>() ==
              doctest::Approx(g["global_mean"][i].get<double>()));
    CHECK(g["groups"][0]["member_count"] == ds.size());

    const std::string ten = svc.create_session(dataset_to_json(ds))["id"];
    std::size_t members = 0;
    const auto profile = svc.groups(ten);
    for (const auto& grp : profile["groups"]) members += grp["member_count"].get<std::size_t>();
    CHECK(members == ds.size());
    CHECK(status_of([&] { svc.groups("sess-77"); }) == 404);
}

TEST_CASE("leave-out objective") {
    auto syn = synth();
    const auto& ds = syn.dataset;
    auto decl = make_scenario(ds, 0.5, 1);
    LeaveOutObjective obj(ds, decl, syn.true_grouping, Metric::abs, 3);
    CHECK(obj.gene_count() == decl.size());
    CHECK(obj.holdout().size() == static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(decl.size()))));
    const auto genes = obj.compress(syn.true_grouping);
    CHECK(obj.expand(genes) == syn.true_grouping);
    std::vector<int> single(genes.size(), 0);
    CHECK(obj.raw(genes) >= 0.0);
    CHECK(obj.raw(genes) < obj.raw(single));

    DeclarationState one;
    one.declare(ds, ds.stations()[0].id,
                std::span<const Count>(ds.stations()[0].cur_votes->data(), ds.parties().cur_size() - 1));
    CHECK_THROWS_AS(LeaveOutObjective(ds, one, syn.true_grouping, Metric::abs, 1), NoDeclaredStations);
}

TEST_CASE("optimization jobs") {
    auto syn = synth();
    const auto& ds = syn.dataset;
    LiveService svc;
    const std::string id = svc.create_session(body(dataset_to_json(ds), 3))["id"];
    CHECK(status_of([&] { svc.start_optimize(id, json::object()); }) == 409);
    for (std::size_t k = 0; k < 12; ++k) svc.declare(id, declaration(ds, k));

    CHECK(status_of([&] { svc.start_optimize(id, json{{"populaton", 3}}); }) == 400);
    CHECK(status_of([&] { svc.get_job("job-404"); }) == 404);

    auto job = svc.start_optimize(id, json{{"population_size", 20}, {"generations", 30}, {"mode", "live"}});
    const std::string jid = job["id"];
    CHECK(job["config"]["n_groups"] == 3);

    // declarations keep flowing while the job runs
    svc.declare(id, declaration(ds, 20));
    svc.declare(id, declaration(ds, 21));

    svc.wait_job(jid);
    auto done = svc.get_job(jid);
    REQUIRE(done["status"] == "done");
    CHECK(done["generation"] == 30);
    const auto hist = done["history"].get<std::vector<double>>();
    CHECK(hist.size() == 31);
    for (std::size_t g = 1; g < hist.size(); ++g) CHECK(hist[g] <= hist[g - 1]);
    CHECK(done["labels"].size() == ds.size());

    const auto before = svc.get_session(id);
    CHECK(before["revision"] == 14);
    CHECK(status_of([&] { svc.apply_job("sess-404", jid); }) == 404);
    auto applied = svc.apply_job(id, jid);
    CHECK(applied["revision"] == 15);
    CHECK(applied["grouping"] == done["labels"]);
    CHECK(svc.forecast(id, "abs")["revision"] == 15);

    auto sim = svc.start_optimize(id, json{{"population_size", 10}, {"generations", 5}});
    svc.wait_job(sim["id"]);
    CHECK(svc.get_job(sim["id"])["mode"] == "simulation");
    CHECK(svc.get_job(sim["id"])["status"] == "done");
}

TEST_CASE("a new job supersedes the running one and unfinished jobs cannot be applied") {
    auto syn = synth();
    const auto& ds = syn.dataset;
    LiveService svc;
    const std::string id = svc.create_session(body(dataset_to_json(ds), 3))["id"];
    for (std::size_t k = 0; k < 12; ++k) svc.declare(id, declaration(ds, k));

    auto slow = svc.start_optimize(id, json{{"population_size", 50}, {"generations", 100000}});
    const std::string slow_id = slow["id"];
    CHECK(status_of([&] { svc.apply_job(id, slow_id); }) == 409);
    auto fast = svc.start_optimize(id, json{{"population_size", 10}, {"generations", 3}});
    svc.wait_job(slow_id);
    auto s = svc.get_job(slow_id);
    CHECK(s["status"] == "failed");
    CHECK(s["error"].get<std::string>().find("superseded") != std::string::npos);
    svc.wait_job(fast["id"]);
    CHECK(svc.get_job(fast["id"])["status"] == "done");
    CHECK(svc.get_session(id)["active_job"] == fast["id"]);
}

TEST_CASE("event log replay restores sessions") {
    auto syn = synth();
    const auto& ds = syn.dataset;
    fixtures::TempDir dir;
    json state;
    std::string id;
    {
        LiveService svc(dir.path);
        id = svc.create_session(body(dataset_to_json(ds), 3))["id"];
        svc.create_session(dataset_to_json(ds));
        for (std::size_t k = 0; k < 10; ++k) svc.declare(id, declaration(ds, k));
        auto job = svc.start_optimize(id, json{{"population_size", 20}, {"generations", 10}});
        svc.wait_job(job["id"]);
        svc.apply_job(id, job["id"]);
        svc.declare(id, declaration(ds, 10));
        state = svc.session_state(id);
    }
    LiveService restored(dir.path);
    CHECK(restored.session_ids() == std::vector<std::string>{"sess-1", "sess-2"});
    CHECK(restored.session_state(id) == state);
    CHECK(restored.create_session(dataset_to_json(ds))["id"] == "sess-3");
    auto job = restored.start_optimize(id, json{{"population_size", 10}, {"generations", 2}});
    CHECK(job["id"] == "job-2");
}

TEST_CASE("event stream notifies on revisions") {
    auto syn = synth();
    const auto& ds = syn.dataset;
    LiveService svc;
    const std::string id = svc.create_session(dataset_to_json(ds))["id"];
    CHECK_FALSE(svc.wait_event(id, 0, std::chrono::milliseconds(10)).has_value());
    std::jthread writer([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        svc.declare(id, declaration(ds, 0));
    });
    auto ev = svc.wait_event(id, 0, std::chrono::seconds(5));
    REQUIRE(ev.has_value());
    CHECK(ev->revision == 1);
    CHECK(ev->forecast_digest == svc.get_session(id)["forecast_digest"]);
}

TEST_CASE("http endpoints") {
    auto syn = synth();
    const auto& ds = syn.dataset;
    LiveService svc;
    HttpServer server(svc);
    const int port = server.start("127.0.0.1", 0);
    httplib::Client cli("127.0.0.1", port);

    auto created = cli.Post("/api/sessions", body(dataset_to_json(ds), 3).dump(), "application/json");
    REQUIRE(created);
    CHECK(created->status == 201);
    const std::string id = json::parse(created->body)["id"];

    auto missing = cli.Get("/api/sessions/zzz");
    REQUIRE(missing);
    CHECK(missing->status == 404);
    auto err = json::parse(missing->body);
    CHECK(err.contains("code"));
    CHECK(err.contains("message"));
    CHECK(err.contains("detail"));

    auto bad = cli.Post("/api/sessions", "{not json", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);

    auto no_forecast = cli.Get("/api/sessions/" + id + "/forecast?metric=vald");
    CHECK(no_forecast->status == 409);

    for (std::size_t k = 0; k < 3; ++k) {
        auto r = cli.Post("/api/sessions/" + id + "/declarations", declaration(ds, k).dump(), "application/json");
        REQUIRE(r);
        CHECK(r->status == 200);
    }
    auto dup = declaration(ds, 0);
    dup["votes"][0] = 0;
    CHECK(cli.Post("/api/sessions/" + id + "/declarations", dup.dump(), "application/json")->status == 409);

    auto f = cli.Get("/api/sessions/" + id + "/forecast?metric=elec");
    REQUIRE(f);
    CHECK(f->status == 200);
    CHECK(json::parse(f->body)["revision"] == 3);
    CHECK(cli.Get("/api/sessions/" + id + "/groups")->status == 200);

    auto opt = cli.Post("/api/sessions/" + id + "/optimize",
                        json{{"population_size", 10}, {"generations", 3}}.dump(), "application/json");
    REQUIRE(opt);
    CHECK(opt->status == 202);
    const std::string jid = json::parse(opt->body)["id"];
    svc.wait_job(jid);
    CHECK(json::parse(cli.Get("/api/jobs/" + jid)->body)["status"] == "done");
    auto applied = cli.Post("/api/sessions/" + id + "/apply/" + jid, "", "application/json");
    CHECK(applied->status == 200);
    CHECK(json::parse(applied->body)["revision"] == 4);

    // the event stream starts with the current revision
    std::string received;
    httplib::Client sse("127.0.0.1", port);
    auto stream = sse.Get("/api/sessions/" + id + "/events", [&](const char* data, std::size_t n) {
        received.append(data, n);
        return received.find("\n\n") == std::string::npos;
    });
    CHECK(received.find("id: 4\n") != std::string::npos);
    CHECK(received.find("\"revision\":4") != std::string::npos);

    server.stop();
}
