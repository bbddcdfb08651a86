#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "nightcast/regression.hpp"

using namespace nightcast;

namespace {

// Independent least-squares oracle for two reference columns: Cramer's rule
// on the 2x2 normal equations, or the rank-one pseudo-inverse A^T/||A||_F^2
// when the design is singular.
std::vector<std::vector<double>> oracle_two_columns(const std::vector<std::array<double, 2>>& design,
                                                    const std::vector<std::vector<double>>& response) {
    double s11 = 0, s12 = 0, s22 = 0;
    for (const auto& r : design) {
        s11 += r[0] * r[0];
        s12 += r[0] * r[1];
        s22 += r[1] * r[1];
    }
    const std::size_t n_cur = response[0].size();
    std::vector<std::vector<double>> x(n_cur, std::vector<double>(2, 0.0));
    const double det = s11 * s22 - s12 * s12;
    const double scale = std::max(s11 * s22, 1.0);
    for (std::size_t i = 0; i < n_cur; ++i) {
        double b1 = 0, b2 = 0;
        for (std::size_t k = 0; k < design.size(); ++k) {
            b1 += design[k][0] * response[k][i];
            b2 += design[k][1] * response[k][i];
        }
        if (std::abs(det) > 1e-12 * scale) {
            x[i][0] = (b1 * s22 - b2 * s12) / det;
            x[i][1] = (s11 * b2 - s12 * b1) / det;
        } else {
            const double fro = s11 + s22;
            if (fro > 0) {
                // A^+ b = A^T b / ||A||_F^2 for rank one
                x[i][0] = b1 / fro;
                x[i][1] = b2 / fro;
            }
        }
    }
    return x;
}

Dataset worked_example() {
    // ref (A, NV) -> cur (P, NV) with X = [[0.5, 0.2], [0.5, 0.8]]
    return fixtures::make_dataset({"A"}, {"P"}, {{100}, {80}, {60}}, {{60}, {60}, {36}}, {150, 180, 90},
                                  {150, 180, 90});
}

std::vector<std::string> ids_of(const Dataset& ds) {
    std::vector<std::string> ids;
    for (const auto& c : ds.stations()) ids.push_back(c.id);
    return ids;
}

}  // namespace

TEST_CASE("estimate_transition recovers a hand-built matrix") {
    Dataset ds = worked_example();
    CHECK(*ds.stations()[0].cur_votes == VoteVector{60, 90});
    CHECK(*ds.stations()[1].cur_votes == VoteVector{60, 120});
    CHECK(*ds.stations()[2].cur_votes == VoteVector{36, 54});
    auto decl = all_declared(ds);
    auto ids = ids_of(ds);
    auto m = estimate_transition(ds, decl, ids, 0);
    Eigen::Matrix2d expected;
    expected << 0.5, 0.2, 0.5, 0.8;
    CHECK((m.entries - expected).norm() < 1e-8);
    CHECK(m.n_stations_used == 3);
    CHECK(m.group_id == 0);

    std::vector<std::array<double, 2>> design{{100, 50}, {80, 100}, {60, 30}};
    std::vector<std::vector<double>> response{{60, 90}, {60, 120}, {36, 54}};
    auto oracle = oracle_two_columns(design, response);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(std::abs(m.entries(i, j) - oracle[i][j]) < 1e-8);
}

TEST_CASE("identical elections give the identity") {
    std::vector<std::vector<Count>> v{{10, 20}, {30, 5}, {7, 7}, {12, 40}};
    auto ds = fixtures::make_dataset({"A", "B"}, {"A", "B"}, v, v, {50, 60, 30, 80}, {50, 60, 30, 80});
    auto decl = all_declared(ds);
    auto m = global_transition(ds, decl);
    CHECK((m.entries - Eigen::Matrix3d::Identity()).norm() < 1e-8);
}

TEST_CASE("single declared station gets the minimum-norm solution") {
    Dataset ds = worked_example();
    DeclarationState decl;
    const std::vector<Count> v{60};
    decl.declare(ds, "K1", v);
    auto ids = ids_of(ds);
    auto m = estimate_transition(ds, decl, ids);
    // pseudo-inverse of the 1x2 design (100, 50) is (100, 50)^T / 12500
    Eigen::Matrix2d expected;
    expected << 0.48, 0.24, 0.72, 0.36;
    CHECK((m.entries - expected).norm() < 1e-8);
    const std::vector<Count> ref{100, 50};
    auto p = project_station(m, ref, 150);
    CHECK(p[0] == doctest::Approx(60).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(90).epsilon(1e-12));
}

TEST_CASE("no declared members signals the fallback") {
    Dataset ds = worked_example();
    DeclarationState decl;
    const std::vector<Count> v{60};
    decl.declare(ds, "K1", v);
    std::vector<std::string> members{"K2", "K3"};
    CHECK_THROWS_AS(estimate_transition(ds, decl, members), NoDeclaredStations);
    CHECK_THROWS_AS(global_transition(ds, DeclarationState{}), NoDeclaredStations);
}

TEST_CASE("brute-force oracle agreement on 1-3 stations, 2 parties") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<Count> vote(0, 400);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + trial % 3;
        std::vector<std::vector<Count>> ref, cur;
        std::vector<Count> el_ref, el_cur;
        for (std::size_t k = 0; k < n; ++k) {
            Count a = vote(rng), nv = vote(rng);
            // every fourth trial repeats a proportional row to force rank deficiency
            if (trial % 4 == 0 && k > 0) {
                a = ref[0][0] * 2;
                nv = (el_ref[0] - ref[0][0]) * 2;
            }
            ref.push_back({a});
            el_ref.push_back(a + nv);
            Count p = vote(rng), q = vote(rng);
            cur.push_back({p});
            el_cur.push_back(p + q);
        }
        if (std::accumulate(el_ref.begin(), el_ref.end(), Count{0}) == 0) continue;
        auto ds_n = n >= 2 ? fixtures::make_dataset({"A"}, {"P"}, ref, cur, el_ref, el_cur)
                           : fixtures::make_dataset({"A"}, {"P"}, {ref[0], {0}}, {cur[0], {0}},
                                                    {el_ref[0], 0}, {el_cur[0], 0});
        DeclarationState decl;
        for (std::size_t k = 0; k < n; ++k) decl.declare(ds_n, ds_n.stations()[k].id, cur[k]);
        std::vector<std::string> members;
        for (std::size_t k = 0; k < n; ++k) members.push_back(ds_n.stations()[k].id);
        auto m = estimate_transition(ds_n, decl, members);

        std::vector<std::array<double, 2>> design;
        std::vector<std::vector<double>> response;
        for (std::size_t k = 0; k < n; ++k) {
            design.push_back({static_cast<double>(ref[k][0]), static_cast<double>(el_ref[k] - ref[k][0])});
            response.push_back({static_cast<double>(cur[k][0]), static_cast<double>(el_cur[k] - cur[k][0])});
        }
        auto oracle = oracle_two_columns(design, response);
        double scale = 1.0;
        for (const auto& r : oracle)
            for (double x : r) scale = std::max(scale, std::abs(x));
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) CHECK(std::abs(m.entries(i, j) - oracle[i][j]) < 1e-8 * scale);
    }
}

TEST_CASE("least-squares residuals are orthogonal to the design") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1000.0);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd a(12, 4), b(12, 5);
        for (Eigen::Index r = 0; r < a.rows(); ++r) {
            for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = u(rng);
            for (Eigen::Index c = 0; c < b.cols(); ++c) b(r, c) = u(rng);
        }
        Eigen::MatrixXd x = solve_transition(a, b);
        Eigen::MatrixXd residual = b - a * x.transpose();
        CHECK((a.transpose() * residual).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("project_station contracts") {
    TransitionMatrix id{Eigen::MatrixXd::Identity(3, 3), 0, 0};
    const std::vector<Count> ref{60, 40, 100};
    auto p = project_station(id, ref, 200);
    CHECK(p == std::vector<double>{60, 40, 100});

    TransitionMatrix x{Eigen::MatrixXd(2, 2), 0, 0};
    x.entries << 0.5, 0.2, 0.5, 0.8;
    const std::vector<Count> r2{100, 50};
    auto q = project_station(x, r2, 150);
    CHECK(q[0] == doctest::Approx(60));
    CHECK(q[1] == doctest::Approx(90));

    SUBCASE("negative components are clipped before rescaling") {
        TransitionMatrix neg{Eigen::MatrixXd(3, 2), 0, 0};
        neg.entries << -0.5, 0.1, 1.0, 0.4, 0.5, 0.5;
        const std::vector<Count> r{100, 100};
        auto out = project_station(neg, r, 300);
        CHECK(out[0] == 0.0);
        // raw (-40, 140, 100) -> (0, 140, 100) scaled by 300/240
        CHECK(out[1] == doctest::Approx(175));
        CHECK(out[2] == doctest::Approx(125));
    }
    SUBCASE("all-zero projection goes to nonvoters") {
        TransitionMatrix zero{Eigen::MatrixXd::Zero(3, 2), 0, 0};
        const std::vector<Count> r{10, 10};
        CHECK(project_station(zero, r, 20) == std::vector<double>{0, 0, 20});
    }
    SUBCASE("dimension mismatch") {
        const std::vector<Count> r{1, 2, 3};
        CHECK_THROWS_AS(project_station(x, r, 6), std::invalid_argument);
    }
}

TEST_CASE("projection bounds and linearity hold for random matrices") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> coef(-1.0, 2.0);
    std::uniform_real_distribution<double> v(0.0, 500.0);
    for (int trial = 0; trial < 500; ++trial) {
        TransitionMatrix m{Eigen::MatrixXd(4, 3), 0, 0};
        for (Eigen::Index i = 0; i < 4; ++i)
            for (Eigen::Index j = 0; j < 3; ++j) m.entries(i, j) = coef(rng);
        std::vector<double> ref{v(rng), v(rng), v(rng)};
        const Count e = static_cast<Count>(1 + rng() % 2000);
        auto p = project_station(m, std::span<const double>(ref), e);
        double s = 0.0;
        for (double x : p) {
            CHECK(x >= 0.0);
            CHECK(x <= static_cast<double>(e));
            s += x;
        }
        CHECK(std::abs(s - static_cast<double>(e)) < 1e-9);

        const double a = v(rng) / 100.0;
        std::vector<double> scaled{a * ref[0], a * ref[1], a * ref[2]};
        Eigen::VectorXd r1 = raw_projection(m, ref);
        Eigen::VectorXd r2 = raw_projection(m, scaled);
        CHECK((r2 - a * r1).norm() <= 1e-9 * std::max(1.0, r2.norm()));
    }
}

TEST_CASE("share metrics") {
    const std::vector<double> t{60, 40, 100};
    CHECK(to_elec_shares(t) == std::vector<double>{30, 20, 50});
    CHECK(to_vald_shares(t) == std::vector<double>{60, 40});
    const std::vector<double> single{25, 0};
    CHECK(to_elec_shares(std::span<const double>(single).first(1)) == std::vector<double>{100});
    CHECK(to_vald_shares(single) == std::vector<double>{100});
    const std::vector<double> nv_only{0, 0, 50};
    CHECK_THROWS(to_vald_shares(nv_only));
    const std::vector<double> zeros{0, 0};
    CHECK_THROWS(to_elec_shares(zeros));
}

TEST_CASE("rmse metrics") {
    const std::vector<double> a{60, 40, 100};
    for (Metric m : {Metric::abs, Metric::elec, Metric::vald}) CHECK(rmse(a, a, m) == 0.0);
    const std::vector<double> f{60, 90}, t{50, 100};
    CHECK(rmse(f, t, Metric::abs) == doctest::Approx(10.0));
    const std::vector<double> f2{30, 20, 10}, t2{25, 25, 50};
    const std::vector<double> f3{30, 20, 110}, t3{25, 25, 150};
    CHECK(rmse(f2, t2, Metric::vald) == doctest::Approx(rmse(f3, t3, Metric::vald)));
    const std::vector<double> short_v{1, 2};
    CHECK_THROWS_AS(rmse(short_v, a, Metric::abs), std::invalid_argument);
    CHECK(parse_metric("vald") == Metric::vald);
    CHECK_THROWS(parse_metric("pct"));
}

TEST_CASE("assemble_forecast on noiseless synthetic data") {
    auto syn = generate_synthetic(fixtures::small_spec());
    const auto& ds = syn.dataset;
    const auto truth = ds.true_current_totals();

    SUBCASE("all declared reproduces the truth") {
        auto f = assemble_forecast(ds, all_declared(ds), syn.true_grouping);
        CHECK(f.undeclared_count == 0);
        for (std::size_t i = 0; i < truth.size(); ++i) CHECK(f.party_totals[i] == truth[i]);
    }
    SUBCASE("true grouping with half the electorate missing is exact") {
        auto decl = make_scenario(ds, 0.5, 3);
        auto f = assemble_forecast(ds, decl, syn.true_grouping);
        CHECK(f.undeclared_count > 0);
        CHECK(f.fallback_groups.empty());
        for (std::size_t i = 0; i < truth.size(); ++i) CHECK(std::abs(f.party_totals[i] - truth[i]) < 1e-6);
    }
    SUBCASE("per-group estimates recover the generating matrices") {
        auto decl = make_scenario(ds, 0.5, 3);
        for (std::size_t g = 0; g < 3; ++g) {
            std::vector<std::string> members;
            for (std::size_t k = 0; k < ds.size(); ++k)
                if (syn.true_grouping[k] == static_cast<int>(g)) members.push_back(ds.stations()[k].id);
            auto m = estimate_transition(ds, decl, members, static_cast<int>(g));
            double err = 0.0;
            for (std::size_t i = 0; i < 4; ++i)
                for (std::size_t j = 0; j < 4; ++j)
                    err += std::pow(m.entries(i, j) - syn.true_matrices[g].entries[i][j], 2);
            CHECK(std::sqrt(err) < 1e-8);
        }
    }
    SUBCASE("additivity and normalization") {
        auto decl = make_scenario(ds, 0.7, 5);
        std::vector<int> labels(ds.size());
        for (std::size_t k = 0; k < labels.size(); ++k) labels[k] = static_cast<int>(k % 4);
        auto f = assemble_forecast(ds, decl, labels);
        std::vector<double> sum = f.declared_totals;
        for (const auto& p : f.station_projections)
            for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += p.votes[i];
        double total = 0.0;
        for (std::size_t i = 0; i < sum.size(); ++i) {
            CHECK(std::abs(sum[i] - f.party_totals[i]) < 1e-6);
            total += f.party_totals[i];
        }
        CHECK(std::abs(total - static_cast<double>(ds.total_electorate_cur())) < 1e-6);
    }
}

TEST_CASE("global matrix recovers a single generating matrix") {
    auto spec = fixtures::small_spec();
    spec.n_groups = 1;
    auto syn = generate_synthetic(spec);
    auto decl = make_scenario(syn.dataset, 0.4, 1);
    auto m = global_transition(syn.dataset, decl);
    double err = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) err += std::pow(m.entries(i, j) - syn.true_matrices[0].entries[i][j], 2);
    CHECK(std::sqrt(err) < 1e-8);

    // one group holding every station equals the pooled fit
    std::vector<std::string> all;
    for (const auto& c : syn.dataset.stations()) all.push_back(c.id);
    auto g = estimate_transition(syn.dataset, decl, all, 0);
    CHECK((g.entries - m.entries).norm() == 0.0);
}

TEST_CASE("groups without declarations fall back to the pooled matrix") {
    auto syn = generate_synthetic(fixtures::small_spec());
    const auto& ds = syn.dataset;
    auto decl = make_scenario(ds, 0.5, 3);
    std::vector<int> labels(ds.size(), 0);
    // label 1 only on undeclared stations
    int moved = 0;
    for (std::size_t k = 0; k < ds.size() && moved < 3; ++k)
        if (!decl.is_declared(ds.stations()[k].id)) {
            labels[k] = 1;
            ++moved;
        }
    auto f = assemble_forecast(ds, decl, labels);
    CHECK(f.fallback_groups == std::vector<int>{1});
    CHECK_THROWS_AS(assemble_forecast(ds, DeclarationState{}, labels), NoDeclaredStations);
    std::vector<int> short_labels(3, 0);
    CHECK_THROWS_AS(assemble_forecast(ds, decl, short_labels), std::invalid_argument);
}

TEST_CASE("forecast document") {
    auto syn = generate_synthetic(fixtures::small_spec());
    auto decl = make_scenario(syn.dataset, 0.5, 3);
    auto f = assemble_forecast(syn.dataset, decl, syn.true_grouping);
    auto doc = forecast_to_json(syn.dataset, f);
    CHECK(doc["party_totals"].size() == 4);
    CHECK(doc["pct_vald"].size() == 3);
    CHECK(doc["declared_count"].get<std::size_t>() == decl.size());
    CHECK(doc["per_station"].size() == f.undeclared_count);
    double s = 0.0;
    for (double v : doc["pct_vald"]) s += v;
    CHECK(s == doctest::Approx(100.0));
}
