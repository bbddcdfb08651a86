#include "nightcast/regression.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace nightcast {

using json = nlohmann::ordered_json;

Metric parse_metric(std::string_view name) {
    if (name == "abs") return Metric::abs;
    if (name == "elec") return Metric::elec;
    if (name == "vald") return Metric::vald;
    throw std::invalid_argument("unknown metric '" + std::string(name) + "' (expected abs, elec or vald)");
}

std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::abs: return "abs";
        case Metric::elec: return "elec";
        case Metric::vald: return "vald";
    }
    return "abs";
}

Eigen::MatrixXd solve_transition(const Eigen::MatrixXd& design, const Eigen::MatrixXd& response) {
    // design * X^T ~ response; complete orthogonal decomposition yields the
    // minimum-norm solution for rank-deficient designs
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
    return cod.solve(response).transpose();
}

TransitionMatrix estimate_transition(const Dataset& ds, const DeclarationState& decl,
                                     std::span<const std::string> member_ids, int group_id) {
    std::vector<std::size_t> rows;
    for (const auto& id : member_ids) {
        auto idx = ds.find(id);
        if (!idx) throw ValidationError("unknown station '" + id + "'");
        if (decl.is_declared(id)) rows.push_back(*idx);
    }
    if (rows.empty())
        throw NoDeclaredStations("group " + std::to_string(group_id) + " has no declared stations");
    std::sort(rows.begin(), rows.end());

    const auto n_ref = static_cast<Eigen::Index>(ds.parties().ref_size());
    const auto n_cur = static_cast<Eigen::Index>(ds.parties().cur_size());
    Eigen::MatrixXd design(static_cast<Eigen::Index>(rows.size()), n_ref);
    Eigen::MatrixXd response(static_cast<Eigen::Index>(rows.size()), n_cur);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& c = ds.stations()[rows[r]];
        const auto& cur = decl.votes(c.id);
        for (Eigen::Index j = 0; j < n_ref; ++j) design(r, j) = static_cast<double>(c.ref_votes[j]);
        for (Eigen::Index i = 0; i < n_cur; ++i) response(r, i) = static_cast<double>(cur[i]);
    }
    return TransitionMatrix{solve_transition(design, response), group_id, rows.size()};
}

TransitionMatrix global_transition(const Dataset& ds, const DeclarationState& decl) {
    if (decl.empty()) throw NoDeclaredStations("no stations declared");
    std::vector<std::string> ids = decl.ordered_ids(ds);
    return estimate_transition(ds, decl, ids, -1);
}

Eigen::VectorXd raw_projection(const TransitionMatrix& m, std::span<const double> ref_votes) {
    if (static_cast<Eigen::Index>(ref_votes.size()) != m.entries.cols())
        throw std::invalid_argument("projection: reference vector has " +
                                    std::to_string(ref_votes.size()) + " entries, matrix expects " +
                                    std::to_string(m.entries.cols()));
    Eigen::Map<const Eigen::VectorXd> v(ref_votes.data(), static_cast<Eigen::Index>(ref_votes.size()));
    return m.entries * v;
}

namespace {

void clip_and_rescale(double* v, Eigen::Index n, double electorate) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        v[i] = std::clamp(v[i], 0.0, electorate);
        sum += v[i];
    }
    if (sum > 0.0) {
        const double scale = electorate / sum;
        for (Eigen::Index i = 0; i < n; ++i) v[i] *= scale;
    } else {
        std::fill(v, v + n, 0.0);
        v[n - 1] = electorate;
    }
}

}  // namespace

std::vector<double> project_station(const TransitionMatrix& m, std::span<const double> ref_votes,
                                    Count electorate_cur) {
    Eigen::VectorXd raw = raw_projection(m, ref_votes);
    std::vector<double> out(raw.data(), raw.data() + raw.size());
    clip_and_rescale(out.data(), raw.size(), static_cast<double>(electorate_cur));
    return out;
}

std::vector<double> project_station(const TransitionMatrix& m, std::span<const Count> ref_votes,
                                    Count electorate_cur) {
    std::vector<double> v(ref_votes.begin(), ref_votes.end());
    return project_station(m, std::span<const double>(v), electorate_cur);
}

// ---------------------------------------------------------------------------

ForecastEngine::ForecastEngine(const Dataset& ds, const DeclarationState& decl) {
    const auto n = static_cast<Eigen::Index>(ds.size());
    const auto n_ref = static_cast<Eigen::Index>(ds.parties().ref_size());
    const auto n_cur = static_cast<Eigen::Index>(ds.parties().cur_size());
    declared_.assign(ds.size(), false);
    ref_.resize(n, n_ref);
    cur_ = Eigen::MatrixXd::Zero(n, n_cur);
    electorate_cur_.resize(ds.size());
    std::vector<std::size_t> all_declared;
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& c = ds.stations()[k];
        for (Eigen::Index j = 0; j < n_ref; ++j) ref_(k, j) = static_cast<double>(c.ref_votes[j]);
        electorate_cur_[k] = static_cast<double>(c.electorate_cur);
        if (decl.is_declared(c.id)) {
            declared_[k] = true;
            const auto& v = decl.votes(c.id);
            for (Eigen::Index i = 0; i < n_cur; ++i) cur_(k, i) = static_cast<double>(v[i]);
            all_declared.push_back(static_cast<std::size_t>(k));
        }
    }
    n_declared_ = all_declared.size();
    if (n_declared_ > 0) global_ = fit(all_declared);
}

Eigen::MatrixXd ForecastEngine::fit(const std::vector<std::size_t>& rows) const {
    Eigen::MatrixXd design(static_cast<Eigen::Index>(rows.size()), ref_.cols());
    Eigen::MatrixXd response(static_cast<Eigen::Index>(rows.size()), cur_.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        design.row(static_cast<Eigen::Index>(r)) = ref_.row(static_cast<Eigen::Index>(rows[r]));
        response.row(static_cast<Eigen::Index>(r)) = cur_.row(static_cast<Eigen::Index>(rows[r]));
    }
    return solve_transition(design, response);
}

void ForecastEngine::project_into(const Eigen::MatrixXd& x, std::size_t station,
                                  Eigen::MatrixXd& out) const {
    const auto k = static_cast<Eigen::Index>(station);
    Eigen::VectorXd raw = x * ref_.row(k).transpose();
    clip_and_rescale(raw.data(), raw.size(), electorate_cur_[station]);
    out.row(k) = raw.transpose();
}

ForecastEngine::Output ForecastEngine::run(std::span<const int> grouping) const {
    if (grouping.size() != declared_.size())
        throw std::invalid_argument("grouping has " + std::to_string(grouping.size()) +
                                    " labels for " + std::to_string(declared_.size()) + " stations");
    if (n_declared_ == 0) throw NoDeclaredStations("no stations declared");

    // group label -> (declared rows, undeclared rows), both in station order
    std::map<int, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> groups;
    for (std::size_t k = 0; k < grouping.size(); ++k) {
        auto& g = groups[grouping[k]];
        (declared_[k] ? g.first : g.second).push_back(k);
    }

    Output out;
    out.station_votes = cur_;
    for (const auto& [label, members] : groups) {
        const auto& [known, unknown] = members;
        if (unknown.empty()) continue;
        if (known.empty()) {
            out.fallback_groups.push_back(label);
            for (std::size_t k : unknown) project_into(global_, k, out.station_votes);
        } else {
            const Eigen::MatrixXd x = fit(known);
            for (std::size_t k : unknown) project_into(x, k, out.station_votes);
        }
    }
    return out;
}

std::vector<double> ForecastEngine::totals(std::span<const int> grouping) const {
    const Output o = run(grouping);
    std::vector<double> t(static_cast<std::size_t>(o.station_votes.cols()), 0.0);
    for (Eigen::Index k = 0; k < o.station_votes.rows(); ++k)
        for (Eigen::Index i = 0; i < o.station_votes.cols(); ++i) t[i] += o.station_votes(k, i);
    return t;
}

ForecastResult assemble_forecast(const Dataset& ds, const DeclarationState& decl,
                                 std::span<const int> grouping) {
    if (decl.empty()) throw NoDeclaredStations("no stations declared");
    ForecastEngine engine(ds, decl);
    const auto out = engine.run(grouping);
    const std::size_t n_cur = ds.parties().cur_size();

    ForecastResult f;
    f.party_totals.assign(n_cur, 0.0);
    f.declared_totals.assign(n_cur, 0.0);
    f.fallback_groups = out.fallback_groups;
    for (std::size_t k = 0; k < ds.size(); ++k) {
        const auto row = out.station_votes.row(static_cast<Eigen::Index>(k));
        if (engine.declared(k)) {
            ++f.declared_count;
            for (std::size_t i = 0; i < n_cur; ++i) f.declared_totals[i] += row(i);
        } else {
            ++f.undeclared_count;
            f.station_projections.push_back(
                StationProjection{ds.stations()[k].id, std::vector<double>(row.begin(), row.end())});
        }
        for (std::size_t i = 0; i < n_cur; ++i) f.party_totals[i] += row(i);
    }
    return f;
}

std::vector<double> ForecastResult::pct_elec() const {
    return to_elec_shares(party_totals);
}

std::optional<std::vector<double>> ForecastResult::pct_vald() const {
    double valid = 0.0;
    for (std::size_t i = 0; i + 1 < party_totals.size(); ++i) valid += party_totals[i];
    if (!(valid > 0.0)) return std::nullopt;
    return to_vald_shares(party_totals);
}

json forecast_to_json(const Dataset& ds, const ForecastResult& f) {
    const auto& cur = ds.parties().cur();
    json doc;
    doc["parties"] = cur;
    doc["party_totals"] = f.party_totals;
    doc["pct_elec"] = f.pct_elec();
    if (auto v = f.pct_vald())
        doc["pct_vald"] = *v;
    else
        doc["pct_vald"] = nullptr;
    doc["declared_count"] = f.declared_count;
    doc["undeclared_count"] = f.undeclared_count;
    doc["declared_totals"] = f.declared_totals;
    doc["fallback_groups"] = f.fallback_groups;
    json per_station = json::object();
    for (const auto& p : f.station_projections) per_station[p.id] = p.votes;
    doc["per_station"] = std::move(per_station);
    return doc;
}

std::vector<double> to_elec_shares(std::span<const double> totals) {
    double sum = 0.0;
    for (double v : totals) {
        if (v < 0.0) throw std::invalid_argument("vote totals must be nonnegative");
        sum += v;
    }
    if (!(sum > 0.0)) throw std::invalid_argument("%Elec is undefined for an all-zero vote vector");
    std::vector<double> out(totals.size());
    for (std::size_t i = 0; i < totals.size(); ++i) out[i] = 100.0 * totals[i] / sum;
    return out;
}

std::vector<double> to_vald_shares(std::span<const double> totals) {
    if (totals.empty()) throw std::invalid_argument("%Vald needs at least one party");
    return to_elec_shares(totals.first(totals.size() - 1));
}

double rmse(std::span<const double> forecast, std::span<const double> truth, Metric metric) {
    if (forecast.size() != truth.size())
        throw std::invalid_argument("rmse: vectors have " + std::to_string(forecast.size()) +
                                    " and " + std::to_string(truth.size()) + " entries");
    std::vector<double> a, b;
    switch (metric) {
        case Metric::abs:
            a.assign(forecast.begin(), forecast.end());
            b.assign(truth.begin(), truth.end());
            break;
        case Metric::elec:
            a = to_elec_shares(forecast);
            b = to_elec_shares(truth);
            break;
        case Metric::vald:
            a = to_vald_shares(forecast);
            b = to_vald_shares(truth);
            break;
    }
    if (a.empty()) return 0.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(ss / static_cast<double>(a.size()));
}

}  // namespace nightcast
