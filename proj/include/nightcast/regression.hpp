#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "nightcast/electiondata.hpp"

namespace nightcast {

// Signals that a group has no declared members and the caller should fall
// back to the pooled matrix.
class NoDeclaredStations : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Metric { abs, elec, vald };

Metric parse_metric(std::string_view name);
std::string_view to_string(Metric m);

// Maps a full reference vote vector (NV last) to a full current vote vector.
// rows: current parties, cols: reference parties.
struct TransitionMatrix {
    Eigen::MatrixXd entries;
    int group_id = -1;
    std::size_t n_stations_used = 0;
};

// Pooled no-intercept least squares over the declared members of
// `member_ids`. Minimum-norm solution when the design is rank deficient.
TransitionMatrix estimate_transition(const Dataset& ds, const DeclarationState& decl,
                                     std::span<const std::string> member_ids, int group_id = -1);

TransitionMatrix global_transition(const Dataset& ds, const DeclarationState& decl);

// Least squares on raw matrices: design is stations x ref parties, response
// is stations x cur parties. Returns the cur x ref transition entries.
Eigen::MatrixXd solve_transition(const Eigen::MatrixXd& design, const Eigen::MatrixXd& response);

Eigen::VectorXd raw_projection(const TransitionMatrix& m, std::span<const double> ref_votes);

// Clip to [0, electorate] then scale to sum to the electorate. An all-zero
// clipped vector is assigned entirely to NV.
std::vector<double> project_station(const TransitionMatrix& m, std::span<const double> ref_votes,
                                    Count electorate_cur);
std::vector<double> project_station(const TransitionMatrix& m, std::span<const Count> ref_votes,
                                    Count electorate_cur);

struct StationProjection {
    std::string id;
    std::vector<double> votes;
};

struct ForecastResult {
    std::vector<double> party_totals;
    std::vector<double> declared_totals;
    std::vector<StationProjection> station_projections;  // undeclared stations, dataset order
    std::size_t declared_count = 0;
    std::size_t undeclared_count = 0;
    std::vector<int> fallback_groups;  // labels projected with the pooled matrix

    std::vector<double> pct_elec() const;
    // nullopt when no valid votes exist
    std::optional<std::vector<double>> pct_vald() const;
};

ForecastResult assemble_forecast(const Dataset& ds, const DeclarationState& decl,
                                 std::span<const int> grouping);

nlohmann::ordered_json forecast_to_json(const Dataset& ds, const ForecastResult& f);

std::vector<double> to_elec_shares(std::span<const double> totals);
std::vector<double> to_vald_shares(std::span<const double> totals);

double rmse(std::span<const double> forecast, std::span<const double> truth, Metric metric);

// Precomputed view of one declaration scenario. Evaluates many groupings
// against the same dataset without rebuilding lookups; assemble_forecast and
// the optimizer both go through it.
class ForecastEngine {
public:
    ForecastEngine(const Dataset& ds, const DeclarationState& decl);

    std::size_t station_count() const { return declared_.size(); }
    std::size_t declared_count() const { return n_declared_; }
    bool declared(std::size_t i) const { return declared_[i]; }
    const Eigen::MatrixXd& ref_votes() const { return ref_; }
    const Eigen::MatrixXd& cur_votes() const { return cur_; }

    // Per-station forecast: declared rows hold actual votes, undeclared rows
    // their projections. Stations are processed in dataset order.
    struct Output {
        Eigen::MatrixXd station_votes;
        std::vector<int> fallback_groups;
    };
    Output run(std::span<const int> grouping) const;

    // Party totals only, summed in station order.
    std::vector<double> totals(std::span<const int> grouping) const;

private:
    Eigen::MatrixXd fit(const std::vector<std::size_t>& rows) const;
    void project_into(const Eigen::MatrixXd& x, std::size_t station, Eigen::MatrixXd& out) const;

    std::vector<bool> declared_;
    std::size_t n_declared_ = 0;
    Eigen::MatrixXd ref_;  // stations x ref parties
    Eigen::MatrixXd cur_;  // stations x cur parties, zero rows for undeclared
    std::vector<double> electorate_cur_;
    Eigen::MatrixXd global_;
};

}  // namespace nightcast
