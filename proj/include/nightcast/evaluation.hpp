#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "nightcast/electiondata.hpp"
#include "nightcast/regression.hpp"
#include "nightcast/stats.hpp"

namespace nightcast {

struct NamedGrouping {
    std::string name;
    std::vector<int> labels;
};

struct PartyDeviation {
    std::string party;
    double deviation_pp = 0.0;
};

struct MetricDeviation {
    Metric metric = Metric::elec;
    std::vector<PartyDeviation> parties;  // NV appears for elec only
    stats::Summary summary;               // over parties
};

struct StationDeviation {
    std::string id;
    double vald_rmse_pp = 0.0;
};

struct StrategyDeviation {
    std::string strategy;
    MetricDeviation elec;
    MetricDeviation vald;
    std::vector<StationDeviation> per_station;  // only with per_station = true
};

struct DeviationSummary {
    std::vector<StrategyDeviation> strategies;
};

// Forecast each grouping under the scenario and compare per-party shares
// with the true outcome in percentage points.
DeviationSummary deviation_summary(const Dataset& ds, const DeclarationState& decl,
                                   std::span<const NamedGrouping> groupings, bool per_station = false);

// `strategy,metric,party,deviation_pp`; `metrics` limits the rows.
std::string deviations_to_csv(const DeviationSummary& s, std::span<const Metric> metrics);
nlohmann::ordered_json deviations_to_json(const DeviationSummary& s);

struct GroupProfile {
    std::vector<std::string> parties;          // current parties without NV
    std::vector<std::size_t> member_counts;    // per group label
    std::vector<double> weights;               // electorate of members with votes, per group
    std::vector<std::vector<double>> mean_pct_vald;  // group x party, NaN when no data
    std::vector<double> global_mean;                 // per party
};

// Electorate-weighted mean %Vald per party within each group. Votes come from
// `decl` where declared, else from the dataset's current votes; stations
// without any current votes or valid votes are skipped.
GroupProfile group_profile(const Dataset& ds, std::span<const int> grouping,
                           const DeclarationState* decl = nullptr);

// `group,party,mean_pct_vald,global_mean`
std::string group_profile_to_csv(const GroupProfile& p);
nlohmann::ordered_json group_profile_to_json(const GroupProfile& p);

}  // namespace nightcast
