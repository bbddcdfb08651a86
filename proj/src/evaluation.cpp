#include "nightcast/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace nightcast {

using json = nlohmann::ordered_json;

namespace {

std::string fmt(double x) {
    if (std::isnan(x)) return "";
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

json num_or_null(double x) {
    return std::isnan(x) ? json(nullptr) : json(x);
}

MetricDeviation compare(Metric metric, const std::vector<std::string>& codes,
                        const std::vector<double>& forecast, const std::vector<double>& truth) {
    MetricDeviation d;
    d.metric = metric;
    std::vector<double> f, t;
    if (metric == Metric::elec) {
        f = to_elec_shares(forecast);
        t = to_elec_shares(truth);
    } else {
        f = to_vald_shares(forecast);
        t = to_vald_shares(truth);
    }
    std::vector<double> dev;
    for (std::size_t i = 0; i < f.size(); ++i) {
        dev.push_back(std::abs(f[i] - t[i]));
        d.parties.push_back(PartyDeviation{codes[i], dev.back()});
    }
    d.summary = stats::summarize(dev);
    return d;
}

}  // namespace

DeviationSummary deviation_summary(const Dataset& ds, const DeclarationState& decl,
                                   std::span<const NamedGrouping> groupings, bool per_station) {
    if (!ds.has_all_current()) throw ValidationError("deviation summary needs current votes for every station");
    const auto truth = ds.true_current_totals();
    const auto& codes = ds.parties().cur();
    DeviationSummary out;
    for (const auto& g : groupings) {
        const ForecastResult f = assemble_forecast(ds, decl, g.labels);
        StrategyDeviation s;
        s.strategy = g.name;
        s.elec = compare(Metric::elec, codes, f.party_totals, truth);
        s.vald = compare(Metric::vald, codes, f.party_totals, truth);
        if (per_station) {
            for (const auto& p : f.station_projections) {
                const auto& actual = *ds.at(p.id).cur_votes;
                std::vector<double> a(actual.begin(), actual.end());
                double dev = std::numeric_limits<double>::quiet_NaN();
                double valid_a = 0.0, valid_p = 0.0;
                for (std::size_t i = 0; i + 1 < a.size(); ++i) {
                    valid_a += a[i];
                    valid_p += p.votes[i];
                }
                if (valid_a > 0.0 && valid_p > 0.0) dev = rmse(p.votes, a, Metric::vald);
                s.per_station.push_back(StationDeviation{p.id, dev});
            }
        }
        out.strategies.push_back(std::move(s));
    }
    return out;
}

std::string deviations_to_csv(const DeviationSummary& s, std::span<const Metric> metrics) {
    std::string out = "strategy,metric,party,deviation_pp\n";
    for (const auto& st : s.strategies) {
        for (const MetricDeviation* m : {&st.elec, &st.vald}) {
            if (std::find(metrics.begin(), metrics.end(), m->metric) == metrics.end()) continue;
            for (const auto& p : m->parties)
                out += st.strategy + "," + std::string(to_string(m->metric)) + "," + p.party + "," +
                       fmt(p.deviation_pp) + "\n";
        }
    }
    return out;
}

json deviations_to_json(const DeviationSummary& s) {
    auto metric_json = [](const MetricDeviation& m) {
        json parties = json::object();
        for (const auto& p : m.parties) parties[p.party] = p.deviation_pp;
        return json{{"median", m.summary.median},
                    {"mean", m.summary.mean},
                    {"max", m.summary.max},
                    {"sd", m.summary.sd},
                    {"parties", std::move(parties)}};
    };
    json doc = json::object();
    for (const auto& st : s.strategies) {
        json entry{{"elec", metric_json(st.elec)}, {"vald", metric_json(st.vald)}};
        if (!st.per_station.empty()) {
            json ps = json::object();
            for (const auto& d : st.per_station) ps[d.id] = num_or_null(d.vald_rmse_pp);
            entry["per_station_vald_rmse"] = std::move(ps);
        }
        doc[st.strategy] = std::move(entry);
    }
    return doc;
}

GroupProfile group_profile(const Dataset& ds, std::span<const int> grouping, const DeclarationState* decl) {
    if (grouping.size() != ds.size())
        throw std::invalid_argument("grouping has " + std::to_string(grouping.size()) + " labels for " +
                                    std::to_string(ds.size()) + " stations");
    const std::size_t n_party = ds.parties().cur_size() - 1;
    int max_label = -1;
    for (int g : grouping) {
        if (g < 0) throw std::invalid_argument("negative group label");
        max_label = std::max(max_label, g);
    }
    const auto n_groups = static_cast<std::size_t>(max_label + 1);

    GroupProfile p;
    p.parties.assign(ds.parties().cur().begin(), ds.parties().cur().end() - 1);
    p.member_counts.assign(n_groups, 0);
    p.weights.assign(n_groups, 0.0);
    std::vector<std::vector<double>> sums(n_groups, std::vector<double>(n_party, 0.0));
    std::vector<double> global(n_party, 0.0);
    double global_w = 0.0;

    for (std::size_t k = 0; k < ds.size(); ++k) {
        const auto g = static_cast<std::size_t>(grouping[k]);
        ++p.member_counts[g];
        const auto& c = ds.stations()[k];
        const VoteVector* votes = nullptr;
        if (decl && decl->is_declared(c.id))
            votes = &decl->votes(c.id);
        else if (c.cur_votes)
            votes = &*c.cur_votes;
        if (!votes) continue;
        double valid = 0.0;
        for (std::size_t i = 0; i < n_party; ++i) valid += static_cast<double>((*votes)[i]);
        if (!(valid > 0.0)) continue;
        const double w = static_cast<double>(c.electorate_cur);
        p.weights[g] += w;
        global_w += w;
        for (std::size_t i = 0; i < n_party; ++i) {
            const double share = 100.0 * static_cast<double>((*votes)[i]) / valid;
            sums[g][i] += w * share;
            global[i] += w * share;
        }
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    p.mean_pct_vald.assign(n_groups, std::vector<double>(n_party, nan));
    for (std::size_t g = 0; g < n_groups; ++g)
        if (p.weights[g] > 0.0)
            for (std::size_t i = 0; i < n_party; ++i) p.mean_pct_vald[g][i] = sums[g][i] / p.weights[g];
    p.global_mean.assign(n_party, nan);
    if (global_w > 0.0)
        for (std::size_t i = 0; i < n_party; ++i) p.global_mean[i] = global[i] / global_w;
    return p;
}

std::string group_profile_to_csv(const GroupProfile& p) {
    std::string out = "group,party,mean_pct_vald,global_mean\n";
    for (std::size_t g = 0; g < p.mean_pct_vald.size(); ++g)
        for (std::size_t i = 0; i < p.parties.size(); ++i)
            out += std::to_string(g) + "," + p.parties[i] + "," + fmt(p.mean_pct_vald[g][i]) + "," +
                   fmt(p.global_mean[i]) + "\n";
    return out;
}

json group_profile_to_json(const GroupProfile& p) {
    json groups = json::array();
    for (std::size_t g = 0; g < p.mean_pct_vald.size(); ++g) {
        json means = json::array();
        for (double v : p.mean_pct_vald[g]) means.push_back(num_or_null(v));
        groups.push_back(json{{"group", g},
                              {"member_count", p.member_counts[g]},
                              {"weight", p.weights[g]},
                              {"mean_pct_vald", std::move(means)}});
    }
    json global = json::array();
    for (double v : p.global_mean) global.push_back(num_or_null(v));
    return json{{"parties", p.parties}, {"groups", std::move(groups)}, {"global_mean", std::move(global)}};
}

}  // namespace nightcast
