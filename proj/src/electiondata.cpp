#include "nightcast/electiondata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace nightcast {

namespace {

using json = nlohmann::ordered_json;

void check_codes(const std::vector<std::string>& codes, const char* which) {
    if (codes.empty())
        throw ValidationError(std::string(which) + ": at least one party besides NV is required");
    std::set<std::string> seen;
    for (const auto& c : codes) {
        if (c.empty()) throw ValidationError(std::string(which) + ": empty party code");
        if (c == kNonvoterCode)
            throw ValidationError(std::string(which) + ": party code NV is reserved for nonvoters");
        if (!seen.insert(c).second)
            throw ValidationError(std::string(which) + ": duplicate party code '" + c + "'");
    }
}

void check_full_vector(const Constituency& c, const VoteVector& v, std::size_t n, Count electorate,
                       const char* which) {
    if (v.size() != n)
        throw ValidationError("station '" + c.id + "': " + which + " has " +
                              std::to_string(v.size()) + " entries, expected " +
                              std::to_string(n));
    Count sum = 0;
    for (Count x : v) {
        if (x < 0) throw ValidationError("station '" + c.id + "': negative " + which);
        sum += x;
    }
    if (sum != electorate)
        throw ValidationError("station '" + c.id + "': " + which + " sum to " +
                              std::to_string(sum) + " but electorate is " +
                              std::to_string(electorate));
}

}  // namespace

PartySet::PartySet(std::vector<std::string> ref_parties, std::vector<std::string> cur_parties)
    : ref_(std::move(ref_parties)), cur_(std::move(cur_parties)) {
    check_codes(ref_, "ref_parties");
    check_codes(cur_, "cur_parties");
    ref_.emplace_back(kNonvoterCode);
    cur_.emplace_back(kNonvoterCode);
}

Dataset::Dataset(PartySet parties, std::vector<Constituency> stations, Metadata meta)
    : parties_(std::move(parties)), stations_(std::move(stations)), meta_(std::move(meta)) {
    if (parties_.ref_size() < 2 || parties_.cur_size() < 2)
        throw ValidationError("party lists must contain at least one party besides NV");
    if (stations_.size() < 2) throw ValidationError("a dataset needs at least 2 stations");
    for (std::size_t i = 0; i < stations_.size(); ++i) {
        const auto& c = stations_[i];
        if (c.id.empty()) throw ValidationError("station #" + std::to_string(i) + ": empty id");
        if (!index_.emplace(c.id, i).second)
            throw ValidationError("station '" + c.id + "': duplicate id");
        if (c.electorate_ref < 0 || c.electorate_cur < 0)
            throw ValidationError("station '" + c.id + "': negative electorate");
        check_full_vector(c, c.ref_votes, parties_.ref_size(), c.electorate_ref, "ref_votes");
        if (c.cur_votes)
            check_full_vector(c, *c.cur_votes, parties_.cur_size(), c.electorate_cur, "cur_votes");
        if (c.declared_rank && *c.declared_rank < 1)
            throw ValidationError("station '" + c.id + "': declared_rank must be >= 1");
    }
}

std::optional<std::size_t> Dataset::find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const Constituency& Dataset::at(const std::string& id) const {
    auto idx = find(id);
    if (!idx) throw ValidationError("unknown station '" + id + "'");
    return stations_[*idx];
}

bool Dataset::has_all_current() const {
    return std::all_of(stations_.begin(), stations_.end(),
                       [](const Constituency& c) { return c.cur_votes.has_value(); });
}

std::vector<double> Dataset::true_current_totals() const {
    std::vector<double> totals(parties_.cur_size(), 0.0);
    for (const auto& c : stations_) {
        if (!c.cur_votes) throw ValidationError("station '" + c.id + "': no current votes");
        for (std::size_t p = 0; p < totals.size(); ++p)
            totals[p] += static_cast<double>((*c.cur_votes)[p]);
    }
    return totals;
}

Count Dataset::total_electorate_cur() const {
    Count total = 0;
    for (const auto& c : stations_) total += c.electorate_cur;
    return total;
}

void DeclarationState::declare(const Dataset& ds, const std::string& id,
                               std::span<const Count> votes) {
    const auto& c = ds.at(id);
    if (votes.size() + 1 != ds.parties().cur_size())
        throw ValidationError("station '" + id + "': expected " +
                              std::to_string(ds.parties().cur_size() - 1) + " vote counts, got " +
                              std::to_string(votes.size()));
    if (is_declared(id)) throw ValidationError("station '" + id + "': already declared");
    for (Count v : votes)
        if (v < 0) throw ValidationError("station '" + id + "': negative vote count");
    VoteVector full;
    try {
        full = derive_nonvoters(votes, c.electorate_cur);
    } catch (const ValidationError& e) {
        throw ValidationError("station '" + id + "': " + e.what());
    }
    votes_.emplace(id, std::move(full));
}

std::vector<std::string> DeclarationState::ordered_ids(const Dataset& ds) const {
    std::vector<std::string> ids;
    ids.reserve(votes_.size());
    for (const auto& c : ds.stations())
        if (is_declared(c.id)) ids.push_back(c.id);
    return ids;
}

void SynthSpec::validate() const {
    if (n_groups < 1 || stations_per_group < 1 || ref_party_count < 1 || cur_party_count < 1)
        throw ValidationError("synthetic spec: all counts must be >= 1");
    if (electorate_min < 0 || electorate_min > electorate_max)
        throw ValidationError("synthetic spec: electorate range must satisfy 0 <= min <= max");
    const Count first_block = std::max<Count>(1, (electorate_min + kSynthQuantum - 1) / kSynthQuantum);
    if (first_block * kSynthQuantum > electorate_max)
        throw ValidationError("synthetic spec: electorate range must contain a positive multiple of " +
                              std::to_string(kSynthQuantum));
    if (static_cast<Count>(cur_party_count + 1) >= kSynthQuantum)
        throw ValidationError("synthetic spec: too many current parties");
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd))
        throw ValidationError("synthetic spec: noise_sd must be finite and >= 0");
}

VoteVector derive_nonvoters(std::span<const Count> votes, Count electorate) {
    Count sum = 0;
    for (Count v : votes) sum += v;
    if (sum > electorate)
        throw ValidationError("votes sum to " + std::to_string(sum) + ", exceeding electorate " +
                              std::to_string(electorate));
    VoteVector full(votes.begin(), votes.end());
    full.push_back(electorate - sum);
    return full;
}

Count round_half_away(double x) {
    return static_cast<Count>(std::round(x));
}

VoteVector rescale_to_total(std::span<const Count> votes, Count total) {
    VoteVector out(votes.begin(), votes.end());
    if (out.empty()) return out;
    Count sum = std::accumulate(out.begin(), out.end(), Count{0});
    if (sum == total) return out;
    if (sum == 0) {
        std::fill(out.begin(), out.end(), 0);
        out.back() = total;
        return out;
    }
    std::vector<std::pair<double, std::size_t>> remainders;
    remainders.reserve(out.size());
    Count assigned = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        double exact = static_cast<double>(votes[i]) * static_cast<double>(total) /
                       static_cast<double>(sum);
        out[i] = static_cast<Count>(std::floor(exact));
        assigned += out[i];
        remainders.emplace_back(exact - static_cast<double>(out[i]), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[remainders[k % out.size()].second];
    return out;
}

SyntheticElection generate_synthetic(const SynthSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const std::size_t n_ref = spec.ref_party_count + 1;
    const std::size_t n_cur = spec.cur_party_count + 1;
    const std::size_t n_total = spec.n_groups * spec.stations_per_group;

    // Column-stochastic matrices on the 1/Q lattice: each reference party's
    // voters are split over the current parties in Q positive units.
    const Count q = kSynthQuantum;
    std::vector<TrueMatrix> matrices(spec.n_groups);
    std::vector<std::vector<std::vector<Count>>> units(spec.n_groups);
    for (std::size_t g = 0; g < spec.n_groups; ++g) {
        matrices[g].group = g;
        matrices[g].entries.assign(n_cur, std::vector<double>(n_ref, 0.0));
        units[g].assign(n_cur, std::vector<Count>(n_ref, 0));
        for (std::size_t j = 0; j < n_ref; ++j) {
            std::vector<Count> weights(n_cur);
            for (std::size_t i = 0; i < n_cur; ++i) {
                double w = 0.05 + unit(rng);
                // loyalty: voters tend to stay with the matching party or abstain again
                if (i == j || (i + 1 == n_cur && j + 1 == n_ref)) w += 1.5 * unit(rng);
                weights[i] = static_cast<Count>(std::llround(w * 1000.0));
            }
            VoteVector col = rescale_to_total(weights, q - static_cast<Count>(n_cur));
            for (std::size_t i = 0; i < n_cur; ++i) {
                units[g][i][j] = col[i] + 1;
                matrices[g].entries[i][j] = static_cast<double>(units[g][i][j]) / static_cast<double>(q);
            }
        }
    }

    // Group-specific reference share profiles so groups differ in their
    // reference-election character as well as in their transitions.
    std::vector<std::vector<double>> profile(spec.n_groups, std::vector<double>(n_ref));
    for (auto& p : profile)
        for (auto& w : p) w = 0.2 + unit(rng);

    const Count lo = (spec.electorate_min + q - 1) / q;
    const Count hi = spec.electorate_max / q;
    std::uniform_int_distribution<Count> blocks(std::max<Count>(lo, 1), std::max<Count>(hi, 1));
    std::normal_distribution<double> noise(0.0, spec.noise_sd > 0 ? spec.noise_sd : 1.0);

    std::vector<Constituency> stations;
    std::vector<int> labels;
    stations.reserve(n_total);
    for (std::size_t g = 0; g < spec.n_groups; ++g) {
        for (std::size_t s = 0; s < spec.stations_per_group; ++s) {
            Constituency c;
            const Count n_blocks = blocks(rng);
            std::vector<Count> weights(n_ref);
            for (std::size_t j = 0; j < n_ref; ++j)
                weights[j] = static_cast<Count>(std::llround(profile[g][j] * (0.4 + unit(rng)) * 1000.0));
            VoteVector ref_blocks = rescale_to_total(weights, n_blocks);
            c.ref_votes.resize(n_ref);
            for (std::size_t j = 0; j < n_ref; ++j) c.ref_votes[j] = ref_blocks[j] * q;
            c.electorate_ref = n_blocks * q;
            c.electorate_cur = c.electorate_ref;

            // exact integer product: units are entries * Q, ref votes are multiples of Q
            VoteVector cur(n_cur, 0);
            for (std::size_t i = 0; i < n_cur; ++i) {
                Count acc = 0;
                for (std::size_t j = 0; j < n_ref; ++j) acc += units[g][i][j] * ref_blocks[j];
                cur[i] = acc;
            }
            if (spec.noise_sd > 0.0) {
                for (auto& v : cur) {
                    double noisy = static_cast<double>(v) + noise(rng);
                    v = std::clamp<Count>(round_half_away(noisy), 0, c.electorate_cur);
                }
            }
            c.cur_votes = rescale_to_total(cur, c.electorate_cur);
            stations.push_back(std::move(c));
            labels.push_back(static_cast<int>(g));
        }
    }

    std::vector<std::size_t> order(n_total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<Constituency> shuffled;
    std::vector<int> shuffled_labels;
    shuffled.reserve(n_total);
    for (std::size_t k = 0; k < n_total; ++k) {
        Constituency c = std::move(stations[order[k]]);
        char buf[32];
        std::snprintf(buf, sizeof buf, "S%04zu", k + 1);
        c.id = buf;
        c.name = "Station " + std::to_string(k + 1);
        shuffled.push_back(std::move(c));
        shuffled_labels.push_back(labels[order[k]]);
    }

    std::vector<std::string> ref_codes, cur_codes;
    for (std::size_t j = 0; j < spec.ref_party_count; ++j) ref_codes.push_back("R" + std::to_string(j + 1));
    for (std::size_t i = 0; i < spec.cur_party_count; ++i) cur_codes.push_back("C" + std::to_string(i + 1));

    Metadata meta{{"name", "synthetic"}, {"seed", std::to_string(spec.seed)}};
    return SyntheticElection{
        Dataset(PartySet(ref_codes, cur_codes), std::move(shuffled), std::move(meta)),
        std::move(shuffled_labels), std::move(matrices)};
}

DeclarationState make_scenario(const Dataset& ds, double missing_electorate_fraction,
                               std::uint64_t seed) {
    if (!ds.has_all_current())
        throw ValidationError("scenario construction needs current votes for every station");
    if (!(missing_electorate_fraction >= 0.0 && missing_electorate_fraction <= 1.0))
        throw ValidationError("missing electorate fraction must lie in [0, 1]");

    const auto& st = ds.stations();
    std::vector<bool> missing(st.size(), false);
    if (missing_electorate_fraction >= 1.0) {
        std::fill(missing.begin(), missing.end(), true);
    } else {
        const double target = missing_electorate_fraction * static_cast<double>(ds.total_electorate_cur());
        std::vector<std::size_t> order(st.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        const bool ranked = std::all_of(st.begin(), st.end(),
                                        [](const Constituency& c) { return c.declared_rank.has_value(); });
        if (ranked) {
            // latest declarations are the missing ones; consume a prefix
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return *st[a].declared_rank > *st[b].declared_rank;
            });
            double cum = 0.0;
            for (std::size_t idx : order) {
                double next = cum + static_cast<double>(st[idx].electorate_cur);
                if (std::abs(next - target) >= std::abs(cum - target)) break;
                missing[idx] = true;
                cum = next;
            }
        } else {
            std::mt19937_64 rng(seed);
            std::shuffle(order.begin(), order.end(), rng);
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return st[a].electorate_cur > st[b].electorate_cur;
            });
            double cum = 0.0;
            for (std::size_t idx : order) {
                double next = cum + static_cast<double>(st[idx].electorate_cur);
                if (std::abs(next - target) < std::abs(cum - target)) {
                    missing[idx] = true;
                    cum = next;
                }
            }
        }
    }

    DeclarationState decl;
    for (std::size_t i = 0; i < st.size(); ++i) {
        if (missing[i]) continue;
        const auto& full = *st[i].cur_votes;
        decl.declare(ds, st[i].id, std::span<const Count>(full.data(), full.size() - 1));
    }
    return decl;
}

DeclarationState all_declared(const Dataset& ds) {
    return make_scenario(ds, 0.0, 0);
}

// ---------------------------------------------------------------------------
// JSON

namespace {

template <typename T>
T get_field(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
    try {
        return it->template get<T>();
    } catch (const json::exception& e) {
        throw ParseError(where + ": field '" + key + "' has the wrong type");
    }
}

std::vector<Count> get_counts(const json& arr, const std::string& where, const char* key) {
    if (!arr.is_array()) throw ParseError(where + ": field '" + key + "' must be an array");
    std::vector<Count> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number_integer())
            throw ParseError(where + ": field '" + key + "' must contain integers");
        out.push_back(v.get<Count>());
    }
    return out;
}

}  // namespace

Dataset dataset_from_json(const json& doc) {
    if (!doc.is_object()) throw ParseError("dataset: document must be a JSON object");
    Metadata meta;
    if (auto it = doc.find("meta"); it != doc.end() && !it->is_null()) {
        if (!it->is_object()) throw ParseError("dataset: 'meta' must be an object");
        for (const auto& [k, v] : it->items())
            meta.emplace_back(k, v.is_string() ? v.get<std::string>() : v.dump());
    }
    auto ref_codes = get_field<std::vector<std::string>>(doc, "ref_parties", "dataset");
    auto cur_codes = get_field<std::vector<std::string>>(doc, "cur_parties", "dataset");
    PartySet parties(ref_codes, cur_codes);

    auto it = doc.find("stations");
    if (it == doc.end() || !it->is_array()) throw ParseError("dataset: 'stations' must be an array");
    std::vector<Constituency> stations;
    stations.reserve(it->size());
    std::size_t k = 0;
    for (const auto& s : *it) {
        std::string where = "station #" + std::to_string(k++);
        if (!s.is_object()) throw ParseError(where + ": must be an object");
        Constituency c;
        c.id = get_field<std::string>(s, "id", where);
        where = "station '" + c.id + "'";
        c.name = s.contains("name") && s["name"].is_string() ? s["name"].get<std::string>() : c.id;
        c.electorate_ref = get_field<Count>(s, "electorate_ref", where);
        c.electorate_cur = get_field<Count>(s, "electorate_cur", where);
        if (!s.contains("ref_votes")) throw ParseError(where + ": missing field 'ref_votes'");
        auto ref = get_counts(s["ref_votes"], where, "ref_votes");
        if (ref.size() != ref_codes.size())
            throw ValidationError(where + ": ref_votes has " + std::to_string(ref.size()) +
                                  " entries for " + std::to_string(ref_codes.size()) + " parties");
        try {
            c.ref_votes = derive_nonvoters(ref, c.electorate_ref);
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": ref_votes: " + e.what());
        }
        if (auto cv = s.find("cur_votes"); cv != s.end() && !cv->is_null()) {
            auto cur = get_counts(*cv, where, "cur_votes");
            if (cur.size() != cur_codes.size())
                throw ValidationError(where + ": cur_votes has " + std::to_string(cur.size()) +
                                      " entries for " + std::to_string(cur_codes.size()) + " parties");
            try {
                c.cur_votes = derive_nonvoters(cur, c.electorate_cur);
            } catch (const ValidationError& e) {
                throw ValidationError(where + ": cur_votes: " + e.what());
            }
        }
        if (auto dr = s.find("declared_rank"); dr != s.end() && !dr->is_null()) {
            if (!dr->is_number_integer()) throw ParseError(where + ": declared_rank must be an integer");
            c.declared_rank = dr->get<int>();
        }
        stations.push_back(std::move(c));
    }
    return Dataset(std::move(parties), std::move(stations), std::move(meta));
}

json dataset_to_json(const Dataset& ds) {
    json doc;
    json meta = json::object();
    for (const auto& [k, v] : ds.meta()) meta[k] = v;
    doc["meta"] = meta;
    const auto& ref = ds.parties().ref();
    const auto& cur = ds.parties().cur();
    doc["ref_parties"] = std::vector<std::string>(ref.begin(), ref.end() - 1);
    doc["cur_parties"] = std::vector<std::string>(cur.begin(), cur.end() - 1);
    json stations = json::array();
    for (const auto& c : ds.stations()) {
        json s;
        s["id"] = c.id;
        s["name"] = c.name;
        s["electorate_ref"] = c.electorate_ref;
        s["electorate_cur"] = c.electorate_cur;
        s["ref_votes"] = std::vector<Count>(c.ref_votes.begin(), c.ref_votes.end() - 1);
        if (c.cur_votes)
            s["cur_votes"] = std::vector<Count>(c.cur_votes->begin(), c.cur_votes->end() - 1);
        else
            s["cur_votes"] = nullptr;
        if (c.declared_rank)
            s["declared_rank"] = *c.declared_rank;
        else
            s["declared_rank"] = nullptr;
        stations.push_back(std::move(s));
    }
    doc["stations"] = std::move(stations);
    return doc;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

Dataset load_dataset(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return dataset_from_json(doc);
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    write_text_file(path, dataset_to_json(ds).dump(2) + "\n");
}

DeclarationState declarations_from_json(const Dataset& ds, const json& doc) {
    if (!doc.is_object() || !doc.contains("declarations") || !doc["declarations"].is_array())
        throw ParseError("declarations: expected {\"declarations\": [...]}");
    DeclarationState decl;
    for (const auto& d : doc["declarations"]) {
        auto id = get_field<std::string>(d, "station_id", "declaration");
        if (!d.contains("votes")) throw ParseError("declaration '" + id + "': missing votes");
        auto votes = get_counts(d["votes"], "declaration '" + id + "'", "votes");
        decl.declare(ds, id, votes);
    }
    return decl;
}

json declarations_to_json(const Dataset& ds, const DeclarationState& decl) {
    json arr = json::array();
    for (const auto& id : decl.ordered_ids(ds)) {
        const auto& v = decl.votes(id);
        arr.push_back(json{{"station_id", id}, {"votes", std::vector<Count>(v.begin(), v.end() - 1)}});
    }
    return json{{"declarations", std::move(arr)}};
}

// ---------------------------------------------------------------------------
// CSV import

namespace {

struct CsvTable {
    std::vector<std::string> parties;
    std::vector<std::tuple<std::string, std::string, Count, std::vector<Count>>> rows;
};

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cell += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else if (ch != '\r') {
            cell += ch;
        }
    }
    cells.push_back(std::move(cell));
    return cells;
}

Count parse_count(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(where + ": '" + s + "' is not an integer");
    }
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    auto header = split_csv_line(line);
    if (header.size() < 4 || header[0] != "id" || header[1] != "name" || header[2] != "electorate")
        throw ParseError(path.string() + ": header must be id,name,electorate,<party>...");
    CsvTable t;
    t.parties.assign(header.begin() + 3, header.end());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv_line(line);
        std::string where = path.filename().string() + ":" + std::to_string(lineno);
        if (cells.size() != header.size())
            throw ParseError(where + ": expected " + std::to_string(header.size()) + " cells");
        std::vector<Count> votes;
        for (std::size_t j = 3; j < cells.size(); ++j) votes.push_back(parse_count(cells[j], where));
        t.rows.emplace_back(cells[0], cells[1], parse_count(cells[2], where), std::move(votes));
    }
    return t;
}

}  // namespace

Dataset import_csv(const std::filesystem::path& reference_csv,
                   const std::filesystem::path& current_csv) {
    CsvTable ref = read_csv(reference_csv);
    CsvTable cur = read_csv(current_csv);
    std::map<std::string, std::size_t> cur_index;
    for (std::size_t i = 0; i < cur.rows.size(); ++i)
        if (!cur_index.emplace(std::get<0>(cur.rows[i]), i).second)
            throw ValidationError("station '" + std::get<0>(cur.rows[i]) + "': duplicate id in current.csv");

    json doc;
    doc["meta"] = json{{"source", reference_csv.filename().string() + "+" + current_csv.filename().string()}};
    doc["ref_parties"] = ref.parties;
    doc["cur_parties"] = cur.parties;
    json stations = json::array();
    std::set<std::string> seen;
    for (const auto& [id, name, electorate, votes] : ref.rows) {
        json s{{"id", id}, {"name", name}, {"electorate_ref", electorate}};
        auto it = cur_index.find(id);
        if (it != cur_index.end()) {
            const auto& row = cur.rows[it->second];
            s["electorate_cur"] = std::get<2>(row);
            s["ref_votes"] = votes;
            s["cur_votes"] = std::get<3>(row);
        } else {
            s["electorate_cur"] = electorate;
            s["ref_votes"] = votes;
            s["cur_votes"] = nullptr;
        }
        s["declared_rank"] = nullptr;
        seen.insert(id);
        stations.push_back(std::move(s));
    }
    for (const auto& row : cur.rows)
        if (!seen.count(std::get<0>(row)))
            throw ValidationError("station '" + std::get<0>(row) + "': present in current.csv only");
    doc["stations"] = std::move(stations);
    return dataset_from_json(doc);
}

}  // namespace nightcast
