#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace nightcast {

using Count = std::int64_t;
using VoteVector = std::vector<Count>;

inline constexpr const char* kNonvoterCode = "NV";

// Malformed input document (syntax or missing fields).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Well-formed input that breaks a data invariant. The message names the record.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Party codes for both elections. The nonvoter pseudo-party "NV" is always the
// last entry of each list and is never read from or written to files.
class PartySet {
public:
    PartySet() = default;
    // Lists exclude NV; it is appended here.
    PartySet(std::vector<std::string> ref_parties, std::vector<std::string> cur_parties);

    const std::vector<std::string>& ref() const { return ref_; }
    const std::vector<std::string>& cur() const { return cur_; }
    std::size_t ref_size() const { return ref_.size(); }
    std::size_t cur_size() const { return cur_.size(); }
    std::size_t nv_ref_index() const { return ref_.size() - 1; }
    std::size_t nv_cur_index() const { return cur_.size() - 1; }

    bool operator==(const PartySet&) const = default;

private:
    std::vector<std::string> ref_;
    std::vector<std::string> cur_;
};

// Vote vectors are stored in full form, NV component included.
struct Constituency {
    std::string id;
    std::string name;
    Count electorate_ref = 0;
    Count electorate_cur = 0;
    VoteVector ref_votes;
    std::optional<VoteVector> cur_votes;
    std::optional<int> declared_rank;

    bool operator==(const Constituency&) const = default;
};

using Metadata = std::vector<std::pair<std::string, std::string>>;

class Dataset {
public:
    Dataset() = default;
    // Validates all invariants; throws ValidationError naming the offending record.
    Dataset(PartySet parties, std::vector<Constituency> stations, Metadata meta = {});

    const PartySet& parties() const { return parties_; }
    const std::vector<Constituency>& stations() const { return stations_; }
    const Metadata& meta() const { return meta_; }
    std::size_t size() const { return stations_.size(); }

    // Index of a station id, or nullopt.
    std::optional<std::size_t> find(const std::string& id) const;
    const Constituency& at(const std::string& id) const;

    bool has_all_current() const;
    // Sum of full current vote vectors. Requires has_all_current().
    std::vector<double> true_current_totals() const;
    Count total_electorate_cur() const;

    bool operator==(const Dataset& o) const {
        return parties_ == o.parties_ && stations_ == o.stations_ && meta_ == o.meta_;
    }

private:
    PartySet parties_;
    std::vector<Constituency> stations_;
    Metadata meta_;
    std::map<std::string, std::size_t> index_;
};

// Declared stations and their full current vote vectors (NV included).
class DeclarationState {
public:
    DeclarationState() = default;

    bool is_declared(const std::string& id) const { return votes_.count(id) != 0; }
    const VoteVector& votes(const std::string& id) const { return votes_.at(id); }
    std::size_t size() const { return votes_.size(); }
    bool empty() const { return votes_.empty(); }
    const std::map<std::string, VoteVector>& all() const { return votes_; }

    // Adds a declaration after checking it against the dataset. `votes`
    // excludes NV. Throws ValidationError on unknown id, bad length or
    // votes above the electorate; re-declaring the same id throws as well.
    void declare(const Dataset& ds, const std::string& id, std::span<const Count> votes);

    // Declared ids in dataset order.
    std::vector<std::string> ordered_ids(const Dataset& ds) const;

    bool operator==(const DeclarationState&) const = default;

private:
    std::map<std::string, VoteVector> votes_;
};

struct SynthSpec {
    std::size_t n_groups = 3;
    std::size_t stations_per_group = 20;
    std::size_t ref_party_count = 3;
    std::size_t cur_party_count = 3;
    Count electorate_min = 500;
    Count electorate_max = 5000;
    double noise_sd = 0.0;
    std::uint64_t seed = 1;

    void validate() const;
};

struct TrueMatrix {
    std::size_t group = 0;
    // rows: current parties (NV last), columns: reference parties (NV last)
    std::vector<std::vector<double>> entries;
};

struct SyntheticElection {
    Dataset dataset;
    std::vector<int> true_grouping;
    std::vector<TrueMatrix> true_matrices;
};

// Transition entries are multiples of 1/kSynthQuantum and reference votes are
// multiples of kSynthQuantum, so noiseless current votes are exact integers.
inline constexpr Count kSynthQuantum = 50;

VoteVector derive_nonvoters(std::span<const Count> votes, Count electorate);

// Rescales a nonnegative integer vector to sum exactly to `total` with
// largest-remainder rounding. An all-zero vector goes entirely to the last
// (NV) component.
VoteVector rescale_to_total(std::span<const Count> votes, Count total);

// Rounds half away from zero.
Count round_half_away(double x);

SyntheticElection generate_synthetic(const SynthSpec& spec);

// Builds the declared set for a simulated election night in which the
// undeclared stations hold `missing_electorate_fraction` of the current
// electorate. Larger stations are left undeclared first; stations carrying a
// declared_rank use that order instead (highest rank declares last).
DeclarationState make_scenario(const Dataset& ds, double missing_electorate_fraction,
                               std::uint64_t seed);

DeclarationState all_declared(const Dataset& ds);

// JSON file forms.
Dataset dataset_from_json(const nlohmann::ordered_json& doc);
nlohmann::ordered_json dataset_to_json(const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

// {"declarations": [{"station_id": ..., "votes": [ints excl. NV]}]}
DeclarationState declarations_from_json(const Dataset& ds, const nlohmann::ordered_json& doc);
nlohmann::ordered_json declarations_to_json(const Dataset& ds, const DeclarationState& decl);

// Merges reference.csv and current.csv (header `id,name,electorate,<party>...`)
// on id. Stations missing from current.csv get cur_votes = null.
Dataset import_csv(const std::filesystem::path& reference_csv,
                   const std::filesystem::path& current_csv);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace nightcast
