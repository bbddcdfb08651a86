#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "nightcast/electiondata.hpp"

namespace fixtures {

using nightcast::Constituency;
using nightcast::Count;
using nightcast::Dataset;
using nightcast::PartySet;

// `ref`/`cur` rows exclude NV; electorates are given explicitly.
inline Dataset make_dataset(std::vector<std::string> ref_codes, std::vector<std::string> cur_codes,
                            const std::vector<std::vector<Count>>& ref,
                            const std::vector<std::vector<Count>>& cur,
                            const std::vector<Count>& electorate_ref,
                            const std::vector<Count>& electorate_cur) {
    std::vector<Constituency> st;
    for (std::size_t k = 0; k < ref.size(); ++k) {
        Constituency c;
        c.id = "K" + std::to_string(k + 1);
        c.name = "Station " + std::to_string(k + 1);
        c.electorate_ref = electorate_ref[k];
        c.electorate_cur = electorate_cur[k];
        c.ref_votes = nightcast::derive_nonvoters(ref[k], c.electorate_ref);
        if (!cur.empty()) c.cur_votes = nightcast::derive_nonvoters(cur[k], c.electorate_cur);
        st.push_back(std::move(c));
    }
    return Dataset(PartySet(std::move(ref_codes), std::move(cur_codes)), std::move(st));
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path = std::filesystem::temp_directory_path() /
               ("nightcast-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline nightcast::SynthSpec small_spec(double noise = 0.0, std::uint64_t seed = 7) {
    nightcast::SynthSpec s;
    s.n_groups = 3;
    s.stations_per_group = 20;
    s.ref_party_count = 3;
    s.cur_party_count = 3;
    s.electorate_min = 500;
    s.electorate_max = 5000;
    s.noise_sd = noise;
    s.seed = seed;
    return s;
}

}  // namespace fixtures
