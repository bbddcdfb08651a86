#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stop_token>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "nightcast/electiondata.hpp"
#include "nightcast/regression.hpp"
#include "nightcast/stats.hpp"

namespace nightcast {

using Rng = std::mt19937_64;

enum class Operator { mutation, crossover, reseed };

Operator parse_operator(std::string_view name);
std::string_view to_string(Operator op);

// Defaults follow the tuned genetic optimization parameters: population 100,
// 500 generations, 10% elites, parents from the best 70%, per-gene mutation
// probability 0.003, 10% random re-seeding, ten groups.
struct GaConfig {
    std::size_t population_size = 100;
    std::size_t generations = 500;
    double elite_fraction = 0.1;
    double eligible_fraction = 0.7;
    double mutation_prob = 0.003;
    double reseed_fraction = 0.1;
    std::size_t n_groups = 10;
    Metric metric = Metric::abs;
    // unset: reference party count (without NV) + 2
    std::optional<std::size_t> min_declared_per_group;
    // unset: 10 x best raw RMSE of the initial population
    std::optional<double> penalty_weight;
    std::uint64_t seed = 1;
    std::set<Operator> disabled_operators;
    // stop once the best fitness improved by < 0.1% over 100 generations
    bool early_stop = false;
    std::size_t threads = 1;

    bool enabled(Operator op) const { return disabled_operators.count(op) == 0; }
    void validate() const;
};

nlohmann::ordered_json config_to_json(const GaConfig& c);
GaConfig config_from_json(const nlohmann::ordered_json& doc, GaConfig base = {});
std::string config_digest(const GaConfig& c);

struct Chromosome {
    std::vector<int> genes;
    std::optional<double> fitness;
};

using Population = std::vector<Chromosome>;

bool is_valid(const Chromosome& c, std::size_t n_genes, std::size_t n_groups);

// What the optimizer minimizes. Genes are group labels; `counts_as_declared`
// marks genes whose stations count toward the per-group minimum.
class Objective {
public:
    virtual ~Objective() = default;
    virtual std::size_t gene_count() const = 0;
    virtual bool counts_as_declared(std::size_t gene) const = 0;
    virtual double raw(std::span<const int> genes) const = 0;
    virtual std::size_t default_min_declared() const = 0;
};

// Forecast RMSE against the known outcome for one declaration scenario.
class ScenarioObjective : public Objective {
public:
    ScenarioObjective(const Dataset& ds, const DeclarationState& decl, Metric metric);

    std::size_t gene_count() const override { return engine_.station_count(); }
    bool counts_as_declared(std::size_t gene) const override { return engine_.declared(gene); }
    double raw(std::span<const int> genes) const override;
    std::size_t default_min_declared() const override { return min_declared_; }

private:
    ForecastEngine engine_;
    std::vector<double> truth_;
    Metric metric_;
    std::size_t min_declared_;
};

// Σ_g max(0, min_declared - declared_g) over labels 0..n_groups-1.
double constraint_violation(const Objective& obj, std::span<const int> genes, std::size_t n_groups,
                            std::size_t min_declared);

// Raw RMSE plus the weighted group-size penalty; the weight must be set in
// `config` (its default is only resolved inside run()).
double fitness(const Chromosome& c, const Dataset& ds, const DeclarationState& decl,
               const GaConfig& config);

Population init_population(const GaConfig& config, std::size_t n_genes, Rng& rng);
Population init_population(const GaConfig& config, std::size_t n_genes);

// Child takes parent_a outside [begin, end) and parent_b inside.
std::vector<int> crossover_segment(std::span<const int> a, std::span<const int> b, std::size_t begin,
                                   std::size_t end);
// One- or two-point crossover, chosen 50/50.
std::vector<int> crossover(std::span<const int> a, std::span<const int> b, Rng& rng);
void mutate(std::vector<int>& genes, double prob, std::size_t n_groups, Rng& rng);

struct GenerationRecord {
    std::size_t generation = 0;
    double best = 0.0;
    double mean = 0.0;
    double sd = 0.0;
    std::size_t best_snapshot = 0;
    double seconds = 0.0;
};

// Entry 0 describes the initial population.
struct ConvergenceTrace {
    std::vector<GenerationRecord> generations;
    std::vector<std::vector<int>> snapshots;

    std::vector<double> best_series() const;
    std::vector<double> mean_series() const;
};

// `generation,best,mean` with a header row.
std::string trace_to_csv(const ConvergenceTrace& t);
nlohmann::ordered_json trace_to_json(const ConvergenceTrace& t);
nlohmann::ordered_json chromosome_to_json(const Chromosome& c, const GaConfig& config);
Chromosome chromosome_from_json(const nlohmann::ordered_json& doc);

// Caches (raw, violation) per gene vector and evaluates misses, optionally
// on several threads. Results never depend on evaluation order.
class Evaluator {
public:
    Evaluator(const Objective& obj, const GaConfig& config);

    std::size_t min_declared() const { return min_declared_; }
    std::optional<double> penalty_weight() const { return weight_; }
    void set_penalty_weight(double w) { weight_ = w; }

    double raw(const std::vector<int>& genes);
    double violation(const std::vector<int>& genes);
    double fitness(const std::vector<int>& genes);
    void evaluate(Population& pop);
    std::size_t cache_size() const { return cache_.size(); }

private:
    struct Entry {
        double raw;
        double violation;
    };
    struct Hash {
        std::size_t operator()(const std::vector<int>& v) const noexcept;
    };
    const Entry& lookup(const std::vector<int>& genes);
    void fill(const std::vector<const std::vector<int>*>& misses);

    const Objective& obj_;
    std::size_t n_groups_;
    std::size_t min_declared_;
    std::size_t threads_;
    std::optional<double> weight_;
    std::unordered_map<std::vector<int>, Entry, Hash> cache_;
};

struct GenerationPlan {
    std::size_t elites = 0;
    std::size_t reseeds = 0;
    std::size_t offspring = 0;
    std::size_t eligible = 0;
};
GenerationPlan plan_generation(const GaConfig& config);

// Sorted by fitness ascending; ties keep original order.
void sort_population(Population& pop);

// Builds the next population from an evaluated one. Elites keep their
// cached fitness; other members are unevaluated.
Population next_generation(const Population& evaluated, const GaConfig& config, Rng& rng,
                           std::size_t n_genes);
Population next_generation(const Population& evaluated, const Dataset& ds,
                           const DeclarationState& decl, const GaConfig& config, Rng& rng);

struct RunResult {
    Chromosome best;
    ConvergenceTrace trace;
    double penalty_weight = 0.0;
    std::size_t min_declared = 0;
};

using GenerationObserver = std::function<void(const GenerationRecord&, const Chromosome& best)>;

RunResult run(const Objective& obj, const GaConfig& config, const GenerationObserver& observer = {},
              std::stop_token stop = {}, const std::vector<std::vector<int>>& seed_chromosomes = {});
RunResult run(const Dataset& ds, const DeclarationState& decl, const GaConfig& config);

ConvergenceTrace ablation_study(const Dataset& ds, const DeclarationState& decl, GaConfig config,
                                std::string_view operator_to_disable, std::size_t generations = 200);

struct MultirunSummary {
    stats::Summary mean_column;  // over generational means of all runs
    stats::Summary best_column;  // over generational bests of all runs
    std::vector<double> sd_mean_per_generation;
    std::vector<double> sd_best_per_generation;
    std::vector<RunResult> runs;
};

// Seeds default to config.seed + r.
MultirunSummary multirun_stats(const Dataset& ds, const DeclarationState& decl, const GaConfig& config,
                               std::size_t n_runs = 10, std::vector<std::uint64_t> seeds = {});

// Indicator rows Min/Median/Mean/Max/St.Dev. by columns Mean/Best.
std::string multirun_table_csv(const MultirunSummary& s);
std::string multirun_sd_csv(const MultirunSummary& s);
nlohmann::ordered_json multirun_to_json(const MultirunSummary& s);

// Lloyd clustering on reference-election %Elec share vectors, k-means++
// seeding. At most 100 iterations.
Chromosome kmeans_baseline(const Dataset& ds, std::size_t n_groups, std::uint64_t seed);

}  // namespace nightcast
