#include "nightcast/gaopt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "nightcast/digest.hpp"

namespace nightcast {

using json = nlohmann::ordered_json;

Operator parse_operator(std::string_view name) {
    if (name == "mutation") return Operator::mutation;
    if (name == "crossover") return Operator::crossover;
    if (name == "reseed") return Operator::reseed;
    throw std::invalid_argument("unknown genetic operator '" + std::string(name) +
                                "' (expected mutation, crossover or reseed)");
}

std::string_view to_string(Operator op) {
    switch (op) {
        case Operator::mutation: return "mutation";
        case Operator::crossover: return "crossover";
        case Operator::reseed: return "reseed";
    }
    return "mutation";
}

void GaConfig::validate() const {
    auto bad = [](const std::string& m) { throw ValidationError("GA config: " + m); };
    if (population_size < 1) bad("population_size must be >= 1");
    if (n_groups < 1) bad("n_groups must be >= 1");
    if (!(elite_fraction >= 0.0 && elite_fraction <= 1.0)) bad("elite_fraction must lie in [0, 1]");
    if (!(reseed_fraction >= 0.0 && reseed_fraction <= 1.0)) bad("reseed_fraction must lie in [0, 1]");
    if (!(elite_fraction + reseed_fraction < 1.0)) bad("elite_fraction + reseed_fraction must be < 1");
    if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0)) bad("mutation_prob must lie in [0, 1]");
    if (!(eligible_fraction >= elite_fraction && eligible_fraction <= 1.0))
        bad("eligible_fraction must lie in [elite_fraction, 1]");
    if (penalty_weight && !(*penalty_weight >= 0.0)) bad("penalty_weight must be >= 0");
    if (threads < 1) bad("threads must be >= 1");
}

json config_to_json(const GaConfig& c) {
    json doc;
    doc["population_size"] = c.population_size;
    doc["generations"] = c.generations;
    doc["elite_fraction"] = c.elite_fraction;
    doc["eligible_fraction"] = c.eligible_fraction;
    doc["mutation_prob"] = c.mutation_prob;
    doc["reseed_fraction"] = c.reseed_fraction;
    doc["n_groups"] = c.n_groups;
    doc["metric"] = to_string(c.metric);
    doc["min_declared_per_group"] = c.min_declared_per_group ? json(*c.min_declared_per_group) : json(nullptr);
    doc["penalty_weight"] = c.penalty_weight ? json(*c.penalty_weight) : json(nullptr);
    doc["seed"] = c.seed;
    json disabled = json::array();
    for (Operator op : c.disabled_operators) disabled.push_back(to_string(op));
    doc["disabled_operators"] = disabled;
    doc["early_stop"] = c.early_stop;
    return doc;
}

GaConfig config_from_json(const json& doc, GaConfig c) {
    if (!doc.is_object()) throw ParseError("GA config must be a JSON object");
    try {
        for (const auto& [key, v] : doc.items()) {
            if (key == "population_size") c.population_size = v.get<std::size_t>();
            else if (key == "generations") c.generations = v.get<std::size_t>();
            else if (key == "elite_fraction") c.elite_fraction = v.get<double>();
            else if (key == "eligible_fraction") c.eligible_fraction = v.get<double>();
            else if (key == "mutation_prob") c.mutation_prob = v.get<double>();
            else if (key == "reseed_fraction") c.reseed_fraction = v.get<double>();
            else if (key == "n_groups") c.n_groups = v.get<std::size_t>();
            else if (key == "metric") c.metric = parse_metric(v.get<std::string>());
            else if (key == "min_declared_per_group")
                c.min_declared_per_group = v.is_null() ? std::nullopt : std::optional(v.get<std::size_t>());
            else if (key == "penalty_weight")
                c.penalty_weight = v.is_null() ? std::nullopt : std::optional(v.get<double>());
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "disabled_operators") {
                c.disabled_operators.clear();
                for (const auto& op : v) c.disabled_operators.insert(parse_operator(op.get<std::string>()));
            } else if (key == "early_stop") c.early_stop = v.get<bool>();
            else if (key == "threads") c.threads = v.get<std::size_t>();
            else throw ParseError("GA config: unknown field '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("GA config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("GA config: ") + e.what());
    }
    c.validate();
    return c;
}

std::string config_digest(const GaConfig& c) {
    return sha256_hex(config_to_json(c).dump()).substr(0, 16);
}

bool is_valid(const Chromosome& c, std::size_t n_genes, std::size_t n_groups) {
    if (c.genes.size() != n_genes) return false;
    return std::all_of(c.genes.begin(), c.genes.end(), [&](int g) {
        return g >= 0 && static_cast<std::size_t>(g) < n_groups;
    });
}

// ---------------------------------------------------------------------------

ScenarioObjective::ScenarioObjective(const Dataset& ds, const DeclarationState& decl, Metric metric)
    : engine_(ds, decl), truth_(ds.true_current_totals()), metric_(metric),
      min_declared_(ds.parties().ref_size() - 1 + 2) {
    if (decl.empty()) throw NoDeclaredStations("fitness needs at least one declared station");
}

double ScenarioObjective::raw(std::span<const int> genes) const {
    const auto totals = engine_.totals(genes);
    return rmse(totals, truth_, metric_);
}

double constraint_violation(const Objective& obj, std::span<const int> genes, std::size_t n_groups,
                            std::size_t min_declared) {
    std::vector<std::size_t> declared(n_groups, 0);
    for (std::size_t k = 0; k < genes.size(); ++k)
        if (obj.counts_as_declared(k) && genes[k] >= 0 && static_cast<std::size_t>(genes[k]) < n_groups)
            ++declared[static_cast<std::size_t>(genes[k])];
    double v = 0.0;
    for (std::size_t d : declared)
        if (d < min_declared) v += static_cast<double>(min_declared - d);
    return v;
}

double fitness(const Chromosome& c, const Dataset& ds, const DeclarationState& decl,
               const GaConfig& config) {
    ScenarioObjective obj(ds, decl, config.metric);
    const std::size_t min_declared = config.min_declared_per_group.value_or(obj.default_min_declared());
    const double w = config.penalty_weight.value_or(0.0);
    return obj.raw(c.genes) + w * constraint_violation(obj, c.genes, config.n_groups, min_declared);
}

// ---------------------------------------------------------------------------

Population init_population(const GaConfig& config, std::size_t n_genes, Rng& rng) {
    std::uniform_int_distribution<int> label(0, static_cast<int>(config.n_groups) - 1);
    Population pop(config.population_size);
    for (auto& c : pop) {
        c.genes.resize(n_genes);
        for (auto& g : c.genes) g = label(rng);
    }
    return pop;
}

Population init_population(const GaConfig& config, std::size_t n_genes) {
    Rng rng(config.seed);
    return init_population(config, n_genes, rng);
}

std::vector<int> crossover_segment(std::span<const int> a, std::span<const int> b, std::size_t begin,
                                   std::size_t end) {
    if (a.size() != b.size())
        throw std::invalid_argument("crossover: parents have lengths " + std::to_string(a.size()) +
                                    " and " + std::to_string(b.size()));
    if (begin > end || end > a.size()) throw std::invalid_argument("crossover: bad cut positions");
    std::vector<int> child(a.begin(), a.end());
    std::copy(b.begin() + static_cast<std::ptrdiff_t>(begin), b.begin() + static_cast<std::ptrdiff_t>(end),
              child.begin() + static_cast<std::ptrdiff_t>(begin));
    return child;
}

std::vector<int> crossover(std::span<const int> a, std::span<const int> b, Rng& rng) {
    if (a.size() != b.size())
        throw std::invalid_argument("crossover: parents have lengths " + std::to_string(a.size()) +
                                    " and " + std::to_string(b.size()));
    const std::size_t n = a.size();
    const bool two_point = std::bernoulli_distribution(0.5)(rng);
    if (n < 2) return std::vector<int>(a.begin(), a.end());
    // cut points lie strictly inside the chromosome
    std::uniform_int_distribution<std::size_t> cut(1, n - 1);
    if (!two_point || n < 3) {
        const std::size_t c = cut(rng);
        return crossover_segment(a, b, c, n);
    }
    std::size_t c1 = cut(rng);
    std::size_t c2 = cut(rng);
    while (c2 == c1) c2 = cut(rng);
    if (c1 > c2) std::swap(c1, c2);
    return crossover_segment(a, b, c1, c2);
}

void mutate(std::vector<int>& genes, double prob, std::size_t n_groups, Rng& rng) {
    if (prob <= 0.0) return;
    std::bernoulli_distribution hit(prob);
    std::uniform_int_distribution<int> label(0, static_cast<int>(n_groups) - 1);
    for (auto& g : genes)
        if (hit(rng)) g = label(rng);
}

// ---------------------------------------------------------------------------

std::vector<double> ConvergenceTrace::best_series() const {
    std::vector<double> v;
    v.reserve(generations.size());
    for (const auto& g : generations) v.push_back(g.best);
    return v;
}

std::vector<double> ConvergenceTrace::mean_series() const {
    std::vector<double> v;
    v.reserve(generations.size());
    for (const auto& g : generations) v.push_back(g.mean);
    return v;
}

namespace {

std::string fmt_double(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

}  // namespace

std::string trace_to_csv(const ConvergenceTrace& t) {
    std::string out = "generation,best,mean\n";
    for (const auto& g : t.generations)
        out += std::to_string(g.generation) + "," + fmt_double(g.best) + "," + fmt_double(g.mean) + "\n";
    return out;
}

json trace_to_json(const ConvergenceTrace& t) {
    json gens = json::array();
    for (const auto& g : t.generations)
        gens.push_back(json{{"generation", g.generation},
                            {"best", g.best},
                            {"mean", g.mean},
                            {"sd", g.sd},
                            {"best_snapshot", g.best_snapshot}});
    return json{{"generations", std::move(gens)}, {"snapshots", t.snapshots}};
}

json chromosome_to_json(const Chromosome& c, const GaConfig& config) {
    return json{{"labels", c.genes},
                {"fitness", c.fitness ? json(*c.fitness) : json(nullptr)},
                {"config_digest", config_digest(config)}};
}

Chromosome chromosome_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("labels") || !doc["labels"].is_array())
        throw ParseError("chromosome: expected {\"labels\": [...]}");
    Chromosome c;
    for (const auto& v : doc["labels"]) {
        if (!v.is_number_integer()) throw ParseError("chromosome: labels must be integers");
        const int label = v.get<int>();
        if (label < 0) throw ValidationError("chromosome: negative group label");
        c.genes.push_back(label);
    }
    if (doc.contains("fitness") && doc["fitness"].is_number()) c.fitness = doc["fitness"].get<double>();
    return c;
}

// ---------------------------------------------------------------------------

std::size_t Evaluator::Hash::operator()(const std::vector<int>& v) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (int x : v) {
        h ^= static_cast<std::size_t>(x) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
}

Evaluator::Evaluator(const Objective& obj, const GaConfig& config)
    : obj_(obj), n_groups_(config.n_groups),
      min_declared_(config.min_declared_per_group.value_or(obj.default_min_declared())),
      threads_(std::max<std::size_t>(1, config.threads)), weight_(config.penalty_weight) {}

void Evaluator::fill(const std::vector<const std::vector<int>*>& misses) {
    std::vector<Entry> results(misses.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            results[i] = Entry{obj_.raw(*misses[i]),
                               constraint_violation(obj_, *misses[i], n_groups_, min_declared_)};
    };
    const std::size_t n_threads = std::min(threads_, misses.size());
    if (n_threads <= 1) {
        work(0, misses.size());
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (misses.size() + n_threads - 1) / n_threads;
        std::vector<std::exception_ptr> errors(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) {
            const std::size_t b = t * chunk, e = std::min(misses.size(), b + chunk);
            pool.emplace_back([&, t, b, e] {
                try {
                    work(b, e);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        pool.clear();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    for (std::size_t i = 0; i < misses.size(); ++i) cache_.emplace(*misses[i], results[i]);
}

const Evaluator::Entry& Evaluator::lookup(const std::vector<int>& genes) {
    auto it = cache_.find(genes);
    if (it == cache_.end()) {
        fill({&genes});
        it = cache_.find(genes);
    }
    return it->second;
}

double Evaluator::raw(const std::vector<int>& genes) { return lookup(genes).raw; }
double Evaluator::violation(const std::vector<int>& genes) { return lookup(genes).violation; }

double Evaluator::fitness(const std::vector<int>& genes) {
    const auto& e = lookup(genes);
    return e.raw + weight_.value_or(0.0) * e.violation;
}

void Evaluator::evaluate(Population& pop) {
    std::vector<const std::vector<int>*> misses;
    std::unordered_map<std::vector<int>, bool, Hash> pending;
    for (const auto& c : pop)
        if (!cache_.count(c.genes) && pending.emplace(c.genes, true).second) misses.push_back(&c.genes);
    if (!misses.empty()) fill(misses);
    for (auto& c : pop) c.fitness = fitness(c.genes);
}

// ---------------------------------------------------------------------------

GenerationPlan plan_generation(const GaConfig& config) {
    const std::size_t n = config.population_size;
    auto share = [n](double f) {
        return std::min(n, static_cast<std::size_t>(std::llround(f * static_cast<double>(n))));
    };
    GenerationPlan p;
    p.elites = share(config.elite_fraction);
    if (config.elite_fraction > 0.0 && p.elites == 0) p.elites = 1;
    p.reseeds = config.enabled(Operator::reseed) ? share(config.reseed_fraction) : 0;
    p.reseeds = std::min(p.reseeds, n - p.elites);
    p.offspring = n - p.elites - p.reseeds;
    p.eligible = std::clamp<std::size_t>(share(config.eligible_fraction), std::max<std::size_t>(p.elites, 1), n);
    return p;
}

void sort_population(Population& pop) {
    std::stable_sort(pop.begin(), pop.end(), [](const Chromosome& a, const Chromosome& b) {
        return a.fitness.value_or(std::numeric_limits<double>::infinity()) <
               b.fitness.value_or(std::numeric_limits<double>::infinity());
    });
}

Population next_generation(const Population& evaluated, const GaConfig& config, Rng& rng,
                           std::size_t n_genes) {
    Population sorted = evaluated;
    sort_population(sorted);
    const GenerationPlan plan = plan_generation(config);

    Population next;
    next.reserve(config.population_size);
    for (std::size_t i = 0; i < plan.elites; ++i) next.push_back(sorted[i]);

    std::uniform_int_distribution<int> label(0, static_cast<int>(config.n_groups) - 1);
    for (std::size_t i = 0; i < plan.reseeds; ++i) {
        Chromosome c;
        c.genes.resize(n_genes);
        for (auto& g : c.genes) g = label(rng);
        next.push_back(std::move(c));
    }

    const std::size_t first_pool = plan.elites > 0 ? plan.elites : plan.eligible;
    std::uniform_int_distribution<std::size_t> pick_first(0, first_pool - 1);
    std::uniform_int_distribution<std::size_t> pick_second(0, plan.eligible - 1);
    for (std::size_t i = 0; i < plan.offspring; ++i) {
        const auto& p1 = sorted[pick_first(rng)].genes;
        Chromosome child;
        if (config.enabled(Operator::crossover)) {
            const auto& p2 = sorted[pick_second(rng)].genes;
            child.genes = crossover(p1, p2, rng);
        } else {
            child.genes = p1;
        }
        if (config.enabled(Operator::mutation)) mutate(child.genes, config.mutation_prob, config.n_groups, rng);
        next.push_back(std::move(child));
    }
    return next;
}

Population next_generation(const Population& evaluated, const Dataset& ds,
                           const DeclarationState& decl, const GaConfig& config, Rng& rng) {
    (void)decl;
    return next_generation(evaluated, config, rng, ds.size());
}

// ---------------------------------------------------------------------------

namespace {

GenerationRecord record_generation(const Population& pop, std::size_t gen) {
    std::vector<double> f;
    f.reserve(pop.size());
    for (const auto& c : pop) f.push_back(*c.fitness);
    GenerationRecord r;
    r.generation = gen;
    r.best = stats::min(f);
    r.mean = stats::mean(f);
    r.sd = stats::stdev(f);
    return r;
}

const Chromosome& best_of(const Population& pop) {
    return *std::min_element(pop.begin(), pop.end(), [](const Chromosome& a, const Chromosome& b) {
        return *a.fitness < *b.fitness;
    });
}

}  // namespace

RunResult run(const Objective& obj, const GaConfig& config, const GenerationObserver& observer,
              std::stop_token stop, const std::vector<std::vector<int>>& seed_chromosomes) {
    config.validate();
    using clock = std::chrono::steady_clock;
    const std::size_t n_genes = obj.gene_count();
    Rng rng(config.seed);
    Evaluator eval(obj, config);

    auto t0 = clock::now();
    Population pop = init_population(config, n_genes, rng);
    for (std::size_t i = 0; i < seed_chromosomes.size() && i < pop.size(); ++i) {
        if (seed_chromosomes[i].size() != n_genes)
            throw std::invalid_argument("seed chromosome has the wrong length");
        pop[i].genes = seed_chromosomes[i];
    }

    if (!eval.penalty_weight()) {
        double best_raw = std::numeric_limits<double>::infinity();
        for (const auto& c : pop) best_raw = std::min(best_raw, eval.raw(c.genes));
        eval.set_penalty_weight(best_raw > 0.0 ? 10.0 * best_raw : 1.0);
    }
    eval.evaluate(pop);

    RunResult result;
    result.penalty_weight = *eval.penalty_weight();
    result.min_declared = eval.min_declared();

    Chromosome overall = best_of(pop);
    auto push_record = [&](std::size_t gen, clock::time_point started) {
        GenerationRecord r = record_generation(pop, gen);
        const Chromosome& b = best_of(pop);
        if (result.trace.snapshots.empty() || *b.fitness < *overall.fitness) {
            if (!result.trace.snapshots.empty()) overall = b;
            result.trace.snapshots.push_back(overall.genes);
        }
        r.best_snapshot = result.trace.snapshots.size() - 1;
        r.seconds = std::chrono::duration<double>(clock::now() - started).count();
        result.trace.generations.push_back(r);
        if (observer) observer(r, overall);
    };
    push_record(0, t0);

    for (std::size_t gen = 1; gen <= config.generations; ++gen) {
        if (stop.stop_requested()) break;
        auto started = clock::now();
        pop = next_generation(pop, config, rng, n_genes);
        eval.evaluate(pop);
        push_record(gen, started);
        if (config.early_stop && gen >= 100) {
            const double before = result.trace.generations[gen - 100].best;
            const double now = result.trace.generations[gen].best;
            if (before - now < 0.001 * before) break;
        }
    }
    result.best = overall;
    return result;
}

RunResult run(const Dataset& ds, const DeclarationState& decl, const GaConfig& config) {
    ScenarioObjective obj(ds, decl, config.metric);
    return run(obj, config);
}

ConvergenceTrace ablation_study(const Dataset& ds, const DeclarationState& decl, GaConfig config,
                                std::string_view operator_to_disable, std::size_t generations) {
    if (operator_to_disable != "none") config.disabled_operators.insert(parse_operator(operator_to_disable));
    config.generations = generations;
    return run(ds, decl, config).trace;
}

// ---------------------------------------------------------------------------

MultirunSummary multirun_stats(const Dataset& ds, const DeclarationState& decl, const GaConfig& config,
                               std::size_t n_runs, std::vector<std::uint64_t> seeds) {
    if (n_runs < 2) throw ValidationError("multirun statistics need at least 2 runs");
    if (seeds.empty())
        for (std::size_t r = 0; r < n_runs; ++r) seeds.push_back(config.seed + r);
    if (seeds.size() != n_runs) throw ValidationError("one seed per run is required");

    ScenarioObjective obj(ds, decl, config.metric);
    MultirunSummary s;
    std::vector<double> all_means, all_bests;
    for (std::uint64_t seed : seeds) {
        GaConfig c = config;
        c.seed = seed;
        s.runs.push_back(run(obj, c));
        for (const auto& g : s.runs.back().trace.generations) {
            all_means.push_back(g.mean);
            all_bests.push_back(g.best);
        }
    }
    s.mean_column = stats::summarize(all_means);
    s.best_column = stats::summarize(all_bests);

    std::size_t n_gen = std::numeric_limits<std::size_t>::max();
    for (const auto& r : s.runs) n_gen = std::min(n_gen, r.trace.generations.size());
    for (std::size_t g = 0; g < n_gen; ++g) {
        std::vector<double> m, b;
        for (const auto& r : s.runs) {
            m.push_back(r.trace.generations[g].mean);
            b.push_back(r.trace.generations[g].best);
        }
        s.sd_mean_per_generation.push_back(stats::stdev(m));
        s.sd_best_per_generation.push_back(stats::stdev(b));
    }
    return s;
}

std::string multirun_table_csv(const MultirunSummary& s) {
    std::string out = "indicator,mean,best\n";
    auto row = [&](const char* name, double m, double b) {
        out += std::string(name) + "," + fmt_double(m) + "," + fmt_double(b) + "\n";
    };
    row("min", s.mean_column.min, s.best_column.min);
    row("median", s.mean_column.median, s.best_column.median);
    row("mean", s.mean_column.mean, s.best_column.mean);
    row("max", s.mean_column.max, s.best_column.max);
    row("sd", s.mean_column.sd, s.best_column.sd);
    return out;
}

std::string multirun_sd_csv(const MultirunSummary& s) {
    std::string out = "generation,sd_best,sd_mean\n";
    for (std::size_t g = 0; g < s.sd_best_per_generation.size(); ++g)
        out += std::to_string(g) + "," + fmt_double(s.sd_best_per_generation[g]) + "," +
               fmt_double(s.sd_mean_per_generation[g]) + "\n";
    return out;
}

json multirun_to_json(const MultirunSummary& s) {
    auto col = [](const stats::Summary& x) {
        return json{{"min", x.min}, {"median", x.median}, {"mean", x.mean}, {"max", x.max}, {"sd", x.sd}};
    };
    json runs = json::array();
    for (const auto& r : s.runs)
        runs.push_back(json{{"final_best", *r.best.fitness}, {"generations", r.trace.generations.size()}});
    return json{{"mean", col(s.mean_column)},
                {"best", col(s.best_column)},
                {"sd_mean_per_generation", s.sd_mean_per_generation},
                {"sd_best_per_generation", s.sd_best_per_generation},
                {"runs", std::move(runs)}};
}

// ---------------------------------------------------------------------------

Chromosome kmeans_baseline(const Dataset& ds, std::size_t n_groups, std::uint64_t seed) {
    if (n_groups < 1) throw ValidationError("kmeans: n_groups must be >= 1");
    const std::size_t n = ds.size();
    const std::size_t dim = ds.parties().ref_size();
    std::vector<std::vector<double>> pts(n, std::vector<double>(dim, 0.0));
    for (std::size_t k = 0; k < n; ++k) {
        const auto& c = ds.stations()[k];
        if (c.electorate_ref <= 0) continue;
        for (std::size_t j = 0; j < dim; ++j)
            pts[k][j] = 100.0 * static_cast<double>(c.ref_votes[j]) / static_cast<double>(c.electorate_ref);
    }
    auto dist2 = [dim](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t j = 0; j < dim; ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
        return s;
    };

    Chromosome out;
    out.genes.assign(n, 0);
    const std::size_t k_eff = std::min(n_groups, n);
    if (k_eff <= 1) return out;

    // k-means++ seeding
    Rng rng(seed);
    std::vector<std::vector<double>> centers;
    centers.push_back(pts[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
    std::vector<double> d2(n);
    while (centers.size() < k_eff) {
        double total = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) best = std::min(best, dist2(pts[k], c));
            d2[k] = best;
            total += best;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            double r = std::uniform_real_distribution<double>(0.0, total)(rng);
            for (pick = 0; pick + 1 < n; ++pick) {
                r -= d2[pick];
                if (r < 0.0) break;
            }
        } else {
            pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        }
        centers.push_back(pts[pick]);
    }

    for (int iter = 0; iter < 100; ++iter) {
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t best = 0;
            double bd = dist2(pts[k], centers[0]);
            for (std::size_t c = 1; c < centers.size(); ++c) {
                const double d = dist2(pts[k], centers[c]);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            out.genes[k] = static_cast<int>(best);
        }
        std::vector<std::vector<double>> next(k_eff, std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(k_eff, 0);
        for (std::size_t k = 0; k < n; ++k) {
            const auto g = static_cast<std::size_t>(out.genes[k]);
            ++counts[g];
            for (std::size_t j = 0; j < dim; ++j) next[g][j] += pts[k][j];
        }
        for (std::size_t c = 0; c < k_eff; ++c) {
            if (counts[c] == 0) {
                // empty cluster: restart it at the point farthest from its center
                std::size_t far = 0;
                double fd = -1.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double d = dist2(pts[k], centers[static_cast<std::size_t>(out.genes[k])]);
                    if (d > fd) {
                        fd = d;
                        far = k;
                    }
                }
                next[c] = pts[far];
            } else {
                for (auto& x : next[c]) x /= static_cast<double>(counts[c]);
            }
        }
        double moved = 0.0;
        for (std::size_t c = 0; c < k_eff; ++c) moved = std::max(moved, std::sqrt(dist2(next[c], centers[c])));
        centers = std::move(next);
        if (moved < 1e-9) break;
    }
    return out;
}

}  // namespace nightcast
