#include "nightcast/cli.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "nightcast/digest.hpp"
#include "nightcast/electiondata.hpp"
#include "nightcast/evaluation.hpp"
#include "nightcast/gaopt.hpp"
#include "nightcast/http_server.hpp"
#include "nightcast/liveservice.hpp"
#include "nightcast/regression.hpp"

#ifndef NIGHTCAST_VERSION
#define NIGHTCAST_VERSION "0.0.0"
#endif

namespace nightcast::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string pretty(const json& doc) { return doc.dump(2) + "\n"; }

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

// Collects what a command read and wrote, then emits manifest.json.
class Run {
public:
    Run(std::string command, std::vector<std::string> args, fs::path out_dir)
        : command_(std::move(command)), args_(std::move(args)), out_dir_(std::move(out_dir)),
          started_(std::chrono::steady_clock::now()), started_at_(utc_now()) {}

    void input(const fs::path& p) { inputs_.push_back({p.string(), sha256_file(p)}); }
    void write(const std::string& name, const std::string& content) {
        const fs::path p = out_dir_ / name;
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        write_text_file(p, content);
        outputs_.push_back({name, sha256_hex(content)});
    }
    json& config() { return config_; }
    std::uint64_t seed = 0;

    void finish() {
        json inputs = json::array(), outputs = json::array();
        for (const auto& [p, d] : inputs_) inputs.push_back(json{{"path", p}, {"sha256", d}});
        for (const auto& [p, d] : outputs_) outputs.push_back(json{{"path", p}, {"sha256", d}});
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
        const json manifest{{"command", command_},
                            {"args", args_},
                            {"config", config_},
                            {"seed", seed},
                            {"inputs", std::move(inputs)},
                            {"output_dir", out_dir_.string()},
                            {"outputs", std::move(outputs)},
                            {"tool_version", NIGHTCAST_VERSION},
                            {"started_at", started_at_},
                            {"wall_clock_seconds", secs}};
        fs::create_directories(out_dir_);
        write_text_file(out_dir_ / "manifest.json", pretty(manifest));
    }

private:
    std::string command_;
    std::vector<std::string> args_;
    fs::path out_dir_;
    std::chrono::steady_clock::time_point started_;
    std::string started_at_;
    json config_ = json::object();
    std::vector<std::pair<std::string, std::string>> inputs_;
    std::vector<std::pair<std::string, std::string>> outputs_;
};

struct Globals {
    std::uint64_t seed = 1;
    std::string output_dir = "nightcast-out";
    std::size_t threads = 1;
};

struct SynthOpts {
    SynthSpec spec;
};

struct ScenarioOpts {
    std::string declarations;
    double missing_electorate = 0.9;
    std::uint64_t scenario_seed = 1;
};

struct OptimizeOpts {
    std::string dataset;
    ScenarioOpts scenario;
    GaConfig config;
    std::vector<std::string> disable;
    std::string metric = "abs";
    std::optional<std::size_t> min_declared;
    std::optional<double> penalty_weight;
    std::size_t runs = 1;
};

struct ForecastOpts {
    std::string dataset, grouping, declarations, metric = "abs";
};

struct EvaluateOpts {
    std::string dataset;
    ScenarioOpts scenario;
    std::vector<std::string> groupings;
    bool with_baseline = false;
    std::optional<std::size_t> baseline_groups;
    std::string metric = "all";
    bool per_station = false;
};

struct ImportOpts {
    std::string reference, current;
};

struct ServeOpts {
    std::string host = "0.0.0.0";
    std::optional<int> port;
    std::optional<std::string> data_dir;
};

struct RerunOpts {
    std::string manifest;
    std::string output_dir;
};

void add_scenario_flags(CLI::App* cmd, ScenarioOpts& s) {
    cmd->add_option("--declarations", s.declarations, "Declarations JSON; replaces the simulated scenario")
        ->check(CLI::ExistingFile);
    cmd->add_option("--missing-electorate", s.missing_electorate,
                    "Share of the current electorate in undeclared stations")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd->add_option("--scenario-seed", s.scenario_seed, "Tie-break seed for the simulated scenario")
        ->capture_default_str();
}

DeclarationState load_scenario(Run& run, const Dataset& ds, const ScenarioOpts& s) {
    if (!s.declarations.empty()) {
        run.input(s.declarations);
        run.config()["declarations"] = s.declarations;
        return declarations_from_json(ds, json::parse(read_text_file(s.declarations)));
    }
    run.config()["missing_electorate"] = s.missing_electorate;
    run.config()["scenario_seed"] = s.scenario_seed;
    return make_scenario(ds, s.missing_electorate, s.scenario_seed);
}

std::vector<int> load_grouping(const fs::path& path, const Dataset& ds) {
    auto doc = json::parse(read_text_file(path));
    auto c = chromosome_from_json(doc);
    if (c.genes.size() != ds.size())
        throw ValidationError(path.string() + ": grouping has " + std::to_string(c.genes.size()) +
                              " labels but the dataset has " + std::to_string(ds.size()) + " stations");
    return c.genes;
}

json metric_view(const Dataset& ds, const ForecastResult& f, Metric m) {
    const auto& cur = ds.parties().cur();
    json doc{{"metric", to_string(m)}};
    switch (m) {
        case Metric::abs:
            doc["parties"] = cur;
            doc["values"] = f.party_totals;
            break;
        case Metric::elec:
            doc["parties"] = cur;
            doc["values"] = f.pct_elec();
            break;
        case Metric::vald: {
            doc["parties"] = std::vector<std::string>(cur.begin(), cur.end() - 1);
            auto v = f.pct_vald();
            doc["values"] = v ? json(*v) : json(nullptr);
            break;
        }
    }
    doc["forecast"] = forecast_to_json(ds, f);
    return doc;
}

// ---------------------------------------------------------------------------

void cmd_synth(Run& run, const SynthOpts& o) {
    o.spec.validate();
    run.config() = json{{"groups", o.spec.n_groups},
                        {"stations_per_group", o.spec.stations_per_group},
                        {"ref_parties", o.spec.ref_party_count},
                        {"cur_parties", o.spec.cur_party_count},
                        {"electorate_min", o.spec.electorate_min},
                        {"electorate_max", o.spec.electorate_max},
                        {"noise_sd", o.spec.noise_sd}};
    run.seed = o.spec.seed;
    const auto syn = generate_synthetic(o.spec);
    run.write("dataset.json", pretty(dataset_to_json(syn.dataset)));
    run.write("truth_grouping.json", pretty(json{{"labels", syn.true_grouping}}));
    json matrices = json::array();
    for (const auto& m : syn.true_matrices)
        matrices.push_back(json{{"group", m.group},
                                {"rows", syn.dataset.parties().cur()},
                                {"columns", syn.dataset.parties().ref()},
                                {"entries", m.entries}});
    run.write("truth_matrices.json", pretty(json{{"matrices", matrices}}));
}

void cmd_import(Run& run, const ImportOpts& o) {
    run.input(o.reference);
    run.input(o.current);
    run.write("dataset.json", pretty(dataset_to_json(import_csv(o.reference, o.current))));
}

void cmd_optimize(Run& run, OptimizeOpts o, const Globals& g, std::ostream& out) {
    GaConfig& c = o.config;
    c.seed = g.seed;
    c.threads = g.threads;
    c.metric = parse_metric(o.metric);
    c.min_declared_per_group = o.min_declared;
    c.penalty_weight = o.penalty_weight;
    for (const auto& d : o.disable) c.disabled_operators.insert(parse_operator(d));
    c.validate();

    run.input(o.dataset);
    const Dataset ds = load_dataset(o.dataset);
    if (!ds.has_all_current())
        throw ValidationError("optimize needs current votes for every station to score forecasts");
    const DeclarationState decl = load_scenario(run, ds, o.scenario);
    if (decl.empty()) throw ValidationError("the scenario declares no station");

    json cfg = config_to_json(c);
    cfg.erase("seed");
    run.config()["ga"] = cfg;
    run.config()["runs"] = o.runs;
    run.seed = c.seed;
    run.write("declarations.json", pretty(declarations_to_json(ds, decl)));

    RunResult best;
    if (o.runs <= 1) {
        best = nightcast::run(ds, decl, c);
        run.write("trace.csv", trace_to_csv(best.trace));
        run.write("trace.json", pretty(trace_to_json(best.trace)));
    } else {
        auto summary = multirun_stats(ds, decl, c, o.runs);
        run.write("multirun_table.csv", multirun_table_csv(summary));
        run.write("multirun_sd.csv", multirun_sd_csv(summary));
        run.write("multirun.json", pretty(multirun_to_json(summary)));
        std::size_t winner = 0;
        for (std::size_t r = 0; r < summary.runs.size(); ++r) {
            std::ostringstream name;
            name << "traces/run_" << std::setw(2) << std::setfill('0') << r + 1 << ".csv";
            run.write(name.str(), trace_to_csv(summary.runs[r].trace));
            if (*summary.runs[r].best.fitness < *summary.runs[winner].best.fitness) winner = r;
        }
        best = summary.runs[winner];
    }
    run.config()["resolved"] = json{{"penalty_weight", best.penalty_weight}, {"min_declared_per_group", best.min_declared}};

    json chromosome = chromosome_to_json(best.best, c);
    chromosome["penalty_weight"] = best.penalty_weight;
    chromosome["min_declared_per_group"] = best.min_declared;
    run.write("best_chromosome.json", pretty(chromosome));
    const auto f = assemble_forecast(ds, decl, best.best.genes);
    run.write("forecast.json", pretty(metric_view(ds, f, c.metric)));
    out << "best fitness " << *best.best.fitness << " after " << best.trace.generations.back().generation
        << " generations\n";
}

void cmd_forecast(Run& run, const ForecastOpts& o, std::ostream& out) {
    const Metric m = parse_metric(o.metric);
    run.config() = json{{"metric", to_string(m)}};
    run.input(o.dataset);
    run.input(o.grouping);
    run.input(o.declarations);
    const Dataset ds = load_dataset(o.dataset);
    const auto grouping = load_grouping(o.grouping, ds);
    const auto decl = declarations_from_json(ds, json::parse(read_text_file(o.declarations)));
    if (decl.empty()) throw ValidationError(o.declarations + ": no declarations");
    const auto f = assemble_forecast(ds, decl, grouping);
    const auto doc = metric_view(ds, f, m);
    run.write("forecast.json", pretty(doc));
    for (std::size_t i = 0; i < doc["parties"].size(); ++i)
        out << doc["parties"][i].get<std::string>() << "\t"
            << (doc["values"].is_null() ? std::string("n/a") : doc["values"][i].dump()) << "\n";
}

void cmd_evaluate(Run& run, const EvaluateOpts& o, const Globals& g, std::ostream& out) {
    std::vector<Metric> metrics;
    if (o.metric == "all" || o.metric == "elec") metrics.push_back(Metric::elec);
    if (o.metric == "all" || o.metric == "vald") metrics.push_back(Metric::vald);
    run.input(o.dataset);
    const Dataset ds = load_dataset(o.dataset);
    const auto decl = load_scenario(run, ds, o.scenario);
    if (decl.empty()) throw ValidationError("the scenario declares no station");

    std::vector<NamedGrouping> groupings;
    for (const auto& spec : o.groupings) {
        const auto eq = spec.find('=');
        const std::string name = eq == std::string::npos ? fs::path(spec).stem().string() : spec.substr(0, eq);
        const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
        if (!fs::exists(path)) throw ValidationError("grouping file not found: " + path);
        run.input(path);
        for (const auto& existing : groupings)
            if (existing.name == name) throw ValidationError("duplicate strategy name '" + name + "'");
        groupings.push_back({name, load_grouping(path, ds)});
    }
    if (o.with_baseline) {
        std::size_t k = o.baseline_groups.value_or(0);
        if (k == 0) {
            int top = 9;
            if (!groupings.empty()) top = *std::max_element(groupings[0].labels.begin(), groupings[0].labels.end());
            k = static_cast<std::size_t>(top + 1);
        }
        groupings.push_back({"kmeans", kmeans_baseline(ds, k, g.seed).genes});
        run.config()["baseline_groups"] = k;
        run.seed = g.seed;
    }
    if (groupings.empty()) throw ValidationError("nothing to evaluate: pass --grouping or --with-baseline");
    run.config()["metric"] = o.metric;
    run.config()["strategies"] = [&] {
        json names = json::array();
        for (const auto& x : groupings) names.push_back(x.name);
        return names;
    }();
    run.config()["per_station"] = o.per_station;

    const auto summary = deviation_summary(ds, decl, groupings, o.per_station);
    run.write("deviations.csv", deviations_to_csv(summary, metrics));
    run.write("deviations.json", pretty(deviations_to_json(summary)));
    for (std::size_t i = 0; i < groupings.size(); ++i) {
        const auto profile = group_profile(ds, groupings[i].labels, &decl);
        if (i == 0) run.write("group_profile.csv", group_profile_to_csv(profile));
        run.write("group_profile_" + groupings[i].name + ".csv", group_profile_to_csv(profile));
    }
    out << "strategy";
    for (Metric m : metrics) out << "\tmean_" << to_string(m);
    out << "\n";
    for (const auto& s : summary.strategies) {
        out << s.strategy;
        for (Metric m : metrics) out << "\t" << (m == Metric::elec ? s.elec : s.vald).summary.mean;
        out << "\n";
    }
}

int cmd_serve(const ServeOpts& o, std::ostream& out) {
    int port = 8080;
    if (o.port) {
        port = *o.port;
    } else if (const char* env = std::getenv("PORT")) {
        port = std::stoi(env);
    }
    std::optional<fs::path> data_dir;
    if (o.data_dir) {
        data_dir = *o.data_dir;
    } else if (const char* env = std::getenv("DATA_DIR")) {
        data_dir = env;
    }
    LiveService svc(data_dir);
    HttpServer server(svc);
    const int bound = server.bind(o.host, port);
    out << "listening on " << o.host << ":" << bound;
    if (data_dir) out << " (event log in " << data_dir->string() << ")";
    out << std::endl;
    server.listen();
    return ok;
}

fs::path output_dir_of(const json& manifest) { return manifest.at("output_dir").get<std::string>(); }

}  // namespace

json read_manifest(const fs::path& path) {
    auto doc = json::parse(read_text_file(path));
    for (const char* key : {"command", "args", "outputs", "output_dir"})
        if (!doc.contains(key)) throw ParseError(path.string() + ": manifest lacks '" + key + "'");
    return doc;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Election-night forecasting with optimized station groupings", "nightcast"};
    app.require_subcommand(1);
    // global flags may also follow the subcommand
    app.fallthrough();
    app.set_version_flag("--version", std::string(NIGHTCAST_VERSION));

    Globals g;
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--output-dir", g.output_dir, "Directory for output files and the manifest")
        ->capture_default_str()
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.add_option("--threads", g.threads, "Threads for fitness evaluation")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    SynthOpts synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic election with known groups");
    s->add_option("--groups", synth.spec.n_groups, "Number of true groups")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s->add_option("--stations-per-group", synth.spec.stations_per_group)->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--ref-parties", synth.spec.ref_party_count, "Reference parties without NV")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s->add_option("--cur-parties", synth.spec.cur_party_count, "Current parties without NV")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s->add_option("--electorate-min", synth.spec.electorate_min)->capture_default_str();
    s->add_option("--electorate-max", synth.spec.electorate_max)->capture_default_str();
    s->add_option("--noise-sd", synth.spec.noise_sd, "Gaussian vote noise")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();

    ImportOpts imp;
    auto* im = app.add_subcommand("import", "Merge reference and current CSV files into a dataset");
    im->add_option("--reference", imp.reference)->required()->check(CLI::ExistingFile);
    im->add_option("--current", imp.current)->required()->check(CLI::ExistingFile);

    OptimizeOpts opt;
    auto* o = app.add_subcommand("optimize", "Evolve a station grouping for a declaration scenario");
    o->add_option("--dataset", opt.dataset)->required()->check(CLI::ExistingFile);
    add_scenario_flags(o, opt.scenario);
    o->add_option("--initial-population-size,--population-size", opt.config.population_size)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    o->add_option("--generations", opt.config.generations)->capture_default_str();
    o->add_option("--elite-proportion", opt.config.elite_fraction)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    o->add_option("--reproduction-eligible-population-proportion", opt.config.eligible_fraction)
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    o->add_option("--mutation-probability", opt.config.mutation_prob)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    o->add_option("--random-re-seeding-proportion", opt.config.reseed_fraction)
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    o->add_option("--groups", opt.config.n_groups, "Number of groups")->check(CLI::PositiveNumber)->capture_default_str();
    o->add_option("--metric", opt.metric)->check(CLI::IsMember({"abs", "elec", "vald"}))->capture_default_str();
    o->add_option("--min-declared-per-group", opt.min_declared, "Default: reference parties + 2");
    o->add_option("--penalty-weight", opt.penalty_weight, "Default: 10 x best initial RMSE")
        ->check(CLI::NonNegativeNumber);
    o->add_option("--disable", opt.disable, "Operator to switch off (repeatable)")
        ->check(CLI::IsMember({"mutation", "crossover", "reseed"}));
    o->add_option("--runs", opt.runs, "Independent runs for summary statistics")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    o->add_flag("--early-stop", opt.config.early_stop, "Stop when 100 generations improve by < 0.1%");

    ForecastOpts fc;
    auto* f = app.add_subcommand("forecast", "Project the undeclared stations for a grouping");
    f->add_option("--dataset", fc.dataset)->required()->check(CLI::ExistingFile);
    f->add_option("--grouping", fc.grouping, "Chromosome JSON with \"labels\"")->required()->check(CLI::ExistingFile);
    f->add_option("--declarations", fc.declarations)->required()->check(CLI::ExistingFile);
    f->add_option("--metric", fc.metric)->check(CLI::IsMember({"abs", "elec", "vald"}))->capture_default_str();

    EvaluateOpts ev;
    auto* e = app.add_subcommand("evaluate", "Compare groupings against the actual outcome");
    e->add_option("--dataset", ev.dataset)->required()->check(CLI::ExistingFile);
    add_scenario_flags(e, ev.scenario);
    e->add_option("--grouping", ev.groupings, "[NAME=]PATH of a chromosome JSON (repeatable)");
    e->add_flag("--with-baseline", ev.with_baseline, "Add the k-means baseline grouping");
    e->add_option("--baseline-groups", ev.baseline_groups, "Default: groups of the first grouping");
    e->add_option("--metric", ev.metric)->check(CLI::IsMember({"all", "elec", "vald"}))->capture_default_str();
    e->add_flag("--per-station", ev.per_station, "Include per-station %Vald RMSE in deviations.json");

    ServeOpts sv;
    auto* srv = app.add_subcommand("serve", "Run the live HTTP service");
    srv->add_option("--host", sv.host)->capture_default_str();
    srv->add_option("--port", sv.port, "Default: $PORT or 8080");
    srv->add_option("--data-dir", sv.data_dir, "Event log directory. Default: $DATA_DIR, else in memory");

    RerunOpts rr;
    auto* re = app.add_subcommand("rerun", "Repeat a recorded run and compare its outputs");
    re->add_option("--manifest", rr.manifest)->required()->check(CLI::ExistingFile);
    re->add_option("--into", rr.output_dir, "Write outputs here instead of the recorded directory");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& pe) {
        const int code = app.exit(pe, out, err);
        return code == 0 ? ok : usage;
    }

    try {
        if (srv->parsed()) return cmd_serve(sv, out);
        if (re->parsed()) return rerun(rr.manifest, rr.output_dir, out, err);

        auto* cmd = app.get_subcommands().front();
        Run run(cmd->get_name(), args, g.output_dir);
        run.seed = g.seed;
        if (s->parsed()) {
            synth.spec.seed = g.seed;
            cmd_synth(run, synth);
        } else if (im->parsed()) {
            cmd_import(run, imp);
        } else if (o->parsed()) {
            cmd_optimize(run, opt, g, out);
        } else if (f->parsed()) {
            cmd_forecast(run, fc, out);
        } else if (e->parsed()) {
            cmd_evaluate(run, ev, g, out);
        }
        run.finish();
        out << "wrote " << (fs::path(g.output_dir) / "manifest.json").string() << "\n";
        return ok;
    } catch (const ParseError& ex) {
        err << "error: " << ex.what() << "\n";
        return validation;
    } catch (const ValidationError& ex) {
        err << "error: " << ex.what() << "\n";
        return validation;
    } catch (const json::exception& ex) {
        err << "error: malformed JSON input: " << ex.what() << "\n";
        return validation;
    } catch (const std::invalid_argument& ex) {
        err << "error: " << ex.what() << "\n";
        return validation;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return runtime;
    }
}

int rerun(const fs::path& manifest_path, const fs::path& output_dir, std::ostream& out, std::ostream& err) {
    const json manifest = read_manifest(manifest_path);
    auto args = manifest["args"].get<std::vector<std::string>>();
    const fs::path dir = output_dir.empty() ? output_dir_of(manifest) : output_dir;
    args.push_back("--output-dir");
    args.push_back(dir.string());

    std::ostringstream sink;
    const int code = run(args, sink, err);
    if (code != ok) return code;

    std::size_t mismatches = 0;
    for (const auto& entry : manifest["outputs"]) {
        const auto rel = entry["path"].get<std::string>();
        const fs::path p = dir / rel;
        const std::string now = fs::exists(p) ? sha256_file(p) : std::string("missing");
        const bool same = now == entry["sha256"].get<std::string>();
        mismatches += !same;
        out << (same ? "same     " : "DIFFERS  ") << rel << "\n";
    }
    const auto fresh = read_manifest(dir / "manifest.json");
    if (fresh["outputs"].size() != manifest["outputs"].size()) {
        out << "output set differs from the manifest\n";
        ++mismatches;
    }
    if (mismatches != 0) {
        err << "error: " << mismatches << " output(s) differ from " << manifest_path.string() << "\n";
        return runtime;
    }
    out << "all " << manifest["outputs"].size() << " outputs reproduced\n";
    return ok;
}

}  // namespace nightcast::cli
