// kdmdp command-line front end.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "kdmdp/baseline.hpp"
#include "kdmdp/dump.hpp"
#include "kdmdp/mc.hpp"
#include "kdmdp/rover.hpp"
#include "kdmdp/solver.hpp"

using namespace kdmdp;
using nlohmann::json;

namespace {

enum Exit { ok = 0, usage = 1, invalid_model = 2, numerical = 3, resource_cap = 4 };

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    if (path.empty()) return;
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

std::string fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<double> parse_point(const std::string& text, int dims) {
    std::vector<double> x;
    std::istringstream in(text);
    for (std::string cell; std::getline(in, cell, ',');) x.push_back(std::stod(cell));
    if (static_cast<int>(x.size()) != dims) throw DomainError("point needs " + std::to_string(dims) + " coordinates");
    return x;
}

struct SolverFlags {
    std::optional<int> horizon;
    double merge_tol = 0.0;
    double prune_tol = kDefaultPruneTol;
    std::size_t max_vectors = 0;
    double time_budget = 0.0;
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

    void add(CLI::App* app) {
        app->add_option("--horizon", horizon, "Override the model horizon");
        app->add_option("--merge-tol", merge_tol, "Merge leaves whose sets agree within this tolerance (0 = exact)")->check(CLI::NonNegativeNumber);
        app->add_option("--prune-tol", prune_tol, "Dominance tolerance of pruning")->check(CLI::NonNegativeNumber);
        app->add_option("--max-vectors", max_vectors, "Abort when a stage holds more linear functions (0 = no cap)");
        app->add_option("--time-budget", time_budget, "Wall-clock budget in seconds (0 = none)")->check(CLI::NonNegativeNumber);
        app->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    }

    SolveOptions options() const {
        SolveOptions o;
        o.horizon = horizon;
        o.merge_tol = merge_tol;
        o.prune_tol = prune_tol;
        o.max_vectors = max_vectors;
        o.time_budget_seconds = time_budget;
        o.threads = threads;
        return o;
    }

    json params() const {
        json j{{"merge_tol", merge_tol}, {"prune_tol", prune_tol}, {"max_vectors", max_vectors}, {"time_budget", time_budget}};
        if (horizon) j["horizon"] = *horizon;
        return j;
    }
};

json stats_json(const std::vector<StageStats>& stats, const HybridMdp& m) {
    json out = json::array();
    for (const auto& s : stats)
        out.push_back({{"stage", s.stage}, {"state", m.discrete_states.at(static_cast<std::size_t>(s.state))}, {"leaves", s.leaves},
                       {"vectors", s.vectors}, {"seconds", s.seconds}});
    return out;
}

json report(const std::string& command, const std::string& model_path, const std::string& model_text, json params,
            const std::vector<StageStats>& stats, const HybridMdp& m, double seconds, std::size_t peak) {
    return json{{"command", command},   {"model", model_path},
                {"model_hash", "fnv1a64:" + fnv1a(model_text)},
                {"params", std::move(params)},
                {"stats", stats_json(stats, m)},
                {"wall_seconds", seconds},
                {"peak_vectors", peak},
                {"version", KDMDP_VERSION}};
}

void apply_overrides(DomainSpec& spec, std::optional<int> resources, std::optional<int> resolution, const std::string& variant,
                     std::optional<std::size_t> max_outcomes) {
    if (resources) spec.resources = *resources;
    if (resolution) spec.resolution = *resolution;
    if (variant == "pwc") spec.variant = RewardVariant::pwc;
    if (variant == "pwlc") spec.variant = RewardVariant::pwlc;
    if (max_outcomes) spec.max_outcomes = *max_outcomes;
}

std::string status_of(const std::exception_ptr& e) {
    try {
        std::rethrow_exception(e);
    } catch (const ResourceCapError& r) {
        return r.kind() == ResourceCapError::Kind::time ? "timeout" : "memory_cap";
    } catch (const NumericalError&) {
        return "numerical_error";
    } catch (...) {
        return "error";
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact structured dynamic programming for hybrid discrete/continuous MDPs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", KDMDP_VERSION);

    // solve
    auto* solve = app.add_subcommand("solve", "Run value iteration and write value/policy dumps and a run report");
    std::string model_path, values_out, policy_out, stats_out, report_out;
    SolverFlags sflags;
    solve->add_option("model", model_path, "Model JSON")->required();
    solve->add_option("--values", values_out, "Value dump output (JSON)");
    solve->add_option("--policy", policy_out, "Policy dump output (JSON)");
    solve->add_option("--stats", stats_out, "Per-stage stats output (CSV)");
    solve->add_option("--report", report_out, "Run report output (JSON, '-' for stdout)");
    sflags.add(solve);

    // baseline
    auto* base = app.add_subcommand("baseline", "Naive uniform-grid value iteration");
    int grid_res = 10;
    std::size_t max_cells = GridOptions{}.max_cells;
    base->add_option("model", model_path, "Model JSON")->required();
    base->add_option("--resolution", grid_res, "Cells per dimension")->check(CLI::PositiveNumber);
    base->add_option("--max-cells", max_cells, "Memory guard on cells x discrete states");
    base->add_option("--stats", stats_out, "Per-stage stats output (CSV)");
    base->add_option("--report", report_out, "Run report output (JSON, '-' for stdout)");
    sflags.add(base);

    // compare
    auto* cmp = app.add_subcommand("compare", "Resolution sweep of structured vs naive solvers on a rover spec");
    std::string spec_path, compare_out = "-";
    std::vector<int> resolutions;
    std::vector<std::string> variants{"pwc", "pwlc"};
    std::optional<int> resources;
    std::optional<std::size_t> max_outcomes;
    cmp->add_option("spec", spec_path, "Rover domain spec JSON")->required();
    cmp->add_option("--resolutions", resolutions, "Resolutions to sweep")->required()->delimiter(',');
    cmp->add_option("--variants", variants, "Reward variants")->delimiter(',')->check(CLI::IsMember({"pwc", "pwlc"}));
    cmp->add_option("--resources", resources, "Override the number of resources")->check(CLI::Range(1, 3));
    cmp->add_option("--max-outcomes", max_outcomes, "Override the joint outcome cap");
    cmp->add_option("--max-cells", max_cells, "Memory guard of the naive solver");
    cmp->add_option("--out", compare_out, "Sweep CSV output ('-' for stdout)");
    sflags.add(cmp);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Monte-Carlo rollouts of the optimal policy");
    std::string start_state, start_point, policy_in;
    std::size_t episodes = 100000;
    std::uint64_t seed = 0;
    sim->add_option("model", model_path, "Model JSON")->required();
    sim->add_option("--state", start_state, "Start discrete state (default: first)");
    sim->add_option("--point", start_point, "Start point, comma separated")->required();
    sim->add_option("--episodes", episodes, "Episode count")->check(CLI::PositiveNumber);
    sim->add_option("--seed", seed, "Random seed");
    sim->add_option("--policy-in", policy_in, "Use a policy dump instead of solving");
    sim->add_option("--report", report_out, "Result JSON output ('-' for stdout)");
    sflags.add(sim);

    // gen-rover
    auto* gen = app.add_subcommand("gen-rover", "Generate a rover model from a domain spec");
    std::optional<int> resolution;
    std::string variant, model_out = "-";
    gen->add_option("spec", spec_path, "Rover domain spec JSON")->required();
    gen->add_option("--resources", resources, "Override the number of resources")->check(CLI::Range(1, 3));
    gen->add_option("--resolution", resolution, "Override the outcome resolution")->check(CLI::Range(2, 100000));
    gen->add_option("--variant", variant, "Reward variant")->check(CLI::IsMember({"pwc", "pwlc"}));
    gen->add_option("--max-outcomes", max_outcomes, "Override the joint outcome cap");
    gen->add_option("-o,--out", model_out, "Model output ('-' for stdout)");

    // dump
    auto* dump = app.add_subcommand("dump", "Per-leaf CSV of one value partition from a value dump");
    std::string values_in, dump_out = "-", dump_state;
    std::optional<int> dump_stage;
    dump->add_option("values", values_in, "Value dump JSON written by solve")->required();
    dump->add_option("--state", dump_state, "Discrete state name (default: first)");
    dump->add_option("--stage", dump_stage, "Stage (default: last)");
    dump->add_option("-o,--out", dump_out, "CSV output ('-' for stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        const auto t0 = std::chrono::steady_clock::now();
        auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

        if (*solve) {
            const std::string text = read_file(model_path);
            const HybridMdp m = load_model(text);
            const SolveResult r = value_iteration(m, sflags.options());
            if (!values_out.empty()) write_file(values_out, dump_values(r.values, m));
            if (!policy_out.empty()) write_file(policy_out, dump_policies(r.policies, m));
            if (!stats_out.empty()) write_file(stats_out, stats_csv(r.stats, m));
            json rep = report("solve", model_path, text, sflags.params(), r.stats, m, elapsed(), r.peak_vectors);
            if (report_out.empty()) {
                const auto& last = r.values.back();
                std::cout << "solved " << model_path << ": " << r.values.size() - 1 << " stages, " << leaf_count(last) << " leaves, "
                          << vector_count(last) << " linear functions in the final stage, " << r.seconds << " s\n";
            } else {
                write_file(report_out, rep.dump(1) + "\n");
            }
            return ok;
        }
        if (*base) {
            const std::string text = read_file(model_path);
            const HybridMdp m = load_model(text);
            GridOptions go;
            go.max_cells = max_cells;
            go.time_budget_seconds = sflags.time_budget;
            go.threads = sflags.threads;
            go.horizon = sflags.horizon;
            go.keep_stages = false;
            const GridResult r = grid_value_iteration(m, grid_res, go);
            write_file(stats_out, stats_csv(r.stats, m));
            json params = sflags.params();
            params["resolution"] = grid_res;
            json rep = report("baseline", model_path, text, std::move(params), r.stats, m, elapsed(), r.values.cells() * r.values.states());
            if (report_out.empty())
                std::cout << "grid " << grid_res << "^" << m.dims << ": " << r.values.last_stage() << " stages, " << r.seconds << " s\n";
            else
                write_file(report_out, rep.dump(1) + "\n");
            return ok;
        }
        if (*cmp) {
            const DomainSpec spec0 = load_domain_spec_file(spec_path);
            std::ostringstream csv;
            csv << "resolution,variant,solver,seconds,leaves_or_cells,status\n";
            bool any_ok = false;
            for (int res : resolutions) {
                for (const auto& var : variants) {
                    DomainSpec spec = spec0;
                    apply_overrides(spec, resources, res, var, max_outcomes);
                    const HybridMdp m = generate(spec);
                    {
                        const auto ts = std::chrono::steady_clock::now();
                        std::string status = "ok";
                        std::size_t size = 0;
                        try {
                            SolveOptions o = sflags.options();
                            o.keep_policies = false;
                            const SolveResult r = value_iteration(m, o);
                            size = leaf_count(r.values.back());
                        } catch (...) {
                            status = status_of(std::current_exception());
                        }
                        any_ok |= status == "ok";
                        csv << res << ',' << var << ",structured," << format_real(std::chrono::duration<double>(std::chrono::steady_clock::now() - ts).count())
                            << ',' << size << ',' << status << '\n';
                    }
                    {
                        const auto ts = std::chrono::steady_clock::now();
                        std::string status = "ok";
                        std::size_t size = 0;
                        try {
                            GridOptions go;
                            go.max_cells = max_cells;
                            go.time_budget_seconds = sflags.time_budget;
                            go.threads = sflags.threads;
                            go.horizon = sflags.horizon;
                            go.keep_stages = false;
                            const GridResult r = grid_value_iteration(m, res, go);
                            size = r.values.cells() * r.values.states();
                        } catch (...) {
                            status = status_of(std::current_exception());
                        }
                        any_ok |= status == "ok";
                        csv << res << ',' << var << ",naive," << format_real(std::chrono::duration<double>(std::chrono::steady_clock::now() - ts).count())
                            << ',' << size << ',' << status << '\n';
                    }
                }
            }
            write_file(compare_out, csv.str());
            return any_ok ? ok : resource_cap;
        }
        if (*sim) {
            const std::string text = read_file(model_path);
            const HybridMdp m = load_model(text);
            RolloutConfig cfg;
            if (!start_state.empty()) {
                const auto s = m.state_index(start_state);
                if (!s) throw DomainError("unknown start state '" + start_state + "'");
                cfg.start_state = *s;
            }
            cfg.start_point = parse_point(start_point, m.dims);
            cfg.episodes = episodes;
            cfg.seed = seed;
            cfg.threads = sflags.threads;
            std::vector<Policy> policies;
            json out;
            if (!policy_in.empty()) {
                policies = load_policies(read_file(policy_in), m);
            } else {
                const SolveResult r = value_iteration(m, sflags.options());
                policies = r.policies;
                out["value"] = r.values.back().value(cfg.start_state, cfg.start_point);
            }
            const RolloutResult rr = simulate(m, policies, cfg);
            out["mean"] = rr.mean;
            out["stderr"] = rr.std_error;
            out["episodes"] = rr.episodes;
            out["seed"] = rr.seed;
            write_file(report_out.empty() ? "-" : report_out, out.dump(1) + "\n");
            return ok;
        }
        if (*gen) {
            DomainSpec spec = load_domain_spec_file(spec_path);
            apply_overrides(spec, resources, resolution, variant, max_outcomes);
            write_file(model_out, save_model(generate(spec)) + "\n");
            return ok;
        }
        if (*dump) {
            const std::string text = read_file(values_in);
            const auto values = load_values(text);
            if (values.empty()) throw ParseError("value dump holds no stages");
            const json doc = json::parse(text);
            const auto names = doc.at("states").get<std::vector<std::string>>();
            std::size_t s = 0;
            if (!dump_state.empty()) {
                auto it = std::find(names.begin(), names.end(), dump_state);
                if (it == names.end()) throw DomainError("unknown state '" + dump_state + "'");
                s = static_cast<std::size_t>(it - names.begin());
            }
            const ValueFunction* v = &values.back();
            if (dump_stage) {
                auto it = std::find_if(values.begin(), values.end(), [&](const ValueFunction& x) { return x.stage == *dump_stage; });
                if (it == values.end()) throw DomainError("stage " + std::to_string(*dump_stage) + " is not in the dump");
                v = &*it;
            }
            write_file(dump_out, leaf_csv(v->states.at(s)));
            return ok;
        }
    } catch (const ModelValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return invalid_model;
    } catch (const ModelError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return invalid_model;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return invalid_model;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return numerical;
    } catch (const ResourceCapError& e) {
        std::cerr << "resource cap: " << e.what() << '\n';
        return resource_cap;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage;
    }
    return usage;
}
