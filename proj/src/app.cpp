#include "adacont/app.hpp"

#include "adacont/ddc2d.hpp"
#include "adacont/snapshot.hpp"
#include "adacont/toy.hpp"
#include "adacont/waleffe.hpp"

#include <cmath>
#include <cstdio>
#include <future>
#include <set>
#include <thread>

namespace adacont {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& into, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        into = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

template <class T>
void read(const json& j, const char* key, std::optional<T>& into, const std::string& where) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    T v{};
    read(j, key, v, where);
    into = v;
}

void read_problem(const json& p) {
    if (!p.is_object() || !p.contains("name")) throw ConfigError("problem.name is required");
    const std::string name = p["name"].is_string() ? p["name"].get<std::string>() : "";
    if (name == "toy") {
        only_keys(p, "problem", {"name", "kind", "lambda", "linear", "n"});
    } else if (name == "waleffe") {
        only_keys(p, "problem", {"name", "re", "alpha", "ny", "nz", "lz"});
    } else if (name == "ddc2d") {
        only_keys(p, "problem", {"name", "ra", "pr", "tau", "nx", "nz", "lx"});
    } else {
        throw ConfigError("problem.name must be one of toy, waleffe, ddc2d");
    }
    for (const auto& [k, v] : p.items()) {
        if (k == "name" || k == "kind") {
            if (!v.is_string()) throw ConfigError("problem." + k + " must be a string");
        } else if (k == "n" || k == "nx" || k == "ny" || k == "nz") {
            if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError("problem." + k + " must be a non-negative integer");
        } else if (!v.is_number()) {
            throw ConfigError("problem." + k + " must be a number");
        }
    }
}

void read_continuation(const json& c, ContinuationConfig& cfg) {
    const std::string w = "continuation";
    only_keys(c, w,
              {"delta_lambda_init", "delta_lambda_max", "growth_factor", "shrink_factor", "newton_target", "newton_max",
               "newton_tol", "krylov_tol", "krylov_cap", "mode", "switch_constant", "fixed_component_index", "delta_s",
               "delta_s_max", "direction", "norm", "max_consecutive_failures"});
    read(c, "delta_lambda_init", cfg.delta_lambda_init, w);
    read(c, "delta_lambda_max", cfg.delta_lambda_max, w);
    read(c, "growth_factor", cfg.growth_factor, w);
    read(c, "shrink_factor", cfg.shrink_factor, w);
    read(c, "newton_target", cfg.newton_target, w);
    read(c, "newton_max", cfg.newton_max, w);
    read(c, "newton_tol", cfg.newton_tol, w);
    read(c, "krylov_tol", cfg.krylov_tol, w);
    read(c, "krylov_cap", cfg.krylov_cap, w);
    read(c, "switch_constant", cfg.switch_constant, w);
    read(c, "fixed_component_index", cfg.fixed_component_index, w);
    read(c, "delta_s", cfg.delta_s, w);
    read(c, "delta_s_max", cfg.delta_s_max, w);
    read(c, "direction", cfg.direction, w);
    read(c, "max_consecutive_failures", cfg.max_consecutive_failures, w);
    std::string mode, norm;
    read(c, "mode", mode, w);
    read(c, "norm", norm, w);
    if (mode == "fixed_parameter") cfg.mode = ContinuationMode::FixedParameter;
    else if (mode == "pseudo_arclength") cfg.mode = ContinuationMode::PseudoArclength;
    else if (!mode.empty()) throw ConfigError("continuation.mode must be fixed_parameter or pseudo_arclength");
    if (norm == "rms") cfg.norm = NormKind::Rms;
    else if (norm == "diagnostic") cfg.norm = NormKind::Diagnostic;
    else if (!norm.empty()) throw ConfigError("continuation.norm must be rms or diagnostic");
    if (cfg.direction != 1 && cfg.direction != -1) throw ConfigError("continuation.direction must be 1 or -1");
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("continuation: ") + e.what());
    }
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double num(const json& p, const char* key, double fallback) { return p.contains(key) ? p[key].get<double>() : fallback; }

std::size_t count(const json& p, const char* key, std::size_t fallback) {
    return p.contains(key) ? p[key].get<std::size_t>() : fallback;
}

PreconditionerSpec with_delta_t(PreconditionerSpec spec, const std::string& block, double dt) {
    std::vector<PreconditionerBlock> blocks = spec.blocks();
    bool hit = false;
    for (auto& b : blocks)
        if (block.empty() || b.name == block) {
            b.delta_t = dt;
            b.follows_parameter = false;
            hit = true;
        }
    if (!hit) throw ConfigError("sweep.block names no preconditioner block: " + block);
    return PreconditionerSpec(std::move(blocks));
}

std::vector<long> etas(const TraceResult& r) {
    std::vector<long> e;
    for (std::size_t i = 1; i < r.points.size(); ++i) e.push_back(r.points[i].stats.krylov_iterations_total);
    return e;
}

}  // namespace

RunConfig parse_run_config(const json& j) {
    only_keys(j, "config", {"problem", "seed", "continuation", "preconditioner", "stop", "output", "sweep"});
    RunConfig cfg;
    cfg.continuation.norm = NormKind::Diagnostic;
    if (!j.contains("problem")) throw ConfigError("config needs a problem section");
    read_problem(j["problem"]);
    cfg.problem = j["problem"];

    if (j.contains("seed")) {
        const auto& s = j["seed"];
        only_keys(s, "seed",
                  {"source", "path", "state", "amplitude", "delta_t", "steps", "newton_delta_t", "newton_max", "correct"});
        read(s, "source", cfg.seed.source, "seed");
        read(s, "path", cfg.seed.path, "seed");
        read(s, "state", cfg.seed.state, "seed");
        read(s, "amplitude", cfg.seed.amplitude, "seed");
        read(s, "delta_t", cfg.seed.delta_t, "seed");
        read(s, "steps", cfg.seed.steps, "seed");
        read(s, "newton_delta_t", cfg.seed.newton_delta_t, "seed");
        read(s, "newton_max", cfg.seed.newton_max, "seed");
        read(s, "correct", cfg.seed.correct, "seed");
    }
    const auto& src = cfg.seed.source;
    if (src != "builtin" && src != "snapshot" && src != "integrate")
        throw ConfigError("seed.source must be builtin, snapshot or integrate");
    if (src == "snapshot" && cfg.seed.path.empty()) throw ConfigError("seed.path is required for a snapshot seed");
    if (!(cfg.seed.delta_t > 0.0) || cfg.seed.steps < 0 || cfg.seed.newton_max < 1)
        throw ConfigError("seed: delta_t must be > 0, steps >= 0, newton_max >= 1");
    if (cfg.seed.newton_delta_t && !(*cfg.seed.newton_delta_t > 0.0))
        throw ConfigError("seed.newton_delta_t must be > 0");

    if (j.contains("continuation")) read_continuation(j["continuation"], cfg.continuation);
    else read_continuation(json::object(), cfg.continuation);

    if (j.contains("preconditioner")) {
        const auto& p = j["preconditioner"];
        only_keys(p, "preconditioner", {"delta_t", "blocks"});
        read(p, "delta_t", cfg.preconditioner.delta_t, "preconditioner");
        if (p.contains("blocks")) {
            if (!p["blocks"].is_object()) throw ConfigError("preconditioner.blocks must be an object");
            for (const auto& [name, b] : p["blocks"].items()) {
                const std::string w = "preconditioner.blocks." + name;
                only_keys(b, w, {"delta_t", "follows_parameter"});
                auto& o = cfg.preconditioner.blocks[name];
                read(b, "delta_t", o.delta_t, w);
                read(b, "follows_parameter", o.follows_parameter, w);
            }
        }
    }

    if (j.contains("stop")) {
        const auto& s = j["stop"];
        only_keys(s, "stop", {"lambda_min", "lambda_max", "max_points"});
        read(s, "lambda_min", cfg.stop.lambda_min, "stop");
        read(s, "lambda_max", cfg.stop.lambda_max, "stop");
        read(s, "max_points", cfg.stop.max_points, "stop");
        if (cfg.stop.max_points < 0) throw ConfigError("stop.max_points must be >= 0");
    }

    if (j.contains("output")) {
        const auto& o = j["output"];
        only_keys(o, "output", {"directory", "snapshot_stride"});
        std::string dir = cfg.output.directory.string();
        read(o, "directory", dir, "output");
        cfg.output.directory = dir;
        read(o, "snapshot_stride", cfg.output.snapshot_stride, "output");
        if (cfg.output.snapshot_stride < 0) throw ConfigError("output.snapshot_stride must be >= 0");
    }

    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        only_keys(s, "sweep", {"delta_t", "tail_window", "segment", "step", "threads", "block"});
        read(s, "delta_t", cfg.sweep.delta_t, "sweep");
        read(s, "tail_window", cfg.sweep.tail_window, "sweep");
        read(s, "segment", cfg.sweep.segment, "sweep");
        read(s, "step", cfg.sweep.step, "sweep");
        read(s, "threads", cfg.sweep.threads, "sweep");
        read(s, "block", cfg.sweep.block, "sweep");
        if (cfg.sweep.segment != "trace" && cfg.sweep.segment != "single_step")
            throw ConfigError("sweep.segment must be trace or single_step");
        if (cfg.sweep.threads < 1 || cfg.sweep.tail_window < 1)
            throw ConfigError("sweep.threads and sweep.tail_window must be >= 1");
        for (double dt : cfg.sweep.delta_t)
            if (!(dt > 0.0)) throw ConfigError("sweep.delta_t entries must be > 0");
    }
    return cfg;
}

RunConfig load_run_config(const fs::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    for (const auto& o : overrides) apply_override(j, o);
    return parse_run_config(j);
}

void apply_override(json& j, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) throw ConfigError("override must look like key.path=value");
    const std::string key(assignment.substr(0, eq)), text(assignment.substr(eq + 1));
    json* node = &j;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("empty component in override key " + key);
        if (node->is_null()) *node = json::object();
        if (!node->is_object()) throw ConfigError("override " + key + " descends into a non-object");
        node = &(*node)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    json value = json::parse(text, nullptr, false);
    *node = value.is_discarded() ? json(text) : value;
}

std::unique_ptr<Problem> make_problem(const RunConfig& config) {
    const json& p = config.problem;
    const std::string name = p.at("name");
    try {
        if (name == "toy") {
            const ToyKind kind = parse_toy_kind(p.value("kind", std::string("sqrt")));
            return std::make_unique<ToyProblem>(kind, num(p, "lambda", 0.0), num(p, "linear", 0.0), count(p, "n", 0));
        }
        if (name == "waleffe") {
            WaleffeParams w;
            w.re = num(p, "re", w.re);
            w.alpha = num(p, "alpha", w.alpha);
            w.ny = count(p, "ny", w.ny);
            w.nz = count(p, "nz", w.nz);
            w.lz = num(p, "lz", w.lz);
            return std::make_unique<WaleffeProblem>(w);
        }
        DdcParams d;
        d.ra = num(p, "ra", d.ra);
        d.pr = num(p, "pr", d.pr);
        d.tau = num(p, "tau", d.tau);
        d.nx = count(p, "nx", d.nx);
        d.nz = count(p, "nz", d.nz);
        d.lx = num(p, "lx", d.lx);
        return std::make_unique<DdcProblem>(d);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("problem: ") + e.what());
    }
}

PreconditionerSpec make_preconditioner(const RunConfig& config, const Problem& problem) {
    PreconditionerSpec spec = PreconditionerSpec::uniform(problem.layout(), 1.0);
    if (auto* w = dynamic_cast<const WaleffeProblem*>(&problem)) spec = w->default_preconditioner();
    const auto& pc = config.preconditioner;
    if (pc.delta_t) spec = with_delta_t(spec, "", *pc.delta_t);
    for (const auto& [name, o] : pc.blocks) {
        if (!problem.layout().find(name)) throw ConfigError("preconditioner block '" + name + "' is not in the layout");
        if (o.delta_t) spec.at(name).delta_t = *o.delta_t;
        if (o.follows_parameter) spec.at(name).follows_parameter = *o.follows_parameter;
    }
    try {
        spec.validate(problem.layout());
    } catch (const std::exception& e) {
        throw ConfigError(std::string("preconditioner: ") + e.what());
    }
    return spec;
}

RunSetup make_run(const RunConfig& config) {
    RunSetup s;
    s.problem = make_problem(config);
    s.spec = make_preconditioner(config, *s.problem);
    return s;
}

BranchPoint make_seed(const RunConfig& config, Problem& problem, const PreconditionerSpec& spec) {
    const SeedConfig& sc = config.seed;
    auto* ddc = dynamic_cast<DdcProblem*>(&problem);
    auto* wal = dynamic_cast<WaleffeProblem*>(&problem);

    Vec state;
    if (sc.source == "snapshot") {
        try {
            state = load_state(sc.path, problem);
        } catch (const SnapshotError& e) {
            throw ConfigError(e.what());
        }
    } else if (ddc) {
        state = sc.source == "integrate" ? ddc->perturbed_conduction(sc.amplitude) : ddc->conduction_state();
    } else if (wal) {
        state = wal->laminar_state();
        if (sc.source == "integrate") axpy(sc.amplitude, wal->random_state(1, 1.0), state);
    } else {
        state = sc.state.empty() ? Vec(problem.size(), 1.0) : sc.state;
        if (state.size() != problem.size())
            throw ConfigError("seed.state has " + std::to_string(state.size()) + " entries, the problem needs " +
                              std::to_string(problem.size()));
    }

    if (sc.source == "integrate" && sc.steps > 0) {
        const auto scales = problem.resolve(PreconditionerSpec::uniform(problem.layout(), sc.delta_t));
        Vec next(state.size());
        for (int n = 0; n < sc.steps; ++n) {
            problem.step(scales, state, next);
            state.swap(next);
        }
    }

    BranchPoint seed;
    seed.lambda = problem.parameter();
    if (sc.correct) {
        ContinuationConfig c = config.continuation;
        c.newton_max = sc.newton_max;
        const PreconditionerSpec seed_spec =
            sc.newton_delta_t ? PreconditionerSpec::uniform(problem.layout(), *sc.newton_delta_t) : spec;
        seed = correct_fixed_parameter(problem, seed_spec, state, seed.lambda, c);
    } else {
        seed.state = std::move(state);
    }
    seed.norm = branch_norm(problem, seed.state, config.continuation.norm);
    seed.mode = "seed";
    seed.delta_lambda = 0.0;
    return seed;
}

BranchCsv::BranchCsv(const fs::path& path) : out_(std::make_unique<std::ofstream>(path, std::ios::trunc)) {
    if (!*out_) throw ConfigError("cannot write " + path.string());
    *out_ << "index,lambda,norm,newton_iters,krylov_iters_total,delta_lambda,mode,status\n" << std::flush;
}

void BranchCsv::write(std::size_t index, const BranchPoint& p, const std::string& status) {
    *out_ << index << ',' << fmt(p.lambda) << ',' << fmt(p.norm) << ',' << p.stats.newton_iterations << ','
          << p.stats.krylov_iterations_total << ',' << fmt(p.delta_lambda) << ',' << p.mode << ',' << status << '\n'
          << std::flush;
}

RunSummary run(const RunConfig& config) {
    RunSetup setup = make_run(config);
    Problem& problem = *setup.problem;
    const fs::path dir = config.output.directory;
    fs::create_directories(dir);
    const int stride = config.output.snapshot_stride;
    if (stride > 0) fs::create_directories(dir / "snapshots");

    BranchCsv csv(dir / "branch.csv");
    RunSummary summary;
    BranchPoint seed;
    try {
        seed = make_seed(config, problem, setup.spec);
    } catch (const SolverFailure& e) {
        summary.status = TraceStatus::Failed;
        summary.message = std::string("seed correction failed: ") + e.what();
        return summary;
    }

    std::size_t index = 0;
    BranchPoint last;
    auto observe = [&](const BranchPoint& p) {
        csv.write(index, p, index == 0 ? "seed" : "converged");
        if (stride > 0 && index % static_cast<std::size_t>(stride) == 0) {
            char name[32];
            std::snprintf(name, sizeof name, "point_%05zu.snap", index);
            // The snapshot header records the parameter of this point.
            const double keep = problem.parameter();
            problem.set_parameter(p.lambda);
            write_snapshot(dir / "snapshots" / name, problem, p.state, {{"index", std::to_string(index)}});
            problem.set_parameter(keep);
        }
        last = p;
        ++index;
    };
    const TraceResult res = trace_branch(problem, setup.spec, seed, config.continuation, config.stop, observe);
    problem.set_parameter(last.lambda);
    write_snapshot(dir / "final.snap", problem, last.state, {{"index", std::to_string(index - 1)}});

    summary.status = res.status;
    summary.message = res.message;
    summary.points = index;
    summary.failures = res.failures;
    return summary;
}

TailStats tail_statistics(const std::vector<long>& eta, std::size_t window) {
    TailStats s;
    for (long e : eta) s.total += e;
    const std::size_t n = std::min(window, eta.size());
    s.count = n;
    if (n == 0) return s;
    const auto first = eta.end() - static_cast<long>(n);
    s.min = *std::min_element(first, eta.end());
    s.max = *std::max_element(first, eta.end());
    double sum = 0.0;
    for (auto it = first; it != eta.end(); ++it) sum += static_cast<double>(*it);
    s.mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (auto it = first; it != eta.end(); ++it) sq += (static_cast<double>(*it) - s.mean) * (*it - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(n));
    return s;
}

std::vector<SweepRow> sweep(const RunConfig& config, const std::vector<double>& delta_t) {
    if (delta_t.empty()) throw ConfigError("sweep needs at least one delta_t");
    for (double dt : delta_t)
        if (!(dt > 0.0)) throw ConfigError("sweep delta_t entries must be > 0");
    RunSetup setup = make_run(config);
    const fs::path dir = config.output.directory;
    fs::create_directories(dir);

    BranchPoint seed;
    try {
        seed = make_seed(config, *setup.problem, setup.spec);
    } catch (const SolverFailure& e) {
        throw SolverFailure(e.kind(), std::string("sweep seed correction failed: ") + e.what());
    }
    seed.stats = {};

    const SweepConfig& sc = config.sweep;
    auto entry = [&](std::size_t i) {
        SweepRow row;
        row.delta_t = delta_t[i];
        auto problem = setup.problem->clone();
        problem->set_parameter(seed.lambda);
        const PreconditionerSpec spec = with_delta_t(setup.spec, sc.block, delta_t[i]);
        const fs::path edir = dir / "sweep" / ("entry_" + std::to_string(i));
        fs::create_directories(edir);
        BranchCsv csv(edir / "branch.csv");
        std::vector<long> eta;
        if (sc.segment == "single_step") {
            csv.write(0, seed, "seed");
            try {
                BranchPoint p = correct_fixed_parameter(*problem, spec, seed.state, seed.lambda + sc.step,
                                                        config.continuation);
                p.norm = branch_norm(*problem, p.state, config.continuation.norm);
                p.mode = "fixed_lambda";
                p.delta_lambda = sc.step;
                csv.write(1, p, "converged");
                eta.push_back(p.stats.krylov_iterations_total);
                row.status = "converged";
            } catch (const SolverFailure& e) {
                row.status = "failed";
                row.message = e.what();
            }
        } else {
            std::size_t index = 0;
            auto observe = [&](const BranchPoint& p) {
                csv.write(index, p, index == 0 ? "seed" : "converged");
                ++index;
            };
            const TraceResult res = trace_branch(*problem, spec, seed, config.continuation, config.stop, observe);
            eta = etas(res);
            row.status = res.status == TraceStatus::Completed ? "converged" : "failed";
            row.message = res.message;
        }
        const TailStats st = tail_statistics(eta, sc.tail_window);
        row.points_completed = eta.size();
        row.eta_mean = st.mean;
        row.eta_std = st.std;
        row.eta_min = st.min;
        row.eta_max = st.max;
        row.eta_total = st.total;
        return row;
    };

    std::ofstream out(dir / "sweep.csv", std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + (dir / "sweep.csv").string());
    out << "delta_t,status,points_completed,eta_mean,eta_std,eta_min,eta_max,eta_total\n" << std::flush;
    auto emit = [&](const SweepRow& r) {
        out << fmt(r.delta_t) << ',' << r.status << ',' << r.points_completed << ',' << fmt(r.eta_mean) << ','
            << fmt(r.eta_std) << ',' << r.eta_min << ',' << r.eta_max << ',' << r.eta_total << '\n'
            << std::flush;
    };

    std::vector<SweepRow> rows(delta_t.size());
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(sc.threads), delta_t.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < delta_t.size(); ++i) emit(rows[i] = entry(i));
        return rows;
    }
    // Entries run on a small pool; rows are emitted in list order as they complete.
    std::vector<std::promise<SweepRow>> done(delta_t.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < delta_t.size();) {
                try {
                    done[i].set_value(entry(i));
                } catch (...) {
                    done[i].set_exception(std::current_exception());
                }
            }
        });
    for (std::size_t i = 0; i < delta_t.size(); ++i) emit(rows[i] = done[i].get_future().get());
    return rows;
}

}  // namespace adacont
