// renewnet: simulate, sweep, optimize and verify renewal models on graphs.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "renewnet/renewnet.hpp"

namespace fs = std::filesystem;
using namespace renewnet;
using ojson = nlohmann::ordered_json;

namespace {

/// Missing config file: reported with exit code 2.
struct MissingConfig {
    std::string path;
};

struct Common {
    std::string config;
    std::string solver = "lxf";
    std::optional<double> da, cfl;
    std::string out = "out";
    std::optional<unsigned> jobs;
};

json load_raw(const std::string& path) {
    if (path == "builtin:mating") return mating_config();
    if (path == "builtin:resource") return resource_config();
    if (path == "builtin:juvenile_adult") return juvenile_adult_config();
    if (!fs::is_regular_file(path)) throw MissingConfig{path};
    return load_config(path);
}

double mesh_setting(const json& raw, const char* key, double fallback) {
    if (raw.contains("mesh") && raw["mesh"].contains(key)) return raw["mesh"][key].get<double>();
    return fallback;
}

SolverKind solver_kind(const std::string& s) { return s == "picard" ? SolverKind::picard : SolverKind::lxf; }

unsigned job_count(const std::optional<unsigned>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("RENEWNET_JOBS")) {
        try {
            return static_cast<unsigned>(std::stoul(env));
        } catch (const std::exception&) {
            throw Error(std::string("RENEWNET_JOBS is not a number: '") + env + "'");
        }
    }
    return 0;
}

std::string timestamp() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

class Manifest {
public:
    Manifest(std::string command, const Common& c, const ModelConfig& m, double da, double cfl)
        : dir_(c.out), start_(std::chrono::steady_clock::now()) {
        doc_["command"] = std::move(command);
        doc_["config"] = c.config;
        doc_["model"] = m.name;
        ojson params = ojson::object();
        for (const auto& [k, v] : m.parameters) params[k] = v;
        doc_["parameters"] = params;
        doc_["horizon"] = m.horizon;
        ojson edges = ojson::array();
        const Mesh mesh = Mesh::uniform(m, da);
        for (std::size_t i = 0; i < m.n(); ++i)
            edges.push_back({{"id", m.edges[i].id}, {"length", m.edges[i].length}, {"cells", mesh.edges[i].N}, {"da", mesh.edges[i].da}});
        doc_["mesh"] = {{"da", da}, {"cfl", cfl}, {"edges", edges}};
        doc_["solver"] = c.solver;
        doc_["determinism"] = "outputs depend only on the config and flags; no random seeds";
        doc_["output_dir"] = c.out;
        doc_["outputs"] = ojson::array();
        doc_["started"] = timestamp();
        fs::create_directories(dir_);
        save();
    }

    void set(const std::string& key, ojson v) { doc_[key] = std::move(v); }

    void output(const std::string& name) { doc_["outputs"].push_back(name); }

    void write_csv(const std::string& name, const csv::Writer& w) {
        output(name);
        save();
        w.save((dir_ / name).string());
    }

    void finish() {
        doc_["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        save();
    }

private:
    void save() const {
        std::ofstream f(dir_ / "manifest.json", std::ios::binary);
        if (!f) throw Error("cannot write '" + (dir_ / "manifest.json").string() + "'");
        f << doc_.dump(2) << '\n';
    }

    fs::path dir_;
    std::chrono::steady_clock::time_point start_;
    ojson doc_;
};

csv::Writer snapshot_csv(const Trajectory& tr, const ModelConfig& m, const Snapshot& s) {
    csv::Writer w({"t", "edge", "x", "u"});
    for (std::size_t i = 0; i < s.u.size(); ++i) {
        const auto& em = tr.mesh.edges[i];
        for (std::size_t j = 0; j < em.N; ++j)
            w.row({csv::num(s.t), tr.edge_ids[i], csv::num(m.edges[i].origin + em.center(j)), csv::num(s.u[i][j])});
    }
    return w;
}

csv::Writer boundary_csv(const Trajectory& tr) {
    csv::Writer w({"t", "edge", "b"});
    for (std::size_t k = 0; k < tr.step_t.size(); ++k)
        for (std::size_t i = 0; i < tr.edge_ids.size(); ++i) w.row({csv::num(tr.step_t[k]), tr.edge_ids[i], csv::num(tr.step_b[k][i])});
    return w;
}

std::string snapshot_name(std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshot_%03zu.csv", k);
    return buf;
}

int cmd_simulate(const Common& c, std::vector<double> times) {
    const auto m = build_model(load_raw(c.config));
    const double da = c.da.value_or(mesh_setting(m.raw, "da", 0.1));
    const double cfl = c.cfl.value_or(mesh_setting(m.raw, "cfl", 0.9));
    if (times.empty()) times = {0.0, m.horizon};
    for (double t : times)
        if (t > m.horizon) throw ModelError("snapshot time " + csv::num(t) + " is past the horizon " + csv::num(m.horizon));
    Manifest man("simulate", c, m, da, cfl);
    man.set("snapshots", times);

    const Mesh mesh = Mesh::uniform(m, da);
    Trajectory tr;
    int status = 0;
    if (solver_kind(c.solver) == SolverKind::lxf) {
        SimulateOptions o;
        o.cfl = cfl;
        o.output_times = times;
        try {
            tr = simulate(m, mesh, o);
        } catch (const SimulationError& e) {
            std::cerr << "error: " << e.what() << '\n';
            tr = e.partial();
            status = 1;
        }
    } else {
        const auto sol = picard_solve(m, times.back());
        man.set("picard", {{"T_bar", sol.T_bar}, {"iterations", sol.iterations}, {"final_residual", sol.final_residual}});
        tr = sol.to_trajectory(mesh, times);
    }
    for (std::size_t k = 0; k < tr.snapshots.size(); ++k) man.write_csv(snapshot_name(k), snapshot_csv(tr, m, tr.snapshots[k]));
    man.write_csv("boundary.csv", boundary_csv(tr));
    const auto eb = apriori_check(tr, m);
    man.write_csv("apriori.csv", eb.table());
    man.finish();
    std::cout << "wrote " << tr.snapshots.size() << " snapshots to " << c.out << '\n';
    if (eb.violations()) {
        std::cerr << "a-priori bound violated in " << eb.violations() << " rows (see apriori.csv)\n";
        status = 1;
    }
    return status;
}

struct ScanFlags {
    std::string param;
    double from = 0.0, to = 1.0;
    std::size_t points = 21;
    std::string objective;
    double tol = 0.005;
};

Objective make_objective(const ModelConfig& m, const Common& c, const ScanFlags& f, double da, double cfl,
                         std::string& kind) {
    kind = f.objective;
    const json objectives = m.raw.value("objectives", json::object());
    if (kind.empty()) kind = objectives.contains("utility") ? "utility" : "netgain";
    if (!objectives.contains(kind)) throw ModelError("config defines no '" + kind + "' objective");
    RunSettings rs;
    rs.da = da;
    rs.cfl = cfl;
    rs.solver = solver_kind(c.solver);
    auto family = parameter_family(m.raw, f.param);
    return kind == "utility" ? utility_objective(std::move(family), rs) : netgain_objective(std::move(family), rs);
}

int cmd_scan(const Common& c, const ScanFlags& f, bool refine) {
    const auto m = build_model(load_raw(c.config));
    const double da = c.da.value_or(mesh_setting(m.raw, "da", 0.1));
    const double cfl = c.cfl.value_or(mesh_setting(m.raw, "cfl", 0.9));
    std::string kind;
    const auto obj = make_objective(m, c, f, da, cfl, kind);
    Manifest man(refine ? "optimize" : "sweep", c, m, da, cfl);
    man.set("param", f.param);
    man.set("objective", kind);
    man.set("range", {f.from, f.to});
    man.set("points", f.points);
    const unsigned jobs = job_count(c.jobs);

    SweepResult res;
    if (refine) {
        MaximizeOptions o;
        o.lo = f.from;
        o.hi = f.to;
        o.grid_points = f.points;
        o.tol = f.tol;
        o.jobs = jobs;
        man.set("tol", f.tol);
        res = maximize(obj, o);
    } else {
        std::vector<double> grid;
        if (f.points <= 1) {
            grid = {f.from};
        } else {
            for (std::size_t k = 0; k < f.points; ++k)
                grid.push_back(k + 1 == f.points ? f.to : f.from + (f.to - f.from) * static_cast<double>(k) / static_cast<double>(f.points - 1));
        }
        res = sweep(obj, grid, jobs);
    }
    man.write_csv("sweep.csv", res.table());
    if (refine) man.write_csv("refinement.csv", res.refinement_table());
    man.set("param_star", res.param_star);
    man.set("value_star", res.value_star);
    man.finish();
    for (const auto& r : res.rows)
        if (!r.ok) std::cerr << "warning: " << f.param << " = " << csv::num(r.param) << " failed: " << r.error << '\n';
    if (refine)
        std::cout << f.param << "* = " << csv::num(res.param_star) << '\n' << kind << "* = " << csv::num(res.value_star) << '\n';
    else
        std::cout << "best " << f.param << " = " << csv::num(res.param_star) << ", " << kind << " = " << csv::num(res.value_star) << '\n';
    return 0;
}

int cmd_verify(const Common& c, const std::string& level, bool write) {
    const auto m = build_model(load_raw(c.config));
    VerifyOptions o;
    o.level = level == "full" ? VerifyLevel::full : VerifyLevel::fast;
    o.cfl = c.cfl.value_or(mesh_setting(m.raw, "cfl", 0.9));
    o.da = c.da.value_or(mesh_setting(m.raw, "da", 0.1));
    std::optional<Manifest> man;
    if (write) {
        man.emplace("verify", c, m, o.da, o.cfl);
        man->set("level", level);
    }
    const auto rep = run_verify(m, o);
    std::cout << rep.summary();
    for (const auto& r : rep.rows)
        if (r.suite == "convergence" && r.metric == "observed order") std::cout << "observed order " << csv::num(r.value) << '\n';
    for (const auto& r : rep.rows)
        if (!r.ok)
            std::cout << "violation: " << r.suite << " " << r.metric << " = " << csv::num(r.value) << " (threshold "
                      << csv::num(r.threshold) << ")\n";
    if (man) {
        man->write_csv("verify.csv", rep.table());
        man->finish();
    }
    return rep.violations() ? 1 : 0;
}

void add_common(CLI::App* sub, Common& c, bool with_out = true) {
    sub->add_option("--config", c.config, "model config (JSON file or builtin:NAME)")->required();
    sub->add_option("--da", c.da, "mesh width");
    sub->add_option("--cfl", c.cfl, "CFL number");
    if (with_out) sub->add_option("--out", c.out, "output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Renewal equations on graphs: simulation, sweeps, optimisation and verification"};
    app.require_subcommand(1);
    Common c;
    std::vector<double> times;
    ScanFlags f;
    std::string level = "fast";
    bool verify_out = false;

    auto* sim = app.add_subcommand("simulate", "run one model and write snapshots, inflows and bound checks");
    add_common(sim, c);
    sim->add_option("--solver", c.solver, "lxf or picard")->check(CLI::IsMember({"lxf", "picard"}))->capture_default_str();
    sim->add_option("--snapshots", times, "comma-separated output times")->delimiter(',');

    auto* sw = app.add_subcommand("sweep", "objective on a uniform parameter grid");
    auto* opt = app.add_subcommand("optimize", "grid scan then golden-section refinement");
    for (auto* sub : {sw, opt}) {
        add_common(sub, c);
        sub->add_option("--solver", c.solver, "lxf or picard")->check(CLI::IsMember({"lxf", "picard"}))->capture_default_str();
        sub->add_option("--param", f.param, "parameter to vary")->required();
        sub->add_option("--from", f.from, "lower end")->capture_default_str();
        sub->add_option("--to", f.to, "upper end")->capture_default_str();
        sub->add_option("--points", f.points, "grid points")->capture_default_str();
        sub->add_option("--objective", f.objective, "utility or netgain (default: from config)")
            ->check(CLI::IsMember({"utility", "netgain"}));
        sub->add_option("--jobs", c.jobs, "worker threads (default: RENEWNET_JOBS or all cores)");
    }
    opt->add_option("--tol", f.tol, "bracket width")->capture_default_str();

    auto* ver = app.add_subcommand("verify", "solver cross-checks and invariant suites");
    add_common(ver, c, false);
    ver->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}))->capture_default_str();
    ver->add_option("--out", c.out, "write verify.csv and a manifest here")->each([&](const std::string&) { verify_out = true; });

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(c, times);
        if (sw->parsed()) return cmd_scan(c, f, false);
        if (opt->parsed()) return cmd_scan(c, f, true);
        if (ver->parsed()) return cmd_verify(c, level, verify_out);
    } catch (const MissingConfig& e) {
        std::cerr << "error: config file not found: " << e.path << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
