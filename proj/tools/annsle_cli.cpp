#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "annsle/core.hpp"
#include "annsle/lattice.hpp"
#include "annsle/loewner.hpp"
#include "annsle/partition.hpp"
#include "annsle/sde.hpp"
#include "annsle/special.hpp"
#include "annsle/verify.hpp"

using nlohmann::json;

namespace {

struct Global {
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 0;
    double tol = 1e-10;
    std::string out;
};

// Output sink: --out file or stdout, with the run config echoed as
// comment lines so any run can be reproduced byte-for-byte.
class Sink {
public:
    explicit Sink(const Global& g) {
        if (!g.out.empty()) {
            file_.open(g.out);
            if (!file_) throw CLI::ValidationError("--out", "cannot open " + g.out);
        }
    }
    std::ostream& os() { return file_.is_open() ? file_ : std::cout; }
    void echo_config(const std::string& command, const std::map<std::string, std::string>& kv) {
        os() << "# command=" << command << "\n";
        for (const auto& [k, v] : kv) os() << "# " << k << "=" << v << "\n";
    }

private:
    std::ofstream file_;
};

std::uint64_t resolve_seed(Global& g, std::ostream& os) {
    if (!g.seed_given) {
        std::random_device rd;
        g.seed = (static_cast<std::uint64_t>(rd()) << 32) | rd();
        os << "# seed drawn from entropy: " << g.seed << "\n";
    }
    return g.seed;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

annsle::LatticeDomain parse_domain(const std::string& s) {
    auto xpos = s.find('x');
    if (xpos == std::string::npos) throw CLI::ValidationError("--domain", "expected <w>x<h>");
    int w = std::stoi(s.substr(0, xpos));
    int h = std::stoi(s.substr(xpos + 1));
    if (w < 1 || h < 1) throw CLI::ValidationError("--domain", "sides must be positive");
    return annsle::LatticeDomain::rectangle(w, h);
}

annsle::LatticePoint parse_point(const std::string& s, const std::string& flag) {
    auto comma = s.find(',');
    if (comma == std::string::npos) throw CLI::ValidationError(flag, "expected <x>,<y>");
    return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
}

void cmd_fn_tabulate(Global& g, const std::string& name, double r, int n_x, double tol) {
    using namespace annsle;
    if (r < 0.05 || r > 50.0) {
        throw CLI::ValidationError("--r", "supported modulus range is [0.05, 50]");
    }
    bool tilde = name == "Atilde" || name == "HItilde" || name == "Ltilde";
    Sink sink(g);
    sink.echo_config("fn tabulate",
                     {{"name", name}, {"r", fmt(r)}, {"x-grid", std::to_string(n_x)},
                      {"tol", fmt(tol)}});
    sink.os() << "r,x,value,tail_bound\n";
    for (int j = 0; j < n_x; ++j) {
        // open grid for the tilde functions (defined on (0, 2pi))
        double x = tilde ? kTwoPi * (j + 1) / (n_x + 1) : -kPi + kTwoPi * j / n_x;
        double value = 0.0, tail = 0.0;
        if (name == "J") {
            SumTruncation t;
            t.abs_tol = tol;
            value = eval_J(r, x, t);
            tail = t.achieved_tail_bound;
        } else if (name == "HI") {
            value = eval_H_I(r, x);
        } else if (name == "A") {
            SumTruncation t;
            t.abs_tol = tol;
            value = eval_A(r, x, t);
            tail = t.achieved_tail_bound;
        } else if (name == "L") {
            value = eval_L(r, x);
        } else if (name == "Gamma") {
            value = eval_Gamma_delta(r).Gamma;
        } else if (name == "delta") {
            value = eval_Gamma_delta(r).delta;
        } else if (name == "mstar") {
            value = eval_mstar(r);
        } else if (name == "Atilde") {
            value = eval_A_tilde(r, x);
        } else if (name == "HItilde") {
            value = eval_H_I_tilde(r, x);
        } else if (name == "Ltilde") {
            value = eval_L_tilde(r, x);
        } else {
            throw CLI::ValidationError("--name", "unknown function " + name);
        }
        sink.os() << fmt(r) << ',' << fmt(x) << ',' << fmt(value) << ',' << fmt(tail) << "\n";
    }
}

void cmd_loewner_trace(Global& g, const std::string& driver, double kappa, double dt, double t) {
    using namespace annsle;
    SleParams p = derive_params(kappa);
    DrivingPath U;
    U.dt = dt;
    std::size_t n = static_cast<std::size_t>(t / dt + 0.5) + 1;
    Sink sink(g);
    std::uint64_t seed = resolve_seed(g, sink.os());
    if (driver == "zero") {
        U.samples.assign(n, 0.0);
    } else if (driver == "bm") {
        Rng rng(seed);
        double u = 0.0;
        double sq = std::sqrt(kappa * dt);
        U.samples.push_back(0.0);
        for (std::size_t j = 1; j < n; ++j) {
            u += sq * rng.next_normal();
            U.samples.push_back(u);
        }
    } else {
        throw CLI::ValidationError("--driver", "expected zero or bm");
    }
    sink.echo_config("loewner trace", {{"driver", driver}, {"kappa", fmt(kappa)},
                                       {"dt", fmt(dt)}, {"t", fmt(t)},
                                       {"seed", std::to_string(seed)}});
    CurveTrace trace = trace_from_driver(U, p);
    sink.os() << "t,re,im\n";
    for (std::size_t j = 0; j < trace.points.size(); ++j) {
        sink.os() << fmt(trace.times[j]) << ',' << fmt(trace.points[j].real()) << ','
                  << fmt(trace.points[j].imag()) << "\n";
    }
}

void cmd_loewner_rdot(Global& g, double kappa) {
    using namespace annsle;
    SleParams p = derive_params(kappa);
    CurveTrace slit;
    for (int i = 0; i <= 32; ++i) slit.points.push_back(Complex(0.0, 0.02 * i / 32.0));
    Sink sink(g);
    sink.echo_config("loewner rdot", {{"kappa", fmt(kappa)}});
    sink.os() << fmt(measure_r_dot(p, slit, 2.0)) << "\n";
}

annsle::SdeKind parse_kind(const std::string& kind) {
    if (kind == "locchord") return annsle::SdeKind::locally_chordal;
    if (kind == "tilde") return annsle::SdeKind::tilde_chordal;
    if (kind == "hi") return annsle::SdeKind::hi_drift;
    throw CLI::ValidationError("--kind", "expected locchord, tilde, or hi");
}

void cmd_sde_sample(Global& g, const std::string& kind, double kappa, double r, double x0,
                    double dt, int n) {
    using namespace annsle;
    SdeSpec spec{parse_kind(kind), r, kappa};
    Sink sink(g);
    std::uint64_t seed = resolve_seed(g, sink.os());
    sink.echo_config("sde sample",
                     {{"kind", kind}, {"kappa", fmt(kappa)}, {"r", fmt(r)}, {"x0", fmt(x0)},
                      {"dt", fmt(dt)}, {"n", std::to_string(n)}, {"seed", std::to_string(seed)}});
    sink.os() << "path_id,t,x\n";
    for (int i = 0; i < n; ++i) {
        SdePath path = simulate(spec, x0, dt, Rng(seed, static_cast<std::uint64_t>(i)).next_u64());
        for (std::size_t j = 0; j < path.samples.size(); ++j) {
            sink.os() << i << ',' << fmt(j * dt) << ',' << fmt(path.samples[j]) << "\n";
        }
    }
}

void cmd_pf_v(Global& g, const std::string& mode, double r, double x, double kappa,
              std::size_t n_paths, double dt, bool tilde) {
    using namespace annsle;
    SleParams p = derive_params(kappa);
    Sink sink(g);
    json out;
    out["config"] = {{"command", "pf v"},   {"mode", mode}, {"r", r},
                     {"x", x},              {"kappa", kappa}, {"tilde", tilde}};
    if (mode == "mc") {
        std::uint64_t seed = resolve_seed(g, sink.os());
        McEstimate mc = tilde ? tildeV_monte_carlo(r, x, n_paths, dt, p, seed, g.threads)
                              : V_monte_carlo(r, x, n_paths, dt, p, seed, g.threads);
        out["config"]["n_paths"] = n_paths;
        out["config"]["dt"] = dt;
        out["value"] = mc.value;
        out["std_error"] = mc.std_error;
        out["n_paths"] = mc.n_paths;
        out["seed"] = mc.seed;
    } else if (mode == "pde") {
        VSolution sol = tilde ? tildeV_pde_solve(r, p, {r}) : V_pde_solve(r, p, {r});
        out["value"] = sol.value(0, x);
    } else {
        throw CLI::ValidationError("--mode", "expected mc or pde");
    }
    sink.os() << out.dump(2) << "\n";
}

void cmd_pf_table(Global& g, double r_max, int nx, int nr, double kappa) {
    using namespace annsle;
    SleParams p = derive_params(kappa);
    std::vector<double> r_grid, x_grid;
    for (int i = 0; i < nr; ++i) r_grid.push_back(r_max * (i + 1) / nr);
    for (int j = 0; j < nx; ++j) x_grid.push_back(-kPi + kTwoPi * j / nx);
    PartitionTable t = assemble_tables(r_grid, x_grid, p);
    Sink sink(g);
    sink.echo_config("pf table", {{"r-max", fmt(r_max)}, {"nx", std::to_string(nx)},
                                  {"nr", std::to_string(nr)}, {"kappa", fmt(kappa)},
                                  {"tail_bound", fmt(t.tail_bound)}});
    sink.os() << "r,x,V,Psi_tilde,F,Fhat,K\n";
    for (std::size_t ir = 0; ir < r_grid.size(); ++ir) {
        for (std::size_t ix = 0; ix < x_grid.size(); ++ix) {
            std::size_t id = t.index(ir, ix);
            sink.os() << fmt(r_grid[ir]) << ',' << fmt(x_grid[ix]) << ',' << fmt(t.V[id]) << ','
                      << fmt(t.Psi_tilde[id]) << ',' << fmt(t.F[id]) << ',' << fmt(t.F_hat[id])
                      << ',' << fmt(t.K[id]) << "\n";
        }
    }
}

void cmd_pf_residual(Global& g, const std::string& eq_name, const std::string& in,
                     double kappa) {
    using namespace annsle;
    PdeEq eq;
    std::size_t col; // column of the table the equation applies to
    if (eq_name == "pde") {
        eq = PdeEq::pde;
        col = 2; // V
    } else if (eq_name == "fpde2") {
        eq = PdeEq::fpde2;
        col = 5; // Fhat
    } else if (eq_name == "kpde") {
        eq = PdeEq::kpde;
        col = 6; // K
    } else if (eq_name == "kappa2") {
        eq = PdeEq::kappa2;
        col = 5; // Fhat
    } else {
        throw CLI::ValidationError("--eq", "expected pde, fpde2, kpde, or kappa2");
    }
    std::ifstream f(in);
    if (!f) throw CLI::ValidationError("--in", "cannot open " + in);
    FunctionTable tab;
    std::string line;
    std::vector<double> rs, xs, vals;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'r') continue;
        std::istringstream ls(line);
        std::vector<double> fields;
        std::string cell;
        while (std::getline(ls, cell, ',')) fields.push_back(std::stod(cell));
        if (fields.size() <= col) throw CLI::ValidationError("--in", "short row in " + in);
        rs.push_back(fields[0]);
        xs.push_back(fields[1]);
        vals.push_back(fields[col]);
    }
    if (rs.empty()) throw CLI::ValidationError("--in", "no data rows in " + in);
    std::size_t nx = 1;
    while (nx < rs.size() && rs[nx] == rs[0]) ++nx;
    for (std::size_t j = 0; j < nx; ++j) tab.x_grid.push_back(xs[j]);
    for (std::size_t i = 0; i < rs.size(); i += nx) tab.r_grid.push_back(rs[i]);
    tab.values = vals;
    ResidualGrid res = pde_residual(tab, eq, derive_params(kappa));
    Sink sink(g);
    sink.echo_config("pf residual", {{"eq", eq_name}, {"in", in}, {"kappa", fmt(kappa)},
                                     {"sup_norm", fmt(res.sup_norm)}});
    sink.os() << "r,x,residual\n";
    for (std::size_t i = 0; i < res.r_grid.size(); ++i) {
        for (std::size_t j = 0; j < res.x_grid.size(); ++j) {
            sink.os() << fmt(res.r_grid[i]) << ',' << fmt(res.x_grid[j]) << ','
                      << fmt(res.values[i * res.x_grid.size() + j]) << "\n";
        }
    }
}

void cmd_lattice_z(Global& g, const std::string& domain, const std::string& z_s,
                   const std::string& w_s, double beta, double lambda, int max_len) {
    using namespace annsle;
    LatticeDomain D = parse_domain(domain);
    SawZ res = lambda_saw_Z(D, parse_point(z_s, "--z"), parse_point(w_s, "--w"), beta, lambda,
                            max_len);
    json out;
    out["config"] = {{"command", "lattice z"}, {"domain", domain}, {"z", z_s}, {"w", w_s},
                     {"beta", beta},           {"lambda", lambda}, {"max_len", max_len}};
    out["Z"] = res.Z;
    out["n_saws"] = res.n_saws;
    out["truncated"] = res.truncated;
    Sink sink(g);
    sink.os() << out.dump(2) << "\n";
}

int cmd_lattice_lerw(Global& g, const std::string& domain) {
    using namespace annsle;
    LatticeDomain D = parse_domain(domain);
    LatticePoint z{D.sites()[D.size() / 2]};
    LerwCheck res = lerw_check(D, z);
    bool pass = res.max_deviation <= 1e-12 && std::abs(res.total_probability - 1.0) <= 1e-12;
    Sink sink(g);
    sink.echo_config("lattice lerw-check", {{"domain", domain}});
    sink.os() << (pass ? "PASS" : "FAIL") << " max_deviation=" << fmt(res.max_deviation)
              << " total_probability=" << fmt(res.total_probability) << " n_saws=" << res.n_saws
              << "\n";
    return pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"annulus SLE partition-function toolkit (supported modulus r in [0.05, 50])"};
    app.require_subcommand(1);
    app.set_config("--config")->description("plain key=value defaults file");

    Global g;
    app.add_option("--seed", g.seed, "RNG seed (drawn from entropy and printed if omitted)")
        ->each([&](const std::string&) { g.seed_given = true; });
    app.add_option("--threads", g.threads, "worker cap, 0 = logical cores (results identical)");
    app.add_option("--tol", g.tol, "series truncation tolerance");
    app.add_option("--out", g.out, "output file (default stdout)");

    // fn tabulate
    auto* fn = app.add_subcommand("fn", "special function evaluation");
    auto* tab = fn->add_subcommand("tabulate", "tabulate a function over an x grid");
    std::string fn_name;
    double fn_r = 1.0;
    int fn_nx = 64;
    tab->add_option("--name", fn_name,
                    "one of J, HI, A, L, Gamma, delta, mstar, Atilde, HItilde, Ltilde")
        ->required();
    tab->add_option("--r", fn_r, "modulus in [0.05, 50]")->required();
    tab->add_option("--x-grid", fn_nx, "number of grid points")->required();

    // loewner
    auto* lw = app.add_subcommand("loewner", "Loewner flows");
    auto* lw_trace = lw->add_subcommand("trace", "trace the curve of a driver");
    std::string lw_driver = "zero";
    double lw_kappa = 2.0, lw_dt = 1e-3, lw_t = 1.0;
    lw_trace->add_option("--driver", lw_driver, "zero or bm")->required();
    lw_trace->add_option("--kappa", lw_kappa)->required();
    lw_trace->add_option("--dt", lw_dt)->required();
    lw_trace->add_option("--t", lw_t)->required();
    auto* lw_rdot = lw->add_subcommand("rdot", "modulus decay rate at t=0");
    double rdot_kappa = 2.0;
    lw_rdot->add_option("--kappa", rdot_kappa)->required();

    // sde sample
    auto* sde = app.add_subcommand("sde", "driving-function diffusions");
    auto* sde_sample = sde->add_subcommand("sample", "sample SDE paths");
    std::string sde_kind;
    double sde_kappa = 2.0, sde_r = 1.0, sde_x0 = 0.5, sde_dt = 1e-3;
    int sde_n = 1;
    sde_sample->add_option("--kind", sde_kind, "locchord, tilde, or hi")->required();
    sde_sample->add_option("--kappa", sde_kappa)->required();
    sde_sample->add_option("--r", sde_r)->required();
    sde_sample->add_option("--x0", sde_x0)->required();
    sde_sample->add_option("--dt", sde_dt)->required();
    sde_sample->add_option("--n", sde_n)->required();

    // pf
    auto* pf = app.add_subcommand("pf", "partition functions");
    auto* pf_v = pf->add_subcommand("v", "V(r,x) by Monte Carlo or PDE");
    std::string pf_mode;
    double pfv_r = 1.0, pfv_x = 0.0, pfv_kappa = 2.0, pfv_dt = 2e-4;
    std::size_t pfv_n = 10000;
    bool pfv_tilde = false;
    pf_v->add_option("--mode", pf_mode, "mc or pde")->required();
    pf_v->add_option("--r", pfv_r)->required();
    pf_v->add_option("--x", pfv_x)->required();
    pf_v->add_option("--kappa", pfv_kappa)->required();
    pf_v->add_option("--n-paths", pfv_n);
    pf_v->add_option("--dt", pfv_dt);
    pf_v->add_flag("--tilde", pfv_tilde, "absorbed-path variant on (0, 2pi)");
    auto* pf_table = pf->add_subcommand("table", "assemble V, Psi_tilde, F, Fhat, K");
    double pt_rmax = 2.0, pt_kappa = 2.0;
    int pt_nx = 64, pt_nr = 4;
    pf_table->add_option("--r-max", pt_rmax)->required();
    pf_table->add_option("--nx", pt_nx)->required();
    pf_table->add_option("--nr", pt_nr)->required();
    pf_table->add_option("--kappa", pt_kappa)->required();
    auto* pf_res = pf->add_subcommand("residual", "PDE residual of a tabulated column");
    std::string pr_eq, pr_in;
    double pr_kappa = 2.0;
    pf_res->add_option("--eq", pr_eq, "pde, fpde2, kpde, or kappa2")->required();
    pf_res->add_option("--in", pr_in, "CSV from pf table")->required();
    pf_res->add_option("--kappa", pr_kappa)->required();

    // lattice
    auto* lat = app.add_subcommand("lattice", "discrete loop measures and lambda-SAW");
    auto* lat_z = lat->add_subcommand("z", "lambda-SAW partition function");
    std::string lz_domain, lz_z, lz_w;
    double lz_beta = 0.0, lz_lambda = 0.0;
    int lz_maxlen = 16;
    lat_z->add_option("--domain", lz_domain, "<w>x<h>")->required();
    lat_z->add_option("--z", lz_z, "<x>,<y>")->required();
    lat_z->add_option("--w", lz_w, "<x>,<y>")->required();
    lat_z->add_option("--beta", lz_beta)->required();
    lat_z->add_option("--lambda", lz_lambda)->required();
    lat_z->add_option("--max-len", lz_maxlen);
    auto* lat_lerw = lat->add_subcommand("lerw-check", "loop-erased walk identity");
    std::string ll_domain = "3x3";
    lat_lerw->add_option("--domain", ll_domain, "<w>x<h>");

    // verify
    auto* ver = app.add_subcommand("verify", "run the acceptance suite");
    std::string ver_level = "fast";
    ver->add_option("--level", ver_level, "fast or full");

    // let the global options (--seed, --out, ...) appear after a subcommand
    for (CLI::App* sub : app.get_subcommands({})) {
        sub->fallthrough();
        for (CLI::App* nested : sub->get_subcommands({})) nested->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (tab->parsed()) {
            cmd_fn_tabulate(g, fn_name, fn_r, fn_nx, g.tol);
        } else if (lw_trace->parsed()) {
            cmd_loewner_trace(g, lw_driver, lw_kappa, lw_dt, lw_t);
        } else if (lw_rdot->parsed()) {
            cmd_loewner_rdot(g, rdot_kappa);
        } else if (sde_sample->parsed()) {
            cmd_sde_sample(g, sde_kind, sde_kappa, sde_r, sde_x0, sde_dt, sde_n);
        } else if (pf_v->parsed()) {
            cmd_pf_v(g, pf_mode, pfv_r, pfv_x, pfv_kappa, pfv_n, pfv_dt, pfv_tilde);
        } else if (pf_table->parsed()) {
            cmd_pf_table(g, pt_rmax, pt_nx, pt_nr, pt_kappa);
        } else if (pf_res->parsed()) {
            cmd_pf_residual(g, pr_eq, pr_in, pr_kappa);
        } else if (lat_z->parsed()) {
            cmd_lattice_z(g, lz_domain, lz_z, lz_w, lz_beta, lz_lambda, lz_maxlen);
        } else if (lat_lerw->parsed()) {
            return cmd_lattice_lerw(g, ll_domain);
        } else if (ver->parsed()) {
            Sink sink(g);
            std::uint64_t seed = g.seed_given ? g.seed : 20260823;
            annsle::VerifyReport rep = annsle::verify_all(ver_level == "full", seed, g.threads);
            sink.echo_config("verify", {{"level", ver_level}, {"seed", std::to_string(seed)},
                                        {"threads", std::to_string(g.threads)}});
            for (const annsle::CriterionResult& c : rep.results) {
                sink.os() << (c.pass ? "PASS " : "FAIL ") << c.id << " " << c.name
                          << " measured=" << fmt(c.measured) << " threshold=" << fmt(c.threshold)
                          << (c.detail.empty() ? "" : " " + c.detail) << "\n";
            }
            return rep.all_pass ? 0 : 1;
        } else {
            std::cerr << app.help() << "\n";
            return 2;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
