#include "pdgcli/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pdg/engine.hpp"
#include "pdg/oracle.hpp"
#include "pdgcli/format.hpp"
#include "pdgcli/gen.hpp"
#include "pdgcli/query.hpp"

namespace pdgcli {

using nlohmann::ordered_json;

namespace {

struct ValidationFailed : std::runtime_error {
    explicit ValidationFailed(pdg::ValidationReport r)
        : std::runtime_error("validation failed"), report(std::move(r)) {}
    pdg::ValidationReport report;
};

ordered_json num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

pdg::GammaSpec parse_gamma(const std::string& s) {
    if (s == "0") return pdg::GammaSpec::zero();
    if (s == "0+") return pdg::GammaSpec::zero_plus();
    std::size_t used = 0;
    double g = 0.0;
    try {
        g = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size()) throw FormatError("--gamma: expected 0, 0+ or a positive number, got '" + s + "'");
    if (g == 0.0) return pdg::GammaSpec::zero();
    return pdg::GammaSpec::positive(g);
}

Range parse_range(const std::string& s, const char* what) {
    auto colon = s.find(':');
    try {
        std::size_t u1 = 0, u2 = 0;
        if (colon == std::string::npos) {
            int v = std::stoi(s, &u1);
            if (u1 != s.size()) throw std::invalid_argument(s);
            return {v, v};
        }
        auto a = s.substr(0, colon), b = s.substr(colon + 1);
        Range r{std::stoi(a, &u1), std::stoi(b, &u2)};
        if (u1 != a.size() || u2 != b.size()) throw std::invalid_argument(s);
        return r;
    } catch (const std::logic_error&) {
        throw std::invalid_argument(std::string(what) + ": expected N or LO:HI, got '" + s + "'");
    }
}

PdgFile load(const std::string& path) {
    auto f = read_pdg(path);
    auto rep = pdg::validate(f.model);
    if (!rep.structurally_valid()) throw ValidationFailed(rep);
    return f;
}

pdg::EngineOptions engine_options(const PdgFile& f, double tol, bool cccp, const std::string& method) {
    pdg::EngineOptions o;
    o.tol = tol;
    o.allow_cccp = cccp;
    if (method == "min-degree") o.method = pdg::DecompMethod::min_degree;
    if (f.td) {
        auto td = *f.td;
        if (td.edges.empty() && td.clusters.size() > 1)
            td = pdg::build_decomposition(f.model, pdg::DecompMethod::given, td.clusters);
        o.td = td;
    }
    return o;
}

ordered_json names_of(const pdg::PDG& m, const std::vector<int>& vars) {
    ordered_json a = ordered_json::array();
    for (int v : vars) a.push_back(m.variables[static_cast<std::size_t>(v)].name);
    return a;
}

ordered_json stages_json(const std::vector<pdg::SolveStats>& st, bool timing) {
    ordered_json a = ordered_json::array();
    for (const auto& s : st) {
        ordered_json j;
        j["stage"] = s.stage;
        j["status"] = s.status;
        j["n"] = s.n;
        j["m"] = s.m;
        j["iterations"] = s.iterations;
        j["gap"] = num(s.gap);
        j["primal_residual"] = num(s.primal_residual);
        j["dual_residual"] = num(s.dual_residual);
        if (timing) j["seconds"] = s.seconds;
        a.push_back(j);
    }
    return a;
}

ordered_json query_json(const Query& q, const pdg::QueryResult& r) {
    ordered_json j;
    j["query"] = to_string(q);
    j["estimate"] = num(r.estimate);
    j["precision"] = num(r.precision);
    j["lo"] = num(r.lo);
    j["hi"] = num(r.hi);
    // proven bound; only available for gamma > 0
    j["certified"] = std::isfinite(r.certified) ? num(r.certified) : ordered_json(nullptr);
    if (!q.given.empty()) {
        j["escalations"] = r.escalations;
        j["solves"] = r.solves;
    }
    return j;
}

struct InferArgs {
    std::string file, gamma = "0+", method = "min-fill";
    std::vector<std::string> queries;
    double eps = 1e-4, tol = 1e-8;
    bool dump_beliefs = false, cccp = false, no_timing = false;
};

int cmd_infer(const InferArgs& a, std::ostream& out) {
    auto t0 = std::chrono::steady_clock::now();
    auto f = load(a.file);
    auto gamma = parse_gamma(a.gamma);
    std::vector<Query> qs;
    for (const auto& s : a.queries) qs.push_back(parse_query(s));
    auto o = engine_options(f, a.tol, a.cccp, a.method);
    auto rep = pdg::infer(f.model, gamma, o);

    ordered_json j;
    j["command"] = "infer";
    j["gamma"] = gamma.str();
    j["inconsistency"] = num(rep.inconsistency);
    if (gamma.kind == pdg::GammaSpec::Kind::zero_plus) {
        j["oinc_stage_one"] = num(rep.oinc_stage_one);
        j["sinc_stage_two"] = num(rep.sinc_stage_two);
    }
    j["infinite"] = rep.infinite;
    if (rep.cccp_iterations > 0) {
        j["local"] = rep.local;
        j["cccp_iterations"] = rep.cccp_iterations;
        ordered_json objs = ordered_json::array();
        for (double v : rep.cccp_objectives) objs.push_back(num(v));
        j["cccp_objectives"] = objs;
    }
    const auto& m = rep.beliefs.model;
    j["width"] = rep.beliefs.rct.td.width();
    j["clusters"] = rep.beliefs.rct.size();
    if (!rep.infinite) {
        j["calibration_residual"] = num(rep.beliefs.calibration_residual);
        j["belief_precision"] = num(rep.beliefs.precision);
        j["belief_certified"] =
            std::isfinite(rep.beliefs.certified) ? num(rep.beliefs.certified) : ordered_json(nullptr);
    }
    j["stages"] = stages_json(rep.stages, !a.no_timing);

    ordered_json qa = ordered_json::array();
    for (const auto& q : qs) {
        pdg::QueryResult r;
        if (q.given.empty())
            r = pdg::query_marginal(rep.beliefs, q.target);
        else
            r = pdg::query_conditional(f.model, gamma, q.target, q.given, a.eps, o);
        qa.push_back(query_json(q, r));
    }
    if (!qs.empty()) j["queries"] = qa;
    if (a.dump_beliefs && !rep.infinite) {
        ordered_json b = ordered_json::array();
        for (std::size_t c = 0; c < rep.beliefs.mu.size(); ++c) {
            ordered_json e;
            e["cluster"] = names_of(m, rep.beliefs.rct.td.clusters[c]);
            e["values"] = rep.beliefs.mu[c];
            b.push_back(e);
        }
        j["beliefs"] = b;
    }
    if (!a.no_timing)
        j["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out << j.dump(2) << "\n";
    return ok;
}

struct CompileArgs {
    std::string file, gamma = "0", dump_path, method = "min-fill";
    bool joint = false, no_reduce = false, variant_4a = false;
    double tol = 1e-8;
};

int cmd_compile(const CompileArgs& a, std::ostream& out) {
    auto f = load(a.file);
    auto gamma = parse_gamma(a.gamma);
    auto m = pdg::checked(f.model);
    auto o = engine_options(f, a.tol, false, a.method);
    o.compile.reduce = !a.no_reduce;
    o.compile.variant_4a = a.variant_4a;

    pdg::CompiledProblem cp;
    std::optional<pdg::RootedClusterTree> rct;
    if (!a.joint) {
        auto td = o.td ? *o.td : pdg::build_decomposition(m, o.method);
        rct = pdg::root_and_assign(td, m);
    }
    switch (gamma.kind) {
        case pdg::GammaSpec::Kind::zero:
            cp = a.joint ? pdg::compile_joint_inc(m, o.compile) : pdg::compile_cluster_inc(m, *rct, o.compile);
            break;
        case pdg::GammaSpec::Kind::positive:
            cp = a.joint ? pdg::compile_joint_small_gamma(m, gamma.gamma, o.compile)
                         : pdg::compile_cluster_small_gamma(m, *rct, gamma.gamma, o.compile);
            break;
        case pdg::GammaSpec::Kind::zero_plus: {
            if (!pdg::is_proper(m)) throw pdg::UnsupportedError("0+ needs a proper PDG");
            // stage two depends on the stage-one optimum
            auto one = a.joint ? pdg::compile_joint_inc(m, o.compile) : pdg::compile_cluster_inc(m, *rct, o.compile);
            if (one.infeasible) throw pdg::SolverError("stage one is infeasible; no 0+ program exists");
            auto sol = pdg::conic::solve(one.program, std::min(a.tol, 1e-8));
            if (sol.status != pdg::conic::Status::optimal)
                throw pdg::SolverError("stage one ended with status " + pdg::conic::to_string(sol.status));
            auto nu = pdg::beliefs_from(one, sol.x);
            if (a.joint) {
                auto joint = pdg::JointDistribution::over(m, nu[0]);
                cp = pdg::compile_joint_zero_plus(m, pdg::freeze_marginals(m, joint), o.compile);
            } else {
                auto fr = pdg::freeze_marginals(m, *rct, nu, o.compile.undefined_mass);
                cp = pdg::compile_cluster_zero_plus(m, *rct, fr, one.support, o.compile);
            }
            break;
        }
    }
    const auto& p = cp.program;
    ordered_json j;
    j["command"] = "compile";
    j["problem"] = pdg::to_string(cp.kind);
    j["gamma"] = gamma.str();
    j["reduced"] = o.compile.reduce;
    j["infeasible"] = cp.infeasible;
    j["n"] = p.n();
    j["m"] = p.m();
    j["nonzeros"] = p.A.nonZeros();
    j["orthant"] = p.cones.orthant_count();
    j["exp_cones"] = p.cones.exp_count();
    j["objective_scale"] = p.objective_scale;
    j["objective_offset"] = p.objective_offset;
    auto [en, em] = pdg::expected_dims(cp.kind, cp.size);
    j["size"] = {{"VA", cp.size.va}, {"VA0", cp.size.va0}, {"VC", cp.size.vc},
                 {"VT", cp.size.vt}, {"clusters", cp.size.clusters}};
    j["expected_n"] = en;
    j["expected_m"] = em;
    if (!a.dump_path.empty()) {
        std::ofstream os(a.dump_path);
        if (!os) throw FormatError("cannot write '" + a.dump_path + "'");
        pdg::conic::dump(p, os);
        j["dump"] = a.dump_path;
    }
    out << j.dump(2) << "\n";
    return ok;
}

struct OracleArgs {
    std::string file, cnf, gamma = "0+";
    bool uniform = false;
    std::uint64_t seed = 1;
};

int cmd_oracle(const OracleArgs& a, std::ostream& out) {
    auto gamma = parse_gamma(a.gamma);
    pdg::OracleOptions oo;
    oo.seed = a.seed;
    ordered_json j;
    j["command"] = "oracle";
    j["gamma"] = gamma.str();
    pdg::PDG m;
    if (!a.cnf.empty()) {
        std::ifstream in(a.cnf);
        if (!in) throw FormatError("cannot open '" + a.cnf + "'");
        auto f = pdg::parse_dimacs(in);
        auto count = pdg::count_models(f);
        j["model_count"] = count;
        j["log_model_count"] = count ? num(std::log(static_cast<double>(count))) : ordered_json("-inf");
        m = a.uniform ? pdg::encode_cnf_uniform(f) : pdg::encode_cnf(f);
        j["variables"] = m.variables.size();
        j["arcs"] = m.arcs.size();
    } else {
        m = load(a.file).model;
    }
    auto r = pdg::brute_force_optimum(m, gamma, oo);
    j["finite"] = r.finite;
    j["score"] = num(r.score);
    j["oinc"] = num(r.oinc);
    j["sinc"] = num(r.sinc);
    if (r.finite) j["joint"] = r.mu.probs();
    out << j.dump(2) << "\n";
    return ok;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot write '" + path + "'");
    os << text;
}

void diagnose(std::ostream& err, const std::string& kind, const std::string& message) {
    ordered_json j;
    j["error"] = kind;
    j["message"] = message;
    err << j.dump(2) << "\n";
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Inference for probabilistic dependency graphs", "pdg"};
    app.require_subcommand(1);

    InferArgs ia;
    auto* infer = app.add_subcommand("infer", "Infer beliefs, the inconsistency, and answer queries");
    infer->add_option("file", ia.file, "PDG file (JSON)")->required();
    infer->add_option("--gamma", ia.gamma, "0, 0+ or a positive number")->capture_default_str();
    infer->add_option("--query", ia.queries, "Var=val[,Var=val...][|Var=val[,...]] (repeatable)");
    infer->add_option("--eps", ia.eps, "absolute precision for conditional queries")->capture_default_str();
    infer->add_option("--tol", ia.tol, "solver tolerance")->capture_default_str();
    infer->add_option("--decomp", ia.method, "min-fill or min-degree")
        ->check(CLI::IsMember({"min-fill", "min-degree"}))
        ->capture_default_str();
    infer->add_flag("--dump-beliefs", ia.dump_beliefs, "include cluster beliefs in the report");
    infer->add_flag("--cccp", ia.cccp, "allow the convex-concave procedure when gamma exceeds beta/alpha");
    infer->add_flag("--no-timing", ia.no_timing, "omit wall-clock fields (byte-stable output)");

    CompileArgs ca;
    auto* compile = app.add_subcommand("compile", "Compile to a conic program and report its dimensions");
    compile->add_option("file", ca.file, "PDG file (JSON)")->required();
    compile->add_option("--gamma", ca.gamma, "0, 0+ or a positive number")->capture_default_str();
    compile->add_option("--dump-conic", ca.dump_path, "write the program in the sparse text format");
    compile->add_option("--tol", ca.tol, "stage-one tolerance for 0+")->capture_default_str();
    compile->add_option("--decomp", ca.method, "min-fill or min-degree")
        ->check(CLI::IsMember({"min-fill", "min-degree"}))
        ->capture_default_str();
    compile->add_flag("--joint", ca.joint, "joint form over all worlds instead of the cluster form");
    compile->add_flag("--no-reduce", ca.no_reduce, "keep every cone and row (exact dimension formulas)");
    compile->add_flag("--variant-4a", ca.variant_4a, "put cpd probabilities inside the cones");

    OracleArgs oa;
    auto* oracle = app.add_subcommand("oracle", "Brute-force optimum over the full joint");
    auto* of = oracle->add_option("file", oa.file, "PDG file (JSON)");
    auto* oc = oracle->add_option("--cnf", oa.cnf, "DIMACS CNF file; encodes it as a PDG");
    of->excludes(oc);
    oracle->add_option("--gamma", oa.gamma, "0, 0+ or a positive number")->capture_default_str();
    oracle->add_flag("--uniform", oa.uniform, "with --cnf: add the uniform full-joint arc");
    oracle->add_option("--seed", oa.seed, "restart seed")->capture_default_str();

    std::string rn = "5:9", rv = "2:3", ra = "7:14", rs = "0:3", rt = "1:2", rout;
    std::uint64_t rseed = 0;
    auto* genr = app.add_subcommand("gen-random", "Sample a random PDG");
    genr->add_option("--n", rn, "variable count, N or LO:HI")->capture_default_str();
    genr->add_option("--vals", rv, "values per variable")->capture_default_str();
    genr->add_option("--arcs", ra, "arc count")->capture_default_str();
    genr->add_option("--sources", rs, "sources per arc")->capture_default_str();
    genr->add_option("--targets", rt, "targets per arc")->capture_default_str();
    genr->add_option("--seed", rseed)->capture_default_str();
    genr->add_option("-o,--output", rout, "output path (default stdout)");

    KTreeSpec ks;
    std::string kv = "2", ksrc = "0:3", ktgt = "1:2", kout;
    std::uint64_t kseed = 0;
    auto* genk = app.add_subcommand("gen-ktree", "Sample a PDG on a random k-tree with its decomposition");
    genk->add_option("--n", ks.n, "variables")->capture_default_str();
    genk->add_option("--treewidth,-k", ks.k, "k")->capture_default_str();
    genk->add_option("--arcs", ks.arcs)->capture_default_str();
    genk->add_option("--vals", kv, "values per variable")->capture_default_str();
    genk->add_option("--sources", ksrc)->capture_default_str();
    genk->add_option("--targets", ktgt)->capture_default_str();
    genk->add_option("--seed", kseed)->capture_default_str();
    genk->add_option("-o,--output", kout, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return input_error;
    }

    try {
        if (*infer) return cmd_infer(ia, out);
        if (*compile) return cmd_compile(ca, out);
        if (*oracle) {
            if (oa.file.empty() && oa.cnf.empty()) throw FormatError("oracle: give a PDG file or --cnf");
            return cmd_oracle(oa, out);
        }
        if (*genr) {
            RandomSpec s{parse_range(rn, "--n"), parse_range(rv, "--vals"), parse_range(ra, "--arcs"),
                         parse_range(rs, "--sources"), parse_range(rt, "--targets")};
            write_text(rout, emit_pdg({random_pdg(s, rseed), std::nullopt}), out);
            return ok;
        }
        if (*genk) {
            ks.vals = parse_range(kv, "--vals");
            ks.sources = parse_range(ksrc, "--sources");
            ks.targets = parse_range(ktgt, "--targets");
            write_text(kout, emit_pdg(random_ktree(ks, kseed)), out);
            return ok;
        }
    } catch (const ValidationFailed& e) {
        ordered_json j;
        j["error"] = "validation";
        ordered_json v = ordered_json::array();
        for (const auto& x : e.report.violations)
            v.push_back({{"code", x.code}, {"where", x.where}, {"detail", x.detail}});
        j["violations"] = v;
        err << j.dump(2) << "\n";
        return input_error;
    } catch (const pdg::UnsupportedError& e) {
        diagnose(err, "unsupported", e.what());
        return unsupported;
    } catch (const pdg::SizeError& e) {
        diagnose(err, "unsupported", e.what());
        return unsupported;
    } catch (const pdg::SolverError& e) {
        diagnose(err, "solver", e.what());
        return solver_failure;
    } catch (const pdg::ImprobableEventError& e) {
        ordered_json j;
        j["error"] = "conditioning-on-improbable-event";
        j["message"] = e.what();
        j["upper_bound"] = num(e.upper_bound);
        err << j.dump(2) << "\n";
        return input_error;
    } catch (const std::exception& e) {
        // format, domain, decomposition and argument errors
        diagnose(err, "input", e.what());
        return input_error;
    }
    return input_error;
}

}  // namespace pdgcli
