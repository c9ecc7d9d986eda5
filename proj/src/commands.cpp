#include <gausskern/commands.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include <gausskern/dump.hpp>
#include <gausskern/errors.hpp>
#include <gausskern/expsum.hpp>
#include <gausskern/parallel.hpp>
#include <gausskern/validate.hpp>

namespace gausskern {

namespace {

using nlohmann::ordered_json;

std::string g17(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

ordered_json system_json(const MolecularSystem& s)
{
    ordered_json j;
    j["N"] = s.n_electrons;
    j["nuclei"] = ordered_json::array();
    for (const auto& n : s.nuclei)
        j["nuclei"].push_back({{"pos", {n.position(0), n.position(1), n.position(2)}}, {"Z", n.charge}});
    return j;
}

void write_file(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
}

std::filesystem::path prepare_dir(const std::string& dir)
{
    std::filesystem::path p(dir);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace

std::string constants_json(const RunConfig& cfg)
{
    ContractionEstimate c = contraction_constants(cfg.op, cfg.system);
    double bound = alpha_admissible_bound(cfg.op, cfg.system, cfg.solver.order);
    ordered_json j;
    j["system"] = system_json(cfg.system);
    j["gamma"] = cfg.op.gamma;
    j["gamma_source"] = cfg.gamma_given ? "config" : "select_gamma";
    j["h"] = cfg.op.h;
    j["lambda"] = cfg.op.lambda;
    j["vartheta"] = cfg.op.vartheta;
    j["order"] = cfg.solver.order;
    j["theta"] = c.theta;
    j["kappa"] = c.kappa;
    j["kappa_star"] = c.kappa_star;
    j["alpha"] = c.alpha;
    j["q"] = c.q;
    j["M"] = c.M;
    j["operator_bound"] = c.operator_bound;
    j["alpha_admissible_bound"] = bound;
    j["contractive"] = c.contractive;
    j["admissible"] = c.alpha <= bound;
    return j.dump(2) + "\n";
}

std::string solve_report_json(const SolveReport& r, const RunConfig& cfg)
{
    ordered_json j;
    j["system"] = system_json(cfg.system);
    j["epsilon"] = r.epsilon;
    j["order"] = r.r;
    j["gamma"] = r.gamma;
    j["gamma_source"] = cfg.gamma_given ? "config" : "select_gamma";
    j["h"] = cfg.op.h;
    j["kappa"] = r.kappa;
    j["alpha"] = r.alpha;
    j["alpha_admissible_bound"] = r.alpha_bound;
    j["admissible"] = r.admissible;
    j["operator_bound"] = r.operator_bound;
    j["delta"] = r.delta;
    j["q1"] = r.q1;
    j["q2"] = r.q2;
    j["term_count"] = r.term_count;
    j["count_bound"] = r.count_bound;
    j["count_bound_holds"] = r.count_bound_holds;
    j["levels_used"] = r.levels_used;
    j["series_tail_bound"] = r.series_tail_bound;
    j["residual_norm"] = r.residual.norm;
    j["residual_slack_bound"] = r.residual.slack_bound;
    j["residual_prune_budget"] = r.residual.budget;
    j["residual_units"] = r.residual.units;
    j["residual_units_kept"] = r.residual.units_kept;
    j["residual_terms"] = r.residual.measured_terms;
    j["residual_k_range"] = {r.residual.k_range.lo, r.residual.k_range.hi};
    const auto& c = r.certificate;
    j["certificate"] = {{"eps_V_bound", c.eps_V},
                        {"eps_G_bound", c.eps_G},
                        {"eps_bound", c.eps},
                        {"delta_op_bound", c.delta_op},
                        {"operator_bound", c.operator_bound},
                        {"solution_gap_bound", c.solution_gap_bound},
                        {"smoothing_gap_bound", c.smoothing_gap},
                        {"gap_figure_bound", c.gap_figure}};
    j["levels"] = ordered_json::array();
    for (const auto& l : r.levels)
        j["levels"].push_back({{"nu", l.nu},
                               {"eps_nu", l.eps_nu},
                               {"terms", l.terms},
                               {"count_bound", l.count_bound},
                               {"truncation_error_bound", l.truncation_error_bound}});
    if (!r.note.empty()) j["note"] = r.note;
    return j.dump(2) + "\n";
}

std::string history_json(const InvitResult& r, const RunConfig& cfg)
{
    const IterationHistory& h = r.history;
    ordered_json j;
    j["system"] = system_json(cfg.system);
    j["variant"] = to_string(cfg.eigen.variant);
    j["mu"] = h.mu;
    j["eta"] = h.eta;
    j["delta_tol"] = cfg.eigen.delta_tol;
    j["h"] = cfg.eigen.h;
    j["preconditioner_accuracy_bound"] = h.preconditioner_accuracy;
    j["potential_slack_bound"] = h.potential_slack_bound;
    j["eigenvalue"] = r.eigenvalue;
    j["steps"] = h.records.empty() ? 0 : h.records.back().iter;
    j["monotone"] = h.monotone;
    j["rate_checked"] = h.rate_checked;
    j["rate_ok"] = h.rate_ok;
    j["converged"] = h.converged;
    j["stop_reason"] = h.stop_reason;
    j["records"] = ordered_json::array();
    for (const auto& x : h.records) {
        ordered_json e;
        e["iter"] = x.iter;
        e["rayleigh"] = x.rayleigh;
        e["rayleigh_shifted"] = x.rayleigh_shifted;
        e["terms"] = x.term_count;
        e["residual_norm"] = x.residual_norm;
        e["update_norm"] = x.update_norm;
        if (h.rate_checked) {
            e["ratio"] = x.measured_ratio;
            e["rate_bound"] = x.rate_bound;
            e["rate_ok"] = x.rate_ok;
        }
        j["records"].push_back(e);
    }
    return j.dump(2) + "\n";
}

std::string convergence_csv(const IterationHistory& h)
{
    std::ostringstream os;
    os << "iter,rayleigh,residual_norm,terms\n";
    for (const auto& x : h.records)
        os << x.iter << "," << g17(x.rayleigh) << "," << g17(x.residual_norm) << "," << x.term_count << "\n";
    return os.str();
}

std::string expsum_table_csv(double beta, double h, double r_min, double r_max, int grid)
{
    if (grid < 1) throw std::invalid_argument("grid must be at least 1");
    ExpSumParams<double> p;
    p.beta = beta;
    p.h = h;
    p.r_min = r_min;
    p.r_max = r_max;
    ExpSum<double> e = build_exp_sum(p, ExpSumForm::exponential);
    std::ostringstream os;
    os << "# beta=" << g17(beta) << " h=" << g17(h) << " epsilon_bound=" << g17(error_bound(beta, h))
       << " terms=" << e.terms.size() << "\n";
    os << "r,exact,approx,rel_error\n";
    for (double r : log_grid(r_min, r_max, grid)) {
        double ex = e.exact(r), ap = e(r);
        os << g17(r) << "," << g17(ex) << "," << g17(ap) << "," << g17((ap - ex) / ex) << "\n";
    }
    return os.str();
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Gaussian-expansion solvers for the electronic Schroedinger equation", "gausskern"};
    app.require_subcommand(1);
    int threads = -1;
    app.add_option("--threads", threads, "worker threads (0 = auto; default from GAUSSKERN_THREADS)")
        ->check(CLI::NonNegativeNumber);

    double beta = 1, h = 0.5, rmin = 1e-3, rmax = 1e3;
    int grid = 1000;
    auto* tab = app.add_subcommand("expsum-table", "tabulate the exponential sum for r^-beta");
    tab->set_help_flag("--help", "print this help message and exit");
    tab->add_option("--beta", beta, "exponent, 0.5 or 1")->required()->check(CLI::IsMember({0.5, 1.0}));
    tab->add_option("--h", h, "step size")->required()->check(CLI::PositiveNumber);
    tab->add_option("--rmin", rmin, "smallest r")->check(CLI::PositiveNumber);
    tab->add_option("--rmax", rmax, "largest r")->check(CLI::PositiveNumber);
    tab->add_option("--grid", grid, "log-spaced points")->check(CLI::PositiveNumber);

    std::string config;
    auto* cons = app.add_subcommand("constants", "print contraction constants as JSON");
    cons->add_option("--config", config, "TOML config")->required();

    std::optional<double> epsilon, order;
    std::string out_dir;
    auto* solve = app.add_subcommand("solve", "scheduled Neumann-series solve");
    solve->add_option("--config", config, "TOML config")->required();
    solve->add_option("--epsilon", epsilon, "target accuracy (overrides solver.epsilon)");
    solve->add_option("--order", order, "approximation order r (overrides solver.order)");
    solve->add_option("--out", out_dir, "output directory (overrides output.dir)");

    std::string variant;
    std::optional<int> max_iter;
    auto* eig = app.add_subcommand("eigen", "approximate inverse iteration");
    eig->add_option("--config", config, "TOML config")->required();
    eig->add_option("--variant", variant, "potential or residual")->check(CLI::IsMember({"potential", "residual"}));
    eig->add_option("--max-iter", max_iter, "iteration cap (overrides eigen.max_iter)")
        ->check(CLI::NonNegativeNumber);
    eig->add_option("--out", out_dir, "output directory (overrides output.dir)");

    std::string suite = "all";
    std::uint64_t seed = 0;
    std::string report_path;
    auto* val = app.add_subcommand("validate", "randomized oracle suites, JSON report");
    val->add_option("--suite", suite, "expsum, algebra, lemmas, kfunctional or all")
        ->check(CLI::IsMember({"expsum", "algebra", "lemmas", "kfunctional", "all"}));
    val->add_option("--seed", seed, "seed");
    val->add_option("--out", report_path, "also write the report to this file");

    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a == "--threads") {
            ++i;
            continue;
        }
        if (a.empty() || a[0] == '-') continue;
        auto subs = app.get_subcommands([&](const CLI::App* c) { return c->check_name(a); });
        if (subs.empty()) {
            err << "unknown subcommand '" << a << "'\n" << app.help();
            return exit_usage;
        }
        break;
    }

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        if (e.get_name() != "RequiredError" || app.get_subcommands().empty()) err << app.help();
        return exit_usage;
    }

    try {
        if (threads >= 0) set_threads(threads);

        if (*tab) {
            out << expsum_table_csv(beta, h, rmin, rmax, grid);
            return exit_ok;
        }
        if (*val) {
            ValidationReport rep = run_validation(suite, seed);
            std::string j = to_json(rep);
            out << j;
            if (!report_path.empty()) write_file(report_path, j);
            return rep.pass() ? exit_ok : exit_failure;
        }

        RunConfig rc = parse_config(config);
        if (*cons) {
            out << constants_json(rc);
            return exit_ok;
        }
        if (!out_dir.empty()) rc.output_dir = out_dir;

        if (*solve) {
            if (epsilon) rc.solver.epsilon = *epsilon;
            if (order) rc.solver.order = *order;
            if (!(rc.solver.epsilon > 0)) throw ConfigError("--epsilon: epsilon must be positive");
            if (!(rc.solver.order > 0)) throw ConfigError("--order: order must be positive");
            finalize_config(rc);
            Expansion f = rc.solver.rhs_path.empty() ? initial_guess(rc.system, rc.solver.rhs_precision)
                                                     : load_expansion(rc.solver.rhs_path);
            if (f.dim() != 3 * rc.system.n_electrons)
                throw ConfigError(rc.solver.rhs_path + ": right-hand side dimension does not match 3N");
            SolveOptions opt;
            opt.delta_override = rc.solver.delta_override;
            opt.require_admissible = rc.solver.require_admissible;
            opt.max_levels = rc.solver.max_levels;
            opt.residual_budget_fraction = rc.solver.residual_budget_fraction;
            opt.measure_residual = rc.solver.measure_residual;
            SolveResult res = neumann_solve(f, rc.op, rc.system, rc.solver.epsilon, rc.solver.order, opt);
            auto dir = prepare_dir(rc.output_dir);
            save_expansion((dir / "solution.jsonl").string(), res.u);
            write_file(dir / "report.json", solve_report_json(res.report, rc));
            out << "terms " << res.report.term_count << " count_bound " << g17(res.report.count_bound)
                << " residual_norm " << g17(res.report.residual.norm) << "\n";
            return exit_ok;
        }

        if (*eig) {
            if (!variant.empty()) rc.eigen.variant = parse_variant(variant);
            if (max_iter) rc.eigen.max_iter = *max_iter;
            finalize_config(rc);
            Expansion u0 = initial_guess(rc.system, rc.eigen.init_precision);
            InvitResult res = run_inverse_iteration(rc.system, u0, rc.eigen);
            auto dir = prepare_dir(rc.output_dir);
            write_file(dir / "history.json", history_json(res, rc));
            save_expansion((dir / "eigenfunction.jsonl").string(), res.u);
            write_file(dir / "convergence.csv", convergence_csv(res.history));
            out << "eigenvalue " << g17(res.eigenvalue) << " steps "
                << (res.history.records.empty() ? 0 : res.history.records.back().iter) << " stop "
                << res.history.stop_reason << "\n";
            return exit_ok;
        }
    } catch (const ComputationError& e) {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    }
    err << app.help();
    return exit_usage;
}

int dispatch(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return dispatch(args, std::cout, std::cerr);
}

} // namespace gausskern
