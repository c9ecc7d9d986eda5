#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <unistd.h>

#include <gausskern/commands.hpp>
#include <gausskern/config.hpp>
#include <gausskern/dump.hpp>
#include <gausskern/solver.hpp>

using namespace gausskern;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = "N = 1\nnuclei = [{pos = [0, 0, 0], Z = 2}]\n";

fs::path scratch(const std::string& name)
{
    fs::path p = fs::temp_directory_path() / ("gausskern_cli_" + std::to_string(::getpid())) / name;
    fs::create_directories(p.parent_path());
    return p;
}

fs::path write_config(const std::string& name, const std::string& text)
{
    fs::path p = scratch(name);
    std::ofstream(p) << text;
    return p;
}

struct Run {
    int code;
    std::string out, err;
};

Run run(const std::vector<std::string>& args)
{
    std::ostringstream o, e;
    int c = dispatch(args, o, e);
    return {c, o.str(), e.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void check_suffixes(const nlohmann::json& j, const std::set<std::string>& measured, const std::string& path)
{
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.value().is_number()) continue;
        const std::string& k = it.key();
        bool bound = k.size() > 6 && k.compare(k.size() - 6, 6, "_bound") == 0;
        INFO(path << "." << k);
        CHECK((bound || measured.count(k)));
    }
}

} // namespace

TEST_CASE("config parsing")
{
    SUBCASE("minimal file gets defaults")
    {
        RunConfig c = parse_config_string(kMinimal);
        CHECK(c.system.n_electrons == 1);
        REQUIRE(c.system.nuclei.size() == 1);
        CHECK(c.system.nuclei[0].charge == 2.0);
        CHECK_FALSE(c.gamma_given);
        CHECK(c.op.gamma == select_gamma(c.op, c.system, c.solver.order).gamma);
        CHECK(c.op.gamma > 0);
        CHECK(c.eigen.mu == 0);
        CHECK(c.solver.epsilon == 1e-2);
    }
    SUBCASE("sectioned form and explicit fields")
    {
        RunConfig c = parse_config_string("seed = 5\n[system]\nN = 2\n[[system.nuclei]]\npos = [0.0, 0.0, 0.7]\nZ = 1\n"
                                          "[[system.nuclei]]\npos = [0.0, 0.0, -0.7]\nZ = 1\n"
                                          "[operator]\ngamma = 1e-3\nh = 0.25\n[solver]\nepsilon = 1e-3\norder = 2\n"
                                          "[eigen]\nvariant = \"residual\"\nmax_iter = 4\n[output]\ndir = \"x\"\n");
        CHECK(c.system.n_electrons == 2);
        CHECK(c.system.nuclei.size() == 2);
        CHECK(c.system.nuclei[1].position(2) == -0.7);
        CHECK(c.gamma_given);
        CHECK(c.op.gamma == 1e-3);
        CHECK(c.op.h == 0.25);
        CHECK(c.solver.order == 2);
        CHECK(c.eigen.variant == InvitVariant::residual);
        CHECK(c.eigen.max_iter == 4);
        CHECK(c.output_dir == "x");
        CHECK(c.seed == 5);
    }
    SUBCASE("gamma out of range")
    {
        try {
            parse_config_string(std::string(kMinimal) + "[operator]\ngamma = 1.5\n", "cfg.toml");
            FAIL("accepted gamma = 1.5");
        } catch (const ConfigError& e) {
            std::string m = e.what();
            CHECK(m.find("gamma must lie in (0,1)") != std::string::npos);
            CHECK(m.find("cfg.toml:4") != std::string::npos);
            CHECK(m.find("operator.gamma") != std::string::npos);
        }
    }
    SUBCASE("shift below theta^2/4")
    {
        // theta = 4 at Z = 2, so theta^2/8 = 2
        try {
            parse_config_string(std::string(kMinimal) + "[eigen]\nmu = 2.0\n");
            FAIL("accepted mu = theta^2/8");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("mu > theta^2/4") != std::string::npos);
        }
        CHECK_THROWS_AS(parse_config_string(std::string(kMinimal) + "[eigen]\nmu = 32.0\n"), ConfigError);
        CHECK_NOTHROW(parse_config_string(std::string(kMinimal) + "[eigen]\nmu = 36.0\n"));
    }
    SUBCASE("schema violations name the field")
    {
        auto msg = [](const std::string& text) {
            try {
                parse_config_string(text);
            } catch (const ConfigError& e) {
                return std::string(e.what());
            }
            return std::string();
        };
        CHECK(msg(std::string(kMinimal) + "[solver]\nepsilonn = 1\n").find("solver.epsilonn: unknown field") !=
              std::string::npos);
        CHECK(msg(std::string(kMinimal) + "[solver]\nepsilon = \"small\"\n").find("solver.epsilon: expected a number") !=
              std::string::npos);
        CHECK(msg("N = 1\n").find("at least one nucleus") != std::string::npos);
        CHECK(msg("N = 1\nnuclei = [{pos = [0, 0], Z = 1}]\n").find("nuclei[0].pos") != std::string::npos);
        CHECK(msg("N = 1\nnuclei = [{pos = [0, 0, 0], Z = -1}]\n").find("nuclei[0].Z") != std::string::npos);
        CHECK(msg(std::string(kMinimal) + "[eigen]\nvariant = \"other\"\n").find("eigen.variant") != std::string::npos);
        CHECK(msg("N = = 1\n").find(":1:") != std::string::npos);
    }
    SUBCASE("missing file")
    {
        CHECK_THROWS_AS(parse_config((scratch("absent.toml")).string()), ConfigError);
    }
}

TEST_CASE("dispatch exit codes")
{
    CHECK(run({}).code == exit_usage);
    Run u = run({"frobnicate"});
    CHECK(u.code == exit_usage);
    CHECK(u.err.find("unknown subcommand") != std::string::npos);
    CHECK(u.err.find("Usage") != std::string::npos);
    CHECK(run({"constants"}).code == exit_usage);
    CHECK(run({"constants", "--config", scratch("absent.toml").string()}).code == exit_usage);
    CHECK(run({"expsum-table", "--beta", "0.7", "--h", "0.5"}).code == exit_usage);

    auto nc = write_config("nc.toml", std::string(kMinimal) + "[operator]\ngamma = 0.5\n");
    Run s = run({"solve", "--config", nc.string(), "--out", scratch("nc_out").string()});
    CHECK(s.code == exit_failure);
    CHECK(s.err.find("operator_bound = ") != std::string::npos);

    auto bad = write_config("bad.toml", std::string(kMinimal) + "[operator]\ngamma = 1.5\n");
    Run b = run({"constants", "--config", bad.string()});
    CHECK(b.code == exit_usage);
    CHECK(b.err.find("gamma must lie in (0,1)") != std::string::npos);
}

TEST_CASE("expsum-table")
{
    Run r = run({"expsum-table", "--beta", "1", "--h", "0.25", "--rmin", "1e-3", "--rmax", "1e3", "--grid", "1000"});
    REQUIRE(r.code == exit_ok);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("# beta=1 h=0.25 epsilon_bound=", 0) == 0);
    std::getline(in, line);
    CHECK(line == "r,exact,approx,rel_error");
    int rows = 0;
    double worst = 0;
    while (std::getline(in, line)) {
        double cols[4];
        char c;
        std::istringstream ls(line);
        ls >> cols[0] >> c >> cols[1] >> c >> cols[2] >> c >> cols[3];
        CHECK(cols[3] == doctest::Approx((cols[2] - cols[1]) / cols[1]).epsilon(1e-6));
        worst = std::max(worst, std::abs(cols[3]));
        ++rows;
    }
    CHECK(rows == 1000);
    CHECK(worst <= 1e-13);
}

TEST_CASE("constants report")
{
    auto cfg = write_config("min.toml", kMinimal);
    Run r = run({"constants", "--config", cfg.string()});
    REQUIRE(r.code == exit_ok);
    auto j = nlohmann::json::parse(r.out);
    for (const char* k : {"theta", "kappa", "kappa_star", "alpha", "q", "operator_bound", "M", "admissible"})
        CHECK(j.contains(k));
    CHECK(j["theta"].get<double>() == 4.0);
    CHECK(j["M"].get<int>() == 4);
    CHECK(j["admissible"].get<bool>());
    CHECK(j["gamma_source"] == "select_gamma");
}

TEST_CASE("solve writes the solution and report")
{
    auto cfg = write_config("solve.toml", kMinimal);
    fs::path out = scratch("solve_out");
    Run r = run({"solve", "--config", cfg.string(), "--epsilon", "1e-3", "--order", "2", "--out", out.string()});
    REQUIRE(r.code == exit_ok);
    Expansion u = load_expansion((out / "solution.jsonl").string());
    CHECK(u.size() >= 1);
    auto j = nlohmann::json::parse(slurp(out / "report.json"));
    CHECK(j["epsilon"].get<double>() == 1e-3);
    CHECK(j["order"].get<double>() == 2);
    CHECK(j["term_count"].get<int>() == static_cast<int>(u.size()));
    CHECK(j["term_count"].get<double>() <= j["count_bound"].get<double>());
    CHECK(j["residual_norm"].get<double>() <= 1e-3 + j["residual_slack_bound"].get<double>());
    CHECK(j["levels"].size() == static_cast<std::size_t>(j["levels_used"].get<int>()));
    check_suffixes(j["certificate"], {}, "certificate");
    for (const auto& l : j["levels"]) check_suffixes(l, {"nu", "eps_nu", "terms"}, "levels");
    check_suffixes(j,
                   {"epsilon", "order", "gamma", "h", "kappa", "alpha", "delta", "q1", "q2", "term_count", "levels_used",
                    "residual_norm", "residual_prune_budget", "residual_units", "residual_units_kept",
                    "residual_terms", "operator_bound"},
                   "report");

    // a second run reproduces every byte
    fs::path out2 = scratch("solve_out2");
    REQUIRE(run({"solve", "--config", cfg.string(), "--epsilon", "1e-3", "--order", "2", "--out", out2.string()}).code ==
            exit_ok);
    CHECK(slurp(out / "report.json") == slurp(out2 / "report.json"));
    CHECK(slurp(out / "solution.jsonl") == slurp(out2 / "solution.jsonl"));
}

TEST_CASE("solve reads a right-hand side dump")
{
    Expansion f(1);
    Vec c(3);
    c << 0.1, 0, 0;
    f.push_back(make_gaussian(0.5, c, Prec::identity(1, 2.0)));
    save_expansion(scratch("rhs.jsonl").string(), f);
    auto cfg = write_config("rhs.toml", std::string(kMinimal) + "[solver]\nrhs = \"rhs.jsonl\"\n");
    fs::path out = scratch("rhs_out");
    REQUIRE(run({"solve", "--config", cfg.string(), "--out", out.string()}).code == exit_ok);
    Expansion u = load_expansion((out / "solution.jsonl").string());
    REQUIRE(u.size() == 1);
    CHECK(u[0].coeff == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("eigen writes history, dump and convergence table")
{
    auto cfg = write_config("eigen.toml", std::string(kMinimal) + "[eigen]\nmu = 36.0\n");
    fs::path out = scratch("eigen_out");
    Run r = run({"eigen", "--config", cfg.string(), "--variant", "residual", "--max-iter", "3", "--out", out.string()});
    REQUIRE(r.code == exit_ok);
    auto j = nlohmann::json::parse(slurp(out / "history.json"));
    CHECK(j["variant"] == "residual");
    CHECK(j["mu"].get<double>() == 36.0);
    CHECK(j["steps"].get<int>() == 3);
    CHECK(j["monotone"].get<bool>());
    REQUIRE(j["records"].size() == 4);
    for (std::size_t k = 1; k < j["records"].size(); ++k)
        CHECK(j["records"][k]["rayleigh"].get<double>() < j["records"][k - 1]["rayleigh"].get<double>());
    std::istringstream csv(slurp(out / "convergence.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "iter,rayleigh,residual_norm,terms");
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 4);
    Expansion u = load_expansion((out / "eigenfunction.jsonl").string());
    CHECK(sobolev_norm(u, 0) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("validate reports are byte-identical for a fixed seed")
{
    Run a = run({"--threads", "1", "validate", "--suite", "all", "--seed", "7"});
    Run b = run({"--threads", "2", "validate", "--suite", "all", "--seed", "7"});
    CHECK(a.code == exit_ok);
    CHECK(b.code == exit_ok);
    CHECK(a.out == b.out);
    auto j = nlohmann::json::parse(a.out);
    CHECK(j["pass"].get<bool>());
    CHECK(j["suites"].size() == 4);
    CHECK(a.out.find("seconds") == std::string::npos);
    Run c = run({"validate", "--suite", "expsum", "--seed", "8"});
    CHECK(c.code == exit_ok);
    CHECK(nlohmann::json::parse(c.out)["suites"].size() == 1);
}
