#include <gausskern/config.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

namespace gausskern {

namespace {

std::string where(const std::string& source, const toml::node* n)
{
    std::ostringstream os;
    os << source;
    if (n && n->source().begin.line > 0) os << ":" << n->source().begin.line;
    return os.str();
}

// Typed access to one table with strict key checking.
class Section {
public:
    Section(const toml::table& t, std::string path, const std::string& source)
        : t_(t), path_(std::move(path)), source_(source)
    {
    }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const
    {
        const toml::node* n = key.empty() ? &t_ : t_.get(key);
        throw ConfigError(where(source_, n) + ": " + field(key) + ": " + msg);
    }

    std::string field(const std::string& key) const
    {
        if (key.empty()) return path_.empty() ? "<root>" : path_;
        return path_.empty() ? key : path_ + "." + key;
    }

    const toml::node* get(const std::string& key)
    {
        seen_.insert(key);
        return t_.get(key);
    }

    std::optional<double> number(const std::string& key)
    {
        const toml::node* n = get(key);
        if (!n) return std::nullopt;
        if (auto v = n->as_floating_point()) return v->get();
        if (auto v = n->as_integer()) return static_cast<double>(v->get());
        fail(key, "expected a number");
    }

    std::optional<std::int64_t> integer(const std::string& key)
    {
        const toml::node* n = get(key);
        if (!n) return std::nullopt;
        if (auto v = n->as_integer()) return v->get();
        fail(key, "expected an integer");
    }

    std::optional<bool> boolean(const std::string& key)
    {
        const toml::node* n = get(key);
        if (!n) return std::nullopt;
        if (auto v = n->as_boolean()) return v->get();
        fail(key, "expected a boolean");
    }

    std::optional<std::string> string(const std::string& key)
    {
        const toml::node* n = get(key);
        if (!n) return std::nullopt;
        if (auto v = n->as_string()) return v->get();
        fail(key, "expected a string");
    }

    const toml::table* table(const std::string& key)
    {
        const toml::node* n = get(key);
        if (!n) return nullptr;
        if (auto v = n->as_table()) return v;
        fail(key, "expected a table");
    }

    const toml::array* array(const std::string& key)
    {
        const toml::node* n = get(key);
        if (!n) return nullptr;
        if (auto v = n->as_array()) return v;
        fail(key, "expected an array");
    }

    void require(bool ok, const std::string& key, const std::string& msg) const
    {
        if (!ok) fail(key, msg);
    }

    void finish() const
    {
        for (auto& [k, v] : t_) {
            std::string key(k.str());
            if (!seen_.count(key)) fail(key, "unknown field");
        }
    }

    const std::string& source() const { return source_; }

private:
    const toml::table& t_;
    std::string path_;
    const std::string& source_;
    std::set<std::string> seen_;
};

template <class T>
void set_if(T& dst, const std::optional<T>& v)
{
    if (v) dst = *v;
}

void set_int(int& dst, Section& s, const std::string& key)
{
    if (auto v = s.integer(key)) {
        s.require(*v >= INT32_MIN && *v <= INT32_MAX, key, "integer out of range");
        dst = static_cast<int>(*v);
    }
}

Nucleus read_nucleus(const toml::node& n, const std::string& path, const std::string& source)
{
    const toml::table* t = n.as_table();
    if (!t) throw ConfigError(where(source, &n) + ": " + path + ": expected a table {pos, Z}");
    Section s(*t, path, source);
    Nucleus nuc;
    const toml::array* pos = s.array("pos");
    s.require(pos != nullptr, "", "missing field 'pos'");
    s.require(pos->size() == 3, "pos", "expected three coordinates");
    for (std::size_t i = 0; i < 3; ++i) {
        const toml::node* c = pos->get(i);
        if (auto f = c->as_floating_point())
            nuc.position(i) = f->get();
        else if (auto g = c->as_integer())
            nuc.position(i) = static_cast<double>(g->get());
        else
            s.fail("pos", "coordinates must be numbers");
        s.require(std::isfinite(nuc.position(i)), "pos", "coordinates must be finite");
    }
    auto Z = s.number("Z");
    s.require(Z.has_value(), "", "missing field 'Z'");
    s.require(*Z > 0, "Z", "nuclear charges must be positive");
    nuc.charge = *Z;
    s.finish();
    return nuc;
}

void read_system(Section& s, RunConfig& rc)
{
    if (auto N = s.integer("N")) {
        s.require(*N >= 1 && *N <= 64, "N", "N must be at least 1");
        rc.system.n_electrons = static_cast<int>(*N);
    }
    const toml::array* nuclei = s.array("nuclei");
    s.require(nuclei != nullptr && !nuclei->empty(), nuclei ? "nuclei" : "", "at least one nucleus is required");
    int i = 0;
    for (const toml::node& n : *nuclei)
        rc.system.nuclei.push_back(read_nucleus(n, s.field("nuclei") + "[" + std::to_string(i++) + "]", s.source()));
}

void read_operator(Section& s, RunConfig& rc)
{
    OperatorConfig& o = rc.op;
    set_if(o.lambda, s.number("lambda"));
    s.require(o.lambda < 0, "lambda", "lambda must be negative");
    if (auto g = s.number("gamma")) {
        s.require(*g > 0 && *g < 1, "gamma", "gamma must lie in (0,1)");
        o.gamma = *g;
        rc.gamma_given = true;
    }
    set_if(o.h, s.number("h"));
    s.require(o.h > 0, "h", "h must be positive");
    set_if(o.vartheta, s.number("vartheta"));
    s.require(o.vartheta > 0 && o.vartheta < 0.5, "vartheta", "vartheta must lie in (0,1/2)");
    set_int(o.k_lo, s, "k_lo");
    set_int(o.k_hi, s, "k_hi");
    set_if(o.r_min, s.number("r_min"));
    set_if(o.r_max, s.number("r_max"));
    s.require(o.r_min > 0 && o.r_max > o.r_min, "r_max", "need 0 < r_min < r_max");
    set_if(o.tail_tol, s.number("tail_tol"));
    s.require(o.tail_tol > 0, "tail_tol", "tail_tol must be positive");
}

void read_solver(Section& s, RunConfig& rc)
{
    SolverSettings& v = rc.solver;
    set_if(v.epsilon, s.number("epsilon"));
    s.require(v.epsilon > 0, "epsilon", "epsilon must be positive");
    set_if(v.order, s.number("order"));
    s.require(v.order > 0, "order", "order must be positive");
    set_if(v.residual_budget_fraction, s.number("residual_budget_fraction"));
    s.require(v.residual_budget_fraction > 0 && v.residual_budget_fraction < 1, "residual_budget_fraction",
              "residual_budget_fraction must lie in (0,1)");
    if (auto d = s.number("delta_override")) {
        s.require(*d > 0, "delta_override", "delta_override must be positive");
        v.delta_override = *d;
    }
    set_if(v.require_admissible, s.boolean("require_admissible"));
    set_int(v.max_levels, s, "max_levels");
    s.require(v.max_levels >= 1, "max_levels", "max_levels must be at least 1");
    set_if(v.measure_residual, s.boolean("measure_residual"));
    set_if(v.rhs_path, s.string("rhs"));
    set_if(v.rhs_precision, s.number("rhs_precision"));
    s.require(v.rhs_precision > 0, "rhs_precision", "rhs_precision must be positive");
}

void read_eigen(Section& s, RunConfig& rc)
{
    InverseIterationConfig& e = rc.eigen;
    set_if(e.mu, s.number("mu"));
    s.require(e.mu >= 0, "mu", "mu must be positive (or 0 for automatic)");
    if (auto v = s.string("variant")) {
        try {
            e.variant = parse_variant(*v);
        } catch (const std::invalid_argument& ex) {
            s.fail("variant", ex.what());
        }
    }
    set_if(e.delta_tol, s.number("delta_tol"));
    s.require(e.delta_tol > 0 && e.delta_tol < 1, "delta_tol", "delta_tol must lie in (0,1)");
    set_int(e.max_iter, s, "max_iter");
    s.require(e.max_iter >= 0, "max_iter", "max_iter must be nonnegative");
    set_if(e.prune_fraction, s.number("prune_fraction"));
    s.require(e.prune_fraction >= 0, "prune_fraction", "prune_fraction must be nonnegative");
    set_if(e.h, s.number("h"));
    s.require(e.h > 0, "h", "h must be positive");
    set_if(e.r_min, s.number("r_min"));
    set_if(e.r_max, s.number("r_max"));
    s.require(e.r_min > 0 && e.r_max > e.r_min, "r_max", "need 0 < r_min < r_max");
    set_if(e.tail_tol, s.number("tail_tol"));
    s.require(e.tail_tol > 0, "tail_tol", "tail_tol must be positive");
    set_if(e.tol, s.number("tol"));
    s.require(e.tol >= 0, "tol", "tol must be nonnegative");
    set_int(e.n_work, s, "n_work");
    s.require(e.n_work >= 1, "n_work", "n_work must be at least 1");
    set_if(e.dict_lo, s.number("dict_lo"));
    set_if(e.dict_hi, s.number("dict_hi"));
    set_int(e.dict_size, s, "dict_size");
    s.require(e.dict_size >= 0 && e.dict_lo > 0 && e.dict_hi >= e.dict_lo, "dict_size", "invalid dictionary range");
    set_if(e.init_precision, s.number("init_precision"));
    s.require(e.init_precision > 0, "init_precision", "init_precision must be positive");
    if (auto p = s.string("potential")) {
        if (*p == "coulomb")
            e.potential = PotentialKind::coulomb;
        else if (*p == "harmonic")
            e.potential = PotentialKind::harmonic;
        else
            s.fail("potential", "expected 'coulomb' or 'harmonic'");
    }
    if (auto l = s.number("lambda1")) e.lambda1 = *l;
    if (auto l = s.number("lambda2")) e.lambda2 = *l;
    s.require(e.lambda1.has_value() == e.lambda2.has_value(), "lambda2", "lambda1 and lambda2 go together");
    if (e.lambda1) s.require(*e.lambda1 > 0 && *e.lambda1 < *e.lambda2, "lambda2", "need 0 < lambda1 < lambda2");
    set_if(e.rate_slack, s.number("rate_slack"));
    s.require(e.rate_slack >= 0, "rate_slack", "rate_slack must be nonnegative");
    if (e.potential == PotentialKind::coulomb && e.mu > 0) {
        double th = theta_const(rc.system.n_electrons, rc.system.total_charge());
        std::ostringstream os;
        os << "mu = " << e.mu << " violates mu > theta^2/4 = " << th * th / 4;
        s.require(e.mu > th * th / 4, "mu", os.str());
    }
}

// wraps module-level checks with the section they belong to
template <class F>
void module_check(const std::string& source, const std::string& section, F&& f)
{
    try {
        f();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(source + ": " + section + ": " + e.what());
    }
}

void check_all(RunConfig& rc, const std::string& source)
{
    module_check(source, "system", [&] { rc.system.validate(); });
    if (!rc.gamma_given) {
        module_check(source, "operator.gamma", [&] {
            OperatorConfig probe = rc.op;
            probe.gamma = 0.5;
            probe.validate();
            rc.op.gamma = select_gamma(probe, rc.system, rc.solver.order).gamma;
        });
    }
    module_check(source, "operator", [&] { rc.op.validate(); });
    module_check(source, "eigen", [&] { rc.eigen.validate(rc.system); });
}

} // namespace

RunConfig parse_config_string(const std::string& text, const std::string& source)
{
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << source << ":" << e.source().begin.line << ": " << e.description();
        throw ConfigError(os.str());
    }

    RunConfig rc;
    rc.eigen.mu = 0;
    Section top(root, "", source);
    if (const toml::table* sys = top.table("system")) {
        Section s(*sys, "system", source);
        read_system(s, rc);
        s.finish();
    } else {
        // flat form: N and nuclei at the top level
        read_system(top, rc);
    }
    if (const toml::table* t = top.table("operator")) {
        Section s(*t, "operator", source);
        read_operator(s, rc);
        s.finish();
    }
    if (const toml::table* t = top.table("solver")) {
        Section s(*t, "solver", source);
        read_solver(s, rc);
        s.finish();
    }
    if (const toml::table* t = top.table("eigen")) {
        Section s(*t, "eigen", source);
        read_eigen(s, rc);
        s.finish();
    }
    if (const toml::table* t = top.table("output")) {
        Section s(*t, "output", source);
        set_if(rc.output_dir, s.string("dir"));
        s.require(!rc.output_dir.empty(), "dir", "output directory must be non-empty");
        s.finish();
    }
    if (auto seed = top.integer("seed")) {
        top.require(*seed >= 0, "seed", "seed must be nonnegative");
        rc.seed = static_cast<std::uint64_t>(*seed);
    }
    top.finish();
    check_all(rc, source);
    return rc;
}

RunConfig parse_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig rc = parse_config_string(ss.str(), path);
    std::filesystem::path rhs(rc.solver.rhs_path);
    if (!rc.solver.rhs_path.empty() && rhs.is_relative())
        rc.solver.rhs_path = (std::filesystem::path(path).parent_path() / rhs).string();
    return rc;
}

void finalize_config(RunConfig& rc)
{
    check_all(rc, "config");
}

} // namespace gausskern
