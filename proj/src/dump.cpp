#include <gausskern/dump.hpp>

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace gausskern {

using json = nlohmann::ordered_json;

std::string term_to_json(const Term& t)
{
    json j;
    j["coeff"] = t.coeff;
    j["center"] = std::vector<double>(t.center.data(), t.center.data() + t.center.size());
    const Mat& m = t.precision.matrix();
    std::vector<double> lower;
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c <= r; ++c) lower.push_back(m(r, c));
    j["precision"] = {{"structured", t.precision.is_structured()}, {"lower", lower}};
    json poly = json::array();
    for (auto& [a, c] : t.poly.terms()) {
        std::vector<int> mi(a.begin(), a.end());
        poly.push_back({{"multi_index", mi}, {"coeff", c}});
    }
    j["poly"] = poly;
    return j.dump();
}

Term term_from_json(const std::string& line)
{
    json j = json::parse(line);
    Term t;
    t.coeff = j.at("coeff").get<double>();
    auto c = j.at("center").get<std::vector<double>>();
    t.center = Eigen::Map<Vec>(c.data(), static_cast<Eigen::Index>(c.size()));
    bool structured = j.at("precision").at("structured").get<bool>();
    auto lower = j.at("precision").at("lower").get<std::vector<double>>();
    int n = structured ? static_cast<int>(c.size()) / 3 : static_cast<int>(c.size());
    if (static_cast<int>(lower.size()) != n * (n + 1) / 2) throw std::invalid_argument("precision size mismatch");
    Mat m(n, n);
    std::size_t k = 0;
    for (int r = 0; r < n; ++r)
        for (int cc = 0; cc <= r; ++cc) m(r, cc) = m(cc, r) = lower[k++];
    t.precision = structured ? Prec::structured(m) : Prec::dense(m);
    int d = static_cast<int>(c.size());
    t.poly = Poly<double>(d);
    for (auto& p : j.at("poly")) {
        auto mi = p.at("multi_index").get<std::vector<int>>();
        if (static_cast<int>(mi.size()) != d) throw std::invalid_argument("multi-index length mismatch");
        t.poly.add(MultiIndex(mi.begin(), mi.end()), p.at("coeff").get<double>());
    }
    return t;
}

void write_expansion(std::ostream& os, const Expansion& e)
{
    for (auto& t : e.terms()) os << term_to_json(t) << '\n';
}

Expansion read_expansion(std::istream& is, int degree_cap)
{
    std::string line;
    std::vector<Term> terms;
    while (std::getline(is, line))
        if (!line.empty()) terms.push_back(term_from_json(line));
    int n = terms.empty() ? 1 : terms.front().dim() / 3;
    Expansion e(n, degree_cap);
    for (auto& t : terms) e.push_back(std::move(t));
    return e;
}

void save_expansion(const std::string& path, const Expansion& e)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    write_expansion(os, e);
}

Expansion load_expansion(const std::string& path, int degree_cap)
{
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    return read_expansion(is, degree_cap);
}

} // namespace gausskern
