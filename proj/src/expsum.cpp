#include <gausskern/expsum.hpp>

#include <algorithm>
#include <sstream>

namespace gausskern {

template struct ExpSum<double>;

double phi_sum(double beta, double h, double s, const KRange& kr)
{
    double g = std::tgamma(beta);
    double sum = 0;
    for (int k = kr.lo; k <= kr.hi; ++k) {
        double x = std::fma(static_cast<double>(k), h, s);
        sum += h * std::exp(beta * x - std::exp(x)) / g;
    }
    return sum;
}

PhiReport validate_phi(double beta, double h, const std::vector<double>& s_grid, double tail_tol)
{
    check_beta(beta);
    if (!(h > 0)) throw std::invalid_argument("h must be positive");
    PhiReport rep;
    rep.bound = error_bound(beta, h);
    rep.tolerance = std::max(rep.bound + tail_tol, kMeasuredFloor);
    // r = e^s over [e^{-h}, e^{3h}] covers s and s + h for s in [0, h]
    KRange kr = exp_sum_range(beta, h, std::exp(-h), std::exp(3 * h), tail_tol);
    kr.lo -= 2;
    kr.hi += 2;
    const double eps = std::numeric_limits<double>::epsilon();
    for (std::size_t i = 0; i < s_grid.size(); ++i) {
        double s = s_grid[i];
        if (s < 0 || s > h) throw std::invalid_argument("s_grid must lie in [0, h]");
        double p = phi_sum(beta, h, s, kr);
        double p2 = phi_sum(beta, h, s + h, kr);
        double dev = std::abs(p - 1);
        double gap = std::abs(p2 - p);
        rep.s.push_back(s);
        rep.phi.push_back(p);
        rep.deviation.push_back(dev);
        rep.period_gap.push_back(gap);
        bool bad_dev = dev > rep.tolerance;
        bool bad_per = gap > 10 * eps * std::abs(p);
        if ((bad_dev || bad_per) && rep.ok) {
            rep.ok = false;
            rep.first_violation = static_cast<int>(i);
            std::ostringstream os;
            os.precision(17);
            if (bad_dev) {
                rep.excess = dev - rep.tolerance;
                os << "|phi(" << s << ") - 1| = " << dev << " exceeds " << rep.tolerance;
            } else {
                rep.excess = gap - 10 * eps * std::abs(p);
                os << "periodicity gap " << gap << " at s = " << s;
            }
            rep.message = os.str();
        }
    }
    return rep;
}

} // namespace gausskern
