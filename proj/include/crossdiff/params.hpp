#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>

#include "crossdiff/error.hpp"
#include "crossdiff/mat2.hpp"

namespace crossdiff {

/// Coefficient quadruple (a, b, c, d) of the system
///   f_t = div(f grad(a f + b g)),  g_t = div(g grad(c f + d g)).
/// Construction enforces positivity and the ellipticity condition ad > bc.
class Params {
public:
    Params(double a, double b, double c, double d) : a_(a), b_(b), c_(c), d_(d) {
        if (!(std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && std::isfinite(d))) {
            throw InvalidInput("coefficients must be finite");
        }
        if (!(a > 0.0 && b > 0.0 && c > 0.0 && d > 0.0)) {
            std::ostringstream os;
            os << "coefficients must be positive (a=" << a << ", b=" << b << ", c=" << c << ", d=" << d << ")";
            throw InvalidInput(os.str());
        }
        if (!(a * d > b * c)) {
            std::ostringstream os;
            os << "condition ad > bc violated (ad=" << a * d << ", bc=" << b * c << ")";
            throw InvalidInput(os.str());
        }
    }

    /// Thin film Muskat system: (1+R, R, mu R, mu R).
    static Params muskat(double R, double mu) {
        if (!(R > 0.0 && mu > 0.0)) {
            throw InvalidInput("muskat preset requires R > 0 and mu > 0");
        }
        return Params(1.0 + R, R, mu * R, mu * R);
    }

    double a() const { return a_; }
    double b() const { return b_; }
    double c() const { return c_; }
    double d() const { return d_; }

    double ellipticity() const { return a_ * d_ - b_ * c_; }
    double max_coefficient() const { return std::max({a_, b_, c_, d_}); }

    /// Pressure coupling [[a, b], [c, d]]: row k maps grad u to the driving gradient of component k.
    Mat2 coupling() const { return {a_, b_, c_, d_}; }
    Vec2 coupling_row(int k) const { return k == 0 ? Vec2{a_, b_} : Vec2{c_, d_}; }

    /// (d/b) max{a,b} / min{c,d}: growth factor of ||f + g||_inf.
    double linf_growth_bound() const { return (d_ / b_) * std::max(a_, b_) / std::min(c_, d_); }

    friend bool operator==(const Params&, const Params&) = default;

private:
    double a_;
    double b_;
    double c_;
    double d_;
};

}  // namespace crossdiff
