#pragma once

#include <cmath>
#include <stdexcept>

namespace potts {

// A probability measure on the q colors that is constant off color 1:
// nu(1) = a and nu(k) = (1-a)/(q-1) for every k >= 2.  Every Bethe fixed
// point reached from the uniform or the all-one start has this form, so a
// single scalar a carries the whole state of the analytic layer.
//
// Two reparametrizations are used everywhere:
//   r = log((q-1) a / (1-a)),  the log-likelihood-ratio coordinate;
//   b = (q a - 1)/(q - 1),     the correlation/message coordinate in
//                              [-1/(q-1), 1], b = 0 at uniform, b = 1 at
//                              the Dirac measure on color 1.
struct SymmetricMeasure {
    double a = 0.5;  // mass at color 1
    int q = 2;

    SymmetricMeasure() = default;
    SymmetricMeasure(double a_, int q_) : a(a_), q(q_) {
        if (q < 2) throw std::invalid_argument("SymmetricMeasure: q must be >= 2");
        if (!(a >= 0.0 && a <= 1.0))
            throw std::invalid_argument("SymmetricMeasure: a must lie in [0,1]");
    }

    // Mass at any color k >= 2.
    double off() const { return (1.0 - a) / (q - 1); }

    // Mass at color k (0-based: color 0 is the field-favored color).
    double mass(int color0based) const { return color0based == 0 ? a : off(); }

    double r() const { return std::log((q - 1) * a) - std::log1p(-a); }

    double b() const { return (q * a - 1.0) / (q - 1); }

    static SymmetricMeasure uniform(int q) { return SymmetricMeasure(1.0 / q, q); }

    static SymmetricMeasure dirac1(int q) { return SymmetricMeasure(1.0, q); }

    // Inverse of r(): a = e^r / (e^r + q - 1), evaluated stably on both tails.
    static SymmetricMeasure from_r(double r, int q) {
        double a;
        if (r >= 0.0) {
            a = 1.0 / (1.0 + (q - 1) * std::exp(-r));
        } else {
            double t = std::exp(r);
            a = t / (t + (q - 1));
        }
        return SymmetricMeasure(a, q);
    }

    // Inverse of b().
    static SymmetricMeasure from_b(double b, int q) {
        return SymmetricMeasure((b * (q - 1) + 1.0) / q, q);
    }

    // Sup-norm distance to another measure on the same color space.
    double dist_inf(const SymmetricMeasure& o) const {
        double da = std::abs(a - o.a);
        double dc = std::abs(off() - o.off());
        return da > dc ? da : dc;
    }
};

}  // namespace potts
