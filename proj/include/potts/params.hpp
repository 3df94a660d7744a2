#pragma once

#include <cmath>
#include <stdexcept>

namespace potts {

// Model parameters for the q-color ferromagnetic Potts model with coupling
// beta and an external field B favoring color 1, on d-regular structures.
//
// The random-cluster representation opens a regular edge with probability
// p_edge = 1 - e^{-beta} and a ghost edge (vertex to the field vertex) with
// probability p_ghost = 1 - e^{-B}.  gamma = (e^beta - 1)/(e^beta + q - 1)
// is the single-edge connectivity of the free chain and shows up throughout
// the message functionals.
struct Params {
    int q = 2;          // number of colors, >= 2
    int d = 3;          // degree, >= 3
    double beta = 0.0;  // ferromagnetic coupling, >= 0
    double B = 0.0;     // external field on color 1, >= 0

    Params() = default;
    Params(int q_, int d_, double beta_, double B_) : q(q_), d(d_), beta(beta_), B(B_) {
        validate();
    }

    void validate() const {
        if (q < 2) throw std::invalid_argument("Params: q must be >= 2");
        if (d < 3) throw std::invalid_argument("Params: d must be >= 3");
        if (!(beta >= 0.0)) throw std::invalid_argument("Params: beta must be >= 0");
        if (!(B >= 0.0)) throw std::invalid_argument("Params: B must be >= 0");
    }

    // 1 - e^{-beta}, the conditional open probability of an agreeing edge.
    double p_edge() const { return -std::expm1(-beta); }

    // 1 - e^{-B}, the conditional open probability of a ghost edge at color 1.
    double p_ghost() const { return -std::expm1(-B); }

    // (e^beta - 1) / (e^beta + q - 1), in [0, 1).
    double gamma() const { return std::expm1(beta) / (std::exp(beta) + q - 1); }

    Params with_beta(double b) const { return Params(q, d, b, B); }
    Params with_B(double b) const { return Params(q, d, beta, b); }
};

}  // namespace potts
