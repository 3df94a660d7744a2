#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "potts/params.hpp"
#include "potts/symmetric_measure.hpp"

namespace potts {

// Phase classification of a parameter point.  UNIQUE: the recursion has a
// single relevant fixed point.  Inside the non-uniqueness region the two
// fixed points nu_free != nu_1 compete through the variational functional:
// R_FREE when the free value wins, R_1 when the all-one value wins, R_C on
// the critical curve where they tie (within a numerical tolerance).
enum class Region { UNIQUE, R_FREE, R_C, R_1 };

const char* region_name(Region r);

struct PhasePoint {
    Params params;
    Region region = Region::UNIQUE;
    SymmetricMeasure nu_free;
    SymmetricMeasure nu_1;
    double phi_free = 0.0;
    double phi_1 = 0.0;
};

// Starting measure for the fixed-point iteration: UNIFORM yields nu_free,
// DELTA_1 yields nu_1.
enum class BpStart { UNIFORM, DELTA_1 };

// Tolerances shared by the analytic layer.
inline constexpr double kFixedPointTol = 1e-12;
inline constexpr int kFixedPointMaxIter = 200000;
inline constexpr double kCriticalPhiTol = 1e-9;   // |phi_1 - phi_free| for R_C
inline constexpr double kBisectTol = 1e-10;       // argument tolerance of bisections

// One step of the recursion on symmetric measures:
// (BP nu)(s) proportional to e^{B 1{s=1}} ((e^beta - 1) nu(s) + 1)^{d-1}.
SymmetricMeasure bp_step(const SymmetricMeasure& nu, const Params& p);

// Iterates bp_step from the given start until the sup-norm change drops
// below tol, then polishes the root of F(r) = r by a safeguarded Newton
// method.  Throws on non-convergence.
SymmetricMeasure bp_fixed_point(BpStart start, const Params& p,
                                double tol = kFixedPointTol,
                                int max_iter = kFixedPointMaxIter);

// Variational free-energy functional
// Phi(nu) = log{sum_s e^{B 1{s=1}} ((e^beta-1) nu(s) + 1)^d}
//         - (d/2) log{(e^beta-1) sum_s nu(s)^2 + 1}.
double bethe_functional(const SymmetricMeasure& nu, const Params& p);

// Scalar form of the recursion in the log-ratio coordinate:
// F(r) = B + (d-1) log((e^{beta+r} + q - 1)/(e^r + e^beta + q - 2)).
double scalar_F(double r, const Params& p);
// dF/dr, used by the Newton polish and the spinodal conditions.
double scalar_F_prime(double r, const Params& p);

// The two solutions rho_minus <= rho_plus of dF/dr(r; beta, B=0) = 1,
// obtained from the quadratic in x = e^r:
//   a x^2 + [d(q-1) - (d-2) a (a+q-2)] x + (q-1)(a+q-2) = 0,  a = e^beta.
// Empty when no solution exists (beta below the spinodal threshold).
std::optional<std::pair<double, double>> rho_pm(double beta, const Params& p);

// Smallest beta at which rho_pm exists (coincident roots), by bisection on
// the discriminant condition.
double beta_minus(const Params& p);

// Field strengths at which the recursion at coupling beta becomes tangent:
// B_-(beta) = rho_plus - F(rho_plus; beta, 0) and
// B_+(beta) = rho_minus - F(rho_minus; beta, 0); B_- <= B_+.
std::pair<double, double> B_pm(double beta, const Params& p);

// Boundary curves of the non-uniqueness region as functions of the field:
// beta_free inverts B_-, beta_plus inverts B_+.  Defined for
// 0 <= B <= B_plus_global.
double beta_free(double B, const Params& p);
double beta_plus(double B, const Params& p);

// Field value where the two boundary curves merge, by bisection on the
// existence of both inversions.
double B_plus_global(const Params& p);

// Critical curve: the coupling where Phi(nu_1) = Phi(nu_free), by bisection
// over [beta_free(B), beta_plus(B)].
double beta_c(double B, const Params& p);

// Full classification of a parameter point.
PhasePoint classify_region(const Params& p, double fp_tol = kFixedPointTol,
                           double crit_tol = kCriticalPhiTol);

// Percolation data of the free chain at B = 0: pi = (e^beta - 1)/(e^beta + q - 1)
// is the single-edge connectivity, m = (d-1) pi the branching factor.
std::pair<double, double> percolation_factor(const Params& p);

// Correlation coordinate of a symmetric measure: b = (q nu(1) - 1)/(q - 1).
double message_b(const SymmetricMeasure& nu);

// One step of the recursion in the correlation coordinate, for d-1 incoming
// messages and field x:
//   [e^x prod(1+(q-1) g s_i) - prod(1 - g s_i)] /
//   [e^x prod(1+(q-1) g s_i) + (q-1) prod(1 - g s_i)],  g = gamma.
double wh_bp(std::span<const double> messages, double x, const Params& p);

// Vertex / edge / symmetrized functionals of d messages (d even for the
// edge family):
//   psi_vx(b)    = (1-g)^{-d} (e^B prod(1+(q-1) g b_i) + (q-1) prod(1-g b_i))
//   psi_e(b)     = (1-g)^{-d/2} prod_{i<=d/2} (1+(q-1) g b_{2i-1} b_{2i})
//   psi_e_sym(b) = average of psi_e over all perfect matchings of the d slots
//   psi_sym(b)   = psi_vx(b) / psi_e_sym(b)
double psi_vx(std::span<const double> b, const Params& p);
double psi_e(std::span<const double> b, const Params& p);
double psi_e_sym(std::span<const double> b, const Params& p);
double psi_sym(std::span<const double> b, const Params& p);

// Grid-search gap sup over Lambda_delta of log psi_sym versus the common
// value at the constant b_free / b_wired vectors, where Lambda_delta keeps
// vectors with at least two coordinates in [b_free+delta, b_wired-delta].
// Returns (value at constant vectors) - (sup over the grid), which the
// theory predicts to be strictly positive at critical points.
double lambda_delta_gap(double delta, const Params& p_at_critical, int grid_resolution);

// Expected number of neighbors agreeing with the root,
// sum_{i in del o} mu(sigma_o = sigma_i), under the fixed-point measure:
// d e^beta (a^2+(q-1)c^2) / [e^beta(a^2+(q-1)c^2) + 2(q-1)ac + (q-1)(q-2)c^2].
// Equals twice the beta-derivative of the functional along fixed points.
double internal_energy_prediction(BpStart ddagger, const Params& p);

// Sampled boundary curves over B in [0, B_plus].
struct CriticalCurves {
    int q = 0, d = 0;
    double B_plus = 0.0;
    std::vector<double> B_grid;
    std::vector<double> beta_free_curve;
    std::vector<double> beta_c_curve;
    std::vector<double> beta_plus_curve;
};

CriticalCurves trace_critical_curves(int q, int d, int n_points);

// CSV with header "B,beta_free,beta_c,beta_plus".
void curves_to_csv(const CriticalCurves& c, std::ostream& out);

// Region-scan CSV row writer: "beta,B,region,phi_free,phi_1,a_free,a_1".
void region_scan_csv(const std::vector<PhasePoint>& points, std::ostream& out);

}  // namespace potts
