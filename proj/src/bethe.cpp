#include "potts/bethe.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <stdexcept>

#include "potts/format.hpp"

namespace potts {

namespace {

double logaddexp(double x, double y) {
    if (x < y) std::swap(x, y);
    if (std::isinf(y) && y < 0) return x;
    return x + std::log1p(std::exp(y - x));
}

}  // namespace

const char* region_name(Region r) {
    switch (r) {
        case Region::UNIQUE: return "UNIQUE";
        case Region::R_FREE: return "R_FREE";
        case Region::R_C: return "R_C";
        case Region::R_1: return "R_1";
    }
    return "?";
}

SymmetricMeasure bp_step(const SymmetricMeasure& nu, const Params& p) {
    double em1 = std::expm1(p.beta);
    double la = p.B + (p.d - 1) * std::log1p(em1 * nu.a);
    double lc = (p.d - 1) * std::log1p(em1 * nu.off());
    double delta = lc - la;
    double a = delta > 700.0 ? 0.0 : 1.0 / (1.0 + (p.q - 1) * std::exp(delta));
    return SymmetricMeasure(a, p.q);
}

double scalar_F(double r, const Params& p) {
    if (r > 700.0 || (std::isinf(r) && r > 0)) {
        // e^{beta+r} and e^r dominate; expand the log-ratio around its limit.
        double A = std::exp(p.beta);
        return p.B + (p.d - 1) * (p.beta + std::log1p((p.q - 1) * std::exp(-p.beta - r)) -
                                  std::log1p((A + p.q - 2) * std::exp(-r)));
    }
    double L1 = logaddexp(p.beta + r, std::log(p.q - 1.0));
    double L2 = (p.q > 2) ? logaddexp(p.beta, std::log(p.q - 2.0)) : p.beta;
    double L3 = logaddexp(r, L2);
    return p.B + (p.d - 1) * (L1 - L3);
}

double scalar_F_prime(double r, const Params& p) {
    // (d-1) [ e^{beta+r}/(e^{beta+r}+q-1) - e^r/(e^r+e^beta+q-2) ], via sigmoids.
    double t1 = 1.0 / (1.0 + (p.q - 1) * std::exp(-(p.beta + r)));
    double A = std::exp(p.beta);
    double t2 = 1.0 / (1.0 + (A + p.q - 2) * std::exp(-r));
    return (p.d - 1) * (t1 - t2);
}

std::optional<std::pair<double, double>> rho_pm(double beta, const Params& p) {
    // dF/dr = 1 at B = 0 clears to  A x^2 + mid x + (q-1)(A+q-2) = 0  in x = e^r.
    double A = std::exp(beta);
    double q1 = p.q - 1.0;
    double mid = p.d * q1 - (p.d - 2) * A * (A + p.q - 2);
    if (mid >= 0.0) return std::nullopt;  // both roots would be non-positive
    double disc = mid * mid - 4.0 * A * q1 * (A + p.q - 2);
    if (disc < 0.0) return std::nullopt;
    double s = std::sqrt(disc);
    double x_hi = (-mid + s) / (2.0 * A);
    double x_lo = q1 * (A + p.q - 2) / (A * x_hi);  // root product = c / a
    return std::make_pair(std::log(x_lo), std::log(x_hi));
}

double beta_minus(const Params& p) {
    // Existence condition for positive tangency points: with A = e^beta,
    // h(beta) = (d-2) A (A+q-2) - d(q-1) - 2 sqrt(A (q-1)(A+q-2)) crosses zero.
    auto h = [&](double beta) {
        double A = std::exp(beta);
        double q1 = p.q - 1.0;
        return (p.d - 2) * A * (A + p.q - 2) - p.d * q1 -
               2.0 * std::sqrt(A * q1 * (A + p.q - 2));
    };
    double lo = 1e-9, hi = 0.5;
    int guard = 0;
    while (h(hi) <= 0.0) {
        hi *= 2.0;
        if (++guard > 60) throw std::runtime_error("beta_minus: no upper bracket");
    }
    for (int i = 0; i < 120; ++i) {
        double m = 0.5 * (lo + hi);
        (h(m) <= 0.0 ? lo : hi) = m;
    }
    return 0.5 * (lo + hi);
}

std::pair<double, double> B_pm(double beta, const Params& p) {
    auto rho = rho_pm(beta, p);
    if (!rho) throw std::domain_error("B_pm: no tangency points at this beta");
    Params p0(p.q, p.d, beta, 0.0);
    double B_minus = rho->second - scalar_F(rho->second, p0);
    double B_plus = rho->first - scalar_F(rho->first, p0);
    return {B_minus, B_plus};
}

namespace {

// All solutions of F(r) = r, ascending.  G(r) = F(r) - r is decreasing,
// then increasing on [rho_-, rho_+], then decreasing again, so each of the
// three monotone branches holds at most one root and plain bisection is
// exact and safe.
std::vector<double> all_fixed_points(const Params& p) {
    auto G = [&](double r) { return scalar_F(r, p) - r; };
    auto bisect = [&](double lo, double hi, bool decreasing) {
        // sign(G(lo)) != sign(G(hi)) or one endpoint is a root
        for (int i = 0; i < 140; ++i) {
            double m = 0.5 * (lo + hi);
            double g = G(m);
            bool go_right = decreasing ? (g > 0.0) : (g < 0.0);
            (go_right ? lo : hi) = m;
        }
        return 0.5 * (lo + hi);
    };
    std::vector<double> roots;
    auto rho = rho_pm(p.beta, p);
    if (!rho) {
        // G strictly decreasing: unique root; G(0) = B >= 0.
        double lo = 0.0, hi = std::max(1.0, p.B + (p.d - 1) * p.beta + 1.0);
        int guard = 0;
        while (G(hi) > 0.0) {
            hi *= 2.0;
            if (++guard > 60) throw std::runtime_error("fixed points: no upper bracket");
        }
        roots.push_back(bisect(lo, hi, true));
        return roots;
    }
    auto [rm, rp] = *rho;
    double Gm = G(rm), Gp = G(rp);
    if (Gm <= 0.0) {
        // decreasing branch (-inf, rho_-]
        double w = 1.0, lo = rm - w;
        int guard = 0;
        while (G(lo) < 0.0) {
            w *= 2.0;
            lo = rm - w;
            if (++guard > 60) throw std::runtime_error("fixed points: no lower bracket");
        }
        roots.push_back(bisect(lo, rm, true));
    }
    if (Gm <= 0.0 && Gp >= 0.0) {
        // increasing branch [rho_-, rho_+]
        roots.push_back(bisect(rm, rp, false));
    }
    if (Gp >= 0.0) {
        // decreasing branch [rho_+, inf)
        double w = 1.0, hi = rp + w;
        int guard = 0;
        while (G(hi) > 0.0) {
            w *= 2.0;
            hi = rp + w;
            if (++guard > 60) throw std::runtime_error("fixed points: no upper bracket");
        }
        roots.push_back(bisect(rp, hi, true));
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

}  // namespace

SymmetricMeasure bp_fixed_point(BpStart start, const Params& p, double tol, int max_iter) {
    // beta = 0: the recursion forgets its input, one step is the fixed point.
    SymmetricMeasure nu = (start == BpStart::UNIFORM) ? SymmetricMeasure::uniform(p.q)
                                                      : SymmetricMeasure::dirac1(p.q);
    if (p.beta == 0.0) return bp_step(nu, p);
    // B = 0: the uniform measure is an exact fixed point of the recursion.
    if (start == BpStart::UNIFORM && p.B == 0.0) return SymmetricMeasure::uniform(p.q);

    // Plain iteration first (cheap and usually sufficient) ...
    int warmup = std::min(max_iter, 2000);
    for (int i = 0; i < warmup; ++i) {
        SymmetricMeasure next = bp_step(nu, p);
        double delta = std::abs(next.a - nu.a);
        nu = next;
        if (delta < tol) break;
    }
    // ... then land exactly on the limiting root.  From the uniform start the
    // iterates increase to the smallest nonnegative solution of F(r) = r;
    // from the Dirac start they decrease to the largest solution.
    std::vector<double> roots = all_fixed_points(p);
    if (roots.empty()) throw std::runtime_error("bp_fixed_point: no fixed point found");
    double target;
    if (start == BpStart::DELTA_1) {
        target = roots.back();
    } else {
        target = roots.back();
        for (auto it = roots.rbegin(); it != roots.rend(); ++it)
            if (*it >= -1e-12) target = *it;
        target = std::max(target, 0.0);
    }
    return SymmetricMeasure::from_r(target, p.q);
}

double bethe_functional(const SymmetricMeasure& nu, const Params& p) {
    double em1 = std::expm1(p.beta);
    double a = nu.a, c = nu.off();
    double term1 = logaddexp(p.B + p.d * std::log1p(em1 * a),
                             std::log(p.q - 1.0) + p.d * std::log1p(em1 * c));
    double term2 = 0.5 * p.d * std::log1p(em1 * (a * a + (p.q - 1) * c * c));
    return term1 - term2;
}

double beta_free(double B, const Params& p) {
    // Inverts beta -> B_-(beta) on [beta_minus, ...], where it decreases from
    // the merge field to 0 (and onward to negative values).
    double bm = beta_minus(p);
    double lo = bm + 1e-9;
    auto f = [&](double beta) { return B_pm(beta, p).first - B; };
    double flo = f(lo);
    if (flo < 0.0) {
        if (flo > -1e-6) return lo;  // at/past the merge within noise
        throw std::out_of_range("beta_free: B above the merge field");
    }
    double step = 0.25, hi = lo + step;
    int guard = 0;
    while (f(hi) > 0.0) {
        step *= 2.0;
        hi = lo + step;
        if (++guard > 60) throw std::runtime_error("beta_free: no upper bracket");
    }
    for (int i = 0; i < 100; ++i) {
        double m = 0.5 * (lo + hi);
        (f(m) > 0.0 ? lo : hi) = m;
    }
    return 0.5 * (lo + hi);
}

namespace {

// Right endpoint of the invertible branch of B_+: the beta where rho_- hits
// zero.  Located as the sign change of the tangency quadratic evaluated at
// x = e^r = 1 (positive while both roots exceed 1, negative once they
// straddle it), so the endpoint and the curve share one source of truth.
double beta_star(const Params& p) {
    auto quad_at_one = [&](double beta) {
        double A = std::exp(beta);
        double q1 = p.q - 1.0;
        return A + p.d * q1 - (p.d - 2) * A * (A + p.q - 2) + q1 * (A + p.q - 2);
    };
    double lo = beta_minus(p) + 1e-9;
    double hi = lo + 0.5, step = 0.5;
    int guard = 0;
    while (quad_at_one(hi) > 0.0) {
        step *= 2.0;
        hi += step;
        if (++guard > 60) throw std::runtime_error("beta_star: no bracket");
    }
    for (int i = 0; i < 120; ++i) {
        double m = 0.5 * (lo + hi);
        (quad_at_one(m) > 0.0 ? lo : hi) = m;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double beta_plus(double B, const Params& p) {
    // Inverts beta -> B_+(beta) on the branch where rho_-(beta) > 0; there
    // dB_+/dbeta = -dF/dbeta(rho_-) < 0, so the curve falls strictly from the
    // merge field at beta_minus to exactly 0 where rho_- = 0.  Beyond that
    // point B_+ rises again, but the reborn fixed-point pair sits at negative
    // message log-ratios and never captures the iteration started at uniform.
    double bm = beta_minus(p);
    double lo = bm + 1e-9;
    auto f = [&](double beta) { return B_pm(beta, p).second - B; };
    double flo = f(lo);
    if (flo < 0.0) {
        if (flo > -1e-6) return lo;  // at/past the merge within noise
        throw std::out_of_range("beta_plus: B above the merge field");
    }
    if (p.q == 2) {
        // the invertible branch collapses to the single point beta_minus
        if (B <= 1e-12) return bm;
        throw std::out_of_range("beta_plus: for q = 2 the curves exist only at B = 0");
    }
    double hi = beta_star(p);
    if (f(hi) > 0.0) return hi;  // only B = 0 rounding can land here
    for (int i = 0; i < 100; ++i) {
        double m = 0.5 * (lo + hi);
        (f(m) > 0.0 ? lo : hi) = m;
    }
    return 0.5 * (lo + hi);
}

double B_plus_global(const Params& p) {
    if (p.q == 2) return 0.0;  // non-uniqueness is confined to the B = 0 ray
    auto exists = [&](double B) {
        try {
            beta_free(B, p);
            beta_plus(B, p);
            return true;
        } catch (const std::exception&) {
            return false;
        }
    };
    double lo = 0.0, hi = 0.25;
    int guard = 0;
    while (exists(hi)) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 60) throw std::runtime_error("B_plus_global: no upper bracket");
    }
    for (int i = 0; i < 80; ++i) {
        double m = 0.5 * (lo + hi);
        (exists(m) ? lo : hi) = m;
    }
    return 0.5 * (lo + hi);
}

double beta_c(double B, const Params& p) {
    double lo = beta_free(B, p);
    double hi = beta_plus(B, p);
    if (hi - lo < 2e-9) return 0.5 * (lo + hi);
    double eps = 1e-9;
    auto dphi = [&](double beta) {
        Params pb(p.q, p.d, beta, B);
        SymmetricMeasure nf = bp_fixed_point(BpStart::UNIFORM, pb);
        SymmetricMeasure n1 = bp_fixed_point(BpStart::DELTA_1, pb);
        return bethe_functional(n1, pb) - bethe_functional(nf, pb);
    };
    lo += eps;
    hi -= eps;
    double flo = dphi(lo), fhi = dphi(hi);
    if (!(flo < 0.0 && fhi > 0.0))
        throw std::runtime_error("beta_c: no sign change over [beta_free, beta_plus]");
    while (hi - lo > 1e-11) {
        double m = 0.5 * (lo + hi);
        (dphi(m) < 0.0 ? lo : hi) = m;
    }
    return 0.5 * (lo + hi);
}

PhasePoint classify_region(const Params& p, double fp_tol, double crit_tol) {
    PhasePoint pt;
    pt.params = p;
    pt.nu_free = bp_fixed_point(BpStart::UNIFORM, p, fp_tol);
    pt.nu_1 = bp_fixed_point(BpStart::DELTA_1, p, fp_tol);
    pt.phi_free = bethe_functional(pt.nu_free, p);
    pt.phi_1 = bethe_functional(pt.nu_1, p);
    if (pt.nu_free.dist_inf(pt.nu_1) <= 10.0 * fp_tol) {
        pt.region = Region::UNIQUE;
    } else if (std::abs(pt.phi_1 - pt.phi_free) <= crit_tol) {
        pt.region = Region::R_C;
    } else {
        pt.region = (pt.phi_1 > pt.phi_free) ? Region::R_1 : Region::R_FREE;
    }
    return pt;
}

std::pair<double, double> percolation_factor(const Params& p) {
    double prob = p.p_edge();
    double pi = prob / (prob + p.q * (1.0 - prob));
    return {pi, (p.d - 1) * pi};
}

double message_b(const SymmetricMeasure& nu) { return nu.b(); }

double wh_bp(std::span<const double> messages, double x, const Params& p) {
    if (static_cast<int>(messages.size()) != p.d - 1)
        throw std::invalid_argument("wh_bp: need d-1 messages");
    double g = p.gamma();
    double P1 = 1.0, P0 = 1.0;
    for (double s : messages) {
        if (s < -1.0 / (p.q - 1) - 1e-12 || s > 1.0 + 1e-12)
            throw std::invalid_argument("wh_bp: message out of range");
        P1 *= 1.0 + (p.q - 1) * g * s;
        P0 *= 1.0 - g * s;
    }
    double ex = std::exp(x);
    return (ex * P1 - P0) / (ex * P1 + (p.q - 1) * P0);
}

double psi_vx(std::span<const double> b, const Params& p) {
    if (static_cast<int>(b.size()) != p.d) throw std::invalid_argument("psi_vx: need d messages");
    double g = p.gamma();
    double P1 = 1.0, P0 = 1.0;
    for (double bi : b) {
        P1 *= 1.0 + (p.q - 1) * g * bi;
        P0 *= 1.0 - g * bi;
    }
    return std::pow(1.0 - g, -p.d) * (std::exp(p.B) * P1 + (p.q - 1) * P0);
}

double psi_e(std::span<const double> b, const Params& p) {
    if (p.d % 2 != 0) throw std::invalid_argument("psi_e: d must be even");
    if (static_cast<int>(b.size()) != p.d) throw std::invalid_argument("psi_e: need d messages");
    double g = p.gamma();
    double prod = 1.0;
    for (int i = 0; i < p.d / 2; ++i) prod *= 1.0 + (p.q - 1) * g * b[2 * i] * b[2 * i + 1];
    return std::pow(1.0 - g, -p.d / 2.0) * prod;
}

namespace {

// Sum of prod_{pairs} (1+(q-1) g b_u b_v) over all perfect matchings of the
// unmatched slots, by always pairing the first unmatched slot.
double matching_sum(std::span<const double> b, double g, int q, unsigned used) {
    int d = static_cast<int>(b.size());
    int first = -1;
    for (int i = 0; i < d; ++i)
        if (!(used & (1u << i))) {
            first = i;
            break;
        }
    if (first < 0) return 1.0;
    double total = 0.0;
    for (int j = first + 1; j < d; ++j) {
        if (used & (1u << j)) continue;
        double factor = 1.0 + (q - 1) * g * b[first] * b[j];
        total += factor * matching_sum(b, g, q, used | (1u << first) | (1u << j));
    }
    return total;
}

double double_factorial_odd(int d) {  // (d-1)!! for even d
    double r = 1.0;
    for (int k = d - 1; k >= 1; k -= 2) r *= k;
    return r;
}

}  // namespace

double psi_e_sym(std::span<const double> b, const Params& p) {
    if (p.d % 2 != 0) throw std::invalid_argument("psi_e_sym: d must be even");
    if (static_cast<int>(b.size()) != p.d)
        throw std::invalid_argument("psi_e_sym: need d messages");
    // The average of psi_e over all permutations equals the average over all
    // perfect matchings of the d slots, each matching arising equally often.
    double g = p.gamma();
    double avg = matching_sum(b, g, p.q, 0u) / double_factorial_odd(p.d);
    return std::pow(1.0 - g, -p.d / 2.0) * avg;
}

double psi_sym(std::span<const double> b, const Params& p) {
    return psi_vx(b, p) / psi_e_sym(b, p);
}

double lambda_delta_gap(double delta, const Params& p, int grid_resolution) {
    if (grid_resolution < 5) throw std::invalid_argument("lambda_delta_gap: grid too coarse");
    if (p.d % 2 != 0) throw std::invalid_argument("lambda_delta_gap: d must be even");
    if (delta <= 0.0) throw std::invalid_argument("lambda_delta_gap: delta must be positive");
    SymmetricMeasure nf = bp_fixed_point(BpStart::UNIFORM, p);
    SymmetricMeasure n1 = bp_fixed_point(BpStart::DELTA_1, p);
    double b_free = nf.b(), b_wired = n1.b();
    if (b_wired - b_free <= 2.0 * delta)
        throw std::invalid_argument("lambda_delta_gap: point not inside the non-uniqueness region");
    std::vector<double> grid(grid_resolution);
    for (int i = 0; i < grid_resolution; ++i)
        grid[i] = b_free + (b_wired - b_free) * i / (grid_resolution - 1);

    std::vector<double> constant(p.d, b_free);
    double wh_phi = std::log(psi_sym(constant, p));
    std::fill(constant.begin(), constant.end(), b_wired);
    wh_phi = std::max(wh_phi, std::log(psi_sym(constant, p)));

    double lo_in = b_free + delta, hi_in = b_wired - delta;
    double sup = -std::numeric_limits<double>::infinity();
    // psi_sym is permutation invariant, so scan sorted tuples only.
    std::vector<double> tuple(p.d);
    std::function<void(int, int, int)> rec = [&](int slot, int min_idx, int inside) {
        if (slot == p.d) {
            if (inside >= 2) sup = std::max(sup, std::log(psi_sym(tuple, p)));
            return;
        }
        for (int i = min_idx; i < grid_resolution; ++i) {
            tuple[slot] = grid[i];
            bool in = grid[i] >= lo_in - 1e-15 && grid[i] <= hi_in + 1e-15;
            rec(slot + 1, i, inside + (in ? 1 : 0));
        }
    };
    rec(0, 0, 0);
    if (!std::isfinite(sup))
        throw std::runtime_error("lambda_delta_gap: grid has no points in Lambda_delta");
    return wh_phi - sup;
}

double internal_energy_prediction(BpStart ddagger, const Params& p) {
    SymmetricMeasure nu = bp_fixed_point(ddagger, p);
    double a = nu.a, c = nu.off();
    double eb = std::exp(p.beta);
    double agree = eb * (a * a + (p.q - 1) * c * c);
    double den = agree + 2.0 * (p.q - 1) * a * c + (p.q - 1.0) * (p.q - 2.0) * c * c;
    return p.d * agree / den;
}

CriticalCurves trace_critical_curves(int q, int d, int n_points) {
    if (n_points < 2) throw std::invalid_argument("trace_critical_curves: need >= 2 points");
    Params p(q, d, 1.0, 0.0);
    CriticalCurves out;
    out.q = q;
    out.d = d;
    out.B_plus = B_plus_global(p);
    if (q == 2) {
        double bm = beta_minus(p);
        out.B_grid = {0.0};
        out.beta_free_curve = {bm};
        out.beta_c_curve = {bm};
        out.beta_plus_curve = {bm};
        return out;
    }
    for (int i = 0; i < n_points; ++i) {
        double frac = static_cast<double>(i) / (n_points - 1);
        double B = out.B_plus * frac;
        if (i == n_points - 1) B = out.B_plus * (1.0 - 1e-9);  // stay on the defined side
        out.B_grid.push_back(B);
        out.beta_free_curve.push_back(beta_free(B, p));
        out.beta_plus_curve.push_back(beta_plus(B, p));
        out.beta_c_curve.push_back(beta_c(B, p));
    }
    return out;
}

void curves_to_csv(const CriticalCurves& c, std::ostream& out) {
    out << "B,beta_free,beta_c,beta_plus\n";
    for (std::size_t i = 0; i < c.B_grid.size(); ++i)
        out << fmt17(c.B_grid[i]) << ',' << fmt17(c.beta_free_curve[i]) << ','
            << fmt17(c.beta_c_curve[i]) << ',' << fmt17(c.beta_plus_curve[i]) << '\n';
}

void region_scan_csv(const std::vector<PhasePoint>& points, std::ostream& out) {
    out << "beta,B,region,phi_free,phi_1,a_free,a_1\n";
    for (const auto& pt : points)
        out << fmt17(pt.params.beta) << ',' << fmt17(pt.params.B) << ','
            << region_name(pt.region) << ',' << fmt17(pt.phi_free) << ',' << fmt17(pt.phi_1)
            << ',' << fmt17(pt.nu_free.a) << ',' << fmt17(pt.nu_1.a) << '\n';
}

}  // namespace potts
