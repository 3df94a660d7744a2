#include "potts/neighborhood_law.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "potts/format.hpp"

namespace potts {

NeighborhoodLaw::NeighborhoodLaw(int q_, int d_, int t_, std::int64_t cap)
    : q(q_), d(d_), t(t_) {
    n_vertices = static_cast<int>(tree_ball_size(d, t));
    // Guard the q^n table size before allocating.
    long double entries = 1.0L;
    for (int i = 0; i < n_vertices; ++i) {
        entries *= q;
        if (entries > static_cast<long double>(cap))
            throw std::length_error("NeighborhoodLaw: table exceeds cap");
    }
    prob.assign(static_cast<std::size_t>(entries), 0.0);
}

double NeighborhoodLaw::sum() const {
    // Neumaier-compensated sum: tables with ~q^13 entries accumulate enough
    // rounding under naive summation to spoil 1e-12-level law comparisons.
    double s = 0.0, comp = 0.0;
    for (double p : prob) {
        double t_ = s + p;
        comp += std::abs(s) >= std::abs(p) ? (s - t_) + p : (p - t_) + s;
        s = t_;
    }
    return s + comp;
}

void NeighborhoodLaw::normalize() {
    double s = sum();
    if (s <= 0.0) throw std::runtime_error("NeighborhoodLaw::normalize: zero mass");
    for (double& p : prob) p /= s;
}

double NeighborhoodLaw::tv_distance(const NeighborhoodLaw& other) const {
    if (prob.size() != other.prob.size())
        throw std::invalid_argument("tv_distance: table size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < prob.size(); ++i) s += std::abs(prob[i] - other.prob[i]);
    return 0.5 * s;
}

double NeighborhoodLaw::max_abs_diff(const NeighborhoodLaw& other) const {
    if (prob.size() != other.prob.size())
        throw std::invalid_argument("max_abs_diff: table size mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < prob.size(); ++i)
        m = std::max(m, std::abs(prob[i] - other.prob[i]));
    return m;
}

NeighborhoodLaw NeighborhoodLaw::marginal_to_depth(int t_report) const {
    if (t_report > t) throw std::invalid_argument("marginal_to_depth: t_report > t");
    NeighborhoodLaw out(q, d, t_report);
    std::uint64_t block = pow_u64(q, n_vertices - out.n_vertices);
    for (std::uint64_t i = 0; i < out.prob.size(); ++i) {
        double s = 0.0;
        for (std::uint64_t j = i * block; j < (i + 1) * block; ++j) s += prob[j];
        out.prob[i] = s;
    }
    return out;
}

NeighborhoodLaw NeighborhoodLaw::permuted_colors(const std::vector<int>& perm) const {
    if (static_cast<int>(perm.size()) != q)
        throw std::invalid_argument("permuted_colors: permutation size mismatch");
    NeighborhoodLaw out = *this;
    std::fill(out.prob.begin(), out.prob.end(), 0.0);
    for (std::uint64_t code = 0; code < prob.size(); ++code) {
        if (prob[code] == 0.0) continue;
        auto colors = decode_pattern(code, n_vertices, q);
        for (auto& c : colors) c = static_cast<std::uint8_t>(perm[c]);
        out.prob[encode_pattern(colors, q)] += prob[code];
    }
    return out;
}

void NeighborhoodLaw::to_csv(std::ostream& out) const {
    out << "pattern_index,probability\n";
    for (std::uint64_t i = 0; i < prob.size(); ++i)
        if (prob[i] != 0.0) out << i << ',' << fmt17(prob[i]) << '\n';
}

NeighborhoodLaw NeighborhoodLaw::from_csv(std::istream& in, int q, int d, int t) {
    NeighborhoodLaw law(q, d, t);
    std::string line;
    if (!std::getline(in, line) || line.rfind("pattern_index", 0) != 0)
        throw std::runtime_error("NeighborhoodLaw::from_csv: bad header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("NeighborhoodLaw::from_csv: bad row");
        std::uint64_t idx = std::stoull(line.substr(0, comma));
        double p = std::stod(line.substr(comma + 1));
        if (idx >= law.prob.size())
            throw std::runtime_error("NeighborhoodLaw::from_csv: index out of range");
        law.prob[idx] = p;
    }
    return law;
}

void NeighborhoodLaw::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("NeighborhoodLaw::save_csv: cannot open " + path);
    to_csv(out);
}

}  // namespace potts
