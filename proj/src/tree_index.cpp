#include "potts/tree_index.hpp"

#include <stdexcept>

namespace potts {

std::int64_t tree_ball_size(int d, int t) {
    if (d < 3 || t < 0) throw std::invalid_argument("tree_ball_size: need d >= 3, t >= 0");
    std::int64_t total = 1, level = 1;
    for (int l = 1; l <= t; ++l) {
        level *= (l == 1) ? d : (d - 1);
        total += level;
        if (total > (std::int64_t{1} << 40)) throw std::overflow_error("tree_ball_size: overflow");
    }
    return total;
}

TreeIndex tree_index(int d, int t, std::int64_t vertex_cap) {
    std::int64_t size = tree_ball_size(d, t);
    if (size > vertex_cap) throw std::length_error("tree_index: ball exceeds vertex cap");

    TreeIndex idx;
    idx.d = d;
    idx.t = t;
    idx.n = static_cast<int>(size);
    idx.parent.assign(idx.n, -1);
    idx.level_start.assign(t + 2, 0);
    idx.edges.reserve(idx.n - 1);

    int next = 1;
    idx.level_start[0] = 0;
    idx.level_start[1] = 1;
    for (int l = 1; l <= t; ++l) {
        for (int p = idx.level_start[l - 1]; p < idx.level_start[l]; ++p) {
            int kids = (p == 0) ? d : (d - 1);
            for (int c = 0; c < kids; ++c) {
                idx.parent[next] = p;
                idx.edges.emplace_back(p, next);
                ++next;
            }
        }
        idx.level_start[l + 1] = next;
    }
    return idx;
}

int TreeIndex::depth_of(int v) const {
    for (int l = 0; l <= t; ++l)
        if (v < level_start[l + 1]) return l;
    throw std::out_of_range("TreeIndex::depth_of: vertex out of range");
}

std::pair<int, int> TreeIndex::children(int v) const {
    int first = -1, last = -1;
    for (size_t i = 0; i < edges.size(); ++i) {
        if (edges[i].first == v) {
            if (first < 0) first = edges[i].second;
            last = edges[i].second + 1;
        }
    }
    if (first < 0) return {0, 0};
    return {first, last};
}

std::uint64_t pow_u64(int q, int n) {
    std::uint64_t r = 1;
    for (int i = 0; i < n; ++i) {
        if (r > (std::uint64_t{1} << 63) / q) throw std::overflow_error("pow_u64: overflow");
        r *= static_cast<std::uint64_t>(q);
    }
    return r;
}

std::uint64_t encode_pattern(const std::vector<std::uint8_t>& colors, int q) {
    std::uint64_t code = 0;
    for (std::uint8_t c : colors) {
        if (c >= q) throw std::invalid_argument("encode_pattern: color out of range");
        code = code * q + c;
    }
    return code;
}

std::vector<std::uint8_t> decode_pattern(std::uint64_t code, int n_vertices, int q) {
    std::vector<std::uint8_t> colors(n_vertices, 0);
    for (int v = n_vertices - 1; v >= 0; --v) {
        colors[v] = static_cast<std::uint8_t>(code % q);
        code /= q;
    }
    if (code != 0) throw std::invalid_argument("decode_pattern: code out of range");
    return colors;
}

}  // namespace potts
