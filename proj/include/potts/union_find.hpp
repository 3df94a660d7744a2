#pragma once

#include <numeric>
#include <vector>

namespace potts {

// Disjoint-set union with path compression and union by rank.  Cluster
// counting is the inner loop of both the brute-force oracle and the cluster
// dynamics, so this stays allocation-free after construction and supports
// cheap reset for reuse across bond configurations.
struct UnionFind {
    std::vector<int> parent;
    std::vector<int> rnk;
    int components = 0;

    explicit UnionFind(int n) : parent(n), rnk(n, 0), components(n) {
        std::iota(parent.begin(), parent.end(), 0);
    }

    void reset() {
        std::iota(parent.begin(), parent.end(), 0);
        std::fill(rnk.begin(), rnk.end(), 0);
        components = static_cast<int>(parent.size());
    }

    int find(int x) {
        int root = x;
        while (parent[root] != root) root = parent[root];
        while (parent[x] != root) {
            int next = parent[x];
            parent[x] = root;
            x = next;
        }
        return root;
    }

    // Returns true when the two elements were in distinct components.
    bool unite(int x, int y) {
        int rx = find(x), ry = find(y);
        if (rx == ry) return false;
        if (rnk[rx] < rnk[ry]) std::swap(rx, ry);
        parent[ry] = rx;
        if (rnk[rx] == rnk[ry]) ++rnk[rx];
        --components;
        return true;
    }

    bool connected(int x, int y) { return find(x) == find(y); }
};

}  // namespace potts
