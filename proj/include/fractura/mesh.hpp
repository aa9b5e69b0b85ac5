#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "fractura/errors.hpp"
#include "fractura/geometry.hpp"

namespace fractura {

using VertexId = std::uint32_t;
using TriId = std::uint32_t;

constexpr TriId kNoTri = static_cast<TriId>(-1);

/// Undirected edge key (vertex ids sorted ascending).
struct Edge {
    VertexId a, b;
    Edge(VertexId u, VertexId v) : a(std::min(u, v)), b(std::max(u, v)) {}
    bool operator<(const Edge& o) const { return a < o.a || (a == o.a && b < o.b); }
    bool operator==(const Edge& o) const { return a == o.a && b == o.b; }
};

inline std::uint64_t edge_key(VertexId u, VertexId v) {
    const auto lo = std::min(u, v), hi = std::max(u, v);
    return (static_cast<std::uint64_t>(lo) << 32) | hi;
}

/// Set of triangle indices selected for refinement. Kept sorted and unique.
struct Marking {
    std::vector<TriId> marked;

    Marking() = default;
    explicit Marking(std::vector<TriId> ids) : marked(std::move(ids)) {
        std::sort(marked.begin(), marked.end());
        marked.erase(std::unique(marked.begin(), marked.end()), marked.end());
    }
    bool empty() const { return marked.empty(); }
    std::size_t size() const { return marked.size(); }
    bool contains(TriId t) const {
        return std::binary_search(marked.begin(), marked.end(), t);
    }
};

/// Conforming 2D triangulation with bisection genealogy.
///
/// Conventions:
///  - triangles are counter-clockwise (signed area > 0);
///  - local edge e of triangle (v0,v1,v2) runs from v[e] to v[(e+1)%3];
///  - refinement_edge[t] is the local edge split when t is bisected
///    (longest edge for input meshes, newest-vertex rule for children);
///  - meshes are immutable once built; refine() returns a new mesh whose
///    parent_map points one generation back and whose vertex list extends
///    the predecessor's (midpoints appended, midpoint_parents recording the
///    endpoints of the split edge).
struct TriMesh {
    std::vector<Vec2> vertices;
    std::vector<std::array<VertexId, 3>> triangles;
    std::map<Edge, int> boundary_edges; // edge -> user tag
    std::vector<TriId> parent_map;      // per triangle, index into predecessor mesh
    std::vector<std::uint8_t> refinement_edge;
    std::vector<std::array<VertexId, 2>> midpoint_parents; // for vertices >= n_parent_vertices
    std::uint32_t n_parent_vertices = 0;

    std::size_t n_vertices() const { return vertices.size(); }
    std::size_t n_triangles() const { return triangles.size(); }

    const Vec2& vertex(VertexId i) const { return vertices[i]; }
    const std::array<VertexId, 3>& tri(TriId t) const { return triangles[t]; }

    double signed_area(TriId t) const {
        const auto& tv = triangles[t];
        return fractura::signed_area(vertices[tv[0]], vertices[tv[1]], vertices[tv[2]]);
    }
    double area(TriId t) const { return std::abs(signed_area(t)); }

    double edge_length(TriId t, int e) const {
        const auto& tv = triangles[t];
        return (vertices[tv[(e + 1) % 3]] - vertices[tv[e]]).norm();
    }

    /// Element size = longest edge (the "mesh size" used in logs and floors).
    double diameter(TriId t) const {
        return std::max({edge_length(t, 0), edge_length(t, 1), edge_length(t, 2)});
    }

    double shortest_edge(TriId t) const {
        return std::min({edge_length(t, 0), edge_length(t, 1), edge_length(t, 2)});
    }

    double min_element_size() const {
        double h = std::numeric_limits<double>::max();
        for (TriId t = 0; t < n_triangles(); ++t) h = std::min(h, diameter(t));
        return h;
    }

    Vec2 centroid(TriId t) const {
        const auto& tv = triangles[t];
        const Vec2 s = vertices[tv[0]] + vertices[tv[1]] + vertices[tv[2]];
        return {s.x / 3.0, s.y / 3.0};
    }

    double total_area() const {
        double a = 0.0;
        for (TriId t = 0; t < n_triangles(); ++t) a += signed_area(t);
        return a;
    }

    /// Edge-incidence audit: positive orientation everywhere, every edge
    /// shared by at most two triangles, interior edges by exactly two.
    bool is_conforming() const {
        std::unordered_map<std::uint64_t, int> count;
        count.reserve(3 * n_triangles());
        for (TriId t = 0; t < n_triangles(); ++t) {
            if (signed_area(t) <= 0.0) return false;
            const auto& tv = triangles[t];
            for (int e = 0; e < 3; ++e) {
                if (++count[edge_key(tv[e], tv[(e + 1) % 3])] > 2) return false;
            }
        }
        for (const auto& [key, c] : count) {
            if (c == 1 && !boundary_edges.count(Edge(static_cast<VertexId>(key >> 32),
                                                     static_cast<VertexId>(key & 0xffffffffu))))
                return false;
        }
        return true;
    }

    /// Node-to-node adjacency through element edges.
    std::vector<std::vector<VertexId>> vertex_adjacency() const {
        std::vector<std::vector<VertexId>> adj(n_vertices());
        for (const auto& tv : triangles) {
            for (int e = 0; e < 3; ++e) {
                adj[tv[e]].push_back(tv[(e + 1) % 3]);
                adj[tv[(e + 1) % 3]].push_back(tv[e]);
            }
        }
        for (auto& a : adj) {
            std::sort(a.begin(), a.end());
            a.erase(std::unique(a.begin(), a.end()), a.end());
        }
        return adj;
    }
};

namespace detail {

// Refinement-edge choice for input meshes: longest edge, ties broken by the
// sorted vertex-id pair so the pick is unique and mesh-order independent.
inline int longest_edge_local(const TriMesh& m, TriId t) {
    int best = 0;
    double best_len = -1.0;
    std::uint64_t best_key = 0;
    const auto& tv = m.triangles[t];
    for (int e = 0; e < 3; ++e) {
        const double len = m.edge_length(t, e);
        const std::uint64_t key = edge_key(tv[e], tv[(e + 1) % 3]);
        if (len > best_len + 1e-15 * (len + best_len) ||
            (std::abs(len - best_len) <= 1e-15 * (len + best_len) && key > best_key)) {
            best = e;
            best_len = len;
            best_key = key;
        }
    }
    return best;
}

} // namespace detail

inline void assign_refinement_edges(TriMesh& m) {
    m.refinement_edge.resize(m.n_triangles());
    for (TriId t = 0; t < m.n_triangles(); ++t)
        m.refinement_edge[t] = static_cast<std::uint8_t>(detail::longest_edge_local(m, t));
}

/// Marking rule: select every element whose error is at least chi times the
/// maximum element error. All-zero errors give an empty marking.
inline Marking mark_by_fraction(const std::vector<double>& errors, double chi) {
    if (chi < 0.0 || chi > 1.0) throw InvalidParameter("mark_by_fraction: chi must be in [0,1]");
    double emax = 0.0;
    for (double e : errors) {
        if (e < 0.0) throw InvalidParameter("mark_by_fraction: negative element error");
        emax = std::max(emax, e);
    }
    Marking out;
    if (emax <= 0.0) return out;
    const double thr = chi * emax;
    for (TriId i = 0; i < errors.size(); ++i)
        if (errors[i] >= thr) out.marked.push_back(i);
    return out;
}

/// Bisect all marked triangles (and whatever conformity requires) and return
/// the refined mesh. Marked elements whose diameter is already within a
/// factor 2 of h_min are skipped; if that leaves nothing to do the call
/// throws RefinementFloorReached. Closure splits are never floor-limited.
inline TriMesh refine(const TriMesh& mesh, const Marking& marking, double h_min = 0.0) {
    for (TriId t : marking.marked)
        if (t >= mesh.n_triangles()) throw InvalidParameter("refine: marked index out of range");

    std::vector<TriId> work;
    work.reserve(marking.size());
    for (TriId t : marking.marked)
        if (h_min <= 0.0 || mesh.diameter(t) >= 2.0 * h_min) work.push_back(t);
    if (work.empty()) {
        if (marking.empty()) return mesh;
        throw RefinementFloorReached("refine: all marked elements at or below the size floor");
    }

    // Working copies. Triangles are tombstoned rather than reused so ids
    // stay stable during the closure cascade.
    std::vector<Vec2> verts = mesh.vertices;
    std::vector<std::array<VertexId, 3>> tris = mesh.triangles;
    std::vector<std::uint8_t> ref_edge = mesh.refinement_edge;
    if (ref_edge.size() != tris.size()) {
        ref_edge.resize(tris.size());
        for (TriId t = 0; t < tris.size(); ++t)
            ref_edge[t] = static_cast<std::uint8_t>(detail::longest_edge_local(mesh, t));
    }
    std::vector<TriId> ancestor(tris.size());
    for (TriId t = 0; t < tris.size(); ++t) ancestor[t] = t;
    std::vector<char> alive(tris.size(), 1);
    std::map<Edge, int> boundary = mesh.boundary_edges;
    std::vector<std::array<VertexId, 2>> mid_parents;

    // Live edge incidence: edge -> up to two live triangles.
    std::unordered_map<std::uint64_t, std::array<std::int64_t, 2>> incidence;
    incidence.reserve(3 * tris.size());
    auto add_incidence = [&](VertexId u, VertexId v, TriId t) {
        auto [it, inserted] =
            incidence.try_emplace(edge_key(u, v), std::array<std::int64_t, 2>{-1, -1});
        auto& slots = it->second;
        if (slots[0] == -1) slots[0] = t;
        else if (slots[1] == -1) slots[1] = t;
        else throw std::logic_error("refine: edge incident to more than two triangles");
    };
    auto remove_incidence = [&](VertexId u, VertexId v, TriId t) {
        auto it = incidence.find(edge_key(u, v));
        if (it == incidence.end()) throw std::logic_error("refine: missing edge incidence");
        auto& slots = it->second;
        if (slots[0] == t) slots[0] = -1;
        else if (slots[1] == t) slots[1] = -1;
        else throw std::logic_error("refine: stale edge incidence");
        if (slots[0] == -1 && slots[1] == -1) incidence.erase(it);
    };
    auto other_live = [&](VertexId u, VertexId v) -> std::int64_t {
        auto it = incidence.find(edge_key(u, v));
        if (it == incidence.end()) return -1;
        if (it->second[0] != -1) return it->second[0];
        return it->second[1];
    };

    for (TriId t = 0; t < tris.size(); ++t)
        for (int e = 0; e < 3; ++e) add_incidence(tris[t][e], tris[t][(e + 1) % 3], t);

    std::unordered_map<std::uint64_t, VertexId> edge_midpoint;
    std::deque<std::uint64_t> unresolved; // split edges that may still hang

    // Bisect one live triangle across its refinement edge. Children follow
    // the newest-vertex rule: the parent's two untouched edges become the
    // children's refinement edges, so a hanging node is reachable in at most
    // two splits.
    std::size_t n_bisections = 0;
    auto bisect = [&](TriId t) {
        const int e = ref_edge[t];
        const VertexId p = tris[t][e], q = tris[t][(e + 1) % 3], r = tris[t][(e + 2) % 3];
        const std::uint64_t key_pq = edge_key(p, q);

        VertexId m;
        auto mit = edge_midpoint.find(key_pq);
        if (mit != edge_midpoint.end()) {
            m = mit->second;
        } else {
            m = static_cast<VertexId>(verts.size());
            verts.push_back(midpoint(verts[p], verts[q]));
            mid_parents.push_back({p, q});
            edge_midpoint.emplace(key_pq, m);
            auto bit = boundary.find(Edge(p, q));
            if (bit != boundary.end()) {
                const int tag = bit->second;
                boundary.erase(bit);
                boundary.emplace(Edge(p, m), tag);
                boundary.emplace(Edge(m, q), tag);
            }
        }

        remove_incidence(p, q, t);
        remove_incidence(q, r, t);
        remove_incidence(r, p, t);
        alive[t] = 0;

        const TriId c1 = static_cast<TriId>(tris.size());
        tris.push_back({p, m, r});
        ref_edge.push_back(2); // edge (r,p)
        ancestor.push_back(ancestor[t]);
        alive.push_back(1);
        const TriId c2 = static_cast<TriId>(tris.size());
        tris.push_back({m, q, r});
        ref_edge.push_back(1); // edge (q,r)
        ancestor.push_back(ancestor[t]);
        alive.push_back(1);

        add_incidence(p, m, c1);
        add_incidence(m, r, c1);
        add_incidence(r, p, c1);
        add_incidence(m, q, c2);
        add_incidence(q, r, c2);
        add_incidence(r, m, c2);

        // Any of the parent's edges that carries a midpoint and is still a
        // whole edge of some live triangle remains unresolved.
        for (auto key : {key_pq, edge_key(q, r), edge_key(r, p)})
            if (edge_midpoint.count(key) && incidence.count(key)) unresolved.push_back(key);

        ++n_bisections;
    };

    const std::size_t cap = 1000000 + 100 * (tris.size() + work.size());
    for (TriId t : work)
        if (alive[t]) bisect(t);

    while (!unresolved.empty()) {
        if (n_bisections > cap)
            throw std::logic_error("refine: conformity closure failed to terminate");
        const std::uint64_t key = unresolved.front();
        unresolved.pop_front();
        const auto it = incidence.find(key);
        if (it == incidence.end()) continue; // already resolved
        const std::int64_t u = it->second[0] != -1 ? it->second[0] : it->second[1];
        bisect(static_cast<TriId>(u));
    }

    // Compact live triangles in creation order (deterministic).
    TriMesh out;
    out.vertices = std::move(verts);
    out.n_parent_vertices = static_cast<std::uint32_t>(mesh.n_vertices());
    out.midpoint_parents = std::move(mid_parents);
    out.boundary_edges = std::move(boundary);
    for (TriId t = 0; t < tris.size(); ++t) {
        if (!alive[t]) continue;
        out.triangles.push_back(tris[t]);
        out.refinement_edge.push_back(ref_edge[t]);
        out.parent_map.push_back(ancestor[t]);
    }
    return out;
}

namespace detail {

enum class Lineage { Identity, Child, Unrelated };

inline Lineage classify(const TriMesh& old_mesh, const TriMesh& new_mesh) {
    if (old_mesh.n_vertices() == new_mesh.n_vertices() &&
        old_mesh.n_triangles() == new_mesh.n_triangles() &&
        old_mesh.triangles == new_mesh.triangles)
        return Lineage::Identity;
    if (new_mesh.n_parent_vertices != old_mesh.n_vertices()) return Lineage::Unrelated;
    if (new_mesh.parent_map.size() != new_mesh.n_triangles()) return Lineage::Unrelated;
    if (new_mesh.midpoint_parents.size() + new_mesh.n_parent_vertices != new_mesh.n_vertices())
        return Lineage::Unrelated;
    for (TriId p : new_mesh.parent_map)
        if (p >= old_mesh.n_triangles()) return Lineage::Unrelated;
    return Lineage::Child;
}

} // namespace detail

/// Interpolate a P1 nodal field from a mesh onto its one-generation
/// refinement. Midpoints average their edge endpoints in creation order,
/// which reproduces linear fields exactly. stride > 1 interleaves components.
inline std::vector<double> project_nodal(const TriMesh& old_mesh, const TriMesh& new_mesh,
                                         const std::vector<double>& field, int stride = 1) {
    if (field.size() != old_mesh.n_vertices() * static_cast<std::size_t>(stride))
        throw InvalidParameter("project_nodal: field size does not match mesh");
    const auto kind = detail::classify(old_mesh, new_mesh);
    if (kind == detail::Lineage::Identity) return field;
    if (kind == detail::Lineage::Unrelated)
        throw ProjectionTopologyMismatch("project_nodal: target mesh is not a refinement of source");

    std::vector<double> out(new_mesh.n_vertices() * stride);
    std::copy(field.begin(), field.end(), out.begin());
    for (std::size_t k = 0; k < new_mesh.midpoint_parents.size(); ++k) {
        const auto [a, b] = new_mesh.midpoint_parents[k];
        const std::size_t i = (new_mesh.n_parent_vertices + k) * stride;
        for (int c = 0; c < stride; ++c)
            out[i + c] = 0.5 * (out[a * stride + c] + out[b * stride + c]);
    }
    return out;
}

/// Transfer per-quadrature-point element data: each child element inherits a
/// single conservative value (the max over the parent's points).
inline std::vector<double> project_history(const TriMesh& old_mesh, const TriMesh& new_mesh,
                                           const std::vector<double>& H, int nqp) {
    if (H.size() != old_mesh.n_triangles() * static_cast<std::size_t>(nqp))
        throw InvalidParameter("project_history: history size does not match mesh");
    const auto kind = detail::classify(old_mesh, new_mesh);
    if (kind == detail::Lineage::Identity) return H;
    if (kind == detail::Lineage::Unrelated)
        throw ProjectionTopologyMismatch("project_history: target mesh is not a refinement of source");

    std::vector<double> out(new_mesh.n_triangles() * nqp);
    for (TriId t = 0; t < new_mesh.n_triangles(); ++t) {
        const TriId p = new_mesh.parent_map[t];
        double v = 0.0;
        for (int q = 0; q < nqp; ++q) v = std::max(v, H[p * nqp + q]);
        for (int q = 0; q < nqp; ++q) out[t * nqp + q] = v;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

/// Boundary tags used by the builders.
enum BoundaryTag : int {
    kTagBottom = 1,
    kTagRight = 2,
    kTagTop = 3,
    kTagLeft = 4,
    kTagNotch = 5,
};

/// Structured rectangle [0,W]x[0,H] of nx*ny cells, two triangles per cell.
/// Diagonals mirror about the horizontal midline so the mesh is symmetric
/// under y -> H - y.
inline TriMesh structured_rectangle(double W, double H, int nx, int ny) {
    if (nx < 1 || ny < 1) throw InvalidParameter("structured_rectangle: nx, ny must be >= 1");
    TriMesh m;
    const auto vid = [nx](int i, int j) { return static_cast<VertexId>(j * (nx + 1) + i); };
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            m.vertices.push_back({W * i / nx, H * j / ny});
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const VertexId a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
            if (2 * j < ny) { // lower half: diagonal a-c
                m.triangles.push_back({a, b, c});
                m.triangles.push_back({a, c, d});
            } else { // upper half: diagonal b-d
                m.triangles.push_back({a, b, d});
                m.triangles.push_back({b, c, d});
            }
        }
    }
    for (int i = 0; i < nx; ++i) {
        m.boundary_edges.emplace(Edge(vid(i, 0), vid(i + 1, 0)), kTagBottom);
        m.boundary_edges.emplace(Edge(vid(i, ny), vid(i + 1, ny)), kTagTop);
    }
    for (int j = 0; j < ny; ++j) {
        m.boundary_edges.emplace(Edge(vid(0, j), vid(0, j + 1)), kTagLeft);
        m.boundary_edges.emplace(Edge(vid(nx, j), vid(nx, j + 1)), kTagRight);
    }
    assign_refinement_edges(m);
    return m;
}

/// Rectangle with a horizontal slit from the left edge at mid-height,
/// modeled by duplicating the vertices along the notch line. The notch tip
/// vertex is shared; triangles above the slit reference the upper copies.
/// Requires notch_len to land on a grid line and ny even.
inline TriMesh notched_rectangle(double W, double H, int nx, int ny, double notch_len) {
    if (ny % 2 != 0) throw InvalidParameter("notched_rectangle: ny must be even");
    if (!(notch_len > 0.0) || !(notch_len < W))
        throw InvalidParameter("notched_rectangle: notch length must lie in (0, W)");
    const double dx = W / nx;
    const int tip = static_cast<int>(std::lround(notch_len / dx));
    if (std::abs(tip * dx - notch_len) > 1e-9 * W)
        throw InvalidParameter("notched_rectangle: notch tip must align with the grid");

    TriMesh m = structured_rectangle(W, H, nx, ny);
    const int jmid = ny / 2;
    const auto vid = [nx](int i, int j) { return static_cast<VertexId>(j * (nx + 1) + i); };

    // Duplicate notch-line vertices strictly left of the tip.
    std::unordered_map<VertexId, VertexId> upper_copy;
    for (int i = 0; i < tip; ++i) {
        const VertexId v = vid(i, jmid);
        const VertexId dup = static_cast<VertexId>(m.vertices.size());
        m.vertices.push_back(m.vertices[v]);
        upper_copy.emplace(v, dup);
    }
    // Rewire triangles with centroid above the slit line.
    const double ymid = H * jmid / ny;
    for (TriId t = 0; t < m.n_triangles(); ++t) {
        if (m.centroid(t).y <= ymid) continue;
        for (auto& v : m.triangles[t]) {
            auto it = upper_copy.find(v);
            if (it != upper_copy.end()) v = it->second;
        }
    }
    // Rebuild the boundary map from the actual element edges: hull edges keep
    // their tags (looked up through the duplicate aliases), slit faces become
    // notch boundary.
    std::unordered_map<VertexId, VertexId> alias;
    for (const auto& [orig, dup] : upper_copy) alias.emplace(dup, orig);
    const auto original = [&alias](VertexId v) {
        auto it = alias.find(v);
        return it == alias.end() ? v : it->second;
    };
    std::unordered_map<std::uint64_t, int> incidence;
    for (const auto& tv : m.triangles)
        for (int e = 0; e < 3; ++e) ++incidence[edge_key(tv[e], tv[(e + 1) % 3])];
    const std::map<Edge, int> hull_tags = std::move(m.boundary_edges);
    m.boundary_edges.clear();
    for (const auto& [key, count] : incidence) {
        if (count != 1) continue;
        const VertexId a = static_cast<VertexId>(key >> 32), b = static_cast<VertexId>(key & 0xffffffffu);
        const auto it = hull_tags.find(Edge(original(a), original(b)));
        m.boundary_edges.emplace(Edge(a, b), it != hull_tags.end() ? it->second : kTagNotch);
    }
    assign_refinement_edges(m);
    return m;
}

// ---------------------------------------------------------------------------
// Plain-text mesh format
//
//   # comment lines start with '#'
//   vertices <n>
//   <x> <y>                 (n lines)
//   triangles <m>
//   <v0> <v1> <v2>          (m lines, zero-based, counter-clockwise)
//   boundary_edges <k>
//   <v0> <v1> <tag>         (k lines)
// ---------------------------------------------------------------------------

inline TriMesh read_mesh(std::istream& in) {
    TriMesh m;
    std::string line, word;
    auto next_content = [&](std::istringstream& iss) -> bool {
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            iss.clear();
            iss.str(line);
            return true;
        }
        return false;
    };
    std::istringstream iss;
    std::size_t n = 0;

    if (!next_content(iss) || !(iss >> word >> n) || word != "vertices")
        throw InvalidParameter("read_mesh: expected 'vertices <n>'");
    m.vertices.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x, y;
        if (!next_content(iss) || !(iss >> x >> y))
            throw InvalidParameter("read_mesh: bad vertex line");
        m.vertices.push_back({x, y});
    }
    if (!next_content(iss) || !(iss >> word >> n) || word != "triangles")
        throw InvalidParameter("read_mesh: expected 'triangles <n>'");
    m.triangles.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t a, b, c;
        if (!next_content(iss) || !(iss >> a >> b >> c))
            throw InvalidParameter("read_mesh: bad triangle line");
        if (a >= m.n_vertices() || b >= m.n_vertices() || c >= m.n_vertices())
            throw InvalidParameter("read_mesh: triangle vertex out of range");
        m.triangles.push_back({a, b, c});
    }
    if (next_content(iss) && (iss >> word >> n) && word == "boundary_edges") {
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t a, b;
            int tag;
            if (!next_content(iss) || !(iss >> a >> b >> tag))
                throw InvalidParameter("read_mesh: bad boundary edge line");
            m.boundary_edges.emplace(Edge(a, b), tag);
        }
    }
    for (TriId t = 0; t < m.n_triangles(); ++t)
        if (m.signed_area(t) <= 0.0)
            throw InvalidParameter("read_mesh: triangle " + std::to_string(t) +
                                   " is degenerate or clockwise");
    assign_refinement_edges(m);
    return m;
}

inline TriMesh read_mesh_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw FileNotFound("mesh file not found: " + path);
    return read_mesh(f);
}

inline void write_mesh(std::ostream& out, const TriMesh& m) {
    out << "# fractura mesh\n";
    out << "vertices " << m.n_vertices() << "\n";
    out.precision(17);
    for (const auto& v : m.vertices) out << v.x << " " << v.y << "\n";
    out << "triangles " << m.n_triangles() << "\n";
    for (const auto& t : m.triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
    out << "boundary_edges " << m.boundary_edges.size() << "\n";
    for (const auto& [e, tag] : m.boundary_edges) out << e.a << " " << e.b << " " << tag << "\n";
}

inline void write_mesh_file(const std::string& path, const TriMesh& m) {
    std::ofstream f(path);
    if (!f) throw FileNotFound("cannot open mesh file for writing: " + path);
    write_mesh(f, m);
}

} // namespace fractura
