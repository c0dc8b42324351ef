#include "sisparrow/array_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sisparrow/errors.hpp"

namespace sisparrow {

IndexList ArrayGeometry::observable_indices() const
{
    IndexList failed = failed_sensors;
    std::sort(failed.begin(), failed.end());
    IndexList out;
    for (Index m = 0; m < num_sensors(); ++m)
        if (!std::binary_search(failed.begin(), failed.end(), m))
            out.push_back(m);
    return out;
}

void ArrayGeometry::validate() const
{
    if (Px < 1 || Py < 1 || Lx < 1 || Ly < 1)
        throw InvalidArgument("array dimensions must be positive");
    if (delta_x.size() != Lx || delta_y.size() != Ly)
        throw InvalidArgument("intra-subarray positions must have Lx and Ly entries");
    if (delta_x(0) != 0 || delta_y(0) != 0)
        throw InvalidArgument("first intra-subarray position must be 0");
    if (Delta_x) {
        if (Delta_x->size() != Px || (*Delta_x)(0) != 0)
            throw InvalidArgument("Delta_x must have Px entries starting at 0");
    }
    if (Delta_y) {
        if (Delta_y->size() != Py || (*Delta_y)(0) != 0)
            throw InvalidArgument("Delta_y must have Py entries starting at 0");
    }
    for (Index m : failed_sensors)
        if (m < 0 || m >= num_sensors())
            throw InvalidArgument("failed sensor index " + std::to_string(m) + " out of range");
    if (Index(observable_indices().size()) == 0)
        throw InvalidArgument("no observable sensors");
}

ArrayGeometry ArrayGeometry::uniform(Index Px, Index Py, Index Lx, Index Ly, Real gap_x, Real gap_y)
{
    ArrayGeometry g;
    g.Px = Px;
    g.Py = Py;
    g.Lx = Lx;
    g.Ly = Ly;
    g.delta_x = RVector::LinSpaced(Lx, 0, Real(Lx - 1));
    g.delta_y = RVector::LinSpaced(Ly, 0, Real(Ly - 1));
    RVector dx(Px), dy(Py);
    for (Index p = 0; p < Px; ++p)
        dx(p) = Real(p) * (Real(Lx) + gap_x);
    for (Index p = 0; p < Py; ++p)
        dy(p) = Real(p) * (Real(Ly) + gap_y);
    g.Delta_x = dx;
    g.Delta_y = dy;
    return g;
}

CVector subarray_response(const RVector& delta, Real mu)
{
    CVector v(delta.size());
    for (Index k = 0; k < delta.size(); ++k)
        v(k) = std::polar(Real(1), mu * delta(k));
    return v;
}

namespace {

CVector axis_response(const RVector& Delta, const RVector& delta, Real mu)
{
    const Index P = Delta.size();
    const Index L = delta.size();
    CVector a(P * L);
    for (Index p = 0; p < P; ++p)
        for (Index k = 0; k < L; ++k)
            a(p * L + k) = std::polar(Real(1), mu * (Delta(p) + delta(k)));
    return a;
}

} // namespace

CVector steering_vector(const ArrayGeometry& geom, Real mu_x, Real mu_y)
{
    if (!geom.fully_known())
        throw InvalidArgument("steering vector requires known inter-subarray displacements");
    const CVector ax = axis_response(*geom.Delta_x, geom.delta_x, mu_x);
    const CVector ay = axis_response(*geom.Delta_y, geom.delta_y, mu_y);
    CVector a(ax.size() * ay.size());
    for (Index i = 0; i < ax.size(); ++i)
        a.segment(i * ay.size(), ay.size()) = ax(i) * ay;
    return a;
}

CMatrix steering_matrix(const ArrayGeometry& geom, const std::vector<FrequencyPair>& freqs)
{
    CMatrix A(geom.num_sensors(), Index(freqs.size()));
    for (Index k = 0; k < Index(freqs.size()); ++k)
        A.col(k) = steering_vector(geom, freqs[k].mu_x, freqs[k].mu_y);
    return A;
}

SelectionSet selection_matrices(const ArrayGeometry& geom)
{
    const Index Px = geom.Px, Py = geom.Py, Lx = geom.Lx, Ly = geom.Ly;
    SelectionSet s;
    s.jx.assign(Px, {});
    s.kx.assign(Lx, {});
    s.jy.assign(Py, {});
    s.ky.assign(Ly, {});
    // Iterating in lexicographic (p, k, q, l) order yields, for every
    // selector, exactly the row order of the Kronecker definition.
    for (Index p = 0; p < Px; ++p)
        for (Index k = 0; k < Lx; ++k)
            for (Index q = 0; q < Py; ++q)
                for (Index l = 0; l < Ly; ++l) {
                    const Index m = geom.sensor_index(p, k, q, l);
                    s.jx[p].push_back(m);
                    s.kx[k].push_back(m);
                    s.jy[q].push_back(m);
                    s.ky[l].push_back(m);
                }
    return s;
}

std::vector<EntryIdentity> structural_identities(const ArrayGeometry& geom)
{
    const SelectionSet sel = selection_matrices(geom);
    std::vector<EntryIdentity> ids;
    auto add_family = [&](const std::vector<IndexList>& groups) {
        for (std::size_t g = 1; g < groups.size(); ++g) {
            const IndexList& ref = groups[0];
            const IndexList& cur = groups[g];
            for (std::size_t a = 0; a < cur.size(); ++a)
                for (std::size_t b = 0; b < cur.size(); ++b)
                    ids.push_back({{cur[a], cur[b]}, {ref[a], ref[b]}});
        }
    };
    add_family(sel.jx);
    add_family(sel.kx);
    add_family(sel.jy);
    add_family(sel.ky);
    for (Index i = 1; i < geom.num_sensors(); ++i)
        ids.push_back({{i, i}, {0, 0}});
    return ids;
}

namespace {

// Union-find over upper-triangle entries where every node carries a parity
// bit: value(node) = conj^parity(value(root)).
class ConjugateUnionFind
{
public:
    explicit ConjugateUnionFind(Index n) : parent_(n), parity_(n, 0), real_(n, 0)
    {
        std::iota(parent_.begin(), parent_.end(), Index(0));
    }

    std::pair<Index, int> find(Index x)
    {
        int par = 0;
        Index r = x;
        while (parent_[r] != r) {
            par ^= parity_[r];
            r = parent_[r];
        }
        // path compression
        int acc = par;
        while (parent_[x] != x) {
            const Index next = parent_[x];
            const int px = parity_[x];
            parent_[x] = r;
            parity_[x] = acc;
            acc ^= px;
            x = next;
        }
        return {r, par};
    }

    // Impose conj^ca(value(a)) == conj^cb(value(b)).
    void unite(Index a, int ca, Index b, int cb)
    {
        auto [ra, pa] = find(a);
        auto [rb, pb] = find(b);
        const int rel = ca ^ pa ^ cb ^ pb;
        if (ra == rb) {
            if (rel)
                real_[ra] = 1;
            return;
        }
        parent_[ra] = rb;
        parity_[ra] = rel;
        real_[rb] = real_[rb] | real_[ra];
    }

    void mark_real(Index a) { real_[find(a).first] = 1; }
    bool is_real(Index root) const { return real_[root] != 0; }

private:
    std::vector<Index> parent_;
    std::vector<int> parity_;
    std::vector<char> real_;
};

} // namespace

ShiftStructure build_shift_structure(Index M, const std::vector<EntryIdentity>& identities)
{
    ConjugateUnionFind uf(M * M);
    auto node = [M](const Entry& e) -> std::pair<Index, int> {
        if (e.row <= e.col)
            return {e.row * M + e.col, 0};
        return {e.col * M + e.row, 1};
    };
    for (Index i = 0; i < M; ++i)
        uf.mark_real(i * M + i);
    for (const auto& id : identities) {
        if (id.a.row < 0 || id.a.row >= M || id.a.col < 0 || id.a.col >= M || id.b.row < 0 ||
            id.b.row >= M || id.b.col < 0 || id.b.col >= M)
            throw InvalidArgument("entry identity out of range");
        auto [na, ca] = node(id.a);
        auto [nb, cb] = node(id.b);
        uf.unite(na, ca, nb, cb);
    }

    ShiftStructure s;
    s.M = M;
    std::vector<Index> class_of_root(M * M, -1);
    std::vector<int> ref_parity;
    for (Index r = 0; r < M; ++r) {
        for (Index c = r; c < M; ++c) {
            auto [root, par] = uf.find(r * M + c);
            Index& cls = class_of_root[root];
            if (cls < 0) {
                cls = s.size();
                ShiftClass sc;
                sc.is_real = uf.is_real(root);
                s.classes.push_back(std::move(sc));
                ref_parity.push_back(par);
            }
            ShiftClass& sc = s.classes[cls];
            if (r == c)
                sc.has_diagonal = true;
            if (sc.is_real) {
                sc.entries.push_back({r, c});
                if (r != c)
                    sc.entries.push_back({c, r});
            } else if ((par ^ ref_parity[cls]) == 0) {
                sc.entries.push_back({r, c});
            } else {
                sc.entries.push_back({c, r});
            }
        }
    }
    return s;
}

ShiftStructure build_shift_structure(const ArrayGeometry& geom)
{
    return build_shift_structure(geom.num_sensors(), structural_identities(geom));
}

ShiftStructure ShiftStructure::unstructured(Index M)
{
    ShiftStructure s;
    s.M = M;
    for (Index r = 0; r < M; ++r)
        for (Index c = r; c < M; ++c) {
            ShiftClass sc;
            sc.is_real = (r == c);
            sc.has_diagonal = (r == c);
            sc.entries.push_back({r, c});
            s.classes.push_back(std::move(sc));
        }
    return s;
}

CVector extract_q(const CMatrix& Q, const ShiftStructure& s)
{
    if (Q.rows() != s.M || Q.cols() != s.M)
        throw DimensionMismatch("matrix size does not match the shift structure");
    CVector q(s.size());
    for (Index i = 0; i < s.size(); ++i) {
        const ShiftClass& sc = s.classes[i];
        Cplx acc = 0;
        for (const Entry& e : sc.entries)
            acc += Q(e.row, e.col);
        acc /= Real(sc.entries.size());
        q(i) = sc.is_real ? Cplx(acc.real(), 0) : acc;
    }
    return q;
}

CMatrix assemble_Q(const CVector& q, const ShiftStructure& s)
{
    if (q.size() != s.size())
        throw DimensionMismatch("independent-variable vector has the wrong length");
    CMatrix Q = CMatrix::Zero(s.M, s.M);
    for (Index i = 0; i < s.size(); ++i) {
        const ShiftClass& sc = s.classes[i];
        if (sc.is_real) {
            if (std::abs(q(i).imag()) > 1e-12 * (1 + std::abs(q(i))))
                throw InvalidArgument("non-real value supplied for a real-valued class");
            for (const Entry& e : sc.entries)
                Q(e.row, e.col) = q(i).real();
        } else {
            for (const Entry& e : sc.entries) {
                Q(e.row, e.col) = q(i);
                Q(e.col, e.row) = std::conj(q(i));
            }
        }
    }
    return Q;
}

CMatrix project_onto_structure(const CMatrix& Q, const ShiftStructure& s)
{
    return assemble_Q(extract_q(Q, s), s);
}

Real structure_residual(const CMatrix& Q, const std::vector<EntryIdentity>& identities)
{
    Real worst = 0;
    for (const auto& id : identities)
        worst = std::max(worst, std::abs(Q(id.a.row, id.a.col) - Q(id.b.row, id.b.col)));
    return worst;
}

} // namespace sisparrow
