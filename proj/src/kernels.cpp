#include "cantorflow/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace cantorflow {

namespace {

long long rational_floor(const Rational& q) {
    Int n = boost::multiprecision::numerator(q);
    Int d = boost::multiprecision::denominator(q);
    Int f = n / d;
    if (n < 0 && f * d != n) f -= 1;
    return f.convert_to<long long>();
}

long long rational_ceil(const Rational& q) {
    long long f = rational_floor(q);
    return Rational(f) == q ? f : f + 1;
}

double smooth_hat(double x, double lo, double hi) {
    if (x <= lo || x >= hi) return 0.0;
    double t = (x - lo) / (hi - lo);
    double s = std::sin(M_PI * t);
    return s * s;
}

} // namespace

std::shared_ptr<const KernelStage> KernelStage::build(const SuspensionFlow& flow, const ClopenSet& slice,
                                                      const std::vector<ClopenSet>* extra_cells,
                                                      long long max_steps) {
    auto stage = std::shared_ptr<KernelStage>(new KernelStage(flow));
    stage->slice_ = slice;

    std::vector<ClopenSet> cells = flow.roof().atom_cells();
    if (extra_cells)
        for (const auto& c : *extra_cells) cells.push_back(c);
    AmbientSystem amb(flow.system());
    ReturnPartition rp = return_partition(amb, slice, slice, max_steps, &cells);

    int depth = std::max(slice.depth(), flow.roof().depth());
    for (const auto& p : rp.pieces)
        for (long long i = 0; i < p.time; ++i) depth = std::max(depth, p.orbit[i].depth());
    stage->base_depth_ = depth;
    stage->base_atoms_ = flow.system()->depth_words(depth);
    size_t m = stage->base_atoms_.size();
    stage->base_tau_.resize(m);
    stage->slice_piece_of_.assign(m, -1);
    stage->base_offset_.resize(m);
    stage->reps_.resize(m);

    for (size_t a = 0; a < m; ++a)
        stage->base_tau_[a] = flow.roof().value_on_word(stage->base_atoms_[a]);

    for (const auto& p : rp.pieces) {
        int sp = static_cast<int>(stage->pieces_.size());
        stage->pieces_.push_back(p.piece);
        Rational arrive = 0;
        for (long long i = 0; i < p.time; ++i) {
            stage->floors_.push_back(p.orbit[i]);
            for (const auto& w : p.orbit[i].refined_words(depth)) {
                int idx = stage->atom_index(w);
                if (stage->slice_piece_of_[idx] != -1)
                    throw std::logic_error("overlapping suspension floors");
                stage->slice_piece_of_[idx] = sp;
                stage->base_offset_[idx] = arrive;
            }
            arrive += flow.roof().value_on_word(p.orbit[i].words().front());
        }
        stage->piece_return_.push_back(arrive);
    }
    for (size_t a = 0; a < m; ++a)
        if (stage->slice_piece_of_[a] < 0) throw std::logic_error("suspension floors do not cover the base");

    // Representative orbit ladders per piece.
    for (int sp = 0; sp < stage->piece_count(); ++sp) {
        const ClopenSet& piece = stage->pieces_[sp];
        int a0 = stage->atom_index(piece.refined_to(depth).words().front());
        PointCode z = stage->representative(a0);
        std::vector<int> atoms;
        std::vector<Rational> arrive;
        Rational acc = 0;
        arrive.push_back(acc);
        while (acc < stage->piece_return_[sp]) {
            int a = stage->atom_index(point_word(z, depth));
            atoms.push_back(a);
            acc += stage->base_tau_[a];
            arrive.push_back(acc);
            z = z.step(1);
        }
        if (acc != stage->piece_return_[sp]) throw std::logic_error("ladder does not close up at the return time");
        stage->piece_ladder_atoms_.push_back(std::move(atoms));
        stage->piece_ladder_arrive_.push_back(std::move(arrive));
    }
    return stage;
}

int KernelStage::atom_index(const std::string& word) const {
    auto it = std::lower_bound(base_atoms_.begin(), base_atoms_.end(), word);
    if (it == base_atoms_.end() || *it != word) throw std::invalid_argument("word is not a base atom");
    return static_cast<int>(it - base_atoms_.begin());
}

const PointCode& KernelStage::representative(int atom) const {
    std::lock_guard<std::mutex> lock(rep_mutex_);
    if (reps_[atom]) return *reps_[atom];
    const std::string& w = base_atoms_[atom];
    if (flow_.system()->is_odometer()) {
        reps_[atom] = std::make_shared<const PointCode>(
            PointCode::odometer_point(flow_.system(), w, "0"));
    } else {
        // Shift the canonical fixed point onto the first occurrence of w.
        PointCode x = PointCode::substitution_fixed_point(flow_.system());
        long long len = static_cast<long long>(w.size());
        long long j = 0;
        const long long scan_guard = 4000000;
        for (;; ++j) {
            if (j > scan_guard) throw GuardExceeded("no occurrence of atom word found in the fixed point");
            bool match = true;
            for (long long k = 0; k < len && match; ++k)
                if (x.at(j + k) != w[static_cast<size_t>(k)]) match = false;
            if (match) break;
        }
        reps_[atom] = std::make_shared<const PointCode>(x.step(j + len / 2));
    }
    return *reps_[atom];
}

std::pair<int, Rational> KernelStage::flow_from(int atom, const Rational& u, const Rational& shift) const {
    SuspensionPoint p{representative(atom), u};
    SuspensionPoint q = flow_.flow_step(p, shift);
    int idx = atom_index(point_word(q.base, base_depth_));
    return {idx, q.fiber};
}

CrossedElement::CrossedElement(std::shared_ptr<const KernelStage> stage, FiberGrid grid, const Rational& support)
    : stage_(std::move(stage)), grid_(grid), support_(support) {
    m_max_ = static_cast<int>(rational_ceil(support_ / delta()));
    vals_.assign(static_cast<size_t>(2 * m_max_ + 1) * stage_->base_atoms().size() * grid_.n, 0.0);
}

size_t CrossedElement::index(int m, int atom, int node) const {
    return (static_cast<size_t>(m + m_max_) * stage_->base_atoms().size() + atom) * grid_.n + (node - 1);
}

double& CrossedElement::value(int m, int atom, int node) { return vals_[index(m, atom, node)]; }
double CrossedElement::value(int m, int atom, int node) const { return vals_[index(m, atom, node)]; }

double CrossedElement::eval(const Rational& s, int atom, const Rational& v) const {
    if (v <= 0 || v >= 1) return 0.0;
    Rational si = s / delta();
    long long lo = rational_floor(si);
    double sw = to_double(si - Rational(lo));
    Rational vi = v * (grid_.n + 1);
    long long vlo = rational_floor(vi);
    double vw = to_double(vi - Rational(vlo));

    auto at = [&](long long m, long long node) -> double {
        if (m < -m_max_ || m > m_max_) return 0.0;
        if (node < 1 || node > grid_.n) return 0.0;
        return value(static_cast<int>(m), atom, static_cast<int>(node));
    };
    double a0 = at(lo, vlo) * (1 - vw) + at(lo, vlo + 1) * vw;
    if (sw == 0.0) return a0;
    double a1 = at(lo + 1, vlo) * (1 - vw) + at(lo + 1, vlo + 1) * vw;
    return a0 * (1 - sw) + a1 * sw;
}

bool CrossedElement::masked(int m, int atom, int node) const {
    if (m == 0) return false;
    const Rational& off = stage_->base_offset()[atom];
    const Rational& tau = stage_->base_tau()[atom];
    Rational u = off + grid_.node(node) * tau;
    Rational s = Rational(m) * delta();
    if (m > 0) return u <= s;
    Rational t_y = stage_->piece_return()[stage_->slice_piece_of()[atom]];
    return t_y - u <= -s;
}

void CrossedElement::enforce_mask() {
    for (int m = -m_max_; m <= m_max_; ++m)
        for (size_t a = 0; a < stage_->base_atoms().size(); ++a)
            for (int i = 1; i <= grid_.n; ++i)
                if (masked(m, static_cast<int>(a), i)) value(m, static_cast<int>(a), i) = 0.0;
}

bool CrossedElement::mask_holds() const {
    for (int m = -m_max_; m <= m_max_; ++m)
        for (size_t a = 0; a < stage_->base_atoms().size(); ++a)
            for (int i = 1; i <= grid_.n; ++i)
                if (masked(m, static_cast<int>(a), i) && value(m, static_cast<int>(a), i) != 0.0) return false;
    return true;
}

double CrossedElement::max_abs() const {
    double m = 0.0;
    for (double v : vals_) m = std::max(m, std::abs(v));
    return m;
}

double CrossedElement::max_diff(const CrossedElement& other) const {
    if (stage_ != other.stage_ || grid_.n != other.grid_.n)
        throw std::invalid_argument("crossed element stage/grid mismatch");
    // Supports may differ; out-of-range samples are zero.
    int mm = std::max(m_max_, other.m_max_);
    double m = 0.0;
    for (int s = -mm; s <= mm; ++s)
        for (size_t a = 0; a < stage_->base_atoms().size(); ++a)
            for (int i = 1; i <= grid_.n; ++i) {
                double x = std::abs(s) <= m_max_ ? value(s, static_cast<int>(a), i) : 0.0;
                double y = std::abs(s) <= other.m_max_ ? other.value(s, static_cast<int>(a), i) : 0.0;
                m = std::max(m, std::abs(x - y));
            }
    return m;
}

CrossedElement make_bump(std::shared_ptr<const KernelStage> stage, FiberGrid grid,
                         double s_lo, double s_hi, double v_lo, double v_hi, double amplitude) {
    Rational support(static_cast<long long>(std::ceil(std::max(std::abs(s_lo), std::abs(s_hi)) * 1000)), 1000);
    CrossedElement f(std::move(stage), grid, support);
    double delta = to_double(f.delta());
    for (int m = -f.m_max(); m <= f.m_max(); ++m) {
        double b = smooth_hat(m * delta, s_lo, s_hi);
        if (b == 0.0) continue;
        for (size_t a = 0; a < f.stage().base_atoms().size(); ++a)
            for (int i = 1; i <= grid.n; ++i)
                f.value(m, static_cast<int>(a), i) = amplitude * b * smooth_hat(grid.node_d(i), v_lo, v_hi);
    }
    f.enforce_mask();
    return f;
}

CrossedElement convolve(const CrossedElement& f, const CrossedElement& g) {
    if (f.stage_ptr() != g.stage_ptr() || f.grid().n != g.grid().n)
        throw std::invalid_argument("convolve needs matching stages and grids");
    const KernelStage& st = f.stage();
    int n = f.grid().n;
    int atoms = static_cast<int>(st.base_atoms().size());
    CrossedElement out(f.stage_ptr(), f.grid(), f.support() + g.support());
    double dd = to_double(f.delta());

    // Landing data of phi_{-r}(x) per (atom, node, r-index).
    struct Land {
        int atom;
        int lo;
        double w_hi;
    };
    std::vector<Land> land(static_cast<size_t>(atoms) * n * (2 * f.m_max() + 1));
    for (int a = 0; a < atoms; ++a) {
        Rational tau = st.base_tau()[a];
        for (int i = 1; i <= n; ++i) {
            Rational u = f.grid().node(i) * tau;
            for (int k = -f.m_max(); k <= f.m_max(); ++k) {
                auto [atom2, u2] = st.flow_from(a, u, -Rational(k) * f.delta());
                Rational v2 = u2 / st.base_tau()[atom2];
                Rational vi = v2 * (n + 1);
                long long vlo = rational_floor(vi);
                double w = to_double(vi - Rational(vlo));
                size_t idx = (static_cast<size_t>(a) * n + (i - 1)) * (2 * f.m_max() + 1) + (k + f.m_max());
                land[idx] = Land{atom2, static_cast<int>(vlo), w};
            }
        }
    }

    auto g_at = [&](int m, int atom, int node) -> double {
        if (m < -g.m_max() || m > g.m_max()) return 0.0;
        if (node < 1 || node > n) return 0.0;
        return g.value(m, atom, node);
    };

    for (int m = -out.m_max(); m <= out.m_max(); ++m) {
        for (int a = 0; a < atoms; ++a) {
            for (int i = 1; i <= n; ++i) {
                double acc = 0.0;
                for (int k = -f.m_max(); k <= f.m_max(); ++k) {
                    double fv = f.value(k, a, i);
                    if (fv == 0.0) continue;
                    size_t idx = (static_cast<size_t>(a) * n + (i - 1)) * (2 * f.m_max() + 1) + (k + f.m_max());
                    const Land& l = land[idx];
                    double gv = g_at(m - k, l.atom, l.lo) * (1 - l.w_hi) + g_at(m - k, l.atom, l.lo + 1) * l.w_hi;
                    acc += fv * gv;
                }
                out.value(m, a, i) = acc * dd;
            }
        }
    }
    out.enforce_mask();
    return out;
}

CrossedElement adjoint(const CrossedElement& f) {
    const KernelStage& st = f.stage();
    int n = f.grid().n;
    CrossedElement out(f.stage_ptr(), f.grid(), f.support());
    for (int m = -f.m_max(); m <= f.m_max(); ++m) {
        Rational s = Rational(m) * f.delta();
        for (size_t a = 0; a < st.base_atoms().size(); ++a) {
            Rational tau = st.base_tau()[a];
            for (int i = 1; i <= n; ++i) {
                auto [atom2, u2] = st.flow_from(static_cast<int>(a), f.grid().node(i) * tau, -s);
                double v = f.eval(-s, atom2, u2 / st.base_tau()[atom2]);
                out.value(m, static_cast<int>(a), i) = v;
            }
        }
    }
    out.enforce_mask();
    return out;
}

KernelField::KernelField(std::shared_ptr<const KernelStage> stage, FiberGrid grid)
    : stage_(std::move(stage)), grid_(grid) {
    vals_.assign(static_cast<size_t>(stage_->piece_count()) * grid_.n * grid_.n, 0.0);
}

double& KernelField::at(int piece, int s_node, int t_node) {
    return vals_[(static_cast<size_t>(piece) * grid_.n + (s_node - 1)) * grid_.n + (t_node - 1)];
}

double KernelField::at(int piece, int s_node, int t_node) const {
    return vals_[(static_cast<size_t>(piece) * grid_.n + (s_node - 1)) * grid_.n + (t_node - 1)];
}

double KernelField::eval(int piece, double s, double t) const {
    if (s <= 0 || s >= 1 || t <= 0 || t >= 1) return 0.0;
    double si = s * (grid_.n + 1), ti = t * (grid_.n + 1);
    int slo = static_cast<int>(std::floor(si)), tlo = static_cast<int>(std::floor(ti));
    double sw = si - slo, tw = ti - tlo;
    auto v = [&](int i, int j) -> double {
        if (i < 1 || i > grid_.n || j < 1 || j > grid_.n) return 0.0;
        return at(piece, i, j);
    };
    return v(slo, tlo) * (1 - sw) * (1 - tw) + v(slo + 1, tlo) * sw * (1 - tw) +
           v(slo, tlo + 1) * (1 - sw) * tw + v(slo + 1, tlo + 1) * sw * tw;
}

double KernelField::max_abs() const {
    double m = 0.0;
    for (double v : vals_) m = std::max(m, std::abs(v));
    return m;
}

double KernelField::boundary_max() const {
    double m = 0.0;
    for (int p = 0; p < stage_->piece_count(); ++p)
        for (int i = 1; i <= grid_.n; ++i) {
            m = std::max(m, std::abs(at(p, 1, i)));
            m = std::max(m, std::abs(at(p, grid_.n, i)));
            m = std::max(m, std::abs(at(p, i, 1)));
            m = std::max(m, std::abs(at(p, i, grid_.n)));
        }
    return m;
}

KernelField KernelField::compose(const KernelField& other) const {
    if (stage_ != other.stage_ || grid_.n != other.grid_.n)
        throw std::invalid_argument("kernel composition needs matching stages and grids");
    KernelField out(stage_, grid_);
    double h = grid_.h();
    for (int p = 0; p < stage_->piece_count(); ++p)
        for (int s = 1; s <= grid_.n; ++s)
            for (int t = 1; t <= grid_.n; ++t) {
                double acc = 0.0;
                for (int r = 1; r <= grid_.n; ++r) acc += at(p, r, t) * other.at(p, s, r);
                out.at(p, s, t) = acc * h;
            }
    return out;
}

double KernelField::max_diff(const KernelField& other) const {
    if (vals_.size() != other.vals_.size()) throw std::invalid_argument("kernel field shape mismatch");
    double m = 0.0;
    for (size_t i = 0; i < vals_.size(); ++i) m = std::max(m, std::abs(vals_[i] - other.vals_[i]));
    return m;
}

KernelField pi_n(const CrossedElement& f) {
    if (!f.mask_holds()) throw std::invalid_argument("pi_n input violates the vanishing mask");
    const KernelStage& st = f.stage();
    KernelField k(f.stage_ptr(), f.grid());
    int n = f.grid().n;
    for (int p = 0; p < st.piece_count(); ++p) {
        const Rational& t_y = st.piece_return()[p];
        const auto& atoms = st.piece_ladder_atoms()[p];
        const auto& arrive = st.piece_ladder_arrive()[p];
        for (int j = 1; j <= n; ++j) {
            Rational big_t = t_y * f.grid().node(j);
            size_t floor = 0;
            while (floor + 1 < arrive.size() && arrive[floor + 1] <= big_t) ++floor;
            int atom = atoms[floor];
            Rational v = (big_t - arrive[floor]) / st.base_tau()[atom];
            for (int i = 1; i <= n; ++i) {
                Rational s_arg = t_y * (f.grid().node(j) - f.grid().node(i));
                k.at(p, i, j) = to_double(t_y) * f.eval(s_arg, atom, v);
            }
        }
    }
    return k;
}

CrossedElement pi_n_inverse(const KernelField& k) {
    const KernelStage& st = k.stage();
    Rational support = 0;
    for (const auto& r : st.piece_return()) support = std::max(support, r);
    CrossedElement f(k.stage_ptr(), k.grid(), support);
    int n = k.grid().n;
    for (int m = -f.m_max(); m <= f.m_max(); ++m) {
        Rational s = Rational(m) * f.delta();
        for (size_t a = 0; a < st.base_atoms().size(); ++a) {
            int piece = st.slice_piece_of()[a];
            const Rational& t_y = st.piece_return()[piece];
            Rational tau = st.base_tau()[a];
            const Rational& off = st.base_offset()[a];
            for (int i = 1; i <= n; ++i) {
                Rational u = off + k.grid().node(i) * tau;
                Rational num = u - s;
                if (num < 0 || num > t_y) continue;
                f.value(m, static_cast<int>(a), i) =
                    to_double(Rational(1) / t_y) * k.eval(piece, to_double(num / t_y), to_double(u / t_y));
            }
        }
    }
    f.enforce_mask();
    return f;
}

namespace {

double mu_prime_total(const KernelStage& st, const InvariantMeasure& mu) {
    double total = 0.0;
    for (size_t a = 0; a < st.base_atoms().size(); ++a)
        total += mu.cylinder_weight(st.base_depth(), st.base_atoms()[a]).value * to_double(st.base_tau()[a]);
    return total;
}

} // namespace

double trace_tau_mu(const CrossedElement& f, const InvariantMeasure& mu) {
    const KernelStage& st = f.stage();
    double h = f.grid().h();
    double acc = 0.0;
    for (size_t a = 0; a < st.base_atoms().size(); ++a) {
        double inner = 0.0;
        for (int i = 1; i <= f.grid().n; ++i) inner += f.value(0, static_cast<int>(a), i);
        acc += mu.cylinder_weight(st.base_depth(), st.base_atoms()[a]).value * to_double(st.base_tau()[a]) * inner * h;
    }
    return acc / mu_prime_total(st, mu);
}

double trace_field(const KernelField& k, const InvariantMeasure& mu) {
    const KernelStage& st = k.stage();
    double h = k.grid().h();
    double acc = 0.0;
    for (int p = 0; p < st.piece_count(); ++p) {
        double inner = 0.0;
        for (int i = 1; i <= k.grid().n; ++i) inner += k.at(p, i, i);
        acc += mu.set_weight(st.pieces()[p]).value * inner * h;
    }
    return acc / mu_prime_total(st, mu);
}

EmbeddingData EmbeddingData::build(const SuspensionFlow& flow, const ClopenSet& outer_slice,
                                   const ClopenSet& inner_slice, long long max_steps) {
    if (!inner_slice.subset_of(outer_slice))
        throw std::invalid_argument("embedding needs nested slices");
    EmbeddingData emb;
    emb.from = KernelStage::build(flow, outer_slice, nullptr, max_steps);
    // Inner pieces refined against the outer Kakutani floors, so the outer
    // visit pattern is constant on every inner piece.
    std::vector<ClopenSet> cells = emb.from->floors();
    emb.to = KernelStage::build(flow, inner_slice, &cells, max_steps);

    // Walk the representative orbit of each inner piece; a ladder position
    // sits on the outer section exactly when its outer-stage offset is zero.
    for (int p = 0; p < emb.to->piece_count(); ++p) {
        const auto& atoms = emb.to->piece_ladder_atoms()[p];
        const auto& arrive = emb.to->piece_ladder_arrive()[p];
        std::vector<int> visits;
        std::vector<Rational> visit_arrive;
        for (size_t i = 0; i < atoms.size(); ++i) {
            const PointCode& z = emb.to->representative(atoms[i]);
            int outer_atom = emb.from->atom_index(point_word(z, emb.from->base_depth()));
            if (emb.from->base_offset()[outer_atom] == 0) {
                visits.push_back(emb.from->slice_piece_of()[outer_atom]);
                visit_arrive.push_back(arrive[i]);
            }
        }
        visit_arrive.push_back(emb.to->piece_return()[p]);
        if (visits.empty() || visit_arrive.front() != 0)
            throw std::logic_error("inner orbit does not start on the outer section");
        emb.visit_pieces.push_back(std::move(visits));
        emb.visit_arrive.push_back(std::move(visit_arrive));
    }
    return emb;
}

KernelField embed_kernels(const KernelField& k, const EmbeddingData& emb) {
    if (k.stage_ptr() != emb.from) throw std::invalid_argument("kernel field is not on the embedding source stage");
    KernelField out(emb.to, k.grid());
    int n = k.grid().n;
    for (int p = 0; p < emb.to->piece_count(); ++p) {
        const Rational& t_next = emb.to->piece_return()[p];
        const auto& visits = emb.visit_pieces[p];
        const auto& c = emb.visit_arrive[p];
        for (int j = 1; j <= n; ++j) {
            Rational t_phys = t_next * k.grid().node(j);
            size_t block = 0;
            while (block + 1 < c.size() && c[block + 1] <= t_phys) ++block;
            if (block >= visits.size()) continue;
            Rational len = c[block + 1] - c[block];
            double t_loc = to_double((t_phys - c[block]) / len);
            double scale = to_double(t_next / len);
            for (int i = 1; i <= n; ++i) {
                Rational s_phys = t_next * k.grid().node(i);
                if (s_phys < c[block] || s_phys > c[block + 1]) continue;
                double s_loc = to_double((s_phys - c[block]) / len);
                out.at(p, i, j) = scale * k.eval(visits[block], s_loc, t_loc);
            }
        }
    }
    return out;
}

IsometryCheck check_embedding_isometries(const EmbeddingData& emb, FiberGrid grid) {
    IsometryCheck chk;
    int n = grid.n;
    double h = grid.h();
    // Smooth test vectors.
    std::vector<std::vector<double>> xs;
    for (int q = 0; q < 3; ++q) {
        std::vector<double> x(n + 1, 0.0);
        for (int i = 1; i <= n; ++i) {
            double v = grid.node_d(i);
            x[i] = std::sin(M_PI * v) * std::sin(M_PI * v) * std::cos(q * M_PI * v);
        }
        xs.push_back(std::move(x));
    }
    auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (int i = 1; i <= n; ++i) s += a[i] * b[i];
        return s * h;
    };
    for (int p = 0; p < emb.to->piece_count(); ++p) {
        const Rational& t_next = emb.to->piece_return()[p];
        const auto& c = emb.visit_arrive[p];
        size_t blocks = emb.visit_pieces[p].size();
        // U^{(k)} xi sampled on the grid.
        std::vector<std::vector<std::vector<double>>> ux(blocks);
        for (size_t b = 0; b < blocks; ++b) {
            Rational len = c[b + 1] - c[b];
            double scale = std::sqrt(to_double(t_next / len));
            for (const auto& x : xs) {
                std::vector<double> u(n + 1, 0.0);
                for (int i = 1; i <= n; ++i) {
                    Rational t_phys = t_next * grid.node(i);
                    if (t_phys <= c[b] || t_phys >= c[b + 1]) continue;
                    double t_loc = to_double((t_phys - c[b]) / len);
                    double ti = t_loc * (n + 1);
                    int lo = static_cast<int>(std::floor(ti));
                    double w = ti - lo;
                    double xv = 0.0;
                    if (lo >= 1 && lo <= n) xv += x[lo] * (1 - w);
                    if (lo + 1 >= 1 && lo + 1 <= n) xv += x[lo + 1] * w;
                    u[i] = scale * xv;
                }
                ux[b].push_back(std::move(u));
            }
        }
        for (size_t b = 0; b < blocks; ++b)
            for (size_t x1 = 0; x1 < xs.size(); ++x1)
                for (size_t x2 = 0; x2 < xs.size(); ++x2) {
                    double lhs = dot(ux[b][x1], ux[b][x2]);
                    double rhs = dot(xs[x1], xs[x2]);
                    chk.isometry_defect = std::max(chk.isometry_defect, std::abs(lhs - rhs));
                    for (size_t b2 = b + 1; b2 < blocks; ++b2)
                        chk.orthogonality_defect =
                            std::max(chk.orthogonality_defect, std::abs(dot(ux[b][x1], ux[b2][x2])));
                }
    }
    return chk;
}

} // namespace cantorflow
