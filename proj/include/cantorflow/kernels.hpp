// Quadrature-scale realization of the kernel picture of the crossed product:
// discretized elements of the orbit-vanishing *-algebra, the kernel transform
// pi_n and its inverse, traces, and the block embedding between stages.
#ifndef CANTORFLOW_KERNELS_HPP
#define CANTORFLOW_KERNELS_HPP

#include "cantorflow/measure.hpp"
#include "cantorflow/suspension.hpp"

namespace cantorflow {

// Uniform interior grid on (0,1): nodes i/(N+1), i = 1..N, trapezoid weight
// h = 1/(N+1) each (integrands vanish at the boundary).
struct FiberGrid {
    int n = 64;
    double h() const { return 1.0 / (n + 1); }
    Rational node(int i) const { return Rational(i, n + 1); }
    double node_d(int i) const { return static_cast<double>(i) / (n + 1); }
};

// Tolerance constants calibrated once on the dyadic mapping-torus bump suite
// at N = 64 (observed max error times a safety factor of about 2; the
// grid-aligned identities that evaluate exactly get a roundoff allowance).
struct KernelTolerances {
    double homomorphism = 4.0e-4;
    double involution = 1.0e-9;
    double trace = 1.0e-9;
    double round_trip = 7.0e-3;
    double compatibility = 1.0e-9;
    double isometry = 1.0e-12;
    double convergence_ratio = 0.7;
    double ratio_floor = 1.0e-14;                              // roundoff allowance
    double scale(int grid_n) const { return 64.0 / grid_n; }   // errors decay at least O(h)
};

// Decomposition of the suspension over a stage slice S_n: the full base is
// partitioned into atoms, each knowing its slice piece, the flow offset of
// its section above S_n, and the roof value; slice pieces carry their return
// times and the arrive-time ladder of their orbit.
class KernelStage {
public:
    static std::shared_ptr<const KernelStage> build(const SuspensionFlow& flow, const ClopenSet& slice,
                                                    const std::vector<ClopenSet>* extra_cells = nullptr,
                                                    long long max_steps = kDefaultMaxSteps);

    const SuspensionFlow& flow() const { return flow_; }
    const ClopenSet& slice() const { return slice_; }
    int base_depth() const { return base_depth_; }
    const std::vector<std::string>& base_atoms() const { return base_atoms_; }
    const std::vector<Rational>& base_tau() const { return base_tau_; }
    const std::vector<int>& slice_piece_of() const { return slice_piece_of_; }
    const std::vector<Rational>& base_offset() const { return base_offset_; }

    int piece_count() const { return static_cast<int>(pieces_.size()); }
    const std::vector<ClopenSet>& pieces() const { return pieces_; }
    // All ambient Kakutani floors over the slice (they partition the base).
    const std::vector<ClopenSet>& floors() const { return floors_; }
    const std::vector<Rational>& piece_return() const { return piece_return_; }
    // Ladder of the rep orbit: atoms visited at each base-section crossing
    // and cumulative flow times (arrive ladder, size steps + 1).
    const std::vector<std::vector<int>>& piece_ladder_atoms() const { return piece_ladder_atoms_; }
    const std::vector<std::vector<Rational>>& piece_ladder_arrive() const { return piece_ladder_arrive_; }

    int atom_index(const std::string& word) const;
    const PointCode& representative(int atom) const;
    // Exact landing of the flow from the sampled point of atom `a` at fiber
    // time u (0 <= u < tau_a) displaced by `shift`.
    std::pair<int, Rational> flow_from(int atom, const Rational& u, const Rational& shift) const;

private:
    SuspensionFlow flow_;
    ClopenSet slice_;
    int base_depth_ = 0;
    std::vector<std::string> base_atoms_;
    std::vector<Rational> base_tau_;
    std::vector<int> slice_piece_of_;
    std::vector<Rational> base_offset_;
    std::vector<ClopenSet> pieces_;
    std::vector<ClopenSet> floors_;
    std::vector<Rational> piece_return_;
    std::vector<std::vector<int>> piece_ladder_atoms_;
    std::vector<std::vector<Rational>> piece_ladder_arrive_;
    mutable std::vector<std::shared_ptr<const PointCode>> reps_;
    mutable std::mutex rep_mutex_;

    KernelStage(SuspensionFlow flow) : flow_(std::move(flow)) {}
    friend struct KernelStageBuilder;
};

// Discretized element of the stage-n orbit-vanishing algebra: samples
// a(s)(atom, fiber node) on the s-grid {m * delta : |m| <= m_max},
// delta = 1/(2(N+1)). The vanishing mask is exact on grid points.
class CrossedElement {
public:
    CrossedElement(std::shared_ptr<const KernelStage> stage, FiberGrid grid, const Rational& support);

    const KernelStage& stage() const { return *stage_; }
    const std::shared_ptr<const KernelStage>& stage_ptr() const { return stage_; }
    const FiberGrid& grid() const { return grid_; }
    const Rational& support() const { return support_; }
    Rational delta() const { return Rational(1, 2 * (grid_.n + 1)); }
    int m_max() const { return m_max_; }

    double& value(int m, int atom, int node);
    double value(int m, int atom, int node) const;
    // Bilinear evaluation at (s, atom, v); exact s-grid hits resolved in
    // rational arithmetic, zero outside the support and fiber range.
    double eval(const Rational& s, int atom, const Rational& v) const;

    bool masked(int m, int atom, int node) const;   // exact rational test
    void enforce_mask();
    bool mask_holds() const;
    double max_abs() const;
    double max_diff(const CrossedElement& other) const;

private:
    std::shared_ptr<const KernelStage> stage_;
    FiberGrid grid_;
    Rational support_;
    int m_max_ = 0;
    std::vector<double> vals_;
    size_t index(int m, int atom, int node) const;
};

// Separable smooth test bump b(s) * c(v), identical on every base atom.
CrossedElement make_bump(std::shared_ptr<const KernelStage> stage, FiberGrid grid,
                         double s_lo, double s_hi, double v_lo, double v_hi, double amplitude = 1.0);

CrossedElement convolve(const CrossedElement& f, const CrossedElement& g);
CrossedElement adjoint(const CrossedElement& f);

// Per-slice-piece N x N kernel matrices K(y)(s, t).
class KernelField {
public:
    KernelField(std::shared_ptr<const KernelStage> stage, FiberGrid grid);
    const KernelStage& stage() const { return *stage_; }
    const std::shared_ptr<const KernelStage>& stage_ptr() const { return stage_; }
    const FiberGrid& grid() const { return grid_; }
    double& at(int piece, int s_node, int t_node);
    double at(int piece, int s_node, int t_node) const;
    double eval(int piece, double s, double t) const;   // bilinear, zero boundary
    double max_abs() const;
    double boundary_max() const;
    KernelField compose(const KernelField& other) const;
    double max_diff(const KernelField& other) const;

private:
    std::shared_ptr<const KernelStage> stage_;
    FiberGrid grid_;
    std::vector<double> vals_;
};

KernelField pi_n(const CrossedElement& f);
CrossedElement pi_n_inverse(const KernelField& k);

double trace_tau_mu(const CrossedElement& f, const InvariantMeasure& mu);
double trace_field(const KernelField& k, const InvariantMeasure& mu);

// Stage n -> n+1 embedding: builds the inner stage refined so that the
// Phi_n-orbit data is constant per piece, and records which outer pieces
// each inner piece visits with the flow arrive ladder.
struct EmbeddingData {
    std::shared_ptr<const KernelStage> from, to;
    std::vector<std::vector<int>> visit_pieces;       // per inner piece
    std::vector<std::vector<Rational>> visit_arrive;  // size = visits + 1

    static EmbeddingData build(const SuspensionFlow& flow, const ClopenSet& outer_slice,
                               const ClopenSet& inner_slice, long long max_steps = kDefaultMaxSteps);
};

KernelField embed_kernels(const KernelField& k, const EmbeddingData& emb);

// Quadratic-form isometry defect of the embedding isometries U^{(j,k)} on
// smooth test vectors, plus cross-range orthogonality defect.
struct IsometryCheck {
    double isometry_defect = 0.0;
    double orthogonality_defect = 0.0;
};
IsometryCheck check_embedding_isometries(const EmbeddingData& emb, FiberGrid grid);

} // namespace cantorflow

#endif
