// K0 machinery: integer-valued clopen functions as K0(C(S_n,K)), the
// connecting maps iota/eta/beta/delta of the exact sequences, crossed-product
// K0 as cokernels of id - Phi_* via Smith normal form, and the ordered-group
// verification reports.
#ifndef CANTORFLOW_K0_HPP
#define CANTORFLOW_K0_HPP

#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cantorflow/intmatrix.hpp"
#include "cantorflow/measure.hpp"
#include "cantorflow/return_map.hpp"

namespace cantorflow {

// Element of C(S, Z): integer coefficients on the atoms of a clopen slice at
// a uniform depth.
class IntFunction {
public:
    IntFunction() = default;

    static IntFunction zero(const ClopenSet& domain);
    static IntFunction constant(const ClopenSet& domain, const Int& value);
    static IntFunction indicator(const ClopenSet& domain, const ClopenSet& support);
    static IntFunction from_atoms(const ClopenSet& domain, int depth, const std::map<std::string, Int>& coeffs);

    const ClopenSet& domain() const { return domain_; }
    int depth() const { return depth_; }
    const std::vector<std::pair<std::string, Int>>& atoms() const { return atoms_; }

    IntFunction refined_to(int depth) const;
    IntFunction operator+(const IntFunction& other) const;
    IntFunction operator-(const IntFunction& other) const;
    IntFunction scaled(const Int& k) const;
    bool operator==(const IntFunction& other) const;
    bool is_zero() const;
    std::optional<Int> constant_value() const;

    Int value_on_word(const std::string& word) const;   // word at depth >= depth_
    ClopenSet support() const;
    IntFunction restricted_to(const ClopenSet& sub) const;
    IntFunction extended_zero(const ClopenSet& bigger) const;
    // Sum of coeff * mu(atom); exact for odometers.
    MeasureWeight pair_with_measure(const InvariantMeasure& mu) const;

private:
    ClopenSet domain_;
    int depth_ = 0;
    std::vector<std::pair<std::string, Int>> atoms_;   // sorted, covers domain exactly
    void canonicalize();
};

// f o Phi^{-1} under the given (ambient or induced) map.
IntFunction pushforward(const DiscreteSystem& sys, const IntFunction& f);
IntFunction pullback(const DiscreteSystem& sys, const IntFunction& f);   // f o Phi

// iota_{n,*}(f)(y) = sum_{k=0}^{j} f(Phi_n^k(y)) on the height-j base floor.
IntFunction connecting_iota(const TowerDecomposition& td, const IntFunction& f);
// Constant function m on Phi_n^{-1}(S_{n+1}).
IntFunction eta(const TowerDecomposition& td, const Int& m);
// beta_{n+1}(f) = iota(g) - iota(pushforward(g)), g = zero-extension of f.
IntFunction beta(const TowerDecomposition& td, const IntFunction& f);
// delta_{n+1}(f) = f o t_n restricted to Phi_{n+1}^{-1}(S_{n+2}).
IntFunction delta(const TowerDecomposition& td_n, const TowerDecomposition& td_n1, const IntFunction& f);

// Finite-depth presentation of K0(C(S) x| Z) = coker(id - Phi_*). Odometer
// bases are the depth-d cylinders with the permutation action; substitution
// bases are one-sided words (the centered window algebra is carried into the
// one-sided picture by a class-preserving power of Phi, which keeps the
// truncated cokernel equal to the dimension group at finite depth).
class K0Stage {
public:
    static K0Stage crossed_product(SystemPtr sys, int depth);
    // Generic stage over an induced map acting on a slice.
    static K0Stage crossed_product_induced(const std::shared_ptr<const DiscreteSystem>& map, int depth);
    // Test-only stage from an explicit relation matrix.
    static K0Stage from_relations(IntMatrix relations);

    SystemPtr system() const { return sys_; }
    int depth() const { return depth_; }
    bool one_sided() const { return one_sided_; }
    int ambient_rank() const { return static_cast<int>(atoms_.size()); }
    const std::vector<std::string>& atoms() const { return atoms_; }
    const IntMatrix& relations() const { return relations_; }
    const SNFDecomposition& snf() const { return snf_; }
    const std::vector<Int>& invariant_factors() const { return snf_.invariant_factors; }
    int free_rank() const { return snf_.free_rank(); }
    int torsion_rank() const;

    // Class of the zero-extension of f (an IntFunction anywhere in the
    // system) in this stage's basis.
    std::vector<Int> class_vector(const IntFunction& f) const;
    bool class_is_zero(const std::vector<Int>& v) const;
    bool classes_equal(const std::vector<Int>& a, const std::vector<Int>& b) const;
    // Coordinates in the free part Z^{free_rank} of the cokernel.
    std::vector<Int> free_coordinates(const std::vector<Int>& v) const;
    // Trace of a class: sum coeff * mu(atom); well defined on classes.
    MeasureWeight class_trace(const std::vector<Int>& v, const InvariantMeasure& mu) const;
    MeasureWeight atom_weight(int index, const InvariantMeasure& mu) const;

private:
    SystemPtr sys_;
    int depth_ = 0;
    bool one_sided_ = false;
    std::vector<std::string> atoms_;
    IntMatrix relations_;
    SNFDecomposition snf_;
    void finish();
};

struct ExactRowReport {
    int stage = 0;
    int working_depth = 0;
    bool eta_injective = false;
    bool im_eta_in_ker_beta = false;
    bool im_beta_in_ker_gamma = false;
    bool beta_ker_gamma_saturation_equal = false;   // with the inclusion: im(beta) = ker(gamma~)
    bool gamma_surjective = false;
    int beta_rank = 0;
    int ker_gamma_rank = 0;
    int coker_free_rank = 0;
    std::vector<Int> stage_invariant_factors;
    bool ok() const {
        return eta_injective && im_eta_in_ker_beta && im_beta_in_ker_gamma &&
               beta_ker_gamma_saturation_equal && gamma_surjective;
    }
};

// Exactness of   0 -> Z -> C(Phi_n^{-1}(S_{n+1}),Z) -> K0(D_{n+1}) -> K0(CxR) -> 0
// at finite depth; gamma~ anchors at the outermost slice S_0.
ExactRowReport verify_exact_row(const StageChain& chain, int n, int depth,
                                const InvariantMeasure& mu);

struct StageIsoReport {
    int stage = 0;
    int matched_depth = 0;
    std::vector<int> tower_heights;
    std::optional<Int> iota_constant_multiplier;   // iota(1) when constant
    bool gamma_surjective = false;
    bool kernel_matches_trace_kernel = false;      // ker(gamma~) = ker(trace pairing)
    bool model_matches = false;                    // gamma~(f) = trace(f) in the Z[1/b] picture
    bool positivity_matches = false;
    std::vector<Int> invariant_factors;
    bool ok() const {
        return gamma_surjective && kernel_matches_trace_kernel && model_matches && positivity_matches;
    }
};

struct DeltaStabilization {
    int stage = 0;
    int input_depth = 0;
    int steps = -1;          // -1: did not stabilize within budget
    bool stabilized = false;
    Int constant_value;
};

struct OrderIsoReport {
    std::vector<StageIsoReport> stages;
    std::vector<DeltaStabilization> stabilizations;
    bool ok() const {
        for (const auto& s : stages)
            if (!s.ok()) return false;
        for (const auto& d : stabilizations)
            if (!d.stabilized) return false;
        return !stages.empty();
    }
};

// Theorem-level check: gamma_* an ordered-group isomorphism at truncation,
// with the closed-form Z[1/b] model for odometers, plus delta-stabilization.
// sample_depth_offset: stabilization inputs live at depth n + offset.
OrderIsoReport order_iso_check(const StageChain& chain, int n_stages, int depth_cap,
                               const InvariantMeasure& mu, unsigned long long seed,
                               int sample_depth_offset = 2, int max_delta_steps = 8);

// Random IntFunction on `domain` at the given depth with coefficients in
// [-9, 9]; deterministic in the rng state.
IntFunction random_int_function(const ClopenSet& domain, int depth, std::mt19937_64& rng);

} // namespace cantorflow

#endif
