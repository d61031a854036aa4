// Suspension flows over Cantor bases with locally constant rational roofs:
// exact flow evaluation, suspension return times, central slices and
// flowbox structures.
#ifndef CANTORFLOW_SUSPENSION_HPP
#define CANTORFLOW_SUSPENSION_HPP

#include <random>

#include "cantorflow/point.hpp"
#include "cantorflow/return_map.hpp"

namespace cantorflow {

// Strictly positive locally constant rational function on a clopen slice.
class RoofFunction {
public:
    static RoofFunction constant(const ClopenSet& slice, const Rational& value);
    // Values per prefix word ("a" -> 1, "b" -> 3/2); prefixes must partition
    // the slice.
    static RoofFunction from_prefix_values(const ClopenSet& slice,
                                           const std::vector<std::pair<std::string, Rational>>& values);
    // Values per depth-`depth` atom word of the slice (must cover it exactly).
    static RoofFunction from_atom_values(const ClopenSet& slice, int depth,
                                         std::vector<std::pair<std::string, Rational>> values);

    const ClopenSet& slice() const { return slice_; }
    int depth() const { return depth_; }
    const std::vector<std::pair<std::string, Rational>>& atom_values() const { return values_; }
    std::vector<ClopenSet> atom_cells() const;

    Rational value_on_word(const std::string& word) const;   // word at depth >= depth_
    Rational value_at(const PointCode& point) const;
    Rational min_value() const;
    Rational max_value() const;

private:
    ClopenSet slice_;
    int depth_ = 0;
    std::vector<std::pair<std::string, Rational>> values_;   // sorted atom words
};

struct SuspensionPoint {
    PointCode base;
    Rational fiber;   // normalized: 0 <= fiber < tau(base)
};

// Suspension of (S, Phi, tau); S is the full symbolic system here.
class SuspensionFlow {
public:
    SuspensionFlow(SystemPtr sys, RoofFunction tau);

    const SystemPtr& system() const { return sys_; }
    const RoofFunction& roof() const { return tau_; }

    SuspensionPoint make_point(const PointCode& base, const Rational& fiber) const;   // normalizes
    SuspensionPoint flow_step(const SuspensionPoint& p, const Rational& s) const;
    bool same_point(const SuspensionPoint& a, const SuspensionPoint& b, int compare_depth) const;

    // Is p inside phi(C x (lo, hi)) (open ends unless closed_ends)?
    bool in_tube(const SuspensionPoint& p, const ClopenSet& c, const Rational& lo, const Rational& hi,
                 bool closed_ends = false) const;

private:
    SystemPtr sys_;
    RoofFunction tau_;
};

// Locally constant first-return flow times on a slice plus the per-piece
// arrive-time ladders (the k-th arrive times of the kernel embeddings).
struct FlowReturnPiece {
    ClopenSet piece;
    long long steps = 0;                // discrete return time
    Rational flow_time;                 // sum of tau over the orbit
    std::vector<Rational> arrive;       // arrive[k] = sum_{i<k} tau(Phi^i y), k = 0..steps
    std::vector<ClopenSet> orbit;       // discrete orbit floors
};

struct FlowReturnData {
    ClopenSet slice;
    std::vector<FlowReturnPiece> pieces;
    Rational min_return() const;
    // The return time as a locally constant roof on the slice.
    RoofFunction as_roof() const;
};

FlowReturnData suspension_return_time(const SuspensionFlow& flow, const ClopenSet& slice,
                                      long long max_steps = kDefaultMaxSteps);

struct CentralSlice {
    ClopenSet base;
    Rational length;
};

struct FlowboxStructure {
    PointCode center;
    std::vector<CentralSlice> slices;
    std::vector<int> depths;
};

// Nested central slices around the center with lengths l_n >= max(n, l_{n-1})
// growing along the diverging return times.
FlowboxStructure build_flowbox_structure(const SuspensionFlow& flow, const PointCode& center,
                                         int n_max, int depth_budget = 64);

Rational max_admissible_length(const SuspensionFlow& flow, const ClopenSet& base);

struct FlowboxCheckReport {
    bool nested = true;              // (i)
    bool lengths_diverge = true;     // (ii) strictly increasing with l_n >= n
    bool shrinks_to_center = true;   // (iii)
    bool nonempty_interior = true;   // (iv)
    int tube_samples = 0;            // (v)
    int tube_failures = 0;
    bool ok() const {
        return nested && lengths_diverge && shrinks_to_center && nonempty_interior && tube_failures == 0;
    }
};

FlowboxCheckReport verify_flowbox_properties(const SuspensionFlow& flow, const FlowboxStructure& fb,
                                             int samples, unsigned long long seed);

} // namespace cantorflow

#endif
