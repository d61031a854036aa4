// First-return analysis and Kakutani-Rokhlin tower decompositions. Induced
// maps are represented exactly through return partitions, so towers can be
// stacked: stage n+1 induces inside stage n.
#ifndef CANTORFLOW_RETURN_MAP_HPP
#define CANTORFLOW_RETURN_MAP_HPP

#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cantorflow/clopen.hpp"
#include "cantorflow/measure.hpp"

namespace cantorflow {

struct GuardExceeded : std::runtime_error {
    explicit GuardExceeded(const std::string& what) : std::runtime_error(what) {}
};
struct DisjointnessViolation : std::runtime_error {
    explicit DisjointnessViolation(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr long long kDefaultMaxSteps = 1000000;

// A homeomorphism acting exactly on clopen sets: the ambient shift/odometer
// or a first-return map on a slice.
class DiscreteSystem {
public:
    virtual ~DiscreteSystem() = default;
    virtual SystemPtr base() const = 0;
    virtual ClopenSet domain() const = 0;
    virtual ClopenSet step(const ClopenSet& a, int direction) const = 0;
    ClopenSet iterate(const ClopenSet& a, long long k) const;
};

class AmbientSystem final : public DiscreteSystem {
public:
    explicit AmbientSystem(SystemPtr sys) : sys_(std::move(sys)) {}
    SystemPtr base() const override { return sys_; }
    ClopenSet domain() const override { return ClopenSet::full(sys_); }
    ClopenSet step(const ClopenSet& a, int direction) const override { return a.image(direction); }

private:
    SystemPtr sys_;
};

struct ReturnPiece {
    ClopenSet piece;               // subset of the partition domain
    long long time = 0;            // first arrival time k >= 1
    std::vector<ClopenSet> orbit;  // images at steps 0..time
};

struct ReturnPartition {
    ClopenSet domain, target;
    std::vector<ReturnPiece> pieces;
};

// Exact partition of D by the first arrival time to T under `sys`. Pieces are
// split whenever an iterate straddles T or one of the optional constancy
// cells (used to keep roof sums locally constant).
ReturnPartition return_partition(const DiscreteSystem& sys, const ClopenSet& domain,
                                 const ClopenSet& target, long long max_steps = kDefaultMaxSteps,
                                 const std::vector<ClopenSet>* constancy_cells = nullptr);

class InducedSystem final : public DiscreteSystem {
public:
    static std::shared_ptr<const InducedSystem> build(std::shared_ptr<const DiscreteSystem> parent,
                                                      const ClopenSet& slice,
                                                      long long max_steps = kDefaultMaxSteps);

    SystemPtr base() const override { return parent_->base(); }
    ClopenSet domain() const override { return slice_; }
    ClopenSet step(const ClopenSet& a, int direction) const override;
    const ReturnPartition& partition() const { return partition_; }
    const std::shared_ptr<const DiscreteSystem>& parent() const { return parent_; }

private:
    InducedSystem() = default;
    std::shared_ptr<const DiscreteSystem> parent_;
    ClopenSet slice_;
    ReturnPartition partition_;
};

struct RokhlinTower {
    int height = 0;                 // j = return time - 1; the tower has j+1 floors
    std::vector<ClopenSet> floors;  // floors[k] = Phi_n^k(base), k = 0..height
    const ClopenSet& base() const { return floors.front(); }
    const ClopenSet& top() const { return floors.back(); }
};

class TowerDecomposition {
public:
    // outer_map acts on S_n; inner is S_{n+1}. Checks the standing hypothesis
    // Phi_n^{-1}(S_{n+1}) and S_{n+1} disjoint unless require_disjoint=false.
    static TowerDecomposition build(std::shared_ptr<const DiscreteSystem> outer_map,
                                    const ClopenSet& inner, long long max_steps = kDefaultMaxSteps,
                                    bool require_disjoint = true);

    const std::shared_ptr<const DiscreteSystem>& outer_map() const { return outer_map_; }
    const ClopenSet& outer() const { return outer_; }
    const ClopenSet& inner() const { return inner_; }
    const std::vector<RokhlinTower>& towers() const { return towers_; }
    std::vector<int> heights() const;

    // Union of top floors = Phi_n^{-1}(S_{n+1}).
    ClopenSet top_floor_union() const;
    // The map t_n : S_{n+1} -> Phi_n^{-1}(S_{n+1}), y -> Phi_n^j(y) on the
    // height-j base floor, as (base floor, image) clopen pairs.
    std::vector<std::pair<ClopenSet, ClopenSet>> t_map() const;
    // Image of A under t_n (A inside S_{n+1}).
    ClopenSet t_image(const ClopenSet& a) const;

    bool partition_ok() const;                 // floors disjoint, union = S_n, bases cover S_{n+1}
    // |sum_j (j+1) mu(base_j) - mu(S_n)|, exact zero for odometers.
    MeasureWeight kac_lhs(const InvariantMeasure& mu) const;

private:
    std::shared_ptr<const DiscreteSystem> outer_map_;
    ClopenSet outer_, inner_;
    std::vector<RokhlinTower> towers_;
};

// Canonical nested slices with the disjointness hypothesis built in:
// odometers get the zero-digit cylinders [0^n]; subshifts start at the full
// set and descend through return-partition pieces (the first piece, in
// canonical order, whose one-step preimage misses it).
std::vector<ClopenSet> nested_slices(SystemPtr sys, int count, long long max_steps = kDefaultMaxSteps);

// Nested slices S_0 > S_1 > ... with their induced maps and towers.
struct Stage {
    ClopenSet slice;
    std::shared_ptr<const DiscreteSystem> map;        // Phi_n on S_n
    std::optional<TowerDecomposition> tower;          // decomposition of S_n over S_{n+1}
};

struct StageChain {
    SystemPtr sys;
    std::vector<Stage> stages;

    static StageChain build(SystemPtr sys, const std::vector<ClopenSet>& slices,
                            long long max_steps = kDefaultMaxSteps);
    const TowerDecomposition& tower(size_t n) const;
    size_t stage_count() const { return stages.size(); }
};

} // namespace cantorflow

#endif
