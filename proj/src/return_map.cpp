#include "cantorflow/return_map.hpp"

#include <algorithm>
#include <deque>
#include <set>

namespace cantorflow {

ClopenSet DiscreteSystem::iterate(const ClopenSet& a, long long k) const {
    ClopenSet cur = a;
    int dir = k > 0 ? 1 : -1;
    for (long long i = 0; i < (k > 0 ? k : -k); ++i) cur = step(cur, dir);
    return cur;
}

namespace {

// Straddle test helpers: a set is "resolved" against a target when it is
// inside it or disjoint from it.
bool straddles(const ClopenSet& a, const ClopenSet& target) {
    if (!a.intersects(target)) return false;
    return !a.subset_of(target);
}

bool straddles_cells(const ClopenSet& a, const std::vector<ClopenSet>& cells) {
    for (const auto& c : cells)
        if (a.subset_of(c)) return false;
    return true;
}

// Splits into proper sub-pieces. A single refinement level can be trivial
// (Sturmian words often extend uniquely and the canonical form re-coarsens),
// so refine until the cylinder family genuinely branches.
std::vector<ClopenSet> split_proper(const ClopenSet& a) {
    int d = a.depth();
    while (true) {
        ++d;
        if (d > a.depth() + 64) throw GuardExceeded("clopen set failed to branch under refinement");
        ClopenSet fine = a.refined_to(d);
        if (fine.words().size() < 2) continue;
        std::vector<ClopenSet> out;
        out.reserve(fine.words().size());
        for (const auto& w : fine.words())
            out.push_back(ClopenSet::from_words(a.system(), fine.depth(), {w}));
        return out;
    }
}

} // namespace

ReturnPartition return_partition(const DiscreteSystem& sys, const ClopenSet& domain,
                                 const ClopenSet& target, long long max_steps,
                                 const std::vector<ClopenSet>* constancy_cells) {
    if (domain.is_empty() || target.is_empty())
        throw std::invalid_argument("return_partition needs nonempty domain and target");

    struct Item {
        ClopenSet piece;
        long long time;
        std::vector<ClopenSet> orbit;
    };
    std::deque<Item> queue;
    for (const auto& w : domain.words())
        queue.push_back(Item{ClopenSet::from_words(domain.system(), domain.depth(), {w}), 0, {}});

    ReturnPartition out;
    out.domain = domain;
    out.target = target;
    long long budget = max_steps;

    while (!queue.empty()) {
        Item it = std::move(queue.front());
        queue.pop_front();
        if (it.orbit.empty()) it.orbit.push_back(it.piece);

        // The whole orbit must be constant across the optional cells; the
        // starting piece is checked here, iterates below.
        if (constancy_cells && straddles_cells(it.piece, *constancy_cells)) {
            for (auto& child : split_proper(it.piece))
                queue.push_back(Item{std::move(child), 0, {}});
            continue;
        }

        bool resolved = false;
        while (!resolved) {
            if (--budget < 0) throw GuardExceeded("return_partition exceeded max_steps guard");
            ClopenSet next = sys.step(it.orbit.back(), 1);
            bool split = straddles(next, target) ||
                         (constancy_cells && !next.subset_of(target) && straddles_cells(next, *constancy_cells));
            if (split) {
                for (auto& child : split_proper(it.piece))
                    queue.push_back(Item{std::move(child), 0, {}});
                resolved = true;
                continue;
            }
            it.orbit.push_back(next);
            ++it.time;
            if (next.subset_of(target)) {
                out.pieces.push_back(ReturnPiece{it.piece, it.time, std::move(it.orbit)});
                resolved = true;
            }
        }
    }

    std::sort(out.pieces.begin(), out.pieces.end(), [](const ReturnPiece& a, const ReturnPiece& b) {
        if (a.time != b.time) return a.time < b.time;
        return a.piece.words() < b.piece.words();
    });
    return out;
}

std::shared_ptr<const InducedSystem> InducedSystem::build(std::shared_ptr<const DiscreteSystem> parent,
                                                          const ClopenSet& slice, long long max_steps) {
    if (!slice.subset_of(parent->domain()))
        throw std::invalid_argument("induced slice not inside the parent domain");
    auto sys = std::shared_ptr<InducedSystem>(new InducedSystem());
    sys->parent_ = std::move(parent);
    sys->slice_ = slice;
    sys->partition_ = return_partition(*sys->parent_, slice, slice, max_steps);

    // First-return bijectivity: images of the pieces under their return
    // powers partition the slice.
    ClopenSet covered = ClopenSet::empty(slice.system());
    for (const auto& p : sys->partition_.pieces) {
        const ClopenSet& img = p.orbit.back();
        if (covered.intersects(img)) throw std::logic_error("induced map images overlap");
        covered = set_union(covered, img);
    }
    if (!covered.equals(slice)) throw std::logic_error("induced map images do not cover the slice");
    return sys;
}

ClopenSet InducedSystem::step(const ClopenSet& a, int direction) const {
    if (!a.subset_of(slice_)) throw std::invalid_argument("induced step outside the slice");
    ClopenSet out = ClopenSet::empty(slice_.system());
    for (const auto& p : partition_.pieces) {
        if (direction > 0) {
            ClopenSet part = set_intersection(a, p.piece);
            if (!part.is_empty()) out = set_union(out, parent_->iterate(part, p.time));
        } else {
            ClopenSet part = set_intersection(parent_->iterate(a, -p.time), p.piece);
            if (!part.is_empty()) out = set_union(out, part);
        }
    }
    return out;
}

TowerDecomposition TowerDecomposition::build(std::shared_ptr<const DiscreteSystem> outer_map,
                                             const ClopenSet& inner, long long max_steps,
                                             bool require_disjoint) {
    TowerDecomposition td;
    td.outer_map_ = std::move(outer_map);
    td.outer_ = td.outer_map_->domain();
    td.inner_ = inner;
    if (inner.is_empty() || !inner.subset_of(td.outer_))
        throw std::invalid_argument("inner slice must be a nonempty subset of the outer slice");
    if (require_disjoint) {
        ClopenSet pre = td.outer_map_->step(inner, -1);
        if (pre.intersects(inner))
            throw DisjointnessViolation("Phi_n^{-1}(S_{n+1}) meets S_{n+1}; re-nest the slices");
    }

    ReturnPartition rp = return_partition(*td.outer_map_, inner, inner, max_steps);
    // Group pieces by height j = return time - 1 and fuse their floors.
    std::set<long long> times;
    for (const auto& p : rp.pieces) times.insert(p.time);
    for (long long t : times) {
        RokhlinTower tower;
        tower.height = static_cast<int>(t - 1);
        for (long long k = 0; k < t; ++k) {
            ClopenSet floor = ClopenSet::empty(inner.system());
            for (const auto& p : rp.pieces)
                if (p.time == t) floor = set_union(floor, p.orbit[k]);
            tower.floors.push_back(std::move(floor));
        }
        td.towers_.push_back(std::move(tower));
    }
    if (!td.partition_ok()) throw std::logic_error("tower floors do not partition the outer slice");
    return td;
}

std::vector<int> TowerDecomposition::heights() const {
    std::vector<int> out;
    for (const auto& t : towers_) out.push_back(t.height);
    return out;
}

ClopenSet TowerDecomposition::top_floor_union() const {
    ClopenSet out = ClopenSet::empty(outer_.system());
    for (const auto& t : towers_) out = set_union(out, t.top());
    return out;
}

std::vector<std::pair<ClopenSet, ClopenSet>> TowerDecomposition::t_map() const {
    std::vector<std::pair<ClopenSet, ClopenSet>> out;
    for (const auto& t : towers_) out.emplace_back(t.base(), t.top());
    return out;
}

ClopenSet TowerDecomposition::t_image(const ClopenSet& a) const {
    if (!a.subset_of(inner_)) throw std::invalid_argument("t_map argument must sit inside the inner slice");
    ClopenSet out = ClopenSet::empty(outer_.system());
    for (const auto& t : towers_) {
        ClopenSet part = set_intersection(a, t.base());
        if (!part.is_empty()) out = set_union(out, outer_map_->iterate(part, t.height));
    }
    return out;
}

bool TowerDecomposition::partition_ok() const {
    ClopenSet seen = ClopenSet::empty(outer_.system());
    ClopenSet bases = ClopenSet::empty(outer_.system());
    for (const auto& t : towers_) {
        for (const auto& f : t.floors) {
            if (seen.intersects(f)) return false;
            seen = set_union(seen, f);
        }
        bases = set_union(bases, t.base());
    }
    return seen.equals(outer_) && bases.equals(inner_);
}

MeasureWeight TowerDecomposition::kac_lhs(const InvariantMeasure& mu) const {
    MeasureWeight acc;
    acc.exact = true;
    acc.rational = 0;
    for (const auto& t : towers_)
        acc = weight_add(acc, weight_scale(mu.set_weight(t.base()), Int(t.height + 1)));
    return acc;
}

std::vector<ClopenSet> nested_slices(SystemPtr sys, int count, long long max_steps) {
    std::vector<ClopenSet> out;
    if (count <= 0) return out;
    if (sys->is_odometer()) {
        for (int n = 0; n < count; ++n)
            out.push_back(ClopenSet::from_words(sys, n, {std::string(n, '0')}));
        return out;
    }
    out.push_back(ClopenSet::full(sys));
    std::shared_ptr<const DiscreteSystem> map = std::make_shared<AmbientSystem>(sys);
    for (int n = 1; n < count; ++n) {
        std::vector<ClopenSet> candidates;
        if (n == 1) {
            for (char a : sys->alphabet()) candidates.push_back(ClopenSet::from_prefix(sys, std::string(1, a)));
        } else {
            const auto* ind = dynamic_cast<const InducedSystem*>(map.get());
            for (const auto& p : ind->partition().pieces) candidates.push_back(p.piece);
        }
        bool placed = false;
        for (int round = 0; round < 3 && !placed; ++round) {
            for (const auto& cand : candidates) {
                ClopenSet pre = map->step(cand, -1);
                if (!pre.intersects(cand)) {
                    out.push_back(cand);
                    map = InducedSystem::build(map, cand, max_steps);
                    placed = true;
                    break;
                }
            }
            if (!placed) {
                // Refine each candidate one branching level and retry.
                std::vector<ClopenSet> finer;
                for (const auto& cand : candidates) {
                    ClopenSet deep = cand;
                    int d = cand.depth();
                    while (deep.words().size() < 2 && d < cand.depth() + 32) deep = cand.refined_to(++d);
                    for (const auto& w : deep.words())
                        finer.push_back(ClopenSet::from_words(sys, deep.depth(), {w}));
                }
                candidates = std::move(finer);
            }
        }
        if (!placed) throw std::invalid_argument("could not find a nested slice with the disjointness property");
    }
    return out;
}

StageChain StageChain::build(SystemPtr sys, const std::vector<ClopenSet>& slices, long long max_steps) {
    if (slices.empty()) throw std::invalid_argument("stage chain needs at least one slice");
    StageChain chain;
    chain.sys = sys;
    std::shared_ptr<const DiscreteSystem> prev = std::make_shared<AmbientSystem>(sys);
    for (size_t n = 0; n < slices.size(); ++n) {
        if (n > 0 && !slices[n].subset_of(slices[n - 1]))
            throw std::invalid_argument("slices must be nested");
        std::shared_ptr<const DiscreteSystem> map;
        if (slices[n].is_full())
            map = prev;
        else
            map = InducedSystem::build(prev, slices[n], max_steps);
        chain.stages.push_back(Stage{slices[n], map, std::nullopt});
        if (n > 0) chain.stages[n - 1].tower = TowerDecomposition::build(chain.stages[n - 1].map, slices[n], max_steps);
        prev = map;
    }
    return chain;
}

const TowerDecomposition& StageChain::tower(size_t n) const {
    if (n >= stages.size() || !stages[n].tower)
        throw std::out_of_range("no tower decomposition at this stage");
    return *stages[n].tower;
}

} // namespace cantorflow
