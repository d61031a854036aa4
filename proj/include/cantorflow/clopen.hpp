// Exact clopen-set algebra over a symbolic Cantor system. A clopen set is a
// sorted list of cylinders at a single normalized depth; for odometers a
// depth-d cylinder fixes digits 0..d-1, for subshifts it fixes the centered
// coordinate window [-d, d).
#ifndef CANTORFLOW_CLOPEN_HPP
#define CANTORFLOW_CLOPEN_HPP

#include <string>
#include <vector>

#include "cantorflow/system.hpp"

namespace cantorflow {

struct Cylinder {
    int depth = 0;
    std::string word;
};

enum class BoolOp { set_union, set_intersection, set_difference };

class ClopenSet {
public:
    ClopenSet() = default;

    static ClopenSet empty(SystemPtr sys);
    static ClopenSet full(SystemPtr sys);
    static ClopenSet from_words(SystemPtr sys, int depth, std::vector<std::string> words);
    // One-sided convenience: the set {x : x_0..x_{k-1} = w}. For odometers
    // this is the depth-k cylinder itself; for subshifts it becomes the union
    // of centered depth-k cylinders agreeing with w on [0, k).
    static ClopenSet from_prefix(SystemPtr sys, const std::string& prefix);

    const SystemPtr& system() const { return sys_; }
    int depth() const { return depth_; }
    const std::vector<std::string>& words() const { return words_; }
    std::vector<Cylinder> cylinders() const;
    bool is_empty() const { return words_.empty(); }
    bool is_full() const;
    size_t size() const { return words_.size(); }

    ClopenSet refined_to(int depth) const;
    // Depth-d words by value (safe to iterate without holding the set).
    std::vector<std::string> refined_words(int depth) const { return refined_to(depth).words_; }

    // Exact Phi^k image; odometers preserve depth, subshifts refine to
    // depth + |k|.
    ClopenSet image(int k) const;

    ClopenSet complement() const;
    bool equals(const ClopenSet& other) const;
    bool subset_of(const ClopenSet& other) const;
    bool intersects(const ClopenSet& other) const;

    friend ClopenSet boolean(const ClopenSet& a, const ClopenSet& b, BoolOp op);

private:
    void normalize();   // sort, dedupe, coarsen complete sibling families

    SystemPtr sys_;
    int depth_ = 0;
    std::vector<std::string> words_;
};

ClopenSet boolean(const ClopenSet& a, const ClopenSet& b, BoolOp op);
inline ClopenSet set_union(const ClopenSet& a, const ClopenSet& b) { return boolean(a, b, BoolOp::set_union); }
inline ClopenSet set_intersection(const ClopenSet& a, const ClopenSet& b) { return boolean(a, b, BoolOp::set_intersection); }
inline ClopenSet set_difference(const ClopenSet& a, const ClopenSet& b) { return boolean(a, b, BoolOp::set_difference); }

} // namespace cantorflow

#endif
