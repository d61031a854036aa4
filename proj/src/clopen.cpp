#include "cantorflow/clopen.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace cantorflow {

namespace {

void require_same_system(const ClopenSet& a, const ClopenSet& b) {
    if (a.system() != b.system())
        throw std::invalid_argument("clopen sets from mismatched systems");
}

// Mixed-radix value of an odometer word, digit 0 least significant.
Int word_value(const SymbolicSystem& sys, const std::string& w) {
    Int val = 0, place = 1;
    for (size_t i = 0; i < w.size(); ++i) {
        val += place * symbol_value(w[i]);
        place *= sys.base_at(static_cast<int>(i));
    }
    return val;
}

std::string value_word(const SymbolicSystem& sys, Int val, int depth) {
    std::string w;
    for (int i = 0; i < depth; ++i) {
        int b = sys.base_at(i);
        w += value_symbol(static_cast<int>(val % b));
        val /= b;
    }
    return w;
}

} // namespace

ClopenSet ClopenSet::empty(SystemPtr sys) {
    ClopenSet s;
    s.sys_ = std::move(sys);
    s.depth_ = 0;
    return s;
}

ClopenSet ClopenSet::full(SystemPtr sys) {
    ClopenSet s;
    s.sys_ = std::move(sys);
    s.depth_ = 0;
    s.words_ = {""};
    return s;
}

ClopenSet ClopenSet::from_words(SystemPtr sys, int depth, std::vector<std::string> words) {
    ClopenSet s;
    s.sys_ = std::move(sys);
    s.depth_ = depth;
    int len = s.sys_->word_length(depth);
    for (const auto& w : words) {
        if (static_cast<int>(w.size()) != len)
            throw std::invalid_argument("cylinder word length does not match depth");
        if (s.sys_->is_odometer()) {
            for (size_t i = 0; i < w.size(); ++i)
                if (symbol_value(w[i]) >= s.sys_->base_at(static_cast<int>(i)))
                    throw std::invalid_argument("digit exceeds base in word '" + w + "'");
        } else if (!s.sys_->admissible(w)) {
            throw std::invalid_argument("word '" + w + "' not in the subshift language");
        }
    }
    s.words_ = std::move(words);
    s.normalize();
    return s;
}

ClopenSet ClopenSet::from_prefix(SystemPtr sys, const std::string& prefix) {
    int k = static_cast<int>(prefix.size());
    if (sys->is_odometer()) return from_words(sys, k, {prefix});
    std::vector<std::string> words;
    for (const auto& w : sys->language(2 * k))
        if (w.compare(k, k, prefix) == 0) words.push_back(w);
    if (words.empty()) throw std::invalid_argument("prefix '" + prefix + "' not in the subshift language");
    return from_words(std::move(sys), k, std::move(words));
}

std::vector<Cylinder> ClopenSet::cylinders() const {
    std::vector<Cylinder> out;
    out.reserve(words_.size());
    for (const auto& w : words_) out.push_back(Cylinder{depth_, w});
    return out;
}

bool ClopenSet::is_full() const {
    if (is_empty()) return false;
    if (depth_ == 0) return true;
    return words_.size() == sys_->depth_words(depth_).size();
}

ClopenSet ClopenSet::refined_to(int depth) const {
    if (depth < depth_) throw std::invalid_argument("refinement depth below current depth");
    if (depth == depth_ || is_empty()) {
        ClopenSet s(*this);
        if (s.is_empty()) s.depth_ = depth;
        return s;
    }
    ClopenSet s;
    s.sys_ = sys_;
    s.depth_ = depth;
    if (sys_->is_odometer()) {
        std::vector<std::string> cur = words_;
        for (int pos = depth_; pos < depth; ++pos) {
            std::vector<std::string> next;
            next.reserve(cur.size() * sys_->base_at(pos));
            for (const auto& w : cur)
                for (int d = 0; d < sys_->base_at(pos); ++d) next.push_back(w + value_symbol(d));
            cur = std::move(next);
        }
        s.words_ = std::move(cur);
    } else {
        // Extend the centered window [-d, d) one coordinate on each side.
        std::vector<std::string> cur = words_;
        for (int d = depth_; d < depth; ++d) {
            const auto& lang = sys_->language(2 * d + 2);
            std::vector<std::string> next;
            for (const auto& v : lang)
                if (std::binary_search(cur.begin(), cur.end(), v.substr(1, 2 * d))) next.push_back(v);
            cur = std::move(next);
            std::sort(cur.begin(), cur.end());
        }
        s.words_ = std::move(cur);
    }
    std::sort(s.words_.begin(), s.words_.end());
    return s;
}

ClopenSet ClopenSet::image(int k) const {
    if (k == 0 || is_empty()) return *this;
    ClopenSet s;
    s.sys_ = sys_;
    if (sys_->is_odometer()) {
        // The add-one map permutes depth-d cylinders: w -> w + k mod prod(b_i).
        s.depth_ = depth_;
        Int modulus = sys_->cylinder_count(depth_);
        Int shift = Int(k) % modulus;
        if (shift < 0) shift += modulus;
        s.words_.reserve(words_.size());
        for (const auto& w : words_)
            s.words_.push_back(value_word(*sys_, (word_value(*sys_, w) + shift) % modulus, depth_));
        std::sort(s.words_.begin(), s.words_.end());
    } else {
        // sigma^k moves the window [-d, d) to [-d-k, d-k); re-express at
        // depth d + |k| by freeing the 2|k| uncovered coordinates.
        int a = std::abs(k);
        int nd = depth_ + a;
        s.depth_ = nd;
        const auto& lang = sys_->language(2 * nd);
        // Stored index of original coordinate c inside a depth-nd word is
        // c + nd; the image fixes coordinates [-d-k, d-k) to the old word.
        int lo = -depth_ - k + nd;   // stored start index of the constraint
        std::vector<std::string> out;
        for (const auto& v : lang)
            if (std::binary_search(words_.begin(), words_.end(), v.substr(lo, 2 * depth_)))
                out.push_back(v);
        s.words_ = std::move(out);
    }
    s.normalize();
    return s;
}

ClopenSet ClopenSet::complement() const {
    return set_difference(full(sys_), *this);
}

bool ClopenSet::equals(const ClopenSet& other) const {
    require_same_system(*this, other);
    int d = std::max(depth_, other.depth_);
    return refined_to(d).words_ == other.refined_to(d).words_;
}

bool ClopenSet::subset_of(const ClopenSet& other) const {
    require_same_system(*this, other);
    if (is_empty()) return true;
    if (other.depth_ == 0) return !other.is_empty();   // other is the full set
    int d = std::max(depth_, other.depth_);
    ClopenSet a = refined_to(d), b = other.refined_to(d);
    return std::includes(b.words_.begin(), b.words_.end(), a.words_.begin(), a.words_.end());
}

bool ClopenSet::intersects(const ClopenSet& other) const {
    return !set_intersection(*this, other).is_empty();
}

ClopenSet boolean(const ClopenSet& a, const ClopenSet& b, BoolOp op) {
    require_same_system(a, b);
    int d = std::max(a.depth(), b.depth());
    ClopenSet ra = a.refined_to(d), rb = b.refined_to(d);
    ClopenSet out;
    out.sys_ = a.system();
    out.depth_ = d;
    switch (op) {
        case BoolOp::set_union:
            std::set_union(ra.words_.begin(), ra.words_.end(), rb.words_.begin(), rb.words_.end(),
                           std::back_inserter(out.words_));
            break;
        case BoolOp::set_intersection:
            std::set_intersection(ra.words_.begin(), ra.words_.end(), rb.words_.begin(), rb.words_.end(),
                                  std::back_inserter(out.words_));
            break;
        case BoolOp::set_difference:
            std::set_difference(ra.words_.begin(), ra.words_.end(), rb.words_.begin(), rb.words_.end(),
                                std::back_inserter(out.words_));
            break;
    }
    out.normalize();
    return out;
}

void ClopenSet::normalize() {
    std::sort(words_.begin(), words_.end());
    words_.erase(std::unique(words_.begin(), words_.end()), words_.end());
    if (words_.empty()) {
        depth_ = 0;
        return;
    }
    // Coarsen while every cylinder's sibling family is complete, keeping the
    // single-depth representation canonical and small.
    while (depth_ > 0) {
        std::map<std::string, int> parents;
        for (const auto& w : words_) {
            std::string parent = sys_->is_odometer() ? w.substr(0, w.size() - 1)
                                                     : w.substr(1, w.size() - 2);
            parents[parent] += 1;
        }
        bool coarsen = true;
        if (sys_->is_odometer()) {
            int b = sys_->base_at(depth_ - 1);
            for (const auto& [p, count] : parents)
                if (count != b) coarsen = false;
        } else {
            const auto& lang = sys_->language(2 * depth_);
            std::map<std::string, int> family_size;
            for (const auto& v : lang) family_size[v.substr(1, v.size() - 2)] += 1;
            for (const auto& [p, count] : parents)
                if (count != family_size.at(p)) coarsen = false;
        }
        if (!coarsen) break;
        std::vector<std::string> next;
        next.reserve(parents.size());
        for (const auto& [p, count] : parents) next.push_back(p);
        std::sort(next.begin(), next.end());
        words_ = std::move(next);
        --depth_;
    }
}

} // namespace cantorflow
