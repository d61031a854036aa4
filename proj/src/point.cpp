#include "cantorflow/point.hpp"

#include <algorithm>
#include <stdexcept>

namespace cantorflow {

PointCode PointCode::odometer_point(SystemPtr sys, const std::string& preperiod, const std::string& period) {
    if (!sys->is_odometer()) throw std::invalid_argument("odometer_point needs an odometer system");
    if (period.empty()) throw std::invalid_argument("period must be nonempty");
    PointCode p;
    p.sys_ = std::move(sys);
    p.preperiod_ = preperiod;
    p.period_ = period;
    // Every (period position, base-cycle position) pair occurs within one
    // period-times-cycle stretch past the preperiod.
    long long span = static_cast<long long>(preperiod.size()) +
                     static_cast<long long>(period.size()) * p.sys_->base_cycle().size();
    for (long long i = 0; i < span; ++i)
        if (symbol_value(p.at(i)) >= p.sys_->base_at(static_cast<int>(i)))
            throw std::invalid_argument("digit exceeds base in point code");
    return p;
}

PointCode PointCode::substitution_fixed_point(SystemPtr sys) {
    if (sys->is_odometer()) throw std::invalid_argument("substitution_fixed_point needs a substitution system");
    // Smallest power p admitting seed letters (l, r) with rule^p(l) ending in
    // l, rule^p(r) starting with r, lr admissible and both images growing.
    for (int p = 1; p <= 12; ++p) {
        for (char l : sys->alphabet()) {
            std::string il = sys->substitute(std::string(1, l), p);
            if (il.size() < 2 || il.back() != l) continue;
            for (char r : sys->alphabet()) {
                std::string ir = sys->substitute(std::string(1, r), p);
                if (ir.size() < 2 || ir.front() != r) continue;
                std::string seed{l, r};
                if (!sys->admissible(seed)) continue;
                PointCode pt;
                pt.sys_ = sys;
                pt.left_ = l;
                pt.right_ = r;
                pt.power_ = p;
                pt.offset_ = 0;
                pt.expansion_ = std::make_shared<Expansion>();
                pt.expansion_->right_word = std::string(1, r);
                pt.expansion_->left_word = std::string(1, l);
                return pt;
            }
        }
    }
    throw std::invalid_argument("no fixed-point seed found (is the substitution primitive?)");
}

char PointCode::at(long long coordinate) const {
    if (sys_->is_odometer()) {
        if (coordinate < 0) throw std::invalid_argument("odometer points have coordinates >= 0");
        if (coordinate < static_cast<long long>(preperiod_.size())) return preperiod_[coordinate];
        long long i = (coordinate - preperiod_.size()) % period_.size();
        return period_[i];
    }
    long long c = coordinate + offset_;
    std::lock_guard<std::mutex> lock(expansion_->mutex);
    if (c >= 0) {
        std::string& w = expansion_->right_word;
        while (static_cast<long long>(w.size()) <= c) w = sys_->substitute(w, power_);
        return w[c];
    }
    std::string& w = expansion_->left_word;
    while (static_cast<long long>(w.size()) < -c) w = sys_->substitute(w, power_);
    return w[w.size() + c];
}

PointCode PointCode::step(long long k) const {
    PointCode p(*this);
    if (!sys_->is_odometer()) {
        p.offset_ += k;
        return p;
    }
    if (k == 0) return p;
    // Closed-form mixed-radix addition: expand enough explicit digits to
    // cover every (period, base-cycle) alignment past the point where the
    // carry has shrunk to zero; a carry surviving the whole stretch means
    // the tail is uniformly extreme and flips to the other end.
    // The carry settles to -1, 0 or +1 within 66 positions (it shrinks at
    // every base->=2 digit); one further full period-times-cycle stretch of
    // surviving carry certifies a uniformly extreme tail.
    long long cyc = static_cast<long long>(sys_->base_cycle().size());
    long long span = static_cast<long long>(p.preperiod_.size()) +
                     2 * static_cast<long long>(p.period_.size()) * cyc + 66;
    std::string digits;
    digits.reserve(span);
    long long carry = k;
    long long died_at = -1;
    for (long long i = 0; i < span; ++i) {
        long long b = sys_->base_at(static_cast<int>(i));
        long long total = (p.at(i) - '0') + carry;
        long long digit = ((total % b) + b) % b;
        carry = (total - digit) / b;
        digits += value_symbol(static_cast<int>(digit));
        if (carry == 0) {
            died_at = i;
            break;
        }
    }
    if (died_at >= 0) {
        long long tail_start = died_at + 1;
        p.preperiod_ = digits;
        if (tail_start < static_cast<long long>(preperiod_.size())) {
            p.preperiod_ += preperiod_.substr(tail_start);
            p.period_ = period_;
        } else {
            long long shift = (tail_start - preperiod_.size()) % period_.size();
            p.period_ = period_.substr(shift) + period_.substr(0, shift);
        }
        return p;
    }
    // Carry survived: |carry| = 1 here (it shrinks below any base quickly)
    // and every scanned digit wrapped, so the entire tail flips.
    if (carry != 1 && carry != -1) throw std::logic_error("carry did not settle");
    p.preperiod_ = digits;
    std::string flipped;
    for (long long j = 0; j < cyc; ++j) {
        int b = sys_->base_at(static_cast<int>(span + j));
        flipped += value_symbol(carry > 0 ? 0 : b - 1);
    }
    p.period_ = flipped;
    return p;
}

std::string PointCode::describe() const {
    if (sys_->is_odometer()) return preperiod_ + "(" + period_ + ")^w";
    return std::string("fixpoint[") + left_ + "." + right_ + ", power " + std::to_string(power_) +
           ", shift " + std::to_string(offset_) + "]";
}

std::string point_word(const PointCode& point, int depth) {
    const auto& sys = point.system();
    std::string w;
    if (sys->is_odometer()) {
        for (int i = 0; i < depth; ++i) w += point.at(i);
    } else {
        for (int i = -depth; i < depth; ++i) w += point.at(i);
    }
    return w;
}

bool contains(const ClopenSet& set, const PointCode& point) {
    if (set.system() != point.system()) throw std::invalid_argument("point/set system mismatch");
    if (set.is_empty()) return false;
    std::string w = point_word(point, set.depth());
    return std::binary_search(set.words().begin(), set.words().end(), w);
}

} // namespace cantorflow
