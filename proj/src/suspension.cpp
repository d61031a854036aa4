#include "cantorflow/suspension.hpp"

#include <algorithm>

namespace cantorflow {

RoofFunction RoofFunction::constant(const ClopenSet& slice, const Rational& value) {
    if (value <= 0) throw std::invalid_argument("roof values must be strictly positive");
    RoofFunction tau;
    tau.slice_ = slice;
    tau.depth_ = slice.depth();
    for (const auto& w : slice.words()) tau.values_.emplace_back(w, value);
    return tau;
}

RoofFunction RoofFunction::from_prefix_values(const ClopenSet& slice,
                                              const std::vector<std::pair<std::string, Rational>>& values) {
    RoofFunction tau;
    tau.slice_ = slice;
    std::vector<std::pair<ClopenSet, Rational>> cells;
    int depth = slice.depth();
    for (const auto& [prefix, v] : values) {
        if (v <= 0) throw std::invalid_argument("roof values must be strictly positive");
        ClopenSet cell = set_intersection(ClopenSet::from_prefix(slice.system(), prefix), slice);
        depth = std::max(depth, cell.depth());
        cells.emplace_back(std::move(cell), v);
    }
    tau.depth_ = depth;
    ClopenSet covered = ClopenSet::empty(slice.system());
    for (const auto& [cell, v] : cells) {
        if (covered.intersects(cell)) throw std::invalid_argument("roof prefixes overlap");
        covered = set_union(covered, cell);
        for (const auto& w : cell.refined_words(depth)) tau.values_.emplace_back(w, v);
    }
    if (!covered.equals(slice)) throw std::invalid_argument("roof prefixes do not cover the slice");
    std::sort(tau.values_.begin(), tau.values_.end());
    return tau;
}

RoofFunction RoofFunction::from_atom_values(const ClopenSet& slice, int depth,
                                            std::vector<std::pair<std::string, Rational>> values) {
    RoofFunction tau;
    tau.slice_ = slice;
    tau.depth_ = depth;
    std::sort(values.begin(), values.end());
    const std::vector<std::string> expected = slice.refined_words(depth);
    if (values.size() != expected.size()) throw std::invalid_argument("roof atoms do not cover the slice");
    for (size_t i = 0; i < values.size(); ++i) {
        if (values[i].first != expected[i]) throw std::invalid_argument("roof atom words do not match the slice");
        if (values[i].second <= 0) throw std::invalid_argument("roof values must be strictly positive");
    }
    tau.values_ = std::move(values);
    return tau;
}

std::vector<ClopenSet> RoofFunction::atom_cells() const {
    std::vector<ClopenSet> out;
    out.reserve(values_.size());
    for (const auto& [w, v] : values_)
        out.push_back(ClopenSet::from_words(slice_.system(), depth_, {w}));
    return out;
}

Rational RoofFunction::value_on_word(const std::string& word) const {
    const auto& sys = *slice_.system();
    int word_depth = sys.kind() == SystemKind::odometer ? static_cast<int>(word.size())
                                                        : static_cast<int>(word.size()) / 2;
    if (word_depth < depth_) throw std::invalid_argument("roof lookup needs a word at least as deep");
    std::string anc = sys.kind() == SystemKind::odometer
                          ? word.substr(0, depth_)
                          : word.substr(word_depth - depth_, 2 * depth_);
    auto it = std::lower_bound(values_.begin(), values_.end(), anc,
                               [](const auto& p, const std::string& w) { return p.first < w; });
    if (it == values_.end() || it->first != anc) throw std::invalid_argument("word outside the roof slice");
    return it->second;
}

Rational RoofFunction::value_at(const PointCode& point) const {
    return value_on_word(point_word(point, depth_));
}

Rational RoofFunction::min_value() const {
    Rational m = values_.front().second;
    for (const auto& [w, v] : values_) m = std::min(m, v);
    return m;
}

Rational RoofFunction::max_value() const {
    Rational m = values_.front().second;
    for (const auto& [w, v] : values_) m = std::max(m, v);
    return m;
}

SuspensionFlow::SuspensionFlow(SystemPtr sys, RoofFunction tau) : sys_(std::move(sys)), tau_(std::move(tau)) {
    if (!tau_.slice().is_full())
        throw std::invalid_argument("the suspension roof must live on the full base");
}

SuspensionPoint SuspensionFlow::make_point(const PointCode& base, const Rational& fiber) const {
    return flow_step(SuspensionPoint{base, Rational(0)}, fiber);
}

SuspensionPoint SuspensionFlow::flow_step(const SuspensionPoint& p, const Rational& s) const {
    PointCode x = p.base;
    Rational u = p.fiber + s;
    if (tau_.min_value() == tau_.max_value()) {
        // Constant roof: all crossings at once.
        const Rational roof = tau_.min_value();
        Rational q = u / roof;
        Int k = boost::multiprecision::numerator(q) / boost::multiprecision::denominator(q);
        if (q < 0 && Rational(k) != q) k -= 1;
        return SuspensionPoint{x.step(k.convert_to<long long>()), u - Rational(k) * roof};
    }
    Rational roof = tau_.value_at(x);
    while (u >= roof) {
        u -= roof;
        x = x.step(1);
        roof = tau_.value_at(x);
    }
    while (u < 0) {
        x = x.step(-1);
        u += tau_.value_at(x);
    }
    return SuspensionPoint{std::move(x), std::move(u)};
}

bool SuspensionFlow::same_point(const SuspensionPoint& a, const SuspensionPoint& b, int compare_depth) const {
    return a.fiber == b.fiber && point_word(a.base, compare_depth) == point_word(b.base, compare_depth);
}

bool SuspensionFlow::in_tube(const SuspensionPoint& p, const ClopenSet& c, const Rational& lo,
                             const Rational& hi, bool closed_ends) const {
    // p = phi_s([0, z]) with z in C exactly when s = u - arrive(j) for some j
    // with Phi^j(base) in C, where arrive(.) ladders the roof along the orbit.
    auto inside = [&](const Rational& s) { return closed_ends ? (lo <= s && s <= hi) : (lo < s && s < hi); };
    if (tau_.min_value() == tau_.max_value()) {
        // Constant roof: arrivals form an arithmetic progression.
        const Rational roof = tau_.min_value();
        auto ceil_div = [](const Rational& q) {
            // Truncation is already the ceiling for negative rationals.
            Int f = boost::multiprecision::numerator(q) / boost::multiprecision::denominator(q);
            if (q > 0 && Rational(f) != q) f += 1;
            return f.convert_to<long long>();
        };
        long long j_lo = ceil_div((p.fiber - hi) / roof);
        for (long long j = j_lo; Rational(j) * roof <= p.fiber - lo; ++j) {
            Rational s = p.fiber - Rational(j) * roof;
            if (inside(s) && contains(c, p.base.step(j))) return true;
        }
        return false;
    }
    // Forward arrivals: j >= 0, arrive = sum_{i<j} tau(Phi^i base): s <= u.
    Rational arrive = 0;
    PointCode x = p.base;
    while (true) {
        Rational s = p.fiber - arrive;
        if (s < lo) break;
        if (inside(s) && contains(c, x)) return true;
        arrive += tau_.value_at(x);
        x = x.step(1);
    }
    // Backward arrivals: j < 0: s = u + sum_{i=1..m} tau(Phi^{-i} base).
    arrive = 0;
    x = p.base;
    while (true) {
        x = x.step(-1);
        arrive += tau_.value_at(x);
        Rational s = p.fiber + arrive;
        if (s > hi) break;
        if (inside(s) && contains(c, x)) return true;
    }
    return false;
}

Rational FlowReturnData::min_return() const {
    Rational m = pieces.front().flow_time;
    for (const auto& p : pieces) m = std::min(m, p.flow_time);
    return m;
}

RoofFunction FlowReturnData::as_roof() const {
    int depth = slice.depth();
    for (const auto& p : pieces) depth = std::max(depth, p.piece.depth());
    std::vector<std::pair<std::string, Rational>> vals;
    for (const auto& p : pieces)
        for (const auto& w : p.piece.refined_words(depth)) vals.emplace_back(w, p.flow_time);
    return RoofFunction::from_atom_values(slice, depth, std::move(vals));
}

FlowReturnData suspension_return_time(const SuspensionFlow& flow, const ClopenSet& slice, long long max_steps) {
    if (!slice.subset_of(flow.roof().slice())) throw std::invalid_argument("slice outside the base");
    AmbientSystem amb(flow.system());
    std::vector<ClopenSet> cells = flow.roof().atom_cells();
    ReturnPartition rp = return_partition(amb, slice, slice, max_steps, &cells);
    FlowReturnData out;
    out.slice = slice;
    for (const auto& p : rp.pieces) {
        FlowReturnPiece fp;
        fp.piece = p.piece;
        fp.steps = p.time;
        fp.orbit = p.orbit;
        Rational acc = 0;
        fp.arrive.push_back(acc);
        for (long long k = 0; k < p.time; ++k) {
            acc += flow.roof().value_on_word(p.orbit[k].words().front());
            fp.arrive.push_back(acc);
        }
        fp.flow_time = acc;
        out.pieces.push_back(std::move(fp));
    }
    return out;
}

Rational max_admissible_length(const SuspensionFlow& flow, const ClopenSet& base) {
    return suspension_return_time(flow, base).min_return();
}

FlowboxStructure build_flowbox_structure(const SuspensionFlow& flow, const PointCode& center,
                                         int n_max, int depth_budget) {
    FlowboxStructure fb{center, {}, {}};
    int depth = 0;
    Rational prev_length = 0;
    for (int n = 0; n < n_max; ++n) {
        int d = std::max(depth + (n > 0 ? 1 : 0), std::max(n, 1));
        Rational length;
        while (true) {
            if (d > depth_budget)
                throw GuardExceeded("flowbox stage budget exhausted before l_n exceeded n");
            ClopenSet cyl = ClopenSet::from_words(flow.system(), d, {point_word(center, d)});
            length = max_admissible_length(flow, cyl) / 2;
            if (length >= std::max(Rational(n), prev_length + Rational(1, 1000000)) && length > 0) break;
            ++d;
        }
        ClopenSet cyl = ClopenSet::from_words(flow.system(), d, {point_word(center, d)});
        fb.slices.push_back(CentralSlice{cyl, length});
        fb.depths.push_back(d);
        depth = d;
        prev_length = length;
    }
    return fb;
}

FlowboxCheckReport verify_flowbox_properties(const SuspensionFlow& flow, const FlowboxStructure& fb,
                                             int samples, unsigned long long seed) {
    FlowboxCheckReport rep;
    size_t n = fb.slices.size();
    for (size_t i = 0; i + 1 < n; ++i)
        if (!fb.slices[i + 1].base.subset_of(fb.slices[i].base)) rep.nested = false;
    for (size_t i = 0; i < n; ++i) {
        if (fb.slices[i].length < Rational(static_cast<int>(i))) rep.lengths_diverge = false;
        if (i + 1 < n && !(fb.slices[i].length < fb.slices[i + 1].length)) rep.lengths_diverge = false;
    }
    for (size_t i = 0; i < n; ++i) {
        if (fb.depths[i] < static_cast<int>(i)) rep.shrinks_to_center = false;
        if (!contains(fb.slices[i].base, fb.center)) rep.shrinks_to_center = false;
        if (fb.slices[i].base.is_empty() || fb.slices[i].length <= 0) rep.nonempty_interior = false;
    }

    // (v): sampled containments phi(S_k x [L1, L2]) inside the open tube
    // phi(S_n x (L1 - eta, L2 + eta)). Sample points of S_k are the center
    // plus distinct points of the slice cylinder (odometers take explicit
    // tails, subshifts walk the center orbit to its next returns).
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick_n(0, static_cast<int>(n) - 2);
    std::uniform_int_distribution<long long> numer(1, 1000);
    std::map<int, std::vector<PointCode>> rep_cache;
    auto slice_reps = [&](int k) -> const std::vector<PointCode>& {
        auto it = rep_cache.find(k);
        if (it != rep_cache.end()) return it->second;
        std::vector<PointCode> reps{fb.center};
        const auto& sys = flow.system();
        if (sys->is_odometer()) {
            std::string w = fb.slices[k].base.words().front();
            reps.push_back(PointCode::odometer_point(sys, w, "1"));
            reps.push_back(PointCode::odometer_point(sys, w + "01", "10"));
        } else {
            PointCode x = fb.center;
            for (int r = 0; r < 2; ++r) {
                long long j = 1;
                while (!contains(fb.slices[k].base, x.step(j))) ++j;
                x = x.step(j);
                reps.push_back(x);
            }
        }
        return rep_cache.emplace(k, std::move(reps)).first->second;
    };
    for (int s = 0; s < samples && n >= 2; ++s) {
        int stage = pick_n(rng);
        std::uniform_int_distribution<int> pick_k(stage + 1, static_cast<int>(n) - 1);
        int k = pick_k(rng);
        const Rational& ln = fb.slices[stage].length;
        // 0 < eta < ln/2 and a bounded window [L1, L2] placed anywhere in the
        // admissible range; the margin/width caps keep the arrival scans of
        // the membership test short without restricting the offsets tested.
        Rational eta = std::min(Rational(ln / 2), Rational(8)) * Rational(numer(rng), 1001);
        Rational lo_bound = -ln / 2 + eta, hi_bound = ln / 2 - eta;            // valid L range
        Rational span = hi_bound - lo_bound;
        Rational width = std::min(Rational(span), Rational(16)) * Rational(numer(rng), 1001);
        Rational l1 = lo_bound + (span - width) * Rational(numer(rng), 1001);
        Rational l2 = l1 + width;
        ++rep.tube_samples;

        std::uniform_int_distribution<long long> tpick(0, 1000);
        bool okay = true;
        for (const auto& rep_point : slice_reps(k)) {
            Rational t = l1 + (l2 - l1) * Rational(tpick(rng), 1000);
            SuspensionPoint p = flow.flow_step(SuspensionPoint{rep_point, Rational(0)}, t);
            if (!flow.in_tube(p, fb.slices[stage].base, l1 - eta, l2 + eta)) okay = false;
        }
        if (!okay) ++rep.tube_failures;
    }
    return rep;
}

} // namespace cantorflow
