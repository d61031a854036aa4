#include "cantorflow/measure.hpp"

#include <cmath>
#include <stdexcept>

namespace cantorflow {

MeasureWeight weight_add(const MeasureWeight& a, const MeasureWeight& b) {
    MeasureWeight w;
    w.exact = a.exact && b.exact;
    if (w.exact) {
        w.rational = a.rational + b.rational;
        w.value = to_double(w.rational);
    } else {
        w.value = a.value + b.value;
    }
    w.error = a.error + b.error;
    return w;
}

MeasureWeight weight_scale(const MeasureWeight& a, const Int& k) {
    MeasureWeight w;
    w.exact = a.exact;
    double kd = k.convert_to<double>();
    if (w.exact) {
        w.rational = a.rational * Rational(k);
        w.value = to_double(w.rational);
    } else {
        w.value = a.value * kd;
    }
    w.error = a.error * std::abs(kd);
    return w;
}

namespace {

// Frequencies of length-L words as the normalized Perron-Frobenius vector of
// the L-block substitution: block w maps to the L-windows of rule(w) starting
// at the positions claimed by the image of w's first letter.
std::map<std::string, double> block_frequencies(const SymbolicSystem& sys, int length) {
    const auto& words = sys.language(length);
    int m = static_cast<int>(words.size());
    auto index_of = [&](const std::string& w) {
        auto it = std::lower_bound(words.begin(), words.end(), w);
        if (it == words.end() || *it != w) throw std::logic_error("block image outside language");
        return static_cast<int>(it - words.begin());
    };
    std::vector<std::vector<double>> mat(m, std::vector<double>(m, 0.0));
    for (int j = 0; j < m; ++j) {
        std::string img = sys.substitute(words[j]);
        size_t head = sys.rule(words[j][0]).size();
        if (img.size() < head + length - 1) throw std::logic_error("block image too short");
        for (size_t pos = 0; pos < head; ++pos)
            mat[index_of(img.substr(pos, length))][j] += 1.0;
    }
    std::vector<double> v(m, 1.0 / m), next(m);
    double diff = 1.0;
    for (int iter = 0; iter < 5000 && diff > 1e-17; ++iter) {
        double norm = 0.0;
        for (int i = 0; i < m; ++i) {
            double s = 0.0;
            for (int j = 0; j < m; ++j) s += mat[i][j] * v[j];
            next[i] = s;
            norm += s;
        }
        diff = 0.0;
        for (int i = 0; i < m; ++i) {
            next[i] /= norm;
            diff += std::abs(next[i] - v[i]);
        }
        v = next;
    }
    if (diff > 1e-14) throw std::runtime_error("frequency iteration did not converge");
    std::map<std::string, double> out;
    for (int i = 0; i < m; ++i) {
        if (v[i] <= 0.0) throw std::runtime_error("non-positive word frequency (block substitution not primitive?)");
        out[words[i]] = v[i];
    }
    return out;
}

} // namespace

InvariantMeasure InvariantMeasure::build(SystemPtr sys, int max_word_length) {
    InvariantMeasure mu;
    mu.sys_ = std::move(sys);
    mu.max_word_length_ = max_word_length;
    if (mu.sys_->is_odometer()) return mu;
    mu.freq_[0] = {{"", 1.0}};
    for (int len = 1; len <= max_word_length; ++len) {
        mu.freq_[len] = block_frequencies(*mu.sys_, len);
        // Kolmogorov consistency against the previous length as a
        // convergence self-check.
        if (len >= 2) {
            for (const auto& [w, f] : mu.freq_[len - 1]) {
                double right = 0.0;
                for (const auto& [v, g] : mu.freq_[len])
                    if (v.compare(0, len - 1, w) == 0) right += g;
                if (std::abs(right - f) > 0.1 * kEpsMu)
                    throw std::runtime_error("frequency table inconsistent beyond tolerance");
            }
        }
    }
    return mu;
}

MeasureWeight InvariantMeasure::cylinder_weight(int depth, const std::string& word) const {
    MeasureWeight w;
    if (sys_->is_odometer()) {
        w.exact = true;
        w.rational = Rational(1, sys_->cylinder_count(depth));
        w.value = to_double(w.rational);
        w.error = 0.0;
        return w;
    }
    w.exact = false;
    w.value = word_frequency(word);
    w.error = kEpsMu;
    return w;
}

double InvariantMeasure::word_frequency(const std::string& word) const {
    if (sys_->is_odometer()) throw std::invalid_argument("word_frequency is for substitution systems");
    int len = static_cast<int>(word.size());
    auto it = freq_.find(len);
    if (it == freq_.end())
        throw std::out_of_range("word length beyond the precomputed frequency table");
    auto jt = it->second.find(word);
    if (jt == it->second.end()) throw std::invalid_argument("word not in the subshift language");
    return jt->second;
}

MeasureWeight InvariantMeasure::set_weight(const ClopenSet& set) const {
    if (set.system() != sys_) throw std::invalid_argument("measure built for a different system");
    MeasureWeight total;
    total.exact = true;
    total.rational = 0;
    total.value = 0.0;
    total.error = 0.0;
    for (const auto& w : set.words())
        total = weight_add(total, cylinder_weight(set.depth(), w));
    return total;
}

} // namespace cantorflow
