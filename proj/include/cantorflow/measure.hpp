// The unique invariant probability measure of a shipped system: exact
// rationals for odometers, Perron-Frobenius word frequencies with a stated
// error bound for substitution subshifts.
#ifndef CANTORFLOW_MEASURE_HPP
#define CANTORFLOW_MEASURE_HPP

#include <map>
#include <vector>

#include "cantorflow/clopen.hpp"

namespace cantorflow {

inline constexpr double kEpsMu = 1e-12;

struct MeasureWeight {
    bool exact = false;
    Rational rational;   // meaningful iff exact
    double value = 0.0;
    double error = 0.0;  // absolute bound; 0 for exact weights

    double upper() const { return value + error; }
    double lower() const { return value - error; }
};

MeasureWeight weight_add(const MeasureWeight& a, const MeasureWeight& b);
MeasureWeight weight_scale(const MeasureWeight& a, const Int& k);

class InvariantMeasure {
public:
    // max_word_length bounds the substitution frequency table; odometer
    // weights are closed-form at any depth.
    static InvariantMeasure build(SystemPtr sys, int max_word_length = 32);

    const SystemPtr& system() const { return sys_; }
    double eps() const { return sys_->is_odometer() ? 0.0 : kEpsMu; }
    int max_word_length() const { return max_word_length_; }

    MeasureWeight cylinder_weight(int depth, const std::string& word) const;
    // Frequency of an arbitrary admissible word (substitution only).
    double word_frequency(const std::string& word) const;
    MeasureWeight set_weight(const ClopenSet& set) const;

private:
    SystemPtr sys_;
    int max_word_length_ = 0;
    // word length -> (word -> frequency), substitution systems only
    std::map<int, std::map<std::string, double>> freq_;
};

} // namespace cantorflow

#endif
