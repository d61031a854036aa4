// Finitely described points. Odometer points are eventually periodic digit
// codes; substitution points are shift translates of the canonical bi-infinite
// substitution fixed point (aperiodic subshifts contain no eventually
// periodic sequences, so a fixed-point seed replaces the periodic tail).
#ifndef CANTORFLOW_POINT_HPP
#define CANTORFLOW_POINT_HPP

#include <memory>
#include <mutex>
#include <string>

#include "cantorflow/clopen.hpp"
#include "cantorflow/system.hpp"

namespace cantorflow {

class PointCode {
public:
    static PointCode odometer_point(SystemPtr sys, const std::string& preperiod, const std::string& period);
    // Canonical fixed point: seed letters (l, r) with rule^p(l) ending in l,
    // rule^p(r) starting with r, and lr admissible; coordinates >= 0 read
    // from lim rule^{pm}(r), coordinates < 0 from lim rule^{pm}(l).
    static PointCode substitution_fixed_point(SystemPtr sys);

    const SystemPtr& system() const { return sys_; }
    // Symbol at the given coordinate. Odometer points only have
    // coordinates >= 0.
    char at(long long coordinate) const;
    // Phi^k of this point (odometer: add k with carry; subshift: shift).
    PointCode step(long long k) const;

    std::string describe() const;

private:
    PointCode() = default;

    SystemPtr sys_;
    // odometer state
    std::string preperiod_, period_;
    // substitution state
    char left_ = 0, right_ = 0;
    int power_ = 1;
    long long offset_ = 0;
    struct Expansion {
        std::mutex mutex;
        std::string right_word, left_word;
    };
    std::shared_ptr<Expansion> expansion_;
};

bool contains(const ClopenSet& set, const PointCode& point);
// Deepest-cylinder word of the point at the given depth.
std::string point_word(const PointCode& point, int depth);

} // namespace cantorflow

#endif
