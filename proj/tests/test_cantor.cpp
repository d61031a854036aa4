#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <set>

#include "cantorflow/measure.hpp"
#include "cantorflow/point.hpp"

using namespace cantorflow;

namespace {

SystemPtr dyadic() { return SymbolicSystem::parse("odometer base=2"); }
SystemPtr fibonacci() { return SymbolicSystem::parse("substitution a:ab,b:a"); }

// Oracle for the odometer: depth-D words as little-endian integers under
// add-one mod 2^D, independent of the clopen image code path.
std::set<std::string> odometer_image_oracle(const SystemPtr& sys, const std::vector<std::string>& words,
                                            int k, int depth) {
    std::set<std::string> out;
    for (const auto& w : words) {
        long long val = 0, place = 1, modulus = 1;
        for (int i = 0; i < depth; ++i) {
            val += place * (w[i] - '0');
            place *= sys->base_at(i);
            modulus *= sys->base_at(i);
        }
        long long shifted = ((val + k) % modulus + modulus) % modulus;
        std::string img;
        for (int i = 0; i < depth; ++i) {
            img += static_cast<char>('0' + shifted % sys->base_at(i));
            shifted /= sys->base_at(i);
        }
        out.insert(img);
    }
    return out;
}

ClopenSet random_clopen(const SystemPtr& sys, int depth, std::mt19937_64& rng) {
    auto words = sys->depth_words(depth);
    std::vector<std::string> chosen;
    std::uniform_int_distribution<int> coin(0, 1);
    for (const auto& w : words)
        if (coin(rng)) chosen.push_back(w);
    if (chosen.empty()) chosen.push_back(words.front());
    return ClopenSet::from_words(sys, depth, chosen);
}

} // namespace

TEST_CASE("make_system accepts and rejects per family") {
    auto d = dyadic();
    CHECK(d->is_odometer());
    CHECK(d->base_at(0) == 2);
    CHECK(d->base_at(7) == 2);

    auto f = fibonacci();
    CHECK(!f->is_odometer());
    // Primitivity oracle: square of the incidence matrix is positive.
    // Incidence [[1,1],[1,0]]: squared = [[2,1],[1,1]].
    int m[2][2] = {{0, 0}, {0, 0}};
    auto letters = f->alphabet();
    for (int j = 0; j < 2; ++j)
        for (char c : f->rule(letters[j])) m[c == letters[0] ? 0 : 1][j] += 1;
    CHECK(m[0][0] == 1);
    CHECK(m[0][1] == 1);
    CHECK(m[1][0] == 1);
    CHECK(m[1][1] == 0);
    int sq[2][2];
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) sq[i][j] = m[i][0] * m[0][j] + m[i][1] * m[1][j];
    CHECK(sq[0][0] > 0);
    CHECK(sq[0][1] > 0);
    CHECK(sq[1][0] > 0);
    CHECK(sq[1][1] > 0);

    CHECK_THROWS_AS((void)SymbolicSystem::parse("substitution a:ab,b:ab"), std::invalid_argument);
    CHECK_THROWS_AS((void)SymbolicSystem::parse("odometer base=1"), std::invalid_argument);
    CHECK_THROWS_AS((void)SymbolicSystem::parse("odometer base="), std::invalid_argument);
    CHECK_THROWS_AS((void)SymbolicSystem::parse("frobnicator x=1"), std::invalid_argument);
}

TEST_CASE("image on the dyadic odometer") {
    auto sys = dyadic();
    ClopenSet zero = ClopenSet::from_prefix(sys, "0");
    CHECK(zero.image(1).equals(ClopenSet::from_prefix(sys, "1")));
    CHECK(zero.image(0).equals(zero));
    ClopenSet oo = ClopenSet::from_prefix(sys, "11");
    CHECK(oo.image(1).equals(ClopenSet::from_prefix(sys, "00")));
}

TEST_CASE("image round trip against the integer oracle") {
    std::mt19937_64 rng(7);
    for (const char* desc : {"odometer base=2", "odometer base=3", "odometer base=2,3"}) {
        auto sys = SymbolicSystem::parse(desc);
        for (int trial = 0; trial < 12; ++trial) {
            int depth = 1 + static_cast<int>(rng() % 6);
            ClopenSet a = random_clopen(sys, depth, rng);
            for (int k = -8; k <= 8; ++k) {
                ClopenSet img = a.image(k);
                CHECK(img.image(-k).equals(a));
                auto oracle = odometer_image_oracle(sys, a.refined_words(depth), k, depth);
                ClopenSet expect = ClopenSet::from_words(
                    sys, depth, std::vector<std::string>(oracle.begin(), oracle.end()));
                CHECK(img.equals(expect));
            }
        }
    }
}

TEST_CASE("image round trip on the fibonacci subshift with point oracle") {
    auto sys = fibonacci();
    std::mt19937_64 rng(11);
    PointCode x = PointCode::substitution_fixed_point(sys);
    for (int trial = 0; trial < 6; ++trial) {
        int depth = 1 + static_cast<int>(rng() % 3);
        auto words = sys->depth_words(depth);
        std::vector<std::string> chosen;
        for (const auto& w : words)
            if (rng() % 2) chosen.push_back(w);
        if (chosen.empty()) chosen.push_back(words.front());
        ClopenSet a = ClopenSet::from_words(sys, depth, chosen);
        for (int k = -6; k <= 6; ++k) {
            ClopenSet img = a.image(k);
            CHECK(img.image(-k).equals(a));
            // Point-level oracle: sigma^j(x) lands in Phi^k(A) iff
            // sigma^{j-k}(x) lands in A.
            for (int j = 10; j < 40; ++j)
                CHECK(contains(img, x.step(j)) == contains(a, x.step(j - k)));
        }
    }
}

TEST_CASE("boolean algebra examples") {
    auto sys = dyadic();
    ClopenSet z = ClopenSet::from_prefix(sys, "0");
    ClopenSet o = ClopenSet::from_prefix(sys, "1");
    CHECK(set_union(z, o).is_full());
    ClopenSet zz = ClopenSet::from_prefix(sys, "00");
    CHECK(set_intersection(z, zz).equals(zz));
    ClopenSet zo = ClopenSet::from_prefix(sys, "01");
    CHECK(set_difference(z, zo).equals(zz));

    auto fib = fibonacci();
    CHECK_THROWS_AS((void)set_union(z, ClopenSet::full(fib)), std::invalid_argument);
}

TEST_CASE("refinement consistency") {
    std::mt19937_64 rng(3);
    for (const auto& desc : {"odometer base=2", "substitution a:ab,b:a"}) {
        auto sys = SymbolicSystem::parse(desc);
        for (int trial = 0; trial < 8; ++trial) {
            int depth = 1 + static_cast<int>(rng() % 3);
            ClopenSet a = random_clopen(sys, depth, rng);
            for (int extra = 1; extra <= 3; ++extra) {
                ClopenSet refined = a.refined_to(depth + extra);
                CHECK(refined.equals(a));
                CHECK(a.subset_of(refined));
            }
        }
    }
}

TEST_CASE("measure values") {
    auto sys = dyadic();
    InvariantMeasure mu = InvariantMeasure::build(sys);
    for (int d = 1; d <= 6; ++d) {
        auto w = mu.cylinder_weight(d, std::string(d, '0'));
        CHECK(w.exact);
        CHECK(w.rational == Rational(1, Int(1) << d));
    }
    CHECK(mu.set_weight(ClopenSet::full(sys)).rational == 1);

    auto fib = fibonacci();
    InvariantMeasure nu = InvariantMeasure::build(fib, 20);
    double golden_inv = 0.61803398874989484820;   // 1/phi = (sqrt(5)-1)/2
    MeasureWeight wa = nu.set_weight(ClopenSet::from_prefix(fib, "a"));
    CHECK(std::abs(wa.value - golden_inv) <= 1e-12 + wa.error);
    MeasureWeight wb = nu.set_weight(ClopenSet::from_prefix(fib, "b"));
    CHECK(std::abs(wa.value + wb.value - 1.0) <= 4 * kEpsMu);
}

TEST_CASE("measure additivity and invariance") {
    std::mt19937_64 rng(5);
    auto sys = dyadic();
    InvariantMeasure mu = InvariantMeasure::build(sys);
    for (int trial = 0; trial < 10; ++trial) {
        ClopenSet a = random_clopen(sys, 4, rng), b = random_clopen(sys, 4, rng);
        Rational lhs = mu.set_weight(set_union(a, b)).rational + mu.set_weight(set_intersection(a, b)).rational;
        Rational rhs = mu.set_weight(a).rational + mu.set_weight(b).rational;
        CHECK(lhs == rhs);
        CHECK(mu.set_weight(a.image(1)).rational == mu.set_weight(a).rational);
    }

    auto fib = fibonacci();
    InvariantMeasure nu = InvariantMeasure::build(fib, 24);
    for (int trial = 0; trial < 6; ++trial) {
        ClopenSet a = random_clopen(fib, 3, rng), b = random_clopen(fib, 3, rng);
        double lhs = nu.set_weight(set_union(a, b)).value + nu.set_weight(set_intersection(a, b)).value;
        double rhs = nu.set_weight(a).value + nu.set_weight(b).value;
        CHECK(std::abs(lhs - rhs) <= 4 * kEpsMu);
    }
    // Phi-invariance on all atoms up to depth 8 (odometer exact, subshift
    // within 2 eps).
    for (int d = 1; d <= 8; ++d)
        for (const auto& w : sys->depth_words(d)) {
            ClopenSet a = ClopenSet::from_words(sys, d, {w});
            CHECK(mu.set_weight(a.image(1)).rational == mu.set_weight(a).rational);
        }
    for (int d = 1; d <= 4; ++d)
        for (const auto& w : fib->depth_words(d)) {
            ClopenSet a = ClopenSet::from_words(fib, d, {w});
            CHECK(std::abs(nu.set_weight(a.image(1)).value - nu.set_weight(a).value) <=
                  2 * kEpsMu + a.image(1).size() * kEpsMu);
        }
}

TEST_CASE("contains and point codes") {
    auto sys = dyadic();
    PointCode zeros = PointCode::odometer_point(sys, "", "0");
    CHECK(contains(ClopenSet::from_prefix(sys, "0"), zeros));
    CHECK(!contains(ClopenSet::from_prefix(sys, "1"), zeros));
    PointCode alt = PointCode::odometer_point(sys, "", "01");
    CHECK(contains(ClopenSet::from_prefix(sys, "01"), alt));

    // Add-one with carry on eventually periodic codes.
    PointCode ones = PointCode::odometer_point(sys, "", "1");
    PointCode zero_again = ones.step(1);
    for (int i = 0; i < 12; ++i) CHECK(zero_again.at(i) == '0');
    CHECK(zeros.step(-1).at(0) == '1');
    PointCode p = PointCode::odometer_point(sys, "", "01");
    PointCode q = p.step(1);
    CHECK(q.at(0) == '1');
    CHECK(q.at(1) == '1');
    CHECK(q.at(2) == '0');
    CHECK(q.step(-1).at(0) == p.at(0));

    // Orbit consistency: stepping k times shifts the induced integer.
    PointCode r = zeros;
    for (int k = 0; k < 16; ++k) {
        long long val = 0;
        for (int i = 0; i < 5; ++i) val += (r.at(i) - '0') << i;
        CHECK(val == k % 32);
        r = r.step(1);
    }

    auto fib = fibonacci();
    PointCode x = PointCode::substitution_fixed_point(fib);
    // Coordinates agree with the substitution fixed point abaababa...
    std::string w = fib->substitute("a", 8);
    for (int i = 0; i < 20; ++i) CHECK(x.at(i) == w[i]);
    CHECK(x.step(3).at(0) == x.at(3));
    CHECK(x.step(-2).at(2) == x.at(0));
}

TEST_CASE("odometer with mixed base cycle") {
    auto sys = SymbolicSystem::parse("odometer base=2,3");
    CHECK(sys->base_at(0) == 2);
    CHECK(sys->base_at(1) == 3);
    CHECK(sys->base_at(2) == 2);
    CHECK(sys->cylinder_count(3) == 12);
    // Full orbit of a depth-2 cylinder has length 6.
    ClopenSet a = ClopenSet::from_prefix(sys, "00");
    ClopenSet cur = a;
    for (int i = 0; i < 6; ++i) cur = cur.image(1);
    CHECK(cur.equals(a));
    for (int i = 1; i < 6; ++i) CHECK(!a.image(i).equals(a));
}

TEST_CASE("language complexity of fibonacci is n+1") {
    auto fib = fibonacci();
    for (int n = 1; n <= 12; ++n) CHECK(static_cast<int>(fib->language(n).size()) == n + 1);
}

TEST_CASE("thue-morse substitution is accepted") {
    auto tm = SymbolicSystem::parse("substitution a:ab,b:ba");
    CHECK(tm->language(1).size() == 2);
    CHECK(tm->language(3).size() == 6);   // p(3) = 6 for Thue-Morse
    InvariantMeasure mu = InvariantMeasure::build(tm, 10);
    CHECK(std::abs(mu.set_weight(ClopenSet::from_prefix(tm, "a")).value - 0.5) <= 1e-10);
}
