#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cantorflow/return_map.hpp"

using namespace cantorflow;

namespace {

SystemPtr dyadic() { return SymbolicSystem::parse("odometer base=2"); }
SystemPtr fibonacci() { return SymbolicSystem::parse("substitution a:ab,b:a"); }

ClopenSet prefix(const SystemPtr& sys, const std::string& w) { return ClopenSet::from_prefix(sys, w); }

} // namespace

TEST_CASE("first return times on the dyadic odometer") {
    auto sys = dyadic();
    AmbientSystem amb(sys);

    // D = T = [0]: 0w -> 1w (outside), 1w -> 0(w+1): return time 2.
    ReturnPartition rp = return_partition(amb, prefix(sys, "0"), prefix(sys, "0"));
    REQUIRE(rp.pieces.size() == 1);
    CHECK(rp.pieces[0].time == 2);
    CHECK(rp.pieces[0].piece.equals(prefix(sys, "0")));

    // D inside T still measures the first return, not arrival at time 0.
    rp = return_partition(amb, prefix(sys, "00"), prefix(sys, "0"));
    REQUIRE(rp.pieces.size() == 1);
    CHECK(rp.pieces[0].time == 2);

    // D = [1], T = [0]: single step.
    rp = return_partition(amb, prefix(sys, "1"), prefix(sys, "0"));
    REQUIRE(rp.pieces.size() == 1);
    CHECK(rp.pieces[0].time == 1);

    CHECK_THROWS_AS((void)return_partition(amb, prefix(sys, "0"), prefix(sys, "0"), 1), GuardExceeded);
}

TEST_CASE("induced systems") {
    auto sys = dyadic();
    auto amb = std::make_shared<AmbientSystem>(sys);

    // S = [0]: the induced map is the odometer in the remaining digits.
    auto ind = InducedSystem::build(amb, prefix(sys, "0"));
    CHECK(ind->step(prefix(sys, "00"), 1).equals(prefix(sys, "01")));
    CHECK(ind->step(prefix(sys, "01"), -1).equals(prefix(sys, "00")));
    // Bijectivity: piece images partition the slice (validated at build, and
    // a full orbit of the induced map returns).
    ClopenSet cur = prefix(sys, "00");
    for (int i = 0; i < 2; ++i) cur = ind->step(cur, 1);
    CHECK(cur.equals(prefix(sys, "00")));

    // S = full: the induced map is Phi itself.
    auto ind_full = InducedSystem::build(amb, ClopenSet::full(sys));
    REQUIRE(ind_full->partition().pieces.size() == 1);
    CHECK(ind_full->partition().pieces[0].time == 1);
    CHECK(ind_full->step(prefix(sys, "0"), 1).equals(prefix(sys, "1")));

    // Fibonacci, S = [a]: return times {1, 2}.
    auto fib = fibonacci();
    auto find = InducedSystem::build(std::make_shared<AmbientSystem>(fib), prefix(fib, "a"));
    std::set<long long> times;
    for (const auto& p : find->partition().pieces) times.insert(p.time);
    CHECK(times == std::set<long long>{1, 2});
    // The return-1 part is [aa], the return-2 part is [ab].
    ClopenSet t1 = ClopenSet::empty(fib), t2 = ClopenSet::empty(fib);
    for (const auto& p : find->partition().pieces)
        (p.time == 1 ? t1 : t2) = set_union(p.time == 1 ? t1 : t2, p.piece);
    CHECK(t1.equals(prefix(fib, "aa")));
    CHECK(t2.equals(prefix(fib, "ab")));
}

TEST_CASE("tower decompositions on nested dyadic cylinders") {
    auto sys = dyadic();
    InvariantMeasure mu = InvariantMeasure::build(sys);
    auto chain_slices = nested_slices(sys, 5);
    StageChain chain = StageChain::build(sys, chain_slices);
    for (size_t n = 0; n + 1 < chain.stages.size(); ++n) {
        const TowerDecomposition& td = chain.tower(n);
        CHECK(td.heights() == std::vector<int>{1});
        REQUIRE(td.towers().size() == 1);
        // F^(0) = [0^{n+1}], F^(1) = [0^n 1].
        CHECK(td.towers()[0].base().equals(prefix(sys, std::string(n + 1, '0'))));
        CHECK(td.towers()[0].top().equals(prefix(sys, std::string(n, '0') + "1")));
        CHECK(td.partition_ok());
        CHECK(td.kac_lhs(mu).rational == mu.set_weight(td.outer()).rational);
        // t_map: base [0^{n+1}] -> [0^n 1].
        auto tm = td.t_map();
        REQUIRE(tm.size() == 1);
        CHECK(tm[0].first.equals(prefix(sys, std::string(n + 1, '0'))));
        CHECK(tm[0].second.equals(prefix(sys, std::string(n, '0') + "1")));
    }
}

TEST_CASE("tower of the full dyadic set over [00] walks in carry order") {
    auto sys = dyadic();
    auto amb = std::make_shared<AmbientSystem>(sys);
    TowerDecomposition td = TowerDecomposition::build(amb, prefix(sys, "00"));
    CHECK(td.heights() == std::vector<int>{3});
    REQUIRE(td.towers().size() == 1);
    const auto& floors = td.towers()[0].floors;
    REQUIRE(floors.size() == 4);
    CHECK(floors[0].equals(prefix(sys, "00")));
    CHECK(floors[1].equals(prefix(sys, "10")));
    CHECK(floors[2].equals(prefix(sys, "01")));
    CHECK(floors[3].equals(prefix(sys, "11")));
    InvariantMeasure mu = InvariantMeasure::build(sys);
    CHECK(td.kac_lhs(mu).rational == 1);
}

TEST_CASE("fibonacci tower over [aa] inside [a]") {
    auto fib = fibonacci();
    auto ind = InducedSystem::build(std::make_shared<AmbientSystem>(fib), prefix(fib, "a"));
    TowerDecomposition td = TowerDecomposition::build(ind, prefix(fib, "aa"));
    CHECK(td.partition_ok());
    InvariantMeasure mu = InvariantMeasure::build(fib, 24);
    MeasureWeight lhs = td.kac_lhs(mu);
    MeasureWeight rhs = mu.set_weight(prefix(fib, "a"));
    CHECK(std::abs(lhs.value - rhs.value) <= 4 * kEpsMu + lhs.error + rhs.error);
}

TEST_CASE("degenerate inner slice is rejected") {
    auto sys = dyadic();
    auto amb = std::make_shared<AmbientSystem>(sys);
    CHECK_THROWS_AS((void)TowerDecomposition::build(amb, ClopenSet::full(sys)), DisjointnessViolation);
    auto ind = InducedSystem::build(amb, prefix(sys, "0"));
    CHECK_THROWS_AS((void)TowerDecomposition::build(ind, prefix(sys, "0")), DisjointnessViolation);
}

TEST_CASE("height-zero towers appear without the disjointness hypothesis") {
    auto sys = dyadic();
    auto amb = std::make_shared<AmbientSystem>(sys);
    TowerDecomposition td = TowerDecomposition::build(amb, ClopenSet::full(sys), kDefaultMaxSteps, false);
    CHECK(td.heights() == std::vector<int>{0});
    auto tm = td.t_map();
    REQUIRE(tm.size() == 1);
    CHECK(tm[0].first.equals(tm[0].second));   // t_n = identity on a height-0 tower
}

TEST_CASE("lemma lemt: composed t maps hit the composed preimage") {
    for (const char* desc : {"odometer base=2", "odometer base=3", "substitution a:ab,b:a"}) {
        auto sys = SymbolicSystem::parse(desc);
        int total = sys->is_odometer() ? 8 : 6;
        StageChain chain = StageChain::build(sys, nested_slices(sys, total));
        int max_k = sys->is_odometer() ? 4 : 2;
        for (int n = 0; n + 2 < total; ++n) {
            for (int k = 0; k <= max_k && n + k + 2 < total; ++k) {
                ClopenSet arg = chain.stages[n + k + 1].map->step(chain.stages[n + k + 2].slice, -1);
                ClopenSet cur = arg;
                for (int j = n + k; j >= n; --j) cur = chain.tower(j).t_image(cur);
                ClopenSet expect = chain.stages[n].map->step(chain.stages[n + k + 2].slice, -1);
                CHECK(cur.equals(expect));
            }
        }
    }
}

TEST_CASE("partition and kac identities on every computed decomposition") {
    for (const char* desc : {"odometer base=2", "odometer base=3", "odometer base=2,3",
                             "substitution a:ab,b:a"}) {
        auto sys = SymbolicSystem::parse(desc);
        int total = sys->is_odometer() ? 6 : 4;
        StageChain chain = StageChain::build(sys, nested_slices(sys, total));
        int max_depth = 0;
        for (int n = 0; n + 1 < total; ++n)
            for (const auto& t : chain.tower(n).towers())
                for (const auto& f : t.floors) max_depth = std::max(max_depth, f.depth());
        InvariantMeasure mu = InvariantMeasure::build(sys, sys->is_odometer() ? 32 : 2 * max_depth + 2);
        for (int n = 0; n + 1 < total; ++n) {
            const TowerDecomposition& td = chain.tower(n);
            CHECK(td.partition_ok());
            MeasureWeight lhs = td.kac_lhs(mu);
            MeasureWeight rhs = mu.set_weight(td.outer());
            if (lhs.exact && rhs.exact)
                CHECK(lhs.rational == rhs.rational);
            else
                CHECK(std::abs(lhs.value - rhs.value) <= 4 * kEpsMu + lhs.error + rhs.error);
        }
    }
}
