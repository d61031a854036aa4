// Acceptance suite: runs every acceptance criterion end to end and prints
// one PASS/FAIL line each; exits nonzero if any criterion fails.
#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "cantorflow/k0.hpp"
#include "cantorflow/kernels.hpp"
#include "cantorflow/run.hpp"
#include "cantorflow/suspension.hpp"

using namespace cantorflow;

namespace {

struct Criterion {
    int id;
    std::string label;
    bool pass = false;
    double seconds = 0.0;
    std::string detail;
};

std::vector<Criterion> results;

void run_criterion(int id, const std::string& label, double budget_s,
                   const std::function<bool(std::string&)>& body) {
    Criterion c{id, label};
    auto start = std::chrono::steady_clock::now();
    try {
        c.pass = body(c.detail);
    } catch (const std::exception& e) {
        c.pass = false;
        c.detail = std::string("exception: ") + e.what();
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (budget_s > 0 && c.seconds > budget_s) {
        c.pass = false;
        c.detail += " [runtime budget exceeded]";
    }
    results.push_back(c);
    std::printf("%s criterion %d: %s (%.2f s)%s%s\n", c.pass ? "PASS" : "FAIL", id, label.c_str(),
                c.seconds, c.detail.empty() ? "" : " -- ", c.detail.c_str());
    std::fflush(stdout);
}

// Tower sanity shared by several criteria: partition + Kac.
bool towers_sound(const StageChain& chain, const InvariantMeasure& mu, std::string& why) {
    for (size_t n = 0; n + 1 < chain.stages.size(); ++n) {
        const TowerDecomposition& td = chain.tower(n);
        if (!td.partition_ok()) {
            why = "floor partition failed at stage " + std::to_string(n);
            return false;
        }
        MeasureWeight lhs = td.kac_lhs(mu);
        MeasureWeight rhs = mu.set_weight(td.outer());
        bool kac = (lhs.exact && rhs.exact)
                       ? lhs.rational == rhs.rational
                       : std::abs(lhs.value - rhs.value) <= 4 * kEpsMu + lhs.error + rhs.error;
        if (!kac) {
            why = "Kac identity failed at stage " + std::to_string(n);
            return false;
        }
    }
    return true;
}

bool odometer_dimension_group(const std::string& descriptor, int stages, int depth_cap,
                              const Int& expected_multiplier, std::string& why) {
    auto sys = SymbolicSystem::parse(descriptor);
    InvariantMeasure mu = InvariantMeasure::build(sys);
    StageChain chain = StageChain::build(sys, nested_slices(sys, stages));
    if (!towers_sound(chain, mu, why)) return false;
    OrderIsoReport rep = order_iso_check(chain, stages, depth_cap, mu, 20260810);
    if (!rep.ok()) {
        why = "order_iso_check reported a failure";
        return false;
    }
    for (const auto& s : rep.stages) {
        if (!s.tower_heights.empty() &&
            s.tower_heights != std::vector<int>{static_cast<int>(expected_multiplier) - 1}) {
            why = "unexpected tower heights at stage " + std::to_string(s.stage);
            return false;
        }
        if (s.iota_constant_multiplier && *s.iota_constant_multiplier != expected_multiplier) {
            why = "iota is not x" + expected_multiplier.str() + " on constants";
            return false;
        }
        for (size_t i = 0; i + 1 < s.invariant_factors.size(); ++i)
            if (s.invariant_factors[i] != 1) {
                why = "invariant factors are not (1,...,1,0)";
                return false;
            }
        if (s.invariant_factors.back() != 0) {
            why = "cokernel is not Z";
            return false;
        }
        if (!s.model_matches || !s.positivity_matches || !s.gamma_surjective ||
            !s.kernel_matches_trace_kernel) {
            why = "stage " + std::to_string(s.stage) + " check failed";
            return false;
        }
    }
    // Truncated-limit match [S_n] -> b^{-n} in the Z[1/b] picture, checked
    // against the anchor cokernel at the deepest tested depth.
    int d = std::min(stages - 1, depth_cap);
    K0Stage st = K0Stage::crossed_product(sys, d);
    IntFunction one_x = IntFunction::constant(ClopenSet::full(sys), Int(1));
    Rational val_x(st.free_coordinates(st.class_vector(one_x))[0]);
    for (int n = 0; n <= d; ++n) {
        IntFunction chi = IntFunction::constant(chain.stages[n].slice, Int(1));
        Rational v(st.free_coordinates(st.class_vector(chi))[0]);
        Int power = 1;
        for (int i = 0; i < n; ++i) power *= sys->base_at(i);
        if (v * Rational(power) != val_x) {
            why = "[S_n] does not map to b^{-n}[X] at stage " + std::to_string(n);
            return false;
        }
    }
    return true;
}

bool exact_sequence_suite(std::string& why) {
    std::mt19937_64 rng(777);
    struct Config {
        const char* descriptor;
        int slices;
        int rows;
        int depth_extra;
    };
    for (const Config& cfg : {Config{"odometer base=2", 7, 5, 3}, Config{"substitution a:ab,b:a", 5, 3, 2}}) {
        auto sys = SymbolicSystem::parse(cfg.descriptor);
        StageChain chain = StageChain::build(sys, nested_slices(sys, cfg.slices));
        InvariantMeasure mu = InvariantMeasure::build(sys, sys->is_odometer() ? 32 : 12);
        for (int n = 0; n < cfg.rows; ++n) {
            ExactRowReport r = verify_exact_row(chain, n, chain.stages[n].slice.depth() + cfg.depth_extra, mu);
            if (!r.ok()) {
                why = std::string(cfg.descriptor) + " row " + std::to_string(n) + " failed";
                return false;
            }
        }
        // Middle- and right-square commutativity on 50 random functions per
        // stage with a tower pair.
        for (int n = 0; n + 2 < cfg.slices - 0; ++n) {
            if (static_cast<size_t>(n + 2) >= chain.stages.size()) break;
            const TowerDecomposition& a = chain.tower(n);
            const TowerDecomposition& b = chain.tower(n + 1);
            int gamma_depth = 0;
            std::vector<IntFunction> mids, rights;
            for (int t = 0; t < 50; ++t) {
                IntFunction f = random_int_function(a.top_floor_union(),
                                                    a.top_floor_union().depth() + 1, rng);
                if (!(beta(b, delta(a, b, f)) ==
                      connecting_iota(b, beta(a, f).extended_zero(b.outer())))) {
                    why = std::string(cfg.descriptor) + " middle square failed at stage " +
                          std::to_string(n);
                    return false;
                }
                IntFunction h = random_int_function(chain.stages[n + 1].slice,
                                                    chain.stages[n + 1].slice.depth() + 1, rng);
                IntFunction ih = connecting_iota(b, h);
                gamma_depth = std::max({gamma_depth, ih.depth(), h.depth()});
                mids.push_back(std::move(h));
                rights.push_back(std::move(ih));
            }
            if (sys->is_odometer()) {
                K0Stage st = K0Stage::crossed_product(sys, gamma_depth);
                for (size_t t = 0; t < mids.size(); ++t)
                    if (!st.classes_equal(st.class_vector(rights[t]), st.class_vector(mids[t]))) {
                        why = "right square failed";
                        return false;
                    }
            } else {
                // Substitution anchor needs the telescoping depth margin.
                AmbientSystem amb(sys);
                ReturnPartition rp = return_partition(amb, chain.stages[n + 2].slice,
                                                      chain.stages[n + 2].slice);
                long long max_ret = 0;
                for (const auto& p : rp.pieces) max_ret = std::max(max_ret, p.time);
                K0Stage st = K0Stage::crossed_product(
                    sys, 2 * gamma_depth + static_cast<int>(max_ret) + 4);
                for (size_t t = 0; t < mids.size(); ++t)
                    if (!st.classes_equal(st.class_vector(rights[t]), st.class_vector(mids[t]))) {
                        why = "right square failed (substitution)";
                        return false;
                    }
            }
        }
        // Delta stabilization: inputs at slice depth + 2 become constant in
        // at most 3 steps.
        for (int n = 0; n + 2 < static_cast<int>(chain.stages.size()); ++n) {
            ClopenSet top = chain.tower(n).top_floor_union();
            int fd = std::max(top.depth(), chain.stages[n].slice.depth() + 2);
            for (int t = 0; t < 5; ++t) {
                IntFunction cur = random_int_function(top, fd, rng);
                int steps = 0;
                int budget = std::min(3, static_cast<int>(chain.stages.size()) - n - 2);
                while (!cur.constant_value() && steps < budget) {
                    cur = delta(chain.tower(n + steps), chain.tower(n + steps + 1), cur);
                    ++steps;
                }
                if (!cur.constant_value()) {
                    why = std::string(cfg.descriptor) + " delta did not stabilize within " +
                          std::to_string(budget) + " steps at stage " + std::to_string(n);
                    return false;
                }
            }
        }
        int max_depth = 1;
        for (size_t n = 0; n + 1 < chain.stages.size(); ++n)
            for (const auto& t : chain.tower(n).towers())
                for (const auto& f : t.floors) max_depth = std::max(max_depth, f.depth());
        if (!towers_sound(chain, InvariantMeasure::build(sys, sys->is_odometer() ? 32 : 2 * max_depth + 2),
                          why))
            return false;
    }
    return true;
}

bool property_suites(std::string& why) {
    std::mt19937_64 rng(555);
    // Prop propn1 style: 50 random functions vanishing on the top floor.
    int propn1_checked = 0;
    for (const char* desc : {"odometer base=2", "odometer base=3", "substitution a:ab,b:a"}) {
        auto sys = SymbolicSystem::parse(desc);
        int stages = sys->is_odometer() ? 5 : 4;
        StageChain chain = StageChain::build(sys, nested_slices(sys, stages));
        int per_stage = sys->is_odometer() ? 7 : 4;
        for (int n = 0; n + 1 < stages; ++n) {
            const TowerDecomposition& td = chain.tower(n);
            ClopenSet top = td.top_floor_union();
            for (int t = 0; t < per_stage; ++t) {
                int depth = std::max(top.depth(), chain.stages[n].slice.depth() + 1 +
                                                      static_cast<int>(rng() % 2));
                std::uniform_int_distribution<int> entry(-9, 9);
                std::map<std::string, Int> coeffs;
                ClopenSet off = top.refined_to(depth);
                for (const auto& w : chain.stages[n].slice.refined_words(depth)) {
                    bool in_top = std::binary_search(off.words().begin(), off.words().end(), w);
                    coeffs[w] = in_top ? Int(0) : Int(entry(rng));
                }
                IntFunction f = IntFunction::from_atoms(chain.stages[n].slice, depth, coeffs);
                if (!(connecting_iota(td, f) == connecting_iota(td, pushforward(*td.outer_map(), f)))) {
                    why = "propn1 instance failed";
                    return false;
                }
                ++propn1_checked;
            }
        }
    }
    if (propn1_checked < 50) {
        why = "fewer than 50 propn1 instances";
        return false;
    }
    // Lemma lemt: composed t maps across every admissible (n, k <= 4).
    int lemt_checked = 0;
    for (const char* desc :
         {"odometer base=2", "odometer base=3", "odometer base=2,3", "substitution a:ab,b:a"}) {
        auto sys = SymbolicSystem::parse(desc);
        int total = sys->is_odometer() ? 9 : 5;
        if (std::string(desc) == "odometer base=2,3") total = 7;
        StageChain chain = StageChain::build(sys, nested_slices(sys, total));
        for (int n = 0; n + 2 < total; ++n)
            for (int k = 0; k <= 4 && n + k + 2 < total; ++k) {
                ClopenSet arg = chain.stages[n + k + 1].map->step(chain.stages[n + k + 2].slice, -1);
                ClopenSet cur = arg;
                for (int j = n + k; j >= n; --j) cur = chain.tower(j).t_image(cur);
                ClopenSet expect = chain.stages[n].map->step(chain.stages[n + k + 2].slice, -1);
                if (!cur.equals(expect)) {
                    why = "lemt instance failed";
                    return false;
                }
                ++lemt_checked;
            }
    }
    if (lemt_checked < 50) {
        why = "fewer than 50 lemt instances (" + std::to_string(lemt_checked) + ")";
        return false;
    }
    return true;
}

bool rokhlin_invariants(std::string& why) {
    for (const char* desc :
         {"odometer base=2", "odometer base=3", "odometer base=2,3", "substitution a:ab,b:a"}) {
        auto sys = SymbolicSystem::parse(desc);
        int total = sys->is_odometer() ? 7 : 4;
        StageChain chain = StageChain::build(sys, nested_slices(sys, total));
        int max_depth = 1;
        for (int n = 0; n + 1 < total; ++n)
            for (const auto& t : chain.tower(n).towers())
                for (const auto& f : t.floors) max_depth = std::max(max_depth, f.depth());
        InvariantMeasure mu = InvariantMeasure::build(sys, sys->is_odometer() ? 40 : 2 * max_depth + 2);
        if (!towers_sound(chain, mu, why)) {
            why = std::string(desc) + ": " + why;
            return false;
        }
    }
    return true;
}

bool suspension_suite(std::string& why) {
    auto sys = SymbolicSystem::parse("odometer base=2");
    SuspensionFlow flow(sys, RoofFunction::constant(ClopenSet::full(sys), Rational(1)));
    // Group law on 500 random rational triples, exact.
    std::mt19937_64 rng(987);
    std::uniform_int_distribution<long long> num(-500, 500), den(1, 48);
    PointCode x = PointCode::odometer_point(sys, "", "01");
    for (int t = 0; t < 500; ++t) {
        SuspensionPoint p = flow.flow_step(SuspensionPoint{x, Rational(0)}, Rational(num(rng), den(rng)));
        Rational s(num(rng), den(rng)), u(num(rng), den(rng));
        if (!flow.same_point(flow.flow_step(flow.flow_step(p, s), u), flow.flow_step(p, s + u), 14)) {
            why = "group law failed";
            return false;
        }
    }
    // Flowbox structure with l_n >= n for n <= 16 and 100 tube samples.
    PointCode center = PointCode::odometer_point(sys, "", "0");
    FlowboxStructure fb = build_flowbox_structure(flow, center, 17);
    for (size_t n = 0; n < fb.slices.size(); ++n)
        if (fb.slices[n].length < Rational(static_cast<int>(n))) {
            why = "l_n < n at stage " + std::to_string(n);
            return false;
        }
    FlowboxCheckReport rep = verify_flowbox_properties(flow, fb, 100, 20260810);
    if (!rep.nested || !rep.lengths_diverge || !rep.shrinks_to_center || !rep.nonempty_interior) {
        why = "flowbox (i)-(iv) failed";
        return false;
    }
    if (rep.tube_samples < 100 || rep.tube_failures != 0) {
        why = "flowbox (v) sampling failed";
        return false;
    }
    return true;
}

bool kernel_convergence(std::string& why) {
    RunConfig cfg;
    cfg.command = "kernels-check";
    cfg.system_descriptor = "odometer base=2";
    cfg.slices = {"0"};
    KernelTolerances tol;
    cfg.grid = 64;
    RunResult at64 = run(cfg);
    if (!at64.ok) {
        why = "grid-64 errors exceed the calibrated tolerances";
        return false;
    }
    cfg.grid = 128;
    RunResult at128 = run(cfg);
    if (!at128.ok) {
        why = "grid-128 errors exceed the calibrated tolerances";
        return false;
    }
    for (const char* key : {"homomorphism_error", "involution_error", "trace_error",
                            "round_trip_error", "compatibility_error"}) {
        double coarse = at64.report["result"][key].get<double>();
        double fine = at128.report["result"][key].get<double>();
        if (fine > tol.convergence_ratio * coarse + tol.ratio_floor) {
            why = std::string(key) + " did not contract by 0.7 (" + std::to_string(coarse) +
                  " -> " + std::to_string(fine) + ")";
            return false;
        }
    }
    return true;
}

} // namespace

int main() {
    run_criterion(1, "dyadic dimension group (Z[1/2] picture, stages 0..8)", 10.0, [](std::string& why) {
        return odometer_dimension_group("odometer base=2", 9, 8, Int(2), why);
    });
    run_criterion(2, "3-adic analogue (Z[1/3] picture)", 10.0, [](std::string& why) {
        return odometer_dimension_group("odometer base=3", 6, 6, Int(3), why);
    });
    run_criterion(3, "exact-sequence suite with commuting squares and delta stabilization", 60.0,
                  exact_sequence_suite);
    run_criterion(4, "propn1 and lemt property suites (50 exact instances each)", 60.0,
                  property_suites);
    run_criterion(5, "Rokhlin partition and Kac identities on all decompositions", 60.0,
                  rokhlin_invariants);
    run_criterion(6, "suspension flow group law and flowbox structure", 60.0, suspension_suite);
    run_criterion(7, "kernel identities at N=64 with 0.7x contraction at N=128", 120.0,
                  kernel_convergence);

    bool all = true;
    for (const auto& c : results) all = all && c.pass;
    std::printf("%s: %zu/%zu acceptance criteria passed\n", all ? "SUCCESS" : "FAILURE",
                static_cast<size_t>(std::count_if(results.begin(), results.end(),
                                                  [](const Criterion& c) { return c.pass; })),
                results.size());
    return all ? 0 : 1;
}
