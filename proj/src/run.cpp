#include "cantorflow/run.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "cantorflow/k0.hpp"
#include "cantorflow/kernels.hpp"
#include "cantorflow/suspension.hpp"

namespace cantorflow {

namespace {

constexpr const char* kSchema = "cantorflow-report-v1";
constexpr const char* kVersion = "0.1.0";

Json clopen_json(const ClopenSet& s) {
    return Json{{"depth", s.depth()}, {"words", s.words()}};
}

std::vector<ClopenSet> resolve_slices(const SystemPtr& sys, const RunConfig& cfg) {
    if (cfg.auto_nest > 0) return nested_slices(sys, cfg.auto_nest);
    // The chain always starts at the outermost slice S_0 = X.
    std::vector<ClopenSet> out{ClopenSet::full(sys)};
    for (const auto& w : cfg.slices) {
        if (w.empty() || w == "full") continue;
        out.push_back(ClopenSet::from_prefix(sys, w));
    }
    return out;
}

RoofFunction resolve_tau(const SystemPtr& sys, const RunConfig& cfg) {
    ClopenSet full = ClopenSet::full(sys);
    if (cfg.tau_json.empty()) return RoofFunction::constant(full, Rational(1));
    Json spec = Json::parse(cfg.tau_json);
    std::vector<std::pair<std::string, Rational>> values;
    for (auto it = spec.begin(); it != spec.end(); ++it)
        values.emplace_back(it.key(), parse_rational(it.value().get<std::string>()));
    return RoofFunction::from_prefix_values(full, values);
}

Json weight_json(const MeasureWeight& w) {
    Json j;
    j["value"] = w.value;
    if (w.exact)
        j["exact"] = format_rational(w.rational);
    else
        j["error_bound"] = w.error;
    return j;
}

Json run_system(const RunConfig& cfg, bool& ok) {
    SystemPtr sys = SymbolicSystem::parse(cfg.system_descriptor);
    Json j;
    j["descriptor"] = sys->descriptor();
    if (sys->is_odometer()) {
        j["kind"] = "odometer";
        j["params"] = Json{{"base", sys->base_cycle()}};
    } else {
        j["kind"] = "substitution";
        Json rules = Json::object();
        for (char a : sys->alphabet()) rules[std::string(1, a)] = sys->rule(a);
        j["params"] = Json{{"rules", rules}};
        j["complexity"] = Json::array();
        for (int k = 1; k <= std::min(cfg.depth, 12); ++k)
            j["complexity"].push_back(sys->language(k).size());
    }
    InvariantMeasure mu = InvariantMeasure::build(sys, std::min(2 * cfg.depth + 2, 24));
    Json atoms = Json::array();
    for (const auto& w : sys->depth_words(1))
        atoms.push_back(Json{{"word", w}, {"measure", weight_json(mu.cylinder_weight(1, w))}});
    j["depth1_atoms"] = atoms;
    ok = true;
    return j;
}

Json run_towers(const RunConfig& cfg, bool& ok) {
    SystemPtr sys = SymbolicSystem::parse(cfg.system_descriptor);
    auto slices = resolve_slices(sys, cfg);
    StageChain chain = StageChain::build(sys, slices);
    int max_depth = 1;
    for (size_t n = 0; n + 1 < chain.stages.size(); ++n)
        for (const auto& t : chain.tower(n).towers())
            for (const auto& f : t.floors) max_depth = std::max(max_depth, f.depth());
    InvariantMeasure mu = InvariantMeasure::build(sys, sys->is_odometer() ? 32 : 2 * max_depth + 2);
    Json j;
    j["slices"] = Json::array();
    for (const auto& s : slices) j["slices"].push_back(clopen_json(s));
    j["towers"] = Json::array();
    ok = true;
    for (size_t n = 0; n + 1 < chain.stages.size(); ++n) {
        const TowerDecomposition& td = chain.tower(n);
        Json tj;
        tj["stage"] = n;
        tj["heights"] = td.heights();
        Json towers = Json::array();
        for (const auto& t : td.towers()) {
            Json floors = Json::array();
            for (const auto& f : t.floors) floors.push_back(clopen_json(f));
            towers.push_back(Json{{"height", t.height}, {"floors", floors}});
        }
        tj["towers"] = towers;
        bool part = td.partition_ok();
        MeasureWeight lhs = td.kac_lhs(mu);
        MeasureWeight rhs = mu.set_weight(td.outer());
        bool kac;
        if (lhs.exact && rhs.exact)
            kac = lhs.rational == rhs.rational;
        else
            kac = std::abs(lhs.value - rhs.value) <= 4 * kEpsMu + lhs.error + rhs.error;
        tj["partition_ok"] = part;
        tj["kac_ok"] = kac;
        tj["kac_lhs"] = weight_json(lhs);
        tj["kac_rhs"] = weight_json(rhs);
        if (!part || !kac) ok = false;
        j["towers"].push_back(tj);
    }
    return j;
}

Json run_k0(const RunConfig& cfg, bool& ok) {
    SystemPtr sys = SymbolicSystem::parse(cfg.system_descriptor);
    Json j;
    K0Stage st = K0Stage::crossed_product(sys, cfg.depth);
    j["depth"] = cfg.depth;
    j["basis"] = st.one_sided() ? "one-sided words" : "cylinders";
    j["ambient_rank"] = st.ambient_rank();
    Json inv = Json::array();
    for (const auto& d : st.invariant_factors()) inv.push_back(d.str());
    j["invariant_factors"] = inv;
    j["free_rank"] = st.free_rank();
    j["torsion_rank"] = st.torsion_rank();
    // Refinement identity: the class of a depth-d atom equals the sum of the
    // classes of its depth-(d+1) children.
    K0Stage st2 = K0Stage::crossed_product(sys, cfg.depth + 1);
    ClopenSet full = ClopenSet::full(sys);
    bool refine_ok = true;
    IntFunction coarse = IntFunction::indicator(
        full, ClopenSet::from_words(sys, sys->is_odometer() ? cfg.depth : 1,
                                    {sys->is_odometer() ? sys->depth_words(cfg.depth).front()
                                                        : sys->depth_words(1).front()}));
    std::vector<Int> a = st2.class_vector(coarse);
    std::vector<Int> b = st2.class_vector(coarse.refined_to(coarse.depth() + 1));
    refine_ok = st2.classes_equal(a, b);
    j["refinement_descends"] = refine_ok;
    ok = refine_ok;
    return j;
}

Json exact_row_json(const ExactRowReport& r) {
    Json j;
    j["stage"] = r.stage;
    j["working_depth"] = r.working_depth;
    j["eta_injective"] = r.eta_injective;
    j["im_eta_in_ker_beta"] = r.im_eta_in_ker_beta;
    j["im_beta_in_ker_gamma"] = r.im_beta_in_ker_gamma;
    j["beta_equals_ker_gamma_saturation"] = r.beta_ker_gamma_saturation_equal;
    j["gamma_surjective"] = r.gamma_surjective;
    j["beta_rank"] = r.beta_rank;
    j["ker_gamma_rank"] = r.ker_gamma_rank;
    j["coker_free_rank"] = r.coker_free_rank;
    Json inv = Json::array();
    for (const auto& d : r.stage_invariant_factors) inv.push_back(d.str());
    j["stage_invariant_factors"] = inv;
    j["ok"] = r.ok();
    return j;
}

Json run_exact_sequence(const RunConfig& cfg, bool& ok) {
    SystemPtr sys = SymbolicSystem::parse(cfg.system_descriptor);
    auto slices = resolve_slices(sys, cfg);
    StageChain chain = StageChain::build(sys, slices);
    InvariantMeasure mu = InvariantMeasure::build(sys, sys->is_odometer() ? 32 : 48);
    Json rows = Json::array();
    ok = true;
    for (size_t n = 0; n + 1 < chain.stages.size(); ++n) {
        ExactRowReport r = verify_exact_row(chain, static_cast<int>(n), cfg.depth, mu);
        if (!r.ok()) ok = false;
        rows.push_back(exact_row_json(r));
    }
    Json j;
    j["rows"] = rows;
    return j;
}

Json run_order_iso(const RunConfig& cfg, bool& ok) {
    SystemPtr sys = SymbolicSystem::parse(cfg.system_descriptor);
    auto slices = resolve_slices(sys, cfg);
    StageChain chain = StageChain::build(sys, slices);
    InvariantMeasure mu = InvariantMeasure::build(sys, 32);
    OrderIsoReport rep = order_iso_check(chain, cfg.stages, cfg.depth, mu, cfg.seed);
    Json stages = Json::array();
    for (const auto& s : rep.stages) {
        Json sj;
        sj["stage"] = s.stage;
        sj["matched_depth"] = s.matched_depth;
        sj["tower_heights"] = s.tower_heights;
        if (s.iota_constant_multiplier) sj["iota_constant_multiplier"] = s.iota_constant_multiplier->str();
        sj["gamma_surjective"] = s.gamma_surjective;
        sj["kernel_matches_trace_kernel"] = s.kernel_matches_trace_kernel;
        sj["model_matches"] = s.model_matches;
        sj["positivity_matches"] = s.positivity_matches;
        Json inv = Json::array();
        for (const auto& d : s.invariant_factors) inv.push_back(d.str());
        sj["invariant_factors"] = inv;
        sj["ok"] = s.ok();
        stages.push_back(sj);
    }
    Json stab = Json::array();
    for (const auto& d : rep.stabilizations)
        stab.push_back(Json{{"stage", d.stage},
                            {"input_depth", d.input_depth},
                            {"steps", d.steps},
                            {"stabilized", d.stabilized}});
    Json j;
    j["stages"] = stages;
    j["delta_stabilizations"] = stab;
    ok = rep.ok();
    return j;
}

Json run_suspension_flow(const RunConfig& cfg, bool& ok) {
    SystemPtr sys = SymbolicSystem::parse(cfg.system_descriptor);
    RoofFunction tau = resolve_tau(sys, cfg);
    SuspensionFlow flow(sys, tau);
    PointCode x = sys->is_odometer()
                      ? (cfg.point.empty() ? PointCode::odometer_point(sys, "", "0")
                                           : PointCode::odometer_point(sys, cfg.point, "0"))
                      : PointCode::substitution_fixed_point(sys);
    Json steps = Json::array();
    SuspensionPoint p{x, Rational(0)};
    for (const auto& t : cfg.flow_times) {
        Rational s = parse_rational(t);
        p = flow.flow_step(p, s);
        steps.push_back(Json{{"time", format_rational(s)},
                             {"base", p.base.describe()},
                             {"fiber", format_rational(p.fiber)}});
    }
    // Flow group law on random rational triples.
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<long long> num(-400, 400);
    std::uniform_int_distribution<long long> den(1, 40);
    int failures = 0;
    for (int i = 0; i < cfg.samples; ++i) {
        Rational t0(num(rng), den(rng));
        Rational s1(num(rng), den(rng)), s2(num(rng), den(rng));
        SuspensionPoint q = flow.flow_step(SuspensionPoint{x, Rational(0)}, t0);
        SuspensionPoint a = flow.flow_step(flow.flow_step(q, s1), s2);
        SuspensionPoint b = flow.flow_step(q, s1 + s2);
        if (!flow.same_point(a, b, 12)) ++failures;
    }
    Json j;
    j["trajectory"] = steps;
    j["group_law_samples"] = cfg.samples;
    j["group_law_failures"] = failures;
    ok = failures == 0;
    return j;
}

Json run_suspension_flowbox(const RunConfig& cfg, bool& ok) {
    SystemPtr sys = SymbolicSystem::parse(cfg.system_descriptor);
    RoofFunction tau = resolve_tau(sys, cfg);
    SuspensionFlow flow(sys, tau);
    PointCode x = sys->is_odometer() ? PointCode::odometer_point(sys, "", "0")
                                     : PointCode::substitution_fixed_point(sys);
    FlowboxStructure fb = build_flowbox_structure(flow, x, cfg.stages);
    FlowboxCheckReport rep = verify_flowbox_properties(flow, fb, cfg.samples, cfg.seed);
    Json stages = Json::array();
    for (size_t i = 0; i < fb.slices.size(); ++i)
        stages.push_back(Json{{"depth", fb.depths[i]},
                              {"length", format_rational(fb.slices[i].length)},
                              {"base", clopen_json(fb.slices[i].base)}});
    Json j;
    j["center"] = x.describe();
    j["stages"] = stages;
    j["nested"] = rep.nested;
    j["lengths_diverge"] = rep.lengths_diverge;
    j["shrinks_to_center"] = rep.shrinks_to_center;
    j["nonempty_interior"] = rep.nonempty_interior;
    j["tube_samples"] = rep.tube_samples;
    j["tube_failures"] = rep.tube_failures;
    ok = rep.ok();
    return j;
}

Json kernel_suite(const RunConfig& cfg, int grid_n, bool& ok);

Json run_kernels(const RunConfig& cfg, bool& ok) {
    return kernel_suite(cfg, cfg.grid, ok);
}

Json run_bratteli(const RunConfig& cfg, bool& ok, std::string& dot_out) {
    SystemPtr sys = SymbolicSystem::parse(cfg.system_descriptor);
    auto slices = resolve_slices(sys, cfg);
    StageChain chain = StageChain::build(sys, slices);
    std::ostringstream dot;
    dot << "digraph bratteli {\n  rankdir=TB;\n";
    Json stats = Json::array();
    for (size_t n = 0; n + 1 < chain.stages.size(); ++n) {
        const TowerDecomposition& td = chain.tower(n);
        for (size_t i = 0; i < td.towers().size(); ++i)
            dot << "  s" << n << "_t" << i << " [label=\"S" << n << " h" << td.towers()[i].height
                << "\"];\n";
    }
    bool exact_counts = true;
    for (size_t n = 0; n + 2 < chain.stages.size(); ++n) {
        const TowerDecomposition& td = chain.tower(n);
        const TowerDecomposition& td_next = chain.tower(n + 1);
        for (size_t jn = 0; jn < td_next.towers().size(); ++jn) {
            const auto& next_base = td_next.towers()[jn].base();
            // Walk the Phi_{n+1}-floors of the next tower; each lands in the
            // base of one stage-n tower.
            for (size_t in = 0; in < td.towers().size(); ++in) {
                int count = 0;
                for (const auto& floor : td_next.towers()[jn].floors) {
                    ClopenSet part = set_intersection(floor, td.towers()[in].base());
                    if (part.is_empty()) continue;
                    ++count;
                    if (!floor.subset_of(td.towers()[in].base())) exact_counts = false;
                }
                if (count > 0)
                    dot << "  s" << n << "_t" << in << " -> s" << (n + 1) << "_t" << jn
                        << " [label=\"" << count << "\"];\n";
                (void)next_base;
            }
        }
    }
    dot << "}\n";
    dot_out = dot.str();
    Json j;
    j["stages"] = chain.stages.size() - 1;
    j["edge_counts_exact"] = exact_counts;
    j["dot"] = dot_out;
    (void)stats;
    ok = true;
    return j;
}

// Mapping-torus style bump suite at one grid size; tolerances scale as O(h).
Json kernel_suite(const RunConfig& cfg, int grid_n, bool& ok) {
    SystemPtr sys = SymbolicSystem::parse(cfg.system_descriptor);
    RoofFunction tau = resolve_tau(sys, cfg);
    SuspensionFlow flow(sys, tau);
    auto slices = resolve_slices(sys, cfg);
    if (slices.size() < 2) throw std::invalid_argument("kernels check needs two nested slices");
    InvariantMeasure mu = InvariantMeasure::build(sys, 32);
    FiberGrid grid{grid_n};
    KernelTolerances tol;
    double scale = tol.scale(grid_n);

    EmbeddingData emb = EmbeddingData::build(flow, slices[0], slices[1]);
    auto stage = emb.from;

    CrossedElement f = make_bump(stage, grid, -0.22, 0.22, 0.30, 0.72);
    CrossedElement g = make_bump(stage, grid, -0.15, 0.18, 0.35, 0.68, 0.8);

    Json j;
    j["grid"] = grid_n;

    // Homomorphism: pi(f*g) vs pi(f) pi(g).
    CrossedElement fg = convolve(f, g);
    double err_hom = pi_n(fg).max_diff(pi_n(f).compose(pi_n(g)));
    j["homomorphism_error"] = err_hom;

    // Involution: pi(f^*) vs transposed kernel.
    KernelField kf = pi_n(f);
    KernelField kstar = pi_n(adjoint(f));
    double err_inv = 0.0;
    for (int p = 0; p < stage->piece_count(); ++p)
        for (int a = 1; a <= grid_n; ++a)
            for (int b = 1; b <= grid_n; ++b)
                err_inv = std::max(err_inv, std::abs(kstar.at(p, a, b) - kf.at(p, b, a)));
    j["involution_error"] = err_inv;

    // Trace preservation on f * f^*.
    CrossedElement ff = convolve(f, adjoint(f));
    double t1 = trace_tau_mu(ff, mu);
    double t2 = trace_field(pi_n(ff), mu);
    double err_tr = std::abs(t1 - t2);
    j["trace_tau_mu"] = t1;
    j["trace_field"] = t2;
    j["trace_error"] = err_tr;

    // Round trips in both directions.
    CrossedElement f_back = pi_n_inverse(kf);
    double err_rt = std::max(pi_n(f_back).max_diff(kf), f_back.max_diff(f));
    j["round_trip_error"] = err_rt;

    // Compatibility square through the embedding.
    CrossedElement f_inner = make_bump(emb.to, grid, -0.22, 0.22, 0.30, 0.72);
    KernelField lhs = embed_kernels(kf, emb);
    KernelField rhs = pi_n(f_inner);
    double err_cmp = lhs.max_diff(rhs);
    j["compatibility_error"] = err_cmp;

    // Mask preservation is exact on grid points.
    bool mask_ok = fg.mask_holds() && ff.mask_holds() && f_back.mask_holds();
    j["mask_exact"] = mask_ok;

    IsometryCheck iso = check_embedding_isometries(emb, grid);
    j["isometry_defect"] = iso.isometry_defect;
    j["orthogonality_defect"] = iso.orthogonality_defect;

    j["tolerances"] = Json{{"homomorphism", tol.homomorphism * scale},
                           {"involution", tol.involution * scale},
                           {"trace", tol.trace * scale},
                           {"round_trip", tol.round_trip * scale},
                           {"compatibility", tol.compatibility * scale},
                           {"isometry", tol.isometry * scale}};
    ok = mask_ok && err_hom <= tol.homomorphism * scale && err_inv <= tol.involution * scale &&
         err_tr <= tol.trace * scale && err_rt <= tol.round_trip * scale &&
         err_cmp <= tol.compatibility * scale && iso.isometry_defect <= tol.isometry * scale &&
         iso.orthogonality_defect <= tol.isometry * scale;
    j["ok"] = ok;
    return j;
}

} // namespace

RunResult run(const RunConfig& cfg) {
    Json report;
    report["schema"] = kSchema;
    report["version"] = kVersion;
    report["command"] = cfg.command;
    report["config"] = Json{{"system", cfg.system_descriptor}, {"slices", cfg.slices},
                            {"auto_nest", cfg.auto_nest},      {"depth", cfg.depth},
                            {"stages", cfg.stages},            {"grid", cfg.grid},
                            {"tau", cfg.tau_json},             {"seed", cfg.seed},
                            {"samples", cfg.samples}};
    auto start = std::chrono::steady_clock::now();
    bool ok = false;
    std::string dot;
    if (cfg.command == "system")
        report["result"] = run_system(cfg, ok);
    else if (cfg.command == "towers")
        report["result"] = run_towers(cfg, ok);
    else if (cfg.command == "k0")
        report["result"] = run_k0(cfg, ok);
    else if (cfg.command == "verify-exact-sequence")
        report["result"] = run_exact_sequence(cfg, ok);
    else if (cfg.command == "verify-order-iso")
        report["result"] = run_order_iso(cfg, ok);
    else if (cfg.command == "suspension-flow")
        report["result"] = run_suspension_flow(cfg, ok);
    else if (cfg.command == "suspension-flowbox")
        report["result"] = run_suspension_flowbox(cfg, ok);
    else if (cfg.command == "kernels-check")
        report["result"] = run_kernels(cfg, ok);
    else if (cfg.command == "bratteli") {
        report["result"] = run_bratteli(cfg, ok, dot);
        if (!cfg.dot_path.empty()) {
            std::ofstream f(cfg.dot_path);
            f << dot;
        }
    } else {
        throw std::invalid_argument("unknown command '" + cfg.command + "'");
    }
    if (cfg.include_timings) {
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
        report["timings_ms"] = ms;
    }
    report["ok"] = ok;
    if (!cfg.out_path.empty()) {
        std::ofstream f(cfg.out_path);
        f << render_report(report);
    }
    return RunResult{std::move(report), ok};
}

std::string render_report(const Json& report) {
    return report.dump(2) + "\n";
}

} // namespace cantorflow
