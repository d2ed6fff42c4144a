// pscatter: mode drivers behind the command line.
//
// A RunConfig carries everything a run depends on; run(cfg) dispatches to the
// mode driver, which writes a key = value report plus plot-ready csv tables
// into cfg.out_dir and returns the report with an exit code.  Reports format
// every double with 17 significant digits, so identical configs and inputs
// produce byte-identical artifacts.  Exit codes: 0 on success, 2 when the run
// completed but its convergence or admissibility verdict is negative; input
// and precondition failures throw (the front end maps them to exit 1).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pscatter/common.hpp"
#include "pscatter/fuchsian.hpp"
#include "pscatter/green.hpp"
#include "pscatter/io.hpp"
#include "pscatter/solver.hpp"
#include "pscatter/spectral.hpp"
#include "pscatter/synthetic.hpp"
#include "pscatter/testfn.hpp"
#include "pscatter/trace.hpp"

namespace pscatter {

struct RunConfig {
    std::string mode;  // orbits | eigens | trace-truncated | trace-geometric |
                       // diagnostics | testfn

    // inputs
    std::string group_path;
    std::string orbit_path;     // pre-enumerated orbit table, bypasses --group
    std::string spectrum_path;
    std::optional<std::uint64_t> synthetic_seed;
    long synthetic_count = 200;
    double synthetic_area = 4.0 * pi;
    double synthetic_mult2 = 0.0;
    double synthetic_zero_weight = 0.0;

    // coupling
    std::optional<double> alpha;  // may be +-inf (the beta = 1/c0 branch)
    std::optional<double> beta;
    std::optional<long> m;        // stabilizer override when no orbit is given
    BetaConvention convention = BetaConvention::derivation;

    // geometry and trace knobs
    double radius = 12.0;
    std::optional<double> lambda_max;      // default: lambda_top / 4 - 1
    int k_max = 3;
    double sigma = 0.8;                    // box / segment height for spectral modes
    std::optional<double> sigma_override;  // geometric contour height
    std::optional<double> nu_override;     // geometric half-line height
    double rho0_im = 0.0;                  // ground-state clearance for selection
    std::vector<double> heights;           // explicit box heights T
    double safe_c = 0.9;                   // relative gap floor for safe heights
    int max_heights = 3;
    double gap_tol = 1e-6;
    double comp_eps = 0.1;                 // exponent slack in the segment ratio
    std::vector<double> env_lengths = {0.5, 2.0, 8.0};

    // test function
    std::string family = "cauchy";  // cauchy | ladder
    double cauchy_a = 5.0;
    int cauchy_power = 4;
    // low rungs keep the ladder's decay visible inside the membership probe
    // window; positivity studies want rungs pushed far higher
    std::vector<double> ladder_heights = {12.0, 200.0, 3000.0};
    double ladder_eps = 0.5;
    double ladder_sigma = 0.6;

    // output
    std::string out_dir = ".";
};

struct RunResult {
    Report report;
    int exit_code = 0;
};

namespace detail {

inline std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

inline void write_report(const RunConfig& cfg, const std::string& name, const Report& r) {
    write_or_throw(out_path(cfg, name), r.to_string());
}

// comma-separated numeric table with one header line, all values in the
// round-trip format
inline void write_table(const RunConfig& cfg, const std::string& name,
                        const std::string& header,
                        const std::vector<std::vector<double>>& rows) {
    std::string out = header + "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ",";
            out += fmt_g17(row[i]);
        }
        out += "\n";
    }
    write_or_throw(out_path(cfg, name), out);
}

inline OrbitSpectrum load_orbit(const RunConfig& cfg) {
    if (!cfg.orbit_path.empty()) return read_orbit(cfg.orbit_path);
    if (cfg.group_path.empty())
        throw std::invalid_argument(cfg.mode + ": a group or orbit file is required");
    return enumerate_orbit(read_group(cfg.group_path), cfg.radius);
}

inline Spectrum load_spectrum(const RunConfig& cfg) {
    if (!cfg.spectrum_path.empty()) return read_spectrum(cfg.spectrum_path);
    if (cfg.synthetic_seed) {
        SyntheticOptions opt;
        opt.count = cfg.synthetic_count;
        opt.area = cfg.synthetic_area;
        opt.mult2_prob = cfg.synthetic_mult2;
        opt.zero_weight_prob = cfg.synthetic_zero_weight;
        return make_weyl_spectrum(*cfg.synthetic_seed, opt);
    }
    throw std::invalid_argument(cfg.mode + ": a spectrum file or synthetic seed is required");
}

inline CouplingContext build_context(const RunConfig& cfg, const OrbitSpectrum* orbit) {
    const long m = cfg.m ? *cfg.m : (orbit ? orbit->stabilizer_order : 1);
    if (cfg.beta) return make_context_beta(*cfg.beta, m, orbit, cfg.convention);
    if (!cfg.alpha)
        throw std::invalid_argument(cfg.mode + ": a coupling is required (alpha or beta)");
    return make_context(*cfg.alpha, m, orbit, cfg.convention);
}

inline void add_coupling_rows(Report& r, const CouplingContext& ctx) {
    r.add("alpha", ctx.alpha);
    r.add("beta", ctx.beta);
    r.add("convention", to_string(ctx.convention));
    r.add("m", ctx.m);
    r.add("c0", ctx.c0);
    r.add("c0_tail", ctx.c0_tail);
}

inline double default_lambda_max(const RunConfig& cfg, const Spectrum& spec) {
    if (cfg.lambda_max) return *cfg.lambda_max;
    const double v = spec.lambda_top() / 4.0 - 1.0;
    if (!(v > 0.0))
        throw std::invalid_argument(
            cfg.mode + ": spectrum too short for a default window (top = " +
            fmt_g17(spec.lambda_top()) + "); pass lambda_max explicitly");
    return v;
}

// evenly spread picks across the admissible heights, endpoints included
inline std::vector<double> pick_heights(const std::vector<SafeHeight>& hs, int want) {
    std::vector<double> out;
    const int n = int(hs.size());
    const int k = std::min(want, n);
    for (int i = 0; i < k; ++i) {
        const int idx =
            k <= 1 ? 0 : int(std::llround(double(i) * double(n - 1) / double(k - 1)));
        out.push_back(hs[std::size_t(idx)].T);
    }
    return out;
}

inline TestFunction build_test_function(const RunConfig& cfg) {
    if (cfg.family == "cauchy") return make_cauchy_h(cfg.cauchy_a, cfg.cauchy_power);
    if (cfg.family == "ladder") {
        const DyadicLadderParams p = DyadicLadderParams::from_heights(
            cfg.ladder_heights, cfg.ladder_eps, cfg.ladder_sigma);
        if (p.T.empty())
            throw std::invalid_argument(
                "testfn: no admissible ladder heights survive the dyadic constraints");
        return make_ladder_h(p);
    }
    throw std::invalid_argument(cfg.mode + ": unknown test-function family '" +
                                cfg.family + "'");
}

}  // namespace detail

// ---- orbits -----------------------------------------------------------------

inline RunResult run_orbits(const RunConfig& cfg) {
    const OrbitSpectrum orbit = detail::load_orbit(cfg);
    write_orbit(detail::out_path(cfg, "orbit_lengths.csv"), orbit);

    double c0_tail = 0.0;
    const double c0 = detail::c0_of_orbit(orbit.stabilizer_order, &orbit, &c0_tail);

    RunResult res;
    Report& r = res.report;
    r.add("mode", "orbits");
    r.add("label", orbit.label);
    r.add("z0_x", orbit.z0.x);
    r.add("z0_y", orbit.z0.y);
    r.add("radius", orbit.radius);
    r.add("stabilizer_order", orbit.stabilizer_order);
    r.add("element_count", orbit.element_count);
    r.add("distinct_lengths", long(orbit.lengths.size()));
    r.add("tau0", orbit.tau0);
    r.add("c0", c0);
    r.add("c0_tail", c0_tail);
    r.add("tail_bound_sigma1", orbit_tail_bound(orbit, 1.0));
    detail::write_report(cfg, "orbits_report.txt", r);
    return res;
}

// ---- eigens -----------------------------------------------------------------

inline RunResult run_eigens(const RunConfig& cfg) {
    const Spectrum spec = detail::load_spectrum(cfg);
    std::optional<OrbitSpectrum> orbit;
    if (!cfg.orbit_path.empty() || !cfg.group_path.empty())
        orbit = detail::load_orbit(cfg);
    const CouplingContext ctx = detail::build_context(cfg, orbit ? &*orbit : nullptr);
    const double lambda_max = detail::default_lambda_max(cfg, spec);
    const PerturbedSpectrum pert = solve_new_eigs(ctx, spec, lambda_max);
    write_perturbed(detail::out_path(cfg, "perturbed.csv"), pert);

    RunResult res;
    Report& r = res.report;
    r.add("mode", "eigens");
    detail::add_coupling_rows(r, ctx);
    r.add("lambda_max", lambda_max);
    r.add("visible_poles", long(detail::visible_poles(spec).size()));
    r.add("ground_found", pert.ground_found);
    r.add("new_count", long(pert.new_eigs.size()));
    r.add("inherited_count", long(pert.inherited.size()));
    for (std::size_t i = 0; i < pert.new_eigs.size(); ++i)
        r.add("new_" + std::to_string(i), pert.new_eigs[i].lambda);
    for (std::size_t i = 0; i < pert.warnings.size(); ++i)
        r.add("warning_" + std::to_string(i), pert.warnings[i]);
    detail::write_report(cfg, "eigens_report.txt", r);
    return res;
}

// ---- trace-truncated ----------------------------------------------------------

inline RunResult run_trace_truncated(const RunConfig& cfg) {
    const Spectrum spec = detail::load_spectrum(cfg);
    std::optional<OrbitSpectrum> orbit;
    if (!cfg.orbit_path.empty() || !cfg.group_path.empty())
        orbit = detail::load_orbit(cfg);
    const CouplingContext ctx = detail::build_context(cfg, orbit ? &*orbit : nullptr);
    const TestFunction h = detail::build_test_function(cfg);
    const double lambda_max = detail::default_lambda_max(cfg, spec);
    const PerturbedSpectrum pert = solve_new_eigs(ctx, spec, lambda_max);

    std::vector<double> heights = cfg.heights;
    if (heights.empty())
        heights = detail::pick_heights(safe_heights(spec, pert, cfg.safe_c),
                                       cfg.max_heights);
    if (heights.empty())
        throw std::invalid_argument(
            "trace-truncated: no safe heights at gap factor " + fmt_g17(cfg.safe_c) +
            "; pass heights explicitly or lower the factor");

    RunResult res;
    Report& r = res.report;
    r.add("mode", "trace-truncated");
    detail::add_coupling_rows(r, ctx);
    r.add("sigma", cfg.sigma);
    r.add("lambda_max", lambda_max);
    r.add("test_function", h.name);
    r.add("n_heights", long(heights.size()));

    std::vector<std::vector<double>> rows;
    double worst = 0.0;
    for (std::size_t i = 0; i < heights.size(); ++i) {
        const double T = heights[i];
        const TruncResult tr = truncated_check(h, ctx, spec, pert, T, cfg.sigma);
        rows.push_back({T, tr.lhs, tr.rhs, tr.gap, double(tr.zeros_inside),
                        double(tr.poles_inside), tr.quad_err});
        worst = std::max(worst, tr.gap);
        const std::string tag = "_" + std::to_string(i);
        r.add("T" + tag, T);
        r.add("lhs" + tag, tr.lhs);
        r.add("rhs" + tag, tr.rhs);
        r.add("gap" + tag, tr.gap);
        r.add("zeros" + tag, tr.zeros_inside);
        r.add("poles" + tag, tr.poles_inside);
    }
    detail::write_table(cfg, "truncated_heights.csv",
                        "T,lhs,rhs,gap,zeros_inside,poles_inside,quad_err", rows);

    // spectral S along the bottom edge of the first box, for plotting
    {
        const double T = heights.front();
        std::vector<std::vector<double>> pts;
        for (int q = 0; q <= 256; ++q) {
            const double x = -T + 2.0 * T * double(q) / 256.0;
            const cplx rho(x, -cfg.sigma);
            const cplx s = s_spectral_raw(ctx, spec, 0.25 + rho * rho);
            pts.push_back({x, s.real(), s.imag()});
        }
        detail::write_table(cfg, "contour_s.csv", "x,re_s,im_s", pts);
    }

    const bool converged = worst <= cfg.gap_tol;
    r.add("worst_gap", worst);
    r.add("gap_tol", cfg.gap_tol);
    r.add("converged", converged);
    detail::write_report(cfg, "trace_truncated_report.txt", r);
    res.exit_code = converged ? 0 : 2;
    return res;
}

// ---- trace-geometric ----------------------------------------------------------

inline RunResult run_trace_geometric(const RunConfig& cfg) {
    const OrbitSpectrum orbit = detail::load_orbit(cfg);
    const CouplingContext ctx = detail::build_context(cfg, &orbit);
    const TestFunction h = detail::build_test_function(cfg);

    GeometricCheck chk;
    if (cfg.sigma_override || cfg.nu_override) {
        // an overridden height skips the automatic search entirely, so a run
        // can proceed (or fail informatively) where selection found nothing
        SigmaSelection sel;
        if (cfg.sigma_override) {
            const double s = *cfg.sigma_override;
            sel.v_beta = denom_zero(ctx.m, ctx.beta).v;
            sel.v_min = detail::denominator_floor(ctx, s);
            if (!(sel.v_min > 0.0))
                throw std::invalid_argument(
                    "trace-geometric: sigma override " + fmt_g17(s) +
                    " does not clear the denominator zero at v = " + fmt_g17(sel.v_beta));
            sel.orbit_env = detail::orbit_envelope(orbit, s);
            sel.ratio = sel.orbit_env / sel.v_min;
            sel.q = sel.v_min / std::log(0.5 + s);
            sel.sigma = s;
            if (!(sel.ratio < 1.0))
                throw std::invalid_argument(
                    "trace-geometric: sigma override " + fmt_g17(s) +
                    " fails series domination (ratio = " + fmt_g17(sel.ratio) + ")");
        } else {
            sel = select_sigma(ctx, orbit, cfg.rho0_im);
        }
        const double nu = cfg.nu_override ? *cfg.nu_override : select_nu(ctx, sel.sigma);
        chk = geometric_check_at(h, ctx, orbit, cfg.k_max, sel, nu);
    } else {
        chk = geometric_check(h, ctx, orbit, cfg.k_max, cfg.rho0_im);
    }

    RunResult res;
    Report& r = res.report;
    r.add("mode", "trace-geometric");
    detail::add_coupling_rows(r, ctx);
    r.add("orbit_label", orbit.label);
    r.add("orbit_radius", orbit.radius);
    r.add("orbit_lengths", long(orbit.lengths.size()));
    r.add("sigma", chk.sel.sigma);
    r.add("nu", chk.nu);
    r.add("series_ratio", chk.sel.ratio);
    r.add("k_max", cfg.k_max);
    r.add("test_function", h.name);
    r.add("identity_term", chk.identity.value);
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < chk.diff.terms.size(); ++k) {
        r.add("diffractive_" + std::to_string(k + 1), chk.diff.terms[k]);
        rows.push_back({double(k + 1), chk.diff.terms[k], chk.diff.tuple_tails[k],
                        chk.diff.quad_errs[k]});
    }
    detail::write_table(cfg, "diffractive_terms.csv", "k,term,tuple_tail,quad_err", rows);
    r.add("series_tail", chk.diff.series_tail);
    r.add("tuples_evaluated", chk.diff.tuples_evaluated);
    r.add("lhs", chk.lhs);
    r.add("rhs", chk.rhs.value);
    r.add("tails", chk.tails);
    r.add("gap", chk.gap);
    r.add("converged", chk.converged);
    detail::write_report(cfg, "trace_geometric_report.txt", r);
    res.exit_code = chk.converged ? 0 : 2;
    return res;
}

// ---- diagnostics ----------------------------------------------------------------

inline RunResult run_diagnostics(const RunConfig& cfg) {
    const Spectrum spec = detail::load_spectrum(cfg);
    std::optional<OrbitSpectrum> orbit;
    if (!cfg.orbit_path.empty() || !cfg.group_path.empty())
        orbit = detail::load_orbit(cfg);
    const CouplingContext ctx = detail::build_context(cfg, orbit ? &*orbit : nullptr);
    const double lambda_max = detail::default_lambda_max(cfg, spec);
    const PerturbedSpectrum pert = solve_new_eigs(ctx, spec, lambda_max);

    std::vector<SafeHeight> hs;
    for (const auto& sh : safe_heights(spec, pert, cfg.safe_c))
        if (sh.T > 1.0 && hs.size() < 12) hs.push_back(sh);
    if (hs.empty())
        throw std::invalid_argument("diagnostics: no safe heights above T = 1");

    RunResult res;
    Report& r = res.report;
    r.add("mode", "diagnostics");
    detail::add_coupling_rows(r, ctx);
    r.add("sigma", cfg.sigma);
    r.add("eps", cfg.comp_eps);
    r.add("n_heights", long(hs.size()));

    std::vector<std::vector<double>> rows;
    double poly_max = 0.0, comp_max = 0.0;
    for (const auto& sh : hs) {
        const double poly = polybound_diagnostic(spec, sh.T, cfg.sigma);
        const double comp = compbound_diagnostic(ctx, spec, sh.T, cfg.sigma, cfg.comp_eps);
        rows.push_back({sh.T, sh.clearance, poly, comp});
        poly_max = std::max(poly_max, poly);
        comp_max = std::max(comp_max, comp);
    }
    detail::write_table(cfg, "diagnostic_heights.csv", "T,clearance,polybound,compbound",
                        rows);
    r.add("polybound_max", poly_max);
    r.add("compbound_max", comp_max);

    // kernel weight integrals against their exponential envelope: the scaled
    // value exp((1/2 + sigma) l) sqrt(1/2 + sigma) Int stays order one
    std::vector<std::vector<double>> env;
    double env_max = 0.0;
    for (double l : cfg.env_lengths) {
        for (int i = 0; i < 19; ++i) {
            const double s = 1.0 + 9.0 * double(i) / 18.0;
            const double scaled =
                exp_weight_integral(l, s) * std::exp((0.5 + s) * l) * std::sqrt(0.5 + s);
            env.push_back({l, s, scaled});
            env_max = std::max(env_max, scaled);
        }
    }
    detail::write_table(cfg, "kernel_envelope.csv", "length,sigma,scaled_integral", env);
    r.add("kernel_envelope_max", env_max);
    detail::write_report(cfg, "diagnostics_report.txt", r);
    return res;
}

// ---- testfn ---------------------------------------------------------------------

inline RunResult run_testfn(const RunConfig& cfg) {
    const TestFunction h = detail::build_test_function(cfg);
    const MembershipReport mr = membership_check(h);

    RunResult res;
    Report& r = res.report;
    r.add("mode", "testfn");
    r.add("family", cfg.family);
    r.add("name", h.name);
    r.add("sigma", h.sigma);
    r.add("delta", h.delta);
    r.add("even_ok", mr.even_ok);
    r.add("even_err", mr.even_err);
    r.add("conj_ok", mr.conj_ok);
    r.add("conj_err", mr.conj_err);
    r.add("decay_ok", mr.decay_ok);
    r.add("decay_envelope", mr.decay_envelope);
    r.add("analytic_ok", mr.analytic_ok);
    r.add("cauchy_riemann_err", mr.cr_err);
    r.add("loop_ok", mr.loop_ok);
    r.add("loop_err", mr.loop_err);
    r.add("pass", mr.pass);

    // samples on the real axis and near the strip edge, log-spaced
    std::vector<std::vector<double>> rows;
    const double edge = 0.9 * h.sigma;
    for (int i = 0; i <= 180; ++i) {
        const double x = 0.1 * std::pow(1e5, double(i) / 180.0);
        const cplx on_axis = h.h(cplx(x, 0.0));
        const cplx at_edge = h.h(cplx(x, -edge));
        rows.push_back({x, on_axis.real(), at_edge.real(), at_edge.imag()});
    }
    detail::write_table(cfg, "testfn_samples.csv", "x,h_axis,re_h_edge,im_h_edge", rows);
    detail::write_report(cfg, "testfn_report.txt", r);
    res.exit_code = mr.pass ? 0 : 2;
    return res;
}

// ---- dispatch ---------------------------------------------------------------------

inline RunResult run(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    if (cfg.mode == "orbits") return run_orbits(cfg);
    if (cfg.mode == "eigens") return run_eigens(cfg);
    if (cfg.mode == "trace-truncated") return run_trace_truncated(cfg);
    if (cfg.mode == "trace-geometric") return run_trace_geometric(cfg);
    if (cfg.mode == "diagnostics") return run_diagnostics(cfg);
    if (cfg.mode == "testfn") return run_testfn(cfg);
    throw std::invalid_argument("run: unknown mode '" + cfg.mode + "'");
}

}  // namespace pscatter
