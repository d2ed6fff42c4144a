// psc: command-line front end for the pscatter library.
//
// One subcommand per run mode; every flag simply fills the matching RunConfig
// field, so a run is reproducible from its command line alone.  Reports go to
// stdout and, with the csv tables, into --out.  Exit codes: 0 success, 1 input
// or precondition failure, 2 run completed with a negative verdict.
#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pscatter/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"point-scatterer spectral toolkit for compact hyperbolic surfaces"};
    app.require_subcommand(1);
    app.footer(
        "Flags are shared across subcommands; each mode reads the ones it needs.\n"
        "Worker thread count comes from the PSCATTER_THREADS environment variable.\n"
        "Exit codes: 0 success, 1 input or precondition failure, 2 negative verdict.");

    pscatter::RunConfig cfg;

    // inputs
    auto* in = "Inputs";
    app.add_option("--group", cfg.group_path, "group file with z0 and generators")
        ->group(in);
    app.add_option("--orbit", cfg.orbit_path,
                   "pre-enumerated orbit table (bypasses --group)")
        ->group(in);
    app.add_option("--spectrum", cfg.spectrum_path, "spectrum csv (area, then rows)")
        ->group(in);
    std::uint64_t seed = 0;
    auto* opt_seed =
        app.add_option("--synthetic", seed, "draw a synthetic Weyl spectrum from this seed")
            ->group(in);
    app.add_option("--synthetic-count", cfg.synthetic_count,
                   "synthetic entries after the constant mode [200]")
        ->group(in);
    app.add_option("--synthetic-area", cfg.synthetic_area, "synthetic surface area [4 pi]")
        ->group(in);
    app.add_option("--synthetic-mult2", cfg.synthetic_mult2,
                   "probability of multiplicity 2 [0]")
        ->check(CLI::Range(0.0, 1.0))
        ->group(in);
    app.add_option("--synthetic-zero-weight", cfg.synthetic_zero_weight,
                   "probability of an invisible entry [0]")
        ->check(CLI::Range(0.0, 1.0))
        ->group(in);

    // coupling
    auto* cp = "Coupling";
    std::string alpha_tok;
    auto* opt_alpha =
        app.add_option("--alpha", alpha_tok,
                       "coupling strength; 'inf' selects the beta = 1/c0 branch")
            ->group(cp);
    double beta = 0.0;
    auto* opt_beta =
        app.add_option("--beta", beta, "renormalized coupling (alternative to --alpha)")
            ->group(cp);
    opt_alpha->excludes(opt_beta);
    long m = 1;
    auto* opt_m =
        app.add_option("--m", m, "stabilizer order when no orbit data is given [1]")
            ->check(CLI::PositiveNumber)
            ->group(cp);
    std::string convention = "derivation";
    app.add_option("--beta-convention", convention, "sign convention for c0 [derivation]")
        ->check(CLI::IsMember({"derivation", "theorem1"}))
        ->group(cp);

    // run knobs
    auto* kn = "Run knobs";
    app.add_option("--radius", cfg.radius, "orbit enumeration radius [12]")
        ->check(CLI::PositiveNumber)
        ->group(kn);
    double lambda_max = 0.0;
    auto* opt_lmax =
        app.add_option("--lambda-max", lambda_max,
                       "eigenvalue window; default lambda_top / 4 - 1")
            ->group(kn);
    app.add_option("--k-max", cfg.k_max, "diffractive orders to sum [3]")
        ->check(CLI::Range(1, 8))
        ->group(kn);
    app.add_option("--sigma", cfg.sigma, "box / segment height for spectral modes [0.8]")
        ->group(kn);
    double sigma_ov = 0.0, nu_ov = 0.0;
    auto* opt_sig =
        app.add_option("--sigma-override", sigma_ov,
                       "geometric contour height (skips the automatic search)")
            ->group(kn);
    auto* opt_nu = app.add_option("--nu-override", nu_ov, "geometric half-line height")
                       ->group(kn);
    app.add_option("--rho0-im", cfg.rho0_im,
                   "ground-state clearance |Im rho| for the height search [0]")
        ->group(kn);
    app.add_option("--height", cfg.heights, "explicit box height T (repeatable)")
        ->group(kn);
    app.add_option("--safe-c", cfg.safe_c, "relative gap floor for safe heights [0.9]")
        ->group(kn);
    app.add_option("--max-heights", cfg.max_heights, "safe heights to use [3]")
        ->check(CLI::PositiveNumber)
        ->group(kn);
    app.add_option("--gap-tol", cfg.gap_tol, "box identity tolerance [1e-6]")
        ->group(kn);
    app.add_option("--comp-eps", cfg.comp_eps, "exponent slack in the segment ratio [0.1]")
        ->group(kn);
    std::vector<double> env_lengths;
    auto* opt_env = app.add_option("--env-length", env_lengths,
                                   "kernel envelope length (repeatable) [0.5 2 8]")
                        ->group(kn);

    // test function
    auto* tf = "Test function";
    app.add_option("--family", cfg.family, "test-function family: cauchy | ladder")
        ->check(CLI::IsMember({"cauchy", "ladder"}))
        ->group(tf);
    app.add_option("--cauchy-a", cfg.cauchy_a, "pole height a of (rho^2 + a^2)^-p [5]")
        ->check(CLI::PositiveNumber)
        ->group(tf);
    app.add_option("--cauchy-power", cfg.cauchy_power, "power p >= 2 [4]")
        ->check(CLI::Range(2, 16))
        ->group(tf);
    std::vector<double> ladder_heights;
    auto* opt_lh = app.add_option("--ladder-height", ladder_heights,
                                  "ladder rung height (repeatable) [12 200 3000]")
                       ->group(tf);
    app.add_option("--ladder-eps", cfg.ladder_eps, "ladder decay exponent slack [0.5]")
        ->group(tf);
    app.add_option("--ladder-sigma", cfg.ladder_sigma, "ladder strip half-width [0.6]")
        ->group(tf);

    app.add_option("--out", cfg.out_dir, "directory for the report and csv tables [.]");

    const struct {
        const char* name;
        const char* blurb;
    } modes[] = {
        {"orbits", "enumerate diffractive orbit lengths from a group"},
        {"eigens", "solve for the perturbed eigenvalues of a spectrum"},
        {"trace-truncated", "residue count vs contour integral on boxes B(T)"},
        {"trace-geometric", "identity term + diffractive series vs line integral"},
        {"diagnostics", "bounded-ratio diagnostics along safe heights"},
        {"testfn", "admissibility report for a test function"},
    };
    for (const auto& mode : modes) app.add_subcommand(mode.name, mode.blurb)->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        cfg.mode = app.get_subcommands().front()->get_name();
        if (*opt_alpha) cfg.alpha = pscatter::parse_double_strict(alpha_tok, "alpha");
        if (*opt_beta) cfg.beta = beta;
        if (*opt_m) cfg.m = m;
        if (*opt_lmax) cfg.lambda_max = lambda_max;
        if (*opt_sig) cfg.sigma_override = sigma_ov;
        if (*opt_nu) cfg.nu_override = nu_ov;
        if (*opt_seed) cfg.synthetic_seed = seed;
        if (*opt_env) cfg.env_lengths = env_lengths;
        if (*opt_lh) cfg.ladder_heights = ladder_heights;
        cfg.convention = pscatter::beta_convention_from_string(convention);

        const pscatter::RunResult res = pscatter::run(cfg);
        std::fputs(res.report.to_string().c_str(), stdout);
        return res.exit_code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "psc: error: %s\n", e.what());
        return 1;
    }
}
