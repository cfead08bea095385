#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rtrunc/bipartite.hpp"
#include "rtrunc/density.hpp"
#include "rtrunc/error.hpp"
#include "rtrunc/io.hpp"
#include "rtrunc/maxent.hpp"
#include "rtrunc/mps.hpp"
#include "rtrunc/oracle.hpp"
#include "rtrunc/powerlaw.hpp"
#include "rtrunc/robust.hpp"
#include "rtrunc/specvec.hpp"
#include "rtrunc/tracedist.hpp"

using namespace rtrunc;
using json = nlohmann::ordered_json;

namespace {

struct Globals
{
    std::uint64_t seed = 0;
    double tol = 0.0; ///< 0 keeps each module's default
    std::string format = "json";
    bool oracle = false;
};

struct StateOpts
{
    std::string input;
    int k = 0;
    bool ensemble = false;
    std::string sigma;
    int samples = 0;
    std::string out = "-";
    bool verify = false;
    bool cert = false;
};

json to_json(const RVec& v)
{
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

maxent::FitOptions fit_options(const Globals& g, maxent::FitOptions base)
{
    if (g.tol > 0.0) {
        base.tol = g.tol;
    }
    return base;
}

void emit(const Globals& g, const json& summary)
{
    if (g.format == "json") {
        std::cout << summary.dump(2) << "\n";
        return;
    }
    std::cout << io::kCsvHeader << "\nkey,value\n";
    for (const auto& [key, val] : summary.items()) {
        if (val.is_array()) {
            std::string joined;
            for (std::size_t i = 0; i < val.size(); ++i) {
                joined += (i ? ";" : "") + (val[i].is_number_float() ? io::format_double(val[i].get<double>()) : val[i].dump());
            }
            std::cout << key << "," << joined << "\n";
        } else if (val.is_object()) {
            for (const auto& [sub, sval] : val.items()) {
                std::cout << key << "." << sub << ","
                          << (sval.is_number_float() ? io::format_double(sval.get<double>()) : sval.dump()) << "\n";
            }
        } else {
            std::cout << key << "," << (val.is_number_float() ? io::format_double(val.get<double>()) : val.dump())
                      << "\n";
        }
    }
}

json ensemble_json(const SparseEnsemble& ens)
{
    json j;
    j["kind"] = ens.kind == EnsembleKind::trace_distance ? "trace_distance" : "robustness";
    j["k"] = ens.k;
    j["dim"] = ens.dim();
    j["perm"] = ens.canon.perm();
    j["prefix"] = to_json(ens.prefix);
    j["window_begin"] = ens.window_begin;
    j["window_end"] = ens.window_end;
    j["window_amp"] = ens.window_amp;
    j["subset_size"] = ens.subset_size;
    j["marginals"] = to_json(ens.marginals);
    j["norm_const"] = ens.norm_const;
    j["forced"] = ens.forced;
    j["free_items"] = ens.free_items;
    if (ens.model) {
        j["mu"] = to_json(ens.model->mu());
    }
    j["fit_residual"] = ens.fit_residual;
    j["fit_iterations"] = ens.fit_iterations;
    return j;
}

bool is_real(const CVec& v)
{
    return v.imag().isZero(0.0);
}

std::string vectors_csv(const std::vector<CVec>& rows, bool real)
{
    std::ostringstream os;
    os << io::kCsvHeader << "\n# " << (real ? "real" : "complex re,im pairs") << ", one state per row\n";
    for (const auto& v : rows) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            os << (i ? "," : "") << io::format_double(v[i].real());
            if (!real) {
                os << "," << io::format_double(v[i].imag());
            }
        }
        os << "\n";
    }
    return os.str();
}

std::string matrix_csv(const CMat& m, bool real)
{
    std::ostringstream os;
    if (real) {
        io::write_matrix_csv(os, RMat(m.real()));
    } else {
        io::write_matrix_csv(os, m);
    }
    return os.str();
}

void write_samples(const StateOpts& o, const std::vector<CVec>& rows, bool real)
{
    io::write_text(o.out, vectors_csv(rows, real));
}

void check_k(int k)
{
    if (k < 1) {
        throw InvalidInput("--k must be at least 1");
    }
}

int run_norms(const Globals& g, const StateOpts& o)
{
    check_k(o.k);
    const auto in = io::read_state(o.input);
    const auto canon = CanonicalVector::from(in.v);
    const double f = fidelity_k(canon, o.k);
    const auto ks = k_support_norm(canon, o.k);
    json j;
    j["d"] = canon.dim();
    j["support"] = canon.support();
    j["k"] = o.k;
    j["F_k"] = f;
    j["epsilon"] = std::max(0.0, 1.0 - f * f);
    j["k_support_norm"] = ks.value;
    j["r"] = ks.r;
    j["R_k"] = robustness_k(canon, o.k);
    emit(g, j);
    return 0;
}

int run_tdist(const Globals& g, const StateOpts& o)
{
    check_k(o.k);
    const auto in = io::read_state(o.input);
    const auto canon = CanonicalVector::from(in.v);
    const bool real = is_real(in.v);
    const auto sol = tracedist::solve(canon, o.k);
    json j;
    j["T_k"] = sol.lambda;
    j["r"] = sol.r;
    j["ell"] = sol.ell;
    j["theta"] = sol.theta;

    const bool need_ensemble = o.ensemble || !o.sigma.empty() || o.samples > 0 || o.verify;
    if (need_ensemble) {
        const auto ens = tracedist::build_ensemble(sol, canon, fit_options(g, {}));
        if (o.ensemble) {
            j["ensemble"] = ensemble_json(ens);
        }
        if (!o.sigma.empty() || o.verify) {
            const auto sig = tracedist::density_matrix(ens);
            if (!o.sigma.empty()) {
                io::write_text(o.sigma, matrix_csv(to_original_basis(sig.sigma.matrix(), canon), real));
            }
            if (o.verify) {
                const auto rep = tracedist::verify_optimality(canon, sol, sig.sigma);
                j["verify"] = {{"eigen_residual", rep.eigen_residual},
                               {"fenchel_gap", rep.fenchel_gap},
                               {"spectral_gap", rep.spectral_gap},
                               {"second_eigenvalue", rep.second_eigenvalue},
                               {"sigma_trace_distance", sig.trace_distance}};
            }
        }
        if (o.samples > 0) {
            Rng rng(g.seed);
            std::vector<CVec> rows;
            for (int s = 0; s < o.samples; ++s) {
                rows.push_back(restore(tracedist::sample_state(ens, rng), canon));
            }
            write_samples(o, rows, real);
        }
    }
    if (g.oracle) {
        const auto d = static_cast<int>(canon.dim());
        json orc;
        if (d <= 16 && o.k < d) {
            Rng rng(g.seed);
            const double face = oracle::face_enumeration_Tk(canon.values(), o.k);
            const double brute = oracle::brute_force_Tk(canon.values(), o.k, 64, rng, sol.m);
            orc["face_enumeration"] = face;
            orc["brute_force"] = brute;
            orc["max_abs_diff"] = std::max(std::abs(face - sol.lambda), std::abs(brute - sol.lambda));
        } else {
            const auto ex = tracedist::solve_exhaustive(canon, o.k);
            orc["exhaustive"] = ex.lambda;
            orc["max_abs_diff"] = std::abs(ex.lambda - sol.lambda);
        }
        j["oracle"] = orc;
    }
    emit(g, j);
    return 0;
}

int run_robust(const Globals& g, const StateOpts& o)
{
    check_k(o.k);
    const auto in = io::read_state(o.input);
    const auto canon = CanonicalVector::from(in.v);
    const bool real = is_real(in.v);
    const auto ks = k_support_norm(canon, o.k);
    json j;
    j["R_k"] = robustness_k(canon, o.k);
    j["k_support_norm"] = ks.value;
    j["r"] = ks.r;

    const bool need_ensemble = o.ensemble || !o.sigma.empty() || o.samples > 0 || o.cert || g.oracle;
    if (need_ensemble) {
        const auto ens = robust::build_ensemble(canon, o.k, fit_options(g, robust::default_fit()));
        if (o.ensemble) {
            j["ensemble"] = ensemble_json(ens);
        }
        if (!o.sigma.empty() || o.cert) {
            const auto tau = robust::density_matrix(ens);
            if (!o.sigma.empty()) {
                io::write_text(o.sigma, matrix_csv(to_original_basis(tau.tau.matrix(), canon), real));
            }
            if (o.cert) {
                j["certificate"] = {{"min_diag", tau.cert.min_diag},
                                    {"max_offdiag", tau.cert.max_offdiag},
                                    {"max_abs_rowsum", tau.cert.max_abs_rowsum},
                                    {"passes", tau.cert.passes()}};
            }
        }
        if (o.samples > 0) {
            Rng rng(g.seed);
            std::vector<CVec> rows;
            for (int s = 0; s < o.samples; ++s) {
                rows.push_back(restore(robust::sample_state(ens, rng), canon));
            }
            write_samples(o, rows, real);
        }
        if (g.oracle) {
            json orc;
            const RVec realized = realized_marginals(ens);
            orc["marginal_residual"] = (realized - ens.marginals).cwiseAbs().maxCoeff();
            if (ens.model && ens.model->n() <= 20) {
                const auto en = oracle::enumerate_maxent(ens.model->mu(), ens.model->ell());
                orc["enumeration_marginal_diff"] = (en.q - maxent::marginals(*ens.model)).cwiseAbs().maxCoeff();
            }
            j["oracle"] = orc;
        }
    }
    emit(g, j);
    return 0;
}

int run_entangled(const Globals& g, const StateOpts& o, int a, int b, const std::string& mode_name)
{
    check_k(o.k);
    const auto in = io::read_state(o.input);
    const int da = a > 0 ? a : in.a;
    const int db = b > 0 ? b : in.b;
    if (da <= 0 || db <= 0) {
        throw InvalidInput("entangled: give the dimensions with --a/--b or in the state file");
    }
    bipartite::Mode mode;
    if (mode_name == "trace") {
        mode = bipartite::Mode::trace;
    } else if (mode_name == "robust") {
        mode = bipartite::Mode::robust;
    } else {
        throw InvalidInput("entangled: --mode must be trace or robust");
    }
    const auto state = bipartite::schmidt(in.v, da, db);
    const auto res = bipartite::solve_entangled(state, o.k, mode, fit_options(g, {}));
    json j;
    j[mode == bipartite::Mode::trace ? "T_k" : "R_k"] = res.value;
    j["schmidt_rank"] = state.rank();
    j["schmidt"] = to_json(state.schmidt);
    j["renormalized"] = state.renormalized;
    if (o.ensemble) {
        j["ensemble"] = ensemble_json(res.ensemble);
    }
    if (!o.sigma.empty() || o.verify || o.cert) {
        RMat sigma;
        if (mode == bipartite::Mode::trace) {
            const auto sig = tracedist::density_matrix(res.ensemble);
            sigma = sig.sigma.matrix();
            if (o.verify) {
                j["verify"] = {{"sigma_trace_distance", sig.trace_distance}};
            }
        } else {
            const auto tau = robust::density_matrix(res.ensemble);
            sigma = tau.tau.matrix();
            if (o.cert) {
                j["certificate"] = {{"min_diag", tau.cert.min_diag},
                                    {"max_offdiag", tau.cert.max_offdiag},
                                    {"max_abs_rowsum", tau.cert.max_abs_rowsum},
                                    {"passes", tau.cert.passes()}};
            }
        }
        if (!o.sigma.empty()) {
            io::write_text(o.sigma, matrix_csv(bipartite::lift_density(state, sigma), false));
        }
    }
    if (o.samples > 0) {
        Rng rng(g.seed);
        std::vector<CVec> rows;
        for (int s = 0; s < o.samples; ++s) {
            rows.push_back(bipartite::sample_low_rank_state(state, res.ensemble, rng));
        }
        write_samples(o, rows, false);
    }
    emit(g, j);
    return 0;
}

int run_maxent_fit(const Globals& g, const std::string& input, const std::string& pairs)
{
    const auto text = io::read_file(input);
    auto parsed = nlohmann::json::parse(text, nullptr, false);
    if (parsed.is_discarded()) {
        throw InvalidInput("malformed JSON in " + input);
    }
    if (parsed.is_object() && parsed.contains("q")) {
        parsed = parsed["q"];
    }
    if (!parsed.is_array() || parsed.empty()) {
        throw InvalidInput("maxent-fit: expected an array of marginals (or an object with 'q')");
    }
    RVec q(static_cast<Eigen::Index>(parsed.size()));
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        if (!parsed[i].is_number()) {
            throw InvalidInput("maxent-fit: marginal " + std::to_string(i) + " is not a number");
        }
        q[static_cast<Eigen::Index>(i)] = parsed[i].get<double>();
    }
    const auto fit = maxent::fit_weights(q, fit_options(g, {}));
    json j;
    j["mu"] = to_json(fit.model.mu());
    j["ell"] = fit.model.ell();
    j["residual"] = fit.residual;
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    j["used_full_newton"] = fit.used_full_newton;
    if (!pairs.empty()) {
        std::ostringstream os;
        io::write_matrix_csv(os, maxent::pair_marginals(fit.model));
        io::write_text(pairs, os.str());
    }
    emit(g, j);
    return fit.converged ? 0 : 3;
}

int run_powerlaw(const Globals& g, const std::string& config, const std::vector<double>& gammas, int d,
                 const std::vector<int>& ks, const std::string& out)
{
    powerlaw::SweepConfig cfg = config.empty() ? powerlaw::SweepConfig{} : io::parse_sweep_config(io::read_file(config));
    if (!gammas.empty()) {
        cfg.gammas = gammas;
    }
    if (d > 0) {
        cfg.d = d;
    }
    if (!ks.empty()) {
        cfg.ks = ks;
    }
    cfg.seed = g.seed;
    const auto rows = powerlaw::powerlaw_sweep(cfg);
    std::ostringstream os;
    io::write_sweep_csv(os, rows);
    io::write_text(out, os.str());
    if (out != "-") {
        json j;
        for (const auto& [gamma, e] : powerlaw::exponents(rows)) {
            j["exponent_gamma_" + io::format_double(gamma)] = e;
        }
        j["rows"] = rows.size();
        emit(g, j);
    }
    return 0;
}

int run_mps(const Globals& g, const std::string& config, const std::string& out)
{
    mps::ExperimentConfig cfg = config.empty() ? mps::ExperimentConfig{} : io::parse_experiment_config(io::read_file(config));
    const auto rows = mps::run_experiment(cfg);
    std::ostringstream os;
    io::write_experiment_csv(os, rows);
    io::write_text(out, os.str());
    if (out != "-") {
        json j;
        j["rows"] = rows.size();
        j["out"] = out;
        emit(g, j);
    }
    return 0;
}

void print_error(const std::string& type, const std::string& message, std::optional<json> extra = std::nullopt)
{
    json err;
    err["type"] = type;
    err["message"] = message;
    if (extra) {
        for (const auto& [k, v] : extra->items()) {
            err[k] = v;
        }
    }
    std::cerr << json{{"error", err}}.dump() << "\n";
}

void add_state_flags(CLI::App* cmd, StateOpts& o, bool sampling = true)
{
    cmd->add_option("input", o.input, "state JSON file")->required();
    cmd->add_option("--k", o.k, "sparsity or Schmidt rank")->required();
    if (sampling) {
        cmd->add_flag("--ensemble", o.ensemble, "include the ensemble description");
        cmd->add_option("--samples", o.samples, "number of sampled states to write");
        cmd->add_option("--out", o.out, "where sampled states go (default stdout)");
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Optimal randomized truncation of pure states"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "RNG seed");
    app.add_option("--tol", g.tol, "max-entropy fit tolerance");
    app.add_option("--format", g.format, "summary format")->check(CLI::IsMember({"json", "csv"}));
    app.add_flag("--oracle", g.oracle, "cross-check against the reference oracles");

    StateOpts norms_o, td_o, rob_o, ent_o;
    auto* norms = app.add_subcommand("norms", "top-k fidelity, k-support norm and robustness");
    add_state_flags(norms, norms_o, false);

    auto* td = app.add_subcommand("tdist", "optimal trace-distance truncation");
    add_state_flags(td, td_o);
    td->add_option("--sigma", td_o.sigma, "write sigma as CSV");
    td->add_flag("--verify", td_o.verify, "optimality residuals");

    auto* rob = app.add_subcommand("robust", "optimal robustness truncation");
    add_state_flags(rob, rob_o);
    rob->add_option("--tau", rob_o.sigma, "write tau as CSV");
    rob->add_flag("--cert", rob_o.cert, "certificate on (1+R) tau - v v^T");

    int ent_a = 0, ent_b = 0;
    std::string ent_mode = "trace";
    auto* ent = app.add_subcommand("entangled", "Schmidt-rank truncation of a bipartite state");
    add_state_flags(ent, ent_o);
    ent->add_option("--a", ent_a, "first subsystem dimension");
    ent->add_option("--b", ent_b, "second subsystem dimension");
    ent->add_option("--mode", ent_mode, "trace or robust");
    ent->add_option("--sigma,--tau", ent_o.sigma, "write the lifted density matrix as CSV");
    ent->add_flag("--verify", ent_o.verify, "trace distance of sigma");
    ent->add_flag("--cert", ent_o.cert, "robustness certificate");

    std::string mf_input, mf_pairs;
    auto* mf = app.add_subcommand("maxent-fit", "fit max-entropy subset weights to marginals");
    mf->add_option("input", mf_input, "marginals JSON file")->required();
    mf->add_option("--pairs", mf_pairs, "write pair marginals as CSV");

    std::string pl_config, pl_out = "-";
    std::vector<double> pl_gammas;
    std::vector<int> pl_ks;
    int pl_d = 0;
    auto* pl = app.add_subcommand("powerlaw", "power-law sweep of T_k and R_k against epsilon");
    pl->add_option("--config", pl_config, "sweep config JSON");
    pl->add_option("--gammas", pl_gammas, "power-law exponents");
    pl->add_option("--d", pl_d, "dimension");
    pl->add_option("--ks", pl_ks, "k values (default depends on gamma)");
    pl->add_option("--out", pl_out, "CSV output (default stdout)");

    std::string mps_config, mps_out = "-";
    auto* mp = app.add_subcommand("mps", "randomized bond truncation experiment");
    mp->add_option("--config", mps_config, "experiment config JSON");
    mp->add_option("--out", mps_out, "CSV output (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return 2;
    }

    try {
        if (*norms) {
            return run_norms(g, norms_o);
        }
        if (*td) {
            return run_tdist(g, td_o);
        }
        if (*rob) {
            return run_robust(g, rob_o);
        }
        if (*ent) {
            return run_entangled(g, ent_o, ent_a, ent_b, ent_mode);
        }
        if (*mf) {
            return run_maxent_fit(g, mf_input, mf_pairs);
        }
        if (*pl) {
            return run_powerlaw(g, pl_config, pl_gammas, pl_d, pl_ks, pl_out);
        }
        if (*mp) {
            return run_mps(g, mps_config, mps_out);
        }
    } catch (const NonConvergence& e) {
        print_error("non_convergence", e.what(), json{{"iterations", e.iterations()}, {"residual", e.residual()}});
        return 1;
    } catch (const InvalidInput& e) {
        print_error("invalid_input", e.what());
        return 1;
    } catch (const NumericalError& e) {
        print_error("numerical_error", e.what());
        return 1;
    } catch (const InternalConsistencyError& e) {
        print_error("internal_consistency", e.what());
        return 1;
    } catch (const Error& e) {
        print_error("error", e.what());
        return 1;
    }
    return 0;
}
