#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <Eigen/Core>

#include "dgiga/runner.hpp"

namespace fs = std::filesystem;
using namespace dgiga;

namespace {

int log_level() {
    const char* env = std::getenv("DGIGA_LOG");
    if (!env) return 1;
    const std::string v(env);
    if (v == "quiet" || v == "0") return 0;
    if (v == "debug" || v == "2") return 2;
    return 1;
}

ExperimentConfig load_config(const std::string& path, int degree_override) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    ExperimentConfig cfg = ExperimentConfig::parse(ss.str());
    if (degree_override > 0) cfg = cfg.with_degree(degree_override);
    return cfg;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

std::string format_linecut(const std::vector<std::pair<double, double>>& cut,
                           const std::string& name) {
    std::ostringstream os;
    os.precision(17);
    os << "# dgiga-csv v1\n";
    os << "t," << name << "\n";
    for (const auto& [t, v] : cut) os << t << "," << v << "\n";
    return os.str();
}

int cmd_solve(const ExperimentConfig& cfg, const fs::path& out, int level, bool deterministic,
              bool dump_matrices) {
    SolveReport rep = run_solve(cfg, level);
    std::ostringstream sum;
    sum.precision(17);
    sum << "level=" << rep.level << "\n"
        << "dof=" << rep.dof << "\n"
        << "h_max=" << rep.h_max << "\n"
        << "h_min=" << rep.h_min << "\n";
    for (long j = 0; j < rep.eigen.eigenvalues.size(); ++j)
        sum << "lambda_" << (j + 1) << "=" << rep.eigen.eigenvalues[j] << "\n";
    sum << "wall_ms=" << (deterministic ? 0.0 : rep.wall_ms) << "\n";
    write_file(out / "summary.txt", sum.str());

    std::ostringstream csv;
    csv.precision(17);
    csv << "# dgiga-csv v1\nk,lambda,residual\n";
    for (long j = 0; j < rep.eigen.eigenvalues.size(); ++j)
        csv << (j + 1) << "," << rep.eigen.eigenvalues[j] << "," << rep.eigen.residuals[j] << "\n";
    write_file(out / "eigenvalues.csv", csv.str());

    // line cut of the ground state
    Problem prob = build_problem(cfg, level);
    MultiPatchField u1(prob.mesh, *prob.dofs, rep.eigen.vectors.col(0));
    write_file(out / "linecut_u1.csv",
               format_linecut(line_cut(prob.mesh, u1, cfg.linecut_axis, cfg.linecut_lo,
                                       cfg.linecut_hi),
                              "u1"));

    if (dump_matrices) {
        auto A = assemble_bilinear(prob.mesh, *prob.dofs, prob.v_ext, prob.assembly);
        auto M = assemble_mass(prob.mesh, *prob.dofs, prob.assembly);
        std::ofstream fa(out / "A.txt");
        A.dump(fa);
        std::ofstream fm(out / "M.txt");
        M.dump(fm);
    }

    if (log_level() > 0) {
        std::cout << "solve: dof=" << rep.dof << " h_max=" << rep.h_max << "\n";
        std::cout.precision(12);
        for (long j = 0; j < rep.eigen.eigenvalues.size(); ++j)
            std::cout << "  lambda_" << (j + 1) << " = " << rep.eigen.eigenvalues[j] << "\n";
    }
    return 0;
}

int cmd_converge(const ExperimentConfig& cfg, const fs::path& out, bool deterministic) {
    ConvergenceRecord rec = run_converge(cfg);
    std::ostringstream csv;
    rec.write_csv(csv, deterministic);
    write_file(out / "convergence.csv", csv.str());
    if (log_level() > 0) {
        std::cout << "level  h_max        dof     lambda_err_1   eoc\n";
        std::cout.precision(6);
        for (std::size_t l = 0; l < rec.levels.size(); ++l) {
            const auto& lr = rec.levels[l];
            std::cout << lr.level << "      " << lr.h_max << "   " << lr.dof << "   "
                      << lr.lambda_err[0];
            if (l > 0 && lr.lambda_err[0] > 0 && rec.levels[l - 1].lambda_err[0] > 0)
                std::cout << "   "
                          << std::log(rec.levels[l - 1].lambda_err[0] / lr.lambda_err[0]) /
                                 std::log(rec.levels[l - 1].h_max / lr.h_max);
            std::cout << "\n";
        }
    }
    return 0;
}

int cmd_scf(const ExperimentConfig& cfg, const fs::path& out, int level, bool deterministic) {
    std::ofstream log_file(out / "scf_log.txt");
    SCFReport rep = run_scf(cfg, level, &log_file);
    const auto& st = rep.state;
    if (!st.converged) {
        std::cerr << "scf did not converge in " << st.iteration << " iterations; last deltas:";
        const std::size_t n = st.delta_history.size();
        for (std::size_t i = n >= 5 ? n - 5 : 0; i < n; ++i) std::cerr << " " << st.delta_history[i];
        std::cerr << "\n";
        return 1;
    }
    std::ostringstream sum;
    sum.precision(17);
    sum << "level=" << rep.level << "\ndof=" << rep.dof << "\nh_max=" << rep.h_max
        << "\nh_min=" << rep.h_min << "\niterations=" << st.iteration
        << "\nlambda_1=" << st.eigen.eigenvalues[0] << "\nenergy=" << st.energy
        << "\ndelta=" << st.delta << "\nwall_ms=" << (deterministic ? 0.0 : rep.wall_ms) << "\n";
    write_file(out / "summary.txt", sum.str());

    Problem prob = build_problem(cfg, level);
    write_file(out / "density_linecut.csv",
               format_linecut(line_cut(prob.mesh, st.density.field, cfg.linecut_axis,
                                       cfg.linecut_lo, cfg.linecut_hi),
                              "rho"));
    if (log_level() > 0)
        std::cout << "scf: converged in " << st.iteration << " iterations, lambda_1 = "
                  << st.eigen.eigenvalues[0] << ", energy = " << st.energy << "\n";
    return 0;
}

int cmd_oracle(const ExperimentConfig& cfg, const fs::path& out, long max_dof) {
    OracleReport rep = run_oracle(cfg, max_dof);
    std::ostringstream os;
    os.precision(17);
    os << "dof=" << rep.dof << "\n"
       << "max_relative_gap=" << rep.max_relative_gap << "\n"
       << "max_cluster_angle=" << rep.max_cluster_angle << "\n";
    for (std::size_t j = 0; j < rep.sparse_lambdas.size(); ++j)
        os << "lambda_" << (j + 1) << " sparse=" << rep.sparse_lambdas[j]
           << " dense=" << rep.dense_lambdas[j] << "\n";
    write_file(out / "oracle.txt", os.str());
    if (log_level() > 0)
        std::cout << "oracle: dof=" << rep.dof << " max_relative_gap=" << rep.max_relative_gap
                  << " max_cluster_angle=" << rep.max_cluster_angle << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-patch interior-penalty isogeometric eigenvalue solver"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    int threads = 0, level = 0, degree = 0;
    long max_dof = 1500;
    bool deterministic = false, dump_matrices = false;

    app.add_option("--threads", threads, "cap on internal parallelism (default: hardware)");

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment configuration file")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--degree", degree, "override every patch degree");
        sub->add_flag("--deterministic", deterministic, "zero wall times in outputs");
    };
    CLI::App* solve = app.add_subcommand("solve", "one level: eigenvalues and line cuts");
    add_common(solve);
    solve->add_option("--level", level, "refinement level (default 0)");
    solve->add_flag("--dump-matrices", dump_matrices, "write A and M in triplet form");

    CLI::App* converge = app.add_subcommand("converge", "refinement sweep with EOC table");
    add_common(converge);

    CLI::App* scf = app.add_subcommand("scf", "self-consistent field run");
    add_common(scf);
    scf->add_option("--level", level, "refinement level (default 0)");

    CLI::App* oracle = app.add_subcommand("oracle", "sparse vs dense eigensolver comparison");
    add_common(oracle);
    oracle->add_option("--max-dof", max_dof, "dense-path dimension cap");

    CLI11_PARSE(app, argc, argv);

    if (threads > 0) Eigen::setNbThreads(threads);

    try {
        const ExperimentConfig cfg = load_config(config_path, degree);
        fs::create_directories(out_dir);
        const fs::path out(out_dir);
        if (app.got_subcommand(solve)) return cmd_solve(cfg, out, level, deterministic, dump_matrices);
        if (app.got_subcommand(converge)) return cmd_converge(cfg, out, deterministic);
        if (app.got_subcommand(scf)) return cmd_scf(cfg, out, level, deterministic);
        if (app.got_subcommand(oracle)) return cmd_oracle(cfg, out, max_dof);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
