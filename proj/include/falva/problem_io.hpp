#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "falva/control.hpp"
#include "falva/solvers.hpp"
#include "falva/variational.hpp"

#include <json.hpp>

namespace falva {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parsed problem file: flat "key = value" lines, '#' comments, matrix rows
/// separated by ';'. All solver keys have explicit defaults; the echoed
/// configuration records every resolved value.
struct ProblemFile {
    std::string kind = "variational";  // "variational" | "control"
    double alpha = 1.0;
    double a = 0.0;
    double t = 1.0;
    int m = 1;
    int state_dim = 1;
    int control_dim = 0;
    std::string lagrangian;
    std::vector<std::string> velocity;           // control only
    Eigen::MatrixXd initial;                     // variational: m rows; control: 1 x n
    Eigen::MatrixXd initial_jet;                 // variational InitialJet: m rows
    std::string boundary_mode = "fixed_ends";    // "fixed_ends" | "initial_jet"
    double theta_f = std::numeric_limits<double>::quiet_NaN();
    Eigen::MatrixXd final_values;                // fixed_ends rows / control target
    std::string method = "indirect";             // "indirect" | "direct"
    int degree = 32;
    int quad_points = 64;
    double newton_tol = 1e-10;
    int max_iters = 50;
    double epsilon_rel = 1e-3;
    int grid = 201;
};

ProblemFile load_problem(const std::string& path);
ProblemFile parse_problem(const std::string& text);

FalvaProblem to_variational(const ProblemFile& pf);
ControlProblem to_control(const ProblemFile& pf);
SolveConfig to_solve_config(const ProblemFile& pf);

/// Fully-resolved configuration echo (defaults included) for reproducibility.
nlohmann::json config_echo(const ProblemFile& pf);

nlohmann::json report_to_json(const ResidualReport& report);

/// CSV with header "theta,q0,...,q0d1,..." on a uniform grid of
/// `points` values over [a, theta_hi]; derivative blocks up to order K.
void write_trajectory_csv(const std::string& path, const Trajectory& tr, int K, int points,
                          double theta_hi);

struct TrajectorySamples {
    Eigen::VectorXd thetas;
    Eigen::MatrixXd values;  // rows x state_dim, order-0 columns only
};

/// Reads theta plus the q<i> (order-0) columns back from a trajectory CSV.
TrajectorySamples read_trajectory_csv(const std::string& path, int state_dim);

/// CSV with columns theta, q..., u..., p..., H, dH1 (the theta-partial of H).
void write_extremal_csv(const std::string& path, const ControlProblem& cp, const Extremal& ex,
                        int points, double theta_hi);

}  // namespace falva
