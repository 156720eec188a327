#include "rowsim/mpc.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rowsim {
namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Problem {
    const ReferenceTrajectory& ref;
    const ControllerConfig& cfg;
    Vec lo;
    Vec hi;

    Problem(const ReferenceTrajectory& r, const ControllerConfig& c) : ref(r), cfg(c) {
        const int n = 2 * c.horizon_steps;
        lo.resize(n);
        hi.resize(n);
        for (int k = 0; k < c.horizon_steps; ++k) {
            lo[2 * k] = c.v_min;
            hi[2 * k] = c.v_max;
            lo[2 * k + 1] = -c.omega_max;
            hi[2 * k + 1] = c.omega_max;
        }
    }

    Vec project(const Vec& z) const { return z.cwiseMax(lo).cwiseMin(hi); }

    double y_weight(int k) const {
        return cfg.q_y + (k == cfg.horizon_steps ? cfg.q_y_terminal : 0.0);
    }
    double theta_weight(int k) const {
        return cfg.q_theta + (k == cfg.horizon_steps ? cfg.q_theta_terminal : 0.0);
    }

    /// Residual vector r with J = r.r; the Jacobian is filled when requested.
    /// Rows: [y_1..y_N, theta_1..theta_N, v_0..v_{N-1}, omega_0..omega_{N-1}].
    double residuals(const Vec& z, Vec& r, Mat* jac) const {
        const int n = cfg.horizon_steps;
        const double dt = cfg.dt;
        std::vector<double> theta(static_cast<std::size_t>(n) + 1);
        std::vector<double> y(static_cast<std::size_t>(n) + 1);
        theta[0] = ref.start.theta;
        y[0] = ref.start.y;
        for (int k = 0; k < n; ++k) {
            // Same update as unicycle_step; the angle is left unwrapped so the
            // cost stays smooth in the controls.
            y[k + 1] = y[k] + z[2 * k] * std::sin(theta[k]) * dt;
            theta[k + 1] = theta[k] + z[2 * k + 1] * dt;
        }
        r.resize(4 * n);
        for (int k = 1; k <= n; ++k) {
            const auto& wp = ref.waypoints[static_cast<std::size_t>(k - 1)];
            r[k - 1] = std::sqrt(y_weight(k)) * (y[k] - wp.y);
            r[n + k - 1] = std::sqrt(theta_weight(k)) * (theta[k] - wp.theta);
        }
        for (int k = 0; k < n; ++k) {
            r[2 * n + k] = std::sqrt(cfg.r_v) * (z[2 * k] - cfg.v_ref);
            r[3 * n + k] = std::sqrt(cfg.r_omega) * z[2 * k + 1];
        }
        if (jac != nullptr) {
            Mat& J = *jac;
            J.setZero(4 * n, 2 * n);
            for (int k = 1; k <= n; ++k) {
                const double wy = std::sqrt(y_weight(k));
                const double wt = std::sqrt(theta_weight(k));
                // d y_k / d omega_j = sum_{m=j+1}^{k-1} v_m cos(theta_m) dt^2
                double tail = 0.0;
                for (int j = k - 1; j >= 0; --j) {
                    J(k - 1, 2 * j) = wy * std::sin(theta[static_cast<std::size_t>(j)]) * dt;
                    J(k - 1, 2 * j + 1) = wy * tail;
                    J(n + k - 1, 2 * j + 1) = wt * dt;
                    tail += z[2 * j] * std::cos(theta[static_cast<std::size_t>(j)]) * dt * dt;
                }
            }
            for (int k = 0; k < n; ++k) {
                J(2 * n + k, 2 * k) = std::sqrt(cfg.r_v);
                J(3 * n + k, 2 * k + 1) = std::sqrt(cfg.r_omega);
            }
        }
        return r.squaredNorm();
    }

    double cost(const Vec& z) const {
        Vec r;
        return residuals(z, r, nullptr);
    }
};

Vec pack(std::span<const ControlCommand> controls) {
    Vec z(2 * static_cast<Eigen::Index>(controls.size()));
    for (std::size_t k = 0; k < controls.size(); ++k) {
        z[2 * static_cast<Eigen::Index>(k)] = controls[k].v;
        z[2 * static_cast<Eigen::Index>(k) + 1] = controls[k].omega;
    }
    return z;
}

std::vector<ControlCommand> unpack(const Vec& z) {
    std::vector<ControlCommand> out(static_cast<std::size_t>(z.size() / 2));
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = ControlCommand{z[2 * static_cast<Eigen::Index>(k)],
                                z[2 * static_cast<Eigen::Index>(k) + 1]};
    }
    return out;
}

}  // namespace

void ControllerConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(what);
    };
    require(horizon_steps >= 1, "controller.horizon_steps must be >= 1");
    require(dt > 0.0, "controller.dt must be > 0");
    require(v_min <= v_ref && v_ref <= v_max, "controller: need v_min <= v_ref <= v_max");
    require(q_y > 0.0 && q_theta > 0.0, "controller: q_y and q_theta must be > 0");
    require(r_v >= 0.0 && r_omega >= 0.0 && q_y_terminal >= 0.0 && q_theta_terminal >= 0.0,
            "controller: weights must be >= 0");
    require(omega_max > 0.0, "controller.omega_max must be > 0");
    require(max_iters >= 1, "controller.max_iters must be >= 1");
    require(tolerance > 0.0, "controller.tolerance must be > 0");
}

ControllerConfig ControllerConfig::reversed(double speed) const {
    ControllerConfig c = *this;
    c.v_ref = -speed;
    c.v_min = -v_max;
    c.v_max = 0.0;
    return c;
}

std::optional<ReferenceTrajectory> make_reference(const NavEstimate& nav,
                                                  const ControllerConfig& cfg) {
    if (!nav.valid) {
        return std::nullopt;
    }
    ReferenceTrajectory ref;
    ref.start = Pose2D{0.0, nav.lateral, nav.heading};
    ref.waypoints.reserve(static_cast<std::size_t>(cfg.horizon_steps));
    for (int k = 1; k <= cfg.horizon_steps; ++k) {
        ref.waypoints.push_back(Waypoint{cfg.v_ref * cfg.dt * k, 0.0, 0.0});
    }
    return ref;
}

std::vector<Pose2D> rollout(const Pose2D& start, std::span<const ControlCommand> controls,
                            double dt) {
    std::vector<Pose2D> states;
    states.reserve(controls.size());
    Pose2D p = start;
    for (const auto& u : controls) {
        p = unicycle_step(p, u.v, u.omega, dt);
        states.push_back(p);
    }
    return states;
}

double trajectory_cost(const ReferenceTrajectory& ref, std::span<const ControlCommand> controls,
                       const ControllerConfig& cfg) {
    const auto states = rollout(ref.start, controls, cfg.dt);
    const std::size_t n = states.size();
    double j = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& wp = ref.waypoints[k];
        const double ey = states[k].y - wp.y;
        const double et = normalize_angle(states[k].theta - wp.theta);
        const double dv = controls[k].v - cfg.v_ref;
        j += cfg.q_y * ey * ey + cfg.q_theta * et * et + cfg.r_v * dv * dv +
             cfg.r_omega * controls[k].omega * controls[k].omega;
        if (k + 1 == n) {
            j += cfg.q_y_terminal * ey * ey + cfg.q_theta_terminal * et * et;
        }
    }
    return j;
}

MpcSolution solve(const NavEstimate& nav, const ControllerConfig& cfg,
                  std::span<const ControlCommand> warm) {
    if (!nav.valid) {
        throw std::invalid_argument("mpc solve: navigation estimate is not valid");
    }
    if (!std::isfinite(nav.heading) || !std::isfinite(nav.lateral)) {
        throw std::invalid_argument("mpc solve: non-finite navigation estimate");
    }
    const auto ref = make_reference(nav, cfg);
    const Problem problem(*ref, cfg);
    const int n = 2 * cfg.horizon_steps;

    Vec z(n);
    for (int k = 0; k < cfg.horizon_steps; ++k) {
        z[2 * k] = cfg.v_ref;
        z[2 * k + 1] = 0.0;
    }
    MpcSolution sol;
    sol.diagnostics.baseline_cost = problem.cost(z);
    double j = sol.diagnostics.baseline_cost;

    if (warm.size() == static_cast<std::size_t>(cfg.horizon_steps)) {
        Vec w = pack(warm);
        if (w.allFinite()) {
            w = problem.project(w);
            const double jw = problem.cost(w);
            if (jw < j) {
                z = w;
                j = jw;
                sol.diagnostics.used_warm_start = true;
            }
        }
    }

    Vec r;
    Mat jac;
    const double armijo = 1e-4;
    int iter = 0;
    for (; iter < cfg.max_iters; ++iter) {
        problem.residuals(z, r, &jac);
        const Vec grad = 2.0 * jac.transpose() * r;
        const double stationarity = (z - problem.project(z - grad)).lpNorm<Eigen::Infinity>();
        if (stationarity <= cfg.tolerance) {
            sol.diagnostics.converged = true;
            break;
        }

        // Variables pinned at a bound with the gradient pushing outward stay fixed.
        std::vector<int> free;
        free.reserve(static_cast<std::size_t>(n));
        const double eps = 1e-10;
        for (int i = 0; i < n; ++i) {
            const bool at_lo = z[i] <= problem.lo[i] + eps && grad[i] > 0.0;
            const bool at_hi = z[i] >= problem.hi[i] - eps && grad[i] < 0.0;
            if (!at_lo && !at_hi) free.push_back(i);
        }
        Vec dir = Vec::Zero(n);
        if (!free.empty()) {
            const auto nf = static_cast<Eigen::Index>(free.size());
            Mat h(nf, nf);
            Vec g(nf);
            for (Eigen::Index a = 0; a < nf; ++a) {
                g[a] = grad[free[static_cast<std::size_t>(a)]];
                for (Eigen::Index b = 0; b < nf; ++b) {
                    h(a, b) = 2.0 * jac.col(free[static_cast<std::size_t>(a)])
                                        .dot(jac.col(free[static_cast<std::size_t>(b)]));
                }
            }
            h.diagonal().array() += 1e-9;
            const Vec step = h.ldlt().solve(-g);
            for (Eigen::Index a = 0; a < nf; ++a) dir[free[static_cast<std::size_t>(a)]] = step[a];
        }

        bool accepted = false;
        for (const Vec& d : {dir, Vec(-grad)}) {
            double alpha = 1.0;
            for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
                const Vec cand = problem.project(z + alpha * d);
                const double jc = problem.cost(cand);
                if (jc <= j + armijo * grad.dot(cand - z) && jc <= j) {
                    accepted = jc < j || (cand - z).lpNorm<Eigen::Infinity>() == 0.0;
                    if (accepted) {
                        z = cand;
                        j = jc;
                    }
                    break;
                }
            }
            if (accepted) break;
        }
        if (!accepted) {
            sol.diagnostics.converged = true;
            break;
        }
    }

    sol.sequence = unpack(z);
    sol.command = sol.sequence.front();
    sol.diagnostics.iterations = iter;
    sol.diagnostics.cost = trajectory_cost(*ref, sol.sequence, cfg);
    sol.diagnostics.baseline_cost = trajectory_cost(
        *ref, std::vector<ControlCommand>(static_cast<std::size_t>(cfg.horizon_steps),
                                          ControlCommand{cfg.v_ref, 0.0}),
        cfg);
    return sol;
}

MpcController::MpcController(ControllerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

MpcSolution MpcController::step(const NavEstimate& nav) {
    std::vector<ControlCommand> warm;
    if (!previous_.empty()) {
        warm.assign(previous_.begin() + 1, previous_.end());
        warm.push_back(previous_.back());
    }
    MpcSolution sol = solve(nav, cfg_, warm);
    previous_ = sol.sequence;
    return sol;
}

}  // namespace rowsim
