#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "wkbp/tape.hpp"

namespace wkbp {

// Vector field built from tape ops: given the current state node id,
// append the ops computing dz/dt and return the resulting node id.
using TapeRhs = std::function<int(Tape&, int)>;

// Classic fixed-step RK4 over [t0, t1], unrolled onto the tape so that
// backward() differentiates through every stage. The field is autonomous.
// Throws NonFiniteError naming the failing step if the state diverges.
inline int rk4_integrate(Tape& tape, const TapeRhs& rhs, int z0, int n_steps, double t0 = 0.0,
                         double t1 = 1.0) {
    if (n_steps < 1) throw std::invalid_argument("rk4_integrate: n_steps must be >= 1");
    const double h = (t1 - t0) / n_steps;
    int z = z0;
    for (int step = 0; step < n_steps; ++step) {
        int k1 = rhs(tape, z);
        int k2 = rhs(tape, tape.add(z, tape.scale(k1, h / 2)));
        int k3 = rhs(tape, tape.add(z, tape.scale(k2, h / 2)));
        int k4 = rhs(tape, tape.add(z, tape.scale(k3, h)));
        int incr = tape.add(tape.add(tape.scale(k1, h / 6), tape.scale(k2, h / 3)),
                            tape.add(tape.scale(k3, h / 3), tape.scale(k4, h / 6)));
        z = tape.add(z, incr);
        if (!tape.value(z).all_finite())
            throw NonFiniteError("rk4_integrate: non-finite state after step " +
                                 std::to_string(step));
    }
    return z;
}

// The same integrator in non-differentiable mode, for plain scalar ODEs
// with a time-dependent right-hand side (the pressure simulator).
template <class F>
double rk4_step_scalar(F&& f, double y, double t, double h) {
    double k1 = f(y, t);
    double k2 = f(y + 0.5 * h * k1, t + 0.5 * h);
    double k3 = f(y + 0.5 * h * k2, t + 0.5 * h);
    double k4 = f(y + h * k3, t + h);
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

} // namespace wkbp
